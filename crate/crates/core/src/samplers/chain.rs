use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveStats {
    pub proposed: u64,
    pub accepted: u64,
}

/// Kept iterations of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    seed: u64,
    iterations: Vec<u64>,
    samples: Vec<Vec<f64>>,
    log_posts: Vec<f64>,
    moves: BTreeMap<String, MoveStats>,
    scales: Vec<f64>,
}

impl Chain {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            iterations: Vec::new(),
            samples: Vec::new(),
            log_posts: Vec::new(),
            moves: BTreeMap::new(),
            scales: Vec::new(),
        }
    }

    pub fn push(&mut self, iteration: u64, x: &[f64], log_post: f64) {
        debug_assert!(log_post.is_finite());
        self.iterations.push(iteration);
        self.samples.push(x.to_vec());
        self.log_posts.push(log_post);
    }

    pub fn record_move(&mut self, kind: &str, accepted: bool) {
        let s = self.moves.entry(kind.to_string()).or_default();
        s.proposed += 1;
        s.accepted += u64::from(accepted);
    }

    pub(crate) fn set_scales(&mut self, scales: Vec<f64>) {
        self.scales = scales;
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn log_posts(&self) -> &[f64] {
        &self.log_posts
    }

    pub fn iterations(&self) -> &[u64] {
        &self.iterations
    }

    pub fn moves(&self) -> &BTreeMap<String, MoveStats> {
        &self.moves
    }

    /// Random-walk scales in force after burn-in.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn acceptance_rate(&self, kind: &str) -> Option<f64> {
        self.moves
            .get(kind)
            .filter(|s| s.proposed > 0)
            .map(|s| s.accepted as f64 / s.proposed as f64)
    }

    /// Dimension label of each kept state.
    pub fn dims(&self) -> Vec<usize> {
        self.samples.iter().map(Vec::len).collect()
    }

    pub fn max_dim(&self) -> usize {
        self.samples.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Coordinate `i` over the kept states where it exists.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.samples.iter().filter_map(|s| s.get(i).copied()).collect()
    }

    /// Coordinate `i` treated as 0 when the state has fewer terms, which is the
    /// value of an absent series coefficient.
    pub fn coordinate_or_zero(&self, i: usize) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| s.get(i).copied().unwrap_or(0.0))
            .collect()
    }

    /// Empirical pmf of the dimension label on `0..=k_max`.
    pub fn dim_pmf(&self, k_max: usize) -> Vec<f64> {
        let mut counts = vec![0.0; k_max + 1];
        for s in &self.samples {
            if s.len() <= k_max {
                counts[s.len()] += 1.0;
            }
        }
        let n = self.samples.len().max(1) as f64;
        counts.iter().map(|c| c / n).collect()
    }

    /// Tab-separated columns `iteration, dim, c0 … c{width−1}, log_post`,
    /// with absent coefficients written as `nan`.
    pub fn to_tsv(&self, width: usize) -> String {
        let mut out = String::from("iteration\tdim");
        for i in 0..width {
            let _ = write!(out, "\tc{i}");
        }
        out.push_str("\tlog_post\n");
        for ((it, s), lp) in self.iterations.iter().zip(&self.samples).zip(&self.log_posts) {
            let _ = write!(out, "{it}\t{}", s.len());
            for i in 0..width {
                match s.get(i) {
                    Some(v) => {
                        let _ = write!(out, "\t{v}");
                    }
                    None => out.push_str("\tnan"),
                }
            }
            let _ = writeln!(out, "\t{lp}");
        }
        out
    }

    pub fn write_tsv(&self, path: &Path, width: usize) -> Result<()> {
        std::fs::write(path, self.to_tsv(width))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padded_columns() {
        let mut c = Chain::new(0);
        c.push(0, &[1.0], -1.0);
        c.push(1, &[1.0, 2.5, -3.0], -2.0);
        let tsv = c.to_tsv(3);
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[0], "iteration\tdim\tc0\tc1\tc2\tlog_post");
        assert_eq!(lines[1], "0\t1\t1\tnan\tnan\t-1");
        assert_eq!(lines[2], "1\t3\t1\t2.5\t-3\t-2");
        assert_eq!(c.dim_pmf(3), vec![0.0, 0.5, 0.0, 0.5]);
        assert_eq!(c.coordinate(1), vec![2.5]);
        assert_eq!(c.coordinate_or_zero(1), vec![0.0, 2.5]);
    }
}
