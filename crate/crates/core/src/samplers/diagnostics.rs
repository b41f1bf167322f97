use crate::error::{contract, Error, Result};

const MIN_LEN: usize = 100;

/// Integrated autocorrelation time by Geyer's initial monotone positive
/// sequence, floored at `1/log10(n)` so that the ESS never exceeds
/// `n·log10(n)`.
pub fn iat(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < MIN_LEN {
        return Err(contract(format!("need at least {MIN_LEN} values, got {n}")));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(contract("series contains non-finite values"));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let acov = |lag: usize| -> f64 {
        dev[..n - lag]
            .iter()
            .zip(&dev[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let c0 = acov(0);
    if !(c0 > 0.0) {
        return Err(Error::Degenerate("constant series has no autocorrelation time".into()));
    }
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut m = 0;
    while 2 * m + 1 < n {
        let gamma = (acov(2 * m) + acov(2 * m + 1)) / c0;
        if gamma <= 0.0 {
            break;
        }
        let gamma = gamma.min(prev);
        sum += gamma;
        prev = gamma;
        m += 1;
    }
    let tau = -1.0 + 2.0 * sum;
    Ok(tau.max(1.0 / (n as f64).log10()))
}

pub fn ess(series: &[f64]) -> Result<f64> {
    Ok(series.len() as f64 / iat(series)?)
}

/// `½ Σ |p̂_a − p̂_b|` over `bins` equal-width bins spanning both samples.
pub fn hist_tv(a: &[f64], b: &[f64], bins: usize) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(contract("hist_tv needs two non-empty samples"));
    }
    if bins == 0 {
        return Err(contract("hist_tv needs at least one bin"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(contract("hist_tv samples must be finite"));
    }
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Ok(0.0);
    }
    let hist = |s: &[f64]| -> Vec<f64> {
        let mut h = vec![0.0; bins];
        for &v in s {
            let k = (((v - lo) / (hi - lo)) * bins as f64) as usize;
            h[k.min(bins - 1)] += 1.0;
        }
        let n = s.len() as f64;
        h.iter_mut().for_each(|c| *c /= n);
        h
    };
    let (ha, hb) = (hist(a), hist(b));
    Ok(0.5 * ha.iter().zip(&hb).map(|(p, q)| (p - q).abs()).sum::<f64>())
}
