//! Scalar special functions and truncated-normal sampling shared across modules.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use statrs::function::erf::erfc;

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Standard normal CDF, accurate in both tails.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Draws from N(mu, sd²) restricted to [lo, hi].
///
/// Inverse-CDF sampling in the bulk; one-sided exponential rejection
/// (Robert, 1995) when the interval lies entirely in a far tail.
pub fn sample_truncated_normal<R: Rng + ?Sized>(
    rng: &mut R,
    mu: f64,
    sd: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    debug_assert!(lo < hi && sd > 0.0);
    let a = (lo - mu) / sd;
    let b = (hi - mu) / sd;
    let z = if a > 4.0 {
        tail_sample(rng, a, b)
    } else if b < -4.0 {
        -tail_sample(rng, -b, -a)
    } else {
        let (pa, pb) = (std_normal_cdf(a), std_normal_cdf(b));
        if pb - pa > 1e-3 {
            let u: f64 = rng.random();
            let p = pa + u * (pb - pa);
            inverse_std_normal_cdf(p).clamp(a, b)
        } else {
            // narrow interval: plain rejection from a uniform envelope
            let peak = if a > 0.0 {
                std_normal_pdf(a)
            } else if b < 0.0 {
                std_normal_pdf(b)
            } else {
                std_normal_pdf(0.0)
            };
            loop {
                let x = a + (b - a) * rng.random::<f64>();
                if rng.random::<f64>() * peak <= std_normal_pdf(x) {
                    break x;
                }
            }
        }
    };
    mu + sd * z
}

fn tail_sample<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let e: f64 = Exp1.sample(rng);
        let z = a + e / rate;
        if z > b {
            continue;
        }
        let u: f64 = rng.random();
        if u.ln() <= -0.5 * (z - rate) * (z - rate) {
            break z;
        }
    }
}

/// Inverse of [`std_normal_cdf`] (Acklam's rational approximation refined by
/// one Halley step).
pub fn inverse_std_normal_cdf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let p_low = 0.02425;
    let x = if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = std_normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// One standard normal draw.
pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `ln(Σ exp(x_i))` without overflow; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// FNV-1a over the bit patterns of a parameter vector.
pub fn hash_params(theta: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in theta {
        for byte in x.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}
