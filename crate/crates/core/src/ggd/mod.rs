//! Generalized Gamma distribution (GΓD) with power `nu`, shape `kappa` and
//! scale `sigma`:
//!
//! ```text
//! p(x) = |ν| κ^κ / (σ Γ(κ)) · (x/σ)^(κν-1) · exp(-κ (x/σ)^ν),   x > 0
//! ```
//!
//! `Y = κ (X/σ)^ν` is Gamma(κ, 1), which drives the tail, quantile and
//! sampling routines. Parameters are estimated by the method of log-cumulants
//! (MoLC), optionally corrected for an upper-percentile truncation of the sample.

pub mod special;

mod quad;

use crate::error::{invalid, Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use special::{digamma, gamma_p_inv, gamma_pq, gamma_q_inv, ln_gamma, tetragamma, trigamma};

/// Lower and upper bracket for the MoLC shape search.
pub const KAPPA_RANGE: (f64, f64) = (1e-3, 1e4);

const SAMPLE_CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GGammaParams {
    pub nu: f64,
    pub kappa: f64,
    pub sigma: f64,
}

impl GGammaParams {
    pub fn new(nu: f64, kappa: f64, sigma: f64) -> Result<Self> {
        let p = GGammaParams { nu, kappa, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.nu.is_finite()
            && self.nu != 0.0
            && self.kappa.is_finite()
            && self.kappa > 0.0
            && self.sigma.is_finite()
            && self.sigma > 0.0;
        if ok {
            Ok(())
        } else {
            invalid(format!("bad GGD parameters {self:?}"))
        }
    }

    fn y(&self, x: f64) -> f64 {
        self.kappa * (x / self.sigma).powf(self.nu)
    }
}

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        invalid(format!("GGD support is x > 0, got {x}"))
    }
}

pub fn ggd_pdf(x: f64, p: &GGammaParams) -> Result<f64> {
    p.validate()?;
    check_x(x)?;
    let k = p.kappa;
    let r = x / p.sigma;
    let ln = p.nu.abs().ln() + k * k.ln() - p.sigma.ln() - ln_gamma(k) + (k * p.nu - 1.0) * r.ln()
        - k * r.powf(p.nu);
    Ok(ln.exp())
}

/// `(P(X <= x), P(X > x))`.
pub fn ggd_cdf_pair(x: f64, p: &GGammaParams) -> Result<(f64, f64)> {
    p.validate()?;
    check_x(x)?;
    let (lo, hi) = gamma_pq(p.kappa, p.y(x))?;
    Ok(if p.nu > 0.0 { (lo, hi) } else { (hi, lo) })
}

pub fn ggd_cdf(x: f64, p: &GGammaParams) -> Result<f64> {
    ggd_cdf_pair(x, p).map(|v| v.0)
}

/// Exceedance probability P(X > x).
pub fn ggd_tail(x: f64, p: &GGammaParams) -> Result<f64> {
    ggd_cdf_pair(x, p).map(|v| v.1)
}

/// Threshold `m` with `P(X > m) = pfa`.
pub fn cfar_threshold(p: &GGammaParams, pfa: f64) -> Result<f64> {
    p.validate()?;
    if !(pfa > 0.0 && pfa < 1.0) {
        return invalid(format!("pfa must lie in (0,1), got {pfa}"));
    }
    let y = if p.nu > 0.0 {
        gamma_q_inv(p.kappa, pfa)?
    } else {
        gamma_p_inv(p.kappa, pfa)?
    };
    Ok(p.sigma * (y / p.kappa).powf(1.0 / p.nu))
}

/// Draws `n` variates. Chunk `i` uses ChaCha stream `i`, so the output does not
/// depend on the number of worker threads.
pub fn ggd_sample(p: &GGammaParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    if n == 0 {
        return invalid("sample size must be at least 1");
    }
    let gamma = Gamma::new(p.kappa, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut out = vec![0.0; n];
    out.par_chunks_mut(SAMPLE_CHUNK).enumerate().for_each(|(i, chunk)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for v in chunk.iter_mut() {
            let g: f64 = gamma.sample(&mut rng);
            *v = p.sigma * (g / p.kappa).powf(1.0 / p.nu);
        }
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogCumulants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

pub fn log_cumulants(samples: &[f64]) -> Result<LogCumulants> {
    if samples.len() < 3 {
        return invalid("log-cumulants need at least 3 samples");
    }
    if let Some(bad) = samples.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return invalid(format!("log-cumulants need positive samples, found {bad}"));
    }
    let first = samples[0];
    if samples.iter().all(|&v| v == first) {
        return Ok(LogCumulants { c1: first.ln(), c2: 0.0, c3: 0.0 });
    }
    let n = samples.len() as f64;
    let c1 = chunked_sum(samples, |x| x.ln()) / n;
    let c2 = chunked_sum(samples, |x| {
        let d = x.ln() - c1;
        d * d
    }) / n;
    let c3 = chunked_sum(samples, |x| {
        let d = x.ln() - c1;
        d * d * d
    }) / n;
    Ok(LogCumulants { c1, c2, c3 })
}

/// Blocked summation: fixed block order keeps the result reproducible and the
/// rounding error at O(√n) blocks rather than O(n) terms.
fn chunked_sum(xs: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    xs.chunks(4096).map(|c| c.iter().map(|&x| f(x)).sum::<f64>()).sum()
}

/// Plain MoLC fit.
pub fn fit_molc(samples: &[f64]) -> Result<GGammaParams> {
    let lc = log_cumulants(samples)?;
    fit_molc_cumulants(&lc)
}

pub fn fit_molc_cumulants(lc: &LogCumulants) -> Result<GGammaParams> {
    if !(lc.c2 > 0.0) {
        return Err(Error::DegenerateSample(format!("c2 = {}", lc.c2)));
    }
    let target = lc.c3 * lc.c3 / (lc.c2 * lc.c2 * lc.c2);
    let ratio = |k: f64| {
        let t1 = trigamma(k);
        let t2 = tetragamma(k);
        t2 * t2 / (t1 * t1 * t1)
    };
    let (lo, hi) = KAPPA_RANGE;
    let (r_lo, r_hi) = (ratio(lo), ratio(hi));
    if lc.c3 == 0.0 || !(target <= r_lo && target >= r_hi) {
        return Err(Error::FitFailure(format!(
            "c3^2/c2^3 = {target:.6e} outside [{r_hi:.6e}, {r_lo:.6e}] (c1={}, c2={}, c3={})",
            lc.c1, lc.c2, lc.c3
        )));
    }
    // the ratio falls monotonically in kappa; bisect in log space
    let kappa = bisect_log(lo, hi, |k| ratio(k) - target);
    let nu = -lc.c3.signum() * (trigamma(kappa) / lc.c2).sqrt();
    let sigma = (lc.c1 - (digamma(kappa) - kappa.ln()) / nu).exp();
    GGammaParams::new(nu, kappa, sigma)
        .map_err(|_| Error::FitFailure(format!("non-finite estimate nu={nu} kappa={kappa} sigma={sigma}")))
}

/// Bisection on a log-scaled bracket where `f(lo) > 0 > f(hi)` or the reverse.
fn bisect_log(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let fa = f(lo);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m.exp());
        if fm == 0.0 {
            return m.exp();
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    (0.5 * (a + b)).exp()
}

/// Central moments `(mean, m2, m3)` of `ln Y` for `Y ~ Gamma(kappa, 1)`
/// restricted to `[y_lo, y_hi]`.
pub fn truncated_log_moments(kappa: f64, y_lo: f64, y_hi: f64) -> (f64, f64, f64) {
    let mode = kappa.ln();
    let l_lo = if y_lo > 0.0 { y_lo.ln() } else { mode - 45.0 / kappa - 5.0 };
    let l_hi = if y_hi.is_finite() {
        y_hi.ln()
    } else {
        (kappa + 60.0 + 15.0 * kappa.sqrt()).ln()
    };
    let c = digamma(kappa);
    let raw = quad::integrate4(
        |l| {
            // unnormalized density of ln Y, written about the mode ln(kappa)
            let u = l - mode;
            let w = (-kappa * (u.exp_m1() - u)).exp();
            let d = l - c;
            [w, w * d, w * d * d, w * d * d * d]
        },
        l_lo,
        l_hi,
        1e-13,
    );
    let m0 = raw[0];
    let (e1, e2, e3) = (raw[1] / m0, raw[2] / m0, raw[3] / m0);
    let m2 = e2 - e1 * e1;
    let m3 = e3 - 3.0 * e1 * e2 + 2.0 * e1 * e1 * e1;
    (c + e1, m2, m3)
}

/// MoLC on a sample from which the largest `1 - keep` fraction was removed.
///
/// The log-cumulants of the kept values are matched against those of the
/// correspondingly truncated GΓD. For `nu > 0` the upper tail of `X` is the
/// upper tail of `Y`; for `nu < 0` it is the lower tail of `Y`.
pub fn fit_molc_truncated(kept: &[f64], keep: f64) -> Result<GGammaParams> {
    if !(keep > 0.0 && keep <= 1.0) {
        return invalid(format!("kept fraction must lie in (0,1], got {keep}"));
    }
    if keep >= 1.0 {
        return fit_molc(kept);
    }
    let lc = log_cumulants(kept)?;
    if !(lc.c2 > 0.0) {
        return Err(Error::DegenerateSample(format!("c2 = {}", lc.c2)));
    }
    let target = lc.c3 * lc.c3 / (lc.c2 * lc.c2 * lc.c2);
    let moments = |k: f64, positive: bool| -> Result<(f64, f64, f64)> {
        if positive {
            Ok(truncated_log_moments(k, 0.0, gamma_p_inv(k, keep)?))
        } else {
            Ok(truncated_log_moments(k, gamma_q_inv(k, keep)?, f64::INFINITY))
        }
    };
    let (lo, hi) = KAPPA_RANGE;
    let grid: Vec<f64> = (0..=96).map(|i| lo * (hi / lo).powf(i as f64 / 96.0)).collect();
    for positive in [true, false] {
        let g = |k: f64| -> Result<f64> {
            let (_, m2, m3) = moments(k, positive)?;
            Ok(m3 * m3 / (m2 * m2 * m2) - target)
        };
        let vals = grid.iter().map(|&k| g(k)).collect::<Result<Vec<_>>>()?;
        for i in 0..grid.len() - 1 {
            if (vals[i] > 0.0) == (vals[i + 1] > 0.0) {
                continue;
            }
            let kappa = bisect_log(grid[i], grid[i + 1], |k| g(k).unwrap_or(f64::NAN));
            let (m1, m2, m3) = moments(kappa, positive)?;
            let sgn = if positive { 1.0 } else { -1.0 };
            // sign(c3) = sign(m3)·sign(nu)
            if m3.signum() * sgn != lc.c3.signum() {
                continue;
            }
            let nu = sgn * (m2 / lc.c2).sqrt();
            let sigma = (lc.c1 - (m1 - kappa.ln()) / nu).exp();
            return GGammaParams::new(nu, kappa, sigma).map_err(|_| {
                Error::FitFailure(format!("non-finite estimate nu={nu} kappa={kappa} sigma={sigma}"))
            });
        }
    }
    Err(Error::FitFailure(format!(
        "no truncated-MoLC root for c3^2/c2^3 = {target:.6e} at keep = {keep} (c1={}, c2={}, c3={})",
        lc.c1, lc.c2, lc.c3
    )))
}

/// Nearest-rank percentile (`pct` in [0, 100]).
pub fn percentile(values: &[f64], pct: f64) -> Result<f64> {
    if values.is_empty() {
        return invalid("percentile of an empty set");
    }
    let n = values.len();
    let rank = ((pct / 100.0) * n as f64).ceil().clamp(1.0, n as f64) as usize;
    let mut v = values.to_vec();
    let (_, x, _) = v.select_nth_unstable_by(rank - 1, |a, b| a.total_cmp(b));
    Ok(*x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    /// Equal-width bins on `[0, upper]`; values outside are not binned.
    pub fn new(values: &[f64], bins: usize, upper: f64) -> Result<Self> {
        if bins == 0 || !(upper > 0.0 && upper.is_finite()) {
            return invalid(format!("histogram needs bins >= 1 and upper > 0, got {bins}, {upper}"));
        }
        let edges: Vec<f64> = (0..=bins).map(|i| upper * i as f64 / bins as f64).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            if v >= 0.0 && v <= upper {
                let b = ((v / upper * bins as f64) as usize).min(bins - 1);
                counts[b] += 1;
            }
        }
        let total = counts.iter().sum();
        Ok(Histogram { edges, counts, total })
    }

    /// 200 bins from 0 to the 99.95th percentile.
    pub fn standard(values: &[f64]) -> Result<Self> {
        Histogram::new(values, 200, percentile(values, 99.95)?)
    }

    pub fn empirical_mass(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.total as f64).collect()
    }

    /// Model probability per bin, conditioned on the binned range.
    pub fn model_mass(&self, p: &GGammaParams) -> Result<Vec<f64>> {
        let cdf = |x: f64| -> Result<f64> { if x <= 0.0 { Ok(0.0) } else { ggd_cdf(x, p) } };
        let f: Vec<f64> = self.edges.iter().map(|&e| cdf(e)).collect::<Result<_>>()?;
        let span = f[f.len() - 1] - f[0];
        if !(span > 0.0) {
            return invalid("model assigns no mass to the histogram range");
        }
        Ok(f.windows(2).map(|w| (w[1] - w[0]) / span).collect())
    }
}

/// Symmetric Kullback-Leibler distance between the histogram and the model.
pub fn kl_symmetric(h: &Histogram, p: &GGammaParams) -> Result<f64> {
    if h.total == 0 {
        return invalid("empty histogram");
    }
    let emp = h.empirical_mass();
    let model = h.model_mass(p)?;
    Ok(kl_masses(&emp, &model))
}

pub fn kl_masses(a: &[f64], b: &[f64]) -> f64 {
    const FLOOR: f64 = 1e-12;
    a.iter()
        .zip(b)
        .filter(|(x, y)| **x >= FLOOR && **y >= FLOOR)
        .map(|(x, y)| (x - y) * (x / y).ln())
        .sum()
}
