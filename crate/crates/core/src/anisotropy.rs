//! Degree of polarization (DoP) of the scattered wave as a function of the
//! transmit polarization, its extrema over the Poincaré sphere, the wave
//! entropy `S(DoP)` and the normalized anisotropy `ΔSn`.
//!
//! Extrema come from a 2048-point Fibonacci-lattice scan followed by
//! Nelder-Mead refinement from the four best lattice points for each of the
//! minimum and maximum. The simplex lives in the tangent plane at its seed,
//! and trial points are projected back onto the sphere by normalization.

use crate::error::{invalid, Error, Result};
use crate::polarimetry::KennaughMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use std::sync::OnceLock;

pub const LATTICE_POINTS: usize = 2048;
const SEEDS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoPExtrema {
    pub dop_min: f64,
    pub dop_max: f64,
    pub s_min: [f64; 3],
    pub s_max: [f64; 3],
}

/// Unit transmit Stokes direction.
pub fn transmit(s: [f64; 3]) -> Result<[f64; 3]> {
    let n = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
    if !(n > 0.0) {
        return invalid("transmit polarization must be nonzero");
    }
    Ok([s[0] / n, s[1] / n, s[2] / n])
}

/// Scattered intensity `g0` and polarized magnitude `|g1..3|` for transmit `s`.
#[inline]
fn scattered(k: &KennaughMatrix, s: &[f64; 3]) -> (f64, f64) {
    let m = &k.0;
    let g = |r: usize| m[r][0] + m[r][1] * s[0] + m[r][2] * s[1] + m[r][3] * s[2];
    let (g1, g2, g3) = (g(1), g(2), g(3));
    (g(0), (g1 * g1 + g2 * g2 + g3 * g3).sqrt())
}

/// DoP of the scattered Stokes vector `K·[1, s]`.
pub fn dop(k: &KennaughMatrix, s: &[f64; 3]) -> Result<f64> {
    let (g0, gp) = scattered(k, s);
    if !(g0 > 0.0) {
        return Err(Error::DegeneratePixel(format!("scattered intensity {g0} is not positive")));
    }
    Ok((gp / g0).clamp(0.0, 1.0))
}

/// `n` quasi-uniform points on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

fn lattice() -> &'static [[f64; 3]] {
    static L: OnceLock<Vec<[f64; 3]>> = OnceLock::new();
    L.get_or_init(|| fibonacci_sphere(LATTICE_POINTS))
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Orthonormal tangent basis at the unit vector `s`.
fn tangent_basis(s: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let a = if s[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = a[0] * s[0] + a[1] * s[1] + a[2] * s[2];
    let e1 = normalize([a[0] - d * s[0], a[1] - d * s[1], a[2] - d * s[2]]);
    let e2 = [
        s[1] * e1[2] - s[2] * e1[1],
        s[2] * e1[0] - s[0] * e1[2],
        s[0] * e1[1] - s[1] * e1[0],
    ];
    (e1, e2)
}

/// Nelder-Mead on the tangent plane at `seed`; minimizes `sign·DoP`.
fn refine(k: &KennaughMatrix, seed: [f64; 3], sign: f64, step: f64) -> ([f64; 3], f64) {
    let (e1, e2) = tangent_basis(&seed);
    let point = |u: f64, v: f64| {
        normalize([
            seed[0] + u * e1[0] + v * e2[0],
            seed[1] + u * e1[1] + v * e2[1],
            seed[2] + u * e1[2] + v * e2[2],
        ])
    };
    let f = |p: [f64; 2]| {
        let (g0, gp) = scattered(k, &point(p[0], p[1]));
        if g0 > 0.0 {
            sign * (gp / g0)
        } else {
            f64::INFINITY
        }
    };
    let mut simplex = [[0.0, 0.0], [step, 0.0], [0.0, step]];
    let mut vals = simplex.map(f);
    for _ in 0..400 {
        // order best to worst
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = idx.map(|i| simplex[i]);
        vals = idx.map(|i| vals[i]);
        let size = ((simplex[1][0] - simplex[0][0]).abs() + (simplex[1][1] - simplex[0][1]).abs())
            .max((simplex[2][0] - simplex[0][0]).abs() + (simplex[2][1] - simplex[0][1]).abs());
        if size < 1e-7 || (vals[2] - vals[0]).abs() < 1e-13 {
            break;
        }
        let cen = [0.5 * (simplex[0][0] + simplex[1][0]), 0.5 * (simplex[0][1] + simplex[1][1])];
        let along = |t: f64| [cen[0] + t * (simplex[2][0] - cen[0]), cen[1] + t * (simplex[2][1] - cen[1])];
        let xr = along(-1.0);
        let fr = f(xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(xe);
            if fe < fr {
                simplex[2] = xe;
                vals[2] = fe;
            } else {
                simplex[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = xr;
            vals[2] = fr;
        } else {
            let (xc, fc) = if fr < vals[2] {
                let x = along(-0.5);
                (x, f(x))
            } else {
                let x = along(0.5);
                (x, f(x))
            };
            if fc < vals[2].min(fr) {
                simplex[2] = xc;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = [
                        simplex[0][0] + 0.5 * (simplex[i][0] - simplex[0][0]),
                        simplex[0][1] + 0.5 * (simplex[i][1] - simplex[0][1]),
                    ];
                    vals[i] = f(simplex[i]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    (point(simplex[best][0], simplex[best][1]), sign * vals[best])
}

pub fn dop_extrema(k: &KennaughMatrix) -> Result<DoPExtrema> {
    if !(k.0[0][0] > 0.0) {
        return Err(Error::DegeneratePixel(format!("K00 = {} is not positive", k.0[0][0])));
    }
    let pts = lattice();
    let m = &k.0;
    // lowest and highest squared DoP on the lattice, ties broken by index
    let mut lo = [(f64::INFINITY, usize::MAX); SEEDS];
    let mut hi = [(f64::NEG_INFINITY, usize::MAX); SEEDS];
    for (i, s) in pts.iter().enumerate() {
        let g = |r: usize| m[r][0] + m[r][1] * s[0] + m[r][2] * s[1] + m[r][3] * s[2];
        let g0 = g(0);
        if !(g0 > 0.0) {
            return Err(Error::DegeneratePixel(format!("scattered intensity {g0} on lattice point {i}")));
        }
        let (g1, g2, g3) = (g(1), g(2), g(3));
        let d2 = (g1 * g1 + g2 * g2 + g3 * g3) / (g0 * g0);
        if d2 < lo[SEEDS - 1].0 {
            insert_sorted(&mut lo, (d2, i), |a, b| a < b);
        }
        if d2 > hi[SEEDS - 1].0 {
            insert_sorted(&mut hi, (d2, i), |a, b| a > b);
        }
    }
    let step = (4.0 * std::f64::consts::PI / pts.len() as f64).sqrt();

    let mut best_min = (pts[lo[0].1], lo[0].0.sqrt());
    for &(_, i) in &lo {
        let (s, v) = refine(k, pts[i], 1.0, step);
        if v < best_min.1 {
            best_min = (s, v);
        }
    }
    let mut best_max = (pts[hi[0].1], hi[0].0.sqrt());
    for &(_, i) in &hi {
        let (s, v) = refine(k, pts[i], -1.0, step);
        if v > best_max.1 {
            best_max = (s, v);
        }
    }
    let dop_min = best_min.1.clamp(0.0, 1.0);
    let dop_max = best_max.1.clamp(0.0, 1.0);
    Ok(DoPExtrema { dop_min, dop_max: dop_max.max(dop_min), s_min: best_min.0, s_max: best_max.0 })
}

/// Inserts into a list kept ordered by `better`; strict comparison keeps the
/// earlier lattice index on ties.
fn insert_sorted(list: &mut [(f64, usize); SEEDS], item: (f64, usize), better: impl Fn(f64, f64) -> bool) {
    let mut pos = SEEDS - 1;
    while pos > 0 && better(item.0, list[pos - 1].0) {
        list[pos] = list[pos - 1];
        pos -= 1;
    }
    list[pos] = item;
}

/// Wave entropy `S = -ln s(x)`, `s(x) = ½(1+x)^((1+x)/2)(1-x)^((1-x)/2)`.
pub fn wave_entropy(x: f64) -> Result<f64> {
    if !(x >= -1e-9 && x <= 1.0 + 1e-9) {
        return invalid(format!("DoP must lie in [0,1], got {x}"));
    }
    let x = x.clamp(0.0, 1.0);
    let up = 0.5 * (1.0 + x) * x.ln_1p();
    let down = if 1.0 - x < 1e-300 { 0.0 } else { 0.5 * (1.0 - x) * (-x).ln_1p() };
    Ok((LN_2 - up - down).max(0.0))
}

/// `S(x) / ln 2`, in [0, 1].
pub fn wave_entropy_normalized(x: f64) -> Result<f64> {
    Ok(wave_entropy(x)? / LN_2)
}

/// `ΔSn = Sn(DoP_min) - Sn(DoP_max)`.
pub fn delta_s(k: &KennaughMatrix) -> Result<f64> {
    let e = dop_extrema(k)?;
    Ok((wave_entropy_normalized(e.dop_min)? - wave_entropy_normalized(e.dop_max)?).max(0.0))
}
