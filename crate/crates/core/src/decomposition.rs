//! Four-component (surface, double-bounce, volume, helix) power decomposition
//! of a lexicographic covariance matrix, the surface-similarity ratio `Rs`
//! and the sea-roughness angle β₁.
//!
//! Model matrices, with `P_s = f_s(1+|β|²)`, `P_d = f_d(1+|α|²)`, `P_v = f_v`
//! and `P_h = f_h`:
//!
//! ```text
//! surface  f_s [[|β|²,0,β],[0,0,0],[β*,0,1]]
//! dihedral f_d [[|α|²,0,α],[0,0,0],[α*,0,1]]
//! helix    f_h/4 [[1, j√2, -1],[-j√2, 2, j√2],[-1, -j√2, 1]]
//! volume   f_v/8  [[3,0,1],[0,2,0],[1,0,3]]     |R| <= 2 dB
//!          f_v/15 [[8,0,2],[0,4,0],[2,0,3]]     R < -2 dB
//!          f_v/15 [[3,0,2],[0,4,0],[2,0,8]]     R > 2 dB
//! ```
//!
//! where `R = 10 log10(C33 / C11)`.

use crate::error::{invalid, Error, Result};
use crate::polarimetry::Mat3;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FourComponentPowers {
    pub p_s: f64,
    pub p_d: f64,
    pub p_v: f64,
    pub p_h: f64,
}

impl FourComponentPowers {
    pub fn total(&self) -> f64 {
        self.p_s + self.p_d + self.p_v + self.p_h
    }
}

/// Volume model entries `(c11, c22, c33, c13)` for the co-pol ratio `r_db`.
pub fn volume_model(r_db: f64) -> [f64; 4] {
    if r_db < -2.0 {
        [8.0 / 15.0, 4.0 / 15.0, 3.0 / 15.0, 2.0 / 15.0]
    } else if r_db > 2.0 {
        [3.0 / 15.0, 4.0 / 15.0, 8.0 / 15.0, 2.0 / 15.0]
    } else {
        [3.0 / 8.0, 2.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0]
    }
}

/// Helix power as `2·|Im(C12 + C23)|`.
pub fn helix_power(c: &Mat3) -> f64 {
    2.0 * (c.0[0][1] + c.0[1][2]).im.abs()
}

/// Relative tolerance on the smallest eigenvalue before a matrix counts as non-PSD.
pub const PSD_TOL: f64 = 1e-9;

pub fn yamaguchi4(c: &Mat3) -> Result<FourComponentPowers> {
    let trace = c.trace();
    if !trace.is_finite() || c.0.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return invalid("covariance has non-finite entries");
    }
    if trace < 0.0 || c.min_eigenvalue() < -PSD_TOL * trace.abs().max(f64::MIN_POSITIVE) {
        return invalid(format!("covariance is not positive semi-definite (trace {trace})"));
    }
    if trace == 0.0 {
        return Ok(FourComponentPowers::default());
    }
    Ok(yamaguchi4_unchecked(c))
}

/// [`yamaguchi4`] without the PSD check, for callers that guarantee it.
pub fn yamaguchi4_unchecked(c: &Mat3) -> FourComponentPowers {
    let trace = c.trace();
    if trace <= 0.0 {
        return FourComponentPowers::default();
    }
    let (c11, c22, c33) = (c.0[0][0].re, c.0[1][1].re, c.0[2][2].re);
    let c13 = c.0[0][2];

    // the helix model puts f_h/√2 into Im(C12 + C23)
    let f_h = SQRT_2 * (c.0[0][1] + c.0[1][2]).im.abs();

    let r_db = 10.0 * (c33 / c11).log10();
    let [v11, v22, v33, v13] = volume_model(if r_db.is_nan() { 0.0 } else { r_db });
    let f_v = ((c22 - 0.5 * f_h) / v22).max(0.0);

    let x = c11 - f_v * v11 - 0.25 * f_h;
    let y = c33 - f_v * v33 - 0.25 * f_h;
    let z = c13 - C64::new(f_v * v13 - 0.25 * f_h, 0.0);

    let (mut p_s, mut p_d) = (0.0, 0.0);
    if x + y > 1e-12 * trace {
        if z.re >= 0.0 {
            // surface dominant: α = -1
            let den = x + y + 2.0 * z.re;
            if den > 0.0 {
                let f_s = (y + z).norm_sqr() / den;
                let f_d = y - f_s;
                let beta = (y + z) / f_s - 1.0;
                p_s = if f_s > 0.0 { f_s * (1.0 + beta.norm_sqr()) } else { 0.0 };
                p_d = 2.0 * f_d;
            }
        } else {
            // double-bounce dominant: β = 1
            let den = x + y - 2.0 * z.re;
            if den > 0.0 {
                let f_d = (y - z).norm_sqr() / den;
                let f_s = y - f_d;
                let alpha = 1.0 - (y - z) / f_d;
                p_d = if f_d > 0.0 { f_d * (1.0 + alpha.norm_sqr()) } else { 0.0 };
                p_s = 2.0 * f_s;
            }
        }
    }
    let p_s = p_s.max(0.0);
    let p_d = p_d.max(0.0);
    let mut p_h = f_h;
    // volume absorbs whatever the clamped components leave over
    let mut p_v = trace - p_s - p_d - p_h;
    let (mut p_s, mut p_d) = (p_s, p_d);
    if p_v < 0.0 {
        let scale = trace / (p_s + p_d + p_h);
        p_v = 0.0;
        p_s *= scale;
        p_d *= scale;
        p_h *= scale;
    }
    FourComponentPowers { p_s, p_d, p_v, p_h }
}

/// Unit lexicographic vector of the trihedral `S = diag(1, 1)`.
fn surface_vector() -> [C64; 3] {
    let s = 1.0 / SQRT_2;
    [C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)]
}

/// Surface similarity `u^H C u / trace(C)`.
pub fn surface_similarity_rs(c: &Mat3) -> Result<f64> {
    let t = c.trace();
    if !(t > 0.0) {
        return invalid("surface similarity needs positive power");
    }
    Ok((c.quad_form(&surface_vector()) / t).clamp(0.0, 1.0))
}

/// Same as [`surface_similarity_rs`] but 0 for zero-power pixels.
pub fn surface_similarity_or_zero(c: &Mat3) -> f64 {
    surface_similarity_rs(c).unwrap_or(0.0)
}

/// Angle in degrees with `sin(4β₁)/(4β₁) = (T22 - T33)/(T22 + T33)`, on the
/// monotone branch `[0°, 45°]`. Ratios at or below 0 map to 45°.
pub fn surface_roughness_beta1(t: &Mat3) -> Result<f64> {
    let (t22, t33) = (t.0[1][1].re, t.0[2][2].re);
    let den = t22 + t33;
    if !(den.abs() > 0.0) {
        return Err(Error::UndefinedRoughness);
    }
    Ok(beta1_from_ratio((t22 - t33) / den))
}

pub fn beta1_from_ratio(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    if r <= 0.0 {
        return 45.0;
    }
    let sinc = |x: f64| if x == 0.0 { 1.0 } else { x.sin() / x };
    let (mut lo, mut hi) = (0.0, PI);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if sinc(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi) / 4.0).to_degrees()
}
