//! Per-pixel polarimetric representations: scattering matrices, the
//! lexicographic target vector, boxcar covariance and coherency fields, the
//! Kennaugh matrix and the Pauli colour composite.
//!
//! Kennaugh convention: with the Stokes map
//! `A = [[1,0,0,1],[1,0,0,-1],[0,1,1,0],[0,i,-i,0]]` acting on `E ⊗ E*`,
//! `K = Re(A · ⟨S ⊗ S*⟩ · A⁻¹)` and `A⁻¹ = A^H / 2`. `K[0][0]` equals half
//! the span. Any fully polarized transmit wave stays fully polarized under a
//! single deterministic `S`.

mod mat3;

pub use mat3::Mat3;

use crate::error::{invalid, Result};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use std::ops::AddAssign;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScatteringMatrix {
    pub hh: C64,
    pub hv: C64,
    pub vv: C64,
}

impl ScatteringMatrix {
    pub fn new(hh: C64, hv: C64, vv: C64) -> Self {
        ScatteringMatrix { hh, hv, vv }
    }

    pub fn is_finite(&self) -> bool {
        [self.hh, self.hv, self.vv].iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Inverse of [`lex_vector`].
    pub fn from_lex(k: &[C64; 3]) -> Self {
        ScatteringMatrix { hh: k[0], hv: k[1] / SQRT_2, vv: k[2] }
    }
}

/// `[S_hh, √2·S_hv, S_vv]`.
pub fn lex_vector(s: &ScatteringMatrix) -> [C64; 3] {
    [s.hh, s.hv * SQRT_2, s.vv]
}

/// Total power `|S_hh|² + 2|S_hv|² + |S_vv|²`.
pub fn span(s: &ScatteringMatrix) -> f64 {
    s.hh.norm_sqr() + 2.0 * s.hv.norm_sqr() + s.vv.norm_sqr()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<ScatteringMatrix>,
}

impl PolImage {
    pub fn new(width: usize, height: usize, data: Vec<ScatteringMatrix>) -> Result<Self> {
        if width == 0 || height == 0 {
            return invalid("image dimensions must be at least 1x1");
        }
        if data.len() != width * height {
            return invalid(format!("expected {} pixels, got {}", width * height, data.len()));
        }
        if let Some(i) = data.iter().position(|s| !s.is_finite()) {
            return invalid(format!("non-finite scattering matrix at pixel {i}"));
        }
        Ok(PolImage { width, height, data })
    }

    pub fn filled(width: usize, height: usize, s: ScatteringMatrix) -> Result<Self> {
        PolImage::new(width, height, vec![s; width * height])
    }

    pub fn get(&self, x: usize, y: usize) -> &ScatteringMatrix {
        &self.data[y * self.width + x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Covariance,
    Coherency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianField {
    pub width: usize,
    pub height: usize,
    pub kind: FieldKind,
    pub data: Vec<Mat3>,
}

impl HermitianField {
    pub fn get(&self, x: usize, y: usize) -> &Mat3 {
        &self.data[y * self.width + x]
    }

    pub fn to_coherency(&self) -> HermitianField {
        assert_eq!(self.kind, FieldKind::Covariance);
        HermitianField {
            width: self.width,
            height: self.height,
            kind: FieldKind::Coherency,
            data: self.data.par_iter().map(coherency_from_covariance).collect(),
        }
    }
}

pub(crate) fn check_window(window: usize, width: usize, height: usize) -> Result<()> {
    if window == 0 || window % 2 == 0 {
        return invalid(format!("window must be a positive odd integer, got {window}"));
    }
    if window > width.min(height) {
        return invalid(format!("window {window} exceeds image size {width}x{height}"));
    }
    Ok(())
}

/// Sums over the clipped square `[x-r, x+r] × [y-r, y+r]`, computed as two
/// separable passes. Each output is a fixed-order sum, so results do not
/// depend on how rows are split across threads.
pub fn box_sums<T>(data: &[T], width: usize, height: usize, r: usize) -> Vec<T>
where
    T: Copy + Default + AddAssign + Send + Sync,
{
    let mut horiz = vec![T::default(); data.len()];
    horiz.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        let src = &data[y * width..(y + 1) * width];
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = T::default();
            for v in &src[x.saturating_sub(r)..=(x + r).min(width - 1)] {
                acc += *v;
            }
            *out = acc;
        }
    });
    let mut out = vec![T::default(); data.len()];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = T::default();
            for yy in y.saturating_sub(r)..=(y + r).min(height - 1) {
                acc += horiz[yy * width + x];
            }
            *o = acc;
        }
    });
    out
}

/// Number of in-bounds pixels in the clipped square of half-size `r`.
pub fn box_count(x: usize, y: usize, width: usize, height: usize, r: usize) -> usize {
    let nx = (x + r).min(width - 1) - x.saturating_sub(r) + 1;
    let ny = (y + r).min(height - 1) - y.saturating_sub(r) + 1;
    nx * ny
}

/// Boxcar mean of `k·k^H`; edge pixels average over the in-bounds part of the window.
pub fn covariance_field(img: &PolImage, window: usize) -> Result<HermitianField> {
    check_window(window, img.width, img.height)?;
    let (w, h) = (img.width, img.height);
    let outer: Vec<Mat3> = img.data.par_iter().map(|s| Mat3::outer(&lex_vector(s))).collect();
    let r = window / 2;
    let sums = box_sums(&outer, w, h, r);
    let data = sums
        .into_par_iter()
        .enumerate()
        .map(|(i, s)| s * (1.0 / box_count(i % w, i / w, w, h, r) as f64))
        .collect();
    Ok(HermitianField { width: w, height: h, kind: FieldKind::Covariance, data })
}

fn pauli_unitary() -> Mat3 {
    let s = 1.0 / SQRT_2;
    let c = |v: f64| C64::new(v, 0.0);
    Mat3([[c(s), c(0.0), c(s)], [c(s), c(0.0), c(-s)], [c(0.0), c(1.0), c(0.0)]])
}

/// `T = U·C·U^H` with the lexicographic-to-Pauli change of basis.
pub fn coherency_from_covariance(c: &Mat3) -> Mat3 {
    let u = pauli_unitary();
    u.matmul(c).matmul(&u.adjoint())
}

/// Inverse of [`coherency_from_covariance`].
pub fn covariance_from_coherency(t: &Mat3) -> Mat3 {
    let u = pauli_unitary();
    u.adjoint().matmul(t).matmul(&u)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KennaughMatrix(pub [[f64; 4]; 4]);

impl KennaughMatrix {
    pub fn diag(d: [f64; 4]) -> Self {
        let mut k = [[0.0; 4]; 4];
        for i in 0..4 {
            k[i][i] = d[i];
        }
        KennaughMatrix(k)
    }

    pub fn scaled(&self, s: f64) -> Self {
        KennaughMatrix(self.0.map(|row| row.map(|v| v * s)))
    }
}

fn stokes_map() -> [[C64; 4]; 4] {
    let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    [[o, z, z, o], [o, z, z, -o], [z, o, o, z], [z, i, -i, z]]
}

/// Kennaugh matrix of an ensemble with lexicographic covariance `c`.
pub fn kennaugh_from_covariance(c: &Mat3) -> KennaughMatrix {
    // S as a flat 4-vector [S00, S01, S10, S11] in terms of k
    let map: [(usize, f64); 4] = [(0, 1.0), (1, 1.0 / SQRT_2), (1, 1.0 / SQRT_2), (2, 1.0)];
    let g = |a: usize, b: usize| c.0[map[a].0][map[b].0] * (map[a].1 * map[b].1);
    // Z[(i,k),(j,l)] = ⟨S_ij S_kl*⟩
    let mut z = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..2 {
        for k in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    z[2 * i + k][2 * j + l] = g(2 * i + j, 2 * k + l);
                }
            }
        }
    }
    let a = stokes_map();
    let mut az = [[C64::new(0.0, 0.0); 4]; 4];
    for r in 0..4 {
        for col in 0..4 {
            az[r][col] = (0..4).map(|m| a[r][m] * z[m][col]).sum();
        }
    }
    let mut k = [[0.0; 4]; 4];
    for r in 0..4 {
        for col in 0..4 {
            // A⁻¹ = A^H / 2
            let v: C64 = (0..4).map(|m| az[r][m] * a[col][m].conj()).sum();
            k[r][col] = 0.5 * v.re;
        }
    }
    KennaughMatrix(k)
}

pub fn kennaugh_from_scattering(s: &ScatteringMatrix) -> KennaughMatrix {
    kennaugh_from_covariance(&Mat3::outer(&lex_vector(s)))
}

/// Window-averaged Kennaugh matrices. `K` is linear in the second-order
/// moments, so this is the Kennaugh matrix of the boxcar covariance.
pub fn kennaugh_mean(img: &PolImage, window: usize) -> Result<Vec<KennaughMatrix>> {
    let c = covariance_field(img, window)?;
    Ok(c.data.par_iter().map(kennaugh_from_covariance).collect())
}

/// Pauli composite: red `|hh - vv|`, green `2|hv|`, blue `|hh + vv|`, each
/// channel clipped at its 99th percentile and mapped to 0..=255.
pub fn pauli_rgb(img: &PolImage) -> Vec<[u8; 3]> {
    let chans: [Vec<f64>; 3] = [
        img.data.iter().map(|s| (s.hh - s.vv).norm()).collect(),
        img.data.iter().map(|s| 2.0 * s.hv.norm()).collect(),
        img.data.iter().map(|s| (s.hh + s.vv).norm()).collect(),
    ];
    let clips: Vec<f64> = chans
        .iter()
        .map(|c| crate::ggd::percentile(c, 99.0).unwrap_or(0.0))
        .collect();
    (0..img.data.len())
        .map(|i| {
            let mut px = [0u8; 3];
            for ch in 0..3 {
                px[ch] = scale_to_byte(chans[ch][i], clips[ch]);
            }
            px
        })
        .collect()
}

pub fn scale_to_byte(v: f64, clip: f64) -> u8 {
    if !(clip > 0.0) {
        return 0;
    }
    (v / clip).clamp(0.0, 1.0).mul_add(255.0, 0.0).round() as u8
}
