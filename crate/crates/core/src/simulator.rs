//! Synthetic quad-pol scenes: reflection-symmetric circular Gaussian sea
//! clutter with additive ship targets built from canonical mechanisms.
//!
//! Every pixel draws from its own ChaCha8 stream keyed by `(seed, y, x)`, so
//! a scene is identical for any thread count.

use crate::detectors::RegionBox;
use crate::error::{invalid, Result};
use crate::ggd::special::gamma_quantile_from_normal;
use crate::polarimetry::{Mat3, PolImage, ScatteringMatrix};
use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeaModel {
    /// `⟨|S_hh|²⟩`.
    pub copol_power: f64,
    /// `10·log10(⟨|S_vv|²⟩ / ⟨|S_hh|²⟩)`.
    pub copol_ratio_db: f64,
    /// Normalized `hh`/`vv` correlation.
    pub rho: C64,
    /// `C22` as a fraction of the mean co-pol power.
    pub cross_pol_fraction: f64,
    /// Optional K-distributed texture (not part of the base model).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub texture: Option<Texture>,
}

/// Spatially correlated Gamma texture with unit mean: a boxcar-smoothed white
/// Gaussian field mapped through the Gamma(shape)/shape quantile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Texture {
    pub shape: f64,
    pub correlation_length: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShipMode {
    Coherent,
    Speckled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShipSpec {
    /// `[x, y]` of the box center.
    pub center: [usize; 2],
    /// `[width, height]` in pixels.
    pub extent: [usize; 2],
    pub multiplier: f64,
    /// Power fractions `[surface, dihedral, volume, helix]`.
    pub weights: [f64; 4],
    pub mode: ShipMode,
}

impl ShipSpec {
    pub fn region(&self) -> RegionBox {
        let [w, h] = self.extent;
        RegionBox::new(self.center[0].wrapping_sub(w / 2), self.center[1].wrapping_sub(h / 2), w, h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub sea: SeaModel,
    #[serde(default)]
    pub ships: Vec<ShipSpec>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
    pub boxes: Vec<RegionBox>,
}

impl TruthMask {
    pub fn from_boxes(width: usize, height: usize, boxes: Vec<RegionBox>) -> Result<Self> {
        let mut data = vec![false; width * height];
        for b in &boxes {
            b.check(width, height)?;
            for y in b.y..b.y + b.h {
                data[y * width + b.x..y * width + b.x + b.w].fill(true);
            }
        }
        Ok(TruthMask { width, height, data, boxes })
    }

    /// Truth from a binary mask: one target per 8-connected component, its
    /// region being the component's bounding box.
    pub fn from_mask(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return invalid("truth mask size mismatch");
        }
        let (labels, n) = crate::cfar::label_components(&data, width, height);
        let mut ext = vec![(usize::MAX, usize::MAX, 0usize, 0usize); n];
        for (i, &l) in labels.iter().enumerate() {
            if l == 0 {
                continue;
            }
            let e = &mut ext[l as usize - 1];
            let (x, y) = (i % width, i / width);
            *e = (e.0.min(x), e.1.min(y), e.2.max(x), e.3.max(y));
        }
        let boxes = ext.into_iter().map(|(x0, y0, x1, y1)| RegionBox::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1)).collect();
        Ok(TruthMask { width, height, data, boxes })
    }
}

/// Reflection-symmetric sea covariance (`C12 = C23 = 0`).
pub fn sea_covariance(m: &SeaModel) -> Result<Mat3> {
    if !(m.copol_power > 0.0 && m.copol_power.is_finite()) {
        return invalid(format!("co-pol power must be positive, got {}", m.copol_power));
    }
    if !m.copol_ratio_db.is_finite() {
        return invalid("co-pol ratio must be finite");
    }
    if !(m.rho.norm() < 1.0) {
        return invalid(format!("|rho| must be below 1, got {}", m.rho.norm()));
    }
    if !(m.cross_pol_fraction >= 0.0 && m.cross_pol_fraction.is_finite()) {
        return invalid("cross-pol fraction must be non-negative");
    }
    if let Some(t) = m.texture {
        if !(t.shape > 0.0 && t.shape.is_finite()) || t.correlation_length == 0 {
            return invalid(format!("bad texture {t:?}"));
        }
    }
    let c11 = m.copol_power;
    let c33 = c11 * 10f64.powf(m.copol_ratio_db / 10.0);
    let mut c = Mat3::from_real_diag([c11, m.cross_pol_fraction * 0.5 * (c11 + c33), c33]);
    c.0[0][2] = m.rho * (c11 * c33).sqrt();
    c.0[2][0] = c.0[0][2].conj();
    Ok(c)
}

fn hermitian_sqrt(c: &Mat3) -> Mat3 {
    let eig = SymmetricEigen::new(Matrix3::from_fn(|i, j| c.0[i][j]));
    let mut out = Mat3::ZERO;
    for k in 0..3 {
        let s = eig.eigenvalues[k].max(0.0).sqrt();
        let v = eig.eigenvectors.column(k);
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] += v[i] * v[j].conj() * s;
            }
        }
    }
    out
}

fn check_spec(spec: &SceneSpec) -> Result<()> {
    if spec.width == 0 || spec.height == 0 {
        return invalid("scene dimensions must be at least 1x1");
    }
    for (i, s) in spec.ships.iter().enumerate() {
        let r = s.region();
        if s.extent[0] == 0
            || s.extent[1] == 0
            || s.center[0] < s.extent[0] / 2
            || s.center[1] < s.extent[1] / 2
            || r.x + r.w > spec.width
            || r.y + r.h > spec.height
        {
            return invalid(format!("ship {i} at {:?} extent {:?} is outside the scene", s.center, s.extent));
        }
        if s.weights.iter().any(|w| !(*w >= 0.0)) || (s.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return invalid(format!("ship {i} weights {:?} must be non-negative and sum to 1", s.weights));
        }
        if !(s.multiplier >= 0.0 && s.multiplier.is_finite()) {
            return invalid(format!("ship {i} multiplier must be non-negative"));
        }
    }
    Ok(())
}

fn pixel_rng(seed: u64, x: usize, y: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((y as u64) << 32) | x as u64);
    rng
}

fn unit_phase(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * rng.random::<f64>())
}

/// Lexicographic mechanism vectors, each of unit norm.
fn mechanisms() -> [[C64; 3]; 3] {
    let r = |v: f64| C64::new(v, 0.0);
    let s = FRAC_1_SQRT_2;
    [
        [r(s), r(0.0), r(s)],
        [r(s), r(0.0), r(-s)],
        // helix j·[1, j√2, -1]/2
        [C64::new(0.0, 0.5), r(-SQRT_2 / 2.0), C64::new(0.0, -0.5)],
    ]
}

fn ship_contribution(ship: &ShipSpec, pc: f64, rng: &mut ChaCha8Rng) -> [C64; 3] {
    let mech = mechanisms();
    let mut k = [C64::new(0.0, 0.0); 3];
    let coherent = ship.mode == ShipMode::Coherent;
    let amp = |w: f64| (ship.multiplier * w * pc).sqrt();
    for (m, wi) in [(0usize, 0usize), (1, 1), (2, 3)] {
        let ph = if coherent { C64::new(1.0, 0.0) } else { unit_phase(rng) };
        let a = ph * amp(ship.weights[wi]);
        for i in 0..3 {
            k[i] += a * mech[m][i];
        }
    }
    // dipole at a uniformly random orientation, always with random phase
    let th = PI * rng.random::<f64>();
    let (s, c) = th.sin_cos();
    let dip = [c * c, SQRT_2 * c * s, s * s];
    let a = unit_phase(rng) * amp(ship.weights[2]);
    for i in 0..3 {
        k[i] += a * dip[i];
    }
    k
}

/// Unit-mean texture multiplier per pixel.
fn texture_field(t: &Texture, white: &[f64], w: usize, h: usize) -> Result<Vec<f64>> {
    let l = t.correlation_length;
    let lo = l / 2;
    let wrap = |i: usize, d: usize, n: usize| (i + n * l + d - lo) % n;
    let mut horiz = vec![0.0; w * h];
    horiz.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            *o = (0..l).map(|d| white[y * w + wrap(x, d, w)]).sum();
        }
    });
    (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let g: f64 = (0..l).map(|d| horiz[wrap(y, d, h) * w + x]).sum::<f64>() / l as f64;
            Ok(gamma_quantile_from_normal(t.shape, g)? / t.shape)
        })
        .collect()
}

pub fn simulate_scene(spec: &SceneSpec) -> Result<(PolImage, TruthMask)> {
    check_spec(spec)?;
    let c = sea_covariance(&spec.sea)?;
    let l = hermitian_sqrt(&c);
    let pc = c.trace();
    let (w, h) = (spec.width, spec.height);
    let regions: Vec<RegionBox> = spec.ships.iter().map(ShipSpec::region).collect();

    // per pixel: clutter vector, texture white noise, ship sum
    let px: Vec<([C64; 3], f64, [C64; 3])> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let mut rng = pixel_rng(spec.seed, x, y);
            let mut z = [C64::new(0.0, 0.0); 3];
            for zi in z.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *zi = C64::new(re, im) * FRAC_1_SQRT_2;
            }
            let mut k = [C64::new(0.0, 0.0); 3];
            for (r, kr) in k.iter_mut().enumerate() {
                *kr = l.0[r][0] * z[0] + l.0[r][1] * z[1] + l.0[r][2] * z[2];
            }
            let white: f64 = rng.sample(StandardNormal);
            let mut add = [C64::new(0.0, 0.0); 3];
            for (ship, reg) in spec.ships.iter().zip(&regions) {
                if reg.contains(x, y) {
                    let s = ship_contribution(ship, pc, &mut rng);
                    for j in 0..3 {
                        add[j] += s[j];
                    }
                }
            }
            (k, white, add)
        })
        .collect();

    let tex = match &spec.sea.texture {
        Some(t) => {
            let white: Vec<f64> = px.iter().map(|p| p.1).collect();
            Some(texture_field(t, &white, w, h)?)
        }
        None => None,
    };
    let data = px
        .into_par_iter()
        .enumerate()
        .map(|(i, (k, _, add))| {
            let g = tex.as_ref().map_or(1.0, |t| t[i].sqrt());
            ScatteringMatrix::from_lex(&[k[0] * g + add[0], k[1] * g + add[1], k[2] * g + add[2]])
        })
        .collect();
    Ok((PolImage::new(w, h, data)?, TruthMask::from_boxes(w, h, regions)?))
}

/// The fixed 512×512 evaluation scene: seven ships of decreasing power on
/// textured sea. Three strong helix-bearing hulls sit side by side with two
/// weak speckled targets squeezed into the gaps, the arrangement that
/// contaminates a local background estimate.
pub fn reference_scene() -> SceneSpec {
    let ship = |cx, cy, w, h, m, weights, mode| ShipSpec { center: [cx, cy], extent: [w, h], multiplier: m, weights, mode };
    use ShipMode::*;
    SceneSpec {
        width: 512,
        height: 512,
        sea: SeaModel {
            copol_power: 1.0,
            copol_ratio_db: 0.0,
            rho: C64::new(0.95, 0.0),
            cross_pol_fraction: 0.015,
            texture: Some(Texture { shape: 0.6, correlation_length: 5 }),
        },
        ships: vec![
            ship(238, 256, 5, 17, 24.0, [0.5, 0.15, 0.1, 0.25], Coherent),
            ship(256, 256, 5, 17, 22.0, [0.5, 0.15, 0.1, 0.25], Coherent),
            ship(274, 256, 5, 17, 20.0, [0.5, 0.15, 0.1, 0.25], Coherent),
            ship(80, 80, 7, 25, 16.0, [0.5, 0.1, 0.1, 0.3], Coherent),
            ship(420, 100, 9, 21, 8.0, [0.6, 0.1, 0.1, 0.2], Speckled),
            ship(247, 256, 5, 5, 2.5, [0.5, 0.1, 0.1, 0.3], Speckled),
            ship(265, 256, 5, 5, 2.0, [0.5, 0.1, 0.1, 0.3], Speckled),
        ],
        seed: 42,
    }
}
