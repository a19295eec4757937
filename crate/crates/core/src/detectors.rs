//! Detector maps: joint-SA, DBSP, RsDVH, ΔSn and SPAN, plus the SCR metric.
//!
//! DBSP and RsDVH use a contrast covariance `CP`: the covariance at the test
//! pixel minus the mean covariance over a square background ring, projected
//! onto the PSD cone.

use crate::anisotropy::delta_s;
use crate::decomposition::{surface_similarity_or_zero, yamaguchi4_unchecked, FourComponentPowers};
use crate::error::{invalid, Error, Result};
use crate::polarimetry::{
    box_count, box_sums, check_window, covariance_field, kennaugh_from_covariance, span, FieldKind,
    HermitianField, Mat3, PolImage,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    JointSa,
    Dbsp,
    Rsdvh,
    DeltaS,
    Span,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 5] =
        [DetectorKind::JointSa, DetectorKind::Dbsp, DetectorKind::Rsdvh, DetectorKind::DeltaS, DetectorKind::Span];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::JointSa => "joint-sa",
            DetectorKind::Dbsp => "dbsp",
            DetectorKind::Rsdvh => "rsdvh",
            DetectorKind::DeltaS => "delta-s",
            DetectorKind::Span => "span",
        }
    }

    fn needs_delta_s(self) -> bool {
        matches!(self, DetectorKind::JointSa | DetectorKind::DeltaS)
    }

    fn needs_cp(self) -> bool {
        matches!(self, DetectorKind::Dbsp | DetectorKind::Rsdvh)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown detector '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorMap {
    pub width: usize,
    pub height: usize,
    pub detector: String,
    pub window: usize,
    pub data: Vec<f64>,
    /// Pixels forced to 0 because their value was undefined.
    pub degenerate: usize,
}

impl DetectorMap {
    /// Wraps raw values; non-finite or negative entries are rejected.
    pub fn new(width: usize, height: usize, detector: impl Into<String>, window: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return invalid(format!("map of {} values does not fit {width}x{height}", data.len()));
        }
        if let Some(i) = data.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return invalid(format!("map value {} at index {i} is not a finite non-negative number", data[i]));
        }
        Ok(DetectorMap { width, height, detector: detector.into(), window, data, degenerate: 0 })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegionBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl RegionBox {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        RegionBox { x, y, w, h }
    }

    pub fn check(&self, width: usize, height: usize) -> Result<()> {
        if self.w == 0 || self.h == 0 || self.x + self.w > width || self.y + self.h > height {
            return invalid(format!("region {self:?} is empty or outside {width}x{height}"));
        }
        Ok(())
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }

    /// Grown by `m` pixels on every side, clipped to the image.
    pub fn padded(&self, m: usize, width: usize, height: usize) -> RegionBox {
        let x = self.x.saturating_sub(m);
        let y = self.y.saturating_sub(m);
        RegionBox { x, y, w: (self.x + self.w + m).min(width) - x, h: (self.y + self.h + m).min(height) - y }
    }
}

impl FromStr for RegionBox {
    type Err = Error;
    /// Parses `x,y,w,h`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return invalid(format!("region '{s}' must be x,y,w,h"));
        }
        let mut v = [0usize; 4];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p.parse().map_err(|_| Error::InvalidArgument(format!("region '{s}': bad integer '{p}'")))?;
        }
        Ok(RegionBox::new(v[0], v[1], v[2], v[3]))
    }
}

/// Background ring: pixels at Chebyshev distance `inner..=outer` from the test pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingParams {
    pub inner: usize,
    pub outer: usize,
}

impl RingParams {
    /// Guard of one window, background of one window.
    pub fn for_window(window: usize) -> Self {
        RingParams { inner: window, outer: 2 * window }
    }

    fn check(&self) -> Result<()> {
        if self.inner == 0 || self.outer < self.inner {
            return invalid(format!("ring needs 1 <= inner <= outer, got {self:?}"));
        }
        Ok(())
    }

    fn count(&self, x: usize, y: usize, w: usize, h: usize) -> usize {
        box_count(x, y, w, h, self.outer) - box_count(x, y, w, h, self.inner - 1)
    }
}

pub fn joint_sa(p: &FourComponentPowers, ds: f64) -> f64 {
    (p.p_d + p.p_v) * p.p_h * ds
}

fn check_covariance(c: &HermitianField) -> Result<()> {
    if c.kind != FieldKind::Covariance {
        return invalid("expected a covariance field");
    }
    Ok(())
}

/// `CP` at one pixel, computed directly over the ring.
pub fn cp_at(c: &HermitianField, x: usize, y: usize, ring: RingParams) -> Result<Mat3> {
    check_covariance(c)?;
    ring.check()?;
    if x >= c.width || y >= c.height {
        return invalid(format!("pixel ({x},{y}) outside {}x{}", c.width, c.height));
    }
    let (r, ri) = (ring.outer as isize, ring.inner as isize);
    let mut acc = Mat3::ZERO;
    let mut n = 0usize;
    for dy in -r..=r {
        for dx in -r..=r {
            if dx.abs().max(dy.abs()) < ri {
                continue;
            }
            let (xx, yy) = (x as isize + dx, y as isize + dy);
            if xx < 0 || yy < 0 || xx >= c.width as isize || yy >= c.height as isize {
                continue;
            }
            acc += *c.get(xx as usize, yy as usize);
            n += 1;
        }
    }
    if n == 0 {
        return invalid(format!("background ring around ({x},{y}) lies outside the image"));
    }
    Ok((*c.get(x, y) - acc * (1.0 / n as f64)).psd_projection())
}

/// `CP` for every pixel, from two clipped box sums.
pub fn cp_field(c: &HermitianField, ring: RingParams) -> Result<HermitianField> {
    check_covariance(c)?;
    ring.check()?;
    let (w, h) = (c.width, c.height);
    let outer = box_sums(&c.data, w, h, ring.outer);
    let inner = box_sums(&c.data, w, h, ring.inner - 1);
    let data = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let n = ring.count(x, y, w, h);
            if n == 0 {
                return invalid(format!("background ring around ({x},{y}) lies outside the image"));
            }
            let mean = (outer[i] - inner[i]) * (1.0 / n as f64);
            Ok((c.data[i] - mean).psd_projection())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HermitianField { width: w, height: h, kind: FieldKind::Covariance, data })
}

/// Decomposition of every pixel, zero-power pixels mapping to zeros.
fn powers(c: &HermitianField) -> Vec<FourComponentPowers> {
    c.data.par_iter().map(yamaguchi4_unchecked).collect()
}

/// ΔSn per pixel; undefined pixels become 0 and are counted.
pub fn delta_s_values(c: &HermitianField) -> (Vec<f64>, usize) {
    let vals: Vec<Option<f64>> = c
        .data
        .par_iter()
        .map(|m| delta_s(&kennaugh_from_covariance(m)).ok().filter(|v| v.is_finite()))
        .collect();
    let bad = vals.iter().filter(|v| v.is_none()).count();
    (vals.into_iter().map(|v| v.unwrap_or(0.0)).collect(), bad)
}

fn finish(c: &HermitianField, kind: DetectorKind, window: usize, raw: Vec<f64>, mut degenerate: usize) -> DetectorMap {
    let data = raw
        .into_iter()
        .map(|v| {
            if v.is_finite() && v >= 0.0 {
                v
            } else {
                degenerate += 1;
                0.0
            }
        })
        .collect();
    if degenerate > 0 {
        log::warn!("{kind}: {degenerate} degenerate pixels set to 0");
    }
    DetectorMap { width: c.width, height: c.height, detector: kind.name().into(), window, data, degenerate }
}

/// Several detector maps from one image, sharing the covariance, ΔSn and
/// `CP` fields between them.
pub fn detector_maps(img: &PolImage, window: usize, ring: RingParams, kinds: &[DetectorKind]) -> Result<Vec<DetectorMap>> {
    check_window(window, img.width, img.height)?;
    ring.check()?;
    let c = covariance_field(img, window)?;
    let ds = kinds.iter().any(|k| k.needs_delta_s()).then(|| delta_s_values(&c));
    let pw = kinds.iter().any(|k| matches!(k, DetectorKind::JointSa | DetectorKind::Rsdvh)).then(|| powers(&c));
    let cp = if kinds.iter().any(|k| k.needs_cp()) { Some(cp_field(&c, ring)?) } else { None };
    let cp_pw = cp.as_ref().map(powers);

    let mut out = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let map = match kind {
            DetectorKind::JointSa => {
                let (ds, bad) = ds.as_ref().unwrap();
                let pw = pw.as_ref().unwrap();
                let raw = pw.par_iter().zip(ds.par_iter()).map(|(p, d)| joint_sa(p, *d)).collect();
                finish(&c, kind, window, raw, *bad)
            }
            DetectorKind::DeltaS => {
                let (ds, bad) = ds.as_ref().unwrap();
                finish(&c, kind, window, ds.clone(), *bad)
            }
            DetectorKind::Dbsp => {
                let raw = cp_pw.as_ref().unwrap().par_iter().map(|p| (p.p_d + p.p_v) * p.p_h).collect();
                finish(&c, kind, window, raw, 0)
            }
            DetectorKind::Rsdvh => {
                let (pw, cpw, cp) = (pw.as_ref().unwrap(), cp_pw.as_ref().unwrap(), cp.as_ref().unwrap());
                let raw = (0..c.data.len())
                    .into_par_iter()
                    .map(|i| {
                        let rs = surface_similarity_or_zero(&c.data[i]).max(surface_similarity_or_zero(&cp.data[i]));
                        let (a, b) = (&pw[i], &cpw[i]);
                        rs * (a.p_d.max(b.p_d) + a.p_v.max(b.p_v)) * a.p_h.max(b.p_h)
                    })
                    .collect();
                finish(&c, kind, window, raw, 0)
            }
            DetectorKind::Span => span_map(img)?,
        };
        out.push(map);
    }
    Ok(out)
}

pub fn joint_sa_map(img: &PolImage, window: usize) -> Result<DetectorMap> {
    Ok(detector_maps(img, window, RingParams::for_window(window), &[DetectorKind::JointSa])?.remove(0))
}

pub fn dbsp_map(img: &PolImage, window: usize, ring: RingParams) -> Result<DetectorMap> {
    Ok(detector_maps(img, window, ring, &[DetectorKind::Dbsp])?.remove(0))
}

pub fn rsdvh_map(img: &PolImage, window: usize, ring: RingParams) -> Result<DetectorMap> {
    Ok(detector_maps(img, window, ring, &[DetectorKind::Rsdvh])?.remove(0))
}

pub fn delta_s_map(img: &PolImage, window: usize) -> Result<DetectorMap> {
    Ok(detector_maps(img, window, RingParams::for_window(window), &[DetectorKind::DeltaS])?.remove(0))
}

pub fn span_map(img: &PolImage) -> Result<DetectorMap> {
    let data = img.data.par_iter().map(span).collect();
    DetectorMap::new(img.width, img.height, DetectorKind::Span.name(), 1, data)
}

pub fn region_mean(map: &DetectorMap, r: &RegionBox) -> Result<f64> {
    r.check(map.width, map.height)?;
    let mut s = 0.0;
    for y in r.y..r.y + r.h {
        s += map.data[y * map.width + r.x..y * map.width + r.x + r.w].iter().sum::<f64>();
    }
    Ok(s / (r.w * r.h) as f64)
}

fn scr_from_means(t: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::UndefinedScr);
    }
    Ok(20.0 * (t / c).log10())
}

/// `20·log10(mean(target) / mean(clutter))`; `-inf` when the target mean is 0.
pub fn scr(map: &DetectorMap, target: &RegionBox, clutter: &RegionBox) -> Result<f64> {
    scr_from_means(region_mean(map, target)?, region_mean(map, clutter)?)
}

/// SCR against an arbitrary clutter pixel set.
pub fn scr_masked(map: &DetectorMap, target: &RegionBox, clutter: &[bool]) -> Result<f64> {
    if clutter.len() != map.data.len() {
        return invalid("clutter mask size does not match the map");
    }
    let (s, n) = map
        .data
        .iter()
        .zip(clutter)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1));
    if n == 0 {
        return invalid("clutter mask is empty");
    }
    scr_from_means(region_mean(map, target)?, s / n as f64)
}

/// Open-water pixels: farther than `gap` (Chebyshev) from every box and at
/// least `border` from the image edge.
pub fn clutter_mask(width: usize, height: usize, boxes: &[RegionBox], gap: usize, border: usize) -> Vec<bool> {
    let mut m = vec![false; width * height];
    for y in border..height.saturating_sub(border) {
        for x in border..width.saturating_sub(border) {
            m[y * width + x] = true;
        }
    }
    for b in boxes {
        let p = b.padded(gap, width, height);
        for y in p.y..p.y + p.h {
            m[y * width + p.x..y * width + p.x + p.w].fill(false);
        }
    }
    m
}
