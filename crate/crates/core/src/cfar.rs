//! Global GΓD CFAR: normalize a detector map by its mean, fit the GΓD once
//! over the whole frame, threshold at the requested false-alarm rate and
//! score the resulting mask at target level.

use crate::detectors::{DetectorMap, RegionBox};
use crate::error::{invalid, Result};
use crate::ggd::{cfar_threshold, fit_molc, fit_molc_truncated, percentile, GGammaParams};
use crate::simulator::TruthMask;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfarConfig {
    pub pfa: f64,
    /// Values above this percentile are left out of the fit; `None` fits all.
    pub guard_pct: Option<f64>,
    /// Frame of pixels ignored for fitting and detection.
    pub border: usize,
}

impl CfarConfig {
    /// Guard at the 99.9th percentile, border of half a window.
    pub fn new(pfa: f64, window: usize) -> Self {
        CfarConfig { pfa, guard_pct: Some(99.9), border: window / 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionMask {
    pub width: usize,
    pub height: usize,
    #[serde(skip)]
    pub data: Vec<bool>,
    /// Threshold on the mean-normalized map (`f64::MAX` when nothing was fitted).
    pub threshold: f64,
    /// Mean used for normalization; pixels flag when `value > threshold·mean`.
    pub mean: f64,
    pub params: Option<GGammaParams>,
    pub pfa: f64,
    pub guard_pct: Option<f64>,
    pub border: usize,
    /// Positive pixels the fit used, and the fraction of them kept by the guard.
    pub fit_samples: usize,
    pub kept_fraction: f64,
}

impl DetectionMask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

pub fn cfar_detect(map: &DetectorMap, cfg: &CfarConfig) -> Result<DetectionMask> {
    if !(cfg.pfa > 0.0 && cfg.pfa < 1.0) {
        return invalid(format!("pfa must lie in (0,1), got {}", cfg.pfa));
    }
    if let Some(g) = cfg.guard_pct {
        if !(g > 0.0 && g <= 100.0) {
            return invalid(format!("guard percentile must lie in (0,100], got {g}"));
        }
    }
    let (w, h, b) = (map.width, map.height, cfg.border);
    let (mean, pos) = normalized_positive(map, b)?;
    let mut out = DetectionMask {
        width: w,
        height: h,
        data: vec![false; w * h],
        threshold: f64::MAX,
        mean,
        params: None,
        pfa: cfg.pfa,
        guard_pct: cfg.guard_pct,
        border: b,
        fit_samples: 0,
        kept_fraction: 1.0,
    };
    if !(mean > 0.0) {
        log::warn!("{}: map is all zero, nothing detected", map.detector);
        return Ok(out);
    }
    let params = match cfg.guard_pct {
        Some(g) if g < 100.0 => {
            let cut = percentile(&pos, g)?;
            let kept: Vec<f64> = pos.iter().copied().filter(|&v| v <= cut).collect();
            out.kept_fraction = kept.len() as f64 / pos.len() as f64;
            fit_molc_truncated(&kept, out.kept_fraction)?
        }
        _ => fit_molc(&pos)?,
    };
    out.fit_samples = pos.len();
    let m = cfar_threshold(&params, cfg.pfa)?;
    out.threshold = m;
    out.params = Some(params);
    for y in b..h - b {
        for x in b..w - b {
            let i = y * w + x;
            out.data[i] = map.data[i] / mean > m;
        }
    }
    Ok(out)
}

/// Mean of the map inside the border, and the positive values inside the
/// border divided by it (the sample the GΓD is fitted to).
pub fn normalized_positive(map: &DetectorMap, border: usize) -> Result<(f64, Vec<f64>)> {
    let (w, h, b) = (map.width, map.height, border);
    if 2 * b >= w || 2 * b >= h {
        return invalid(format!("border {b} leaves no pixels in {w}x{h}"));
    }
    let rows = || (b..h - b).map(move |y| &map.data[y * w + b..y * w + w - b]);
    let n = (w - 2 * b) * (h - 2 * b);
    let mean = rows().map(|r| r.iter().sum::<f64>()).sum::<f64>() / n as f64;
    if !(mean > 0.0) {
        return Ok((mean, Vec::new()));
    }
    // the GΓD has support x > 0, so exact zeros are not part of the fit
    let pos = rows().flatten().map(|v| v / mean).filter(|&v| v > 0.0).collect();
    Ok((mean, pos))
}

/// 8-connected component labels (0 = background, then 1..=n in raster order).
pub fn label_components(mask: &[bool], width: usize, height: usize) -> (Vec<u32>, usize) {
    let mut labels = vec![0u32; mask.len()];
    let mut n = 0u32;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        n += 1;
        labels[start] = n;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % width) as isize, (i / width) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (xx, yy) = (x + dx, y + dy);
                    if xx < 0 || yy < 0 || xx >= width as isize || yy >= height as isize {
                        continue;
                    }
                    let j = yy as usize * width + xx as usize;
                    if mask[j] && labels[j] == 0 {
                        labels[j] = n;
                        stack.push(j);
                    }
                }
            }
        }
    }
    (labels, n as usize)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub detected: usize,
    pub missed: usize,
    pub false_alarms: usize,
    pub hits: Vec<bool>,
    pub components: usize,
}

/// Target-level scoring. A target is detected when any mask component touches
/// its box grown by `margin`; components touching no grown box are false alarms.
pub fn score(mask: &DetectionMask, truth: &TruthMask, margin: usize) -> Result<DetectionReport> {
    if mask.width != truth.width || mask.height != truth.height {
        return invalid(format!(
            "mask {}x{} and truth {}x{} differ in size",
            mask.width, mask.height, truth.width, truth.height
        ));
    }
    let (w, h) = (mask.width, mask.height);
    let (labels, n) = label_components(&mask.data, w, h);
    let mut touched = vec![false; n + 1];
    let mut hits = Vec::with_capacity(truth.boxes.len());
    for b in &truth.boxes {
        let RegionBox { x, y, w: bw, h: bh } = b.padded(margin, w, h);
        let mut hit = false;
        for yy in y..y + bh {
            for &l in &labels[yy * w + x..yy * w + x + bw] {
                if l != 0 {
                    touched[l as usize] = true;
                    hit = true;
                }
            }
        }
        hits.push(hit);
    }
    let detected = hits.iter().filter(|&&h| h).count();
    Ok(DetectionReport {
        detected,
        missed: hits.len() - detected,
        false_alarms: touched[1..].iter().filter(|&&t| !t).count(),
        hits,
        components: n,
    })
}
