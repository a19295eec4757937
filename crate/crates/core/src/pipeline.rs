//! End-to-end detection: image → covariance → detector map → GΓD fit →
//! threshold → mask → target scoring, with the artifacts written together
//! once everything has been computed.

use crate::cfar::{cfar_detect, normalized_positive, score, CfarConfig, DetectionMask, DetectionReport};
use crate::detectors::{clutter_mask, detector_maps, scr_masked, DetectorKind, DetectorMap, RingParams};
use crate::error::{invalid, Result};
use crate::ggd::{kl_symmetric, GGammaParams, Histogram};
use crate::io;
use crate::polarimetry::PolImage;
use crate::simulator::{simulate_scene, SceneSpec, TruthMask};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Input {
    /// A QPI image file.
    Qpi(PathBuf),
    /// A scene spec JSON, simulated on the fly (ground truth included).
    Spec(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: Input,
    /// Replaces the seed of a scene spec.
    pub seed: Option<u64>,
    /// Truth mask PGM for QPI inputs.
    pub truth: Option<PathBuf>,
    pub detector: DetectorKind,
    pub window: usize,
    pub ring: Option<RingParams>,
    pub pfa: f64,
    pub guard_pct: Option<f64>,
    /// Scoring margin around truth boxes; half a window when unset.
    pub margin: Option<usize>,
    pub out_dir: PathBuf,
}

impl PipelineConfig {
    pub fn new(input: Input, detector: DetectorKind, out_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            input,
            seed: None,
            truth: None,
            detector,
            window: 5,
            ring: None,
            pfa: 1e-5,
            guard_pct: Some(99.9),
            margin: None,
            out_dir: out_dir.into(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.window == 0 || self.window % 2 == 0 {
            return invalid(format!("window must be a positive odd integer, got {}", self.window));
        }
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return invalid(format!("pfa must lie in (0,1), got {}", self.pfa));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub detector: DetectorKind,
    pub width: usize,
    pub height: usize,
    pub window: usize,
    pub ring: RingParams,
    pub pfa: f64,
    pub guard_pct: Option<f64>,
    pub border: usize,
    pub mean: f64,
    pub threshold: f64,
    pub params: Option<GGammaParams>,
    pub kl: Option<f64>,
    pub fit_samples: usize,
    pub kept_fraction: f64,
    pub degenerate_pixels: usize,
    pub mask_pixels: usize,
    pub margin: usize,
    pub detection: Option<DetectionReport>,
    /// Per-target SCR in dB against open water; `None` where the target mean is 0.
    pub target_scr_db: Option<Vec<Option<f64>>>,
}

/// Everything the pipeline produces, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub map: DetectorMap,
    pub mask: DetectionMask,
    pub report: PipelineReport,
    pub histogram: Option<Histogram>,
}

pub const MAP_FILE: &str = "map.bin";
pub const MASK_FILE: &str = "mask.pgm";
pub const REPORT_FILE: &str = "report.json";
pub const HISTOGRAM_FILE: &str = "histogram.csv";

pub fn load_input(cfg: &PipelineConfig) -> Result<(PolImage, Option<TruthMask>)> {
    match &cfg.input {
        Input::Qpi(path) => {
            let img = io::read_qpi(path)?;
            let truth = match &cfg.truth {
                Some(t) => {
                    let (w, h, data) = io::read_mask_pgm(t)?;
                    if (w, h) != (img.width, img.height) {
                        return invalid(format!("truth {w}x{h} does not match image {}x{}", img.width, img.height));
                    }
                    Some(TruthMask::from_mask(w, h, data)?)
                }
                None => None,
            };
            Ok((img, truth))
        }
        Input::Spec(path) => {
            let mut spec: SceneSpec = io::read_json(path)?;
            if let Some(s) = cfg.seed {
                spec.seed = s;
            }
            let (img, truth) = simulate_scene(&spec)?;
            Ok((img, Some(truth)))
        }
    }
}

/// Runs detection on an image already in memory.
pub fn run_on_image(img: &PolImage, truth: Option<&TruthMask>, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.check()?;
    let ring = cfg.ring.unwrap_or(RingParams::for_window(cfg.window));
    let map = detector_maps(img, cfg.window, ring, &[cfg.detector])?.remove(0);
    let ccfg = CfarConfig { pfa: cfg.pfa, guard_pct: cfg.guard_pct, border: cfg.window / 2 };
    let mask = cfar_detect(&map, &ccfg)?;

    let (histogram, kl) = match &mask.params {
        Some(p) => {
            let (_, pos) = normalized_positive(&map, ccfg.border)?;
            let h = Histogram::standard(&pos)?;
            let kl = kl_symmetric(&h, p)?;
            (Some(h), Some(kl))
        }
        None => (None, None),
    };
    let margin = cfg.margin.unwrap_or(cfg.window / 2);
    let (detection, target_scr_db) = match truth {
        Some(t) => {
            let det = score(&mask, t, margin)?;
            let water = clutter_mask(t.width, t.height, &t.boxes, 3 * cfg.window, ccfg.border);
            let scrs = t
                .boxes
                .iter()
                .map(|b| Ok(Some(scr_masked(&map, b, &water)?).filter(|v| v.is_finite())))
                .collect::<Result<Vec<_>>>()?;
            (Some(det), Some(scrs))
        }
        None => (None, None),
    };
    let report = PipelineReport {
        detector: cfg.detector,
        width: img.width,
        height: img.height,
        window: cfg.window,
        ring,
        pfa: cfg.pfa,
        guard_pct: cfg.guard_pct,
        border: ccfg.border,
        mean: mask.mean,
        threshold: mask.threshold,
        params: mask.params,
        kl,
        fit_samples: mask.fit_samples,
        kept_fraction: mask.kept_fraction,
        degenerate_pixels: map.degenerate,
        mask_pixels: mask.count(),
        margin,
        detection,
        target_scr_db,
    };
    Ok(PipelineOutput { map, mask, report, histogram })
}

/// Serialized artifacts as `(file name, bytes)`.
pub fn artifact_bytes(out: &PipelineOutput) -> Result<Vec<(String, Vec<u8>)>> {
    let m = &out.map;
    let (bin, side) = io::raster_bytes(m.width, m.height, &[(&m.detector, &m.data)], Some(m.window))?;
    let mut files = vec![
        (MAP_FILE.to_string(), bin),
        (format!("{MAP_FILE}.json"), side),
        (MASK_FILE.to_string(), io::pnm_bytes("P5", m.width, m.height, &io::render_mask(&out.mask.data))),
    ];
    let mut report = serde_json::to_vec_pretty(&out.report)?;
    report.push(b'\n');
    files.push((REPORT_FILE.to_string(), report));
    if let (Some(h), Some(p)) = (&out.histogram, &out.report.params) {
        files.push((HISTOGRAM_FILE.to_string(), io::histogram_csv(h, p)?.into_bytes()));
    }
    Ok(files)
}

pub fn write_artifacts(out: &PipelineOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    let files = artifact_bytes(out)?;
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let p = dir.join(name);
        fs::write(&p, bytes)?;
        paths.push(p);
    }
    Ok(paths)
}

/// Reads the input, runs the detector and writes map, mask, report and
/// histogram into `cfg.out_dir`. Nothing is written if any step fails.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    cfg.check()?;
    let (img, truth) = load_input(cfg)?;
    let out = run_on_image(&img, truth.as_ref(), cfg)?;
    write_artifacts(&out, &cfg.out_dir)?;
    Ok(out.report)
}
