use clap::{Args, Parser, Subcommand};
use polship::anisotropy::dop_extrema;
use polship::cfar::{cfar_detect, normalized_positive, score, CfarConfig};
use polship::decomposition::yamaguchi4_unchecked;
use polship::detectors::{detector_maps, scr, DetectorKind, DetectorMap, RegionBox, RingParams};
use polship::ggd::{fit_molc, fit_molc_truncated, kl_symmetric, percentile, Histogram};
use polship::io;
use polship::pipeline::{self, Input, PipelineConfig};
use polship::polarimetry::{covariance_field, kennaugh_from_covariance, pauli_rgb, PolImage};
use polship::simulator::{reference_scene, simulate_scene, SceneSpec, TruthMask};
use polship::Error;
use rayon::prelude::*;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Quad-pol SAR ship detection toolkit.
#[derive(Parser)]
#[command(name = "polship", version)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene.
    Simulate(SimulateArgs),
    /// Boxcar covariance matrices as a 9-band raster.
    Covariance(WindowArgs),
    /// Four-component powers as a 4-band raster (ps, pd, pv, ph).
    Decompose(WindowArgs),
    /// DoP extrema and ΔSn as a 3-band raster.
    Anisotropy(WindowArgs),
    /// Detector map as a single-band raster.
    Detector(DetectorArgs),
    /// Fit the GΓD to a map and report the fit quality.
    Fit(FitArgs),
    /// Threshold a map at a false-alarm rate.
    Cfar(CfarArgs),
    /// Full pipeline: detector map, fit, threshold, mask and score.
    Eval(EvalArgs),
    /// Signal-to-clutter ratios of target boxes.
    Scr(ScrArgs),
    /// Render a map, mask or image to PGM/PPM.
    Render(RenderArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scene spec JSON.
    #[arg(long, conflicts_with = "reference", required_unless_present = "reference")]
    spec: Option<PathBuf>,
    /// Use the built-in reference scene.
    #[arg(long)]
    reference: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Output QPI image.
    #[arg(long)]
    out: PathBuf,
    /// Output truth mask (PGM).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Also write the effective scene spec as JSON.
    #[arg(long)]
    write_spec: Option<PathBuf>,
}

#[derive(Args)]
struct WindowArgs {
    /// Input QPI image.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Output raster (sidecar written to <out>.json).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RingArgs {
    /// Inner Chebyshev radius of the background ring (defaults to the window).
    #[arg(long)]
    ring_inner: Option<usize>,
    /// Outer Chebyshev radius of the background ring (defaults to twice the window).
    #[arg(long)]
    ring_outer: Option<usize>,
}

impl RingArgs {
    fn params(&self, window: usize) -> RingParams {
        let d = RingParams::for_window(window);
        RingParams { inner: self.ring_inner.unwrap_or(d.inner), outer: self.ring_outer.unwrap_or(d.outer) }
    }
}

#[derive(Args)]
struct DetectorArgs {
    #[command(flatten)]
    base: WindowArgs,
    #[arg(long, default_value = "joint-sa")]
    detector: DetectorKind,
    #[command(flatten)]
    ring: RingArgs,
}

#[derive(Args)]
struct GuardArgs {
    /// Percentile above which values are left out of the fit.
    #[arg(long, default_value_t = 99.9)]
    guard_pct: f64,
    /// Fit on all pixels.
    #[arg(long)]
    no_guard: bool,
    /// Border excluded from fitting and detection (defaults to half the map's window).
    #[arg(long)]
    border: Option<usize>,
}

impl GuardArgs {
    fn guard(&self) -> Option<f64> {
        (!self.no_guard).then_some(self.guard_pct)
    }

    fn border(&self, map: &DetectorMap) -> usize {
        self.border.unwrap_or(map.window / 2)
    }
}

#[derive(Args)]
struct FitArgs {
    /// Input map raster.
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    guard: GuardArgs,
    #[arg(long, default_value_t = 200)]
    bins: usize,
    /// Fit JSON (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Histogram CSV.
    #[arg(long)]
    histogram: Option<PathBuf>,
}

#[derive(Args)]
struct CfarArgs {
    /// Input map raster.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 1e-5)]
    pfa: f64,
    #[command(flatten)]
    guard: GuardArgs,
    /// Output mask (PGM).
    #[arg(long)]
    out: PathBuf,
    /// Report JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Truth mask (PGM) for target-level scoring.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Scoring margin around truth boxes (defaults to half the map's window).
    #[arg(long)]
    margin: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// Input QPI image.
    #[arg(long = "in", conflicts_with = "spec", required_unless_present = "spec")]
    input: Option<PathBuf>,
    /// Scene spec JSON, simulated on the fly.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Truth mask (PGM) for QPI inputs.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value = "joint-sa")]
    detector: DetectorKind,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[command(flatten)]
    ring: RingArgs,
    #[arg(long, default_value_t = 1e-5)]
    pfa: f64,
    #[arg(long, default_value_t = 99.9)]
    guard_pct: f64,
    #[arg(long)]
    no_guard: bool,
    #[arg(long)]
    margin: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScrArgs {
    /// Input map rasters; one CSV column each.
    #[arg(long = "in", required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Regions file: `name x,y,w,h x,y,w,h` per line.
    #[arg(long, conflicts_with_all = ["target", "clutter"])]
    regions: Option<PathBuf>,
    #[arg(long, requires = "clutter")]
    target: Option<RegionBox>,
    #[arg(long, requires = "target")]
    clutter: Option<RegionBox>,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    /// A map raster, a PGM mask, or a QPI image (rendered as Pauli RGB).
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Exit codes: 2 usage, 3 invalid argument, 4 I/O, 5 file format,
/// 6 fit failure or degenerate sample, 7 undefined value.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 3,
        Error::Io(_) => 4,
        Error::Format(_) | Error::Json(_) => 5,
        Error::FitFailure(_) | Error::DegenerateSample(_) => 6,
        Error::DegeneratePixel(_) | Error::UndefinedRoughness | Error::UndefinedScr => 7,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

type Result<T> = polship::Result<T>;

/// Writes every file only after all of them were produced.
fn write_all(files: Vec<(PathBuf, Vec<u8>)>) -> Result<()> {
    for (p, bytes) in files {
        fs::write(p, bytes)?;
    }
    Ok(())
}

fn raster_files(path: &Path, w: usize, h: usize, bands: &[(&str, &[f64])], window: Option<usize>) -> Result<Vec<(PathBuf, Vec<u8>)>> {
    let (bin, side) = io::raster_bytes(w, h, bands, window)?;
    Ok(vec![(path.to_path_buf(), bin), (io::sidecar_path(path), side)])
}

fn read_map(path: &Path) -> Result<DetectorMap> {
    io::read_raster(path)?.to_map()
}

fn read_truth(path: &Path, w: usize, h: usize) -> Result<TruthMask> {
    let (tw, th, data) = io::read_mask_pgm(path)?;
    if (tw, th) != (w, h) {
        return Err(Error::InvalidArgument(format!("truth {tw}x{th} does not match {w}x{h}")));
    }
    TruthMask::from_mask(tw, th, data)
}

fn to_json(v: &serde_json::Value) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => {
            let mut spec: SceneSpec = match &a.spec {
                Some(p) => io::read_json(p)?,
                None => reference_scene(),
            };
            if let Some(s) = a.seed {
                spec.seed = s;
            }
            let (img, truth) = simulate_scene(&spec)?;
            let mut files = vec![(a.out.clone(), io::qpi_bytes(&img))];
            if let Some(t) = &a.truth {
                files.push((t.clone(), io::pnm_bytes("P5", truth.width, truth.height, &io::render_mask(&truth.data))));
            }
            if let Some(p) = &a.write_spec {
                files.push((p.clone(), to_json(&serde_json::to_value(&spec)?)?));
            }
            write_all(files)
        }
        Command::Covariance(a) => {
            let img = io::read_qpi(&a.input)?;
            let c = covariance_field(&img, a.window)?;
            let get = |i: usize, j: usize, im: bool| -> Vec<f64> {
                c.data.iter().map(|m| if im { m.0[i][j].im } else { m.0[i][j].re }).collect()
            };
            let bands = [
                ("c11", get(0, 0, false)),
                ("c22", get(1, 1, false)),
                ("c33", get(2, 2, false)),
                ("c12_re", get(0, 1, false)),
                ("c12_im", get(0, 1, true)),
                ("c13_re", get(0, 2, false)),
                ("c13_im", get(0, 2, true)),
                ("c23_re", get(1, 2, false)),
                ("c23_im", get(1, 2, true)),
            ];
            let refs: Vec<(&str, &[f64])> = bands.iter().map(|(n, v)| (*n, v.as_slice())).collect();
            write_all(raster_files(&a.out, img.width, img.height, &refs, Some(a.window))?)
        }
        Command::Decompose(a) => {
            let img = io::read_qpi(&a.input)?;
            let c = covariance_field(&img, a.window)?;
            let p: Vec<_> = c.data.par_iter().map(yamaguchi4_unchecked).collect();
            let ps: Vec<f64> = p.iter().map(|q| q.p_s).collect();
            let pd: Vec<f64> = p.iter().map(|q| q.p_d).collect();
            let pv: Vec<f64> = p.iter().map(|q| q.p_v).collect();
            let ph: Vec<f64> = p.iter().map(|q| q.p_h).collect();
            let bands = [("ps", ps.as_slice()), ("pd", &pd), ("pv", &pv), ("ph", &ph)];
            write_all(raster_files(&a.out, img.width, img.height, &bands, Some(a.window))?)
        }
        Command::Anisotropy(a) => {
            let img = io::read_qpi(&a.input)?;
            let c = covariance_field(&img, a.window)?;
            let ext: Vec<Option<(f64, f64, f64)>> = c
                .data
                .par_iter()
                .map(|m| {
                    let e = dop_extrema(&kennaugh_from_covariance(m)).ok()?;
                    let sn = |x| polship::anisotropy::wave_entropy_normalized(x).ok();
                    Some((e.dop_min, e.dop_max, (sn(e.dop_min)? - sn(e.dop_max)?).max(0.0)))
                })
                .collect();
            let pick = |f: fn(&(f64, f64, f64)) -> f64| -> Vec<f64> { ext.iter().map(|e| e.as_ref().map_or(0.0, f)).collect() };
            let (lo, hi, ds) = (pick(|e| e.0), pick(|e| e.1), pick(|e| e.2));
            let bands = [("dop_min", lo.as_slice()), ("dop_max", &hi), ("delta_s", &ds)];
            write_all(raster_files(&a.out, img.width, img.height, &bands, Some(a.window))?)
        }
        Command::Detector(a) => {
            let img = io::read_qpi(&a.base.input)?;
            let map = detector_maps(&img, a.base.window, a.ring.params(a.base.window), &[a.detector])?.remove(0);
            write_all(raster_files(&a.base.out, map.width, map.height, &[(&map.detector, &map.data)], Some(map.window))?)
        }
        Command::Fit(a) => {
            let map = read_map(&a.input)?;
            let (_, pos) = normalized_positive(&map, a.guard.border(&map))?;
            if pos.is_empty() {
                return Err(Error::DegenerateSample("map has no positive values".into()));
            }
            let params = match a.guard.guard() {
                Some(g) if g < 100.0 => {
                    let cut = percentile(&pos, g)?;
                    let kept: Vec<f64> = pos.iter().copied().filter(|&v| v <= cut).collect();
                    let keep = kept.len() as f64 / pos.len() as f64;
                    fit_molc_truncated(&kept, keep)?
                }
                _ => fit_molc(&pos)?,
            };
            let hist = Histogram::new(&pos, a.bins, percentile(&pos, 99.95)?)?;
            let kl = kl_symmetric(&hist, &params)?;
            let report = serde_json::json!({
                "nu": params.nu,
                "kappa": params.kappa,
                "sigma": params.sigma,
                "kl": kl,
                "n": pos.len(),
                "bins": a.bins,
            });
            let mut files = Vec::new();
            if let Some(h) = &a.histogram {
                files.push((h.clone(), io::histogram_csv(&hist, &params)?.into_bytes()));
            }
            match &a.out {
                Some(p) => files.push((p.clone(), to_json(&report)?)),
                None => println!("{}", serde_json::to_string_pretty(&report)?),
            }
            write_all(files)
        }
        Command::Cfar(a) => {
            let map = read_map(&a.input)?;
            let truth = a.truth.as_deref().map(|t| read_truth(t, map.width, map.height)).transpose()?;
            let cfg = CfarConfig { pfa: a.pfa, guard_pct: a.guard.guard(), border: a.guard.border(&map) };
            let mask = cfar_detect(&map, &cfg)?;
            let detection = truth.as_ref().map(|t| score(&mask, t, a.margin.unwrap_or(map.window / 2))).transpose()?;
            let mut files = vec![(a.out.clone(), io::pnm_bytes("P5", map.width, map.height, &io::render_mask(&mask.data)))];
            if let Some(r) = &a.report {
                let report = serde_json::json!({
                    "threshold": mask.threshold,
                    "mean": mask.mean,
                    "params": mask.params,
                    "pfa": mask.pfa,
                    "guard_pct": mask.guard_pct,
                    "border": mask.border,
                    "fit_samples": mask.fit_samples,
                    "kept_fraction": mask.kept_fraction,
                    "mask_pixels": mask.count(),
                    "detection": detection,
                });
                files.push((r.clone(), to_json(&report)?));
            }
            write_all(files)
        }
        Command::Eval(a) => {
            let input = match (a.input, a.spec) {
                (Some(p), _) => Input::Qpi(p),
                (None, Some(s)) => Input::Spec(s),
                (None, None) => unreachable!("clap requires one input"),
            };
            let mut cfg = PipelineConfig::new(input, a.detector, a.out);
            cfg.seed = a.seed;
            cfg.truth = a.truth;
            cfg.window = a.window;
            cfg.ring = Some(a.ring.params(a.window));
            cfg.pfa = a.pfa;
            cfg.guard_pct = (!a.no_guard).then_some(a.guard_pct);
            cfg.margin = a.margin;
            let report = pipeline::run_pipeline(&cfg)?;
            if let Some(d) = &report.detection {
                println!("detected {}/{} false alarms {}", d.detected, d.detected + d.missed, d.false_alarms);
            } else {
                println!("{} pixels flagged", report.mask_pixels);
            }
            Ok(())
        }
        Command::Scr(a) => {
            let maps = a.input.iter().map(|p| read_map(p)).collect::<Result<Vec<_>>>()?;
            let refs: Vec<&DetectorMap> = maps.iter().collect();
            let regions = match (&a.regions, a.target, a.clutter) {
                (Some(p), _, _) => io::parse_regions(&fs::read_to_string(p)?)?,
                (None, Some(t), Some(c)) => vec![io::NamedRegion { name: "target".into(), target: t, clutter: c }],
                _ => return Err(Error::InvalidArgument("give --regions or both --target and --clutter".into())),
            };
            // fail early on bad boxes so a CSV is never half written
            for r in &regions {
                for m in &refs {
                    scr(m, &r.target, &r.clutter)?;
                }
            }
            let csv = io::scr_csv(&refs, &regions)?;
            match a.out {
                Some(p) => write_all(vec![(p, csv.into_bytes())]),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
        Command::Render(a) => {
            let ext = a.input.extension().and_then(|e| e.to_str()).unwrap_or("");
            let bytes = match ext {
                "qpi" => {
                    let img: PolImage = io::read_qpi(&a.input)?;
                    io::pnm_bytes("P6", img.width, img.height, pauli_rgb(&img).as_flattened())
                }
                "pgm" => {
                    let (w, h, mask) = io::read_mask_pgm(&a.input)?;
                    io::pnm_bytes("P5", w, h, &io::render_mask(&mask))
                }
                _ => {
                    let map = read_map(&a.input)?;
                    io::pnm_bytes("P5", map.width, map.height, &io::render_map(&map))
                }
            };
            write_all(vec![(a.out, bytes)])
        }
    }
}
