use num_complex::Complex64 as C64;
use polship::decomposition::yamaguchi4;
use polship::detectors::RegionBox;
use polship::polarimetry::{lex_vector, span, Mat3, PolImage};
use polship::simulator::*;
use proptest::prelude::*;

fn sea(rho: C64, xfrac: f64) -> SeaModel {
    SeaModel { copol_power: 1.0, copol_ratio_db: 0.0, rho, cross_pol_fraction: xfrac, texture: None }
}

fn scene(n: usize, sea: SeaModel, ships: Vec<ShipSpec>, seed: u64) -> SceneSpec {
    SceneSpec { width: n, height: n, sea, ships, seed }
}

fn ship(c: usize, e: usize, m: f64, weights: [f64; 4], mode: ShipMode) -> ShipSpec {
    ShipSpec { center: [c, c], extent: [e, e], multiplier: m, weights, mode }
}

/// Sample covariance over a box.
fn box_covariance(img: &PolImage, b: &RegionBox) -> Mat3 {
    let mut c = Mat3::ZERO;
    for y in b.y..b.y + b.h {
        for x in b.x..b.x + b.w {
            c += Mat3::outer(&lex_vector(img.get(x, y)));
        }
    }
    c * (1.0 / (b.w * b.h) as f64)
}

#[test]
fn sea_covariance_limits() {
    let c = sea_covariance(&sea(C64::new(0.9999999, 0.0), 0.0)).unwrap();
    let e = c.eigenvalues();
    assert!(e[1].abs() <= 1e-6 * c.trace() && e[2].abs() <= 1e-6 * c.trace());

    let c = sea_covariance(&sea(C64::new(0.0, 0.0), 0.02)).unwrap();
    assert_eq!(c, Mat3::from_real_diag([1.0, 0.02, 1.0]));

    for rho in [C64::new(1.0, 0.0), C64::new(0.8, 0.6), C64::new(-1.2, 0.0)] {
        assert!(sea_covariance(&sea(rho, 0.01)).is_err(), "{rho}");
    }
    assert!(sea_covariance(&SeaModel { copol_power: 0.0, ..sea(C64::new(0.5, 0.0), 0.01) }).is_err());
}

#[test]
fn megapixel_sea_matches_its_covariance() {
    let model = SeaModel { copol_ratio_db: -2.0, ..sea(C64::new(0.7, 0.2), 0.05) };
    let (img, truth) = simulate_scene(&scene(1000, model, vec![], 8)).unwrap();
    assert!(truth.boxes.is_empty() && truth.data.iter().all(|t| !t));
    let got = box_covariance(&img, &RegionBox::new(0, 0, 1000, 1000));
    let want = sea_covariance(&model).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let scale = (want.0[i][i].re * want.0[j][j].re).sqrt();
            assert!((got.0[i][j] - want.0[i][j]).norm() <= 0.02 * scale, "C{i}{j} {} vs {}", got.0[i][j], want.0[i][j]);
        }
    }
}

#[test]
fn sea_is_reflection_symmetric() {
    let (img, _) = simulate_scene(&scene(256, reference_scene().sea, vec![], 5)).unwrap();
    let c = box_covariance(&img, &RegionBox::new(0, 0, 256, 256));
    let d = |i: usize| c.0[i][i].re;
    assert!(c.0[0][1].norm() <= 0.02 * (d(0) * d(1)).sqrt());
    assert!(c.0[1][2].norm() <= 0.02 * (d(1) * d(2)).sqrt());
    assert!(yamaguchi4(&c).unwrap().p_h <= 1e-3 * c.trace());
}

#[test]
fn helix_ship_stands_out_in_helix_power() {
    let spec = scene(64, sea(C64::new(0.9, 0.0), 0.02), vec![ship(32, 15, 100.0, [0.0, 0.0, 0.0, 1.0], ShipMode::Speckled)], 2);
    let (img, truth) = simulate_scene(&spec).unwrap();
    let on = yamaguchi4(&box_covariance(&img, &truth.boxes[0])).unwrap().p_h;
    let off = yamaguchi4(&box_covariance(&img, &RegionBox::new(0, 0, 64, 20))).unwrap().p_h;
    assert!(on > 100.0 * off.max(1e-300), "{on} vs {off}");
}

#[test]
fn coherent_ship_power_adds_up() {
    let model = sea(C64::new(0.9, 0.0), 0.02);
    let pc = sea_covariance(&model).unwrap().trace();
    let m = 50.0;
    let spec = scene(64, model, vec![ship(32, 21, m, [0.4, 0.3, 0.1, 0.2], ShipMode::Coherent)], 6);
    let (img, truth) = simulate_scene(&spec).unwrap();
    let b = truth.boxes[0];
    let mut s = 0.0;
    for y in b.y..b.y + b.h {
        for x in b.x..b.x + b.w {
            s += span(img.get(x, y));
        }
    }
    let mean = s / (b.w * b.h) as f64;
    assert!((mean / (pc * (1.0 + m)) - 1.0).abs() <= 0.05, "{mean} vs {}", pc * (1.0 + m));
}

#[test]
fn texture_keeps_unit_mean() {
    let model = reference_scene().sea;
    let pc = sea_covariance(&model).unwrap().trace();
    let (img, _) = simulate_scene(&scene(512, model, vec![], 10)).unwrap();
    let mean = img.data.iter().map(span).sum::<f64>() / img.data.len() as f64;
    assert!((mean / pc - 1.0).abs() <= 0.06, "{mean} vs {pc}");
}

#[test]
fn scenes_are_reproducible() {
    let spec = scene(48, reference_scene().sea, vec![ship(20, 9, 5.0, [0.5, 0.2, 0.1, 0.2], ShipMode::Speckled)], 77);
    let run = |t| rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap().install(|| simulate_scene(&spec).unwrap().0);
    let a = run(1);
    assert_eq!(a, run(4));
    assert_eq!(a, simulate_scene(&spec).unwrap().0);
    let other = simulate_scene(&SceneSpec { seed: 78, ..spec.clone() }).unwrap().0;
    assert_ne!(a, other);
}

#[test]
fn reference_scene_layout() {
    let s = reference_scene();
    assert_eq!((s.width, s.height, s.seed, s.ships.len()), (512, 512, 42, 7));
    let m: Vec<f64> = s.ships.iter().map(|s| s.multiplier).collect();
    let (lo, hi) = (m.iter().cloned().fold(f64::MAX, f64::min), m.iter().cloned().fold(0.0, f64::max));
    assert!(lo < hi / 10.0);
    let truth = TruthMask::from_boxes(512, 512, s.ships.iter().map(ShipSpec::region).collect()).unwrap();
    assert_eq!(truth.boxes.len(), 7);
    // no two hulls overlap
    let count = truth.data.iter().filter(|&&t| t).count();
    assert_eq!(count, s.ships.iter().map(|s| s.extent[0] * s.extent[1]).sum::<usize>());
}

#[test]
fn truth_from_mask_takes_bounding_boxes() {
    let mut d = vec![false; 100];
    for i in [11, 12, 22, 33, 77, 78, 87] {
        d[i] = true;
    }
    let t = TruthMask::from_mask(10, 10, d).unwrap();
    assert_eq!(t.boxes, vec![RegionBox::new(1, 1, 3, 3), RegionBox::new(7, 7, 2, 2)]);
    assert!(TruthMask::from_mask(10, 9, vec![false; 100]).is_err());
    assert!(TruthMask::from_boxes(10, 10, vec![RegionBox::new(8, 8, 3, 1)]).is_err());
}

#[test]
fn rejects_bad_ships() {
    let bad = |s: ShipSpec| simulate_scene(&scene(32, sea(C64::new(0.5, 0.0), 0.01), vec![s], 1)).is_err();
    assert!(bad(ship(16, 5, 2.0, [0.5, 0.5, 0.5, 0.0], ShipMode::Coherent)));
    assert!(bad(ship(16, 5, -1.0, [0.25; 4], ShipMode::Coherent)));
    assert!(bad(ship(16, 0, 1.0, [0.25; 4], ShipMode::Coherent)));
    assert!(bad(ship(30, 5, 1.0, [0.25; 4], ShipMode::Coherent)));
    assert!(simulate_scene(&scene(0, sea(C64::new(0.5, 0.0), 0.01), vec![], 1)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn sea_covariance_is_psd(p in 0.01..10.0f64, r_db in -6.0..6.0f64, mag in 0.0..0.999f64, ph in 0.0..std::f64::consts::TAU, x in 0.0..0.5f64) {
        let m = SeaModel { copol_power: p, copol_ratio_db: r_db, rho: C64::from_polar(mag, ph), cross_pol_fraction: x, texture: None };
        let c = sea_covariance(&m).unwrap();
        prop_assert!(c.min_eigenvalue() >= -1e-12 * c.trace());
        prop_assert_eq!(c.0[0][1], C64::new(0.0, 0.0));
        prop_assert_eq!(c.0[1][2], C64::new(0.0, 0.0));
    }
}
