use approx::assert_relative_eq;
use num_complex::Complex64 as C64;
use polship::decomposition::*;
use polship::polarimetry::{coherency_from_covariance, lex_vector, Mat3, ScatteringMatrix};
use polship::Error;
use proptest::prelude::*;

fn r(v: f64) -> C64 {
    C64::new(v, 0.0)
}

fn single(hh: f64, vv: f64) -> Mat3 {
    Mat3::outer(&lex_vector(&ScatteringMatrix::new(r(hh), r(0.0), r(vv))))
}

fn helix_model() -> Mat3 {
    let s2 = std::f64::consts::SQRT_2;
    let j = |v: f64| C64::new(0.0, v);
    Mat3([[r(1.0), j(s2), r(-1.0)], [j(-s2), r(2.0), j(s2)], [r(-1.0), j(-s2), r(1.0)]]) * 0.25
}

fn assert_powers(p: FourComponentPowers, want: [f64; 4]) {
    for (got, w) in [p.p_s, p.p_d, p.p_v, p.p_h].into_iter().zip(want) {
        assert!((got - w).abs() <= 1e-9, "{p:?} vs {want:?}");
    }
}

#[test]
fn pure_models_come_back() {
    let surf = Mat3([[r(0.25), r(0.0), r(0.5)], [r(0.0); 3], [r(0.5), r(0.0), r(1.0)]]);
    assert_powers(yamaguchi4(&surf).unwrap(), [1.25, 0.0, 0.0, 0.0]);
    let vol = Mat3([[r(3.0), r(0.0), r(1.0)], [r(0.0), r(2.0), r(0.0)], [r(1.0), r(0.0), r(3.0)]]) * 0.125;
    assert_powers(yamaguchi4(&vol).unwrap(), [0.0, 0.0, 1.0, 0.0]);
    assert_powers(yamaguchi4(&helix_model()).unwrap(), [0.0, 0.0, 0.0, 1.0]);
    assert_powers(yamaguchi4(&(helix_model() * 3.0)).unwrap(), [0.0, 0.0, 0.0, 3.0]);
    // ideal dihedral (α = -1) is all double bounce
    assert_powers(yamaguchi4(&single(1.0, -1.0)).unwrap(), [0.0, 2.0, 0.0, 0.0]);
    assert_powers(yamaguchi4(&single(1.0, 1.0)).unwrap(), [2.0, 0.0, 0.0, 0.0]);
}

#[test]
fn volume_branches_follow_copol_ratio() {
    assert_eq!(volume_model(-3.0), [8.0 / 15.0, 4.0 / 15.0, 3.0 / 15.0, 2.0 / 15.0]);
    assert_eq!(volume_model(0.0), [3.0 / 8.0, 2.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0]);
    assert_eq!(volume_model(3.0), [3.0 / 15.0, 4.0 / 15.0, 8.0 / 15.0, 2.0 / 15.0]);
    assert_eq!(volume_model(2.0), volume_model(-2.0));
}

#[test]
fn helix_power_examples() {
    assert_eq!(helix_power(&Mat3::from_real_diag([1.0, 0.2, 0.8])), 0.0);
    let mut c = Mat3::identity();
    c.0[0][1] = C64::new(0.0, 0.1);
    c.0[1][2] = C64::new(0.0, 0.2);
    assert_relative_eq!(helix_power(&c), 0.6, epsilon = 1e-15);
    c.0[1][2] = C64::new(0.0, -0.1);
    assert_eq!(helix_power(&c), 0.0);
    // the opposite handedness counts the same
    assert_eq!(helix_power(&helix_model().conj()), helix_power(&helix_model()));
}

trait Conj {
    fn conj(&self) -> Mat3;
}

impl Conj for Mat3 {
    fn conj(&self) -> Mat3 {
        Mat3(self.0.map(|row| row.map(|z| z.conj())))
    }
}

#[test]
fn rejects_non_psd_and_non_finite() {
    assert!(matches!(yamaguchi4(&Mat3::from_real_diag([1.0, -0.5, 1.0])), Err(Error::InvalidArgument(_))));
    assert!(yamaguchi4(&Mat3::from_real_diag([f64::NAN, 0.0, 1.0])).is_err());
    assert_eq!(yamaguchi4(&Mat3::ZERO).unwrap(), FourComponentPowers::default());
}

/// `sin(x)/x = r` by Newton from the first zero downwards.
fn sinc_root(ratio: f64) -> f64 {
    let mut x: f64 = 2.0;
    for _ in 0..60 {
        let f = x.sin() / x - ratio;
        let d = (x * x.cos() - x.sin()) / (x * x);
        x -= f / d;
    }
    x
}

#[test]
fn beta1_examples() {
    let t = |t22: f64, t33: f64| Mat3::from_real_diag([1.0, t22, t33]);
    assert_eq!(surface_roughness_beta1(&t(0.4, 0.0)).unwrap(), 0.0);
    assert_relative_eq!(surface_roughness_beta1(&t(0.3, 0.3)).unwrap(), 45.0, epsilon = 1e-9);
    let want = sinc_root(0.5) / 4.0;
    assert_relative_eq!(want, 1.8955 / 4.0, epsilon = 1e-4);
    let got = surface_roughness_beta1(&t(0.75, 0.25)).unwrap();
    assert_relative_eq!(got, want.to_degrees(), epsilon = 1e-8);
    assert_relative_eq!(got, 27.15, epsilon = 0.01);
    assert!(matches!(surface_roughness_beta1(&t(0.0, 0.0)), Err(Error::UndefinedRoughness)));
}

#[test]
fn rs_examples() {
    assert_relative_eq!(surface_similarity_rs(&single(1.0, 1.0)).unwrap(), 1.0, epsilon = 1e-15);
    assert_relative_eq!(surface_similarity_rs(&single(1.0, -1.0)).unwrap(), 0.0, epsilon = 1e-15);
    assert_relative_eq!(surface_similarity_rs(&Mat3::identity()).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
    assert!(surface_similarity_rs(&Mat3::ZERO).is_err());
    assert_eq!(surface_similarity_or_zero(&Mat3::ZERO), 0.0);
}

#[test]
fn smooth_sea_has_small_beta1() {
    // Bragg-like sea: strongly correlated co-pol channels
    let c = Mat3([[r(1.0), r(0.0), r(0.9)], [r(0.0), r(0.02), r(0.0)], [r(0.9), r(0.0), r(1.2)]]);
    let b = surface_roughness_beta1(&coherency_from_covariance(&c)).unwrap();
    assert!(b > 0.0 && b < 45.0);
}

fn arb_c() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn arb_psd() -> impl Strategy<Value = Mat3> {
    (prop::collection::vec([arb_c(), arb_c(), arb_c()], 1..5), 0.0..0.5f64).prop_map(|(vs, d)| {
        let mut c = Mat3::from_real_diag([d, d * 0.3, d * 0.7]);
        for v in vs {
            c += Mat3::outer(&v);
        }
        c
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn powers_balance_and_stay_non_negative(c in arb_psd()) {
        let p = yamaguchi4(&c).unwrap();
        prop_assert!(p.p_s >= 0.0 && p.p_d >= 0.0 && p.p_v >= 0.0 && p.p_h >= 0.0);
        prop_assert!((p.total() - c.trace()).abs() <= 1e-6 * c.trace());
    }

    #[test]
    fn reflection_symmetry_kills_helix(c in arb_psd()) {
        let mut c = c;
        for (a, b) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
            c.0[a][b] = r(0.0);
        }
        prop_assert_eq!(yamaguchi4(&c).unwrap().p_h, 0.0);
    }

    #[test]
    fn beta1_decreases_with_ratio(a in 0.0..1.0f64, b in 0.0..1.0f64) {
        prop_assume!((a - b).abs() > 1e-6);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(beta1_from_ratio(hi) < beta1_from_ratio(lo));
        let x = beta1_from_ratio(lo);
        prop_assert!((0.0..=45.0).contains(&x));
    }

    #[test]
    fn rs_is_a_fraction(c in arb_psd()) {
        let v = surface_similarity_rs(&c).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn scaling_scales_every_power(c in arb_psd(), k in 0.01..100.0f64) {
        let a = yamaguchi4(&c).unwrap();
        let b = yamaguchi4(&(c * k)).unwrap();
        for (x, y) in [(a.p_s, b.p_s), (a.p_d, b.p_d), (a.p_v, b.p_v), (a.p_h, b.p_h)] {
            prop_assert!((x * k - y).abs() <= 1e-9 * c.trace() * k);
        }
    }
}
