//! Adaptive Gauss-Kronrod (7/15) for a 4-vector integrand.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

type V4 = [f64; 4];

fn add(a: V4, b: V4) -> V4 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn gk15(f: &impl Fn(f64) -> V4, a: f64, b: f64) -> (V4, V4) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc.map(|v| v * WGK[7]);
    let mut g = fc.map(|v| v * WG[3]);
    for j in 0..7 {
        let x = h * XGK[j];
        let s = add(f(c - x), f(c + x));
        k = add(k, s.map(|v| v * WGK[j]));
        if j % 2 == 1 {
            g = add(g, s.map(|v| v * WG[j / 2]));
        }
    }
    let k = k.map(|v| v * h);
    let err = [0, 1, 2, 3].map(|i| (k[i] - g[i] * h).abs());
    (k, err)
}

/// Integrates `f` over `[a, b]` until the Kronrod-Gauss difference of every
/// component falls below `rel` times the running magnitude of the integral.
pub(crate) fn integrate4(f: impl Fn(f64) -> V4, a: f64, b: f64, rel: f64) -> V4 {
    let mut pending = vec![(a, b)];
    let mut total = [0.0; 4];
    // per-component magnitude from a coarse pass over |f|
    let abs_f = |x: f64| f(x).map(f64::abs);
    let mut scale = [0.0; 4];
    for i in 0..64 {
        let lo = a + (b - a) * i as f64 / 64.0;
        let hi = a + (b - a) * (i + 1) as f64 / 64.0;
        scale = add(scale, gk15(&abs_f, lo, hi).0);
    }
    let scale = scale.map(|v| v.max(f64::MIN_POSITIVE));
    let mut budget = 20_000;
    while let Some((lo, hi)) = pending.pop() {
        let (v, err) = gk15(&f, lo, hi);
        budget -= 1;
        let width_share = (hi - lo) / (b - a);
        let share = width_share.max(1e-6);
        let converged = (0..4).all(|i| err[i] <= rel * scale[i] * share);
        if converged || budget <= 0 || hi - lo < 1e-12 * (b - a) {
            total = add(total, v);
        } else {
            let m = 0.5 * (lo + hi);
            pending.push((m, hi));
            pending.push((lo, m));
        }
    }
    total
}
