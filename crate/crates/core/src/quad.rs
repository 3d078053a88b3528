//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use crate::{Error, Result};

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 60;

/// One G7/K15 panel: Kronrod estimate and `|K − G|`.
fn panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32, whole: (f64, f64)) -> Result<(f64, f64)> {
    let (value, err) = whole;
    if !(value.is_finite() && err.is_finite()) {
        return Err(Error::Quadrature { estimate: err, tol });
    }
    if err <= tol || depth >= MAX_DEPTH || (b - a).abs() <= f64::EPSILON * a.abs().max(b.abs()) {
        return Ok((value, err));
    }
    let m = 0.5 * (a + b);
    let left = recurse(f, a, m, 0.5 * tol, depth + 1, panel(f, a, m))?;
    let right = recurse(f, m, b, 0.5 * tol, depth + 1, panel(f, m, b))?;
    Ok((left.0 + right.0, left.1 + right.1))
}

/// `∫_a^b f` to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_with_breaks(f, &[a, b], tol)
}

/// Integrates over consecutive intervals `[p_0, p_1], [p_1, p_2], …`, so
/// known kinks should be listed as break points.
pub fn integrate_with_breaks(f: impl Fn(f64) -> f64, points: &[f64], tol: f64) -> Result<f64> {
    if points.len() < 2 || !(tol > 0.0) {
        return Err(Error::InvalidParameter("quadrature needs two points and a positive tolerance".into()));
    }
    let span: f64 = points.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    if span == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut estimate = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        let share = tol * (b - a).abs() / span;
        let (v, e) = recurse(&f, a, b, share, 0, panel(&f, a, b))?;
        total += v;
        estimate += e;
    }
    if !total.is_finite() || estimate > tol {
        return Err(Error::Quadrature { estimate, tol });
    }
    Ok(total)
}
