//! Adaptive Gauss–Kronrod (7/15-point) quadrature.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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
    0.209_482_141_084_727_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 100_000;
const ROUNDOFF: f64 = 50.0 * f64::EPSILON;

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn piece(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Result<Piece> {
    let (value, err) = kronrod(f, a, b);
    if !value.is_finite() {
        return Err(Error::Numeric(format!("integrand not finite on [{a}, {b}]")));
    }
    Ok(Piece { a, b, value, err })
}

/// `∫_a^b f` to absolute tolerance `tol`.
///
/// Globally adaptive: the piece with the largest error estimate is bisected
/// until the summed estimates drop below `tol`, or below the round-off
/// floor `ROUNDOFF·Σ|piece|` when the integral is too large for `tol` to be
/// meaningful in f64.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    let first = piece(&f, a, b)?;
    let mut err = first.err;
    let mut magnitude = first.value.abs();
    heap.push(first);
    loop {
        if err <= tol.max(ROUNDOFF * magnitude) {
            // the running sums drift by cancellation; confirm with fresh ones
            err = heap.iter().map(|p| p.err).sum();
            magnitude = heap.iter().map(|p| p.value.abs()).sum();
            if err <= tol.max(ROUNDOFF * magnitude) {
                break;
            }
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Numeric(format!(
                "quadrature did not reach tolerance {tol:e} on [{a}, {b}] (error estimate {err:e})"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot split further at f64 resolution
            err -= worst.err;
            heap.push(Piece { err: 0.0, ..worst });
            continue;
        }
        let (l, r) = (piece(&f, worst.a, mid)?, piece(&f, mid, worst.b)?);
        err += l.err + r.err - worst.err;
        magnitude += l.value.abs() + r.value.abs() - worst.value.abs();
        heap.push(l);
        heap.push(r);
    }
    // summing smallest first keeps round-off down
    let mut values: Vec<f64> = heap.into_iter().map(|p| p.value).collect();
    values.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    Ok(values.iter().sum())
}
