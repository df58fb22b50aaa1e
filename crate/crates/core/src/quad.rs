//! Quadrature building blocks: Gauss–Legendre rules, adaptive Gauss–Kronrod
//! on intervals, and adaptive collapsed-Gauss integration over triangles.

use std::collections::HashMap;
use std::sync::{LazyLock, Mutex};

use crate::error::{Error, Result};
use crate::geometry::Point2;

type Rule = &'static [(f64, f64)];

static GL_CACHE: LazyLock<Mutex<HashMap<usize, Rule>>> = LazyLock::new(|| Mutex::new(HashMap::new()));

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    assert!(n >= 1);
    let mut cache = GL_CACHE.lock().expect("gauss-legendre cache poisoned");
    if let Some(rule) = cache.get(&n) {
        return rule;
    }
    let rule: &'static [(f64, f64)] = Box::leak(compute_gauss_legendre(n).into_boxed_slice());
    cache.insert(n, rule);
    rule
}

fn compute_gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        out[n / 2].0 = 0.0;
    }
    out
}

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GAUSS7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * KRONROD_WEIGHTS[7];
    let mut gauss = fc * GAUSS7_WEIGHTS[3];
    for i in 0..7 {
        let x = h * KRONROD_NODES[i];
        let s = f(c - x) + f(c + x);
        kronrod += KRONROD_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += GAUSS7_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over [a, b] to absolute tolerance `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    const MAX_INTERVALS: usize = 4000;
    let mut evaluations = 15;
    let (v, e) = gk15(&mut f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > tol {
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::Accuracy {
                achieved: err,
                target: tol,
            });
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, pv, pe) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval can no longer be split in floating point.
            return Err(Error::Accuracy {
                achieved: err,
                target: tol,
            });
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evaluations += 30;
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
        if err <= tol {
            // Recompute from scratch to shed accumulated rounding in the running sums.
            total = pieces.iter().map(|p| p.2).sum();
            err = pieces.iter().map(|p| p.3).sum();
        }
    }
    Ok(QuadResult {
        value: total,
        error: err,
        evaluations,
    })
}

/// Collapsed (Duffy) Gauss rule on a triangle: points and weights including the area factor.
pub fn triangle_rule(a: Point2, b: Point2, c: Point2, order: usize) -> Vec<(Point2, f64)> {
    let gl = gauss_legendre(order);
    let area2 = ((b - a).perp(&(c - a))).abs();
    let mut out = Vec::with_capacity(order * order);
    for &(xu, wu) in gl {
        let u = 0.5 * (xu + 1.0);
        for &(xv, wv) in gl {
            let v = 0.5 * (xv + 1.0);
            // (u, v) in unit square -> barycentric (1-u, u(1-v), uv)
            let p = a + (b - a) * (u * (1.0 - v)) + (c - a) * (u * v);
            let w = 0.25 * wu * wv * u * area2;
            out.push((p, w));
        }
    }
    out
}

fn apply_rule<F: FnMut(Point2) -> f64>(f: &mut F, tri: &[Point2; 3], order: usize) -> f64 {
    triangle_rule(tri[0], tri[1], tri[2], order)
        .into_iter()
        .map(|(p, w)| w * f(p))
        .sum()
}

fn split4(t: &[Point2; 3]) -> [[Point2; 3]; 4] {
    let ab = (t[0] + t[1].coords) * 0.5;
    let bc = (t[1] + t[2].coords) * 0.5;
    let ca = (t[2] + t[0].coords) * 0.5;
    [[t[0], ab, ca], [ab, t[1], bc], [ca, bc, t[2]], [ab, bc, ca]]
}

/// Adaptive integration of `f` over a triangle to absolute tolerance `tol`.
///
/// Each panel is compared with the sum over its four midpoint children; panels
/// whose discrepancy exceeds their share of the tolerance are refined.
pub fn integrate_triangle<F: FnMut(Point2) -> f64>(mut f: F, tri: [Point2; 3], tol: f64, order: usize) -> Result<QuadResult> {
    const MAX_PANELS: usize = 20_000;
    let per_rule = order * order;
    let coarse = apply_rule(&mut f, &tri, order);
    let mut evaluations = per_rule;
    let mut stack = vec![(tri, coarse, 0usize)];
    let mut value = 0.0;
    let mut error = 0.0;
    let mut panels = 0;
    let total_area = ((tri[1] - tri[0]).perp(&(tri[2] - tri[0]))).abs();
    while let Some((t, est, depth)) = stack.pop() {
        panels += 1;
        let children = split4(&t);
        let vals: Vec<f64> = children.iter().map(|c| apply_rule(&mut f, c, order)).collect();
        evaluations += 4 * per_rule;
        let fine: f64 = vals.iter().sum();
        let diff = (fine - est).abs();
        let area = ((t[1] - t[0]).perp(&(t[2] - t[0]))).abs();
        let share = tol * (area / total_area).max(1e-6);
        if diff <= share || depth >= 30 || panels >= MAX_PANELS {
            if diff > share && (panels >= MAX_PANELS) {
                return Err(Error::Accuracy {
                    achieved: error + diff,
                    target: tol,
                });
            }
            value += fine;
            error += diff;
        } else {
            for (c, v) in children.into_iter().zip(vals) {
                stack.push((c, v, depth + 1));
            }
        }
    }
    Ok(QuadResult { value, error, evaluations })
}
