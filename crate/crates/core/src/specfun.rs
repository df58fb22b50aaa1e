//! Real-argument special functions: gamma, Riemann/Hurwitz zeta, the Dirichlet
//! L-series of the non-principal character mod 3, and the upper incomplete
//! gamma function used as the Ewald splitting kernel.
//!
//! All routines are pure `f64` functions. Zeta-type functions are evaluated
//! with an Euler–Maclaurin expansion whose shift point and order are fixed
//! below; the derivative in `s` is obtained by differentiating the same
//! expansion term by term.

use std::f64::consts::PI;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Requested accuracy for series and shell sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionSpec {
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl PrecisionSpec {
    pub fn new(abs_tol: f64, max_terms: usize) -> Result<Self> {
        if !(abs_tol > 0.0) {
            return Err(Error::Invalid(format!("abs_tol must be positive, got {abs_tol}")));
        }
        if max_terms == 0 {
            return Err(Error::Invalid("max_terms must be at least 1".into()));
        }
        Ok(Self { abs_tol, max_terms })
    }
}

impl Default for PrecisionSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            max_terms: 10_000,
        }
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Bernoulli numbers B_2, B_4, ..., B_30.
const BERNOULLI_EVEN: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

/// B_{2j} / (2j)! for j = 1..=15.
static EM_COEF: LazyLock<[f64; 15]> = LazyLock::new(|| {
    let mut out = [0.0; 15];
    let mut fact = 1.0;
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let n = 2 * (j + 1);
        fact *= ((n - 1) * n) as f64;
        out[j] = b / fact;
    }
    out
});

/// Euler–Maclaurin shift: the first `EM_SHIFT` terms are summed explicitly.
const EM_SHIFT: usize = 8;

static EULER_GAMMA: LazyLock<f64> = LazyLock::new(|| {
    // H_n - ln n - 1/(2n) + sum_k B_2k / (2k n^2k), accurate to ~1e-19 at n = 10.
    let n = 10.0_f64;
    let harmonic: f64 = (1..=10).rev().map(|k| 1.0 / k as f64).sum();
    let mut corr = 0.0;
    for (k, b) in BERNOULLI_EVEN.iter().take(10).enumerate() {
        let two_k = 2.0 * (k + 1) as f64;
        corr += b / (two_k * n.powf(two_k));
    }
    harmonic - n.ln() - 0.5 / n + corr
});

/// The Euler–Mascheroni constant.
pub fn euler_gamma() -> f64 {
    *EULER_GAMMA
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// Lanczos sum for Γ(z + 1), z = x - 1 >= -0.5.
fn lanczos_sum(z: f64) -> f64 {
    let mut sum = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    sum
}

/// The gamma function Γ(x).
pub fn gamma(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::domain("gamma", "NaN argument"));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole { function: "gamma", at: x });
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        PI / ((PI * x).sin() * gamma_unchecked(1.0 - x))
    } else {
        let z = x - 1.0;
        let t = z + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z)
    }
}

/// ln Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("log_gamma", format!("requires x > 0, got {x}")));
    }
    Ok(log_gamma_unchecked(x))
}

fn log_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        (PI / (PI * x).sin()).ln() - log_gamma_unchecked(1.0 - x)
    } else {
        let z = x - 1.0;
        let t = z + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
    }
}

/// 1/Γ(x), an entire function (zero at the non-positive integers).
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        0.0
    } else {
        1.0 / gamma_unchecked(x)
    }
}

/// ζ(k) - 1 for k = 2..=64, used by `gamma1pm1`.
static ZETA_MINUS_ONE: LazyLock<Vec<f64>> = LazyLock::new(|| {
    (2..=64)
        .map(|k| {
            let (reg, _) = em_regular(k as f64, 2.0, false);
            reg + em_pole(k as f64, 2.0)
        })
        .collect()
});

/// Γ(1 + a) - 1 without cancellation, for |a| <= 0.5.
pub(crate) fn gamma1pm1(a: f64) -> f64 {
    debug_assert!(a.abs() <= 0.5 + 1e-12);
    // ln Γ(1+a) = -ln(1+a) + a(1 - γ) + Σ_{k>=2} (-1)^k (ζ(k) - 1) a^k / k
    let mut sum = 0.0;
    let mut pow = -a;
    for (i, zm1) in ZETA_MINUS_ONE.iter().enumerate() {
        let k = (i + 2) as f64;
        pow *= -a;
        let term = zm1 * pow / k;
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    let lg = -a.ln_1p() + a * (1.0 - euler_gamma()) + sum;
    lg.exp_m1()
}

/// Euler–Maclaurin value of ζ(s, a) minus the `(a+N)^{1-s}/(s-1)` pole term,
/// together with its s-derivative when `with_deriv` is set.
fn em_regular(s: f64, a: f64, with_deriv: bool) -> (f64, f64) {
    let mut value = 0.0;
    let mut deriv = 0.0;
    for k in 0..EM_SHIFT {
        let base = a + k as f64;
        let term = base.powf(-s);
        value += term;
        if with_deriv {
            deriv -= base.ln() * term;
        }
    }
    let big = a + EM_SHIFT as f64;
    let ln_big = big.ln();
    let end = big.powf(-s);
    value += 0.5 * end;
    if with_deriv {
        deriv -= 0.5 * ln_big * end;
    }

    // Rising factorial P_j = s (s+1) ... (s + 2j - 2) and its derivative.
    let mut p = s;
    let mut dp = 1.0;
    let mut power = big.powf(-s - 1.0);
    let inv_big2 = 1.0 / (big * big);
    for (j, c) in EM_COEF.iter().enumerate() {
        if j > 0 {
            let jj = j as f64;
            let q = (s + 2.0 * jj - 1.0) * (s + 2.0 * jj);
            let dq = 2.0 * s + 4.0 * jj - 1.0;
            dp = dp * q + p * dq;
            p *= q;
            power *= inv_big2;
        }
        let term = c * p * power;
        value += term;
        if with_deriv {
            deriv += c * (dp - p * ln_big) * power;
        }
        if p == 0.0 && dp == 0.0 {
            break;
        }
    }
    (value, deriv)
}

fn em_pole(s: f64, a: f64) -> f64 {
    let big = a + EM_SHIFT as f64;
    big.powf(1.0 - s) / (s - 1.0)
}

fn em_pole_deriv(s: f64, a: f64) -> f64 {
    let big = a + EM_SHIFT as f64;
    let pw = big.powf(1.0 - s);
    -big.ln() * pw / (s - 1.0) - pw / ((s - 1.0) * (s - 1.0))
}

/// Hurwitz zeta function ζ(s, a) = Σ_{k>=0} (k + a)^{-s}, analytically continued in s.
pub fn hurwitz_zeta(s: f64, a: f64) -> Result<f64> {
    check_hurwitz("hurwitz_zeta", s, a)?;
    let (reg, _) = em_regular(s, a, false);
    Ok(reg + em_pole(s, a))
}

/// ∂ζ(s, a)/∂s.
pub fn hurwitz_zeta_deriv(s: f64, a: f64) -> Result<f64> {
    check_hurwitz("hurwitz_zeta_deriv", s, a)?;
    let (_, d) = em_regular(s, a, true);
    Ok(d + em_pole_deriv(s, a))
}

fn check_hurwitz(function: &'static str, s: f64, a: f64) -> Result<()> {
    if s.is_nan() || a.is_nan() {
        return Err(Error::domain(function, "NaN argument"));
    }
    if s == 1.0 {
        return Err(Error::Pole { function, at: 1.0 });
    }
    if !(a > 0.0) {
        return Err(Error::domain(function, format!("requires a > 0, got {a}")));
    }
    Ok(())
}

/// Riemann zeta function ζ(s).
pub fn riemann_zeta(s: f64) -> Result<f64> {
    if s == 1.0 {
        return Err(Error::Pole {
            function: "riemann_zeta",
            at: 1.0,
        });
    }
    hurwitz_zeta(s, 1.0)
}

/// ζ'(s).
pub fn riemann_zeta_deriv(s: f64) -> Result<f64> {
    if s == 1.0 {
        return Err(Error::Pole {
            function: "riemann_zeta_deriv",
            at: 1.0,
        });
    }
    hurwitz_zeta_deriv(s, 1.0)
}

/// (A^{1-s} - B^{1-s}) / (s - 1) and its s-derivative, stable near s = 1.
fn pole_difference(s: f64, big_a: f64, big_b: f64) -> (f64, f64) {
    let t = 1.0 - s;
    let (la, lb) = (big_a.ln(), big_b.ln());
    if t.abs() < 0.5 {
        // P = -Σ_{k>=1} t^{k-1} (la^k - lb^k)/k!,  dP/ds = Σ_{k>=2} (k-1) t^{k-2} (la^k - lb^k)/k!
        let mut value = 0.0;
        let mut deriv = 0.0;
        let (mut pa, mut pb) = (1.0, 1.0);
        let mut fact = 1.0;
        let mut tpow_km1 = 1.0; // t^{k-1}
        let mut tpow_km2 = 0.0; // t^{k-2}
        for k in 1..60 {
            pa *= la;
            pb *= lb;
            fact *= k as f64;
            let diff = (pa - pb) / fact;
            value -= tpow_km1 * diff;
            if k >= 2 {
                deriv += (k - 1) as f64 * tpow_km2 * diff;
            }
            tpow_km2 = tpow_km1;
            tpow_km1 *= t;
            if diff.abs() < 1e-20 && k > 4 {
                break;
            }
        }
        (value, deriv)
    } else {
        let (pa, pb) = (big_a.powf(t), big_b.powf(t));
        let value = (pa - pb) / (s - 1.0);
        let deriv = (-la * pa + lb * pb) / (s - 1.0) - (pa - pb) / ((s - 1.0) * (s - 1.0));
        (value, deriv)
    }
}

/// ζ(s, 1/3) - ζ(s, 2/3) and its derivative; entire in s.
fn hurwitz_third_difference(s: f64) -> (f64, f64) {
    let (r1, d1) = em_regular(s, 1.0 / 3.0, true);
    let (r2, d2) = em_regular(s, 2.0 / 3.0, true);
    let n = EM_SHIFT as f64;
    let (p, dp) = pole_difference(s, n + 1.0 / 3.0, n + 2.0 / 3.0);
    (r1 - r2 + p, d1 - d2 + dp)
}

/// Dirichlet L-series of the non-principal character mod 3,
/// L₃(s) = 1 - 2^{-s} + 4^{-s} - 5^{-s} + ... = 3^{-s}(ζ(s,1/3) - ζ(s,2/3)).
pub fn dirichlet_l3(s: f64) -> f64 {
    let (diff, _) = hurwitz_third_difference(s);
    3f64.powf(-s) * diff
}

/// L₃'(s).
pub fn dirichlet_l3_deriv(s: f64) -> f64 {
    let (diff, ddiff) = hurwitz_third_difference(s);
    let scale = 3f64.powf(-s);
    scale * (ddiff - 3f64.ln() * diff)
}

/// Upper incomplete gamma function Γ(a, x) = ∫_x^∞ t^{a-1} e^{-t} dt for real a, x > 0.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    if a.is_nan() || x.is_nan() {
        return Err(Error::domain("upper_incomplete_gamma", "NaN argument"));
    }
    if !(x > 0.0) {
        return Err(Error::domain("upper_incomplete_gamma", format!("requires x > 0, got {x}")));
    }
    Ok(upper_gamma_unchecked(a, x))
}

/// Exponential integral E₁(x) = Γ(0, x).
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    upper_incomplete_gamma(0.0, x)
}

pub(crate) fn upper_gamma_unchecked(a: f64, x: f64) -> f64 {
    if x >= 1.5_f64.max(a + 1.0) {
        return upper_gamma_cf(a, x);
    }
    if a < -0.5 {
        // Γ(a, x) = (Γ(a+1, x) - x^a e^{-x}) / a
        return (upper_gamma_unchecked(a + 1.0, x) - (a * x.ln() - x).exp()) / a;
    }
    if a <= 0.5 {
        upper_gamma_small_a(a, x)
    } else {
        gamma_unchecked(a) - lower_gamma_series(a, x)
    }
}

/// Legendre continued fraction, modified Lentz.
fn upper_gamma_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..2000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (a * x.ln() - x).exp() * h
}

/// γ(a, x) = x^a e^{-x} Σ x^n / (a (a+1) ... (a+n)), a > 0.
fn lower_gamma_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..1000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * (a * x.ln() - x).exp()
}

/// Γ(a, x) for |a| <= 0.5 and small x, written so that the a -> 0 limit
/// (E₁) is reached without cancellation:
/// Γ(a,x) = (Γ(1+a) - 1)/a - (x^a - 1)/a - x^a Σ_{n>=1} (-x)^n / (n! (a+n)).
fn upper_gamma_small_a(a: f64, x: f64) -> f64 {
    let lx = x.ln();
    let (g_part, x_part) = if a == 0.0 {
        (-euler_gamma(), lx)
    } else {
        (gamma1pm1(a) / a, (a * lx).exp_m1() / a)
    };
    let mut series = 0.0;
    let mut pow = 1.0;
    for n in 1..200 {
        pow *= -x / n as f64;
        let term = pow / (a + n as f64);
        series += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    g_part - x_part - (a * lx).exp() * series
}
