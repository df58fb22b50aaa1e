//! Deterministic local minimization of the periodic Jellium energy on a
//! torus and of the logarithmic energy on the unit sphere, with seeded
//! multi-start runs.

use std::fmt::Write as _;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epstein::EwaldParams;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::greens::{PeriodicGreen, Torus};
use crate::periodic::{e_per_with_gradient, energy_and_gradient, EnergyReport, PointConfiguration, MIN_SEPARATION};

pub type Vec3 = Vector3<f64>;

/// Backtracking line search. Each iteration starts from a trial step (the
/// Barzilai–Borwein step when enabled, otherwise the last accepted step
/// times `growth`) and halves it until the Armijo condition holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRule {
    pub initial_step: f64,
    pub shrink: f64,
    pub armijo: f64,
    pub growth: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub barzilai_borwein: bool,
}

impl Default for StepRule {
    fn default() -> Self {
        Self {
            initial_step: 1e-2,
            shrink: 0.5,
            armijo: 1e-4,
            growth: 2.0,
            min_step: 1e-16,
            max_step: 1.0,
            barzilai_borwein: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_rule: StepRule,
    pub restarts: usize,
    pub rng_seed: u64,
    /// Keep the per-iteration trace of every restart.
    pub record_trace: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            grad_tol: 1e-7,
            step_rule: StepRule::default(),
            restarts: 1,
            rng_seed: 0,
            record_trace: true,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        let r = &self.step_rule;
        if self.max_iters == 0 {
            return Err(Error::Range("max_iters must be at least 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::Range(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        if self.restarts == 0 {
            return Err(Error::Range("restarts must be at least 1".into()));
        }
        if !(r.initial_step > 0.0 && r.min_step > 0.0 && r.max_step >= r.min_step) {
            return Err(Error::Range("step sizes must be positive and ordered".into()));
        }
        if !(r.shrink > 0.0 && r.shrink < 1.0) || !(r.armijo > 0.0 && r.armijo < 1.0) || !(r.growth >= 1.0) {
            return Err(Error::Range("need 0 < shrink < 1, 0 < armijo < 1 and growth >= 1".into()));
        }
        Ok(())
    }

    /// Seed of restart `k`.
    pub fn seed(&self, k: usize) -> u64 {
        self.rng_seed.wrapping_add(k as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No step down to `min_step` decreased the energy.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub seed: u64,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub trace: Vec<TraceRow>,
}

/// Convergence trace as CSV rows {iter, energy, grad_norm, step}.
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("iter,energy,grad_norm,step\n");
    for r in trace {
        let _ = writeln!(out, "{},{:.17e},{:.6e},{:.6e}", r.iter, r.energy, r.grad_norm, r.step);
    }
    out
}

/// Index of the best restart: lowest energy, then lowest seed.
fn best_index(records: &[RestartRecord]) -> usize {
    let mut best = 0;
    for (i, r) in records.iter().enumerate().skip(1) {
        let b = &records[best];
        if r.energy < b.energy || (r.energy == b.energy && r.seed < b.seed) {
            best = i;
        }
    }
    best
}

/// A smooth energy on a product manifold, as seen by the descent loop.
trait Problem {
    type State: Clone;
    /// Energy and the (tangent) gradient; errors mark inadmissible states.
    fn evaluate(&self, x: &Self::State) -> Result<(f64, Vec<f64>)>;
    /// Moves along -t·g and maps back onto the manifold.
    fn step(&self, x: &Self::State, g: &[f64], t: f64) -> Self::State;
}

struct Outcome<S> {
    state: S,
    energy: f64,
    grad_norm: f64,
    iterations: usize,
    termination: Termination,
    trace: Vec<TraceRow>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn descend<P: Problem>(problem: &P, start: P::State, opts: &OptimizerOptions) -> Result<Outcome<P::State>> {
    let rule = &opts.step_rule;
    let mut x = start;
    let (mut e, mut g) = problem.evaluate(&x)?;
    if !e.is_finite() {
        return Err(Error::Singular("initial energy is not finite".into()));
    }
    let mut gn = dot(&g, &g).sqrt();
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(TraceRow {
            iter: 0,
            energy: e,
            grad_norm: gn,
            step: 0.0,
        });
    }
    let mut t_prev = rule.initial_step;
    let mut bb: Option<f64> = None;
    let mut iterations = 0;
    let termination = loop {
        if gn < opts.grad_tol {
            break Termination::Converged;
        }
        if iterations >= opts.max_iters {
            break Termination::MaxIterations;
        }
        let trial = match (rule.barzilai_borwein, bb) {
            (true, Some(s)) => s,
            _ => t_prev * rule.growth,
        };
        let mut t = trial.clamp(rule.min_step, rule.max_step);
        let accepted = loop {
            let y = problem.step(&x, &g, t);
            if let Ok((e_new, g_new)) = problem.evaluate(&y) {
                let sufficient = e_new <= e - rule.armijo * t * gn * gn && e_new < e;
                // Below the rounding level of E only the gradient can still guide the step.
                let flat = e_new <= e && e - e_new <= 8.0 * f64::EPSILON * e.abs() && dot(&g_new, &g_new) < gn * gn;
                if e_new.is_finite() && (sufficient || flat) {
                    break Some((y, e_new, g_new));
                }
            }
            t *= rule.shrink;
            if t < rule.min_step {
                break None;
            }
        };
        let Some((y, e_new, g_new)) = accepted else {
            break Termination::Stalled;
        };
        // s = -t g, so s·s = t²|g|² and s·(g_new - g) = -t g·(g_new - g)
        let gy = dot(&g, &g_new) - gn * gn;
        bb = if gy < 0.0 { Some(-t * gn * gn / gy) } else { None };
        x = y;
        e = e_new;
        g = g_new;
        gn = dot(&g, &g).sqrt();
        t_prev = t;
        iterations += 1;
        if opts.record_trace {
            trace.push(TraceRow {
                iter: iterations,
                energy: e,
                grad_norm: gn,
                step: t,
            });
        }
    };
    Ok(Outcome {
        state: x,
        energy: e,
        grad_norm: gn,
        iterations,
        termination,
        trace,
    })
}

fn flatten2(v: &[Vec2]) -> Vec<f64> {
    v.iter().flat_map(|p| [p.x, p.y]).collect()
}

struct TorusProblem<'a> {
    green: &'a PeriodicGreen,
}

impl Problem for TorusProblem<'_> {
    type State = Vec<Vec2>;

    fn evaluate(&self, x: &Vec<Vec2>) -> Result<(f64, Vec<f64>)> {
        let (e, g) = energy_and_gradient(self.green, x)?;
        Ok((e, flatten2(&g)))
    }

    fn step(&self, x: &Vec<Vec2>, g: &[f64], t: f64) -> Vec<Vec2> {
        let torus = self.green.torus();
        x.iter()
            .enumerate()
            .map(|(i, p)| torus.wrap(p - Vec2::new(g[2 * i], g[2 * i + 1]) * t))
            .collect()
    }
}

/// Uniformly random points on the torus.
pub fn random_torus_points(torus: &Torus, n: usize, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [b1, b2] = torus.basis_vectors();
    (0..n).map(|_| b1 * rng.gen::<f64>() + b2 * rng.gen::<f64>()).collect()
}

/// Where the torus descent starts.
#[derive(Debug, Clone, PartialEq)]
pub enum TorusStart {
    /// A single run from the given configuration.
    Configuration(PointConfiguration),
    /// `opts.restarts` runs from uniform random points.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusRun {
    pub configuration: PointConfiguration,
    pub report: EnergyReport,
    pub best_seed: u64,
    pub restarts: Vec<RestartRecord>,
}

/// Local minimization of E_per over n points on the torus.
pub fn minimize_torus(torus: &Torus, n: usize, start: TorusStart, opts: &OptimizerOptions, p: &EwaldParams) -> Result<TorusRun> {
    opts.validate()?;
    if n == 0 {
        return Err(Error::Invalid("need at least one point".into()));
    }
    let green = PeriodicGreen::new(torus, p)?;
    let problem = TorusProblem { green: &green };
    let starts: Vec<(u64, Vec<Vec2>)> = match start {
        TorusStart::Configuration(cfg) => {
            if cfg.len() != n {
                return Err(Error::Invalid(format!(
                    "initial configuration has {} points, expected {n}",
                    cfg.len()
                )));
            }
            if cfg.torus != *torus {
                return Err(Error::Invalid("initial configuration lives on a different torus".into()));
            }
            vec![(opts.rng_seed, cfg.points)]
        }
        TorusStart::Random => (0..opts.restarts)
            .map(|k| (opts.seed(k), random_torus_points(torus, n, opts.seed(k))))
            .collect(),
    };
    let outcomes: Vec<Result<(u64, Outcome<Vec<Vec2>>)>> = starts
        .into_par_iter()
        .map(|(seed, x)| Ok((seed, descend(&problem, x, opts)?)))
        .collect();
    finish_torus(torus, outcomes, p)
}

fn finish_torus(torus: &Torus, outcomes: Vec<Result<(u64, Outcome<Vec<Vec2>>)>>, p: &EwaldParams) -> Result<TorusRun> {
    let mut records = Vec::new();
    let mut states = Vec::new();
    let mut last_err = None;
    for o in outcomes {
        match o {
            Ok((seed, out)) => {
                records.push(RestartRecord {
                    seed,
                    energy: out.energy,
                    grad_norm: out.grad_norm,
                    iterations: out.iterations,
                    termination: out.termination,
                    trace: out.trace,
                });
                states.push(out.state);
            }
            Err(e) => last_err = Some(e),
        }
    }
    if records.is_empty() {
        return Err(last_err.unwrap_or(Error::Convergence {
            iterations: 0,
            energy: f64::NAN,
            grad_norm: f64::NAN,
        }));
    }
    let best = best_index(&records);
    let configuration = PointConfiguration::new(torus.clone(), states.swap_remove(best))?;
    let (mut report, _) = e_per_with_gradient(&configuration, p)?;
    let r = &records[best];
    report.metadata.notes.push(format!(
        "best of {} restart(s): seed {}, {} iterations, {:?}",
        records.len(),
        r.seed,
        r.iterations,
        r.termination
    ));
    Ok(TorusRun {
        configuration,
        report,
        best_seed: r.seed,
        restarts: records,
    })
}

/// n unit vectors in 3-space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereConfiguration {
    pub points: Vec<Vec3>,
}

impl SphereConfiguration {
    /// Normalizes every point; rejects zero vectors and coincident points.
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Invalid("need at least two points on the sphere".into()));
        }
        let mut out = Vec::with_capacity(points.len());
        for p in points {
            let r = p.norm();
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Invalid("sphere points must be nonzero and finite".into()));
            }
            out.push(p / r);
        }
        for (i, p) in out.iter().enumerate() {
            for q in &out[i + 1..] {
                if (p - q).norm() < MIN_SEPARATION {
                    return Err(Error::Singular("coincident points on the sphere".into()));
                }
            }
        }
        Ok(Self { points: out })
    }

    /// Uniform random points from normalized Gaussian vectors.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..n)
            .map(|_| Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::new(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// -Σ_{i≠j} log|x_i - x_j|, every unordered pair counted twice.
pub fn sphere_energy(points: &[Vec3]) -> Result<f64> {
    Ok(sphere_energy_and_gradient(points)?.0)
}

/// Energy and Euclidean gradient of [`sphere_energy`] with respect to the
/// ambient coordinates.
pub fn sphere_energy_and_gradient(points: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
    let n = points.len();
    let mut e = 0.0;
    let mut g = vec![Vec3::zeros(); n];
    for i in 0..n {
        for j in i + 1..n {
            let d = points[i] - points[j];
            let r2 = d.norm_squared();
            if r2 < MIN_SEPARATION * MIN_SEPARATION {
                return Err(Error::Singular(format!("points {i} and {j} coincide")));
            }
            e -= r2.ln();
            let f = d * (2.0 / r2);
            g[i] -= f;
            g[j] += f;
        }
    }
    Ok((e, g))
}

/// Gradient projected onto the tangent planes.
pub fn sphere_riemannian_gradient(points: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
    let (e, g) = sphere_energy_and_gradient(points)?;
    Ok((e, g.iter().zip(points).map(|(g, x)| g - x * g.dot(x)).collect()))
}

struct SphereProblem;

impl Problem for SphereProblem {
    type State = Vec<Vec3>;

    fn evaluate(&self, x: &Vec<Vec3>) -> Result<(f64, Vec<f64>)> {
        let (e, g) = sphere_riemannian_gradient(x)?;
        Ok((e, g.iter().flat_map(|v| [v.x, v.y, v.z]).collect()))
    }

    fn step(&self, x: &Vec<Vec3>, g: &[f64], t: f64) -> Vec<Vec3> {
        x.iter()
            .enumerate()
            .map(|(i, p)| (p - Vec3::new(g[3 * i], g[3 * i + 1], g[3 * i + 2]) * t).normalize())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereRun {
    pub configuration: SphereConfiguration,
    pub energy: f64,
    pub grad_norm: f64,
    pub best_seed: u64,
    pub restarts: Vec<RestartRecord>,
}

/// Best local minimum of the logarithmic energy over `opts.restarts` random starts.
pub fn minimize_sphere(n: usize, opts: &OptimizerOptions) -> Result<SphereRun> {
    opts.validate()?;
    if n < 2 {
        return Err(Error::Invalid(format!("need at least two points, got {n}")));
    }
    let outcomes: Vec<Result<(u64, Outcome<Vec<Vec3>>)>> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| {
            let seed = opts.seed(k);
            let start = SphereConfiguration::random(n, seed)?;
            Ok((seed, descend(&SphereProblem, start.points, opts)?))
        })
        .collect();
    let mut records = Vec::new();
    let mut states = Vec::new();
    for o in outcomes {
        let (seed, out) = o?;
        records.push(RestartRecord {
            seed,
            energy: out.energy,
            grad_norm: out.grad_norm,
            iterations: out.iterations,
            termination: out.termination,
            trace: out.trace,
        });
        states.push(out.state);
    }
    let best = best_index(&records);
    let r = &records[best];
    Ok(SphereRun {
        configuration: SphereConfiguration::new(states.swap_remove(best))?,
        energy: r.energy,
        grad_norm: r.grad_norm,
        best_seed: r.seed,
        restarts: records,
    })
}

/// (E - (½ - log 2) n² + ½ n log n) / n, the finite-n estimate of the order-n
/// coefficient in the expansion of the minimal logarithmic energy.
pub fn c_log_estimate(n: usize, energy: f64) -> f64 {
    let n = n as f64;
    (energy - (0.5 - std::f64::consts::LN_2) * n * n + 0.5 * n * n.ln()) / n
}
