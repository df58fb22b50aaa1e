//! One runner per subcommand. Each consumes its parameters, checks that no
//! unknown key is left, computes, and returns the JSON result body.

use std::path::{Path, PathBuf};

use jellium_core::epstein::{direct_w_sum, epstein_zeta, epstein_zeta_deriv0, lattice_jellium_energy, EwaldParams};
use jellium_core::jellium_finite::{hexagonal_patch, jellium_energy, lieb_narnhofer_optimal, lower_bound_decomposition};
use jellium_core::optimize::{c_log_estimate, minimize_sphere, minimize_torus, trace_csv, OptimizerOptions, StepRule, TorusStart};
use jellium_core::periodic::e_per;
use jellium_core::renorm::{bound_table, c_log_from_w};
use jellium_core::validate::{run_criterion, References, Status, ValidationOptions};
use jellium_core::{Lattice, PointConfiguration, Torus, Vec2};
use serde_json::{json, Value};

use crate::config::{Params, UsageError};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(jellium_core::Error),
    Io(String),
    /// The validation suite ran and at least one criterion failed.
    Failed(Value),
}

impl From<UsageError> for CliError {
    fn from(e: UsageError) -> Self {
        CliError::Usage(e.0)
    }
}

impl From<jellium_core::Error> for CliError {
    fn from(e: jellium_core::Error) -> Self {
        use jellium_core::Error::*;
        match e {
            Domain { .. } | Pole { .. } | Range(_) | Normalization(_) | Unsupported(_) | Invalid(_) => CliError::Usage(e.to_string()),
            Singular(_) | Accuracy { .. } | Convergence { .. } => CliError::Compute(e),
        }
    }
}

pub type CmdResult = Result<Value, CliError>;

/// Where CSV artifacts go when no explicit path is given.
pub struct Context {
    pub out: Option<PathBuf>,
}

impl Context {
    fn sidecar(&self, explicit: Option<String>, suffix: &str) -> Option<PathBuf> {
        explicit.map(PathBuf::from).or_else(|| {
            self.out.as_ref().map(|o| {
                let stem = o
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "run".into());
                o.with_file_name(format!("{stem}.{suffix}.csv"))
            })
        })
    }
}

fn write_csv(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// `square`, `triangular` (or `hexagonal`), `z`, `cubic`, `rectangular:ASPECT`
/// or `basis:x1,y1;x2,y2` (rescaled to unit covolume).
pub fn parse_lattice(spec: &str) -> Result<Lattice, CliError> {
    let bad = || CliError::Usage(format!("unknown lattice `{spec}`"));
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (spec.trim(), None),
    };
    let lattice = match (name, arg) {
        ("square", None) => Lattice::square(2)?,
        ("triangular" | "hexagonal", None) => Lattice::triangular(),
        ("z" | "integers", None) => Lattice::integers_1d(),
        ("cubic", None) => Lattice::square(3)?,
        ("rectangular", Some(a)) => {
            let aspect: f64 = a.parse().map_err(|_| bad())?;
            if !(aspect > 0.0 && aspect.is_finite()) {
                return Err(CliError::Usage("aspect ratio must be positive".into()));
            }
            let r = aspect.sqrt();
            Lattice::from_generators_2d([r, 0.0], [0.0, 1.0 / r])?
        }
        ("basis", Some(b)) => {
            let v: Vec<f64> = b
                .split([',', ';'])
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad())?;
            if v.len() != 4 {
                return Err(CliError::Usage("basis needs four numbers x1,y1;x2,y2".into()));
            }
            Lattice::from_generators_2d([v[0], v[1]], [v[2], v[3]])?.normalize()
        }
        _ => return Err(bad()),
    };
    Ok(lattice)
}

fn ewald(p: &mut Params) -> Result<EwaldParams, CliError> {
    let split = p.f64("split", 1.0)?;
    let tol = p.f64("tol", 1e-15)?;
    let e = EwaldParams {
        split,
        shell_cutoff: None,
        tol,
    };
    e.validate()?;
    Ok(e)
}

pub fn epstein(p: &mut Params) -> CmdResult {
    let lattice_name = p.string("lattice", "triangular");
    let s = p.f64("s", 0.0)?;
    let deriv = p.flag("deriv")?;
    let backend = p.string("backend", "ewald");
    let quad_tol = p.f64("quad-tol", 1e-6)?;
    let ew = ewald(p)?;
    p.finish()?;
    let lattice = parse_lattice(&lattice_name)?;
    if deriv && s != 0.0 {
        return Err(CliError::Usage("--deriv is only available at s = 0".into()));
    }
    let (value, quantity, tol) = match backend.as_str() {
        "ewald" if deriv => (epstein_zeta_deriv0(&lattice, &ew)?, "zeta_deriv_at_0", ew.tol),
        "ewald" => (epstein_zeta(&lattice, s, &ew)?, "zeta", ew.tol),
        "direct" => {
            if s == 0.0 && !deriv {
                return Err(CliError::Usage(
                    "the direct backend at s = 0 evaluates the derivative; pass --deriv".into(),
                ));
            }
            let q = if deriv { "zeta_deriv_at_0" } else { "zeta" };
            (direct_w_sum(&lattice, s, quad_tol)?, q, quad_tol)
        }
        other => return Err(CliError::Usage(format!("unknown backend `{other}` (ewald or direct)"))),
    };
    Ok(json!({
        "quantity": quantity,
        "value": value,
        "tol": tol,
        "dimension": lattice.dimension(),
    }))
}

pub fn lattice_energy(p: &mut Params) -> CmdResult {
    let lattice_name = p.string("lattice", "triangular");
    let s = p.f64("s", 0.0)?;
    let ew = ewald(p)?;
    p.finish()?;
    let lattice = parse_lattice(&lattice_name)?;
    let value = lattice_jellium_energy(&lattice, s, &ew)?;
    Ok(json!({ "energy_per_particle": value, "tol": ew.tol, "dimension": lattice.dimension() }))
}

fn optimizer_options(p: &mut Params, restarts_default: usize) -> Result<OptimizerOptions, CliError> {
    let d = OptimizerOptions::default();
    let opts = OptimizerOptions {
        max_iters: p.usize("max-iters", d.max_iters)?,
        grad_tol: p.f64("grad-tol", d.grad_tol)?,
        step_rule: StepRule {
            initial_step: p.f64("initial-step", d.step_rule.initial_step)?,
            ..d.step_rule
        },
        restarts: p.usize("restarts", restarts_default)?,
        rng_seed: p.u64("seed", d.rng_seed)?,
        record_trace: true,
    };
    opts.validate()?;
    Ok(opts)
}

fn restarts_json(records: &[jellium_core::optimize::RestartRecord]) -> Value {
    records
        .iter()
        .map(|r| {
            json!({
                "seed": r.seed,
                "energy": r.energy,
                "grad_norm": r.grad_norm,
                "iterations": r.iterations,
                "termination": r.termination,
            })
        })
        .collect()
}

pub fn torus_min(p: &mut Params, ctx: &Context) -> CmdResult {
    let n = p.usize("n", 36)?;
    let shape = p.string("torus", "triangular");
    let init = p.string("init", "random");
    let jitter = p.f64("jitter", 0.0)?;
    let trace = p.opt_string("trace");
    let opts = optimizer_options(p, 8)?;
    let ew = ewald(p)?;
    p.finish()?;
    if n == 0 {
        return Err(CliError::Usage("n must be at least 1".into()));
    }
    let lattice = parse_lattice(&shape)?;
    if lattice.dimension() != 2 {
        return Err(CliError::Usage("the torus needs a planar lattice".into()));
    }
    // density one: periods are √n times the unit-covolume lattice
    let torus = Torus::new(lattice.scaled((n as f64).sqrt()))?;
    let start = match init.as_str() {
        "random" => {
            if jitter != 0.0 {
                return Err(CliError::Usage("jitter applies to init = lattice only".into()));
            }
            TorusStart::Random
        }
        "lattice" => {
            let k = (n as f64).sqrt().round() as usize;
            if k * k != n {
                return Err(CliError::Usage(format!("init = lattice needs a square number of points, got {n}")));
            }
            let cfg = PointConfiguration::perfect_sublattice(&lattice, k)?;
            let cfg = if jitter > 0.0 {
                jittered(&cfg, jitter, opts.rng_seed)?
            } else {
                cfg
            };
            TorusStart::Configuration(cfg)
        }
        other => return Err(CliError::Usage(format!("unknown init `{other}` (random or lattice)"))),
    };
    let run = minimize_torus(&torus, n, start, &opts, &ew)?;
    let best = run
        .restarts
        .iter()
        .find(|r| r.seed == run.best_seed)
        .expect("best restart is recorded");
    if let Some(path) = ctx.sidecar(trace, "trace") {
        write_csv(&path, &trace_csv(&best.trace))?;
    }
    let report = &run.report;
    let perfect = if n == (n as f64).sqrt().round().powi(2) as usize {
        let k = (n as f64).sqrt().round() as usize;
        Some(e_per(&PointConfiguration::perfect_sublattice(&lattice, k)?, &ew)?.total)
    } else {
        None
    };
    Ok(json!({
        "energy": report.total,
        "energy_per_point": report.per_point(),
        "gradient_norm": report.gradient_norm,
        "perfect_lattice_energy": perfect,
        "best_seed": run.best_seed,
        "restarts": restarts_json(&run.restarts),
        "report": report,
        "configuration": run.configuration,
    }))
}

fn jittered(cfg: &PointConfiguration, sigma: f64, seed: u64) -> Result<PointConfiguration, CliError> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let normal = Normal::new(0.0, sigma).map_err(|e| CliError::Usage(format!("invalid jitter: {e}")))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pts = cfg
        .points
        .iter()
        .map(|x| x + Vec2::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect();
    Ok(PointConfiguration::new(cfg.torus.clone(), pts)?)
}

pub fn sphere_min(p: &mut Params, ctx: &Context) -> CmdResult {
    let n = p.usize("n", 4)?;
    let trace = p.opt_string("trace");
    let opts = optimizer_options(p, 8)?;
    p.finish()?;
    let run = minimize_sphere(n, &opts)?;
    let best = run
        .restarts
        .iter()
        .find(|r| r.seed == run.best_seed)
        .expect("best restart is recorded");
    if let Some(path) = ctx.sidecar(trace, "trace") {
        write_csv(&path, &trace_csv(&best.trace))?;
    }
    Ok(json!({
        "energy": run.energy,
        "gradient_norm": run.grad_norm,
        "c_log_estimate": c_log_estimate(n, run.energy),
        "best_seed": run.best_seed,
        "restarts": restarts_json(&run.restarts),
        "configuration": run.configuration,
    }))
}

pub fn jellium_finite(p: &mut Params, ctx: &Context) -> CmdResult {
    let rings = p.usize("rings", 3)?;
    let tol = p.f64("tol", 1e-9)?;
    let a = p.opt_f64("a")?;
    let terms = p.opt_string("terms");
    p.finish()?;
    let (domain, points) = hexagonal_patch(rings)?;
    let report = jellium_energy(&domain, &points, tol)?;
    if let Some(path) = ctx.sidecar(terms, "terms") {
        write_csv(&path, &report.terms_csv())?;
    }
    let decomposition = match a {
        Some(a) => Some(lower_bound_decomposition(&domain, &points, a, tol)?),
        None => None,
    };
    let (_, bound) = lieb_narnhofer_optimal();
    Ok(json!({
        "n": points.len(),
        "energy": report.total,
        "energy_per_point": report.per_point(),
        "lower_bound_per_point": bound,
        "report": report,
        "decomposition": decomposition,
    }))
}

pub fn bounds(p: &mut Params) -> CmdResult {
    p.finish()?;
    let table = bound_table();
    let c_log_window = [
        c_log_from_w(table.get("min_W_lower").unwrap_or(f64::NAN)),
        c_log_from_w(table.get("min_W_upper").unwrap_or(f64::NAN)),
    ];
    Ok(json!({ "table": table, "ordered": table.is_ordered(), "c_log_window": c_log_window }))
}

pub fn validate(p: &mut Params) -> CmdResult {
    let quick = p.flag("quick")?;
    let only = p.opt_string("only");
    let references = p.opt_string("references");
    p.finish()?;
    let references = match references {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
            serde_json::from_str::<References>(&text).map_err(|e| CliError::Usage(format!("bad references file {path}: {e}")))?
        }
        None => References::default(),
    };
    let ids: Vec<u32> = match only {
        Some(list) => list
            .split(',')
            .map(|x| x.trim().parse::<u32>().ok().filter(|i| (1..=12).contains(i)))
            .collect::<Option<_>>()
            .ok_or_else(|| CliError::Usage(format!("`only` must list criteria 1 to 12, got `{list}`")))?,
        None => (1..=12).collect(),
    };
    let opts = ValidationOptions { quick, references };
    let mut criteria = Vec::new();
    for id in ids {
        let r = run_criterion(id, &opts).expect("id checked above");
        eprintln!("{}", r.summary());
        criteria.push(r);
    }
    let passed = criteria.iter().all(|c| c.status != Status::Fail);
    let failed: Vec<String> = criteria
        .iter()
        .filter(|c| c.status == Status::Fail)
        .map(|c| c.name.clone())
        .collect();
    let body = json!({ "passed": passed, "failed": failed, "criteria": criteria });
    if passed {
        Ok(body)
    } else {
        Err(CliError::Failed(body))
    }
}
