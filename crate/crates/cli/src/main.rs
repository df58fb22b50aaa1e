mod commands;
mod config;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use serde_json::{json, Value};

use commands::{CliError, Context};
use config::{read_config, Params};

/// (key, takes a value, help). Keys without a value are boolean switches.
type Key = (&'static str, bool, &'static str);

const SUBCOMMANDS: &[(&str, &str, &[Key])] = &[
    (
        "epstein",
        "Epstein zeta function of a unit-covolume lattice",
        &[
            ("lattice", true, "square, triangular, z, cubic, rectangular:A or basis:x1,y1;x2,y2"),
            ("s", true, "exponent"),
            ("deriv", false, "derivative at s = 0"),
            ("backend", true, "ewald or direct"),
            ("split", true, "Ewald split point"),
            ("tol", true, "Ewald tolerance"),
            ("quad-tol", true, "quadrature tolerance of the direct backend"),
        ],
    ),
    (
        "lattice-energy",
        "Jellium energy per particle of a lattice",
        &[
            ("lattice", true, "lattice name, as for epstein"),
            ("s", true, "Riesz exponent, 0 for the logarithmic case"),
            ("split", true, "Ewald split point"),
            ("tol", true, "Ewald tolerance"),
        ],
    ),
    (
        "torus-min",
        "Minimize the periodic Coulomb energy of n points on a torus",
        &[
            ("n", true, "number of points (density one)"),
            ("torus", true, "shape of the period lattice"),
            ("init", true, "random or lattice"),
            ("jitter", true, "Gaussian jitter of the lattice start"),
            ("restarts", true, "random starts"),
            ("seed", true, "base seed"),
            ("max-iters", true, "iterations per run"),
            ("grad-tol", true, "gradient-norm stopping tolerance"),
            ("initial-step", true, "first trial step"),
            ("split", true, "Ewald split point"),
            ("tol", true, "Ewald tolerance"),
            ("trace", true, "CSV path of the best run's trace"),
        ],
    ),
    (
        "sphere-min",
        "Minimize the logarithmic energy of n points on the sphere",
        &[
            ("n", true, "number of points"),
            ("restarts", true, "random starts"),
            ("seed", true, "base seed"),
            ("max-iters", true, "iterations per run"),
            ("grad-tol", true, "gradient-norm stopping tolerance"),
            ("initial-step", true, "first trial step"),
            ("trace", true, "CSV path of the best run's trace"),
        ],
    ),
    (
        "jellium-finite",
        "Finite Jellium energy of a hexagonal lattice patch",
        &[
            ("rings", true, "rings around the central point"),
            ("tol", true, "quadrature tolerance"),
            ("a", true, "smearing radius for the lower-bound decomposition"),
            ("terms", true, "CSV path of the energy terms"),
        ],
    ),
    ("bounds", "Table of bounds on min W and c_log", &[]),
    (
        "validate",
        "Run the numerical validation suite",
        &[
            ("quick", false, "skip the slow criteria"),
            ("references", true, "JSON file overriding reference values"),
            ("only", true, "comma-separated criterion ids"),
        ],
    ),
];

fn cli() -> Command {
    let mut cmd = Command::new("jellium")
        .about("Lattice Jellium energies, periodic minimizers and renormalized-energy bounds")
        .version(env!("CARGO_PKG_VERSION"))
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("key = value run configuration")
                .global(true),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .value_name("PATH")
                .help("write JSON here instead of stdout")
                .global(true),
        );
    for (name, about, keys) in SUBCOMMANDS {
        let mut sub = Command::new(*name).about(*about);
        for (key, takes_value, help) in keys.iter() {
            let arg = Arg::new(*key).long(*key).help(*help);
            let arg = if *takes_value {
                arg.num_args(1).allow_negative_numbers(true).action(ArgAction::Set)
            } else {
                arg.num_args(0..=1).default_missing_value("true").action(ArgAction::Set)
            };
            sub = sub.arg(arg);
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

fn flag_values(m: &ArgMatches, keys: &[Key]) -> BTreeMap<String, String> {
    keys.iter()
        .filter_map(|(k, _, _)| m.get_one::<String>(k).map(|v| (k.to_string(), v.clone())))
        .collect()
}

fn dispatch(command: &str, p: &mut Params, ctx: &Context) -> Result<Value, CliError> {
    match command {
        "epstein" => commands::epstein(p),
        "lattice-energy" => commands::lattice_energy(p),
        "torus-min" => commands::torus_min(p, ctx),
        "sphere-min" => commands::sphere_min(p, ctx),
        "jellium-finite" => commands::jellium_finite(p, ctx),
        "bounds" => commands::bounds(p),
        "validate" => commands::validate(p),
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }
}

fn emit(doc: &Value, out: Option<&PathBuf>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(doc).expect("JSON values serialize") + "\n";
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}"))),
    }
}

fn error_exit(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("error: {message}");
    let doc = json!({ "schema": 1, "error": { "kind": kind, "message": message, "exit_code": code } });
    println!("{}", serde_json::to_string_pretty(&doc).expect("JSON values serialize"));
    ExitCode::from(code)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("JELLIUM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("JELLIUM_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure threads: {e}")))
}

fn run(matches: &ArgMatches) -> Result<(), CliError> {
    configure_threads()?;
    let out = matches.get_one::<String>("out").map(PathBuf::from);
    let mut file = match matches.get_one::<String>("config") {
        Some(path) => read_config(path.as_ref())?,
        None => BTreeMap::new(),
    };
    let from_file = file.remove("command");
    let (command, flags) = match matches.subcommand() {
        Some((name, sub)) => {
            if let Some(c) = &from_file {
                if c != name {
                    return Err(CliError::Usage(format!("config file is for `{c}`, not `{name}`")));
                }
            }
            let keys = SUBCOMMANDS.iter().find(|(n, _, _)| *n == name).map(|s| s.2).unwrap_or(&[]);
            (name.to_string(), flag_values(sub, keys))
        }
        None => match from_file {
            Some(c) => (c, BTreeMap::new()),
            None => {
                return Err(CliError::Usage(
                    "no command given (pass a subcommand or `command` in the config)".into(),
                ))
            }
        },
    };
    let mut params = Params::merged([file, flags]);
    let ctx = Context { out: out.clone() };
    let result = dispatch(&command, &mut params, &ctx);
    let doc = |body: Value| json!({ "schema": 1, "command": command, "config": params.resolved(), "result": body });
    match result {
        Ok(body) => emit(&doc(body), out.as_ref()),
        Err(CliError::Failed(body)) => {
            emit(&doc(body), out.as_ref())?;
            Err(CliError::Failed(Value::Null))
        }
        Err(e) => Err(e),
    }
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) if !e.use_stderr() => {
            // help and version requests
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            return error_exit("usage", text.trim().trim_start_matches("error: "), 2);
        }
    };
    match run(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed(_)) => {
            eprintln!("validation failed");
            ExitCode::from(1)
        }
        Err(CliError::Usage(m)) => error_exit("usage", &m, 2),
        Err(CliError::Io(m)) => error_exit("io", &m, 2),
        Err(CliError::Compute(e)) => error_exit("computation", &e.to_string(), 3),
    }
}
