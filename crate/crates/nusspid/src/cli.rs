//! Command implementations behind the `nusspid` binary.
//!
//! Exit codes: 0 on a completed command (a diverged run is a result, not an
//! error), 1 on usage or config errors, 2 on IO errors, 3 when the property
//! suite fails.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::config::{self, ConfigError, LoadedConfig};
use crate::controller::ControllerKind;
use crate::csv;
use crate::dynamics::RobotParams;
use crate::sim::{run_scenario, RunMetrics, SimConfig};
use crate::verify;

pub mod exit_code {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const IO: i32 = 2;
    pub const VERIFY: i32 = 3;
}

/// Actuator-matrix presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// κ = I.
    Paper,
    /// κ = −I.
    Flip,
    /// κ = diag(0.5, −2).
    Skew,
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Preset::Paper),
            "flip" => Ok(Preset::Flip),
            "skew" => Ok(Preset::Skew),
            other => Err(format!(
                "unknown preset `{other}` (expected paper, flip or skew)"
            )),
        }
    }
}

impl Preset {
    fn apply(self, cfg: &mut SimConfig) {
        cfg.robot.kappa = match self {
            Preset::Paper => RobotParams::paper().kappa,
            Preset::Flip => RobotParams::flipped().kappa,
            Preset::Skew => RobotParams::skewed().kappa,
        };
    }
}

/// Flags of the `run` subcommand.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub duration: Option<f64>,
    pub dt: Option<f64>,
    pub controller: Option<ControllerKind>,
    pub kappa_scale: Option<f64>,
    pub preset: Option<Preset>,
    pub hold: bool,
}

/// Flags of the `sweep` subcommand.
#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub param: String,
    pub values: String,
    pub config: Option<PathBuf>,
    pub out_dir: PathBuf,
}

fn config_exit_code(err: &ConfigError) -> i32 {
    match err {
        ConfigError::Io(_) => exit_code::IO,
        ConfigError::Parse(_) | ConfigError::Validation(_) => exit_code::CONFIG,
    }
}

fn load_base_config(path: Option<&Path>) -> Result<LoadedConfig, i32> {
    match path {
        Some(p) => config::parse_config(p).map_err(|e| {
            eprintln!("{e}");
            config_exit_code(&e)
        }),
        None => Ok(config::preset()),
    }
}

fn format_kappa(cfg: &SimConfig) -> String {
    let k = cfg.robot.kappa;
    format!(
        "[[{}, {}], [{}, {}]]",
        k[(0, 0)],
        k[(0, 1)],
        k[(1, 0)],
        k[(1, 1)]
    )
}

fn print_metrics(m: &RunMetrics) {
    println!("rms_error_tail      = {:.6e} rad", m.rms_error_tail);
    println!(
        "max_abs_error_tail  = [{:.6e}, {:.6e}] rad",
        m.max_abs_error_tail[0], m.max_abs_error_tail[1]
    );
    println!("sup_psi             = {:.6e}", m.sup_psi);
    println!("sup_psi_hat         = {:.6e}", m.sup_psi_hat);
    println!("zeta_final          = {:.6}", m.zeta_final);
    match m.divergence_time {
        Some(t) => println!("diverged            = true (at t = {t:.4} s)"),
        None => println!("diverged            = false"),
    }
}

/// `run`: one scenario, one CSV, one metrics block.
pub fn run_command(opts: &RunOptions) -> i32 {
    let loaded = match load_base_config(opts.config.as_deref()) {
        Ok(l) => l,
        Err(code) => return code,
    };
    let mut cfg = loaded.sim;
    if let Some(preset) = opts.preset {
        preset.apply(&mut cfg);
    }
    if let Some(scale) = opts.kappa_scale {
        cfg.robot.kappa *= scale;
    }
    if let Some(duration) = opts.duration {
        cfg.duration = duration;
    }
    if let Some(dt) = opts.dt {
        cfg.dt = dt;
    }
    if let Some(kind) = opts.controller {
        cfg.kind = kind;
    }
    cfg.hold = opts.hold;
    if let Some(err) = cfg.validate().err() {
        eprintln!("config validation error: {err}");
        return exit_code::CONFIG;
    }

    let csv_path = opts.out.clone().unwrap_or(loaded.csv_path);
    let result = run_scenario(&cfg);
    if let Err(err) = csv::write_csv_file(&csv_path, &result.records) {
        eprintln!("io error writing {}: {err}", csv_path.display());
        return exit_code::IO;
    }

    println!("controller          = {}", cfg.kind);
    println!("kappa               = {}", format_kappa(&cfg));
    println!("dt / duration       = {} s / {} s", cfg.dt, cfg.duration);
    println!(
        "records             = {} -> {}",
        result.records.len(),
        csv_path.display()
    );
    print_metrics(&result.metrics);
    exit_code::OK
}

/// Parameters `sweep` can vary.
const SWEEP_PARAMS: &[&str] = &[
    "kappa-scale",
    "k_delta",
    "gamma",
    "alpha",
    "sigma",
    "adapt_gain",
    "zeta0",
    "dt",
    "duration",
];

fn apply_sweep_param(cfg: &mut SimConfig, name: &str, value: f64) -> Result<(), String> {
    match name {
        "kappa-scale" => cfg.robot.kappa *= value,
        "k_delta" => cfg.controller.k_delta = value,
        "gamma" => cfg.controller.gamma = value,
        "alpha" => cfg.controller.alpha = value,
        "sigma" => cfg.controller.sigma = value,
        "adapt_gain" => {
            cfg.controller.adapt_gain = value;
            cfg.controller.adapt_gain_matrix = None;
        }
        "zeta0" => cfg.controller.zeta0 = value,
        "dt" => cfg.dt = value,
        "duration" => cfg.duration = value,
        other => {
            return Err(format!(
                "unknown sweep parameter `{other}` (expected one of {})",
                SWEEP_PARAMS.join(", ")
            ))
        }
    }
    Ok(())
}

/// `sweep`: one scenario per value, run concurrently, one CSV each plus a
/// summary table.
pub fn sweep_command(opts: &SweepOptions) -> i32 {
    let tokens: Vec<&str> = opts
        .values
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.is_empty() {
        eprintln!("usage error: --values needs at least one number");
        return exit_code::CONFIG;
    }
    let mut values = Vec::with_capacity(tokens.len());
    for token in &tokens {
        match token.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(e) => {
                eprintln!("usage error: bad value {token:?}: {e}");
                return exit_code::CONFIG;
            }
        }
    }

    let loaded = match load_base_config(opts.config.as_deref()) {
        Ok(l) => l,
        Err(code) => return code,
    };

    // build and validate every scenario before running any
    let mut scenarios = Vec::with_capacity(values.len());
    for (token, value) in tokens.iter().zip(&values) {
        let mut cfg = loaded.sim.clone();
        if let Err(err) = apply_sweep_param(&mut cfg, &opts.param, *value) {
            eprintln!("usage error: {err}");
            return exit_code::CONFIG;
        }
        if let Err(err) = cfg.validate() {
            eprintln!(
                "config validation error for {} = {token}: {err}",
                opts.param
            );
            return exit_code::CONFIG;
        }
        let path = opts.out_dir.join(format!("{}_{}.csv", opts.param, token));
        scenarios.push((token.to_string(), cfg, path));
    }

    if let Err(err) = std::fs::create_dir_all(&opts.out_dir) {
        eprintln!("io error creating {}: {err}", opts.out_dir.display());
        return exit_code::IO;
    }

    // independent scenarios, one thread each, merged in order afterward
    let outcomes: Vec<(String, RunMetrics, Result<PathBuf, String>)> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = scenarios
                .iter()
                .map(|(token, cfg, path)| {
                    scope.spawn(move || {
                        let result = run_scenario(cfg);
                        let written = csv::write_csv_file(path, &result.records)
                            .map(|_| path.clone())
                            .map_err(|e| format!("{}: {e}", path.display()));
                        (token.clone(), result.metrics, written)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });

    let mut status = exit_code::OK;
    println!(
        "{:>12}        rms_tail        max_tail       sup_psi  zeta_final  diverged",
        opts.param
    );
    for (token, metrics, written) in &outcomes {
        println!(
            "{:>12}  {:>14.6e}  {:>14.6e}  {:>12.4e}  {:>10.4}  {}",
            token,
            metrics.rms_error_tail,
            metrics.max_abs_error_tail[0].max(metrics.max_abs_error_tail[1]),
            metrics.sup_psi,
            metrics.zeta_final,
            metrics.diverged
        );
        if let Err(err) = written {
            eprintln!("io error writing {err}");
            status = exit_code::IO;
        }
    }
    status
}

/// `verify`: the numerical property suite with one pass/fail line per check.
pub fn verify_command() -> i32 {
    let cfg = SimConfig::paper();
    let outcomes = verify::run_all(&cfg);
    let mut failures = Vec::new();
    for outcome in &outcomes {
        let tag = if outcome.passed { "pass" } else { "FAIL" };
        println!("[{tag}] {:<45} {}", outcome.name, outcome.detail);
        if !outcome.passed {
            failures.push(outcome.name);
        }
    }
    if failures.is_empty() {
        println!("all {} properties passed", outcomes.len());
        exit_code::OK
    } else {
        eprintln!("failed properties: {}", failures.join(", "));
        exit_code::VERIFY
    }
}
