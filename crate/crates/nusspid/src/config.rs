//! JSON configuration surface.
//!
//! A config document has four sections — `robot`, `controller` (with a
//! nested `network`), `sim` and `output` — all optional. Missing keys fall
//! back to the built-in reference preset, unknown keys are rejected, and the
//! merged result is validated before use. `{}` therefore yields the full
//! reference scenario.
//!
//! ```json
//! {
//!   "robot":      { "m1": 5.0, "m2": 2.0, "l1": 1.0, "l2": 0.75,
//!                   "lc1": 0.5, "lc2": 0.375, "I1": 1.66, "I2": 0.37,
//!                   "gravity": 9.81, "kappa": [[1, 0], [0, 1]] },
//!   "controller": { "kind": "nussbaum-pid", "gamma": 0.5, "k_delta": 0.1,
//!                   "alpha": 100.0, "sigma": 0.1, "adapt_gain": 100.0,
//!                   "zeta0": 0.0,
//!                   "network": { "nodes": 20, "center_min": -12.5,
//!                                "center_max": 12.5, "width": 1.0 } },
//!   "sim":        { "dt": 0.0001, "duration": 20.0, "q0": [1.5708, -1.5708],
//!                   "dq0": [0.0, 0.0], "decimation": 10 },
//!   "output":     { "csv_path": "run.csv" }
//! }
//! ```

use std::path::{Path, PathBuf};

use nalgebra::{Matrix2, Vector2};
use serde::Deserialize;

use crate::controller::ControllerKind;
use crate::sim::SimConfig;

/// CSV destination used when neither the config nor the CLI names one.
pub const DEFAULT_CSV_PATH: &str = "run.csv";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config validation error: {0}")]
    Validation(String),
}

/// A parsed config document merged onto the preset.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub sim: SimConfig,
    pub csv_path: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    robot: RobotSection,
    controller: ControllerSection,
    sim: SimSection,
    output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RobotSection {
    m1: Option<f64>,
    m2: Option<f64>,
    l1: Option<f64>,
    l2: Option<f64>,
    lc1: Option<f64>,
    lc2: Option<f64>,
    #[serde(rename = "I1")]
    i1: Option<f64>,
    #[serde(rename = "I2")]
    i2: Option<f64>,
    gravity: Option<f64>,
    /// Row-major 2×2 actuator matrix.
    kappa: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ControllerSection {
    kind: Option<ControllerKind>,
    gamma: Option<f64>,
    k_delta: Option<f64>,
    alpha: Option<f64>,
    sigma: Option<f64>,
    adapt_gain: Option<AdaptGain>,
    zeta0: Option<f64>,
    network: NetworkSection,
}

/// Γ is a positive scalar (times identity) by default; a full symmetric
/// positive definite matrix is also accepted.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AdaptGain {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct NetworkSection {
    nodes: Option<usize>,
    center_min: Option<f64>,
    center_max: Option<f64>,
    width: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimSection {
    dt: Option<f64>,
    duration: Option<f64>,
    q0: Option<[f64; 2]>,
    dq0: Option<[f64; 2]>,
    decimation: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OutputSection {
    csv_path: Option<PathBuf>,
}

fn set<T>(target: &mut T, source: Option<T>) {
    if let Some(v) = source {
        *target = v;
    }
}

impl ConfigFile {
    fn merge_onto_preset(self) -> Result<LoadedConfig, ConfigError> {
        let mut cfg = SimConfig::paper();

        let r = self.robot;
        set(&mut cfg.robot.m1, r.m1);
        set(&mut cfg.robot.m2, r.m2);
        set(&mut cfg.robot.l1, r.l1);
        set(&mut cfg.robot.l2, r.l2);
        set(&mut cfg.robot.lc1, r.lc1);
        set(&mut cfg.robot.lc2, r.lc2);
        set(&mut cfg.robot.i1, r.i1);
        set(&mut cfg.robot.i2, r.i2);
        set(&mut cfg.robot.gravity, r.gravity);
        if let Some(k) = r.kappa {
            cfg.robot.kappa = Matrix2::new(k[0][0], k[0][1], k[1][0], k[1][1]);
        }

        let c = self.controller;
        set(&mut cfg.kind, c.kind);
        set(&mut cfg.controller.gamma, c.gamma);
        set(&mut cfg.controller.k_delta, c.k_delta);
        set(&mut cfg.controller.alpha, c.alpha);
        set(&mut cfg.controller.sigma, c.sigma);
        match c.adapt_gain {
            Some(AdaptGain::Scalar(v)) => cfg.controller.adapt_gain = v,
            Some(AdaptGain::Matrix(rows)) => {
                let n = rows.len();
                if rows.iter().any(|row| row.len() != n) {
                    return Err(ConfigError::Validation(
                        "controller.adapt_gain matrix must be square".into(),
                    ));
                }
                cfg.controller.adapt_gain_matrix = Some(nalgebra::DMatrix::from_row_iterator(
                    n,
                    n,
                    rows.into_iter().flatten(),
                ));
            }
            None => {}
        }
        set(&mut cfg.controller.zeta0, c.zeta0);
        set(&mut cfg.controller.layout.nodes, c.network.nodes);
        set(&mut cfg.controller.layout.center_min, c.network.center_min);
        set(&mut cfg.controller.layout.center_max, c.network.center_max);
        set(&mut cfg.controller.layout.width, c.network.width);

        let s = self.sim;
        set(&mut cfg.dt, s.dt);
        set(&mut cfg.duration, s.duration);
        if let Some(q0) = s.q0 {
            cfg.q0 = Vector2::new(q0[0], q0[1]);
        }
        if let Some(dq0) = s.dq0 {
            cfg.dq0 = Vector2::new(dq0[0], dq0[1]);
        }
        set(&mut cfg.decimation, s.decimation);

        Ok(LoadedConfig {
            sim: cfg,
            csv_path: self
                .output
                .csv_path
                .unwrap_or_else(|| PathBuf::from(DEFAULT_CSV_PATH)),
        })
    }
}

/// Parses and validates a config document.
pub fn parse_config_str(text: &str) -> Result<LoadedConfig, ConfigError> {
    let file: ConfigFile = serde_json::from_str(text)?;
    let loaded = file.merge_onto_preset()?;
    loaded.sim.validate().map_err(ConfigError::Validation)?;
    Ok(loaded)
}

/// Reads, parses and validates a config file.
pub fn parse_config(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

/// The preset as a `LoadedConfig` (what `{}` parses to).
pub fn preset() -> LoadedConfig {
    LoadedConfig {
        sim: SimConfig::paper(),
        csv_path: PathBuf::from(DEFAULT_CSV_PATH),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_preset() {
        let loaded = parse_config_str("{}").unwrap();
        assert_eq!(loaded.sim, SimConfig::paper());
        assert_eq!(loaded.csv_path, PathBuf::from(DEFAULT_CSV_PATH));
    }

    #[test]
    fn partial_override_keeps_other_defaults() {
        let loaded = parse_config_str(
            r#"{ "sim": { "duration": 5.0 }, "controller": { "kind": "fixed-pid" } }"#,
        )
        .unwrap();
        assert_eq!(loaded.sim.duration, 5.0);
        assert_eq!(loaded.sim.kind, ControllerKind::FixedPid);
        assert_eq!(loaded.sim.dt, 1e-4);
        assert_eq!(loaded.sim.controller.alpha, 100.0);
    }

    #[test]
    fn kappa_override_round_trips() {
        let loaded =
            parse_config_str(r#"{ "robot": { "kappa": [[-1.0, 0.0], [0.0, -1.0]] } }"#).unwrap();
        assert_eq!(loaded.sim.robot.kappa, -Matrix2::identity());
    }

    #[test]
    fn negative_dt_is_a_validation_error() {
        let err = parse_config_str(r#"{ "sim": { "dt": -0.001 } }"#).unwrap_err();
        assert!(matches!(err, ConfigError::Validation(_)), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config_str(r#"{ "sim": { "step": 0.001 } }"#).unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)), "{err}");
        let err = parse_config_str(r#"{ "plot": true }"#).unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)), "{err}");
    }

    #[test]
    fn malformed_text_is_a_parse_error() {
        let err = parse_config_str("{ not json").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
    }

    #[test]
    fn adapt_gain_accepts_scalar_or_matrix() {
        let loaded = parse_config_str(r#"{ "controller": { "adapt_gain": 50.0 } }"#).unwrap();
        assert_eq!(loaded.sim.controller.adapt_gain, 50.0);
        assert!(loaded.sim.controller.adapt_gain_matrix.is_none());

        let loaded = parse_config_str(
            r#"{ "controller": { "adapt_gain": [[2.0, 0.0], [0.0, 3.0]],
                                 "network": { "nodes": 2 } } }"#,
        )
        .unwrap();
        let gain = loaded.sim.controller.adapt_gain_matrix.unwrap();
        assert_eq!(gain[(1, 1)], 3.0);

        // matrix of the wrong size fails validation
        let err = parse_config_str(r#"{ "controller": { "adapt_gain": [[1.0]] } }"#).unwrap_err();
        assert!(matches!(err, ConfigError::Validation(_)), "{err}");
    }

    #[test]
    fn network_layout_overrides() {
        let loaded =
            parse_config_str(r#"{ "controller": { "network": { "nodes": 7, "width": 2.0 } } }"#)
                .unwrap();
        assert_eq!(loaded.sim.controller.layout.nodes, 7);
        assert_eq!(loaded.sim.controller.layout.width, 2.0);
        assert_eq!(loaded.sim.controller.layout.center_min, -12.5);
    }
}
