//! Run configuration: a single flat TOML table with typed values.
//! Unknown keys are errors (no silent typos); parse errors carry the
//! offending line and column.

use crate::error::{Error, Result};
use crate::evolve::{GridSpec, InitialField, RunConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

fn default_cfl() -> f64 {
    0.5
}
fn default_cadence() -> usize {
    10
}
fn default_seed() -> u64 {
    42
}
fn default_pair_budget() -> usize {
    1_000_000
}
fn default_kind() -> String {
    "zero".into()
}
fn default_estimates() -> Vec<String> {
    vec!["chain".into(), "restrictions".into()]
}

/// Flat key-value run configuration (see docs/README for the schema).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    // domain
    pub eps: f64,
    pub r_out: f64,
    pub half_height: f64,
    pub nr: usize,
    pub nz: usize,
    // physics and stepping
    pub nu: f64,
    pub dt: f64,
    pub t_final: f64,
    pub r0: f64,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default)]
    pub second_order: bool,
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    #[serde(default)]
    pub psi_inner: f64,
    #[serde(default)]
    pub psi_outer: f64,
    // diagnostics
    #[serde(default)]
    pub strict: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_pair_budget")]
    pub pair_budget: usize,
    #[serde(default)]
    pub collect_u_snapshots: bool,
    #[serde(default = "default_estimates")]
    pub estimates: Vec<String>,
    // initial swirl
    #[serde(default = "default_kind")]
    pub u0_kind: String,
    #[serde(default)]
    pub u0_amplitude: f64,
    #[serde(default)]
    pub u0_center_r: f64,
    #[serde(default)]
    pub u0_sigma: f64,
    #[serde(default)]
    pub u0_omega: f64,
    // initial angular vorticity
    #[serde(default = "default_kind")]
    pub chi0_kind: String,
    #[serde(default)]
    pub chi0_amplitude: f64,
    #[serde(default)]
    pub chi0_center_r: f64,
    #[serde(default)]
    pub chi0_center_z: f64,
    #[serde(default)]
    pub chi0_sigma: f64,
}

impl Config {
    pub fn from_str_named(text: &str, name: &str) -> Result<Config> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| Error::Config(format!("{name}: {e}")))?;
        cfg.checked()
    }

    pub fn from_path(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_named(&text, &path.display().to_string())
    }

    fn checked(self) -> Result<Config> {
        for id in &self.estimates {
            if !matches!(id.as_str(), "chain" | "vr" | "decay" | "restrictions") {
                return Err(Error::Config(format!(
                    "unknown estimate suite '{id}' (expected chain | vr | decay | restrictions)"
                )));
            }
        }
        self.to_run_config().map(|_| ())?;
        Ok(self)
    }

    fn initial_u(&self) -> Result<InitialField> {
        match self.u0_kind.as_str() {
            "zero" => Ok(InitialField::Zero),
            "gaussian_swirl" => Ok(InitialField::GaussianSwirl {
                amplitude: self.u0_amplitude,
                center_r: self.u0_center_r,
                sigma: self.u0_sigma,
            }),
            "rigid_rotation" => Ok(InitialField::RigidRotation {
                omega: self.u0_omega,
            }),
            other => Err(Error::Config(format!(
                "unknown u0_kind '{other}' (expected zero | gaussian_swirl | rigid_rotation)"
            ))),
        }
    }

    fn initial_chi(&self) -> Result<InitialField> {
        match self.chi0_kind.as_str() {
            "zero" => Ok(InitialField::Zero),
            "vortex_ring" => Ok(InitialField::VortexRing {
                amplitude: self.chi0_amplitude,
                center_r: self.chi0_center_r,
                center_z: self.chi0_center_z,
                sigma: self.chi0_sigma,
            }),
            "sine_ring" => Ok(InitialField::SineRing {
                amplitude: self.chi0_amplitude,
            }),
            other => Err(Error::Config(format!(
                "unknown chi0_kind '{other}' (expected zero | vortex_ring | sine_ring)"
            ))),
        }
    }

    pub fn to_run_config(&self) -> Result<RunConfig> {
        let cfg = RunConfig {
            grid: GridSpec {
                eps: self.eps,
                r_out: self.r_out,
                a: self.half_height,
                nr: self.nr,
                nz: self.nz,
            },
            nu: self.nu,
            dt: self.dt,
            t_final: self.t_final,
            r0: self.r0,
            cfl_safety: self.cfl_safety,
            second_order: self.second_order,
            initial_u: self.initial_u()?,
            initial_chi: self.initial_chi()?,
            cadence: self.cadence,
            psi_inner: self.psi_inner,
            psi_outer: self.psi_outer,
            collect_u_snapshots: self.collect_u_snapshots,
        };
        cfg.validate()?;
        cfg.grid.build()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
eps = 0.1
r_out = 1.0
half_height = 0.5
nr = 16
nz = 16
nu = 1.0
dt = 1e-4
t_final = 0.01
r0 = 0.25
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = Config::from_str_named(MINIMAL, "test").unwrap();
        assert_eq!(cfg.cadence, 10);
        assert_eq!(cfg.u0_kind, "zero");
        cfg.to_run_config().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{MINIMAL}\ntypo_key = 3\n");
        let err = Config::from_str_named(&text, "test").unwrap_err();
        assert!(err.to_string().contains("typo_key"), "{err}");
    }

    #[test]
    fn constraint_violations_named() {
        // eps < r0 violated
        let text = MINIMAL.replace("r0 = 0.25", "r0 = 0.05");
        let err = Config::from_str_named(&text, "test").unwrap_err();
        assert!(err.to_string().contains("eps < r0"), "{err}");
        // bad initial kind
        let text = format!("{MINIMAL}\nu0_kind = \"vortex\"\n");
        let err = Config::from_str_named(&text, "test").unwrap_err();
        assert!(err.to_string().contains("u0_kind"), "{err}");
    }

    #[test]
    fn parse_errors_are_line_anchored() {
        let text = format!("{MINIMAL}\nnu = \"fast\"\n");
        let err = Config::from_str_named(&text, "test").unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn unknown_estimate_suite_rejected() {
        let text = format!("{MINIMAL}\nestimates = [\"chain\", \"mystery\"]\n");
        let err = Config::from_str_named(&text, "test").unwrap_err();
        assert!(err.to_string().contains("mystery"), "{err}");
    }
}
