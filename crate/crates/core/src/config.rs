//! Run configuration: one TOML file with `[ocp]`, `[grid]`, `[dp]`,
//! `[adp]`, `[rl]` and `[harness]` sections. Every key is optional.
//!
//! ```toml
//! [ocp]
//! dt = 1.0
//! motor_model = "model.json"   # relative to the config file
//!
//! [grid]
//! n_d = 41
//!
//! [dp]
//! discount = 0.99
//!
//! [rl]
//! episodes = 200
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adp::SurrogateOptions;
use crate::dp::{BackwardOptions, ControlGrid, Grid};
use crate::error::{Error, Result};
use crate::ocp::OcpSpec;
use crate::powertrain::{MotorModel, VehicleParams};
use crate::rl::RlHyperparams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcpConfig {
    pub dt: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub f_b_max: f64,
    pub d0: f64,
    pub v0: f64,
    pub violation_penalty: f64,
    /// Motor model JSON; the bundled model when absent.
    pub motor_model: Option<PathBuf>,
    pub vehicle: VehicleParams,
}

impl Default for OcpConfig {
    fn default() -> Self {
        let s = OcpSpec::default();
        Self {
            dt: s.dt,
            v_min: s.v_min,
            v_max: s.v_max,
            d_min: s.d_min,
            d_max: s.d_max,
            f_b_max: s.f_b_max,
            d0: s.d0,
            v0: s.v0,
            violation_penalty: s.violation_penalty,
            motor_model: None,
            vehicle: s.params,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Gap knots, log-spaced from `d_lo` to the upper gap bound.
    pub n_d: usize,
    pub d_lo: f64,
    pub n_v: usize,
    pub n_vf: usize,
    pub n_fm: usize,
    pub f_m_lo: f64,
    pub f_m_hi: f64,
    pub n_fb: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_d: 81,
            d_lo: 1.0,
            n_v: 41,
            n_vf: 41,
            n_fm: 21,
            f_m_lo: -5000.0,
            f_m_hi: 5000.0,
            n_fb: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    /// Count regenerated energy against consumption.
    pub regen_credit: bool,
    /// Controllers run by `compare` when none are given on the command line.
    pub controllers: Vec<String>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            regen_credit: true,
            controllers: ["dp1", "dp2", "adp", "front-mirror"].map(String::from).to_vec(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub ocp: OcpConfig,
    pub grid: GridConfig,
    pub dp: BackwardOptions,
    pub adp: SurrogateOptions,
    pub rl: RlHyperparams,
    pub harness: HarnessConfig,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Toml(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative `motor_model` path is taken relative
    /// to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        if let (Some(model), Some(dir)) = (&cfg.ocp.motor_model, path.parent()) {
            if model.is_relative() {
                cfg.ocp.motor_model = Some(dir.join(model));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Toml(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.dp.validate()?;
        self.adp.validate()?;
        self.rl.validate()
    }

    pub fn spec(&self) -> Result<OcpSpec> {
        let o = &self.ocp;
        let model = match &o.motor_model {
            Some(path) => MotorModel::load(path)?,
            None => MotorModel::default(),
        };
        let spec = OcpSpec {
            params: o.vehicle,
            model,
            dt: o.dt,
            v_min: o.v_min,
            v_max: o.v_max,
            d_min: o.d_min,
            d_max: o.d_max,
            f_b_max: o.f_b_max,
            d0: o.d0,
            v0: o.v0,
            violation_penalty: o.violation_penalty,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn grid(&self, spec: &OcpSpec) -> Result<Grid> {
        let g = &self.grid;
        Grid::build(spec, g.n_d, g.d_lo, g.n_v, g.n_vf)
    }

    pub fn controls(&self, spec: &OcpSpec) -> Result<ControlGrid> {
        let g = &self.grid;
        ControlGrid::uniform(g.n_fm, g.f_m_lo, g.f_m_hi, g.n_fb, spec.f_b_max)
    }
}
