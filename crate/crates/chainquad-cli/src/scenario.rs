//! Scenario file format: a JSON object whose keys mirror the scenario
//! fields, all numbers in SI units, rotations as 9 row-major values.
//!
//! A file may name a preset (`"preset": "paper-sim"`) and override any
//! subset of the top-level fields; without a preset it must define `params`
//! and `gains` in full.

use crate::CliError;
use chainquad_core::geom::{RotationMatrix, UnitVector};
use chainquad_core::gains::GainSet;
use chainquad_core::model::SystemParams;
use chainquad_core::sim::Scenario;
use chainquad_core::{Mat3, Vec3};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub quad_mass: f64,
    /// Inertia matrix, 9 row-major values.
    pub inertia: [f64; 9],
    pub link_masses: Vec<f64>,
    pub link_lengths: Vec<f64>,
    pub gravity: f64,
    pub dist_force: [f64; 3],
    pub dist_moment: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsFile {
    pub kx: f64,
    pub kdx: f64,
    pub kq: Vec<f64>,
    pub kw: Vec<f64>,
    pub kz: Vec<f64>,
    pub kr: f64,
    pub komega: f64,
    pub ki: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    pub c2: f64,
    pub sigma: f64,
    #[serde(default = "default_b1d")]
    pub b1d: [f64; 3],
}

fn default_c1() -> f64 {
    0.7
}

fn default_b1d() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Named starting point; currently `"paper-sim"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gains: Option<GainsFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<[f64; 3]>,
    /// Initial attitude, 9 row-major values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<[f64; 9]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega0: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link_dirs0: Option<Vec<[f64; 3]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link_rates0: Option<Vec<[f64; 3]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xd: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_int: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_ctrl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_log: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enable_integral: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_scale: Option<f64>,
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn mat3(a: [f64; 9]) -> Mat3 {
    Mat3::from_row_slice(&a)
}

impl ParamsFile {
    fn into_params(self) -> SystemParams {
        SystemParams {
            quad_mass: self.quad_mass,
            inertia: mat3(self.inertia),
            link_masses: self.link_masses,
            link_lengths: self.link_lengths,
            gravity: self.gravity,
            dist_force: vec3(self.dist_force),
            dist_moment: vec3(self.dist_moment),
        }
    }
}

impl GainsFile {
    fn into_gains(self) -> Result<GainSet, CliError> {
        let b1d = UnitVector::normalize(vec3(self.b1d))
            .map_err(|e| CliError::Scenario(format!("b1d: {e}")))?;
        Ok(GainSet {
            kx: self.kx,
            kdx: self.kdx,
            kq: self.kq,
            kw: self.kw,
            kz: self.kz,
            kr: self.kr,
            komega: self.komega,
            ki: self.ki,
            c1: self.c1,
            c2: self.c2,
            sigma: self.sigma,
            b1d,
        })
    }
}

impl ScenarioFile {
    /// Resolves the file into a runnable scenario: preset first, explicit
    /// fields on top. Without a preset the base is a hanging start at the
    /// origin with the mandatory `params`/`gains`.
    pub fn resolve(mut self) -> Result<Scenario, CliError> {
        let mut sc = match self.preset.as_deref() {
            Some("paper-sim") => Scenario::paper_sim(),
            Some(other) => {
                return Err(CliError::Scenario(format!(
                    "unknown preset {other:?}; available: \"paper-sim\""
                )))
            }
            None => {
                let params = self
                    .params
                    .take()
                    .ok_or_else(|| {
                        CliError::Scenario(
                            "scenario without a preset must define params and gains".into(),
                        )
                    })?
                    .into_params();
                let gains = self
                    .gains
                    .take()
                    .ok_or_else(|| {
                        CliError::Scenario(
                            "scenario without a preset must define params and gains".into(),
                        )
                    })?
                    .into_gains()?;
                let n = params.link_count();
                Scenario {
                    params,
                    gains,
                    x0: Vec3::zeros(),
                    v0: Vec3::zeros(),
                    r0: RotationMatrix::identity(),
                    omega0: Vec3::zeros(),
                    link_dirs0: (0..n).map(|_| UnitVector::e3()).collect(),
                    link_rates0: vec![Vec3::zeros(); n],
                    target: Vec3::zeros(),
                    duration: 10.0,
                    dt_int: 1e-3,
                    dt_ctrl: 1e-3,
                    dt_log: 1e-3,
                    enable_integral: true,
                    q_scale: 1.0,
                }
            }
        };
        if let Some(p) = self.params {
            sc.params = p.into_params();
            let n = sc.params.link_count();
            // Re-size the initial chain when the preset's does not match.
            if sc.link_dirs0.len() != n {
                sc.link_dirs0 = (0..n).map(|_| UnitVector::e3()).collect();
                sc.link_rates0 = vec![Vec3::zeros(); n];
            }
        }
        if let Some(g) = self.gains {
            sc.gains = g.into_gains()?;
        }
        if let Some(v) = self.x0 {
            sc.x0 = vec3(v);
        }
        if let Some(v) = self.v0 {
            sc.v0 = vec3(v);
        }
        if let Some(r) = self.r0 {
            sc.r0 = RotationMatrix::from_matrix(mat3(r))
                .map_err(|e| CliError::Scenario(format!("r0: {e}")))?;
        }
        if let Some(v) = self.omega0 {
            sc.omega0 = vec3(v);
        }
        if let Some(dirs) = self.link_dirs0 {
            sc.link_dirs0 = dirs
                .into_iter()
                .map(|d| {
                    UnitVector::new(vec3(d))
                        .map_err(|e| CliError::Scenario(format!("link_dirs0: {e}")))
                })
                .collect::<Result<_, _>>()?;
        }
        if let Some(rates) = self.link_rates0 {
            sc.link_rates0 = rates.into_iter().map(vec3).collect();
        }
        if let Some(v) = self.xd {
            sc.target = vec3(v);
        }
        if let Some(v) = self.duration {
            sc.duration = v;
        }
        if let Some(v) = self.dt_int {
            sc.dt_int = v;
        }
        if let Some(v) = self.dt_ctrl {
            sc.dt_ctrl = v;
        }
        if let Some(v) = self.dt_log {
            sc.dt_log = v;
        }
        if let Some(v) = self.enable_integral {
            sc.enable_integral = v;
        }
        if let Some(v) = self.q_scale {
            sc.q_scale = v;
        }
        sc.validate()?;
        Ok(sc)
    }
}

pub fn parse_scenario(json: &str) -> Result<Scenario, CliError> {
    let file: ScenarioFile = serde_json::from_str(json)?;
    file.resolve()
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}
