//! Run configuration: JSON config files, flag overrides, and the resolved
//! config echo that makes every run reproducible.

use serde::{Deserialize, Serialize};
use specband::{Error, Potential};
use std::path::Path;

/// Potential specification as it appears in config files:
/// `{"kind": "square", "v": [c0, ..., 1], "g": 1.0}` or
/// `{"kind": "poly", "V": [...], "g": 1.0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    #[serde(rename = "V", skip_serializing_if = "Option::is_none")]
    pub v_upper: Option<Vec<f64>>,
    pub g: f64,
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential, Error> {
        match self.kind.as_str() {
            "square" => {
                let coeffs = self.v.clone().ok_or_else(|| {
                    Error::precondition("cli.config", "square potential needs the \"v\" list")
                })?;
                Potential::square(coeffs, self.g)
            }
            "poly" => {
                let coeffs = self.v_upper.clone().ok_or_else(|| {
                    Error::precondition("cli.config", "poly potential needs the \"V\" list")
                })?;
                Potential::poly(coeffs, self.g)
            }
            other => Err(Error::precondition(
                "cli.config",
                format!("unknown potential kind {other:?}"),
            )),
        }
    }

    pub fn square_from_parts(v: Vec<f64>, g: f64) -> Self {
        PotentialSpec {
            kind: "square".into(),
            v: Some(v),
            v_upper: None,
            g,
        }
    }
}

/// Full parameter record for one run; unknown keys are rejected. Every
/// subcommand uses the subset it needs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_support: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub section: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients_r: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients_s: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surface_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }

    /// Field-wise overlay: values set in `over` win.
    pub fn merged_with(mut self, over: RunConfig) -> RunConfig {
        macro_rules! take {
            ($($f:ident),*) => {
                $(if over.$f.is_some() { self.$f = over.$f; })*
            };
        }
        take!(
            subcommand, potential, n, l_max, grid, half_width, fixed_support, residual_tol,
            max_iterations, section, lambda_min, lambda_max, lambda_points, coefficients_r,
            coefficients_s, surface_points, k_window, chains, sweeps, burn_in, thin, seed,
            interval, quad_order, n_list, z_im, suite, workers
        );
        self
    }
}
