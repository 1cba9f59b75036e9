//! TOML run configuration shared by all CLI subcommands.
//!
//! The file carries material data, the fit/bootstrap/diagnostics settings,
//! and the evaluation grid for curves — everything about a run that is not
//! an input dataset. Unknown keys are rejected so a typo cannot silently
//! fall back to a default.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::calibration::FitConfig;
use crate::cmb::{CmbParams, MaterialModel};
use crate::error::{Error, Result};
use crate::io::StrainUnit;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Reference gauge area of the unit specimen, mm^2. Default 1.
    pub a_ref: Option<f64>,
    /// Unit of strain columns in input files. Default `fraction`.
    pub strain_unit: Option<StrainUnit>,
    /// Directory output files are written to. Default `.`.
    pub out_dir: Option<PathBuf>,
    /// Seed for stochastic subcommands. Default 0.
    pub seed: Option<u64>,
    pub material: Option<MaterialSection>,
    pub fit: Option<FitSection>,
    pub curve: Option<CurveSection>,
    pub bootstrap: Option<BootstrapSection>,
    pub diagnostics: Option<DiagnosticsSection>,
}

/// Material data. `elastic_modulus` is always required; the five model
/// parameters are required only by subcommands that evaluate a known model
/// instead of fitting one (and may instead come from a fit artifact via
/// `--model`).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub elastic_modulus: f64,
    pub sigma_f: Option<f64>,
    pub b: Option<f64>,
    pub eps_f: Option<f64>,
    pub c: Option<f64>,
    pub m: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub restarts: Option<usize>,
    /// Starting values `[sigma_f, b, eps_f, c, m]`.
    pub initial: Option<[f64; 5]>,
}

/// Evaluation grid: curves are produced for every combination of strain,
/// area, and quantile.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSection {
    pub strains: Vec<f64>,
    pub areas_mm2: Vec<f64>,
    pub quantiles: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSection {
    pub replicates: Option<usize>,
    pub level: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub permutations: Option<usize>,
    pub refit_shape: Option<bool>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| 1 + text[..s.start.min(text.len())].matches('\n').count() as u64)
                .unwrap_or(0);
            Error::schema(line, format!("config: {}", e.message()))
        })
    }

    pub fn a_ref(&self) -> f64 {
        self.a_ref.unwrap_or(1.0)
    }

    pub fn strain_unit(&self) -> StrainUnit {
        self.strain_unit.unwrap_or_default()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Elastic modulus from `[material]`; every subcommand needs it.
    pub fn elastic_modulus(&self) -> Result<f64> {
        self.material
            .as_ref()
            .map(|m| m.elastic_modulus)
            .ok_or_else(|| {
                Error::InvalidParameter(
                    "config needs a [material] section with elastic_modulus".into(),
                )
            })
    }

    /// Fully specified model from `[material]`, for subcommands that
    /// evaluate rather than fit.
    pub fn material_model(&self) -> Result<MaterialModel> {
        let section = self.material.as_ref().ok_or_else(|| {
            Error::InvalidParameter("config needs a [material] section".into())
        })?;
        let missing = || {
            Error::InvalidParameter(
                "[material] must specify sigma_f, b, eps_f, c and m (or pass \
                 --model with a fit artifact)"
                    .into(),
            )
        };
        let cmb = CmbParams::new(
            section.elastic_modulus,
            section.sigma_f.ok_or_else(missing)?,
            section.b.ok_or_else(missing)?,
            section.eps_f.ok_or_else(missing)?,
            section.c.ok_or_else(missing)?,
        )?;
        MaterialModel::new(cmb, section.m.ok_or_else(missing)?, self.a_ref())
    }

    /// Fit settings merged over defaults.
    pub fn fit_config(&self) -> Result<FitConfig> {
        let mut config = FitConfig::new(self.elastic_modulus()?);
        config.a_ref = self.a_ref();
        if let Some(fit) = &self.fit {
            if let Some(v) = fit.max_iterations {
                config.max_iterations = v;
            }
            if let Some(v) = fit.tolerance {
                config.tolerance = v;
            }
            if let Some(v) = fit.restarts {
                config.restarts = v;
            }
            config.initial = fit.initial;
        }
        Ok(config)
    }

    /// The `[curve]` grid, validated.
    pub fn curve_grid(&self) -> Result<&CurveSection> {
        let curve = self.curve.as_ref().ok_or_else(|| {
            Error::InvalidParameter(
                "config needs a [curve] section with strains, areas_mm2 and \
                 quantiles"
                    .into(),
            )
        })?;
        if curve.strains.is_empty() || curve.areas_mm2.is_empty() || curve.quantiles.is_empty() {
            return Err(Error::InvalidParameter(
                "[curve] lists strains, areas_mm2 and quantiles must all be \
                 non-empty"
                    .into(),
            ));
        }
        for &q in &curve.quantiles {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "[curve] quantile {q} must lie strictly inside (0, 1)"
                )));
            }
        }
        Ok(curve)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
a_ref = 1.0
strain_unit = "percent"
out_dir = "results"
seed = 7

[material]
elastic_modulus = 200000.0
sigma_f = 2000.0
b = -0.1
eps_f = 0.5
c = -0.6
m = 4.0

[fit]
max_iterations = 2000
tolerance = 1e-10
restarts = 3
initial = [2000.0, -0.1, 0.5, -0.6, 4.0]

[curve]
strains = [0.002, 0.004, 0.008]
areas_mm2 = [263.9]
quantiles = [0.1, 0.5, 0.9]

[bootstrap]
replicates = 200
level = 0.925

[diagnostics]
permutations = 5000
refit_shape = true
"#;

    #[test]
    fn parses_full_config() {
        let c = RunConfig::from_str(FULL).unwrap();
        assert_eq!(c.strain_unit(), StrainUnit::Percent);
        assert_eq!(c.seed(), 7);
        assert_eq!(c.out_dir(), PathBuf::from("results"));
        let model = c.material_model().unwrap();
        assert_eq!(model.m, 4.0);
        let fit = c.fit_config().unwrap();
        assert_eq!(fit.max_iterations, 2000);
        assert_eq!(fit.restarts, 3);
        assert_eq!(fit.initial, Some([2000.0, -0.1, 0.5, -0.6, 4.0]));
        assert_eq!(c.curve_grid().unwrap().strains.len(), 3);
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::from_str("[material]\nelastic_modulus = 1.9e5\n").unwrap();
        assert_eq!(c.a_ref(), 1.0);
        assert_eq!(c.strain_unit(), StrainUnit::Fraction);
        assert_eq!(c.seed(), 0);
        let fit = c.fit_config().unwrap();
        assert_eq!(fit.elastic_modulus, 1.9e5);
        assert_eq!(fit.max_iterations, 4000);
        assert!(c.material_model().is_err());
        assert!(c.curve_grid().is_err());
    }

    #[test]
    fn rejects_unknown_keys_with_line() {
        let err = RunConfig::from_str("a_ref = 1.0\nbogus_key = 3\n").unwrap_err();
        match err {
            Error::Schema { line, ref message } => {
                assert_eq!(line, 2, "{message}");
                assert!(message.contains("bogus_key"));
            }
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn rejects_type_errors() {
        let err = RunConfig::from_str("seed = \"abc\"\n").unwrap_err();
        assert!(matches!(err, Error::Schema { .. }));
    }

    #[test]
    fn missing_material_is_reported() {
        let c = RunConfig::from_str("a_ref = 1.0\n").unwrap();
        assert!(c.elastic_modulus().is_err());
    }

    #[test]
    fn curve_grid_validation() {
        let c = RunConfig::from_str(
            "[curve]\nstrains = [0.004]\nareas_mm2 = [263.9]\nquantiles = [1.5]\n",
        )
        .unwrap();
        assert!(c.curve_grid().is_err());
        let c = RunConfig::from_str(
            "[curve]\nstrains = []\nareas_mm2 = [263.9]\nquantiles = [0.5]\n",
        )
        .unwrap();
        assert!(c.curve_grid().is_err());
    }
}
