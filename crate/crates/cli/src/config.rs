use std::path::Path;

use serde::{Deserialize, Serialize};
use tbdf_core::lattice::{BoxMode, ScfOptions};
use tbdf_core::radial::ChargeDensitySpec;
use tbdf_core::screening::{DebyeOptions, ResponseOptions, ResponseRoute, ScreeningOptions};
use tbdf_core::vacuum::VacuumOptions;
use tbdf_core::ModelParams;

use crate::error::CliError;

/// Everything a run depends on. The output directory is deliberately not part
/// of it so that files written to different directories are identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    pub model: ModelConfig,
    pub vacuum: VacuumOptions,
    pub response: ResponseConfig,
    pub screen: ScreenConfig,
    #[serde(rename = "box")]
    pub box_: BoxRunConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            beta: 1.0,
            lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResponseConfig {
    /// Tabulation grid of C on [0, 2 Lambda].
    pub panels: usize,
    pub order: usize,
    pub route: ResponseRoute,
    pub direct_order: usize,
    pub reduced_order: usize,
    /// Number of equally spaced k samples written to the table.
    pub samples: usize,
    /// Position-space samples of b1, b2: x_start, x_start + x_step, ..., x_end.
    pub x_start: f64,
    pub x_end: f64,
    pub x_step: f64,
}

impl Default for ResponseConfig {
    fn default() -> Self {
        let q = ResponseOptions::default();
        Self {
            panels: 4,
            order: 16,
            route: ResponseRoute::Direct,
            direct_order: q.direct_order,
            reduced_order: q.reduced_order,
            samples: 41,
            x_start: 1.0,
            x_end: 50.0,
            x_step: 0.5,
        }
    }
}

impl ResponseConfig {
    pub fn quadrature(&self) -> ResponseOptions {
        ResponseOptions {
            direct_order: self.direct_order,
            reduced_order: self.reduced_order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScreenConfig {
    pub nu: ChargeDensitySpec,
    pub x_max: f64,
    pub charge_radius: f64,
    pub report: DebyeOptions,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        let s = ScreeningOptions::default();
        Self {
            nu: ChargeDensitySpec::gaussian(1.0, 1.0),
            x_max: s.x_max,
            charge_radius: s.charge_radius,
            report: DebyeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoxRunConfig {
    pub length: f64,
    pub mode: BoxMode,
    pub nu: ChargeDensitySpec,
    pub scf: ScfOptions,
    /// Tolerance of the vacuum solve behind the full-mode reference.
    pub vacuum_tol: f64,
}

impl Default for BoxRunConfig {
    fn default() -> Self {
        Self {
            length: 12.0,
            mode: BoxMode::Reduced,
            nu: ChargeDensitySpec::gaussian(1.0, 1.0),
            scf: ScfOptions::default(),
            vacuum_tol: 1e-13,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            seed: 0,
            model: ModelConfig::default(),
            vacuum: VacuumOptions::default(),
            response: ResponseConfig::default(),
            screen: ScreenConfig::default(),
            box_: BoxRunConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let p = ModelParams::new(self.model.alpha, self.model.beta, self.model.lambda)?;
        p.validate_interacting()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params()?;
        self.vacuum.validate()?;
        let r = &self.response;
        if r.panels == 0 || r.order < 2 || r.direct_order == 0 || r.reduced_order == 0 || r.samples < 2 {
            return Err(CliError::Validation("response grid sizes are too small".into()));
        }
        if !(r.x_start > 0.0 && r.x_end > r.x_start && r.x_step > 0.0) {
            return Err(CliError::Validation("response x range must satisfy 0 < x_start < x_end, x_step > 0".into()));
        }
        let s = &self.screen;
        if !(s.x_max > 0.0 && s.charge_radius > 0.0) {
            return Err(CliError::Validation("screen ranges must be positive".into()));
        }
        if !(self.box_.length > 0.0 && self.box_.vacuum_tol > 0.0) {
            return Err(CliError::Validation("box length and vacuum_tol must be positive".into()));
        }
        Ok(())
    }

    /// TOML echo of the configuration, one `# ` prefixed line per line.
    pub fn header(&self) -> String {
        let text = toml::to_string(self).expect("configuration serializes");
        text.lines()
            .map(|l| if l.is_empty() { "#\n".to_string() } else { format!("# {l}\n") })
            .collect()
    }
}
