use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use treeharm::harness::Scenario;

use crate::error::CliError;

pub const SEED_ENV: &str = "TREEHARM_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Numeric knobs shared by the subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Truncation tolerance of the heat series.
    pub heat_series: f64,
    /// Strip residual a synthesized kernel must reach.
    pub kernel_synthesis: f64,
    /// Largest support tried by adaptive kernel synthesis.
    pub kernel_max_support: usize,
    /// Boundary-line grid of the extrema search.
    pub extrema_grid: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { heat_series: 1e-12, kernel_synthesis: 1e-8, kernel_max_support: 40, extrema_grid: 4096 }
    }
}

/// One JSON document driving a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub q: usize,
    /// Truncation radius `R`; also the default table length.
    pub radius: usize,
    /// Boundary sector depth `D`.
    pub depth: usize,
    pub p: f64,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub scenarios: Vec<Scenario>,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            q: 2,
            radius: 14,
            depth: 6,
            p: 1.5,
            seed: 0,
            tolerances: Tolerances::default(),
            scenarios: Vec::new(),
            output_dir: PathBuf::from("treeharm-out"),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

fn bad(field: &str, msg: impl Into<String>) -> CliError {
    CliError::Config { field: field.to_string(), message: msg.into() }
}

impl RunConfig {
    /// Read a config file. A bare JSON array is taken as the scenario list.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad("config", format!("{}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| bad("config", format!("{}: {e}", path.display())))?;
        let cfg = if value.is_array() {
            let scenarios = serde_json::from_value(value).map_err(|e| bad("scenarios", e.to_string()))?;
            Self { scenarios, ..Self::default() }
        } else {
            serde_json::from_value(value).map_err(|e| bad("config", e.to_string()))?
        };
        Ok(cfg)
    }

    /// Apply `TREEHARM_SEED` if it is set.
    pub fn apply_env(&mut self, value: Option<String>) -> Result<(), CliError> {
        if let Some(v) = value {
            self.seed = v.trim().parse().map_err(|_| bad(SEED_ENV, format!("'{v}' is not an unsigned 64-bit integer")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.q < 2 {
            return Err(bad("q", format!("{} < 2; the tree needs q + 1 >= 3 neighbours", self.q)));
        }
        if self.radius < 1 || self.radius > 2047 {
            return Err(bad("radius", format!("{} outside 1..=2047", self.radius)));
        }
        if self.depth < 1 || self.depth > self.radius.min(8) {
            return Err(bad("depth", format!("{} outside 1..=min(radius, 8)", self.depth)));
        }
        if !(1.0..2.0).contains(&self.p) {
            return Err(bad("p", format!("{} outside [1, 2)", self.p)));
        }
        let t = &self.tolerances;
        if !(t.heat_series > 0.0 && t.heat_series < 1.0) {
            return Err(bad("tolerances.heat_series", format!("{} outside (0, 1)", t.heat_series)));
        }
        if !(t.kernel_synthesis > 0.0 && t.kernel_synthesis.is_finite()) {
            return Err(bad("tolerances.kernel_synthesis", format!("{} must be positive", t.kernel_synthesis)));
        }
        if t.kernel_max_support == 0 {
            return Err(bad("tolerances.kernel_max_support", "must be at least 1"));
        }
        if t.extrema_grid < 8 {
            return Err(bad("tolerances.extrema_grid", format!("{} < 8", t.extrema_grid)));
        }
        if self.formats.is_empty() {
            return Err(bad("formats", "at least one of json, csv"));
        }
        let mut names: Vec<&str> = self.scenarios.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(bad("scenarios", format!("duplicate scenario name '{}'", w[0])));
        }
        if let Some(s) = self.scenarios.iter().find(|s| s.name.is_empty() || s.name.contains(['/', '\\'])) {
            return Err(bad("scenarios", format!("scenario name '{}' is not usable as a file name", s.name)));
        }
        Ok(())
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}
