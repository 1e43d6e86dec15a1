//! Run configuration read from strict JSON.

use std::path::{Path, PathBuf};

use adol_core::charfn::CorrectionConfig;
use adol_core::montecarlo::McSpec;
use adol_core::pricing::{FourierPricingSpec, VarSwapSpec};
use adol_core::AdolModel;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

fn baseline() -> AdolModel {
    AdolModel::baseline()
}

/// A partial model block overrides the worked-example parameters key by key.
fn model_over_baseline<'de, D: serde::Deserializer<'de>>(d: D) -> Result<AdolModel, D::Error> {
    use serde::de::Error;
    let given = serde_json::Map::<String, serde_json::Value>::deserialize(d)?;
    let mut merged = match serde_json::to_value(baseline()).map_err(D::Error::custom)? {
        serde_json::Value::Object(m) => m,
        _ => unreachable!("model serialises to an object"),
    };
    merged.extend(given);
    serde_json::from_value(serde_json::Value::Object(merged)).map_err(D::Error::custom)
}

fn default_strikes() -> Vec<f64> {
    (0..=8).map(|j| (80 + 5 * j) as f64 / 100.0).collect()
}

fn default_orders() -> Vec<usize> {
    vec![0, 1, 2]
}

fn default_true() -> bool {
    true
}

fn default_n_paths() -> usize {
    100_000
}

fn default_n_steps() -> usize {
    500
}

fn default_seed() -> u64 {
    2024
}

fn default_n_observations() -> usize {
    25
}

fn default_u_step() -> f64 {
    VarSwapSpec::new(vec![1.0]).u_step
}

fn default_mc_states() -> usize {
    VarSwapSpec::new(vec![1.0]).mc_states
}

fn default_state_steps() -> usize {
    VarSwapSpec::new(vec![1.0]).state_steps
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_format_version() -> u32 {
    FORMAT_VERSION
}

fn default_u_grid() -> Vec<f64> {
    (0..=40).map(|j| 0.5 * j as f64).collect()
}

fn default_h_grid() -> Vec<f64> {
    (1..=99).map(|j| j as f64 / 100.0).collect()
}

fn default_residual_points() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LadderMethod {
    Quadrature,
    Fft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingBlock {
    #[serde(default)]
    pub fourier: FourierPricingSpec,
    /// Absolute strikes.
    #[serde(default = "default_strikes")]
    pub strikes: Vec<f64>,
    #[serde(default = "default_true")]
    pub is_call: bool,
    /// Expansion orders priced by the `price` command.
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    #[serde(default = "default_ladder")]
    pub ladder: LadderMethod,
    /// Add a Monte Carlo row per strike.
    #[serde(default = "default_true")]
    pub include_mc: bool,
}

fn default_ladder() -> LadderMethod {
    LadderMethod::Quadrature
}

impl Default for PricingBlock {
    fn default() -> Self {
        Self {
            fourier: FourierPricingSpec::default(),
            strikes: default_strikes(),
            is_call: true,
            orders: default_orders(),
            ladder: default_ladder(),
            include_mc: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub t_start: Option<f64>,
    #[serde(default = "default_true")]
    pub antithetic: bool,
}

impl Default for McBlock {
    fn default() -> Self {
        Self {
            n_paths: default_n_paths(),
            n_steps: default_n_steps(),
            seed: default_seed(),
            t_start: None,
            antithetic: true,
        }
    }
}

impl McBlock {
    pub fn spec(&self) -> McSpec {
        McSpec {
            n_paths: self.n_paths,
            n_steps: self.n_steps,
            seed: self.seed,
            t_start: self.t_start,
            antithetic: self.antithetic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarSwapBlock {
    /// Observation dates; empty means `n_observations` equal legs to T.
    #[serde(default)]
    pub observation_times: Vec<f64>,
    #[serde(default = "default_n_observations")]
    pub n_observations: usize,
    #[serde(default = "default_u_step")]
    pub u_step: f64,
    #[serde(default = "default_mc_states")]
    pub mc_states: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_state_steps")]
    pub state_steps: usize,
}

impl Default for VarSwapBlock {
    fn default() -> Self {
        Self {
            observation_times: Vec::new(),
            n_observations: default_n_observations(),
            u_step: default_u_step(),
            mc_states: default_mc_states(),
            seed: default_seed(),
            state_steps: default_state_steps(),
        }
    }
}

impl VarSwapBlock {
    pub fn spec(&self) -> VarSwapSpec {
        VarSwapSpec {
            observation_times: self.observation_times.clone(),
            u_step: self.u_step,
            mc_states: self.mc_states,
            seed: self.seed,
            state_steps: self.state_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    /// Real frequencies for the `cf` and `ledger` commands.
    #[serde(default = "default_u_grid")]
    pub u: Vec<f64>,
    /// Hurst exponents for the `constants` command.
    #[serde(default = "default_h_grid")]
    pub h: Vec<f64>,
    /// Random interior points of the PDE-residual check.
    #[serde(default = "default_residual_points")]
    pub residual_points: usize,
}

impl Default for GridBlock {
    fn default() -> Self {
        Self { u: default_u_grid(), h: default_h_grid(), residual_points: default_residual_points() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_format_version")]
    pub format_version: u32,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { directory: default_directory(), format_version: FORMAT_VERSION }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "baseline", deserialize_with = "model_over_baseline")]
    pub model: AdolModel,
    #[serde(default)]
    pub cf: CorrectionConfig,
    #[serde(default)]
    pub pricing: PricingBlock,
    #[serde(default)]
    pub varswap: VarSwapBlock,
    #[serde(default)]
    pub mc: McBlock,
    #[serde(default)]
    pub grids: GridBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: baseline(),
            cf: CorrectionConfig::default(),
            pricing: PricingBlock::default(),
            varswap: VarSwapBlock::default(),
            mc: McBlock::default(),
            grids: GridBlock::default(),
            output: OutputBlock::default(),
        }
    }
}

/// Parse strict JSON, reporting the line and column of any failure.
pub fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Validation(format!("{what}: {e}")))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = parse_json(&text, &path.display().to_string())?;
        cfg.resolve()
    }

    /// Fill derived defaults and validate every block.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let v = |r: adol_core::Result<()>| r.map_err(CliError::from);
        if self.output.format_version != FORMAT_VERSION {
            return Err(CliError::Validation(format!(
                "output.format_version: expected {FORMAT_VERSION}, got {}",
                self.output.format_version
            )));
        }
        v(self.model.validate())?;
        v(self.cf.validate())?;
        v(self.pricing.fourier.validate())?;
        if self.pricing.strikes.is_empty() || self.pricing.strikes.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            return Err(CliError::Validation("pricing.strikes: need at least one strike, all > 0".into()));
        }
        if self.pricing.orders.iter().any(|&o| o > 2) {
            return Err(CliError::Validation("pricing.orders: orders must lie in 0..=2".into()));
        }
        if self.varswap.observation_times.is_empty() {
            let n = self.varswap.n_observations;
            if n == 0 {
                return Err(CliError::Validation("varswap.n_observations: must be >= 1".into()));
            }
            let t = self.model.t_mat;
            self.varswap.observation_times = (1..=n).map(|j| t * j as f64 / n as f64).collect();
        }
        self.varswap.n_observations = self.varswap.observation_times.len();
        v(self.varswap.spec().validate(&self.model))?;
        v(self.mc.spec().validate(&self.model))?;
        if self.grids.u.iter().any(|u| !u.is_finite()) {
            return Err(CliError::Validation("grids.u: entries must be finite".into()));
        }
        if self.grids.h.iter().any(|h| !(*h > 0.0 && *h < 1.0)) {
            return Err(CliError::Validation("grids.h: entries must lie in (0, 1)".into()));
        }
        Ok(self)
    }

    /// Apply a `--seed` override to every random stream.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.mc.seed = s;
            self.varswap.seed = s;
        }
        self
    }
}
