//! Run configuration: one JSON document holding the network, the engine
//! settings and optional initial prices.

use std::path::Path;

use priceflow_core::dual::PriceVector;
use priceflow_core::engine::EngineConfig;
use priceflow_core::model::{validate_network, NetworkSpec, ValidatedNetwork};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub network: NetworkSpec,
    pub engine: EngineConfig,
    /// One price per link; all zeros when omitted.
    #[serde(default)]
    pub initial_prices: Option<Vec<f64>>,
}

/// A config whose every part has been validated.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub file: RunConfigFile,
    pub network: ValidatedNetwork,
    pub initial_prices: PriceVector,
}

impl RunConfigFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn resolve(mut self) -> Result<ResolvedConfig, CliError> {
        let network = validate_network(&self.network).map_err(|e| CliError::Config(e.to_string()))?;
        self.engine
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let p0 = self
            .initial_prices
            .get_or_insert_with(|| vec![0.0; network.num_links()])
            .clone();
        if p0.len() != network.num_links() {
            return Err(CliError::Config(format!(
                "initial_prices has {} entries for {} links",
                p0.len(),
                network.num_links()
            )));
        }
        let initial_prices = PriceVector::new(p0)
            .map_err(|e| CliError::Config(format!("initial_prices: {e}")))?;
        Ok(ResolvedConfig {
            file: self,
            network,
            initial_prices,
        })
    }
}

impl ResolvedConfig {
    /// The config with every default written out.
    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(&self.file).expect("config serializes")
    }
}
