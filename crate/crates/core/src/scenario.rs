use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;

use crate::channel::{sample_coherence_block, CoherenceBlock, CorrelationModel};
use crate::config::{LinkBudget, SystemConfig};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A validated configuration bundled with everything derived from it.
#[derive(Debug, Clone)]
pub struct Scenario<T> {
    config: SystemConfig,
    budget: LinkBudget<T>,
    correlation: Arc<CorrelationModel<T>>,
    symbols: Vec<Complex<T>>,
}

impl<T: Real> Scenario<T> {
    pub fn new(config: &SystemConfig) -> Result<Self> {
        let correlation = Arc::new(CorrelationModel::build(config)?);
        Self::with_correlation(config, correlation)
    }

    /// Reuses an existing correlation model; its size must match `config.n_elements`.
    pub fn with_correlation(config: &SystemConfig, correlation: Arc<CorrelationModel<T>>) -> Result<Self> {
        let budget = LinkBudget::from_config(config)?;
        if correlation.n_elements() != config.n_elements {
            return Err(Error::Config(format!(
                "correlation model has {} elements but the configuration asks for {}",
                correlation.n_elements(),
                config.n_elements
            )));
        }
        Ok(Self {
            config: config.resolved(),
            budget,
            correlation,
            symbols: config.constellation.symbols(),
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn budget(&self) -> &LinkBudget<T> {
        &self.budget
    }

    pub fn correlation(&self) -> &CorrelationModel<T> {
        &self.correlation
    }

    pub fn shared_correlation(&self) -> Arc<CorrelationModel<T>> {
        Arc::clone(&self.correlation)
    }

    pub fn symbols(&self) -> &[Complex<T>] {
        &self.symbols
    }

    pub fn slots(&self) -> usize {
        self.config.slots_per_block
    }

    pub fn sample_block<R: Rng + ?Sized>(&self, rng: &mut R) -> CoherenceBlock<T> {
        sample_coherence_block(&self.correlation, &self.budget, self.slots(), rng)
    }
}
