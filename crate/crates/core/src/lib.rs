//! Monte Carlo link-level simulation of a RIS-assisted single-antenna link whose surface
//! also reflects electromagnetic interference (EMI) toward the receiver.
//!
//! Two receivers are modelled over a coherence interval of `m` slots: the benchmark
//! passive beamformer, and an EMI-cancellation scheme that estimates the EMI in slot 1
//! and removes it in the remaining slots by flipping every RIS phase by pi. Around them
//! sit the sinc spatial-correlation model, a deterministic parallel trial engine, and
//! Gamma-distribution tools for outage analysis.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! it to `f64`, which is what the CLI uses.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod montecarlo;
pub mod output;
pub mod rng;
pub mod scalar;
pub mod scenario;
pub mod schemes;

pub use config::{Constellation, LinkBudget, SystemConfig};
pub use error::{Error, Result};
pub use montecarlo::{run_sweep, simulate_point, SweepParam, SweepResult, SweepSpec};
pub use scalar::Real;
pub use schemes::{Detection, Scheme};

pub type Budget = config::LinkBudget<f64>;
pub type Correlation = channel::CorrelationModel<f64>;
pub type Block = channel::CoherenceBlock<f64>;
pub type Phases = schemes::PhaseConfig<f64>;
pub type Slot = schemes::SlotResult<f64>;
pub type Outcome = schemes::BlockOutcome<f64>;
pub type Fit = analysis::GammaFit<f64>;
pub type Sim = scenario::Scenario<f64>;
