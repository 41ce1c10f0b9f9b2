//! Trial driver and sweep aggregation.
//!
//! A trial is one T2 coherence block. Trial `k` of every sweep point draws from the stream
//! `(seed, k)`, so points share their random numbers and every result is independent of
//! how trials are spread over threads. Aggregation runs in trial order.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::CorrelationModel;
use crate::config::{linear_to_db, SystemConfig};
use crate::error::{Error, Result};
use crate::rng::trial_stream;
use crate::scalar::{compensated_sum, to_f64, Real};
use crate::scenario::Scenario;
use crate::schemes::{run_block, Scheme};

pub const TOOL_VERSION: &str = concat!("ris-emi ", env!("CARGO_PKG_VERSION"));

/// Default trials per point for mean-SINR sweeps.
pub const DEFAULT_MEAN_TRIALS: usize = 10_000;
/// Default trials per point for outage sweeps.
pub const DEFAULT_OUTAGE_TRIALS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    TransmitPowerDbm,
    NElements,
    /// N_H; sets `n_elements = N_H^2`.
    ElementsPerSide,
    SlotsPerBlock,
    RhoDb,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::TransmitPowerDbm => "transmit_power_dbm",
            SweepParam::NElements => "n_elements",
            SweepParam::ElementsPerSide => "elements_per_side",
            SweepParam::SlotsPerBlock => "slots_per_block",
            SweepParam::RhoDb => "rho_db",
        }
    }

    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let count = |v: f64| -> Result<usize> {
            if v.is_finite() && v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{} must be a whole number, got {v}", self.name())))
            }
        };
        let mut cfg = base.clone();
        match self {
            SweepParam::TransmitPowerDbm => cfg.transmit_power_dbm = value,
            SweepParam::NElements => cfg.n_elements = count(value)?,
            SweepParam::ElementsPerSide => {
                let side = count(value)?;
                cfg.n_elements = side.checked_mul(side).ok_or_else(|| Error::Config(format!("N_H = {side} too large")))?;
            }
            SweepParam::SlotsPerBlock => cfg.slots_per_block = count(value)?,
            SweepParam::RhoDb => cfg.rho_db = Some(value),
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    /// Outage thresholds `r` on the linear `SINR_m`.
    pub thresholds: Vec<f64>,
}

impl SweepSpec {
    pub fn validate(&self, base: &SystemConfig) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no scheme selected".into()));
        }
        if let Some(r) = self.thresholds.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::Config(format!("outage threshold must be positive, got {r}")));
        }
        for &v in &self.values {
            self.param.apply(base, v)?;
        }
        Ok(())
    }
}

/// Per-trial `SINR_m` samples of one scheme at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSamples {
    pub scheme: Scheme,
    /// Closed-form `SINR_m` per trial (linear).
    pub sinr: Vec<f64>,
    pub sinr_realized: Vec<f64>,
    /// Trials whose slot-1 symbol was detected wrongly.
    pub first_slot_errors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSamples {
    pub config: SystemConfig,
    pub schemes: Vec<SchemeSamples>,
}

impl PointSamples {
    pub fn scheme(&self, scheme: Scheme) -> Option<&SchemeSamples> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }
}

/// Runs `trials` coherence blocks through each of `schemes`.
///
/// Every scheme sees the same block and the same symbol draws: the trial stream after the
/// block has been sampled is cloned per scheme.
pub fn simulate_point<T: Real>(
    scenario: &Scenario<T>,
    trials: usize,
    seed: u64,
    schemes: &[Scheme],
) -> Result<PointSamples> {
    let per_trial = (0..trials)
        .into_par_iter()
        .with_min_len(16)
        .map(|k| {
            let mut rng = trial_stream(seed, k as u64);
            let block = scenario.sample_block(&mut rng);
            schemes
                .iter()
                .map(|&scheme| {
                    let out = run_block(scheme, &block, scenario, &mut rng.clone())?;
                    Ok((to_f64(out.sinr_closed), to_f64(out.sinr_realized), out.first_slot_error()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let schemes = schemes
        .iter()
        .enumerate()
        .map(|(j, &scheme)| {
            let mut s = SchemeSamples {
                scheme,
                sinr: Vec::with_capacity(trials),
                sinr_realized: Vec::with_capacity(trials),
                first_slot_errors: 0,
            };
            for trial in &per_trial {
                let (closed, realized, err) = trial[j];
                s.sinr.push(closed);
                s.sinr_realized.push(realized);
                s.first_slot_errors += usize::from(err);
            }
            s
        })
        .collect();
    Ok(PointSamples {
        config: scenario.config().clone(),
        schemes,
    })
}

/// Fraction of samples strictly below `threshold`.
pub fn empirical_outage(samples: &[f64], threshold: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("outage of an empty sample set".into()));
    }
    let below = samples.iter().filter(|&&x| x < threshold).count();
    Ok(below as f64 / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutagePoint {
    pub threshold: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub mean_sinr: f64,
    pub mean_sinr_db: f64,
    /// Standard error of `mean_sinr`.
    pub stderr: f64,
    /// Standard error mapped to dB around the mean.
    pub stderr_db: f64,
    pub mean_sinr_realized: f64,
    pub outage: Vec<OutagePoint>,
    /// Closed-form outage per threshold, when a Gamma model was supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theoretical_outage: Option<Vec<OutagePoint>>,
    pub det_err_rate: f64,
    pub trials: usize,
}

impl SchemeSummary {
    pub fn from_samples(samples: &SchemeSamples, thresholds: &[f64]) -> Result<Self> {
        let n = samples.sinr.len();
        if n == 0 {
            return Err(Error::Domain("no trials to summarize".into()));
        }
        let nf = n as f64;
        let mean = compensated_sum(samples.sinr.iter().copied()) / nf;
        let var = if n > 1 {
            compensated_sum(samples.sinr.iter().map(|x| (x - mean) * (x - mean))) / (nf - 1.0)
        } else {
            0.0
        };
        let stderr = (var / nf).sqrt();
        let outage = thresholds
            .iter()
            .map(|&r| {
                Ok(OutagePoint {
                    threshold: r,
                    probability: empirical_outage(&samples.sinr, r)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            scheme: samples.scheme,
            mean_sinr: mean,
            mean_sinr_db: linear_to_db(mean),
            stderr,
            stderr_db: 10.0 / std::f64::consts::LN_10 * stderr / mean,
            mean_sinr_realized: compensated_sum(samples.sinr_realized.iter().copied()) / nf,
            outage,
            theoretical_outage: None,
            det_err_rate: samples.first_slot_errors as f64 / nf,
            trials: n,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub swept_value: f64,
    pub config: SystemConfig,
    pub schemes: Vec<SchemeSummary>,
}

impl PointSummary {
    pub fn scheme(&self, scheme: Scheme) -> Option<&SchemeSummary> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub base: SystemConfig,
    pub points: Vec<PointSummary>,
    pub version: String,
}

impl SweepResult {
    /// `(swept value, mean SINR)` series for one scheme.
    pub fn mean_curve(&self, scheme: Scheme) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.scheme(scheme).map(|s| (p.swept_value, s.mean_sinr)))
            .collect()
    }
}

/// Runs every point of `spec`, rebuilding the correlation model only when N changes.
pub fn run_sweep<T: Real>(spec: &SweepSpec, base: &SystemConfig) -> Result<SweepResult> {
    run_sweep_with::<T>(spec, base, |_, _| Ok(()))
}

/// Like [`run_sweep`], handing each point's raw samples to `inspect` before they are dropped.
pub fn run_sweep_with<T: Real>(
    spec: &SweepSpec,
    base: &SystemConfig,
    mut inspect: impl FnMut(&PointSamples, &mut PointSummary) -> Result<()>,
) -> Result<SweepResult> {
    spec.validate(base)?;
    let mut models: HashMap<usize, Arc<CorrelationModel<T>>> = HashMap::new();
    let mut points = Vec::with_capacity(spec.values.len());
    for &value in &spec.values {
        let cfg = spec.param.apply(base, value)?;
        let corr = match models.get(&cfg.n_elements) {
            Some(c) => Arc::clone(c),
            None => {
                let c = Arc::new(CorrelationModel::build(&cfg)?);
                models.insert(cfg.n_elements, Arc::clone(&c));
                c
            }
        };
        let scenario = Scenario::with_correlation(&cfg, corr)?;
        let samples = simulate_point(&scenario, spec.trials, spec.seed, &spec.schemes)?;
        let schemes = samples
            .schemes
            .iter()
            .map(|s| SchemeSummary::from_samples(s, &spec.thresholds))
            .collect::<Result<Vec<_>>>()?;
        let mut summary = PointSummary {
            swept_value: value,
            config: scenario.config().clone(),
            schemes,
        };
        inspect(&samples, &mut summary)?;
        points.push(summary);
    }
    Ok(SweepResult {
        spec: spec.clone(),
        base: base.resolved(),
        points,
        version: TOOL_VERSION.to_string(),
    })
}
