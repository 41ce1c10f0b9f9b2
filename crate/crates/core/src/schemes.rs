//! Receivers for one coherence block: the benchmark passive beamformer and the
//! EMI-cancelling scheme.
//!
//! Conventions: `Theta = diag(e^{j theta_i})`, so `h2^H Theta^H v = sum conj(x_i) v_i` with
//! `x = Theta h2`. The noiseless amplitude of a symbol at the receiver is `sqrt(P) * gain`,
//! and detection, EMI extraction and the residual interference all use that amplitude.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::CoherenceBlock;
use crate::config::LinkBudget;
use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Real};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Benchmark,
    Proposed,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::Benchmark, Scheme::Proposed];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Benchmark => "benchmark",
            Scheme::Proposed => "proposed",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How the first-slot symbol is recovered before the EMI sample is extracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Detection {
    #[default]
    MaximumLikelihood,
    /// Test hook: take the transmitted symbol as detected, isolating the cancellation
    /// from detection errors.
    ForcedCorrect,
}

/// Wraps an angle into `[0, 2 pi)`.
pub fn wrap_phase<T: Real>(theta: T) -> T {
    let two_pi = T::TAU();
    let mut w = theta % two_pi;
    if w < T::zero() {
        w = w + two_pi;
    }
    if w >= two_pi {
        w = T::zero();
    }
    w
}

/// RIS phase shifts, unit amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig<T> {
    phases: Vec<T>,
}

impl<T: Real> PhaseConfig<T> {
    pub fn new(phases: Vec<T>) -> Result<Self> {
        if let Some(bad) = phases.iter().find(|p| !p.is_finite()) {
            return Err(Error::Domain(format!("phase shift {bad} is not finite")));
        }
        Ok(Self {
            phases: phases.into_iter().map(wrap_phase).collect(),
        })
    }

    pub fn phases(&self) -> &[T] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// `Theta v`.
    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        self.phases
            .iter()
            .zip(v)
            .map(|(&th, &vi)| Complex::from_polar(T::one(), th) * vi)
            .collect()
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Domain(format!("vector lengths differ: {a} vs {b}")));
    }
    Ok(())
}

/// `theta_i = arg(h1_i conj(h2_i))` wrapped into `[0, 2 pi)`; `arg(0)` is taken as 0.
pub fn beamforming_phases<T: Real>(h1: &[Complex<T>], h2: &[Complex<T>]) -> Result<PhaseConfig<T>> {
    check_lengths(h1.len(), h2.len())?;
    let phases = h1
        .iter()
        .zip(h2)
        .map(|(a, b)| {
            let p = a * b.conj();
            if p.re == T::zero() && p.im == T::zero() {
                T::zero()
            } else {
                p.arg()
            }
        })
        .collect();
    PhaseConfig::new(phases)
}

/// `B = sum_i |h1_i| |h2_i|`.
pub fn effective_gain<T: Real>(h1: &[Complex<T>], h2: &[Complex<T>]) -> T {
    compensated_sum(h1.iter().zip(h2).map(|(a, b)| a.norm() * b.norm()))
}

/// `sum conj(a_i) b_i`.
fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    let re = compensated_sum(a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im));
    let im = compensated_sum(a.iter().zip(b).map(|(x, y)| x.re * y.im - x.im * y.re));
    Complex::new(re, im)
}

/// Cascaded channel `h2^H Theta^H h1`.
pub fn cascade_gain<T: Real>(h2: &[Complex<T>], phases: &PhaseConfig<T>, h1: &[Complex<T>]) -> Complex<T> {
    inner(&phases.apply(h2), h1)
}

/// EMI reaching the receiver, `h2^H Theta^H n`.
pub fn reflected_emi<T: Real>(h2: &[Complex<T>], phases: &PhaseConfig<T>, emi: &[Complex<T>]) -> Complex<T> {
    inner(&phases.apply(h2), emi)
}

struct SlotTerms<T> {
    /// `Theta h2`
    steered: Vec<Complex<T>>,
    gain: Complex<T>,
    emi: Complex<T>,
}

fn slot_terms<T: Real>(block: &CoherenceBlock<T>, index: usize, phases: &PhaseConfig<T>) -> SlotTerms<T> {
    let steered = phases.apply(&block.h2);
    let gain = inner(&steered, &block.h1_slots[index]);
    let emi = inner(&steered, &block.emi);
    SlotTerms { steered, gain, emi }
}

/// `y_t = h2^H Theta^H h1,t sqrt(P) s + h2^H Theta^H n + w_t` for 1-based slot `t`.
pub fn received_signal<T: Real>(
    block: &CoherenceBlock<T>,
    slot: usize,
    phases: &PhaseConfig<T>,
    symbol: Complex<T>,
    budget: &LinkBudget<T>,
) -> Result<Complex<T>> {
    if slot == 0 || slot > block.slots() {
        return Err(Error::Index {
            index: slot,
            n_elements: block.slots(),
        });
    }
    check_lengths(phases.len(), block.n_elements())?;
    let terms = slot_terms(block, slot - 1, phases);
    Ok(terms.gain * symbol * budget.sqrt_power() + terms.emi + block.noise_slots[slot - 1])
}

/// Index of the symbol minimising `|y - gain s|^2`; ties go to the lowest index.
pub fn ml_detect<T: Real>(y: Complex<T>, gain: Complex<T>, symbols: &[Complex<T>]) -> Result<usize> {
    if symbols.is_empty() {
        return Err(Error::Config("constellation is empty".into()));
    }
    if !(gain.re.is_finite() && gain.im.is_finite()) {
        return Err(Error::Domain("detector gain is not finite".into()));
    }
    let mut best = 0;
    let mut best_metric = T::infinity();
    for (i, s) in symbols.iter().enumerate() {
        let metric = (y - gain * s).norm_sqr();
        if metric < best_metric {
            best = i;
            best_metric = metric;
        }
    }
    Ok(best)
}

/// `E~ = y1 - gain * s^1`.
pub fn extract_emi_sample<T: Real>(y1: Complex<T>, gain: Complex<T>, detected: Complex<T>) -> Complex<T> {
    y1 - gain * detected
}

/// `Theta' = e^{j pi} Theta`.
pub fn cancellation_phases<T: Real>(slot1: &PhaseConfig<T>) -> PhaseConfig<T> {
    PhaseConfig {
        phases: slot1.phases.iter().map(|&p| wrap_phase(p + T::PI())).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotResult<T> {
    /// `y_t`, or `y~_t = y_t + E~` on the cancellation slots.
    pub received: Complex<T>,
    /// Cascaded channel gain of the slot (`B` on beamformed slots).
    pub gain: Complex<T>,
    pub transmitted: usize,
    pub detected: usize,
    /// `I = sqrt(P) B (s1 - s^1)` from slot 1; carried into every cancellation slot.
    pub residual_interference: Complex<T>,
    /// SINR with the EMI replaced by its expectation given `h2` and `Theta`.
    pub sinr_closed: T,
    /// SINR with the realized EMI power `|h2^H Theta^H n|^2`.
    pub sinr_realized: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockOutcome<T> {
    pub scheme: Scheme,
    pub slots: Vec<SlotResult<T>>,
    /// `SINR_m`: mean of the per-slot closed-form SINRs.
    pub sinr_closed: T,
    pub sinr_realized: T,
}

impl<T: Real> BlockOutcome<T> {
    fn from_slots(scheme: Scheme, slots: Vec<SlotResult<T>>) -> Self {
        let m = T::from_usize(slots.len()).expect("slot count");
        let sinr_closed = compensated_sum(slots.iter().map(|s| s.sinr_closed)) / m;
        let sinr_realized = compensated_sum(slots.iter().map(|s| s.sinr_realized)) / m;
        Self {
            scheme,
            slots,
            sinr_closed,
            sinr_realized,
        }
    }

    pub fn first_slot_error(&self) -> bool {
        self.slots.first().is_some_and(|s| s.detected != s.transmitted)
    }
}

fn draw_symbols<T: Real, R: Rng + ?Sized>(scenario: &Scenario<T>, rng: &mut R) -> Vec<usize> {
    let k = scenario.symbols().len();
    (0..scenario.slots()).map(|_| rng.random_range(0..k)).collect()
}

/// Beamformed slot: returns the slot result and the phases used.
fn beamformed_slot<T: Real>(
    block: &CoherenceBlock<T>,
    index: usize,
    transmitted: usize,
    scenario: &Scenario<T>,
    detection: Detection,
) -> Result<(SlotResult<T>, PhaseConfig<T>)> {
    let budget = scenario.budget();
    let symbols = scenario.symbols();
    let phases = beamforming_phases(&block.h1_slots[index], &block.h2)?;
    let b = effective_gain(&block.h1_slots[index], &block.h2);
    let terms = slot_terms(block, index, &phases);
    let sqrt_p = budget.sqrt_power();
    let y = terms.gain * symbols[transmitted] * sqrt_p + terms.emi + block.noise_slots[index];
    let amplitude = Complex::new(b * sqrt_p, T::zero());
    let detected = match detection {
        Detection::MaximumLikelihood => ml_detect(y, amplitude, symbols)?,
        Detection::ForcedCorrect => transmitted,
    };
    let residual = amplitude * (symbols[transmitted] - symbols[detected]);

    let signal = budget.transmit_power * b * b;
    let expected_emi = if budget.emi_power > T::zero() {
        budget.area * budget.emi_power * scenario.correlation().quadratic_form(&terms.steered)
    } else {
        T::zero()
    };
    let slot = SlotResult {
        received: y,
        gain: Complex::new(b, T::zero()),
        transmitted,
        detected,
        residual_interference: residual,
        sinr_closed: signal / (expected_emi + budget.noise_power),
        sinr_realized: signal / (terms.emi.norm_sqr() + budget.noise_power),
    };
    Ok((slot, phases))
}

/// Benchmark: every slot beamforms to its own `h1,t`, ignoring the EMI.
pub fn run_block_benchmark<T: Real, R: Rng + ?Sized>(
    block: &CoherenceBlock<T>,
    scenario: &Scenario<T>,
    rng: &mut R,
) -> Result<BlockOutcome<T>> {
    check_block(block, scenario)?;
    let tx = draw_symbols(scenario, rng);
    let slots = tx
        .iter()
        .enumerate()
        .map(|(t, &s)| beamformed_slot(block, t, s, scenario, Detection::MaximumLikelihood).map(|r| r.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockOutcome::from_slots(Scheme::Benchmark, slots))
}

/// EMI cancellation with maximum-likelihood detection on slot 1.
pub fn run_block_proposed<T: Real, R: Rng + ?Sized>(
    block: &CoherenceBlock<T>,
    scenario: &Scenario<T>,
    rng: &mut R,
) -> Result<BlockOutcome<T>> {
    run_block_proposed_with(block, scenario, rng, Detection::MaximumLikelihood)
}

/// EMI cancellation: slot 1 beamforms, detects and extracts `E~`; slots 2..m flip every
/// phase by pi and add `E~`, removing the EMI at the cost of the beamforming gain.
pub fn run_block_proposed_with<T: Real, R: Rng + ?Sized>(
    block: &CoherenceBlock<T>,
    scenario: &Scenario<T>,
    rng: &mut R,
    detection: Detection,
) -> Result<BlockOutcome<T>> {
    check_block(block, scenario)?;
    let budget = scenario.budget();
    let symbols = scenario.symbols();
    let sqrt_p = budget.sqrt_power();
    let tx = draw_symbols(scenario, rng);

    let (first, phases1) = beamformed_slot(block, 0, tx[0], scenario, detection)?;
    let amplitude = first.gain * sqrt_p;
    let emi_sample = extract_emi_sample(first.received, amplitude, symbols[first.detected]);
    let residual = first.residual_interference;
    let interference_plus_noise = residual.norm_sqr() + budget.noise_power + budget.noise_power;

    let flipped = cancellation_phases(&phases1);
    let mut slots = Vec::with_capacity(tx.len());
    slots.push(first);
    for (t, &s) in tx.iter().enumerate().skip(1) {
        let terms = slot_terms(block, t, &flipped);
        let y = terms.gain * symbols[s] * sqrt_p + terms.emi + block.noise_slots[t];
        let combined = y + emi_sample;
        let detected = match detection {
            Detection::MaximumLikelihood => ml_detect(combined, terms.gain * sqrt_p, symbols)?,
            Detection::ForcedCorrect => s,
        };
        let sinr = budget.transmit_power * terms.gain.norm_sqr() / interference_plus_noise;
        slots.push(SlotResult {
            received: combined,
            gain: terms.gain,
            transmitted: s,
            detected,
            residual_interference: residual,
            sinr_closed: sinr,
            sinr_realized: sinr,
        });
    }
    Ok(BlockOutcome::from_slots(Scheme::Proposed, slots))
}

pub fn run_block<T: Real, R: Rng + ?Sized>(
    scheme: Scheme,
    block: &CoherenceBlock<T>,
    scenario: &Scenario<T>,
    rng: &mut R,
) -> Result<BlockOutcome<T>> {
    match scheme {
        Scheme::Benchmark => run_block_benchmark(block, scenario, rng),
        Scheme::Proposed => run_block_proposed(block, scenario, rng),
    }
}

fn check_block<T: Real>(block: &CoherenceBlock<T>, scenario: &Scenario<T>) -> Result<()> {
    let m = scenario.slots();
    if block.slots() != m || block.noise_slots.len() != m {
        return Err(Error::Config(format!(
            "block spans {} slots but the scenario expects {m}",
            block.slots()
        )));
    }
    if m < 2 {
        return Err(Error::Config("at least two slots per block are required".into()));
    }
    check_lengths(block.n_elements(), scenario.correlation().n_elements())?;
    check_lengths(block.emi.len(), block.n_elements())
}
