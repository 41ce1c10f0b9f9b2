//! Gamma maximum-likelihood fitting and the closed-form outage probability.

use serde::Serialize;

use super::special::{digamma, ln_gamma, regularized_lower_gamma, trigamma};
use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, lit, Real};

pub const MIN_FIT_SAMPLES: usize = 100;
pub const MAX_NEWTON_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaFit<T> {
    pub shape: T,
    pub scale: T,
    pub shape_stderr: T,
    pub scale_stderr: T,
    pub samples: usize,
    /// Kolmogorov-Smirnov distance between the sample and the fitted CDF.
    pub ks_statistic: T,
}

impl<T: Real> GammaFit<T> {
    pub fn mean(&self) -> T {
        self.shape * self.scale
    }

    pub fn cdf(&self, x: T) -> Result<T> {
        gamma_cdf(x, self.shape, self.scale)
    }

    pub fn pdf(&self, x: T) -> Result<T> {
        gamma_pdf(x, self.shape, self.scale)
    }
}

fn check_params<T: Real>(shape: T, scale: T) -> Result<()> {
    let ok = |v: T| v.is_finite() && v > T::zero();
    if !(ok(shape) && ok(scale)) {
        return Err(Error::Domain(format!(
            "Gamma parameters must be positive and finite (shape {shape}, scale {scale})"
        )));
    }
    Ok(())
}

/// `gamma(a, x / b) / Gamma(a)`.
pub fn gamma_cdf<T: Real>(x: T, shape: T, scale: T) -> Result<T> {
    check_params(shape, scale)?;
    regularized_lower_gamma(shape, x / scale)
}

pub fn gamma_pdf<T: Real>(x: T, shape: T, scale: T) -> Result<T> {
    check_params(shape, scale)?;
    if x.is_nan() || x < T::zero() {
        return Err(Error::Domain(format!("Gamma density argument must be >= 0, got {x}")));
    }
    if x == T::zero() {
        return Ok(match shape.partial_cmp(&T::one()) {
            Some(std::cmp::Ordering::Less) => T::infinity(),
            Some(std::cmp::Ordering::Equal) => scale.recip(),
            _ => T::zero(),
        });
    }
    let z = x / scale;
    Ok(((shape - T::one()) * z.ln() - z - ln_gamma(shape) - scale.ln()).exp())
}

/// Closed-form outage probability `P(SINR_m < r) = gamma(a, r / (P b)) / Gamma(a)`.
pub fn theoretical_op<T: Real>(threshold: T, transmit_power: T, fit: &GammaFit<T>) -> Result<T> {
    if !(threshold > T::zero() && transmit_power > T::zero()) {
        return Err(Error::Domain(format!(
            "threshold and power must be positive (r = {threshold}, P = {transmit_power})"
        )));
    }
    gamma_cdf(threshold / transmit_power, fit.shape, fit.scale)
}

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic<T: Real>(samples: &[T], cdf: impl Fn(T) -> Result<T>) -> Result<T> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = T::from_usize(sorted.len()).unwrap();
    let mut d = T::zero();
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x)?;
        let lo = T::from_usize(i).unwrap() / n;
        let hi = T::from_usize(i + 1).unwrap() / n;
        d = d.max(f - lo).max(hi - f);
    }
    Ok(d)
}

/// Maximum-likelihood Gamma fit.
///
/// Solves `ln a - psi(a) = ln(mean) - mean(ln x)` by Newton iteration kept inside a
/// shrinking bracket, starting from the moment estimate `mean^2 / var`. Then
/// `b = mean / a`. Standard errors come from the inverse observed Fisher information.
pub fn fit_gamma<T: Real>(samples: &[T]) -> Result<GammaFit<T>> {
    let n = samples.len();
    if n < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!("need at least {MIN_FIT_SAMPLES} samples, got {n}")));
    }
    if let Some(bad) = samples.iter().find(|x| !(x.is_finite() && **x > T::zero())) {
        return Err(Error::Fit(format!("samples must be positive and finite, found {bad}")));
    }
    let nf = T::from_usize(n).unwrap();
    let mean = compensated_sum(samples.iter().copied()) / nf;
    let mean_log = compensated_sum(samples.iter().map(|x| x.ln())) / nf;
    let variance = compensated_sum(samples.iter().map(|&x| (x - mean) * (x - mean))) / nf;
    let target = mean.ln() - mean_log;
    if !(variance > T::zero() && target > T::zero()) {
        return Err(Error::Fit("samples have zero spread".into()));
    }

    let objective = |a: T| a.ln() - digamma(a) - target;
    let mut a = mean * mean / variance;
    let (mut lo, mut hi) = (T::zero(), T::infinity());
    let tol = lit::<T>(64.0) * T::epsilon();
    let mut converged = false;
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let f = objective(a);
        // ln a - psi(a) is strictly decreasing
        if f > T::zero() {
            lo = a;
        } else {
            hi = a;
        }
        let slope = a.recip() - trigamma(a);
        let mut next = a - f / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_infinite() {
                a + a
            } else if lo == T::zero() {
                hi / lit(2.0)
            } else {
                (lo * hi).sqrt()
            };
        }
        let step = (next - a).abs();
        a = next;
        if step <= tol * a {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Gamma shape iteration did not converge in {MAX_NEWTON_ITERATIONS} steps (last estimate {a})"
        )));
    }
    let b = mean / a;

    let tg = trigamma(a);
    let denom = nf * (a * tg - T::one());
    let shape_stderr = (a / denom).sqrt();
    let scale_stderr = (b * b * tg / denom).sqrt();
    let ks = ks_statistic(samples, |x| gamma_cdf(x, a, b))?;
    Ok(GammaFit {
        shape: a,
        scale: b,
        shape_stderr,
        scale_stderr,
        samples: n,
        ks_statistic: ks,
    })
}
