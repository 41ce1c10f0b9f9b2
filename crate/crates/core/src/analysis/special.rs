//! Gamma-family special functions.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma<T: Real>(x: T) -> T {
    if x < lit(0.5) {
        // reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x)
        let pi = T::PI();
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc: T = lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + lit::<T>(c) / (x + T::from_usize(i).unwrap());
    }
    let t = x + lit(LANCZOS_G + 0.5);
    lit::<T>(0.5) * (T::TAU()).ln() + (x + lit(0.5)) * t.ln() - t + acc.ln()
}

/// Digamma `psi(x)` for `x > 0`.
pub fn digamma<T: Real>(x: T) -> T {
    let mut x = x;
    let mut shift = T::zero();
    let shift_to: T = lit(12.0);
    while x < shift_to {
        shift = shift - x.recip();
        x = x + T::one();
    }
    let inv = x.recip();
    let inv2 = inv * inv;
    let series = inv2
        * (lit::<T>(1.0 / 12.0)
            - inv2
                * (lit::<T>(1.0 / 120.0)
                    - inv2 * (lit::<T>(1.0 / 252.0) - inv2 * (lit::<T>(1.0 / 240.0) - inv2 * lit::<T>(1.0 / 132.0)))));
    shift + x.ln() - lit::<T>(0.5) * inv - series
}

/// Trigamma `psi'(x)` for `x > 0`.
pub fn trigamma<T: Real>(x: T) -> T {
    let mut x = x;
    let mut shift = T::zero();
    let shift_to: T = lit(12.0);
    while x < shift_to {
        shift = shift + (x * x).recip();
        x = x + T::one();
    }
    let inv = x.recip();
    let inv2 = inv * inv;
    let series = inv
        + lit::<T>(0.5) * inv2
        + inv * inv2
            * (lit::<T>(1.0 / 6.0)
                - inv2
                    * (lit::<T>(1.0 / 30.0)
                        - inv2 * (lit::<T>(1.0 / 42.0) - inv2 * (lit::<T>(1.0 / 30.0) - inv2 * lit::<T>(5.0 / 66.0)))));
    shift + series
}

const MAX_ITERATIONS: usize = 10_000;

fn check_args<T: Real>(a: T, x: T) -> Result<()> {
    if !(a.is_finite() && a > T::zero()) {
        return Err(Error::Domain(format!("incomplete gamma shape must be positive, got {a}")));
    }
    if x.is_nan() || x < T::zero() {
        return Err(Error::Domain(format!("incomplete gamma argument must be >= 0, got {x}")));
    }
    Ok(())
}

/// `x^a e^{-x} / Gamma(a)`.
fn prefactor<T: Real>(a: T, x: T) -> T {
    (a * x.ln() - x - ln_gamma(a)).exp()
}

/// Power series for P(a, x); converges for all x, fast for x < a + 1.
fn lower_series<T: Real>(a: T, x: T) -> Result<T> {
    let mut denom = a;
    let mut term = a.recip();
    let mut sum = term;
    for _ in 0..MAX_ITERATIONS {
        denom = denom + T::one();
        term = term * x / denom;
        sum = sum + term;
        if term.abs() < sum.abs() * T::tolerance() {
            return Ok(sum * prefactor(a, x));
        }
    }
    Err(Error::Numerical(format!("incomplete gamma series did not converge (a = {a}, x = {x})")))
}

/// Continued fraction for Q(a, x) (modified Lentz); used for x >= a + 1.
fn upper_continued_fraction<T: Real>(a: T, x: T) -> Result<T> {
    let tiny = T::min_positive_value() / T::epsilon();
    let mut b = x + T::one() - a;
    let mut c = tiny.recip();
    let mut d = b.recip();
    let mut h = d;
    let two: T = lit(2.0);
    for i in 1..MAX_ITERATIONS {
        let fi = T::from_usize(i).unwrap();
        let an = -fi * (fi - a);
        b = b + two;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = d * c;
        h = h * delta;
        if (delta - T::one()).abs() < T::tolerance() {
            return Ok(h * prefactor(a, x));
        }
    }
    Err(Error::Numerical(format!("incomplete gamma continued fraction did not converge (a = {a}, x = {x})")))
}

/// Regularized lower incomplete gamma `P(a, x) = gamma(a, x) / Gamma(a)`.
pub fn regularized_lower_gamma<T: Real>(a: T, x: T) -> Result<T> {
    check_args(a, x)?;
    if x == T::zero() {
        return Ok(T::zero());
    }
    if x.is_infinite() {
        return Ok(T::one());
    }
    if x < a + T::one() {
        lower_series(a, x)
    } else {
        Ok(T::one() - upper_continued_fraction(a, x)?)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn regularized_upper_gamma<T: Real>(a: T, x: T) -> Result<T> {
    check_args(a, x)?;
    if x == T::zero() {
        return Ok(T::one());
    }
    if x.is_infinite() {
        return Ok(T::zero());
    }
    if x < a + T::one() {
        Ok(T::one() - lower_series(a, x)?)
    } else {
        upper_continued_fraction(a, x)
    }
}
