//! Independent references: a pure power series for P(a, x), a bottom-up continued
//! fraction for Q(a, x), and Stirling's series for ln Gamma.
#![allow(dead_code)]

pub const EULER: f64 = 0.577_215_664_901_532_9;

pub fn stirling_ln_gamma(mut z: f64) -> f64 {
    let mut shift = 0.0;
    while z < 30.0 {
        shift -= z.ln();
        z += 1.0;
    }
    let z2 = z * z;
    let series = 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z2 * z2 * z) - 1.0 / (1680.0 * z2 * z2 * z2 * z);
    shift + (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

pub fn series_lower(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..5000 {
        term *= x / (a + n as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    (a * x.ln() - x - stirling_ln_gamma(a + 1.0)).exp() * sum
}

/// Q(a, x) = e^{-x} x^a / Gamma(a) * 1/(x+1-a- 1(1-a)/(x+3-a- 2(2-a)/(x+5-a- ...))).
pub fn backward_upper(a: f64, x: f64) -> f64 {
    let mut tail = 0.0;
    for n in (1..=600).rev() {
        let n = n as f64;
        tail = n * (n - a) / (x + 2.0 * n + 1.0 - a - tail);
    }
    let cf = 1.0 / (x + 1.0 - a - tail);
    (a * x.ln() - x - stirling_ln_gamma(a)).exp() * cf
}

pub fn grid() -> Vec<f64> {
    (0..=80).map(|i| 1e-3 * (5e4f64).powf(i as f64 / 80.0)).collect()
}
