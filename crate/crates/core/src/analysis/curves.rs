//! Published Gamma-parameter constants: the closed-form a(N), b(N) curves and the
//! per-N table of fitted values.

use serde::Serialize;

use crate::scalar::{lit, Real};

/// Coefficients of `a(N) = a1 e^{-((N-b1)/c1)^2} + a2 e^{-((N-b2)/c2)^2}` and `b(N) = p1 N + p2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamCurves {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub a2: f64,
    pub b2: f64,
    pub c2: f64,
    pub p1: f64,
    pub p2: f64,
}

pub const PUBLISHED_CURVES: ParamCurves = ParamCurves {
    a1: 3.05,
    b1: 799.6,
    c1: 3833.0,
    a2: 0.04247,
    b2: 247.4,
    c2: 109.5,
    p1: 5.262,
    p2: -90.97,
};

impl ParamCurves {
    /// `(shape, scale)` at RIS size `n_elements`.
    pub fn eval<T: Real>(&self, n_elements: usize) -> (T, T) {
        let n: T = T::from_usize(n_elements).unwrap();
        let bump = |amp: f64, center: f64, width: f64| -> T {
            let z = (n - lit(center)) / lit(width);
            lit::<T>(amp) * (-(z * z)).exp()
        };
        let shape = bump(self.a1, self.b1, self.c1) + bump(self.a2, self.b2, self.c2);
        let scale = lit::<T>(self.p1) * n + lit(self.p2);
        (shape, scale)
    }
}

/// Evaluates the published a(N), b(N) curves.
pub fn param_curves_eval<T: Real>(n_elements: usize) -> (T, T) {
    PUBLISHED_CURVES.eval(n_elements)
}

/// One row of the published per-size fit (rho = 0 dB, m = 4).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableEntry {
    pub n_elements: usize,
    pub shape: f64,
    pub scale: f64,
    pub shape_stderr: f64,
    pub scale_stderr: f64,
}

pub const PUBLISHED_TABLE: [TableEntry; 3] = [
    TableEntry {
        n_elements: 49,
        shape: 2.853,
        scale: 229.0,
        shape_stderr: 0.003_822_99,
        scale_stderr: 0.336_458,
    },
    TableEntry {
        n_elements: 100,
        shape: 2.955,
        scale: 470.391,
        shape_stderr: 0.003_966_15,
        scale_stderr: 0.688_05,
    },
    TableEntry {
        n_elements: 225,
        shape: 3.01,
        scale: 1089.9,
        shape_stderr: 0.004_044_4,
        scale_stderr: 1.593_04,
    },
];

pub fn table_entry(n_elements: usize) -> Option<TableEntry> {
    PUBLISHED_TABLE.iter().copied().find(|e| e.n_elements == n_elements)
}
