//! RIS geometry, the sinc spatial-correlation model, and correlated channel/EMI sampling.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;

use crate::config::{LinkBudget, SystemConfig, MAX_ELEMENTS};
use crate::error::{Error, Result};
use crate::rng::complex_normal;
use crate::scalar::{lit, Real};

/// Eigenvalues below this fraction of the largest one are raised to it before factoring.
pub const EIGEN_FLOOR_RATIO: f64 = 1e-12;

/// Largest tolerated `max |L L^T - R|` after PSD repair.
pub const FACTOR_TOLERANCE: f64 = 1e-8;

/// Normalized sinc, sin(pi x) / (pi x).
pub fn sinc<T: Real>(x: T) -> T {
    if x == T::zero() {
        T::one()
    } else {
        let px = T::PI() * x;
        px.sin() / px
    }
}

/// Position `u_k = [0, i(k) d_V, i~(k) d_H]` of element `k` (1-based), in meters.
///
/// `i(k) = (k - 1) mod N_H` is the horizontal index and `i~(k) = floor((k - 1) / N_H)`
/// the vertical one.
pub fn element_position(k: usize, config: &SystemConfig) -> Result<[f64; 3]> {
    let n = config.n_elements;
    if k == 0 || k > n {
        return Err(Error::Index {
            index: k,
            n_elements: n,
        });
    }
    let side = config.elements_per_side();
    let d = config.spacing_m();
    let horizontal = (k - 1) % side;
    let vertical = (k - 1) / side;
    Ok([0.0, horizontal as f64 * d, vertical as f64 * d])
}

/// Spatial correlation matrix `R` of the surface together with a sampling factor `L`,
/// `L L^T ~= R`.
///
/// Immutable once built; share it behind an `Arc` across workers.
#[derive(Debug, Clone)]
pub struct CorrelationModel<T> {
    n: usize,
    matrix: Vec<T>,
    factor: Vec<T>,
    clipped_eigenvalue_count: usize,
    min_eigenvalue: f64,
    max_eigenvalue: f64,
    factor_error: f64,
}

impl<T: Real> CorrelationModel<T> {
    /// Builds `[R]_{k,l} = sinc(2 ||u_k - u_l|| / lambda)` and its repaired factor.
    ///
    /// The symmetric eigendecomposition `R = U diag(l) U^T` is computed in `f64`; eigenvalues
    /// below `1e-12 * l_max` are clipped to that floor and `L = U diag(sqrt(l))`.
    pub fn build(config: &SystemConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_elements;
        if n > MAX_ELEMENTS {
            return Err(Error::Capacity {
                n_elements: n,
                max: MAX_ELEMENTS,
            });
        }
        let lambda = config.wavelength_m();
        let positions = (1..=n)
            .map(|k| element_position(k, config))
            .collect::<Result<Vec<_>>>()?;
        let r = DMatrix::<f64>::from_fn(n, n, |i, j| {
            let (a, b) = (positions[i], positions[j]);
            let dist = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            sinc(2.0 * dist / lambda)
        });

        let eigen = SymmetricEigen::new(r.clone());
        let max_eigenvalue = eigen.eigenvalues.max();
        let min_eigenvalue = eigen.eigenvalues.min();
        if !(max_eigenvalue.is_finite() && max_eigenvalue > 0.0) {
            return Err(Error::Numerical(format!(
                "correlation matrix has no positive eigenvalue (max {max_eigenvalue:e}, N = {n})"
            )));
        }
        let floor = EIGEN_FLOOR_RATIO * max_eigenvalue;
        let mut clipped = 0;
        let scales: Vec<f64> = eigen
            .eigenvalues
            .iter()
            .map(|&l| {
                if l < floor {
                    clipped += 1;
                    floor.sqrt()
                } else {
                    l.sqrt()
                }
            })
            .collect();
        let mut l = eigen.eigenvectors;
        for (mut col, s) in l.column_iter_mut().zip(&scales) {
            col *= *s;
        }
        let rebuilt = &l * l.transpose();
        let factor_error = (&rebuilt - &r).amax();
        if factor_error.is_nan() || factor_error > FACTOR_TOLERANCE {
            return Err(Error::Numerical(format!(
                "sampling factor misses R by {factor_error:e} (N = {n}, eigenvalues in [{min_eigenvalue:e}, {max_eigenvalue:e}], \
                 condition {:e}, {clipped} clipped)",
                max_eigenvalue / min_eigenvalue.abs().max(f64::MIN_POSITIVE)
            )));
        }

        let to_row_major = |m: &DMatrix<f64>| -> Vec<T> {
            let mut out = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    out.push(lit(m[(i, j)]));
                }
            }
            out
        };
        Ok(Self {
            n,
            matrix: to_row_major(&r),
            factor: to_row_major(&l),
            clipped_eigenvalue_count: clipped,
            min_eigenvalue,
            max_eigenvalue,
            factor_error,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.n
    }

    /// Row-major `R`.
    pub fn matrix(&self) -> &[T] {
        &self.matrix
    }

    /// Row-major `L`.
    pub fn factor(&self) -> &[T] {
        &self.factor
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.matrix[i * self.n + j]
    }

    pub fn clipped_eigenvalue_count(&self) -> usize {
        self.clipped_eigenvalue_count
    }

    /// Smallest and largest eigenvalue of `R` before clipping.
    pub fn eigenvalue_range(&self) -> (f64, f64) {
        (self.min_eigenvalue, self.max_eigenvalue)
    }

    /// `max |L L^T - R|` measured at construction.
    pub fn factor_error(&self) -> f64 {
        self.factor_error
    }

    /// `out = scale * L z`.
    pub fn correlate_into(&self, z: &[Complex<T>], scale: T, out: &mut [Complex<T>]) {
        debug_assert_eq!(z.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for (row, o) in self.factor.chunks_exact(self.n).zip(out.iter_mut()) {
            let (re, im) = dot_complex(row, z);
            *o = Complex::new(re * scale, im * scale);
        }
    }

    /// `x^H R x`, real because `R` is real symmetric.
    pub fn quadratic_form(&self, x: &[Complex<T>]) -> T {
        debug_assert_eq!(x.len(), self.n);
        let n = self.n;
        let mut diag = T::zero();
        let mut off = T::zero();
        for i in 0..n {
            let row = &self.matrix[i * n..(i + 1) * n];
            let xi = x[i];
            diag = diag + row[i] * xi.norm_sqr();
            let (re, im) = dot_complex(&row[i + 1..], &x[i + 1..]);
            off = off + xi.re * re + xi.im * im;
        }
        diag + off + off
    }
}

/// `(sum a_k Re z_k, sum a_k Im z_k)` with four partial accumulators.
#[inline]
fn dot_complex<T: Real>(a: &[T], z: &[Complex<T>]) -> (T, T) {
    let mut re = [T::zero(); 4];
    let mut im = [T::zero(); 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for j in 0..4 {
            let k = 4 * c + j;
            re[j] = re[j] + a[k] * z[k].re;
            im[j] = im[j] + a[k] * z[k].im;
        }
    }
    let mut r = (re[0] + re[1]) + (re[2] + re[3]);
    let mut i = (im[0] + im[1]) + (im[2] + im[3]);
    for k in 4 * chunks..a.len() {
        r = r + a[k] * z[k].re;
        i = i + a[k] * z[k].im;
    }
    (r, i)
}

/// One realization spanning the `m` slots of a T2 coherence interval.
///
/// `h1` is redrawn every slot; `h2` and the EMI vector stay fixed over the block.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceBlock<T> {
    pub h1_slots: Vec<Vec<Complex<T>>>,
    pub h2: Vec<Complex<T>>,
    pub emi: Vec<Complex<T>>,
    pub noise_slots: Vec<Complex<T>>,
}

impl<T: Real> CoherenceBlock<T> {
    pub fn slots(&self) -> usize {
        self.h1_slots.len()
    }

    pub fn n_elements(&self) -> usize {
        self.h2.len()
    }
}

/// Draws `h1,t ~ CN(0, A beta1 R)` for each of `slots` slots, `h2 ~ CN(0, A beta2 R)`,
/// `n ~ CN(0, A sigma^2 R)` and `w_t ~ CN(0, sigma_w^2)`.
///
/// The draw order is fixed (h1 per slot, h2, EMI, noise per slot) and the EMI draw is
/// consumed even when `sigma^2 = 0`, so streams stay aligned across EMI levels.
pub fn sample_coherence_block<T: Real, R: Rng + ?Sized>(
    corr: &CorrelationModel<T>,
    budget: &LinkBudget<T>,
    slots: usize,
    rng: &mut R,
) -> CoherenceBlock<T> {
    let n = corr.n_elements();
    let mut z = vec![Complex::new(T::zero(), T::zero()); n];
    let mut draw = |variance: T, rng: &mut R| -> Vec<Complex<T>> {
        for zi in z.iter_mut() {
            *zi = complex_normal(rng);
        }
        let mut out = vec![Complex::new(T::zero(), T::zero()); n];
        if variance > T::zero() {
            corr.correlate_into(&z, variance.sqrt(), &mut out);
        }
        out
    };
    let h1_var = budget.area * budget.beta1;
    let h1_slots = (0..slots).map(|_| draw(h1_var, rng)).collect();
    let h2 = draw(budget.area * budget.beta2, rng);
    let emi = draw(budget.area * budget.emi_power, rng);
    let noise_std = budget.noise_power.sqrt();
    let noise_slots = (0..slots).map(|_| complex_normal::<T, R>(rng) * noise_std).collect();
    CoherenceBlock {
        h1_slots,
        h2,
        emi,
        noise_slots,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_stream;
    use approx::assert_relative_eq;

    fn cfg(n: usize) -> SystemConfig {
        SystemConfig {
            n_elements: n,
            ..Default::default()
        }
    }

    #[test]
    fn position_examples() {
        let c = cfg(49);
        let half = c.wavelength_m() / 2.0;
        assert_eq!(element_position(1, &c).unwrap(), [0.0, 0.0, 0.0]);
        assert_eq!(element_position(8, &c).unwrap(), [0.0, 0.0, half]);
        assert_eq!(element_position(2, &c).unwrap(), [0.0, half, 0.0]);
        assert!(matches!(element_position(0, &c), Err(Error::Index { index: 0, .. })));
        assert!(matches!(element_position(50, &c), Err(Error::Index { index: 50, n_elements: 49 })));
    }

    #[test]
    fn position_is_grid_bijection() {
        let c = cfg(64);
        let d = c.spacing_m();
        let mut seen = std::collections::HashSet::new();
        for k in 1..=64 {
            let p = element_position(k, &c).unwrap();
            let i = (p[1] / d).round() as usize;
            let j = (p[2] / d).round() as usize;
            assert!(i < 8 && j < 8);
            assert!(seen.insert((i, j)));
        }
        assert_eq!(seen.len(), 64);
    }

    /// Taylor series of sin(pi x)/(pi x), independent of the libm sine.
    fn sinc_series(x: f64) -> f64 {
        let y = std::f64::consts::PI * x;
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 1..60 {
            term *= -y * y / ((2 * k) as f64 * (2 * k + 1) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0f64), 1.0);
        assert!(sinc(1.0f64).abs() < 1e-15);
        assert!(sinc(2.0f64).abs() < 1e-15);
        // mpmath, 30 digits
        let expected = -0.216_954_294_377_476_37;
        assert_relative_eq!(sinc(2f64.sqrt()), expected, max_relative = 1e-13);
        assert_relative_eq!(sinc_series(2f64.sqrt()), expected, max_relative = 1e-12);
    }

    #[test]
    fn correlation_structure() {
        let c = cfg(49);
        let corr = CorrelationModel::<f64>::build(&c).unwrap();
        let n = 49;
        for i in 0..n {
            assert_eq!(corr.entry(i, i), 1.0);
            for j in 0..n {
                assert_eq!(corr.entry(i, j), corr.entry(j, i));
                assert!(corr.entry(i, j).abs() <= 1.0);
            }
        }
        // horizontal neighbours at lambda/2: sinc(1) = 0
        assert!(corr.entry(0, 1).abs() < 1e-15);
        // diagonal neighbours: sinc(sqrt 2)
        assert_relative_eq!(corr.entry(0, 8), -0.216_954_294_377_476_37, max_relative = 1e-12);
        assert!(corr.factor_error() <= FACTOR_TOLERANCE);
    }

    #[test]
    fn factor_reproduces_matrix() {
        for n in [1usize, 4, 16, 100] {
            let corr = CorrelationModel::<f64>::build(&cfg(n)).unwrap();
            let l = corr.factor();
            let mut worst = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    let v: f64 = (0..n).map(|k| l[i * n + k] * l[j * n + k]).sum();
                    worst = worst.max((v - corr.entry(i, j)).abs());
                }
            }
            assert!(worst <= FACTOR_TOLERANCE, "N={n}: {worst:e}");
        }
    }

    #[test]
    fn quadratic_form_matches_direct_sum() {
        let corr = CorrelationModel::<f64>::build(&cfg(25)).unwrap();
        let mut rng = trial_stream(3, 0);
        let x: Vec<Complex<f64>> = (0..25).map(|_| complex_normal(&mut rng)).collect();
        let mut direct = Complex::new(0.0, 0.0);
        for i in 0..25 {
            for j in 0..25 {
                direct += x[i].conj() * corr.entry(i, j) * x[j];
            }
        }
        assert!(direct.im.abs() < 1e-12);
        assert_relative_eq!(corr.quadratic_form(&x), direct.re, max_relative = 1e-12);
    }

    #[test]
    fn block_shapes_and_determinism() {
        let c = SystemConfig {
            n_elements: 16,
            slots_per_block: 3,
            ..Default::default()
        };
        let corr = CorrelationModel::<f64>::build(&c).unwrap();
        let budget = LinkBudget::from_config(&c).unwrap();
        let a = sample_coherence_block(&corr, &budget, 3, &mut trial_stream(9, 2));
        let b = sample_coherence_block(&corr, &budget, 3, &mut trial_stream(9, 2));
        assert_eq!(a, b);
        assert_eq!(a.slots(), 3);
        assert_eq!(a.noise_slots.len(), 3);
        assert!(a.h1_slots.iter().all(|h| h.len() == 16));
        assert_eq!(a.h2.len(), 16);
        assert_eq!(a.emi.len(), 16);
    }

    #[test]
    fn zero_emi_power_gives_zero_vector() {
        let c = SystemConfig {
            n_elements: 9,
            rho_db: None,
            ..Default::default()
        };
        let corr = CorrelationModel::<f64>::build(&c).unwrap();
        let budget = LinkBudget::from_config(&c).unwrap();
        let block = sample_coherence_block(&corr, &budget, 4, &mut trial_stream(1, 1));
        assert!(block.emi.iter().all(|e| e.norm() == 0.0));
    }

    #[test]
    fn scalar_variance_single_element() {
        let c = cfg(1);
        let corr = CorrelationModel::<f64>::build(&c).unwrap();
        let budget = LinkBudget::<f64>::from_config(&c).unwrap();
        let mut rng = trial_stream(11, 0);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let block = sample_coherence_block(&corr, &budget, 2, &mut rng);
            acc += block.h1_slots[0][0].norm_sqr();
        }
        let var = acc / draws as f64;
        let expected = budget.area * budget.beta1;
        assert!((var / expected - 1.0).abs() < 0.03, "{var:e} vs {expected:e}");
    }

    #[test]
    fn f32_model_builds() {
        let corr = CorrelationModel::<f32>::build(&cfg(16)).unwrap();
        assert_eq!(corr.entry(3, 3), 1.0f32);
    }
}
