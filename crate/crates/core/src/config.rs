//! System parameters and their one-time conversion to linear SI units.

use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Largest RIS supported; the correlation model holds several dense N x N matrices.
pub const MAX_ELEMENTS: usize = 4096;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

/// Symbol alphabet used by the source and the ML detector. Unit average energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    #[default]
    Bpsk,
    Qpsk,
}

impl Constellation {
    pub fn symbols<T: Real>(self) -> Vec<Complex<T>> {
        match self {
            Constellation::Bpsk => vec![Complex::new(T::one(), T::zero()), Complex::new(-T::one(), T::zero())],
            Constellation::Qpsk => {
                let a = T::FRAC_1_SQRT_2();
                vec![
                    Complex::new(a, a),
                    Complex::new(-a, a),
                    Complex::new(-a, -a),
                    Complex::new(a, -a),
                ]
            }
        }
    }

    pub fn order(self) -> usize {
        match self {
            Constellation::Bpsk => 2,
            Constellation::Qpsk => 4,
        }
    }
}

/// Physical and protocol parameters, in the units used at the user boundary (dB / dBm / Hz / m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Number of RIS elements N; must be a perfect square (N = N_H^2).
    pub n_elements: usize,
    pub carrier_frequency_hz: f64,
    /// Element length and width (d_V = d_H). `None` means half a wavelength.
    pub element_spacing_m: Option<f64>,
    pub beta1_db: f64,
    pub beta2_db: f64,
    pub noise_power_dbm: f64,
    pub transmit_power_dbm: f64,
    /// Per-element signal-to-EMI ratio beta1 * P / sigma^2. `None` disables the EMI.
    pub rho_db: Option<f64>,
    /// Slots per h2 coherence interval, m = T2 / T1.
    pub slots_per_block: usize,
    pub constellation: Constellation,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_elements: 100,
            carrier_frequency_hz: 1.8e9,
            element_spacing_m: None,
            beta1_db: -48.0,
            beta2_db: -38.0,
            noise_power_dbm: -114.0,
            transmit_power_dbm: 23.0,
            rho_db: Some(0.0),
            slots_per_block: 4,
            constellation: Constellation::Bpsk,
        }
    }
}

impl SystemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    pub fn spacing_m(&self) -> f64 {
        self.element_spacing_m.unwrap_or_else(|| self.wavelength_m() / 2.0)
    }

    /// Elements per side of the square surface.
    pub fn elements_per_side(&self) -> usize {
        integer_sqrt(self.n_elements)
    }

    /// Replaces every implicit default with its concrete value.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        out.element_spacing_m = Some(self.spacing_m());
        out
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_elements;
        if n == 0 {
            return Err(Error::Config("n_elements must be at least 1".into()));
        }
        if n > MAX_ELEMENTS {
            return Err(Error::Capacity {
                n_elements: n,
                max: MAX_ELEMENTS,
            });
        }
        let side = integer_sqrt(n);
        if side * side != n {
            return Err(Error::Config(format!("n_elements = {n} is not a perfect square")));
        }
        if self.slots_per_block < 2 {
            return Err(Error::Config(format!(
                "slots_per_block = {} but at least 2 slots are needed",
                self.slots_per_block
            )));
        }
        let finite = [
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("beta1_db", self.beta1_db),
            ("beta2_db", self.beta2_db),
            ("noise_power_dbm", self.noise_power_dbm),
            ("transmit_power_dbm", self.transmit_power_dbm),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite, got {v}")));
            }
        }
        if let Some(rho) = self.rho_db {
            if !rho.is_finite() {
                return Err(Error::Config(format!("rho_db must be finite, got {rho}")));
            }
        }
        if self.carrier_frequency_hz <= 0.0 {
            return Err(Error::Config("carrier_frequency_hz must be positive".into()));
        }
        let d = self.spacing_m();
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::Config(format!("element spacing must be positive, got {d}")));
        }
        Ok(())
    }
}

pub(crate) fn integer_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Linear-unit view of a [`SystemConfig`]; what every formula consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget<T> {
    pub wavelength: T,
    pub spacing: T,
    /// Element area A = d_H * d_V, m^2.
    pub area: T,
    pub beta1: T,
    pub beta2: T,
    /// AWGN variance sigma_w^2, W.
    pub noise_power: T,
    /// Transmit power P, W.
    pub transmit_power: T,
    /// EMI power sigma^2 = beta1 P / rho, W (zero when the EMI is disabled).
    pub emi_power: T,
}

impl<T: Real> LinkBudget<T> {
    pub fn from_config(config: &SystemConfig) -> Result<Self> {
        config.validate()?;
        let wavelength = config.wavelength_m();
        let spacing = config.spacing_m();
        let beta1 = db_to_linear(config.beta1_db);
        let power = dbm_to_watts(config.transmit_power_dbm);
        let emi = match config.rho_db {
            Some(rho) => beta1 * power / db_to_linear(rho),
            None => 0.0,
        };
        Ok(Self {
            wavelength: lit(wavelength),
            spacing: lit(spacing),
            area: lit(spacing * spacing),
            beta1: lit(beta1),
            beta2: lit(db_to_linear(config.beta2_db)),
            noise_power: lit(dbm_to_watts(config.noise_power_dbm)),
            transmit_power: lit(power),
            emi_power: lit(emi),
        })
    }

    pub fn sqrt_power(&self) -> T {
        self.transmit_power.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn defaults_give_expected_geometry() {
        let cfg = SystemConfig::default();
        let lb = LinkBudget::<f64>::from_config(&cfg).unwrap();
        assert_relative_eq!(lb.wavelength, 0.166_551_4, max_relative = 1e-6);
        assert_relative_eq!(lb.spacing, 0.083_275_7, max_relative = 1e-6);
        assert_relative_eq!(lb.area, 6.934_8e-3, max_relative = 1e-4);
        assert_relative_eq!(lb.noise_power, 3.981_071_7e-15, max_relative = 1e-7);
        // rho = 0 dB: sigma^2 = beta1 * P
        assert_relative_eq!(lb.emi_power, lb.beta1 * lb.transmit_power, max_relative = 1e-12);
    }

    #[test]
    fn emi_disabled_gives_zero_power() {
        let cfg = SystemConfig {
            rho_db: None,
            ..Default::default()
        };
        let lb = LinkBudget::<f64>::from_config(&cfg).unwrap();
        assert_eq!(lb.emi_power, 0.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            SystemConfig { n_elements: 0, ..Default::default() },
            SystemConfig { n_elements: 50, ..Default::default() },
            SystemConfig { slots_per_block: 1, ..Default::default() },
            SystemConfig { beta1_db: f64::NAN, ..Default::default() },
            SystemConfig { rho_db: Some(f64::INFINITY), ..Default::default() },
            SystemConfig { element_spacing_m: Some(0.0), ..Default::default() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
        }
        let huge = SystemConfig { n_elements: 100 * 100, ..Default::default() };
        assert!(matches!(huge.validate(), Err(Error::Capacity { n_elements: 10_000, .. })));
    }

    #[test]
    fn toml_overrides_defaults() {
        let cfg = SystemConfig::from_toml_str("n_elements = 49\nrho_db = 5.0\nconstellation = \"qpsk\"\n").unwrap();
        assert_eq!(cfg.n_elements, 49);
        assert_eq!(cfg.rho_db, Some(5.0));
        assert_eq!(cfg.constellation, Constellation::Qpsk);
        assert_eq!(cfg.beta2_db, -38.0);
        assert!(SystemConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn integer_sqrt_exact() {
        for k in 0..200usize {
            assert_eq!(integer_sqrt(k * k), k);
            if k > 1 {
                assert_eq!(integer_sqrt(k * k - 1), k - 1);
            }
        }
    }

    #[test]
    fn qpsk_has_unit_energy() {
        for s in Constellation::Qpsk.symbols::<f64>() {
            assert_relative_eq!(s.norm_sqr(), 1.0, max_relative = 1e-15);
        }
    }
}
