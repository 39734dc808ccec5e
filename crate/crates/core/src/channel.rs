//! System parameters and random draws of channels, estimation errors,
//! distortion noises and received vectors.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matcore::ComplexMatrix;

/// Antenna counts, powers and impairment levels.
///
/// `kappa_t` in [0.08, 0.175] and `omega <= 0.3` are the practically
/// relevant ranges; they are not enforced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemConfig {
    /// Receive antennas.
    pub n: usize,
    /// Transmit antennas (streams).
    pub m: usize,
    /// Per-antenna transmit power (linear).
    pub p: f64,
    /// Thermal noise power (linear).
    pub n0: f64,
    pub kappa_t: f64,
    pub kappa_r: f64,
    /// Variance of the channel estimation error entries.
    pub omega: f64,
}

impl SystemConfig {
    pub fn new(n: usize, m: usize, p: f64, n0: f64, kappa_t: f64, kappa_r: f64, omega: f64) -> Result<Self> {
        let cfg = Self {
            n,
            m,
            p,
            n0,
            kappa_t,
            kappa_r,
            omega,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Impairment-free configuration with `N0 = 1` and the given SNR.
    pub fn ideal(n: usize, m: usize, snr_db: f64) -> Result<Self> {
        Self::new(n, m, crate::db_to_linear(snr_db), 1.0, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 || self.n < self.m {
            return Err(Error::InvalidInput(format!(
                "need n >= m >= 1, got n = {}, m = {}",
                self.n, self.m
            )));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must be non-negative and finite, got {v}")))
            }
        };
        positive("p", self.p)?;
        positive("n0", self.n0)?;
        nonneg("kappa_t", self.kappa_t)?;
        nonneg("kappa_r", self.kappa_r)?;
        nonneg("omega", self.omega)
    }

    /// Same configuration with `p = n0 * 10^(snr_db/10)`.
    pub fn with_snr_db(&self, snr_db: f64) -> Self {
        Self {
            p: self.n0 * crate::db_to_linear(snr_db),
            ..*self
        }
    }

    pub fn snr(&self) -> f64 {
        self.p / self.n0
    }

    /// `kappa_r^2 m + N0/p`, the receive-side noise in units of `p`.
    pub fn sigma_prime_sq(&self) -> f64 {
        self.kappa_r * self.kappa_r * self.m as f64 + self.n0 / self.p
    }

    /// `kappa_t^2 (omega + 1) + omega + 1`, the interference scaling of the
    /// impairment-aware MMSE filter.
    pub fn mmse_c(&self) -> f64 {
        self.kappa_t * self.kappa_t * (self.omega + 1.0) + self.omega + 1.0
    }

    /// `1/(2 sqrt(omega) + 1)`.
    pub fn crosstalk_d(&self) -> f64 {
        1.0 / (2.0 * self.omega.sqrt() + 1.0)
    }
}

/// One draw of the true channel, the estimation error and the estimate.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    pub h: ComplexMatrix,
    pub delta_h: ComplexMatrix,
    pub h_hat: ComplexMatrix,
}

impl ChannelRealization {
    /// Builds a realization from `h` and a unit-variance error draw scaled by
    /// `sqrt(omega)`.
    pub fn from_standard(h: ComplexMatrix, delta_std: &ComplexMatrix, omega: f64) -> Self {
        let delta_h = if omega == 0.0 {
            ComplexMatrix::zeros(h.rows(), h.cols())
        } else {
            delta_std.scale(omega.sqrt())
        };
        let h_hat = h.add(&delta_h).expect("same shape");
        Self { h, delta_h, h_hat }
    }
}

/// Constellation with unit average energy and the constants of the
/// Gaussian-tail error model `A Q(sqrt(2 B x))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulationSpec {
    pub name: String,
    pub states: usize,
    pub a_const: f64,
    pub b_const: f64,
    pub points: Vec<Complex64>,
}

impl ModulationSpec {
    pub fn bpsk() -> Self {
        Self {
            name: "bpsk".into(),
            states: 2,
            a_const: 1.0,
            b_const: 1.0,
            points: vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)],
        }
    }

    pub fn qpsk() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let points = [(-s, -s), (-s, s), (s, -s), (s, s)]
            .iter()
            .map(|&(re, im)| Complex64::new(re, im))
            .collect();
        Self {
            name: "qpsk".into(),
            states: 4,
            a_const: 2.0,
            b_const: 0.5,
            points,
        }
    }

    pub fn qam16() -> Self {
        let s = 1.0 / 10f64.sqrt();
        let lv = [-3.0, -1.0, 1.0, 3.0];
        let mut points = Vec::with_capacity(16);
        for re in lv {
            for im in lv {
                points.push(Complex64::new(re * s, im * s));
            }
        }
        Self {
            name: "qam16".into(),
            states: 16,
            a_const: 3.0,
            b_const: 0.1,
            points,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Self::bpsk()),
            "qpsk" => Ok(Self::qpsk()),
            "qam16" | "16qam" => Ok(Self::qam16()),
            other => Err(Error::InvalidInput(format!("unknown modulation '{other}'"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.states || self.states < 2 {
            return Err(Error::InvalidInput("constellation size does not match states".into()));
        }
        if !(self.a_const > 0.0 && self.b_const > 0.0) {
            return Err(Error::InvalidInput("modulation constants must be positive".into()));
        }
        let e = self.points.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.states as f64;
        if (e - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("average symbol energy is {e}, expected 1")));
        }
        Ok(())
    }

    /// Index of the nearest constellation point (lowest index on ties).
    pub fn slice(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, s) in self.points.iter().enumerate() {
            let d = (z - s).norm_sqr();
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }
}

/// One `CN(0, var)` sample.
pub fn sample_cn<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn sample_cn_vec<R: Rng + ?Sized>(rng: &mut R, len: usize, var: f64) -> Vec<Complex64> {
    (0..len).map(|_| sample_cn(rng, var)).collect()
}

/// `rows x cols` matrix of i.i.d. `CN(0, 1)` entries.
pub fn sample_cn_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| sample_cn(rng, 1.0))
}

/// Draws `H` and `dH` for the given configuration. The error matrix is drawn
/// even when `omega = 0` so the random stream does not depend on `omega`.
pub fn sample_realization<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> ChannelRealization {
    let h = sample_cn_matrix(rng, cfg.n, cfg.m);
    let d = sample_cn_matrix(rng, cfg.n, cfg.m);
    ChannelRealization::from_standard(h, &d, cfg.omega)
}

/// Uniform symbol indices and the transmitted vector scaled so `E[s s^H] = p I`.
pub fn sample_symbols<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    modulation: &ModulationSpec,
    rng: &mut R,
) -> (Vec<usize>, Vec<Complex64>) {
    let amp = cfg.p.sqrt();
    let idx: Vec<usize> = (0..cfg.m).map(|_| rng.random_range(0..modulation.states)).collect();
    let s = idx.iter().map(|&k| modulation.points[k] * amp).collect();
    (idx, s)
}

/// `y = H (s + n_T) + n_R + w`.
pub fn sample_received<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    real: &ChannelRealization,
    s: &[Complex64],
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    received(cfg, real, s, rng, true)
}

/// Debug variant of [`sample_received`]: with `noisy = false` every noise
/// and distortion term is dropped (`y = H s`).
pub fn received<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    real: &ChannelRealization,
    s: &[Complex64],
    rng: &mut R,
    noisy: bool,
) -> Result<Vec<Complex64>> {
    if s.len() != cfg.m || real.h.cols() != cfg.m || real.h.rows() != cfg.n {
        return Err(Error::DimensionMismatch(format!(
            "symbol vector of length {} for a {}x{} channel (config {}x{})",
            s.len(),
            real.h.rows(),
            real.h.cols(),
            cfg.n,
            cfg.m
        )));
    }
    if !noisy {
        return real.h.mul_vec(s);
    }
    let vt = cfg.p * cfg.kappa_t * cfg.kappa_t;
    let vr = cfg.p * cfg.kappa_r * cfg.kappa_r * cfg.m as f64;
    let tx: Vec<Complex64> = s.iter().map(|&si| si + sample_cn(rng, vt)).collect();
    let mut y = real.h.mul_vec(&tx)?;
    for yi in y.iter_mut() {
        *yi += sample_cn(rng, vr) + sample_cn(rng, cfg.n0);
    }
    Ok(y)
}
