//! Fixed-order MMSE-SIC outage, its floor and the transmit-only asymptote.
//!
//! Stage `i < m`: `SINDR = C/(1 - d C)` with `C = phi/((1 + phi) c)` and
//! `phi` the classical MMSE SINR at noise level `sigma'^2/c`; the CDF of
//! `phi` is evaluated at the threshold mapped through that relation. The
//! last stage is single-stream MRC with a distortion term.

use super::OutageQuery;
use crate::channel::SystemConfig;
use crate::error::{Error, Result};
use crate::specfun::{binomial, factorial, regularized_gamma_p};
use crate::{DetectionStrategy, Scheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmseMode {
    General,
    /// `kappa_t`, `kappa_r` and `omega` ignored.
    Ideal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MmseFloorMode {
    /// Outage with the `N0/p` term dropped.
    Floor,
    /// Leading power law for `kappa_r = 0`.
    TxOnlyAsymptote,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MmseAsymptote {
    Floor(f64),
    /// `P_out ~ coefficient (N0/p)^diversity`.
    PowerLaw { coefficient: f64, diversity: usize },
}

struct Params {
    n: usize,
    m: usize,
    c: f64,
    d: f64,
    sigma_p2: f64,
}

impl Params {
    fn new(cfg: &SystemConfig, kt: f64, kr: f64, omega: f64, noise: f64) -> Self {
        Self {
            n: cfg.n,
            m: cfg.m,
            c: kt * kt * (omega + 1.0) + omega + 1.0,
            d: 1.0 / (2.0 * omega.sqrt() + 1.0),
            sigma_p2: kr * kr * cfg.m as f64 + noise,
        }
    }

    fn outage(&self, stage: usize, g: f64) -> f64 {
        let cm1 = self.c - 1.0;
        if cm1 > 0.0 && g * cm1 >= 1.0 {
            return 1.0;
        }
        if stage == self.m {
            let x = self.sigma_p2 * g / (1.0 - cm1 * g);
            return regularized_gamma_p(self.n as f64, x).expect("valid arguments");
        }
        if g * (self.c - self.d) >= 1.0 {
            return 1.0;
        }
        let x = g / (g * (self.d / self.c - 1.0) + 1.0 / self.c);
        let e = self.sigma_p2 / self.c * x;
        let l = self.m - stage;
        let n = self.n;
        let mut sec = 0.0;
        for k2 in n - l + 1..=n {
            let ek = e.powi((k2 - 1) as i32) / factorial(k2 - 1);
            for j in n - k2 + 1..=l {
                sec += binomial(l, j) * ek * (x / (1.0 + x)).powi(j as i32) / (1.0 + x).powi((l - j) as i32);
            }
        }
        let p = regularized_gamma_p(n as f64, e).expect("valid arguments") + (-e).exp() * sec;
        p.clamp(0.0, 1.0)
    }
}

fn check_query(cfg: &SystemConfig, q: &OutageQuery) -> Result<usize> {
    cfg.validate()?;
    q.validate(cfg.m)?;
    if q.scheme != Scheme::Mmse {
        return Err(Error::InvalidInput("MMSE outage requested for a ZF query".into()));
    }
    if q.ordering == DetectionStrategy::Foschini {
        return Err(Error::Unsupported("closed forms exist for fixed-order MMSE-SIC only".into()));
    }
    Ok(q.stage(cfg.m))
}

/// Outage probability of the queried MMSE-SIC stage.
///
/// Exactly 1 once `gamma_th >= 1/(kappa_t^2 (omega + 1) + omega)`; for
/// stages before the last also once `gamma_th >= 1/(c - d)`, the supremum of
/// the stage SINDR.
pub fn mmse_outage(cfg: &SystemConfig, q: &OutageQuery, mode: MmseMode) -> Result<f64> {
    let stage = check_query(cfg, q)?;
    let noise = cfg.n0 / cfg.p;
    let params = match mode {
        MmseMode::General => Params::new(cfg, cfg.kappa_t, cfg.kappa_r, cfg.omega, noise),
        MmseMode::Ideal => Params::new(cfg, 0.0, 0.0, 0.0, noise),
    };
    Ok(params.outage(stage, q.gamma_th))
}

/// High-SNR behaviour of the queried stage.
pub fn mmse_outage_floor(cfg: &SystemConfig, q: &OutageQuery, mode: MmseFloorMode) -> Result<MmseAsymptote> {
    let stage = check_query(cfg, q)?;
    let params = Params::new(cfg, cfg.kappa_t, cfg.kappa_r, cfg.omega, 0.0);
    let g = q.gamma_th;
    match mode {
        MmseFloorMode::Floor => Ok(MmseAsymptote::Floor(params.outage(stage, g))),
        MmseFloorMode::TxOnlyAsymptote => {
            if cfg.kappa_r != 0.0 {
                return Err(Error::InvalidInput("transmit-only asymptote needs kappa_r = 0".into()));
            }
            let (c, d) = (params.c, params.d);
            let (n, m) = (cfg.n, cfg.m);
            if (c - 1.0) * g >= 1.0 || (stage < m && g * (c - d) >= 1.0) {
                return Ok(MmseAsymptote::Floor(1.0));
            }
            if stage == m {
                let coefficient = (g / (1.0 - (c - 1.0) * g)).powi(n as i32) / factorial(n);
                return Ok(MmseAsymptote::PowerLaw { coefficient, diversity: n });
            }
            let x = g / (g * (d / c - 1.0) + 1.0 / c);
            let div = n - m + stage;
            let coefficient = c.powi(-(div as i32)) * x.powi(n as i32)
                / (factorial(div) * (1.0 + x).powi((m - stage) as i32));
            Ok(MmseAsymptote::PowerLaw {
                coefficient,
                diversity: div,
            })
        }
    }
}
