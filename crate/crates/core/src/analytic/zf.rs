//! ZF-SIC outage: closed form, perfect-CSI and ideal reductions, floors.
//!
//! With `X = p r_ii^2` a signed Erlang mixture and `Y_i ~ Gamma(m, omega)`,
//! the outage event is `X <= A + B Y_i`. Each Erlang tail is a Poisson
//! count, and mixing the Poisson mean over the Gamma law of `Y_i` yields a
//! negative binomial. The finite sum is therefore evaluated as
//! `sum_t w_t Pr[Poisson(lambda_t) + NegBin(m, q_t) >= k_t]`, whose inner
//! summands are all positive. `omega = 0` is the case `q_t = 0`.

use super::ordered_rii::{xi_coefficients, OrderedLayerCoefficients};
use super::OutageQuery;
use crate::channel::SystemConfig;
use crate::error::{Error, Result};
use crate::specfun::{binomial, gamma_real, ln_factorial, ln_gamma, tricomi_us};
use crate::Scheme;

/// Which impairments enter [`zf_outage`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZfMode {
    /// Hardware impairments and estimation error.
    General,
    /// `omega` ignored (set to 0).
    PerfectCsi,
    /// `kappa_t`, `kappa_r` and `omega` ignored.
    Ideal,
}

/// Floor variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZfFloorMode {
    General,
    /// Ideal transceivers (`kappa_t = kappa_r = 0`), `omega > 0`.
    CsiOnly,
    /// Perfect CSI (`omega = 0`).
    HwOnly,
}

fn ln_poisson(u: usize, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if u == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    u as f64 * lambda.ln() - lambda - ln_factorial(u)
}

/// `Pr[Poisson(lambda) >= k]`.
fn poisson_upper(k: usize, lambda: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let lower: f64 = (0..k).map(|u| ln_poisson(u, lambda).exp()).sum();
    if lower <= 0.5 {
        return (1.0 - lower).max(0.0);
    }
    let mut sum = 0.0;
    let mut u = k;
    let mut term = ln_poisson(k, lambda).exp();
    while term > 1e-18 * sum || sum == 0.0 {
        sum += term;
        u += 1;
        term *= lambda / u as f64;
        if term == 0.0 {
            break;
        }
    }
    sum
}

/// Negative binomial with `m` successes, "failure" probability
/// `q = beta/(1 + beta)` given through `beta` for accuracy.
struct NegBin {
    m: f64,
    ln_q: f64,
    m_ln_1mq: f64,
    q: f64,
}

impl NegBin {
    fn new(m: usize, beta: f64) -> Self {
        let l1p = beta.ln_1p();
        Self {
            m: m as f64,
            ln_q: beta.ln() - l1p,
            m_ln_1mq: -(m as f64) * l1p,
            q: beta / (1.0 + beta),
        }
    }

    fn ln_pmf(&self, v: usize) -> f64 {
        if v == 0 {
            return self.m_ln_1mq;
        }
        ln_gamma(v as f64 + self.m).expect("positive") - ln_gamma(self.m).expect("positive") - ln_factorial(v)
            + self.m_ln_1mq
            + v as f64 * self.ln_q
    }

    /// `Pr[NB >= j]`.
    fn upper(&self, j: usize) -> f64 {
        if j == 0 {
            return 1.0;
        }
        if self.q == 0.0 {
            return 0.0;
        }
        let lower: f64 = (0..j).map(|v| self.ln_pmf(v).exp()).sum();
        if lower <= 0.5 {
            return (1.0 - lower).max(0.0);
        }
        let mut sum = 0.0;
        let mut v = j;
        let mut term = self.ln_pmf(j).exp();
        let mut guard = 0;
        while term > 1e-18 * sum || sum == 0.0 {
            sum += term;
            term *= self.q * (v as f64 + self.m) / (v + 1) as f64;
            v += 1;
            guard += 1;
            if term == 0.0 || guard > 1_000_000 {
                break;
            }
        }
        sum
    }
}

/// `Pr[Poisson(lambda) + NegBin >= k]` with all summands positive.
fn compound_upper(k: usize, lambda: f64, nb: Option<&NegBin>) -> f64 {
    let pu = poisson_upper(k, lambda);
    let Some(nb) = nb else {
        return pu;
    };
    let mut s = pu;
    for u in 0..k {
        let pw = ln_poisson(u, lambda).exp();
        if pw == 0.0 {
            continue;
        }
        s += pw * nb.upper(k - u);
    }
    s.min(1.0)
}

fn check_query(cfg: &SystemConfig, q: &OutageQuery) -> Result<()> {
    cfg.validate()?;
    q.validate(cfg.m)?;
    if q.scheme != Scheme::Zf {
        return Err(Error::InvalidInput("ZF outage requested for an MMSE query".into()));
    }
    Ok(())
}

fn layer_coefficients(cfg: &SystemConfig, q: &OutageQuery) -> Result<OrderedLayerCoefficients> {
    xi_coefficients(q.layer(cfg.m), cfg.n, cfg.m, cfg.p, q.ordering)
}

/// Outage probability of the queried ZF-SIC layer.
///
/// Returns exactly 1 when `kappa_t^2 gamma_th >= 1`.
pub fn zf_outage(cfg: &SystemConfig, q: &OutageQuery, mode: ZfMode) -> Result<f64> {
    check_query(cfg, q)?;
    let (kt, kr, omega) = match mode {
        ZfMode::General => (cfg.kappa_t, cfg.kappa_r, cfg.omega),
        ZfMode::PerfectCsi => (cfg.kappa_t, cfg.kappa_r, 0.0),
        ZfMode::Ideal => (0.0, 0.0, 0.0),
    };
    let g = q.gamma_th;
    let kt2 = kt * kt;
    let den = 1.0 - kt2 * g;
    if den <= 0.0 {
        return Ok(1.0);
    }
    let coeffs = layer_coefficients(cfg, q)?;
    if mode == ZfMode::Ideal {
        return Ok(coeffs.cdf(cfg.n0 * g));
    }
    let m = cfg.m;
    let a0 = (kr * kr * m as f64 + cfg.n0 / cfg.p) * g / den;
    let b0 = (kt2 + 1.0) * g / den;
    let mut total = 0.0;
    for t in &coeffs.terms {
        let r = t.rate_int as f64;
        let lambda = r * a0;
        let nb = (omega > 0.0).then(|| NegBin::new(m, r * b0 * omega));
        total += t.weight * compound_upper(t.shape, lambda, nb.as_ref());
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Both printed forms of the general floor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZfFloorForms {
    pub series: f64,
    /// `None` when `kappa_r = 0` or `omega = 0` (the Tricomi form needs both).
    pub tricomi: Option<f64>,
}

/// Evaluates the floor by the binomial series and, where defined, by the
/// Tricomi representation.
pub fn zf_floor_forms(cfg: &SystemConfig, q: &OutageQuery) -> Result<ZfFloorForms> {
    check_query(cfg, q)?;
    let g = q.gamma_th;
    let kt2 = cfg.kappa_t * cfg.kappa_t;
    let den = 1.0 - kt2 * g;
    if den <= 0.0 {
        return Ok(ZfFloorForms {
            series: 1.0,
            tricomi: Some(1.0),
        });
    }
    let coeffs = layer_coefficients(cfg, q)?;
    let nn = coeffs.diversity();
    let m = cfg.m;
    let a = cfg.kappa_r * cfg.kappa_r * m as f64;
    let b = cfg.omega * (kt2 + 1.0);
    let pre = coeffs.leading_constant() * (g / den).powi(nn as i32);
    let gm = gamma_real(m as f64)?;
    let mut s = 0.0;
    for k in 0..=nn {
        if b == 0.0 && k > 0 {
            break;
        }
        s += binomial(nn, k) * a.powi((nn - k) as i32) * b.powi(k as i32) * gamma_real((m + k) as f64)? / gm;
    }
    let tricomi = if a > 0.0 && b > 0.0 {
        Some(pre * a.powi(nn as i32) * tricomi_us(m as f64, (nn + m + 1) as f64, a / b)?)
    } else {
        None
    };
    Ok(ZfFloorForms {
        series: pre * s,
        tricomi,
    })
}

/// High-SNR outage floor of the queried layer (independent of `N0`).
pub fn zf_outage_floor(cfg: &SystemConfig, q: &OutageQuery, mode: ZfFloorMode) -> Result<f64> {
    match mode {
        ZfFloorMode::General => {}
        ZfFloorMode::CsiOnly => {
            if cfg.kappa_t != 0.0 || cfg.kappa_r != 0.0 {
                return Err(Error::InvalidInput("csi-only floor needs kappa_t = kappa_r = 0".into()));
            }
        }
        ZfFloorMode::HwOnly => {
            if cfg.omega != 0.0 {
                return Err(Error::InvalidInput("hardware-only floor needs omega = 0".into()));
            }
        }
    }
    let forms = zf_floor_forms(cfg, q)?;
    if let Some(t) = forms.tricomi {
        let rel = (t - forms.series).abs() / forms.series.abs().max(f64::MIN_POSITIVE);
        if rel > 1e-8 {
            return Err(Error::Inconsistent(format!(
                "floor forms disagree: series {:.12e}, Tricomi {:.12e}",
                forms.series, t
            )));
        }
    }
    Ok(forms.series.min(1.0))
}
