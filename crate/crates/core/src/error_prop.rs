//! Average symbol error probability with error propagation.
//!
//! The per-layer error model is `A Q(sqrt(2 B x))` averaged over the SINDR
//! law, which integrates by parts to
//! `(A sqrt(B) / (2 sqrt(pi))) int_0^Z e^{-B x} x^{-1/2} P_out(x) dx`.

use std::cell::Cell;
use std::f64::consts::PI;

use crate::analytic::{mmse_outage, xi_coefficients, zf_outage, MmseMode, OutageQuery, ZfMode};
use crate::channel::{ModulationSpec, SystemConfig};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::specfun::{binomial, erf, factorial, gamma_real, tricomi_u, tricomi_us, TricomiParams};
use crate::{DetectionStrategy, Scheme};

/// Upper SINDR limit used for MMSE-SIC.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmseZLimit {
    /// `1/(kappa_r^2 (omega + 1) + omega)`.
    #[default]
    Printed,
    /// `1/(kappa_t^2 (omega + 1) + omega)`, the support bound of the outage law.
    OutageSupport,
}

#[derive(Clone, Debug)]
pub struct AsepQuery {
    pub modulation: ModulationSpec,
    pub scheme: Scheme,
    pub cfg: SystemConfig,
    /// Upper integration limit (linear SINDR, may be infinite).
    pub z_limit: f64,
}

fn reciprocal_or_inf(den: f64) -> f64 {
    if den == 0.0 {
        f64::INFINITY
    } else {
        1.0 / den
    }
}

impl AsepQuery {
    /// `Z = 1/kappa_t^2` for ZF; the selected bound for MMSE.
    pub fn new(cfg: SystemConfig, scheme: Scheme, modulation: ModulationSpec, mmse_limit: MmseZLimit) -> Self {
        let kt2 = cfg.kappa_t * cfg.kappa_t;
        let kr2 = cfg.kappa_r * cfg.kappa_r;
        let w = cfg.omega;
        let z_limit = match (scheme, mmse_limit) {
            (Scheme::Zf, _) => reciprocal_or_inf(kt2),
            (Scheme::Mmse, MmseZLimit::Printed) => reciprocal_or_inf(kr2 * (w + 1.0) + w),
            (Scheme::Mmse, MmseZLimit::OutageSupport) => reciprocal_or_inf(kt2 * (w + 1.0) + w),
        };
        Self {
            modulation,
            scheme,
            cfg,
            z_limit,
        }
    }
}

/// Conditional ASEP of one layer for an arbitrary outage CDF.
///
/// The `x = u^2` substitution removes the endpoint singularity. When the
/// result is large the complementary form `(A/2) erf(sqrt(B Z)) - ...int(1 - P)`
/// is used instead, so `P_out = 1` gives exactly `A/2` for infinite `Z`.
pub fn conditional_asep<F>(q: &AsepQuery, mut outage_fn: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let a = q.modulation.a_const;
    let b = q.modulation.b_const;
    let z = q.z_limit;
    if !(z > 0.0) {
        return Err(Error::InvalidInput(format!("integration limit must be positive, got {z}")));
    }
    let upper = z.sqrt().min((60.0 / b).sqrt());
    let pre = a * b.sqrt() / (2.0 * PI.sqrt());
    let failure: Cell<Option<Error>> = Cell::new(None);
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_intervals: 4000,
    };

    let mut eval = |u: f64, complement: bool| -> f64 {
        match outage_fn(u * u) {
            Ok(p) => {
                let p = if complement { 1.0 - p } else { p };
                2.0 * (-b * u * u).exp() * p
            }
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    };

    let direct = integrate(|u| eval(u, false), 0.0, upper, opts)?.value * pre;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    if direct <= a / 8.0 {
        return Ok(direct.clamp(0.0, a / 2.0));
    }
    let comp = integrate(|u| eval(u, true), 0.0, upper, opts)?.value * pre;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let head = if z.is_infinite() { 1.0 } else { erf((b * z).sqrt()) };
    Ok((0.5 * a * head - comp).clamp(0.0, a / 2.0))
}

/// Conditional ASEP of ZF decoding layer `layer` by quadrature of the
/// closed-form outage.
pub fn zf_conditional_asep(q: &AsepQuery, layer: usize, ordering: DetectionStrategy) -> Result<f64> {
    let oq = OutageQuery::zf_layer(1.0, layer, ordering);
    conditional_asep(q, |x| {
        if x <= 0.0 {
            return Ok(0.0);
        }
        zf_outage(&q.cfg, &oq.with_gamma(x), ZfMode::General)
    })
}

/// Conditional ASEP of fixed-order MMSE stage `stage`.
pub fn mmse_conditional_asep(q: &AsepQuery, stage: usize) -> Result<f64> {
    let oq = OutageQuery::mmse_stage(1.0, stage);
    conditional_asep(q, |x| {
        if x <= 0.0 {
            return Ok(0.0);
        }
        mmse_outage(&q.cfg, &oq.with_gamma(x), MmseMode::General)
    })
}

/// Overall ASEP from per-layer conditional ASEPs (index 0 = layer 1):
/// `(1 - 1/M)/m sum_t t P_t prod_{l > t} (1 - P_l)`.
pub fn overall_asep(states: usize, per_layer: &[f64]) -> Result<f64> {
    if per_layer.is_empty() {
        return Err(Error::InvalidInput("at least one layer is required".into()));
    }
    if per_layer.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidInput(format!("layer ASEPs must lie in [0, 1]: {per_layer:?}")));
    }
    let m = per_layer.len();
    let mut s = 0.0;
    for t in 0..m {
        let survive: f64 = per_layer[t + 1..].iter().map(|p| 1.0 - p).product();
        s += (t + 1) as f64 * per_layer[t] * survive;
    }
    Ok((1.0 - 1.0 / states as f64) / m as f64 * s)
}

/// Per-layer conditional ASEPs (layer order) and the overall value.
#[derive(Clone, Debug, PartialEq)]
pub struct AsepBreakdown {
    pub per_layer: Vec<f64>,
    pub overall: f64,
}

pub fn asep_total(q: &AsepQuery, ordering: DetectionStrategy) -> Result<AsepBreakdown> {
    let m = q.cfg.m;
    let per_layer = match q.scheme {
        Scheme::Zf => (1..=m)
            .map(|t| zf_conditional_asep(q, t, ordering))
            .collect::<Result<Vec<_>>>()?,
        Scheme::Mmse => (1..=m)
            .map(|t| mmse_conditional_asep(q, crate::layer_to_stage(m, t)))
            .collect::<Result<Vec<_>>>()?,
    };
    let overall = overall_asep(q.modulation.states, &per_layer)?;
    Ok(AsepBreakdown { per_layer, overall })
}

/// Closed-form conditional ASEP of ZF layer `layer` for an ideal transmitter
/// (`kappa_t = 0`).
pub fn zf_asep_closed(
    cfg: &SystemConfig,
    layer: usize,
    modulation: &ModulationSpec,
    ordering: DetectionStrategy,
) -> Result<f64> {
    cfg.validate()?;
    if cfg.kappa_t != 0.0 {
        return Err(Error::Unsupported("closed-form ZF ASEP needs kappa_t = 0".into()));
    }
    let coeffs = xi_coefficients(layer, cfg.n, cfg.m, cfg.p, ordering)?;
    let (a, b) = (modulation.a_const, modulation.b_const);
    let m = cfg.m;
    let w = cfg.omega;
    let s2 = cfg.sigma_prime_sq();
    let gm = gamma_real(m as f64)?;
    let mut total = 0.0;
    for t in &coeffs.terms {
        let r = t.rate_int as f64;
        let base = s2 + b / r;
        let zz = if w > 0.0 { base / w } else { f64::INFINITY };
        let mut acc = 0.0;
        for mu in 0..t.shape {
            let mu_f = mu as f64;
            let vmax = if w > 0.0 { mu } else { 0 };
            for v in 0..=vmax {
                let us = tricomi_us(mu_f + 0.5, mu_f + 1.5 - v as f64 - m as f64, zz)?;
                acc += binomial(mu, v) * gamma_real((v + m) as f64)? * gamma_real(mu_f + 0.5)? / (factorial(mu) * gm)
                    * s2.powi((mu - v) as i32)
                    * w.powi(v as i32)
                    * base.powf(-(mu_f + 0.5))
                    * us;
            }
        }
        total += t.weight * acc / r.sqrt();
    }
    Ok((0.5 * a * (1.0 - (b / PI).sqrt() * total)).clamp(0.0, a / 2.0))
}

/// Closed-form conditional ASEP of MMSE stage `stage < m` for an ideal
/// transmitter and perfect CSI (`kappa_t = omega = 0`).
pub fn mmse_asep_closed(cfg: &SystemConfig, stage: usize, modulation: &ModulationSpec) -> Result<f64> {
    cfg.validate()?;
    if cfg.kappa_t != 0.0 || cfg.omega != 0.0 {
        return Err(Error::Unsupported("closed-form MMSE ASEP needs kappa_t = omega = 0".into()));
    }
    let (n, m) = (cfg.n, cfg.m);
    if stage == 0 || stage > m {
        return Err(Error::InvalidInput(format!("stage {stage} out of range 1..={m}")));
    }
    if stage == m {
        return Err(Error::Unsupported(
            "the last MMSE stage has no closed form; use conditional_asep".into(),
        ));
    }
    let (a, b) = (modulation.a_const, modulation.b_const);
    let s2 = cfg.sigma_prime_sq();
    let l = m - stage;
    let mut first = 0.0;
    for k1 in 1..=n {
        let k = k1 as f64;
        first += gamma_real(k - 0.5)? * s2.powi((k1 - 1) as i32) / (factorial(k1 - 1) * (s2 + b).powf(k - 0.5));
    }
    let mut second = 0.0;
    for k2 in n - l + 1..=n {
        for j in n - k2 + 1..=l {
            let alpha = (k2 + j) as f64 - 0.5;
            let bb = (k2 + j + stage) as f64 - m as f64 + 0.5;
            let u = tricomi_u(TricomiParams::new(alpha, bb, b + s2)?)?;
            second += binomial(l, j) * s2.powi((k2 - 1) as i32) * gamma_real(alpha)? / factorial(k2 - 1) * u;
        }
    }
    Ok((0.5 * a * (1.0 - (b / PI).sqrt() * (first - second))).clamp(0.0, a / 2.0))
}
