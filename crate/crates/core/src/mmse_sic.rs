//! Impairment-aware MMSE-SIC with fixed (natural) stage order.
//!
//! Stage `i` detects stream `i` (1-based) against the still undecoded streams
//! `i+1..m`. The SINDR expressions are evaluated on the true channel; the
//! decoder only uses the estimate.

use num_complex::Complex64;

use crate::channel::{ChannelRealization, ModulationSpec, SystemConfig};
use crate::error::{Error, Result};
use crate::matcore::{dot_c, norm_sq, solve_hpd, ComplexMatrix};
use crate::zf_sic::{Feedback, SindrProfile};
use crate::Scheme;

/// Target column and the undecoded interferers of one stage.
#[derive(Clone, Debug)]
pub struct MmseStageContext {
    pub stage: usize,
    /// Columns `stage+1..m`; `None` at the last stage.
    pub deflated: Option<ComplexMatrix>,
    pub target: Vec<Complex64>,
}

impl MmseStageContext {
    pub fn new(h: &ComplexMatrix, stage: usize) -> Result<Self> {
        let m = h.cols();
        if stage == 0 || stage > m {
            return Err(Error::InvalidInput(format!("stage {stage} out of range 1..={m}")));
        }
        let deflated = (stage < m).then(|| h.select_columns(&(stage..m).collect::<Vec<_>>()));
        Ok(Self {
            stage,
            deflated,
            target: h.col(stage - 1),
        })
    }
}

fn loaded_gram(a: &ComplexMatrix, c: f64, load: f64) -> ComplexMatrix {
    let mut g = a.gram_outer().scale(c);
    for k in 0..g.rows() {
        g[(k, k)] += load;
    }
    g
}

/// `(c H H^H + (kappa_r^2 m + N0/p) I)^-1 h_j` for the 0-based column `j`.
pub fn mmse_filter(cfg: &SystemConfig, h: &ComplexMatrix, j: usize) -> Result<Vec<Complex64>> {
    if j >= h.cols() {
        return Err(Error::InvalidInput(format!("column {j} out of range for {} columns", h.cols())));
    }
    let a = loaded_gram(h, cfg.mmse_c(), cfg.sigma_prime_sq());
    solve_hpd(&a, &h.col(j))
}

fn crosstalk_sindr(cfg: &SystemConfig, c_hat: f64) -> Result<f64> {
    let d = cfg.crosstalk_d();
    if !(c_hat * d < 1.0) {
        return Err(Error::Inconsistent(format!(
            "MMSE crosstalk term {c_hat} reaches 2 sqrt(omega) + 1"
        )));
    }
    Ok(c_hat / (1.0 - d * c_hat))
}

/// `SINDR_m` from `y = ||h_m||^2`: the single-stream MRC form.
pub fn last_stage_sindr(cfg: &SystemConfig, y: f64) -> f64 {
    let s2 = cfg.sigma_prime_sq();
    let snr = y / s2;
    snr / ((cfg.mmse_c() - 1.0) * snr + 1.0)
}

/// SINDR of one stage from the deflated interferers (Woodbury form).
pub fn stage_sindr(cfg: &SystemConfig, ctx: &MmseStageContext) -> Result<f64> {
    let Some(k) = &ctx.deflated else {
        return Ok(last_stage_sindr(cfg, norm_sq(&ctx.target)));
    };
    let c = cfg.mmse_c();
    let a = loaded_gram(k, 1.0, cfg.sigma_prime_sq() / c);
    let x = solve_hpd(&a, &ctx.target)?;
    let phi = dot_c(&ctx.target, &x).re;
    crosstalk_sindr(cfg, phi / ((1.0 + phi) * c))
}

/// Per-stage SINDR on the true channel.
pub fn mmse_sindr_profile(cfg: &SystemConfig, real: &ChannelRealization) -> Result<SindrProfile> {
    let m = real.h.cols();
    let values = (1..=m)
        .map(|i| stage_sindr(cfg, &MmseStageContext::new(&real.h, i)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(SindrProfile {
        values,
        scheme: Scheme::Mmse,
    })
}

/// The same profile assembled without Woodbury: `beta = h_i^H g_i` with the
/// filter built from columns `i..m`, then `beta/(1 - d beta)` (stage `m`:
/// `beta/(1 - beta)`, no crosstalk).
pub fn mmse_sindr_profile_direct(cfg: &SystemConfig, real: &ChannelRealization) -> Result<SindrProfile> {
    let m = real.h.cols();
    let mut values = Vec::with_capacity(m);
    for i in 0..m {
        let sub = real.h.select_columns(&(i..m).collect::<Vec<_>>());
        let g = mmse_filter(cfg, &sub, 0)?;
        let beta = dot_c(&g, &sub.col(0)).re;
        values.push(if i + 1 == m {
            beta / (1.0 - beta)
        } else {
            crosstalk_sindr(cfg, beta)?
        });
    }
    Ok(SindrProfile {
        values,
        scheme: Scheme::Mmse,
    })
}

/// Fixed-order MMSE-SIC with decision feedback.
pub fn mmse_sic_decode(
    cfg: &SystemConfig,
    y: &[Complex64],
    real: &ChannelRealization,
    modulation: &ModulationSpec,
) -> Result<Vec<usize>> {
    mmse_sic_decode_with(cfg, y, real, modulation, Feedback::Decision)
}

pub fn mmse_sic_decode_with(
    cfg: &SystemConfig,
    y: &[Complex64],
    real: &ChannelRealization,
    modulation: &ModulationSpec,
    feedback: Feedback<'_>,
) -> Result<Vec<usize>> {
    let hh = &real.h_hat;
    let (n, m) = (hh.rows(), hh.cols());
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("received vector has length {}, expected {n}", y.len())));
    }
    let amp = cfg.p.sqrt();
    let mut yr = y.to_vec();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let sub = hh.select_columns(&(i..m).collect::<Vec<_>>());
        let h_i = sub.col(0);
        let g = mmse_filter(cfg, &sub, 0)?;
        let beta = dot_c(&g, &h_i).re;
        if !(beta > 0.0) {
            return Err(Error::DegenerateRealization(format!("MMSE gain vanishes at stage {}", i + 1)));
        }
        let z = dot_c(&g, &yr);
        let k = modulation.slice(z / (beta * amp));
        out.push(k);
        let s = match feedback {
            Feedback::Decision => modulation.points[k] * amp,
            Feedback::Genie(truth) => modulation.points[truth[i]] * amp,
        };
        for (yk, hk) in yr.iter_mut().zip(&h_i) {
            *yk -= hk * s;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{received, sample_realization, sample_symbols};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_wiener_filter() {
        let cfg = SystemConfig::new(1, 1, 4.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        let h = ComplexMatrix::identity(1);
        let g = mmse_filter(&cfg, &h, 0).unwrap();
        assert!((g[0].re - 1.0 / 1.25).abs() < 1e-15);
    }

    #[test]
    fn ideal_last_stage_is_mrc() {
        let cfg = SystemConfig::new(3, 2, 10.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let real = sample_realization(&cfg, &mut rng);
        let prof = mmse_sindr_profile(&cfg, &real).unwrap();
        let want = 10.0 * norm_sq(&real.h.col(1));
        assert!((prof.stage(2) - want).abs() < 1e-12 * want);
    }

    #[test]
    fn woodbury_matches_direct() {
        let cfg = SystemConfig::new(4, 3, 3.0, 1.0, 0.1, 0.05, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let real = sample_realization(&cfg, &mut rng);
            let a = mmse_sindr_profile(&cfg, &real).unwrap();
            let b = mmse_sindr_profile_direct(&cfg, &real).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() <= 1e-9 * y.abs());
            }
        }
    }

    #[test]
    fn noiseless_decoding_recovers_symbols() {
        let cfg = SystemConfig::new(4, 4, 1e4, 1.0, 0.0, 0.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bpsk = ModulationSpec::bpsk();
        for _ in 0..100 {
            let real = sample_realization(&cfg, &mut rng);
            let (idx, s) = sample_symbols(&cfg, &bpsk, &mut rng);
            let y = received(&cfg, &real, &s, &mut rng, false).unwrap();
            assert_eq!(mmse_sic_decode(&cfg, &y, &real, &bpsk).unwrap(), idx);
        }
    }
}
