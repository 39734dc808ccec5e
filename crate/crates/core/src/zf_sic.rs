//! ZF-SIC receiver: detection ordering, QR nulling, per-stage SINDR and
//! decision-feedback decoding.
//!
//! Layer `i` is column `i` of the permuted channel; layer `m` holds the stream
//! decoded first (stage 1), so columns are arranged in ascending stream norm.

use num_complex::Complex64;

use crate::channel::{ChannelRealization, ModulationSpec, SystemConfig};
use crate::error::{Error, Result};
use crate::matcore::{col_norms_sq, qr_decompose, ComplexMatrix, QrFactors};
use crate::{DetectionStrategy, Scheme};

/// Decoding order. `perm[k]` is the 0-based stream decoded at stage `k + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectionOrder {
    pub perm: Vec<usize>,
    pub strategy: DetectionStrategy,
}

impl DetectionOrder {
    pub fn identity(m: usize) -> Self {
        Self {
            perm: (0..m).collect(),
            strategy: DetectionStrategy::Fixed,
        }
    }

    pub fn m(&self) -> usize {
        self.perm.len()
    }

    /// Column arrangement of the triangular system: entry `i` (0-based) is
    /// the stream sitting at decoding layer `i + 1`.
    pub fn layer_columns(&self) -> Vec<usize> {
        self.perm.iter().rev().copied().collect()
    }

    fn check(&self, m: usize) -> Result<()> {
        let mut seen = vec![false; m];
        if self.perm.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "order has {} stages, system has {m} streams",
                self.perm.len()
            )));
        }
        for &s in &self.perm {
            if s >= m || seen[s] {
                return Err(Error::InvalidInput(format!("{:?} is not a permutation", self.perm)));
            }
            seen[s] = true;
        }
        Ok(())
    }
}

/// Per-stage SINDRs of one realization; `values[k]` belongs to stage `k + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SindrProfile {
    pub values: Vec<f64>,
    pub scheme: Scheme,
}

impl SindrProfile {
    /// SINDR of SIC stage `k` (1-based).
    pub fn stage(&self, k: usize) -> f64 {
        self.values[k - 1]
    }
}

/// `r_ii^2` and the crosstalk aggregate `Y_i` of one decoding layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZfLayerTerms {
    pub r_ii_sq: f64,
    pub y_i: f64,
}

/// Which channel supplies the ordering and QR factors of the SINDR model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorSource {
    /// True channel `H`.
    True,
    /// Receiver estimate `H_hat`.
    #[default]
    Estimated,
}

/// How the crosstalk aggregate `Y_i` is formed from `dH`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Crosstalk {
    /// Row `i` of `Q^H dH`: the residual the nulling step actually leaves.
    #[default]
    Projected,
    /// Row `i` of `(R^-1)^H dH^H Q R`, transcribed as defined.
    Literal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ZfSindrModel {
    pub factors: FactorSource,
    pub crosstalk: Crosstalk,
}

impl ZfSindrModel {
    pub fn new(factors: FactorSource, crosstalk: Crosstalk) -> Self {
        Self { factors, crosstalk }
    }

    /// The matrix that ordering and QR are taken from.
    pub fn source<'a>(&self, real: &'a ChannelRealization) -> &'a ComplexMatrix {
        match self.factors {
            FactorSource::True => &real.h,
            FactorSource::Estimated => &real.h_hat,
        }
    }
}

/// Feedback used when cancelling already decoded streams.
#[derive(Clone, Copy, Debug)]
pub enum Feedback<'a> {
    /// The receiver's own decisions.
    Decision,
    /// The true symbol indices in original stream order.
    Genie(&'a [usize]),
}

/// Norm-based (strongest first, ties to the lower index) or identity order.
pub fn detection_order(h_hat: &ComplexMatrix, strategy: DetectionStrategy) -> DetectionOrder {
    let m = h_hat.cols();
    let mut perm: Vec<usize> = (0..m).collect();
    if strategy == DetectionStrategy::Foschini {
        let norms = col_norms_sq(h_hat);
        // stable sort keeps lower indices first among equal norms
        perm.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    }
    DetectionOrder { perm, strategy }
}

fn layer_qr(a: &ComplexMatrix, order: &DetectionOrder) -> Result<(Vec<usize>, QrFactors)> {
    order.check(a.cols())?;
    let cols = order.layer_columns();
    let f = qr_decompose(&a.select_columns(&cols))?;
    Ok((cols, f))
}

/// `r_ii^2` and `Y_i` for every decoding layer (index 0 = layer 1).
pub fn zf_layer_terms(
    real: &ChannelRealization,
    order: &DetectionOrder,
    model: ZfSindrModel,
) -> Result<Vec<ZfLayerTerms>> {
    let (cols, f) = layer_qr(model.source(real), order)?;
    let m = cols.len();
    let n = real.h.rows();
    let dh = real.delta_h.select_columns(&cols);
    let mut out = Vec::with_capacity(m);
    match model.crosstalk {
        Crosstalk::Projected => {
            for i in 0..m {
                let mut y = 0.0;
                for j in 0..m {
                    let v: Complex64 = (0..n).map(|k| f.q[(k, i)].conj() * dh[(k, j)]).sum();
                    y += v.norm_sqr();
                }
                out.push(ZfLayerTerms {
                    r_ii_sq: f.diag_sq[i],
                    y_i: y,
                });
            }
        }
        Crosstalk::Literal => {
            let q_red = f.q.select_columns(&(0..m).collect::<Vec<_>>());
            let r_sq = ComplexMatrix::from_fn(m, m, |i, j| f.r[(i, j)]);
            let mm = dh.adjoint().matmul(&q_red)?.matmul(&r_sq)?;
            // X = (R^H)^-1 M by forward substitution (R^H is lower triangular)
            let mut x = ComplexMatrix::zeros(m, m);
            for col in 0..m {
                for i in 0..m {
                    let mut s = mm[(i, col)];
                    for k in 0..i {
                        s -= r_sq[(k, i)].conj() * x[(k, col)];
                    }
                    let d = r_sq[(i, i)].re;
                    if d * d < 1e-300 {
                        return Err(Error::DegenerateRealization(format!("r_{i}{i} vanishes")));
                    }
                    x[(i, col)] = s / d;
                }
            }
            for i in 0..m {
                out.push(ZfLayerTerms {
                    r_ii_sq: f.diag_sq[i],
                    y_i: x.row(i).iter().map(|z| z.norm_sqr()).sum(),
                });
            }
        }
    }
    Ok(out)
}

/// SINDR of one layer from its `r_ii^2` and `Y_i`.
pub fn zf_sindr(cfg: &SystemConfig, t: ZfLayerTerms) -> Result<f64> {
    if !(t.r_ii_sq >= 1e-300) {
        return Err(Error::DegenerateRealization(format!("r_ii^2 = {:e}", t.r_ii_sq)));
    }
    let p = cfg.p;
    let kt2 = cfg.kappa_t * cfg.kappa_t;
    let sig = p * t.r_ii_sq;
    Ok(sig / (sig * kt2 + p * t.y_i * (1.0 + kt2) + p * cfg.kappa_r * cfg.kappa_r * cfg.m as f64 + cfg.n0))
}

/// Per-stage SINDR with the default model (estimated-channel factors,
/// projected crosstalk).
pub fn zf_sindr_profile(cfg: &SystemConfig, real: &ChannelRealization, order: &DetectionOrder) -> Result<SindrProfile> {
    zf_sindr_profile_with(cfg, real, order, ZfSindrModel::default())
}

pub fn zf_sindr_profile_with(
    cfg: &SystemConfig,
    real: &ChannelRealization,
    order: &DetectionOrder,
    model: ZfSindrModel,
) -> Result<SindrProfile> {
    let terms = zf_layer_terms(real, order, model)?;
    let m = terms.len();
    let mut values = vec![0.0; m];
    for (i, t) in terms.into_iter().enumerate() {
        // layer i + 1 is stage m - i
        values[m - 1 - i] = zf_sindr(cfg, t)?;
    }
    Ok(SindrProfile {
        values,
        scheme: Scheme::Zf,
    })
}

/// Decision-feedback ZF-SIC; returns symbol indices in original stream order.
pub fn zf_sic_decode(
    cfg: &SystemConfig,
    y: &[Complex64],
    real: &ChannelRealization,
    order: &DetectionOrder,
    modulation: &ModulationSpec,
) -> Result<Vec<usize>> {
    zf_sic_decode_with(cfg, y, real, order, modulation, Feedback::Decision)
}

pub fn zf_sic_decode_with(
    cfg: &SystemConfig,
    y: &[Complex64],
    real: &ChannelRealization,
    order: &DetectionOrder,
    modulation: &ModulationSpec,
    feedback: Feedback<'_>,
) -> Result<Vec<usize>> {
    let (cols, f) = layer_qr(&real.h_hat, order)?;
    let m = cols.len();
    if y.len() != f.q.rows() {
        return Err(Error::DimensionMismatch(format!(
            "received vector has length {}, expected {}",
            y.len(),
            f.q.rows()
        )));
    }
    let amp = cfg.p.sqrt();
    let z = f.q.adjoint_mul_vec(y)?;
    let mut decided = vec![0usize; m];
    let mut fb = vec![Complex64::new(0.0, 0.0); m];
    for i in (0..m).rev() {
        let rii = f.r[(i, i)].re;
        if rii * rii < 1e-300 {
            return Err(Error::DegenerateRealization(format!("estimated r_ii vanishes at layer {}", i + 1)));
        }
        let mut v = z[i];
        for j in i + 1..m {
            v -= f.r[(i, j)] * fb[j];
        }
        let k = modulation.slice(v / (rii * amp));
        decided[i] = k;
        fb[i] = match feedback {
            Feedback::Decision => modulation.points[k] * amp,
            Feedback::Genie(truth) => modulation.points[truth[cols[i]]] * amp,
        };
    }
    let mut out = vec![0usize; m];
    for (i, &c) in cols.iter().enumerate() {
        out[c] = decided[i];
    }
    Ok(out)
}
