//! Deterministic parallel Monte-Carlo estimation of outage and symbol error
//! rates.
//!
//! Trials are cut into chunks of [`CHUNK`]; chunk `c` draws from a ChaCha8
//! stream keyed by the seed with stream id `c`. Counts are reduced in chunk
//! order, so results do not depend on the number of worker threads.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytic::OutageQuery;
use crate::channel::{received, sample_cn_matrix, sample_symbols, ChannelRealization, ModulationSpec, SystemConfig};
use crate::error::{Error, Result};
use crate::matcore::ComplexMatrix;
use crate::mmse_sic::{mmse_sic_decode_with, stage_sindr, MmseStageContext};
use crate::zf_sic::{
    detection_order, zf_layer_terms, zf_sic_decode_with, zf_sindr, Crosstalk, FactorSource, Feedback,
    ZfLayerTerms, ZfSindrModel,
};
use crate::{DetectionStrategy, Scheme};

/// Trials per random stream.
pub const CHUNK: u64 = 1024;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

pub const DEFAULT_OUTAGE_TRIALS: u64 = 1_000_000;
pub const DEFAULT_SER_TRIALS: u64 = 100_000;
const MIN_TRIALS: u64 = 1_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McMode {
    /// SINDR expressions evaluated on sampled channels.
    FormulaSampling,
    /// Full transmission and decoding.
    LinkLevel,
}

impl fmt::Display for McMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            McMode::FormulaSampling => "formula_sampling",
            McMode::LinkLevel => "link_level",
        })
    }
}

/// Probability estimate with a 95% interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutageEstimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub seed: u64,
    pub mode: McMode,
}

impl OutageEstimate {
    pub fn from_counts(hits: u64, trials: u64, seed: u64, mode: McMode) -> Self {
        let (ci_low, ci_high) = wilson_interval(hits, trials);
        Self {
            value: hits as f64 / trials as f64,
            ci_low,
            ci_high,
            trials,
            seed,
            mode,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// 95% Wilson score interval. At 0 or `trials` hits the open end uses the
/// exact (Clopper-Pearson) bound, which is slightly tighter there.
pub fn wilson_interval(hits: u64, trials: u64) -> (f64, f64) {
    assert!(trials > 0 && hits <= trials);
    let n = trials as f64;
    if hits == 0 {
        return (0.0, 1.0 - 0.025f64.powf(1.0 / n));
    }
    if hits == trials {
        return (0.025f64.powf(1.0 / n), 1.0);
    }
    let p = hits as f64 / n;
    let z2 = Z95 * Z95;
    let den = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / den;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / den;
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Runs `trials` trials in chunks and sums the per-chunk count vectors.
fn run_chunks<F>(trials: u64, seed: u64, threads: usize, width: usize, body: F) -> Result<Vec<u64>>
where
    F: Fn(&mut ChaCha8Rng, u64, &mut [u64]) -> Result<()> + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    let per_chunk: Vec<Vec<u64>> = pool(threads)?.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = chunk_rng(seed, c);
                let len = CHUNK.min(trials - c * CHUNK);
                let mut counts = vec![0u64; width];
                body(&mut rng, len, &mut counts)?;
                Ok(counts)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut total = vec![0u64; width];
    for c in &per_chunk {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    Ok(total)
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidInput(format!("at least {MIN_TRIALS} trials required, got {trials}")));
    }
    Ok(())
}

/// One outage evaluation inside a sweep.
#[derive(Clone, Copy, Debug)]
pub struct OutagePoint {
    pub cfg: SystemConfig,
    pub query: OutageQuery,
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub zf_model: ZfSindrModel,
}

impl SweepOptions {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            threads: 0,
            zf_model: ZfSindrModel::default(),
        }
    }
}

#[derive(PartialEq)]
struct ZfKey {
    strategy: DetectionStrategy,
    crosstalk: Crosstalk,
    factors: FactorSource,
    omega_bits: u64,
}

/// Per-trial memo of ZF layer terms, keyed by what they depend on.
struct ZfCache {
    entries: Vec<(ZfKey, Vec<ZfLayerTerms>)>,
}

impl ZfCache {
    fn terms(
        &mut self,
        h: &ComplexMatrix,
        d_std: &ComplexMatrix,
        omega: f64,
        strategy: DetectionStrategy,
        model: ZfSindrModel,
    ) -> Result<Vec<ZfLayerTerms>> {
        // with true-channel factors Y_i scales exactly with omega
        let key = ZfKey {
            strategy,
            crosstalk: model.crosstalk,
            factors: model.factors,
            omega_bits: if model.factors == FactorSource::True { 0 } else { omega.to_bits() },
        };
        let scale = if model.factors == FactorSource::True { omega } else { 1.0 };
        if let Some((_, t)) = self.entries.iter().find(|(k, _)| *k == key) {
            return Ok(scaled(t, scale));
        }
        let base_omega = if model.factors == FactorSource::True { 1.0 } else { omega };
        let real = ChannelRealization::from_standard(h.clone(), d_std, base_omega);
        let order = detection_order(model.source(&real), strategy);
        let t = zf_layer_terms(&real, &order, model)?;
        let out = scaled(&t, scale);
        self.entries.push((key, t));
        Ok(out)
    }
}

fn scaled(t: &[ZfLayerTerms], s: f64) -> Vec<ZfLayerTerms> {
    t.iter()
        .map(|x| ZfLayerTerms {
            r_ii_sq: x.r_ii_sq,
            y_i: x.y_i * s,
        })
        .collect()
}

fn trial_outages(
    h: &ComplexMatrix,
    d_std: &ComplexMatrix,
    points: &[OutagePoint],
    model: ZfSindrModel,
    hits: &mut [bool],
) -> Result<()> {
    let mut cache = ZfCache { entries: Vec::new() };
    for (pt, hit) in points.iter().zip(hits.iter_mut()) {
        let cfg = &pt.cfg;
        let q = &pt.query;
        let sindr = match q.scheme {
            Scheme::Zf => {
                let terms = cache.terms(h, d_std, cfg.omega, q.ordering, model)?;
                zf_sindr(cfg, terms[q.layer(cfg.m) - 1])?
            }
            Scheme::Mmse => {
                if q.ordering != DetectionStrategy::Fixed {
                    return Err(Error::Unsupported("MMSE-SIC is simulated in fixed order only".into()));
                }
                stage_sindr(cfg, &MmseStageContext::new(h, q.stage(cfg.m))?)?
            }
        };
        *hit = sindr <= q.gamma_th;
    }
    Ok(())
}

/// Formula-sampling outage estimates for several points on shared draws of
/// `H` and a unit-variance error matrix (`dH = sqrt(omega) dH_std`).
pub fn estimate_outage_sweep(points: &[OutagePoint], opts: &SweepOptions) -> Result<Vec<OutageEstimate>> {
    check_trials(opts.trials)?;
    let Some(first) = points.first() else {
        return Ok(Vec::new());
    };
    let (n, m) = (first.cfg.n, first.cfg.m);
    for pt in points {
        pt.cfg.validate()?;
        pt.query.validate(pt.cfg.m)?;
        if (pt.cfg.n, pt.cfg.m) != (n, m) {
            return Err(Error::InvalidInput("all sweep points must share n and m".into()));
        }
    }
    let max_resample = (opts.trials / 10_000).max(1);
    let width = points.len() + 1;
    let counts = run_chunks(opts.trials, opts.seed, opts.threads, width, |rng, len, counts| {
        let mut hits = vec![false; points.len()];
        let mut done = 0;
        while done < len {
            let h = sample_cn_matrix(rng, n, m);
            let d = sample_cn_matrix(rng, n, m);
            match trial_outages(&h, &d, points, opts.zf_model, &mut hits) {
                Ok(()) => {
                    for (c, &x) in counts.iter_mut().zip(&hits) {
                        *c += x as u64;
                    }
                    done += 1;
                }
                Err(Error::DegenerateRealization(_)) => counts[points.len()] += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(())
    })?;
    if counts[points.len()] > max_resample {
        return Err(Error::DegenerateRealization(format!(
            "{} degenerate draws exceed the resampling cap of {max_resample}",
            counts[points.len()]
        )));
    }
    Ok(counts[..points.len()]
        .iter()
        .map(|&c| OutageEstimate::from_counts(c, opts.trials, opts.seed, McMode::FormulaSampling))
        .collect())
}

/// Outage estimate of one query with the default SINDR model.
pub fn estimate_outage(
    cfg: &SystemConfig,
    q: &OutageQuery,
    trials: u64,
    seed: u64,
    mode: McMode,
) -> Result<OutageEstimate> {
    if mode != McMode::FormulaSampling {
        return Err(Error::Unsupported("outage is estimated by formula sampling only".into()));
    }
    let pts = [OutagePoint { cfg: *cfg, query: *q }];
    Ok(estimate_outage_sweep(&pts, &SweepOptions::new(trials, seed))?[0])
}

/// Which symbols are fed back for cancellation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackMode {
    Genie,
    Decision,
}

/// Link-level symbol error rates.
#[derive(Clone, Debug)]
pub struct SerEstimate {
    /// Index 0 = SIC stage 1.
    pub per_stage: Vec<OutageEstimate>,
    /// Fraction of wrong symbols over all streams.
    pub overall: OutageEstimate,
}

#[derive(Clone, Debug)]
pub struct SerOptions {
    pub scheme: Scheme,
    /// Ignored for MMSE (always fixed).
    pub ordering: DetectionStrategy,
    pub modulation: ModulationSpec,
    pub feedback: FeedbackMode,
    pub trials: u64,
    pub seed: u64,
    pub threads: usize,
}

pub fn estimate_ser(cfg: &SystemConfig, opts: &SerOptions) -> Result<SerEstimate> {
    ser_impl(cfg, opts, true)
}

/// Debug mode: the same decoder with every noise and distortion term removed.
pub fn estimate_ser_noiseless(cfg: &SystemConfig, opts: &SerOptions) -> Result<SerEstimate> {
    ser_impl(cfg, opts, false)
}

fn ser_impl(cfg: &SystemConfig, opts: &SerOptions, noisy: bool) -> Result<SerEstimate> {
    cfg.validate()?;
    opts.modulation.validate()?;
    check_trials(opts.trials)?;
    let m = cfg.m;
    let max_resample = (opts.trials / 10_000).max(1);
    let counts = run_chunks(opts.trials, opts.seed, opts.threads, m + 1, |rng, len, counts| {
        let mut done = 0;
        while done < len {
            let h = sample_cn_matrix(rng, cfg.n, m);
            let d = sample_cn_matrix(rng, cfg.n, m);
            let real = ChannelRealization::from_standard(h, &d, cfg.omega);
            let (idx, s) = sample_symbols(cfg, &opts.modulation, rng);
            let y = received(cfg, &real, &s, rng, noisy)?;
            let fb = match opts.feedback {
                FeedbackMode::Genie => Feedback::Genie(&idx),
                FeedbackMode::Decision => Feedback::Decision,
            };
            let decoded = match opts.scheme {
                Scheme::Zf => {
                    let order = detection_order(&real.h_hat, opts.ordering);
                    zf_sic_decode_with(cfg, &y, &real, &order, &opts.modulation, fb)
                        .map(|dec| order.perm.iter().map(|&s| dec[s] != idx[s]).collect::<Vec<_>>())
                }
                Scheme::Mmse => mmse_sic_decode_with(cfg, &y, &real, &opts.modulation, fb)
                    .map(|dec| dec.iter().zip(&idx).map(|(a, b)| a != b).collect()),
            };
            match decoded {
                Ok(errs) => {
                    for (c, e) in counts.iter_mut().zip(errs) {
                        *c += e as u64;
                    }
                    done += 1;
                }
                Err(Error::DegenerateRealization(_)) | Err(Error::Singular { .. }) => counts[m] += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(())
    })?;
    if counts[m] > max_resample {
        return Err(Error::DegenerateRealization(format!(
            "{} degenerate draws exceed the resampling cap of {max_resample}",
            counts[m]
        )));
    }
    let per_stage = counts[..m]
        .iter()
        .map(|&c| OutageEstimate::from_counts(c, opts.trials, opts.seed, McMode::LinkLevel))
        .collect();
    let total: u64 = counts[..m].iter().sum();
    let overall = OutageEstimate::from_counts(total, opts.trials * m as u64, opts.seed, McMode::LinkLevel);
    Ok(SerEstimate { per_stage, overall })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_properties() {
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!(hi <= 3.7 / 1000.0);
        let (lo, hi) = wilson_interval(500, 1000);
        assert!(lo < 0.5 && hi > 0.5);
        assert!((hi - lo - 2.0 * 1.96 * (0.25f64 / 1000.0).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn noiseless_ser_is_zero() {
        let cfg = SystemConfig::new(4, 4, 100.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        for scheme in [Scheme::Zf, Scheme::Mmse] {
            let opts = SerOptions {
                scheme,
                ordering: DetectionStrategy::Foschini,
                modulation: ModulationSpec::bpsk(),
                feedback: FeedbackMode::Decision,
                trials: 2000,
                seed: 5,
                threads: 1,
            };
            let r = ser_impl(&cfg, &opts, false).unwrap();
            assert_eq!(r.overall.value, 0.0);
        }
    }

    #[test]
    fn too_few_trials_rejected() {
        let cfg = SystemConfig::ideal(2, 2, 0.0).unwrap();
        let q = OutageQuery::mmse_stage(1.0, 1);
        assert!(estimate_outage(&cfg, &q, 10, 1, McMode::FormulaSampling).is_err());
    }
}
