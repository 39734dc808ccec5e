//! Declarative experiments: a TOML spec, figure presets and CSV output.
//!
//! One CSV per query, named `{output}/{id}.csv`. Comment lines start with
//! `#`; the header row is
//! `snr_db,analytic,mc_value,mc_ci_low,mc_ci_high,trials,mode`. Numbers are
//! written with 9 significant digits; columns of a disabled engine are empty.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::{mmse_outage, zf_outage, MmseMode, OutageQuery, ZfMode, MAX_ANTENNAS};
use crate::channel::{ModulationSpec, SystemConfig};
use crate::error::{Error, Result};
use crate::error_prop::{asep_total, mmse_conditional_asep, zf_conditional_asep, AsepQuery, MmseZLimit};
use crate::montecarlo::{
    estimate_outage_sweep, estimate_ser, FeedbackMode, OutageEstimate, OutagePoint, SerOptions, SweepOptions,
    DEFAULT_OUTAGE_TRIALS, DEFAULT_SER_TRIALS,
};
use crate::zf_sic::{Crosstalk, FactorSource, ZfSindrModel};
use crate::{db_to_linear, DetectionStrategy, Scheme};

pub const CSV_HEADER: &str = "snr_db,analytic,mc_value,mc_ci_low,mc_ci_high,trials,mode";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Analytic,
    #[serde(alias = "montecarlo")]
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    /// Outage probability of one stage.
    Outage,
    /// Conditional ASEP of one stage.
    Asep,
    /// Overall ASEP with error propagation.
    AsepTotal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub n: usize,
    pub m: usize,
    #[serde(default = "one")]
    pub n0: f64,
    #[serde(default)]
    pub kappa_t: f64,
    #[serde(default)]
    pub kappa_r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_db: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub id: String,
    pub kind: QueryKind,
    pub scheme: Scheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordering: Option<DetectionStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_th_db: Option<f64>,
    /// Sets both `kappa_t` and `kappa_r`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<FactorSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crosstalk: Option<Crosstalk>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_limit: Option<MmseZLimit>,
}

impl QuerySpec {
    fn new(id: impl Into<String>, kind: QueryKind, scheme: Scheme) -> Self {
        Self {
            id: id.into(),
            kind,
            scheme,
            ordering: None,
            stage: None,
            gamma_th_db: None,
            kappa: None,
            kappa_t: None,
            kappa_r: None,
            omega: None,
            omega_db: None,
            m: None,
            modulation: None,
            factors: None,
            crosstalk: None,
            z_limit: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Overrides both default trial counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default = "default_engines")]
    pub engines: Vec<Engine>,
    #[serde(default = "default_output")]
    pub output: String,
    /// SNR points `p/N0` in dB, strictly increasing.
    pub snr_db: Vec<f64>,
    /// Free-text lines copied into every CSV header.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub system: SystemSpec,
    #[serde(rename = "query")]
    pub queries: Vec<QuerySpec>,
}

fn default_engines() -> Vec<Engine> {
    vec![Engine::Analytic, Engine::Mc]
}

fn default_output() -> String {
    "results".into()
}

/// A query with every default and override applied.
#[derive(Clone, Debug)]
pub struct ResolvedQuery {
    pub id: String,
    pub kind: QueryKind,
    pub scheme: Scheme,
    pub ordering: DetectionStrategy,
    pub stage: usize,
    pub gamma_th: f64,
    /// Configuration with `p` still to be set from the sweep.
    pub cfg: SystemConfig,
    pub modulation: ModulationSpec,
    pub zf_model: ZfSindrModel,
    pub z_limit: MmseZLimit,
}

impl ResolvedQuery {
    fn outage_query(&self) -> OutageQuery {
        match self.scheme {
            Scheme::Zf => OutageQuery::zf_stage(self.gamma_th, self.stage, self.ordering),
            Scheme::Mmse => OutageQuery::mmse_stage(self.gamma_th, self.stage),
        }
    }

    fn describe(&self) -> String {
        let mut s = format!(
            "kind={} scheme={} ordering={}",
            key(&self.kind),
            key(&self.scheme),
            key(&self.ordering)
        );
        if self.kind != QueryKind::AsepTotal {
            let _ = write!(s, " stage={}", self.stage);
        }
        if self.kind == QueryKind::Outage {
            let _ = write!(s, " gamma_th={}", fmt_num(self.gamma_th));
        } else {
            let _ = write!(s, " modulation={}", self.modulation.name);
            if self.scheme == Scheme::Mmse {
                let _ = write!(s, " z_limit={}", key(&self.z_limit));
            }
        }
        if self.scheme == Scheme::Zf && self.kind == QueryKind::Outage {
            let _ = write!(
                s,
                " mc_factors={} mc_crosstalk={}",
                key(&self.zf_model.factors),
                key(&self.zf_model.crosstalk)
            );
        }
        s
    }
}

// the config-file spelling of a unit enum variant
fn key<T: Serialize>(v: &T) -> String {
    toml::Value::try_from(v)
        .ok()
        .and_then(|x| x.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.') && !id.starts_with('.')
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn trials_for(&self, kind: QueryKind) -> u64 {
        self.trials.unwrap_or(match kind {
            QueryKind::Outage => DEFAULT_OUTAGE_TRIALS,
            QueryKind::Asep | QueryKind::AsepTotal => DEFAULT_SER_TRIALS,
        })
    }

    /// Checks the spec and applies defaults and per-query overrides.
    pub fn resolve(&self) -> Result<Vec<ResolvedQuery>> {
        if self.snr_db.is_empty() {
            return Err(config_err("snr_db: at least one point is required"));
        }
        if self.snr_db.iter().any(|x| !x.is_finite()) {
            return Err(config_err("snr_db: values must be finite"));
        }
        if self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("snr_db: values must be strictly increasing"));
        }
        if self.engines.is_empty() {
            return Err(config_err("engines: at least one engine is required"));
        }
        if self.queries.is_empty() {
            return Err(config_err("query: at least one query is required"));
        }
        if let Some(t) = self.trials {
            if t < 1000 {
                return Err(config_err(format!("trials: at least 1000 required, got {t}")));
            }
        }
        let sys = &self.system;
        if sys.n > MAX_ANTENNAS {
            return Err(Error::Unsupported(format!(
                "system.n = {} exceeds the evaluation envelope n <= {MAX_ANTENNAS}",
                sys.n
            )));
        }
        let base_omega = resolve_omega("system", sys.omega, sys.omega_db)?.unwrap_or(0.0);
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::with_capacity(self.queries.len());
        for (k, q) in self.queries.iter().enumerate() {
            let at = format!("query[{k}] ({})", q.id);
            if !valid_id(&q.id) {
                return Err(config_err(format!("{at}: id must be non-empty and use [A-Za-z0-9_.-]")));
            }
            if !seen.insert(q.id.clone()) {
                return Err(config_err(format!("{at}: duplicate id")));
            }
            let m = q.m.unwrap_or(sys.m);
            let (mut kt, mut kr) = (sys.kappa_t, sys.kappa_r);
            if let Some(kp) = q.kappa {
                kt = kp;
                kr = kp;
            }
            kt = q.kappa_t.unwrap_or(kt);
            kr = q.kappa_r.unwrap_or(kr);
            let omega = resolve_omega(&at, q.omega, q.omega_db)?.unwrap_or(base_omega);
            let cfg = SystemConfig::new(sys.n, m, 1.0, sys.n0, kt, kr, omega)
                .map_err(|e| config_err(format!("{at}: {e}")))?;
            let ordering = q.ordering.unwrap_or(match q.scheme {
                Scheme::Zf => DetectionStrategy::Foschini,
                Scheme::Mmse => DetectionStrategy::Fixed,
            });
            if q.scheme == Scheme::Mmse && ordering == DetectionStrategy::Foschini {
                return Err(config_err(format!("{at}: MMSE-SIC supports fixed ordering only")));
            }
            let stage = match (q.kind, q.stage) {
                (QueryKind::AsepTotal, None) => 1,
                (QueryKind::AsepTotal, Some(_)) => {
                    return Err(config_err(format!("{at}: stage does not apply to asep_total")))
                }
                (_, Some(s)) if s >= 1 && s <= m => s,
                (_, Some(s)) => return Err(config_err(format!("{at}: stage {s} out of range 1..={m}"))),
                (_, None) => return Err(config_err(format!("{at}: stage is required"))),
            };
            let gamma_th = match (q.kind, q.gamma_th_db) {
                (QueryKind::Outage, Some(g)) if g.is_finite() => db_to_linear(g),
                (QueryKind::Outage, _) => return Err(config_err(format!("{at}: gamma_th_db is required"))),
                (_, Some(_)) => return Err(config_err(format!("{at}: gamma_th_db applies to outage queries only"))),
                (_, None) => 1.0,
            };
            let modulation = ModulationSpec::by_name(q.modulation.as_deref().unwrap_or("bpsk"))
                .map_err(|e| config_err(format!("{at}: {e}")))?;
            out.push(ResolvedQuery {
                id: q.id.clone(),
                kind: q.kind,
                scheme: q.scheme,
                ordering,
                stage,
                gamma_th,
                cfg,
                modulation,
                zf_model: ZfSindrModel::new(q.factors.unwrap_or_default(), q.crosstalk.unwrap_or_default()),
                z_limit: q.z_limit.unwrap_or_default(),
            });
        }
        Ok(out)
    }
}

fn resolve_omega(at: &str, lin: Option<f64>, db: Option<f64>) -> Result<Option<f64>> {
    match (lin, db) {
        (Some(_), Some(_)) => Err(config_err(format!("{at}: give omega or omega_db, not both"))),
        (Some(w), None) => Ok(Some(w)),
        (None, Some(d)) => Ok(Some(db_to_linear(d))),
        (None, None) => Ok(None),
    }
}

/// Execution settings that do not change results.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Worker threads for the Monte-Carlo engine; 0 lets the pool decide.
    pub threads: usize,
}

/// One CSV row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Row {
    pub snr_db: f64,
    pub analytic: Option<f64>,
    pub mc: Option<OutageEstimate>,
}

fn fmt_num(x: f64) -> String {
    format!("{x:.8e}")
}

fn analytic_value(rq: &ResolvedQuery, cfg: &SystemConfig) -> Result<f64> {
    match rq.kind {
        QueryKind::Outage => {
            let q = rq.outage_query();
            match rq.scheme {
                Scheme::Zf => zf_outage(cfg, &q, ZfMode::General),
                Scheme::Mmse => mmse_outage(cfg, &q, MmseMode::General),
            }
        }
        QueryKind::Asep => {
            let aq = AsepQuery::new(*cfg, rq.scheme, rq.modulation.clone(), rq.z_limit);
            match rq.scheme {
                Scheme::Zf => zf_conditional_asep(&aq, crate::stage_to_layer(cfg.m, rq.stage), rq.ordering),
                Scheme::Mmse => mmse_conditional_asep(&aq, rq.stage),
            }
        }
        QueryKind::AsepTotal => {
            let aq = AsepQuery::new(*cfg, rq.scheme, rq.modulation.clone(), rq.z_limit);
            Ok(asep_total(&aq, rq.ordering)?.overall)
        }
    }
}

/// Evaluates every query over the sweep.
pub fn evaluate(spec: &ExperimentSpec, opts: RunOptions) -> Result<Vec<(ResolvedQuery, Vec<Row>)>> {
    let resolved = spec.resolve()?;
    let analytic = spec.engines.contains(&Engine::Analytic);
    let mc = spec.engines.contains(&Engine::Mc);
    let mut rows: Vec<Vec<Row>> = resolved
        .iter()
        .map(|_| {
            spec.snr_db
                .iter()
                .map(|&s| Row {
                    snr_db: s,
                    analytic: None,
                    mc: None,
                })
                .collect()
        })
        .collect();

    if analytic {
        for (rq, rr) in resolved.iter().zip(rows.iter_mut()) {
            for row in rr.iter_mut() {
                let cfg = rq.cfg.with_snr_db(row.snr_db);
                row.analytic = Some(analytic_value(rq, &cfg).map_err(|e| {
                    Error::Config(format!("query {} at {} dB: {e}", rq.id, row.snr_db))
                })?);
            }
        }
    }

    if mc {
        // outage queries sharing (m, SINDR model) run as one sweep on common draws
        let mut groups: BTreeMap<(usize, u8, u8), Vec<(usize, usize)>> = BTreeMap::new();
        for (k, rq) in resolved.iter().enumerate() {
            if rq.kind != QueryKind::Outage {
                continue;
            }
            let key = (rq.cfg.m, rq.zf_model.factors as u8, rq.zf_model.crosstalk as u8);
            for j in 0..spec.snr_db.len() {
                groups.entry(key).or_default().push((k, j));
            }
        }
        for ((_, _, _), members) in groups {
            let (k0, _) = members[0];
            let points: Vec<OutagePoint> = members
                .iter()
                .map(|&(k, j)| OutagePoint {
                    cfg: resolved[k].cfg.with_snr_db(spec.snr_db[j]),
                    query: resolved[k].outage_query(),
                })
                .collect();
            let sweep = SweepOptions {
                trials: spec.trials_for(QueryKind::Outage),
                seed: spec.seed,
                threads: opts.threads,
                zf_model: resolved[k0].zf_model,
            };
            let est = estimate_outage_sweep(&points, &sweep)?;
            for (&(k, j), e) in members.iter().zip(est) {
                rows[k][j].mc = Some(e);
            }
        }
        for (k, rq) in resolved.iter().enumerate() {
            if rq.kind == QueryKind::Outage {
                continue;
            }
            for j in 0..spec.snr_db.len() {
                let cfg = rq.cfg.with_snr_db(spec.snr_db[j]);
                let so = SerOptions {
                    scheme: rq.scheme,
                    ordering: rq.ordering,
                    modulation: rq.modulation.clone(),
                    feedback: if rq.kind == QueryKind::Asep {
                        FeedbackMode::Genie
                    } else {
                        FeedbackMode::Decision
                    },
                    trials: spec.trials_for(rq.kind),
                    seed: spec.seed,
                    threads: opts.threads,
                };
                let r = estimate_ser(&cfg, &so)?;
                rows[k][j].mc = Some(if rq.kind == QueryKind::Asep {
                    r.per_stage[rq.stage - 1]
                } else {
                    r.overall
                });
            }
        }
    }
    Ok(resolved.into_iter().zip(rows).collect())
}

/// CSV text of one query.
pub fn render_csv(spec: &ExperimentSpec, rq: &ResolvedQuery, rows: &[Row]) -> String {
    let c = &rq.cfg;
    let mut s = String::new();
    let _ = writeln!(s, "# experiment: {}", spec.name);
    let _ = writeln!(s, "# query: {} {}", rq.id, rq.describe());
    let _ = writeln!(
        s,
        "# system: n={} m={} n0={} kappa_t={} kappa_r={} omega={}",
        c.n,
        c.m,
        fmt_num(c.n0),
        fmt_num(c.kappa_t),
        fmt_num(c.kappa_r),
        fmt_num(c.omega)
    );
    let engines: Vec<&str> = spec
        .engines
        .iter()
        .map(|e| match e {
            Engine::Analytic => "analytic",
            Engine::Mc => "mc",
        })
        .collect();
    let _ = writeln!(s, "# engines: {} seed: {}", engines.join(","), spec.seed);
    for note in &spec.notes {
        let _ = writeln!(s, "# {note}");
    }
    let _ = writeln!(s, "{CSV_HEADER}");
    for r in rows {
        let a = r.analytic.map(fmt_num).unwrap_or_default();
        let (v, lo, hi, t, mode) = match r.mc {
            Some(e) => (
                fmt_num(e.value),
                fmt_num(e.ci_low),
                fmt_num(e.ci_high),
                e.trials.to_string(),
                e.mode.to_string(),
            ),
            None => Default::default(),
        };
        let _ = writeln!(s, "{},{a},{v},{lo},{hi},{t},{mode}", fmt_num(r.snr_db));
    }
    s
}

/// Runs the experiment and writes one CSV per query; returns the paths.
pub fn run_experiment(spec: &ExperimentSpec, opts: RunOptions) -> Result<Vec<PathBuf>> {
    let results = evaluate(spec, opts)?;
    let dir = PathBuf::from(&spec.output);
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut paths = Vec::with_capacity(results.len());
    for (rq, rows) in &results {
        let path = dir.join(format!("{}.csv", rq.id));
        std::fs::write(&path, render_csv(spec, rq, rows)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        paths.push(path);
    }
    Ok(paths)
}

pub const PRESETS: [&str; 5] = ["fig1", "fig2", "fig3", "fig4", "fig5"];

const KAPPA_GRID: [f64; 3] = [0.0, 0.08, 0.175];
const OMEGA_GRID: [f64; 2] = [0.0, 0.1];

fn default_snr_grid() -> Vec<f64> {
    (0..=6).map(|k| 5.0 * k as f64).collect()
}

fn tag(x: f64) -> String {
    format!("{}", (x * 1000.0).round() as i64)
}

fn grid_note() -> String {
    format!(
        "default impairment grid: kappa in {KAPPA_GRID:?}, omega in {OMEGA_GRID:?}"
    )
}

/// Spec reproducing one figure configuration.
pub fn figure_preset(id: &str) -> Result<ExperimentSpec> {
    let system = |n, m| SystemSpec {
        n,
        m,
        n0: 1.0,
        kappa_t: 0.0,
        kappa_r: 0.0,
        omega: Some(0.0),
        omega_db: None,
    };
    let outage = |id: String, scheme, ordering, stage| {
        let mut q = QuerySpec::new(id, QueryKind::Outage, scheme);
        q.ordering = Some(ordering);
        q.stage = Some(stage);
        q.gamma_th_db = Some(0.0);
        if scheme == Scheme::Zf {
            q.factors = Some(FactorSource::True);
        }
        q
    };
    let mut spec = ExperimentSpec {
        name: id.to_string(),
        seed: 20_240_101,
        trials: None,
        engines: default_engines(),
        output: format!("results/{id}"),
        snr_db: default_snr_grid(),
        notes: Vec::new(),
        system: system(4, 4),
        queries: Vec::new(),
    };
    let grid = || KAPPA_GRID.iter().flat_map(|&k| OMEGA_GRID.iter().map(move |&w| (k, w)));
    match id {
        "fig1" => {
            spec.notes.push(grid_note());
            spec.notes.push("kappa sets kappa_t = kappa_r; gamma_th = 0 dB".into());
            for (k, w) in grid() {
                for (scheme, ordering, name) in [
                    (Scheme::Zf, DetectionStrategy::Foschini, "zf_ordered"),
                    (Scheme::Mmse, DetectionStrategy::Fixed, "mmse_fixed"),
                ] {
                    let mut q = outage(format!("{name}_s1_k{}_w{}", tag(k), tag(w)), scheme, ordering, 1);
                    q.kappa = Some(k);
                    q.omega = Some(w);
                    spec.queries.push(q);
                }
            }
        }
        "fig2" => {
            spec.system = system(4, 2);
            spec.notes.push(grid_note());
            spec.notes.push("kappa sets kappa_t = kappa_r; gamma_th = 0 dB".into());
            for (k, w) in grid() {
                for (ordering, name) in [
                    (DetectionStrategy::Foschini, "zf_ordered"),
                    (DetectionStrategy::Fixed, "zf_fixed"),
                ] {
                    for stage in 1..=2 {
                        let mut q = outage(format!("{name}_s{stage}_k{}_w{}", tag(k), tag(w)), Scheme::Zf, ordering, stage);
                        q.kappa = Some(k);
                        q.omega = Some(w);
                        spec.queries.push(q);
                    }
                }
            }
        }
        "fig3" => {
            spec.system = SystemSpec {
                n: 6,
                m: 4,
                n0: 1.0,
                kappa_t: 0.08,
                kappa_r: 0.0,
                omega: None,
                omega_db: Some(-10.0),
            };
            spec.notes.push("gamma_th = 3 dB; m in {4, 6}".into());
            for m in [4usize, 6] {
                for (scheme, ordering, name) in [
                    (Scheme::Zf, DetectionStrategy::Foschini, "zf_ordered"),
                    (Scheme::Zf, DetectionStrategy::Fixed, "zf_fixed"),
                    (Scheme::Mmse, DetectionStrategy::Fixed, "mmse_fixed"),
                ] {
                    let mut q = outage(format!("{name}_s1_m{m}"), scheme, ordering, 1);
                    q.gamma_th_db = Some(3.0);
                    q.m = Some(m);
                    spec.queries.push(q);
                }
            }
        }
        "fig4" => {
            spec.system = system(8, 4);
            spec.notes.push(grid_note());
            spec.notes.push("kappa sets kappa_t = kappa_r; BPSK".into());
            for (k, w) in grid() {
                let mut q = QuerySpec::new(format!("mmse_fixed_asep_s1_k{}_w{}", tag(k), tag(w)), QueryKind::Asep, Scheme::Mmse);
                q.ordering = Some(DetectionStrategy::Fixed);
                q.stage = Some(1);
                q.kappa = Some(k);
                q.omega = Some(w);
                q.modulation = Some("bpsk".into());
                spec.queries.push(q);
            }
        }
        "fig5" => {
            spec.notes.push(format!(
                "kappa_t = 0; kappa_r in {KAPPA_GRID:?}, omega in {OMEGA_GRID:?} (default grid); BPSK"
            ));
            for (k, w) in grid() {
                for (scheme, ordering, name) in [
                    (Scheme::Zf, DetectionStrategy::Foschini, "zf_ordered"),
                    (Scheme::Mmse, DetectionStrategy::Fixed, "mmse_fixed"),
                ] {
                    let mut q = QuerySpec::new(format!("{name}_asep_total_kr{}_w{}", tag(k), tag(w)), QueryKind::AsepTotal, scheme);
                    q.ordering = Some(ordering);
                    q.kappa_r = Some(k);
                    q.omega = Some(w);
                    q.modulation = Some("bpsk".into());
                    spec.queries.push(q);
                }
            }
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown preset '{other}'; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    }
    Ok(spec)
}
