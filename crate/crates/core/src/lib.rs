//! Performance analysis of successive interference cancellation (SIC) MIMO
//! receivers with residual transceiver hardware impairments and imperfect
//! channel state information.
//!
//! The crate has three layers:
//!
//! * a link model: [`channel`] draws Rayleigh channels, estimation errors,
//!   distortion noise and received vectors; [`zf_sic`] and [`mmse_sic`]
//!   implement the receivers and their per-stage SINDR expressions;
//! * closed forms: [`analytic`] holds the outage probabilities, floors and
//!   high-SNR asymptotes, [`error_prop`] the symbol-error-rate model with error
//!   propagation;
//! * validation: [`montecarlo`] estimates the same quantities by simulation and
//!   [`experiment`] sweeps both engines into CSV files.
//!
//! Numerical building blocks live in [`matcore`] (small dense complex
//! matrices), [`specfun`] (special functions) and [`quad`] (adaptive
//! Gauss-Kronrod quadrature).
//!
//! Stage and layer indices follow one convention everywhere: SIC stage `k`
//! (the `k`-th stream to be decoded) is decoding layer `m - k + 1` of the
//! triangular system. Indices in the public API are 1-based.

pub mod analytic;
pub mod channel;
pub mod error;
pub mod error_prop;
pub mod experiment;
pub mod matcore;
pub mod mmse_sic;
pub mod montecarlo;
pub mod quad;
pub mod specfun;
pub mod zf_sic;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Converts a value in decibels to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to decibels.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Receiver family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Zf,
    Mmse,
}

/// Detection ordering: norm-based (strongest stream first) or natural order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionStrategy {
    Foschini,
    Fixed,
}

/// Decoding layer of SIC stage `k` (both 1-based): `m - k + 1`.
pub fn stage_to_layer(m: usize, k: usize) -> usize {
    assert!(k >= 1 && k <= m, "stage {k} out of range 1..={m}");
    m - k + 1
}

/// SIC stage of decoding layer `i`; the map is an involution.
pub fn layer_to_stage(m: usize, i: usize) -> usize {
    stage_to_layer(m, i)
}
