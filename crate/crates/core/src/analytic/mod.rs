//! Closed-form outage probabilities, floors and high-SNR asymptotes.
//!
//! ZF formulas are indexed by decoding layer, MMSE formulas by SIC stage
//! (fixed order: stage `i` detects stream `i`). [`OutageQuery`] converts.

mod ordered_rii;
mod mmse;
mod zf;

pub use ordered_rii::{rii_tail, xi_coefficients, LayerTerm, OrderedLayerCoefficients, MAX_ANTENNAS};
pub use mmse::{mmse_outage, mmse_outage_floor, MmseAsymptote, MmseFloorMode, MmseMode};
pub use zf::{zf_floor_forms, zf_outage, zf_outage_floor, ZfFloorForms, ZfFloorMode, ZfMode};

use crate::error::{Error, Result};
use crate::{DetectionStrategy, Scheme};

/// Whether [`OutageQuery::index`] counts SIC stages or decoding layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Indexing {
    SicStage,
    DecodingLayer,
}

/// Threshold, index and receiver of an outage evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutageQuery {
    /// SINDR threshold (linear).
    pub gamma_th: f64,
    pub index: usize,
    pub indexing: Indexing,
    pub ordering: DetectionStrategy,
    pub scheme: Scheme,
}

impl OutageQuery {
    /// ZF query addressed by SIC stage.
    pub fn zf_stage(gamma_th: f64, stage: usize, ordering: DetectionStrategy) -> Self {
        Self {
            gamma_th,
            index: stage,
            indexing: Indexing::SicStage,
            ordering,
            scheme: Scheme::Zf,
        }
    }

    /// ZF query addressed by decoding layer.
    pub fn zf_layer(gamma_th: f64, layer: usize, ordering: DetectionStrategy) -> Self {
        Self {
            gamma_th,
            index: layer,
            indexing: Indexing::DecodingLayer,
            ordering,
            scheme: Scheme::Zf,
        }
    }

    /// Fixed-order MMSE query addressed by SIC stage.
    pub fn mmse_stage(gamma_th: f64, stage: usize) -> Self {
        Self {
            gamma_th,
            index: stage,
            indexing: Indexing::SicStage,
            ordering: DetectionStrategy::Fixed,
            scheme: Scheme::Mmse,
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if !(self.gamma_th > 0.0) || self.gamma_th.is_nan() {
            return Err(Error::InvalidInput(format!("threshold must be positive, got {}", self.gamma_th)));
        }
        if self.index < 1 || self.index > m {
            return Err(Error::InvalidInput(format!("index {} out of range 1..={m}", self.index)));
        }
        Ok(())
    }

    /// SIC stage (1-based) for a system with `m` streams.
    pub fn stage(&self, m: usize) -> usize {
        match self.indexing {
            Indexing::SicStage => self.index,
            Indexing::DecodingLayer => crate::layer_to_stage(m, self.index),
        }
    }

    /// Decoding layer (1-based) for a system with `m` streams.
    pub fn layer(&self, m: usize) -> usize {
        match self.indexing {
            Indexing::DecodingLayer => self.index,
            Indexing::SicStage => crate::stage_to_layer(m, self.index),
        }
    }

    pub fn with_gamma(&self, gamma_th: f64) -> Self {
        Self { gamma_th, ..*self }
    }
}
