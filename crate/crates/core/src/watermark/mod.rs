//! Keyed sequences, the four base embedders and their correlation detectors.

mod cdma;
mod dct;
mod dwt;
mod lsb;
mod sequence;

use std::fmt;
use std::str::FromStr;

pub use cdma::{despread, embed_cdma, spread, walsh_codes, CdmaCarrier, CdmaParams};
pub use dct::{embed_dct, modulate, DctCarrier, DctEmbedParams};
pub use dwt::{block_rank_map, embed_dwt, significance_order, DwtCarrier, DEFAULT_LEVELS};
pub use lsb::{embed_lsb, extract_lsb, mark_from_sequence, planes_for, LsbParams};
pub use sequence::{gen_sequence, random_sequence, WatermarkKey, WatermarkSequence};

/// Per-algorithm readout functions, aligned bit-for-bit with the embedded
/// sequence.
pub mod readout {
    pub use super::cdma::observations as cdma;
    pub use super::dct::observations as dct;
    pub use super::dwt::observations as dwt;
    pub use super::lsb::embed_sequence as lsb_embed_sequence;
    pub use super::lsb::observations as lsb;
}

use crate::error::{Error, Result};
use crate::image::Image;

/// Base watermarking scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Lsb,
    Dct,
    Dwt,
    Cdma,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Lsb, Algorithm::Dct, Algorithm::Dwt, Algorithm::Cdma];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Lsb => "lsb",
            Algorithm::Dct => "dct",
            Algorithm::Dwt => "dwt",
            Algorithm::Cdma => "cdma",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lsb" => Ok(Algorithm::Lsb),
            "dct" => Ok(Algorithm::Dct),
            "dwt" => Ok(Algorithm::Dwt),
            "cdma" => Ok(Algorithm::Cdma),
            other => Err(Error::InvalidParameter(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// What the detector needs to locate the embedded symbols in a test image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DetectSpec {
    Lsb,
    Dct { skip: usize },
    /// Candidates are position fields with one symbol per detail coefficient.
    Dwt { levels: usize },
    Cdma(CdmaParams),
}

impl DetectSpec {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            DetectSpec::Lsb => Algorithm::Lsb,
            DetectSpec::Dct { .. } => Algorithm::Dct,
            DetectSpec::Dwt { .. } => Algorithm::Dwt,
            DetectSpec::Cdma(_) => Algorithm::Cdma,
        }
    }

    /// Received values for `bits` embedded symbols.
    pub fn observations(&self, img: &Image, bits: usize) -> Result<Observations> {
        Ok(match *self {
            DetectSpec::Lsb => Observations::aligned(lsb::observations(img, bits)?),
            DetectSpec::Dct { skip } => Observations::aligned(dct::observations(img, skip, bits)?),
            DetectSpec::Dwt { levels } => {
                let (values, index) = dwt::observations(img, levels, bits)?.into_iter().unzip();
                Observations {
                    values,
                    index: Some(index),
                }
            }
            DetectSpec::Cdma(p) => Observations::aligned(cdma::observations(img, &p, bits)?),
        })
    }
}

/// Received values `d_i` and, when symbols are position-indexed, the
/// candidate index each value pairs with.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Observations {
    pub values: Vec<f64>,
    pub index: Option<Vec<usize>>,
}

impl Observations {
    /// Value `i` pairs with candidate symbol `i`.
    pub fn aligned(values: Vec<f64>) -> Self {
        Self { values, index: None }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Candidate length this readout expects.
    pub fn candidate_len(&self) -> Option<usize> {
        match &self.index {
            None => Some(self.values.len()),
            Some(_) => None,
        }
    }

    /// Correlation score `(1/M) Σ d_i x_i` over the M observed symbols.
    pub fn score(&self, candidate: &WatermarkSequence) -> Result<f64> {
        if candidate.is_empty() || self.values.is_empty() {
            return Err(Error::InvalidParameter("empty candidate sequence".into()));
        }
        let total: f64 = match &self.index {
            None => {
                if candidate.len() != self.values.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} observations for a candidate of {} bits",
                        self.values.len(),
                        candidate.len()
                    )));
                }
                self.values.iter().zip(candidate.bipolar()).map(|(d, x)| d * x).sum()
            }
            Some(index) => {
                if let Some(&bad) = index.iter().find(|&&i| i >= candidate.len()) {
                    return Err(Error::DimensionMismatch(format!(
                        "symbol index {bad} outside a candidate of {} bits",
                        candidate.len()
                    )));
                }
                self.values
                    .iter()
                    .zip(index)
                    .map(|(d, &i)| d * candidate.symbol(i))
                    .sum()
            }
        };
        Ok(total / self.values.len() as f64)
    }
}

/// Correlation score of an aligned candidate against received values.
pub fn correlate(observed: &[f64], candidate: &WatermarkSequence) -> Result<f64> {
    Observations {
        values: observed.to_vec(),
        index: None,
    }
    .score(candidate)
}

/// Score a candidate against `bits` embedded symbols in a block or image.
pub fn correlation_detect(
    img: &Image,
    candidate: &WatermarkSequence,
    bits: usize,
    spec: &DetectSpec,
) -> Result<f64> {
    if candidate.is_empty() || bits == 0 {
        return Err(Error::InvalidParameter("empty candidate sequence".into()));
    }
    spec.observations(img, bits)?.score(candidate)
}
