//! Block-adaptive image watermarking gated by structural similarity.
//!
//! An asset image is split into k×k blocks. In each block a base watermarking
//! scheme (bit-plane substitution, additive DCT spread spectrum, Haar-domain
//! spread spectrum or Walsh-coded CDMA) embeds progressively longer prefixes
//! of a keyed bit sequence, and growth stops once the block SSIM against the
//! pristine block crosses a threshold. The crate also ships the attacks,
//! correlation detectors and evaluation harness used to compare the adaptive
//! scheme against the same schemes applied globally at equal payload.
//!
//! Numerical kernels ([`transforms`], [`quality`]) are generic over
//! [`Real`]; the aliases below fix them to `f64`, which is what the
//! watermarking layers use.

pub mod adaptive;
pub mod attacks;
pub mod error;
pub mod eval;
pub mod image;
pub mod payload;
pub mod quality;
pub mod scalar;
pub mod transforms;
pub mod watermark;

pub use error::{Error, Result};
pub use adaptive::{embed_block_adaptive, embed_image_adaptive, AcceptRule, EmbedConfig, StopReason};
pub use image::{assemble, load_image, partition, save_image, BlockGrid, Image, PadPolicy};
pub use payload::{embed_image_original, embed_original_matched, Layout, Mode, OriginalParams};
pub use scalar::Real;
pub use watermark::{Algorithm, WatermarkKey, WatermarkSequence};

/// Double precision coefficient grid.
pub type Coeffs = transforms::CoeffBlock<f64>;
/// Double precision SSIM configuration.
pub type SsimConfig = quality::QualityConfig<f64>;
/// Double precision SSIM terms.
pub type Components = quality::SsimComponents<f64>;
/// Double precision SSIM map.
pub type Map = quality::SsimMap<f64>;
