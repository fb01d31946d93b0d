//! SSIM-gated block-adaptive embedding.
//!
//! Each k×k block is marked independently. Iteration `t` embeds a longer
//! prefix of the block's keyed stream (and, for the DCT scheme, a stronger
//! α) into the pristine block, then measures the block SSIM against the
//! pristine block. Growth stops when the SSIM falls to the threshold, when
//! the block has no more room, or after `max_iters` candidates.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{assemble, partition, BlockGrid, Image, PadPolicy};
use crate::payload::{Layout, Mode};
use crate::quality::{ssim_map, QualityConfig};
use crate::watermark::{
    embed_lsb, gen_sequence, mark_from_sequence, Algorithm, CdmaCarrier, CdmaParams, DctCarrier,
    DctEmbedParams, DwtCarrier, WatermarkKey, WatermarkSequence,
};

/// Which candidate of the SSIM trajectory becomes the marked block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AcceptRule {
    /// Longest candidate whose SSIM stayed above the threshold; the pristine
    /// block if even the first candidate fails.
    #[default]
    LastAbove,
    /// First candidate whose SSIM dropped to the threshold or below.
    FirstBelow,
}

impl AcceptRule {
    pub fn name(self) -> &'static str {
        match self {
            AcceptRule::LastAbove => "last_above",
            AcceptRule::FirstBelow => "first_below",
        }
    }
}

impl std::str::FromStr for AcceptRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "last_above" => Ok(AcceptRule::LastAbove),
            "first_below" => Ok(AcceptRule::FirstBelow),
            other => Err(Error::InvalidParameter(format!("unknown accept rule {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Threshold,
    CapacityExhausted,
    MaxIters,
}

/// One more bit plane per iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LsbSchedule {
    pub planes_step: u32,
}

/// Length grows by `step_bits`, strength by `alpha0·(1 + t·alpha_growth)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DctSchedule {
    pub skip: usize,
    pub step_bits: usize,
    pub alpha0: f64,
    pub alpha_growth: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DwtSchedule {
    pub levels: usize,
    pub step_coeffs: usize,
    pub alpha: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CdmaSchedule {
    pub params: CdmaParams,
    pub groups_step: usize,
    pub alpha: f64,
}

/// Everything that drives an adaptive embedding run.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbedConfig {
    pub algo: Algorithm,
    pub thr2: f64,
    pub k: usize,
    pub accept_rule: AcceptRule,
    pub max_iters: usize,
    pub pad: PadPolicy,
    pub quality: QualityConfig<f64>,
    pub lsb: LsbSchedule,
    pub dct: DctSchedule,
    pub dwt: DwtSchedule,
    pub cdma: CdmaSchedule,
}

/// Block side the default schedules are tuned for.
pub const DEFAULT_BLOCK: usize = 32;

impl EmbedConfig {
    /// Defaults for 32×32 blocks and `thr2 = 0.8`.
    pub fn new(algo: Algorithm) -> Self {
        Self {
            algo,
            thr2: 0.8,
            k: DEFAULT_BLOCK,
            accept_rule: AcceptRule::LastAbove,
            max_iters: 64,
            pad: PadPolicy::Reject,
            quality: QualityConfig::default(),
            lsb: LsbSchedule { planes_step: 1 },
            dct: DctSchedule {
                skip: 64,
                step_bits: 32,
                alpha0: 0.1,
                alpha_growth: 0.25,
            },
            dwt: DwtSchedule {
                levels: 2,
                step_coeffs: 8,
                alpha: 0.8,
            },
            cdma: CdmaSchedule {
                params: CdmaParams::default(),
                groups_step: 1,
                alpha: 3.0,
            },
        }
    }

    pub fn with_thr2(mut self, thr2: f64) -> Self {
        self.thr2 = thr2;
        self
    }

    pub fn with_accept_rule(mut self, rule: AcceptRule) -> Self {
        self.accept_rule = rule;
        self
    }

    /// Switch to k×k blocks, scaling the area-dependent schedule entries
    /// (DCT offset and step, DWT step, CDMA code length) from their 32×32
    /// values so the payload per pixel does not depend on `k`.
    pub fn with_block_size(mut self, k: usize) -> Self {
        let area = k * k;
        let base = DEFAULT_BLOCK * DEFAULT_BLOCK;
        self.k = k;
        self.dct.skip = (64 * area / base).max(1);
        self.dct.step_bits = (32 * area / base).max(1);
        self.dwt.step_coeffs = (8 * area / base).max(1);
        // largest power of two not above the area-scaled code length
        let target = (64 * area / base).max(1);
        self.cdma.params.code_len = 1 << target.ilog2();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.thr2 > 0.0 && self.thr2 <= 1.0) {
            return bad(format!("thr2 {} outside (0, 1]", self.thr2));
        }
        if self.k < 2 {
            return bad(format!("block side {} < 2", self.k));
        }
        self.quality.validate()?;
        if self.k < self.quality.window {
            return bad(format!(
                "block side {} is smaller than the {}-pixel ssim window",
                self.k, self.quality.window
            ));
        }
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1".into());
        }
        match self.algo {
            Algorithm::Lsb => {
                if self.lsb.planes_step < 1 {
                    return bad("lsb step must be at least one plane".into());
                }
            }
            Algorithm::Dct => {
                let d = &self.dct;
                if d.step_bits < 1 || d.skip < 1 || d.skip >= self.k * self.k {
                    return bad(format!("dct schedule {d:?} for {}x{} blocks", self.k, self.k));
                }
                if !(d.alpha0 > 0.0 && d.alpha_growth >= 0.0) {
                    return bad(format!("dct strength schedule {d:?}"));
                }
            }
            Algorithm::Dwt => {
                let d = &self.dwt;
                if d.step_coeffs < 1 || d.levels < 1 || self.k % (1 << d.levels) != 0 {
                    return bad(format!("dwt schedule {d:?} for {}x{} blocks", self.k, self.k));
                }
                if !(d.alpha > 0.0) {
                    return bad(format!("dwt alpha {}", d.alpha));
                }
            }
            Algorithm::Cdma => {
                let c = &self.cdma;
                c.params.validate()?;
                if c.groups_step < 1 || !(c.alpha > 0.0) || self.k % 2 != 0 {
                    return bad(format!("cdma schedule {c:?} for {}x{} blocks", self.k, self.k));
                }
                if c.params.code_len > 3 * (self.k / 2) * (self.k / 2) {
                    return bad(format!(
                        "cdma code length {} exceeds the level-1 details of a {}x{} block",
                        c.params.code_len, self.k, self.k
                    ));
                }
            }
        }
        Ok(())
    }

    /// Number of keyed stream bits one block can consume.
    pub fn block_capacity(&self) -> usize {
        let area = self.k * self.k;
        match self.algo {
            Algorithm::Lsb => 8 * area,
            Algorithm::Dct => area - self.dct.skip,
            Algorithm::Dwt => area - (area >> (2 * self.dwt.levels)),
            Algorithm::Cdma => self.cdma.params.max_bits(),
        }
    }

    /// Bits embedded by candidate `t` (0-based) before capping at capacity.
    fn scheduled_bits(&self, t: usize) -> usize {
        let step = t + 1;
        match self.algo {
            Algorithm::Lsb => {
                (step * self.lsb.planes_step as usize).min(8) * self.k * self.k
            }
            Algorithm::Dct => step * self.dct.step_bits,
            Algorithm::Dwt => step * self.dwt.step_coeffs,
            Algorithm::Cdma => step * self.cdma.groups_step * self.cdma.params.group_size,
        }
    }

    /// Embedding strength of candidate `t`; zero for bit-plane substitution.
    pub fn alpha_at(&self, t: usize) -> f64 {
        match self.algo {
            Algorithm::Lsb => 0.0,
            Algorithm::Dct => self.dct.alpha0 * (1.0 + t as f64 * self.dct.alpha_growth),
            Algorithm::Dwt => self.dwt.alpha,
            Algorithm::Cdma => self.cdma.alpha,
        }
    }
}

/// Outcome for a single block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockEmbedResult {
    pub w_block: Image,
    pub bits_embedded: usize,
    /// Candidates evaluated.
    pub iterations: usize,
    /// SSIM of the accepted candidate; 1 when the block is unchanged.
    pub final_ssim: f64,
    pub stop_reason: StopReason,
    /// Strength of the accepted candidate; 0 when nothing was embedded.
    pub alpha: f64,
    /// Symbols carried by the block, in embedding order.
    pub sequence: WatermarkSequence,
}

enum Carrier {
    Lsb,
    Dct(DctCarrier),
    Dwt(DwtCarrier),
    Cdma(CdmaCarrier),
}

impl Carrier {
    fn new(block: &Image, cfg: &EmbedConfig) -> Result<Self> {
        Ok(match cfg.algo {
            Algorithm::Lsb => Carrier::Lsb,
            Algorithm::Dct => Carrier::Dct(DctCarrier::new(block)?),
            Algorithm::Dwt => Carrier::Dwt(DwtCarrier::new(block, cfg.dwt.levels)?),
            Algorithm::Cdma => Carrier::Cdma(CdmaCarrier::new(block, cfg.cdma.params)?),
        })
    }

    /// Marked block and the symbols it carries.
    fn candidate(
        &self,
        block: &Image,
        stream: &WatermarkSequence,
        bits: usize,
        alpha: f64,
        cfg: &EmbedConfig,
    ) -> Result<(Image, WatermarkSequence)> {
        match self {
            Carrier::Lsb => {
                let seq = stream.prefix(bits);
                let mark = mark_from_sequence(&seq, block.width(), block.height())?;
                let planes = (bits / block.len()) as u32;
                Ok((embed_lsb(block, &mark, planes)?, seq))
            }
            Carrier::Dct(c) => {
                let p = DctEmbedParams {
                    skip: cfg.dct.skip,
                    alpha,
                    m: bits,
                };
                Ok((c.embed(stream, &p)?, stream.prefix(bits)))
            }
            Carrier::Dwt(c) => Ok((c.embed(stream, alpha, bits)?, c.embedded_symbols(stream, bits))),
            Carrier::Cdma(c) => {
                let seq = stream.prefix(bits);
                Ok((c.embed(&seq, alpha)?, seq))
            }
        }
    }
}

/// Mean SSIM over the windows lying entirely inside the block.
pub fn block_ssim(pristine: &[f64], candidate: &Image, cfg: &QualityConfig<f64>) -> Result<f64> {
    Ok(ssim_map(
        pristine,
        &candidate.to_plane::<f64>(),
        candidate.width(),
        candidate.height(),
        cfg,
    )?
    .mean)
}

/// Grow the watermark in one block until the SSIM threshold stops it.
pub fn embed_block_adaptive(block: &Image, key: WatermarkKey, cfg: &EmbedConfig) -> Result<BlockEmbedResult> {
    cfg.validate()?;
    if block.width() != cfg.k || block.height() != cfg.k {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} block, expected {k}x{k}",
            block.width(),
            block.height(),
            k = cfg.k
        )));
    }
    let capacity = cfg.block_capacity();
    let stream = gen_sequence(key, capacity);
    let carrier = Carrier::new(block, cfg)?;
    let pristine = block.to_plane::<f64>();

    let mut accepted: Option<(Image, WatermarkSequence, f64, f64)> = None;
    let mut iterations = 0;
    let mut last_bits = 0;
    let mut stop = None;
    for t in 0..cfg.max_iters {
        let bits = cfg.scheduled_bits(t).min(capacity);
        if t > 0 && bits == last_bits {
            stop = Some(StopReason::CapacityExhausted);
            break;
        }
        last_bits = bits;
        iterations += 1;
        let alpha = cfg.alpha_at(t);
        let (candidate, seq) = carrier.candidate(block, &stream, bits, alpha, cfg)?;
        let score = block_ssim(&pristine, &candidate, &cfg.quality)?;
        let above = score > cfg.thr2;
        match cfg.accept_rule {
            AcceptRule::LastAbove => {
                if above {
                    accepted = Some((candidate, seq, score, alpha));
                } else {
                    stop = Some(StopReason::Threshold);
                    break;
                }
            }
            AcceptRule::FirstBelow => {
                accepted = Some((candidate, seq, score, alpha));
                if !above {
                    stop = Some(StopReason::Threshold);
                    break;
                }
            }
        }
    }
    let stop_reason = stop.unwrap_or(if last_bits == capacity {
        StopReason::CapacityExhausted
    } else {
        StopReason::MaxIters
    });
    Ok(match accepted {
        Some((w_block, sequence, final_ssim, alpha)) => BlockEmbedResult {
            w_block,
            bits_embedded: sequence.len(),
            iterations,
            final_ssim,
            stop_reason,
            alpha,
            sequence,
        },
        None => BlockEmbedResult {
            w_block: block.clone(),
            bits_embedded: 0,
            iterations,
            final_ssim: 1.0,
            stop_reason,
            alpha: 0.0,
            sequence: WatermarkSequence::default(),
        },
    })
}

/// Result of marking a whole image block by block.
#[derive(Clone, Debug)]
pub struct ImageEmbedResult {
    pub watermarked: Image,
    pub grid: BlockGrid,
    pub blocks: Vec<BlockEmbedResult>,
    /// Per-block sequences concatenated in block order.
    pub total_sequence: WatermarkSequence,
    pub total_bits: usize,
}

impl ImageEmbedResult {
    pub fn block_bits(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.bits_embedded).collect()
    }

    /// Payload-weighted mean strength over all marked blocks.
    pub fn mean_alpha(&self) -> f64 {
        if self.total_bits == 0 {
            return 0.0;
        }
        self.blocks
            .iter()
            .map(|b| b.alpha * b.bits_embedded as f64)
            .sum::<f64>()
            / self.total_bits as f64
    }

    /// Detection layout for the adaptive output.
    pub fn layout(&self, seed: u64, cfg: &EmbedConfig) -> Layout {
        Layout {
            algo: cfg.algo,
            mode: Mode::Adaptive,
            seed,
            width: self.grid.width,
            height: self.grid.height,
            k: cfg.k,
            pad: cfg.pad,
            block_bits: self.block_bits(),
            dct_skip: cfg.dct.skip,
            dwt_levels: cfg.dwt.levels,
            cdma: cfg.cdma.params,
        }
    }
}

/// Mark every block of `img` with the stream keyed by `(seed, block index)`.
///
/// Blocks are processed in parallel on the current rayon pool; results are
/// slotted by block index so the output does not depend on scheduling.
pub fn embed_image_adaptive(img: &Image, seed: u64, cfg: &EmbedConfig) -> Result<ImageEmbedResult> {
    cfg.validate()?;
    let (grid, blocks) = partition(img, cfg.k, cfg.pad)?;
    let results = blocks
        .par_iter()
        .enumerate()
        .map(|(i, block)| embed_block_adaptive(block, WatermarkKey::new(seed, i), cfg))
        .collect::<Result<Vec<_>>>()?;
    let marked: Vec<Image> = results.iter().map(|r| r.w_block.clone()).collect();
    let watermarked = assemble(&grid, &marked)?;
    let mut total_sequence = WatermarkSequence::default();
    for r in &results {
        total_sequence.extend_from(&r.sequence);
    }
    let total_bits = total_sequence.len();
    Ok(ImageEmbedResult {
        watermarked,
        grid,
        blocks: results,
        total_sequence,
        total_bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quality::ssim;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn textured(k: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(k, k, |x, y| {
            let v = 120.0
                + 45.0 * ((x as f64) * 0.9).sin() * ((y as f64) * 0.4).cos()
                + rng.gen_range(-30.0..30.0);
            v.clamp(0.0, 255.0) as u8
        })
        .unwrap()
    }

    #[test]
    fn threshold_one_accepts_nothing() {
        let block = textured(32, 1);
        for algo in Algorithm::ALL {
            let cfg = EmbedConfig::new(algo).with_thr2(1.0);
            let r = embed_block_adaptive(&block, WatermarkKey::new(1, 0), &cfg).unwrap();
            assert_eq!(r.bits_embedded, 0, "{algo}");
            assert_eq!(r.w_block, block);
            assert_eq!(r.final_ssim, 1.0);
            assert_eq!(r.stop_reason, StopReason::Threshold);
            assert_eq!(r.iterations, 1);
        }
    }

    #[test]
    fn tiny_threshold_exhausts_lsb_capacity() {
        let mark = mark_from_sequence(&gen_sequence(WatermarkKey::new(3, 0), 8192), 32, 32).unwrap();
        // a host sharing the mark's high nibble keeps every candidate's SSIM
        // far above the threshold; an unrelated host can score near zero
        let block = Image::new(32, 32, mark.pixels().iter().map(|p| p & 0xf0).collect()).unwrap();
        let cfg = EmbedConfig::new(Algorithm::Lsb).with_thr2(0.01);
        let r = embed_block_adaptive(&block, WatermarkKey::new(3, 0), &cfg).unwrap();
        assert_eq!(r.stop_reason, StopReason::CapacityExhausted);
        assert_eq!(r.bits_embedded, 8 * 32 * 32);
        assert_eq!(r.iterations, 8);
        assert_eq!(r.w_block, mark);
    }

    #[test]
    fn last_above_respects_threshold() {
        for algo in Algorithm::ALL {
            for seed in 0..4 {
                let block = textured(32, 10 + seed);
                let cfg = EmbedConfig::new(algo);
                let r = embed_block_adaptive(&block, WatermarkKey::new(seed, 0), &cfg).unwrap();
                assert!(r.iterations <= cfg.max_iters);
                if r.bits_embedded > 0 {
                    assert!(r.final_ssim > cfg.thr2, "{algo}: {}", r.final_ssim);
                    let again = ssim(&block, &r.w_block).unwrap();
                    assert!((again - r.final_ssim).abs() < 1e-12);
                } else {
                    assert_eq!(r.w_block, block);
                }
            }
        }
    }

    #[test]
    fn first_below_goes_one_step_further() {
        let block = textured(32, 20);
        let last = EmbedConfig::new(Algorithm::Dct);
        let first = last.clone().with_accept_rule(AcceptRule::FirstBelow);
        let a = embed_block_adaptive(&block, WatermarkKey::new(1, 0), &last).unwrap();
        let b = embed_block_adaptive(&block, WatermarkKey::new(1, 0), &first).unwrap();
        assert_eq!(a.stop_reason, StopReason::Threshold);
        assert_eq!(a.iterations, b.iterations);
        assert!(b.final_ssim <= last.thr2);
        assert_eq!(b.bits_embedded, a.bits_embedded + last.dct.step_bits);
    }

    #[test]
    fn dct_bits_fall_as_threshold_rises() {
        // textured block where the threshold binds at every level
        let block = textured(32, 30);
        let bits: Vec<usize> = [0.6, 0.7, 0.8, 0.9]
            .iter()
            .map(|&thr| {
                let cfg = EmbedConfig::new(Algorithm::Dct).with_thr2(thr);
                let r = embed_block_adaptive(&block, WatermarkKey::new(4, 0), &cfg).unwrap();
                assert_eq!(r.stop_reason, StopReason::Threshold, "thr2 {thr}");
                r.bits_embedded
            })
            .collect();
        assert!(bits.windows(2).all(|w| w[0] > w[1]), "{bits:?}");
    }

    #[test]
    fn max_iters_bounds_the_loop() {
        let block = textured(32, 40);
        let mut cfg = EmbedConfig::new(Algorithm::Dwt).with_thr2(0.01);
        cfg.max_iters = 3;
        let r = embed_block_adaptive(&block, WatermarkKey::new(1, 0), &cfg).unwrap();
        assert_eq!(r.stop_reason, StopReason::MaxIters);
        assert_eq!(r.iterations, 3);
        assert_eq!(r.bits_embedded, 3 * cfg.dwt.step_coeffs);
    }

    #[test]
    fn config_validation() {
        let block = textured(32, 50);
        let mut cfg = EmbedConfig::new(Algorithm::Dct);
        cfg.thr2 = 0.0;
        assert!(embed_block_adaptive(&block, WatermarkKey::new(1, 0), &cfg).is_err());
        let cfg = EmbedConfig::new(Algorithm::Dct).with_block_size(4);
        assert!(cfg.validate().is_err());
        let cfg = EmbedConfig::new(Algorithm::Lsb).with_block_size(16);
        assert!(embed_block_adaptive(&block, WatermarkKey::new(1, 0), &cfg).is_err());
        for k in [8, 16, 32, 64] {
            for algo in Algorithm::ALL {
                EmbedConfig::new(algo).with_block_size(k).validate().unwrap();
            }
        }
        let scaled = EmbedConfig::new(Algorithm::Cdma).with_block_size(8);
        assert_eq!(scaled.cdma.params.code_len, 4);
        assert_eq!(EmbedConfig::new(Algorithm::Cdma).with_block_size(64).cdma.params.code_len, 256);
        assert_eq!(scaled.dct.skip, 4);
    }

    #[test]
    fn image_threshold_one_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let img = Image::from_fn(64, 64, |_, _| rng.gen()).unwrap();
        for algo in Algorithm::ALL {
            let r = embed_image_adaptive(&img, 9, &EmbedConfig::new(algo).with_thr2(1.0)).unwrap();
            assert_eq!(r.watermarked, img);
            assert_eq!(r.total_bits, 0);
            assert_eq!(r.blocks.len(), 4);
        }
    }

    #[test]
    fn image_totals_add_up() {
        let img = Image::from_fn(64, 96, |x, y| ((x * 7 + y * 3) % 200 + (x * y) % 37) as u8).unwrap();
        let cfg = EmbedConfig::new(Algorithm::Cdma);
        let r = embed_image_adaptive(&img, 5, &cfg).unwrap();
        assert_eq!(r.blocks.len(), 6);
        assert_eq!(r.total_bits, r.block_bits().iter().sum::<usize>());
        assert_eq!(r.total_sequence.len(), r.total_bits);
    }
}
