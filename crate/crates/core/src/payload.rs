//! Where the payload lives in a marked image, the capacity-matched global
//! embedding, and correlation detection against true and random candidates.
//!
//! A candidate sequence is always the concatenation of per-block keyed
//! streams, block `b` keyed by `(seed, b)`. For the DCT, LSB and CDMA schemes
//! block `b` contributes the first `block_bits[b]` stream bits. The DWT
//! scheme indexes symbols by coefficient position, so block `b` contributes
//! one symbol for every detail coefficient of a k×k decomposition whether or
//! not that coefficient was modulated.

use crate::adaptive::{EmbedConfig, ImageEmbedResult};
use crate::error::{Error, Result};
use crate::image::{partition, Image, PadPolicy};
use crate::watermark::readout;
use crate::watermark::{
    block_rank_map, gen_sequence, random_sequence, Algorithm, CdmaParams, DctCarrier, DctEmbedParams,
    DwtCarrier, Observations, WatermarkKey, WatermarkSequence,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// SSIM-gated, block by block.
    Adaptive,
    /// The base scheme applied once to the whole image at matched payload.
    Original,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Adaptive => "adaptive",
            Mode::Original => "original",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(Mode::Adaptive),
            "original" => Ok(Mode::Original),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

/// Everything a detector needs to rebuild candidates and read observations.
///
/// `dct_skip` and `cdma` are per block in adaptive mode and whole-image in
/// original mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub algo: Algorithm,
    pub mode: Mode,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub k: usize,
    pub pad: PadPolicy,
    pub block_bits: Vec<usize>,
    pub dct_skip: usize,
    pub dwt_levels: usize,
    pub cdma: CdmaParams,
}

/// Scores of one true candidate (slot `true_index`) among random ones.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub scores: Vec<f64>,
    pub true_index: usize,
}

impl Detection {
    pub fn true_score(&self) -> f64 {
        self.scores[self.true_index]
    }

    /// Scores of every other candidate.
    pub fn others(&self) -> impl Iterator<Item = f64> + '_ {
        self.scores
            .iter()
            .enumerate()
            .filter(move |&(i, _)| i != self.true_index)
            .map(|(_, &s)| s)
    }

    /// `true − max(others)`; `None` with a single candidate.
    pub fn margin(&self) -> Option<f64> {
        self.others()
            .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))))
            .map(|max| self.true_score() - max)
    }

    /// The true candidate strictly beats every other one.
    pub fn detected(&self) -> bool {
        self.margin().is_none_or(|m| m > 0.0)
    }
}

impl Layout {
    pub fn total_bits(&self) -> usize {
        self.block_bits.iter().sum()
    }

    fn dwt_block_details(&self) -> usize {
        let area = self.k * self.k;
        area - (area >> (2 * self.dwt_levels))
    }

    /// Length of every candidate sequence.
    pub fn candidate_len(&self) -> usize {
        match self.algo {
            Algorithm::Dwt => self.block_bits.len() * self.dwt_block_details(),
            _ => self.total_bits(),
        }
    }

    /// The keyed sequence the embedder used.
    pub fn true_candidate(&self) -> WatermarkSequence {
        let mut out = WatermarkSequence::default();
        for (b, &bits) in self.block_bits.iter().enumerate() {
            let n = match self.algo {
                Algorithm::Dwt => self.dwt_block_details(),
                _ => bits,
            };
            out.extend_from(&gen_sequence(WatermarkKey::new(self.seed, b), n));
        }
        out
    }

    /// Random candidate `index` of the trial family `trial_seed`.
    pub fn random_candidate(&self, trial_seed: u64, index: usize) -> WatermarkSequence {
        random_sequence(trial_seed, index, self.candidate_len())
    }

    fn check_image(&self, img: &Image) -> Result<()> {
        if img.width() != self.width || img.height() != self.height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} image for a {}x{} layout",
                img.width(),
                img.height(),
                self.width,
                self.height
            )));
        }
        Ok(())
    }

    /// Received values paired with candidate positions.
    pub fn observations(&self, img: &Image) -> Result<Observations> {
        self.check_image(img)?;
        let total = self.total_bits();
        if total == 0 {
            return Err(Error::InvalidParameter("layout carries no payload".into()));
        }
        match self.mode {
            Mode::Adaptive => self.block_observations(img),
            Mode::Original => Ok(match self.algo {
                Algorithm::Lsb => Observations::aligned(readout::lsb(img, total)?),
                Algorithm::Dct => Observations::aligned(readout::dct(img, self.dct_skip, total)?),
                Algorithm::Cdma => Observations::aligned(readout::cdma(img, &self.cdma, total)?),
                Algorithm::Dwt => {
                    let map = block_rank_map(self.width, self.height, self.k, self.dwt_levels)?;
                    let per_block = self.dwt_block_details();
                    let (values, index) = readout::dwt(img, self.dwt_levels, total)?
                        .into_iter()
                        .map(|(v, rank)| {
                            let (b, r) = map[rank];
                            (v, b * per_block + r)
                        })
                        .unzip();
                    Observations {
                        values,
                        index: Some(index),
                    }
                }
            }),
        }
    }

    fn block_observations(&self, img: &Image) -> Result<Observations> {
        let (grid, blocks) = partition(img, self.k, self.pad)?;
        if grid.len() != self.block_bits.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} blocks in the image, {} in the layout",
                grid.len(),
                self.block_bits.len()
            )));
        }
        let per_block = self.dwt_block_details();
        let mut values = Vec::with_capacity(self.total_bits());
        let mut index = Vec::new();
        for (b, (block, &bits)) in blocks.iter().zip(&self.block_bits).enumerate() {
            if bits == 0 {
                continue;
            }
            match self.algo {
                Algorithm::Lsb => values.extend(readout::lsb(block, bits)?),
                Algorithm::Dct => values.extend(readout::dct(block, self.dct_skip, bits)?),
                Algorithm::Cdma => values.extend(readout::cdma(block, &self.cdma, bits)?),
                Algorithm::Dwt => {
                    for (v, r) in readout::dwt(block, self.dwt_levels, bits)? {
                        values.push(v);
                        index.push(b * per_block + r);
                    }
                }
            }
        }
        Ok(Observations {
            values,
            index: (self.algo == Algorithm::Dwt).then_some(index),
        })
    }

    /// Score the true candidate (slot 0) and `trials − 1` random ones.
    pub fn detect(&self, img: &Image, trials: usize, trial_seed: u64) -> Result<Detection> {
        if trials == 0 {
            return Err(Error::InvalidParameter("at least one trial is required".into()));
        }
        let obs = self.observations(img)?;
        let mut scores = Vec::with_capacity(trials);
        scores.push(obs.score(&self.true_candidate())?);
        for i in 1..trials {
            scores.push(obs.score(&self.random_candidate(trial_seed, i))?);
        }
        Ok(Detection {
            scores,
            true_index: 0,
        })
    }
}

/// Fixed parameters of the whole-image embedders.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OriginalParams {
    pub dct_skip: usize,
    pub dct_alpha: f64,
    pub dwt_levels: usize,
    pub dwt_alpha: f64,
    /// Number of detail coefficients modulated by the DWT scheme.
    pub dwt_coeffs: usize,
    pub cdma: CdmaParams,
    pub cdma_alpha: f64,
}

impl OriginalParams {
    /// Parameters that carry the payload of an adaptive run: the DCT offset
    /// scales with the block count so the same share of low frequencies is
    /// protected, strengths match the adaptive ones (DCT uses the
    /// payload-weighted mean of the accepted per-block α), and the CDMA code
    /// is lengthened to fit every group.
    pub fn matched(cfg: &EmbedConfig, adaptive: &ImageEmbedResult) -> Self {
        let blocks = adaptive.blocks.len();
        let groups = adaptive.total_bits / cfg.cdma.params.group_size;
        let mut cdma = cfg.cdma.params;
        cdma.code_len = groups.max(cfg.cdma.params.code_len).next_power_of_two();
        Self {
            dct_skip: cfg.dct.skip * blocks,
            dct_alpha: if adaptive.total_bits > 0 {
                adaptive.mean_alpha()
            } else {
                cfg.dct.alpha0
            },
            dwt_levels: cfg.dwt.levels,
            dwt_alpha: cfg.dwt.alpha,
            dwt_coeffs: adaptive.total_bits,
            cdma,
            cdma_alpha: cfg.cdma.alpha,
        }
    }
}

/// Embed `seq` into the whole image without SSIM gating.
///
/// LSB uses `ceil(len / pixels)` planes on every pixel. DCT modulates the
/// `len` zig-zag coefficients after `dct_skip`. CDMA spreads every group over
/// the first `code_len` level-1 details. For DWT, `seq` is a position field
/// over the whole-image detail scan and the `dwt_coeffs` most significant
/// details are modulated.
pub fn embed_image_original(
    img: &Image,
    seq: &WatermarkSequence,
    algo: Algorithm,
    p: &OriginalParams,
) -> Result<Image> {
    match algo {
        Algorithm::Lsb => readout::lsb_embed_sequence(img, seq),
        Algorithm::Dct => DctCarrier::new(img)?.embed(
            seq,
            &DctEmbedParams {
                skip: p.dct_skip,
                alpha: p.dct_alpha,
                m: seq.len(),
            },
        ),
        Algorithm::Dwt => {
            let carrier = DwtCarrier::new(img, p.dwt_levels)?;
            if seq.len() != carrier.capacity() {
                return Err(Error::DimensionMismatch(format!(
                    "position field of {} symbols for {} detail coefficients",
                    seq.len(),
                    carrier.capacity()
                )));
            }
            carrier.embed(seq, p.dwt_alpha, p.dwt_coeffs)
        }
        Algorithm::Cdma => crate::watermark::embed_cdma(img, seq, &p.cdma, p.cdma_alpha),
    }
}

/// Re-embed the payload of an adaptive run with the whole-image scheme.
/// Returns the marked image and its detection layout; the layout carries
/// exactly the adaptive run's bit count.
pub fn embed_original_matched(
    img: &Image,
    seed: u64,
    cfg: &EmbedConfig,
    adaptive: &ImageEmbedResult,
) -> Result<(Image, Layout)> {
    let p = OriginalParams::matched(cfg, adaptive);
    let mut layout = adaptive.layout(seed, cfg);
    layout.mode = Mode::Original;
    layout.dct_skip = p.dct_skip;
    layout.cdma = p.cdma;
    let candidate = layout.true_candidate();
    let seq = match cfg.algo {
        Algorithm::Dwt => {
            // reorder the per-block fields into whole-image scan order
            let map = block_rank_map(img.width(), img.height(), cfg.k, cfg.dwt.levels)?;
            let per_block = layout.dwt_block_details();
            map.iter().map(|&(b, r)| candidate.bits()[b * per_block + r]).collect()
        }
        _ => candidate,
    };
    let marked = embed_image_original(img, &seq, cfg.algo, &p)?;
    Ok((marked, layout))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptive::embed_image_adaptive;
    use crate::quality::mse;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn natural(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, |x, y| {
            let v = 110.0
                + 50.0 * ((x as f64) * 0.21).sin() * ((y as f64) * 0.13).cos()
                + 25.0 * ((x + 2 * y) as f64 * 0.05).sin()
                + rng.gen_range(-18.0..18.0);
            v.clamp(0.0, 255.0) as u8
        })
        .unwrap()
    }

    #[test]
    fn true_candidate_is_the_total_sequence() {
        let img = natural(64, 64, 1);
        for algo in [Algorithm::Lsb, Algorithm::Dct, Algorithm::Cdma] {
            let cfg = EmbedConfig::new(algo);
            let r = embed_image_adaptive(&img, 77, &cfg).unwrap();
            assert_eq!(r.layout(77, &cfg).true_candidate(), r.total_sequence, "{algo}");
        }
    }

    #[test]
    fn adaptive_detection_on_clean_images() {
        let img = natural(64, 64, 2);
        for algo in Algorithm::ALL {
            let cfg = EmbedConfig::new(algo);
            let r = embed_image_adaptive(&img, 5, &cfg).unwrap();
            assert!(r.total_bits > 0, "{algo}");
            let d = r.layout(5, &cfg).detect(&r.watermarked, 50, 9).unwrap();
            assert_eq!(d.scores.len(), 50);
            assert!(d.detected(), "{algo}: margin {:?}", d.margin());
        }
    }

    #[test]
    fn original_mode_matches_capacity_and_detects() {
        let img = natural(64, 64, 3);
        for algo in Algorithm::ALL {
            let cfg = EmbedConfig::new(algo);
            let r = embed_image_adaptive(&img, 6, &cfg).unwrap();
            let (marked, layout) = embed_original_matched(&img, 6, &cfg, &r).unwrap();
            assert_eq!(layout.total_bits(), r.total_bits);
            assert_eq!(layout.mode, Mode::Original);
            assert!(mse(&img, &marked).unwrap() > 0.0, "{algo}");
            let obs = layout.observations(&marked).unwrap();
            assert_eq!(obs.len(), r.total_bits);
            let d = layout.detect(&marked, 50, 9).unwrap();
            assert!(d.detected(), "{algo}: margin {:?}", d.margin());
        }
    }

    #[test]
    fn empty_sequence_original_is_identity() {
        let img = natural(64, 64, 4);
        let p = OriginalParams {
            dct_skip: 64,
            dct_alpha: 0.2,
            dwt_levels: 2,
            dwt_alpha: 0.5,
            dwt_coeffs: 0,
            cdma: CdmaParams::default(),
            cdma_alpha: 3.0,
        };
        let empty = WatermarkSequence::default();
        for algo in [Algorithm::Lsb, Algorithm::Dct, Algorithm::Cdma] {
            let out = embed_image_original(&img, &empty, algo, &p).unwrap();
            let diff = img.pixels().iter().zip(out.pixels()).map(|(a, b)| a.abs_diff(*b)).max();
            assert!(diff.unwrap() <= 1, "{algo}");
        }
        let field = gen_sequence(WatermarkKey::new(1, 0), 64 * 64 - 16 * 16);
        let out = embed_image_original(&img, &field, Algorithm::Dwt, &p).unwrap();
        let diff = img.pixels().iter().zip(out.pixels()).map(|(a, b)| a.abs_diff(*b)).max();
        assert!(diff.unwrap() <= 1);
    }

    #[test]
    fn lsb_original_uses_one_plane_for_one_bit_per_pixel() {
        let img = natural(32, 32, 5);
        let seq = gen_sequence(WatermarkKey::new(2, 0), 1024);
        let p = OriginalParams::matched(
            &EmbedConfig::new(Algorithm::Lsb),
            &embed_image_adaptive(&img, 1, &EmbedConfig::new(Algorithm::Lsb)).unwrap(),
        );
        let out = embed_image_original(&img, &seq, Algorithm::Lsb, &p).unwrap();
        for (i, (a, b)) in img.pixels().iter().zip(out.pixels()).enumerate() {
            assert_eq!(a >> 1, b >> 1);
            assert_eq!(b & 1 == 1, seq.bits()[i]);
        }
    }

    #[test]
    fn detection_rejects_wrong_geometry() {
        let img = natural(64, 64, 6);
        let cfg = EmbedConfig::new(Algorithm::Dct);
        let r = embed_image_adaptive(&img, 5, &cfg).unwrap();
        let layout = r.layout(5, &cfg);
        assert!(layout.detect(&natural(32, 64, 1), 10, 1).is_err());
        assert!(layout.detect(&r.watermarked, 0, 1).is_err());
        let single = layout.detect(&r.watermarked, 1, 1).unwrap();
        assert_eq!(single.margin(), None);
        assert!(single.detected());
    }
}
