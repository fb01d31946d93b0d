//! Spread spectrum on the most significant Haar detail coefficients.
//!
//! Symbols are indexed by coefficient position: a keyed field assigns one
//! bipolar symbol to every detail coefficient (in subband scan order) and the
//! `m` coefficients of largest magnitude receive `v' = v + α·|v|·x[pos]`.
//! Because the symbol depends on position and not on magnitude rank, a blind
//! detector that re-selects significant coefficients in a distorted image
//! still pairs each coefficient with the right symbol. The approximation band
//! is never touched.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::to_pixel;
use crate::transforms::{detail_bands, detail_scan, dwt2_haar_rect, idwt2_haar, CoeffBlock};

use super::WatermarkSequence;

/// Decomposition depth used unless configured otherwise.
pub const DEFAULT_LEVELS: usize = 2;

/// Scan ranks of the detail coefficients sorted by descending magnitude,
/// lower scan rank first on ties.
pub fn significance_order(coeffs: &CoeffBlock<f64>, scan: &[usize]) -> Vec<usize> {
    let mut ranks: Vec<usize> = (0..scan.len()).collect();
    ranks.sort_by(|&a, &b| {
        coeffs.coeffs[scan[b]]
            .abs()
            .partial_cmp(&coeffs.coeffs[scan[a]].abs())
            .unwrap_or(Ordering::Equal)
    });
    ranks
}

/// A host with its Haar decomposition and significance order cached.
#[derive(Clone, Debug)]
pub struct DwtCarrier {
    levels: usize,
    coeffs: CoeffBlock<f64>,
    scan: Vec<usize>,
    order: Vec<usize>,
}

impl DwtCarrier {
    pub fn new(host: &Image, levels: usize) -> Result<Self> {
        let coeffs = dwt2_haar_rect(&host.to_plane::<f64>(), host.height(), host.width(), levels)?;
        let scan = detail_scan(coeffs.rows, coeffs.cols, levels);
        let order = significance_order(&coeffs, &scan);
        Ok(Self {
            levels,
            coeffs,
            scan,
            order,
        })
    }

    /// Number of detail coefficients.
    pub fn capacity(&self) -> usize {
        self.scan.len()
    }

    pub fn coefficients(&self) -> &CoeffBlock<f64> {
        &self.coeffs
    }

    /// Scan ranks, most significant first.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Coefficient at detail scan rank `rank`.
    pub fn detail(&self, rank: usize) -> f64 {
        self.coeffs.coeffs[self.scan[rank]]
    }

    fn check(&self, alpha: f64, m: usize) -> Result<()> {
        if m > self.scan.len() {
            return Err(Error::Capacity {
                requested: m,
                available: self.scan.len(),
            });
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("dwt alpha {alpha}")));
        }
        Ok(())
    }

    /// Mark the `m` most significant coefficients; `symbol(rank)` supplies the
    /// bipolar symbol for a detail scan rank.
    pub fn embed_with(&self, symbol: impl Fn(usize) -> f64, alpha: f64, m: usize) -> Result<Image> {
        self.check(alpha, m)?;
        let mut marked = self.coeffs.clone();
        for &rank in &self.order[..m] {
            let pos = self.scan[rank];
            let v = marked.coeffs[pos];
            marked.coeffs[pos] = v + alpha * v.abs() * symbol(rank);
        }
        let samples = idwt2_haar(&marked, self.levels)?;
        Image::new(
            self.coeffs.cols,
            self.coeffs.rows,
            samples.into_iter().map(to_pixel).collect(),
        )
    }

    /// Embed with a field holding one symbol per detail coefficient.
    pub fn embed(&self, field: &WatermarkSequence, alpha: f64, m: usize) -> Result<Image> {
        if field.len() < self.scan.len() {
            return Err(Error::InvalidParameter(format!(
                "symbol field of {} for {} detail coefficients",
                field.len(),
                self.scan.len()
            )));
        }
        self.embed_with(|r| field.symbol(r), alpha, m)
    }

    /// The symbols a call to [`embed`](Self::embed) with the same `m`
    /// writes, in significance order.
    pub fn embedded_symbols(&self, field: &WatermarkSequence, m: usize) -> WatermarkSequence {
        self.order[..m.min(self.order.len())]
            .iter()
            .map(|&r| field.bits()[r])
            .collect()
    }

    /// Values of the `m` most significant coefficients with their scan ranks.
    pub fn observations(&self, m: usize) -> Result<Vec<(f64, usize)>> {
        if m > self.scan.len() {
            return Err(Error::Capacity {
                requested: m,
                available: self.scan.len(),
            });
        }
        Ok(self.order[..m].iter().map(|&r| (self.detail(r), r)).collect())
    }
}

/// Embed into a 2-level decomposition of `block`. `field` holds one symbol
/// per detail coefficient in scan order.
pub fn embed_dwt(block: &Image, field: &WatermarkSequence, alpha: f64, m: usize) -> Result<Image> {
    DwtCarrier::new(block, DEFAULT_LEVELS)?.embed(field, alpha, m)
}

/// Blind readout from the test image's own `m` most significant details.
pub fn observations(img: &Image, levels: usize, m: usize) -> Result<Vec<(f64, usize)>> {
    DwtCarrier::new(img, levels)?.observations(m)
}

/// For every detail scan rank of a `width`×`height` decomposition, the k×k
/// block (row-major) that owns the coefficient and its scan rank inside that
/// block's own decomposition. Haar filters never straddle block borders when
/// `k` is a multiple of `2^levels`, so the two coefficients are identical.
pub fn block_rank_map(width: usize, height: usize, k: usize, levels: usize) -> Result<Vec<(usize, usize)>> {
    if k == 0 || k % (1 << levels) != 0 || width % k != 0 || height % k != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{width}x{height} with {k}x{k} blocks is not aligned to {levels} haar levels"
        )));
    }
    let blocks_x = width / k;
    let block_bands = detail_bands(k, k, levels);
    let mut band_offsets = Vec::with_capacity(block_bands.len());
    let mut acc = 0;
    for b in &block_bands {
        band_offsets.push(acc);
        acc += b.len();
    }
    let mut out = Vec::with_capacity(width * height);
    for (bi, band) in detail_bands(height, width, levels).iter().enumerate() {
        let kb = k >> band.level;
        for r in 0..band.rows {
            for c in 0..band.cols {
                let block = (r / kb) * blocks_x + c / kb;
                let rank = band_offsets[bi] + (r % kb) * kb + c % kb;
                out.push((block, rank));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{partition, PadPolicy};
    use crate::watermark::{gen_sequence, WatermarkKey};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, |_, _| rng.gen_range(60..190)).unwrap()
    }

    #[test]
    fn zero_alpha_identity() {
        let b = noisy(32, 32, 1);
        let field = gen_sequence(WatermarkKey::new(1, 0), 960);
        let out = embed_dwt(&b, &field, 0.0, 960).unwrap();
        assert!(out
            .pixels()
            .iter()
            .zip(b.pixels())
            .all(|(&a, &c)| (i16::from(a) - i16::from(c)).abs() <= 1));
    }

    #[test]
    fn constant_block_unchanged() {
        let b = Image::filled(32, 32, 77).unwrap();
        let field = gen_sequence(WatermarkKey::new(1, 0), 960);
        assert_eq!(embed_dwt(&b, &field, 0.9, 960).unwrap(), b);
    }

    #[test]
    fn full_embedding_adds_energy() {
        let b = noisy(32, 32, 2);
        let carrier = DwtCarrier::new(&b, 2).unwrap();
        assert_eq!(carrier.capacity(), 960);
        let field = gen_sequence(WatermarkKey::new(4, 0), 960);
        let alpha = 0.3;
        // coefficient-domain oracle: every detail moves, energy grows by
        // Σ v²((1 ± α)² − 1)
        let mut delta_energy = 0.0;
        for r in 0..960 {
            let v = carrier.detail(r);
            let nv = v + alpha * v.abs() * field.symbol(r);
            assert!(v == 0.0 || nv != v);
            delta_energy += nv * nv - v * v;
        }
        assert!(delta_energy > 0.0);
        let out = carrier.embed(&field, alpha, 960).unwrap();
        let energy = |img: &Image| img.pixels().iter().map(|&p| f64::from(p).powi(2)).sum::<f64>();
        assert!(energy(&out) > energy(&b));
    }

    #[test]
    fn ordering_is_by_magnitude_then_scan() {
        let b = noisy(32, 32, 3);
        let c = DwtCarrier::new(&b, 2).unwrap();
        let mags: Vec<f64> = c.order().iter().map(|&r| c.detail(r).abs()).collect();
        assert!(mags.windows(2).all(|w| w[0] >= w[1]));
        let flat = DwtCarrier::new(&Image::filled(8, 8, 3).unwrap(), 2).unwrap();
        assert_eq!(flat.order(), (0..60).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn embedded_symbols_follow_significance() {
        let b = noisy(32, 32, 6);
        let c = DwtCarrier::new(&b, 2).unwrap();
        let field = gen_sequence(WatermarkKey::new(2, 2), 960);
        let s = c.embedded_symbols(&field, 10);
        for (i, &r) in c.order()[..10].iter().enumerate() {
            assert_eq!(s.bits()[i], field.bits()[r]);
        }
    }

    #[test]
    fn too_many_coefficients() {
        let b = noisy(32, 32, 5);
        let field = gen_sequence(WatermarkKey::new(1, 0), 961);
        assert!(matches!(
            embed_dwt(&b, &field, 0.1, 961),
            Err(Error::Capacity { .. })
        ));
        assert!(embed_dwt(&b, &field.prefix(100), 0.1, 10).is_err());
    }

    #[test]
    fn global_details_match_block_details() {
        let img = noisy(64, 32, 7);
        let global = DwtCarrier::new(&img, 2).unwrap();
        let map = block_rank_map(64, 32, 16, 2).unwrap();
        let (_, blocks) = partition(&img, 16, PadPolicy::Reject).unwrap();
        let local: Vec<DwtCarrier> = blocks.iter().map(|b| DwtCarrier::new(b, 2).unwrap()).collect();
        assert_eq!(map.len(), global.capacity());
        let mut seen = vec![false; map.len()];
        for (g, &(b, r)) in map.iter().enumerate() {
            assert!((global.detail(g) - local[b].detail(r)).abs() < 1e-9);
            let slot = b * local[0].capacity() + r;
            assert!(!std::mem::replace(&mut seen[slot], true));
        }
        assert!(block_rank_map(64, 32, 6, 2).is_err());
    }
}
