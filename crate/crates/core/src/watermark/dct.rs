//! Additive multiplicative spread spectrum on zig-zag ordered DCT
//! coefficients: `t'[skip + i] = t[skip + i] + α·|t[skip + i]|·x[i]`.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::to_pixel;
use crate::transforms::{zigzag_rect, CoeffBlock, DctPlan, ZigzagOrder};

use super::WatermarkSequence;

/// Offset, strength and length of one DCT embedding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DctEmbedParams {
    /// Lowest zig-zag coefficients left untouched (DC included).
    pub skip: usize,
    pub alpha: f64,
    /// Number of marked coefficients.
    pub m: usize,
}

impl DctEmbedParams {
    pub fn validate(&self, coefficients: usize) -> Result<()> {
        if self.skip < 1 {
            return Err(Error::InvalidParameter("dct skip must leave DC untouched".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("dct alpha {}", self.alpha)));
        }
        if self.skip + self.m > coefficients {
            return Err(Error::Capacity {
                requested: self.skip + self.m,
                available: coefficients,
            });
        }
        Ok(())
    }
}

/// Apply the additive rule in place to a zig-zag ordered coefficient list.
pub fn modulate(scanned: &mut [f64], skip: usize, alpha: f64, seq: &WatermarkSequence, m: usize) {
    for (i, t) in scanned[skip..skip + m].iter_mut().enumerate() {
        *t += alpha * t.abs() * seq.symbol(i);
    }
}

/// A host image with its DCT precomputed, ready for repeated embedding.
#[derive(Clone, Debug)]
pub struct DctCarrier {
    width: usize,
    height: usize,
    plan: DctPlan<f64>,
    order: ZigzagOrder,
    scanned: Vec<f64>,
}

impl DctCarrier {
    pub fn new(host: &Image) -> Result<Self> {
        let (w, h) = (host.width(), host.height());
        let plan = DctPlan::new(h, w)?;
        let coeffs = plan.forward(&host.to_plane::<f64>())?;
        let order = zigzag_rect(h, w);
        let scanned = order.order.iter().map(|&(r, c)| coeffs.at(r, c)).collect();
        Ok(Self {
            width: w,
            height: h,
            plan,
            order,
            scanned,
        })
    }

    pub fn coefficients(&self) -> usize {
        self.scanned.len()
    }

    /// Zig-zag ordered host coefficients.
    pub fn scanned(&self) -> &[f64] {
        &self.scanned
    }

    pub fn embed(&self, seq: &WatermarkSequence, p: &DctEmbedParams) -> Result<Image> {
        p.validate(self.scanned.len())?;
        if seq.len() < p.m {
            return Err(Error::InvalidParameter(format!(
                "sequence of {} bits for {} coefficients",
                seq.len(),
                p.m
            )));
        }
        let mut marked = self.scanned.clone();
        modulate(&mut marked, p.skip, p.alpha, seq, p.m);
        let mut coeffs = CoeffBlock::zeros(self.height, self.width);
        for (rank, v) in marked.into_iter().enumerate() {
            coeffs.coeffs[self.order.flat(rank)] = v;
        }
        let samples = self.plan.inverse(&coeffs)?;
        Image::new(
            self.width,
            self.height,
            samples.into_iter().map(to_pixel).collect(),
        )
    }
}

/// Embed `seq` into the DCT of `block` per `p`, returning the rounded block.
pub fn embed_dct(block: &Image, seq: &WatermarkSequence, p: &DctEmbedParams) -> Result<Image> {
    DctCarrier::new(block)?.embed(seq, p)
}

/// The `m` coefficients following `skip` in zig-zag order: the detector's
/// received values.
pub fn observations(img: &Image, skip: usize, m: usize) -> Result<Vec<f64>> {
    let carrier = DctCarrier::new(img)?;
    if skip + m > carrier.coefficients() {
        return Err(Error::Capacity {
            requested: skip + m,
            available: carrier.coefficients(),
        });
    }
    Ok(carrier.scanned[skip..skip + m].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::watermark::{gen_sequence, WatermarkKey};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn textured(seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(32, 32, |x, y| {
            (128.0 + 40.0 * ((x as f64) * 0.7).sin() * ((y as f64) * 0.3).cos()
                + rng.gen_range(-20.0..20.0)) as u8
        })
        .unwrap()
    }

    #[test]
    fn hand_computed_coefficients() {
        let plus = WatermarkSequence::from_bits(vec![true, true, true]);
        let mut t = vec![0.0, 10.0, -10.0, 0.0];
        modulate(&mut t, 1, 0.1, &plus, 3);
        assert!((t[1] - 11.0).abs() < 1e-12);
        assert!((t[2] + 9.0).abs() < 1e-12);
        assert_eq!(t[3], 0.0);
        let minus = plus.negated();
        let mut t = vec![0.0, 10.0, -10.0, 0.0];
        modulate(&mut t, 1, 0.1, &minus, 3);
        assert!((t[1] - 9.0).abs() < 1e-12);
        assert!((t[2] + 11.0).abs() < 1e-12);
        assert_eq!(t[3], 0.0);
    }

    #[test]
    fn zero_alpha_is_identity_up_to_rounding() {
        let block = textured(1);
        let seq = gen_sequence(WatermarkKey::new(3, 0), 500);
        let p = DctEmbedParams {
            skip: 64,
            alpha: 0.0,
            m: 500,
        };
        let out = embed_dct(&block, &seq, &p).unwrap();
        assert!(out
            .pixels()
            .iter()
            .zip(block.pixels())
            .all(|(&a, &b)| (i16::from(a) - i16::from(b)).abs() <= 1));
    }

    #[test]
    fn capacity_and_parameter_errors() {
        let block = textured(2);
        let seq = gen_sequence(WatermarkKey::new(3, 0), 1024);
        let too_many = DctEmbedParams {
            skip: 64,
            alpha: 0.1,
            m: 961,
        };
        assert!(matches!(
            embed_dct(&block, &seq, &too_many),
            Err(Error::Capacity { .. })
        ));
        let dc = DctEmbedParams {
            skip: 0,
            alpha: 0.1,
            m: 10,
        };
        assert!(embed_dct(&block, &seq, &dc).is_err());
        let short = DctEmbedParams {
            skip: 64,
            alpha: 0.1,
            m: 10,
        };
        assert!(embed_dct(&block, &seq.prefix(5), &short).is_err());
    }

    #[test]
    fn signs_recovered_without_clamping() {
        // mid-gray block: no clamping occurs at this strength
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let block = Image::from_fn(32, 32, |_, _| rng.gen_range(100..156)).unwrap();
        let carrier = DctCarrier::new(&block).unwrap();
        let seq = gen_sequence(WatermarkKey::new(8, 1), 200);
        let p = DctEmbedParams {
            skip: 64,
            alpha: 0.5,
            m: 200,
        };
        let marked = carrier.embed(&seq, &p).unwrap();
        let after = observations(&marked, 64, 200).unwrap();
        let before = &carrier.scanned()[64..264];
        let mut checked = 0;
        for i in 0..200 {
            let t = before[i];
            // rounding to integers perturbs coefficients by at most ~0.3 rms;
            // only compare where the embedded change dominates it
            if t.abs() * 0.5 > 2.0 {
                let delta = after[i] - t;
                assert_eq!(delta.signum(), seq.symbol(i), "coefficient {i}");
                checked += 1;
            }
        }
        assert!(checked > 100);
    }
}
