//! Bit-plane substitution: the top planes of a mark image replace the low
//! planes of the host.

use crate::error::{Error, Result};
use crate::image::Image;

use super::WatermarkSequence;

/// Number of substituted bit planes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LsbParams {
    pub n_planes: u32,
}

impl LsbParams {
    pub fn new(n_planes: u32) -> Result<Self> {
        if n_planes > 8 {
            return Err(Error::InvalidParameter(format!(
                "{n_planes} bit planes, at most 8"
            )));
        }
        Ok(Self { n_planes })
    }
}

#[inline]
fn low_mask(n: u32) -> u8 {
    ((1u16 << n) - 1) as u8
}

#[inline]
fn substitute(host: u8, mark: u8, n: u32) -> u8 {
    if n == 0 {
        return host;
    }
    (host & !low_mask(n)) | (mark >> (8 - n))
}

/// Replace the `n_planes` least significant bits of every host pixel with the
/// `n_planes` most significant bits of the matching mark pixel.
pub fn embed_lsb(block: &Image, mark: &Image, n_planes: u32) -> Result<Image> {
    LsbParams::new(n_planes)?;
    block.check_same_dims(mark)?;
    let pixels = block
        .pixels()
        .iter()
        .zip(mark.pixels())
        .map(|(&h, &m)| substitute(h, m, n_planes))
        .collect();
    Image::new(block.width(), block.height(), pixels)
}

/// Recover the embedded mark planes, moved back to the top and zero-filled
/// below.
pub fn extract_lsb(w_block: &Image, n_planes: u32) -> Result<Image> {
    LsbParams::new(n_planes)?;
    let pixels = w_block
        .pixels()
        .iter()
        .map(|&p| {
            if n_planes == 0 {
                0
            } else {
                (p & low_mask(n_planes)) << (8 - n_planes)
            }
        })
        .collect();
    Image::new(w_block.width(), w_block.height(), pixels)
}

/// Planes needed to carry `bits` over `pixels` samples.
pub fn planes_for(bits: usize, pixels: usize) -> u32 {
    bits.div_ceil(pixels) as u32
}

/// Lay a bit sequence out as a mark image: bit `j·P + p` becomes bit
/// `7 − j` of pixel `p` (P pixels, MSB plane first). Unused planes are zero.
pub fn mark_from_sequence(seq: &WatermarkSequence, width: usize, height: usize) -> Result<Image> {
    let pixels = width * height;
    if seq.len() > 8 * pixels {
        return Err(Error::Capacity {
            requested: seq.len(),
            available: 8 * pixels,
        });
    }
    let mut mark = vec![0u8; pixels];
    for (i, &bit) in seq.bits().iter().enumerate() {
        if bit {
            mark[i % pixels] |= 0x80 >> (i / pixels);
        }
    }
    Image::new(width, height, mark)
}

/// Bipolar readout of the `bits` substituted bits, aligned with the sequence
/// that [`mark_from_sequence`] laid out.
pub fn observations(img: &Image, bits: usize) -> Result<Vec<f64>> {
    let pixels = img.len();
    if bits > 8 * pixels {
        return Err(Error::Capacity {
            requested: bits,
            available: 8 * pixels,
        });
    }
    let planes = planes_for(bits, pixels);
    Ok((0..bits)
        .map(|i| {
            let shift = planes - 1 - (i / pixels) as u32;
            if (img.pixels()[i % pixels] >> shift) & 1 == 1 {
                1.0
            } else {
                -1.0
            }
        })
        .collect())
}

/// Embed a whole sequence with a uniform plane count: every pixel receives
/// `ceil(len / pixels)` planes of the mark image built from `seq`.
pub fn embed_sequence(img: &Image, seq: &WatermarkSequence) -> Result<Image> {
    let mark = mark_from_sequence(seq, img.width(), img.height())?;
    embed_lsb(img, &mark, planes_for(seq.len(), img.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(p: Vec<u8>) -> Image {
        let n = p.len();
        Image::new(n, 1, p).unwrap()
    }

    #[test]
    fn zero_planes_is_identity() {
        let h = img(vec![1, 2, 3, 250]);
        let m = img(vec![255, 0, 7, 9]);
        assert_eq!(embed_lsb(&h, &m, 0).unwrap(), h);
        assert_eq!(extract_lsb(&h, 0).unwrap(), img(vec![0; 4]));
    }

    #[test]
    fn eight_planes_is_full_replacement() {
        let h = img(vec![1, 2, 3, 250]);
        let m = img(vec![255, 0, 7, 9]);
        assert_eq!(embed_lsb(&h, &m, 8).unwrap(), m);
    }

    #[test]
    fn two_plane_substitution() {
        let out = embed_lsb(&img(vec![0b1011_0000]), &img(vec![0b1100_0000]), 2).unwrap();
        assert_eq!(out.pixels(), &[0b1011_0011]);
        assert_eq!(out.pixels()[0], 179);
    }

    #[test]
    fn invalid_plane_count() {
        let h = img(vec![0]);
        assert!(embed_lsb(&h, &h, 9).is_err());
        assert!(embed_lsb(&h, &img(vec![0, 0]), 1).is_err());
    }

    #[test]
    fn sequence_layout_and_readout() {
        let seq = WatermarkSequence::from_bits(vec![true, false, true, true, false, true]);
        // 4 pixels, 6 bits: plane 0 = [1,0,1,1], plane 1 = [0,1,-,-]
        let host = img(vec![0xff, 0x00, 0xff, 0x00]);
        let w = embed_sequence(&host, &seq).unwrap();
        assert_eq!(w.pixels(), &[0b1111_1110, 0b0000_0001, 0b1111_1110, 0b0000_0010]);
        let obs = observations(&w, 6).unwrap();
        assert_eq!(obs, vec![1.0, -1.0, 1.0, 1.0, -1.0, 1.0]);
        assert!(mark_from_sequence(&WatermarkSequence::from_bits(vec![true; 33]), 2, 2).is_err());
    }

    proptest! {
        #[test]
        fn extract_recovers_top_planes(host in proptest::collection::vec(any::<u8>(), 16),
                                       mark in proptest::collection::vec(any::<u8>(), 16),
                                       n in 1u32..=8) {
            let h = Image::new(4, 4, host).unwrap();
            let m = Image::new(4, 4, mark).unwrap();
            let w = embed_lsb(&h, &m, n).unwrap();
            let back = extract_lsb(&w, n).unwrap();
            let top = !low_mask(8 - n);
            for (b, m) in back.pixels().iter().zip(m.pixels()) {
                prop_assert_eq!(*b, m & top);
            }
            // capacity: exactly n·pixels bits substituted
            prop_assert_eq!(observations(&w, n as usize * 16).unwrap().len(), n as usize * 16);
        }
    }
}
