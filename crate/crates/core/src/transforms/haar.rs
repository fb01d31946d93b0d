use crate::error::{Error, Result};
use crate::scalar::Real;

use super::CoeffBlock;

/// Detail orientation within one decomposition level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// Top-right quadrant: high-pass across columns.
    Hl,
    /// Bottom-left quadrant: high-pass across rows.
    Lh,
    /// Bottom-right quadrant.
    Hh,
}

/// Location of one detail subband inside the coefficient grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Subband {
    /// 1 is the finest level.
    pub level: usize,
    pub orientation: Orientation,
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Subband {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_dims(rows: usize, cols: usize, levels: usize, len: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::InvalidParameter("haar needs at least one level".into()));
    }
    let step = 1usize
        .checked_shl(levels as u32)
        .ok_or_else(|| Error::InvalidParameter(format!("{levels} levels")))?;
    if rows == 0 || cols == 0 || rows % step != 0 || cols % step != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{rows}x{cols} is not divisible by 2^{levels}"
        )));
    }
    if len != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "{len} samples for {rows}x{cols}"
        )));
    }
    Ok(())
}

/// Detail subbands in scan order: finest level first, HL, LH, HH per level.
pub fn detail_bands(rows: usize, cols: usize, levels: usize) -> Vec<Subband> {
    let mut out = Vec::with_capacity(3 * levels);
    for level in 1..=levels {
        let h = rows >> level;
        let w = cols >> level;
        for (orientation, row0, col0) in [
            (Orientation::Hl, 0, w),
            (Orientation::Lh, h, 0),
            (Orientation::Hh, h, w),
        ] {
            out.push(Subband {
                level,
                orientation,
                row0,
                col0,
                rows: h,
                cols: w,
            });
        }
    }
    out
}

/// Flat indices of every detail coefficient, bands in [`detail_bands`]
/// order and each band row-major.
pub fn detail_scan(rows: usize, cols: usize, levels: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for band in detail_bands(rows, cols, levels) {
        for r in band.row0..band.row0 + band.rows {
            out.extend((band.col0..band.col0 + band.cols).map(|c| r * cols + c));
        }
    }
    out
}

fn analyze_line<T: Real>(line: &mut [T], scratch: &mut Vec<T>) {
    let half = line.len() / 2;
    let norm = T::SQRT_2().recip();
    scratch.clear();
    scratch.extend_from_slice(line);
    for i in 0..half {
        let a = scratch[2 * i];
        let b = scratch[2 * i + 1];
        line[i] = (a + b) * norm;
        line[half + i] = (a - b) * norm;
    }
}

fn synthesize_line<T: Real>(line: &mut [T], scratch: &mut Vec<T>) {
    let half = line.len() / 2;
    let norm = T::SQRT_2().recip();
    scratch.clear();
    scratch.extend_from_slice(line);
    for i in 0..half {
        let s = scratch[i];
        let d = scratch[half + i];
        line[2 * i] = (s + d) * norm;
        line[2 * i + 1] = (s - d) * norm;
    }
}

/// Orthonormal multi-level 2-D Haar analysis of an n×n block.
pub fn dwt2_haar<T: Real>(block: &[T], n: usize, levels: usize) -> Result<CoeffBlock<T>> {
    dwt2_haar_rect(block, n, n, levels)
}

/// Haar analysis with the approximation band in the top-left corner and
/// HL / LH / HH details per level.
pub fn dwt2_haar_rect<T: Real>(
    block: &[T],
    rows: usize,
    cols: usize,
    levels: usize,
) -> Result<CoeffBlock<T>> {
    check_dims(rows, cols, levels, block.len())?;
    let mut c = block.to_vec();
    let mut scratch = Vec::new();
    let mut column = Vec::new();
    for level in 0..levels {
        let h = rows >> level;
        let w = cols >> level;
        for r in 0..h {
            analyze_line(&mut c[r * cols..r * cols + w], &mut scratch);
        }
        for col in 0..w {
            column.clear();
            column.extend((0..h).map(|r| c[r * cols + col]));
            analyze_line(&mut column, &mut scratch);
            for (r, &v) in column.iter().enumerate() {
                c[r * cols + col] = v;
            }
        }
    }
    Ok(CoeffBlock {
        rows,
        cols,
        coeffs: c,
    })
}

/// Inverse of [`dwt2_haar_rect`].
pub fn idwt2_haar<T: Real>(coeffs: &CoeffBlock<T>, levels: usize) -> Result<Vec<T>> {
    let (rows, cols) = (coeffs.rows, coeffs.cols);
    check_dims(rows, cols, levels, coeffs.coeffs.len())?;
    let mut c = coeffs.coeffs.clone();
    let mut scratch = Vec::new();
    let mut column = Vec::new();
    for level in (0..levels).rev() {
        let h = rows >> level;
        let w = cols >> level;
        for col in 0..w {
            column.clear();
            column.extend((0..h).map(|r| c[r * cols + col]));
            synthesize_line(&mut column, &mut scratch);
            for (r, &v) in column.iter().enumerate() {
                c[r * cols + col] = v;
            }
        }
        for r in 0..h {
            synthesize_line(&mut c[r * cols..r * cols + w], &mut scratch);
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_ones() {
        let c = dwt2_haar(&[1.0f64; 4], 2, 1).unwrap();
        assert!((c.coeffs[0] - 2.0).abs() < 1e-15);
        assert!(c.coeffs[1..].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn approximation_only_inverse() {
        let c = CoeffBlock {
            rows: 2,
            cols: 2,
            coeffs: vec![2.0 * 7.0, 0.0, 0.0, 0.0],
        };
        let x = idwt2_haar(&c, 1).unwrap();
        assert!(x.iter().all(|v| (v - 7.0f64).abs() < 1e-12));
        let z = idwt2_haar(&CoeffBlock::<f64>::zeros(8, 8), 2).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_block_has_zero_details() {
        let c = dwt2_haar(&[93.0f64; 32 * 32], 32, 2).unwrap();
        for idx in detail_scan(32, 32, 2) {
            assert_eq!(c.coeffs[idx], 0.0);
        }
        assert!((c.coeffs[0] - 93.0 * 4.0).abs() < 1e-9);
    }

    #[test]
    fn band_geometry() {
        let bands = detail_bands(32, 32, 2);
        assert_eq!(bands.len(), 6);
        assert!(bands[..3].iter().all(|b| b.len() == 256 && b.level == 1));
        assert!(bands[3..].iter().all(|b| b.len() == 64 && b.level == 2));
        let scan = detail_scan(32, 32, 2);
        assert_eq!(scan.len(), 960);
        let mut sorted = scan.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 960);
        // approximation 8x8 never listed
        assert!(scan.iter().all(|&i| !(i / 32 < 8 && i % 32 < 8)));
    }

    #[test]
    fn divisibility_errors() {
        assert!(dwt2_haar(&[0.0f64; 36], 6, 2).is_err());
        assert!(dwt2_haar(&[0.0f64; 16], 4, 0).is_err());
        assert!(dwt2_haar(&[0.0f64; 15], 4, 1).is_err());
    }

    #[test]
    fn rectangular_round_trip() {
        let x: Vec<f64> = (0..8 * 12).map(|i| ((i * 29) % 255) as f64).collect();
        let c = dwt2_haar_rect(&x, 8, 12, 2).unwrap();
        let back = idwt2_haar(&c, 2).unwrap();
        assert!(x.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-10));
    }
}
