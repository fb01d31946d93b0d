use crate::error::{Error, Result};

use super::CoeffBlock;
use crate::scalar::Real;

/// Low-to-high frequency visiting order of a coefficient grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZigzagOrder {
    pub rows: usize,
    pub cols: usize,
    /// (row, col) positions, DC first.
    pub order: Vec<(usize, usize)>,
}

impl ZigzagOrder {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Row-major flat index of the `rank`-th visited position.
    #[inline]
    pub fn flat(&self, rank: usize) -> usize {
        let (r, c) = self.order[rank];
        r * self.cols + c
    }
}

/// JPEG-style anti-diagonal zig-zag for an n×n grid.
pub fn zigzag(n: usize) -> ZigzagOrder {
    zigzag_rect(n, n)
}

/// Zig-zag for a rows×cols grid: anti-diagonals in increasing order, odd
/// diagonals walked downwards, even diagonals upwards.
pub fn zigzag_rect(rows: usize, cols: usize) -> ZigzagOrder {
    let mut order = Vec::with_capacity(rows * cols);
    if rows > 0 && cols > 0 {
        for s in 0..rows + cols - 1 {
            let lo = s.saturating_sub(cols - 1);
            let hi = s.min(rows - 1);
            if s % 2 == 1 {
                order.extend((lo..=hi).map(|r| (r, s - r)));
            } else {
                order.extend((lo..=hi).rev().map(|r| (r, s - r)));
            }
        }
    }
    ZigzagOrder { rows, cols, order }
}

/// Coefficients listed in zig-zag order.
pub fn scan<T: Real>(coeffs: &CoeffBlock<T>, order: &ZigzagOrder) -> Result<Vec<T>> {
    if coeffs.rows != order.rows || coeffs.cols != order.cols {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} coefficients for a {}x{} zig-zag",
            coeffs.rows, coeffs.cols, order.rows, order.cols
        )));
    }
    Ok(order.order.iter().map(|&(r, c)| coeffs.at(r, c)).collect())
}

/// Inverse of [`scan`].
pub fn unscan<T: Real>(list: &[T], order: &ZigzagOrder) -> Result<CoeffBlock<T>> {
    if list.len() != order.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values for a zig-zag of {}",
            list.len(),
            order.len()
        )));
    }
    let mut out = CoeffBlock::zeros(order.rows, order.cols);
    for (&v, &(r, c)) in list.iter().zip(&order.order) {
        *out.at_mut(r, c) = v;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_orders() {
        assert_eq!(zigzag(2).order, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(
            zigzag(3).order,
            vec![
                (0, 0),
                (0, 1),
                (1, 0),
                (2, 0),
                (1, 1),
                (0, 2),
                (1, 2),
                (2, 1),
                (2, 2)
            ]
        );
    }

    #[test]
    fn jpeg_8x8_prefix() {
        let z = zigzag(8);
        let flat: Vec<usize> = (0..10).map(|i| z.flat(i)).collect();
        assert_eq!(flat, vec![0, 1, 8, 16, 9, 2, 3, 10, 17, 24]);
        assert_eq!(z.flat(63), 63);
    }

    #[test]
    fn permutation_with_nondecreasing_diagonals() {
        for (r, c) in [(1, 1), (4, 4), (8, 8), (32, 32), (3, 7), (9, 2)] {
            let z = zigzag_rect(r, c);
            let mut seen = vec![false; r * c];
            for i in 0..z.len() {
                assert!(!std::mem::replace(&mut seen[z.flat(i)], true));
            }
            assert!(seen.iter().all(|&s| s));
            assert_eq!(z.order[0], (0, 0));
            assert!(z.order.windows(2).all(|w| w[0].0 + w[0].1 <= w[1].0 + w[1].1));
        }
    }

    #[test]
    fn unscan_length_mismatch() {
        assert!(unscan(&[0.0f64; 3], &zigzag(2)).is_err());
        assert!(scan(&CoeffBlock::<f64>::zeros(3, 3), &zigzag(2)).is_err());
    }
}
