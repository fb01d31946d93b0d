//! Orthonormal block transforms: 2-D DCT-II, zig-zag ordering and Haar DWT.
//!
//! Both transforms are orthonormal, so coefficient energy equals pixel
//! energy. Everything here is generic over [`Real`](crate::Real).

mod dct;
mod haar;
mod zigzag;

pub use dct::{dct2, dct2_rect, idct2, DctPlan};
pub use haar::{detail_bands, detail_scan, dwt2_haar, dwt2_haar_rect, idwt2_haar, Orientation, Subband};
pub use zigzag::{scan, unscan, zigzag, zigzag_rect, ZigzagOrder};

use crate::scalar::Real;

/// A rows×cols grid of transform coefficients, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffBlock<T> {
    pub rows: usize,
    pub cols: usize,
    pub coeffs: Vec<T>,
}

impl<T: Real> CoeffBlock<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            coeffs: vec![T::zero(); rows * cols],
        }
    }

    /// Side length of a square block.
    pub fn n(&self) -> usize {
        debug_assert_eq!(self.rows, self.cols);
        self.rows
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> T {
        self.coeffs[row * self.cols + col]
    }

    #[inline]
    pub fn at_mut(&mut self, row: usize, col: usize) -> &mut T {
        &mut self.coeffs[row * self.cols + col]
    }

    /// Sum of squared coefficients.
    pub fn energy(&self) -> T {
        self.coeffs.iter().map(|&c| c * c).sum()
    }
}
