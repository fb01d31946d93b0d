use crate::error::{Error, Result};
use crate::scalar::Real;

use super::CoeffBlock;

/// Orthonormal DCT-II basis, `basis[k * n + i] = a_k cos(π (2i + 1) k / 2n)`.
#[derive(Clone, Debug)]
struct Basis<T> {
    n: usize,
    m: Vec<T>,
}

impl<T: Real> Basis<T> {
    fn new(n: usize) -> Self {
        let nf = n as f64;
        let mut m = Vec::with_capacity(n * n);
        for k in 0..n {
            let a = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            for i in 0..n {
                let angle = std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf);
                m.push(T::lit(a * angle.cos()));
            }
        }
        Self { n, m }
    }
}

/// Precomputed separable 2-D DCT for a fixed rows×cols shape.
#[derive(Clone, Debug)]
pub struct DctPlan<T> {
    rows: Basis<T>,
    cols: Basis<T>,
}

impl<T: Real> DctPlan<T> {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidParameter(format!(
                "dct needs at least 2x2 samples, got {rows}x{cols}"
            )));
        }
        Ok(Self {
            rows: Basis::new(rows),
            cols: Basis::new(cols),
        })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.n, self.cols.n)
    }

    pub fn forward(&self, samples: &[T]) -> Result<CoeffBlock<T>> {
        let (r, c) = self.shape();
        if samples.len() != r * c {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {r}x{c} dct",
                samples.len()
            )));
        }
        // rows: tmp = X · Cᵀ
        let mut tmp = vec![T::zero(); r * c];
        for row in 0..r {
            let x = &samples[row * c..(row + 1) * c];
            let out = &mut tmp[row * c..(row + 1) * c];
            for (k, o) in out.iter_mut().enumerate() {
                let b = &self.cols.m[k * c..(k + 1) * c];
                *o = x.iter().zip(b).map(|(&a, &w)| a * w).sum();
            }
        }
        // columns: Y = R · tmp
        let mut coeffs = vec![T::zero(); r * c];
        for u in 0..r {
            let b = &self.rows.m[u * r..(u + 1) * r];
            let out = &mut coeffs[u * c..(u + 1) * c];
            for (row, &w) in b.iter().enumerate() {
                let src = &tmp[row * c..(row + 1) * c];
                for (o, &s) in out.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        }
        Ok(CoeffBlock {
            rows: r,
            cols: c,
            coeffs,
        })
    }

    pub fn inverse(&self, block: &CoeffBlock<T>) -> Result<Vec<T>> {
        let (r, c) = self.shape();
        if block.rows != r || block.cols != c || block.coeffs.len() != r * c {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} coefficients for a {r}x{c} dct",
                block.rows, block.cols
            )));
        }
        // columns: tmp = Rᵀ · Y
        let mut tmp = vec![T::zero(); r * c];
        for u in 0..r {
            let b = &self.rows.m[u * r..(u + 1) * r];
            let src = &block.coeffs[u * c..(u + 1) * c];
            for (row, &w) in b.iter().enumerate() {
                let out = &mut tmp[row * c..(row + 1) * c];
                for (o, &s) in out.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        }
        // rows: X = tmp · C
        let mut samples = vec![T::zero(); r * c];
        for row in 0..r {
            let y = &tmp[row * c..(row + 1) * c];
            let out = &mut samples[row * c..(row + 1) * c];
            for (k, &v) in y.iter().enumerate() {
                let b = &self.cols.m[k * c..(k + 1) * c];
                for (o, &w) in out.iter_mut().zip(b) {
                    *o += v * w;
                }
            }
        }
        Ok(samples)
    }
}

/// Orthonormal 2-D DCT-II of an n×n block.
pub fn dct2<T: Real>(block: &[T], n: usize) -> Result<CoeffBlock<T>> {
    DctPlan::square(n)?.forward(block)
}

pub fn dct2_rect<T: Real>(block: &[T], rows: usize, cols: usize) -> Result<CoeffBlock<T>> {
    DctPlan::new(rows, cols)?.forward(block)
}

/// Inverse of [`dct2`].
pub fn idct2<T: Real>(coeffs: &CoeffBlock<T>) -> Result<Vec<T>> {
    DctPlan::new(coeffs.rows, coeffs.cols)?.inverse(coeffs)
}
