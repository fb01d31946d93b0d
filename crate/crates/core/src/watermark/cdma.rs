//! Walsh-coded CDMA embedding in the finest Haar detail band.
//!
//! Bits are grouped; each group is mapped to a multilevel amplitude and
//! modulates its own Walsh code. The superposition of all modulated codes is
//! added to the first `code_len` level-1 detail coefficients.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::to_pixel;
use crate::transforms::{detail_scan, dwt2_haar_rect, idwt2_haar, CoeffBlock};

use super::WatermarkSequence;

/// Grouping and spreading configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CdmaParams {
    pub group_size: usize,
    /// Walsh code length; a power of two.
    pub code_len: usize,
    /// Amplitude applied to every group.
    pub gain: f64,
}

impl Default for CdmaParams {
    fn default() -> Self {
        Self {
            group_size: 4,
            code_len: 64,
            gain: 1.0,
        }
    }
}

impl CdmaParams {
    pub fn validate(&self) -> Result<()> {
        if self.group_size == 0 || self.group_size > 16 {
            return Err(Error::InvalidParameter(format!(
                "cdma group size {} outside 1..=16",
                self.group_size
            )));
        }
        if !self.code_len.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "cdma code length {} is not a power of two",
                self.code_len
            )));
        }
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::InvalidParameter(format!("cdma gain {}", self.gain)));
        }
        Ok(())
    }

    /// Bits carried when every code is in use.
    pub fn max_bits(&self) -> usize {
        self.code_len * self.group_size
    }

    /// Weight of bit `j` inside its group. Weights halve with position and
    /// sum to one, so a group of all ones maps to +1 and all zeros to −1.
    pub fn weight(&self, j: usize) -> f64 {
        let total = 2.0 - 2.0f64.powi(1 - self.group_size as i32);
        2.0f64.powi(-(j as i32)) / total
    }

    /// Multilevel amplitude of the group starting at bit `start`.
    pub fn level(&self, seq: &WatermarkSequence, start: usize) -> f64 {
        (0..self.group_size)
            .map(|j| self.weight(j) * seq.symbol(start + j))
            .sum()
    }
}

/// Sylvester-ordered Hadamard rows: `n` mutually orthogonal ±1 codes.
pub fn walsh_codes(n: usize) -> Result<Vec<Vec<i8>>> {
    if !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "walsh order {n} is not a power of two"
        )));
    }
    let mut h = vec![vec![1i8]];
    while h.len() < n {
        let m = h.len();
        let mut next = Vec::with_capacity(2 * m);
        for row in &h {
            next.push(row.iter().chain(row.iter()).copied().collect());
        }
        for row in &h {
            next.push(row.iter().copied().chain(row.iter().map(|&v| -v)).collect());
        }
        h = next;
    }
    Ok(h)
}

fn check_sequence(p: &CdmaParams, bits: usize) -> Result<usize> {
    if bits % p.group_size != 0 {
        return Err(Error::InvalidParameter(format!(
            "{bits} bits do not split into groups of {}",
            p.group_size
        )));
    }
    let groups = bits / p.group_size;
    if groups > p.code_len {
        return Err(Error::Capacity {
            requested: groups,
            available: p.code_len,
        });
    }
    Ok(groups)
}

/// Coefficient-domain watermark: `α · Σ_g gain · level_g · code_g`.
pub fn spread(seq: &WatermarkSequence, p: &CdmaParams, codes: &[Vec<i8>], alpha: f64) -> Result<Vec<f64>> {
    p.validate()?;
    let groups = check_sequence(p, seq.len())?;
    let mut out = vec![0.0; p.code_len];
    for g in 0..groups {
        let amp = alpha * p.gain * p.level(seq, g * p.group_size);
        for (o, &c) in out.iter_mut().zip(&codes[g]) {
            *o += amp * f64::from(c);
        }
    }
    Ok(out)
}

/// Correlate received coefficients with each of the first `groups` codes.
pub fn despread(received: &[f64], codes: &[Vec<i8>], groups: usize) -> Vec<f64> {
    let n = received.len() as f64;
    codes[..groups]
        .iter()
        .map(|code| {
            received
                .iter()
                .zip(code)
                .map(|(&r, &c)| r * f64::from(c))
                .sum::<f64>()
                / n
        })
        .collect()
}

/// In-place fast Walsh-Hadamard transform: `v ← H v` with `H` the
/// Sylvester matrix of [`walsh_codes`]. Length must be a power of two.
pub fn fwht(v: &mut [f64]) {
    debug_assert!(v.len().is_power_of_two());
    let mut h = 1;
    while h < v.len() {
        for chunk in v.chunks_mut(2 * h) {
            let (a, b) = chunk.split_at_mut(h);
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (s, d) = (*x + *y, *x - *y);
                *x = s;
                *y = d;
            }
        }
        h *= 2;
    }
}

/// A host with its level-1 Haar decomposition and carrier positions cached.
/// Spreading and despreading run through [`fwht`], so long codes cost
/// `O(L log L)` rather than a code matrix.
#[derive(Clone, Debug)]
pub struct CdmaCarrier {
    params: CdmaParams,
    coeffs: CoeffBlock<f64>,
    positions: Vec<usize>,
}

impl CdmaCarrier {
    pub fn new(host: &Image, params: CdmaParams) -> Result<Self> {
        params.validate()?;
        let coeffs = dwt2_haar_rect(&host.to_plane::<f64>(), host.height(), host.width(), 1)?;
        let mut positions = detail_scan(coeffs.rows, coeffs.cols, 1);
        if params.code_len > positions.len() {
            return Err(Error::Capacity {
                requested: params.code_len,
                available: positions.len(),
            });
        }
        positions.truncate(params.code_len);
        Ok(Self {
            params,
            coeffs,
            positions,
        })
    }

    pub fn params(&self) -> &CdmaParams {
        &self.params
    }

    pub fn embed(&self, seq: &WatermarkSequence, alpha: f64) -> Result<Image> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("cdma alpha {alpha}")));
        }
        let p = &self.params;
        let groups = check_sequence(p, seq.len())?;
        let mut delta = vec![0.0; p.code_len];
        for (g, d) in delta.iter_mut().enumerate().take(groups) {
            *d = alpha * p.gain * p.level(seq, g * p.group_size);
        }
        fwht(&mut delta);
        let mut marked = self.coeffs.clone();
        for (&pos, d) in self.positions.iter().zip(delta) {
            marked.coeffs[pos] += d;
        }
        let samples = idwt2_haar(&marked, 1)?;
        Image::new(
            self.coeffs.cols,
            self.coeffs.rows,
            samples.into_iter().map(to_pixel).collect(),
        )
    }

    /// Per-bit readout: each bit gets its group's despread value scaled by
    /// the bit's multilevel weight.
    pub fn observations(&self, bits: usize) -> Result<Vec<f64>> {
        check_sequence(&self.params, bits)?;
        let mut d: Vec<f64> = self.positions.iter().map(|&p| self.coeffs.coeffs[p]).collect();
        fwht(&mut d);
        let n = d.len() as f64;
        d.iter_mut().for_each(|v| *v /= n);
        Ok((0..bits)
            .map(|i| self.params.weight(i % self.params.group_size) * d[i / self.params.group_size])
            .collect())
    }
}

pub fn embed_cdma(block: &Image, seq: &WatermarkSequence, p: &CdmaParams, alpha: f64) -> Result<Image> {
    CdmaCarrier::new(block, *p)?.embed(seq, alpha)
}

pub fn observations(img: &Image, p: &CdmaParams, bits: usize) -> Result<Vec<f64>> {
    CdmaCarrier::new(img, *p)?.observations(bits)
}
