//! Structural similarity and mean squared error.
//!
//! SSIM is evaluated on every `window`×`window` square (stride 1, uniform
//! weights) and pooled by arithmetic mean. Each window is compared through the
//! luminance, contrast and structure terms
//!
//! ```text
//! l = (2 μx μy + C1) / (μx² + μy² + C1)
//! c = (2 σx σy + C2) / (σx² + σy² + C2)
//! s = (σxy + C3) / (σx σy + C3)
//! ```
//!
//! with unbiased (n − 1) sample statistics. When `C3 == C2 / 2` the product
//! `c·s` collapses to `(2 σxy + C2) / (σx² + σy² + C2)`, which is what the map
//! evaluates; [`local_components`] always reports the three terms separately.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

/// Window size and stabilising constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityConfig<T> {
    pub window: usize,
    pub c1: T,
    pub c2: T,
    pub c3: T,
}

impl<T: Real> Default for QualityConfig<T> {
    /// 8×8 windows, `C1 = (0.01·255)²`, `C2 = (0.03·255)²`, `C3 = C2/2`.
    fn default() -> Self {
        let c1 = T::lit((0.01f64 * 255.0).powi(2));
        let c2 = T::lit((0.03f64 * 255.0).powi(2));
        Self {
            window: 8,
            c1,
            c2,
            c3: c2 / T::lit(2.0),
        }
    }
}

impl<T: Real> QualityConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::InvalidParameter(format!(
                "ssim window {} < 2",
                self.window
            )));
        }
        if !(self.c1 > T::zero() && self.c2 > T::zero() && self.c3 > T::zero()) {
            return Err(Error::InvalidParameter(
                "ssim constants must be positive".into(),
            ));
        }
        Ok(())
    }

    fn collapsed(&self) -> bool {
        self.c3 == self.c2 / T::lit(2.0)
    }
}

/// Luminance, contrast and structure terms for one window pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsimComponents<T> {
    pub l: T,
    pub c: T,
    pub s: T,
}

impl<T: Real> SsimComponents<T> {
    /// Local SSIM, `l·c·s`.
    pub fn ssim(&self) -> T {
        self.l * self.c * self.s
    }
}

/// First and second order moments of a window pair.
#[derive(Clone, Copy, Debug)]
struct Moments<T> {
    mean_x: T,
    mean_y: T,
    var_x: T,
    var_y: T,
    cov: T,
}

impl<T: Real> Moments<T> {
    /// From raw sums over `n` samples. Numerators are formed as
    /// `n·Σab − Σa·Σb`, exact for integer-valued samples.
    #[inline]
    fn from_sums(n: T, [sx, sy, sxx, syy, sxy]: [T; 5]) -> Self {
        let denom = n * (n - T::one());
        Self {
            mean_x: sx / n,
            mean_y: sy / n,
            var_x: ((n * sxx - sx * sx) / denom).max(T::zero()),
            var_y: ((n * syy - sy * sy) / denom).max(T::zero()),
            cov: (n * sxy - sx * sy) / denom,
        }
    }

    #[inline]
    fn luminance(&self, cfg: &QualityConfig<T>) -> T {
        let two = T::lit(2.0);
        (two * self.mean_x * self.mean_y + cfg.c1)
            / (self.mean_x * self.mean_x + self.mean_y * self.mean_y + cfg.c1)
    }

    fn components(&self, cfg: &QualityConfig<T>) -> SsimComponents<T> {
        let two = T::lit(2.0);
        let sd_x = self.var_x.sqrt();
        let sd_y = self.var_y.sqrt();
        SsimComponents {
            l: self.luminance(cfg),
            c: (two * sd_x * sd_y + cfg.c2) / (self.var_x + self.var_y + cfg.c2),
            s: (self.cov + cfg.c3) / (sd_x * sd_y + cfg.c3),
        }
    }

    #[inline]
    fn ssim(&self, cfg: &QualityConfig<T>, collapsed: bool) -> T {
        if collapsed {
            let two = T::lit(2.0);
            self.luminance(cfg) * (two * self.cov + cfg.c2)
                / (self.var_x + self.var_y + cfg.c2)
        } else {
            self.components(cfg).ssim()
        }
    }
}

/// The three comparison terms for a single window pair.
pub fn local_components<T: Real>(
    x: &[T],
    y: &[T],
    cfg: &QualityConfig<T>,
) -> Result<SsimComponents<T>> {
    cfg.validate()?;
    let n = cfg.window * cfg.window;
    if x.len() != n || y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "window of {} and {} samples, expected {n}",
            x.len(),
            y.len()
        )));
    }
    let mut sums = [T::zero(); 5];
    for (&a, &b) in x.iter().zip(y) {
        sums[0] += a;
        sums[1] += b;
        sums[2] += a * a;
        sums[3] += b * b;
        sums[4] += a * b;
    }
    Ok(Moments::from_sums(T::from_usize_lossy(n), sums).components(cfg))
}

/// Per-window SSIM values (row-major over window origins) and their mean.
#[derive(Clone, Debug, PartialEq)]
pub struct SsimMap<T> {
    pub cols: usize,
    pub rows: usize,
    pub values: Vec<T>,
    pub mean: T,
}

/// Sliding-window SSIM between two planes of identical shape.
pub fn ssim_map<T: Real>(
    x: &[T],
    y: &[T],
    width: usize,
    height: usize,
    cfg: &QualityConfig<T>,
) -> Result<SsimMap<T>> {
    cfg.validate()?;
    if x.len() != width * height || y.len() != width * height {
        return Err(Error::DimensionMismatch(format!(
            "planes of {} and {} samples for {width}x{height}",
            x.len(),
            y.len()
        )));
    }
    let win = cfg.window;
    if width < win || height < win {
        return Err(Error::DimensionMismatch(format!(
            "{width}x{height} is smaller than the {win}x{win} window"
        )));
    }
    let cols = width - win + 1;
    let rows = height - win + 1;
    let n = T::from_usize_lossy(win * win);
    let collapsed = cfg.collapsed();

    let mut values = Vec::with_capacity(cols * rows);
    // column sums over the current band of `win` rows
    let mut col = vec![[T::zero(); 5]; width];
    let accumulate = |col: &mut [[T; 5]], row: usize, sign: T| {
        let base = row * width;
        for (cx, acc) in col.iter_mut().enumerate() {
            let a = x[base + cx];
            let b = y[base + cx];
            acc[0] += sign * a;
            acc[1] += sign * b;
            acc[2] += sign * a * a;
            acc[3] += sign * b * b;
            acc[4] += sign * a * b;
        }
    };
    for row in 0..win {
        accumulate(&mut col, row, T::one());
    }
    for top in 0..rows {
        if top > 0 {
            accumulate(&mut col, top - 1, -T::one());
            accumulate(&mut col, top + win - 1, T::one());
        }
        let mut acc = [T::zero(); 5];
        for c in &col[..win] {
            for q in 0..5 {
                acc[q] += c[q];
            }
        }
        for left in 0..cols {
            if left > 0 {
                for q in 0..5 {
                    acc[q] += col[left + win - 1][q] - col[left - 1][q];
                }
            }
            values.push(Moments::from_sums(n, acc).ssim(cfg, collapsed));
        }
    }
    let mut total = T::zero();
    for &v in &values {
        total += v;
    }
    let mean = total / T::from_usize_lossy(values.len());
    Ok(SsimMap {
        cols,
        rows,
        values,
        mean,
    })
}

/// SSIM map and mean between two images.
pub fn mean_ssim<T: Real>(x: &Image, y: &Image, cfg: &QualityConfig<T>) -> Result<SsimMap<T>> {
    x.check_same_dims(y)?;
    ssim_map(
        &x.to_plane::<T>(),
        &y.to_plane::<T>(),
        x.width(),
        x.height(),
        cfg,
    )
}

/// Mean SSIM with the default double precision configuration.
pub fn ssim(x: &Image, y: &Image) -> Result<f64> {
    Ok(mean_ssim::<f64>(x, y, &QualityConfig::default())?.mean)
}

/// Mean squared error over all samples.
pub fn mse(x: &Image, y: &Image) -> Result<f64> {
    x.check_same_dims(y)?;
    let total: u64 = x
        .pixels()
        .iter()
        .zip(y.pixels())
        .map(|(&a, &b)| {
            let d = i64::from(a) - i64::from(b);
            (d * d) as u64
        })
        .sum();
    Ok(total as f64 / x.len() as f64)
}
