//! Signal-processing attacks: additive Gaussian noise, uniform low-pass
//! filtering and a JPEG-style quantization round trip.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::to_pixel;
use crate::transforms::DctPlan;

/// Annex K luminance quantization table, row-major.
pub const LUMA_QUANT: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttackKind {
    Gaussian,
    Lowpass,
    Jpeg,
}

impl AttackKind {
    pub const ALL: [AttackKind; 3] = [AttackKind::Gaussian, AttackKind::Lowpass, AttackKind::Jpeg];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::Gaussian => "gauss",
            AttackKind::Lowpass => "lpf",
            AttackKind::Jpeg => "jpeg",
        }
    }
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss" | "gaussian" => Ok(AttackKind::Gaussian),
            "lpf" | "lowpass" => Ok(AttackKind::Lowpass),
            "jpeg" => Ok(AttackKind::Jpeg),
            other => Err(Error::InvalidParameter(format!("unknown attack {other:?}"))),
        }
    }
}

/// One attack with all of its parameters; only the field matching `kind`
/// is used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub sigma: f64,
    pub kernel: usize,
    pub quality: u8,
    pub seed: u64,
}

impl AttackSpec {
    pub const DEFAULT_SIGMA: f64 = 10.0;
    pub const DEFAULT_KERNEL: usize = 3;
    pub const DEFAULT_QUALITY: u8 = 50;

    /// `kind` with the default strengths.
    pub fn new(kind: AttackKind, seed: u64) -> Self {
        Self {
            kind,
            sigma: Self::DEFAULT_SIGMA,
            kernel: Self::DEFAULT_KERNEL,
            quality: Self::DEFAULT_QUALITY,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            AttackKind::Gaussian if !(self.sigma >= 0.0 && self.sigma.is_finite()) => {
                Err(Error::InvalidParameter(format!("noise sigma {}", self.sigma)))
            }
            AttackKind::Lowpass if self.kernel == 0 || self.kernel % 2 == 0 => Err(Error::InvalidParameter(
                format!("kernel side {} is not odd and positive", self.kernel),
            )),
            AttackKind::Jpeg if !(1..=100).contains(&self.quality) => {
                Err(Error::InvalidParameter(format!("jpeg quality {}", self.quality)))
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, img: &Image) -> Result<Image> {
        self.validate()?;
        match self.kind {
            AttackKind::Gaussian => gaussian_noise(img, self.sigma, self.seed),
            AttackKind::Lowpass => lowpass(img, self.kernel),
            AttackKind::Jpeg => jpeg_like(img, self.quality),
        }
    }
}

/// `clamp(round(p + n))` with `n ~ N(0, σ²)` drawn in raster order.
pub fn gaussian_noise(img: &Image, sigma: f64, seed: u64) -> Result<Image> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise sigma {sigma}")));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(format!("noise sigma {sigma}: {e}")))?;
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = img
        .pixels()
        .iter()
        .map(|&p| to_pixel(f64::from(p) + normal.sample(&mut rng)))
        .collect();
    Image::new(img.width(), img.height(), pixels)
}

/// Mean over a `kernel`×`kernel` window with replicated edges.
pub fn lowpass(img: &Image, kernel: usize) -> Result<Image> {
    if kernel == 0 || kernel % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "kernel side {kernel} is not odd and positive"
        )));
    }
    let (w, h) = (img.width(), img.height());
    let r = (kernel / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    // separable box sums stay exact in integers
    let mut rows = vec![0u32; w * h];
    for y in 0..h {
        for x in 0..w {
            rows[y * w + x] = (-r..=r)
                .map(|d| u32::from(img.get(clamp(x as isize + d, w), y)))
                .sum();
        }
    }
    let area = (kernel * kernel) as f64;
    Image::from_fn(w, h, |x, y| {
        let total: u32 = (-r..=r).map(|d| rows[clamp(y as isize + d, h) * w + x]).sum();
        to_pixel(f64::from(total) / area)
    })
}

/// Quantization table for `quality` with the conventional scaling.
pub fn quant_table(quality: u8) -> Result<[f64; 64]> {
    if !(1..=100).contains(&quality) {
        return Err(Error::InvalidParameter(format!("jpeg quality {quality}")));
    }
    let q = u32::from(quality);
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    let mut out = [0.0; 64];
    for (o, &base) in out.iter_mut().zip(&LUMA_QUANT) {
        *o = f64::from(((u32::from(base) * scale + 50) / 100).clamp(1, 255));
    }
    Ok(out)
}

/// Per 8×8 tile: level shift, DCT, quantize and dequantize, inverse DCT.
/// Partial tiles are filled by edge replication and cropped back.
pub fn jpeg_like(img: &Image, quality: u8) -> Result<Image> {
    let table = quant_table(quality)?;
    let plan = DctPlan::<f64>::square(8)?;
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    let mut tile = vec![0.0; 64];
    for ty in (0..h).step_by(8) {
        for tx in (0..w).step_by(8) {
            for (i, t) in tile.iter_mut().enumerate() {
                let x = (tx + i % 8).min(w - 1);
                let y = (ty + i / 8).min(h - 1);
                *t = f64::from(img.get(x, y)) - 128.0;
            }
            let mut c = plan.forward(&tile)?;
            for (v, q) in c.coeffs.iter_mut().zip(&table) {
                *v = (*v / q).round() * q;
            }
            let back = plan.inverse(&c)?;
            for (i, v) in back.iter().enumerate() {
                let (x, y) = (tx + i % 8, ty + i / 8);
                if x < w && y < h {
                    out.set(x, y, to_pixel(v + 128.0));
                }
            }
        }
    }
    Ok(out)
}
