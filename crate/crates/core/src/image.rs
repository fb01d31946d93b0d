//! Grayscale rasters, binary PGM I/O and k×k block partitioning.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// An 8-bit grayscale raster stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "zero-sized image {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} samples for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Image with every sample set to `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_dims(&self, other: &Image) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    /// Copy out the `w`×`h` region whose top-left corner is (`x0`, `y0`).
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Image> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::DimensionMismatch(format!(
                "region {w}x{h}+{x0}+{y0} outside {}x{}",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let row = y * self.width;
            pixels.extend_from_slice(&self.pixels[row + x0..row + x0 + w]);
        }
        Image::new(w, h, pixels)
    }

    /// Samples widened to a floating point plane.
    pub fn to_plane<T: crate::Real>(&self) -> Vec<T> {
        self.pixels.iter().map(|&p| T::px(p)).collect()
    }

    /// Encode as a binary PGM (P5, maxval 255).
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let header = format!("P5\n{} {}\n255\n", self.width, self.height);
        let mut out = Vec::with_capacity(header.len() + self.pixels.len());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&self.pixels);
        out
    }

    /// Decode a binary PGM. Comment lines in the header are skipped.
    pub fn from_pgm_bytes(data: &[u8]) -> Result<Image> {
        let mut cursor = HeaderCursor { data, pos: 0 };
        let magic = cursor.token()?;
        match magic.as_str() {
            "P5" => {}
            "P1" | "P2" | "P3" | "P4" | "P6" | "P7" => {
                return Err(Error::UnsupportedFormat(format!(
                    "netpbm {magic}, only binary grayscale P5 is supported"
                )))
            }
            other => {
                return Err(Error::UnsupportedFormat(format!(
                    "bad magic {other:?}"
                )))
            }
        }
        let width = cursor.number("width")?;
        let height = cursor.number("height")?;
        let maxval = cursor.number("maxval")?;
        if width == 0 || height == 0 {
            return Err(Error::MalformedHeader(format!(
                "zero dimension {width}x{height}"
            )));
        }
        if maxval == 0 {
            return Err(Error::MalformedHeader("maxval 0".into()));
        }
        if maxval > 255 {
            return Err(Error::BitDepth(maxval));
        }
        // exactly one whitespace byte separates the header from the raster
        match data.get(cursor.pos) {
            Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
            _ => return Err(Error::MalformedHeader("missing raster separator".into())),
        }
        let (width, height) = (width as usize, height as usize);
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;
        let raster = &data[cursor.pos..];
        if raster.len() < expected {
            return Err(Error::Truncated {
                expected,
                found: raster.len(),
            });
        }
        Image::new(width, height, raster[..expected].to_vec())
    }
}

struct HeaderCursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.data.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<String> {
        self.skip_space_and_comments();
        let start = self.pos;
        while let Some(&b) = self.data.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader("unexpected end of header".into()));
        }
        Ok(String::from_utf8_lossy(&self.data[start..self.pos]).into_owned())
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::MalformedHeader(format!("{what} is not a number: {tok:?}")))
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    Image::from_pgm_bytes(&data)
}

pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, img.to_pgm_bytes()).map_err(|e| Error::io(path, e))
}

/// What to do when the image dimensions are not multiples of the block side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PadPolicy {
    #[default]
    Reject,
    /// Extend with the nearest edge sample; assembly crops back.
    ReplicateEdge,
}

/// Partition of an image into k×k blocks, indexed row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockGrid {
    pub k: usize,
    pub blocks_x: usize,
    pub blocks_y: usize,
    /// Dimensions of the source image before any padding.
    pub width: usize,
    pub height: usize,
}

impl BlockGrid {
    pub fn new(width: usize, height: usize, k: usize, pad: PadPolicy) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("block side {k} < 2")));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage("zero-sized image".into()));
        }
        let divisible = width % k == 0 && height % k == 0;
        if !divisible && pad == PadPolicy::Reject {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} is not divisible into {k}x{k} blocks"
            )));
        }
        Ok(Self {
            k,
            blocks_x: width.div_ceil(k),
            blocks_y: height.div_ceil(k),
            width,
            height,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.blocks_x * self.blocks_y
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Top-left pixel of block `i` in padded coordinates.
    #[inline]
    pub fn origin(&self, i: usize) -> (usize, usize) {
        ((i % self.blocks_x) * self.k, (i / self.blocks_x) * self.k)
    }

    pub fn padded_dims(&self) -> (usize, usize) {
        (self.blocks_x * self.k, self.blocks_y * self.k)
    }

    pub fn is_padded(&self) -> bool {
        self.padded_dims() != (self.width, self.height)
    }
}

/// Split `img` into its k×k blocks in row-major order.
pub fn partition(img: &Image, k: usize, pad: PadPolicy) -> Result<(BlockGrid, Vec<Image>)> {
    let grid = BlockGrid::new(img.width, img.height, k, pad)?;
    let blocks = (0..grid.len())
        .map(|i| {
            let (x0, y0) = grid.origin(i);
            Image::from_fn(k, k, |x, y| {
                let sx = (x0 + x).min(img.width - 1);
                let sy = (y0 + y).min(img.height - 1);
                img.get(sx, sy)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((grid, blocks))
}

/// Inverse of [`partition`]; padded regions are cropped away.
pub fn assemble(grid: &BlockGrid, blocks: &[Image]) -> Result<Image> {
    if blocks.len() != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} blocks for a grid of {}",
            blocks.len(),
            grid.len()
        )));
    }
    if let Some(bad) = blocks
        .iter()
        .position(|b| b.width != grid.k || b.height != grid.k)
    {
        return Err(Error::DimensionMismatch(format!(
            "block {bad} is {}x{}, expected {k}x{k}",
            blocks[bad].width,
            blocks[bad].height,
            k = grid.k
        )));
    }
    let mut out = Image::filled(grid.width, grid.height, 0)?;
    for (i, block) in blocks.iter().enumerate() {
        let (x0, y0) = grid.origin(i);
        let h = grid.k.min(grid.height.saturating_sub(y0));
        let w = grid.k.min(grid.width.saturating_sub(x0));
        for y in 0..h {
            let dst = (y0 + y) * grid.width + x0;
            out.pixels[dst..dst + w].copy_from_slice(&block.pixels[y * grid.k..y * grid.k + w]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::new(w, h, (0..w * h).map(|_| rng.gen()).collect()).unwrap()
    }

    #[test]
    fn decodes_tiny_p5() {
        let bytes = b"P5\n2 2\n255\n\x00\xff\x80\x40";
        let img = Image::from_pgm_bytes(bytes).unwrap();
        assert_eq!(img, Image::new(2, 2, vec![0, 255, 128, 64]).unwrap());
    }

    #[test]
    fn header_comments_are_tolerated() {
        let bytes = b"P5\n# made by hand\n2 # width\n1\n255\n\x07\x08";
        let img = Image::from_pgm_bytes(bytes).unwrap();
        assert_eq!(img.pixels(), &[7, 8]);
        // comments are dropped when re-encoding
        assert_eq!(img.to_pgm_bytes(), b"P5\n2 1\n255\n\x07\x08");
    }

    #[test]
    fn single_pixel_encoding() {
        let img = Image::new(1, 1, vec![7]).unwrap();
        assert_eq!(img.to_pgm_bytes(), b"P5\n1 1\n255\n\x07");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            Image::from_pgm_bytes(b"P6\n1 1\n255\n\x00\x00\x00"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            Image::from_pgm_bytes(b"P5\n1 1\n65535\n\x00\x00"),
            Err(Error::BitDepth(65535))
        ));
        assert!(matches!(
            Image::from_pgm_bytes(b"P5\n4 4\n255\n\x00\x00"),
            Err(Error::Truncated {
                expected: 16,
                found: 2
            })
        ));
        assert!(matches!(
            Image::from_pgm_bytes(b"P5\nx 4\n255\n"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            Image::from_pgm_bytes(b"P5\n4"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(Image::new(0, 0, vec![]).is_err());
        assert!(Image::new(2, 2, vec![0; 3]).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_image("/nonexistent/definitely/missing.pgm"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn partition_counts() {
        let img = random_image(64, 64, 1);
        assert_eq!(partition(&img, 32, PadPolicy::Reject).unwrap().1.len(), 4);
        let big = Image::filled(512, 512, 3).unwrap();
        assert_eq!(partition(&big, 32, PadPolicy::Reject).unwrap().1.len(), 256);
        let odd = random_image(50, 50, 2);
        assert!(partition(&odd, 32, PadPolicy::Reject).is_err());
        assert!(partition(&img, 1, PadPolicy::Reject).is_err());
    }

    #[test]
    fn single_block_is_identity() {
        let img = random_image(16, 16, 3);
        let (grid, blocks) = partition(&img, 16, PadPolicy::Reject).unwrap();
        assert_eq!(blocks[0], img);
        assert_eq!(assemble(&grid, &blocks).unwrap(), img);
    }

    #[test]
    fn padded_round_trip_crops_back() {
        let img = random_image(50, 37, 4);
        let (grid, blocks) = partition(&img, 16, PadPolicy::ReplicateEdge).unwrap();
        assert_eq!((grid.blocks_x, grid.blocks_y), (4, 3));
        assert!(grid.is_padded());
        // replicated edge
        assert_eq!(blocks[3].get(15, 0), img.get(49, 0));
        assert_eq!(assemble(&grid, &blocks).unwrap(), img);
    }

    #[test]
    fn swapped_blocks_differ_exactly_on_their_regions() {
        let img = random_image(64, 64, 5);
        let (grid, mut blocks) = partition(&img, 32, PadPolicy::Reject).unwrap();
        blocks.swap(0, 1);
        let out = assemble(&grid, &blocks).unwrap();
        // independent oracle: pixel-by-pixel expectation
        for y in 0..64 {
            for x in 0..64 {
                let expected = match (x / 32, y / 32) {
                    (0, 0) => img.get(x + 32, y),
                    (1, 0) => img.get(x - 32, y),
                    _ => img.get(x, y),
                };
                assert_eq!(out.get(x, y), expected);
            }
        }
        assert_ne!(out, img);
    }

    #[test]
    fn assemble_rejects_mismatch() {
        let img = random_image(64, 64, 6);
        let (grid, mut blocks) = partition(&img, 32, PadPolicy::Reject).unwrap();
        blocks.pop();
        assert!(assemble(&grid, &blocks).is_err());
        blocks.push(Image::filled(16, 16, 0).unwrap());
        assert!(assemble(&grid, &blocks).is_err());
    }
}
