//! Real-valued three-channel rasters with an integration mask, plus binary
//! PPM (P6, 8-bit) input and output.

use std::path::Path;

use crate::error::{Error, Result};

/// Width x height RGB image with real channel values and a validity mask.
/// Pixel `(x, y)` is stored at `y * width + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: [Vec<f64>; 3],
    mask: Vec<bool>,
}

impl RasterImage {
    /// All-zero image with every pixel masked in.
    pub fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        RasterImage {
            width,
            height,
            channels: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            mask: vec![true; n],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> Self {
        let mut img = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                img.set(x, y, f(x, y));
            }
        }
        img
    }

    pub fn from_planes(
        width: usize,
        height: usize,
        channels: [Vec<f64>; 3],
        mask: Vec<bool>,
    ) -> Result<Self> {
        let n = width * height;
        if channels.iter().any(|c| c.len() != n) || mask.len() != n {
            return Err(Error::Format(format!(
                "plane sizes do not match {width}x{height}"
            )));
        }
        Ok(RasterImage {
            width,
            height,
            channels,
            mask,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        let i = self.index(x, y);
        [
            self.channels[0][i],
            self.channels[1][i],
            self.channels[2][i],
        ]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = self.index(x, y);
        for (c, v) in self.channels.iter_mut().zip(rgb) {
            c[i] = v;
        }
    }

    #[inline]
    pub fn is_masked(&self, x: usize, y: usize) -> bool {
        self.mask[self.index(x, y)]
    }

    pub fn set_masked(&mut self, x: usize, y: usize, on: bool) {
        let i = self.index(x, y);
        self.mask[i] = on;
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[Vec<f64>; 3] {
        &self.channels
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn with_mask(mut self, f: impl Fn(usize, usize) -> bool) -> Self {
        for y in 0..self.height {
            for x in 0..self.width {
                let i = self.index(x, y);
                self.mask[i] = f(x, y);
            }
        }
        self
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Iterates `(x, y, rgb)` over masked pixels in row-major order.
    pub fn masked_pixels(&self) -> impl Iterator<Item = (usize, usize, [f64; 3])> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.width)
                .filter_map(move |x| self.is_masked(x, y).then(|| (x, y, self.get(x, y))))
        })
    }

    /// Luminance `(R + G + B) / 3` per pixel.
    pub fn luminance(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| (self.channels[0][i] + self.channels[1][i] + self.channels[2][i]) / 3.0)
            .collect()
    }

    /// Nearest-neighbour replication by an integer factor (each pixel becomes
    /// a `factor x factor` block, mask included).
    pub fn upsample_nearest(&self, factor: usize) -> Self {
        let mut out = RasterImage::new(self.width * factor, self.height * factor);
        for y in 0..out.height {
            for x in 0..out.width {
                out.set(x, y, self.get(x / factor, y / factor));
                out.set_masked(x, y, self.is_masked(x / factor, y / factor));
            }
        }
        out
    }

    /// Block average by an integer factor; a block is masked only if all of
    /// its pixels are.
    pub fn downsample_mean(&self, factor: usize) -> Self {
        let (w, h) = (self.width / factor, self.height / factor);
        let mut out = RasterImage::new(w, h);
        let norm = (factor * factor) as f64;
        for y in 0..h {
            for x in 0..w {
                let mut acc = [0.0; 3];
                let mut all = true;
                for dy in 0..factor {
                    for dx in 0..factor {
                        let (sx, sy) = (x * factor + dx, y * factor + dy);
                        let v = self.get(sx, sy);
                        for c in 0..3 {
                            acc[c] += v[c];
                        }
                        all &= self.is_masked(sx, sy);
                    }
                }
                out.set(x, y, acc.map(|a| a / norm));
                out.set_masked(x, y, all);
            }
        }
        out
    }

    pub fn read_ppm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        decode_ppm(&bytes).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, encode_ppm(self)).map_err(|e| Error::io(path, e))
    }
}

/// Decodes binary PPM (`P6`, maxval 1..=255). Channel values become `v / maxval`.
pub fn decode_ppm(bytes: &[u8]) -> Result<RasterImage> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos)?;
    if magic != b"P6" {
        return Err(Error::Format(format!(
            "expected P6 magic, found `{}`",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = parse_header_number(next_token(bytes, &mut pos)?)?;
    let height = parse_header_number(next_token(bytes, &mut pos)?)?;
    let maxval = parse_header_number(next_token(bytes, &mut pos)?)?;
    if width == 0 || height == 0 {
        return Err(Error::Format("zero image dimension".into()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!(
            "maxval {maxval} unsupported (8-bit only)"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Format("missing whitespace after header".into()));
    }
    pos += 1;
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| Error::Format("image dimensions overflow".into()))?;
    let data = bytes
        .get(pos..pos + need)
        .ok_or_else(|| Error::Format(format!("truncated raster: need {need} bytes")))?;
    if let Some(&v) = data.iter().find(|&&v| v as usize > maxval) {
        return Err(Error::Format(format!("sample {v} exceeds maxval {maxval}")));
    }
    let mut img = RasterImage::new(width, height);
    let scale = maxval as f64;
    for (i, px) in data.chunks_exact(3).enumerate() {
        img.set(
            i % width,
            i / width,
            [px[0], px[1], px[2]].map(|v| v as f64 / scale),
        );
    }
    Ok(img)
}

/// Encodes as P6 with maxval 255, clamping channels to `[0, 1]`.
pub fn encode_ppm(img: &RasterImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.reserve(img.len() * 3);
    for y in 0..img.height() {
        for x in 0..img.width() {
            for v in img.get(x, y) {
                out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    out
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("truncated header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn parse_header_number(token: &[u8]) -> Result<usize> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| {
            Error::Format(format!(
                "bad header number `{}`",
                String::from_utf8_lossy(token)
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip_preserves_8bit_values() {
        let img = RasterImage::from_fn(4, 3, |x, y| {
            [x as f64 / 255.0, y as f64 * 10.0 / 255.0, 1.0]
        });
        let back = decode_ppm(&encode_ppm(&img)).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P6 # comment\n2 1\n# another\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0, 0, 0, 255]);
        let img = decode_ppm(&bytes).unwrap();
        assert_eq!(img.get(0, 0), [1.0, 0.0, 0.0]);
        assert_eq!(img.get(1, 0), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(decode_ppm(b"P3\n1 1\n255\n1 2 3").is_err());
        assert!(decode_ppm(b"P6\n2 2\n255\n\x00\x00").is_err());
        assert!(decode_ppm(b"P6\n1 1\n65535\n\x00\x00\x00\x00\x00\x00").is_err());
        assert!(decode_ppm(b"P6\n1").is_err());
    }

    #[test]
    fn maxval_rescaled_to_unit_range() {
        let mut bytes = b"P6\n1 1\n15\n".to_vec();
        bytes.extend_from_slice(&[15, 0, 5]);
        let img = decode_ppm(&bytes).unwrap();
        assert_eq!(img.get(0, 0), [1.0, 0.0, 5.0 / 15.0]);
        assert!(decode_ppm(b"P6\n1 1\n15\n\x10\x00\x00").is_err());
    }

    #[test]
    fn nearest_upsample_replicates_blocks() {
        let img =
            RasterImage::from_fn(2, 2, |x, y| [x as f64, y as f64, 0.5]).with_mask(|x, _| x == 0);
        let up = img.upsample_nearest(2);
        assert_eq!(up.width(), 4);
        assert_eq!(up.get(3, 1), [1.0, 0.0, 0.5]);
        assert!(up.is_masked(1, 3));
        assert!(!up.is_masked(2, 0));
        assert_eq!(up.masked_count(), 8);
    }
}
