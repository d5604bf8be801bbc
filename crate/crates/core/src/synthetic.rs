//! Seeded procedural test images.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::RasterImage;

/// Independent uniform `[0, 1)` channel values, full mask.
pub fn noise_image(width: usize, height: usize, seed: u64) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = RasterImage::new(width, height);
    for y in 0..height {
        for x in 0..width {
            img.set(x, y, [rng.gen(), rng.gen(), rng.gen()]);
        }
    }
    img
}

#[derive(Debug, Clone, Copy)]
struct Bump {
    cx: f64,
    cy: f64,
    sigma: f64,
    weight: [f64; 3],
}

/// Smooth color field (a few Gaussian bumps per channel over a linear
/// ramp) masked to a lopsided star-shaped region around the frame centre
/// whose radius never exceeds `radius_fraction * size`. The region has no
/// central symmetry, so odd-order shape moments do not vanish.
pub fn smooth_object_image(size: usize, radius_fraction: f64, seed: u64) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    let c = (s - 1.0) / 2.0;
    let radius = radius_fraction * s;
    let bumps: Vec<Bump> = (0..6)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            let a = rng.gen::<f64>() * 2.0 * PI;
            Bump {
                cx: c + r * a.cos(),
                cy: c + r * a.sin(),
                sigma: radius * rng.gen_range(0.25..0.6),
                weight: std::array::from_fn(|_| rng.gen_range(-0.4..0.4)),
            }
        })
        .collect();
    let ramp: [[f64; 2]; 3] =
        std::array::from_fn(|_| [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)]);
    let base: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.3..0.7));
    RasterImage::from_fn(size, size, |x, y| {
        let (x, y) = (x as f64, y as f64);
        let (u, v) = ((x - c) / radius, (y - c) / radius);
        std::array::from_fn(|k| {
            let mut val = base[k] + ramp[k][0] * u + ramp[k][1] * v;
            for b in &bumps {
                let d2 = (x - b.cx).powi(2) + (y - b.cy).powi(2);
                val += b.weight[k] * (-d2 / (2.0 * b.sigma * b.sigma)).exp();
            }
            val
        })
    })
    .with_mask(|x, y| {
        let (dx, dy) = (x as f64 - c, y as f64 - c);
        let t = dy.atan2(dx);
        let r = radius * (0.75 + 0.15 * (t - 0.4).cos() + 0.1 * (2.0 * t + 1.0).sin());
        dx * dx + dy * dy <= r * r
    })
}

/// Per-class object layout: colored Gaussian blobs whose summed density
/// defines the object mask.
#[derive(Debug, Clone)]
pub struct BlobObject {
    blobs: Vec<Blob>,
    texture: [Wave; 3],
    background: [f64; 3],
}

/// Low-amplitude plane wave added to one channel so object colors never
/// lie on a plane in RGB space.
#[derive(Debug, Clone, Copy)]
struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
    amplitude: f64,
}

#[derive(Debug, Clone, Copy)]
struct Blob {
    cx: f64,
    cy: f64,
    sx: f64,
    sy: f64,
    angle: f64,
    color: [f64; 3],
}

const DENSITY_THRESHOLD: f64 = 0.5;

impl BlobObject {
    /// Random object in unit coordinates centred on the origin, extent
    /// roughly `[-1, 1]^2`.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = rng.gen_range(4..=6);
        let blobs = (0..count)
            .map(|_| {
                let r = 0.45 * rng.gen::<f64>().sqrt();
                let a = rng.gen::<f64>() * 2.0 * PI;
                Blob {
                    cx: r * a.cos(),
                    cy: r * a.sin(),
                    sx: rng.gen_range(0.18..0.4),
                    sy: rng.gen_range(0.12..0.3),
                    angle: rng.gen::<f64>() * PI,
                    color: std::array::from_fn(|_| rng.gen_range(0.05..0.95)),
                }
            })
            .collect();
        let texture = std::array::from_fn(|_| {
            let a = rng.gen::<f64>() * 2.0 * PI;
            let k = rng.gen_range(3.0..7.0);
            Wave {
                kx: k * a.cos(),
                ky: k * a.sin(),
                phase: rng.gen::<f64>() * 2.0 * PI,
                amplitude: rng.gen_range(0.04..0.1),
            }
        });
        let background = std::array::from_fn(|_| rng.gen_range(0.3..0.6));
        BlobObject {
            blobs,
            texture,
            background,
        }
    }

    fn weights(&self, u: f64, v: f64) -> Vec<f64> {
        self.blobs
            .iter()
            .map(|b| {
                let (s, c) = b.angle.sin_cos();
                let (du, dv) = (u - b.cx, v - b.cy);
                let (a, bb) = ((c * du + s * dv) / b.sx, (-s * du + c * dv) / b.sy);
                (-(a * a + bb * bb) / 2.0).exp()
            })
            .collect()
    }

    /// Renders into a `size x size` frame with the object spanning about
    /// `extent * size / 2` pixels from the centre. Pixels where the blob
    /// density falls below threshold are masked out and painted with the
    /// background color.
    pub fn render(&self, size: usize, extent: f64) -> RasterImage {
        let c = (size as f64 - 1.0) / 2.0;
        let scale = extent * size as f64 / 2.0;
        let mut img = RasterImage::new(size, size);
        for y in 0..size {
            for x in 0..size {
                let (u, v) = ((x as f64 - c) / scale, (y as f64 - c) / scale);
                let w = self.weights(u, v);
                let total: f64 = w.iter().sum();
                if total < DENSITY_THRESHOLD {
                    img.set(x, y, self.background);
                    img.set_masked(x, y, false);
                    continue;
                }
                let rgb = std::array::from_fn(|k| {
                    let t = &self.texture[k];
                    let blend = self
                        .blobs
                        .iter()
                        .zip(&w)
                        .map(|(b, wi)| b.color[k] * wi)
                        .sum::<f64>()
                        / total;
                    blend + t.amplitude * (t.kx * u + t.ky * v + t.phase).sin()
                });
                img.set(x, y, rgb);
            }
        }
        img
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(noise_image(5, 4, 9), noise_image(5, 4, 9));
        assert_ne!(noise_image(5, 4, 9), noise_image(5, 4, 10));
        assert_eq!(
            smooth_object_image(32, 0.3, 1),
            smooth_object_image(32, 0.3, 1)
        );
        assert_eq!(
            BlobObject::random(3).render(40, 0.8),
            BlobObject::random(3).render(40, 0.8)
        );
    }

    #[test]
    fn object_mask_is_bounded_and_lopsided() {
        let img = smooth_object_image(64, 0.25, 0);
        let r = 0.25 * 64.0;
        let area = img.masked_count() as f64;
        assert!(area < PI * r * r && area > 0.25 * PI * r * r);
        assert!(img.is_masked(32, 32) && !img.is_masked(0, 0));
        let mirrored = (0..64)
            .flat_map(|y| (0..64).map(move |x| (x, y)))
            .filter(|&(x, y)| img.is_masked(x, y) != img.is_masked(63 - x, 63 - y))
            .count();
        assert!(mirrored > 0);
    }

    #[test]
    fn blob_object_has_interior_mask() {
        let img = BlobObject::random(7).render(64, 0.8);
        let n = img.masked_count();
        assert!(n > 200 && n < 64 * 64, "{n}");
        assert!((0..64).all(|i| !img.is_masked(i, 0) && !img.is_masked(0, i)));
    }

    #[test]
    fn blob_objects_are_color_nondegenerate() {
        for seed in 0..40 {
            let fv = crate::scdmi50(&BlobObject::random(seed).render(48, 0.55)).unwrap();
            assert_eq!(fv.valid_count(), 50, "seed {seed}");
        }
    }
}
