//! Pixel-driven parallel-beam projector.
//!
//! Geometry: pixel `(col, row)` has centre `x = col - (N-1)/2`, `y = (N-1)/2 - row`
//! and projects onto detector coordinate `s = x cos(theta) + y sin(theta)`.
//! Detector bins have unit spacing and span the image width, centred on the
//! rotation axis; mass falling outside that span is dropped. Each pixel is
//! split into `SUBSAMPLE x SUBSAMPLE` sub-pixels that are splatted onto the two
//! nearest detector bins with linear weights. [`backproject`] interpolates at
//! the very same sub-pixel positions, so the pair is an exact transpose.

use rayon::prelude::*;

use super::types::{validate_angles, Image, Sinogram};
use crate::error::{Error, Result};

const SUBSAMPLE: usize = 2;

struct SubPixelGrid {
    offsets: Vec<f64>,
    weight: f64,
}

impl SubPixelGrid {
    fn new() -> Self {
        let step = 1.0 / SUBSAMPLE as f64;
        let offsets = (0..SUBSAMPLE)
            .map(|k| (k as f64 + 0.5) * step - 0.5)
            .collect();
        Self {
            offsets,
            weight: step * step,
        }
    }
}

#[inline]
fn detector_weights(s: f64, n_det: usize) -> Option<(usize, f64, Option<(usize, f64)>)> {
    let pos = s + (n_det as f64 - 1.0) / 2.0;
    if pos <= -1.0 || pos >= n_det as f64 {
        return None;
    }
    let lo = pos.floor();
    let frac = pos - lo;
    let lo = lo as isize;
    let hi = lo + 1;
    let first = (lo >= 0).then_some((lo as usize, 1.0 - frac));
    let second = ((hi as usize) < n_det && hi >= 0).then_some((hi as usize, frac));
    match (first, second) {
        (Some((i, w)), other) => Some((i, w, other)),
        (None, Some((i, w))) => Some((i, w, None)),
        (None, None) => None,
    }
}

/// Projection of `img` at a single angle (degrees, any finite value).
pub fn project_angle(img: &Image, angle_deg: f64, n_detectors: usize) -> Vec<f64> {
    let grid = SubPixelGrid::new();
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let n = img.width();
    let half_w = (img.width() as f64 - 1.0) / 2.0;
    let half_h = (img.height() as f64 - 1.0) / 2.0;
    let mut out = vec![0.0; n_detectors];
    for row in 0..img.height() {
        let y0 = half_h - row as f64;
        for col in 0..n {
            let v = img.get(col, row);
            if v == 0.0 {
                continue;
            }
            let x0 = col as f64 - half_w;
            for &dy in &grid.offsets {
                for &dx in &grid.offsets {
                    let s = (x0 + dx) * cos + (y0 - dy) * sin;
                    if let Some((i, w, second)) = detector_weights(s, n_detectors) {
                        out[i] += grid.weight * w * v;
                        if let Some((j, w2)) = second {
                            out[j] += grid.weight * w2 * v;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Radon transform of a square image at the given angles (degrees in [0, 180)).
pub fn radon(img: &Image, angles: &[f64], n_detectors: usize) -> Result<Sinogram> {
    if angles.is_empty() {
        return Err(Error::invalid("radon needs at least one angle"));
    }
    if !img.is_square() {
        return Err(Error::invalid(format!(
            "radon needs a square image, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    if n_detectors == 0 {
        return Err(Error::invalid("radon needs at least one detector"));
    }
    validate_angles(angles)?;
    if angles.iter().any(|a| !(0.0..180.0).contains(a)) {
        return Err(Error::invalid("radon angles must lie in [0, 180)"));
    }
    let rows: Vec<Vec<f64>> = angles
        .par_iter()
        .map(|&a| project_angle(img, a, n_detectors))
        .collect();
    Sinogram::new(angles.to_vec(), n_detectors, rows.concat())
}

/// Unfiltered back-projection (transpose of [`radon`]) onto an `out_size` square grid.
pub fn backproject(sino: &Sinogram, out_size: usize) -> Result<Image> {
    if out_size == 0 {
        return Err(Error::invalid("output size must be non-zero"));
    }
    let grid = SubPixelGrid::new();
    let n_det = sino.n_detectors();
    let trig: Vec<(f64, f64)> = sino
        .angles()
        .iter()
        .map(|a| a.to_radians().sin_cos())
        .collect();
    let half = (out_size as f64 - 1.0) / 2.0;
    let rows: Vec<Vec<f64>> = (0..out_size)
        .into_par_iter()
        .map(|row| {
            let y0 = half - row as f64;
            let mut out = vec![0.0; out_size];
            for (col, px) in out.iter_mut().enumerate() {
                let x0 = col as f64 - half;
                let mut acc = 0.0;
                for (r, &(sin, cos)) in trig.iter().enumerate() {
                    let proj = sino.row(r);
                    for &dy in &grid.offsets {
                        for &dx in &grid.offsets {
                            let s = (x0 + dx) * cos + (y0 - dy) * sin;
                            if let Some((i, w, second)) = detector_weights(s, n_det) {
                                acc += w * proj[i];
                                if let Some((j, w2)) = second {
                                    acc += w2 * proj[j];
                                }
                            }
                        }
                    }
                }
                *px = acc * grid.weight;
            }
            out
        })
        .collect();
    Image::new(out_size, out_size, rows.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomo_ops::uniform_angles;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disk(n: usize, radius: f64) -> Image {
        let c = (n as f64 - 1.0) / 2.0;
        let data = (0..n * n)
            .map(|k| {
                let (x, y) = ((k % n) as f64 - c, (k / n) as f64 - c);
                if x * x + y * y <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Image::new(n, n, data).unwrap()
    }

    #[test]
    fn zero_image_gives_zero_sinogram() {
        let s = radon(&Image::zeros(16, 16), &uniform_angles(12), 16).unwrap();
        assert!(s.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(radon(&Image::zeros(16, 16), &[], 16).is_err());
        assert!(radon(&Image::zeros(16, 8), &[0.0], 16).is_err());
        assert!(radon(&Image::zeros(16, 16), &[0.0, 190.0], 16).is_err());
    }

    #[test]
    fn centered_disk_rows_match() {
        let img = disk(64, 20.0);
        let s = radon(&img, &uniform_angles(36), 64).unwrap();
        let peak = s.data().iter().cloned().fold(0.0, f64::max);
        let first = s.row(0).to_vec();
        for r in 1..s.n_angles() {
            let dev = s
                .row(r)
                .iter()
                .zip(&first)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(dev / peak < 0.05, "row {r} deviates by {dev}");
        }
    }

    #[test]
    fn transpose_pair_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 24;
        let img = Image::new(n, n, (0..n * n).map(|_| rng.gen::<f64>() - 0.5).collect()).unwrap();
        let angles = uniform_angles(17);
        let s = Sinogram::new(
            angles.clone(),
            n,
            (0..17 * n).map(|_| rng.gen::<f64>() - 0.5).collect(),
        )
        .unwrap();
        let lhs = radon(&img, &angles, n).unwrap().dot(&s).unwrap();
        let bp = backproject(&s, n).unwrap();
        let rhs: f64 = img.data().iter().zip(bp.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }
}
