use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mrsde::rng_from_seed;
use crate::tomo_ops::Image;

/// Ellipse in normalised coordinates (x right, y up, both in [-1, 1]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub intensity: f64,
    pub semi_x: f64,
    pub semi_y: f64,
    pub center_x: f64,
    pub center_y: f64,
    pub rotation_deg: f64,
}

impl Ellipse {
    const fn new(intensity: f64, semi_x: f64, semi_y: f64, cx: f64, cy: f64, rot: f64) -> Self {
        Self {
            intensity,
            semi_x,
            semi_y,
            center_x: cx,
            center_y: cy,
            rotation_deg: rot,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (sin, cos) = self.rotation_deg.to_radians().sin_cos();
        let (dx, dy) = (x - self.center_x, y - self.center_y);
        let u = dx * cos + dy * sin;
        let v = -dx * sin + dy * cos;
        (u / self.semi_x).powi(2) + (v / self.semi_y).powi(2) <= 1.0
    }
}

/// Modified (high-contrast) Shepp-Logan table; intensities are additive.
pub const SHEPP_LOGAN: [Ellipse; 10] = [
    Ellipse::new(1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    Ellipse::new(-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    Ellipse::new(-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    Ellipse::new(-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    Ellipse::new(0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    Ellipse::new(0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    Ellipse::new(0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    Ellipse::new(0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    Ellipse::new(0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    Ellipse::new(0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhantomKind {
    SheppLogan,
    RandomEllipses,
    /// Superposition of Gaussian blobs; a stand-in for chromatin-like texture.
    #[default]
    BlobField,
}

impl std::str::FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shepp-logan" => Ok(PhantomKind::SheppLogan),
            "random-ellipses" => Ok(PhantomKind::RandomEllipses),
            "blob-field" => Ok(PhantomKind::BlobField),
            other => Err(Error::invalid(format!("unknown phantom kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    pub kind: PhantomKind,
    pub size: usize,
}

/// Normalised coordinate of a pixel centre.
pub fn pixel_coord(col: usize, row: usize, size: usize) -> (f64, f64) {
    let c = (size as f64 - 1.0) / 2.0;
    let half = size as f64 / 2.0;
    ((col as f64 - c) / half, (c - row as f64) / half)
}

fn rasterize_ellipses(ellipses: &[Ellipse], size: usize) -> Vec<f64> {
    let mut data = vec![0.0; size * size];
    for row in 0..size {
        for col in 0..size {
            let (x, y) = pixel_coord(col, row, size);
            data[row * size + col] = ellipses
                .iter()
                .filter(|e| e.contains(x, y))
                .map(|e| e.intensity)
                .sum::<f64>()
                .clamp(0.0, 1.0);
        }
    }
    data
}

fn random_ellipses(size: usize, rng: &mut impl Rng) -> Vec<f64> {
    let count = rng.gen_range(5..=10);
    let ellipses: Vec<Ellipse> = (0..count)
        .map(|_| {
            let r = 0.6 * rng.gen::<f64>().sqrt();
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            Ellipse {
                intensity: rng.gen_range(0.1..0.6),
                semi_x: rng.gen_range(0.05..0.35),
                semi_y: rng.gen_range(0.05..0.35),
                center_x: r * phi.cos(),
                center_y: r * phi.sin(),
                rotation_deg: rng.gen_range(0.0..180.0),
            }
        })
        .collect();
    rasterize_ellipses(&ellipses, size)
}

fn blob_field(size: usize, rng: &mut impl Rng) -> Vec<f64> {
    struct Blob {
        x: f64,
        y: f64,
        inv_two_var: f64,
        amp: f64,
    }
    let count = rng.gen_range(20..=40);
    let blobs: Vec<Blob> = (0..count)
        .map(|_| {
            let r = 0.7 * rng.gen::<f64>().sqrt();
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            let width: f64 = rng.gen_range(0.03..0.12);
            Blob {
                x: r * phi.cos(),
                y: r * phi.sin(),
                inv_two_var: 1.0 / (2.0 * width * width),
                amp: rng.gen_range(0.3..1.0),
            }
        })
        .collect();
    let mut data = vec![0.0; size * size];
    for row in 0..size {
        for col in 0..size {
            let (x, y) = pixel_coord(col, row, size);
            data[row * size + col] = blobs
                .iter()
                .map(|b| b.amp * (-((x - b.x).powi(2) + (y - b.y).powi(2)) * b.inv_two_var).exp())
                .sum();
        }
    }
    let peak = data.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        data.iter_mut().for_each(|v| *v /= peak);
    }
    data
}

/// Deterministic phantom with intensities in [0, 1]. Shepp-Logan ignores the seed.
pub fn generate_phantom(spec: &Phantom, seed: u64) -> Result<Image> {
    if spec.size < 16 {
        return Err(Error::invalid(format!(
            "phantom size must be >= 16, got {}",
            spec.size
        )));
    }
    let mut rng = rng_from_seed(seed);
    let data = match spec.kind {
        PhantomKind::SheppLogan => rasterize_ellipses(&SHEPP_LOGAN, spec.size),
        PhantomKind::RandomEllipses => random_ellipses(spec.size, &mut rng),
        PhantomKind::BlobField => blob_field(spec.size, &mut rng),
    };
    Image::new(spec.size, spec.size, data)
}
