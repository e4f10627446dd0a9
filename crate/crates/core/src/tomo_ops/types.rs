use crate::error::{Error, Result};

/// Square (for reconstruction targets) scalar field stored row-major, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be non-zero"));
        }
        if data.len() != width * height {
            return Err(Error::shape(
                format!("{} values ({width}x{height})", width * height),
                format!("{} values", data.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("image contains non-finite values".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Rescales values linearly so the minimum maps to 0 and the maximum to 1.
    /// A constant image maps to all zeros.
    pub fn normalized(&self) -> Image {
        let (lo, hi) = self
            .data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = hi - lo;
        let data = if span > 0.0 {
            self.data.iter().map(|v| (v - lo) / span).collect()
        } else {
            vec![0.0; self.data.len()]
        };
        Image {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn clamped(&self, lo: f64, hi: f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| v.clamp(lo, hi)).collect(),
        }
    }
}

/// Parallel-beam sinogram: one row per projection angle (degrees), one column per detector bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    angles: Vec<f64>,
    n_detectors: usize,
    data: Vec<f64>,
}

impl Sinogram {
    pub fn new(angles: Vec<f64>, n_detectors: usize, data: Vec<f64>) -> Result<Self> {
        validate_angles(&angles)?;
        if n_detectors == 0 {
            return Err(Error::invalid("sinogram needs at least one detector"));
        }
        if data.len() != angles.len() * n_detectors {
            return Err(Error::shape(
                format!("{}x{}", angles.len(), n_detectors),
                format!("{} values", data.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("sinogram contains non-finite values".into()));
        }
        Ok(Self {
            angles,
            n_detectors,
            data,
        })
    }

    pub fn zeros(angles: Vec<f64>, n_detectors: usize) -> Result<Self> {
        let n = angles.len() * n_detectors;
        Self::new(angles, n_detectors, vec![0.0; n])
    }

    /// Same geometry, new payload.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        if data.len() != self.data.len() {
            return Err(Error::shape(
                self.shape_str(),
                format!("{} values", data.len()),
            ));
        }
        Ok(Self {
            angles: self.angles.clone(),
            n_detectors: self.n_detectors,
            data,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            angles: self.angles.clone(),
            n_detectors: self.n_detectors,
            data: vec![0.0; self.data.len()],
        }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    pub fn n_detectors(&self) -> usize {
        self.n_detectors
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_detectors..(i + 1) * self.n_detectors]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.n_detectors;
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn same_shape(&self, other: &Sinogram) -> bool {
        self.n_detectors == other.n_detectors && self.angles == other.angles
    }

    pub fn ensure_same_shape(&self, other: &Sinogram) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(self.shape_str(), other.shape_str()))
        }
    }

    pub(crate) fn shape_str(&self) -> String {
        format!("{}x{} sinogram", self.n_angles(), self.n_detectors)
    }

    /// Elementwise combination of two same-shaped sinograms.
    pub fn zip_map(&self, other: &Sinogram, f: impl Fn(f64, f64) -> f64) -> Result<Sinogram> {
        self.ensure_same_shape(other)?;
        Ok(Sinogram {
            angles: self.angles.clone(),
            n_detectors: self.n_detectors,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Sinogram {
        Sinogram {
            angles: self.angles.clone(),
            n_detectors: self.n_detectors,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, k: f64) -> Sinogram {
        self.map(|v| v * k)
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Sinogram) -> Result<f64> {
        self.ensure_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }
}

pub(crate) fn validate_angles(angles: &[f64]) -> Result<()> {
    if angles.is_empty() {
        return Err(Error::invalid("angle list is empty"));
    }
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::invalid("angles must be finite"));
    }
    if angles.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("angles must be strictly increasing"));
    }
    Ok(())
}

/// Uniform grid of `count` angles over [0°, 180°).
pub fn uniform_angles(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| 180.0 * i as f64 / count as f64)
        .collect()
}

/// Measured-angle indicator over a full acquisition grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleMask {
    full_angles: Vec<f64>,
    measured: Vec<bool>,
}

impl AngleMask {
    pub fn new(full_angles: Vec<f64>, measured: Vec<bool>) -> Result<Self> {
        validate_angles(&full_angles)?;
        if measured.len() != full_angles.len() {
            return Err(Error::shape(
                format!("{} indicators", full_angles.len()),
                format!("{} indicators", measured.len()),
            ));
        }
        if !measured.iter().any(|&m| m) {
            return Err(Error::invalid("mask must measure at least one angle"));
        }
        Ok(Self {
            full_angles,
            measured,
        })
    }

    pub fn all(full_angles: Vec<f64>) -> Result<Self> {
        let n = full_angles.len();
        Self::new(full_angles, vec![true; n])
    }

    pub fn full_angles(&self) -> &[f64] {
        &self.full_angles
    }

    pub fn measured(&self) -> &[bool] {
        &self.measured
    }

    pub fn is_measured(&self, row: usize) -> bool {
        self.measured[row]
    }

    pub fn measured_count(&self) -> usize {
        self.measured.iter().filter(|&&m| m).count()
    }

    pub fn measured_angles(&self) -> Vec<f64> {
        self.full_angles
            .iter()
            .zip(&self.measured)
            .filter(|(_, &m)| m)
            .map(|(&a, _)| a)
            .collect()
    }

    pub(crate) fn check(&self, sino: &Sinogram) -> Result<()> {
        if sino.angles() != self.full_angles.as_slice() {
            return Err(Error::shape(
                format!(
                    "sinogram on the mask's {}-angle grid",
                    self.full_angles.len()
                ),
                format!("sinogram with {} angles", sino.n_angles()),
            ));
        }
        Ok(())
    }
}
