use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mrsde::rng_from_seed;
use crate::tomo_ops::{
    add_noise, mask_apply, radon, uniform_angles, AngleMask, Image, NoiseSpec, Sinogram,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionProtocol {
    /// Angles on the uniform [0°, 180°) grid.
    pub full_view_count: usize,
    /// Inclusive window (degrees) from which measured angles are drawn.
    pub limited_range: (f64, f64),
    pub limited_count: usize,
    pub snr_db_range: (f64, f64),
}

impl Default for AcquisitionProtocol {
    /// 61 of the 91 one-degree angles in [45°, 135°], 5–15 dB SNR.
    fn default() -> Self {
        Self {
            full_view_count: 180,
            limited_range: (45.0, 135.0),
            limited_count: 61,
            snr_db_range: (5.0, 15.0),
        }
    }
}

impl AcquisitionProtocol {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.limited_range;
        if !(0.0..180.0).contains(&lo) || !(0.0..180.0).contains(&hi) || lo >= hi {
            return Err(Error::invalid(format!(
                "limited range ({lo}, {hi}) must satisfy 0 <= lo < hi < 180"
            )));
        }
        let (slo, shi) = self.snr_db_range;
        if slo.is_nan() || shi.is_nan() || slo > shi {
            return Err(Error::invalid("snr range must satisfy lo <= hi"));
        }
        if self.full_view_count == 0 || self.limited_count == 0 {
            return Err(Error::invalid("angle counts must be >= 1"));
        }
        Ok(())
    }

    /// Rows of the full grid that lie inside the limited window.
    pub fn candidate_rows(&self) -> Vec<usize> {
        let (lo, hi) = self.limited_range;
        uniform_angles(self.full_view_count)
            .iter()
            .enumerate()
            .filter(|(_, &a)| a >= lo - 1e-9 && a <= hi + 1e-9)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Simulated limited-angle acquisition of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    /// Noiseless full-view sinogram, normalised to peak 1.
    pub x0_full: Sinogram,
    /// Noisy measurement, zero on unmeasured rows.
    pub y: Sinogram,
    pub mask: AngleMask,
    pub sigma_y: f64,
    pub snr_db: f64,
    /// Factor mapping [`full_sinogram`] values to the normalised units above.
    pub scale: f64,
}

/// Sinograms are stored in units of the image width (line integral / size),
/// keeping values of [0, 1] phantoms at order one.
pub fn full_sinogram(img: &Image, full_view_count: usize) -> Result<Sinogram> {
    let raw = radon(img, &uniform_angles(full_view_count), img.width())?;
    Ok(raw.scaled(1.0 / img.width() as f64))
}

pub fn simulate_acquisition(
    img: &Image,
    proto: &AcquisitionProtocol,
    seed: u64,
) -> Result<Acquisition> {
    proto.validate()?;
    let candidates = proto.candidate_rows();
    if proto.limited_count > candidates.len() {
        return Err(Error::invalid(format!(
            "{} measured angles requested but only {} grid angles lie in [{}, {}]",
            proto.limited_count,
            candidates.len(),
            proto.limited_range.0,
            proto.limited_range.1
        )));
    }
    let raw = full_sinogram(img, proto.full_view_count)?;
    let peak = raw.data().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::invalid(
            "cannot normalise the sinogram of an empty image",
        ));
    }
    let scale = 1.0 / peak;
    let x0_full = raw.scaled(scale);
    let mut rng = rng_from_seed(seed);
    let mut measured = vec![false; proto.full_view_count];
    for k in sample_indices(&mut rng, candidates.len(), proto.limited_count) {
        measured[candidates[k]] = true;
    }
    let mask = AngleMask::new(x0_full.angles().to_vec(), measured)?;
    let (slo, shi) = proto.snr_db_range;
    let snr_db = if slo == shi {
        slo
    } else {
        rng.gen_range(slo..shi)
    };
    let noise_seed = rng.gen::<u64>();
    let (noisy, sigma_y) = add_noise(&x0_full, &NoiseSpec::snr(snr_db, noise_seed), Some(&mask))?;
    let y = mask_apply(&noisy, &mask)?;
    Ok(Acquisition {
        x0_full,
        y,
        mask,
        sigma_y,
        snr_db,
        scale,
    })
}

/// Extends the angle axis to `target_rows` by wrapping: row `k >= n` copies
/// row `k mod n` with the detector axis reversed on odd wraps, using
/// R(theta + 180°, s) = R(theta, -s). Assumes a uniform [0°, 180°) grid.
pub fn pad_theta_circular(sino: &Sinogram, target_rows: usize) -> Result<Sinogram> {
    let n = sino.n_angles();
    if target_rows < n {
        return Err(Error::invalid(format!(
            "target {target_rows} rows is smaller than the {n}-row sinogram"
        )));
    }
    let nd = sino.n_detectors();
    let mut angles = Vec::with_capacity(target_rows);
    let mut data = Vec::with_capacity(target_rows * nd);
    for k in 0..target_rows {
        let (wrap, src) = (k / n, k % n);
        angles.push(sino.angles()[src] + 180.0 * wrap as f64);
        let row = sino.row(src);
        if wrap % 2 == 0 {
            data.extend_from_slice(row);
        } else {
            data.extend(row.iter().rev());
        }
    }
    Sinogram::new(angles, nd, data)
}

/// Inverse of [`pad_theta_circular`]: keeps the first `rows` rows.
pub fn crop_theta(sino: &Sinogram, rows: usize) -> Result<Sinogram> {
    if rows == 0 || rows > sino.n_angles() {
        return Err(Error::invalid(format!(
            "cannot crop {} rows to {rows}",
            sino.n_angles()
        )));
    }
    let nd = sino.n_detectors();
    Sinogram::new(
        sino.angles()[..rows].to_vec(),
        nd,
        sino.data()[..rows * nd].to_vec(),
    )
}
