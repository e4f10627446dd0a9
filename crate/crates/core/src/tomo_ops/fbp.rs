use std::f64::consts::PI;
use std::str::FromStr;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::radon::backproject;
use super::types::{Image, Sinogram};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FbpFilter {
    #[default]
    RamLak,
    Hann,
    None,
}

impl FromStr for FbpFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ram-lak" | "ramlak" => Ok(FbpFilter::RamLak),
            "hann" => Ok(FbpFilter::Hann),
            "none" => Ok(FbpFilter::None),
            other => Err(Error::invalid(format!("unknown filter '{other}'"))),
        }
    }
}

/// Frequency response of the band-limited ramp, built from the spatial
/// Ram-Lak kernel (1/4 at the origin, -1/(pi k)^2 at odd k) so that the DC
/// term is correct.
fn ramp_response(padded: usize, filter: FbpFilter) -> Vec<f64> {
    let mut kernel = vec![Complex::new(0.0, 0.0); padded];
    kernel[0].re = 0.25;
    for k in (1..padded / 2).step_by(2) {
        let v = -1.0 / (PI * k as f64).powi(2);
        kernel[k].re = v;
        kernel[padded - k].re = v;
    }
    FftPlanner::new()
        .plan_fft_forward(padded)
        .process(&mut kernel);
    kernel
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let window = match filter {
                FbpFilter::Hann => 0.5 + 0.5 * (2.0 * PI * k as f64 / padded as f64).cos(),
                _ => 1.0,
            };
            c.re * window
        })
        .collect()
}

/// Applies the ramp filter row by row, zero-padding to the next power of two ≥ 2·n_detectors.
pub fn filter_sinogram(sino: &Sinogram, filter: FbpFilter) -> Sinogram {
    if filter == FbpFilter::None {
        return sino.clone();
    }
    let n = sino.n_detectors();
    let padded = (2 * n).next_power_of_two();
    let response = ramp_response(padded, filter);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(padded);
    let inv = planner.plan_fft_inverse(padded);
    let mut out = sino.clone();
    let mut buf = vec![Complex::new(0.0, 0.0); padded];
    for r in 0..sino.n_angles() {
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (b, &v) in buf.iter_mut().zip(sino.row(r)) {
            b.re = v;
        }
        fwd.process(&mut buf);
        for (b, &h) in buf.iter_mut().zip(&response) {
            *b *= h;
        }
        inv.process(&mut buf);
        for (o, b) in out.row_mut(r).iter_mut().zip(&buf) {
            *o = b.re / padded as f64;
        }
    }
    out
}

/// Filtered back-projection onto an `out_size` square grid.
///
/// The angular weight is `pi / n_angles`, i.e. the rows are assumed to cover
/// [0°, 180°) uniformly; zero-filled rows of a limited-angle sinogram simply
/// contribute nothing.
pub fn fbp(sino: &Sinogram, filter: FbpFilter, out_size: usize) -> Result<Image> {
    if out_size != sino.n_detectors() {
        return Err(Error::invalid(format!(
            "output size {out_size} does not match the {}-detector geometry",
            sino.n_detectors()
        )));
    }
    let filtered = filter_sinogram(sino, filter);
    let bp = backproject(&filtered, out_size)?;
    let scale = PI / sino.n_angles() as f64;
    let data = bp.into_data().into_iter().map(|v| v * scale).collect();
    Image::new(out_size, out_size, data)
}
