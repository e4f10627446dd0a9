//! Discrete parallel-beam operators: Radon transform, (filtered) back-projection,
//! angular masking and Gaussian measurement noise.

mod fbp;
mod mask;
mod noise;
mod radon;
mod types;

pub use fbp::{fbp, filter_sinogram, FbpFilter};
pub use mask::{mask_apply, mask_pinv, measured_residual, null_project};
pub use noise::{add_noise, sigma_for_snr, signal_power, NoiseSpec};
pub use radon::{backproject, project_angle, radon};
pub use types::{uniform_angles, AngleMask, Image, Sinogram};
