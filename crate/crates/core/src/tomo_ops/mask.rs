//! Row selectors `A` and `A†` in sinogram domain.
//!
//! Both keep the full-grid shape: `A` zero-fills unmeasured rows of a full
//! sinogram, `A†` embeds a measurement (given on the full grid, arbitrary
//! values on unmeasured rows) by zero-filling the same rows. Their
//! composition is the orthogonal projector onto the measured rows.

use super::types::{AngleMask, Sinogram};
use crate::error::Result;

fn zero_unmeasured(sino: &Sinogram, mask: &AngleMask) -> Result<Sinogram> {
    mask.check(sino)?;
    let mut out = sino.clone();
    for (r, &m) in mask.measured().iter().enumerate() {
        if !m {
            out.row_mut(r).fill(0.0);
        }
    }
    Ok(out)
}

/// `A`: keep measured rows, zero the rest.
pub fn mask_apply(sino: &Sinogram, mask: &AngleMask) -> Result<Sinogram> {
    zero_unmeasured(sino, mask)
}

/// `A†`: zero-fill embedding of a measurement back onto the full grid.
pub fn mask_pinv(meas: &Sinogram, mask: &AngleMask) -> Result<Sinogram> {
    zero_unmeasured(meas, mask)
}

/// `I - A†A`: keep unmeasured rows, zero the measured ones.
pub fn null_project(sino: &Sinogram, mask: &AngleMask) -> Result<Sinogram> {
    mask.check(sino)?;
    let mut out = sino.clone();
    for (r, &m) in mask.measured().iter().enumerate() {
        if m {
            out.row_mut(r).fill(0.0);
        }
    }
    Ok(out)
}

/// Euclidean norm of the measured rows of `a - b`.
pub fn measured_residual(a: &Sinogram, b: &Sinogram, mask: &AngleMask) -> Result<f64> {
    mask.check(a)?;
    a.ensure_same_shape(b)?;
    let mut acc = 0.0;
    for (r, &m) in mask.measured().iter().enumerate() {
        if m {
            acc += a
                .row(r)
                .iter()
                .zip(b.row(r))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>();
        }
    }
    Ok(acc.sqrt())
}
