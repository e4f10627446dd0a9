//! Limited-angle tomography sinogram completion with a mean-reverting SDE
//! prior and measurement-space noise rectification.
//!
//! The crate is organised bottom-up:
//!
//! * [`tomo_ops`]: Radon transform, filtered back-projection, angular masks, noise.
//! * [`mrsde`]: schedules, forward marginals and reverse bridge steps.
//! * [`score_models`]: analytic and fitted clean-sinogram estimators.
//! * [`rectify`]: the guided reverse loop with rectified noise injection.
//! * [`phantoms_data`]: synthetic phantoms, acquisition simulation, datasets.
//! * [`pipeline`]: simulation, fitting, reconstruction and evaluation of whole datasets.
//! * [`metrics`]: PSNR, SSIM and paired comparisons.
//! * [`io`]: binary arrays and image export.
//! * [`cli`]: the `lact` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod io;
pub mod metrics;
pub mod mrsde;
pub mod phantoms_data;
pub mod pipeline;
pub mod rectify;
pub mod score_models;
pub mod tomo_ops;

pub use error::{Error, Result};
