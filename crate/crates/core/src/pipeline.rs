//! End-to-end building blocks shared by the command-line tool and tests:
//! dataset simulation, model fitting, per-record reconstruction, evaluation
//! and the beta x noise-misestimation sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{
    psnr_image, psnr_sinogram, ssim_image, ssim_sinogram, RecordMetrics, SsimParams,
};
use crate::mrsde::Schedule;
use crate::phantoms_data::{
    full_sinogram, generate_phantom, simulate_acquisition, AcquisitionProtocol, DatasetRecord,
    Phantom,
};
use crate::rectify::{reconstruct_with_mu, GuidanceConfig};
use crate::score_models::{fit_on_examples, LinearDenoiser, Patch, ScoreModel};
use crate::tomo_ops::{fbp, measured_residual, FbpFilter, Image, Sinogram};

/// Seed of record `index` in a set generated from `base` (SplitMix64 mix).
pub fn record_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn simulate_record(
    phantom: &Phantom,
    proto: &AcquisitionProtocol,
    seed: u64,
    keep_phantom: bool,
) -> Result<DatasetRecord> {
    let img = generate_phantom(phantom, seed)?;
    let acq = simulate_acquisition(&img, proto, seed)?;
    Ok(DatasetRecord {
        seed,
        sigma_y: acq.sigma_y,
        snr_db: acq.snr_db,
        x0_full: acq.x0_full,
        y: acq.y,
        mask: acq.mask,
        phantom: keep_phantom.then_some(img),
    })
}

/// `count` records in index order; record `i` uses `record_seed(seed, i)`.
pub fn simulate_dataset(
    phantom: &Phantom,
    proto: &AcquisitionProtocol,
    count: usize,
    seed: u64,
    keep_phantom: bool,
) -> Result<Vec<DatasetRecord>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| simulate_record(phantom, proto, record_seed(seed, i), keep_phantom))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Number of simulated training records.
    pub examples: usize,
    /// Forward draws per record and step.
    pub draws: usize,
    pub ridge: f64,
    pub half_angle: usize,
    pub half_detector: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            examples: 20,
            draws: 1,
            ridge: 1e-6,
            half_angle: 2,
            half_detector: 2,
            seed: 0x05EE_DF17,
        }
    }
}

impl FitConfig {
    pub fn patch(&self) -> Patch {
        Patch {
            half_angle: self.half_angle,
            half_detector: self.half_detector,
        }
    }
}

/// Fits a linear denoiser on freshly simulated training records, using the
/// observation as the diffusion mean exactly as reconstruction does.
pub fn fit_model(
    phantom: &Phantom,
    proto: &AcquisitionProtocol,
    sched: &Schedule,
    fit: &FitConfig,
    mu_source: MuSource,
) -> Result<LinearDenoiser> {
    let records = simulate_dataset(phantom, proto, fit.examples, fit.seed, false)?;
    let examples = records
        .iter()
        .map(|r| Ok((r.x0_full.clone(), mu_source.mu(r)?)))
        .collect::<Result<Vec<_>>>()?;
    fit_on_examples(
        &examples,
        sched,
        fit.patch(),
        fit.ridge,
        fit.draws,
        fit.seed,
    )
}

/// Mean of the diffusion for a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuSource {
    /// The zero-filled noisy observation.
    #[default]
    Observation,
    /// Reprojection of the limited-angle FBP of the observation.
    Fbp,
}

impl MuSource {
    pub fn mu(self, rec: &DatasetRecord) -> Result<Sinogram> {
        match self {
            MuSource::Observation => Ok(rec.y.clone()),
            MuSource::Fbp => {
                let n = rec.y.n_detectors();
                let img = fbp(&rec.y, FbpFilter::RamLak, n)?;
                // fbp(y) carries a 1/n factor from the sinogram units; undo it.
                Ok(full_sinogram(&img, rec.y.n_angles())?.scaled(n as f64))
            }
        }
    }
}

pub fn reconstruct_record(
    rec: &DatasetRecord,
    model: &dyn ScoreModel,
    sched: &Schedule,
    cfg: &GuidanceConfig,
    mu_source: MuSource,
    seed: u64,
) -> Result<Sinogram> {
    let mu = mu_source.mu(rec)?;
    reconstruct_with_mu(&rec.y, &mu, &rec.mask, model, sched, cfg, seed)
}

/// FBP images of a reconstruction and its reference, both mapped through the
/// reference's value range onto [0, 1].
pub fn normalized_fbp_pair(
    recon: &Sinogram,
    truth: &Sinogram,
    filter: FbpFilter,
) -> Result<(Image, Image)> {
    let n = truth.n_detectors();
    let ref_img = fbp(truth, filter, n)?;
    let rec_img = fbp(recon, filter, n)?;
    let (lo, hi) = ref_img
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    if !(hi > lo) {
        return Err(Error::Numeric(
            "reference image has no dynamic range".into(),
        ));
    }
    let map = |img: &Image| {
        Image::new(
            n,
            n,
            img.data()
                .iter()
                .map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
                .collect(),
        )
    };
    Ok((map(&rec_img)?, map(&ref_img)?))
}

/// Sinogram-domain and image-domain metrics of one reconstruction against the
/// record's full-view ground truth.
pub fn evaluate_record(
    index: usize,
    recon: &Sinogram,
    rec: &DatasetRecord,
    filter: FbpFilter,
) -> Result<RecordMetrics> {
    let p = SsimParams::default();
    let (rec_img, ref_img) = normalized_fbp_pair(recon, &rec.x0_full, filter)?;
    Ok(RecordMetrics {
        index,
        sino_psnr: psnr_sinogram(recon, &rec.x0_full, p.data_range)?,
        sino_ssim: ssim_sinogram(recon, &rec.x0_full, &p)?,
        image_psnr: psnr_image(&rec_img, &ref_img, p.data_range)?,
        image_ssim: ssim_image(&rec_img, &ref_img, &p)?,
        measured_residual: measured_residual(recon, &rec.y, &rec.mask)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub betas: Vec<f64>,
    /// Relative noise-estimate errors; the estimate used is `sigma_y / (1 + err)`.
    pub errors: Vec<f64>,
    /// Runs averaged per cell; run `i` uses record `i mod len`.
    pub runs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            betas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            errors: vec![0.0, 0.25, 0.5, 1.0],
            runs: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub beta: f64,
    pub error: f64,
    pub sino_psnr: f64,
    pub sino_ssim: f64,
    pub image_psnr: f64,
    pub image_ssim: f64,
}

/// Sigma estimate for a relative error `err >= 0`.
pub fn misestimated_sigma(sigma_y: f64, err: f64) -> f64 {
    sigma_y / (1.0 + err)
}

/// Runs the grid; cells come back in row-major (error, beta) order. Every
/// cell reuses the same per-run seeds, so cells differ only in guidance.
pub fn run_sweep(
    records: &[DatasetRecord],
    model: &dyn ScoreModel,
    sched: &Schedule,
    base: &GuidanceConfig,
    sweep: &SweepConfig,
    mu_source: MuSource,
    seed: u64,
) -> Result<Vec<SweepCell>> {
    if records.is_empty() || sweep.runs == 0 {
        return Err(Error::invalid(
            "sweep needs at least one record and one run",
        ));
    }
    if sweep.errors.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::invalid("sweep errors must be >= 0"));
    }
    let cells: Vec<(f64, f64)> = sweep
        .errors
        .iter()
        .flat_map(|&e| sweep.betas.iter().map(move |&b| (e, b)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..sweep.runs).map(move |r| (c, r)))
        .collect();
    let metrics = jobs
        .par_iter()
        .map(|&(c, run)| {
            let (err, beta) = cells[c];
            let rec = &records[run % records.len()];
            let cfg = GuidanceConfig {
                beta,
                sigma_y_est: misestimated_sigma(rec.sigma_y, err),
                ..*base
            };
            let out = reconstruct_record(
                rec,
                model,
                sched,
                &cfg,
                mu_source,
                record_seed(seed, run as u64),
            )?;
            evaluate_record(run, &out, rec, FbpFilter::RamLak)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = sweep.runs as f64;
    Ok(cells
        .iter()
        .enumerate()
        .map(|(c, &(error, beta))| {
            let chunk = &metrics[c * sweep.runs..(c + 1) * sweep.runs];
            let mean = |f: &dyn Fn(&RecordMetrics) -> f64| chunk.iter().map(f).sum::<f64>() / n;
            SweepCell {
                beta,
                error,
                sino_psnr: mean(&|m| m.sino_psnr.value()),
                sino_ssim: mean(&|m| m.sino_ssim),
                image_psnr: mean(&|m| m.image_psnr.value()),
                image_ssim: mean(&|m| m.image_ssim),
            }
        })
        .collect())
}
