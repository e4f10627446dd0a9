use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{
    load_linear_denoiser, load_sinogram, save_image, save_linear_denoiser, save_sinogram,
    save_trace, write_pgm, write_png, Dtype, Trace,
};
use crate::metrics::EvalReport;
use crate::phantoms_data::{read_dataset, write_dataset, DatasetRecord};
use crate::pipeline::{
    evaluate_record, fit_model, record_seed, run_sweep, simulate_dataset, SweepCell,
};
use crate::rectify::reconstruct_traced;
use crate::score_models::{LinearDenoiser, OracleDenoiser, ScoreModel};
use crate::tomo_ops::{fbp, measured_residual, FbpFilter, Sinogram};

/// Clean-estimate source for reconstruction.
pub enum ModelChoice {
    Oracle,
    Linear(LinearDenoiser),
}

impl ModelChoice {
    pub fn load(path: Option<&Path>, oracle: bool) -> Result<Self> {
        match (path, oracle) {
            (_, true) => Ok(ModelChoice::Oracle),
            (Some(p), false) => Ok(ModelChoice::Linear(load_linear_denoiser(p)?)),
            (None, false) => Err(Error::invalid("give --model PATH or --oracle")),
        }
    }

    fn with_model<T>(
        &self,
        rec: &DatasetRecord,
        f: impl FnOnce(&dyn ScoreModel) -> Result<T>,
    ) -> Result<T> {
        match self {
            ModelChoice::Oracle => f(&OracleDenoiser::new(rec.x0_full.clone())),
            ModelChoice::Linear(m) => f(m),
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn record_stem(index: usize) -> String {
    format!("record_{index:04}")
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path, keep_phantom: bool) -> Result<Vec<DatasetRecord>> {
    let p = &cfg.protocol;
    let records = simulate_dataset(
        &p.phantom(),
        &p.acquisition(),
        p.count,
        cfg.seed,
        keep_phantom,
    )?;
    if let Some(parent) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_dataset(out, &records)?;
    if !records.is_empty() {
        let sig: Vec<f64> = records.iter().map(|r| r.sigma_y).collect();
        let mean = sig.iter().sum::<f64>() / sig.len() as f64;
        let (lo, hi) = sig
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                (l.min(v), h.max(v))
            });
        println!(
            "wrote {} records to {}: sigma_y mean {mean:.5} min {lo:.5} max {hi:.5}",
            records.len(),
            out.display()
        );
    } else {
        println!("wrote empty dataset to {}", out.display());
    }
    Ok(records)
}

pub fn cmd_fit(cfg: &RunConfig, out: &Path) -> Result<LinearDenoiser> {
    let sched = cfg.schedule.build()?;
    let p = &cfg.protocol;
    let fit = crate::pipeline::FitConfig {
        seed: cfg.fit.seed ^ cfg.seed,
        ..cfg.fit
    };
    let model = fit_model(
        &p.phantom(),
        &p.acquisition(),
        &sched,
        &fit,
        cfg.guidance.mu,
    )?;
    save_linear_denoiser(out, &model)?;
    println!(
        "fitted {}-step linear denoiser on {} records, wrote {}",
        model.steps(),
        fit.examples,
        out.display()
    );
    Ok(model)
}

pub struct ReconstructOptions {
    pub png: bool,
    pub trace: bool,
}

/// Reconstructs every record in parallel and writes outputs in record order.
pub fn cmd_reconstruct(
    cfg: &RunConfig,
    data: &Path,
    model: &ModelChoice,
    out: &Path,
    opts: &ReconstructOptions,
) -> Result<Vec<Sinogram>> {
    let records = read_dataset(data)?;
    let sched = cfg.schedule.build()?;
    ensure_dir(out)?;
    let results = records
        .par_iter()
        .enumerate()
        .map(|(i, rec)| {
            let guidance = cfg.guidance.for_record(rec.sigma_y);
            let mu = cfg.guidance.mu.mu(rec)?;
            let mut trace = Trace::default();
            let sino = model.with_model(rec, |m| {
                reconstruct_traced(
                    &rec.y,
                    &mu,
                    &rec.mask,
                    m,
                    &sched,
                    &guidance,
                    record_seed(cfg.seed, i as u64),
                    &mut |t, x| {
                        if opts.trace {
                            trace.steps.push(t);
                            trace.snapshots.push(x.clone());
                        }
                    },
                )
            })?;
            Ok((sino, trace))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut summary = String::from("index,measured_residual\n");
    let mut out_sinos = Vec::with_capacity(results.len());
    for (i, (sino, trace)) in results.into_iter().enumerate() {
        let stem = out.join(record_stem(i));
        let n = sino.n_detectors();
        let img = fbp(&sino, FbpFilter::RamLak, n)?;
        save_sinogram(&stem.with_extension("sino"), &sino, Dtype::F64)?;
        save_image(&stem.with_extension("fbp"), &img, Dtype::F64)?;
        write_pgm(
            &with_suffix(&stem, "_sino.pgm"),
            n,
            sino.n_angles(),
            sino.data(),
        )?;
        write_pgm(&with_suffix(&stem, "_fbp.pgm"), n, n, img.data())?;
        if opts.png {
            write_png(
                &with_suffix(&stem, "_sino.png"),
                n,
                sino.n_angles(),
                sino.data(),
            )?;
            write_png(&with_suffix(&stem, "_fbp.png"), n, n, img.data())?;
        }
        if opts.trace {
            save_trace(&stem.with_extension("trace"), &trace)?;
        }
        let res = measured_residual(&sino, &records[i].y, &records[i].mask)?;
        let _ = writeln!(summary, "{i},{res:.6e}");
        out_sinos.push(sino);
    }
    write_text(&out.join("residuals.csv"), &summary)?;
    write_text(&out.join("config.toml"), &cfg.to_toml()?)?;
    println!(
        "reconstructed {} records into {}",
        out_sinos.len(),
        out.display()
    );
    Ok(out_sinos)
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_reconstructions(recon: &Path, count: usize) -> Result<Vec<Sinogram>> {
    if recon.is_dir() {
        (0..count)
            .map(|i| load_sinogram(&recon.join(record_stem(i)).with_extension("sino")))
            .collect()
    } else {
        Ok(read_dataset(recon)?
            .into_iter()
            .map(|r| r.x0_full)
            .collect())
    }
}

pub fn cmd_eval(data: &Path, recon: &Path, out: &Path) -> Result<EvalReport> {
    let records = read_dataset(data)?;
    let recons = load_reconstructions(recon, records.len())?;
    if recons.len() != records.len() {
        return Err(Error::shape(
            format!("{} reconstructions", records.len()),
            recons.len(),
        ));
    }
    let metrics = records
        .par_iter()
        .zip(recons.par_iter())
        .enumerate()
        .map(|(i, (rec, sino))| evaluate_record(i, sino, rec, FbpFilter::RamLak))
        .collect::<Result<Vec<_>>>()?;
    let report = EvalReport { records: metrics };
    ensure_dir(out)?;
    report.save(out, "eval")?;
    let s = report.summary();
    let fmt = |v: Option<f64>| v.map_or("identical".to_string(), |v| format!("{v:.3} dB"));
    println!(
        "{} records | sinogram PSNR {} SSIM {:.4} | image PSNR {} SSIM {:.4}",
        s.count,
        fmt(s.sinogram.psnr_mean),
        s.sinogram.ssim_mean,
        fmt(s.image.psnr_mean),
        s.image.ssim_mean
    );
    Ok(report)
}

pub const SWEEP_CSV_HEADER: &str = "error,beta,sino_psnr,sino_ssim,image_psnr,image_ssim";

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut s = format!("{SWEEP_CSV_HEADER}\n");
    for c in cells {
        let _ = writeln!(
            s,
            "{},{},{:.6},{:.6},{:.6},{:.6}",
            c.error, c.beta, c.sino_psnr, c.sino_ssim, c.image_psnr, c.image_ssim
        );
    }
    s
}

const HEATMAP_CELL: usize = 16;

fn heatmap(
    cells: &[SweepCell],
    cols: usize,
    value: impl Fn(&SweepCell) -> f64,
) -> (usize, usize, Vec<f64>) {
    let rows = cells.len() / cols;
    let (w, h) = (cols * HEATMAP_CELL, rows * HEATMAP_CELL);
    let data = (0..h)
        .flat_map(|y| (0..w).map(move |x| (y, x)))
        .map(|(y, x)| value(&cells[(y / HEATMAP_CELL) * cols + x / HEATMAP_CELL]))
        .collect();
    (w, h, data)
}

pub fn cmd_sweep(
    cfg: &RunConfig,
    data: &Path,
    model: &ModelChoice,
    out: &Path,
) -> Result<Vec<SweepCell>> {
    let records = read_dataset(data)?;
    let sched = cfg.schedule.build()?;
    let base = cfg.guidance.for_record(0.0);
    let cells = match model {
        ModelChoice::Linear(m) => run_sweep(
            &records,
            m,
            &sched,
            &base,
            &cfg.sweep,
            cfg.guidance.mu,
            cfg.seed,
        )?,
        ModelChoice::Oracle => {
            return Err(Error::invalid("the sweep needs a fitted model (--model)"));
        }
    };
    ensure_dir(out)?;
    write_text(&out.join("sweep.csv"), &sweep_csv(&cells))?;
    let cols = cfg.sweep.betas.len();
    let maps: [(&str, fn(&SweepCell) -> f64); 4] = [
        ("sino_ssim", |c| c.sino_ssim),
        ("sino_psnr", |c| c.sino_psnr),
        ("image_ssim", |c| c.image_ssim),
        ("image_psnr", |c| c.image_psnr),
    ];
    for (name, f) in maps {
        let (w, h, values) = heatmap(&cells, cols, f);
        write_pgm(&out.join(format!("sweep_{name}.pgm")), w, h, &values)?;
        write_png(&out.join(format!("sweep_{name}.png")), w, h, &values)?;
    }
    println!(
        "sweep of {} cells written to {}",
        cells.len(),
        out.display()
    );
    Ok(cells)
}
