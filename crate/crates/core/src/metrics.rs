//! Image quality metrics and paired-run statistics.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tomo_ops::{Image, Sinogram};

/// PSNR in dB; `Identical` stands in for the infinite value at zero MSE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Finite(f64),
    Identical,
}

impl Psnr {
    pub fn is_identical(self) -> bool {
        matches!(self, Psnr::Identical)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Psnr::Finite(v) => Some(v),
            Psnr::Identical => None,
        }
    }

    /// Numeric value with `Identical` mapped to +inf, for comparisons.
    pub fn value(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v:.6}"),
            Psnr::Identical => f.write_str("identical"),
        }
    }
}

pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::invalid("mse of empty arrays"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64)
}

pub fn psnr(a: &[f64], b: &[f64], data_range: f64) -> Result<Psnr> {
    if !(data_range > 0.0) {
        return Err(Error::invalid(format!(
            "data_range must be positive, got {data_range}"
        )));
    }
    let m = mse(a, b)?;
    Ok(if m == 0.0 {
        Psnr::Identical
    } else {
        Psnr::Finite(10.0 * (data_range * data_range / m).log10())
    })
}

pub fn psnr_image(a: &Image, b: &Image, data_range: f64) -> Result<Psnr> {
    same_image_shape(a, b)?;
    psnr(a.data(), b.data(), data_range)
}

pub fn psnr_sinogram(a: &Sinogram, b: &Sinogram, data_range: f64) -> Result<Psnr> {
    a.ensure_same_shape(b)?;
    psnr(a.data(), b.data(), data_range)
}

fn same_image_shape(a: &Image, b: &Image) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::shape(
            format!("{}x{}", a.width(), a.height()),
            format!("{}x{}", b.width(), b.height()),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub data_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            data_range: 1.0,
        }
    }
}

fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let g: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Mean SSIM over every window position fully inside a `width x height` grid.
pub fn ssim(a: &[f64], b: &[f64], width: usize, height: usize, p: &SsimParams) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(a.len(), b.len()));
    }
    if a.len() != width * height {
        return Err(Error::shape(width * height, a.len()));
    }
    if p.window == 0 || p.window.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "ssim window must be odd, got {}",
            p.window
        )));
    }
    if p.window > width || p.window > height {
        return Err(Error::invalid(format!(
            "ssim window {} larger than {width}x{height} input",
            p.window
        )));
    }
    if !(p.sigma > 0.0 && p.data_range > 0.0) {
        return Err(Error::invalid("ssim sigma and data_range must be positive"));
    }
    let g = gaussian_window(p.window, p.sigma);
    let c1 = (p.k1 * p.data_range).powi(2);
    let c2 = (p.k2 * p.data_range).powi(2);
    let w = p.window;
    let (ow, oh) = (width - w + 1, height - w + 1);

    // Separable filtering of the five moment maps: rows first, then columns.
    let products: [Box<dyn Fn(usize) -> f64 + '_>; 5] = [
        Box::new(|i| a[i]),
        Box::new(|i| b[i]),
        Box::new(|i| a[i] * a[i]),
        Box::new(|i| b[i] * b[i]),
        Box::new(|i| a[i] * b[i]),
    ];
    let moments: Vec<Vec<f64>> = products
        .iter()
        .map(|f| {
            let mut horiz = vec![0.0; height * ow];
            for r in 0..height {
                for c in 0..ow {
                    horiz[r * ow + c] = (0..w).map(|k| g[k] * f(r * width + c + k)).sum();
                }
            }
            let mut out = vec![0.0; oh * ow];
            for r in 0..oh {
                for c in 0..ow {
                    out[r * ow + c] = (0..w).map(|k| g[k] * horiz[(r + k) * ow + c]).sum();
                }
            }
            out
        })
        .collect();
    let total: f64 = (0..oh * ow)
        .map(|i| {
            let (mu_a, mu_b) = (moments[0][i], moments[1][i]);
            let var_a = moments[2][i] - mu_a * mu_a;
            let var_b = moments[3][i] - mu_b * mu_b;
            let cov = moments[4][i] - mu_a * mu_b;
            ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
        })
        .sum();
    Ok(total / (oh * ow) as f64)
}

pub fn ssim_image(a: &Image, b: &Image, p: &SsimParams) -> Result<f64> {
    same_image_shape(a, b)?;
    if a == b {
        return Ok(1.0);
    }
    ssim(a.data(), b.data(), a.width(), a.height(), p)
}

pub fn ssim_sinogram(a: &Sinogram, b: &Sinogram, p: &SsimParams) -> Result<f64> {
    a.ensure_same_shape(b)?;
    if a.data() == b.data() {
        return Ok(1.0);
    }
    ssim(a.data(), b.data(), a.n_detectors(), a.n_angles(), p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedStats {
    pub deltas: Vec<f64>,
    pub mean_gap: f64,
    /// Fraction of pairs with `a > b`; ties count one half.
    pub win_rate: f64,
}

pub fn paired_compare(runs_a: &[f64], runs_b: &[f64]) -> Result<PairedStats> {
    if runs_a.len() != runs_b.len() {
        return Err(Error::shape(runs_a.len(), runs_b.len()));
    }
    if runs_a.is_empty() {
        return Err(Error::invalid("paired_compare needs at least one pair"));
    }
    let deltas: Vec<f64> = runs_a.iter().zip(runs_b).map(|(a, b)| a - b).collect();
    let n = deltas.len() as f64;
    let wins: f64 = deltas
        .iter()
        .map(|&d| {
            if d > 0.0 {
                1.0
            } else if d == 0.0 {
                0.5
            } else {
                0.0
            }
        })
        .sum();
    Ok(PairedStats {
        mean_gap: deltas.iter().sum::<f64>() / n,
        win_rate: wins / n,
        deltas,
    })
}

/// Metrics for one record, in the sinogram domain and after FBP.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordMetrics {
    pub index: usize,
    pub sino_psnr: Psnr,
    pub sino_ssim: f64,
    pub image_psnr: Psnr,
    pub image_ssim: f64,
    pub measured_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSummary {
    /// Mean over finite PSNR values.
    pub psnr_mean: Option<f64>,
    pub psnr_identical: usize,
    pub ssim_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub count: usize,
    pub sinogram: DomainSummary,
    pub image: DomainSummary,
    pub measured_residual_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub records: Vec<RecordMetrics>,
}

pub const REPORT_CSV_HEADER: &str =
    "index,sino_psnr,sino_ssim,image_psnr,image_ssim,measured_residual";

fn domain_summary(
    psnrs: impl Iterator<Item = Psnr>,
    ssims: impl Iterator<Item = f64>,
) -> DomainSummary {
    let (mut sum, mut finite, mut identical) = (0.0, 0usize, 0usize);
    for p in psnrs {
        match p {
            Psnr::Finite(v) => {
                sum += v;
                finite += 1;
            }
            Psnr::Identical => identical += 1,
        }
    }
    let ssims: Vec<f64> = ssims.collect();
    DomainSummary {
        psnr_mean: (finite > 0).then(|| sum / finite as f64),
        psnr_identical: identical,
        ssim_mean: if ssims.is_empty() {
            0.0
        } else {
            ssims.iter().sum::<f64>() / ssims.len() as f64
        },
    }
}

impl EvalReport {
    pub fn summary(&self) -> ReportSummary {
        let n = self.records.len();
        ReportSummary {
            count: n,
            sinogram: domain_summary(
                self.records.iter().map(|r| r.sino_psnr),
                self.records.iter().map(|r| r.sino_ssim),
            ),
            image: domain_summary(
                self.records.iter().map(|r| r.image_psnr),
                self.records.iter().map(|r| r.image_ssim),
            ),
            measured_residual_mean: if n == 0 {
                0.0
            } else {
                self.records
                    .iter()
                    .map(|r| r.measured_residual)
                    .sum::<f64>()
                    / n as f64
            },
        }
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{REPORT_CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{:.6},{},{:.6},{:.6e}",
                r.index, r.sino_psnr, r.sino_ssim, r.image_psnr, r.image_ssim, r.measured_residual
            )?;
        }
        Ok(())
    }

    pub fn summary_toml(&self) -> Result<String> {
        toml::to_string(&self.summary())
            .map_err(|e| Error::Format(format!("summary encoding: {e}")))
    }

    /// Writes `<stem>.csv` and `<stem>.toml` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let csv = dir.join(format!("{stem}.csv"));
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(&csv, e))?;
        std::fs::write(&csv, buf).map_err(|e| Error::io(&csv, e))?;
        let toml_path = dir.join(format!("{stem}.toml"));
        std::fs::write(&toml_path, self.summary_toml()?).map_err(|e| Error::io(toml_path, e))
    }
}
