//! Score and denoiser models standing in for a trained network.
//!
//! A model either returns the score `∇ log p(x_t)` or a clean estimate
//! `x̂_{0|t}` directly; [`clean_estimate`] hides the difference from samplers.

use crate::error::{Error, Result};
use rayon::prelude::*;

use crate::mrsde::{
    forward_sample_with, rng_from_seed, score_from_clean, tweedie_denoise, SamplerState, Schedule,
};
use crate::tomo_ops::Sinogram;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelMode {
    Score,
    Denoiser,
}

pub trait ScoreModel: Send + Sync {
    fn mode(&self) -> ModelMode;

    /// Score or clean estimate (per [`ScoreModel::mode`]) at `(x_t, t)`; same shape as `x_t`.
    fn evaluate(
        &self,
        x_t: &Sinogram,
        t: usize,
        mu: &Sinogram,
        sched: &Schedule,
    ) -> Result<Sinogram>;
}

fn check_output(out: Sinogram, x_t: &Sinogram) -> Result<Sinogram> {
    x_t.ensure_same_shape(&out)?;
    if out.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("model produced non-finite values".into()));
    }
    Ok(out)
}

/// Clean estimate x̂_{0|t} from any model.
pub fn clean_estimate(
    model: &dyn ScoreModel,
    state: &SamplerState,
    sched: &Schedule,
) -> Result<Sinogram> {
    let out = check_output(
        model.evaluate(&state.x_t, state.t, &state.mu, sched)?,
        &state.x_t,
    )?;
    match model.mode() {
        ModelMode::Denoiser => Ok(out),
        ModelMode::Score => tweedie_denoise(state, &out, sched),
    }
}

/// Score from any model (inverting Tweedie for denoisers).
pub fn score_estimate(
    model: &dyn ScoreModel,
    state: &SamplerState,
    sched: &Schedule,
) -> Result<Sinogram> {
    let out = check_output(
        model.evaluate(&state.x_t, state.t, &state.mu, sched)?,
        &state.x_t,
    )?;
    match model.mode() {
        ModelMode::Score => Ok(out),
        ModelMode::Denoiser => score_from_clean(state, &out, sched),
    }
}

/// Presents a denoiser as a score model.
pub struct AsScore<M>(pub M);

impl<M: ScoreModel> ScoreModel for AsScore<M> {
    fn mode(&self) -> ModelMode {
        ModelMode::Score
    }

    fn evaluate(
        &self,
        x_t: &Sinogram,
        t: usize,
        mu: &Sinogram,
        sched: &Schedule,
    ) -> Result<Sinogram> {
        let state = SamplerState::new(x_t.clone(), t, mu.clone())?;
        score_estimate(&self.0, &state, sched)
    }
}

/// Presents a score model as a denoiser.
pub struct AsDenoiser<M>(pub M);

impl<M: ScoreModel> ScoreModel for AsDenoiser<M> {
    fn mode(&self) -> ModelMode {
        ModelMode::Denoiser
    }

    fn evaluate(
        &self,
        x_t: &Sinogram,
        t: usize,
        mu: &Sinogram,
        sched: &Schedule,
    ) -> Result<Sinogram> {
        let state = SamplerState::new(x_t.clone(), t, mu.clone())?;
        clean_estimate(&self.0, &state, sched)
    }
}

/// Independent Gaussian prior on the clean sinogram (diagonal covariance).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    pub mean0: Sinogram,
    pub var0: Vec<f64>,
}

impl GaussianPrior {
    pub fn new(mean0: Sinogram, var0: Vec<f64>) -> Result<Self> {
        if var0.len() != mean0.len() {
            return Err(Error::shape(mean0.len(), var0.len()));
        }
        if var0.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid("prior variances must be finite and >= 0"));
        }
        Ok(Self { mean0, var0 })
    }
}

/// Exact marginal score of a [`GaussianPrior`] pushed through the forward kernel:
/// `-(x_t - mu - m_t (mean0 - mu)) / (m_t^2 var0 + v_t)`.
#[derive(Debug, Clone)]
pub struct GaussianScore {
    prior: GaussianPrior,
}

impl GaussianScore {
    pub fn new(prior: GaussianPrior) -> Self {
        Self { prior }
    }

    pub fn prior(&self) -> &GaussianPrior {
        &self.prior
    }

    /// Log-density of the marginal at `x_t` (up to nothing: fully normalised).
    pub fn log_density(
        &self,
        x_t: &Sinogram,
        t: usize,
        mu: &Sinogram,
        sched: &Schedule,
    ) -> Result<f64> {
        let (m, v) = (sched.m(t), sched.v(t));
        let mut acc = 0.0;
        for i in 0..x_t.len() {
            let var = m * m * self.prior.var0[i] + v;
            let mean = mu.data()[i] + m * (self.prior.mean0.data()[i] - mu.data()[i]);
            let d = x_t.data()[i] - mean;
            acc += -0.5 * d * d / var - 0.5 * (2.0 * std::f64::consts::PI * var).ln();
        }
        Ok(acc)
    }
}

impl ScoreModel for GaussianScore {
    fn mode(&self) -> ModelMode {
        ModelMode::Score
    }

    fn evaluate(
        &self,
        x_t: &Sinogram,
        t: usize,
        mu: &Sinogram,
        sched: &Schedule,
    ) -> Result<Sinogram> {
        x_t.ensure_same_shape(&self.prior.mean0)?;
        x_t.ensure_same_shape(mu)?;
        let (m, v) = (sched.m(t), sched.v(t));
        let mut data = Vec::with_capacity(x_t.len());
        for i in 0..x_t.len() {
            let var = m * m * self.prior.var0[i] + v;
            if var <= 0.0 {
                return Err(Error::Numeric(
                    "zero total variance: point-mass prior at t = 0".into(),
                ));
            }
            let u = mu.data()[i];
            let mean = u + m * (self.prior.mean0.data()[i] - u);
            data.push(-(x_t.data()[i] - mean) / var);
        }
        x_t.with_data(data)
    }
}

/// Ignores its input and returns the true clean sinogram.
#[derive(Debug, Clone)]
pub struct OracleDenoiser {
    x0_true: Sinogram,
}

impl OracleDenoiser {
    pub fn new(x0_true: Sinogram) -> Self {
        Self { x0_true }
    }
}

impl ScoreModel for OracleDenoiser {
    fn mode(&self) -> ModelMode {
        ModelMode::Denoiser
    }

    fn evaluate(
        &self,
        x_t: &Sinogram,
        _t: usize,
        _mu: &Sinogram,
        _sched: &Schedule,
    ) -> Result<Sinogram> {
        x_t.ensure_same_shape(&self.x0_true)?;
        Ok(self.x0_true.clone())
    }
}

/// Neighbourhood of `(2 half_angle + 1) x (2 half_detector + 1)` entries
/// around each sinogram entry; out-of-range neighbours read as zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Patch {
    pub half_angle: usize,
    pub half_detector: usize,
}

impl Default for Patch {
    fn default() -> Self {
        Self {
            half_angle: 2,
            half_detector: 2,
        }
    }
}

impl Patch {
    pub fn rows(&self) -> usize {
        2 * self.half_angle + 1
    }

    pub fn cols(&self) -> usize {
        2 * self.half_detector + 1
    }

    pub fn len(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn gather(&self, x: &Sinogram, row: usize, col: usize, out: &mut [f64]) {
        let (na, nd) = (x.n_angles() as isize, x.n_detectors() as isize);
        let mut k = 0;
        for da in -(self.half_angle as isize)..=self.half_angle as isize {
            let r = row as isize + da;
            for dd in -(self.half_detector as isize)..=self.half_detector as isize {
                let c = col as isize + dd;
                out[k] = if r >= 0 && r < na && c >= 0 && c < nd {
                    x.data()[(r * nd + c) as usize]
                } else {
                    0.0
                };
                k += 1;
            }
        }
    }
}

/// Per-step affine denoiser `x̂_0 = W_t * x_t + b_t`, with `W_t` a shared
/// patch filter and `b_t` a scalar offset.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDenoiser {
    patch: Patch,
    /// `weights[t - 1]` holds the patch filter for step `t`.
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl LinearDenoiser {
    pub fn from_parts(patch: Patch, weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != bias.len() {
            return Err(Error::shape(
                format!("{} bias terms", weights.len()),
                format!("{}", bias.len()),
            ));
        }
        if weights.iter().any(|w| w.len() != patch.len()) {
            return Err(Error::shape(
                format!("{}-tap filters", patch.len()),
                "other",
            ));
        }
        Ok(Self {
            patch,
            weights,
            bias,
        })
    }

    pub fn patch(&self) -> Patch {
        self.patch
    }

    pub fn steps(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self, t: usize) -> &[f64] {
        &self.weights[t - 1]
    }

    pub fn bias(&self, t: usize) -> f64 {
        self.bias[t - 1]
    }

    pub fn apply(&self, x_t: &Sinogram, t: usize) -> Result<Sinogram> {
        if t == 0 || t > self.steps() {
            return Err(Error::invalid(format!(
                "linear denoiser has no map for step {t} (1..={})",
                self.steps()
            )));
        }
        let w = &self.weights[t - 1];
        let b = self.bias[t - 1];
        let mut feat = vec![0.0; self.patch.len()];
        let mut out = Vec::with_capacity(x_t.len());
        for r in 0..x_t.n_angles() {
            for c in 0..x_t.n_detectors() {
                self.patch.gather(x_t, r, c, &mut feat);
                out.push(b + feat.iter().zip(w).map(|(f, w)| f * w).sum::<f64>());
            }
        }
        x_t.with_data(out)
    }
}

impl ScoreModel for LinearDenoiser {
    fn mode(&self) -> ModelMode {
        ModelMode::Denoiser
    }

    fn evaluate(
        &self,
        x_t: &Sinogram,
        t: usize,
        _mu: &Sinogram,
        sched: &Schedule,
    ) -> Result<Sinogram> {
        if sched.steps() != self.steps() {
            return Err(Error::invalid(format!(
                "denoiser fitted for T = {} used with T = {}",
                self.steps(),
                sched.steps()
            )));
        }
        self.apply(x_t, t)
    }
}

/// One training example: a diffused state, its clean source and the step.
#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub x_t: Sinogram,
    pub x0: Sinogram,
    pub t: usize,
}

#[derive(Debug, Clone)]
struct NormalEquations {
    pairs: usize,
    n: f64,
    sum_f: Vec<f64>,
    sum_y: f64,
    sum_ff: Vec<f64>,
    sum_fy: Vec<f64>,
}

impl NormalEquations {
    fn accumulate(&mut self, patch: &Patch, x_t: &Sinogram, x0: &Sinogram) {
        let k = patch.len();
        let mut feat = vec![0.0; k];
        for r in 0..x_t.n_angles() {
            for c in 0..x_t.n_detectors() {
                patch.gather(x_t, r, c, &mut feat);
                let y = x0.data()[r * x_t.n_detectors() + c];
                self.n += 1.0;
                self.sum_y += y;
                for i in 0..k {
                    let fi = feat[i];
                    self.sum_f[i] += fi;
                    self.sum_fy[i] += fi * y;
                    let row = &mut self.sum_ff[i * k..i * k + k];
                    for (j, fj) in feat.iter().enumerate().skip(i) {
                        row[j] += fi * fj;
                    }
                }
            }
        }
        self.pairs += 1;
    }

    fn new(k: usize) -> Self {
        Self {
            pairs: 0,
            n: 0.0,
            sum_f: vec![0.0; k],
            sum_y: 0.0,
            sum_ff: vec![0.0; k * k],
            sum_fy: vec![0.0; k],
        }
    }
}

/// Streaming accumulator for [`fit_linear_denoiser`]; avoids holding all pairs in memory.
#[derive(Debug, Clone)]
pub struct LinearDenoiserFitter {
    patch: Patch,
    bins: Vec<NormalEquations>,
}

impl LinearDenoiserFitter {
    pub fn new(steps: usize, patch: Patch) -> Self {
        Self {
            patch,
            bins: vec![NormalEquations::new(patch.len()); steps],
        }
    }

    pub fn add(&mut self, x_t: &Sinogram, x0: &Sinogram, t: usize) -> Result<()> {
        x_t.ensure_same_shape(x0)?;
        if t == 0 || t > self.bins.len() {
            return Err(Error::invalid(format!("training step {t} out of range")));
        }
        self.bins[t - 1].accumulate(&self.patch, x_t, x0);
        Ok(())
    }

    /// Ridge-regularised least squares per step; the offset is not penalised,
    /// so a huge ridge drives the filter to zero and the offset to the target mean.
    pub fn finish(&self, ridge: f64) -> Result<LinearDenoiser> {
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::invalid(format!("ridge must be >= 0, got {ridge}")));
        }
        let k = self.patch.len();
        let mut weights = Vec::with_capacity(self.bins.len());
        let mut bias = Vec::with_capacity(self.bins.len());
        for (idx, bin) in self.bins.iter().enumerate() {
            if bin.pairs < 2 {
                return Err(Error::invalid(format!(
                    "step {} has {} training pairs, need at least 2",
                    idx + 1,
                    bin.pairs
                )));
            }
            let n = bin.n;
            let mean_f: Vec<f64> = bin.sum_f.iter().map(|s| s / n).collect();
            let mean_y = bin.sum_y / n;
            let mut a = vec![0.0; k * k];
            for i in 0..k {
                for j in i..k {
                    let c = bin.sum_ff[i * k + j] - n * mean_f[i] * mean_f[j];
                    a[i * k + j] = c;
                    a[j * k + i] = c;
                }
                a[i * k + i] += ridge;
            }
            let rhs: Vec<f64> = (0..k)
                .map(|i| bin.sum_fy[i] - n * mean_f[i] * mean_y)
                .collect();
            let w = cholesky_solve(&a, &rhs, k).ok_or_else(|| {
                Error::Numeric(format!(
                    "singular normal equations at step {} (ridge = {ridge})",
                    idx + 1
                ))
            })?;
            bias.push(mean_y - w.iter().zip(&mean_f).map(|(w, f)| w * f).sum::<f64>());
            weights.push(w);
        }
        LinearDenoiser::from_parts(self.patch, weights, bias)
    }
}

/// Fits one affine patch map per diffusion step from `(x_t, x0, t)` pairs.
pub fn fit_linear_denoiser(
    pairs: &[TrainingPair],
    steps: usize,
    patch: Patch,
    ridge: f64,
) -> Result<LinearDenoiser> {
    let mut fitter = LinearDenoiserFitter::new(steps, patch);
    for p in pairs {
        fitter.add(&p.x_t, &p.x0, p.t)?;
    }
    fitter.finish(ridge)
}

/// Fits on `(x0, mu)` examples by drawing `draws` forward samples per
/// example at every step. Steps are accumulated in parallel, each from its own
/// seeded stream, so the result does not depend on the thread count.
pub fn fit_on_examples(
    examples: &[(Sinogram, Sinogram)],
    sched: &Schedule,
    patch: Patch,
    ridge: f64,
    draws: usize,
    seed: u64,
) -> Result<LinearDenoiser> {
    if examples.is_empty() || draws == 0 {
        return Err(Error::invalid(
            "fitting needs at least one example and one draw",
        ));
    }
    for (x0, mu) in examples {
        x0.ensure_same_shape(mu)?;
    }
    let bins = (1..=sched.steps())
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut bin = NormalEquations::new(patch.len());
            for (x0, mu) in examples {
                for _ in 0..draws {
                    let x_t = forward_sample_with(x0, mu, t, sched, &mut rng)?;
                    bin.accumulate(&patch, &x_t, x0);
                }
            }
            Ok(bin)
        })
        .collect::<Result<Vec<_>>>()?;
    LinearDenoiserFitter { patch, bins }.finish(ridge)
}

/// Solves `a x = b` for symmetric positive-definite `a` (row-major `k x k`).
fn cholesky_solve(a: &[f64], b: &[f64], k: usize) -> Option<Vec<f64>> {
    let scale = (0..k).map(|i| a[i * k + i].abs()).fold(0.0, f64::max);
    let tol = scale * 1e-13;
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let s: f64 = (0..j).map(|p| l[i * k + p] * l[j * k + p]).sum();
            if i == j {
                let d = a[i * k + i] - s;
                if !(d > tol) {
                    return None;
                }
                l[i * k + i] = d.sqrt();
            } else {
                l[i * k + j] = (a[i * k + j] - s) / l[j * k + j];
            }
        }
    }
    let mut y = vec![0.0; k];
    for i in 0..k {
        let s: f64 = (0..i).map(|p| l[i * k + p] * y[p]).sum();
        y[i] = (b[i] - s) / l[i * k + i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|p| l[p * k + i] * x[p]).sum();
        x[i] = (y[i] - s) / l[i * k + i];
    }
    Some(x)
}
