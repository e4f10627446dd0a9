//! Data-consistency rectification of clean estimates and the guided
//! reconstruction loop.
//!
//! Per step `t` the loop computes `x̂_{0|t}`, pulls its measured rows toward
//! `y` by a gain `lambda_t` (`lambda_t = 1` is hard replacement), and
//! re-noises with a per-row std chosen so that the measurement noise carried
//! into the state plus the injected noise add up to the sampler's own
//! per-step variance `sigma_t^2 dt`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mrsde::{
    forward_jump, initial_state, reverse_step, rng_from_seed, SamplerState, Schedule,
};
use crate::score_models::{clean_estimate, ScoreModel};
use crate::tomo_ops::{AngleMask, Sinogram};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectifierCoefficients {
    pub lambda_t: f64,
    pub gamma_t: f64,
    pub h_t: f64,
    pub beta: f64,
    pub sigma_y: f64,
}

pub fn coefficients(
    t: usize,
    sched: &Schedule,
    beta: f64,
    sigma_y: f64,
) -> Result<RectifierCoefficients> {
    if t == 0 || t > sched.steps() {
        return Err(Error::invalid(format!(
            "coefficients need 1 <= t <= {}, got {t}",
            sched.steps()
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::invalid(format!(
            "beta must lie in [0, 1], got {beta}"
        )));
    }
    if !(sigma_y >= 0.0 && sigma_y.is_finite()) {
        return Err(Error::invalid(format!(
            "sigma_y must be >= 0, got {sigma_y}"
        )));
    }
    let q = sched.sigma2_dt(t);
    let step_std = q.sqrt();
    let h_t = sched.h(t);
    let noise_reach = h_t * sigma_y;
    let (lambda_t, gamma_t) = if step_std >= noise_reach {
        (1.0, (q - noise_reach * noise_reach).max(0.0))
    } else {
        // (h lambda sigma_y)^2 = beta^2 q here, so the remainder is q (1 - beta^2).
        (beta * step_std / noise_reach, q * (1.0 - beta * beta))
    };
    Ok(RectifierCoefficients {
        lambda_t,
        gamma_t,
        h_t,
        beta,
        sigma_y,
    })
}

/// Coefficients of the unguided baseline: no correction, full sampler noise.
pub fn unguided_coefficients(t: usize, sched: &Schedule) -> Result<RectifierCoefficients> {
    let c = coefficients(t, sched, 0.0, 0.0)?;
    Ok(RectifierCoefficients {
        lambda_t: 0.0,
        gamma_t: sched.sigma2_dt(t),
        ..c
    })
}

fn check_inputs(x0_hat: &Sinogram, y: &Sinogram, mask: &AngleMask) -> Result<()> {
    x0_hat.ensure_same_shape(y)?;
    if x0_hat.angles() != mask.full_angles() {
        return Err(Error::shape(
            format!("{}-angle mask grid", mask.full_angles().len()),
            x0_hat.shape_str(),
        ));
    }
    Ok(())
}

/// Hard range-null decomposition: measured rows become `y`, the rest are kept.
pub fn rnsd(x0_hat: &Sinogram, y: &Sinogram, mask: &AngleMask) -> Result<Sinogram> {
    check_inputs(x0_hat, y, mask)?;
    let mut out = x0_hat.clone();
    for (r, &m) in mask.measured().iter().enumerate() {
        if m {
            out.row_mut(r).copy_from_slice(y.row(r));
        }
    }
    Ok(out)
}

/// `x̂ - lambda_t A†(A x̂ - y)`. With `lambda_t = 1` this is exactly [`rnsd`].
pub fn rnsd_plus(
    x0_hat: &Sinogram,
    y: &Sinogram,
    mask: &AngleMask,
    c: &RectifierCoefficients,
) -> Result<Sinogram> {
    if c.lambda_t == 1.0 {
        return rnsd(x0_hat, y, mask);
    }
    check_inputs(x0_hat, y, mask)?;
    let mut out = x0_hat.clone();
    let lam = c.lambda_t;
    for (r, &m) in mask.measured().iter().enumerate() {
        if m {
            for (o, &yv) in out.row_mut(r).iter_mut().zip(y.row(r)) {
                *o -= lam * (*o - yv);
            }
        }
    }
    Ok(out)
}

/// Per-entry std of the noise injected after rectification: `sqrt(gamma_t)` on
/// measured rows, `sqrt(sigma_t^2 dt)` on unmeasured rows.
pub fn injected_noise_std(
    mask: &AngleMask,
    c: &RectifierCoefficients,
    sched: &Schedule,
    t: usize,
    n_detectors: usize,
) -> Result<Vec<f64>> {
    if t == 0 || t > sched.steps() {
        return Err(Error::invalid(format!(
            "noise field needs 1 <= t <= {}",
            sched.steps()
        )));
    }
    if c.gamma_t < 0.0 {
        return Err(Error::Numeric(format!(
            "negative injected variance {}",
            c.gamma_t
        )));
    }
    let measured = c.gamma_t.sqrt();
    let free = sched.step_std(t);
    let mut out = Vec::with_capacity(mask.full_angles().len() * n_detectors);
    for &m in mask.measured() {
        out.extend(std::iter::repeat_n(
            if m { measured } else { free },
            n_detectors,
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeTravel {
    pub enabled: bool,
    /// Block length L in steps.
    pub hop: usize,
    /// Extra passes R over each block after re-noising it forward.
    pub repeats: usize,
}

impl Default for TimeTravel {
    fn default() -> Self {
        Self {
            enabled: true,
            hop: 10,
            repeats: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    pub beta: f64,
    pub sigma_y_est: f64,
    pub time_travel: TimeTravel,
    pub rectify_every: usize,
    /// `false` runs the unguided baseline (lambda_t = 0 at every step).
    pub rectify: bool,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            sigma_y_est: 0.0,
            time_travel: TimeTravel::default(),
            rectify_every: 1,
            rectify: true,
        }
    }
}

impl GuidanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::invalid(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if !(self.sigma_y_est >= 0.0 && self.sigma_y_est.is_finite()) {
            return Err(Error::invalid("sigma_y estimate must be >= 0"));
        }
        if self.time_travel.hop == 0 || self.time_travel.repeats == 0 {
            return Err(Error::invalid("time-travel hop and repeats must be >= 1"));
        }
        if self.rectify_every == 0 {
            return Err(Error::invalid("rectify stride must be >= 1"));
        }
        Ok(())
    }
}

struct GuidedRun<'a> {
    y: &'a Sinogram,
    mask: &'a AngleMask,
    model: &'a dyn ScoreModel,
    sched: &'a Schedule,
    cfg: &'a GuidanceConfig,
}

impl GuidedRun<'_> {
    fn rectifies_at(&self, t: usize) -> bool {
        self.cfg.rectify && (t == 1 || (self.sched.steps() - t).is_multiple_of(self.cfg.rectify_every))
    }

    /// One guided step t -> t-1; at t = 1 the rectified estimate is the result.
    fn step(
        &self,
        state: SamplerState,
        rng: &mut impl Rng,
        observe: &mut dyn FnMut(usize, &Sinogram),
    ) -> Result<SamplerState> {
        let t = state.t;
        let x0_hat = clean_estimate(self.model, &state, self.sched)?;
        observe(t, &x0_hat);
        let c = if self.rectifies_at(t) {
            coefficients(t, self.sched, self.cfg.beta, self.cfg.sigma_y_est)?
        } else {
            unguided_coefficients(t, self.sched)?
        };
        let rectified = rnsd_plus(&x0_hat, self.y, self.mask, &c)?;
        if t == 1 {
            return Ok(SamplerState {
                x_t: rectified.clone(),
                t: 0,
                mu: state.mu,
                x0_hat: Some(rectified),
            });
        }
        let std = injected_noise_std(self.mask, &c, self.sched, t, self.y.n_detectors())?;
        reverse_step(&state, &rectified, self.sched, &std, rng)
    }

    fn run(
        &self,
        mu: &Sinogram,
        seed: u64,
        observe: &mut dyn FnMut(usize, &Sinogram),
    ) -> Result<Sinogram> {
        let mut rng = rng_from_seed(seed);
        let mut state = initial_state(mu, self.sched, &mut rng);
        let tt = self.cfg.time_travel;
        let hop = if tt.enabled {
            tt.hop
        } else {
            self.sched.steps()
        };
        let mut t_hi = self.sched.steps();
        while t_hi > 0 {
            let t_lo = t_hi.saturating_sub(hop);
            let passes = if tt.enabled && t_lo > 0 {
                1 + tt.repeats
            } else {
                1
            };
            for pass in 0..passes {
                if pass > 0 {
                    let x = forward_jump(&state.x_t, mu, t_lo, t_hi, self.sched, &mut rng)?;
                    state = SamplerState {
                        x_t: x,
                        t: t_hi,
                        mu: mu.clone(),
                        x0_hat: None,
                    };
                }
                while state.t > t_lo {
                    state = self.step(state, &mut rng, observe)?;
                }
            }
            t_hi = t_lo;
        }
        Ok(state.x_t)
    }
}

/// Guided reconstruction with `mu` set to the zero-filled observation `y`.
pub fn reconstruct(
    y: &Sinogram,
    mask: &AngleMask,
    model: &dyn ScoreModel,
    sched: &Schedule,
    cfg: &GuidanceConfig,
    seed: u64,
) -> Result<Sinogram> {
    reconstruct_with_mu(y, y, mask, model, sched, cfg, seed)
}

pub fn reconstruct_with_mu(
    y: &Sinogram,
    mu: &Sinogram,
    mask: &AngleMask,
    model: &dyn ScoreModel,
    sched: &Schedule,
    cfg: &GuidanceConfig,
    seed: u64,
) -> Result<Sinogram> {
    reconstruct_traced(y, mu, mask, model, sched, cfg, seed, &mut |_, _| {})
}

/// As [`reconstruct_with_mu`], calling `observe(t, x̂_{0|t})` at every step (including time-travel passes).
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_traced(
    y: &Sinogram,
    mu: &Sinogram,
    mask: &AngleMask,
    model: &dyn ScoreModel,
    sched: &Schedule,
    cfg: &GuidanceConfig,
    seed: u64,
    observe: &mut dyn FnMut(usize, &Sinogram),
) -> Result<Sinogram> {
    cfg.validate()?;
    mask.check(y)?;
    y.ensure_same_shape(mu)?;
    GuidedRun {
        y,
        mask,
        model,
        sched,
        cfg,
    }
    .run(mu, seed, observe)
}
