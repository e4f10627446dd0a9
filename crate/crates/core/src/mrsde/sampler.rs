use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::schedule::{one_minus_exp_neg2, Schedule};
use crate::error::{Error, Result};
use crate::score_models::{clean_estimate, ScoreModel};
use crate::tomo_ops::Sinogram;

/// Seeded generator used for every stochastic operation in the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerState {
    pub x_t: Sinogram,
    pub t: usize,
    pub mu: Sinogram,
    pub x0_hat: Option<Sinogram>,
}

impl SamplerState {
    pub fn new(x_t: Sinogram, t: usize, mu: Sinogram) -> Result<Self> {
        x_t.ensure_same_shape(&mu)?;
        Ok(Self {
            x_t,
            t,
            mu,
            x0_hat: None,
        })
    }
}

/// Reverse transition used by [`sample_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReverseMode {
    /// Exact OU-bridge posterior with the clean estimate substituted for x_0.
    #[default]
    Bridge,
    /// Euler–Maruyama discretisation of the reverse SDE.
    EulerMaruyama,
}

fn gaussian_fill(out: &mut [f64], rng: &mut impl Rng, std: impl Fn(usize) -> f64) {
    for (i, v) in out.iter_mut().enumerate() {
        let s = std(i);
        if s != 0.0 {
            let e: f64 = rng.sample(StandardNormal);
            *v += s * e;
        }
    }
}

/// Draws x_t ~ N(mu + (x0 - mu) m_t, v_t).
pub fn forward_sample_with(
    x0: &Sinogram,
    mu: &Sinogram,
    t: usize,
    sched: &Schedule,
    rng: &mut impl Rng,
) -> Result<Sinogram> {
    sched.check_step(t)?;
    let (m, std) = (sched.m(t), sched.v(t).sqrt());
    let mut out = x0.zip_map(mu, |x, u| u + (x - u) * m)?;
    gaussian_fill(out.data_mut(), rng, |_| std);
    Ok(out)
}

pub fn forward_sample(
    x0: &Sinogram,
    mu: &Sinogram,
    t: usize,
    sched: &Schedule,
    seed: u64,
) -> Result<Sinogram> {
    forward_sample_with(x0, mu, t, sched, &mut rng_from_seed(seed))
}

/// One forward transition t-1 -> t.
pub fn forward_step(
    x_prev: &Sinogram,
    mu: &Sinogram,
    t: usize,
    sched: &Schedule,
    rng: &mut impl Rng,
) -> Result<Sinogram> {
    if t == 0 {
        return Err(Error::invalid("forward step needs t >= 1"));
    }
    sched.check_step(t)?;
    let decay = (-sched.zeta(t)).exp();
    let std = sched.step_std(t);
    let mut out = x_prev.zip_map(mu, |x, u| u + (x - u) * decay)?;
    gaussian_fill(out.data_mut(), rng, |_| std);
    Ok(out)
}

/// Composite forward transition `from -> to` (`from <= to`), equal in law to
/// chaining the single steps in between.
pub fn forward_jump(
    x_from: &Sinogram,
    mu: &Sinogram,
    from: usize,
    to: usize,
    sched: &Schedule,
    rng: &mut impl Rng,
) -> Result<Sinogram> {
    sched.check_step(to)?;
    if from > to {
        return Err(Error::invalid(format!(
            "cannot jump forward from {from} to {to}"
        )));
    }
    let gap = sched.zeta_bar(to) - sched.zeta_bar(from);
    let decay = (-gap).exp();
    let std = sched.lambda() * one_minus_exp_neg2(gap).sqrt();
    let mut out = x_from.zip_map(mu, |x, u| u + (x - u) * decay)?;
    gaussian_fill(out.data_mut(), rng, |_| std);
    Ok(out)
}

/// Posterior-mean clean estimate from a score: `mu + (x_t - mu + v_t s) / m_t`.
pub fn tweedie_denoise(
    state: &SamplerState,
    score: &Sinogram,
    sched: &Schedule,
) -> Result<Sinogram> {
    sched.check_step(state.t)?;
    state.x_t.ensure_same_shape(score)?;
    let (m, v) = (sched.m(state.t), sched.v(state.t));
    if !m.is_normal() || m < 1e-150 {
        return Err(Error::Numeric(format!(
            "mean coefficient m_t = {m:e} underflows at t = {}",
            state.t
        )));
    }
    let data = state
        .x_t
        .data()
        .iter()
        .zip(state.mu.data())
        .zip(score.data())
        .map(|((&x, &u), &s)| u + (x - u + v * s) / m)
        .collect();
    state.x_t.with_data(data)
}

/// Inverse of [`tweedie_denoise`]: the score implied by a clean estimate.
pub fn score_from_clean(
    state: &SamplerState,
    x0_hat: &Sinogram,
    sched: &Schedule,
) -> Result<Sinogram> {
    sched.check_step(state.t)?;
    let (m, v) = (sched.m(state.t), sched.v(state.t));
    if v <= 0.0 {
        return Err(Error::Numeric(
            "score undefined at zero marginal variance".into(),
        ));
    }
    let data = state
        .x_t
        .data()
        .iter()
        .zip(state.mu.data())
        .zip(x0_hat.data())
        .map(|((&x, &u), &c)| (m * (c - u) - (x - u)) / v)
        .collect();
    state.x_t.with_data(data)
}

/// Bridge step t -> t-1: mean `mu + h_t (x0_hat - mu) + g_t (x_t - mu)` plus
/// zero-mean Gaussian noise with the given per-entry std.
pub fn reverse_step(
    state: &SamplerState,
    x0_hat: &Sinogram,
    sched: &Schedule,
    noise_std: &[f64],
    rng: &mut impl Rng,
) -> Result<SamplerState> {
    let t = state.t;
    if t == 0 {
        return Err(Error::invalid("reverse step needs t >= 1"));
    }
    sched.check_step(t)?;
    state.x_t.ensure_same_shape(x0_hat)?;
    if noise_std.len() != state.x_t.len() {
        return Err(Error::shape(state.x_t.len(), noise_std.len()));
    }
    let (h, g) = (sched.h(t), sched.g(t));
    let mut data: Vec<f64> = state
        .x_t
        .data()
        .iter()
        .zip(state.mu.data())
        .zip(x0_hat.data())
        .map(|((&x, &u), &c)| u + h * (c - u) + g * (x - u))
        .collect();
    gaussian_fill(&mut data, rng, |i| noise_std[i]);
    Ok(SamplerState {
        x_t: state.x_t.with_data(data)?,
        t: t - 1,
        mu: state.mu.clone(),
        x0_hat: Some(x0_hat.clone()),
    })
}

/// Euler–Maruyama step of `dx = [zeta (mu - x) - sigma^2 score] dt + sigma dw`
/// run backwards over one step, with `sigma^2 dt ≈ 2 lambda^2 zeta'_t`.
pub fn euler_maruyama_step(
    state: &SamplerState,
    x0_hat: &Sinogram,
    sched: &Schedule,
    rng: &mut impl Rng,
) -> Result<SamplerState> {
    let t = state.t;
    if t == 0 {
        return Err(Error::invalid("reverse step needs t >= 1"));
    }
    let score = score_from_clean(state, x0_hat, sched)?;
    let zeta = sched.zeta(t);
    let diffusion = 2.0 * sched.lambda().powi(2) * zeta;
    let std = diffusion.sqrt();
    let mut data: Vec<f64> = state
        .x_t
        .data()
        .iter()
        .zip(state.mu.data())
        .zip(score.data())
        .map(|((&x, &u), &s)| x - (zeta * (u - x) - diffusion * s))
        .collect();
    if t > 1 {
        gaussian_fill(&mut data, rng, |_| std);
    }
    Ok(SamplerState {
        x_t: state.x_t.with_data(data)?,
        t: t - 1,
        mu: state.mu.clone(),
        x0_hat: Some(x0_hat.clone()),
    })
}

/// Initial state x_T ~ N(mu, v_T).
pub fn initial_state(mu: &Sinogram, sched: &Schedule, rng: &mut impl Rng) -> SamplerState {
    let t = sched.steps();
    let std = sched.v(t).sqrt();
    let mut x = mu.clone();
    gaussian_fill(x.data_mut(), rng, |_| std);
    SamplerState {
        x_t: x,
        t,
        mu: mu.clone(),
        x0_hat: None,
    }
}

/// Unguided reverse sampling from x_T ~ N(mu, v_T) down to t = 0. The last
/// step (t = 1) is deterministic and returns the clean estimate.
pub fn sample(
    mu: &Sinogram,
    model: &dyn ScoreModel,
    sched: &Schedule,
    seed: u64,
) -> Result<Sinogram> {
    sample_with(mu, model, sched, ReverseMode::Bridge, seed)
}

pub fn sample_with(
    mu: &Sinogram,
    model: &dyn ScoreModel,
    sched: &Schedule,
    mode: ReverseMode,
    seed: u64,
) -> Result<Sinogram> {
    let mut rng = rng_from_seed(seed);
    let mut state = initial_state(mu, sched, &mut rng);
    while state.t > 0 {
        let x0_hat = clean_estimate(model, &state, sched)?;
        if state.t == 1 && mode == ReverseMode::Bridge {
            return Ok(x0_hat);
        }
        state = match mode {
            ReverseMode::Bridge => {
                let std = vec![sched.step_std(state.t); state.x_t.len()];
                reverse_step(&state, &x0_hat, sched, &std, &mut rng)?
            }
            ReverseMode::EulerMaruyama => euler_maruyama_step(&state, &x0_hat, sched, &mut rng)?,
        };
    }
    Ok(state.x_t)
}
