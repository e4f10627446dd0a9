//! Discrete-time mean-reverting SDE: schedules, forward transitions, clean
//! estimates and reverse bridge steps.
//!
//! The forward chain uses per-step variance `lambda^2 (1 - e^{-2 zeta'_t})`,
//! which makes the composed single-step transitions reproduce the closed-form
//! marginal `N(mu + (x0 - mu) m_t, v_t)` exactly.

mod sampler;
mod schedule;

pub use sampler::{
    euler_maruyama_step, forward_jump, forward_sample, forward_sample_with, forward_step,
    initial_state, reverse_step, rng_from_seed, sample, sample_with, score_from_clean,
    tweedie_denoise, ReverseMode, SamplerState,
};
pub use schedule::{make_schedule, Schedule, ScheduleConfig, ScheduleKind};
