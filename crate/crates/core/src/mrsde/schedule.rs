use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    #[default]
    Constant,
    /// Cumulative rate follows `1 - cos(pi t / 2T)`, so per-step rates grow with t.
    Cosine,
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(ScheduleKind::Constant),
            "cosine" => Ok(ScheduleKind::Cosine),
            other => Err(Error::invalid(format!("unknown schedule kind '{other}'"))),
        }
    }
}

/// Serializable parameters from which a [`Schedule`] is rebuilt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub steps: usize,
    pub lambda: f64,
    pub kind: ScheduleKind,
    pub zeta_total: f64,
}

impl Default for ScheduleConfig {
    /// T = 100, lambda = 0.1, constant rates with m_T = 0.01.
    fn default() -> Self {
        Self {
            steps: 100,
            lambda: 0.1,
            kind: ScheduleKind::Constant,
            zeta_total: 100f64.ln(),
        }
    }
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<Schedule> {
        make_schedule(self.steps, self.lambda, self.kind, self.zeta_total)
    }
}

/// Discrete mean-reverting SDE schedule.
///
/// Per-step vectors are indexed by `t` in `1..=T` (slot 0 holds 0); marginal
/// vectors are indexed by `t` in `0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    config: ScheduleConfig,
    zeta: Vec<f64>,
    zeta_bar: Vec<f64>,
    sigma2_dt: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
}

/// `1 - exp(-2x)` without cancellation for small `x`.
#[inline]
pub(crate) fn one_minus_exp_neg2(x: f64) -> f64 {
    -(-2.0 * x).exp_m1()
}

pub fn make_schedule(
    steps: usize,
    lambda: f64,
    kind: ScheduleKind,
    zeta_total: f64,
) -> Result<Schedule> {
    if steps == 0 {
        return Err(Error::invalid("schedule needs T >= 1"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be > 0, got {lambda}")));
    }
    if !(zeta_total > 0.0 && zeta_total.is_finite()) {
        return Err(Error::invalid(format!(
            "zeta_total must be > 0, got {zeta_total}"
        )));
    }
    let t_max = steps as f64;
    let mut zeta = vec![0.0; steps + 1];
    match kind {
        ScheduleKind::Constant => zeta[1..].fill(zeta_total / t_max),
        ScheduleKind::Cosine => {
            let cum = |t: usize| zeta_total * (1.0 - (FRAC_PI_2 * t as f64 / t_max).cos());
            for t in 1..=steps {
                zeta[t] = cum(t) - cum(t - 1);
            }
        }
    }
    if zeta[1..].iter().any(|&z| z <= 0.0) {
        return Err(Error::Numeric("non-positive per-step rate".into()));
    }
    let mut zeta_bar = vec![0.0; steps + 1];
    for t in 1..=steps {
        zeta_bar[t] = zeta_bar[t - 1] + zeta[t];
    }
    // Pin the terminal value exactly.
    zeta_bar[steps] = zeta_total;
    let lam2 = lambda * lambda;
    let sigma2_dt = zeta
        .iter()
        .enumerate()
        .map(|(t, &z)| {
            if t == 0 {
                0.0
            } else {
                lam2 * one_minus_exp_neg2(z)
            }
        })
        .collect();
    let m = zeta_bar.iter().map(|&zb| (-zb).exp()).collect();
    let v = zeta_bar
        .iter()
        .map(|&zb| lam2 * one_minus_exp_neg2(zb))
        .collect();
    Ok(Schedule {
        config: ScheduleConfig {
            steps,
            lambda,
            kind,
            zeta_total,
        },
        zeta,
        zeta_bar,
        sigma2_dt,
        m,
        v,
    })
}

impl Schedule {
    pub fn config(&self) -> ScheduleConfig {
        self.config
    }

    pub fn steps(&self) -> usize {
        self.config.steps
    }

    pub fn lambda(&self) -> f64 {
        self.config.lambda
    }

    /// Per-step rate for step `t` (t ≥ 1).
    pub fn zeta(&self, t: usize) -> f64 {
        self.zeta[t]
    }

    pub fn zeta_bar(&self, t: usize) -> f64 {
        self.zeta_bar[t]
    }

    /// Variance injected by one forward step, `lambda^2 (1 - e^{-2 zeta'_t})`.
    pub fn sigma2_dt(&self, t: usize) -> f64 {
        self.sigma2_dt[t]
    }

    pub fn step_std(&self, t: usize) -> f64 {
        self.sigma2_dt[t].sqrt()
    }

    /// Marginal mean coefficient `e^{-zeta_bar_t}`.
    pub fn m(&self, t: usize) -> f64 {
        self.m[t]
    }

    /// Marginal variance `lambda^2 (1 - e^{-2 zeta_bar_t})`.
    pub fn v(&self, t: usize) -> f64 {
        self.v[t]
    }

    /// Weight on the clean estimate in the bridge mean p(x_{t-1} | x_t, x_0).
    pub fn h(&self, t: usize) -> f64 {
        one_minus_exp_neg2(self.zeta[t]) / one_minus_exp_neg2(self.zeta_bar[t])
            * (-self.zeta_bar[t - 1]).exp()
    }

    /// Weight on the current state in the bridge mean.
    pub fn g(&self, t: usize) -> f64 {
        (-self.zeta[t]).exp() * one_minus_exp_neg2(self.zeta_bar[t - 1])
            / one_minus_exp_neg2(self.zeta_bar[t])
    }

    /// Variance of the exact bridge p(x_{t-1} | x_t, x_0).
    pub fn bridge_variance(&self, t: usize) -> f64 {
        self.v[t - 1] * self.sigma2_dt[t] / self.v[t]
    }

    pub(crate) fn check_step(&self, t: usize) -> Result<()> {
        if t > self.steps() {
            return Err(Error::invalid(format!(
                "step {t} outside [0, {}]",
                self.steps()
            )));
        }
        Ok(())
    }
}
