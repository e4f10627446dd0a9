use lact_core::mrsde::{
    forward_sample_with, forward_step, make_schedule, reverse_step, rng_from_seed, sample,
    sample_with, ReverseMode, SamplerState, Schedule, ScheduleKind,
};
use lact_core::score_models::{GaussianPrior, GaussianScore};
use lact_core::tomo_ops::{uniform_angles, Sinogram};
use rand::Rng;
use rand_distr::StandardNormal;

fn scalar(v: f64) -> Sinogram {
    Sinogram::new(vec![0.0], 1, vec![v]).unwrap()
}

fn sched() -> Schedule {
    make_schedule(100, 0.1, ScheduleKind::Constant, 100f64.ln()).unwrap()
}

/// Bridge mean and variance by conditioning the joint Gaussian of (x_{t-1}, x_t) given x_0.
fn conditioned_bridge(s: &Schedule, t: usize, x0: f64, xt: f64, mu: f64) -> (f64, f64) {
    let a = (-s.zeta(t)).exp();
    let q = s.lambda().powi(2) * (1.0 - (-2.0 * s.zeta(t)).exp());
    let prev_mean = mu + (-s.zeta_bar(t - 1)).exp() * (x0 - mu);
    let prev_var = s.lambda().powi(2) * (1.0 - (-2.0 * s.zeta_bar(t - 1)).exp());
    let cross = a * prev_var;
    let var_t = a * a * prev_var + q;
    let mean = prev_mean + cross / var_t * (xt - (mu + a * (prev_mean - mu)));
    (mean, prev_var - cross * cross / var_t)
}

#[test]
fn bridge_coefficients_match_gaussian_conditioning() {
    for kind in [ScheduleKind::Constant, ScheduleKind::Cosine] {
        let s = make_schedule(50, 0.3, kind, 4.0).unwrap();
        for t in 2..=50 {
            let (x0, xt, mu) = (0.7, -0.2, 0.1);
            let (mean, var) = conditioned_bridge(&s, t, x0, xt, mu);
            let ours = mu + s.h(t) * (x0 - mu) + s.g(t) * (xt - mu);
            assert!((ours - mean).abs() < 1e-12, "t={t}");
            assert!((s.bridge_variance(t) - var).abs() < 1e-12, "t={t}");
        }
    }
}

#[test]
fn reverse_step_samples_the_bridge() {
    let s = sched();
    let (x0, xt, mu, t) = (0.5, 0.3, 0.1, 40);
    let (mean, var) = conditioned_bridge(&s, t, x0, xt, mu);
    let state = SamplerState::new(scalar(xt), t, scalar(mu)).unwrap();
    let std = [s.bridge_variance(t).sqrt()];
    let mut rng = rng_from_seed(21);
    let n = 10_000;
    let draws: Vec<f64> = (0..n)
        .map(|_| {
            reverse_step(&state, &scalar(x0), &s, &std, &mut rng)
                .unwrap()
                .x_t
                .data()[0]
        })
        .collect();
    let m = draws.iter().sum::<f64>() / n as f64;
    let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!(
        (m - mean).abs() < 3.0 * (var / n as f64).sqrt(),
        "{m} vs {mean}"
    );
    assert!(
        (v - var).abs() < 3.0 * var * (2.0 / (n - 1) as f64).sqrt(),
        "{v} vs {var}"
    );
}

#[test]
fn reverse_step_preserves_the_marginal_mean() {
    let s = sched();
    let (a0, s0, mu, t) = (0.6, 0.2, 0.1, 30);
    let n = 10_000;
    let mut rng = rng_from_seed(22);
    let mut acc = 0.0;
    for _ in 0..n {
        let x0 = a0 + s0 * rng.sample::<f64, _>(StandardNormal);
        let xt = forward_sample_with(&scalar(x0), &scalar(mu), t, &s, &mut rng).unwrap();
        let state = SamplerState::new(xt, t, scalar(mu)).unwrap();
        let std = [s.bridge_variance(t).sqrt()];
        acc += reverse_step(&state, &scalar(x0), &s, &std, &mut rng)
            .unwrap()
            .x_t
            .data()[0];
    }
    let got = acc / n as f64;
    let expect = mu + s.m(t - 1) * (a0 - mu);
    let spread = (s.m(t - 1).powi(2) * s0 * s0 + s.v(t - 1)).sqrt();
    assert!(
        (got - expect).abs() < 3.0 * spread / (n as f64).sqrt(),
        "{got} vs {expect}"
    );
}

#[test]
fn chained_forward_steps_reproduce_the_closed_form_marginal() {
    let s = sched();
    let (x0, mu) = (0.9, -0.1);
    let n = 10_000;
    let mut rng = rng_from_seed(23);
    let t = 50;
    let draws: Vec<f64> = (0..n)
        .map(|_| {
            let mut x = scalar(x0);
            for k in 1..=t {
                x = forward_step(&x, &scalar(mu), k, &s, &mut rng).unwrap();
            }
            x.data()[0]
        })
        .collect();
    let m = draws.iter().sum::<f64>() / n as f64;
    let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    let (em, ev) = (mu + s.m(t) * (x0 - mu), s.v(t));
    assert!((m - em).abs() < 3.0 * (ev / n as f64).sqrt());
    assert!((v - ev).abs() < 3.0 * ev * (2.0 / (n - 1) as f64).sqrt());
}

#[test]
fn mean_reversion_contracts_towards_mu() {
    let s = sched();
    let gap = 0.8;
    let dist: Vec<f64> = (0..=100).map(|t| s.m(t) * gap).collect();
    assert_eq!(dist[0], gap);
    assert!(dist.windows(2).all(|w| w[1] < w[0]));
    assert!((dist[100] - 0.01 * gap).abs() < 1e-12);
}

#[test]
fn analytic_score_sampling_recovers_the_prior() {
    let s = sched();
    let k = 16;
    let angles = uniform_angles(4);
    let mean0: Vec<f64> = (0..k).map(|i| 0.2 + 0.04 * i as f64).collect();
    let s0 = 0.15;
    let prior = GaussianPrior::new(
        Sinogram::new(angles.clone(), 4, mean0.clone()).unwrap(),
        vec![s0 * s0; k],
    )
    .unwrap();
    let model = GaussianScore::new(prior);
    let mu = Sinogram::new(angles, 4, vec![0.5; k]).unwrap();
    let runs = 500;
    let outs: Vec<Sinogram> = (0..runs)
        .map(|seed| sample(&mu, &model, &s, seed).unwrap())
        .collect();
    for (i, &prior_mean) in mean0.iter().enumerate() {
        let m = outs.iter().map(|o| o.data()[i]).sum::<f64>() / runs as f64;
        let v = outs.iter().map(|o| (o.data()[i] - m).powi(2)).sum::<f64>() / (runs - 1) as f64;
        assert!(
            (m - prior_mean).abs() < 3.0 * s0 / (runs as f64).sqrt(),
            "entry {i}: mean {m}"
        );
        assert!(
            (v - s0 * s0).abs() < 3.0 * s0 * s0 * (2.0 / (runs - 1) as f64).sqrt(),
            "entry {i}: var {v}"
        );
    }
}

#[test]
fn euler_maruyama_mode_runs_and_stays_near_the_prior() {
    let s = sched();
    let prior = GaussianPrior::new(scalar(0.4), vec![0.01]).unwrap();
    let model = GaussianScore::new(prior);
    let runs = 300;
    let m = (0..runs)
        .map(|seed| {
            sample_with(&scalar(0.0), &model, &s, ReverseMode::EulerMaruyama, seed)
                .unwrap()
                .data()[0]
        })
        .sum::<f64>()
        / runs as f64;
    assert!(m.is_finite());
    assert!((m - 0.4).abs() < 0.05, "{m}");
}
