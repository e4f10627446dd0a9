use lact_core::mrsde::{make_schedule, ScheduleKind};
use lact_core::rectify::{coefficients, injected_noise_std, rnsd, rnsd_plus};
use lact_core::tomo_ops::{mask_apply, uniform_angles, AngleMask, Sinogram};
use proptest::prelude::*;

proptest! {
    #[test]
    fn measured_row_variance_stays_within_the_step_budget(
        lambda in 0.01f64..1.0,
        zeta_total in 0.5f64..8.0,
        beta in 0.0f64..=1.0,
        sigma_y in 0.0f64..2.0,
        cosine in any::<bool>(),
    ) {
        let kind = if cosine { ScheduleKind::Cosine } else { ScheduleKind::Constant };
        let s = make_schedule(60, lambda, kind, zeta_total).unwrap();
        for t in 1..=60 {
            let c = coefficients(t, &s, beta, sigma_y).unwrap();
            let q = s.sigma2_dt(t);
            let total = (c.h_t * c.lambda_t * c.sigma_y).powi(2) + c.gamma_t;
            prop_assert!((0.0..=1.0).contains(&c.lambda_t));
            prop_assert!(c.gamma_t >= 0.0);
            prop_assert!(total <= q * (1.0 + 1e-12));
            if c.lambda_t < 1.0 && beta == 1.0 {
                prop_assert!((total - q).abs() <= 1e-12 * q);
            }
        }
    }

    #[test]
    fn guidance_strength_grows_with_step_variance(
        t in 1usize..=40,
        beta in 0.0f64..=1.0,
        sigma_y in 0.0f64..1.0,
        l1 in 0.01f64..0.5,
        l2 in 0.01f64..0.5,
    ) {
        // Same rates, different lambda: sigma2_dt scales with lambda^2 while h_t is unchanged.
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let a = make_schedule(40, lo, ScheduleKind::Constant, 4.0).unwrap();
        let b = make_schedule(40, hi, ScheduleKind::Constant, 4.0).unwrap();
        let (ca, cb) = (coefficients(t, &a, beta, sigma_y).unwrap(), coefficients(t, &b, beta, sigma_y).unwrap());
        prop_assert!(cb.lambda_t >= ca.lambda_t);
    }
}

#[test]
fn noiseless_reduction_chain() {
    let s = make_schedule(30, 0.1, ScheduleKind::Constant, 100f64.ln()).unwrap();
    let angles = uniform_angles(6);
    let x = Sinogram::new(angles.clone(), 3, (0..18).map(|v| v as f64 * 0.1).collect()).unwrap();
    let target = Sinogram::new(angles.clone(), 3, vec![0.5; 18]).unwrap();
    let mask = AngleMask::new(angles, vec![true, false, true, true, false, false]).unwrap();
    let y = mask_apply(&target, &mask).unwrap();
    for t in 1..=30 {
        let c = coefficients(t, &s, 0.4, 0.0).unwrap();
        let plus = rnsd_plus(&x, &y, &mask, &c).unwrap();
        assert_eq!(plus, rnsd(&x, &y, &mask).unwrap());
        assert_eq!(mask_apply(&plus, &mask).unwrap(), y);
        let field = injected_noise_std(&mask, &c, &s, t, 3).unwrap();
        assert!(field.iter().all(|&v| v == s.step_std(t)));
    }
}
