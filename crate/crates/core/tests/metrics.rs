use lact_core::metrics::{paired_compare, psnr, ssim, Psnr, SsimParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SSIM with a full 2-D Gaussian window evaluated pointwise at every valid position.
fn direct_ssim(a: &[f64], b: &[f64], w: usize, h: usize) -> f64 {
    let (win, sigma, c1, c2) = (11usize, 1.5f64, 0.01f64.powi(2), 0.03f64.powi(2));
    let c = (win as f64 - 1.0) / 2.0;
    let mut kernel = vec![0.0; win * win];
    for i in 0..win {
        for j in 0..win {
            let d2 = (i as f64 - c).powi(2) + (j as f64 - c).powi(2);
            kernel[i * win + j] = (-d2 / (2.0 * sigma * sigma)).exp();
        }
    }
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= norm);
    let mut total = 0.0;
    let mut count = 0;
    for r in 0..=h - win {
        for col in 0..=w - win {
            let (mut ma, mut mb) = (0.0, 0.0);
            for i in 0..win {
                for j in 0..win {
                    let k = kernel[i * win + j];
                    let idx = (r + i) * w + col + j;
                    ma += k * a[idx];
                    mb += k * b[idx];
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..win {
                for j in 0..win {
                    let k = kernel[i * win + j];
                    let idx = (r + i) * w + col + j;
                    va += k * (a[idx] - ma).powi(2);
                    vb += k * (b[idx] - mb).powi(2);
                    cov += k * (a[idx] - ma) * (b[idx] - mb);
                }
            }
            total += (2.0 * ma * mb + c1) * (2.0 * cov + c2)
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    total / count as f64
}

fn random_image(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen::<f64>()).collect()
}

#[test]
fn ssim_agrees_with_direct_window_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (w, h) = (27, 19);
    for _ in 0..5 {
        let a = random_image(&mut rng, w * h);
        let b: Vec<f64> = a.iter().map(|v| 0.7 * v + 0.3 * rng.gen::<f64>()).collect();
        let ours = ssim(&a, &b, w, h, &SsimParams::default()).unwrap();
        let direct = direct_ssim(&a, &b, w, h);
        assert!((ours - direct).abs() < 1e-10, "{ours} vs {direct}");
    }
}

#[test]
fn constant_shift_only_moves_the_luminance_term() {
    let mu: f64 = 0.4;
    let shift = 0.1;
    let a = vec![mu; 20 * 20];
    let b = vec![mu + shift; 20 * 20];
    let c1 = 0.01f64.powi(2);
    let expected = (2.0 * mu * (mu + shift) + c1) / (mu * mu + (mu + shift).powi(2) + c1);
    let got = ssim(&a, &b, 20, 20, &SsimParams::default()).unwrap();
    assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");

    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let tex = random_image(&mut rng, 20 * 20);
    let moved: Vec<f64> = tex.iter().map(|v| v + shift).collect();
    let s = ssim(&tex, &moved, 20, 20, &SsimParams::default()).unwrap();
    assert!(s < 1.0 && s > 0.9, "{s}");
    assert!((s - direct_ssim(&tex, &moved, 20, 20)).abs() < 1e-10);
}

#[test]
fn psnr_detects_shifts_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let a = random_image(&mut rng, 500);
    for c in [0.5f64, 0.1, 0.01] {
        let b: Vec<f64> = a.iter().map(|v| v + c).collect();
        let got = psnr(&a, &b, 1.0).unwrap().value();
        let expect = 10.0 * (1.0 / (c * c)).log10();
        assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
    }
}

#[test]
fn psnr_is_invariant_under_joint_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let a = random_image(&mut rng, 300);
    let b = random_image(&mut rng, 300);
    let mut idx: Vec<usize> = (0..300).collect();
    for i in (1..300).rev() {
        idx.swap(i, rng.gen_range(0..=i));
    }
    let pa: Vec<f64> = idx.iter().map(|&i| a[i]).collect();
    let pb: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
    let (x, y) = (
        psnr(&a, &b, 1.0).unwrap().value(),
        psnr(&pa, &pb, 1.0).unwrap().value(),
    );
    assert!((x - y).abs() < 1e-12);
    assert_eq!(psnr(&a, &a, 1.0).unwrap(), Psnr::Identical);
}

#[test]
fn paired_statistics_by_hand() {
    let a = [30.0, 28.5, 31.0];
    let b = [29.0, 29.0, 31.0];
    let s = paired_compare(&a, &b).unwrap();
    assert_eq!(s.deltas, vec![1.0, -0.5, 0.0]);
    assert!((s.mean_gap - 0.5 / 3.0).abs() < 1e-15);
    assert!((s.win_rate - 1.5 / 3.0).abs() < 1e-15);
    assert!(paired_compare(&a, &b[..2]).is_err());
}
