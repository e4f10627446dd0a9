use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use lact_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(lact_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn disk_image(n: usize, r: f64) -> *mut LactImage {
    let c = (n as f64 - 1.0) / 2.0;
    let data: Vec<f64> = (0..n * n)
        .map(|i| {
            let (x, y) = ((i % n) as f64 - c, (i / n) as f64 - c);
            if x * x + y * y <= r * r {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let mut img = ptr::null_mut();
    assert_eq!(
        unsafe { lact_image_new(n, n, data.as_ptr(), &mut img) },
        LactStatus::Ok
    );
    img
}

fn angles(n: usize) -> Vec<f64> {
    (0..n).map(|i| 180.0 * i as f64 / n as f64).collect()
}

fn sino_data(s: *const LactSinogram) -> Vec<f64> {
    let len = unsafe { lact_sinogram_n_angles(s) * lact_sinogram_n_detectors(s) };
    let mut v = vec![0.0; len];
    assert_eq!(
        unsafe { lact_sinogram_copy_data(s, v.as_mut_ptr(), len) },
        LactStatus::Ok
    );
    v
}

#[test]
fn radon_matches_core() {
    let n = 24;
    let img = disk_image(n, 6.0);
    let a = angles(30);
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(
            lact_radon(img, a.as_ptr(), a.len(), n, &mut s),
            LactStatus::Ok
        );
        assert_eq!(lact_sinogram_n_angles(s), 30);
        assert_eq!(lact_sinogram_n_detectors(s), n);
    }
    let core_img = {
        let mut d = vec![0.0; n * n];
        unsafe { lact_image_copy_data(img, d.as_mut_ptr(), d.len()) };
        lact_core::tomo_ops::Image::new(n, n, d).unwrap()
    };
    let expected = lact_core::tomo_ops::radon(&core_img, &a, n).unwrap();
    assert_eq!(sino_data(s), expected.data());
    unsafe {
        lact_sinogram_free(s);
        lact_image_free(img);
    }
}

#[test]
fn fbp_round_trip_and_size_check() {
    let n = 32;
    let img = disk_image(n, 8.0);
    let a = angles(90);
    let mut s = ptr::null_mut();
    let mut rec = ptr::null_mut();
    unsafe {
        assert_eq!(
            lact_radon(img, a.as_ptr(), a.len(), n, &mut s),
            LactStatus::Ok
        );
        assert_eq!(lact_fbp(s, LactFilter::RamLak, n, &mut rec), LactStatus::Ok);
        assert_eq!(lact_image_width(rec), n);
        let mut d = vec![0.0; n * n];
        assert_eq!(
            lact_image_copy_data(rec, d.as_mut_ptr(), d.len()),
            LactStatus::Ok
        );
        let centre = d[(n / 2) * n + n / 2];
        assert!((centre - 1.0).abs() < 0.15, "{centre}");

        let mut bad = ptr::null_mut();
        assert_eq!(
            lact_fbp(s, LactFilter::Hann, n + 1, &mut bad),
            LactStatus::InvalidArgument
        );
        assert!(bad.is_null());
        assert!(!last_error().is_empty());

        let mut short = vec![0.0; 3];
        assert_eq!(
            lact_image_copy_data(rec, short.as_mut_ptr(), 3),
            LactStatus::ShapeMismatch
        );
        lact_image_free(rec);
        lact_sinogram_free(s);
        lact_image_free(img);
    }
}

#[test]
fn coefficients_and_rnsd_plus() {
    let mut sched = ptr::null_mut();
    unsafe {
        assert_eq!(
            lact_schedule_new(
                100,
                0.1,
                LactScheduleKind::Constant,
                100f64.ln(),
                &mut sched
            ),
            LactStatus::Ok
        );
        assert_eq!(lact_schedule_steps(sched), 100);
        let mut c = LactCoefficients {
            lambda_t: 0.0,
            gamma_t: 0.0,
            h_t: 0.0,
            beta: 0.0,
            sigma_y: 0.0,
        };
        assert_eq!(
            lact_coefficients(sched, 1, 1.0, 0.0, &mut c),
            LactStatus::Ok
        );
        assert_eq!(c.h_t, 1.0);
        assert_eq!(c.lambda_t, 1.0);
        assert_eq!(
            lact_coefficients(sched, 0, 1.0, 0.0, &mut c),
            LactStatus::InvalidArgument
        );
        assert_eq!(
            lact_coefficients(sched, 1, 2.0, 0.0, &mut c),
            LactStatus::InvalidArgument
        );

        let a = angles(4);
        let x: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let yv = [1.0; 8];
        let (mut xs, mut ys, mut mask, mut out) = (
            ptr::null_mut(),
            ptr::null_mut(),
            ptr::null_mut(),
            ptr::null_mut(),
        );
        assert_eq!(
            lact_sinogram_new(a.as_ptr(), 4, 2, x.as_ptr(), &mut xs),
            LactStatus::Ok
        );
        assert_eq!(
            lact_sinogram_new(a.as_ptr(), 4, 2, yv.as_ptr(), &mut ys),
            LactStatus::Ok
        );
        let m = [1u8, 0, 1, 0];
        assert_eq!(
            lact_mask_new(a.as_ptr(), m.as_ptr(), 4, &mut mask),
            LactStatus::Ok
        );
        assert_eq!(lact_mask_measured_count(mask), 2);
        c.lambda_t = 0.5;
        assert_eq!(lact_rnsd_plus(xs, ys, mask, &c, &mut out), LactStatus::Ok);
        assert_eq!(sino_data(out), vec![0.5, 1.0, 2.0, 3.0, 2.5, 3.0, 6.0, 7.0]);
        c.lambda_t = 1.5;
        let mut bad = ptr::null_mut();
        assert_eq!(
            lact_rnsd_plus(xs, ys, mask, &c, &mut bad),
            LactStatus::InvalidArgument
        );
        for s in [xs, ys, out] {
            lact_sinogram_free(s);
        }
        lact_mask_free(mask);
        lact_schedule_free(sched);
    }
}

#[test]
fn oracle_reconstruction_is_consistent() {
    let n = 16;
    let img = disk_image(n, 5.0);
    let a = angles(18);
    let measured: Vec<u8> = (0..18).map(|i| u8::from((4..13).contains(&i))).collect();
    unsafe {
        let (mut s, mut mask, mut sched, mut model, mut out) = (
            ptr::null_mut(),
            ptr::null_mut(),
            ptr::null_mut(),
            ptr::null_mut(),
            ptr::null_mut(),
        );
        assert_eq!(lact_radon(img, a.as_ptr(), 18, n, &mut s), LactStatus::Ok);
        assert_eq!(
            lact_mask_new(a.as_ptr(), measured.as_ptr(), 18, &mut mask),
            LactStatus::Ok
        );
        assert_eq!(
            lact_schedule_new(30, 0.1, LactScheduleKind::Cosine, 100f64.ln(), &mut sched),
            LactStatus::Ok
        );
        assert_eq!(lact_model_oracle(s, &mut model), LactStatus::Ok);
        let g = lact_guidance_default();
        assert_eq!(
            lact_reconstruct(s, ptr::null(), mask, model, sched, &g, 3, &mut out),
            LactStatus::Ok
        );
        assert_eq!(sino_data(out), sino_data(s));

        let mut bad_g = g;
        bad_g.hop = 0;
        let mut none = ptr::null_mut();
        assert_eq!(
            lact_reconstruct(s, ptr::null(), mask, model, sched, &bad_g, 3, &mut none),
            LactStatus::InvalidArgument
        );
        lact_sinogram_free(out);
        lact_model_free(model);
        lact_schedule_free(sched);
        lact_mask_free(mask);
        lact_sinogram_free(s);
        lact_image_free(img);
    }
}

#[test]
fn null_pointers_and_missing_files() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(
            lact_sinogram_new(ptr::null(), 3, 2, ptr::null(), &mut s),
            LactStatus::NullPointer
        );
        assert!(last_error().contains("null"));
        let a = angles(2);
        let d = [0.0; 4];
        assert_eq!(
            lact_sinogram_new(a.as_ptr(), 2, 2, d.as_ptr(), ptr::null_mut()),
            LactStatus::NullPointer
        );
        assert_eq!(lact_sinogram_n_angles(ptr::null()), 0);
        lact_sinogram_free(ptr::null_mut());

        let path = CString::new("/nonexistent/model.bin").unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(
            lact_model_load_linear(path.as_ptr(), &mut m),
            LactStatus::Io
        );
        assert!(m.is_null());
        assert!(last_error().contains("model.bin"));
    }
}

#[test]
fn loads_linear_model_file() {
    use lact_core::score_models::{LinearDenoiser, Patch};
    let patch = Patch {
        half_angle: 0,
        half_detector: 0,
    };
    let model = LinearDenoiser::from_parts(patch, vec![vec![0.5]; 5], vec![0.1; 5]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    lact_core::io::save_linear_denoiser(&path, &model).unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(lact_model_load_linear(c.as_ptr(), &mut m), LactStatus::Ok);
        lact_model_free(m);
    }
}

fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("liblact_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_against_header() {
    let Some(lib) = static_lib() else {
        eprintln!("skipping: static library not found next to the test binary");
        return;
    };
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler ({cc})");
        return;
    }
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-I")
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
