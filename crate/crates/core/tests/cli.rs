use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lact_core::phantoms_data::{manifest_path, read_dataset, Manifest};

fn lact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lact"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = lact(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    lact(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec!["simulate", "--out", s(&path), "--size", "16"];
    args.extend_from_slice(extra);
    ok(&args);
    path
}

#[test]
fn simulate_writes_the_requested_record_count_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate(dir.path(), "set.bin", &["--count", "32", "--seed", "4"]);
    assert_eq!(read_dataset(&path).unwrap().len(), 32);
    let manifest: Manifest =
        toml::from_str(&std::fs::read_to_string(manifest_path(&path)).unwrap()).unwrap();
    assert_eq!(manifest.count, 32);
    assert!(manifest
        .records
        .iter()
        .all(|r| r.measured == 61 && r.n_angles == 180));
}

#[test]
fn fixed_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a.bin", &["--count", "4", "--seed", "9"]);
    let b = simulate(
        dir.path(),
        "b.bin",
        &["--count", "4", "--seed", "9", "--jobs", "1"],
    );
    let c = simulate(dir.path(), "c.bin", &["--count", "4", "--seed", "10"]);
    let bytes = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(bytes(&a), bytes(&b));
    assert_ne!(bytes(&a), bytes(&c));
}

#[test]
fn point_snr_applies_to_every_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate(
        dir.path(),
        "snr.bin",
        &["--count", "5", "--snr", "10", "10"],
    );
    assert!(read_dataset(&path)
        .unwrap()
        .iter()
        .all(|r| r.snr_db == 10.0));
}

#[test]
fn oracle_on_noiseless_data_matches_measurements_and_evaluates_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(
        dir.path(),
        "clean.bin",
        &["--count", "3", "--snr", "300", "300"],
    );
    let recon = dir.path().join("recon");
    ok(&[
        "reconstruct",
        "--data",
        s(&data),
        "--oracle",
        "--out",
        s(&recon),
        "--steps",
        "20",
    ]);
    let residuals = std::fs::read_to_string(recon.join("residuals.csv")).unwrap();
    let lines: Vec<&str> = residuals.lines().collect();
    assert_eq!(lines[0], "index,measured_residual");
    for line in &lines[1..] {
        let r: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(r, 0.0, "{line}");
    }
    for name in [
        "record_0000.sino",
        "record_0000.fbp",
        "record_0000_sino.pgm",
        "record_0000_fbp.pgm",
        "config.toml",
    ] {
        assert!(recon.join(name).exists(), "{name}");
    }

    let eval = dir.path().join("eval");
    ok(&[
        "eval",
        "--data",
        s(&data),
        "--recon",
        s(&recon),
        "--out",
        s(&eval),
    ]);
    let csv = std::fs::read_to_string(eval.join("eval.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3);
    let summary = std::fs::read_to_string(eval.join("eval.toml")).unwrap();
    assert!(
        summary.contains("[sinogram]") && summary.contains("[image]"),
        "{summary}"
    );
}

#[test]
fn evaluating_truth_against_itself_reports_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "t.bin", &["--count", "2"]);
    let eval = dir.path().join("self");
    let stdout = ok(&[
        "eval",
        "--data",
        s(&data),
        "--recon",
        s(&data),
        "--out",
        s(&eval),
    ]);
    assert!(stdout.contains("identical"), "{stdout}");
    let csv = std::fs::read_to_string(eval.join("eval.csv")).unwrap();
    assert!(
        csv.lines()
            .skip(1)
            .all(|l| l.contains("identical") && l.contains(",1")),
        "{csv}"
    );
}

#[test]
fn fit_reconstruct_and_sweep_produce_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "d.bin", &["--count", "2"]);
    let model = dir.path().join("m.bin");
    ok(&[
        "fit",
        "--out",
        s(&model),
        "--size",
        "16",
        "--examples",
        "2",
        "--steps",
        "10",
    ]);
    let recon = dir.path().join("r");
    ok(&[
        "reconstruct",
        "--data",
        s(&data),
        "--model",
        s(&model),
        "--out",
        s(&recon),
        "--steps",
        "10",
        "--no-rectify",
        "--png",
        "--trace",
    ]);
    assert!(recon.join("record_0001_fbp.png").exists());
    assert!(recon.join("record_0001.trace").exists());
    let sweep = dir.path().join("sw");
    ok(&[
        "sweep",
        "--data",
        s(&data),
        "--model",
        s(&model),
        "--out",
        s(&sweep),
        "--steps",
        "10",
        "--runs",
        "2",
        "--betas",
        "0,0.5,1",
        "--errors",
        "0,1",
    ]);
    let csv = std::fs::read_to_string(sweep.join("sweep.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "error,beta,sino_psnr,sino_ssim,image_psnr,image_ssim"
    );
    assert_eq!(csv.lines().count(), 1 + 6);
    for f in [
        "sweep_sino_ssim.pgm",
        "sweep_sino_ssim.png",
        "sweep_image_psnr.png",
    ] {
        assert!(sweep.join(f).exists(), "{f}");
    }
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 3\n[protocol]\ncount = 5\nsize = 16\n[guidance]\nbeta = 0.25\n",
    )
    .unwrap();
    let shown = ok(&["--config", s(&cfg), "show-config"]);
    assert!(
        shown.contains("seed = 3") && shown.contains("beta = 0.25"),
        "{shown}"
    );
    let data = dir.path().join("c.bin");
    ok(&[
        "--config",
        s(&cfg),
        "simulate",
        "--out",
        s(&data),
        "--count",
        "2",
    ]);
    assert_eq!(read_dataset(&data).unwrap().len(), 2);
    let data5 = dir.path().join("c5.bin");
    ok(&["--config", s(&cfg), "simulate", "--out", s(&data5)]);
    assert_eq!(read_dataset(&data5).unwrap().len(), 5);
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "e.bin", &["--count", "1"]);
    let out = dir.path().join("o");
    assert_eq!(code(&["simulate", "--bogus"]), 2);
    assert_eq!(
        code(&[
            "reconstruct",
            "--data",
            s(&data),
            "--oracle",
            "--out",
            s(&out),
            "--beta",
            "3"
        ]),
        2
    );
    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "sead = 1\n").unwrap();
    assert_eq!(code(&["--config", s(&bad_cfg), "show-config"]), 2);
    let missing = dir.path().join("nope.bin");
    assert_eq!(
        code(&[
            "reconstruct",
            "--data",
            s(&data),
            "--model",
            s(&missing),
            "--out",
            s(&out)
        ]),
        3
    );
    let garbage = dir.path().join("garbage.bin");
    std::fs::write(&garbage, b"not a dataset").unwrap();
    assert_eq!(
        code(&[
            "eval",
            "--data",
            s(&garbage),
            "--recon",
            s(&data),
            "--out",
            s(&out)
        ]),
        3
    );
    assert_eq!(code(&["show-config"]), 0);
}
