//! Behavior tests for the command-line interface: file outputs, metric
//! reporting, exit codes and config/environment overrides.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gsdenoise"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut full = args.to_vec();
    let d = dir.to_str().unwrap();
    full.extend_from_slice(&["--out-dir", d]);
    run(&full)
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_csv(path: &Path) -> Vec<f64> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split_once(',').unwrap().1.parse().unwrap())
        .collect()
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (s / a.len() as f64).sqrt()
}

fn metric_from_stdout(out: &Output, key: &str) -> f64 {
    let text = String::from_utf8_lossy(&out.stdout);
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key}= line in: {text}"))
        .parse()
        .unwrap()
}

#[test]
fn synth_writes_noisy_signal_with_expected_noise_level() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run_in(
        dir.path(),
        &["synth", "--n", "500", "--noise", "0.1", "--seed", "42"],
    ));
    let clean = read_csv(&dir.path().join("clean.csv"));
    let noisy = read_csv(&dir.path().join("noisy.csv"));
    let e = rmse(&clean, &noisy);
    assert!((e - 0.1).abs() < 0.01, "noise rmse {e}");
}

#[test]
fn synth_zero_noise_writes_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run_in(
        dir.path(),
        &["synth", "--n", "100", "--noise", "0", "--seed", "1"],
    ));
    assert_eq!(
        std::fs::read(dir.path().join("clean.csv")).unwrap(),
        std::fs::read(dir.path().join("noisy.csv")).unwrap()
    );
}

#[test]
fn synth_rejects_invalid_length() {
    let out = run(&["synth", "--n", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_writes_pgm_images() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run_in(
        dir.path(),
        &["synth", "--rows", "32", "--cols", "48", "--seed", "3"],
    ));
    let clean = std::fs::read(dir.path().join("clean.pgm")).unwrap();
    assert!(clean.starts_with(b"P5\n48 32\n255\n"));
    assert_eq!(clean.len(), b"P5\n48 32\n255\n".len() + 32 * 48);
}

#[test]
fn denoise_bf_reduces_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run_in(
        dir.path(),
        &["synth", "--n", "500", "--noise", "0.1", "--seed", "42"],
    ));
    let clean_path = dir.path().join("clean.csv");
    let noisy_path = dir.path().join("noisy.csv");
    let out = run_in(
        dir.path(),
        &[
            "denoise",
            "--filter",
            "bf",
            "--iters",
            "500",
            "--half-width",
            "1",
            "--sigma-r",
            "0.1",
            "--reference",
            clean_path.to_str().unwrap(),
            noisy_path.to_str().unwrap(),
        ],
    );
    assert_ok(&out);
    let clean = read_csv(&clean_path);
    let noisy = read_csv(&noisy_path);
    let denoised = read_csv(&dir.path().join("denoised.csv"));
    assert!(rmse(&clean, &denoised) < rmse(&clean, &noisy));
    let reported = metric_from_stdout(&out, "rmse");
    assert!((reported - rmse(&clean, &denoised)).abs() < 1e-9);
}

#[test]
fn denoise_bf_cg_with_clean_guidance_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run_in(
        dir.path(),
        &["synth", "--n", "500", "--noise", "0.1", "--seed", "42"],
    ));
    let clean_path = dir.path().join("clean.csv");
    let noisy_path = dir.path().join("noisy.csv");
    let trace_path = dir.path().join("trace.csv");
    let out = run_in(
        dir.path(),
        &[
            "denoise",
            "--filter",
            "bf-cg",
            "--iters",
            "20",
            "--guidance",
            clean_path.to_str().unwrap(),
            "--reference",
            clean_path.to_str().unwrap(),
            "--trace",
            trace_path.to_str().unwrap(),
            noisy_path.to_str().unwrap(),
        ],
    );
    assert_ok(&out);
    let clean = read_csv(&clean_path);
    let noisy = read_csv(&noisy_path);
    let denoised = read_csv(&dir.path().join("denoised.csv"));
    assert!(rmse(&clean, &denoised) < 0.5 * rmse(&clean, &noisy));

    let trace = std::fs::read_to_string(&trace_path).unwrap();
    let rows: Vec<&str> = trace.lines().collect();
    assert_eq!(rows.len(), 20);
    // k, residual norm, rmse-vs-reference
    assert_eq!(rows[0].split(',').count(), 3);
}

#[test]
fn denoise_lobpcg_improves_image_psnr() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run_in(
        dir.path(),
        &["synth", "--rows", "64", "--cols", "64", "--noise", "0.1", "--seed", "7"],
    ));
    let clean_path = dir.path().join("clean.pgm");
    let noisy_path = dir.path().join("noisy.pgm");
    let noisy_metrics = run_in(
        dir.path(),
        &[
            "denoise",
            "--filter",
            "lobpcg",
            "--iters",
            "20",
            "--constraint",
            "--reference",
            clean_path.to_str().unwrap(),
            noisy_path.to_str().unwrap(),
        ],
    );
    assert_ok(&noisy_metrics);
    let psnr_out = metric_from_stdout(&noisy_metrics, "psnr");
    // the quantized noisy image sits near 20 dB; the filter must gain
    assert!(psnr_out > 20.3, "psnr {psnr_out}");
    assert!(dir.path().join("denoised.pgm").exists());
}

#[test]
fn denoise_rejects_unknown_filter_and_trace_misuse() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run_in(
        dir.path(),
        &["synth", "--n", "50", "--seed", "1"],
    ));
    let noisy = dir.path().join("noisy.csv");
    let out = run(&["denoise", "--filter", "median", noisy.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&[
        "denoise",
        "--filter",
        "bf",
        "--trace",
        "/tmp/t.csv",
        noisy.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn denoise_malformed_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "definitely,not\n0.5,a,csv\n").unwrap();
    let out = run(&["denoise", "--filter", "bf", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    let truncated = dir.path().join("trunc.pgm");
    std::fs::write(&truncated, b"P5\n8 8\n255\n\x01\x02").unwrap();
    let out = run(&["denoise", "--filter", "bf", truncated.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn compare_scenario_metrics_beat_noise() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["compare", "--scenario", "1d-500", "--seed", "42"],
    );
    assert_ok(&out);
    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut noisy_rmse = None;
    let mut filter_rmses = Vec::new();
    for line in metrics.lines().skip(1) {
        let mut fields = line.split(',');
        let name = fields.next().unwrap();
        let r: f64 = fields.next().unwrap().parse().unwrap();
        if name == "noisy" {
            noisy_rmse = Some(r);
        } else {
            filter_rmses.push(r);
        }
    }
    let noisy_rmse = noisy_rmse.expect("noisy row");
    assert_eq!(filter_rmses.len(), 3);
    for r in &filter_rmses {
        assert!(*r < 0.5 * noisy_rmse);
    }
    let hi = filter_rmses.iter().cloned().fold(f64::MIN, f64::max);
    let lo = filter_rmses.iter().cloned().fold(f64::MAX, f64::min);
    assert!(hi / lo < 2.0, "spread {}", hi / lo);
    assert!(dir.path().join("compare.svg").exists());
    // combined csv has index,clean,noisy + 3 outputs + 3 errors
    let combined = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert_eq!(combined.lines().next().unwrap().split(',').count(), 9);
    assert_eq!(combined.lines().count(), 501);
}

#[test]
fn compare_image_scenario_reports_psnr_band() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["compare", "--scenario", "image", "--seed", "7"]);
    assert_ok(&out);
    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut noisy_psnr = None;
    let mut gains = Vec::new();
    for line in metrics.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let p: f64 = fields[2].parse().unwrap();
        if fields[0] == "noisy" {
            noisy_psnr = Some(p);
        } else {
            gains.push((fields[0].to_string(), p));
        }
    }
    let noisy_psnr = noisy_psnr.unwrap();
    assert!((19.5..=20.7).contains(&noisy_psnr), "input psnr {noisy_psnr}");
    assert_eq!(gains.len(), 4);
    for (name, p) in &gains {
        assert!(p - noisy_psnr >= 0.3, "{name} gained only {}", p - noisy_psnr);
        assert!(dir.path().join(format!("{name}.pgm")).exists());
    }
}

#[test]
fn spectrum_of_path3_matches_oracle_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["spectrum", "--graph", "path", "--n", "3"]);
    assert_ok(&out);
    let values = read_csv(&dir.path().join("spectrum.csv"));
    let expect = [0.0, 1.0, 3.0];
    for (v, e) in values.iter().zip(expect.iter()) {
        assert!((v - e).abs() < 1e-10, "{v} vs {e}");
    }
}

#[test]
fn spectrum_of_constant_signal_concentrates_at_zero_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let sig = dir.path().join("const.csv");
    let mut csv = String::new();
    for i in 0..12 {
        csv.push_str(&format!("{i},0.5\n"));
    }
    std::fs::write(&sig, csv).unwrap();
    let out = run_in(
        dir.path(),
        &["spectrum", "--graph", "bf", "--input", sig.to_str().unwrap()],
    );
    assert_ok(&out);
    let mags = read_csv(&dir.path().join("gft.csv"));
    assert!(mags[0] > 1.0);
    for m in &mags[1..] {
        assert!(*m < 1e-10);
    }
}

#[test]
fn spectrum_dumps_weights_as_edge_csv() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("weights.csv");
    let out = run_in(
        dir.path(),
        &[
            "spectrum",
            "--graph",
            "path",
            "--n",
            "4",
            "--dump-weights",
            dump.to_str().unwrap(),
        ],
    );
    assert_ok(&out);
    let text = std::fs::read_to_string(&dump).unwrap();
    // unit path graph has 3 edges and no self-loops
    assert_eq!(text, "0,1,1\n1,2,1\n2,3,1\n");
}

#[test]
fn spectrum_over_cap_exits_4_without_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["spectrum", "--graph", "path", "--n", "5000"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(!dir.path().join("spectrum.csv").exists());
}

#[test]
fn config_file_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gsdenoise.conf");
    std::fs::write(&cfg, "noise=0\nseed=9\nn=64\n").unwrap();
    assert_ok(&run_in(
        dir.path(),
        &["synth", "--config", cfg.to_str().unwrap()],
    ));
    assert_eq!(
        std::fs::read(dir.path().join("clean.csv")).unwrap(),
        std::fs::read(dir.path().join("noisy.csv")).unwrap()
    );
    // explicit flag wins over the config value
    assert_ok(&run_in(
        dir.path(),
        &["synth", "--config", cfg.to_str().unwrap(), "--noise", "0.2"],
    ));
    assert_ne!(
        std::fs::read(dir.path().join("clean.csv")).unwrap(),
        std::fs::read(dir.path().join("noisy.csv")).unwrap()
    );
}

#[test]
fn out_dir_env_variable_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["synth", "--n", "16", "--seed", "5"])
        .env("GSDENOISE_OUT_DIR", dir.path())
        .output()
        .expect("spawn");
    assert_ok(&out);
    assert!(dir.path().join("clean.csv").exists());
}
