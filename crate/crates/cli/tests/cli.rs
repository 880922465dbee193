//! End-to-end runs of the `drc-sim` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use drc_cli::config::RunConfig;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use serde_json::Value;

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    /// Scratch directory holding `run.toml` with `config`.
    fn new(config: &str) -> Run {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("run.toml"), config).unwrap();
        Run { dir }
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn exec(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_drc-sim"))
            .arg("--config")
            .arg(self.dir.path().join("run.toml"))
            .arg("--out")
            .arg(self.out())
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let o = self.exec(args);
        assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    }

    /// Runs a command expected to fail and returns its stderr.
    fn fails(&self, args: &[&str]) -> String {
        let o = self.exec(args);
        assert!(!o.status.success(), "{args:?} unexpectedly succeeded");
        String::from_utf8(o.stderr).unwrap()
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.out().join(name)).unwrap()).unwrap()
    }

    fn text(&self, name: &str) -> String {
        std::fs::read_to_string(self.out().join(name)).unwrap()
    }
}

fn field(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} missing in {v}"))
}

/// Rows of a CSV with `#` comments and one header line.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn psd_column(path: &Path) -> Vec<(f64, f64)> {
    csv_rows(&std::fs::read_to_string(path).unwrap())
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect()
}

fn single_line_error(stderr: &str, kind: &str) {
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "{stderr}");
    assert!(lines[0].starts_with(&format!("error: kind={kind} msg=")), "{stderr}");
}

#[test]
fn printed_config_round_trips() {
    let run = Run::new("seed = 9\n[spectrum]\nmean_n = [0.1, 0.2, 0.3]\n");
    let text = run.ok(&["--print-config"]);
    let cfg = RunConfig::from_toml(&text).unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.spectrum.mean_n, [0.1, 0.2, 0.3]);
    assert_eq!(cfg.scan, RunConfig::default().scan);
    let again = Run::new(&text);
    // The output directory is overridden on the command line in both runs.
    let second = RunConfig::from_toml(&again.ok(&["--print-config"])).unwrap();
    assert_eq!(RunConfig { out_dir: PathBuf::new(), ..second }, RunConfig { out_dir: PathBuf::new(), ..cfg });
}

#[test]
fn unknown_key_is_named() {
    let run = Run::new("[trap]\nfrequency_khz = [1.0, 2.0, 3.0]\n");
    let err = run.fails(&["--print-config"]);
    single_line_error(&err, "parse");
    assert!(err.contains("frequency_khz"), "{err}");
}

#[test]
fn single_point_scan_is_rejected() {
    let run = Run::new("[scan]\npoints = 1\n");
    let err = run.fails(&["resonances"]);
    single_line_error(&err, "invalid_config");
    assert!(err.contains("scan.points"));
}

#[test]
fn unknown_spectrum_mode_fails_with_one_line() {
    let run = Run::new("");
    let err = run.fails(&["spectrum", "bogus"]);
    single_line_error(&err, "invalid_config");
    assert!(err.contains("bogus"));
}

#[test]
fn pipeline_is_deterministic_per_seed() {
    let cfg = "[signal]\nrealizations = 2\nduration_s = 0.01\n";
    let a = Run::new(cfg);
    let b = Run::new(cfg);
    a.ok(&["--seed", "5", "spectrum", "pipeline"]);
    b.ok(&["--seed", "5", "spectrum", "pipeline"]);
    assert_eq!(a.text("psd.csv"), b.text("psd.csv"));
    b.ok(&["--seed", "6", "spectrum", "pipeline"]);
    assert_ne!(a.text("psd.csv"), b.text("psd.csv"));
}

#[test]
fn ground_state_synthesis_has_no_red_sidebands() {
    let run = Run::new("[spectrum]\nmean_n = [0.0, 0.0, 0.0]\n");
    run.ok(&["spectrum", "synth"]);
    let rows = csv_rows(&run.text("components.csv"));
    assert!(rows.len() >= 4);
    for r in &rows {
        let (from, to): (usize, usize) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!(to >= from, "red component {r:?}");
    }
    let psd = psd_column(&run.out().join("psd.csv"));
    // Each red position is below its blue mirror image.
    for f in [154e3, 94e3, 233e3] {
        let at = |x: f64| psd.iter().min_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs())).unwrap().1;
        assert!(at(-f) < at(f));
    }
}

#[test]
fn small_pipeline_shows_every_blue_sideband() {
    let run = Run::new("[signal]\nrealizations = 4\nduration_s = 0.05\n");
    run.ok(&["spectrum", "pipeline"]);
    let psd = psd_column(&run.out().join("psd.csv"));
    let bins = |x: f64| -> Vec<f64> { psd.iter().filter(|p| (p.0 - x).abs() <= 3e3).map(|p| p.1).collect() };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    for f in [154e3, 94e3, 233e3] {
        let peak = bins(f);
        let sides = [bins(f - 30e3), bins(f + 30e3)].concat();
        let m = mean(&sides);
        let sd = (sides.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (sides.len() - 1) as f64).sqrt();
        // Excess over the shot-noise floor in units of the standard error of the peak mean.
        let z = (mean(&peak) - m) / (sd / (peak.len() as f64).sqrt());
        assert!(z > 5.0, "sideband at {f}: {z:.1} standard errors");
    }
}

#[test]
fn fit_recovers_synthetic_occupations() {
    let run = Run::new("");
    run.ok(&["spectrum", "synth"]);
    let stdout = run.ok(&["fit"]);
    assert!(stdout.contains("mean_n"));
    let fit = run.json("fit.json");
    assert_eq!(fit["converged"], Value::Bool(true));
    for (a, want) in [("x", 1.4), ("y", 0.58), ("z", 0.22)] {
        let got = field(&fit, &format!("mean_n_{a}"));
        assert!((got / want - 1.0).abs() < 0.02, "{a}: {got} vs {want}");
    }
    assert!((field(&fit, "freq_y_khz") - 94.0).abs() < 0.5);
    let names = fit["parameter_names"].as_array().unwrap().len();
    assert_eq!(fit["covariance"].as_array().unwrap().len(), names * names);
}

#[test]
fn flat_spectrum_fit_is_singular() {
    let run = Run::new("");
    std::fs::create_dir_all(run.out()).unwrap();
    let mut csv = String::from("freq_hz,psd\n");
    for k in -400..=400 {
        csv.push_str(&format!("{},1e-6\n", k as f64 * 1000.0));
    }
    std::fs::write(run.out().join("psd.csv"), csv).unwrap();
    single_line_error(&run.fails(&["fit"]), "singular_normal_matrix");
}

#[test]
fn thermometry_on_synthetic_spectrum() {
    let run = Run::new("");
    run.ok(&["spectrum", "synth"]);
    run.ok(&["thermometry"]);
    let t = run.json("thermometry.json");
    let z = field(&t, "mean_n_z");
    assert!((z - 0.22).abs() < 0.02, "z = {z}");
    assert_eq!((100.0 * field(&t, "ground_state_z")).round(), 82.0);
    assert!(field(&t, "mean_n_z_err") > 0.0);
}

#[test]
fn thermometry_of_ground_state_is_zero() {
    let run = Run::new("[spectrum]\nmean_n = [0.0, 0.0, 0.0]\n");
    run.ok(&["spectrum", "synth"]);
    run.ok(&["thermometry"]);
    let t = run.json("thermometry.json");
    for a in ["x", "y", "z"] {
        assert_eq!(field(&t, &format!("mean_n_{a}")), 0.0);
        assert_eq!(field(&t, &format!("ground_state_{a}")), 1.0);
    }
}

#[test]
fn overlapping_thermometry_bands_are_rejected() {
    let run = Run::new("[thermometry]\ncenter_khz = [110.0, 94.0, 233.0]\n");
    run.ok(&["spectrum", "synth"]);
    let err = run.fails(&["thermometry"]);
    single_line_error(&err, "invalid_config");
    assert!(err.contains("overlap"));
}

#[test]
fn cooling_without_heating_reaches_ground_state() {
    let run = Run::new("[dissipators]\nbackground_heating_per_s = [0.0, 0.0, 0.0]\nrecoil_geometry = [0.0, 0.0, 0.0]\n");
    run.ok(&["cool"]);
    let s = run.json("cool_summary.json");
    assert!(field(&s, "final_mean_n") < 0.1, "final n = {}", field(&s, "final_mean_n"));
    assert!(field(&s, "final_survival") > 1.0 - 1e-9);
    let rows = csv_rows(&run.text("cool.csv"));
    assert!((rows[0][1].parse::<f64>().unwrap() - 1.0).abs() < 0.05);
}

/// Mean first-passage time out of 0..=n_max with up rate h(n+1), down rate
/// h·n and absorption h(n_max+1) from the top, starting at n = 0.
fn first_passage(h: f64, n_max: usize) -> f64 {
    let k = n_max + 1;
    let mut a = DMatrix::<f64>::zeros(k, k);
    for n in 0..k {
        let (up, down) = (h * (n as f64 + 1.0), h * n as f64);
        a[(n, n)] = -(up + down);
        if n + 1 < k {
            a[(n, n + 1)] = up;
        }
        if n > 0 {
            a[(n, n - 1)] = down;
        }
    }
    a.lu().solve(&DVector::from_element(k, -1.0)).unwrap()[0]
}

#[test]
fn pure_heating_lifetime_matches_first_passage() {
    let (h, depth) = (300.0, 6);
    let tau = first_passage(h, depth);
    let cfg = format!(
        "[trap]\ntrap_depth_quanta = [{depth}, {depth}, {depth}]\n\
         [field]\nb_gradient_gauss_per_m = 0.0\n\
         [dissipators]\nbackground_heating_per_s = [{h:?}, {h:?}, {h:?}]\nrecoil_geometry = [0.0, 0.0, 0.0]\n\
         [cool]\nboundary = \"absorbing\"\nintegrator = \"trbdf2\"\ninitial_mean_n = 0.0\n\
         duration_s = {:?}\ndt_s = 1e-4\nsample_interval_s = {:?}\n",
        5.0 * tau,
        tau / 20.0
    );
    let run = Run::new(&cfg);
    run.ok(&["cool"]);
    let s = run.json("cool_summary.json");
    let fitted = field(&s, "lifetime_s");
    assert!((fitted / tau - 1.0).abs() < 0.05, "lifetime {fitted} vs first passage {tau}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn config_text_round_trips(seed in any::<u64>(), n in 0.0f64..5.0, points in 2usize..100, h in 0.0f64..1e4) {
        let mut cfg = RunConfig { seed, ..RunConfig::default() };
        cfg.spectrum.mean_n = [n, 0.5 * n, 0.25 * n];
        cfg.scan.points = points;
        cfg.dissipators.background_heating_per_s = [h; 3];
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
