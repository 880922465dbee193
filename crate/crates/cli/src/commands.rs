//! Subcommand implementations. Each returns the files it wrote.

use std::f64::consts::PI;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use drc_core::dynamics::{
    find_resonances, lindblad_evolve, scan_offset_field, survival_lifetime, AxisModel, Boundary, EvolveOptions,
};
use drc_core::fitting::{
    fit_report, fit_spectrum_multistart, initial_guess, FitBounds, FitResult, FixedInputs,
};
use drc_core::quantum::DensityState;
use drc_core::signal::simulate_measurement;
use drc_core::spectroscopy::{
    ground_state_occupation, sideband_integrals, sideband_thermometry, synthesize_spectrum, Band, Spectrum,
};
use drc_core::trap::resonant_field;
use drc_core::{Axis, Error, Result};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::output::{num, read_text, write_json, write_text, CsvTable};

/// Output files of a subcommand and a short human summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

const AXIS_NAMES: [&str; 3] = ["x", "y", "z"];

/// Offset-field scan; writes `scan.csv` and `scan_summary.json`.
pub fn cmd_resonances(cfg: &RunConfig) -> Result<CommandOutput> {
    let trap = cfg.trap.build()?;
    let field = cfg.field.build()?;
    let laser = cfg.laser.build()?;
    let diss = cfg.dissipators.build(&trap, &laser, field.f_total)?;
    let options = cfg.scan.build(cfg.model.build()?)?;
    let fields = cfg.scan.fields()?;
    let points = scan_offset_field(&trap, &field, &laser, &diss, &fields, &options)?;
    let resonances = find_resonances(&points);

    let mut table = CsvTable::new(&[
        ("b_off_gauss", "G"),
        ("survival", "1"),
        ("mean_n_x", "quanta"),
        ("mean_n_y", "quanta"),
        ("mean_n_z", "quanta"),
        ("tau_s", "s"),
    ]);
    table.comment(format!("survival after {} s of cooling versus offset field", options.duration));
    table.comment("mean_n is the final occupation of the surviving population; nan for axes not simulated");
    for p in &points {
        table.row(&[p.b_off, p.survival, p.mean_n[0], p.mean_n[1], p.mean_n[2], p.tau]);
    }
    let csv = write_text(&cfg.out_dir, "scan.csv", &table.render())?;

    let mut summary = Map::new();
    summary.insert("points".into(), json!(points.len()));
    summary.insert("duration_s".into(), num(options.duration));
    summary.insert(
        "resonances".into(),
        Value::Array(
            resonances
                .iter()
                .map(|r| json!({"b_off_gauss": num(r.b_off), "prominence": num(r.prominence), "source": r.source.to_string()}))
                .collect(),
        ),
    );
    summary.insert(
        "first_resonance_gauss".into(),
        resonances.first().map(|r| num(r.b_off)).unwrap_or(Value::Null),
    );
    for a in Axis::ALL {
        summary.insert(
            format!("resonant_field_{}_gauss", AXIS_NAMES[a.index()]),
            num(resonant_field(&trap, &field, a)),
        );
    }
    let js = write_json(&cfg.out_dir, "scan_summary.json", &summary)?;
    let line = match resonances.first() {
        Some(r) => format!("first resonance at {:.4} G ({})", r.b_off, r.source),
        None => "no resonance found".to_string(),
    };
    Ok(CommandOutput { files: vec![csv, js], summary: vec![line] })
}

/// Single-axis cooling trajectory; writes `cool.csv` and `cool_summary.json`.
pub fn cmd_cool(cfg: &RunConfig) -> Result<CommandOutput> {
    let trap = cfg.trap.build()?;
    let field0 = cfg.field.build()?;
    let laser = cfg.laser.build()?;
    let diss = cfg.dissipators.build(&trap, &laser, field0.f_total)?;
    let axis = cfg.cool.axis()?;
    let b_off = cfg.cool.b_off_gauss.unwrap_or_else(|| resonant_field(&trap, &field0, axis));
    let field = field0.with_offset(b_off);
    field.validate()?;
    let model = AxisModel::new(&trap, &field, &laser, &diss, axis, &cfg.model.build()?)?;
    let boundary = cfg.cool.boundary()?;
    let system = model.open_system(boundary);
    let f = field.f_total as i32;
    if !(-f..=f).contains(&cfg.cool.initial_m) {
        return Err(Error::InvalidConfig(format!("cool.initial_m must lie in [-{f}, {f}]")));
    }
    let rho0 = DensityState::thermal(model.space, cfg.cool.initial_m, cfg.cool.initial_mean_n);
    let options = EvolveOptions {
        dt: cfg.cool.dt_s,
        sample_interval: cfg.cool.sample_interval_s,
        integrator: cfg.cool.integrator()?,
        check_positivity: true,
        max_halvings: 6,
    };
    let traj = lindblad_evolve(&system, &rho0, cfg.cool.duration_s, &options)?;

    let name = AXIS_NAMES[axis.index()];
    let col = format!("mean_n_{name}");
    let mut table = CsvTable::new(&[("t_s", "s"), (col.as_str(), "quanta"), ("survival", "1")]);
    table.comment(format!("cooling along {name} at b_off = {b_off} G, {} boundary", cfg.cool.boundary));
    for i in 0..traj.times.len() {
        table.row(&[traj.times[i], traj.mean_n[i], traj.survival[i]]);
    }
    let csv = write_text(&cfg.out_dir, "cool.csv", &table.render())?;

    let lifetime = if boundary == Boundary::Absorbing { survival_lifetime(&traj.times, &traj.survival).ok() } else { None };
    let mut summary = Map::new();
    summary.insert("axis".into(), json!(name));
    summary.insert("b_off_gauss".into(), num(b_off));
    summary.insert("final_mean_n".into(), num(traj.final_mean_n()));
    summary.insert("final_survival".into(), num(traj.final_survival()));
    summary.insert("lifetime_s".into(), lifetime.map(|l| num(l.tau)).unwrap_or(Value::Null));
    summary.insert("lifetime_err_s".into(), lifetime.map(|l| num(l.tau_err)).unwrap_or(Value::Null));
    summary.insert("max_trace_drift_per_ms".into(), num(traj.diagnostics.max_trace_drift_per_ms));
    summary.insert("min_eigenvalue".into(), num(traj.diagnostics.min_eigenvalue));
    summary.insert("dt_s".into(), num(traj.diagnostics.dt));
    let js = write_json(&cfg.out_dir, "cool_summary.json", &summary)?;
    let mut line = format!("final mean_n_{name} = {:.5}, survival = {:.6}", traj.final_mean_n(), traj.final_survival());
    if let Some(l) = lifetime {
        line.push_str(&format!(", lifetime = {:.4e} s", l.tau));
    }
    Ok(CommandOutput { files: vec![csv, js], summary: vec![line] })
}

/// Spectrum generation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumMode {
    /// Noiseless model spectrum.
    Synth,
    /// Simulated click streams, Welch-averaged.
    Pipeline,
}

impl std::str::FromStr for SpectrumMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synth" => Ok(SpectrumMode::Synth),
            "pipeline" => Ok(SpectrumMode::Pipeline),
            other => Err(Error::InvalidConfig(format!("spectrum mode must be synth or pipeline, got {other}"))),
        }
    }
}

/// Writes `psd.csv` (and `components.csv` for the synthetic mode).
pub fn cmd_spectrum(cfg: &RunConfig, mode: SpectrumMode) -> Result<CommandOutput> {
    let model = cfg.spectrum.line_model(&cfg.trap)?;
    match mode {
        SpectrumMode::Synth => {
            let s = synthesize_spectrum(&model, &cfg.spectrum.grid()?)?;
            let psd = write_text(&cfg.out_dir, "psd.csv", &s.to_csv())?;
            let comps = write_text(&cfg.out_dir, "components.csv", &model.components_csv())?;
            Ok(CommandOutput {
                files: vec![psd, comps],
                summary: vec![format!("synthetic spectrum with {} points", s.grid.len)],
            })
        }
        SpectrumMode::Pipeline => {
            let opts = cfg.signal.build();
            let s = simulate_measurement(&model, &opts, cfg.seed)?;
            let psd = write_text(&cfg.out_dir, "psd.csv", &s.to_csv())?;
            Ok(CommandOutput {
                files: vec![psd],
                summary: vec![format!(
                    "{} realizations, {} averaged segments, resolution {} Hz",
                    opts.realizations, s.averages, s.resolution_bandwidth
                )],
            })
        }
    }
}

fn load_spectrum(path: &Path) -> Result<Spectrum> {
    let text = read_text(path)?;
    Spectrum::from_csv(BufReader::new(text.as_bytes()))
}

fn fit_record(result: &FitResult, ab_initio: [f64; 3]) -> Map<String, Value> {
    let p = &result.params;
    let u = &result.uncertainties;
    let mut m = Map::new();
    for i in 0..3 {
        let a = AXIS_NAMES[i];
        m.insert(format!("mean_n_{a}"), num(p.mean_n[i]));
        m.insert(format!("mean_n_{a}_err"), num(u.mean_n[i]));
        m.insert(format!("omega_{a}"), num(p.omega[i]));
        m.insert(format!("omega_{a}_err"), num(u.omega[i]));
        m.insert(format!("freq_{a}_khz"), num(p.omega[i] / (2.0 * PI) * 1e-3));
        m.insert(format!("freq_{a}_khz_err"), num(u.omega[i] / (2.0 * PI) * 1e-3));
        m.insert(format!("ground_state_{a}"), num(ground_state_occupation(p.mean_n[i])));
        m.insert(format!("alpha_{a}"), num(p.anharmonicity[i]));
        m.insert(format!("alpha_{a}_err"), num(u.anharmonicity[i]));
    }
    m.insert("min_width".into(), num(p.min_width));
    m.insert("min_width_err".into(), num(u.min_width));
    m.insert("amplitude".into(), num(p.amplitude));
    m.insert("amplitude_err".into(), num(u.amplitude));
    m.insert("offset".into(), num(p.offset));
    m.insert("offset_err".into(), num(u.offset));
    m.insert("converged".into(), json!(result.converged));
    m.insert("residual_norm".into(), num(result.residual_norm));
    m.insert("iterations".into(), json!(result.iterations));
    m.insert("parameter_names".into(), json!(result.names));
    let n = result.covariance.nrows();
    let cov: Vec<Value> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| num(result.covariance[(i, j)])).collect();
    m.insert("covariance".into(), Value::Array(cov));
    if let Ok(report) = fit_report(result, ab_initio) {
        for r in &report.axes {
            let a = AXIS_NAMES[r.axis.index()];
            m.insert(format!("ab_initio_{a}_khz"), num(r.ab_initio_khz));
            m.insert(format!("deviation_{a}"), num(r.deviation));
            m.insert(format!("width_within_inhomogeneity_{a}"), json!(r.width_within_inhomogeneity));
        }
    }
    m
}

/// Fits the spectrum in `psd`; writes `fit.json`.
///
/// Trap frequencies of `[trap]` serve as the ab initio reference; the
/// Lamb-Dicke parameters follow the `[spectrum]` frequencies.
pub fn cmd_fit(cfg: &RunConfig, psd: &Path) -> Result<CommandOutput> {
    let data = load_spectrum(psd)?;
    let ab_initio = cfg.trap.build()?.omega;
    let model = cfg.spectrum.line_model(&cfg.trap)?;
    let fixed = FixedInputs {
        lamb_dicke: model.lamb_dicke,
        scattering_rate: model.scattering_rate,
        rate_broadening: model.rate_broadening,
    };
    let options = cfg.fit.build()?;
    let mut initial = initial_guess(&data, ab_initio, cfg.fit.initial_min_width_hz)?;
    initial.anharmonicity = model.anharmonicity;
    let bounds = FitBounds::around(&initial);
    let result =
        fit_spectrum_multistart(&data, &initial, &fixed, &bounds, &options, cfg.fit.starts, cfg.fit.spread, cfg.seed)?;
    let record = fit_record(&result, ab_initio);
    let js = write_json(&cfg.out_dir, "fit.json", &record)?;
    if !result.converged {
        return Err(Error::NotConverged);
    }
    let report = fit_report(&result, ab_initio)?;
    let mut summary: Vec<String> = report
        .axes
        .iter()
        .map(|r| {
            format!(
                "{}: mean_n = {:.4} +- {:.4} (P0 = {:.1}%), f = {:.3} +- {:.3} kHz, ab initio {:.1} kHz ({:+.1}%)",
                AXIS_NAMES[r.axis.index()],
                r.mean_n,
                r.mean_n_err,
                100.0 * r.ground_state,
                r.frequency_khz,
                r.frequency_err_khz,
                r.ab_initio_khz,
                100.0 * r.deviation
            )
        })
        .collect();
    let wide: Vec<&str> =
        report.axes.iter().filter(|r| !r.width_within_inhomogeneity).map(|r| AXIS_NAMES[r.axis.index()]).collect();
    summary.push(if wide.is_empty() {
        format!("min width = {:.3} kHz, within 10% of every trap frequency", report.min_width_khz)
    } else {
        format!("min width = {:.3} kHz, above 10% of the trap frequency on {}", report.min_width_khz, wide.join(", "))
    });
    Ok(CommandOutput { files: vec![js], summary })
}

/// Direct sideband thermometry on `psd`; writes `thermometry.json`.
pub fn cmd_thermometry(cfg: &RunConfig, psd: &Path) -> Result<CommandOutput> {
    let t = &cfg.thermometry;
    let mut bands = Vec::new();
    for i in 0..3 {
        let (c, w) = (t.center_khz[i] * 1e3, t.half_width_khz[i] * 1e3);
        if !(c > 0.0 && w > 0.0 && w < c) {
            return Err(Error::InvalidConfig(format!(
                "thermometry band {}: need 0 < half_width < center",
                AXIS_NAMES[i]
            )));
        }
        bands.push((i, Band { center: -c, half_width: w }));
        bands.push((i, Band { center: c, half_width: w }));
    }
    for (k, (i, a)) in bands.iter().enumerate() {
        for (j, b) in bands.iter().skip(k + 1) {
            if a.overlaps(b) {
                return Err(Error::InvalidConfig(format!(
                    "thermometry bands of axes {} and {} overlap",
                    AXIS_NAMES[*i], AXIS_NAMES[*j]
                )));
            }
        }
    }
    let data = load_spectrum(psd)?;
    let mut record = Map::new();
    let mut summary = Vec::new();
    for i in 0..3 {
        let a = AXIS_NAMES[i];
        let s = sideband_integrals(&data, t.center_khz[i] * 1e3, t.half_width_khz[i] * 1e3, t.guard_khz * 1e3)?;
        // A red band not significant at 3σ of its baseline error is empty.
        let s_minus = if s.s_minus.abs() <= 3.0 * s.s_minus_err.max(1e-9 * s.s_plus.abs()) {
            0.0
        } else {
            s.s_minus
        };
        let th = sideband_thermometry(s_minus, s.s_plus, s.s_minus_err, s.s_plus_err)?;
        record.insert(format!("s_minus_{a}"), num(s_minus));
        record.insert(format!("s_minus_{a}_err"), num(s.s_minus_err));
        record.insert(format!("s_plus_{a}"), num(s.s_plus));
        record.insert(format!("s_plus_{a}_err"), num(s.s_plus_err));
        record.insert(format!("mean_n_{a}"), num(th.mean_n));
        record.insert(format!("mean_n_{a}_err"), num(th.mean_n_err));
        record.insert(format!("ground_state_{a}"), num(th.ground_state));
        summary.push(format!(
            "{a}: mean_n = {:.4} +- {:.4}, P0 = {:.1}%",
            th.mean_n,
            th.mean_n_err,
            100.0 * th.ground_state
        ));
    }
    let js = write_json(&cfg.out_dir, "thermometry.json", &record)?;
    Ok(CommandOutput { files: vec![js], summary })
}
