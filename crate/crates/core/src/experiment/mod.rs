//! Configuration-driven runs that write CSV/JSON/SVG artifacts.
//!
//! Every `run_*` function writes into `out_dir` (created if needed) and a
//! `manifest.json` with checksums of the emitted files. CSV bodies contain no
//! volatile data, so identical configs reproduce identical bytes.

pub mod config;
pub mod io;
pub mod studies;
pub mod svg;
pub mod validate;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{check_config, parse_config, ExperimentConfig};
pub use io::{read_table, RunManifest, Table};
pub use studies::{
    mean_check_study, solve_study, spectrum_study, stability_study, sweep_study, MeanCheck, SpectrumStudy, StabilityReport, SweepReport,
};
pub use validate::{validate_study, ValidationReport};

use crate::analysis::Traces;
use crate::error::Result;
use svg::Series;

/// Files written by a run and whether its checks passed.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub passed: bool,
    pub summary: String,
}

struct Emitter {
    dir: PathBuf,
    manifest: RunManifest,
    files: Vec<PathBuf>,
}

impl Emitter {
    fn new(command: &str, cfg: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(&cfg.out_dir)?;
        Ok(Self { dir: cfg.out_dir.clone(), manifest: RunManifest::new(command, cfg.echo()), files: Vec::new() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn add(&mut self, path: PathBuf) -> Result<()> {
        self.manifest.record(&path)?;
        self.files.push(path);
        Ok(())
    }

    fn finish(mut self, passed: bool, summary: String) -> Result<RunOutcome> {
        let path = self.path("manifest.json");
        io::write_json(&path, &self.manifest)?;
        self.files.push(path);
        Ok(RunOutcome { files: self.files, passed, summary })
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&fs::read_to_string(path)?)
}

/// `field_u.csv`, `field_w.csv`, `traces.csv`.
pub fn run_solve(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let mut em = Emitter::new("solve", cfg)?;
    let out = em.manifest.stage("solve", || solve_study(cfg))?;
    let (u, w) = em.manifest.stage("write_fields", || io::write_field(&em.dir, &out.field))?;
    em.add(u)?;
    em.add(w)?;
    let tr = em.path("traces.csv");
    io::write_traces(&tr, &out.traces)?;
    em.add(tr)?;
    let last = out.traces.t.len() - 1;
    let summary = format!(
        "{}: {} steps, final energy {:e}, final spatial mean {:e}",
        cfg.problem,
        last,
        out.traces.energy[last],
        out.traces.spatial_mean_u[last]
    );
    em.finish(true, summary)
}

/// `convergence.csv`, `convergence.json`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let mut em = Emitter::new("sweep", cfg)?;
    let rep = em.manifest.stage("sweep", || sweep_study(cfg))?;
    let csv = em.path("convergence.csv");
    io::write_convergence_csv(&csv, &rep.report)?;
    em.add(csv)?;
    let json = em.path("convergence.json");
    io::write_json(&json, &rep)?;
    em.add(json)?;
    let summary = if rep.report.flags.is_empty() {
        format!("{} rows, errors decrease for every smooth test function", rep.report.rows.len())
    } else {
        format!("{} rows, flags: {}", rep.report.rows.len(), rep.report.flags.join("; "))
    };
    em.finish(true, summary)
}

fn decay_plot(cfg: &ExperimentConfig, tr: &Traces, rep: &StabilityReport) -> String {
    let log_e: Vec<(f64, f64)> = tr.t.iter().zip(&tr.energy).map(|(&t, &e)| (t, if e > 0.0 { e.ln() } else { f64::NAN })).collect();
    let (a, b) = rep.window;
    let fit = &rep.energy_fit;
    let mut series = vec![Series { label: "ln energy", color: "#1f77b4", points: log_e.clone(), dashed: false }];
    if !fit.degenerate {
        // anchor the fitted slope at the window's mean of ln E
        let inside: Vec<&(f64, f64)> = log_e.iter().filter(|(t, y)| *t >= a && *t <= b && y.is_finite()).collect();
        let m = inside.len().max(1) as f64;
        let (tbar, ybar) = inside.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0 / m, acc.1 + p.1 / m));
        let line = vec![(a, ybar + fit.rate * (a - tbar)), (b, ybar + fit.rate * (b - tbar))];
        series.push(Series { label: "fit", color: "#d62728", points: line, dashed: true });
    }
    let title = format!("{}: {}", cfg.problem, rep.verdict);
    svg::line_plot(&title, "t", "ln E(t)", &series)
}

/// `stability.json`, `decay.svg`.
pub fn run_stability(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let mut em = Emitter::new("stability", cfg)?;
    let (rep, tr) = em.manifest.stage("stability", || stability_study(cfg))?;
    let json = em.path("stability.json");
    io::write_json(&json, &rep)?;
    em.add(json)?;
    let svg_path = em.path("decay.svg");
    fs::write(&svg_path, decay_plot(cfg, &tr, &rep))?;
    em.add(svg_path)?;
    let summary = format!("{}: {} (energy rate {:.6}, field rate {:.6})", cfg.problem, rep.verdict, rep.rate, rep.field_rate);
    em.finish(true, summary)
}

/// `spectrum.json`.
pub fn run_spectrum(cfg: &ExperimentConfig, k_max: usize) -> Result<RunOutcome> {
    let mut em = Emitter::new("spectrum", cfg)?;
    let rep = em.manifest.stage("spectrum", || spectrum_study(cfg, k_max))?;
    let json = em.path("spectrum.json");
    io::write_json(&json, &rep)?;
    em.add(json)?;
    let worst = rep.mode_checks.iter().map(|m| m.residual).fold(0.0, f64::max);
    let summary = format!(
        "{}: abscissa {} (continuum), {} (discrete); max mode residual {worst:e}",
        rep.discrete.kind, rep.continuum.abscissa, rep.discrete.abscissa
    );
    em.finish(true, summary)
}

/// `validation.json`; fails when any invariant fails.
pub fn run_validate(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let mut em = Emitter::new("validate", cfg)?;
    let rep = em.manifest.stage("validate", || validate_study(cfg))?;
    let json = em.path("validation.json");
    io::write_json(&json, &rep)?;
    em.add(json)?;
    let summary = if rep.passed {
        format!("all {} checks passed", rep.items.len())
    } else {
        format!("failed: {}", rep.failures.join(", "))
    };
    em.finish(rep.passed, summary)
}

/// `mean_check.json`; fails when the final mean misses its prediction.
pub fn run_mean_check(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let mut em = Emitter::new("mean-check", cfg)?;
    let rep = em.manifest.stage("mean_check", || mean_check_study(cfg))?;
    let json = em.path("mean_check.json");
    io::write_json(&json, &rep)?;
    em.add(json)?;
    let summary = format!("{}: mean {} vs expected {} (|error| {:e})", rep.problem, rep.observed, rep.expected, rep.abs_error);
    em.finish(rep.passed, summary)
}
