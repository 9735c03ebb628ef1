//! In-memory studies behind the CLI subcommands.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::analysis::{
    self, default_test_set, fit_decay_rate, limit_spectrum, mode_residual, pairings, weighted_space_time_norm, DecayReport, Quantity,
    SpectrumReport, SymbolMode, Traces, WeakConvergenceReport,
};
use crate::error::{LabError, Result};
use crate::grid::{DiscreteSystem, StaggeredGrid};
use crate::integrator::{solve_evolution, SpaceTimeField};
use crate::problems::{analytic_constant_mode, make_system, ProblemKind};
use crate::profile::SpatialProfile;

use super::config::ExperimentConfig;

pub struct SolveOutput {
    pub system: DiscreteSystem,
    pub field: SpaceTimeField,
    pub traces: Traces,
}

pub fn solve_study(cfg: &ExperimentConfig) -> Result<SolveOutput> {
    let grid = StaggeredGrid::new(cfg.nx)?;
    let system = make_system(cfg.problem, &grid)?;
    let field = solve_evolution(&system, &cfg.forcing, &cfg.time_grid()?, cfg.theta_for(cfg.problem))?;
    let traces = analysis::traces(&system, &field);
    Ok(SolveOutput { system, field, traces })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub family: String,
    pub limit: String,
    pub theta: f64,
    pub nx: usize,
    pub dt: f64,
    pub sweep: Vec<u32>,
    #[serde(flatten)]
    pub report: WeakConvergenceReport,
}

/// Solves each fine member of the sweep and the limit once, then pairs all of
/// them with the default test set. Members run on up to
/// `available_parallelism` threads; results are merged in `n` order.
pub fn sweep_study(cfg: &ExperimentConfig) -> Result<SweepReport> {
    if cfg.sweep.is_empty() {
        return Err(LabError::Domain("sweep set is empty".into()));
    }
    let limit = cfg.problem.limit().ok_or_else(|| LabError::Domain(format!("no limit system for {}", cfg.problem)))?;
    let grid = StaggeredGrid::new(cfg.nx)?;
    let time = cfg.time_grid()?;
    let theta = cfg.sweep_theta();
    let tests = default_test_set();

    let mut jobs: Vec<ProblemKind> = cfg.sweep.iter().map(|&n| cfg.problem.fine(n).expect("family checked above")).collect();
    jobs.push(limit);
    let run = |kind: ProblemKind| -> Result<Vec<f64>> {
        let system = make_system(kind, &grid)?;
        let field = solve_evolution(&system, &cfg.forcing, &time, theta)?;
        Ok(pairings(&field, &tests))
    };
    let workers = std::thread::available_parallelism().map_or(1, |p| p.get()).max(1);
    let mut results: Vec<Result<Vec<f64>>> = Vec::with_capacity(jobs.len());
    if workers == 1 {
        // also the path on targets without threads
        results.extend(jobs.iter().map(|&k| run(k)));
    } else {
        for chunk in jobs.chunks(workers) {
            let out: Vec<Result<Vec<f64>>> = std::thread::scope(|s| {
                let handles: Vec<_> = chunk.iter().map(|&k| s.spawn(move || run(k))).collect();
                handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
            });
            results.extend(out);
        }
    }
    let limit_p = results.pop().expect("limit job present")?;
    let fine = cfg.sweep.iter().copied().zip(results).map(|(n, r)| r.map(|p| (n, p))).collect::<Result<Vec<_>>>()?;
    let report = WeakConvergenceReport::from_pairings(fine, &limit_p, &tests);
    Ok(SweepReport {
        family: cfg.problem.tag().trim_start_matches("fine_").trim_start_matches("limit_").to_string(),
        limit: limit.to_string(),
        theta,
        nx: cfg.nx,
        dt: cfg.dt,
        sweep: cfg.sweep.clone(),
        report,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub problem: String,
    /// Fitted log-slope of the energy trace.
    pub rate: f64,
    pub residual: f64,
    pub window: (f64, f64),
    pub verdict: String,
    /// ν (as written in the config) to the weighted space-time norm.
    pub weighted_norms: BTreeMap<String, f64>,
    pub persistent_value: Option<f64>,
    /// Fitted log-slope of the state norm, the decay rate of the field itself.
    pub field_rate: f64,
    pub field_residual: f64,
    pub final_spatial_mean: f64,
    pub energy_fit: DecayReport,
    pub field_fit: DecayReport,
}

/// Energy rate at or below which a trajectory counts as decaying.
pub const STABLE_RATE: f64 = -0.1;
/// Largest energy rate magnitude treated as a flat tail.
pub const FLAT_RATE: f64 = 1e-3;

pub fn stability_from_traces(cfg: &ExperimentConfig, tr: &Traces, field: &SpaceTimeField) -> Result<StabilityReport> {
    let window = cfg.fit_window();
    let energy_fit = fit_decay_rate(&tr.t, &tr.energy, window, Quantity::Energy)?;
    let field_fit = fit_decay_rate(&tr.t, &tr.state_norm, window, Quantity::StateNorm)?;
    let final_mean = *tr.spatial_mean_u.last().unwrap_or(&0.0);
    let peak_mean = tr.spatial_mean_u.iter().fold(0.0f64, |a, m| a.max(m.abs()));
    // the log trace may wobble by at most a tenth of its drop over the window
    let tolerance = 0.1 * energy_fit.rate.abs() * (window.1 - window.0);
    let (verdict, persistent) = if !energy_fit.degenerate && energy_fit.rate <= STABLE_RATE && energy_fit.residual <= tolerance {
        (format!("stable (rate {:.6})", energy_fit.rate), None)
    } else if !energy_fit.degenerate && energy_fit.rate.abs() <= FLAT_RATE && final_mean.abs() > 1e-9 * peak_mean.max(1.0) {
        (format!("non-stable (persistent mode, value {final_mean:.6})"), Some(final_mean))
    } else if energy_fit.degenerate {
        ("inconclusive (trace vanishes on the window)".to_string(), None)
    } else {
        (format!("inconclusive (rate {:.6})", energy_fit.rate), None)
    };
    let weighted_norms = cfg.nu_list.iter().map(|&nu| (nu.to_string(), weighted_space_time_norm(field, nu))).collect();
    Ok(StabilityReport {
        problem: cfg.problem.to_string(),
        rate: energy_fit.rate,
        residual: energy_fit.residual,
        window,
        verdict,
        weighted_norms,
        persistent_value: persistent,
        field_rate: field_fit.rate,
        field_residual: field_fit.residual,
        final_spatial_mean: final_mean,
        energy_fit,
        field_fit,
    })
}

pub fn stability_study(cfg: &ExperimentConfig) -> Result<(StabilityReport, Traces)> {
    match cfg.problem {
        ProblemKind::LimitHE | ProblemKind::LimitHP | ProblemKind::FineHE(_) | ProblemKind::FineHP(_) => {}
        other => return Err(LabError::Domain(format!("stability study needs a fine or limit problem, got {other}"))),
    }
    let out = solve_study(cfg)?;
    let report = stability_from_traces(cfg, &out.traces, &out.field)?;
    Ok((report, out.traces))
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeCheck {
    pub k: usize,
    pub root: [f64; 2],
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumStudy {
    pub continuum: SpectrumReport,
    pub discrete: SpectrumReport,
    /// Assembled-operator residuals of the discrete roots.
    pub mode_checks: Vec<ModeCheck>,
}

/// Limit spectrum of the configured problem's family, for `k = 0..=k_max`.
pub fn spectrum_study(cfg: &ExperimentConfig, k_max: usize) -> Result<SpectrumStudy> {
    let kind = cfg.problem.limit().ok_or_else(|| LabError::Domain(format!("no limit system for {}", cfg.problem)))?;
    let grid = StaggeredGrid::new(cfg.nx)?;
    let continuum = limit_spectrum(kind, SymbolMode::Continuum, k_max)?;
    let discrete = limit_spectrum(kind, SymbolMode::Discrete(grid), k_max)?;
    let system = make_system(kind, &grid)?;
    let mut mode_checks = Vec::new();
    for m in discrete.modes.iter().filter(|m| m.k >= 1) {
        for r in m.roots {
            let residual = mode_residual(&system, m.k, num_complex::Complex64::new(r[0], r[1]));
            mode_checks.push(ModeCheck { k: m.k, root: r, residual });
        }
    }
    Ok(SpectrumStudy { continuum, discrete, mode_checks })
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanCheck {
    pub problem: String,
    pub expected: f64,
    pub observed: f64,
    pub abs_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub const MEAN_TOLERANCE: f64 = 1e-3;

/// Compares the spatial mean of `u` at `t_end` with its predicted value.
///
/// For kinds whose state row is undamped (`m_u = 1`, `n_u = 0`: fine and
/// limit HP, pure wave, pure parabolic) the mean obeys `ψ′ = φ ḡ` with `ḡ`
/// the discrete mean of the profile. For `LimitHE` with a constant profile
/// it follows the closed-form constant mode.
pub fn mean_check_study(cfg: &ExperimentConfig) -> Result<MeanCheck> {
    let grid = StaggeredGrid::new(cfg.nx)?;
    let bump = &cfg.forcing.bump;
    let expected = match cfg.problem {
        ProblemKind::FineHP(_) | ProblemKind::LimitHP | ProblemKind::PureWave | ProblemKind::PureParabolic => {
            let g = cfg.forcing.profile.sample(&grid.u_coords());
            analysis::spatial_mean(&grid, &g) * bump.integral_to(cfg.t_end)
        }
        ProblemKind::LimitHE if cfg.forcing.profile == SpatialProfile::Constant => {
            *analytic_constant_mode(ProblemKind::LimitHE, bump, &cfg.time_grid()?)?.last().expect("nonempty time grid")
        }
        other => {
            return Err(LabError::Domain(format!(
                "mean check applies to HP-type systems, or limit_he with a constant profile; got {other} with {}",
                cfg.forcing.profile
            )))
        }
    };
    let out = solve_study(cfg)?;
    let observed = *out.traces.spatial_mean_u.last().unwrap_or(&0.0);
    let abs_error = (observed - expected).abs();
    Ok(MeanCheck {
        problem: cfg.problem.to_string(),
        expected,
        observed,
        abs_error,
        tolerance: MEAN_TOLERANCE,
        passed: abs_error <= MEAN_TOLERANCE,
    })
}
