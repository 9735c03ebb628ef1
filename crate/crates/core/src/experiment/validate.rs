//! Invariant battery run by `validate`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{limit_spectrum, mode_residual, SymbolMode};
use crate::error::Result;
use crate::grid::{dot, solvability_constant, DiscreteSystem, StaggeredGrid};
use crate::integrator::{advance, factor_step_matrix, solve_evolution, ForcingSpec};
use crate::material::{check_alignment, Family, MaterialLayout};
use crate::problems::{make_system, ProblemKind};
use crate::profile::SpatialProfile;

use super::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub problem: String,
    pub passed: bool,
    pub failures: Vec<String>,
    pub items: Vec<CheckItem>,
}

const TOL: f64 = 1e-12;

fn item(name: &str, passed: bool, detail: String) -> CheckItem {
    CheckItem { name: name.to_string(), passed, detail }
}

/// Largest `|⟨Av, v⟩| / ‖v‖²` and `|⟨Dw, u⟩ + ⟨w, Gu⟩| / (‖u‖‖w‖)` over
/// `samples` seeded random vectors.
pub fn skew_and_adjoint_defects(grid: &StaggeredGrid, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut skew, mut adj) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let v: Vec<f64> = (0..grid.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        skew = skew.max(dot(&grid.apply_skew(&v), &v).abs() / dot(&v, &v));
        let (u, w) = v.split_at(grid.u_len());
        let lhs = dot(&grid.apply_d(w), u) + dot(w, &grid.apply_g(u));
        let scale = (dot(u, u) * dot(w, w)).sqrt();
        adj = adj.max(lhs.abs() / scale);
    }
    (skew, adj)
}

/// Largest per-step defect of the midpoint energy balance
/// `½⟨Mv₊,v₊⟩ − ½⟨Mv,v⟩ = −Δt⟨N v̄, v̄⟩ + Δt⟨F̄, v̄⟩`, relative to the
/// largest term on the step.
pub fn dissipation_defect(system: &DiscreteSystem, forcing: &ForcingSpec, cfg: &ExperimentConfig) -> Result<f64> {
    let time = cfg.time_grid()?;
    let field = solve_evolution(system, forcing, &time, 0.5)?;
    let grid = system.grid();
    let g = forcing.profile.sample(&grid.u_coords());
    let dt = time.dt();
    let (m, n) = (system.m_diag(), system.n_diag());
    let quad = |d: &[f64], v: &[f64]| v.iter().zip(d).map(|(x, c)| c * x * x).sum::<f64>();
    let mut worst = 0.0f64;
    let mut f0 = vec![0.0; grid.dim()];
    let mut f1 = vec![0.0; grid.dim()];
    for k in 0..time.steps() {
        let (v0, v1) = (&field.states[k], &field.states[k + 1]);
        forcing.sample_into(time.time(k), &g, &mut f0);
        forcing.sample_into(time.time(k + 1), &g, &mut f1);
        let mid: Vec<f64> = v0.iter().zip(v1).map(|(a, b)| 0.5 * (a + b)).collect();
        let fmid: Vec<f64> = f0.iter().zip(&f1).map(|(a, b)| 0.5 * (a + b)).collect();
        let lhs = 0.5 * quad(m, v1) - 0.5 * quad(m, v0);
        let dis = dt * quad(n, &mid);
        let work = dt * dot(&fmid, &mid);
        let scale = lhs.abs().max(dis).max(work.abs()).max(quad(m, v1));
        if scale > 0.0 {
            worst = worst.max((lhs + dis - work).abs() / scale);
        }
    }
    Ok(worst)
}

/// Runs the step recurrence with a caller-supplied forcing vector.
fn evolve_with(system: &DiscreteSystem, cfg: &ExperimentConfig, theta: f64, f: impl Fn(f64, &mut [f64])) -> Result<Vec<Vec<f64>>> {
    let time = cfg.time_grid()?;
    let fac = factor_step_matrix(system, time.dt(), theta)?;
    let dim = system.dim();
    let mut states = vec![vec![0.0; dim]];
    let (mut f0, mut f1) = (vec![0.0; dim], vec![0.0; dim]);
    f(time.time(0), &mut f0);
    for k in 0..time.steps() {
        f(time.time(k + 1), &mut f1);
        let next = advance(&fac, system, states.last().expect("nonempty"), &f0, &f1)?;
        states.push(next);
        std::mem::swap(&mut f0, &mut f1);
    }
    Ok(states)
}

fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> (f64, f64) {
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        for (p, q) in x.iter().zip(y) {
            diff = diff.max((p - q).abs());
            scale = scale.max(p.abs()).max(q.abs());
        }
    }
    (diff, scale)
}

fn system_checks(cfg: &ExperimentConfig, system: &DiscreteSystem, items: &mut Vec<CheckItem>) -> Result<()> {
    let kind = cfg.problem;
    let theta = cfg.theta_for(kind);
    let time = cfg.time_grid()?;

    // solvability
    let mut nus: Vec<f64> = vec![0.5, 1.0, 2.0];
    for &nu in &cfg.nu_list {
        if nu > 0.0 && !nus.contains(&nu) {
            nus.push(nu);
        }
    }
    for nu in nus {
        let c = solvability_constant(system, nu)?;
        let (passed, detail) = if kind.is_fine() {
            (c == nu.min(1.0), format!("c = {c}, expected min(1, ν) = {}", nu.min(1.0)))
        } else {
            (c > 0.0, format!("c = {c} > 0"))
        };
        items.push(item(&format!("solvability(nu={nu})"), passed, detail));
    }

    // causality: nothing moves before the forcing switches on
    let field = solve_evolution(system, &cfg.forcing, &time, theta)?;
    let t_on = cfg.forcing.bump.t_on;
    let early = (0..=time.steps()).take_while(|&k| time.time(k) <= t_on);
    let leaked = early.map(|k| field.states[k].iter().fold(0.0f64, |a, x| a.max(x.abs()))).fold(0.0, f64::max);
    items.push(item("causality", leaked == 0.0, format!("max |v| for t <= t_on: {leaked:e}")));

    // linearity: α f₁ + β f₂ against the superposition of the solves
    let grid = system.grid();
    let g1 = cfg.forcing.profile.sample(&grid.u_coords());
    let g2 = SpatialProfile::Gaussian { center: 0.3, width: 0.1 }.sample(&grid.u_coords());
    let b1 = cfg.forcing.bump;
    let mut b2 = b1;
    b2.t_on = b1.t_on + 0.25 * (b1.t_off - b1.t_on);
    let (alpha, beta) = (0.75, -1.5);
    let fill = |t: f64, out: &mut [f64], a: f64, b: f64| {
        let (p1, p2) = (b1.value(t), b2.value(t));
        for (i, o) in out.iter_mut().enumerate() {
            *o = if i < g1.len() { a * p1 * g1[i] + b * p2 * g2[i] } else { 0.0 };
        }
    };
    let s1 = evolve_with(system, cfg, theta, |t, o| fill(t, o, 1.0, 0.0))?;
    let s2 = evolve_with(system, cfg, theta, |t, o| fill(t, o, 0.0, 1.0))?;
    let s12 = evolve_with(system, cfg, theta, |t, o| fill(t, o, alpha, beta))?;
    let combo: Vec<Vec<f64>> = s1.iter().zip(&s2).map(|(x, y)| x.iter().zip(y).map(|(p, q)| alpha * p + beta * q).collect()).collect();
    let (diff, scale) = max_abs_diff(&s12, &combo);
    let rel = if scale > 0.0 { diff / scale } else { 0.0 };
    items.push(item("linearity", rel <= 1e-10, format!("max relative deviation {rel:e}")));

    // midpoint energy balance
    let defect = dissipation_defect(system, &cfg.forcing, cfg)?;
    items.push(item("dissipation_identity", defect <= 1e-10, format!("max relative defect {defect:e}")));
    Ok(())
}

fn spectrum_checks(cfg: &ExperimentConfig, grid: &StaggeredGrid, items: &mut Vec<CheckItem>) -> Result<()> {
    let Some(limit) = cfg.problem.limit() else {
        return Ok(());
    };
    let k_max = 8.min(grid.nx() - 1);
    let expected = if limit == ProblemKind::LimitHE { -1.0 } else { 0.0 };
    for (label, mode) in [("continuum", SymbolMode::Continuum), ("discrete", SymbolMode::Discrete(*grid))] {
        let rep = limit_spectrum(limit, mode, k_max)?;
        items.push(item(
            &format!("spectral_abscissa_{label}"),
            rep.abscissa == expected,
            format!("{limit}: abscissa {} (expected {expected})", rep.abscissa),
        ));
    }
    let rep = limit_spectrum(limit, SymbolMode::Discrete(*grid), 1.min(grid.nx() - 1))?;
    let system = make_system(limit, grid)?;
    let worst = rep
        .modes
        .iter()
        .filter(|m| m.k == 1)
        .flat_map(|m| m.roots)
        .map(|r| mode_residual(&system, 1, num_complex::Complex64::new(r[0], r[1])))
        .fold(0.0, f64::max);
    items.push(item("mode1_residual", worst <= 1e-10, format!("max relative residual {worst:e}")));
    Ok(())
}

fn pairing_checks(items: &mut Vec<CheckItem>) -> Result<()> {
    for n in [4u32, 16, 64] {
        let layout = MaterialLayout::half(n, Family::HyperbolicElliptic)?;
        let d = layout.pairing_defect(&SpatialProfile::Linear, 4);
        let exact = 1.0 / (8.0 * n as f64);
        items.push(item(&format!("pairing_defect(n={n})"), (d - exact).abs() <= TOL, format!("{d} vs 1/(8n) = {exact}")));
    }
    Ok(())
}

/// Runs every check; configuration problems that only affect one item (such
/// as a grid not aligned to the problem's period) are reported as failures
/// rather than aborting the run.
pub fn validate_study(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    let grid = StaggeredGrid::new(cfg.nx)?;
    let mut items = Vec::new();
    for nx in [16usize, 256, cfg.nx] {
        let g = StaggeredGrid::new(nx)?;
        let (skew, adj) = skew_and_adjoint_defects(&g, 100, nx as u64);
        items.push(item(&format!("skew_symmetry(nx={nx})"), skew <= TOL, format!("max |<Av,v>|/|v|^2 = {skew:e}")));
        items.push(item(&format!("adjointness(nx={nx})"), adj <= TOL, format!("max |<Dw,u> + <w,Gu>| = {adj:e}")));
    }

    let aligned = match cfg.problem.layout(0.5)? {
        Some(layout) if cfg.problem.is_fine() => match check_alignment(&layout, &grid) {
            Ok(()) => {
                items.push(item("alignment", true, format!("nx = {} fits n = {}", cfg.nx, layout.n())));
                true
            }
            Err(e) => {
                items.push(item("alignment", false, e.to_string()));
                false
            }
        },
        _ => true,
    };
    if aligned {
        let system = make_system(cfg.problem, &grid)?;
        system_checks(cfg, &system, &mut items)?;
    }
    spectrum_checks(cfg, &grid, &mut items)?;
    pairing_checks(&mut items)?;

    let failures: Vec<String> = items.iter().filter(|i| !i.passed).map(|i| i.name.clone()).collect();
    Ok(ValidationReport { problem: cfg.problem.to_string(), passed: failures.is_empty(), failures, items })
}
