//! Norms, weak-convergence pairings, decay fits, limit spectra and junction
//! diagnostics.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::grid::{DiscreteSystem, StaggeredGrid};
use crate::integrator::{ForcingSpec, SpaceTimeField, TimeGrid};
use crate::material::MaterialLayout;
use crate::problems::{CenterField, ProblemKind};
use crate::profile::SpatialProfile;

/// Anything with a cell-centered u-trajectory on a uniform time grid.
pub trait CenterTrajectory {
    fn grid(&self) -> &StaggeredGrid;
    fn time(&self) -> &TimeGrid;
    fn u_at(&self, k: usize) -> &[f64];
}

impl CenterTrajectory for SpaceTimeField {
    fn grid(&self) -> &StaggeredGrid {
        &self.grid
    }
    fn time(&self) -> &TimeGrid {
        &self.time
    }
    fn u_at(&self, k: usize) -> &[f64] {
        self.u(k)
    }
}

impl CenterTrajectory for CenterField {
    fn grid(&self) -> &StaggeredGrid {
        &self.grid
    }
    fn time(&self) -> &TimeGrid {
        &self.time
    }
    fn u_at(&self, k: usize) -> &[f64] {
        &self.values[k]
    }
}

/// `½ Δx ⟨M v, v⟩`.
pub fn energy(system: &DiscreteSystem, v: &[f64]) -> f64 {
    let dx = system.grid().dx();
    0.5 * dx * v.iter().zip(system.m_diag()).map(|(x, m)| m * x * x).sum::<f64>()
}

/// Discrete `L²(0, 1)` norm, `(Δx Σ v²)^{1/2}`, of a stacked state or a
/// single row.
pub fn state_norm(grid: &StaggeredGrid, v: &[f64]) -> f64 {
    (grid.dx() * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

pub fn spatial_mean(grid: &StaggeredGrid, u: &[f64]) -> f64 {
    grid.dx() * u.iter().sum::<f64>()
}

/// Trapezoidal `(∫ s(t) e^{−2νt} dt)^{1/2}` from samples `s = ‖v(t)‖²`.
pub fn weighted_norm_from_squares(time: &TimeGrid, squares: &[f64], nu: f64) -> f64 {
    let dt = time.dt();
    let last = squares.len().saturating_sub(1);
    let sum: f64 = squares
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let w = if k == 0 || k == last { 0.5 } else { 1.0 };
            w * s * (-2.0 * nu * time.time(k)).exp()
        })
        .sum();
    (dt * sum).sqrt()
}

/// Weighted space-time norm of the full stacked trajectory.
pub fn weighted_space_time_norm(field: &SpaceTimeField, nu: f64) -> f64 {
    let squares: Vec<f64> = field.states.iter().map(|v| state_norm(&field.grid, v).powi(2)).collect();
    weighted_norm_from_squares(&field.time, &squares, nu)
}

/// Weighted space-time norm of the sampled forcing `(φ g, 0)`.
pub fn weighted_forcing_norm(forcing: &ForcingSpec, grid: &StaggeredGrid, time: &TimeGrid, nu: f64) -> f64 {
    let g = forcing.profile.sample(&grid.u_coords());
    let g2 = grid.dx() * g.iter().map(|x| x * x).sum::<f64>();
    let squares: Vec<f64> = time.times().iter().map(|&t| forcing.bump.value(t).powi(2) * g2).collect();
    weighted_norm_from_squares(time, &squares, nu)
}

/// Per-step energy, state norm and spatial mean of `u`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Traces {
    pub t: Vec<f64>,
    pub energy: Vec<f64>,
    pub state_norm: Vec<f64>,
    pub spatial_mean_u: Vec<f64>,
}

pub fn traces(system: &DiscreteSystem, field: &SpaceTimeField) -> Traces {
    let grid = &field.grid;
    let mut out = Traces::default();
    for (k, v) in field.states.iter().enumerate() {
        out.t.push(field.time.time(k));
        out.energy.push(energy(system, v));
        out.state_norm.push(state_norm(grid, v));
        out.spatial_mean_u.push(spatial_mean(grid, field.u(k)));
    }
    out
}

/// Temporal factor `ρ` of a separable test function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemporalWeight {
    Constant,
    Gaussian { center: f64, width: f64 },
    /// `(4 (t − on)(off − t) / (off − on)²)^p` on `[on, off]`.
    Bump { on: f64, off: f64, power: u32 },
}

impl TemporalWeight {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TemporalWeight::Constant => 1.0,
            TemporalWeight::Gaussian { center, width } => {
                let r = (t - center) / width;
                (-0.5 * r * r).exp()
            }
            TemporalWeight::Bump { on, off, power } => {
                if t <= on || t >= off {
                    0.0
                } else {
                    let s = (t - on) / (off - on);
                    (4.0 * s * (1.0 - s)).powi(power as i32)
                }
            }
        }
    }
}

/// Separable test function `ρ(t) σ(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub temporal: TemporalWeight,
    pub spatial: SpatialProfile,
}

impl TestFunction {
    pub fn new(temporal: TemporalWeight, spatial: SpatialProfile) -> Self {
        Self { temporal, spatial }
    }
}

/// A named member of the pairing test set. Oscillatory members are canaries:
/// their errors are reported but never held to a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogTest {
    pub id: String,
    pub testfn: TestFunction,
    pub smooth: bool,
}

/// Eight smooth tensor test functions and two oscillatory canaries.
pub fn default_test_set() -> Vec<CatalogTest> {
    use SpatialProfile as S;
    use TemporalWeight as T;
    let g = |center, width| T::Gaussian { center, width };
    let smooth = [
        ("g2_gauss30", g(2.0, 0.75), S::Gaussian { center: 0.3, width: 0.2 }),
        ("g2_cos1", g(2.0, 0.75), S::Cosine(1)),
        ("g3_linear", g(3.0, 1.0), S::Linear),
        ("g3_gauss50", g(3.0, 1.0), S::Gaussian { center: 0.5, width: 0.15 }),
        ("g4_cos2", g(4.0, 1.0), S::Cosine(2)),
        ("g1.5_gauss25", g(1.5, 0.5), S::Gaussian { center: 0.25, width: 0.1 }),
        ("b1-5_linear", T::Bump { on: 1.0, off: 5.0, power: 3 }, S::Linear),
        ("b1-5_gauss70", T::Bump { on: 1.0, off: 5.0, power: 3 }, S::Gaussian { center: 0.7, width: 0.12 }),
    ];
    let canaries = [("g3_cos8", g(3.0, 1.0), S::Cosine(8)), ("g3_cos32", g(3.0, 1.0), S::Cosine(32))];
    smooth
        .into_iter()
        .map(|(id, t, s)| CatalogTest { id: id.into(), testfn: TestFunction::new(t, s), smooth: true })
        .chain(canaries.into_iter().map(|(id, t, s)| CatalogTest { id: id.into(), testfn: TestFunction::new(t, s), smooth: false }))
        .collect()
}

/// Trapezoid in time, midpoint (cell-centered) in space:
/// `∬ u(t, x) ρ(t) σ(x) dx dt`.
pub fn pair_with_test_function<F: CenterTrajectory + ?Sized>(field: &F, testfn: &TestFunction) -> f64 {
    let grid = field.grid();
    let time = field.time();
    let sigma = testfn.spatial.sample(&grid.u_coords());
    let dx = grid.dx();
    let steps = time.steps();
    let mut acc = 0.0;
    for k in 0..=steps {
        let rho = testfn.temporal.eval(time.time(k));
        if rho == 0.0 {
            continue;
        }
        let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
        let inner: f64 = field.u_at(k).iter().zip(&sigma).map(|(u, s)| u * s).sum();
        acc += w * rho * inner;
    }
    acc * dx * time.dt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingRow {
    pub n: u32,
    pub testfn: String,
    pub smooth: bool,
    pub pairing_fine: f64,
    pub pairing_limit: f64,
    pub abs_error: f64,
    /// `log(e(n) / e(n′)) / log(n′ / n)` against the next sweep member `n′`;
    /// `log₂(e(n) / e(2n))` for doubling sweeps.
    pub empirical_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakConvergenceReport {
    pub rows: Vec<PairingRow>,
    pub flags: Vec<String>,
}

impl WeakConvergenceReport {
    /// Builds the report from precomputed pairings; `fine` holds one pairing
    /// vector (aligned with `tests`) per period count.
    pub fn from_pairings(mut fine: Vec<(u32, Vec<f64>)>, limit: &[f64], tests: &[CatalogTest]) -> Self {
        fine.sort_by_key(|(n, _)| *n);
        let mut rows = Vec::new();
        let mut flags = Vec::new();
        for (i, test) in tests.iter().enumerate() {
            let errs: Vec<f64> = fine.iter().map(|(_, p)| (p[i] - limit[i]).abs()).collect();
            for (j, (n, p)) in fine.iter().enumerate() {
                let empirical_order = fine.get(j + 1).and_then(|(n2, _)| {
                    let (e1, e2) = (errs[j], errs[j + 1]);
                    (e1 > 0.0 && e2 > 0.0).then(|| (e1 / e2).ln() / (*n2 as f64 / *n as f64).ln())
                });
                rows.push(PairingRow {
                    n: *n,
                    testfn: test.id.clone(),
                    smooth: test.smooth,
                    pairing_fine: p[i],
                    pairing_limit: limit[i],
                    abs_error: errs[j],
                    empirical_order,
                });
            }
            if let Some(j) = errs.windows(2).position(|w| w[1] >= w[0]) {
                let kind = if test.smooth { "smooth" } else { "oscillatory" };
                flags.push(format!("{} ({kind}): error not decreasing from n = {} to n = {}", test.id, fine[j].0, fine[j + 1].0));
            }
        }
        Self { rows, flags }
    }

    /// `(n, abs_error)` pairs for one test function in increasing `n`.
    pub fn errors_for(&self, testfn: &str) -> Vec<(u32, f64)> {
        self.rows.iter().filter(|r| r.testfn == testfn).map(|r| (r.n, r.abs_error)).collect()
    }
}

pub fn pairings<F: CenterTrajectory + ?Sized>(field: &F, tests: &[CatalogTest]) -> Vec<f64> {
    tests.iter().map(|t| pair_with_test_function(field, &t.testfn)).collect()
}

/// Pairing errors of fine-scale solutions against the limit solution.
pub fn weak_convergence_report(fine: &[(u32, &SpaceTimeField)], limit: &SpaceTimeField, tests: &[CatalogTest]) -> Result<WeakConvergenceReport> {
    for (n, f) in fine {
        if f.time != limit.time {
            return Err(LabError::Comparability(format!("time grid of n = {n} differs from the limit run")));
        }
    }
    let limit_p = pairings(limit, tests);
    let fine_p = fine.iter().map(|(n, f)| (*n, pairings(*f, tests))).collect();
    Ok(WeakConvergenceReport::from_pairings(fine_p, &limit_p, tests))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    StateNorm,
    Energy,
    SpatialMean,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    /// Least-squares slope of `log(trace)` over the window.
    pub rate: f64,
    /// RMS deviation of `log(trace)` from the fitted line.
    pub residual: f64,
    pub window: (f64, f64),
    pub quantity: Quantity,
    pub samples: usize,
    /// Set when the trace is not positive on the window; the rate is then 0.
    pub degenerate: bool,
}

pub fn fit_decay_rate(times: &[f64], values: &[f64], window: (f64, f64), quantity: Quantity) -> Result<DecayReport> {
    let (t1, t2) = window;
    let (Some(&first), Some(&last)) = (times.first(), times.last()) else {
        return Err(LabError::Domain("empty trace".into()));
    };
    let slack = 1e-9 * (1.0 + last.abs());
    if !(t1 < t2) || t1 < first - slack || t2 > last + slack || times.len() != values.len() {
        return Err(LabError::Domain(format!("fit window [{t1}, {t2}] outside data range [{first}, {last}]")));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t1 - slack && **t <= t2 + slack)
        .map(|(t, v)| (*t, *v))
        .collect();
    let degenerate = |samples| DecayReport { rate: 0.0, residual: 0.0, window, quantity, samples, degenerate: true };
    if pts.len() < 2 || pts.iter().any(|(_, v)| !(*v > 0.0)) {
        return Ok(degenerate(pts.len()));
    }
    let m = pts.len() as f64;
    let tbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let (mut sty, mut stt) = (0.0, 0.0);
    for (t, v) in &pts {
        let dt = t - tbar;
        sty += dt * (v.ln() - ybar);
        stt += dt * dt;
    }
    let rate = sty / stt;
    let residual = (pts.iter().map(|(t, v)| (v.ln() - ybar - rate * (t - tbar)).powi(2)).sum::<f64>() / m).sqrt();
    Ok(DecayReport { rate, residual, window, quantity, samples: pts.len(), degenerate: false })
}

/// Continuum symbol `kπ` or the staggered-grid symbol `(2/Δx) sin(kπΔx/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolMode {
    Continuum,
    Discrete(StaggeredGrid),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeRoots {
    pub k: usize,
    pub symbol: f64,
    /// `[re, im]` of the two roots.
    pub roots: [[f64; 2]; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub kind: String,
    pub mode: String,
    pub modes: Vec<ModeRoots>,
    pub abscissa: f64,
}

/// Constant limit coefficients `(m_u, m_w, n_u, n_w)` at duty ½.
fn limit_constants(kind: ProblemKind) -> Result<(f64, f64, f64, f64)> {
    match kind {
        ProblemKind::LimitHE => Ok((0.5, 0.5, 0.5, 0.5)),
        ProblemKind::LimitHP => Ok((1.0, 0.5, 0.0, 0.5)),
        other => Err(LabError::Domain(format!("spectrum is defined for limit systems only, got {other}"))),
    }
}

/// Roots of `det(λ M₂ + N₂ + A_k) = 0` with `A_k = [[0, −d], [d, 0]]`:
/// `m_u m_w λ² + (m_u n_w + n_u m_w) λ + n_u n_w + d² = 0`.
fn mode_roots(coeffs: (f64, f64, f64, f64), d: f64) -> [Complex64; 2] {
    let (mu, mw, nu, nw) = coeffs;
    let a = mu * mw;
    let b = mu * nw + nu * mw;
    let c = nu * nw + d * d;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a);
        [Complex64::new(re, im), Complex64::new(re, -im)]
    } else {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let r1 = q / a;
        let r2 = if q != 0.0 { c / q } else { r1 };
        [Complex64::new(r1 + 0.0, 0.0), Complex64::new(r2 + 0.0, 0.0)]
    }
}

pub fn limit_spectrum(kind: ProblemKind, mode: SymbolMode, k_max: usize) -> Result<SpectrumReport> {
    let coeffs = limit_constants(kind)?;
    if let SymbolMode::Discrete(grid) = mode {
        if k_max > grid.nx() - 1 {
            return Err(LabError::Domain(format!("k_max = {k_max} exceeds nx − 1 = {}", grid.nx() - 1)));
        }
    }
    let mut modes = Vec::with_capacity(k_max + 1);
    let mut abscissa = f64::NEG_INFINITY;
    for k in 0..=k_max {
        let d = match mode {
            SymbolMode::Continuum => k as f64 * PI,
            SymbolMode::Discrete(grid) => grid.symbol(k),
        };
        let roots = mode_roots(coeffs, d);
        for r in &roots {
            abscissa = abscissa.max(r.re);
        }
        modes.push(ModeRoots { k, symbol: d, roots: roots.map(|r| [r.re, r.im]) });
    }
    let mode = match mode {
        SymbolMode::Continuum => "continuum".to_string(),
        SymbolMode::Discrete(g) => format!("discrete(nx={})", g.nx()),
    };
    Ok(SpectrumReport { kind: kind.to_string(), mode, modes, abscissa: abscissa + 0.0 })
}

/// Relative residual of `(λM + N + A) v` for the sampled mode
/// `v = (cos(kπx), b sin(kπx))` with the amplitude ratio `b` that the
/// per-mode symbol predicts. Probes the assembled operator directly.
pub fn mode_residual(system: &DiscreteSystem, k: usize, lambda: Complex64) -> f64 {
    let grid = system.grid();
    let nx = grid.nx();
    let d = grid.symbol(k);
    let (mu, nu) = (system.m_diag()[0], system.n_diag()[0]);
    let b = if d != 0.0 { (lambda * mu + nu) / d } else { Complex64::new(0.0, 0.0) };
    let kpi = k as f64 * PI;
    let re: Vec<f64> = grid
        .u_coords()
        .iter()
        .map(|x| (kpi * x).cos())
        .chain(grid.w_coords().iter().map(|x| b.re * (kpi * x).sin()))
        .collect();
    let im: Vec<f64> = std::iter::repeat(0.0)
        .take(nx)
        .chain(grid.w_coords().iter().map(|x| b.im * (kpi * x).sin()))
        .collect();
    let (a_re, a_im) = (system.apply_skew(&re), system.apply_skew(&im));
    let (mut res, mut scale) = (0.0, 0.0);
    for s in 0..grid.dim() {
        let v = Complex64::new(re[s], im[s]);
        let mv = v * system.m_diag()[s];
        let nv = v * system.n_diag()[s];
        let av = Complex64::new(a_re[s], a_im[s]);
        res += (lambda * mv + nv + av).norm_sqr();
        scale += (lambda.norm() * mv.norm() + nv.norm() + av.norm()).powi(2);
    }
    (res / scale).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JunctionReport {
    /// Largest jump `|u_{i+1} − u_i|` across a junction node, over all times,
    /// divided by `max |u|` over the field.
    pub indicator: f64,
    pub junctions: usize,
    /// Set for an identically zero field (indicator then 0).
    pub degenerate: bool,
}

/// Jump of `u` between the two cells adjacent to every phase-change node.
pub fn junction_jump_report<F: CenterTrajectory + ?Sized>(field: &F, layout: &MaterialLayout) -> JunctionReport {
    let grid = field.grid();
    let nx = grid.nx();
    let nodes: Vec<usize> = layout
        .junctions()
        .iter()
        .map(|x| (x * nx as f64).round() as usize)
        .filter(|&j| j >= 1 && j < nx)
        .collect();
    let mut jump = 0.0f64;
    let mut scale = 0.0f64;
    for k in 0..=field.time().steps() {
        let u = field.u_at(k);
        scale = u.iter().fold(scale, |a, x| a.max(x.abs()));
        for &j in &nodes {
            jump = jump.max((u[j] - u[j - 1]).abs());
        }
    }
    if scale == 0.0 {
        return JunctionReport { indicator: 0.0, junctions: nodes.len(), degenerate: true };
    }
    JunctionReport { indicator: jump / scale, junctions: nodes.len(), degenerate: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::dot;
    use crate::integrator::{solve_evolution, Bump};
    use crate::material::Family;
    use crate::problems::make_system;

    fn grid(nx: usize) -> StaggeredGrid {
        StaggeredGrid::new(nx).unwrap()
    }

    fn field_from(grid: StaggeredGrid, time: TimeGrid, f: impl Fn(f64, f64) -> f64) -> SpaceTimeField {
        let xs = grid.u_coords();
        let states = (0..=time.steps())
            .map(|k| {
                let t = time.time(k);
                xs.iter().map(|&x| f(t, x)).chain(std::iter::repeat(0.0).take(grid.w_len())).collect()
            })
            .collect();
        SpaceTimeField { grid, time, states, forcing_id: "synthetic".into() }
    }

    #[test]
    fn energy_examples() {
        let g = grid(4);
        let he = make_system(ProblemKind::LimitHE, &g).unwrap();
        assert_eq!(energy(&he, &vec![0.0; 7]), 0.0);
        // ‖v‖² Δx = 4 with Δx = 1/4 means Σ v² = 16
        let v = vec![16f64.sqrt() / 7f64.sqrt(); 7];
        assert!((energy(&he, &v) - 1.0).abs() < 1e-14);
        let fine = make_system(ProblemKind::FineHE(1), &g).unwrap();
        // purely elliptic dofs: u[2], u[3], w[2]
        let mut e = vec![0.0; 7];
        for s in [2, 3, 6] {
            e[s] = 1.3;
        }
        assert_eq!(energy(&fine, &e), 0.0);
    }

    #[test]
    fn weighted_norm_examples() {
        let g = grid(8);
        let time = TimeGrid::new(0.0, 10.0, 0.001).unwrap();
        let zero = field_from(g, time, |_, _| 0.0);
        assert_eq!(weighted_space_time_norm(&zero, 0.3), 0.0);
        let c = field_from(g, time, |_, _| 2.0);
        assert!((weighted_space_time_norm(&c, 0.0) - 2.0 * 10f64.sqrt()).abs() < 1e-12);
        let profile = |x: f64| (PI * x).cos();
        let e = field_from(g, time, |t, x| (-t).exp() * profile(x));
        let sampled: Vec<f64> = g.u_coords().iter().map(|&x| profile(x)).collect();
        let pnorm = state_norm(&g, &sampled);
        let exact = pnorm * ((1.0 - (-20f64).exp()) / 2.0).sqrt();
        assert!((weighted_space_time_norm(&e, 0.0) - exact).abs() < 1e-6);
    }

    #[test]
    fn weighted_norm_is_nonincreasing_in_nu() {
        let g = grid(8);
        let time = TimeGrid::new(0.0, 5.0, 0.01).unwrap();
        let f = field_from(g, time, |t, x| (t * x).sin() + 0.1);
        let vals: Vec<f64> = [-1.0, -0.5, 0.0, 0.5, 1.0, 2.0].iter().map(|&nu| weighted_space_time_norm(&f, nu)).collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn pairing_examples() {
        let g = grid(64);
        let time = TimeGrid::new(0.0, 3.0, 0.001).unwrap();
        let ones = TestFunction::new(TemporalWeight::Constant, SpatialProfile::Constant);
        assert_eq!(pair_with_test_function(&field_from(g, time, |_, _| 0.0), &ones), 0.0);
        assert!((pair_with_test_function(&field_from(g, time, |_, _| 1.0), &ones) - 3.0).abs() < 1e-12);
        // u = cos(πx) h(t), σ = cos(πx): ½ ∫ h
        let h = |t: f64| 1.0 + t * t;
        let f = field_from(g, time, |t, x| (PI * x).cos() * h(t));
        let tf = TestFunction::new(TemporalWeight::Constant, SpatialProfile::Cosine(1));
        let exact = 0.5 * (3.0 + 9.0);
        assert!((pair_with_test_function(&f, &tf) - exact).abs() < 1e-5);
    }

    #[test]
    fn pairing_is_linear() {
        let g = grid(16);
        let time = TimeGrid::new(0.0, 2.0, 0.01).unwrap();
        let a = field_from(g, time, |t, x| (t + x).sin());
        let b = field_from(g, time, |t, x| (t * x).cos());
        let mut c = a.clone();
        for (cs, bs) in c.states.iter_mut().zip(&b.states) {
            for (x, y) in cs.iter_mut().zip(bs) {
                *x = 2.0 * *x - 3.0 * y;
            }
        }
        for t in default_test_set() {
            let lhs = pair_with_test_function(&c, &t.testfn);
            let rhs = 2.0 * pair_with_test_function(&a, &t.testfn) - 3.0 * pair_with_test_function(&b, &t.testfn);
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn default_test_set_shape() {
        let set = default_test_set();
        assert_eq!(set.iter().filter(|t| t.smooth).count(), 8);
        assert_eq!(set.iter().filter(|t| !t.smooth).count(), 2);
    }

    #[test]
    fn report_against_itself_is_zero() {
        let g = grid(16);
        let time = TimeGrid::new(0.0, 4.0, 0.01).unwrap();
        let f = field_from(g, time, |t, x| (t * x).sin());
        let tests = default_test_set();
        let r = weak_convergence_report(&[(4, &f), (8, &f)], &f, &tests).unwrap();
        assert!(r.rows.iter().all(|row| row.abs_error == 0.0 && row.empirical_order.is_none()));
        let other = field_from(g, TimeGrid::new(0.0, 4.0, 0.02).unwrap(), |_, _| 0.0);
        assert!(matches!(weak_convergence_report(&[(4, &other)], &f, &tests), Err(LabError::Comparability(_))));
    }

    #[test]
    fn empirical_order_for_doubling() {
        let tests = &default_test_set()[..1];
        let r = WeakConvergenceReport::from_pairings(vec![(8, vec![1.25]), (4, vec![1.5])], &[1.0], tests);
        let rows = r.errors_for("g2_gauss30");
        assert_eq!(rows, vec![(4, 0.5), (8, 0.25)]);
        assert!((r.rows[0].empirical_order.unwrap() - 1.0).abs() < 1e-14);
        assert!(r.rows[1].empirical_order.is_none());
        assert!(r.flags.is_empty());
        let flagged = WeakConvergenceReport::from_pairings(vec![(4, vec![1.1]), (8, vec![1.3])], &[1.0], tests);
        assert_eq!(flagged.flags.len(), 1);
    }

    #[test]
    fn decay_fit_examples() {
        let times: Vec<f64> = (0..=1200).map(|k| k as f64 * 0.01).collect();
        let exp2: Vec<f64> = times.iter().map(|t| (-2.0 * t).exp()).collect();
        let r = fit_decay_rate(&times, &exp2, (1.0, 5.0), Quantity::Energy).unwrap();
        assert!((r.rate + 2.0).abs() < 1e-6 && r.residual < 1e-9);
        let poly: Vec<f64> = times.iter().map(|t| (1.0 + t) * (-t).exp()).collect();
        let r = fit_decay_rate(&times, &poly, (8.0, 12.0), Quantity::StateNorm).unwrap();
        // d/dt log((1+t)e^{−t}) = −1 + 1/(1+t) ∈ (−0.9167, −0.8889) on [8, 12]
        assert!(r.rate > -0.9167 && r.rate < -0.8889, "{}", r.rate);
        let flat = vec![3.5; times.len()];
        assert_eq!(fit_decay_rate(&times, &flat, (2.0, 9.0), Quantity::SpatialMean).unwrap().rate.abs() < 1e-15, true);
        assert!(matches!(fit_decay_rate(&times, &flat, (10.0, 14.0), Quantity::Energy), Err(LabError::Domain(_))));
        let mut holes = flat.clone();
        holes[500] = 0.0;
        assert!(fit_decay_rate(&times, &holes, (4.0, 6.0), Quantity::Energy).unwrap().degenerate);
    }

    #[test]
    fn spectrum_examples() {
        let he = limit_spectrum(ProblemKind::LimitHE, SymbolMode::Continuum, 3).unwrap();
        assert_eq!(he.abscissa, -1.0);
        assert_eq!(he.modes[0].roots, [[-1.0, 0.0], [-1.0, 0.0]]);
        assert!((he.modes[1].roots[0][1] - 2.0 * PI).abs() < 1e-14);
        let hp = limit_spectrum(ProblemKind::LimitHP, SymbolMode::Continuum, 3).unwrap();
        assert_eq!(hp.abscissa, 0.0);
        let mut k0: Vec<f64> = hp.modes[0].roots.iter().map(|r| r[0]).collect();
        k0.sort_by(f64::total_cmp);
        assert_eq!(k0, vec![-1.0, 0.0]);
        assert!((hp.modes[1].roots[0][0] + 0.5).abs() < 1e-15);
        let d = limit_spectrum(ProblemKind::LimitHE, SymbolMode::Discrete(grid(4)), 1).unwrap();
        assert!((d.modes[1].roots[0][1] - 2.0 * 8.0 * (PI / 8.0).sin()).abs() < 1e-13);
        assert!((d.modes[1].roots[0][1] - 6.122934917841437).abs() < 1e-12);
        assert!(limit_spectrum(ProblemKind::LimitHE, SymbolMode::Discrete(grid(4)), 4).is_err());
        assert!(limit_spectrum(ProblemKind::FineHE(2), SymbolMode::Continuum, 1).is_err());
    }

    #[test]
    fn spectrum_matches_assembled_operator() {
        for kind in [ProblemKind::LimitHE, ProblemKind::LimitHP] {
            let g = grid(4);
            let sys = make_system(kind, &g).unwrap();
            let spec = limit_spectrum(kind, SymbolMode::Discrete(g), 3).unwrap();
            // k = 0 has no flux mode (sin 0 ≡ 0), only the u-row root is realized
            for m in spec.modes.iter().skip(1) {
                for r in &m.roots {
                    let res = mode_residual(&sys, m.k, Complex64::new(r[0], r[1]));
                    assert!(res < 1e-12, "{kind} k = {} residual {res}", m.k);
                }
            }
            // a wrong eigenvalue leaves a visible residual
            assert!(mode_residual(&sys, 1, Complex64::new(-1.0, 1.0)) > 1e-3);
        }
    }

    #[test]
    fn junction_report_examples() {
        let g = grid(16);
        let time = TimeGrid::new(0.0, 1.0, 0.1).unwrap();
        let layout = MaterialLayout::half(2, Family::HyperbolicElliptic).unwrap();
        let ones = field_from(g, time, |_, _| 1.0);
        let r = junction_jump_report(&ones, &layout);
        assert_eq!(r.indicator, 0.0);
        assert!(!r.degenerate);
        assert_eq!(r.junctions, 3);
        let zero = field_from(g, time, |_, _| 0.0);
        assert!(junction_jump_report(&zero, &layout).degenerate);
    }

    #[test]
    fn junction_indicator_shrinks_under_refinement() {
        let layout = MaterialLayout::half(2, Family::HyperbolicElliptic).unwrap();
        let f = crate::integrator::ForcingSpec::new(Bump::new(0.5, 1.5, 1.0, 3).unwrap(), SpatialProfile::Cosine(1));
        let time = TimeGrid::new(0.0, 3.0, 0.005).unwrap();
        let vals: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&nx| {
                let sys = make_system(ProblemKind::FineHE(2), &grid(nx)).unwrap();
                let field = solve_evolution(&sys, &f, &time, 1.0).unwrap();
                junction_jump_report(&field, &layout).indicator
            })
            .collect();
        assert!(vals[1] < vals[0] && vals[2] < vals[1], "{vals:?}");
    }

    #[test]
    fn skew_probe_through_operator() {
        let g = grid(32);
        let sys = make_system(ProblemKind::FineHP(4), &g).unwrap();
        let v: Vec<f64> = (0..g.dim()).map(|i| ((i * 37 % 17) as f64 - 8.0) * 0.1).collect();
        assert!(dot(&sys.apply_skew(&v), &v).abs() < 1e-12 * dot(&v, &v));
    }
}
