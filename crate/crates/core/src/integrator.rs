//! Causal θ-scheme for `∂ₜ(M v) + N v + A v = F` with zero initial state.
//!
//! `M` may vanish on part of the domain, in which case the corresponding rows
//! are algebraic constraints. The step matrix `M/Δt + θ(N + A)` is assembled
//! in the interleaved dof ordering, where it is tridiagonal, and factored once.

use crate::banded::{BandedLu, BandedMatrix};
use crate::error::{LabError, Result};
use crate::grid::{DiscreteSystem, StaggeredGrid};
use crate::profile::SpatialProfile;

/// Uniform time grid `t_k = t_start + k Δt`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(LabError::Domain(format!("time step must be positive, got {dt}")));
        }
        if !(t_end > t_start) {
            return Err(LabError::Domain(format!("t_end = {t_end} must exceed t_start = {t_start}")));
        }
        let steps = ((t_end - t_start) / dt).round() as usize;
        if steps == 0 {
            return Err(LabError::Domain("time window shorter than one step".into()));
        }
        Ok(Self { t_start, dt, steps })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.steps)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }
}

/// Polynomial bump `amp (4 (t − t_on)(t_off − t) / (t_off − t_on)²)^p` on
/// `[t_on, t_off]`, zero elsewhere. It is `C^(p−1)` with compact support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub t_on: f64,
    pub t_off: f64,
    pub amp: f64,
    pub power: u32,
}

impl Bump {
    pub fn new(t_on: f64, t_off: f64, amp: f64, power: u32) -> Result<Self> {
        if !(t_off > t_on) {
            return Err(LabError::Domain(format!("bump needs t_off > t_on, got [{t_on}, {t_off}]")));
        }
        if power == 0 {
            return Err(LabError::Domain("bump power must be at least 1".into()));
        }
        if !amp.is_finite() {
            return Err(LabError::Domain("bump amplitude must be finite".into()));
        }
        Ok(Self { t_on, t_off, amp, power })
    }

    /// Scales the amplitude so that `∫ φ = 1`.
    pub fn normalized(t_on: f64, t_off: f64, power: u32) -> Result<Self> {
        let unit = Self::new(t_on, t_off, 1.0, power)?;
        Self::new(t_on, t_off, 1.0 / unit.total_integral(), power)
    }

    fn len(&self) -> f64 {
        self.t_off - self.t_on
    }

    fn reduced(&self, t: f64) -> Option<f64> {
        (t > self.t_on && t < self.t_off).then(|| (t - self.t_on) / self.len())
    }

    pub fn value(&self, t: f64) -> f64 {
        match self.reduced(t) {
            Some(s) => self.amp * (4.0 * s * (1.0 - s)).powi(self.power as i32),
            None => 0.0,
        }
    }

    /// Closed-form `φ′(t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        match self.reduced(t) {
            Some(s) => {
                let p = self.power as i32;
                let base = 4.0 * s * (1.0 - s);
                self.amp * p as f64 * base.powi(p - 1) * 4.0 * (1.0 - 2.0 * s) / self.len()
            }
            None => 0.0,
        }
    }

    /// Closed-form `∫_{−∞}^t φ`, from the binomial expansion of `sᵖ(1 − s)ᵖ`.
    pub fn integral_to(&self, t: f64) -> f64 {
        let s = if t <= self.t_on {
            return 0.0;
        } else if t >= self.t_off {
            1.0
        } else {
            (t - self.t_on) / self.len()
        };
        let p = self.power as i32;
        let mut binom = 1.0;
        let mut acc = 0.0;
        for m in 0..=p {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * s.powi(p + m + 1) / f64::from(p + m + 1);
            binom = binom * f64::from(p - m) / f64::from(m + 1);
        }
        self.amp * self.len() * 4f64.powi(p) * acc
    }

    pub fn total_integral(&self) -> f64 {
        self.integral_to(self.t_off)
    }
}

/// Separable forcing `F(t) = (φ(t) g(x), 0)`; the flux row is never forced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingSpec {
    pub bump: Bump,
    pub profile: SpatialProfile,
}

impl ForcingSpec {
    pub fn new(bump: Bump, profile: SpatialProfile) -> Self {
        Self { bump, profile }
    }

    pub fn id(&self) -> String {
        let b = &self.bump;
        format!("bump[{},{}] amp={} p={} g={}", b.t_on, b.t_off, b.amp, b.power, self.profile)
    }

    /// Same forcing with amplitude scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = *self;
        out.bump.amp *= factor;
        out
    }

    /// Stacked forcing vector at time `t`, written into `out`.
    pub fn sample_into(&self, t: f64, g: &[f64], out: &mut [f64]) {
        let phi = self.bump.value(t);
        let (u, w) = out.split_at_mut(g.len());
        for (o, gi) in u.iter_mut().zip(g) {
            *o = phi * gi;
        }
        w.fill(0.0);
    }
}

/// Trajectory of stacked states on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub grid: StaggeredGrid,
    pub time: TimeGrid,
    pub states: Vec<Vec<f64>>,
    pub forcing_id: String,
}

impl SpaceTimeField {
    pub fn u(&self, k: usize) -> &[f64] {
        &self.states[k][..self.grid.nx()]
    }

    pub fn w(&self, k: usize) -> &[f64] {
        &self.states[k][self.grid.nx()..]
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("field holds at least the initial state")
    }
}

/// Factored step matrix `M/Δt + θ(N + A)`, reusable for every step of a
/// uniform time grid.
#[derive(Debug, Clone)]
pub struct StepFactorization {
    lu: BandedLu,
    dt: f64,
    theta: f64,
    grid: StaggeredGrid,
}

impl StepFactorization {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

pub fn factor_step_matrix(system: &DiscreteSystem, dt: f64, theta: f64) -> Result<StepFactorization> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(LabError::Domain(format!("time step must be positive, got {dt}")));
    }
    if !(0.5..=1.0).contains(&theta) {
        return Err(LabError::Domain(format!("θ must lie in [1/2, 1], got {theta}")));
    }
    let grid = *system.grid();
    let dim = grid.dim();
    let off = theta * grid.nx() as f64;
    let mut mat = BandedMatrix::zeros(dim, 1, 1);
    for s in 0..dim {
        let diag = system.m_diag()[s] / dt + theta * system.n_diag()[s];
        if !(diag > 0.0) {
            return Err(LabError::Singular { dof: grid.dof_name(s) });
        }
        mat.set(grid.interleaved(s), grid.interleaved(s), diag);
    }
    // interleaved A: +1/Δx on the subdiagonal, −1/Δx on the superdiagonal
    for p in 0..dim - 1 {
        mat.set(p, p + 1, -off);
        mat.set(p + 1, p, off);
    }
    let lu = BandedLu::factor(mat).map_err(|e| match e {
        LabError::Singular { dof } => {
            let p: usize = dof.parse().unwrap_or(0);
            let s = (0..dim).find(|&s| grid.interleaved(s) == p).unwrap_or(0);
            LabError::Singular { dof: grid.dof_name(s) }
        }
        other => other,
    })?;
    Ok(StepFactorization { lu, dt, theta, grid })
}

/// One step: solves `(M/Δt + θ(N + A)) v₊ = (M/Δt − (1 − θ)(N + A)) v + θF₊ + (1 − θ)F`.
pub fn advance(fac: &StepFactorization, system: &DiscreteSystem, v: &[f64], f_now: &[f64], f_next: &[f64]) -> Result<Vec<f64>> {
    let grid = &fac.grid;
    let dim = grid.dim();
    if v.len() != dim || f_now.len() != dim || f_next.len() != dim || system.dim() != dim {
        return Err(LabError::Domain("state or forcing dimension does not match the system".into()));
    }
    let (theta, dt) = (fac.theta, fac.dt);
    let explicit = 1.0 - theta;
    let av = if explicit != 0.0 { system.apply_skew(v) } else { Vec::new() };
    let mut rhs = vec![0.0; dim];
    for s in 0..dim {
        let m = system.m_diag()[s];
        let n = system.n_diag()[s];
        let mut r = m / dt * v[s] + theta * f_next[s] + explicit * f_now[s];
        if explicit != 0.0 {
            r -= explicit * (n * v[s] + av[s]);
        }
        rhs[grid.interleaved(s)] = r;
    }
    fac.lu.solve_in_place(&mut rhs);
    let out: Vec<f64> = (0..dim).map(|s| rhs[grid.interleaved(s)]).collect();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(LabError::Divergence { step: 0 });
    }
    Ok(out)
}

/// Integrates from the zero state at `time.t_start()`.
pub fn solve_evolution(system: &DiscreteSystem, forcing: &ForcingSpec, time: &TimeGrid, theta: f64) -> Result<SpaceTimeField> {
    let bump = &forcing.bump;
    if bump.t_on < time.t_start() || bump.t_off > time.t_end() {
        return Err(LabError::Domain(format!(
            "forcing support [{}, {}] must lie inside the time window [{}, {}]",
            bump.t_on,
            bump.t_off,
            time.t_start(),
            time.t_end()
        )));
    }
    let grid = *system.grid();
    let g = forcing.profile.sample(&grid.u_coords());
    let dim = grid.dim();
    let fac = factor_step_matrix(system, time.dt(), theta)?;

    let mut f_now = vec![0.0; dim];
    forcing.sample_into(time.t_start(), &g, &mut f_now);
    // zero data is a consistent initial value only if the forcing is off at t_start
    debug_assert!(f_now.iter().all(|&f| f == 0.0));

    let mut states = Vec::with_capacity(time.steps() + 1);
    states.push(vec![0.0; dim]);
    let mut f_next = vec![0.0; dim];
    for k in 0..time.steps() {
        forcing.sample_into(time.time(k + 1), &g, &mut f_next);
        let next = advance(&fac, system, &states[k], &f_now, &f_next).map_err(|e| match e {
            LabError::Divergence { .. } => LabError::Divergence { step: k + 1 },
            other => other,
        })?;
        states.push(next);
        std::mem::swap(&mut f_now, &mut f_next);
    }
    Ok(SpaceTimeField { grid, time: *time, states, forcing_id: forcing.id() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{assemble_system, dot};
    use crate::material::CoefficientField;
    use crate::problems::ProblemKind;
    use crate::profile::gauss_legendre;

    fn system(kind: ProblemKind, nx: usize) -> DiscreteSystem {
        assemble_system(kind, 0.5, &StaggeredGrid::new(nx).unwrap()).unwrap()
    }

    fn forcing(profile: SpatialProfile) -> ForcingSpec {
        ForcingSpec::new(Bump::new(0.5, 1.5, 1.0, 3).unwrap(), profile)
    }

    #[test]
    fn time_grid_basics() {
        let t = TimeGrid::new(0.0, 1.0, 0.1).unwrap();
        assert_eq!(t.steps(), 10);
        assert!((t.t_end() - 1.0).abs() < 1e-14);
        assert!(TimeGrid::new(1.0, 0.0, 0.1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn bump_closed_forms_match_quadrature() {
        for power in [1u32, 2, 3, 5] {
            let b = Bump::new(0.5, 1.5, 1.7, power).unwrap();
            for &t in &[0.3f64, 0.7, 1.0, 1.3, 2.0] {
                let q = gauss_legendre(|s| b.value(s), 0.5, t.clamp(0.5, 1.5), 64);
                assert!((b.integral_to(t) - q).abs() < 1e-12 * (1.0 + q.abs()), "p = {power} t = {t}");
                let h = 1e-6;
                if t > 0.5 && t < 1.5 {
                    let fd = (b.value(t + h) - b.value(t - h)) / (2.0 * h);
                    assert!((b.derivative(t) - fd).abs() < 1e-6);
                }
            }
        }
        // ∫ (4s(1−s))³ ds = 64 · B(4, 4) = 64 / 140
        let b = Bump::new(0.0, 1.0, 1.0, 3).unwrap();
        assert!((b.total_integral() - 64.0 / 140.0).abs() < 1e-14);
        let n = Bump::normalized(0.5, 1.5, 3).unwrap();
        assert!((n.total_integral() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn step_matrix_guards() {
        let s = system(ProblemKind::LimitHE, 4);
        assert!(factor_step_matrix(&s, 0.01, 0.4).is_err());
        assert!(factor_step_matrix(&s, 0.0, 1.0).is_err());
        let grid = StaggeredGrid::new(4).unwrap();
        let mut c = CoefficientField::constant(&grid, 1.0, 0.0, 1.0, 0.0);
        c.m_w[1] = 0.0;
        let bad = DiscreteSystem::from_coefficients(grid, ProblemKind::PureWave, None, &c).unwrap();
        let err = factor_step_matrix(&bad, 0.1, 1.0).unwrap_err();
        match err {
            LabError::Singular { dof } => assert!(dof.starts_with("w[1]"), "{dof}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn limit_he_step_diagonal() {
        // M/Δt + θN on LimitHE is 0.5/0.01 + 0.5 = 50.5; with zero A-coupling
        // (constant state, no flux) the step maps M/Δt·v back to v.
        let s = system(ProblemKind::LimitHE, 4);
        let fac = factor_step_matrix(&s, 0.01, 1.0).unwrap();
        let mut v = vec![0.0; 7];
        v[..4].fill(1.0);
        let zero = vec![0.0; 7];
        let next = advance(&fac, &s, &v, &zero, &zero).unwrap();
        for x in &next[..4] {
            assert!((x - 50.0 / 50.5).abs() < 1e-14);
        }
        assert!(next[4..].iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn zero_in_zero_out() {
        let s = system(ProblemKind::FineHE(2), 8);
        let fac = factor_step_matrix(&s, 0.01, 1.0).unwrap();
        let zero = vec![0.0; s.dim()];
        assert_eq!(advance(&fac, &s, &zero, &zero, &zero).unwrap(), zero);
    }

    #[test]
    fn pure_elliptic_step_is_memoryless() {
        let s = system(ProblemKind::PureElliptic, 8);
        let fac = factor_step_matrix(&s, 0.05, 1.0).unwrap();
        let mut f = vec![0.0; s.dim()];
        f[..8].fill(1.0);
        let junk: Vec<f64> = (0..s.dim()).map(|i| (i as f64).sin() * 3.0).collect();
        let next = advance(&fac, &s, &junk, &f, &f).unwrap();
        for x in &next[..8] {
            assert!((x - 1.0).abs() < 1e-13);
        }
        for x in &next[8..] {
            assert!(x.abs() < 1e-13);
        }
    }

    #[test]
    fn midpoint_conserves_wave_norm() {
        let s = system(ProblemKind::PureWave, 32);
        let fac = factor_step_matrix(&s, 0.05, 0.5).unwrap();
        let mut v: Vec<f64> = (0..s.dim()).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
        let n0 = dot(&v, &v);
        let zero = vec![0.0; s.dim()];
        for _ in 0..50 {
            v = advance(&fac, &s, &v, &zero, &zero).unwrap();
        }
        assert!((dot(&v, &v) - n0).abs() < 1e-12 * n0);
    }

    #[test]
    fn amplitude_zero_gives_zero_field() {
        let s = system(ProblemKind::FineHP(2), 16);
        let f = ForcingSpec::new(Bump::new(0.5, 1.5, 0.0, 3).unwrap(), SpatialProfile::Constant);
        let t = TimeGrid::new(0.0, 2.0, 0.01).unwrap();
        let field = solve_evolution(&s, &f, &t, 1.0).unwrap();
        assert!(field.states.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn causality_and_linearity() {
        let s = system(ProblemKind::FineHE(2), 16);
        let t = TimeGrid::new(0.0, 3.0, 0.01).unwrap();
        let f1 = forcing(SpatialProfile::Cosine(1));
        let f2 = forcing(SpatialProfile::Gaussian { center: 0.3, width: 0.1 });
        let a = solve_evolution(&s, &f1, &t, 1.0).unwrap();
        let b = solve_evolution(&s, &f2, &t, 1.0).unwrap();
        for k in 0..=50 {
            assert!(a.states[k].iter().all(|&x| x == 0.0), "state {k} nonzero before t_on");
        }
        // linearity: the forcing is linear in amplitude, so scaling works through the bump
        let a3 = solve_evolution(&s, &f1.scaled(3.0), &t, 1.0).unwrap();
        for (x, y) in a3.states.iter().flatten().zip(a.states.iter().flatten()) {
            assert!((x - 3.0 * y).abs() < 1e-12 * (1.0 + y.abs()));
        }
        assert!(b.last().iter().any(|x| x.abs() > 1e-6));
    }

    #[test]
    fn forcing_support_must_fit_window() {
        let s = system(ProblemKind::LimitHE, 8);
        let t = TimeGrid::new(0.0, 1.0, 0.01).unwrap();
        assert!(solve_evolution(&s, &forcing(SpatialProfile::Constant), &t, 0.5).is_err());
    }

    #[test]
    fn midpoint_dissipation_identity() {
        let s = system(ProblemKind::FineHE(4), 32);
        let dt = 0.01;
        let t = TimeGrid::new(0.0, 3.0, dt).unwrap();
        let f = forcing(SpatialProfile::Cosine(1));
        let field = solve_evolution(&s, &f, &t, 0.5).unwrap();
        let g = f.profile.sample(&s.grid().u_coords());
        let (mut fa, mut fb) = (vec![0.0; s.dim()], vec![0.0; s.dim()]);
        for k in 0..t.steps() {
            let (v0, v1) = (&field.states[k], &field.states[k + 1]);
            f.sample_into(t.time(k), &g, &mut fa);
            f.sample_into(t.time(k + 1), &g, &mut fb);
            let mid: Vec<f64> = v0.iter().zip(v1).map(|(a, b)| 0.5 * (a + b)).collect();
            let fmid: Vec<f64> = fa.iter().zip(&fb).map(|(a, b)| 0.5 * (a + b)).collect();
            let e = |v: &[f64]| 0.5 * v.iter().zip(s.m_diag()).map(|(x, m)| m * x * x).sum::<f64>();
            let lhs = e(v1) - e(v0);
            let nmid: f64 = mid.iter().zip(s.n_diag()).map(|(x, n)| n * x * x).sum();
            let rhs = -dt * nmid + dt * dot(&fmid, &mid);
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + e(v1)), "step {k}: {lhs} vs {rhs}");
        }
    }
}
