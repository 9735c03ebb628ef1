//! Problem catalogue and independent second-order oracles for the limit
//! systems.
//!
//! | kind           | `M` (u, w)      | `N` (u, w)          |
//! |----------------|-----------------|---------------------|
//! | `FineHE(n)`    | `(a_n, a_n)`    | `(1 − a_n, 1 − a_n)`|
//! | `FineHP(n)`    | `(1, a_n)`      | `(0, 1 − a_n)`      |
//! | `LimitHE`      | `(½, ½)`        | `(½, ½)`            |
//! | `LimitHP`      | `(1, ½)`        | `(0, ½)`            |
//! | `PureWave`     | `(1, 1)`        | `(0, 0)`            |
//! | `PureElliptic` | `(0, 0)`        | `(1, 1)`            |
//! | `PureParabolic`| `(1, 0)`        | `(0, 1)`            |
//!
//! With a general duty `d` the limit entries ½ become `d` in `M` and `1 − d`
//! in `N`. Fine-scale coefficients use [`Sampling::DualCell`], so flux nodes
//! on a junction carry ½ in both `M` and `N`.

use std::fmt;
use std::str::FromStr;

use crate::error::{LabError, Result};
use crate::grid::{assemble_system, DiscreteSystem, StaggeredGrid};
use crate::integrator::{Bump, ForcingSpec, TimeGrid};
use crate::material::{sample_coefficients, CoefficientField, Family, MaterialLayout, Sampling, Scale};
use crate::profile::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    FineHE(u32),
    FineHP(u32),
    LimitHE,
    LimitHP,
    PureWave,
    PureElliptic,
    PureParabolic,
}

impl ProblemKind {
    pub fn family(&self) -> Option<Family> {
        match self {
            ProblemKind::FineHE(_) | ProblemKind::LimitHE => Some(Family::HyperbolicElliptic),
            ProblemKind::FineHP(_) | ProblemKind::LimitHP => Some(Family::HyperbolicParabolic),
            _ => None,
        }
    }

    pub fn is_fine(&self) -> bool {
        matches!(self, ProblemKind::FineHE(_) | ProblemKind::FineHP(_))
    }

    pub fn is_limit(&self) -> bool {
        matches!(self, ProblemKind::LimitHE | ProblemKind::LimitHP)
    }

    /// Number of periods for fine-scale kinds.
    pub fn periods(&self) -> Option<u32> {
        match *self {
            ProblemKind::FineHE(n) | ProblemKind::FineHP(n) => Some(n),
            _ => None,
        }
    }

    /// Limit system of the same family.
    pub fn limit(&self) -> Option<ProblemKind> {
        match self.family()? {
            Family::HyperbolicElliptic => Some(ProblemKind::LimitHE),
            Family::HyperbolicParabolic => Some(ProblemKind::LimitHP),
        }
    }

    /// Fine-scale system of the same family with `n` periods.
    pub fn fine(&self, n: u32) -> Option<ProblemKind> {
        match self.family()? {
            Family::HyperbolicElliptic => Some(ProblemKind::FineHE(n)),
            Family::HyperbolicParabolic => Some(ProblemKind::FineHP(n)),
        }
    }

    /// Backward Euler for systems with algebraic rows (`m = 0` somewhere),
    /// the midpoint rule otherwise.
    pub fn default_theta(&self) -> f64 {
        match self {
            ProblemKind::FineHE(_) | ProblemKind::FineHP(_) | ProblemKind::PureElliptic | ProblemKind::PureParabolic => 1.0,
            ProblemKind::LimitHE | ProblemKind::LimitHP | ProblemKind::PureWave => 0.5,
        }
    }

    pub fn layout(&self, duty: f64) -> Result<Option<MaterialLayout>> {
        match (*self, self.family()) {
            (ProblemKind::FineHE(n) | ProblemKind::FineHP(n), Some(f)) => Ok(Some(MaterialLayout::new(n, duty, f)?)),
            (ProblemKind::LimitHE | ProblemKind::LimitHP, Some(f)) => Ok(Some(MaterialLayout::new(1, duty, f)?)),
            _ => Ok(None),
        }
    }

    pub fn coefficients(&self, duty: f64, grid: &StaggeredGrid) -> Result<CoefficientField> {
        let scale = if self.is_fine() { Scale::Fine } else { Scale::Limit };
        if let Some(layout) = self.layout(duty)? {
            return sample_coefficients(&layout, grid, scale, Sampling::DualCell);
        }
        Ok(match self {
            ProblemKind::PureWave => CoefficientField::constant(grid, 1.0, 0.0, 1.0, 0.0),
            ProblemKind::PureElliptic => CoefficientField::constant(grid, 0.0, 1.0, 0.0, 1.0),
            ProblemKind::PureParabolic => CoefficientField::constant(grid, 1.0, 0.0, 0.0, 1.0),
            _ => unreachable!("layout-carrying kinds handled above"),
        })
    }

    /// Config-file tag, e.g. `fine_he`.
    pub fn tag(&self) -> &'static str {
        match self {
            ProblemKind::FineHE(_) => "fine_he",
            ProblemKind::FineHP(_) => "fine_hp",
            ProblemKind::LimitHE => "limit_he",
            ProblemKind::LimitHP => "limit_hp",
            ProblemKind::PureWave => "pure_wave",
            ProblemKind::PureElliptic => "pure_elliptic",
            ProblemKind::PureParabolic => "pure_parabolic",
        }
    }

    /// Parses a config tag; fine kinds take their period count from `n`.
    pub fn from_tag(tag: &str, n: Option<u32>) -> Result<Self> {
        let need_n = || n.ok_or_else(|| LabError::Domain(format!("problem `{tag}` requires n")));
        Ok(match tag.trim() {
            "fine_he" => ProblemKind::FineHE(need_n()?),
            "fine_hp" => ProblemKind::FineHP(need_n()?),
            "limit_he" => ProblemKind::LimitHE,
            "limit_hp" => ProblemKind::LimitHP,
            "pure_wave" => ProblemKind::PureWave,
            "pure_elliptic" => ProblemKind::PureElliptic,
            "pure_parabolic" => ProblemKind::PureParabolic,
            other => return Err(LabError::Domain(format!("unknown problem `{other}`"))),
        })
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.periods() {
            Some(n) => write!(f, "{}(n={n})", self.tag()),
            None => f.write_str(self.tag()),
        }
    }
}

impl FromStr for ProblemKind {
    type Err = LabError;

    /// Accepts `limit_he`, `fine_he:16`, …
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some((tag, n)) => {
                let n = n.trim().parse::<u32>().map_err(|_| LabError::Domain(format!("bad period count in `{s}`")))?;
                Self::from_tag(tag, Some(n))
            }
            None => Self::from_tag(s, None),
        }
    }
}

/// Catalogue system with the hyperbolic phase on half of every period.
pub fn make_system(kind: ProblemKind, grid: &StaggeredGrid) -> Result<DiscreteSystem> {
    assemble_system(kind, 0.5, grid)
}

/// Coefficients of `α u″ + β u′ + γ u − κ ∂ₓ²u = a f + b f′` for a limit kind.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SecondOrderForm {
    alpha: f64,
    beta: f64,
    gamma: f64,
    kappa: f64,
    a: f64,
    b: f64,
}

impl SecondOrderForm {
    fn of(kind: ProblemKind) -> Result<Self> {
        match kind {
            // ∂ₜ²u + 2∂ₜu + u − 4∂ₓ²u = 2f + 2∂ₜf
            ProblemKind::LimitHE => Ok(Self { alpha: 1.0, beta: 2.0, gamma: 1.0, kappa: 4.0, a: 2.0, b: 2.0 }),
            // ∂ₜ²u + ∂ₜu − 2∂ₓ²u = f + ∂ₜf
            ProblemKind::LimitHP => Ok(Self { alpha: 1.0, beta: 1.0, gamma: 0.0, kappa: 2.0, a: 1.0, b: 1.0 }),
            other => Err(LabError::Domain(format!("no second-order form for {other}"))),
        }
    }
}

/// Largest stable step `Δx / √κ` of the explicit second-order scheme (wave
/// speed `√κ`): `Δx / 2` for `LimitHE`, `Δx / √2` for `LimitHP`.
pub fn oracle_step_limit(kind: ProblemKind, grid: &StaggeredGrid) -> Result<f64> {
    let form = SecondOrderForm::of(kind)?;
    Ok(grid.dx() / form.kappa.sqrt())
}

/// Smallest number of oracle substeps per output step that respects
/// [`oracle_step_limit`].
pub fn oracle_substeps(kind: ProblemKind, grid: &StaggeredGrid, dt: f64) -> Result<usize> {
    let limit = oracle_step_limit(kind, grid)?;
    Ok(((dt / limit) * (1.0 - 1e-12)).ceil().max(1.0) as usize)
}

/// u-trajectory at cell centers, as produced by the second-order oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterField {
    pub grid: StaggeredGrid,
    pub time: TimeGrid,
    pub values: Vec<Vec<f64>>,
}

/// Solves the second-order form of a limit system with an explicit
/// central-difference scheme.
///
/// Time derivatives are central differences, the spatial operator is the
/// 3-point Laplacian with ghost-cell reflection (Neumann), `∂ₜf` comes from
/// the closed-form bump derivative, and `u⁰ = u¹ = 0`. Each output step is
/// split into `substeps` equal oracle steps; the oracle step must not exceed
/// [`oracle_step_limit`].
pub fn solve_second_order_limit(
    kind: ProblemKind,
    forcing: &ForcingSpec,
    grid: &StaggeredGrid,
    time: &TimeGrid,
    substeps: usize,
) -> Result<CenterField> {
    let form = SecondOrderForm::of(kind)?;
    let substeps = substeps.max(1);
    let h = time.dt() / substeps as f64;
    let limit = oracle_step_limit(kind, grid)?;
    if h > limit {
        return Err(LabError::Stability { dt: h, limit });
    }
    let nx = grid.nx();
    let inv_dx2 = (nx * nx) as f64;
    let g = forcing.profile.sample(&grid.u_coords());
    let bump = &forcing.bump;

    let lead = form.alpha / (h * h) + form.beta / (2.0 * h);
    let trail = form.alpha / (h * h) - form.beta / (2.0 * h);
    let mut prev = vec![0.0; nx];
    let mut cur = vec![0.0; nx];
    let mut next = vec![0.0; nx];
    let mut values = Vec::with_capacity(time.steps() + 1);
    values.push(prev.clone());

    let total = time.steps() * substeps;
    // micro-step m holds u at t_start + m h; cur starts at m = 1
    let mut scale = 0.0f64;
    for m in 1..=total {
        if m % substeps == 0 {
            values.push(cur.clone());
        }
        if m == total {
            break;
        }
        let t = time.t_start() + m as f64 * h;
        let rhs_t = form.a * bump.value(t) + form.b * bump.derivative(t);
        for i in 0..nx {
            let left = if i == 0 { cur[0] } else { cur[i - 1] };
            let right = if i == nx - 1 { cur[nx - 1] } else { cur[i + 1] };
            let lap = (left - 2.0 * cur[i] + right) * inv_dx2;
            let r = rhs_t * g[i] + form.kappa * lap - form.gamma * cur[i] + 2.0 * form.alpha / (h * h) * cur[i]
                - trail * prev[i];
            next[i] = r / lead;
        }
        let peak = next.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if !peak.is_finite() || (scale > 0.0 && peak > 1e8 * scale) {
            return Err(LabError::Stability { dt: h, limit });
        }
        scale = scale.max(peak);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    if time.steps() * substeps == 0 || values.len() != time.steps() + 1 {
        // total == 0 cannot happen for a valid TimeGrid
        return Err(LabError::Domain("oracle produced an incomplete trajectory".into()));
    }
    Ok(CenterField { grid: *grid, time: *time, values })
}

/// Time trace `ψ` of the spatially constant solution for constant forcing
/// profile.
///
/// `LimitHP`: `ψ′ = φ`, so `ψ(t) = ∫φ` in closed form. `LimitHE`:
/// `(d/dt + 1)²ψ = 2(φ + φ′)`, evaluated as the convolution of `2(φ + φ′)`
/// with the kernel `r e^{−r}` by composite Gauss–Legendre quadrature.
pub fn analytic_constant_mode(kind: ProblemKind, bump: &Bump, time: &TimeGrid) -> Result<Vec<f64>> {
    match kind {
        ProblemKind::LimitHP => Ok(time.times().iter().map(|&t| bump.integral_to(t)).collect()),
        ProblemKind::LimitHE => Ok(time
            .times()
            .iter()
            .map(|&t| {
                let hi = t.min(bump.t_off);
                if hi <= bump.t_on {
                    return 0.0;
                }
                let integrand = |s: f64| {
                    let r = t - s;
                    2.0 * r * (-r).exp() * (bump.value(s) + bump.derivative(s))
                };
                gauss_legendre(integrand, bump.t_on, hi, 64)
            })
            .collect()),
        other => Err(LabError::Domain(format!("no constant-mode formula for {other}"))),
    }
}
