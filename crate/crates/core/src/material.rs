//! Periodic two-phase material layouts.
//!
//! The hyperbolic phase occupies `[k, k + duty)` of every period `[k, k + 1)`
//! of the unit-periodic indicator `a`; the layout with `n` periods on `[0, 1]`
//! is `x ↦ a(n x)`. Phase-change points use the half-open convention: the
//! left end of a hyperbolic interval is hyperbolic, the right end is not.

use crate::error::{LabError, Result};
use crate::grid::StaggeredGrid;
use crate::profile::{gauss_legendre, SpatialProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Wave equation alternating with `u − ∂ₓ²u = f`.
    HyperbolicElliptic,
    /// Wave equation alternating with the heat equation.
    HyperbolicParabolic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialLayout {
    n: u32,
    duty: f64,
    family: Family,
}

impl MaterialLayout {
    pub fn new(n: u32, duty: f64, family: Family) -> Result<Self> {
        if n == 0 {
            return Err(LabError::Domain("layout needs at least one period".into()));
        }
        if !(duty > 0.0 && duty < 1.0) {
            return Err(LabError::Domain(format!("duty must lie in (0, 1), got {duty}")));
        }
        Ok(Self { n, duty, family })
    }

    /// Layout with the hyperbolic phase on the first half of every period.
    pub fn half(n: u32, family: Family) -> Result<Self> {
        Self::new(n, 0.5, family)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn duty(&self) -> f64 {
        self.duty
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// 1 in the hyperbolic phase, 0 elsewhere.
    pub fn indicator(&self, x: f64) -> Result<u8> {
        if !(0.0..=1.0).contains(&x) {
            return Err(LabError::Domain(format!("position {x} outside [0, 1]")));
        }
        let s = self.n as f64 * x;
        Ok(u8::from(s - s.floor() < self.duty))
    }

    /// Mean of `a` over one period; the weak-* limit of `a(n·)`.
    pub fn weak_star_mean(&self) -> f64 {
        self.duty
    }

    /// Interior phase-change points in increasing order.
    pub fn junctions(&self) -> Vec<f64> {
        let n = self.n as f64;
        let mut pts = Vec::with_capacity(2 * self.n as usize);
        for j in 1..=self.n {
            pts.push((j as f64 - 1.0 + self.duty) / n);
            if j < self.n {
                pts.push(j as f64 / n);
            }
        }
        pts
    }

    /// Every phase boundary in `[0, 1]`, endpoints included.
    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        pts.extend(self.junctions());
        pts.push(1.0);
        pts
    }

    /// `|∫₀¹ a(nx) g(x) dx − duty ∫₀¹ g(x) dx|`.
    ///
    /// The quadrature is split at every phase change and uses `resolution`
    /// Gauss–Legendre panels per phase interval, so it is exact (to rounding)
    /// for polynomial profiles.
    pub fn pairing_defect(&self, g: &SpatialProfile, resolution: usize) -> f64 {
        let pts = self.breakpoints();
        let mut weighted = 0.0;
        let mut total = 0.0;
        for (idx, pair) in pts.windows(2).enumerate() {
            let piece = gauss_legendre(|x| g.eval(x), pair[0], pair[1], resolution);
            total += piece;
            // pieces alternate hyperbolic / other, starting hyperbolic at 0
            if idx % 2 == 0 {
                weighted += piece;
            }
        }
        (weighted - self.duty * total).abs()
    }
}

/// Whether coefficients describe the oscillating fine-scale system or its
/// homogenized limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Fine,
    Limit,
}

/// Diagonals of `M` and `N` at every degree of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub m_u: Vec<f64>,
    pub n_u: Vec<f64>,
    pub m_w: Vec<f64>,
    pub n_w: Vec<f64>,
}

impl CoefficientField {
    pub fn constant(grid: &StaggeredGrid, m_u: f64, n_u: f64, m_w: f64, n_w: f64) -> Self {
        let (nu, nw) = (grid.u_len(), grid.w_len());
        Self {
            m_u: vec![m_u; nu],
            n_u: vec![n_u; nu],
            m_w: vec![m_w; nw],
            n_w: vec![n_w; nw],
        }
    }

    /// Stacked `(u, w)` diagonals of `M` and `N`.
    pub fn stacked(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.m_u.iter().chain(&self.m_w).copied().collect();
        let n = self.n_u.iter().chain(&self.n_w).copied().collect();
        (m, n)
    }
}

/// Checks that junctions fall on w-nodes, i.e. `nx` is a multiple of `2n`.
pub fn check_alignment(layout: &MaterialLayout, grid: &StaggeredGrid) -> Result<()> {
    let period = 2 * layout.n as usize;
    if grid.nx() % period != 0 {
        return Err(LabError::Alignment { nx: grid.nx(), n: layout.n });
    }
    Ok(())
}

/// How the indicator is turned into per-dof coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Indicator at the dof coordinate, half-open at phase changes.
    Point,
    /// Mean of the indicator over the dof's control volume: the primal cell
    /// for `u`, the dual cell `[x_j − Δx/2, x_j + Δx/2]` for `w`. A w-node on
    /// a phase change gets ½.
    #[default]
    DualCell,
}

/// Samples the coefficient diagonals of the fine-scale system (or its limit)
/// at the degrees of freedom of `grid`.
///
/// On aligned grids the classification is integer-exact: dofs are located by
/// their cell offset within a period, so dofs on a junction are classified
/// deterministically.
pub fn sample_coefficients(layout: &MaterialLayout, grid: &StaggeredGrid, scale: Scale, sampling: Sampling) -> Result<CoefficientField> {
    let duty = layout.duty;
    if scale == Scale::Limit {
        return Ok(match layout.family {
            Family::HyperbolicElliptic => CoefficientField::constant(grid, duty, 1.0 - duty, duty, 1.0 - duty),
            Family::HyperbolicParabolic => CoefficientField::constant(grid, 1.0, 0.0, duty, 1.0 - duty),
        });
    }
    check_alignment(layout, grid)?;
    let nx = grid.nx();
    let period = nx / layout.n as usize;
    let hyp_cells = duty * period as f64;
    let on_nodes = (hyp_cells - hyp_cells.round()).abs() < 1e-9;

    let a_w: Vec<f64> = match sampling {
        Sampling::Point => (1..nx).map(|j| f64::from(u8::from(((j % period) as f64) < hyp_cells))).collect(),
        Sampling::DualCell if on_nodes => {
            let h = hyp_cells.round() as usize;
            (1..nx)
                .map(|j| match j % period {
                    c if c == 0 || c == h => 0.5,
                    c if c < h => 1.0,
                    _ => 0.0,
                })
                .collect()
        }
        Sampling::DualCell => {
            let dx = grid.dx();
            (1..nx).map(|j| layout.cell_average((j as f64 - 0.5) * dx, (j as f64 + 0.5) * dx)).collect()
        }
    };
    let a_u: Vec<f64> = match sampling {
        Sampling::DualCell if !on_nodes => {
            let dx = grid.dx();
            (1..=nx).map(|i| layout.cell_average((i - 1) as f64 * dx, i as f64 * dx)).collect()
        }
        // centers sit at offset c + ½ within the period
        _ => (0..nx).map(|i| f64::from(u8::from(((i % period) as f64 + 0.5) < hyp_cells))).collect(),
    };
    let n_w: Vec<f64> = a_w.iter().map(|a| 1.0 - a).collect();
    let (m_u, n_u) = match layout.family {
        Family::HyperbolicElliptic => {
            let n_u = a_u.iter().map(|a| 1.0 - a).collect();
            (a_u, n_u)
        }
        Family::HyperbolicParabolic => (vec![1.0; nx], vec![0.0; nx]),
    };
    Ok(CoefficientField { m_u, n_u, m_w: a_w, n_w })
}

impl MaterialLayout {
    /// `∫₀ˣ a(n s) ds`.
    fn hyperbolic_measure(&self, x: f64) -> f64 {
        let s = self.n as f64 * x;
        let whole = s.floor();
        (whole * self.duty + (s - whole).min(self.duty)) / self.n as f64
    }

    /// Mean of `a(n·)` over `[lo, hi]`.
    pub fn cell_average(&self, lo: f64, hi: f64) -> f64 {
        ((self.hyperbolic_measure(hi) - self.hyperbolic_measure(lo)) / (hi - lo)).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn he(n: u32) -> MaterialLayout {
        MaterialLayout::half(n, Family::HyperbolicElliptic).unwrap()
    }

    /// Direct enumeration of the hyperbolic cells `((j−1)/n, (j−1+duty)/n)`.
    fn in_hyperbolic_cell(x: f64, n: u32, duty: f64) -> bool {
        (1..=n).any(|j| {
            let lo = (j as f64 - 1.0) / n as f64;
            let hi = (j as f64 - 1.0 + duty) / n as f64;
            x > lo && x < hi
        })
    }

    #[test]
    fn indicator_examples() {
        assert_eq!(he(1).indicator(0.1).unwrap(), 1);
        assert_eq!(he(1).indicator(0.5).unwrap(), 0);
        assert_eq!(he(2).indicator(0.3).unwrap(), 0);
        assert!(!in_hyperbolic_cell(0.3, 2, 0.5));
        assert_eq!(he(1).indicator(0.0).unwrap(), 1);
        assert!(matches!(he(1).indicator(1.2), Err(LabError::Domain(_))));
        assert!(he(1).indicator(-0.01).is_err());
    }

    #[test]
    fn layout_validation() {
        assert!(MaterialLayout::new(0, 0.5, Family::HyperbolicElliptic).is_err());
        assert!(MaterialLayout::new(2, 0.0, Family::HyperbolicElliptic).is_err());
        assert!(MaterialLayout::new(2, 1.0, Family::HyperbolicParabolic).is_err());
    }

    #[test]
    fn weak_star_mean_is_duty() {
        assert_eq!(he(3).weak_star_mean(), 0.5);
        let q = MaterialLayout::new(5, 0.25, Family::HyperbolicElliptic).unwrap();
        assert_eq!(q.weak_star_mean(), 0.25);
        let p = MaterialLayout::new(1, 0.9, Family::HyperbolicParabolic).unwrap();
        assert_eq!(p.weak_star_mean(), 0.9);
    }

    #[test]
    fn junction_points_for_half_duty() {
        let j = he(3).junctions();
        let expected = [1.0 / 6.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 5.0 / 6.0];
        assert_eq!(j.len(), expected.len());
        for (a, b) in j.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn sample_fine_he_n1_point() {
        let grid = StaggeredGrid::new(4).unwrap();
        let c = sample_coefficients(&he(1), &grid, Scale::Fine, Sampling::Point).unwrap();
        assert_eq!(c.m_u, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(c.m_w, vec![1.0, 0.0, 0.0]);
        assert_eq!(c.n_u, vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(c.n_w, vec![0.0, 1.0, 1.0]);
        // agrees with the pointwise indicator at every dof coordinate
        for (x, m) in grid.w_coords().iter().zip(&c.m_w) {
            assert_eq!(f64::from(he(1).indicator(*x).unwrap()), *m);
        }
    }

    #[test]
    fn sample_fine_he_n1_dual_cell() {
        let grid = StaggeredGrid::new(4).unwrap();
        let c = sample_coefficients(&he(1), &grid, Scale::Fine, Sampling::DualCell).unwrap();
        assert_eq!(c.m_u, vec![1.0, 1.0, 0.0, 0.0]);
        // the node at the junction x = ½ straddles both phases
        assert_eq!(c.m_w, vec![1.0, 0.5, 0.0]);
        assert_eq!(c.n_w, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn dual_cell_general_duty_matches_exact_path() {
        // duty ¼ with 8 cells per period keeps junctions on nodes; the float
        // cell average must agree with the integer path
        let layout = MaterialLayout::new(2, 0.25, Family::HyperbolicElliptic).unwrap();
        let grid = StaggeredGrid::new(16).unwrap();
        let c = sample_coefficients(&layout, &grid, Scale::Fine, Sampling::DualCell).unwrap();
        let dx = grid.dx();
        for (j, m) in c.m_w.iter().enumerate() {
            let x = (j + 1) as f64 * dx;
            assert!((layout.cell_average(x - dx / 2.0, x + dx / 2.0) - m).abs() < 1e-12);
        }
        // duty 0.3 puts junctions inside cells; averages stay in [0, 1] with mean 0.3
        let odd = MaterialLayout::new(2, 0.3, Family::HyperbolicElliptic).unwrap();
        let c = sample_coefficients(&odd, &grid, Scale::Fine, Sampling::DualCell).unwrap();
        let mean_u = c.m_u.iter().sum::<f64>() / 16.0;
        assert!((mean_u - 0.3).abs() < 1e-12);
        assert!(c.m_u.iter().any(|&m| m > 0.0 && m < 1.0));
    }

    #[test]
    fn sample_fine_hp() {
        let grid = StaggeredGrid::new(8).unwrap();
        let layout = MaterialLayout::half(2, Family::HyperbolicParabolic).unwrap();
        let c = sample_coefficients(&layout, &grid, Scale::Fine, Sampling::Point).unwrap();
        assert_eq!(c.m_u, vec![1.0; 8]);
        assert_eq!(c.n_u, vec![0.0; 8]);
        // nodes 1/8 .. 7/8: frac(2x) = 1/4, 1/2, 3/4, 0, 1/4, 1/2, 3/4
        assert_eq!(c.m_w, vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let c = sample_coefficients(&layout, &grid, Scale::Fine, Sampling::DualCell).unwrap();
        assert_eq!(c.m_w, vec![1.0, 0.5, 0.0, 0.5, 1.0, 0.5, 0.0]);
        for (m, n) in c.m_w.iter().zip(&c.n_w) {
            assert_eq!(m + n, 1.0);
        }
    }

    #[test]
    fn sample_limits() {
        let grid = StaggeredGrid::new(6).unwrap();
        let c = sample_coefficients(&he(1), &grid, Scale::Limit, Sampling::default()).unwrap();
        assert!(c.m_u.iter().chain(&c.m_w).chain(&c.n_u).chain(&c.n_w).all(|&v| v == 0.5));
        let hp = MaterialLayout::half(1, Family::HyperbolicParabolic).unwrap();
        let c = sample_coefficients(&hp, &grid, Scale::Limit, Sampling::default()).unwrap();
        assert!(c.m_u.iter().all(|&v| v == 1.0));
        assert!(c.n_u.iter().all(|&v| v == 0.0));
        assert!(c.m_w.iter().chain(&c.n_w).all(|&v| v == 0.5));
    }

    #[test]
    fn misaligned_grid_is_rejected() {
        let grid = StaggeredGrid::new(12).unwrap();
        let err = sample_coefficients(&he(4), &grid, Scale::Fine, Sampling::Point).unwrap_err();
        assert!(matches!(err, LabError::Alignment { nx: 12, n: 4 }));
    }

    #[test]
    fn pairing_defect_closed_forms() {
        for n in [4u32, 16, 64] {
            let d = he(n).pairing_defect(&SpatialProfile::Linear, 1);
            let exact = 1.0 / (8.0 * n as f64);
            assert!((d - exact).abs() < 1e-12, "n = {n}: {d} vs {exact}");
        }
        assert!(he(7).pairing_defect(&SpatialProfile::Constant, 1) < 1e-15);
    }

    #[test]
    fn pairing_defect_decays_for_smooth_profiles() {
        let profiles = [
            SpatialProfile::Cosine(1),
            SpatialProfile::Cosine(3),
            SpatialProfile::Gaussian { center: 0.4, width: 0.1 },
        ];
        for g in profiles {
            let coarse = he(2).pairing_defect(&g, 8);
            let fine = he(64).pairing_defect(&g, 8);
            assert!(fine < coarse / 10.0, "{g}: {coarse} -> {fine}");
        }
    }

    proptest! {
        #[test]
        fn indicator_matches_cell_enumeration(x in 0.0f64..1.0, n in 1u32..40, duty in 0.05f64..0.95) {
            let layout = MaterialLayout::new(n, duty, Family::HyperbolicElliptic).unwrap();
            let near_junction = layout.junctions().iter().chain([0.0, 1.0].iter())
                .any(|j| (j - x).abs() < 1e-9);
            prop_assume!(!near_junction);
            prop_assert_eq!(layout.indicator(x).unwrap() == 1, in_hyperbolic_cell(x, n, duty));
        }

        #[test]
        fn fine_sampling_sums_to_one(n in 1u32..8, mult in 1usize..6) {
            let grid = StaggeredGrid::new(2 * n as usize * mult).unwrap();
            for sampling in [Sampling::Point, Sampling::DualCell] {
                let c = sample_coefficients(&he(n), &grid, Scale::Fine, sampling).unwrap();
                for (m, k) in c.m_u.iter().zip(&c.n_u).chain(c.m_w.iter().zip(&c.n_w)) {
                    prop_assert_eq!(m + k, 1.0);
                }
                let mean_u: f64 = c.m_u.iter().sum::<f64>() / c.m_u.len() as f64;
                prop_assert!((mean_u - 0.5).abs() < 1e-15);
            }
        }
    }
}
