//! Staggered grid and the discrete system `∂ₜM + N + A`.
//!
//! The state `u` lives at the `nx` cell centers, the flux `w` at the `nx − 1`
//! interior nodes; `w` vanishes at both boundary nodes, which are eliminated
//! from the unknowns. With
//!
//! - `D w = (w_j − w_{j−1}) / Δx` at centers (`w_0 = w_nx = 0`), the discrete `∂ₓ,₀`,
//! - `G u = (u_{j+1} − u_j) / Δx` at interior nodes, the discrete `∂ₓ`,
//!
//! we have `D = −Gᵀ` exactly, so `A = −[[0, D], [G, 0]]` is skew-symmetric.
//! Stacked vectors hold all `u` entries followed by all `w` entries.

use crate::error::{LabError, Result};
use crate::material::{CoefficientField, MaterialLayout};
use crate::problems::ProblemKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StaggeredGrid {
    nx: usize,
}

impl StaggeredGrid {
    pub fn new(nx: usize) -> Result<Self> {
        if nx < 2 {
            return Err(LabError::GridSize(nx));
        }
        Ok(Self { nx })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn u_len(&self) -> usize {
        self.nx
    }

    pub fn w_len(&self) -> usize {
        self.nx - 1
    }

    /// Dimension of a stacked `(u, w)` state.
    pub fn dim(&self) -> usize {
        2 * self.nx - 1
    }

    pub fn u_coords(&self) -> Vec<f64> {
        let dx = self.dx();
        (1..=self.nx).map(|i| (i as f64 - 0.5) * dx).collect()
    }

    pub fn w_coords(&self) -> Vec<f64> {
        let dx = self.dx();
        (1..self.nx).map(|j| j as f64 * dx).collect()
    }

    /// Position of stacked index `s` in the interleaved ordering
    /// `u_1, w_1, u_2, w_2, …, u_nx` in which `A` is tridiagonal.
    pub(crate) fn interleaved(&self, s: usize) -> usize {
        if s < self.nx {
            2 * s
        } else {
            2 * (s - self.nx) + 1
        }
    }

    /// Human-readable name of a stacked dof.
    pub fn dof_name(&self, s: usize) -> String {
        if s < self.nx {
            format!("u[{}] at x = {}", s, (s as f64 + 0.5) * self.dx())
        } else {
            let j = s - self.nx + 1;
            format!("w[{}] at x = {}", j - 1, j as f64 * self.dx())
        }
    }

    /// `D w` at cell centers.
    pub fn apply_d(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.w_len());
        let inv = self.nx as f64;
        (0..self.nx)
            .map(|i| {
                let right = if i < self.nx - 1 { w[i] } else { 0.0 };
                let left = if i > 0 { w[i - 1] } else { 0.0 };
                (right - left) * inv
            })
            .collect()
    }

    /// `G u` at interior nodes.
    pub fn apply_g(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.u_len());
        let inv = self.nx as f64;
        u.windows(2).map(|p| (p[1] - p[0]) * inv).collect()
    }

    /// `A v = −(D w, G u)` for a stacked state.
    pub fn apply_skew(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim());
        let (u, w) = v.split_at(self.nx);
        let dw = self.apply_d(w);
        let gu = self.apply_g(u);
        dw.into_iter().chain(gu).map(|x| -x).collect()
    }

    /// Modified wavenumber of the staggered difference on mode `k`:
    /// `(2 / Δx) sin(kπΔx / 2)`.
    pub fn symbol(&self, k: usize) -> f64 {
        let dx = self.dx();
        2.0 / dx * (k as f64 * std::f64::consts::PI * dx / 2.0).sin()
    }
}

/// Assembled discrete `(∂ₜM + N + A)`; immutable after construction.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    grid: StaggeredGrid,
    kind: ProblemKind,
    layout: Option<MaterialLayout>,
    m_diag: Vec<f64>,
    n_diag: Vec<f64>,
}

impl DiscreteSystem {
    /// System with explicit coefficient diagonals; `kind` is carried as a label.
    pub fn from_coefficients(grid: StaggeredGrid, kind: ProblemKind, layout: Option<MaterialLayout>, coeffs: &CoefficientField) -> Result<Self> {
        if coeffs.m_u.len() != grid.u_len()
            || coeffs.n_u.len() != grid.u_len()
            || coeffs.m_w.len() != grid.w_len()
            || coeffs.n_w.len() != grid.w_len()
        {
            return Err(LabError::Domain("coefficient field does not match grid".into()));
        }
        let (m_diag, n_diag) = coeffs.stacked();
        if let Some(s) = m_diag.iter().position(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(LabError::Domain(format!("negative or non-finite mass at {}", grid.dof_name(s))));
        }
        if n_diag.iter().any(|n| !n.is_finite()) {
            return Err(LabError::Domain("non-finite damping coefficient".into()));
        }
        Ok(Self { grid, kind, layout, m_diag, n_diag })
    }

    pub fn grid(&self) -> &StaggeredGrid {
        &self.grid
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn layout(&self) -> Option<&MaterialLayout> {
        self.layout.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn m_diag(&self) -> &[f64] {
        &self.m_diag
    }

    pub fn n_diag(&self) -> &[f64] {
        &self.n_diag
    }

    pub fn apply_skew(&self, v: &[f64]) -> Vec<f64> {
        self.grid.apply_skew(v)
    }

    pub fn split<'a>(&self, v: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        v.split_at(self.grid.nx())
    }

    /// `c = min over dofs of (ν m + n)`, the discrete solvability constant at
    /// weight `ν`.
    pub fn solvability_constant(&self, nu: f64) -> Result<f64> {
        solvability_constant(self, nu)
    }
}

/// Builds the discrete system for `kind` with hyperbolic duty `duty`.
pub fn assemble_system(kind: ProblemKind, duty: f64, grid: &StaggeredGrid) -> Result<DiscreteSystem> {
    let layout = kind.layout(duty)?;
    let coeffs = kind.coefficients(duty, grid)?;
    DiscreteSystem::from_coefficients(*grid, kind, layout, &coeffs)
}

pub fn solvability_constant(system: &DiscreteSystem, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(LabError::Domain(format!("weight ν must be positive, got {nu}")));
    }
    Ok(system
        .m_diag
        .iter()
        .zip(&system.n_diag)
        .map(|(m, n)| nu * m + n)
        .fold(f64::INFINITY, f64::min))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_coordinates() {
        let g = StaggeredGrid::new(2).unwrap();
        assert_eq!(g.u_coords(), vec![0.25, 0.75]);
        assert_eq!(g.w_coords(), vec![0.5]);
        let g = StaggeredGrid::new(4).unwrap();
        assert_eq!(g.u_coords(), vec![0.125, 0.375, 0.625, 0.875]);
        assert_eq!(g.w_coords(), vec![0.25, 0.5, 0.75]);
        let g = StaggeredGrid::new(100).unwrap();
        assert_eq!(g.dx(), 0.01);
        assert_eq!(g.dim(), 199);
        assert!(matches!(StaggeredGrid::new(1), Err(LabError::GridSize(1))));
    }

    #[test]
    fn two_cell_stencils() {
        let g = StaggeredGrid::new(2).unwrap();
        assert_eq!(g.apply_g(&[1.0, 4.0]), vec![(4.0 - 1.0) / 0.5]);
        assert_eq!(g.apply_d(&[3.0]), vec![3.0 / 0.5, -3.0 / 0.5]);
    }

    #[test]
    fn cosine_mode_difference() {
        let g = StaggeredGrid::new(4).unwrap();
        let u: Vec<f64> = g.u_coords().iter().map(|x| (PI * x).cos()).collect();
        let gu = g.apply_g(&u);
        let dk = 8.0 * (PI / 8.0).sin();
        assert!((g.symbol(1) - dk).abs() < 1e-14);
        assert!((dk - 3.061467458920718).abs() < 1e-12);
        for (val, x) in gu.iter().zip(g.w_coords()) {
            assert!((val + dk * (PI * x).sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn cosine_modes_are_eigenvectors_of_dg() {
        let g = StaggeredGrid::new(16).unwrap();
        for k in 0..16 {
            let u: Vec<f64> = g.u_coords().iter().map(|x| (k as f64 * PI * x).cos()).collect();
            let dgu = g.apply_d(&g.apply_g(&u));
            let d2 = g.symbol(k).powi(2);
            for (a, b) in dgu.iter().zip(&u) {
                assert!((a + d2 * b).abs() < 1e-9 * (1.0 + d2), "k = {k}");
            }
        }
    }

    #[test]
    fn interleaving_is_a_permutation() {
        let g = StaggeredGrid::new(5).unwrap();
        let mut seen: Vec<usize> = (0..g.dim()).map(|s| g.interleaved(s)).collect();
        seen.sort();
        assert_eq!(seen, (0..g.dim()).collect::<Vec<_>>());
    }

    #[test]
    fn assembled_catalogue_diagonals() {
        let grid = StaggeredGrid::new(4).unwrap();
        let s = assemble_system(ProblemKind::LimitHE, 0.5, &grid).unwrap();
        assert_eq!(s.dim(), 7);
        assert!(s.m_diag().iter().chain(s.n_diag()).all(|&v| v == 0.5));
        let s = assemble_system(ProblemKind::FineHE(1), 0.5, &grid).unwrap();
        assert_eq!(s.m_diag(), &[1.0, 1.0, 0.0, 0.0, 1.0, 0.5, 0.0]);
        let n: Vec<f64> = s.m_diag().iter().map(|m| 1.0 - m).collect();
        assert_eq!(s.n_diag(), n.as_slice());
        let s = assemble_system(ProblemKind::PureWave, 0.5, &grid).unwrap();
        assert!(s.m_diag().iter().all(|&v| v == 1.0));
        assert!(s.n_diag().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn solvability_constants() {
        let grid = StaggeredGrid::new(8).unwrap();
        let he = assemble_system(ProblemKind::FineHE(2), 0.5, &grid).unwrap();
        assert_eq!(he.solvability_constant(2.0).unwrap(), 1.0);
        assert_eq!(he.solvability_constant(0.5).unwrap(), 0.5);
        let hp = assemble_system(ProblemKind::LimitHP, 0.5, &grid).unwrap();
        assert_eq!(hp.solvability_constant(1.0).unwrap(), 1.0);
        assert!(matches!(he.solvability_constant(0.0), Err(LabError::Domain(_))));
        assert!(he.solvability_constant(-1.0).is_err());
    }

    #[test]
    fn hp_solvability_on_two_cell_periods() {
        // with 2 cells per period every flux node is a junction and carries ½,
        // so the w-rows give (1 + ν)/2 instead of 1 for ν > 1
        let grid = StaggeredGrid::new(8).unwrap();
        let hp = assemble_system(ProblemKind::FineHP(4), 0.5, &grid).unwrap();
        assert_eq!(hp.solvability_constant(2.0).unwrap(), 1.5);
        assert_eq!(hp.solvability_constant(0.5).unwrap(), 0.5);
        let resolved = assemble_system(ProblemKind::FineHP(2), 0.5, &grid).unwrap();
        assert_eq!(resolved.solvability_constant(2.0).unwrap(), 1.0);
    }

    #[test]
    fn refinement_keeps_phase_regions() {
        let coarse = StaggeredGrid::new(8).unwrap();
        let fine = StaggeredGrid::new(16).unwrap();
        let a = assemble_system(ProblemKind::FineHE(2), 0.5, &coarse).unwrap();
        let b = assemble_system(ProblemKind::FineHE(2), 0.5, &fine).unwrap();
        // each coarse cell splits into two fine cells of the same phase
        for i in 0..8 {
            assert_eq!(a.m_diag()[i], b.m_diag()[2 * i]);
            assert_eq!(a.m_diag()[i], b.m_diag()[2 * i + 1]);
        }
    }

    proptest! {
        #[test]
        fn skew_and_adjoint(nx in 2usize..64, seed in proptest::collection::vec(-1.0f64..1.0, 128)) {
            let g = StaggeredGrid::new(nx).unwrap();
            let v: Vec<f64> = (0..g.dim()).map(|i| seed[i % seed.len()] * (1.0 + i as f64).sin()).collect();
            let av = g.apply_skew(&v);
            let norm2 = dot(&v, &v).max(1e-300);
            prop_assert!(dot(&av, &v).abs() / norm2 < 1e-12 * nx as f64);
            let (u, w) = v.split_at(nx);
            let lhs = dot(&g.apply_d(w), u) + dot(w, &g.apply_g(u));
            prop_assert!(lhs.abs() < 1e-12 * nx as f64 * norm2);
        }
    }
}
