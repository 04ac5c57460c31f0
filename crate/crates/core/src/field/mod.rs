//! Coefficient fields on the grid: scalar/vector fields, space-time fields,
//! curl (2-form) fields and the Hodge decomposition result.

pub mod bumps;
pub mod io;
pub mod norms;
pub mod ops;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::Grid;

/// Real scalar field on grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            data: vec![0.0; grid.node_count()],
            grid,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let data = (0..grid.node_count()).map(|i| f(&grid.coords(i))).collect();
        Self { grid, data }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Complex scalar field on grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid,
    pub data: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            data: vec![Complex64::default(); grid.node_count()],
            grid,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let data = (0..grid.node_count()).map(|i| f(&grid.coords(i))).collect();
        Self { grid, data }
    }
}

/// Real vector field (magnetic potential) on grid nodes, with a support mask.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    /// One node array per component.
    pub comps: Vec<Vec<f64>>,
    /// Nodes where any component is non-zero.
    pub support: Vec<bool>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        let comps = vec![vec![0.0; grid.node_count()]; grid.dim()];
        let support = vec![false; grid.node_count()];
        Self {
            grid,
            comps,
            support,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let n = grid.dim();
        let mut comps = vec![vec![0.0; grid.node_count()]; n];
        let mut support = vec![false; grid.node_count()];
        for idx in 0..grid.node_count() {
            let v = f(&grid.coords(idx));
            debug_assert_eq!(v.len(), n);
            let mut any = false;
            for a in 0..n {
                comps[a][idx] = v[a];
                any |= v[a] != 0.0;
            }
            support[idx] = any;
        }
        Self {
            grid,
            comps,
            support,
        }
    }

    pub fn recompute_support(&mut self) {
        for idx in 0..self.grid.node_count() {
            self.support[idx] = self.comps.iter().any(|c| c[idx] != 0.0);
        }
    }

    /// Component-wise values at one node.
    pub fn at(&self, idx: usize) -> Vec<f64> {
        self.comps.iter().map(|c| c[idx]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    /// Admissibility in the sense of the coefficient class: finite values and
    /// all components vanishing on the boundary.
    pub fn is_admissible(&self) -> bool {
        if !self.is_finite() {
            return false;
        }
        self.grid
            .boundary_nodes()
            .iter()
            .all(|&i| self.comps.iter().all(|c| c[i] == 0.0))
    }

    /// `A + B` on a shared grid.
    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        self.grid.ensure_same(&other.grid)?;
        let mut out = self.clone();
        for a in 0..self.grid.dim() {
            for i in 0..out.comps[a].len() {
                out.comps[a][i] += other.comps[a][i];
            }
        }
        out.recompute_support();
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> VectorField {
        let mut out = self.clone();
        for c in out.comps.iter_mut() {
            for v in c.iter_mut() {
                *v *= factor;
            }
        }
        out.recompute_support();
        out
    }
}

/// Real scalar field on space-time nodes (time level major, node minor).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSpaceTimeField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl ScalarSpaceTimeField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            data: vec![0.0; grid.node_count() * grid.time_levels()],
            grid,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64], f64) -> f64) -> Self {
        let nodes = grid.node_count();
        let mut data = vec![0.0; nodes * grid.time_levels()];
        for m in 0..grid.time_levels() {
            let t = grid.time(m);
            for idx in 0..nodes {
                data[m * nodes + idx] = f(&grid.coords(idx), t);
            }
        }
        Self { grid, data }
    }

    pub fn level(&self, m: usize) -> &[f64] {
        let nodes = self.grid.node_count();
        &self.data[m * nodes..(m + 1) * nodes]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Admissibility: finite and vanishing on the lateral boundary for all t.
    pub fn is_admissible(&self) -> bool {
        if !self.is_finite() {
            return false;
        }
        let boundary = self.grid.boundary_nodes();
        (0..self.grid.time_levels()).all(|m| {
            let lvl = self.level(m);
            boundary.iter().all(|&i| lvl[i] == 0.0)
        })
    }
}

/// Complex scalar field on space-time nodes (time level major).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpaceTimeField {
    pub grid: Grid,
    pub data: Vec<Complex64>,
}

impl ComplexSpaceTimeField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            data: vec![Complex64::default(); grid.node_count() * grid.time_levels()],
            grid,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64], f64) -> Complex64) -> Self {
        let nodes = grid.node_count();
        let mut data = vec![Complex64::default(); nodes * grid.time_levels()];
        for m in 0..grid.time_levels() {
            let t = grid.time(m);
            for idx in 0..nodes {
                data[m * nodes + idx] = f(&grid.coords(idx), t);
            }
        }
        Self { grid, data }
    }

    pub fn level(&self, m: usize) -> &[Complex64] {
        let nodes = self.grid.node_count();
        &self.data[m * nodes..(m + 1) * nodes]
    }

    pub fn level_mut(&mut self, m: usize) -> &mut [Complex64] {
        let nodes = self.grid.node_count();
        &mut self.data[m * nodes..(m + 1) * nodes]
    }
}

/// Antisymmetric matrix of scalar fields `sigma_{j,k}`; only `j < k` is
/// stored so the antisymmetry is exact by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CurlField {
    pub grid: Grid,
    /// Entry per ordered pair `(j,k)`, `j < k`, in lexicographic order.
    pub pairs: Vec<(usize, usize)>,
    pub comps: Vec<Vec<f64>>,
}

impl CurlField {
    pub fn pair_list(n: usize) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for j in 0..n {
            for k in (j + 1)..n {
                pairs.push((j, k));
            }
        }
        pairs
    }

    pub fn zeros(grid: Grid) -> Self {
        let pairs = Self::pair_list(grid.dim());
        let comps = vec![vec![0.0; grid.node_count()]; pairs.len()];
        Self { grid, pairs, comps }
    }

    fn pair_slot(&self, j: usize, k: usize) -> Option<(usize, f64)> {
        if j == k {
            return None;
        }
        let (a, b, sign) = if j < k { (j, k, 1.0) } else { (k, j, -1.0) };
        self.pairs
            .iter()
            .position(|&p| p == (a, b))
            .map(|slot| (slot, sign))
    }

    /// `sigma_{j,k}` value at a node; `sigma_{j,j} = 0` and
    /// `sigma_{k,j} = -sigma_{j,k}` exactly.
    pub fn get(&self, j: usize, k: usize, idx: usize) -> f64 {
        match self.pair_slot(j, k) {
            None => 0.0,
            Some((slot, sign)) => sign * self.comps[slot][idx],
        }
    }

    pub fn component(&self, j: usize, k: usize) -> Option<&[f64]> {
        if j >= k {
            return None;
        }
        self.pair_slot(j, k).map(|(slot, _)| &self.comps[slot][..])
    }

    pub fn component_mut(&mut self, j: usize, k: usize) -> Option<&mut [f64]> {
        if j >= k {
            return None;
        }
        let slot = self.pairs.iter().position(|&p| p == (j, k))?;
        Some(&mut self.comps[slot][..])
    }
}

/// Result of the Hodge splitting `A = A' + grad(phi)`.
#[derive(Debug, Clone)]
pub struct HodgeResult {
    /// Gradient potential, zero on the boundary.
    pub phi: ScalarField,
    /// Divergence-free part.
    pub a_prime: VectorField,
    /// Max interior residual of the discrete divergence of `A'`.
    pub max_div_a_prime: f64,
    /// Empirical ratio `||A'||_{W^{1,p}} / ||curl A'||_{L^p}`.
    pub curl_control_ratio: f64,
    /// Relative residual of the Poisson solve.
    pub poisson_residual: f64,
    /// Exponent the ratio was evaluated with (infinity surrogate by default).
    pub p_exponent: f64,
}

/// Sobolev exponent argument for [`crate::field::ops::hodge_project`]; the
/// estimate behind the decomposition needs `p > n`, which is recorded but only
/// warned about.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HodgeExponent {
    /// Max-norm surrogate for `p = infinity` (default).
    Infinity,
    Finite(f64),
}

impl HodgeExponent {
    pub fn validate(&self, n: usize) -> Result<()> {
        if let HodgeExponent::Finite(p) = self {
            if !p.is_finite() || *p <= 0.0 {
                return Err(CoreError::InvalidField(format!("exponent p = {p}")));
            }
            if *p <= n as f64 {
                log::warn!("hodge exponent p = {p} does not satisfy p > n = {n}; the curl estimate is only proved for p > n");
            }
        }
        Ok(())
    }
}
