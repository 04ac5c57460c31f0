//! Uniform node-centered grids on the unit cube `(0,1)^n` with a uniform
//! partition of the time interval `(0,T)`.
//!
//! Nodes sit at `x_i = i*h`, `i = 0..=N_x`, per axis, so every grid includes
//! its boundary nodes. Linear node indices are row-major with the first axis
//! fastest, which is also the layout of the `.fld` on-disk format.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Spatial/temporal discretization of the space-time cylinder `(0,1)^n x (0,T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    nx: usize,
    nt: usize,
    t_horizon: f64,
}

/// One of the `2n` faces of the unit cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Face {
    /// Axis whose coordinate is frozen.
    pub axis: usize,
    /// `false` for the `x_axis = 0` face, `true` for `x_axis = 1`.
    pub upper: bool,
}

impl Face {
    /// Outward unit normal component along `self.axis` (`-1` or `+1`).
    pub fn normal_sign(&self) -> f64 {
        if self.upper {
            1.0
        } else {
            -1.0
        }
    }
}

impl Grid {
    /// Build a grid, enforcing the admissibility constraints
    /// (`n >= 3`, `N_x >= 8`, `N_t >= 16`, `T > 0`).
    pub fn new(n: usize, nx: usize, nt: usize, t_horizon: f64) -> Result<Self> {
        if n < 3 {
            return Err(CoreError::InvalidGrid(format!(
                "dimension n = {n} < 3 (the frame construction needs three mutually orthogonal directions)"
            )));
        }
        if nx < 8 {
            return Err(CoreError::InvalidGrid(format!("N_x = {nx} < 8")));
        }
        if nt < 16 {
            return Err(CoreError::InvalidGrid(format!("N_t = {nt} < 16")));
        }
        if !(t_horizon > 0.0) || !t_horizon.is_finite() {
            return Err(CoreError::InvalidGrid(format!(
                "time horizon T = {t_horizon} must be finite and positive"
            )));
        }
        Ok(Self {
            n,
            nx,
            nt,
            t_horizon,
        })
    }

    /// Standard grid for a quick experiment: `n = 3`, `T = 1`.
    pub fn cube(nx: usize, nt: usize) -> Result<Self> {
        Self::new(3, nx, nt, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn t_horizon(&self) -> f64 {
        self.t_horizon
    }

    /// Spatial step `h = 1/N_x`.
    pub fn h(&self) -> f64 {
        1.0 / self.nx as f64
    }

    /// Time step `T/N_t`.
    pub fn dt(&self) -> f64 {
        self.t_horizon / self.nt as f64
    }

    /// Nodes per axis (`N_x + 1`).
    pub fn nodes_per_axis(&self) -> usize {
        self.nx + 1
    }

    /// Number of time levels (`N_t + 1`).
    pub fn time_levels(&self) -> usize {
        self.nt + 1
    }

    /// Total number of spatial nodes `(N_x+1)^n`.
    pub fn node_count(&self) -> usize {
        self.nodes_per_axis().pow(self.n as u32)
    }

    /// Stride of `axis` in the linear node index (axis 0 fastest).
    pub fn stride(&self, axis: usize) -> usize {
        self.nodes_per_axis().pow(axis as u32)
    }

    /// Time of level `m`.
    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.dt()
    }

    /// Decode a linear index into per-axis node indices.
    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let s = self.nodes_per_axis();
        let mut multi = vec![0usize; self.n];
        for m in multi.iter_mut() {
            *m = idx % s;
            idx /= s;
        }
        multi
    }

    /// Encode per-axis node indices into a linear index.
    pub fn encode(&self, multi: &[usize]) -> usize {
        let s = self.nodes_per_axis();
        let mut idx = 0usize;
        for &m in multi.iter().rev() {
            idx = idx * s + m;
        }
        idx
    }

    /// Coordinates of the node with linear index `idx`.
    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let h = self.h();
        self.decode(idx).iter().map(|&i| i as f64 * h).collect()
    }

    /// Whether the node lies on the boundary of the cube.
    pub fn is_boundary(&self, idx: usize) -> bool {
        let s = self.nodes_per_axis();
        let mut rest = idx;
        for _ in 0..self.n {
            let i = rest % s;
            if i == 0 || i == self.nx {
                return true;
            }
            rest /= s;
        }
        false
    }

    /// Linear indices of all interior nodes, in increasing order.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| !self.is_boundary(i))
            .collect()
    }

    /// Linear indices of all boundary nodes, in increasing order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| self.is_boundary(i))
            .collect()
    }

    /// All faces of the cube, in the canonical order
    /// `(axis 0, lower), (axis 0, upper), (axis 1, lower), ...`.
    pub fn faces(&self) -> Vec<Face> {
        (0..self.n)
            .flat_map(|axis| {
                [
                    Face { axis, upper: false },
                    Face { axis, upper: true },
                ]
            })
            .collect()
    }

    /// Linear indices of the nodes of `face`, in increasing order of the
    /// remaining axes (first remaining axis fastest).
    pub fn face_nodes(&self, face: Face) -> Vec<usize> {
        let s = self.nodes_per_axis();
        let frozen = if face.upper { self.nx } else { 0 };
        let mut nodes = Vec::with_capacity(s.pow((self.n - 1) as u32));
        let mut multi = vec![0usize; self.n];
        loop {
            multi[face.axis] = frozen;
            nodes.push(self.encode(&multi));
            // odometer over the non-frozen axes
            let mut advanced = false;
            for a in 0..self.n {
                if a == face.axis {
                    continue;
                }
                if multi[a] + 1 < s {
                    multi[a] += 1;
                    advanced = true;
                    break;
                }
                multi[a] = 0;
            }
            if !advanced {
                break;
            }
        }
        nodes
    }

    /// Trapezoidal quadrature weight of a node for volume integrals over the
    /// cube: `h^n` times `1/2` per axis on which the node is extreme.
    pub fn volume_weight(&self, idx: usize) -> f64 {
        let s = self.nodes_per_axis();
        let mut w = self.h().powi(self.n as i32);
        let mut rest = idx;
        for _ in 0..self.n {
            let i = rest % s;
            if i == 0 || i == self.nx {
                w *= 0.5;
            }
            rest /= s;
        }
        w
    }

    /// Trapezoidal quadrature weight of a node for surface integrals over one
    /// face (the frozen axis contributes no factor).
    pub fn face_weight(&self, face: Face, idx: usize) -> f64 {
        let s = self.nodes_per_axis();
        let mut w = self.h().powi(self.n as i32 - 1);
        let mut rest = idx;
        for a in 0..self.n {
            let i = rest % s;
            if a != face.axis && (i == 0 || i == self.nx) {
                w *= 0.5;
            }
            rest /= s;
        }
        w
    }

    /// Trapezoidal weight of time level `m` for integrals over `(0,T)`.
    pub fn time_weight(&self, m: usize) -> f64 {
        if m == 0 || m == self.nt {
            0.5 * self.dt()
        } else {
            self.dt()
        }
    }

    /// Base linear indices of all 1-d lines along `axis` (nodes with index 0
    /// on that axis), for stencil sweeps.
    pub fn axis_lines(&self, axis: usize) -> Vec<usize> {
        let s = self.nodes_per_axis();
        let mut bases = Vec::with_capacity(self.node_count() / s);
        let mut multi = vec![0usize; self.n];
        loop {
            multi[axis] = 0;
            bases.push(self.encode(&multi));
            let mut advanced = false;
            for a in 0..self.n {
                if a == axis {
                    continue;
                }
                if multi[a] + 1 < s {
                    multi[a] += 1;
                    advanced = true;
                    break;
                }
                multi[a] = 0;
            }
            if !advanced {
                break;
            }
        }
        bases
    }

    /// Checks that another grid has identical layout.
    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(CoreError::LatticeMismatch(format!(
                "grid {self:?} does not match {other:?}"
            )));
        }
        Ok(())
    }
}

/// Bijection between interior nodes and a contiguous index range, used by the
/// implicit solvers.
#[derive(Debug, Clone)]
pub struct InteriorMap {
    nodes: Vec<usize>,
    inverse: Vec<isize>,
}

impl InteriorMap {
    pub fn new(grid: &Grid) -> Self {
        let nodes = grid.interior_nodes();
        let mut inverse = vec![-1isize; grid.node_count()];
        for (k, &idx) in nodes.iter().enumerate() {
            inverse[idx] = k as isize;
        }
        Self { nodes, inverse }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Linear node index of interior unknown `k`.
    pub fn node(&self, k: usize) -> usize {
        self.nodes[k]
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Interior unknown of node `idx`, or `None` for boundary nodes.
    pub fn unknown(&self, idx: usize) -> Option<usize> {
        let v = self.inverse[idx];
        (v >= 0).then_some(v as usize)
    }
}
