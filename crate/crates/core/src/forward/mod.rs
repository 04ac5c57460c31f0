//! Time-domain forward problem: boundary inputs, space-time solutions and
//! Dirichlet-to-Neumann records.

pub mod hamiltonian;
pub mod io;
pub mod solver;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::field::norms;
use crate::grid::{Face, Grid};

/// Boundary node bookkeeping: every boundary node appears once, in increasing
/// linear-index order.
#[derive(Debug, Clone)]
pub struct BoundaryIndex {
    pub nodes: Vec<usize>,
    slot_of_node: Vec<isize>,
}

impl BoundaryIndex {
    pub fn new(grid: &Grid) -> Self {
        let nodes = grid.boundary_nodes();
        let mut slot_of_node = vec![-1isize; grid.node_count()];
        for (s, &n) in nodes.iter().enumerate() {
            slot_of_node[n] = s as isize;
        }
        Self {
            nodes,
            slot_of_node,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn slot(&self, node: usize) -> Option<usize> {
        let v = self.slot_of_node[node];
        (v >= 0).then_some(v as usize)
    }
}

/// Dirichlet data `(u_0, f)` for one probe. `f` is stored per time level over
/// the boundary node list; per-face views are derived where face-resolved
/// quantities are needed.
#[derive(Debug, Clone)]
pub struct BoundaryInput {
    pub grid: Grid,
    /// Initial state on the full grid (boundary values included).
    pub u0: Vec<Complex64>,
    /// Dirichlet trace per time level, over [`BoundaryIndex`] order.
    pub f: Vec<Vec<Complex64>>,
    /// Whether `f(.,0) = d_t f(.,0) = 0` holds to 1e-10 (membership flag of
    /// the zero-compatible trace space).
    pub h21_zero: bool,
}

impl BoundaryInput {
    /// Build and validate: the trace at `t = 0` must agree with `u_0` on the
    /// boundary to `1e-10` relative.
    pub fn new(grid: Grid, u0: Vec<Complex64>, f: Vec<Vec<Complex64>>) -> Result<Self> {
        if u0.len() != grid.node_count() {
            return Err(CoreError::InvalidField("u0 length mismatch".into()));
        }
        if f.len() != grid.time_levels() {
            return Err(CoreError::InvalidField(format!(
                "trace has {} levels, expected {}",
                f.len(),
                grid.time_levels()
            )));
        }
        let bindex = BoundaryIndex::new(&grid);
        for lvl in &f {
            if lvl.len() != bindex.len() {
                return Err(CoreError::InvalidField("trace level length mismatch".into()));
            }
        }
        let scale = u0
            .iter()
            .fold(0.0f64, |m, v| m.max(v.norm()))
            .max(f.iter().flatten().fold(0.0f64, |m, v| m.max(v.norm())))
            .max(1.0);
        let mut mismatch = 0.0f64;
        for (s, &node) in bindex.nodes.iter().enumerate() {
            mismatch = mismatch.max((f[0][s] - u0[node]).norm());
        }
        if mismatch > 1e-10 * scale {
            return Err(CoreError::InvalidField(format!(
                "incompatible data: |f(.,0) - u0|_Gamma| = {mismatch:.3e}"
            )));
        }
        let dt = grid.dt();
        let df0 = bindex
            .nodes
            .iter()
            .enumerate()
            .fold(0.0f64, |m, (s, _)| m.max(((f[1][s] - f[0][s]) / dt).norm()));
        let f0 = f[0].iter().fold(0.0f64, |m, v| m.max(v.norm()));
        let h21_zero = f0 <= 1e-10 * scale && df0 <= 1e-10 * scale;
        Ok(Self {
            grid,
            u0,
            f,
            h21_zero,
        })
    }

    /// The zero probe.
    pub fn zero(grid: Grid) -> Self {
        let bindex = BoundaryIndex::new(&grid);
        Self {
            grid,
            u0: vec![Complex64::default(); grid.node_count()],
            f: vec![vec![Complex64::default(); bindex.len()]; grid.time_levels()],
            h21_zero: true,
        }
    }

    /// Probe extracted from a space-time state: `u_0 = u(.,0)` and `f` the
    /// boundary trace of every level.
    pub fn from_states(grid: Grid, state: impl Fn(usize, usize) -> Complex64) -> Result<Self> {
        let bindex = BoundaryIndex::new(&grid);
        let u0: Vec<Complex64> = (0..grid.node_count()).map(|i| state(0, i)).collect();
        let f: Vec<Vec<Complex64>> = (0..grid.time_levels())
            .map(|m| bindex.nodes.iter().map(|&n| state(m, n)).collect())
            .collect();
        Self::new(grid, u0, f)
    }

    /// `sqrt(||u0||^2_{L^2(Omega)} + ||f||^2_{L^2(Sigma)})`: the probe norm of
    /// the operational DtN norm surrogate.
    pub fn norm_l2(&self) -> f64 {
        let vol = norms::l2_spatial(&self.grid, &self.u0);
        let surf = trace_l2_sigma(&self.grid, &self.f);
        (vol * vol + surf * surf).sqrt()
    }

    /// `||f||_{H^{2,1}(Sigma)}` surrogate: `H^2` in time with values in
    /// `L^2(Gamma)` plus `L^2` in time with values in `H^1(Gamma)`.
    pub fn trace_h21_norm(&self) -> f64 {
        let grid = &self.grid;
        let bindex = BoundaryIndex::new(grid);
        let dt = grid.dt();
        // time derivatives of the trace by difference quotients
        let d1 = trace_time_derivative(&self.f, dt);
        let d2 = trace_time_derivative(&d1, dt);
        let h2_l2 = (trace_l2_sigma(grid, &self.f).powi(2)
            + trace_l2_sigma(grid, &d1).powi(2)
            + trace_l2_sigma(grid, &d2).powi(2))
        .sqrt();

        // tangential H^1 per level
        let mut acc = 0.0;
        for (m, lvl) in self.f.iter().enumerate() {
            let w = grid.time_weight(m);
            let mut level_acc = 0.0;
            for face in grid.faces() {
                let fnodes = grid.face_nodes(face);
                let vals: Vec<Complex64> = fnodes
                    .iter()
                    .map(|&n| lvl[bindex.slot(n).unwrap()])
                    .collect();
                level_acc += face_h1_sq(grid, face, &fnodes, &vals);
            }
            acc += w * level_acc;
        }
        h2_l2 + acc.sqrt()
    }
}

fn trace_time_derivative(f: &[Vec<Complex64>], dt: f64) -> Vec<Vec<Complex64>> {
    let levels = f.len();
    let slots = f[0].len();
    let mut out = vec![vec![Complex64::default(); slots]; levels];
    for s in 0..slots {
        out[0][s] = (f[1][s] * 4.0 - f[2][s] - f[0][s] * 3.0) / (2.0 * dt);
        out[levels - 1][s] = (f[levels - 1][s] * 3.0 - f[levels - 2][s] * 4.0
            + f[levels - 3][s])
            / (2.0 * dt);
        for m in 1..levels - 1 {
            out[m][s] = (f[m + 1][s] - f[m - 1][s]) / (2.0 * dt);
        }
    }
    out
}

/// `L^2(Sigma)` norm of a per-level boundary-node array.
pub fn trace_l2_sigma(grid: &Grid, f: &[Vec<Complex64>]) -> f64 {
    let bindex = BoundaryIndex::new(grid);
    let mut acc = 0.0;
    for (m, lvl) in f.iter().enumerate() {
        let wt = grid.time_weight(m);
        for face in grid.faces() {
            for &n in &grid.face_nodes(face) {
                let v = lvl[bindex.slot(n).unwrap()];
                acc += wt * grid.face_weight(face, n) * v.norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Squared tangential `H^1` seminorm plus the `L^2` part on one face.
fn face_h1_sq(grid: &Grid, face: Face, fnodes: &[usize], vals: &[Complex64]) -> f64 {
    // map face nodes to a dense (n-1)-dim lattice for differencing
    let s = grid.nodes_per_axis();
    let tangential: Vec<usize> = (0..grid.dim()).filter(|&a| a != face.axis).collect();
    let mut acc = 0.0;
    let inv2h = 1.0 / (2.0 * grid.h());
    for (k, &node) in fnodes.iter().enumerate() {
        let w = grid.face_weight(face, node);
        acc += w * vals[k].norm_sqr();
        let multi = grid.decode(node);
        for (t_rank, &ax) in tangential.iter().enumerate() {
            // face nodes are ordered with the first tangential axis fastest
            let stride: usize = tangential[..t_rank]
                .iter()
                .map(|_| s)
                .product::<usize>()
                .max(1);
            let i = multi[ax];
            let d = if i == 0 {
                (vals[k + stride] * 4.0 - vals[k + 2 * stride] - vals[k] * 3.0) * inv2h
            } else if i == grid.nx() {
                (vals[k] * 3.0 - vals[k - stride] * 4.0 + vals[k - 2 * stride]) * inv2h
            } else {
                (vals[k + stride] - vals[k - stride]) * inv2h
            };
            acc += w * d.norm_sqr();
        }
    }
    acc
}

/// Space-time solution with per-step norms.
#[derive(Debug, Clone)]
pub struct SpaceTimeSolution {
    pub grid: Grid,
    /// Time level major, node minor.
    pub data: Vec<Complex64>,
    pub l2_per_step: Vec<f64>,
    pub h1_per_step: Vec<f64>,
}

impl SpaceTimeSolution {
    pub fn level(&self, m: usize) -> &[Complex64] {
        let nodes = self.grid.node_count();
        &self.data[m * nodes..(m + 1) * nodes]
    }
}

/// Probe metadata carried through the reconstruction bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeMeta {
    pub sigma: f64,
    pub xi: Vec<f64>,
    pub y: Vec<f64>,
    pub side: u8,
    /// Sign of the real frame axis used for the +/- omega probes.
    pub sign: i8,
}

/// The measured pair `(u(.,T), (d_nu + i A.nu) u)` for one probe.
#[derive(Debug, Clone)]
pub struct DtnRecord {
    pub grid: Grid,
    pub final_state: Vec<Complex64>,
    /// Magnetic Neumann trace per face (canonical face order), per time
    /// level, per face node.
    pub trace: Vec<Vec<Vec<Complex64>>>,
    pub meta: Option<ProbeMeta>,
}

impl DtnRecord {
    pub fn is_finite(&self) -> bool {
        self.final_state.iter().all(|v| v.re.is_finite() && v.im.is_finite())
            && self
                .trace
                .iter()
                .flatten()
                .flatten()
                .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Componentwise difference `self - other`; metadata is kept from `self`.
    pub fn sub(&self, other: &DtnRecord) -> Result<DtnRecord> {
        self.grid.ensure_same(&other.grid)?;
        let final_state = self
            .final_state
            .iter()
            .zip(&other.final_state)
            .map(|(a, b)| a - b)
            .collect();
        let trace = self
            .trace
            .iter()
            .zip(&other.trace)
            .map(|(fa, fb)| {
                fa.iter()
                    .zip(fb)
                    .map(|(la, lb)| la.iter().zip(lb).map(|(a, b)| a - b).collect())
                    .collect()
            })
            .collect();
        Ok(DtnRecord {
            grid: self.grid,
            final_state,
            trace,
            meta: self.meta.clone(),
        })
    }

    /// `sqrt(||u(.,T)||^2_{L^2(Omega)} + ||trace||^2_{L^2(Sigma)})`: the
    /// output norm of the operational DtN norm surrogate.
    pub fn output_norm(&self) -> f64 {
        let vol = norms::l2_spatial(&self.grid, &self.final_state);
        let mut surf = 0.0;
        for (fi, face) in self.grid.faces().iter().enumerate() {
            let fnodes = self.grid.face_nodes(*face);
            for (m, lvl) in self.trace[fi].iter().enumerate() {
                let wt = self.grid.time_weight(m);
                for (k, v) in lvl.iter().enumerate() {
                    surf += wt * self.grid.face_weight(*face, fnodes[k]) * v.norm_sqr();
                }
            }
        }
        (vol * vol + surf).sqrt()
    }
}

/// Both sides of the continuity estimate of the forward map, with their
/// ratio (`NaN` + flag for the zero probe).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `max_t ||u(.,t)||_{H^1} + ||d_nu u||_{L^2(Sigma)}`.
    pub lhs: f64,
    /// `||u_0||_{H^2} + ||f||_{H^{2,1}(Sigma)}`.
    pub rhs: f64,
    pub ratio: f64,
    pub zero_input: bool,
    /// Per-step relative drift of the `L^2` norm (conservation diagnostic).
    pub max_l2_drift: f64,
}
