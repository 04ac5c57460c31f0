//! Type-I discrete sine transforms and the fast direct solver for the
//! 7-point Dirichlet Laplacian they diagonalize.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::grid::Grid;

/// DST-I on interior values of a Dirichlet axis with `N` cells
/// (`m = N - 1` interior nodes): `v~_k = sum_j v_j sin(pi j k / N)`.
///
/// The transform is its own inverse up to the factor `2/N`.
pub struct DstPlan {
    n_cells: usize,
    fft: Arc<dyn rustfft::Fft<f64>>,
}

impl DstPlan {
    pub fn new(n_cells: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(2 * n_cells);
        Self { n_cells, fft }
    }

    pub fn interior_len(&self) -> usize {
        self.n_cells - 1
    }

    /// In-place DST-I of a line of `N-1` interior values.
    pub fn transform(&self, line: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        let m = self.interior_len();
        assert_eq!(line.len(), m);
        let two_n = 2 * self.n_cells;
        scratch.clear();
        scratch.resize(two_n, Complex64::default());
        for j in 0..m {
            scratch[j + 1] = line[j];
            scratch[two_n - 1 - j] = -line[j];
        }
        self.fft.process(scratch);
        // odd extension gives B_k = -2i * v~_k
        let half_i = Complex64::new(0.0, 0.5);
        for k in 0..m {
            line[k] = half_i * scratch[k + 1];
        }
    }
}

/// Spectral operations on interior nodes of a [`Grid`], diagonalizing the
/// 7-point Dirichlet Laplacian via per-axis DST-I.
pub struct DirichletSpectral {
    dim: usize,
    plan: DstPlan,
    /// 1-d Laplacian eigenvalues `-4/h^2 sin^2(pi k / 2N)`, `k = 1..N-1`.
    eigs_1d: Vec<f64>,
}

impl DirichletSpectral {
    pub fn new(grid: &Grid) -> Self {
        let n_cells = grid.nx();
        let h = grid.h();
        let eigs_1d = (1..n_cells)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * n_cells as f64)).sin();
                -4.0 / (h * h) * s * s
            })
            .collect();
        Self {
            dim: grid.dim(),
            plan: DstPlan::new(n_cells),
            eigs_1d,
        }
    }

    pub fn interior_len(&self) -> usize {
        self.plan.interior_len().pow(self.dim as u32)
    }

    fn dst_all_axes(&self, data: &mut [Complex64]) {
        let m = self.plan.interior_len();
        let total = self.interior_len();
        let mut line = vec![Complex64::default(); m];
        let mut scratch = Vec::new();
        let mut stride = 1usize;
        for _axis in 0..self.dim {
            let outer = total / m;
            for o in 0..outer {
                let block = o / stride;
                let offset = o % stride;
                let base = block * stride * m + offset;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = data[base + j * stride];
                }
                self.plan.transform(&mut line, &mut scratch);
                for (j, l) in line.iter().enumerate() {
                    data[base + j * stride] = *l;
                }
            }
            stride *= m;
        }
    }

    /// Laplacian eigenvalue of the interior mode with flat index `idx`
    /// (per-axis frequencies decoded in the same layout as the data).
    fn eigenvalue(&self, mut idx: usize) -> f64 {
        let m = self.plan.interior_len();
        let mut lam = 0.0;
        for _ in 0..self.dim {
            lam += self.eigs_1d[idx % m];
            idx /= m;
        }
        lam
    }

    /// Apply a spectral multiplier `f(lambda)` of the Dirichlet Laplacian to
    /// interior data (flat layout over interior nodes, axis 0 fastest).
    pub fn apply_multiplier(&self, data: &mut [Complex64], f: impl Fn(f64) -> f64) {
        assert_eq!(data.len(), self.interior_len());
        self.dst_all_axes(data);
        let m = self.plan.interior_len();
        let norm = 2.0 / self.plan.n_cells as f64;
        let scale = norm.powi(self.dim as i32);
        for (idx, v) in data.iter_mut().enumerate() {
            let _ = m;
            *v *= f(self.eigenvalue(idx)) * scale;
        }
        self.dst_all_axes(data);
    }

    /// Solve the Dirichlet-Poisson problem `Lap u = rhs`, `u = 0` on the
    /// boundary and return interior values (all eigenvalues are negative so
    /// the system is uniquely solvable).
    pub fn solve_poisson(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let mut data = rhs.to_vec();
        self.apply_multiplier(&mut data, |lam| 1.0 / lam);
        data
    }

    /// Residual check helper for a claimed Poisson solve; returns the relative
    /// interior residual and errors if above `required`.
    pub fn check_residual(residual: f64, required: f64) -> Result<()> {
        if residual > required {
            return Err(CoreError::PoissonResidual { residual, required });
        }
        Ok(())
    }
}
