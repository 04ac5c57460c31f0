//! Crank-Nicolson time stepping for `(i d_t + Delta_A + q) u = F` with
//! Dirichlet data, and the Dirichlet-to-Neumann map built on top of it.
//!
//! Each step solves `(I - ic H) u^{m+1} = (I + ic H) u^m - ic (F^m + F^{m+1})`
//! with `c = dt/2` and `H = Delta_A + (q^m + q^{m+1})/2`; evaluating the
//! time-dependent potential at both endpoints and averaging keeps every step
//! an exact Cayley transform of a Hermitian matrix, hence unitary on the
//! interior `l^2` norm for homogeneous boundary data.

use num_complex::Complex64;
use std::cell::RefCell;

use crate::error::{CoreError, Result};
use crate::field::norms::{h1_spatial, h2_spatial, l2_spatial};
use crate::field::{ComplexSpaceTimeField, ScalarSpaceTimeField, VectorField};
use crate::forward::hamiltonian::DiscreteHamiltonian;
use crate::forward::{
    BoundaryIndex, BoundaryInput, DtnRecord, EnergyReport, SpaceTimeSolution,
};
use crate::grid::{Grid, InteriorMap};
use crate::numerics::dst::DirichletSpectral;
use crate::numerics::linsolve::{pcg, HermitianOp, Preconditioner};

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Relative residual the implicit systems are solved to.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

/// Normal-equation operator `I + c^2 H^2` on interior unknowns.
struct CnNormalOp<'a, 'b> {
    ham: &'a DiscreteHamiltonian<'b>,
    interior: &'a InteriorMap,
    c: f64,
    full_a: RefCell<Vec<Complex64>>,
    full_b: RefCell<Vec<Complex64>>,
}

impl<'a, 'b> CnNormalOp<'a, 'b> {
    fn new(ham: &'a DiscreteHamiltonian<'b>, interior: &'a InteriorMap, c: f64) -> Self {
        let nodes = ham.grid.node_count();
        Self {
            ham,
            interior,
            c,
            full_a: RefCell::new(vec![Complex64::default(); nodes]),
            full_b: RefCell::new(vec![Complex64::default(); nodes]),
        }
    }

    /// `out = H x` for an interior vector (boundary treated as zero).
    fn apply_h(&self, x: &[Complex64], out: &mut [Complex64]) {
        let mut full = self.full_a.borrow_mut();
        let mut res = self.full_b.borrow_mut();
        full.fill(Complex64::default());
        for (k, &node) in self.interior.nodes().iter().enumerate() {
            full[node] = x[k];
        }
        self.ham.apply(&full, &mut res);
        for (k, &node) in self.interior.nodes().iter().enumerate() {
            out[k] = res[node];
        }
    }
}

impl HermitianOp for CnNormalOp<'_, '_> {
    fn dim(&self) -> usize {
        self.interior.len()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let mut h1 = vec![Complex64::default(); x.len()];
        let mut h2 = vec![Complex64::default(); x.len()];
        self.apply_h(x, &mut h1);
        self.apply_h(&h1, &mut h2);
        let c2 = self.c * self.c;
        for k in 0..x.len() {
            y[k] = x[k] + h2[k] * c2;
        }
    }
}

/// `(I + c^2 Lap^2)^{-1}` in the sine basis: exact for the free Hamiltonian,
/// a strong preconditioner otherwise.
struct DstPrecond {
    spectral: DirichletSpectral,
    c2: f64,
}

impl Preconditioner for DstPrecond {
    fn apply(&self, r: &[Complex64], z: &mut [Complex64]) {
        z.copy_from_slice(r);
        self.spectral
            .apply_multiplier(z, |lam| 1.0 / (1.0 + self.c2 * lam * lam));
    }
}

/// Solve the initial boundary value problem. `a` and `q` default to zero;
/// `source` is the optional right-hand side `F`.
pub fn solve_ibvp(
    a: Option<&VectorField>,
    q: Option<&ScalarSpaceTimeField>,
    g: &BoundaryInput,
    source: Option<&ComplexSpaceTimeField>,
    opts: &SolveOptions,
) -> Result<SpaceTimeSolution> {
    let grid = g.grid;
    if let Some(a) = a {
        grid.ensure_same(&a.grid)?;
        if !a.is_finite() {
            return Err(CoreError::InvalidField("non-finite A".into()));
        }
    }
    if let Some(q) = q {
        grid.ensure_same(&q.grid)?;
        if !q.is_finite() {
            return Err(CoreError::InvalidField("non-finite q".into()));
        }
    }
    if let Some(f) = source {
        grid.ensure_same(&f.grid)?;
    }

    let nodes = grid.node_count();
    let levels = grid.time_levels();
    let interior = InteriorMap::new(&grid);
    let bindex = BoundaryIndex::new(&grid);
    let c = grid.dt() / 2.0;
    let precond = DstPrecond {
        spectral: DirichletSpectral::new(&grid),
        c2: c * c,
    };
    let mut ham = DiscreteHamiltonian::new(grid, a, None);

    let mut data = vec![Complex64::default(); nodes * levels];
    // level 0: initial state with the boundary trace imposed
    data[..nodes].copy_from_slice(&g.u0);
    for (s, &node) in bindex.nodes.iter().enumerate() {
        data[node] = g.f[0][s];
    }

    let ni = interior.len();
    let mut x = vec![Complex64::default(); ni];
    let mut rhs = vec![Complex64::default(); ni];
    let mut b = vec![Complex64::default(); ni];
    let mut hbuf = vec![Complex64::default(); nodes];
    let mut full = vec![Complex64::default(); nodes];
    let mut qbar = vec![0.0f64; nodes];

    for m in 0..grid.nt() {
        if let Some(q) = q {
            let q0 = q.level(m);
            let q1 = q.level(m + 1);
            for i in 0..nodes {
                qbar[i] = 0.5 * (q0[i] + q1[i]);
            }
            ham.set_potential(&qbar);
        }

        // rhs = (I + icH) u^m  on interior rows (u^m carries its boundary)
        let (head, _) = data.split_at(nodes * (m + 1));
        let um = &head[nodes * m..];
        ham.apply(um, &mut hbuf);
        let ic = Complex64::new(0.0, c);
        for (k, &node) in interior.nodes().iter().enumerate() {
            rhs[k] = um[node] + ic * hbuf[node];
        }

        // + ic * (boundary coupling of f^{m+1})
        full.fill(Complex64::default());
        for (s, &node) in bindex.nodes.iter().enumerate() {
            full[node] = g.f[m + 1][s];
        }
        ham.apply(&full, &mut hbuf);
        for (k, &node) in interior.nodes().iter().enumerate() {
            rhs[k] += ic * hbuf[node];
        }

        // - ic * (F^m + F^{m+1})
        if let Some(fsrc) = source {
            let f0 = fsrc.level(m);
            let f1 = fsrc.level(m + 1);
            for (k, &node) in interior.nodes().iter().enumerate() {
                rhs[k] -= ic * (f0[node] + f1[node]);
            }
        }

        // normal equations: (I + c^2 H^2) x = (I + icH) rhs
        let op = CnNormalOp::new(&ham, &interior, c);
        op.apply_h(&rhs, &mut b);
        for k in 0..ni {
            b[k] = rhs[k] + ic * b[k];
        }
        for (k, &node) in interior.nodes().iter().enumerate() {
            x[k] = um[node]; // warm start from the previous level
        }
        let info = pcg(&op, &precond, &b, &mut x, opts.tol * 0.05, opts.max_iter)?;

        // certify the residual of the original one-sided system
        let mut hx = vec![Complex64::default(); ni];
        op.apply_h(&x, &mut hx);
        let mut res2 = 0.0;
        let mut rhs2 = 0.0;
        for k in 0..ni {
            let mx = x[k] - ic * hx[k];
            res2 += (mx - rhs[k]).norm_sqr();
            rhs2 += rhs[k].norm_sqr();
        }
        let rel = if rhs2 > 0.0 {
            (res2 / rhs2).sqrt()
        } else {
            res2.sqrt()
        };
        if rel > opts.tol {
            return Err(CoreError::SolverBreakdown {
                iterations: info.iterations,
                residual: rel,
                required: opts.tol,
            });
        }

        let lvl = &mut data[nodes * (m + 1)..nodes * (m + 2)];
        for (s, &node) in bindex.nodes.iter().enumerate() {
            lvl[node] = g.f[m + 1][s];
        }
        for (k, &node) in interior.nodes().iter().enumerate() {
            lvl[node] = x[k];
        }
    }

    let mut l2_per_step = Vec::with_capacity(levels);
    let mut h1_per_step = Vec::with_capacity(levels);
    for m in 0..levels {
        let lvl = &data[nodes * m..nodes * (m + 1)];
        l2_per_step.push(l2_spatial(&grid, lvl));
        h1_per_step.push(h1_spatial(&grid, lvl));
    }

    Ok(SpaceTimeSolution {
        grid,
        data,
        l2_per_step,
        h1_per_step,
    })
}

/// Magnetic Neumann trace `(d_nu + i A.nu) u` per face/level/face-node, with
/// a one-sided second-order normal derivative.
pub fn magnetic_neumann_trace(
    u: &SpaceTimeSolution,
    a: Option<&VectorField>,
) -> Result<Vec<Vec<Vec<Complex64>>>> {
    let grid = u.grid;
    if let Some(a) = a {
        grid.ensure_same(&a.grid)?;
    }
    let inv2h = 1.0 / (2.0 * grid.h());
    let mut out = Vec::new();
    for face in grid.faces() {
        let fnodes = grid.face_nodes(face);
        let stride = grid.stride(face.axis) as isize;
        let inward = if face.upper { -stride } else { stride };
        let mut face_levels = Vec::with_capacity(grid.time_levels());
        for m in 0..grid.time_levels() {
            let lvl = u.level(m);
            let vals: Vec<Complex64> = fnodes
                .iter()
                .map(|&node| {
                    let b = node as isize;
                    let u0 = lvl[node];
                    let u1 = lvl[(b + inward) as usize];
                    let u2 = lvl[(b + 2 * inward) as usize];
                    let mut t = (u0 * 3.0 - u1 * 4.0 + u2) * inv2h;
                    if let Some(a) = a {
                        let nu_a = face.normal_sign() * a.comps[face.axis][node];
                        t += Complex64::new(0.0, nu_a) * u0;
                    }
                    t
                })
                .collect();
            face_levels.push(vals);
        }
        out.push(face_levels);
    }
    Ok(out)
}

/// The Dirichlet-to-Neumann map applied to one probe: solve with `F = 0` and
/// collect `(u(.,T), (d_nu + iA.nu)u)`.
pub fn dtn_apply(
    a: Option<&VectorField>,
    q: Option<&ScalarSpaceTimeField>,
    g: &BoundaryInput,
    opts: &SolveOptions,
) -> Result<DtnRecord> {
    let u = solve_ibvp(a, q, g, None, opts)?;
    let trace = magnetic_neumann_trace(&u, a)?;
    let nodes = u.grid.node_count();
    let final_state = u.data[u.data.len() - nodes..].to_vec();
    Ok(DtnRecord {
        grid: u.grid,
        final_state,
        trace,
        meta: None,
    })
}

/// Both sides of the forward continuity estimate for a solved state.
pub fn energy_report(u: &SpaceTimeSolution, g: &BoundaryInput) -> Result<EnergyReport> {
    let grid = u.grid;
    grid.ensure_same(&g.grid)?;
    let max_h1 = u.h1_per_step.iter().fold(0.0f64, |m, &v| m.max(v));
    let trace = magnetic_neumann_trace(u, None)?;
    let lhs = max_h1 + face_trace_l2(&grid, &trace);
    let rhs = h2_spatial(&grid, &g.u0) + g.trace_h21_norm();
    let zero_input = rhs == 0.0;
    let ratio = if zero_input { f64::NAN } else { lhs / rhs };

    let mut max_l2_drift = 0.0f64;
    let base = u.l2_per_step[0];
    if base > 0.0 {
        for w in u.l2_per_step.windows(2) {
            max_l2_drift = max_l2_drift.max((w[1] - w[0]).abs() / base);
        }
    }
    Ok(EnergyReport {
        lhs,
        rhs,
        ratio,
        zero_input,
        max_l2_drift,
    })
}

/// `L^2(Sigma)` norm of a per-face trace block (helper shared with tests and
/// the reconstruction quadratures).
pub fn face_trace_l2(grid: &Grid, trace: &[Vec<Vec<Complex64>>]) -> f64 {
    let faces = grid.faces();
    let mut sq = 0.0;
    for (fi, face) in faces.iter().enumerate() {
        let fnodes = grid.face_nodes(*face);
        for (m, lvl) in trace[fi].iter().enumerate() {
            let wt = grid.time_weight(m);
            for (k, v) in lvl.iter().enumerate() {
                sq += wt * grid.face_weight(*face, fnodes[k]) * v.norm_sqr();
            }
        }
    }
    sq.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eigenmode(grid: &Grid) -> Vec<Complex64> {
        (0..grid.node_count())
            .map(|i| {
                let x = grid.coords(i);
                let v = (std::f64::consts::PI * x[0]).sin()
                    * (std::f64::consts::PI * x[1]).sin()
                    * (std::f64::consts::PI * x[2]).sin();
                Complex64::new(v, 0.0)
            })
            .collect()
    }

    fn discrete_eigenvalue(grid: &Grid) -> f64 {
        let h = grid.h();
        3.0 * 4.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2)
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let grid = Grid::cube(8, 16).unwrap();
        let g = BoundaryInput::zero(grid);
        let u = solve_ibvp(None, None, &g, None, &SolveOptions::default()).unwrap();
        assert!(u.data.iter().all(|v| v.norm() == 0.0));
        let rec = dtn_apply(None, None, &g, &SolveOptions::default()).unwrap();
        assert!(rec.final_state.iter().all(|v| v.norm() == 0.0));
        assert!(rec.trace.iter().flatten().flatten().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn free_eigenmode_evolves_with_cayley_phase() {
        // a discrete Laplacian eigenmode evolves by the exact rational phase
        // (1 - ic lam)/(1 + ic lam) per step; the deviation from e^{-i lam t}
        // is the documented O(dt^2 lam^3 T) Crank-Nicolson phase error
        let grid = Grid::cube(16, 64).unwrap();
        let u0 = eigenmode(&grid);
        let g = BoundaryInput::from_states(grid, |_, i| {
            if grid.is_boundary(i) {
                Complex64::default()
            } else {
                u0[i]
            }
        })
        .unwrap();
        let opts = SolveOptions {
            tol: 1e-12,
            ..Default::default()
        };
        let u = solve_ibvp(None, None, &g, None, &opts).unwrap();
        let lam = discrete_eigenvalue(&grid);
        let c = grid.dt() / 2.0;
        let step_phase = (Complex64::new(1.0, -c * lam)) / (Complex64::new(1.0, c * lam));
        let mut phase = Complex64::new(1.0, 0.0);
        let nodes = grid.node_count();
        for m in 0..=grid.nt() {
            let lvl = &u.data[m * nodes..(m + 1) * nodes];
            let mut err = 0.0f64;
            for i in 0..nodes {
                err = err.max((lvl[i] - u0[i] * phase).norm());
            }
            assert!(err <= 1e-8, "level {m}: rational-phase error {err:.3e}");
            phase *= step_phase;
        }
        // continuum-phase comparison at t = T
        let exact = Complex64::new(0.0, -lam * grid.t_horizon()).exp();
        let last = &u.data[grid.nt() * nodes..];
        let mut dev = 0.0f64;
        for i in 0..nodes {
            dev = dev.max((last[i] - u0[i] * exact).norm());
        }
        let bound = grid.dt().powi(2) * lam.powi(3) * grid.t_horizon();
        assert!(
            dev <= bound,
            "phase deviation {dev:.3e} exceeds dt^2 lam^3 T = {bound:.3e}"
        );
    }

    #[test]
    fn l2_norm_is_conserved_with_real_coefficients() {
        let grid = Grid::cube(8, 32).unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let recipe = crate::field::bumps::BumpRecipe::random(&mut rng, 3, 2, 0.4);
        let a = crate::field::bumps::make_admissible_potential(&grid, &recipe, false).unwrap();
        let q = ScalarSpaceTimeField::from_fn(grid, |x, t| {
            let r2: f64 = x.iter().map(|&c| (c - 0.5) * (c - 0.5)).sum();
            if r2 < 0.09 {
                0.8 * (1.0 - r2 / 0.09).powi(4) * (1.0 + (2.0 * t).sin())
            } else {
                0.0
            }
        });
        let mut u0 = vec![Complex64::default(); grid.node_count()];
        for i in 0..grid.node_count() {
            if !grid.is_boundary(i) {
                u0[i] = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        let g = BoundaryInput::from_states(grid, |_, i| u0[i]).unwrap();
        let u = solve_ibvp(Some(&a), Some(&q), &g, None, &SolveOptions::default()).unwrap();
        let report = energy_report(&u, &g).unwrap();
        assert!(
            report.max_l2_drift <= 1e-10,
            "per-step L2 drift {:.3e}",
            report.max_l2_drift
        );
    }

    #[test]
    fn solution_map_is_linear_in_the_data() {
        let grid = Grid::cube(8, 16).unwrap();
        let opts = SolveOptions::default();
        let mk = |amp: f64, seed: u64| {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut u0 = vec![Complex64::default(); grid.node_count()];
            for (i, v) in u0.iter_mut().enumerate() {
                if !grid.is_boundary(i) {
                    *v = amp
                        * Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                }
            }
            BoundaryInput::from_states(grid, |_, i| u0[i]).unwrap()
        };
        let g1 = mk(1.0, 1);
        let g2 = mk(0.7, 2);
        let mut sum_u0 = g1.u0.clone();
        for (a, b) in sum_u0.iter_mut().zip(&g2.u0) {
            *a += b;
        }
        let gsum = BoundaryInput::from_states(grid, |_, i| sum_u0[i]).unwrap();
        let r1 = dtn_apply(None, None, &g1, &opts).unwrap();
        let r2 = dtn_apply(None, None, &g2, &opts).unwrap();
        let rsum = dtn_apply(None, None, &gsum, &opts).unwrap();
        let lin = rsum
            .sub(&r1)
            .unwrap()
            .sub(&r2)
            .unwrap();
        let scale = rsum.output_norm();
        assert!(
            lin.output_norm() <= 1e-8 * scale,
            "linearity defect {:.3e} vs scale {scale:.3e}",
            lin.output_norm()
        );
    }

    #[test]
    fn eigenmode_neumann_trace_on_bottom_face() {
        let grid = Grid::cube(16, 32).unwrap();
        let u0 = eigenmode(&grid);
        let g = BoundaryInput::from_states(grid, |_, i| {
            if grid.is_boundary(i) {
                Complex64::default()
            } else {
                u0[i]
            }
        })
        .unwrap();
        let u = solve_ibvp(None, None, &g, None, &SolveOptions::default()).unwrap();
        let trace = magnetic_neumann_trace(&u, None).unwrap();
        let lam = discrete_eigenvalue(&grid);
        let c = grid.dt() / 2.0;
        let step_phase = (Complex64::new(1.0, -c * lam)) / (Complex64::new(1.0, c * lam));
        // face x3 = 0 is the 5th in canonical order (axis 2, lower)
        let face = crate::grid::Face {
            axis: 2,
            upper: false,
        };
        let fi = 4;
        let fnodes = grid.face_nodes(face);
        let m = grid.nt() / 2;
        let phase = step_phase.powu(m as u32);
        let mut max_rel = 0.0f64;
        for (k, &node) in fnodes.iter().enumerate() {
            let x = grid.coords(node);
            // skip the face edge where the expected trace vanishes
            let expect = -std::f64::consts::PI
                * (std::f64::consts::PI * x[0]).sin()
                * (std::f64::consts::PI * x[1]).sin();
            if expect.abs() < 0.5 {
                continue;
            }
            let got = trace[fi][m][k];
            let want = phase * expect;
            max_rel = max_rel.max((got - want).norm() / want.norm());
        }
        assert!(max_rel < 0.02, "trace relative error {max_rel:.3e}");
    }

    #[test]
    fn constant_state_trace_reduces_to_ia_nu() {
        // inadmissible fixture: A with non-zero boundary values, u = 1
        let grid = Grid::cube(8, 16).unwrap();
        let a = VectorField::from_fn(grid, |x| vec![0.3 + x[0], 0.0, -0.2]);
        let ones = vec![Complex64::new(1.0, 0.0); grid.node_count() * grid.time_levels()];
        let u = SpaceTimeSolution {
            grid,
            data: ones,
            l2_per_step: vec![],
            h1_per_step: vec![],
        };
        let trace = magnetic_neumann_trace(&u, Some(&a)).unwrap();
        for (fi, face) in grid.faces().iter().enumerate() {
            for (k, &node) in grid.face_nodes(*face).iter().enumerate() {
                let want = Complex64::new(0.0, face.normal_sign() * a.comps[face.axis][node]);
                let got = trace[fi][0][k];
                assert!((got - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_solution_energy_report_flags_nan() {
        let grid = Grid::cube(8, 16).unwrap();
        let g = BoundaryInput::zero(grid);
        let u = solve_ibvp(None, None, &g, None, &SolveOptions::default()).unwrap();
        let rep = energy_report(&u, &g).unwrap();
        assert!(rep.zero_input);
        assert!(rep.ratio.is_nan());
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.rhs, 0.0);
    }
}
