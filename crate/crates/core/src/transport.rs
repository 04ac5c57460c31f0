//! The complex-direction transport operator `N_omega = omega . grad` and its
//! inverse, evaluated as a Cauchy-type convolution
//!
//! ```text
//! N_omega^{-1}(g)(x) = 1/(2 pi) Int (y1 + i y2)^{-1} g(x - y1 w_R - y2 w_I) dy1 dy2,
//! ```
//!
//! computed in polar coordinates where the Jacobian cancels the kernel
//! singularity. The convolution is truncated to a disk that covers every
//! translate meeting the support, so the truncation is exact.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::field::ops::gradient;
use crate::field::VectorField;
use crate::grid::Grid;

/// Angular resolution of the polar rule.
const ANGULAR_STEPS: usize = 64;

/// A complex direction `omega = w_R + i w_I` with unit, mutually orthogonal
/// real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexDirection {
    pub om_re: Vec<f64>,
    pub om_im: Vec<f64>,
}

impl ComplexDirection {
    pub fn new(om_re: Vec<f64>, om_im: Vec<f64>) -> Result<Self> {
        if om_re.len() != om_im.len() || om_re.len() < 3 {
            return Err(CoreError::InvalidFrame(format!(
                "direction dimension {} is not valid",
                om_re.len()
            )));
        }
        let tol = 1e-12;
        let norm_re: f64 = om_re.iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm_im: f64 = om_im.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dot: f64 = om_re.iter().zip(&om_im).map(|(a, b)| a * b).sum();
        if (norm_re - 1.0).abs() > tol || (norm_im - 1.0).abs() > tol {
            return Err(CoreError::InvalidFrame(format!(
                "|w_R| = {norm_re}, |w_I| = {norm_im}, expected unit vectors"
            )));
        }
        if dot.abs() > tol {
            return Err(CoreError::InvalidFrame(format!(
                "w_R . w_I = {dot:e}, expected orthogonal"
            )));
        }
        Ok(Self { om_re, om_im })
    }

    pub fn dim(&self) -> usize {
        self.om_re.len()
    }

    /// `omega . v` for a real vector `v`.
    pub fn dot_real(&self, v: &[f64]) -> Complex64 {
        let re: f64 = self.om_re.iter().zip(v).map(|(a, b)| a * b).sum();
        let im: f64 = self.om_im.iter().zip(v).map(|(a, b)| a * b).sum();
        Complex64::new(re, im)
    }

    /// `-omega . A` sampled on the grid (the transport source of the phase).
    pub fn neg_dot_field(&self, a: &VectorField) -> Vec<Complex64> {
        let nodes = a.grid.node_count();
        let mut out = vec![Complex64::default(); nodes];
        for idx in 0..nodes {
            let mut re = 0.0;
            let mut im = 0.0;
            for ax in 0..a.grid.dim() {
                re -= self.om_re[ax] * a.comps[ax][idx];
                im -= self.om_im[ax] * a.comps[ax][idx];
            }
            out[idx] = Complex64::new(re, im);
        }
        out
    }

    /// Complex conjugate direction (also a valid direction).
    pub fn conj(&self) -> Self {
        Self {
            om_re: self.om_re.clone(),
            om_im: self.om_im.iter().map(|v| -v).collect(),
        }
    }
}

/// The phase `phi = N_omega^{-1}(g)` with its source and diagnostics.
#[derive(Debug, Clone)]
pub struct PhaseField {
    pub grid: Grid,
    pub direction: ComplexDirection,
    pub data: Vec<Complex64>,
    pub source: Vec<Complex64>,
    /// Max interior residual of `omega . grad phi - g`.
    pub residual: f64,
    /// Measured `||phi||_inf / ||g||_inf` (the transport bound constant).
    pub sup_ratio: f64,
}

/// Accumulate `dst[i] += w * src[i - shift]` over the overlap of the shifted
/// index boxes, line by line along axis 0.
fn shifted_axpy(
    grid: &Grid,
    w: Complex64,
    src: &[Complex64],
    shift: &[isize],
    dst: &mut [Complex64],
) {
    let n = grid.dim();
    let nx = grid.nx() as isize;
    // per-axis valid output range [lo, hi]
    let mut lo = vec![0isize; n];
    let mut hi = vec![0isize; n];
    for a in 0..n {
        lo[a] = shift[a].max(0);
        hi[a] = (nx + shift[a]).min(nx);
        if lo[a] > hi[a] {
            return;
        }
    }
    let mut outer = lo[1..].to_vec();
    let src_off: isize = (0..n).map(|a| shift[a] * grid.stride(a) as isize).sum();
    loop {
        let mut base = 0isize;
        for a in 1..n {
            base += outer[a - 1] * grid.stride(a) as isize;
        }
        let d0 = (base + lo[0]) as usize;
        let s0 = (base + lo[0] - src_off) as usize;
        let len = (hi[0] - lo[0] + 1) as usize;
        let dslice = &mut dst[d0..d0 + len];
        let sslice = &src[s0..s0 + len];
        for (d, s) in dslice.iter_mut().zip(sslice) {
            *d += w * s;
        }
        // odometer over outer axes
        let mut advanced = false;
        for a in 0..n - 1 {
            if outer[a] < hi[a + 1] {
                outer[a] += 1;
                advanced = true;
                break;
            }
            outer[a] = lo[a + 1];
        }
        if !advanced {
            break;
        }
    }
}

/// Invert the transport operator for a compactly supported source `g` given
/// on the grid (zero-extended outside the cube).
pub fn n_omega_inverse(
    grid: &Grid,
    omega: &ComplexDirection,
    g: &[Complex64],
) -> Result<PhaseField> {
    if omega.dim() != grid.dim() {
        return Err(CoreError::InvalidFrame(
            "direction dimension does not match grid".into(),
        ));
    }
    if g.len() != grid.node_count() {
        return Err(CoreError::InvalidField("source length mismatch".into()));
    }
    let g_sup = g.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    for &b in &grid.boundary_nodes() {
        if g[b].norm() > 1e-14 * g_sup.max(1.0) {
            return Err(CoreError::InvalidField(
                "transport source must be supported strictly inside the box".into(),
            ));
        }
    }

    let nodes = grid.node_count();
    if g_sup == 0.0 {
        return Ok(PhaseField {
            grid: *grid,
            direction: omega.clone(),
            data: vec![Complex64::default(); nodes],
            source: g.to_vec(),
            residual: 0.0,
            sup_ratio: 0.0,
        });
    }

    let n = grid.dim();
    let h = grid.h();
    let disk_radius = 2.0 * (n as f64).sqrt();
    let dr = h / 2.0;
    let n_r = (disk_radius / dr).ceil() as usize;
    let dth = std::f64::consts::TAU / ANGULAR_STEPS as f64;
    // kernel prefactor 1/(2 pi) times the cell area dr * dtheta
    let quad_scale = dr * dth / std::f64::consts::TAU;

    // offsets d = r(cos t w_R + sin t w_I); each splits into an integer node
    // shift and 2^n multilinear corner weights that are shared by all nodes
    struct Corner {
        shift: Vec<isize>,
        weight: Complex64,
    }
    let mut jobs: Vec<Corner> = Vec::with_capacity(n_r * ANGULAR_STEPS * (1 << n));
    for ir in 0..n_r {
        let r = (ir as f64 + 0.5) * dr;
        for it in 0..ANGULAR_STEPS {
            let th = (it as f64 + 0.5) * dth;
            let kernel = Complex64::new(0.0, -th).exp() * quad_scale;
            let (ct, st) = (th.cos(), th.sin());
            // integer + fractional split of d/h
            let mut base = vec![0isize; n];
            let mut frac = vec![0.0f64; n];
            for a in 0..n {
                let d = r * (ct * omega.om_re[a] + st * omega.om_im[a]);
                let s = d / h;
                let f = s.floor();
                base[a] = f as isize;
                frac[a] = s - f;
            }
            for corner in 0..(1usize << n) {
                let mut wgt = 1.0f64;
                let mut shift = vec![0isize; n];
                for a in 0..n {
                    let hi = (corner >> a) & 1 == 1;
                    // g(x - d): src index = node - (base + corner); shifting by
                    // base+hi corresponds to sampling the corner above/below
                    wgt *= if hi { frac[a] } else { 1.0 - frac[a] };
                    shift[a] = base[a] + hi as isize;
                }
                if wgt != 0.0 {
                    jobs.push(Corner {
                        shift,
                        weight: kernel * wgt,
                    });
                }
            }
        }
    }

    // deterministic parallel reduction: fixed chunking, ordered sum
    let chunk = jobs.len().div_ceil(32).max(1);
    let partials: Vec<Vec<Complex64>> = jobs
        .par_chunks(chunk)
        .map(|batch| {
            let mut acc = vec![Complex64::default(); nodes];
            for job in batch {
                shifted_axpy(grid, job.weight, g, &job.shift, &mut acc);
            }
            acc
        })
        .collect();
    let mut phi = vec![Complex64::default(); nodes];
    for p in partials {
        for (o, v) in phi.iter_mut().zip(p) {
            *o += v;
        }
    }

    let residual = transport_defect(grid, omega, &phi, g);
    let phi_sup = phi.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    Ok(PhaseField {
        grid: *grid,
        direction: omega.clone(),
        data: phi,
        source: g.to_vec(),
        residual,
        sup_ratio: phi_sup / g_sup,
    })
}

/// Max interior defect `|omega . grad phi - g|` with central differences.
fn transport_defect(
    grid: &Grid,
    omega: &ComplexDirection,
    phi: &[Complex64],
    g: &[Complex64],
) -> f64 {
    let grad = gradient(grid, phi);
    let mut max_res = 0.0f64;
    for idx in grid.interior_nodes() {
        let mut v = Complex64::default();
        for a in 0..grid.dim() {
            v += grad[a][idx] * Complex64::new(omega.om_re[a], omega.om_im[a]);
        }
        max_res = max_res.max((v - g[idx]).norm());
    }
    max_res
}

/// Max interior residual of the transport equation
/// `omega . grad phi = -omega . A` for a phase built from the potential.
pub fn transport_residual(
    phi: &PhaseField,
    a: &VectorField,
    omega: &ComplexDirection,
) -> Result<f64> {
    phi.grid.ensure_same(&a.grid)?;
    let target = omega.neg_dot_field(a);
    Ok(transport_defect(&phi.grid, omega, &phi.data, &target))
}

/// Both sides of the phase-cancellation identity
/// `Int omega.A e^{i N^{-1}(-omega.A)} e^{i xi.x} dx = Int omega.A e^{i xi.x} dx`
/// and their gap, by trapezoid quadrature over the support of `A`.
pub fn phase_cancellation_check(
    a: &VectorField,
    omega: &ComplexDirection,
    xi: &[f64],
) -> Result<(Complex64, Complex64, f64)> {
    let grid = a.grid;
    if xi.len() != grid.dim() {
        return Err(CoreError::InvalidFrame("xi dimension mismatch".into()));
    }
    let dot_re: f64 = xi.iter().zip(&omega.om_re).map(|(x, o)| x * o).sum();
    let dot_im: f64 = xi.iter().zip(&omega.om_im).map(|(x, o)| x * o).sum();
    if dot_re.abs() > 1e-10 || dot_im.abs() > 1e-10 {
        return Err(CoreError::OrthogonalityViolated(format!(
            "xi.w_R = {dot_re:e}, xi.w_I = {dot_im:e}"
        )));
    }
    let g = omega.neg_dot_field(a);
    let phi = n_omega_inverse(&grid, omega, &g)?;
    let mut lhs = Complex64::default();
    let mut rhs = Complex64::default();
    for idx in 0..grid.node_count() {
        let w = grid.volume_weight(idx);
        if w == 0.0 {
            continue;
        }
        let oa = -g[idx]; // omega . A
        if oa.norm_sqr() == 0.0 {
            continue;
        }
        let x = grid.coords(idx);
        let xi_x: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
        let osc = Complex64::new(0.0, xi_x).exp();
        lhs += oa * (Complex64::new(0.0, 1.0) * phi.data[idx]).exp() * osc * w;
        rhs += oa * osc * w;
    }
    Ok((lhs, rhs, (lhs - rhs).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::bumps::Bump;

    fn axis_direction() -> ComplexDirection {
        ComplexDirection::new(vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn direction_validation() {
        assert!(ComplexDirection::new(vec![1.0, 0.0, 0.0], vec![0.0, 0.5, 0.0]).is_err());
        assert!(ComplexDirection::new(vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]).is_err());
        let d = 1.0 / 2.0f64.sqrt();
        assert!(ComplexDirection::new(vec![d, d, 0.0], vec![0.0, 0.0, 1.0]).is_ok());
    }

    #[test]
    fn zero_source_gives_zero_phase() {
        let grid = Grid::cube(8, 16).unwrap();
        let g = vec![Complex64::default(); grid.node_count()];
        let phi = n_omega_inverse(&grid, &axis_direction(), &g).unwrap();
        assert!(phi.data.iter().all(|v| v.norm() == 0.0));
        assert_eq!(phi.residual, 0.0);
    }

    #[test]
    fn linearity_in_the_source() {
        let grid = Grid::cube(8, 16).unwrap();
        let bump = Bump {
            center: vec![0.5, 0.45, 0.55],
            radius: 0.25,
            amplitude: 1.0,
            direction: vec![1.0, 0.0, 0.0],
            axis_pair: (0, 1),
        };
        let g: Vec<Complex64> = (0..grid.node_count())
            .map(|i| {
                let x = grid.coords(i);
                Complex64::new(bump.profile(&x), 0.3 * bump.profile(&x))
            })
            .collect();
        let g2: Vec<Complex64> = g.iter().map(|v| v * 2.0).collect();
        let omega = axis_direction();
        let phi = n_omega_inverse(&grid, &omega, &g).unwrap();
        let phi2 = n_omega_inverse(&grid, &omega, &g2).unwrap();
        for (a, b) in phi.data.iter().zip(&phi2.data) {
            assert!((a * 2.0 - b).norm() <= 1e-12 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn transport_pde_residual_second_order() {
        // g = omega . grad(psi) with analytic gradient: the residual
        // omega.grad(phi) - g must shrink ~4x per halving of h
        let bump = Bump {
            center: vec![0.5, 0.5, 0.5],
            radius: 0.3,
            amplitude: 1.0,
            direction: vec![1.0, 0.0, 0.0],
            axis_pair: (0, 1),
        };
        let omega = axis_direction();
        let res_for = |nx: usize| {
            let grid = Grid::cube(nx, 16).unwrap();
            let g: Vec<Complex64> = (0..grid.node_count())
                .map(|i| {
                    let x = grid.coords(i);
                    let gr = bump.profile_grad(&x);
                    omega.dot_real(&gr)
                })
                .collect();
            n_omega_inverse(&grid, &omega, &g).unwrap().residual
        };
        let coarse = res_for(12);
        let fine = res_for(24);
        assert!(
            coarse / fine > 3.0,
            "transport residual decay {coarse:.3e} -> {fine:.3e}"
        );
    }

    #[test]
    fn constant_shift_leaves_residual_unchanged() {
        let grid = Grid::cube(8, 16).unwrap();
        let bump = Bump {
            center: vec![0.5, 0.5, 0.5],
            radius: 0.25,
            amplitude: 0.7,
            direction: vec![1.0, 0.0, 0.0],
            axis_pair: (0, 1),
        };
        let a = crate::field::bumps::make_admissible_potential(
            &grid,
            &crate::field::bumps::BumpRecipe {
                bumps: vec![bump],
                divergence_free: false,
            },
            false,
        )
        .unwrap();
        let omega = axis_direction();
        let g = omega.neg_dot_field(&a);
        let mut phi = n_omega_inverse(&grid, &omega, &g).unwrap();
        let r0 = transport_residual(&phi, &a, &omega).unwrap();
        for v in phi.data.iter_mut() {
            *v += Complex64::new(0.37, -0.21);
        }
        let r1 = transport_residual(&phi, &a, &omega).unwrap();
        assert!((r0 - r1).abs() < 1e-13);
    }

    #[test]
    fn phase_cancellation_trivial_and_orthogonality() {
        let grid = Grid::cube(8, 16).unwrap();
        let zero = VectorField::zeros(grid);
        let omega = axis_direction();
        let (lhs, rhs, gap) = phase_cancellation_check(&zero, &omega, &[0.0; 3]).unwrap();
        assert_eq!(lhs, Complex64::default());
        assert_eq!(rhs, Complex64::default());
        assert_eq!(gap, 0.0);
        // xi with a component along omega_re is rejected
        let err = phase_cancellation_check(&zero, &omega, &[1.0, 0.0, 0.0]);
        assert!(matches!(err, Err(CoreError::OrthogonalityViolated(_))));
    }
}
