//! Discrete differential operators: second-order central differences in the
//! interior, second-order one-sided stencils on the faces.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::{
    CurlField, HodgeExponent, HodgeResult, ScalarField, VectorField,
};
use crate::grid::Grid;
use crate::numerics::dst::DirichletSpectral;

/// Scalar types the difference stencils operate on.
pub trait LinScalar:
    Copy
    + Default
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<f64, Output = Self>
{
}

impl LinScalar for f64 {}
impl LinScalar for Complex64 {}

/// First derivative along `axis` on the full grid: central differences at
/// inner nodes, one-sided second order on the two faces of the axis.
pub fn diff_axis<T: LinScalar>(grid: &Grid, data: &[T], axis: usize) -> Vec<T> {
    let s = grid.stride(axis);
    let nx = grid.nx();
    let inv2h = 1.0 / (2.0 * grid.h());
    let mut out = vec![T::default(); data.len()];
    for base in grid.axis_lines(axis) {
        // one-sided at the ends
        out[base] = (data[base] * (-3.0) + data[base + s] * 4.0 - data[base + 2 * s]) * inv2h;
        let top = base + nx * s;
        out[top] = (data[top] * 3.0 - data[top - s] * 4.0 + data[top - 2 * s]) * inv2h;
        for i in 1..nx {
            let idx = base + i * s;
            out[idx] = (data[idx + s] - data[idx - s]) * inv2h;
        }
    }
    out
}

/// Gradient of a scalar field as per-axis derivative arrays.
pub fn gradient<T: LinScalar>(grid: &Grid, data: &[T]) -> Vec<Vec<T>> {
    (0..grid.dim()).map(|a| diff_axis(grid, data, a)).collect()
}

/// Discrete divergence of a vector field.
pub fn divergence(a: &VectorField) -> ScalarField {
    let grid = a.grid;
    let mut out = ScalarField::zeros(grid);
    for axis in 0..grid.dim() {
        let d = diff_axis(&grid, &a.comps[axis], axis);
        for (o, v) in out.data.iter_mut().zip(d) {
            *o += v;
        }
    }
    out
}

/// Discrete curl: `sigma_{j,k} = d_j a_k - d_k a_j`, stored antisymmetrically.
pub fn curl(a: &VectorField) -> CurlField {
    let grid = a.grid;
    let mut out = CurlField::zeros(grid);
    // derivative of every component along every axis, reused across pairs
    let derivs: Vec<Vec<Vec<f64>>> = (0..grid.dim())
        .map(|comp| {
            (0..grid.dim())
                .map(|axis| diff_axis(&grid, &a.comps[comp], axis))
                .collect()
        })
        .collect();
    for slot in 0..out.pairs.len() {
        let (j, k) = out.pairs[slot];
        let dj_ak = &derivs[k][j];
        let dk_aj = &derivs[j][k];
        let comp = &mut out.comps[slot];
        for i in 0..comp.len() {
            comp[i] = dj_ak[i] - dk_aj[i];
        }
    }
    out
}

/// 7-point Laplacian at interior nodes (boundary rows left zero).
pub fn laplacian_interior(grid: &Grid, data: &[Complex64]) -> Vec<Complex64> {
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let n = grid.dim();
    let mut out = vec![Complex64::default(); data.len()];
    for idx in grid.interior_nodes() {
        let mut acc = data[idx] * (-2.0 * n as f64);
        for a in 0..n {
            let s = grid.stride(a);
            acc += data[idx + s] + data[idx - s];
        }
        out[idx] = acc * inv_h2;
    }
    out
}

/// Magnetic Laplacian `Delta_A u = Delta u + i sum_a (A_a D_a u + D_a(A_a u))
/// - |A|^2 u` at interior nodes, in the symmetrized form whose interior matrix
/// is exactly Hermitian for real `A`. Differs from the textbook expansion
/// `Delta + 2iA.grad + i div A - |A|^2` by `O(h^2)`.
pub fn apply_magnetic_laplacian(
    grid: &Grid,
    a: Option<&VectorField>,
    data: &[Complex64],
) -> Vec<Complex64> {
    let mut out = laplacian_interior(grid, data);
    let Some(a) = a else {
        return out;
    };
    let n = grid.dim();
    let inv2h = 1.0 / (2.0 * grid.h());
    let i_unit = Complex64::new(0.0, 1.0);
    for idx in grid.interior_nodes() {
        let mut mag = Complex64::default();
        let mut a2 = 0.0;
        for ax in 0..n {
            let s = grid.stride(ax);
            let comp = &a.comps[ax];
            // A_a D_a u + D_a (A_a u), central differences
            let du = (data[idx + s] - data[idx - s]) * inv2h;
            let dau = (data[idx + s] * comp[idx + s] - data[idx - s] * comp[idx - s]) * inv2h;
            mag += du * comp[idx] + dau;
            a2 += comp[idx] * comp[idx];
        }
        out[idx] += i_unit * mag - data[idx] * a2;
    }
    out
}

/// Max interior residual of the gauge conjugation identity
/// `e^{-i phi} Delta_A (e^{i phi} u) = Delta_{A + grad phi} u`.
pub fn gauge_conjugation_residual(
    a: &VectorField,
    phi: &ScalarField,
    u: &[Complex64],
) -> Result<f64> {
    let grid = a.grid;
    grid.ensure_same(&phi.grid)?;
    if u.len() != grid.node_count() {
        return Err(CoreError::InvalidField(
            "state length does not match grid".into(),
        ));
    }
    for &b in &grid.boundary_nodes() {
        if phi.data[b].abs() > 1e-12 {
            return Err(CoreError::InvalidField(
                "gauge function phi must vanish on the boundary".into(),
            ));
        }
    }
    let phase: Vec<Complex64> = phi
        .data
        .iter()
        .map(|&p| Complex64::new(0.0, p).exp())
        .collect();
    let eiu: Vec<Complex64> = u.iter().zip(&phase).map(|(v, p)| v * p).collect();
    let lhs_raw = apply_magnetic_laplacian(&grid, Some(a), &eiu);

    let grad_phi = gradient(&grid, &phi.data);
    let mut shifted = a.clone();
    for (ax, g) in grad_phi.iter().enumerate() {
        for i in 0..shifted.comps[ax].len() {
            shifted.comps[ax][i] += g[i];
        }
    }
    shifted.recompute_support();
    let rhs = apply_magnetic_laplacian(&grid, Some(&shifted), u);

    let mut max_res = 0.0f64;
    for idx in grid.interior_nodes() {
        let lhs = lhs_raw[idx] * phase[idx].conj();
        max_res = max_res.max((lhs - rhs[idx]).norm());
    }
    Ok(max_res)
}

/// Hodge splitting `A = A' + grad phi` with `phi` solving the Dirichlet
/// Poisson problem `Lap phi = div A`, solved directly in the sine basis.
pub fn hodge_project(a: &VectorField, p: HodgeExponent) -> Result<HodgeResult> {
    let grid = a.grid;
    p.validate(grid.dim())?;
    if !a.is_admissible() {
        return Err(CoreError::InvalidField(
            "hodge_project requires A to vanish on the boundary".into(),
        ));
    }

    let div_a = divergence(a);
    let interior = grid.interior_nodes();
    let rhs: Vec<Complex64> = interior
        .iter()
        .map(|&i| Complex64::new(div_a.data[i], 0.0))
        .collect();
    let spectral = DirichletSpectral::new(&grid);
    let sol = spectral.solve_poisson(&rhs);

    let mut phi = ScalarField::zeros(grid);
    for (k, &idx) in interior.iter().enumerate() {
        phi.data[idx] = sol[k].re;
    }

    // residual of the 7-point Laplacian against the right-hand side
    let phi_c: Vec<Complex64> = phi.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let lap = laplacian_interior(&grid, &phi_c);
    let mut res2 = 0.0;
    let mut rhs2 = 0.0;
    for (k, &idx) in interior.iter().enumerate() {
        res2 += (lap[idx] - rhs[k]).norm_sqr();
        rhs2 += rhs[k].norm_sqr();
    }
    let poisson_residual = if rhs2 > 0.0 {
        (res2 / rhs2).sqrt()
    } else {
        res2.sqrt()
    };
    DirichletSpectral::check_residual(poisson_residual, 1e-10)?;

    let grad_phi = gradient(&grid, &phi.data);
    let mut a_prime = a.clone();
    for ax in 0..grid.dim() {
        for i in 0..a_prime.comps[ax].len() {
            a_prime.comps[ax][i] -= grad_phi[ax][i];
        }
    }
    a_prime.recompute_support();

    let div_ap = divergence(&a_prime);
    let max_div_a_prime = interior
        .iter()
        .fold(0.0f64, |acc, &i| acc.max(div_ap.data[i].abs()));

    let curl_ap = curl(&a_prime);
    let (num, den, p_exponent) = match p {
        HodgeExponent::Infinity => (
            super::norms::vector_norm(&a_prime, super::norms::NormId::W1Inf)?,
            super::norms::curl_norm(&curl_ap, super::norms::NormId::LInf)?,
            f64::INFINITY,
        ),
        HodgeExponent::Finite(pv) => (
            super::norms::vector_w1p(&a_prime, pv),
            super::norms::curl_lp(&curl_ap, pv),
            pv,
        ),
    };
    let curl_control_ratio = if den > 0.0 { num / den } else { f64::NAN };

    Ok(HodgeResult {
        phi,
        a_prime,
        max_div_a_prime,
        curl_control_ratio,
        poisson_residual,
        p_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::bumps::{make_admissible_potential, Bump, BumpRecipe};

    fn grid() -> Grid {
        Grid::cube(16, 16).unwrap()
    }

    #[test]
    fn curl_of_zero_is_zero() {
        let a = VectorField::zeros(grid());
        let c = curl(&a);
        assert!(c.comps.iter().all(|f| f.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn curl_of_discrete_gradient_vanishes_identically() {
        // central-difference operators commute, so curl(grad psi) = 0 exactly
        // at interior nodes for any psi
        let g = grid();
        let psi = ScalarField::from_fn(g, |x| {
            x[0] * x[0] * x[1] + 0.3 * x[2] * x[1] * x[1] + x[0] * x[2]
        });
        let grad = gradient(&g, &psi.data);
        let mut a = VectorField::zeros(g);
        a.comps = grad;
        a.recompute_support();
        let c = curl(&a);
        // interior of the interior: one-sided stencils at faces do not commute
        // with central ones, so restrict to nodes at distance >= 2
        for idx in 0..g.node_count() {
            let multi = g.decode(idx);
            if multi.iter().any(|&i| i < 2 || i > g.nx() - 2) {
                continue;
            }
            for slot in 0..c.pairs.len() {
                assert!(
                    c.comps[slot][idx].abs() < 1e-11,
                    "curl grad != 0 at {multi:?}"
                );
            }
        }
    }

    #[test]
    fn curl_antisymmetry_is_exact() {
        let g = grid();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut a = VectorField::zeros(g);
        for c in a.comps.iter_mut() {
            for v in c.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        let c = curl(&a);
        for idx in [0, 100, 2000] {
            for j in 0..3 {
                for k in 0..3 {
                    assert_eq!(c.get(j, k, idx), -c.get(k, j, idx));
                }
            }
        }
    }

    #[test]
    fn rotation_field_has_constant_curl_in_flat_region() {
        // A = (-x2, x1, 0) * cutoff has sigma_{1,2} = 2*cutoff where the
        // cutoff is flat; error O(h^2) elsewhere
        let g = grid();
        // plateau cutoff: 1 inside radius 0.2, smooth decay to 0 at 0.45
        let plateau = |x: &[f64]| {
            let r = x.iter().map(|&c| (c - 0.5) * (c - 0.5)).sum::<f64>().sqrt();
            if r <= 0.2 {
                1.0
            } else if r >= 0.45 {
                0.0
            } else {
                let v = (r - 0.2) / 0.25;
                let w = 1.0 - v * v;
                w * w * w * w
            }
        };
        let a = VectorField::from_fn(g, |x| {
            let chi = plateau(x);
            vec![-(x[1] - 0.5) * chi, (x[0] - 0.5) * chi, 0.0]
        });
        let c = curl(&a);
        let comp = c.component(0, 1).unwrap();
        // inside the plateau the discrete curl of the linear field is exact
        let center = g.encode(&[8, 8, 8]);
        assert!(
            (comp[center] - 2.0).abs() < 1e-12,
            "sigma_12 at center = {}",
            comp[center]
        );
        let near = g.encode(&[9, 8, 8]);
        assert!((comp[near] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn divergence_of_linear_field() {
        let g = grid();
        let a = VectorField::from_fn(g, |x| vec![x[0], 0.0, 0.0]);
        let d = divergence(&a);
        for idx in g.interior_nodes() {
            assert!((d.data[idx] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_free_recipe_meets_truncation_bound() {
        let g = grid();
        let recipe = BumpRecipe {
            bumps: vec![Bump {
                center: vec![0.5, 0.45, 0.55],
                radius: 0.25,
                amplitude: 0.4,
                direction: vec![1.0, 0.0, 0.0],
                axis_pair: (0, 2),
            }],
            divergence_free: true,
        };
        let a = make_admissible_potential(&g, &recipe, true).unwrap();
        let d = divergence(&a);
        let max_div = g
            .interior_nodes()
            .iter()
            .fold(0.0f64, |acc, &i| acc.max(d.data[i].abs()));
        let bound = 4.0 * g.h() * g.h() * recipe.third_derivative_bound();
        assert!(
            max_div <= bound,
            "max |div A| = {max_div:.3e} exceeds 4h^2 * D3 = {bound:.3e}"
        );
    }

    #[test]
    fn hodge_on_divergence_free_field_returns_it() {
        let g = grid();
        let recipe = BumpRecipe {
            bumps: vec![Bump {
                center: vec![0.5, 0.5, 0.5],
                radius: 0.3,
                amplitude: 0.5,
                direction: vec![1.0, 0.0, 0.0],
                axis_pair: (0, 1),
            }],
            divergence_free: true,
        };
        let a = make_admissible_potential(&g, &recipe, true).unwrap();
        let res = hodge_project(&a, HodgeExponent::Infinity).unwrap();
        let max_phi = res.phi.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        // rhs is the O(h^2) discrete divergence, so phi is O(h^2) small
        assert!(max_phi < 4.0 * g.h() * g.h(), "max|phi| = {max_phi:.3e}");
        assert!(res.poisson_residual <= 1e-10);
    }

    #[test]
    fn hodge_on_pure_gradient_returns_zero_a_prime() {
        // A = grad(psi) for compactly supported psi: A' vanishes up to the
        // commutator of the discrete operators, which is O(h^2)
        let max_ap_for = |nx: usize| {
            let g = Grid::cube(nx, 16).unwrap();
            let bump = Bump {
                center: vec![0.5; 3],
                radius: 0.35,
                amplitude: 0.3,
                direction: vec![0.0; 3],
                axis_pair: (0, 1),
            };
            let psi = ScalarField::from_fn(g, |x| bump.amplitude * bump.profile(x));
            let mut a = VectorField::zeros(g);
            a.comps = gradient(&g, &psi.data);
            a.recompute_support();
            let res = hodge_project(&a, HodgeExponent::Infinity).unwrap();
            res.a_prime
                .comps
                .iter()
                .flat_map(|c| c.iter())
                .fold(0.0f64, |m, &v| m.max(v.abs()))
        };
        let coarse = max_ap_for(16);
        let fine = max_ap_for(32);
        assert!(
            coarse / fine > 3.0,
            "pure-gradient residual not second order: {coarse:.3e} -> {fine:.3e}"
        );
        // |grad psi| peaks around 1.6, so this is ~15% at 16^3 and second order
        assert!(coarse < 0.25, "max|A'| = {coarse:.3e} too large at 16^3");
    }

    #[test]
    fn hodge_reconstruction_and_curl_invariance() {
        let g = grid();
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let recipe = BumpRecipe::random(&mut rng, 3, 2, 0.5);
        let a = make_admissible_potential(&g, &recipe, false).unwrap();
        let res = hodge_project(&a, HodgeExponent::Infinity).unwrap();
        // A' + grad phi reproduces A
        let grad_phi = gradient(&g, &res.phi.data);
        let mut max_err = 0.0f64;
        for ax in 0..3 {
            for i in 0..g.node_count() {
                let back = res.a_prime.comps[ax][i] + grad_phi[ax][i];
                max_err = max_err.max((back - a.comps[ax][i]).abs());
            }
        }
        assert!(max_err < 1e-10, "reconstruction error {max_err:.3e}");
        // discrete curl annihilates the discrete gradient away from faces
        let ca = curl(&a);
        let cap = curl(&res.a_prime);
        let mut max_gap = 0.0f64;
        for idx in 0..g.node_count() {
            let multi = g.decode(idx);
            if multi.iter().any(|&i| i < 2 || i > g.nx() - 2) {
                continue;
            }
            for slot in 0..ca.pairs.len() {
                max_gap = max_gap.max((ca.comps[slot][idx] - cap.comps[slot][idx]).abs());
            }
        }
        assert!(max_gap < 1e-9, "curl changed by {max_gap:.3e}");
    }

    #[test]
    fn gauge_residual_trivial_cases() {
        let g = grid();
        let a = VectorField::zeros(g);
        let phi = ScalarField::zeros(g);
        let u: Vec<Complex64> = (0..g.node_count())
            .map(|i| Complex64::new((i as f64 * 0.01).sin(), (i as f64 * 0.02).cos()))
            .collect();
        assert_eq!(gauge_conjugation_residual(&a, &phi, &u).unwrap(), 0.0);
        let zero_u = vec![Complex64::default(); g.node_count()];
        let bump = Bump {
            center: vec![0.5; 3],
            radius: 0.3,
            amplitude: 0.2,
            direction: vec![1.0, 0.0, 0.0],
            axis_pair: (0, 1),
        };
        let phi2 = ScalarField::from_fn(g, |x| bump.amplitude * bump.profile(x));
        assert_eq!(
            gauge_conjugation_residual(&a, &phi2, &zero_u).unwrap(),
            0.0
        );
    }

    #[test]
    fn gauge_residual_second_order() {
        // residual halves by ~4x when h halves
        let bump = Bump {
            center: vec![0.5; 3],
            radius: 0.35,
            amplitude: 0.5,
            direction: vec![1.0, 0.0, 0.0],
            axis_pair: (0, 1),
        };
        let res_for = |nx: usize| {
            let g = Grid::cube(nx, 16).unwrap();
            let a = VectorField::zeros(g);
            let phi = ScalarField::from_fn(g, |x| bump.amplitude * bump.profile(x));
            let u: Vec<Complex64> = (0..g.node_count())
                .map(|i| {
                    let x = g.coords(i);
                    let r2 = x.iter().map(|&c| (c - 0.5) * (c - 0.5)).sum::<f64>();
                    Complex64::new((-8.0 * r2).exp(), 0.0)
                })
                .collect();
            gauge_conjugation_residual(&a, &phi, &u).unwrap()
        };
        let r16 = res_for(16);
        let r32 = res_for(32);
        assert!(
            r16 / r32 > 3.0,
            "gauge residual decay {r16:.3e} -> {r32:.3e} (factor {})",
            r16 / r32
        );
    }
}
