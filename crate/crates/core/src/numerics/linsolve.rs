//! Preconditioned conjugate gradients for Hermitian positive definite
//! operators given as matrix-free closures.

use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Hermitian (self-adjoint) operator acting on complex vectors.
pub trait HermitianOp {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
}

/// Left preconditioner approximating the operator inverse; must itself be
/// Hermitian positive definite.
pub trait Preconditioner {
    fn apply(&self, r: &[Complex64], z: &mut [Complex64]);
}

/// Identity preconditioner.
pub struct NoPrecond;

impl Preconditioner for NoPrecond {
    fn apply(&self, r: &[Complex64], z: &mut [Complex64]) {
        z.copy_from_slice(r);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PcgInfo {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Solve `A x = b` for Hermitian positive definite `A`, overwriting `x`
/// (used as the initial guess). Converges when the true relative residual
/// drops below `tol_rel`.
pub fn pcg<A: HermitianOp, P: Preconditioner>(
    op: &A,
    precond: &P,
    b: &[Complex64],
    x: &mut [Complex64],
    tol_rel: f64,
    max_iter: usize,
) -> Result<PcgInfo> {
    let n = op.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);

    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.fill(Complex64::default());
        return Ok(PcgInfo {
            iterations: 0,
            relative_residual: 0.0,
        });
    }

    let mut r = vec![Complex64::default(); n];
    let mut z = vec![Complex64::default(); n];
    let mut ap = vec![Complex64::default(); n];

    op.apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);

    let mut iterations = 0;
    loop {
        let rel = norm(&r) / b_norm;
        if rel <= tol_rel {
            return Ok(PcgInfo {
                iterations,
                relative_residual: rel,
            });
        }
        if iterations >= max_iter {
            return Err(CoreError::SolverBreakdown {
                iterations,
                residual: rel,
                required: tol_rel,
            });
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap.re <= 0.0 || !pap.re.is_finite() {
            return Err(CoreError::SolverBreakdown {
                iterations,
                residual: rel,
                required: tol_rel,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct DiagOp(Vec<f64>);

    impl HermitianOp for DiagOp {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
            for i in 0..x.len() {
                y[i] = x[i] * self.0[i];
            }
        }
    }

    #[test]
    fn solves_diagonal_system() {
        let d: Vec<f64> = (1..=40).map(|i| i as f64).collect();
        let op = DiagOp(d.clone());
        let b: Vec<Complex64> = (0..40)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64).cos()))
            .collect();
        let mut x = vec![Complex64::default(); 40];
        let info = pcg(&op, &NoPrecond, &b, &mut x, 1e-12, 500).unwrap();
        assert!(info.relative_residual <= 1e-12);
        for i in 0..40 {
            assert!((x[i] * d[i] - b[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_rhs_short_circuits() {
        let op = DiagOp(vec![2.0; 5]);
        let b = vec![Complex64::default(); 5];
        let mut x = vec![Complex64::new(1.0, 1.0); 5];
        let info = pcg(&op, &NoPrecond, &b, &mut x, 1e-12, 10).unwrap();
        assert_eq!(info.iterations, 0);
        assert!(x.iter().all(|v| v.norm() == 0.0));
    }
}
