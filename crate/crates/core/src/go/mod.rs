//! Complex frequency frames and geometrical optics machinery.

pub mod multiplier;
pub mod solution;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::transport::ComplexDirection;

/// Hard cap on the modulation parameter: boundary amplitudes grow like
/// `e^{sigma sqrt(n)}`, so this keeps probes representable and the forward
/// systems well conditioned.
pub const SIGMA_CAP: f64 = 12.0;

/// Which of the two paired frequencies a construction refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    One,
    Two,
}

impl Side {
    pub fn tag(&self) -> u8 {
        match self {
            Side::One => 1,
            Side::Two => 2,
        }
    }
}

/// The data `(xi, w_R, w_I, y, sigma, side)` from which the complex
/// frequency is built. `w_R, w_I` and `xi` are mutually orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyFrame {
    pub xi: Vec<f64>,
    pub om_re: Vec<f64>,
    pub om_im: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: f64,
    pub side: Side,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Deterministic orthonormal completion: run over the canonical basis and
/// keep the first vectors with a non-negligible residual after projecting
/// out everything accepted so far.
fn complete_orthonormal(fixed: &[Vec<f64>], n: usize, needed: usize) -> Result<Vec<Vec<f64>>> {
    let mut accepted: Vec<Vec<f64>> = fixed.to_vec();
    let mut produced = Vec::new();
    for axis in 0..n {
        if produced.len() == needed {
            break;
        }
        let mut cand = vec![0.0; n];
        cand[axis] = 1.0;
        for basis in &accepted {
            let proj = dot(&cand, basis);
            for (c, b) in cand.iter_mut().zip(basis) {
                *c -= proj * b;
            }
        }
        let len = norm(&cand);
        if len > 1e-8 {
            for c in cand.iter_mut() {
                *c /= len;
            }
            accepted.push(cand.clone());
            produced.push(cand);
        }
    }
    if produced.len() < needed {
        return Err(CoreError::InvalidFrame(format!(
            "could not complete {needed} orthonormal directions in dimension {n}"
        )));
    }
    Ok(produced)
}

fn validate_common(xi: &[f64], y: &[f64], sigma: f64) -> Result<()> {
    let n = xi.len();
    if n < 3 {
        return Err(CoreError::InvalidFrame(format!(
            "dimension {n} < 3: three mutually orthogonal directions are required"
        )));
    }
    if y.len() != n {
        return Err(CoreError::InvalidFrame("y dimension mismatch".into()));
    }
    if norm(y) >= 1.0 {
        return Err(CoreError::FrequencyRejected(format!(
            "|y| = {} is not inside the unit ball",
            norm(y)
        )));
    }
    if !(sigma > norm(xi) / 2.0) {
        return Err(CoreError::FrequencyRejected(format!(
            "sigma = {sigma} must exceed |xi|/2 = {}",
            norm(xi) / 2.0
        )));
    }
    if sigma > SIGMA_CAP {
        return Err(CoreError::FrequencyRejected(format!(
            "sigma = {sigma} exceeds the cap {SIGMA_CAP}"
        )));
    }
    Ok(())
}

/// Build a frame with the canonical deterministic completion of `xi`.
pub fn build_frame(xi: &[f64], y: &[f64], sigma: f64, side: Side) -> Result<FrequencyFrame> {
    validate_common(xi, y, sigma)?;
    let n = xi.len();
    let xin = norm(xi);
    let fixed: Vec<Vec<f64>> = if xin > 0.0 {
        vec![xi.iter().map(|v| v / xin).collect()]
    } else {
        Vec::new()
    };
    let mut dirs = complete_orthonormal(&fixed, n, 2)?;
    let om_im = dirs.pop().unwrap();
    let om_re = dirs.pop().unwrap();
    FrequencyFrame::checked(xi.to_vec(), om_re, om_im, y.to_vec(), sigma, side)
}

/// Build a frame with a prescribed imaginary axis (the reconstruction picks
/// `w_I` along `xi_j e_k - xi_k e_j`); `w_R` comes from the canonical
/// completion.
pub fn build_frame_with_imaginary_axis(
    xi: &[f64],
    om_im_dir: &[f64],
    y: &[f64],
    sigma: f64,
    side: Side,
) -> Result<FrequencyFrame> {
    validate_common(xi, y, sigma)?;
    let n = xi.len();
    let len = norm(om_im_dir);
    if len < 1e-8 {
        return Err(CoreError::InvalidFrame(
            "prescribed imaginary axis is numerically zero".into(),
        ));
    }
    let om_im: Vec<f64> = om_im_dir.iter().map(|v| v / len).collect();
    let xin = norm(xi);
    if xin > 0.0 && (dot(xi, &om_im) / xin).abs() > 1e-10 {
        return Err(CoreError::OrthogonalityViolated(
            "prescribed imaginary axis is not orthogonal to xi".into(),
        ));
    }
    let mut fixed = vec![om_im.clone()];
    if xin > 0.0 {
        fixed.push(xi.iter().map(|v| v / xin).collect());
    }
    let om_re = complete_orthonormal(&fixed, n, 1)?.pop().unwrap();
    FrequencyFrame::checked(xi.to_vec(), om_re, om_im, y.to_vec(), sigma, side)
}

impl FrequencyFrame {
    fn checked(
        xi: Vec<f64>,
        om_re: Vec<f64>,
        om_im: Vec<f64>,
        y: Vec<f64>,
        sigma: f64,
        side: Side,
    ) -> Result<Self> {
        let frame = Self {
            xi,
            om_re,
            om_im,
            y,
            sigma,
            side,
        };
        frame.validate()?;
        Ok(frame)
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    pub fn validate(&self) -> Result<()> {
        let tol = 1e-12;
        for (name, v) in [("w_R", &self.om_re), ("w_I", &self.om_im)] {
            if (norm(v) - 1.0).abs() > tol {
                return Err(CoreError::InvalidFrame(format!("|{name}| = {}", norm(v))));
            }
        }
        let checks = [
            ("w_R.w_I", dot(&self.om_re, &self.om_im)),
            ("xi.w_R", dot(&self.xi, &self.om_re)),
            ("xi.w_I", dot(&self.xi, &self.om_im)),
        ];
        for (name, v) in checks {
            if v.abs() > tol * (1.0 + norm(&self.xi)) {
                return Err(CoreError::OrthogonalityViolated(format!("{name} = {v:e}")));
            }
        }
        Ok(())
    }

    /// Flip the real axis: the second probe of every +/- pair.
    pub fn flipped(&self) -> Self {
        Self {
            xi: self.xi.clone(),
            om_re: self.om_re.iter().map(|v| -v).collect(),
            om_im: self.om_im.clone(),
            y: self.y.clone(),
            sigma: self.sigma,
            side: self.side,
        }
    }

    pub fn with_side(&self, side: Side) -> Self {
        let mut f = self.clone();
        f.side = side;
        f
    }

    /// The unit complex direction `w*` of this side:
    /// side 1: `i w_I + (-xi/2s + sqrt(1 - |xi|^2/4s^2) w_R)`,
    /// side 2: `-i w_I + (+xi/2s + sqrt(1 - |xi|^2/4s^2) w_R)`.
    pub fn unit_direction(&self) -> ComplexDirection {
        let n = self.dim();
        let s = self.sigma;
        let xin2 = dot(&self.xi, &self.xi);
        let root = (1.0 - xin2 / (4.0 * s * s)).sqrt();
        let (xi_sign, im_sign) = match self.side {
            Side::One => (-1.0, 1.0),
            Side::Two => (1.0, -1.0),
        };
        let re: Vec<f64> = (0..n)
            .map(|a| xi_sign * self.xi[a] / (2.0 * s) + root * self.om_re[a])
            .collect();
        let im: Vec<f64> = self.om_im.iter().map(|v| im_sign * v).collect();
        ComplexDirection::new(re, im).expect("frame construction guarantees a valid direction")
    }
}

/// The complex frequency `rho = sigma w* + y` with cached scalar invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFrequency {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// Cached `rho . rho` (bilinear, not sesquilinear).
    pub rho_dot_rho: Complex64,
}

impl ComplexFrequency {
    pub fn dim(&self) -> usize {
        self.re.len()
    }

    /// `rho . v` for a real vector.
    pub fn dot_real(&self, v: &[f64]) -> Complex64 {
        Complex64::new(dot(&self.re, v), dot(&self.im, v))
    }

    /// Componentwise complex value.
    pub fn component(&self, a: usize) -> Complex64 {
        Complex64::new(self.re[a], self.im[a])
    }

    /// `conj(rho)` componentwise.
    pub fn conj(&self) -> Self {
        let re = self.re.clone();
        let im: Vec<f64> = self.im.iter().map(|v| -v).collect();
        let mut out = Self {
            re,
            im,
            rho_dot_rho: Complex64::default(),
        };
        out.rho_dot_rho = out.self_dot();
        out
    }

    fn self_dot(&self) -> Complex64 {
        let rr = dot(&self.re, &self.re) - dot(&self.im, &self.im);
        let ri = 2.0 * dot(&self.re, &self.im);
        Complex64::new(rr, ri)
    }

    /// The modulation strength `sigma = |Im rho|` (exact for `y` real).
    pub fn sigma(&self) -> f64 {
        norm(&self.im)
    }
}

/// `rho = sigma w* + y` for the frame's side.
pub fn make_rho(frame: &FrequencyFrame) -> ComplexFrequency {
    let dir = frame.unit_direction();
    let n = frame.dim();
    let re: Vec<f64> = (0..n)
        .map(|a| frame.sigma * dir.om_re[a] + frame.y[a])
        .collect();
    let im: Vec<f64> = (0..n).map(|a| frame.sigma * dir.om_im[a]).collect();
    let mut rho = ComplexFrequency {
        re,
        im,
        rho_dot_rho: Complex64::default(),
    };
    rho.rho_dot_rho = rho.self_dot();
    rho
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_completion_matches_convention() {
        let f = build_frame(&[0.0, 0.0, 1.0], &[0.0; 3], 2.0, Side::Two).unwrap();
        assert_eq!(f.om_re, vec![1.0, 0.0, 0.0]);
        assert_eq!(f.om_im, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn sigma_at_half_xi_is_rejected() {
        let err = build_frame(&[0.0, 0.0, 1.0], &[0.0; 3], 0.5, Side::One);
        assert!(matches!(err, Err(CoreError::FrequencyRejected(_))));
        assert!(build_frame(&[0.0, 0.0, 1.0], &[0.0; 3], 13.0, Side::One).is_err());
    }

    #[test]
    fn rho_two_explicit_value() {
        // sigma = 1, xi = e3, y = 0, side 2: rho = (sqrt(3)/2, -i, 1/2)
        let f = build_frame(&[0.0, 0.0, 1.0], &[0.0; 3], 1.0, Side::Two).unwrap();
        let rho = make_rho(&f);
        let s3 = 3.0f64.sqrt() / 2.0;
        assert!((rho.component(0) - Complex64::new(s3, 0.0)).norm() < 1e-14);
        assert!((rho.component(1) - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((rho.component(2) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!(rho.rho_dot_rho.norm() < 1e-14);
    }

    #[test]
    fn pair_identities() {
        let xi = [0.0, 0.0, 1.0];
        let f2 = build_frame(&xi, &[0.0; 3], 1.0, Side::Two).unwrap();
        let f1 = f2.with_side(Side::One);
        let r1 = make_rho(&f1);
        let r2 = make_rho(&f2);
        let r1c = r1.conj();
        for a in 0..3 {
            let gap = r2.component(a) - r1c.component(a) - Complex64::new(xi[a], 0.0);
            assert!(gap.norm() < 1e-14, "component {a}: {gap}");
        }
        // with y along xi: rho2.rho2 - conj(rho1).conj(rho1) = 2 y.xi
        let y = [0.0, 0.0, 0.3];
        let g2 = build_frame(&xi, &y, 1.0, Side::Two).unwrap();
        let g1 = g2.with_side(Side::One);
        let d = make_rho(&g2).rho_dot_rho - make_rho(&g1).conj().rho_dot_rho;
        assert!((d - Complex64::new(0.6, 0.0)).norm() < 1e-12, "2 y.xi = {d}");
    }

    #[test]
    fn random_frames_satisfy_invariants() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..100 {
            let xi: Vec<f64> = (0..3).map(|_| rng.random_range(-6.0..6.0)).collect();
            let xin = norm(&xi);
            let sigma = rng.random_range((xin / 2.0 + 0.05)..SIGMA_CAP);
            let scale = rng.random_range(0.0..0.95);
            let mut y: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let ylen = norm(&y).max(1e-9);
            y.iter_mut().for_each(|v| *v *= scale / ylen);
            let f2 = build_frame(&xi, &y, sigma, Side::Two).unwrap();
            f2.validate().unwrap();
            let f1 = f2.with_side(Side::One);
            let r1 = make_rho(&f1);
            let r2 = make_rho(&f2);
            // rho.rho = 0 when y = 0
            let f2y0 = build_frame(&xi, &[0.0; 3], sigma, Side::Two).unwrap();
            assert!(make_rho(&f2y0).rho_dot_rho.norm() <= 1e-12);
            // rho2 - conj(rho1) = xi
            let r1c = r1.conj();
            for a in 0..3 {
                let gap = r2.component(a) - r1c.component(a) - Complex64::new(xi[a], 0.0);
                assert!(gap.norm() <= 1e-12);
            }
            // rho2.rho2 - conj(rho1.rho1) = 2 y.xi
            let d = r2.rho_dot_rho - r1.conj().rho_dot_rho;
            let want = 2.0 * dot(&y, &xi);
            assert!((d - Complex64::new(want, 0.0)).norm() <= 1e-12);
        }
    }

    #[test]
    fn prescribed_imaginary_axis() {
        let xi = [std::f64::consts::TAU, 0.0, 0.0];
        // lemma choice for (j,k) = (0,1): xi_0 e_1 - xi_1 e_0 = tau e_1
        let dir = [0.0, std::f64::consts::TAU, 0.0];
        let f = build_frame_with_imaginary_axis(&xi, &dir, &[0.0; 3], 8.0, Side::Two).unwrap();
        assert_eq!(f.om_im, vec![0.0, 1.0, 0.0]);
        f.validate().unwrap();
        // non-orthogonal prescription is rejected
        let bad = build_frame_with_imaginary_axis(&xi, &[1.0, 1.0, 0.0], &[0.0; 3], 8.0, Side::Two);
        assert!(bad.is_err());
    }
}
