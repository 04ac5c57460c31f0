//! Compactly supported bump recipes with analytic derivatives, used to
//! realize admissible coefficient fields and manufactured solutions.
//!
//! The radial profile is `chi(x) = (1 - |x-c|^2/r^2)^4` inside the ball of
//! radius `r` and zero outside; as a polynomial in `u = |x-c|^2/r^2` it is
//! `C^3` across the support edge, which is what the admissible class needs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::field::{ScalarSpaceTimeField, VectorField};
use crate::grid::Grid;

/// Safe upper bound for any third directional derivative of the unit profile.
const PROFILE_D3_BOUND: f64 = 400.0;
/// Safe upper bound for any fourth directional derivative of the unit profile.
const PROFILE_D4_BOUND: f64 = 3200.0;

/// One bump: center, radius, amplitude and either a constant direction
/// (plain mode) or an axis pair (divergence-free mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
    /// Direction of the field in plain mode.
    pub direction: Vec<f64>,
    /// Axis pair `(j,k)` used to derive a solenoidal field from the stream
    /// potential in divergence-free mode.
    pub axis_pair: (usize, usize),
}

impl Bump {
    /// Profile value `(1-u)^4`, `u = |x-c|^2/r^2`, clamped to zero outside.
    fn u(&self, x: &[f64]) -> f64 {
        let mut d2 = 0.0;
        for (a, &c) in self.center.iter().enumerate() {
            let d = x[a] - c;
            d2 += d * d;
        }
        d2 / (self.radius * self.radius)
    }

    pub fn profile(&self, x: &[f64]) -> f64 {
        let u = self.u(x);
        if u >= 1.0 {
            0.0
        } else {
            let w = 1.0 - u;
            w * w * w * w
        }
    }

    /// Analytic gradient of the profile.
    pub fn profile_grad(&self, x: &[f64]) -> Vec<f64> {
        let u = self.u(x);
        let n = self.center.len();
        if u >= 1.0 {
            return vec![0.0; n];
        }
        let w = 1.0 - u;
        let dp = -4.0 * w * w * w; // d/du (1-u)^4
        let r2 = self.radius * self.radius;
        (0..n)
            .map(|a| dp * 2.0 * (x[a] - self.center[a]) / r2)
            .collect()
    }

    /// Analytic Laplacian of the profile.
    pub fn profile_laplacian(&self, x: &[f64]) -> f64 {
        let u = self.u(x);
        let n = self.center.len() as f64;
        if u >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - u;
        let dp = -4.0 * w * w * w;
        let d2p = 12.0 * w * w;
        let r2 = self.radius * self.radius;
        // Lap chi = p'(u) Lap u + p''(u) |grad u|^2, with Lap u = 2n/r^2 and
        // |grad u|^2 = 4 u / r^2.
        dp * 2.0 * n / r2 + d2p * 4.0 * u / r2
    }

    fn ensure_interior(&self, n: usize) -> Result<()> {
        if self.center.len() != n {
            return Err(CoreError::InvalidField(format!(
                "bump center has dimension {} on an n = {n} grid",
                self.center.len()
            )));
        }
        if !(self.radius > 0.0) || !self.amplitude.is_finite() {
            return Err(CoreError::InvalidField(
                "bump radius must be positive and amplitude finite".into(),
            ));
        }
        for (a, &c) in self.center.iter().enumerate() {
            if c <= 0.0 || c >= 1.0 {
                return Err(CoreError::SupportTouchesBoundary(format!(
                    "center component {a} = {c} is not strictly interior"
                )));
            }
            if c - self.radius <= 0.0 || c + self.radius >= 1.0 {
                return Err(CoreError::SupportTouchesBoundary(format!(
                    "bump at {:?} with radius {} reaches the boundary along axis {a}",
                    self.center, self.radius
                )));
            }
        }
        Ok(())
    }
}

/// A list of bumps plus the divergence-free flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpRecipe {
    pub bumps: Vec<Bump>,
    pub divergence_free: bool,
}

impl BumpRecipe {
    pub fn empty() -> Self {
        Self {
            bumps: Vec::new(),
            divergence_free: false,
        }
    }

    /// Analytic value of the recipe's vector field at a point.
    pub fn eval(&self, x: &[f64], n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for b in &self.bumps {
            if self.divergence_free {
                // A = amp * r * (d_k psi e_j - d_j psi e_k), psi = profile
                let g = b.profile_grad(x);
                let (j, k) = b.axis_pair;
                let s = b.amplitude * b.radius;
                v[j] += s * g[k];
                v[k] -= s * g[j];
            } else {
                let chi = b.profile(x);
                for a in 0..n {
                    v[a] += b.amplitude * b.direction[a] * chi;
                }
            }
        }
        v
    }

    /// Upper bound on `|d^3 A|` over the cube, from the analytic derivatives
    /// of the profile (conservative constants, see the unit test).
    pub fn third_derivative_bound(&self) -> f64 {
        self.bumps
            .iter()
            .map(|b| {
                let amp = b.amplitude.abs();
                if self.divergence_free {
                    // components carry one profile derivative already
                    amp * b.radius * PROFILE_D4_BOUND / b.radius.powi(4)
                } else {
                    let dir = b
                        .direction
                        .iter()
                        .fold(0.0f64, |acc, d| acc.max(d.abs()));
                    amp * dir * PROFILE_D3_BOUND / b.radius.powi(3)
                }
            })
            .sum()
    }

    /// Random admissible recipe; centers and radii keep the support strictly
    /// interior.
    pub fn random(rng: &mut impl Rng, n: usize, bumps: usize, amplitude: f64) -> Self {
        let mut list = Vec::with_capacity(bumps);
        for _ in 0..bumps {
            let radius = rng.random_range(0.12..0.22);
            let center: Vec<f64> = (0..n)
                .map(|_| rng.random_range((radius + 0.05)..(1.0 - radius - 0.05)))
                .collect();
            let mut direction: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-9);
            direction.iter_mut().for_each(|d| *d /= norm);
            let j = rng.random_range(0..n);
            let mut k = rng.random_range(0..n - 1);
            if k >= j {
                k += 1;
            }
            let (j, k) = if j < k { (j, k) } else { (k, j) };
            list.push(Bump {
                center,
                radius,
                amplitude: rng.random_range(0.3..1.0) * amplitude,
                direction,
                axis_pair: (j, k),
            });
        }
        Self {
            bumps: list,
            divergence_free: false,
        }
    }
}

/// Realize an admissible magnetic potential from a bump recipe. With the
/// divergence-free flag the field is derived from stream potentials, so its
/// continuous divergence vanishes identically and the discrete divergence is
/// bounded by the central-difference truncation error.
pub fn make_admissible_potential(
    grid: &Grid,
    recipe: &BumpRecipe,
    divergence_free: bool,
) -> Result<VectorField> {
    let n = grid.dim();
    for b in &recipe.bumps {
        b.ensure_interior(n)?;
        if !divergence_free && b.direction.len() != n {
            return Err(CoreError::InvalidField(format!(
                "bump direction has dimension {} on an n = {n} grid",
                b.direction.len()
            )));
        }
        let (j, k) = b.axis_pair;
        if divergence_free && (j >= k || k >= n) {
            return Err(CoreError::InvalidField(format!(
                "axis pair ({j},{k}) is not an ordered pair below n = {n}"
            )));
        }
    }
    let effective = BumpRecipe {
        bumps: recipe.bumps.clone(),
        divergence_free,
    };
    let field = VectorField::from_fn(*grid, |x| effective.eval(x, n));
    debug_assert!(field.is_admissible());
    Ok(field)
}

/// Separable admissible space-time potential `q(x,t) = bump(x) * profile(t)`.
pub fn separable_potential(
    grid: &Grid,
    bump: &Bump,
    time_profile: impl Fn(f64) -> f64,
) -> Result<ScalarSpaceTimeField> {
    bump.ensure_interior(grid.dim())?;
    Ok(ScalarSpaceTimeField::from_fn(*grid, |x, t| {
        bump.amplitude * bump.profile(x) * time_profile(t)
    }))
}
