//! The symbol-inverse operator `E_rho` for `P_rho(D) = i d_t + Delta - 2i rho . grad`,
//! realized as a regularized Fourier multiplier on a doubled periodic
//! space-time box, and the Picard fixed point that upgrades it to the
//! magnetic operator.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::norms::l2t_hk;
use crate::field::VectorField;
use crate::go::ComplexFrequency;
use crate::grid::Grid;
use crate::numerics::fft::{fft_freqs, NdFft};

/// Periodic extension box: twice the domain per axis and twice the horizon.
pub struct BoxEmbedding {
    pub grid: Grid,
    pub dims: Vec<usize>,
    pub(crate) space_len: usize,
}

impl BoxEmbedding {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.dim();
        let mut dims = vec![2 * grid.nx(); n];
        dims.push(2 * grid.nt());
        let space_len = dims[..n].iter().product();
        Self {
            grid: *grid,
            dims,
            space_len,
        }
    }

    pub fn len(&self) -> usize {
        self.space_len * self.dims[self.grid.dim()]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Zero-pad a space-time field (time level major over grid nodes) into
    /// the box.
    pub fn embed(&self, data: &[Complex64]) -> Vec<Complex64> {
        let grid = &self.grid;
        let n = grid.dim();
        let nodes = grid.node_count();
        let bx = 2 * grid.nx();
        let mut out = vec![Complex64::default(); self.len()];
        for m in 0..=grid.nt() {
            let lvl = &data[m * nodes..(m + 1) * nodes];
            for idx in 0..nodes {
                let multi = grid.decode(idx);
                let mut flat = 0usize;
                let mut stride = 1usize;
                for a in 0..n {
                    flat += multi[a] * stride;
                    stride *= bx;
                }
                out[m * self.space_len + flat] = lvl[idx];
            }
        }
        out
    }

    /// Restrict a box field back to the grid nodes and time levels.
    pub fn restrict(&self, data: &[Complex64]) -> Vec<Complex64> {
        let grid = &self.grid;
        let n = grid.dim();
        let nodes = grid.node_count();
        let bx = 2 * grid.nx();
        let mut out = vec![Complex64::default(); nodes * grid.time_levels()];
        for m in 0..=grid.nt() {
            for idx in 0..nodes {
                let multi = grid.decode(idx);
                let mut flat = 0usize;
                let mut stride = 1usize;
                for a in 0..n {
                    flat += multi[a] * stride;
                    stride *= bx;
                }
                out[m * nodes + idx] = data[m * self.space_len + flat];
            }
        }
        out
    }

    /// Frequencies of the box lattice: one vector per spatial axis plus the
    /// temporal one.
    pub fn freqs(&self) -> (Vec<f64>, Vec<f64>) {
        let xi = fft_freqs(2 * self.grid.nx(), self.grid.h());
        let tau = fft_freqs(2 * self.grid.nt(), self.grid.dt());
        (xi, tau)
    }

    /// Symbol `p_rho(xi', tau') = -tau' - |xi'|^2 + 2 rho . xi'` per box mode.
    pub fn symbol(&self, rho: &ComplexFrequency, flat: usize, xi: &[f64], tau: &[f64]) -> Complex64 {
        let n = self.grid.dim();
        let bx = 2 * self.grid.nx();
        let m = flat / self.space_len;
        let mut rest = flat % self.space_len;
        let mut xi2 = 0.0;
        let mut rho_xi = Complex64::default();
        for a in 0..n {
            let f = xi[rest % bx];
            rest /= bx;
            xi2 += f * f;
            rho_xi += rho.component(a) * f;
        }
        Complex64::new(-tau[m] - xi2, 0.0) + 2.0 * rho_xi
    }
}

/// Result of one multiplier inversion.
pub struct MultiplierResult {
    /// `E_rho f` on grid nodes and time levels.
    pub ef: Vec<Complex64>,
    /// `||P_rho(D) E f - f||_{L^2(Q)} / ||f||_{L^2(Q)}`: non-zero only
    /// through the modes under the regularization floor.
    pub residual: f64,
    /// Number of lattice modes where the shift was applied.
    pub regularized_modes: usize,
}

/// Box-level inversion: divide by the regularized symbol in place. Returns
/// the residual spectrum `(p/d - 1) fhat` and the number of floored modes.
pub(crate) fn invert_on_box(
    embedding: &BoxEmbedding,
    rho: &ComplexFrequency,
    fbox: &mut [Complex64],
    eps: f64,
    fft: &mut NdFft,
) -> Result<(Vec<Complex64>, usize)> {
    let sigma = rho.sigma();
    let (xi, tau) = embedding.freqs();
    let floor = eps * sigma;
    fft.forward(fbox, &embedding.dims);
    if eps <= 0.0 {
        let vanishing =
            (0..fbox.len()).any(|k| embedding.symbol(rho, k, &xi, &tau).norm() < 1e-12);
        if vanishing {
            return Err(CoreError::FrequencyRejected(
                "eps = 0 with a vanishing symbol on the grid".into(),
            ));
        }
    }
    let mut regularized = 0usize;
    let mut rhat = vec![Complex64::default(); fbox.len()];
    for k in 0..fbox.len() {
        let p = embedding.symbol(rho, k, &xi, &tau);
        let d = if floor > 0.0 && p.norm() < floor {
            regularized += 1;
            let s = if p.im >= 0.0 { 1.0 } else { -1.0 };
            p + Complex64::new(0.0, s * floor)
        } else {
            p
        };
        let e = fbox[k] / d;
        rhat[k] = p * e - fbox[k];
        fbox[k] = e;
    }
    fft.inverse(fbox, &embedding.dims);
    fft.inverse(&mut rhat, &embedding.dims);
    Ok((rhat, regularized))
}

/// Apply `E_rho` with regularization floor `eps * sigma`: modes with
/// `|p_rho| < eps*sigma` divide by `p_rho + i eps sigma sign(Im p_rho)`
/// instead. Input and output live on grid nodes/time levels; the operator
/// acts on the zero-padded periodic box.
pub fn multiplier_inverse_e(
    grid: &Grid,
    rho: &ComplexFrequency,
    f: &[Complex64],
    eps: f64,
) -> Result<MultiplierResult> {
    if f.len() != grid.node_count() * grid.time_levels() {
        return Err(CoreError::InvalidField("source length mismatch".into()));
    }
    let embedding = BoxEmbedding::new(grid);
    let mut fbox = embedding.embed(f);
    let mut fft = NdFft::new();
    let (rbox, regularized) = invert_on_box(&embedding, rho, &mut fbox, eps, &mut fft)?;
    let ef = embedding.restrict(&fbox);
    let r = embedding.restrict(&rbox);

    let f_norm = l2t_hk(grid, f, 0);
    let r_norm = l2t_hk(grid, &r, 0);
    let residual = if f_norm > 0.0 { r_norm / f_norm } else { r_norm };
    Ok(MultiplierResult {
        ef,
        residual,
        regularized_modes: regularized,
    })
}

/// Apply `P_rho(D)` spectrally (exact on the discrete Fourier basis of the
/// box).
pub fn apply_symbol(grid: &Grid, rho: &ComplexFrequency, data: &[Complex64]) -> Vec<Complex64> {
    let embedding = BoxEmbedding::new(grid);
    let (xi, tau) = embedding.freqs();
    let mut hat = embedding.embed(data);
    let mut fft = NdFft::new();
    fft.forward(&mut hat, &embedding.dims);
    for k in 0..hat.len() {
        hat[k] *= embedding.symbol(rho, k, &xi, &tau);
    }
    fft.inverse(&mut hat, &embedding.dims);
    embedding.restrict(&hat)
}

/// Spectral gradient of a box field along a spatial axis (in place capable,
/// but returns a fresh buffer for clarity).
pub(crate) fn box_gradient(
    embedding: &BoxEmbedding,
    data: &[Complex64],
    axis: usize,
    fft: &mut NdFft,
) -> Vec<Complex64> {
    let (xi, _) = embedding.freqs();
    let bx = 2 * embedding.grid.nx();
    let mut hat = data.to_vec();
    fft.forward(&mut hat, &embedding.dims);
    for (k, v) in hat.iter_mut().enumerate() {
        let mut rest = k % embedding.space_len;
        for _ in 0..axis {
            rest /= bx;
        }
        let f = xi[rest % bx];
        *v *= Complex64::new(0.0, f);
    }
    fft.inverse(&mut hat, &embedding.dims);
    hat
}

/// Zero-extend the potential onto the box (spatial only; constant along the
/// box time axis).
pub(crate) fn box_potential_component(embedding: &BoxEmbedding, a: &VectorField, axis: usize) -> Vec<f64> {
    let grid = &embedding.grid;
    let n = grid.dim();
    let bx = 2 * grid.nx();
    let mut out = vec![0.0; embedding.space_len];
    for idx in 0..grid.node_count() {
        let multi = grid.decode(idx);
        let mut flat = 0usize;
        let mut stride = 1usize;
        for ax in 0..n {
            flat += multi[ax] * stride;
            stride *= bx;
        }
        out[flat] = a.comps[axis][idx];
    }
    out
}

/// Coupling `s = f - 2iA.grad g - 2 (rho.A) g` evaluated on the box in the
/// same Fourier calculus as the inversion.
fn picard_coupling(
    embedding: &BoxEmbedding,
    rho: &ComplexFrequency,
    a_box: &[Vec<f64>],
    g_box: &[Complex64],
    f_box: &[Complex64],
    fft: &mut NdFft,
) -> Vec<Complex64> {
    let n = embedding.grid.dim();
    let steps = embedding.dims[n];
    let mut s = f_box.to_vec();
    for (axis, comp) in a_box.iter().enumerate() {
        if comp.iter().all(|&v| v == 0.0) {
            continue;
        }
        let dg = box_gradient(embedding, g_box, axis, fft);
        let rho_c = rho.component(axis);
        for m in 0..steps {
            let base = m * embedding.space_len;
            for j in 0..embedding.space_len {
                let av = comp[j];
                if av != 0.0 {
                    s[base + j] -= Complex64::new(0.0, 2.0 * av) * dg[base + j]
                        + 2.0 * rho_c * av * g_box[base + j];
                }
            }
        }
    }
    s
}

/// Output of the Picard fixed point.
pub struct PicardResult {
    /// `G f` restricted to grid nodes and time levels.
    pub g: Vec<Complex64>,
    /// `||(i d_t + Delta_rho + 2iA.grad_rho) G f - f||_{L^2} / ||f||_{L^2}`
    /// with the free part applied through the regularized symbol, i.e. the
    /// discrete operator the inversion actually realizes.
    pub residual: f64,
    /// Same residual with the raw symbol `p_rho`; carries the content of the
    /// modes under the regularization floor (the characteristic set the
    /// shifted contour would have avoided). Reported, not asserted.
    pub residual_raw_symbol: f64,
    pub iterations: usize,
}

/// Fixed-point iteration for `(i d_t + Delta_rho + 2iA . grad_rho) G f = f`:
/// `g <- E(f - 2iA.grad g - 2 rho.A g)`, carried out entirely on the
/// periodic box; stops when the relative update drops below `1e-8`.
pub fn picard_iterate_g(
    grid: &Grid,
    rho: &ComplexFrequency,
    a: &VectorField,
    f: &[Complex64],
    eps: f64,
    max_iter: usize,
) -> Result<PicardResult> {
    grid.ensure_same(&a.grid)?;
    let embedding = BoxEmbedding::new(grid);
    let mut fft = NdFft::new();
    let f_box = embedding.embed(f);
    let a_box: Vec<Vec<f64>> = (0..grid.dim())
        .map(|ax| box_potential_component(&embedding, a, ax))
        .collect();
    let a_zero = a_box.iter().all(|c| c.iter().all(|&v| v == 0.0));

    let mut g_box = vec![Complex64::default(); f_box.len()];
    let mut prev_update = f64::INFINITY;
    let mut growth_streak = 0usize;
    let mut iterations = 0usize;
    for iter in 0..max_iter {
        iterations = iter + 1;
        let mut s = picard_coupling(&embedding, rho, &a_box, &g_box, &f_box, &mut fft);
        invert_on_box(&embedding, rho, &mut s, eps, &mut fft)?;
        let next = s;
        let mut upd2 = 0.0;
        let mut norm2 = 0.0;
        for k in 0..g_box.len() {
            upd2 += (next[k] - g_box[k]).norm_sqr();
            norm2 += next[k].norm_sqr();
        }
        let update = upd2.sqrt();
        let scale = norm2.sqrt().max(1e-300);
        g_box = next;
        if a_zero || update / scale < 1e-8 {
            break;
        }
        if update > prev_update {
            growth_streak += 1;
            if growth_streak >= 2 {
                return Err(CoreError::NonContraction {
                    factor: update / prev_update,
                });
            }
        } else {
            growth_streak = 0;
        }
        prev_update = update;
    }

    let residual = box_residual(&embedding, rho, &a_box, &g_box, &f_box, &mut fft, eps);
    let residual_raw_symbol =
        box_residual(&embedding, rho, &a_box, &g_box, &f_box, &mut fft, 0.0);
    Ok(PicardResult {
        g: embedding.restrict(&g_box),
        residual,
        residual_raw_symbol,
        iterations,
    })
}

/// `||P(D) g + coupling(g) - f||_{L^2(box)} / ||f||_{L^2(box)}`, applying the
/// free part through the symbol (regularized where `eps > 0`).
fn box_residual(
    embedding: &BoxEmbedding,
    rho: &ComplexFrequency,
    a_box: &[Vec<f64>],
    g_box: &[Complex64],
    f_box: &[Complex64],
    fft: &mut NdFft,
    eps: f64,
) -> f64 {
    let s = picard_coupling(embedding, rho, a_box, g_box, f_box, fft);
    let (xi, tau) = embedding.freqs();
    let floor = eps * rho.sigma();
    let mut pg = g_box.to_vec();
    fft.forward(&mut pg, &embedding.dims);
    for (k, v) in pg.iter_mut().enumerate() {
        let p = embedding.symbol(rho, k, &xi, &tau);
        let d = if floor > 0.0 && p.norm() < floor {
            let sgn = if p.im >= 0.0 { 1.0 } else { -1.0 };
            p + Complex64::new(0.0, sgn * floor)
        } else {
            p
        };
        *v *= d;
    }
    fft.inverse(&mut pg, &embedding.dims);
    let mut res2 = 0.0;
    let mut f2 = 0.0;
    for k in 0..pg.len() {
        res2 += (pg[k] - s[k]).norm_sqr();
        f2 += f_box[k].norm_sqr();
    }
    if f2 > 0.0 {
        (res2 / f2).sqrt()
    } else {
        res2.sqrt()
    }
}

/// `L^2(0,T;H^1)` norm helper re-exported for sweep code.
pub fn l2h1(grid: &Grid, data: &[Complex64]) -> f64 {
    l2t_hk(grid, data, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::go::{build_frame, make_rho, Side};

    fn test_rho(sigma: f64) -> ComplexFrequency {
        let f = build_frame(&[0.0, 0.0, 1.0], &[0.0; 3], sigma, Side::Two).unwrap();
        make_rho(&f)
    }

    #[test]
    fn zero_source_maps_to_zero() {
        let grid = Grid::cube(8, 16).unwrap();
        let f = vec![Complex64::default(); grid.node_count() * grid.time_levels()];
        let out = multiplier_inverse_e(&grid, &test_rho(4.0), &f, 1e-3).unwrap();
        assert!(out.ef.iter().all(|v| v.norm() == 0.0));
        assert_eq!(out.residual, 0.0);
    }

    #[test]
    fn single_mode_is_divided_exactly() {
        // a pure mode of the periodic box is an eigenvector of the discrete
        // multiplier: E f = f / p_rho(xi0, tau0) exactly
        let grid = Grid::cube(8, 16).unwrap();
        let rho = test_rho(4.0);
        let embedding = BoxEmbedding::new(&grid);
        let (xi, tau) = embedding.freqs();
        let bx = 2 * grid.nx();
        // pick the box mode with indices (2, 0, 1) in space and 3 in time
        let kxi = [xi[2], xi[0], xi[1]];
        let ktau = tau[3];
        let mut fbox = vec![Complex64::default(); embedding.len()];
        for m in 0..2 * grid.nt() {
            let t = m as f64 * grid.dt();
            for j in 0..embedding.space_len {
                let mut rest = j;
                let mut phase = ktau * t;
                for (a, &kv) in kxi.iter().enumerate() {
                    let i = rest % bx;
                    rest /= bx;
                    let _ = a;
                    phase += kv * (i as f64 * grid.h());
                }
                fbox[m * embedding.space_len + j] = Complex64::new(0.0, phase).exp();
            }
        }
        let mut xi2 = 0.0;
        let mut rho_xi = Complex64::default();
        for a in 0..3 {
            xi2 += kxi[a] * kxi[a];
            rho_xi += rho.component(a) * kxi[a];
        }
        let p = Complex64::new(-ktau - xi2, 0.0) + 2.0 * rho_xi;
        assert!(p.norm() > 1e-3 * rho.sigma());
        let mut ebox = fbox.clone();
        let mut fft = NdFft::new();
        let (rbox, _) = invert_on_box(&embedding, &rho, &mut ebox, 1e-3, &mut fft).unwrap();
        for (e, v) in ebox.iter().zip(&fbox) {
            assert!((e - v / p).norm() < 1e-9, "{e} vs {}", v / p);
        }
        assert!(rbox.iter().all(|r| r.norm() < 1e-9));
    }

    #[test]
    fn sigma_sweep_decay_slope() {
        // ||E f||_{L^2 H^1} should decay roughly like 1/sigma
        let grid = Grid::cube(8, 16).unwrap();
        let bump = crate::field::bumps::Bump {
            center: vec![0.5; 3],
            radius: 0.3,
            amplitude: 1.0,
            direction: vec![1.0, 0.0, 0.0],
            axis_pair: (0, 1),
        };
        let f: Vec<Complex64> = (0..grid.node_count() * grid.time_levels())
            .map(|k| {
                let m = k / grid.node_count();
                let idx = k % grid.node_count();
                let x = grid.coords(idx);
                let t = grid.time(m);
                Complex64::new(
                    bump.profile(&x) * (1.0 + 0.5 * (std::f64::consts::TAU * t).cos()),
                    0.0,
                )
            })
            .collect();
        let sigmas = [4.0, 8.0, 12.0];
        let norms: Vec<f64> = sigmas
            .iter()
            .map(|&s| {
                let out = multiplier_inverse_e(&grid, &test_rho(s), &f, 1e-3).unwrap();
                l2h1(&grid, &out.ef)
            })
            .collect();
        // fitted slope of log norm vs log sigma
        let lx: Vec<f64> = sigmas.iter().map(|s| s.ln()).collect();
        let ly: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
        let mx = lx.iter().sum::<f64>() / 3.0;
        let my = ly.iter().sum::<f64>() / 3.0;
        let slope = lx
            .iter()
            .zip(&ly)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / lx.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
        assert!(slope <= -0.8, "decay slope {slope}");
    }

    #[test]
    fn picard_with_zero_potential_is_single_application() {
        let grid = Grid::cube(8, 16).unwrap();
        let rho = test_rho(4.0);
        let f: Vec<Complex64> = (0..grid.node_count() * grid.time_levels())
            .map(|k| Complex64::new((k as f64 * 0.01).sin(), 0.0))
            .collect();
        let a = VectorField::zeros(grid);
        let out = picard_iterate_g(&grid, &rho, &a, &f, 1e-3, 10).unwrap();
        assert_eq!(out.iterations, 1);
        let e = multiplier_inverse_e(&grid, &rho, &f, 1e-3).unwrap().ef;
        for (x, y) in out.g.iter().zip(&e) {
            assert!((x - y).norm() < 1e-12);
        }
        // f = 0 fixed point
        let zf = vec![Complex64::default(); f.len()];
        let gz = picard_iterate_g(&grid, &rho, &a, &zf, 1e-3, 10).unwrap();
        assert!(gz.g.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn picard_small_potential_residual() {
        let grid = Grid::cube(8, 16).unwrap();
        let rho = test_rho(8.0);
        let recipe = crate::field::bumps::BumpRecipe {
            bumps: vec![crate::field::bumps::Bump {
                center: vec![0.5; 3],
                radius: 0.25,
                amplitude: 0.05,
                direction: vec![1.0, 0.0, 0.0],
                axis_pair: (0, 1),
            }],
            divergence_free: false,
        };
        let a =
            crate::field::bumps::make_admissible_potential(&grid, &recipe, false).unwrap();
        // modulated bump: nearly no content on the regularized modes
        let bump = crate::field::bumps::Bump {
            center: vec![0.5; 3],
            radius: 0.3,
            amplitude: 1.0,
            direction: vec![1.0, 0.0, 0.0],
            axis_pair: (0, 1),
        };
        let f: Vec<Complex64> = (0..grid.node_count() * grid.time_levels())
            .map(|k| {
                let idx = k % grid.node_count();
                let x = grid.coords(idx);
                let phase = std::f64::consts::PI * (2.0 * x[0] + 4.0 * x[1]);
                Complex64::new(0.0, phase).exp() * bump.profile(&x)
            })
            .collect();
        let out = picard_iterate_g(&grid, &rho, &a, &f, 1e-3, 50).unwrap();
        assert!(
            out.residual <= 1e-4,
            "picard residual {:.3e} after {} iterations",
            out.residual,
            out.iterations
        );
        // the raw-symbol residual carries the floored characteristic modes;
        // it is reported, finite, and larger
        assert!(out.residual_raw_symbol.is_finite());
        assert!(out.residual_raw_symbol >= out.residual);
    }
}
