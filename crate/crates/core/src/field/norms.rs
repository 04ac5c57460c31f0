//! Discrete norms. Sup-type Sobolev norms reuse the difference stencils of
//! [`crate::field::ops`] and are grid-dependent surrogates; the `H^{-1}`
//! norms are weighted `L^2` norms of the discrete Fourier transform.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::ops::diff_axis;
use crate::field::{CurlField, VectorField};
use crate::grid::Grid;
use crate::numerics::fft::{fft_freqs, NdFft};

/// Norms exposed by `discrete_norm`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormId {
    L2,
    LInf,
    W1Inf,
    HMinus1,
}

impl NormId {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "L2" | "l2" => Ok(NormId::L2),
            "Linf" | "linf" | "LInf" => Ok(NormId::LInf),
            "W1inf" | "w1inf" | "W1Inf" => Ok(NormId::W1Inf),
            "H-1" | "h-1" | "Hminus1" => Ok(NormId::HMinus1),
            other => Err(CoreError::UnknownNorm(other.to_string())),
        }
    }
}

fn ensure_finite(values: impl Iterator<Item = f64>) -> Result<()> {
    for v in values {
        if !v.is_finite() {
            return Err(CoreError::InvalidField("non-finite value in field".into()));
        }
    }
    Ok(())
}

/// Trapezoid `L^2(Omega)` norm of complex node data.
pub fn l2_spatial(grid: &Grid, data: &[Complex64]) -> f64 {
    (0..data.len())
        .map(|i| grid.volume_weight(i) * data[i].norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn linf(data: &[Complex64]) -> f64 {
    data.iter().fold(0.0f64, |m, v| m.max(v.norm()))
}

fn w1inf_spatial(grid: &Grid, data: &[Complex64]) -> f64 {
    let mut m = linf(data);
    for a in 0..grid.dim() {
        m = m.max(linf(&diff_axis(grid, data, a)));
    }
    m
}

/// `H^{-1}(Omega)` norm via the spatial FFT on the periodic extension (fields
/// are compactly supported, so dropping the duplicate endpoint nodes is
/// exact).
pub fn hminus1_spatial(grid: &Grid, data: &[Complex64]) -> f64 {
    let n = grid.dim();
    let nx = grid.nx();
    let dims = vec![nx; n];
    let mut buf = vec![Complex64::default(); nx.pow(n as u32)];
    // gather nodes 0..nx-1 per axis
    for (flat, slot) in buf.iter_mut().enumerate() {
        let mut rest = flat;
        let mut idx = 0usize;
        for a in 0..n {
            let i = rest % nx;
            rest /= nx;
            idx += i * grid.stride(a);
        }
        *slot = data[idx];
    }
    let mut fft = NdFft::new();
    fft.forward(&mut buf, &dims);
    let scale = grid.h().powi(n as i32);
    let freqs = fft_freqs(nx, grid.h());
    let mut acc = 0.0;
    for (flat, v) in buf.iter().enumerate() {
        let mut rest = flat;
        let mut xi2 = 0.0;
        for _ in 0..n {
            let f = freqs[rest % nx];
            xi2 += f * f;
            rest /= nx;
        }
        acc += (v * scale).norm_sqr() / (1.0 + xi2);
    }
    acc.sqrt()
}

/// Norm of a complex spatial field.
pub fn spatial_norm(grid: &Grid, data: &[Complex64], id: NormId) -> Result<f64> {
    ensure_finite(data.iter().map(|v| v.re).chain(data.iter().map(|v| v.im)))?;
    Ok(match id {
        NormId::L2 => l2_spatial(grid, data),
        NormId::LInf => linf(data),
        NormId::W1Inf => w1inf_spatial(grid, data),
        NormId::HMinus1 => hminus1_spatial(grid, data),
    })
}

/// Norm of a real spatial field.
pub fn spatial_norm_real(grid: &Grid, data: &[f64], id: NormId) -> Result<f64> {
    let c: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spatial_norm(grid, &c, id)
}

/// Norm of a real space-time field (time level major layout).
pub fn spacetime_norm_real(grid: &Grid, data: &[f64], id: NormId) -> Result<f64> {
    let c: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spacetime_norm(grid, &c, id)
}

/// Norm of a complex space-time field (time level major layout).
pub fn spacetime_norm(grid: &Grid, data: &[Complex64], id: NormId) -> Result<f64> {
    ensure_finite(data.iter().map(|v| v.re).chain(data.iter().map(|v| v.im)))?;
    let nodes = grid.node_count();
    match id {
        NormId::L2 => {
            let mut acc = 0.0;
            for m in 0..grid.time_levels() {
                let lvl = &data[m * nodes..(m + 1) * nodes];
                let w = grid.time_weight(m);
                acc += w * lvl.iter().enumerate().map(|(i, v)| grid.volume_weight(i) * v.norm_sqr()).sum::<f64>();
            }
            Ok(acc.sqrt())
        }
        NormId::LInf => Ok(linf(data)),
        NormId::W1Inf => {
            let mut best = linf(data);
            for m in 0..grid.time_levels() {
                let lvl = &data[m * nodes..(m + 1) * nodes];
                best = best.max(w1inf_spatial(grid, lvl));
            }
            // forward time differences
            let dt = grid.dt();
            for m in 0..grid.nt() {
                let a = &data[m * nodes..(m + 1) * nodes];
                let b = &data[(m + 1) * nodes..(m + 2) * nodes];
                let d = a
                    .iter()
                    .zip(b)
                    .fold(0.0f64, |mx, (x, y)| mx.max((y - x).norm() / dt));
                best = best.max(d);
            }
            Ok(best)
        }
        NormId::HMinus1 => Ok(hminus1_spacetime(grid, data)),
    }
}

/// `H^{-1}` over the space-time cylinder with weight `<(xi,tau)>^{-1}`.
pub fn hminus1_spacetime(grid: &Grid, data: &[Complex64]) -> f64 {
    let n = grid.dim();
    let nx = grid.nx();
    let nt = grid.nt();
    let nodes = grid.node_count();
    let mut dims = vec![nx; n];
    dims.push(nt);
    let mut buf = vec![Complex64::default(); nx.pow(n as u32) * nt];
    let space = nx.pow(n as u32);
    for flat in 0..buf.len() {
        let m = flat / space;
        let mut rest = flat % space;
        let mut idx = 0usize;
        for a in 0..n {
            let i = rest % nx;
            rest /= nx;
            idx += i * grid.stride(a);
        }
        buf[flat] = data[m * nodes + idx];
    }
    let mut fft = NdFft::new();
    fft.forward(&mut buf, &dims);
    let scale = grid.h().powi(n as i32) * grid.dt();
    let xi_freqs = fft_freqs(nx, grid.h());
    let tau_freqs = fft_freqs(nt, grid.dt());
    let mut acc = 0.0;
    for (flat, v) in buf.iter().enumerate() {
        let m = flat / space;
        let mut rest = flat % space;
        let mut w2 = tau_freqs[m] * tau_freqs[m];
        for _ in 0..n {
            let f = xi_freqs[rest % nx];
            w2 += f * f;
            rest /= nx;
        }
        acc += (v * scale).norm_sqr() / (1.0 + w2);
    }
    (acc / grid.t_horizon()).sqrt()
}

/// Norm of a vector field: sup norms take the max over components, `L^2`-type
/// norms the root of the sum of squares.
pub fn vector_norm(a: &VectorField, id: NormId) -> Result<f64> {
    combine_components(&a.grid, a.comps.iter().map(|c| &c[..]), id)
}

/// Norm of a curl field over its independent components.
pub fn curl_norm(c: &CurlField, id: NormId) -> Result<f64> {
    combine_components(&c.grid, c.comps.iter().map(|f| &f[..]), id)
}

fn combine_components<'a>(
    grid: &Grid,
    comps: impl Iterator<Item = &'a [f64]>,
    id: NormId,
) -> Result<f64> {
    let mut acc = 0.0f64;
    for c in comps {
        let v = spatial_norm_real(grid, c, id)?;
        acc = match id {
            NormId::LInf | NormId::W1Inf => acc.max(v),
            NormId::L2 | NormId::HMinus1 => acc + v * v,
        };
    }
    Ok(match id {
        NormId::LInf | NormId::W1Inf => acc,
        NormId::L2 | NormId::HMinus1 => acc.sqrt(),
    })
}

/// Finite-`p` surrogate of `||A||_{W^{1,p}}`.
pub fn vector_w1p(a: &VectorField, p: f64) -> f64 {
    let grid = a.grid;
    let mut acc = 0.0;
    for c in &a.comps {
        acc += lp_pow(&grid, c, p);
        for ax in 0..grid.dim() {
            acc += lp_pow(&grid, &diff_axis(&grid, c, ax), p);
        }
    }
    acc.powf(1.0 / p)
}

/// Finite-`p` surrogate of `||curl A||_{L^p}`.
pub fn curl_lp(c: &CurlField, p: f64) -> f64 {
    let grid = c.grid;
    c.comps
        .iter()
        .map(|f| lp_pow(&grid, f, p))
        .sum::<f64>()
        .powf(1.0 / p)
}

fn lp_pow(grid: &Grid, data: &[f64], p: f64) -> f64 {
    (0..data.len())
        .map(|i| grid.volume_weight(i) * data[i].abs().powf(p))
        .sum()
}

/// Discrete `H^1(Omega)` norm of a complex spatial field.
pub fn h1_spatial(grid: &Grid, data: &[Complex64]) -> f64 {
    let mut acc = l2_spatial(grid, data).powi(2);
    for a in 0..grid.dim() {
        acc += l2_spatial(grid, &diff_axis(grid, data, a)).powi(2);
    }
    acc.sqrt()
}

/// Discrete `H^2(Omega)` norm of a complex spatial field.
pub fn h2_spatial(grid: &Grid, data: &[Complex64]) -> f64 {
    let mut acc = l2_spatial(grid, data).powi(2);
    for a in 0..grid.dim() {
        let da = diff_axis(grid, data, a);
        acc += l2_spatial(grid, &da).powi(2);
        for b in a..grid.dim() {
            acc += l2_spatial(grid, &diff_axis(grid, &da, b)).powi(2);
        }
    }
    acc.sqrt()
}

/// `L^2(0,T;H^k)` norm of a space-time field for `k = 0, 1, 2`.
pub fn l2t_hk(grid: &Grid, data: &[Complex64], k: usize) -> f64 {
    let nodes = grid.node_count();
    let mut acc = 0.0;
    for m in 0..grid.time_levels() {
        let lvl = &data[m * nodes..(m + 1) * nodes];
        let v = match k {
            0 => l2_spatial(grid, lvl),
            1 => h1_spatial(grid, lvl),
            _ => h2_spatial(grid, lvl),
        };
        acc += grid.time_weight(m) * v * v;
    }
    acc.sqrt()
}

/// `H^j(0,T;H^1)` norm, with time derivatives by difference quotients
/// (centered inside, one-sided at the temporal endpoints).
pub fn hjt_h1(grid: &Grid, data: &[Complex64], j: usize) -> f64 {
    let mut acc = l2t_hk(grid, data, 1).powi(2);
    let mut current = data.to_vec();
    for _ in 0..j {
        current = time_derivative(grid, &current);
        acc += l2t_hk(grid, &current, 1).powi(2);
    }
    acc.sqrt()
}

/// Difference-quotient time derivative of a space-time field.
pub fn time_derivative(grid: &Grid, data: &[Complex64]) -> Vec<Complex64> {
    let nodes = grid.node_count();
    let nt = grid.nt();
    let dt = grid.dt();
    let mut out = vec![Complex64::default(); data.len()];
    for i in 0..nodes {
        out[i] = (data[nodes + i] * 4.0 - data[2 * nodes + i] - data[i] * 3.0) / (2.0 * dt);
        let top = nt * nodes;
        out[top + i] = (data[top + i] * 3.0 - data[top - nodes + i] * 4.0
            + data[top - 2 * nodes + i])
            / (2.0 * dt);
    }
    for m in 1..nt {
        for i in 0..nodes {
            out[m * nodes + i] =
                (data[(m + 1) * nodes + i] - data[(m - 1) * nodes + i]) / (2.0 * dt);
        }
    }
    out
}
