//! Thin n-dimensional wrapper around `rustfft`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::collections::HashMap;
use std::sync::Arc;

/// Multi-dimensional complex FFT with cached plans. Axis 0 is the fastest
/// varying index of the flat buffer.
pub struct NdFft {
    planner: FftPlanner<f64>,
    forward: HashMap<usize, Arc<dyn rustfft::Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn rustfft::Fft<f64>>>,
}

impl NdFft {
    pub fn new() -> Self {
        Self {
            planner: FftPlanner::new(),
            forward: HashMap::new(),
            inverse: HashMap::new(),
        }
    }

    fn plan(&mut self, len: usize, inverse: bool) -> Arc<dyn rustfft::Fft<f64>> {
        let cache = if inverse {
            &mut self.inverse
        } else {
            &mut self.forward
        };
        if let Some(p) = cache.get(&len) {
            return p.clone();
        }
        let p = if inverse {
            self.planner.plan_fft_inverse(len)
        } else {
            self.planner.plan_fft_forward(len)
        };
        cache.insert(len, p.clone());
        p
    }

    /// In-place forward transform (no normalization), kernel `e^{-i2pi jk/N}`
    /// along every axis.
    pub fn forward(&mut self, data: &mut [Complex64], dims: &[usize]) {
        self.transform(data, dims, false);
    }

    /// In-place inverse transform, normalized by `1/prod(dims)` so that
    /// `inverse(forward(x)) == x`.
    pub fn inverse(&mut self, data: &mut [Complex64], dims: &[usize]) {
        self.transform(data, dims, true);
        let scale = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&mut self, data: &mut [Complex64], dims: &[usize], inverse: bool) {
        let total: usize = dims.iter().product();
        assert_eq!(total, data.len(), "dims do not match buffer length");
        let mut stride = 1usize;
        for &len in dims {
            let plan = self.plan(len, inverse);
            let mut line = vec![Complex64::default(); len];
            // iterate all 1-d lines along this axis
            let outer = total / len;
            for o in 0..outer {
                // base index: expand `o` skipping the current axis
                let block = o / stride;
                let offset = o % stride;
                let base = block * stride * len + offset;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = data[base + j * stride];
                }
                plan.process(&mut line);
                for (j, l) in line.iter().enumerate() {
                    data[base + j * stride] = *l;
                }
            }
            stride *= len;
        }
    }
}

impl Default for NdFft {
    fn default() -> Self {
        Self::new()
    }
}

/// Angular frequencies `2 pi k / (len * spacing)` in FFT storage order
/// (non-negative first, then negative).
pub fn fft_freqs(len: usize, spacing: f64) -> Vec<f64> {
    let period = len as f64 * spacing;
    (0..len)
        .map(|j| {
            let k = if j <= len / 2 {
                j as f64
            } else {
                j as f64 - len as f64
            };
            2.0 * std::f64::consts::PI * k / period
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_3d() {
        let dims = [4usize, 6, 5];
        let total: usize = dims.iter().product();
        let orig: Vec<Complex64> = (0..total)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        let mut fft = NdFft::new();
        fft.forward(&mut data, &dims);
        fft.inverse(&mut data, &dims);
        for (a, b) in orig.iter().zip(&data) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_on_its_bin() {
        // f(x) = e^{i 2 pi 2 x / L} on an 8-point axis must transform to a
        // single non-zero coefficient at k = 2.
        let nxs = 8usize;
        let dims = [nxs];
        let mut data: Vec<Complex64> = (0..nxs)
            .map(|j| {
                let x = j as f64 / nxs as f64;
                Complex64::new(0.0, 2.0 * std::f64::consts::PI * 2.0 * x).exp()
            })
            .collect();
        let mut fft = NdFft::new();
        fft.forward(&mut data, &dims);
        for (k, v) in data.iter().enumerate() {
            let expect = if k == 2 { nxs as f64 } else { 0.0 };
            assert!((v.norm() - expect).abs() < 1e-10, "bin {k}: {v}");
        }
    }

    #[test]
    fn freqs_wrap_to_negative() {
        let f = fft_freqs(8, 0.125);
        assert!((f[0]).abs() < 1e-15);
        assert!((f[1] - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((f[7] + 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
