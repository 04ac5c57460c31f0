//! Multilinear interpolation of node data with zero extension outside the
//! unit cube.

use num_complex::Complex64;

use crate::grid::Grid;

/// Evaluate a complex node field at an arbitrary point by multilinear
/// interpolation; points outside `[0,1]^n` blend with the zero extension.
pub fn interp_zero_ext(grid: &Grid, data: &[Complex64], point: &[f64]) -> Complex64 {
    let n = grid.dim();
    debug_assert_eq!(point.len(), n);
    let h = grid.h();
    let nx = grid.nx() as isize;

    // base cell and fractional coordinates
    let mut base = [0isize; 8];
    let mut frac = [0.0f64; 8];
    debug_assert!(n <= 8);
    for a in 0..n {
        let s = point[a] / h;
        let b = s.floor();
        base[a] = b as isize;
        frac[a] = s - b;
        // completely outside the support slab of this axis
        if base[a] < -1 || base[a] > nx {
            return Complex64::default();
        }
    }

    let mut acc = Complex64::default();
    for corner in 0..(1usize << n) {
        let mut weight = 1.0;
        let mut idx = 0usize;
        let mut outside = false;
        for a in 0..n {
            let hi = (corner >> a) & 1 == 1;
            let node = base[a] + hi as isize;
            weight *= if hi { frac[a] } else { 1.0 - frac[a] };
            if node < 0 || node > nx {
                outside = true;
                break;
            }
            idx += node as usize * grid.stride(a);
        }
        if !outside && weight != 0.0 {
            acc += data[idx] * weight;
        }
    }
    acc
}
