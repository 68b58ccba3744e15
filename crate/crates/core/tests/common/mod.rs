#![allow(dead_code)]
//! Oracles written directly from the map formulas, sharing no code with the
//! crate's orbit machinery.

use henon_skew_core::*;
use num_complex::Complex64 as C;

/// `(x, y) ↦ (y, y² + c − a x)` with the escape handled by the dominant
/// coordinate recursion `ln|y'| = 2 ln|y|` once `|y| > 1e150`.
pub fn quad_green_forward(maps: &[(C, C)], z: C2, depth: usize) -> f64 {
    let (mut x, mut y) = (z.x, z.y);
    let mut scale = 1.0;
    for k in 0..depth {
        let (c, a) = maps[k % maps.len()];
        let ny = y * y + c - a * x;
        x = y;
        y = ny;
        scale *= 0.5;
        let n = (x.norm_sqr() + y.norm_sqr()).sqrt();
        if n > 1e150 {
            // |x| ≤ |y|^{1/2}-ish from here on; ln‖z_j‖ = 2^{j−k} ln|y_k| to 1e-70
            return scale * y.norm().ln().max(x.norm().ln());
        }
    }
    scale * (x.norm_sqr() + y.norm_sqr()).sqrt().ln().max(0.0)
}

/// Inverse `(x, y) ↦ ((x² + c − y)/a, x)`, with `ln|x'| = 2 ln|x| − ln|a|`
/// handled the same way.
pub fn quad_green_backward(maps: &[(C, C)], z: C2, depth: usize) -> f64 {
    let (mut x, mut y) = (z.x, z.y);
    let mut scale = 1.0;
    for k in 0..depth {
        let (c, a) = maps[k % maps.len()];
        let nx = (x * x + c - y) / a;
        y = x;
        x = nx;
        scale *= 0.5;
        let n = (x.norm_sqr() + y.norm_sqr()).sqrt();
        if n > 1e150 {
            let mut lx = x.norm().ln();
            let mut s = scale;
            for j in k + 1..depth {
                let (_, a) = maps[j % maps.len()];
                lx = 2.0 * lx - a.norm().ln();
                s *= 0.5;
            }
            return s * lx;
        }
    }
    scale * (x.norm_sqr() + y.norm_sqr()).sqrt().ln().max(0.0)
}

/// The `c ∈ [−0.1, 0.1]`, `a = 0.2` family `p(y) = y² + λ`.
pub fn c_family() -> HenonFamily {
    HenonFamily::new(vec![HenonFactor::new(2, vec![CoeffMap::var(0)], CoeffMap::real(0.2)).unwrap()]).unwrap()
}

pub fn two_letters() -> BaseSpace {
    BaseSpace::Finite(vec![BasePoint::scalar(-0.1), BasePoint::scalar(0.1)])
}

pub fn cz(re: f64, im: f64) -> C {
    C::new(re, im)
}
