use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// A point of C².
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct C2 {
    pub x: Complex64,
    pub y: Complex64,
}

impl C2 {
    pub const ZERO: C2 = C2 {
        x: Complex64::new(0.0, 0.0),
        y: Complex64::new(0.0, 0.0),
    };

    pub const fn new(x: Complex64, y: Complex64) -> Self {
        C2 { x, y }
    }

    /// Point with real coordinates.
    pub const fn real(x: f64, y: f64) -> Self {
        C2::new(Complex64::new(x, 0.0), Complex64::new(y, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr()
    }

    /// Euclidean norm, computed without intermediate overflow.
    pub fn norm(&self) -> f64 {
        let ax = self.x.norm();
        let ay = self.y.norm();
        ax.hypot(ay)
    }

    pub fn dist(&self, other: &C2) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn scale(&self, c: Complex64) -> C2 {
        C2::new(self.x * c, self.y * c)
    }
}

impl Add for C2 {
    type Output = C2;
    fn add(self, o: C2) -> C2 {
        C2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for C2 {
    type Output = C2;
    fn sub(self, o: C2) -> C2 {
        C2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for C2 {
    type Output = C2;
    fn mul(self, s: f64) -> C2 {
        C2::new(self.x * s, self.y * s)
    }
}

/// `log⁺ t = max(log t, 0)`.
pub fn log_plus(t: f64) -> f64 {
    if t > 1.0 {
        t.ln()
    } else {
        0.0
    }
}

/// Numerically stable `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
