//! Overflow-free orbit representation.
//!
//! Orbits of Hénon maps grow like `10^(d^n)`, so after a handful of steps the
//! coordinates no longer fit in an `f64`. Above [`LOG_SWITCH`] each
//! coordinate is carried as `ln|w|` plus a unit phase.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::family::{Factor, HenonMap};
use crate::point::{log_add_exp, C2};

/// `ln(1e100)`: explicit points above this norm switch to log form.
pub const LOG_SWITCH: f64 = 230.258_509_299_404_57;
/// A step is done in log form when `d_j · ln‖z‖` could exceed this.
const EXPLICIT_LIMIT: f64 = 650.0;

/// A complex number stored as `e^{ln_abs} · phase` with `|phase| = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogComplex {
    pub ln_abs: f64,
    pub phase: Complex64,
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex {
        ln_abs: f64::NEG_INFINITY,
        phase: Complex64::new(1.0, 0.0),
    };

    pub fn from_complex(w: Complex64) -> Self {
        let r = w.norm();
        if r == 0.0 {
            LogComplex::ZERO
        } else {
            LogComplex {
                ln_abs: r.ln(),
                phase: w / r,
            }
        }
    }

    pub fn to_complex(self) -> Complex64 {
        self.phase * self.ln_abs.exp()
    }

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    pub fn mul(self, o: LogComplex) -> Self {
        if self.is_zero() || o.is_zero() {
            return LogComplex::ZERO;
        }
        LogComplex {
            ln_abs: self.ln_abs + o.ln_abs,
            phase: renormalize(self.phase * o.phase),
        }
    }

    pub fn mul_complex(self, c: Complex64) -> Self {
        self.mul(LogComplex::from_complex(c))
    }

    pub fn neg(self) -> Self {
        LogComplex {
            ln_abs: self.ln_abs,
            phase: -self.phase,
        }
    }

    pub fn add(self, o: LogComplex) -> Self {
        let (big, small) = if self.ln_abs >= o.ln_abs { (self, o) } else { (o, self) };
        if small.is_zero() {
            return big;
        }
        // big · (1 + ρ) with |ρ| ≤ 1
        let rho = small.phase * big.phase.conj() * (small.ln_abs - big.ln_abs).exp();
        let w = Complex64::new(1.0, 0.0) + rho;
        let r = w.norm();
        if r == 0.0 {
            return LogComplex::ZERO;
        }
        LogComplex {
            ln_abs: big.ln_abs + r.ln(),
            phase: renormalize(big.phase * (w / r)),
        }
    }

    pub fn sub(self, o: LogComplex) -> Self {
        self.add(o.neg())
    }
}

fn renormalize(p: Complex64) -> Complex64 {
    let r = p.norm();
    if r > 0.0 {
        p / r
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// A point of C² in explicit or log-scaled form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OrbitState {
    Explicit(C2),
    Log { x: LogComplex, y: LogComplex },
}

impl OrbitState {
    pub fn new(z: C2) -> Self {
        OrbitState::Explicit(z)
    }

    pub fn to_log(self) -> Self {
        match self {
            OrbitState::Explicit(z) => OrbitState::Log {
                x: LogComplex::from_complex(z.x),
                y: LogComplex::from_complex(z.y),
            },
            s => s,
        }
    }

    /// The explicit point, if it is representable.
    pub fn explicit(&self) -> Option<C2> {
        match *self {
            OrbitState::Explicit(z) => Some(z),
            OrbitState::Log { x, y } => {
                if x.ln_abs.max(y.ln_abs) < 700.0 {
                    Some(C2::new(x.to_complex(), y.to_complex()))
                } else {
                    None
                }
            }
        }
    }

    pub fn ln_abs_x(&self) -> f64 {
        match self {
            OrbitState::Explicit(z) => z.x.norm().ln(),
            OrbitState::Log { x, .. } => x.ln_abs,
        }
    }

    pub fn ln_abs_y(&self) -> f64 {
        match self {
            OrbitState::Explicit(z) => z.y.norm().ln(),
            OrbitState::Log { y, .. } => y.ln_abs,
        }
    }

    /// `ln‖z‖` (Euclidean norm); `-∞` at the origin.
    pub fn ln_norm(&self) -> f64 {
        match self {
            OrbitState::Explicit(z) => z.norm().ln(),
            OrbitState::Log { x, y } => 0.5 * log_add_exp(2.0 * x.ln_abs, 2.0 * y.ln_abs),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            OrbitState::Explicit(z) => z.is_finite(),
            OrbitState::Log { x, y } => {
                !x.ln_abs.is_nan()
                    && !y.ln_abs.is_nan()
                    && x.ln_abs < f64::INFINITY
                    && y.ln_abs < f64::INFINITY
                    && x.phase.is_finite()
                    && y.phase.is_finite()
            }
        }
    }

    fn settle(self) -> Self {
        match self {
            OrbitState::Explicit(z) if z.is_finite() && z.norm() > 1e100 => self.to_log(),
            s => s,
        }
    }

    /// Applies one factor.
    pub fn step_factor(self, f: &Factor) -> Self {
        let deg = f.degree() as f64;
        match self {
            OrbitState::Explicit(z) if deg * z.norm().ln().max(0.0) < EXPLICIT_LIMIT => {
                OrbitState::Explicit(f.eval(z)).settle()
            }
            s => {
                let OrbitState::Log { x, y } = s.to_log() else { unreachable!() };
                let py = poly_log(f, y);
                OrbitState::Log {
                    x: y,
                    y: py.sub(x.mul_complex(f.a)),
                }
            }
        }
    }

    /// Applies the inverse of one factor.
    pub fn step_factor_inverse(self, f: &Factor) -> Self {
        let deg = f.degree() as f64;
        match self {
            OrbitState::Explicit(z)
                if deg * z.norm().ln().max(0.0) < EXPLICIT_LIMIT && f.a.norm() > 1e-200 =>
            {
                OrbitState::Explicit(f.eval_inverse(z)).settle()
            }
            s => {
                let OrbitState::Log { x, y } = s.to_log() else { unreachable!() };
                let px = poly_log(f, x);
                OrbitState::Log {
                    x: px.sub(y).mul(LogComplex::from_complex(f.a.inv())),
                    y: x,
                }
            }
        }
    }

    pub fn step(self, h: &HenonMap) -> Self {
        h.factors.iter().fold(self, |s, f| s.step_factor(f))
    }

    pub fn step_inverse(self, h: &HenonMap) -> Self {
        h.factors.iter().rev().fold(self, |s, f| s.step_factor_inverse(f))
    }
}

/// Horner evaluation of the monic polynomial of `f` in log form.
fn poly_log(f: &Factor, y: LogComplex) -> LogComplex {
    let mut acc = LogComplex {
        ln_abs: 0.0,
        phase: Complex64::new(1.0, 0.0),
    };
    for c in f.coeffs.iter().rev() {
        acc = acc.mul(y).add(LogComplex::from_complex(*c));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::BasePoint;
    use crate::family::HenonFamily;

    fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
        (a - b).norm() <= rel * a.norm().max(b.norm()).max(1e-300)
    }

    #[test]
    fn log_complex_arithmetic() {
        let a = Complex64::new(3.0, -4.0);
        let b = Complex64::new(-1.5, 0.25);
        let la = LogComplex::from_complex(a);
        let lb = LogComplex::from_complex(b);
        assert!(close(la.mul(lb).to_complex(), a * b, 1e-14));
        assert!(close(la.add(lb).to_complex(), a + b, 1e-14));
        assert!(close(la.sub(lb).to_complex(), a - b, 1e-14));
        assert!(la.sub(la).is_zero());
        assert!(close(la.add(LogComplex::ZERO).to_complex(), a, 1e-15));
    }

    #[test]
    fn switch_preserves_log_norm() {
        let z = C2::new(Complex64::new(1e120, 3e119), Complex64::new(-2e119, 7e120));
        let a = OrbitState::Explicit(z).ln_norm();
        let b = OrbitState::Explicit(z).to_log().ln_norm();
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn log_steps_match_explicit_steps() {
        let h = HenonFamily::single(2, 0.1, 0.2).instantiate(&BasePoint::scalar(0.0));
        let z = C2::new(Complex64::new(0.7, -0.2), Complex64::new(5.0, 1.0));
        let e = OrbitState::Explicit(z).step(&h);
        let l = OrbitState::Explicit(z).to_log().step(&h);
        let (e, l) = (e.explicit().unwrap(), l.explicit().unwrap());
        assert!(close(e.x, l.x, 1e-13) && close(e.y, l.y, 1e-13));
        let ei = OrbitState::Explicit(z).step_inverse(&h).explicit().unwrap();
        let li = OrbitState::Explicit(z).to_log().step_inverse(&h).explicit().unwrap();
        assert!(close(ei.x, li.x, 1e-13) && close(ei.y, li.y, 1e-13));
    }

    #[test]
    fn deep_orbit_log_norm_doubles() {
        let h = HenonFamily::single(2, 0.0, 0.3).instantiate(&BasePoint::scalar(0.0));
        let mut s = OrbitState::new(C2::real(0.0, 10.0));
        for _ in 0..60 {
            s = s.step(&h);
        }
        let ln = s.ln_norm();
        assert!(ln.is_finite());
        // ln‖z_n‖ ≈ 2^n ln 10 for this orbit
        let g = ln / 2f64.powi(60);
        assert!((g - 10f64.ln()).abs() < 1e-2, "{g}");
    }
}
