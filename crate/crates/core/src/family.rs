//! Generalized Hénon factors `(x, y) ↦ (y, p(y) − a·x)` with coefficients
//! depending polynomially on a base parameter.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::base::BasePoint;
use crate::error::{Error, Result};
use crate::point::C2;

/// Jacobian factors smaller than this are treated as zero.
pub const JACOBIAN_FLOOR: f64 = 1e-12;

/// A polynomial in the two real base coordinates `(l1, l2)` with complex
/// coefficients. Terms are kept sorted by exponent pair with no zero entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoeffMap {
    terms: Vec<((u32, u32), Complex64)>,
}

impl CoeffMap {
    pub fn zero() -> Self {
        CoeffMap { terms: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        CoeffMap::monomial(c, 0, 0)
    }

    pub fn real(c: f64) -> Self {
        CoeffMap::constant(Complex64::new(c, 0.0))
    }

    /// `c · l1^e1 · l2^e2`.
    pub fn monomial(c: Complex64, e1: u32, e2: u32) -> Self {
        let mut m = CoeffMap::zero();
        if c != Complex64::new(0.0, 0.0) {
            m.terms.push(((e1, e2), c));
        }
        m
    }

    /// The coordinate function `l1` (`index = 0`) or `l2` (`index = 1`).
    pub fn var(index: usize) -> Self {
        let one = Complex64::new(1.0, 0.0);
        match index {
            0 => CoeffMap::monomial(one, 1, 0),
            _ => CoeffMap::monomial(one, 0, 1),
        }
    }

    pub fn terms(&self) -> &[((u32, u32), Complex64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value if the map does not depend on the base point.
    pub fn as_constant(&self) -> Option<Complex64> {
        match self.terms.as_slice() {
            [] => Some(Complex64::new(0.0, 0.0)),
            [((0, 0), c)] => Some(*c),
            _ => None,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.clone() * CoeffMap::constant(s)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = CoeffMap::real(1.0);
        for _ in 0..e {
            out = out * self.clone();
        }
        out
    }

    pub fn eval(&self, coords: [f64; 2]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &((e1, e2), c) in &self.terms {
            acc += c * powi(coords[0], e1) * powi(coords[1], e2);
        }
        acc
    }

    fn from_unsorted(mut raw: Vec<((u32, u32), Complex64)>) -> Self {
        raw.sort_by_key(|t| t.0);
        let mut terms: Vec<((u32, u32), Complex64)> = Vec::with_capacity(raw.len());
        for (e, c) in raw {
            match terms.last_mut() {
                Some((le, lc)) if *le == e => *lc += c,
                _ => terms.push((e, c)),
            }
        }
        terms.retain(|t| t.1 != Complex64::new(0.0, 0.0));
        CoeffMap { terms }
    }
}

fn powi(x: f64, e: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..e {
        acc *= x;
    }
    acc
}

impl Add for CoeffMap {
    type Output = CoeffMap;
    fn add(self, o: CoeffMap) -> CoeffMap {
        let mut raw = self.terms;
        raw.extend(o.terms);
        CoeffMap::from_unsorted(raw)
    }
}

impl Neg for CoeffMap {
    type Output = CoeffMap;
    fn neg(self) -> CoeffMap {
        CoeffMap {
            terms: self.terms.into_iter().map(|(e, c)| (e, -c)).collect(),
        }
    }
}

impl Sub for CoeffMap {
    type Output = CoeffMap;
    fn sub(self, o: CoeffMap) -> CoeffMap {
        self + (-o)
    }
}

impl Mul for CoeffMap {
    type Output = CoeffMap;
    fn mul(self, o: CoeffMap) -> CoeffMap {
        let mut raw = Vec::with_capacity(self.terms.len() * o.terms.len());
        for &((a1, a2), ca) in &self.terms {
            for &((b1, b2), cb) in &o.terms {
                raw.push(((a1 + b1, a2 + b2), ca * cb));
            }
        }
        CoeffMap::from_unsorted(raw)
    }
}

/// One factor `(x, y) ↦ (y, p(y) − a·x)` with `p` monic of degree `degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct HenonFactor {
    degree: usize,
    /// `coeffs[i]` multiplies `y^i`, for `i < degree`.
    coeffs: Vec<CoeffMap>,
    a: CoeffMap,
}

impl HenonFactor {
    /// Builds a factor from the non-leading coefficients listed from `y^0`
    /// upwards. Missing high coefficients are zero.
    pub fn new(degree: usize, mut coeffs: Vec<CoeffMap>, a: CoeffMap) -> Result<Self> {
        if degree < 2 {
            return Err(Error::DegenerateFamily(alloc::format!(
                "factor degree {degree} is below 2"
            )));
        }
        if coeffs.len() > degree {
            return Err(Error::DegenerateFamily(alloc::format!(
                "{} coefficients given for a degree-{degree} factor",
                coeffs.len()
            )));
        }
        coeffs.resize(degree, CoeffMap::zero());
        Ok(HenonFactor { degree, coeffs, a })
    }

    /// Same as [`HenonFactor::new`] but with coefficients listed from
    /// `y^{degree-1}` down to `y^0`, the order used in config files.
    pub fn from_descending(degree: usize, mut coeffs: Vec<CoeffMap>, a: CoeffMap) -> Result<Self> {
        if coeffs.len() != degree {
            return Err(Error::DegenerateFamily(alloc::format!(
                "expected {degree} coefficients, got {}",
                coeffs.len()
            )));
        }
        coeffs.reverse();
        HenonFactor::new(degree, coeffs, a)
    }

    /// `p(y) = y^d + c`, Jacobian factor `a`, both constant.
    pub fn simple(degree: usize, c: Complex64, a: Complex64) -> Self {
        let mut coeffs = alloc::vec![CoeffMap::zero(); degree];
        coeffs[0] = CoeffMap::constant(c);
        HenonFactor {
            degree,
            coeffs,
            a: CoeffMap::constant(a),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff_maps(&self) -> &[CoeffMap] {
        &self.coeffs
    }

    pub fn a_map(&self) -> &CoeffMap {
        &self.a
    }

    pub fn instantiate(&self, coords: [f64; 2]) -> Factor {
        Factor {
            coeffs: self.coeffs.iter().map(|c| c.eval(coords)).collect(),
            a: self.a.eval(coords),
        }
    }
}

/// A Hénon factor with its coefficients evaluated at one base point.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    /// Non-leading coefficients, `coeffs[i]` for `y^i`.
    pub coeffs: Vec<Complex64>,
    pub a: Complex64,
}

impl Factor {
    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// Horner evaluation of the monic polynomial.
    pub fn poly(&self, y: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * y + c;
        }
        acc
    }

    pub fn poly_derivative(&self, y: Complex64) -> Complex64 {
        let d = self.coeffs.len();
        let mut acc = Complex64::new(d as f64, 0.0);
        for i in (1..d).rev() {
            acc = acc * y + self.coeffs[i] * i as f64;
        }
        acc
    }

    pub fn eval(&self, z: C2) -> C2 {
        C2::new(z.y, self.poly(z.y) - self.a * z.x)
    }

    /// `(x, y) ↦ ((p(x) − y)/a, x)`.
    pub fn eval_inverse(&self, z: C2) -> C2 {
        C2::new((self.poly(z.x) - z.y) / self.a, z.x)
    }

    /// Row-major Jacobian `[[∂x'/∂x, ∂x'/∂y], [∂y'/∂x, ∂y'/∂y]]`.
    pub fn jacobian(&self, z: C2) -> [[Complex64; 2]; 2] {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        [[zero, one], [-self.a, self.poly_derivative(z.y)]]
    }

    /// Sum of the moduli of the non-leading coefficients.
    pub fn coeff_l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }
}

/// All factors of the family evaluated at one base point.
#[derive(Clone, Debug, PartialEq)]
pub struct HenonMap {
    pub factors: Vec<Factor>,
}

impl HenonMap {
    pub fn degree(&self) -> u64 {
        self.factors.iter().map(|f| f.degree() as u64).product()
    }

    pub fn eval(&self, z: C2) -> C2 {
        self.factors.iter().fold(z, |w, f| f.eval(w))
    }

    /// Inverse map: factor inverses applied in reverse order.
    pub fn eval_inverse(&self, z: C2) -> Result<C2> {
        self.check_jacobian()?;
        Ok(self.eval_inverse_unchecked(z))
    }

    pub(crate) fn eval_inverse_unchecked(&self, z: C2) -> C2 {
        self.factors.iter().rev().fold(z, |w, f| f.eval_inverse(w))
    }

    pub fn check_jacobian(&self) -> Result<()> {
        for (j, f) in self.factors.iter().enumerate() {
            let m = f.a.norm();
            if !(m >= JACOBIAN_FLOOR) {
                return Err(Error::ZeroJacobian { factor: j, value: m });
            }
        }
        Ok(())
    }

    /// Jacobian determinant, constant in `z`.
    pub fn jacobian_det(&self) -> Complex64 {
        self.factors.iter().fold(Complex64::new(1.0, 0.0), |acc, f| acc * f.a)
    }

    /// Jacobian matrix of the composite at `z`, by the chain rule.
    pub fn jacobian(&self, z: C2) -> [[Complex64; 2]; 2] {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut acc = [[one, zero], [zero, one]];
        let mut w = z;
        for f in &self.factors {
            let j = f.jacobian(w);
            acc = matmul(&j, &acc);
            w = f.eval(w);
        }
        acc
    }
}

pub(crate) fn matmul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// An ordered list of factors; the map is `H^{(m)} ∘ ⋯ ∘ H^{(1)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct HenonFamily {
    factors: Vec<HenonFactor>,
}

impl HenonFamily {
    pub fn new(factors: Vec<HenonFactor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::DegenerateFamily("no factors".into()));
        }
        Ok(HenonFamily { factors })
    }

    /// Single factor `p(y) = y^d + c` with Jacobian factor `a`.
    pub fn single(degree: usize, c: f64, a: f64) -> Self {
        HenonFamily {
            factors: alloc::vec![HenonFactor::simple(
                degree,
                Complex64::new(c, 0.0),
                Complex64::new(a, 0.0)
            )],
        }
    }

    pub fn factors(&self) -> &[HenonFactor] {
        &self.factors
    }

    /// `d = ∏ d_j`.
    pub fn degree(&self) -> u64 {
        self.factors.iter().map(|f| f.degree as u64).product()
    }

    pub fn instantiate(&self, lambda: &BasePoint) -> HenonMap {
        HenonMap {
            factors: self.factors.iter().map(|f| f.instantiate(lambda.coords())).collect(),
        }
    }

    /// Checks that no Jacobian factor vanishes on the given base samples.
    pub fn validate_on(&self, samples: &[BasePoint]) -> Result<()> {
        for s in samples {
            self.instantiate(s)
                .check_jacobian()
                .map_err(|e| Error::DegenerateFamily(alloc::format!("{e} at {:?}", s.coords())))?;
        }
        Ok(())
    }

    /// True when no coefficient depends on the base point.
    pub fn is_constant(&self) -> bool {
        self.factors
            .iter()
            .all(|f| f.a.as_constant().is_some() && f.coeffs.iter().all(|c| c.as_constant().is_some()))
    }
}

/// Applies factor `j` of the family at `λ`.
pub fn eval_factor(fam: &HenonFamily, j: usize, lambda: &BasePoint, z: C2) -> C2 {
    fam.factors[j].instantiate(lambda.coords()).eval(z)
}

/// `H_λ(z)`.
pub fn eval_map(fam: &HenonFamily, lambda: &BasePoint, z: C2) -> C2 {
    fam.instantiate(lambda).eval(z)
}

/// `H_λ^{-1}(z)`.
pub fn eval_inverse(fam: &HenonFamily, lambda: &BasePoint, z: C2) -> Result<C2> {
    fam.instantiate(lambda).eval_inverse(z)
}
