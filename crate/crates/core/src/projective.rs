//! Fibered families of non-degenerate homogeneous maps `F_λ` of C^{k+1}:
//! Green functions, basins of attraction, and Fatou detection.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::base::{Base, BaseDynamics, BasePoint};
use crate::currents::{laplacian_measure, GridGeometry, SliceGrid, SliceSpec};
use crate::error::{Error, Result};
use crate::family::CoeffMap;
use crate::par::map_range;

/// A polynomial in `x_0, …, x_k` with base-dependent coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HomogPoly {
    pub terms: Vec<(Vec<u32>, CoeffMap)>,
}

impl HomogPoly {
    pub fn new(terms: Vec<(Vec<u32>, CoeffMap)>) -> Self {
        HomogPoly { terms }
    }

    /// `c · x_i^d`.
    pub fn power(nvars: usize, i: usize, d: u32, c: Complex64) -> Self {
        let mut e = alloc::vec![0; nvars];
        e[i] = d;
        HomogPoly {
            terms: alloc::vec![(e, CoeffMap::constant(c))],
        }
    }

    /// Total degree of every term with a non-zero coefficient, if equal.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut deg = None;
        for (e, c) in &self.terms {
            if c.is_zero() {
                continue;
            }
            let t: u32 = e.iter().sum();
            match deg {
                None => deg = Some(t),
                Some(d) if d != t => return None,
                _ => {}
            }
        }
        deg
    }
}

/// A homogeneous lift `F_λ = (F_0, …, F_k)` of degree `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousLift {
    k: usize,
    degree: u32,
    components: Vec<HomogPoly>,
}

impl HomogeneousLift {
    pub fn new(k: usize, degree: u32, components: Vec<HomogPoly>) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidParameter(alloc::format!("degree {degree} is below 2")));
        }
        if components.len() != k + 1 {
            return Err(Error::InvalidParameter(alloc::format!(
                "{} components for k = {k}",
                components.len()
            )));
        }
        for (i, c) in components.iter().enumerate() {
            if c.terms.iter().any(|(e, _)| e.len() != k + 1) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "component {i} has a term with the wrong number of variables"
                )));
            }
            if c.homogeneous_degree() != Some(degree) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "component {i} is not homogeneous of degree {degree}"
                )));
            }
        }
        Ok(HomogeneousLift { k, degree, components })
    }

    /// `x ↦ (x_0^d, …, x_k^d)`.
    pub fn diagonal_power(k: usize, degree: u32) -> Self {
        let one = Complex64::new(1.0, 0.0);
        HomogeneousLift {
            k,
            degree,
            components: (0..=k).map(|i| HomogPoly::power(k + 1, i, degree, one)).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn components(&self) -> &[HomogPoly] {
        &self.components
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        HomogeneousLift {
            k: self.k,
            degree: self.degree,
            components: self
                .components
                .iter()
                .map(|c| HomogPoly::new(c.terms.iter().map(|(e, m)| (e.clone(), m.scale(s))).collect()))
                .collect(),
        }
    }

    pub fn instantiate(&self, lambda: &BasePoint) -> HomogMap {
        let coords = lambda.coords();
        HomogMap {
            degree: self.degree,
            components: self
                .components
                .iter()
                .map(|c| {
                    c.terms
                        .iter()
                        .map(|(e, m)| (e.clone(), m.eval(coords)))
                        .filter(|(_, v)| *v != Complex64::new(0.0, 0.0))
                        .collect()
                })
                .collect(),
        }
    }
}

/// A homogeneous map with coefficients evaluated at one base point.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogMap {
    pub degree: u32,
    pub components: Vec<Vec<(Vec<u32>, Complex64)>>,
}

impl HomogMap {
    pub fn eval(&self, x: &[Complex64]) -> Vec<Complex64> {
        let d = self.degree as usize;
        let pows: Vec<Vec<Complex64>> = x
            .iter()
            .map(|&xi| {
                let mut p = Vec::with_capacity(d + 1);
                let mut acc = Complex64::new(1.0, 0.0);
                for _ in 0..=d {
                    p.push(acc);
                    acc *= xi;
                }
                p
            })
            .collect();
        self.components
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|(e, c)| e.iter().enumerate().fold(*c, |m, (i, &p)| m * pows[i][p as usize]))
                    .sum()
            })
            .collect()
    }
}

pub fn norm(x: &[Complex64]) -> f64 {
    let m = x.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * x.iter().map(|c| (c / m).norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(x: &[Complex64]) -> Option<(Vec<Complex64>, f64)> {
    let n = norm(x);
    if n > 0.0 && n.is_finite() {
        Some((x.iter().map(|c| c / n).collect(), n))
    } else {
        None
    }
}

/// Splits `x` as `2^e·v` with the largest component of `v` in `[1, 2)`.
fn binary_rescale(mut x: Vec<Complex64>) -> Option<(Vec<Complex64>, i64)> {
    let m = x.iter().map(|c| c.re.abs().max(c.im.abs())).fold(0.0, f64::max);
    if !(m > 0.0 && m.is_finite()) {
        return None;
    }
    let e = m.log2().floor() as i32;
    // two steps keep each factor a normal power of two
    let (a, b) = (e / 2, e - e / 2);
    for c in x.iter_mut() {
        *c = *c * 2f64.powi(-a) * 2f64.powi(-b);
    }
    Some((x, e as i64))
}

/// Sphere-sampling bounds `l‖x‖^d ≤ ‖F_λ(x)‖ ≤ L‖x‖^d` and the derived radii.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LiftConstants {
    pub l_emp: f64,
    pub big_l_emp: f64,
    /// `(2L)^{-1/(d−1)}`: the ball of this radius lies in every basin.
    pub r: f64,
    /// `(2/l)^{1/(d−1)}`: beyond this radius `‖F(x)‖ ≥ 2‖x‖`, so orbits
    /// leaving the ball escape.
    pub big_r: f64,
    pub margin: f64,
    /// Raw extremes before the margins.
    pub min_sampled: f64,
    pub max_sampled: f64,
}

impl LiftConstants {
    /// `C = max(L, 1/l)`, bounding `|ln‖F(u)‖|` on the unit sphere.
    pub fn c(&self) -> f64 {
        self.big_l_emp.max(1.0 / self.l_emp)
    }
}

fn gaussian_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect()
}

fn sphere_point<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    loop {
        if let Some((u, _)) = normalize(&gaussian_vec(rng, n)) {
            return u;
        }
    }
}

/// Hill-climbs `‖F(u)‖` on the unit sphere from `u`, maximizing when `sign`
/// is `1` and minimizing when `-1`.
fn polish<R: Rng>(f: &HomogMap, mut u: Vec<Complex64>, sign: f64, rng: &mut R) -> f64 {
    let mut best = norm(&f.eval(&u));
    let mut step = 0.05;
    let mut fails = 0;
    while step > 1e-9 {
        let g = gaussian_vec(rng, u.len());
        let trial: Vec<Complex64> = u.iter().zip(&g).map(|(a, b)| a + b * step).collect();
        let (t, _) = normalize(&trial).unwrap_or((u.clone(), 1.0));
        let v = norm(&f.eval(&t));
        if sign * (v - best) > 0.0 {
            best = v;
            u = t;
            fails = 0;
        } else {
            fails += 1;
            if fails >= 24 {
                step *= 0.5;
                fails = 0;
            }
        }
    }
    best
}

/// Samples `‖F_λ‖` on the unit sphere over a base grid, polishes the
/// extremes locally, and applies margins `l = (1−m)·min`, `L = (1+m)·max`.
/// Coordinate vectors and the equal-modulus vector are always included.
pub fn estimate_constants(
    lift: &HomogeneousLift,
    base: &Base,
    n_sphere: usize,
    seed: u64,
    margin: f64,
) -> Result<LiftConstants> {
    if !(0.0..1.0).contains(&margin) {
        return Err(Error::InvalidParameter(alloc::format!("margin {margin} outside [0, 1)")));
    }
    let n = lift.k + 1;
    let mut fixed: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            let mut e = alloc::vec![Complex64::new(0.0, 0.0); n];
            e[i] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();
    fixed.push(alloc::vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n]);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (li, lambda) in base.space.grid(8).iter().enumerate() {
        let f = lift.instantiate(lambda);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(li as u64);
        let mut samples = fixed.clone();
        for _ in 0..n_sphere {
            samples.push(sphere_point(&mut rng, n));
        }
        let values = map_range(samples.len(), |s| norm(&f.eval(&samples[s])));
        let (mut imin, mut imax) = (0, 0);
        for (s, v) in values.iter().enumerate() {
            if *v < values[imin] {
                imin = s;
            }
            if *v > values[imax] {
                imax = s;
            }
        }
        lo = lo.min(polish(&f, samples[imin].clone(), -1.0, &mut rng).min(values[imin]));
        hi = hi.max(polish(&f, samples[imax].clone(), 1.0, &mut rng).max(values[imax]));
    }
    if !(lo >= 1e-10) {
        return Err(Error::Degenerate(lo));
    }
    let l = (1.0 - margin) * lo;
    let big_l = (1.0 + margin) * hi;
    let e = 1.0 / (lift.degree as f64 - 1.0);
    Ok(LiftConstants {
        l_emp: l,
        big_l_emp: big_l,
        r: (2.0 * big_l).powf(-e),
        big_r: (2.0 / l).powf(e),
        margin,
        min_sampled: lo,
        max_sampled: hi,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasinClass {
    AttractedToZero,
    EscapesToInfinity,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FatouVerdict {
    Fatou,
    JuliaSuspect,
}

/// Green value of a homogeneous lift; may be negative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjGreen {
    pub value: f64,
    pub depth: usize,
    pub err_bound: f64,
}

/// Probe grids for Fatou detection: `lines` random complex lines through a
/// unit lift, each sampled on a `resolution²` grid of half-width `radius`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeSpec {
    pub radius: f64,
    pub resolution: usize,
    pub lines: usize,
    pub seed: u64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec {
            radius: 0.05,
            resolution: 33,
            lines: 3,
            seed: 0,
        }
    }
}

/// A homogeneous lift over a base, with its sphere constants.
#[derive(Clone, Debug)]
pub struct ProjectiveSystem {
    lift: HomogeneousLift,
    base: Base,
    constants: LiftConstants,
}

impl ProjectiveSystem {
    /// Constants from `n_sphere` samples with the default 5% margins.
    pub fn new(lift: HomogeneousLift, base: Base, n_sphere: usize, seed: u64) -> Result<Self> {
        ProjectiveSystem::with_margin(lift, base, n_sphere, seed, 0.05)
    }

    pub fn with_margin(lift: HomogeneousLift, base: Base, n_sphere: usize, seed: u64, margin: f64) -> Result<Self> {
        if base.sigma == BaseDynamics::Shift {
            return Err(Error::UnsupportedBase("shift"));
        }
        let constants = estimate_constants(&lift, &base, n_sphere, seed, margin)?;
        Ok(ProjectiveSystem { lift, base, constants })
    }

    pub fn lift(&self) -> &HomogeneousLift {
        &self.lift
    }

    pub fn base(&self) -> &Base {
        &self.base
    }

    pub fn constants(&self) -> &LiftConstants {
        &self.constants
    }

    fn chain(&self, lambda: &BasePoint, len: usize) -> Result<Vec<HomogMap>> {
        if self.base.sigma == BaseDynamics::Identity {
            return Ok(alloc::vec![self.lift.instantiate(lambda)]);
        }
        (0..len)
            .map(|k| Ok(self.lift.instantiate(&self.base.sigma.advance(lambda, k as i64)?)))
            .collect()
    }

    /// Depth at which the tail `ln C / (d^n (d−1))` drops below `tol`.
    pub fn required_depth(&self, tol: f64) -> usize {
        let d = self.lift.degree as f64;
        let mut b = self.constants.c().ln().max(0.0) / (d - 1.0);
        let mut n = 0;
        while b >= tol && n < 10_000 {
            b /= d;
            n += 1;
        }
        n
    }

    fn green_chain(&self, chain: &[HomogMap], x: &[Complex64], depth: usize) -> Result<ProjGreen> {
        let d = self.lift.degree as f64;
        let (mut u, n0) = normalize(x).ok_or(Error::ZeroVector)?;
        let mut s = n0.ln();
        for k in 0..depth {
            let f = &chain[k % chain.len()];
            let (v, m) = normalize(&f.eval(&u)).ok_or(Error::Degenerate(0.0))?;
            s = d * s + m.ln();
            u = v;
        }
        let scale = d.powi(-(depth as i32));
        Ok(ProjGreen {
            value: s * scale,
            depth,
            err_bound: self.constants.c().ln().max(0.0) / (d - 1.0) * scale,
        })
    }

    /// `G_λ(x) = lim d^{-n} ln‖F_{σ^{n−1}λ} ∘ ⋯ ∘ F_λ(x)‖`, iterated on the
    /// unit sphere with the log-norm carried separately.
    pub fn green_proj(&self, lambda: &BasePoint, x: &[Complex64], tol: f64) -> Result<ProjGreen> {
        let depth = self.required_depth(tol);
        let chain = self.chain(lambda, depth.max(1))?;
        self.green_chain(&chain, x, depth)
    }

    /// Attraction is certified once the orbit enters the ball of radius `r`,
    /// escape once it leaves the ball of radius `R`.
    pub fn basin_classify(&self, lambda: &BasePoint, x: &[Complex64], n_max: usize) -> Result<BasinClass> {
        let chain = self.chain(lambda, n_max.max(1))?;
        self.basin_chain(&chain, x, n_max)
    }

    fn basin_chain(&self, chain: &[HomogMap], x: &[Complex64], n_max: usize) -> Result<BasinClass> {
        let d = self.lift.degree as i64;
        let (ln_r, ln_big_r) = (self.constants.r.ln(), self.constants.big_r.ln());
        // x = 2^e·v with v rescaled by exact powers of two, so orbits that are
        // periodic in exact arithmetic (such as the unit torus) stay periodic
        let (mut v, mut e) = binary_rescale(x.to_vec()).ok_or(Error::ZeroVector)?;
        for k in 0..=n_max {
            let s = e as f64 * core::f64::consts::LN_2 + norm(&v).ln();
            if s < ln_r {
                return Ok(BasinClass::AttractedToZero);
            }
            if s > ln_big_r {
                return Ok(BasinClass::EscapesToInfinity);
            }
            if k == n_max {
                break;
            }
            let (w, f) = binary_rescale(chain[k % chain.len()].eval(&v)).ok_or(Error::Degenerate(0.0))?;
            v = w;
            e = e.checked_mul(d).and_then(|t| t.checked_add(f)).ok_or(Error::Degenerate(0.0))?;
        }
        Ok(BasinClass::Indeterminate)
    }

    /// Classification raster on the complex line `origin + w·direction`.
    pub fn basin_raster(
        &self,
        lambda: &BasePoint,
        origin: &[Complex64],
        direction: &[Complex64],
        geometry: &GridGeometry,
        n_max: usize,
    ) -> Result<SliceGrid<BasinClass>> {
        let chain = self.chain(lambda, n_max.max(1))?;
        let grid = crate::currents::tabulate(geometry, |i, j| {
            let w = geometry.param(i, j);
            let x: Vec<Complex64> = origin.iter().zip(direction).map(|(o, v)| o + v * w).collect();
            self.basin_chain(&chain, &x, n_max).unwrap_or(BasinClass::Indeterminate)
        });
        Ok(grid)
    }

    /// Discrete Laplacian mass of `G_λ` on random complex lines through the
    /// unit lift of `z`. Fatou if `|mass| < tol·area` on every line.
    pub fn fatou_detect(&self, lambda: &BasePoint, z: &[Complex64], probe: &ProbeSpec, tol: f64) -> Result<FatouVerdict> {
        let masses = self.probe_masses(lambda, z, probe)?;
        let area = (2.0 * probe.radius) * (2.0 * probe.radius);
        Ok(if masses.iter().all(|m| m.abs() < tol * area) {
            FatouVerdict::Fatou
        } else {
            FatouVerdict::JuliaSuspect
        })
    }

    /// Total Laplacian mass on each probe line.
    pub fn probe_masses(&self, lambda: &BasePoint, z: &[Complex64], probe: &ProbeSpec) -> Result<Vec<f64>> {
        let (x, _) = normalize(z).ok_or(Error::ZeroVector)?;
        let n = x.len();
        // fixed depth: G_n at the same n on the whole probe keeps the field smooth
        let depth = self.required_depth(1e-13);
        let chain = self.chain(lambda, depth.max(1))?;
        let mut rng = ChaCha8Rng::seed_from_u64(probe.seed);
        let geometry = GridGeometry::square(
            SliceSpec::FixedX(Complex64::new(0.0, 0.0)),
            Complex64::new(0.0, 0.0),
            probe.radius,
            probe.resolution,
        )?;
        let mut masses = Vec::with_capacity(probe.lines);
        for _ in 0..probe.lines {
            // random direction orthogonal to the lift
            let g = gaussian_vec(&mut rng, n);
            let dot: Complex64 = x.iter().zip(&g).map(|(a, b)| a.conj() * b).sum();
            let v: Vec<Complex64> = g.iter().zip(&x).map(|(b, a)| b - a * dot).collect();
            let (v, _) = normalize(&v).ok_or(Error::ZeroVector)?;
            let field = crate::currents::tabulate(&geometry, |i, j| {
                let w = geometry.param(i, j);
                let p: Vec<Complex64> = x.iter().zip(&v).map(|(a, b)| a + b * w).collect();
                self.green_chain(&chain, &p, depth).map(|g| g.value).unwrap_or(f64::NAN)
            });
            masses.push(laplacian_measure(&field).total_mass);
        }
        Ok(masses)
    }
}
