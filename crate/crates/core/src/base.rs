//! Compact base spaces, base dynamics and i.i.d. parameter sequences.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A point of the base space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasePoint {
    /// A point of a box or finite set, padded with zeros to two coordinates.
    Plane([f64; 2]),
    /// A point `t ∈ [0, 1)` of the circle R/Z.
    Angle(f64),
}

impl BasePoint {
    pub const fn new(coords: [f64; 2]) -> Self {
        BasePoint::Plane(coords)
    }

    pub const fn scalar(t: f64) -> Self {
        BasePoint::Plane([t, 0.0])
    }

    pub fn angle(t: f64) -> Self {
        BasePoint::Angle(frac(t))
    }

    /// The coordinates `(l1, l2)` seen by coefficient maps. On the circle
    /// these are `(cos 2πt, sin 2πt)` so that polynomial coefficients are
    /// continuous functions on R/Z.
    pub fn coords(&self) -> [f64; 2] {
        match *self {
            BasePoint::Plane(c) => c,
            BasePoint::Angle(t) => [(TAU * t).cos(), (TAU * t).sin()],
        }
    }

    /// Distance in the base metric: Euclidean in the plane, arc length
    /// (as a fraction of the full turn) on the circle.
    pub fn distance(&self, other: &BasePoint) -> f64 {
        match (*self, *other) {
            (BasePoint::Angle(s), BasePoint::Angle(t)) => {
                let d = frac(s - t);
                d.min(1.0 - d)
            }
            _ => {
                let a = self.coords();
                let b = other.coords();
                (a[0] - b[0]).hypot(a[1] - b[1])
            }
        }
    }
}

/// Fractional part in `[0, 1)`.
pub(crate) fn frac(t: f64) -> f64 {
    let f = t - t.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// The compact base space M.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseSpace {
    /// A closed box in R^dim, `dim ∈ {1, 2}`.
    Box { dim: usize, lo: [f64; 2], hi: [f64; 2] },
    Circle,
    Finite(Vec<BasePoint>),
}

impl BaseSpace {
    pub fn interval(lo: f64, hi: f64) -> Self {
        BaseSpace::Box {
            dim: 1,
            lo: [lo, 0.0],
            hi: [hi, 0.0],
        }
    }

    pub fn rect(lo: [f64; 2], hi: [f64; 2]) -> Self {
        BaseSpace::Box { dim: 2, lo, hi }
    }

    /// A single point; used for autonomous (λ-independent) experiments.
    pub fn point() -> Self {
        BaseSpace::Finite(alloc::vec![BasePoint::new([0.0, 0.0])])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaseSpace::Box { dim, lo, hi } => {
                if *dim != 1 && *dim != 2 {
                    return Err(Error::InvalidBase(alloc::format!("box dimension {dim}")));
                }
                for k in 0..*dim {
                    if !(lo[k].is_finite() && hi[k].is_finite() && lo[k] <= hi[k]) {
                        return Err(Error::InvalidBase(alloc::format!(
                            "bounds [{}, {}] are not a closed interval",
                            lo[k], hi[k]
                        )));
                    }
                }
                Ok(())
            }
            BaseSpace::Circle => Ok(()),
            BaseSpace::Finite(pts) if pts.is_empty() => {
                Err(Error::InvalidBase("empty finite set".into()))
            }
            BaseSpace::Finite(_) => Ok(()),
        }
    }

    /// Deterministic sampling grid: `per_dim` points per real dimension
    /// (endpoints included for boxes), every point of a finite set.
    pub fn grid(&self, per_dim: usize) -> Vec<BasePoint> {
        let per_dim = per_dim.max(1);
        let lin = |lo: f64, hi: f64, i: usize| {
            if per_dim == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * i as f64 / (per_dim - 1) as f64
            }
        };
        match self {
            BaseSpace::Box { dim: 1, lo, hi } => (0..per_dim)
                .map(|i| BasePoint::scalar(lin(lo[0], hi[0], i)))
                .collect(),
            BaseSpace::Box { lo, hi, .. } => {
                let mut out = Vec::with_capacity(per_dim * per_dim);
                for i in 0..per_dim {
                    for j in 0..per_dim {
                        out.push(BasePoint::new([lin(lo[0], hi[0], i), lin(lo[1], hi[1], j)]));
                    }
                }
                out
            }
            BaseSpace::Circle => (0..per_dim)
                .map(|i| BasePoint::angle(i as f64 / per_dim as f64))
                .collect(),
            BaseSpace::Finite(pts) => pts.clone(),
        }
    }

    /// One draw from the normalized uniform (Lebesgue or counting) measure.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BasePoint {
        match self {
            BaseSpace::Box { dim, lo, hi } => {
                let u: f64 = rng.random();
                let x = lo[0] + (hi[0] - lo[0]) * u;
                if *dim == 1 {
                    BasePoint::scalar(x)
                } else {
                    let v: f64 = rng.random();
                    BasePoint::new([x, lo[1] + (hi[1] - lo[1]) * v])
                }
            }
            BaseSpace::Circle => BasePoint::angle(rng.random::<f64>()),
            BaseSpace::Finite(pts) => pts[rng.random_range(0..pts.len())],
        }
    }

    pub fn contains(&self, p: &BasePoint, slack: f64) -> bool {
        match (self, p) {
            (BaseSpace::Box { dim, lo, hi }, BasePoint::Plane(c)) => {
                (0..*dim).all(|k| c[k] >= lo[k] - slack && c[k] <= hi[k] + slack)
                    && (*dim == 2 || c[1].abs() <= slack)
            }
            (BaseSpace::Circle, BasePoint::Angle(_)) => true,
            (BaseSpace::Finite(pts), q) => pts.iter().any(|r| r.distance(q) <= slack),
            _ => false,
        }
    }

    /// A point of M used as the default fiber for autonomous runs.
    pub fn center(&self) -> BasePoint {
        match self {
            BaseSpace::Box { dim, lo, hi } => {
                let mut c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
                if *dim == 1 {
                    c[1] = 0.0;
                }
                BasePoint::new(c)
            }
            BaseSpace::Circle => BasePoint::angle(0.0),
            BaseSpace::Finite(pts) => pts[0],
        }
    }
}

/// The base dynamics σ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BaseDynamics {
    Identity,
    /// `σ(λ) = c·λ`, reading the two plane coordinates as one complex number.
    Contraction { c: Complex64 },
    /// `t ↦ t + α mod 1` on the circle.
    Rotation { alpha: f64 },
    /// The shift on i.i.d. parameter sequences.
    Shift,
}

impl BaseDynamics {
    pub fn name(&self) -> &'static str {
        match self {
            BaseDynamics::Identity => "identity",
            BaseDynamics::Contraction { .. } => "contraction",
            BaseDynamics::Rotation { .. } => "rotation",
            BaseDynamics::Shift => "shift",
        }
    }

    /// `σ^n(λ)`; negative `n` runs the inverse map.
    pub fn advance(&self, lambda: &BasePoint, n: i64) -> Result<BasePoint> {
        if n == 0 {
            return Ok(*lambda);
        }
        match *self {
            BaseDynamics::Identity => Ok(*lambda),
            BaseDynamics::Contraction { c } => {
                if n < 0 {
                    return Err(Error::NotInvertible("contraction"));
                }
                let k = c.powu(n as u32);
                match *lambda {
                    BasePoint::Plane([l1, l2]) => {
                        let w = Complex64::new(l1, l2) * k;
                        Ok(BasePoint::new([w.re, w.im]))
                    }
                    BasePoint::Angle(_) => Err(Error::InvalidBase(
                        "contraction is not defined on the circle".into(),
                    )),
                }
            }
            BaseDynamics::Rotation { alpha } => match *lambda {
                BasePoint::Angle(t) => Ok(BasePoint::angle(t + frac(n as f64 * alpha))),
                BasePoint::Plane(_) => Err(Error::InvalidBase(
                    "rotation needs a circle base".into(),
                )),
            },
            BaseDynamics::Shift => {
                if n < 0 {
                    Err(Error::NotInvertible("shift"))
                } else {
                    Err(Error::ShiftNeedsSequence)
                }
            }
        }
    }

    pub fn is_invertible(&self) -> bool {
        matches!(self, BaseDynamics::Identity | BaseDynamics::Rotation { .. })
    }

    /// Surjectivity of σ on M, needed by the Hölder estimate.
    pub fn is_surjective(&self) -> bool {
        match self {
            BaseDynamics::Contraction { c } => (c.norm() - 1.0).abs() < 1e-15,
            _ => true,
        }
    }
}

/// A base space together with its dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct Base {
    pub space: BaseSpace,
    pub sigma: BaseDynamics,
}

impl Base {
    pub fn new(space: BaseSpace, sigma: BaseDynamics) -> Result<Self> {
        space.validate()?;
        match (&space, sigma) {
            (BaseSpace::Circle, BaseDynamics::Contraction { .. }) => {
                return Err(Error::InvalidBase("contraction needs a box or finite base".into()))
            }
            (BaseSpace::Circle, _) => {}
            (_, BaseDynamics::Rotation { .. }) => {
                return Err(Error::InvalidBase("rotation needs a circle base".into()))
            }
            (_, BaseDynamics::Contraction { c }) => {
                if !(c.norm() <= 1.0) {
                    return Err(Error::InvalidBase(alloc::format!("|c| = {} exceeds 1", c.norm())));
                }
                if let BaseSpace::Box { dim: 1, .. } = space {
                    if c.im != 0.0 {
                        return Err(Error::InvalidBase(
                            "a one-dimensional box needs a real contraction factor".into(),
                        ));
                    }
                }
                // σ is linear, so invariance of the box follows from its corners;
                // finite sets are checked point by point.
                let probe = match &space {
                    BaseSpace::Box { .. } => space.grid(2),
                    _ => space.grid(1),
                };
                for p in &probe {
                    let q = sigma.advance(p, 1)?;
                    if !space.contains(&q, 1e-12) {
                        return Err(Error::InvalidBase(alloc::format!(
                            "contraction maps {:?} outside the base",
                            p.coords()
                        )));
                    }
                }
            }
            _ => {}
        }
        Ok(Base { space, sigma })
    }

    pub fn identity(space: BaseSpace) -> Self {
        Base {
            space,
            sigma: BaseDynamics::Identity,
        }
    }

    /// A one-point base with trivial dynamics.
    pub fn autonomous() -> Self {
        Base::identity(BaseSpace::point())
    }
}

/// A lazily generated i.i.d. sequence `λ₁, λ₂, …` of base points.
///
/// Entries are drawn from ChaCha8 seeded with `seed`; `stream` selects one of
/// 2^64 independent streams so that parallel consumers never share state.
#[derive(Clone, Debug)]
pub struct ParamSequence {
    space: BaseSpace,
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    entries: Vec<BasePoint>,
}

impl ParamSequence {
    pub fn new(space: BaseSpace, seed: u64) -> Self {
        ParamSequence::with_stream(space, seed, 0)
    }

    pub fn with_stream(space: BaseSpace, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        ParamSequence {
            space,
            seed,
            stream,
            rng,
            entries: Vec::new(),
        }
    }

    /// A sequence starting with prescribed entries; later entries are drawn
    /// from seed 0.
    pub fn from_entries(space: BaseSpace, entries: Vec<BasePoint>) -> Self {
        let mut s = ParamSequence::new(space, 0);
        s.entries = entries;
        s
    }

    /// An independent sequence over the same space, on stream `k`.
    pub fn fork(&self, k: u64) -> Self {
        ParamSequence::with_stream(self.space.clone(), self.seed, k)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn space(&self) -> &BaseSpace {
        &self.space
    }

    /// The first `n` entries, generating more as needed.
    pub fn prefix(&mut self, n: usize) -> &[BasePoint] {
        while self.entries.len() < n {
            let p = self.space.sample(&mut self.rng);
            self.entries.push(p);
        }
        &self.entries[..n]
    }

    /// Entries generated so far.
    pub fn generated(&self) -> &[BasePoint] {
        &self.entries
    }

    /// The sequence `λΛ` with `lambda` prepended.
    pub fn prepend(&mut self, lambda: BasePoint, len: usize) -> ParamSequence {
        let mut e = alloc::vec![lambda];
        e.extend_from_slice(self.prefix(len));
        ParamSequence::from_entries(self.space.clone(), e)
    }

    /// The shifted sequence `Λ' = (λ₂, λ₃, …)`, truncated to `len` entries.
    pub fn shifted(&mut self, len: usize) -> ParamSequence {
        let e = self.prefix(len + 1)[1..].to_vec();
        ParamSequence::from_entries(self.space.clone(), e)
    }
}

/// The first `n` entries of the sequence with the given seed.
pub fn sample_sequence(space: &BaseSpace, seed: u64, n: usize) -> Vec<BasePoint> {
    ParamSequence::new(space.clone(), seed).prefix(n).to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advance_examples() {
        let l = BasePoint::scalar(0.8);
        assert_eq!(BaseDynamics::Identity.advance(&l, 10).unwrap(), l);
        let c = BaseDynamics::Contraction {
            c: Complex64::new(0.5, 0.0),
        };
        let p = c.advance(&l, 3).unwrap();
        assert!((p.coords()[0] - 0.1).abs() < 1e-15);
        assert_eq!(c.advance(&l, -1), Err(Error::NotInvertible("contraction")));
        let r = BaseDynamics::Rotation { alpha: 0.25 };
        match r.advance(&BasePoint::angle(0.9), 2).unwrap() {
            BasePoint::Angle(t) => assert!((t - 0.4).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            BaseDynamics::Shift.advance(&l, 1),
            Err(Error::ShiftNeedsSequence)
        );
        assert_eq!(BaseDynamics::Shift.advance(&l, -1), Err(Error::NotInvertible("shift")));
    }

    #[test]
    fn base_validation() {
        let c = |r: f64| BaseDynamics::Contraction {
            c: Complex64::new(r, 0.0),
        };
        assert!(Base::new(BaseSpace::interval(-1.0, 1.0), c(0.5)).is_ok());
        assert!(Base::new(BaseSpace::interval(0.5, 1.0), c(0.5)).is_err());
        assert!(Base::new(BaseSpace::interval(-1.0, 1.0), BaseDynamics::Rotation { alpha: 0.1 }).is_err());
        assert!(Base::new(BaseSpace::Circle, BaseDynamics::Rotation { alpha: 0.1 }).is_ok());
        assert!(Base::new(BaseSpace::Finite(alloc::vec![]), BaseDynamics::Identity).is_err());
    }

    #[test]
    fn sequences_are_reproducible() {
        let space = BaseSpace::Finite(alloc::vec![BasePoint::scalar(-0.1), BasePoint::scalar(0.1)]);
        let a = sample_sequence(&space, 7, 5);
        let b = sample_sequence(&space, 7, 5);
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(sample_sequence(&space, 7, 0).is_empty());
        let mut s = ParamSequence::new(space.clone(), 7);
        let f = s.fork(3).prefix(64).to_vec();
        assert_ne!(s.prefix(64), &f[..]);
    }

    #[test]
    fn circle_distance_wraps() {
        let d = BasePoint::angle(0.95).distance(&BasePoint::angle(0.05));
        assert!((d - 0.1).abs() < 1e-12);
    }
}
