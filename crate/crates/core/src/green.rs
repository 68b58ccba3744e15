//! Fibered, random and averaged Green functions.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::base::{Base, BaseDynamics, BasePoint, BaseSpace, ParamSequence};
use crate::error::{Error, Result};
use crate::family::{HenonFamily, HenonMap};
use crate::filtration::{default_radius, compute_radius, FiltrationRadius, Region, TailConstants};
use crate::orbit::OrbitState;
use crate::par::map_range;
use crate::point::C2;

/// Extra chain length beyond `n_max`, enough to reach the tail depth after a
/// late escape.
const CHAIN_SLACK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GreenStatus {
    /// Tail bound met without a membership certificate (finite chains,
    /// experimental variants).
    Converged,
    /// The orbit entered the escaping wedge and the tail bound is below tol.
    EscapedCertified,
    /// The orbit stayed out of the escaping wedge for `n_max` steps.
    BoundedCertified,
    Undecided,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenEval {
    pub value: f64,
    pub depth: usize,
    pub err_bound: f64,
    pub status: GreenStatus,
}

impl GreenEval {
    pub fn is_decided(&self) -> bool {
        self.status != GreenStatus::Undecided
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenOptions {
    pub tol: f64,
    pub n_max: usize,
}

impl Default for GreenOptions {
    fn default() -> Self {
        GreenOptions { tol: 1e-6, n_max: 200 }
    }
}

impl GreenOptions {
    pub fn with_tol(tol: f64) -> Self {
        GreenOptions { tol, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Apply `maps[0]`, then `maps[1]`, …
    Forward,
    /// Apply `maps[0]^{-1}`, then `maps[1]^{-1}`, …
    Backward,
}

/// The sequence of fiber maps an orbit is pushed through.
#[derive(Clone, Debug)]
pub struct FiberChain {
    maps: Vec<HenonMap>,
    cyclic: bool,
    direction: Direction,
}

impl FiberChain {
    pub fn new(maps: Vec<HenonMap>, direction: Direction) -> Self {
        FiberChain { maps, cyclic: false, direction }
    }

    /// The same map at every step.
    pub fn constant(map: HenonMap, direction: Direction) -> Self {
        FiberChain {
            maps: alloc::vec![map],
            cyclic: true,
            direction,
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn map(&self, n: usize) -> Option<&HenonMap> {
        if self.cyclic {
            self.maps.get(n % self.maps.len())
        } else {
            self.maps.get(n)
        }
    }

    /// Number of available steps, `None` if unbounded.
    pub fn len(&self) -> Option<usize> {
        if self.cyclic {
            None
        } else {
            Some(self.maps.len())
        }
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// The orbit state after `n` steps, or `None` if the chain is too short.
    pub fn push(&self, z: C2, n: usize) -> Option<OrbitState> {
        let mut s = OrbitState::new(z);
        for k in 0..n {
            s = self.apply(k, s)?;
        }
        Some(s)
    }

    pub fn apply(&self, k: usize, s: OrbitState) -> Option<OrbitState> {
        let h = self.map(k)?;
        Some(match self.direction {
            Direction::Forward => s.step(h),
            Direction::Backward => s.step_inverse(h),
        })
    }

    /// `G_n = d^{-n} log⁺‖z_n‖` for `n = 0..=depth` (shorter if the chain ends).
    pub fn green_sequence(&self, z: C2, depth: usize, degree: u64) -> Vec<f64> {
        let d = degree as f64;
        let mut out = Vec::with_capacity(depth + 1);
        let mut s = OrbitState::new(z);
        let mut scale = 1.0;
        out.push(log_plus_state(&s));
        for k in 0..depth {
            match self.apply(k, s) {
                Some(t) => s = t,
                None => break,
            }
            scale /= d;
            out.push(scale * log_plus_state(&s));
        }
        out
    }
}

pub(crate) fn log_plus_state(s: &OrbitState) -> f64 {
    s.ln_norm().max(0.0)
}

/// Mean and standard error of a Monte-Carlo average.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AvgGreen {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Mean and standard error of `values` (sample variance with `n − 1`).
pub fn mean_and_error(values: &[f64]) -> AvgGreen {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    AvgGreen {
        mean,
        std_error: (var / n as f64).sqrt(),
        samples: n,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    EscapedForward(usize),
    EscapedBackward(usize),
    Bounded,
    Undecided,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderEstimate {
    pub beta_theory: f64,
    pub l_emp: f64,
    pub c_emp: f64,
}

/// A family over a base, with its filtration and tail constants.
#[derive(Clone, Debug)]
pub struct SkewSystem {
    family: HenonFamily,
    base: Base,
    filtration: FiltrationRadius,
    tails: TailConstants,
}

impl SkewSystem {
    pub fn new(family: HenonFamily, base: Base) -> Result<Self> {
        let filtration = default_radius(&family, &base.space)?;
        Ok(SkewSystem::assemble(family, base, filtration))
    }

    pub fn with_margin(family: HenonFamily, base: Base, margin: f64, samples: usize) -> Result<Self> {
        let filtration = compute_radius(&family, &base.space, margin, samples)?;
        Ok(SkewSystem::assemble(family, base, filtration))
    }

    /// A system driven by i.i.d. sequences over `space`.
    pub fn random(family: HenonFamily, space: BaseSpace) -> Result<Self> {
        SkewSystem::new(
            family,
            Base {
                space,
                sigma: BaseDynamics::Shift,
            },
        )
    }

    /// A single map, no base dependence.
    pub fn autonomous(family: HenonFamily) -> Result<Self> {
        SkewSystem::new(family, Base::autonomous())
    }

    fn assemble(family: HenonFamily, base: Base, filtration: FiltrationRadius) -> Self {
        let tails = TailConstants::derive(&family, &filtration);
        SkewSystem {
            family,
            base,
            filtration,
            tails,
        }
    }

    pub fn family(&self) -> &HenonFamily {
        &self.family
    }

    pub fn base(&self) -> &Base {
        &self.base
    }

    pub fn filtration(&self) -> &FiltrationRadius {
        &self.filtration
    }

    pub fn radius(&self) -> f64 {
        self.filtration.radius
    }

    pub fn tails(&self) -> TailConstants {
        self.tails
    }

    pub fn degree(&self) -> u64 {
        self.family.degree()
    }

    /// Smallest `n` with `K d^{-n} < tol`.
    pub fn required_depth(&self, k: f64, tol: f64) -> usize {
        let d = self.degree() as f64;
        let mut n = 0;
        let mut b = k;
        while b >= tol && n < 10_000 {
            b /= d;
            n += 1;
        }
        n
    }

    fn chain_from_points(&self, points: &[BasePoint], direction: Direction) -> FiberChain {
        FiberChain::new(points.iter().map(|l| self.family.instantiate(l)).collect(), direction)
    }

    fn base_orbit(&self, lambda: &BasePoint, len: usize, backward: bool) -> Result<Vec<BasePoint>> {
        let sigma = self.base.sigma;
        let mut pts = Vec::with_capacity(len);
        for k in 0..len {
            let n = if backward { -(k as i64) - 1 } else { k as i64 };
            pts.push(sigma.advance(lambda, n)?);
        }
        Ok(pts)
    }

    /// Maps `H_λ, H_{σλ}, H_{σ²λ}, …` applied forwards.
    pub fn chain_plus(&self, lambda: &BasePoint, len: usize) -> Result<FiberChain> {
        if self.base.sigma == BaseDynamics::Identity {
            return Ok(FiberChain::constant(self.family.instantiate(lambda), Direction::Forward));
        }
        Ok(self.chain_from_points(&self.base_orbit(lambda, len, false)?, Direction::Forward))
    }

    /// Inverses `H_λ^{-1}`, then `H_{σλ}^{-1}`, … (the orbit of `H_λ^{-n}`).
    pub fn chain_minus(&self, lambda: &BasePoint, len: usize) -> Result<FiberChain> {
        if self.base.sigma == BaseDynamics::Identity {
            return Ok(FiberChain::constant(self.family.instantiate(lambda), Direction::Backward));
        }
        Ok(self.chain_from_points(&self.base_orbit(lambda, len, false)?, Direction::Backward))
    }

    /// Inverses `H_{σ^{-1}λ}^{-1}`, then `H_{σ^{-2}λ}^{-1}`, … for invertible σ.
    pub fn chain_minus_cal(&self, lambda: &BasePoint, len: usize) -> Result<FiberChain> {
        if !self.base.sigma.is_invertible() {
            return Err(Error::NotInvertible(self.base.sigma.name()));
        }
        if self.base.sigma == BaseDynamics::Identity {
            return Ok(FiberChain::constant(self.family.instantiate(lambda), Direction::Backward));
        }
        Ok(self.chain_from_points(&self.base_orbit(lambda, len, true)?, Direction::Backward))
    }

    /// Maps `H_{λ₁}, H_{λ₂}, …` of a parameter sequence.
    pub fn chain_random(&self, seq: &mut ParamSequence, len: usize, direction: Direction) -> FiberChain {
        let pts = seq.prefix(len).to_vec();
        self.chain_from_points(&pts, direction)
    }

    /// Chain length that suffices for any evaluation with these options.
    pub fn chain_len(&self, opts: &GreenOptions) -> usize {
        opts.n_max + CHAIN_SLACK
    }

    /// Green function along a chain, to the tail bound or `n_max` steps.
    pub fn evaluate(&self, chain: &FiberChain, z: C2, opts: &GreenOptions) -> GreenEval {
        let (target, k) = match chain.direction() {
            Direction::Forward => (Region::Plus, self.tails.plus),
            Direction::Backward => (Region::Minus, self.tails.minus),
        };
        let d = self.degree() as f64;
        let radius = self.radius();
        let n_req = self.required_depth(k, opts.tol);
        let mut s = OrbitState::new(z);
        let mut scale = 1.0;
        let mut escaped = false;
        let mut n = 0;
        loop {
            if !s.is_finite() {
                return undecided(n);
            }
            if !escaped && Region::of_state(&s, radius) == target {
                escaped = true;
            }
            if escaped && n >= n_req {
                return GreenEval {
                    value: scale * log_plus_state(&s),
                    depth: n,
                    err_bound: k * scale,
                    status: GreenStatus::EscapedCertified,
                };
            }
            if !escaped && n >= opts.n_max {
                return GreenEval {
                    value: 0.0,
                    depth: n,
                    err_bound: opts.tol,
                    status: GreenStatus::BoundedCertified,
                };
            }
            match chain.apply(n, s) {
                Some(t) => s = t,
                None => {
                    return if n >= n_req {
                        GreenEval {
                            value: scale * log_plus_state(&s),
                            depth: n,
                            err_bound: k * scale,
                            status: GreenStatus::Converged,
                        }
                    } else {
                        undecided(n)
                    };
                }
            }
            scale /= d;
            n += 1;
        }
    }

    fn require_fibered(&self) -> Result<()> {
        if self.base.sigma == BaseDynamics::Shift {
            return Err(Error::ShiftNeedsSequence);
        }
        Ok(())
    }

    /// `G⁺_λ(z)` along `H_{σ^{n−1}λ} ∘ ⋯ ∘ H_λ`.
    pub fn green_plus(&self, lambda: &BasePoint, z: C2, opts: &GreenOptions) -> Result<GreenEval> {
        self.require_fibered()?;
        let chain = self.chain_plus(lambda, self.chain_len(opts))?;
        Ok(self.evaluate(&chain, z, opts))
    }

    /// `G⁻_λ(z)` along `H_{σ^{n−1}λ}^{-1} ∘ ⋯ ∘ H_λ^{-1}`.
    pub fn green_minus(&self, lambda: &BasePoint, z: C2, opts: &GreenOptions) -> Result<GreenEval> {
        self.require_fibered()?;
        let chain = self.chain_minus(lambda, self.chain_len(opts))?;
        Ok(self.evaluate(&chain, z, opts))
    }

    /// `𝒢⁻_λ(z)` along `H_{σ^{-n}λ}^{-1} ∘ ⋯ ∘ H_{σ^{-1}λ}^{-1}`; needs invertible σ.
    pub fn green_minus_cal(&self, lambda: &BasePoint, z: C2, opts: &GreenOptions) -> Result<GreenEval> {
        self.require_fibered()?;
        let chain = self.chain_minus_cal(lambda, self.chain_len(opts))?;
        Ok(self.evaluate(&chain, z, opts))
    }

    /// `G̃⁻_λ(z) = lim d^{-n} log⁺‖(H_λ^{+n})^{-1}(z)‖`.
    ///
    /// Experimental: convergence is only known for contraction-type σ, and
    /// no tail bound is available, so the best status reported is
    /// `Converged` (two successive depths agreeing to tol).
    pub fn green_minus_tilde(&self, lambda: &BasePoint, z: C2, opts: &GreenOptions) -> Result<GreenEval> {
        self.require_fibered()?;
        let d = self.degree() as f64;
        let n_cap = opts.n_max.min(128);
        let maps: Vec<HenonMap> = self
            .base_orbit(lambda, n_cap, false)?
            .iter()
            .map(|l| self.family.instantiate(l))
            .collect();
        let n_req = self.required_depth(self.tails.minus, opts.tol);
        let mut prev = log_plus_state(&OrbitState::new(z));
        let mut scale = 1.0;
        for n in 1..=n_cap {
            let mut s = OrbitState::new(z);
            for h in maps[..n].iter().rev() {
                s = s.step_inverse(h);
            }
            if !s.is_finite() {
                return Ok(undecided(n));
            }
            scale /= d;
            let g = scale * log_plus_state(&s);
            if n >= n_req && (g - prev).abs() < opts.tol * (d - 1.0) / d {
                return Ok(GreenEval {
                    value: g,
                    depth: n,
                    err_bound: self.tails.minus * scale,
                    status: GreenStatus::Converged,
                });
            }
            prev = g;
        }
        Ok(undecided(n_cap))
    }

    /// `G⁺_Λ(z)` along `H_{λ_n} ∘ ⋯ ∘ H_{λ_1}`.
    pub fn green_random(&self, seq: &mut ParamSequence, z: C2, opts: &GreenOptions) -> GreenEval {
        let chain = self.chain_random(seq, self.chain_len(opts), Direction::Forward);
        self.evaluate(&chain, z, opts)
    }

    /// `G⁻_Λ(z)` along `H_{λ_n}^{-1} ∘ ⋯ ∘ H_{λ_1}^{-1}`.
    pub fn green_random_minus(&self, seq: &mut ParamSequence, z: C2, opts: &GreenOptions) -> GreenEval {
        let chain = self.chain_random(seq, self.chain_len(opts), Direction::Backward);
        self.evaluate(&chain, z, opts)
    }

    /// Monte-Carlo `EG⁺(z)` over `n_mc` independent sequences (streams
    /// `0..n_mc` of `seed`).
    pub fn avg_green(&self, z: C2, opts: &GreenOptions, n_mc: usize, seed: u64) -> Result<AvgGreen> {
        if n_mc < 2 {
            return Err(Error::InvalidParameter("n_mc must be at least 2".into()));
        }
        let space = self.base.space.clone();
        let vals = map_range(n_mc, |k| {
            let mut seq = ParamSequence::with_stream(space.clone(), seed, k as u64);
            self.green_random(&mut seq, z, opts).value
        });
        Ok(mean_and_error(&vals))
    }

    /// Monte-Carlo average of the depth-`depth` approximant `G⁺_{n,Λ}(z)`.
    pub fn avg_green_depth(&self, z: C2, depth: usize, n_mc: usize, seed: u64) -> Result<AvgGreen> {
        if n_mc < 2 {
            return Err(Error::InvalidParameter("n_mc must be at least 2".into()));
        }
        let space = self.base.space.clone();
        let d = self.degree();
        let vals = map_range(n_mc, |k| {
            let mut seq = ParamSequence::with_stream(space.clone(), seed, k as u64);
            let chain = self.chain_random(&mut seq, depth, Direction::Forward);
            chain.green_sequence(z, depth, d)[depth]
        });
        Ok(mean_and_error(&vals))
    }

    /// `max(G⁺_λ, G⁻_λ)`, using the calligraphic `𝒢⁻` when σ is invertible.
    pub fn pluri_green(&self, lambda: &BasePoint, z: C2, opts: &GreenOptions) -> Result<f64> {
        let plus = self.green_plus(lambda, z, opts)?;
        let minus = if self.base.sigma.is_invertible() {
            self.green_minus_cal(lambda, z, opts)?
        } else {
            self.green_minus(lambda, z, opts)?
        };
        Ok(plus.value.max(minus.value))
    }

    /// Forward escape, then backward escape, else bounded, certified by the
    /// filtration up to `n_max` steps in each direction.
    pub fn classify(&self, lambda: &BasePoint, z: C2, n_max: usize) -> Result<Classification> {
        self.require_fibered()?;
        let radius = self.radius();
        let fwd = self.chain_plus(lambda, n_max)?;
        let bwd = if self.base.sigma.is_invertible() {
            self.chain_minus_cal(lambda, n_max)?
        } else {
            self.chain_minus(lambda, n_max)?
        };
        for (chain, target, esc) in [
            (&fwd, Region::Plus, Classification::EscapedForward as fn(usize) -> Classification),
            (&bwd, Region::Minus, Classification::EscapedBackward as fn(usize) -> Classification),
        ] {
            let mut s = OrbitState::new(z);
            for n in 0..=n_max {
                if !s.is_finite() {
                    return Ok(Classification::Undecided);
                }
                if Region::of_state(&s, radius) == target {
                    return Ok(esc(n));
                }
                if n < n_max {
                    s = chain.apply(n, s).expect("chain covers n_max steps");
                }
            }
        }
        Ok(Classification::Bounded)
    }

    /// Empirical Hölder data for `G⁺_λ` on the ball `‖z − center‖ ≤ radius`.
    pub fn holder_estimate(
        &self,
        lambda: &BasePoint,
        center: C2,
        radius: f64,
        n_pairs: usize,
        seed: u64,
        opts: &GreenOptions,
    ) -> Result<HolderEstimate> {
        if !self.base.sigma.is_surjective() {
            return Err(Error::SurjectivityRequired);
        }
        self.require_fibered()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = self.family.instantiate(lambda);
        let mut l_emp = 0.0f64;
        let mut pairs = Vec::with_capacity(n_pairs);
        for _ in 0..n_pairs {
            let z = center + unit_ball_point(&mut rng) * radius;
            l_emp = l_emp.max(operator_norm(&h.jacobian(z)));
            let sep = radius * (1e-6f64.ln() * rng.random::<f64>()).exp();
            let dir = unit_sphere_point(&mut rng);
            pairs.push((z, z + dir * sep, sep));
        }
        let d = self.degree() as f64;
        let beta = if l_emp > 1.0 { (d.ln() / l_emp.ln()).min(1.0) } else { 1.0 };
        let chain = self.chain_plus(lambda, self.chain_len(opts))?;
        let ratios = map_range(pairs.len(), |i| {
            let (a, b, sep) = pairs[i];
            let ga = self.evaluate(&chain, a, opts).value;
            let gb = self.evaluate(&chain, b, opts).value;
            holder_ratio(ga, gb, sep, beta)
        });
        let c_emp = ratios.into_iter().fold(0.0, f64::max);
        Ok(HolderEstimate {
            beta_theory: beta,
            l_emp,
            c_emp,
        })
    }
}

fn undecided(n: usize) -> GreenEval {
    GreenEval {
        value: 0.0,
        depth: n,
        err_bound: f64::INFINITY,
        status: GreenStatus::Undecided,
    }
}

/// `|g_a − g_b| / dist^{β/2}`, zero for coincident points.
pub fn holder_ratio(ga: f64, gb: f64, dist: f64, beta: f64) -> f64 {
    if dist == 0.0 {
        0.0
    } else {
        (ga - gb).abs() / dist.powf(0.5 * beta)
    }
}

/// Largest singular value of a complex 2×2 matrix.
pub fn operator_norm(m: &[[Complex64; 2]; 2]) -> f64 {
    let fro2: f64 = m.iter().flatten().map(|c| c.norm_sqr()).sum();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0);
    (0.5 * (fro2 + disc.sqrt())).sqrt()
}

fn gaussian_c2<R: Rng>(rng: &mut R) -> C2 {
    use rand_distr::{Distribution, StandardNormal};
    let mut g = || -> f64 { StandardNormal.sample(rng) };
    C2::new(Complex64::new(g(), g()), Complex64::new(g(), g()))
}

pub(crate) fn unit_sphere_point<R: Rng>(rng: &mut R) -> C2 {
    loop {
        let v = gaussian_c2(rng);
        let n = v.norm();
        if n > 1e-12 {
            return v * (1.0 / n);
        }
    }
}

/// Uniform in the unit ball of C² = R⁴.
pub(crate) fn unit_ball_point<R: Rng>(rng: &mut R) -> C2 {
    let r = rng.random::<f64>().powf(0.25);
    unit_sphere_point(rng) * r
}
