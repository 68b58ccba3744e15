//! Pullback convergence of potentials: `d^{-n}·u ∘ H_{n,Λ} → G⁺_Λ`.
//!
//! Pulling back `dd^c u` is the same as taking `dd^c(u ∘ H)`, so uniform
//! convergence of these scalar fields carries the convergence of currents.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::base::{BaseDynamics, BasePoint, ParamSequence};
use crate::currents::{tabulate, GridGeometry, SliceGrid};
use crate::error::{Error, Result};
use crate::green::{mean_and_error, Direction, FiberChain, GreenEval, GreenOptions, GreenStatus, SkewSystem};
use crate::orbit::OrbitState;
use crate::par::map_range;
use crate::point::{log_add_exp, C2};

/// A potential with logarithmic growth, `u − ln‖z‖` bounded at infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PotentialSpec {
    /// `½ ln(1 + ‖z‖²)`.
    FubiniStudy,
    /// `ln⁺‖z‖`.
    LogPlus,
    /// `½ ln(r2 + ‖z‖²)`, `r2 > 0`.
    Radial { r2: f64 },
}

impl PotentialSpec {
    /// Evaluated from `ln‖z‖`, so it works on log-scaled orbit points.
    pub fn eval_ln_norm(&self, ln_norm: f64) -> f64 {
        match *self {
            PotentialSpec::FubiniStudy => 0.5 * log_add_exp(0.0, 2.0 * ln_norm),
            PotentialSpec::LogPlus => ln_norm.max(0.0),
            PotentialSpec::Radial { r2 } => 0.5 * log_add_exp(r2.ln(), 2.0 * ln_norm),
        }
    }

    pub fn eval(&self, z: &C2) -> f64 {
        self.eval_ln_norm(z.norm().ln())
    }

    /// All variants are bounded near the backward indeterminacy point.
    pub fn admissible(&self) -> bool {
        match *self {
            PotentialSpec::Radial { r2 } => r2 > 0.0 && r2.is_finite(),
            _ => true,
        }
    }
}

/// Smooth cutoff multiplying the potential before pullback.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cutoff {
    None,
    /// `exp(1 − 1/(1 − ‖z‖²/ρ²))` inside the ball of radius `ρ`, zero outside.
    RadialBump { radius: f64 },
}

impl Cutoff {
    fn eval_ln_norm(&self, ln_norm: f64) -> f64 {
        match *self {
            Cutoff::None => 1.0,
            Cutoff::RadialBump { radius } => {
                let t = (ln_norm - radius.ln()).exp();
                if t >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - t * t)).exp()
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    /// `e_n` for `n = 0..=n_max`.
    pub errors: Vec<f64>,
    /// Fraction of cells excluded from the sup-norms.
    pub masked_fraction: f64,
    /// Least-squares `A` in `e_n ≈ A·n·d^{-n}` over `fit_range`.
    pub fit_a: f64,
    /// `‖e − A·m‖₂ / ‖e‖₂` over `fit_range`, `m_n = n·d^{-n}`.
    pub fit_residual: f64,
    pub fit_range: (usize, usize),
    /// Smallest `n₀` with `e_{n+1} < e_n` for all `n ≥ n₀`.
    pub monotone_from: usize,
    /// Monte-Carlo noise floor (averaged experiments only).
    pub noise_floor: Option<f64>,
}

/// Fits `e_n ≈ A·n·d^{-n}` by linear least squares on `n ∈ [lo, hi]`.
pub fn fit_rate(errors: &[f64], degree: u64, lo: usize, hi: usize) -> (f64, f64) {
    let d = degree as f64;
    let hi = hi.min(errors.len().saturating_sub(1));
    let (mut em, mut mm, mut ee) = (0.0, 0.0, 0.0);
    for n in lo..=hi {
        let m = n as f64 * d.powi(-(n as i32));
        em += errors[n] * m;
        mm += m * m;
        ee += errors[n] * errors[n];
    }
    if mm == 0.0 || ee == 0.0 {
        return (0.0, 0.0);
    }
    let a = em / mm;
    let mut rr = 0.0;
    for n in lo..=hi {
        let m = n as f64 * d.powi(-(n as i32));
        rr += (errors[n] - a * m) * (errors[n] - a * m);
    }
    (a, (rr / ee).sqrt())
}

fn monotone_from(errors: &[f64]) -> usize {
    let mut n0 = errors.len().saturating_sub(1);
    while n0 > 0 && errors[n0] < errors[n0 - 1] {
        n0 -= 1;
    }
    n0
}

fn certified(e: &GreenEval) -> bool {
    matches!(e.status, GreenStatus::EscapedCertified | GreenStatus::BoundedCertified)
}

/// The fields `d^{-n}·(ψu)(H_n z)` for `n = 0..=n_max` over a window, computed
/// incrementally along a chain. Non-finite cells are `NaN`.
pub fn pullback_fields(
    chain: &FiberChain,
    degree: u64,
    u: PotentialSpec,
    cutoff: Cutoff,
    geometry: &GridGeometry,
    n_max: usize,
) -> Vec<SliceGrid<f64>> {
    let d = degree as f64;
    let mut states: Vec<OrbitState> = tabulate(geometry, |i, j| OrbitState::new(geometry.point(i, j))).data;
    let value = |s: &OrbitState, scale: f64| {
        if !s.is_finite() {
            return f64::NAN;
        }
        let l = s.ln_norm();
        scale * cutoff.eval_ln_norm(l) * u.eval_ln_norm(l)
    };
    let mut out = Vec::with_capacity(n_max + 1);
    let mut scale = 1.0;
    out.push(SliceGrid {
        geometry: *geometry,
        data: states.iter().map(|s| value(s, scale)).collect(),
    });
    for n in 0..n_max {
        scale /= d;
        states = map_range(states.len(), |c| chain.apply(n, states[c]).unwrap_or(OrbitState::Explicit(C2::new(
            num_complex::Complex64::new(f64::NAN, 0.0),
            num_complex::Complex64::new(f64::NAN, 0.0),
        ))));
        out.push(SliceGrid {
            geometry: *geometry,
            data: states.iter().map(|s| value(s, scale)).collect(),
        });
    }
    out
}

fn sup_errors(fields: &[SliceGrid<f64>], reference: &[f64], mask: &[bool]) -> Vec<f64> {
    fields
        .iter()
        .map(|f| {
            f.data
                .iter()
                .zip(reference)
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|((a, b), _)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

fn mask_from(fields: &[SliceGrid<f64>], reference: &[GreenEval]) -> Vec<bool> {
    (0..reference.len())
        .map(|c| certified(&reference[c]) && fields.iter().all(|f| f.data[c].is_finite()))
        .collect()
}

impl SkewSystem {
    /// `e_n = sup |d^{-n} u(H_{n,Λ} z) − G⁺_Λ(z)|` over certified cells.
    pub fn pullback_convergence(
        &self,
        seq: &mut ParamSequence,
        u: PotentialSpec,
        geometry: &GridGeometry,
        n_max: usize,
        opts: &GreenOptions,
    ) -> Result<ConvergenceReport> {
        if !u.admissible() {
            return Err(Error::InvalidParameter("potential is not admissible".into()));
        }
        let chain = self.chain_random(seq, self.chain_len(opts).max(n_max), Direction::Forward);
        Ok(self.converge_along(&chain, u, geometry, n_max, opts))
    }

    fn converge_along(
        &self,
        chain: &FiberChain,
        u: PotentialSpec,
        geometry: &GridGeometry,
        n_max: usize,
        opts: &GreenOptions,
    ) -> ConvergenceReport {
        let reference = self.green_field(chain, geometry, opts);
        let fields = pullback_fields(chain, self.degree(), u, Cutoff::None, geometry, n_max);
        let mask = mask_from(&fields, &reference.data);
        let g: Vec<f64> = reference.data.iter().map(|e| e.value).collect();
        let errors = sup_errors(&fields, &g, &mask);
        self.report(errors, &mask, None)
    }

    fn report(&self, errors: Vec<f64>, mask: &[bool], noise_floor: Option<f64>) -> ConvergenceReport {
        let lo = 4.min(errors.len().saturating_sub(1));
        let hi = errors.len().saturating_sub(1);
        let (fit_a, fit_residual) = fit_rate(&errors, self.degree(), lo, hi);
        let masked = mask.iter().filter(|m| !**m).count();
        ConvergenceReport {
            monotone_from: monotone_from(&errors),
            errors,
            masked_fraction: masked as f64 / mask.len().max(1) as f64,
            fit_a,
            fit_residual,
            fit_range: (lo, hi),
            noise_floor,
        }
    }

    /// `e_n = sup |mean_Λ d^{-n} u(H_{n,Λ} z) − EG⁺(z)|`. The mean uses
    /// streams `0..n_mc` of `seed`; `EG⁺` is estimated from the independent
    /// streams `n_mc..2·n_mc`, so `e_n` levels off at the Monte-Carlo noise
    /// floor, reported as the largest combined standard error.
    pub fn theta_average_pullback(
        &self,
        u: PotentialSpec,
        geometry: &GridGeometry,
        n_max: usize,
        n_mc: usize,
        seed: u64,
        opts: &GreenOptions,
    ) -> Result<ConvergenceReport> {
        if n_mc < 2 {
            return Err(Error::InvalidParameter("n_mc must be at least 2".into()));
        }
        let cells = geometry.len();
        let space = self.base().space.clone();
        let len = self.chain_len(opts).max(n_max);
        let mut sum = alloc::vec![alloc::vec![0.0; cells]; n_max + 1];
        let mut sum_sq = alloc::vec![alloc::vec![0.0; cells]; n_max + 1];
        let mut g_vals = alloc::vec![Vec::with_capacity(n_mc); cells];
        let mut mask = alloc::vec![true; cells];
        for k in 0..n_mc {
            let mut seq = ParamSequence::with_stream(space.clone(), seed, k as u64);
            let chain = self.chain_random(&mut seq, len, Direction::Forward);
            let fields = pullback_fields(&chain, self.degree(), u, Cutoff::None, geometry, n_max);
            for (n, f) in fields.iter().enumerate() {
                for c in 0..cells {
                    let v = f.data[c];
                    if !v.is_finite() {
                        mask[c] = false;
                    }
                    sum[n][c] += v;
                    sum_sq[n][c] += v * v;
                }
            }
            let mut ind = ParamSequence::with_stream(space.clone(), seed, (n_mc + k) as u64);
            let field = self.green_random_field(&mut ind, geometry, opts);
            for c in 0..cells {
                if !certified(&field.data[c]) {
                    mask[c] = false;
                }
                g_vals[c].push(field.data[c].value);
            }
        }
        let inv = 1.0 / n_mc as f64;
        let eg: Vec<_> = g_vals.iter().map(|v| mean_and_error(v)).collect();
        let mut errors = Vec::with_capacity(n_max + 1);
        let mut floor = 0.0f64;
        for n in 0..=n_max {
            let mut e = 0.0f64;
            for c in 0..cells {
                if !mask[c] {
                    continue;
                }
                let m = sum[n][c] * inv;
                e = e.max((m - eg[c].mean).abs());
                if n == n_max {
                    let var = ((sum_sq[n][c] - n_mc as f64 * m * m) / (n_mc - 1) as f64).max(0.0);
                    let se = (var * inv + eg[c].std_error * eg[c].std_error).sqrt();
                    floor = floor.max(se);
                }
            }
            errors.push(e);
        }
        Ok(self.report(errors, &mask, Some(floor)))
    }

    /// Sup-distance on certified cells between two potentials pulled back
    /// `n` steps along the same sequence.
    pub fn rigidity_probe(
        &self,
        seq: &mut ParamSequence,
        u1: PotentialSpec,
        u2: PotentialSpec,
        geometry: &GridGeometry,
        n: usize,
        opts: &GreenOptions,
    ) -> Result<f64> {
        if !u1.admissible() || !u2.admissible() {
            return Err(Error::InvalidParameter("potential is not admissible".into()));
        }
        let chain = self.chain_random(seq, self.chain_len(opts).max(n), Direction::Forward);
        let reference = self.green_field(&chain, geometry, opts);
        let f1 = pullback_fields(&chain, self.degree(), u1, Cutoff::None, geometry, n).pop().unwrap();
        let f2 = pullback_fields(&chain, self.degree(), u2, Cutoff::None, geometry, n).pop().unwrap();
        let mut dist = 0.0f64;
        for c in 0..geometry.len() {
            if certified(&reference.data[c]) && f1.data[c].is_finite() && f2.data[c].is_finite() {
                dist = dist.max((f1.data[c] - f2.data[c]).abs());
            }
        }
        Ok(dist)
    }

    /// Pulls back `ψ·u` along `H_λ^{+n}` and fits `c_n` in
    /// `d^{-n}(ψu)∘H_λ^{+n} ≈ c_n·G⁺_λ` by least squares on certified cells.
    /// Only defined where the limit is unique: identity and contraction bases.
    pub fn limit_probe(
        &self,
        lambda: &BasePoint,
        u: PotentialSpec,
        cutoff: Cutoff,
        geometry: &GridGeometry,
        n_max: usize,
        opts: &GreenOptions,
    ) -> Result<LimitProbe> {
        match self.base().sigma {
            BaseDynamics::Identity | BaseDynamics::Contraction { .. } => {}
            other => return Err(Error::UnsupportedBase(other.name())),
        }
        if let Cutoff::RadialBump { radius } = cutoff {
            // the support must stay off V_R^+: ‖z‖ ≤ R forces |y| ≤ R
            if !(radius > 0.0 && radius <= self.radius()) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "cutoff radius {radius} must lie in (0, R = {}]",
                    self.radius()
                )));
            }
        }
        let chain = self.chain_plus(lambda, self.chain_len(opts).max(n_max))?;
        let reference = self.green_field(&chain, geometry, opts);
        let fields = pullback_fields(&chain, self.degree(), u, cutoff, geometry, n_max);
        let mask = mask_from(&fields, &reference.data);
        let g: Vec<f64> = reference.data.iter().map(|e| e.value).collect();
        let gg: f64 = g.iter().zip(&mask).filter(|(_, &m)| m).map(|(v, _)| v * v).sum();
        let mut scale = Vec::with_capacity(n_max + 1);
        let mut residuals = Vec::with_capacity(n_max + 1);
        for f in &fields {
            let (mut fg, mut ff) = (0.0, 0.0);
            for c in 0..g.len() {
                if mask[c] {
                    fg += f.data[c] * g[c];
                    ff += f.data[c] * f.data[c];
                }
            }
            let c_n = if gg > 0.0 { fg / gg } else { 0.0 };
            let rr = (ff - 2.0 * c_n * fg + c_n * c_n * gg).max(0.0);
            scale.push(c_n);
            residuals.push(if ff > 0.0 { (rr / ff).sqrt() } else { 0.0 });
        }
        let masked = mask.iter().filter(|m| !**m).count();
        Ok(LimitProbe {
            scale,
            residuals,
            masked_fraction: masked as f64 / mask.len().max(1) as f64,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitProbe {
    /// Fitted `c_n` per depth.
    pub scale: Vec<f64>,
    /// Relative L² residual `‖f_n − c_n G‖ / ‖f_n‖` per depth.
    pub residuals: Vec<f64>,
    pub masked_fraction: f64,
}
