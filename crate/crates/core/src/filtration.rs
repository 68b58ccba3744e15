//! Uniform filtration radius and the invariance relations of
//! `V_R = {|x|,|y| ≤ R}`, `V_R^+ = {|y| > max(|x|, R)}`, `V_R^- = {|x| > max(|y|, R)}`.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::base::BaseSpace;
use crate::error::{Error, Result};
use crate::family::{HenonFamily, HenonMap, JACOBIAN_FLOOR};
use crate::orbit::OrbitState;
use crate::point::C2;

pub const DEFAULT_MARGIN: f64 = 1.1;
pub const DEFAULT_SAMPLES: usize = 64;

/// Which piece of the filtration a point lies in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Bidisc,
    Plus,
    Minus,
}

impl Region {
    /// Ties `|x| = |y| > R` go to `Plus`.
    pub fn of(z: &C2, radius: f64) -> Region {
        Region::from_logs(z.x.norm().ln(), z.y.norm().ln(), radius.ln())
    }

    pub fn of_state(s: &OrbitState, radius: f64) -> Region {
        Region::from_logs(s.ln_abs_x(), s.ln_abs_y(), radius.ln())
    }

    fn from_logs(lx: f64, ly: f64, lr: f64) -> Region {
        if lx <= lr && ly <= lr {
            Region::Bidisc
        } else if ly >= lx {
            Region::Plus
        } else {
            Region::Minus
        }
    }
}

/// A filtration radius valid for every sampled base point.
#[derive(Clone, Debug, PartialEq)]
pub struct FiltrationRadius {
    pub radius: f64,
    pub margin: f64,
    pub samples: usize,
    /// `max_j sup_λ Σ_i |c_{j,i}(λ)|`.
    pub coeff_sup: f64,
    /// `sup_{j,λ} |a_j(λ)|`.
    pub a_sup: f64,
    /// `inf_{j,λ} |a_j(λ)|`.
    pub a_inf: f64,
}

/// `R = margin · (max_j sup_λ Σ_i |c_{j,i}(λ)| + 2 + sup|a|)` over a base grid.
pub fn compute_radius(fam: &HenonFamily, space: &BaseSpace, margin: f64, samples: usize) -> Result<FiltrationRadius> {
    if !(margin >= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("margin {margin} < 1")));
    }
    let mut coeff_sup = 0.0f64;
    let mut a_sup = 0.0f64;
    let mut a_inf = f64::INFINITY;
    for lambda in space.grid(samples) {
        let h = fam.instantiate(&lambda);
        for f in &h.factors {
            let a = f.a.norm();
            if !(a >= JACOBIAN_FLOOR) {
                return Err(Error::DegenerateFamily(alloc::format!(
                    "|a(λ)| = {a:e} at λ = {:?}",
                    lambda.coords()
                )));
            }
            coeff_sup = coeff_sup.max(f.coeff_l1());
            a_sup = a_sup.max(a);
            a_inf = a_inf.min(a);
        }
    }
    Ok(FiltrationRadius {
        radius: margin * (coeff_sup + 2.0 + a_sup),
        margin,
        samples,
        coeff_sup,
        a_sup,
        a_inf,
    })
}

/// Same as [`compute_radius`] with the default margin and grid density.
pub fn default_radius(fam: &HenonFamily, space: &BaseSpace) -> Result<FiltrationRadius> {
    compute_radius(fam, space, DEFAULT_MARGIN, DEFAULT_SAMPLES)
}

/// Checks `|p_{j,λ}(y)| ≥ (2 + a)|y|` on `n_circle` points of `|y| = R`
/// for every sampled λ; returns the number of failures.
pub fn spot_check_radius(fam: &HenonFamily, space: &BaseSpace, r: &FiltrationRadius, n_circle: usize) -> usize {
    let mut bad = 0;
    for lambda in space.grid(r.samples) {
        let h = fam.instantiate(&lambda);
        for f in &h.factors {
            for k in 0..n_circle {
                let t = core::f64::consts::TAU * k as f64 / n_circle as f64;
                let y = Complex64::from_polar(r.radius, t);
                if f.poly(y).norm() < (2.0 + r.a_sup) * r.radius * (1.0 - 1e-12) {
                    bad += 1;
                }
            }
        }
    }
    bad
}

/// Violation counts for the four invariance relations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InvarianceReport {
    pub radius: f64,
    pub n_points: usize,
    /// `H(V^+) ⊂ V^+`.
    pub plus: usize,
    /// `H(V ∪ V^+) ⊂ V ∪ V^+`.
    pub plus_closure: usize,
    /// `H^{-1}(V^-) ⊂ V^-`.
    pub minus: usize,
    /// `H^{-1}(V ∪ V^-) ⊂ V ∪ V^-`.
    pub minus_closure: usize,
}

impl InvarianceReport {
    pub fn total_violations(&self) -> usize {
        self.plus + self.plus_closure + self.minus + self.minus_closure
    }
}

fn random_phase<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, core::f64::consts::TAU * rng.random::<f64>())
}

/// Modulus log-uniform in `(lo, hi]`.
fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    let v = (lo.ln() + (hi.ln() - lo.ln()) * (1.0 - u)).exp();
    v.max(lo * (1.0 + 1e-15))
}

/// Random point of `V_R^+` (or of `V_R^-` when `minus`), with the dominant
/// modulus log-uniform in `(R, 10R]`.
pub fn sample_wedge<R: Rng>(rng: &mut R, radius: f64, minus: bool) -> C2 {
    let big = log_uniform(rng, radius, 10.0 * radius);
    let small = big * rng.random::<f64>();
    let (bx, by) = (random_phase(rng), random_phase(rng));
    if minus {
        C2::new(bx * big, by * small)
    } else {
        C2::new(bx * small, by * big)
    }
}

/// Random point of the bidisc `V_R`, uniform in each coordinate disc.
pub fn sample_bidisc<R: Rng>(rng: &mut R, radius: f64) -> C2 {
    let rx = radius * rng.random::<f64>().sqrt();
    let ry = radius * rng.random::<f64>().sqrt();
    C2::new(random_phase(rng) * rx, random_phase(rng) * ry)
}

/// Samples `n_points` in each of `V_R^+`, `V_R^-` and `V_R`, pairs each with a
/// base point from the grid, and counts violations of the invariance relations.
pub fn check_invariance(
    fam: &HenonFamily,
    space: &BaseSpace,
    radius: f64,
    n_points: usize,
    seed: u64,
) -> InvarianceReport {
    let grid = space.grid(DEFAULT_SAMPLES);
    let maps: Vec<HenonMap> = grid.iter().map(|l| fam.instantiate(l)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = InvarianceReport {
        radius,
        n_points,
        ..Default::default()
    };
    let pick = |rng: &mut ChaCha8Rng| &maps[rng.random_range(0..maps.len())];
    for _ in 0..n_points {
        let h = pick(&mut rng);
        let z = sample_wedge(&mut rng, radius, false);
        let w = OrbitState::new(z).step(h);
        if Region::of_state(&w, radius) != Region::Plus {
            rep.plus += 1;
            rep.plus_closure += 1;
        }
        let h = pick(&mut rng);
        let z = sample_wedge(&mut rng, radius, true);
        let w = OrbitState::new(z).step_inverse(h);
        if Region::of_state(&w, radius) != Region::Minus {
            rep.minus += 1;
            rep.minus_closure += 1;
        }
        let h = pick(&mut rng);
        let z = sample_bidisc(&mut rng, radius);
        if Region::of_state(&OrbitState::new(z).step(h), radius) == Region::Minus {
            rep.plus_closure += 1;
        }
        if Region::of_state(&OrbitState::new(z).step_inverse(h), radius) == Region::Plus {
            rep.minus_closure += 1;
        }
    }
    rep
}

/// Constants `K^±` with `|G^± − d^{-n} ln‖z_n‖| ≤ K^± d^{-n}` once the
/// `n`-th orbit point lies in `V_R^±`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailConstants {
    pub plus: f64,
    pub minus: f64,
}

impl TailConstants {
    /// In `V_R^+` one factor step gives `ln|y'| = d_j ln|y| + e` with
    /// `|e| ≤ -ln(1 − s/R)`, `s = Σ|c| + sup|a|`; composing factors and summing
    /// the geometric tail gives `K = D*·δ/(d−1) + ½ ln 2`, `D* = Σ_j d/d_j`.
    /// The backward direction carries an extra `|ln|a_j||` per factor.
    pub fn derive(fam: &HenonFamily, r: &FiltrationRadius) -> TailConstants {
        let d = fam.degree() as f64;
        let dstar: f64 = fam.factors().iter().map(|f| d / f.degree() as f64).sum();
        let half_ln2 = 0.5 * core::f64::consts::LN_2;
        let delta_plus = -(1.0 - (r.coeff_sup + r.a_sup) / r.radius).ln();
        let delta_minus = -(1.0 - (r.coeff_sup + 1.0) / r.radius).ln();
        let ln_a = r.a_sup.ln().abs().max(r.a_inf.ln().abs());
        TailConstants {
            plus: dstar * delta_plus / (d - 1.0) + half_ln2,
            minus: dstar * (delta_minus + ln_a) / (d - 1.0) + half_ln2,
        }
    }
}
