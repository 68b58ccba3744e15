//! Acceptance criteria, one PASS/FAIL line each on standard output (written
//! past the test harness capture so the lines always appear).
//!
//! The test fails if any criterion outside `KNOWN_UNATTAINABLE` fails, or if
//! one listed there starts passing.

mod common;

use std::f64::consts::{LN_2, TAU};
use std::io::Write;
use std::time::Instant;

use common::{c_family, cz, quad_green_forward, two_letters};
use henon_skew_core::convergence::PotentialSpec;
use henon_skew_core::currents::{off_band_fraction, slice_measure, GridGeometry, SliceSpec};
use henon_skew_core::entropy::CandidateWindow;
use henon_skew_core::filtration::compute_radius;
use henon_skew_core::projective::norm;
use henon_skew_core::*;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Criterion 11 asks for an escape radius within 2% of √3/2 and for every
/// sample at 1.01·R to escape; for the squaring map no radius does both.
const KNOWN_UNATTAINABLE: &[usize] = &[11];

struct Outcome {
    pass: bool,
    detail: String,
}

fn say(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn check(id: usize, name: &str, f: impl FnOnce() -> Outcome) -> (usize, bool) {
    let t = Instant::now();
    let o = f();
    let secs = t.elapsed().as_secs_f64();
    say(&format!(
        "AC{id:<2} {} {name}: {} [{secs:.1} s]",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail
    ));
    (id, o.pass)
}

fn quad(a: f64) -> SkewSystem {
    SkewSystem::autonomous(HenonFamily::single(2, 0.0, a)).unwrap()
}

fn polydisc_point(rng: &mut ChaCha8Rng, r: f64) -> C2 {
    let mut c = || cz(rng.random_range(-r..r), rng.random_range(-r..r));
    C2::new(c(), c())
}

fn filtration_invariance() -> Outcome {
    let space = BaseSpace::interval(-0.1, 0.1);
    let t = Instant::now();
    let r = compute_radius(&c_family(), &space, 1.1, 64).unwrap();
    let rep = check_invariance(&c_family(), &space, r.radius, 10_000, 1);
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        pass: rep.total_violations() == 0 && secs < 5.0,
        detail: format!(
            "R = {:.4}, violations {}/{}/{}/{} (need 0), {secs:.2} s (need < 5)",
            r.radius, rep.plus, rep.plus_closure, rep.minus, rep.minus_closure
        ),
    }
}

fn green_invariance() -> Outcome {
    let tol = 1e-6;
    let opts = GreenOptions::with_tol(tol);
    let lin = || {
        HenonFamily::new(vec![HenonFactor::new(2, vec![CoeffMap::var(0).scale(cz(0.1, 0.0))], CoeffMap::real(0.2)).unwrap()])
            .unwrap()
    };
    let systems = [
        ("identity", SkewSystem::new(c_family(), Base::identity(BaseSpace::interval(-0.1, 0.1))).unwrap()),
        (
            "contraction",
            SkewSystem::new(lin(), Base::new(BaseSpace::interval(-1.0, 1.0), BaseDynamics::Contraction { c: cz(0.5, 0.0) }).unwrap())
                .unwrap(),
        ),
        (
            "rotation",
            SkewSystem::new(lin(), Base::new(BaseSpace::Circle, BaseDynamics::Rotation { alpha: 0.3 }).unwrap()).unwrap(),
        ),
    ];
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for (k, (name, sys)) in systems.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let mut worst = 0.0f64;
        let mut undecided = 0;
        for _ in 0..1000 {
            let l = sys.base().space.sample(&mut rng);
            let z = polydisc_point(&mut rng, 2.0);
            let g0 = sys.green_plus(&l, z, &opts).unwrap();
            let g1 = sys
                .green_plus(&sys.base().sigma.advance(&l, 1).unwrap(), sys.family().instantiate(&l).eval(z), &opts)
                .unwrap();
            if g0.is_decided() && g1.is_decided() {
                worst = worst.max((2.0 * g0.value - g1.value).abs());
            } else {
                undecided += 1;
            }
        }
        pass &= worst < 3.0 * tol && undecided == 0;
        parts.push(format!("{name} {worst:.1e} ({undecided} undecided)"));
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        pass: pass && secs < 30.0,
        detail: format!("max |d·G − G∘H| {} (need < 3e-6), {secs:.1} s (need < 30)", parts.join(", ")),
    }
}

/// Points of the slice `{x = 0}` just outside `K⁺`: bisection along a ray
/// from the bounded fixed point 0 to the escaping circle `|y| = R + 1`.
fn near_julia_escaping(sys: &SkewSystem, n: usize, seed: u64) -> Vec<C2> {
    let l = BasePoint::scalar(0.0);
    let escapes = |t: f64, dir: C| matches!(sys.classify(&l, C2::new(cz(0.0, 0.0), dir * t), 400).unwrap(), Classification::EscapedForward(_));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let dir = C::from_polar(1.0, rng.random_range(0.0..TAU));
            let (mut lo, mut hi) = (0.0, sys.radius() + 1.0);
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if escapes(mid, dir) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            C2::new(cz(0.0, 0.0), dir * hi)
        })
        .collect()
}

fn cauchy_rate() -> Outcome {
    let sys = quad(0.3);
    let l = BasePoint::scalar(0.0);
    let pts = near_julia_escaping(&sys, 100, 5);
    let chain = sys.chain_plus(&l, 40).unwrap();
    let opts = GreenOptions::with_tol(1e-12);
    let escaped = pts.iter().filter(|z| sys.green_plus(&l, **z, &opts).unwrap().value > 0.0).count();
    let mut k_emp = 0.0f64;
    let mut mean = vec![0.0; 26];
    for z in &pts {
        let gs = chain.green_sequence(*z, 26, 2);
        for n in 3..=25 {
            let diff = (gs[n + 1] - gs[n]).abs();
            k_emp = k_emp.max(diff * 2f64.powi(n as i32));
            mean[n] += diff / pts.len() as f64;
        }
    }
    // least squares slope of ln(mean |G_{n+1} − G_n|) on n
    let xs: Vec<f64> = (3..=25).map(|n| n as f64).collect();
    let ys: Vec<f64> = (3..=25).map(|n| mean[n].ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 23.0, ys.iter().sum::<f64>() / 23.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let k_bound = sys.tails().plus + (2f64.sqrt() * sys.radius()).ln();
    let rel = (slope + LN_2).abs() / LN_2;
    Outcome {
        pass: escaped == pts.len() && k_emp <= k_bound && rel < 0.05,
        detail: format!(
            "{escaped}/100 escaped, sup |ΔG_n|·2^n = {k_emp:.3} (bound {k_bound:.3}), slope {slope:.4} vs −ln 2 (rel {rel:.3}, need < 0.05)"
        ),
    }
}

struct MassRun {
    errors: Vec<f64>,
    mass_1024: f64,
    off_band: f64,
    secs: f64,
}

fn slice_mass_runs() -> MassRun {
    let sys = quad(0.3);
    let l = BasePoint::scalar(0.0);
    let opts = GreenOptions::default();
    let t = Instant::now();
    let mut errors = Vec::new();
    let (mut mass_1024, mut off_band) = (0.0, 0.0);
    for n in [256, 512, 1024] {
        let g = GridGeometry::square(SliceSpec::FixedX(cz(0.0, 0.0)), cz(0.0, 0.0), sys.radius() + 1.0, n).unwrap();
        let field = sys.green_plus_field(&l, &g, &opts).unwrap();
        let m = slice_measure(&field).unwrap();
        errors.push((m.total_mass - TAU).abs() / TAU);
        if n == 1024 {
            mass_1024 = m.total_mass;
            off_band = off_band_fraction(&field, &m, 5);
        }
    }
    MassRun {
        errors,
        mass_1024,
        off_band,
        secs: t.elapsed().as_secs_f64(),
    }
}

fn average_green_oracle() -> Outcome {
    let sys = SkewSystem::random(c_family(), two_letters()).unwrap();
    let depth = 12;
    let words = 1u32 << depth;
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut misses = 0;
    let mut worst = 0.0f64;
    for i in 0..100 {
        let z = polydisc_point(&mut rng, 1.5);
        let mut total = 0.0;
        for w in 0..words {
            let maps: Vec<(C, C)> = (0..depth)
                .map(|k| (cz(if w >> k & 1 == 1 { 0.1 } else { -0.1 }, 0.0), cz(0.2, 0.0)))
                .collect();
            total += quad_green_forward(&maps, z, depth);
        }
        let exact = total / words as f64;
        let mc = sys.avg_green_depth(z, depth, 4096, 7000 + i).unwrap();
        let dev = (mc.mean - exact).abs();
        if mc.std_error > 0.0 {
            worst = worst.max(dev / mc.std_error);
        }
        if dev > 3.0 * mc.std_error + 1e-13 {
            misses += 1;
        }
    }
    Outcome {
        pass: misses == 0,
        detail: format!("{misses}/100 points outside 3 standard errors (max {worst:.2} σ)"),
    }
}

fn pullback_rate() -> Outcome {
    let sys = SkewSystem::random(c_family(), two_letters()).unwrap();
    let g = GridGeometry::square(SliceSpec::FixedX(cz(0.0, 0.0)), cz(0.0, 0.0), sys.radius() + 1.0, 256).unwrap();
    let mut seq = ParamSequence::new(two_letters(), 1);
    let rep = sys
        .pullback_convergence(&mut seq, PotentialSpec::FubiniStudy, &g, 12, &GreenOptions::default())
        .unwrap();
    let e12 = rep.errors[12];
    Outcome {
        pass: rep.fit_residual < 0.2 && e12 < 1e-2 && rep.fit_range == (4, 12),
        detail: format!(
            "fit residual {:.3} on n = {}..{} (need < 0.2), e_12 = {e12:.2e} (need < 1e-2)",
            rep.fit_residual, rep.fit_range.0, rep.fit_range.1
        ),
    }
}

fn rigidity() -> Outcome {
    let sys = SkewSystem::random(c_family(), two_letters()).unwrap();
    let g = GridGeometry::square(SliceSpec::FixedX(cz(0.0, 0.0)), cz(0.0, 0.0), sys.radius() + 1.0, 256).unwrap();
    let opts = GreenOptions::default();
    let mut worst = 0.0f64;
    for u2 in [PotentialSpec::LogPlus, PotentialSpec::Radial { r2: 4.0 }] {
        let mut seq = ParamSequence::new(two_letters(), 1);
        worst = worst.max(sys.rigidity_probe(&mut seq, PotentialSpec::FubiniStudy, u2, &g, 12, &opts).unwrap());
    }
    Outcome {
        pass: worst < 1e-2,
        detail: format!("sup |Δ| after 12 pullbacks {worst:.2e} (need < 1e-2)"),
    }
}

fn entropy_bound() -> Outcome {
    let run = |fam: HenonFamily, n: usize| {
        let sys = SkewSystem::autonomous(fam).unwrap();
        let t = Instant::now();
        let w = CandidateWindow::vertical(sys.radius());
        let est = sys.entropy_lower_bound(&w, &[0.05], (n, n), 100_000, 7).unwrap();
        (est[0], t.elapsed().as_secs_f64())
    };
    let (d2, t2) = run(HenonFamily::single(2, 0.0, 0.3), 10);
    let f = HenonFactor::simple(2, cz(0.0, 0.0), cz(0.3, 0.0));
    let (d4, t4) = run(HenonFamily::new(vec![f.clone(), f]).unwrap(), 8);
    let need4 = 0.85 * 4f64.ln();
    Outcome {
        pass: d2.rate >= 0.59 && d4.rate >= need4 && t2 < 180.0 && t4 < 180.0,
        detail: format!(
            "degree 2: s_10 = {}, rate {:.3} (need ≥ 0.59), {t2:.0} s; degree 4: s_8 = {}, rate {:.3} (need ≥ {need4:.3}), {t4:.0} s (each need < 180 s)",
            d2.s_n, d2.rate, d4.s_n, d4.rate
        ),
    }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<C> {
    (0..n)
        .map(|_| cz(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng)))
        .collect()
}

fn projective_homogeneity() -> Outcome {
    let mono = |e: [u32; 3], c: f64| (e.to_vec(), CoeffMap::real(c));
    let comps = vec![
        HomogPoly::new(vec![mono([2, 0, 0], 1.0), mono([0, 1, 1], 0.2)]),
        HomogPoly::new(vec![mono([0, 2, 0], 1.0), (vec![1, 0, 1], CoeffMap::var(0).scale(cz(0.1, 0.0)))]),
        HomogPoly::new(vec![mono([0, 0, 2], 1.0), mono([1, 1, 0], -0.15)]),
    ];
    let lift = HomogeneousLift::new(2, 2, comps).unwrap();
    let sys = ProjectiveSystem::new(lift, Base::new(BaseSpace::Circle, BaseDynamics::Rotation { alpha: 0.3 }).unwrap(), 1000, 2)
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let tol = 1e-8;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let l = BasePoint::angle(rng.random_range(0.0..1.0));
        let x = gaussian(&mut rng, 3);
        let g = sys.green_proj(&l, &x, tol).unwrap().value;
        for c in [cz(2.0, 0.0), cz(0.0, 1.0), cz(0.1, 0.0)] {
            let cx: Vec<C> = x.iter().map(|v| v * c).collect();
            let gc = sys.green_proj(&l, &cx, tol).unwrap().value;
            worst = worst.max((gc - c.norm().ln() - g).abs());
        }
    }
    Outcome {
        pass: worst < 2e-6,
        detail: format!("max |G(cx) − ln|c| − G(x)| = {worst:.1e} over 1000 samples (need < 2e-6)"),
    }
}

fn basin_radii() -> Outcome {
    let sys = ProjectiveSystem::with_margin(HomogeneousLift::diagonal_power(2, 2), Base::autonomous(), 1000, 1, 0.0).unwrap();
    let k = *sys.constants();
    let l = BasePoint::scalar(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut inner, mut outer) = (0, 0);
    for _ in 0..1000 {
        let x = gaussian(&mut rng, 3);
        let n = norm(&x);
        let at = |s: f64| -> Vec<C> { x.iter().map(|v| v * (s / n)).collect() };
        inner += (sys.basin_classify(&l, &at(0.99 * k.r), 50).unwrap() == BasinClass::AttractedToZero) as usize;
        outer += (sys.basin_classify(&l, &at(1.01 * k.big_r), 50).unwrap() == BasinClass::EscapesToInfinity) as usize;
    }
    let target_big_r = 3f64.sqrt() / 2.0;
    let r_ok = (k.r - 0.5).abs() <= 0.02 * 0.5;
    let big_r_ok = (k.big_r - target_big_r).abs() <= 0.02 * target_big_r;
    Outcome {
        pass: inner == 1000 && outer == 1000 && r_ok && big_r_ok,
        detail: format!(
            "attracted at 0.99·r {inner}/1000, escaping at 1.01·R {outer}/1000, r = {:.4} (target 0.5: {}), R = {:.4} (target {target_big_r:.4}: {})",
            k.r,
            if r_ok { "ok" } else { "off" },
            k.big_r,
            if big_r_ok { "ok" } else { "off" }
        ),
    }
}

fn inverse_round_trip() -> Outcome {
    let fam = c_family();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let l = BasePoint::scalar(rng.random_range(-0.1..0.1));
        // uniform in the ball ‖z‖ ≤ 1e3 of C² = R⁴
        let v: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let r = 1e3 * rng.random_range(0.0f64..1.0).powf(0.25) / v.iter().map(|t| t * t).sum::<f64>().sqrt();
        let z = C2::new(cz(v[0] * r, v[1] * r), cz(v[2] * r, v[3] * r));
        let back = eval_inverse(&fam, &l, eval_map(&fam, &l, z)).unwrap();
        worst = worst.max((back - z).norm() / z.norm());
    }
    Outcome {
        pass: worst < 1e-9,
        detail: format!("max relative error {worst:.1e} over 10^4 points (need < 1e-9)"),
    }
}

#[test]
fn acceptance() {
    say("");
    let mut results = vec![
        check(1, "filtration invariance", filtration_invariance),
        check(2, "Green invariance", green_invariance),
        check(3, "Cauchy rate", cauchy_rate),
    ];
    let mut mass = None;
    results.push(check(4, "slice mass 2π", || {
        let m = mass.insert(slice_mass_runs());
        let monotone = m.errors.windows(2).all(|w| w[1] < w[0]);
        Outcome {
            pass: m.errors[2] < 0.02 && monotone && m.secs < 60.0,
            detail: format!(
                "mass at 1024² = {:.6} (rel err {:.1e}, need < 0.02), errors 256/512/1024 = {:.1e}/{:.1e}/{:.1e} (need decreasing), {:.1} s for all three (need < 60)",
                m.mass_1024, m.errors[2], m.errors[0], m.errors[1], m.errors[2], m.secs
            ),
        }
    }));
    let mass = mass.expect("criterion 4 ran");
    results.push(check(5, "harmonicity localization", || Outcome {
        pass: mass.off_band < 0.01,
        detail: format!("{:.2e} of |density| outside the 5-pixel band at 1024² (need < 0.01)", mass.off_band),
    }));
    results.push(check(6, "average Green oracle", average_green_oracle));
    results.push(check(7, "pullback rate", pullback_rate));
    results.push(check(8, "rigidity probe", rigidity));
    results.push(check(9, "entropy lower bound", entropy_bound));
    results.push(check(10, "projective homogeneity", projective_homogeneity));
    results.push(check(11, "basin radii", basin_radii));
    results.push(check(12, "inverse round trip", inverse_round_trip));

    let passed = results.iter().filter(|r| r.1).count();
    say(&format!("acceptance: {passed}/{} criteria pass", results.len()));
    let unexpected: Vec<usize> = results
        .iter()
        .filter(|(id, ok)| *ok == KNOWN_UNATTAINABLE.contains(id))
        .map(|r| r.0)
        .collect();
    assert!(unexpected.is_empty(), "criteria with unexpected outcome: {unexpected:?}");
}
