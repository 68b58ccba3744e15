use henon_skew_core::projective::*;
use henon_skew_core::*;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn squaring(margin: f64) -> ProjectiveSystem {
    ProjectiveSystem::with_margin(HomogeneousLift::diagonal_power(2, 2), Base::autonomous(), 1000, 1, margin).unwrap()
}

fn mono(e: [u32; 3], coef: f64) -> (Vec<u32>, CoeffMap) {
    (e.to_vec(), CoeffMap::real(coef))
}

/// Squaring perturbed by mixed monomials, with a λ-dependent coefficient.
fn perturbed(base: Base) -> ProjectiveSystem {
    let lam = CoeffMap::var(0).scale(c(0.1, 0.0));
    let comps = vec![
        HomogPoly::new(vec![mono([2, 0, 0], 1.0), mono([0, 1, 1], 0.2)]),
        HomogPoly::new(vec![mono([0, 2, 0], 1.0), (vec![1, 0, 1], lam)]),
        HomogPoly::new(vec![mono([0, 0, 2], 1.0), mono([1, 1, 0], -0.15)]),
    ];
    ProjectiveSystem::new(HomogeneousLift::new(2, 2, comps).unwrap(), base, 1000, 2).unwrap()
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<C> {
    (0..n).map(|_| c(StandardNormal.sample(rng), StandardNormal.sample(rng))).collect()
}

fn scaled(x: &[C], s: f64) -> Vec<C> {
    let n = norm(x);
    x.iter().map(|v| v * (s / n)).collect()
}

#[test]
fn closed_form_constants() {
    // on the unit sphere Σ|x_i|⁴ ranges over [1/3, 1]
    let k = *squaring(0.0).constants();
    assert!((k.big_l_emp - 1.0).abs() < 1e-9);
    assert!((k.l_emp - 1.0 / 3f64.sqrt()).abs() < 1e-6);
    assert!((k.r - 0.5).abs() < 0.01);
    // escape radius (2/l)^{1/(d−1)} = 2√3
    assert!((k.big_r - 2.0 * 3f64.sqrt()).abs() < 1e-4);
    let m = *squaring(0.05).constants();
    assert!((m.l_emp - 0.95 * k.l_emp).abs() < 1e-9 && (m.big_l_emp - 1.05 * k.big_l_emp).abs() < 1e-9);
}

#[test]
fn constants_scale_with_the_map() {
    let lift = HomogeneousLift::diagonal_power(2, 2);
    let a = estimate_constants(&lift, &Base::autonomous(), 1000, 5, 0.0).unwrap();
    let b = estimate_constants(&lift.scaled(c(2.0, 0.0)), &Base::autonomous(), 1000, 5, 0.0).unwrap();
    assert!((b.l_emp - 2.0 * a.l_emp).abs() < 1e-9);
    assert!((b.big_l_emp - 2.0 * a.big_l_emp).abs() < 1e-9);
}

#[test]
fn degenerate_and_malformed_lifts() {
    let comps = vec![
        HomogPoly::new(vec![mono([2, 0, 0], 1.0)]),
        HomogPoly::new(vec![mono([1, 1, 0], 1.0)]),
        HomogPoly::new(vec![mono([1, 0, 1], 1.0)]),
    ];
    let lift = HomogeneousLift::new(2, 2, comps).unwrap();
    assert!(matches!(estimate_constants(&lift, &Base::autonomous(), 1000, 1, 0.05), Err(Error::Degenerate(_))));
    let bad = vec![
        HomogPoly::new(vec![mono([2, 0, 0], 1.0), mono([1, 0, 0], 1.0)]),
        HomogPoly::new(vec![mono([0, 2, 0], 1.0)]),
        HomogPoly::new(vec![mono([0, 0, 2], 1.0)]),
    ];
    assert!(HomogeneousLift::new(2, 2, bad).is_err());
    assert!(HomogeneousLift::new(2, 2, vec![HomogPoly::new(vec![mono([2, 0, 0], 1.0)])]).is_err());
}

#[test]
fn closed_form_green_values() {
    let sys = squaring(0.05);
    let l = BasePoint::scalar(0.0);
    for v in [c(3.0, 1.0), c(0.2, 0.0), c(0.0, -7.0)] {
        let g = sys.green_proj(&l, &[v, c(0.0, 0.0), c(0.0, 0.0)], 1e-8).unwrap();
        assert!((g.value - v.norm().ln()).abs() < 1e-12);
    }
    let g = sys.green_proj(&l, &[c(1.0, 0.0); 3], 1e-6).unwrap();
    assert!(g.value.abs() <= 1e-6);
    assert!(matches!(sys.green_proj(&l, &[c(0.0, 0.0); 3], 1e-6), Err(Error::ZeroVector)));
    // G = max ln|x_i| for the squaring map
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let x = gaussian(&mut rng, 3);
        let exact = x.iter().map(|v| v.norm().ln()).fold(f64::NEG_INFINITY, f64::max);
        assert!((sys.green_proj(&l, &x, 1e-10).unwrap().value - exact).abs() < 1e-10);
    }
}

#[test]
fn homogeneity_and_invariance() {
    let base = Base::new(BaseSpace::Circle, BaseDynamics::Rotation { alpha: 0.3 }).unwrap();
    let sys = perturbed(base);
    let tol = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..300 {
        let l = BasePoint::angle(rng.random());
        let x = gaussian(&mut rng, 3);
        let g = sys.green_proj(&l, &x, tol).unwrap().value;
        for s in [c(2.0, 0.0), c(0.0, 1.0), c(0.1, 0.0)] {
            let sx: Vec<C> = x.iter().map(|v| v * s).collect();
            let gs = sys.green_proj(&l, &sx, tol).unwrap().value;
            assert!((gs - s.norm().ln() - g).abs() < 2.0 * tol);
        }
        let f = sys.lift().instantiate(&l).eval(&x);
        let sl = sys.base().sigma.advance(&l, 1).unwrap();
        let gf = sys.green_proj(&sl, &f, tol).unwrap().value;
        assert!((2.0 * g - gf).abs() < 2.0 * tol * 2.0);
    }
}

#[test]
fn uniform_tail() {
    let sys = perturbed(Base::identity(BaseSpace::interval(-1.0, 1.0)));
    let l = BasePoint::scalar(0.3);
    let lc = sys.constants().c().ln();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        // unit-norm start keeps plain iteration finite for 7 steps
        let x = scaled(&gaussian(&mut rng, 3), 1.0);
        let gs: Vec<f64> = (0..8).map(|n| depth_value(&sys, &l, &x, n)).collect();
        for n in 0..7 {
            assert!((gs[n + 1] - gs[n]).abs() <= lc / 2f64.powi(n as i32 + 1) + 1e-12);
        }
    }
}

// G_n by direct iteration, independent of the normalized recursion
fn depth_value(sys: &ProjectiveSystem, l: &BasePoint, x: &[C], n: usize) -> f64 {
    let f = sys.lift().instantiate(l);
    let mut v = x.to_vec();
    for _ in 0..n {
        v = f.eval(&v);
    }
    norm(&v).ln() / 2f64.powi(n as i32)
}

#[test]
fn basin_radii_certify() {
    let sys = squaring(0.0);
    let k = *sys.constants();
    let l = BasePoint::scalar(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let x = gaussian(&mut rng, 3);
        assert_eq!(sys.basin_classify(&l, &scaled(&x, 0.99 * k.r), 0).unwrap(), BasinClass::AttractedToZero);
        assert_eq!(sys.basin_classify(&l, &scaled(&x, 1.01 * k.big_r), 0).unwrap(), BasinClass::EscapesToInfinity);
    }
    assert_eq!(sys.basin_classify(&l, &[c(1.0, 0.0); 3], 500).unwrap(), BasinClass::Indeterminate);
    assert!(matches!(sys.basin_classify(&l, &[c(0.0, 0.0); 3], 5), Err(Error::ZeroVector)));
}

#[test]
fn basin_agrees_with_green_sign() {
    let sys = perturbed(Base::identity(BaseSpace::interval(-1.0, 1.0)));
    let l = BasePoint::scalar(-0.4);
    let tol = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut seen = [0usize; 2];
    for _ in 0..500 {
        let x = scaled(&gaussian(&mut rng, 3), rng.random_range(0.3..3.0));
        let g = sys.green_proj(&l, &x, tol).unwrap().value;
        match sys.basin_classify(&l, &x, 60).unwrap() {
            BasinClass::AttractedToZero => {
                seen[0] += 1;
                assert!(g < tol);
            }
            BasinClass::EscapesToInfinity => {
                seen[1] += 1;
                assert!(g > -tol);
            }
            BasinClass::Indeterminate => {}
        }
    }
    assert!(seen[0] > 0 && seen[1] > 0);
}

#[test]
fn fatou_detection() {
    let sys = squaring(0.05);
    let l = BasePoint::scalar(0.0);
    let probe = ProbeSpec::default();
    let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
    assert_eq!(sys.fatou_detect(&l, &[o, z, z], &probe, 1e-4).unwrap(), FatouVerdict::Fatou);
    assert_eq!(sys.fatou_detect(&l, &[o, c(0.3, 0.2), c(-0.1, 0.4)], &probe, 1e-4).unwrap(), FatouVerdict::Fatou);
    assert_eq!(sys.fatou_detect(&l, &[o, o, z], &probe, 1e-4).unwrap(), FatouVerdict::JuliaSuspect);
    assert_eq!(sys.fatou_detect(&l, &[o, o, z], &probe, f64::INFINITY).unwrap(), FatouVerdict::Fatou);
    assert!(matches!(sys.fatou_detect(&l, &[z, z, z], &probe, 1e-4), Err(Error::ZeroVector)));
}

#[test]
fn basin_raster_shows_both_basins() {
    let sys = squaring(0.05);
    let l = BasePoint::scalar(0.0);
    let g = henon_skew_core::currents::GridGeometry::square(
        henon_skew_core::currents::SliceSpec::FixedX(c(0.0, 0.0)),
        c(0.0, 0.0),
        2.0,
        33,
    )
    .unwrap();
    let raster = sys.basin_raster(&l, &[c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)], &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], &g, 40).unwrap();
    assert!(raster.data.contains(&BasinClass::AttractedToZero));
    assert!(raster.data.contains(&BasinClass::EscapesToInfinity));
}

#[test]
fn shift_base_is_rejected() {
    let b = Base { space: BaseSpace::interval(0.0, 1.0), sigma: BaseDynamics::Shift };
    assert!(ProjectiveSystem::new(HomogeneousLift::diagonal_power(1, 2), b, 1000, 1).is_err());
}
