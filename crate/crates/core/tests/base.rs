use henon_skew_core::*;
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn approx(p: BasePoint, t: f64) -> bool {
    match p {
        BasePoint::Plane([x, _]) => (x - t).abs() < 1e-12,
        BasePoint::Angle(a) => (a - t).abs() < 1e-12,
    }
}

#[test]
fn advance_examples() {
    let id = BaseDynamics::Identity;
    assert!(approx(id.advance(&BasePoint::scalar(0.3), 10).unwrap(), 0.3));
    let c = BaseDynamics::Contraction { c: C::new(0.5, 0.0) };
    assert!(approx(c.advance(&BasePoint::scalar(0.8), 3).unwrap(), 0.1));
    let r = BaseDynamics::Rotation { alpha: 0.25 };
    assert!(approx(r.advance(&BasePoint::angle(0.9), 2).unwrap(), 0.4));
    assert!(approx(r.advance(&BasePoint::angle(0.9), -4).unwrap(), 0.9));
    assert!(matches!(c.advance(&BasePoint::scalar(0.8), -1), Err(Error::NotInvertible(_))));
    assert!(matches!(BaseDynamics::Shift.advance(&BasePoint::scalar(0.0), 1), Err(Error::ShiftNeedsSequence)));
}

#[test]
fn base_validation() {
    assert!(Base::new(BaseSpace::Circle, BaseDynamics::Rotation { alpha: 0.1 }).is_ok());
    assert!(Base::new(BaseSpace::interval(-1.0, 1.0), BaseDynamics::Rotation { alpha: 0.1 }).is_err());
    assert!(Base::new(BaseSpace::Circle, BaseDynamics::Contraction { c: C::new(0.5, 0.0) }).is_err());
    assert!(Base::new(BaseSpace::interval(-1.0, 1.0), BaseDynamics::Contraction { c: C::new(2.0, 0.0) }).is_err());
    // σ must map the box into itself
    assert!(Base::new(BaseSpace::interval(0.0, 1.0), BaseDynamics::Contraction { c: C::new(-0.5, 0.0) }).is_err());
    assert!(Base::new(
        BaseSpace::rect([-1.0, -1.0], [1.0, 1.0]),
        BaseDynamics::Contraction { c: C::new(0.0, 0.7) }
    )
    .is_ok());
}

#[test]
fn sequences_are_reproducible() {
    let m = BaseSpace::Finite(vec![BasePoint::scalar(-0.1), BasePoint::scalar(0.1)]);
    let a = sample_sequence(&m, 42, 5);
    let b = sample_sequence(&m, 42, 5);
    assert_eq!(a, b);
    assert_eq!(a.len(), 5);
    assert!(sample_sequence(&m, 42, 0).is_empty());
    assert!(a.iter().all(|p| m.contains(p, 0.0)));
    // forks are distinct streams
    let s = ParamSequence::new(m.clone(), 42);
    let (mut f1, mut f2) = (s.fork(1), s.fork(2));
    assert_ne!(f1.prefix(64), f2.prefix(64));
}

#[test]
fn box_sample_mean_near_center() {
    let m = BaseSpace::interval(-0.1, 0.1);
    let xs: Vec<f64> = sample_sequence(&m, 7, 10_000).iter().map(|p| p.coords()[0]).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    // uniform on [−0.1, 0.1]: σ = 0.2/√12
    let se = 0.2 / 12f64.sqrt() / (xs.len() as f64).sqrt();
    assert!(mean.abs() < 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn prepend_and_shift() {
    let m = BaseSpace::interval(-1.0, 1.0);
    let mut s = ParamSequence::new(m, 3);
    let head = s.prefix(4).to_vec();
    let mut p = s.prepend(BasePoint::scalar(0.5), 4);
    assert_eq!(p.prefix(5)[0], BasePoint::scalar(0.5));
    assert_eq!(&p.prefix(5)[1..], &head[..]);
    let mut sh = s.shifted(3);
    assert_eq!(sh.prefix(3), &head[1..4]);
}

proptest! {
    #[test]
    fn rotation_composes(t in 0.0f64..1.0, alpha in 0.0f64..1.0, m in 0i64..20, n in 0i64..20) {
        let r = BaseDynamics::Rotation { alpha };
        let l = BasePoint::angle(t);
        let a = r.advance(&r.advance(&l, m).unwrap(), n).unwrap();
        let b = r.advance(&l, m + n).unwrap();
        prop_assert!(a.distance(&b) < 1e-9);
        let back = r.advance(&b, -(m + n)).unwrap();
        prop_assert!(back.distance(&l) < 1e-9);
    }

    #[test]
    fn circle_distance_is_a_metric(s in 0.0f64..1.0, t in 0.0f64..1.0, u in 0.0f64..1.0) {
        let (a, b, c) = (BasePoint::angle(s), BasePoint::angle(t), BasePoint::angle(u));
        prop_assert!(a.distance(&b) <= 0.5 + 1e-15);
        prop_assert!((a.distance(&b) - b.distance(&a)).abs() < 1e-15);
        prop_assert!(a.distance(&c) <= a.distance(&b) + b.distance(&c) + 1e-12);
    }
}
