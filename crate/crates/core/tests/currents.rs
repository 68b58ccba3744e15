mod common;

use common::*;
use henon_skew_core::currents::*;
use henon_skew_core::*;
use proptest::prelude::*;
use std::f64::consts::TAU;

fn geom(center: (f64, f64), half: f64, n: usize) -> GridGeometry {
    GridGeometry::square(SliceSpec::FixedX(cz(0.0, 0.0)), cz(center.0, center.1), half, n).unwrap()
}

fn field_of(g: &GridGeometry, f: impl Fn(num_complex::Complex64) -> f64 + Sync + Send) -> SliceGrid<f64> {
    tabulate(g, |i, j| f(g.param(i, j)))
}

#[test]
fn harmonic_potential_has_no_mass() {
    let g = geom((3.0, 0.0), 1.0, 256);
    let m = laplacian_measure(&field_of(&g, |w| w.norm().ln()));
    // stencil error is O(h²) with h ≈ 8e-3
    assert!(m.total_mass.abs() < 1e-4, "{}", m.total_mass);
    assert!(m.abs_mass() < 1e-4);
}

#[test]
fn quadratic_potential_has_exact_density() {
    // Δ|w|² = 4 and the 5-point stencil is exact on quadratics
    let g = geom((0.0, 0.0), 1.0, 65);
    let m = laplacian_measure(&field_of(&g, |w| w.norm_sqr()));
    let interior = (g.nx - 2) * (g.ny - 2);
    assert!((m.total_mass - 4.0 * g.cell_area() * interior as f64).abs() < 1e-9);
    assert!(m.truncation_estimate < 1e-12);
}

#[test]
fn log_plus_circle_has_mass_two_pi() {
    // Δ log⁺|w| is arc length on the unit circle
    let g = geom((0.0, 0.0), 3.0, 1024);
    let m = laplacian_measure(&field_of(&g, |w| w.norm().ln().max(0.0)));
    assert!((m.total_mass - TAU).abs() < 0.02 * TAU, "{}", m.total_mass);
    assert!((m.normalized().total_mass - 1.0).abs() < 0.02);
}

#[test]
fn henon_slice_mass_and_localization() {
    let sys = SkewSystem::autonomous(HenonFamily::single(2, 0.0, 0.3)).unwrap();
    let r = sys.radius();
    let g = geom((0.0, 0.0), r + 1.0, 256);
    let field = sys.green_plus_field(&BasePoint::scalar(0.0), &g, &GreenOptions::default()).unwrap();
    let m = slice_measure(&field).unwrap();
    assert!((m.total_mass - TAU).abs() < 0.02 * TAU, "{}", m.total_mass);
    assert!(off_band_fraction(&field, &m, 5) < 0.01);
}

#[test]
fn undecided_cells_are_refused() {
    let sys = SkewSystem::autonomous(HenonFamily::single(2, 0.0, 0.3)).unwrap();
    let g = geom((0.0, 0.0), 2.0, 16);
    let mut field = sys.green_plus_field(&BasePoint::scalar(0.0), &g, &GreenOptions::default()).unwrap();
    field.data[5].status = GreenStatus::Undecided;
    field.data[9].status = GreenStatus::Undecided;
    assert!(matches!(slice_measure(&field), Err(Error::UndecidedCells { count: 2 })));
}

#[test]
fn pixel_classes() {
    let sys = SkewSystem::autonomous(HenonFamily::single(2, 0.0, 0.3)).unwrap();
    let l = BasePoint::scalar(0.0);
    let opts = GreenOptions::default();
    let far = sys.julia_raster(&l, &geom((10.0, 0.0), 1.0, 32), &opts, 1.0).unwrap();
    assert!(far.data.iter().all(|c| *c == PixelClass::Escaped));
    let r = sys.radius();
    let near = sys.julia_raster(&l, &geom((0.0, 0.0), r, 128), &opts, 1.0).unwrap();
    for class in [PixelClass::JBand, PixelClass::KInterior, PixelClass::Escaped] {
        assert!(near.data.contains(&class), "{class:?} missing");
    }
}

#[test]
fn averaged_current_commutes_with_laplacian() {
    let sys = SkewSystem::random(c_family(), two_letters()).unwrap();
    let g = geom((0.0, 0.0), 3.0, 64);
    let avg = sys.avg_current_slice(&g, &GreenOptions::default(), 8, 1).unwrap();
    assert!(avg.l1_gap <= 3.0 * avg.l1_error + 1e-9, "{} vs {}", avg.l1_gap, avg.l1_error);
    assert!((avg.of_mean.total_mass - TAU).abs() < 0.1);

    // a family constant in λ reduces to the single-map measure
    let konst = SkewSystem::random(HenonFamily::single(2, 0.0, 0.3), BaseSpace::interval(-0.1, 0.1)).unwrap();
    let avg = konst.avg_current_slice(&g, &GreenOptions::default(), 3, 1).unwrap();
    let single = SkewSystem::autonomous(HenonFamily::single(2, 0.0, 0.3)).unwrap();
    let field = single.green_plus_field(&BasePoint::scalar(0.0), &g, &GreenOptions::default()).unwrap();
    let m = slice_measure(&field).unwrap();
    for (a, b) in avg.of_mean.density.iter().zip(&m.density) {
        assert!((a - b).abs() < 1e-12);
    }
}

fn naive_dilate(mask: &[bool], nx: usize, ny: usize, w: usize) -> Vec<bool> {
    let mut out = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let (jl, jh) = (j.saturating_sub(w), (j + w).min(ny - 1));
            let (il, ih) = (i.saturating_sub(w), (i + w).min(nx - 1));
            out[j * nx + i] = (jl..=jh).any(|jj| (il..=ih).any(|ii| mask[jj * nx + ii]));
        }
    }
    out
}

proptest! {
    #[test]
    fn dilation_matches_naive(nx in 1usize..20, ny in 1usize..20, w in 0usize..6, bits in proptest::collection::vec(0u8..12, 400)) {
        let mask: Vec<bool> = bits.iter().take(nx * ny).map(|b| *b == 0).collect();
        prop_assume!(mask.len() == nx * ny);
        prop_assert_eq!(dilate(&mask, nx, ny, w), naive_dilate(&mask, nx, ny, w));
    }
}
