//! Slice realizations of Green currents: rasters of Green potentials on a
//! complex line, their discrete Laplacian measures, and Julia-set rasters.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::base::{BasePoint, ParamSequence};
use crate::error::{Error, Result};
use crate::green::{Direction, FiberChain, GreenEval, GreenOptions, GreenStatus, SkewSystem};
use crate::par::map_range;
use crate::point::C2;

/// A complex line in C² parametrized by `w ∈ C`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SliceSpec {
    /// `{x = c}`, parametrized by `y = w`.
    FixedX(Complex64),
    /// `{y = c}`, parametrized by `x = w`.
    FixedY(Complex64),
    /// `{origin + w·direction}`.
    Line { origin: C2, direction: C2 },
}

impl SliceSpec {
    pub fn point(&self, w: Complex64) -> C2 {
        match *self {
            SliceSpec::FixedX(c) => C2::new(c, w),
            SliceSpec::FixedY(c) => C2::new(w, c),
            SliceSpec::Line { origin, direction } => origin + direction.scale(w),
        }
    }
}

/// A uniform `nx × ny` lattice in the slice parameter `w`, endpoints
/// included; row `j` has `Im w = y0 + j·dy`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridGeometry {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub slice: SliceSpec,
}

impl GridGeometry {
    pub fn new(slice: SliceSpec, nx: usize, ny: usize, lo: Complex64, hi: Complex64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidParameter(alloc::format!("grid {nx}×{ny} has no interior")));
        }
        let dx = (hi.re - lo.re) / (nx - 1) as f64;
        let dy = (hi.im - lo.im) / (ny - 1) as f64;
        if !(dx > 0.0 && dy > 0.0) {
            return Err(Error::InvalidParameter("window has non-positive extent".into()));
        }
        Ok(GridGeometry {
            nx,
            ny,
            x0: lo.re,
            y0: lo.im,
            dx,
            dy,
            slice,
        })
    }

    /// An `n × n` grid on the square `|Re w − Re c|, |Im w − Im c| ≤ half`.
    pub fn square(slice: SliceSpec, center: Complex64, half: f64, n: usize) -> Result<Self> {
        let h = Complex64::new(half, half);
        GridGeometry::new(slice, n, n, center - h, center + h)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn param(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x0 + i as f64 * self.dx, self.y0 + j as f64 * self.dy)
    }

    pub fn point(&self, i: usize, j: usize) -> C2 {
        self.slice.point(self.param(i, j))
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn center(&self) -> Complex64 {
        self.param(0, 0) + Complex64::new(0.5 * (self.nx - 1) as f64 * self.dx, 0.5 * (self.ny - 1) as f64 * self.dy)
    }
}

/// A scalar field on a [`GridGeometry`], row-major (`data[j * nx + i]`).
#[derive(Clone, Debug, PartialEq)]
pub struct SliceGrid<T> {
    pub geometry: GridGeometry,
    pub data: Vec<T>,
}

impl<T: Copy> SliceGrid<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.geometry.nx + i]
    }

    pub fn map<U, F: Fn(T) -> U>(&self, f: F) -> SliceGrid<U> {
        SliceGrid {
            geometry: self.geometry,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Evaluates `f(i, j)` on every lattice point, rows in parallel.
pub fn tabulate<T, F>(geometry: &GridGeometry, f: F) -> SliceGrid<T>
where
    T: Send,
    F: Fn(usize, usize) -> T + Sync + Send,
{
    let nx = geometry.nx;
    let rows = map_range(geometry.ny, |j| (0..nx).map(|i| f(i, j)).collect::<Vec<T>>());
    SliceGrid {
        geometry: *geometry,
        data: rows.into_iter().flatten().collect(),
    }
}

pub type GreenField = SliceGrid<GreenEval>;

impl SkewSystem {
    /// Green field of a fiber chain over a slice window.
    pub fn green_field(&self, chain: &FiberChain, geometry: &GridGeometry, opts: &GreenOptions) -> GreenField {
        tabulate(geometry, |i, j| self.evaluate(chain, geometry.point(i, j), opts))
    }

    /// `G⁺_λ` over a slice window.
    pub fn green_plus_field(&self, lambda: &BasePoint, geometry: &GridGeometry, opts: &GreenOptions) -> Result<GreenField> {
        if self.base().sigma == crate::base::BaseDynamics::Shift {
            return Err(Error::ShiftNeedsSequence);
        }
        let chain = self.chain_plus(lambda, self.chain_len(opts))?;
        Ok(self.green_field(&chain, geometry, opts))
    }

    /// `G⁺_Λ` over a slice window.
    pub fn green_random_field(&self, seq: &mut ParamSequence, geometry: &GridGeometry, opts: &GreenOptions) -> GreenField {
        let chain = self.chain_random(seq, self.chain_len(opts), Direction::Forward);
        self.green_field(&chain, geometry, opts)
    }
}

/// Discrete Laplacian measure of a potential on a slice.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceMeasure {
    pub geometry: GridGeometry,
    /// 5-point Laplacian times cell area; zero on the boundary ring.
    pub density: Vec<f64>,
    pub total_mass: f64,
    pub min_density: f64,
    /// Largest cellwise `|Δ_h u − Δ_{2h} u|·area / 3`, a Richardson estimate
    /// of the stencil truncation error.
    pub truncation_estimate: f64,
}

impl SliceMeasure {
    /// Rescaled by `1/2π`, so that Green currents have unit mass.
    pub fn normalized(&self) -> SliceMeasure {
        let s = 1.0 / TAU;
        SliceMeasure {
            geometry: self.geometry,
            density: self.density.iter().map(|v| v * s).collect(),
            total_mass: self.total_mass * s,
            min_density: self.min_density * s,
            truncation_estimate: self.truncation_estimate * s,
        }
    }

    pub fn abs_mass(&self) -> f64 {
        self.density.iter().map(|v| v.abs()).sum()
    }
}

fn stencil(u: &[f64], nx: usize, i: usize, j: usize, step: usize, dx: f64, dy: f64) -> f64 {
    let c = u[j * nx + i];
    let hx = step as f64 * dx;
    let hy = step as f64 * dy;
    (u[j * nx + i + step] + u[j * nx + i - step] - 2.0 * c) / (hx * hx)
        + (u[(j + step) * nx + i] + u[(j - step) * nx + i] - 2.0 * c) / (hy * hy)
}

/// 5-point Laplacian times cell area on interior cells.
pub fn laplacian_measure(field: &SliceGrid<f64>) -> SliceMeasure {
    let g = field.geometry;
    let (nx, ny) = (g.nx, g.ny);
    let area = g.cell_area();
    let u = &field.data;
    let rows = map_range(ny, |j| {
        let mut row = alloc::vec![0.0; nx];
        let mut trunc = 0.0f64;
        if j > 0 && j + 1 < ny {
            for i in 1..nx - 1 {
                let lap = stencil(u, nx, i, j, 1, g.dx, g.dy);
                row[i] = lap * area;
                if i >= 2 && i + 2 < nx && j >= 2 && j + 2 < ny {
                    let coarse = stencil(u, nx, i, j, 2, g.dx, g.dy);
                    trunc = trunc.max((lap - coarse).abs() * area / 3.0);
                }
            }
        }
        (row, trunc)
    });
    let mut density = Vec::with_capacity(nx * ny);
    let mut truncation_estimate = 0.0f64;
    for (row, t) in rows {
        density.extend(row);
        truncation_estimate = truncation_estimate.max(t);
    }
    let total_mass = density.iter().sum();
    let min_density = density.iter().cloned().fold(f64::INFINITY, f64::min);
    SliceMeasure {
        geometry: g,
        density,
        total_mass,
        min_density,
        truncation_estimate,
    }
}

/// Slice measure of a Green field; refuses fields with undecided cells.
pub fn slice_measure(field: &GreenField) -> Result<SliceMeasure> {
    let count = field.data.iter().filter(|e| !e.is_decided()).count();
    if count > 0 {
        return Err(Error::UndecidedCells { count });
    }
    Ok(laplacian_measure(&field.map(|e| e.value)))
}

fn escaped(e: &GreenEval) -> bool {
    matches!(e.status, GreenStatus::EscapedCertified | GreenStatus::Converged) && e.value > 0.0
}

/// Cells with a 4-neighbour of different escape status.
pub fn transition_cells(field: &GreenField) -> Vec<bool> {
    let g = field.geometry;
    let (nx, ny) = (g.nx, g.ny);
    let esc: Vec<bool> = field.data.iter().map(escaped).collect();
    let mut out = alloc::vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let differs = |ii: usize, jj: usize| esc[jj * nx + ii] != esc[k];
            out[k] = (i > 0 && differs(i - 1, j))
                || (i + 1 < nx && differs(i + 1, j))
                || (j > 0 && differs(i, j - 1))
                || (j + 1 < ny && differs(i, j + 1));
        }
    }
    out
}

/// Cells within Chebyshev distance `width` of a marked cell.
pub fn dilate(mask: &[bool], nx: usize, ny: usize, width: usize) -> Vec<bool> {
    // separable: a square structuring element is a product of two segments
    let mut rows = alloc::vec![false; nx * ny];
    for j in 0..ny {
        let mut last: Option<usize> = None;
        for i in 0..nx {
            if mask[j * nx + i] {
                last = Some(i);
            }
            if let Some(l) = last {
                if i - l <= width {
                    rows[j * nx + i] = true;
                }
            }
        }
        let mut next: Option<usize> = None;
        for i in (0..nx).rev() {
            if mask[j * nx + i] {
                next = Some(i);
            }
            if let Some(n) = next {
                if n - i <= width {
                    rows[j * nx + i] = true;
                }
            }
        }
    }
    let mut out = alloc::vec![false; nx * ny];
    for i in 0..nx {
        let mut last: Option<usize> = None;
        for j in 0..ny {
            if rows[j * nx + i] {
                last = Some(j);
            }
            if let Some(l) = last {
                if j - l <= width {
                    out[j * nx + i] = true;
                }
            }
        }
        let mut next: Option<usize> = None;
        for j in (0..ny).rev() {
            if rows[j * nx + i] {
                next = Some(j);
            }
            if let Some(n) = next {
                if n - j <= width {
                    out[j * nx + i] = true;
                }
            }
        }
    }
    out
}

/// Fraction of `Σ|density|` carried by cells farther than `width` pixels
/// from the bounded/escaped transition.
pub fn off_band_fraction(field: &GreenField, measure: &SliceMeasure, width: usize) -> f64 {
    let g = field.geometry;
    let band = dilate(&transition_cells(field), g.nx, g.ny, width);
    let total: f64 = measure.abs_mass();
    if total == 0.0 {
        return 0.0;
    }
    let off: f64 = measure
        .density
        .iter()
        .zip(&band)
        .filter(|(_, &b)| !b)
        .map(|(v, _)| v.abs())
        .sum();
    off / total
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PixelClass {
    /// On the status transition or carrying Laplacian density above δ.
    JBand,
    KInterior,
    Escaped,
    Undecided,
}

impl SkewSystem {
    /// Classifies slice pixels into the Julia band, the interior of `K⁺`,
    /// and the escaping set. `delta` is a threshold on the Laplacian of `G⁺`
    /// (density per unit area).
    pub fn julia_raster(
        &self,
        lambda: &BasePoint,
        geometry: &GridGeometry,
        opts: &GreenOptions,
        delta: f64,
    ) -> Result<SliceGrid<PixelClass>> {
        let field = self.green_plus_field(lambda, geometry, opts)?;
        Ok(classify_pixels(&field, delta))
    }
}

pub fn classify_pixels(field: &GreenField, delta: f64) -> SliceGrid<PixelClass> {
    let g = field.geometry;
    let trans = transition_cells(field);
    let lap = laplacian_measure(&field.map(|e| e.value));
    let area = g.cell_area();
    let data = field
        .data
        .iter()
        .enumerate()
        .map(|(k, e)| {
            if !e.is_decided() {
                PixelClass::Undecided
            } else if trans[k] || lap.density[k] / area > delta {
                PixelClass::JBand
            } else if escaped(e) {
                PixelClass::Escaped
            } else {
                PixelClass::KInterior
            }
        })
        .collect();
    SliceGrid { geometry: g, data }
}

/// Both sides of the averaged-current identity on one slice window.
#[derive(Clone, Debug, PartialEq)]
pub struct AvgCurrentSlice {
    /// Laplacian of the Monte-Carlo mean field.
    pub of_mean: SliceMeasure,
    /// Cellwise mean of the per-sequence Laplacian measures.
    pub mean_of_measures: Vec<f64>,
    /// Cellwise standard error of that mean.
    pub std_error: Vec<f64>,
    /// `Σ |of_mean − mean_of_measures|`.
    pub l1_gap: f64,
    /// `Σ std_error`, the L¹ size of the Monte-Carlo error.
    pub l1_error: f64,
}

impl SkewSystem {
    /// Averaged Green current on a slice, from `n_mc` sequences.
    pub fn avg_current_slice(
        &self,
        geometry: &GridGeometry,
        opts: &GreenOptions,
        n_mc: usize,
        seed: u64,
    ) -> Result<AvgCurrentSlice> {
        if n_mc < 2 {
            return Err(Error::InvalidParameter("n_mc must be at least 2".into()));
        }
        let n = geometry.len();
        let mut sum_field = alloc::vec![0.0; n];
        let mut sum_meas = alloc::vec![0.0; n];
        let mut sum_sq = alloc::vec![0.0; n];
        for k in 0..n_mc {
            let mut seq = ParamSequence::with_stream(self.base().space.clone(), seed, k as u64);
            let field = self.green_random_field(&mut seq, geometry, opts);
            let m = slice_measure(&field)?;
            for c in 0..n {
                sum_field[c] += field.data[c].value;
                sum_meas[c] += m.density[c];
                sum_sq[c] += m.density[c] * m.density[c];
            }
        }
        let inv = 1.0 / n_mc as f64;
        let mean_field = SliceGrid {
            geometry: *geometry,
            data: sum_field.iter().map(|v| v * inv).collect(),
        };
        let of_mean = laplacian_measure(&mean_field);
        let mean_of_measures: Vec<f64> = sum_meas.iter().map(|v| v * inv).collect();
        let std_error: Vec<f64> = (0..n)
            .map(|c| {
                let m = mean_of_measures[c];
                let var = ((sum_sq[c] - n_mc as f64 * m * m) / (n_mc - 1) as f64).max(0.0);
                (var * inv).sqrt()
            })
            .collect();
        let l1_gap = of_mean.density.iter().zip(&mean_of_measures).map(|(a, b)| (a - b).abs()).sum();
        let l1_error = std_error.iter().sum();
        Ok(AvgCurrentSlice {
            of_mean,
            mean_of_measures,
            std_error,
            l1_gap,
            l1_error,
        })
    }
}
