//! Output encodings. Everything is built in memory and written by the runner
//! only once the experiment has succeeded.

use std::fmt::Write as _;

use henon_skew_core::currents::{GridGeometry, SliceSpec};

/// 16-bit binary PGM, samples big-endian. Row 0 of the image is the top of
/// the window (largest imaginary part).
pub fn pgm16(nx: usize, ny: usize, gray: &[u16]) -> Vec<u8> {
    assert_eq!(gray.len(), nx * ny);
    let mut out = format!("P5\n{nx} {ny}\n65535\n").into_bytes();
    out.reserve(2 * gray.len());
    for j in (0..ny).rev() {
        for g in &gray[j * nx..(j + 1) * nx] {
            out.extend_from_slice(&g.to_be_bytes());
        }
    }
    out
}

/// Affine map from finite values to gray levels `1..=65535`; non-finite
/// values become 0. Returns the grays and the `.map` sidecar text.
pub fn affine_gray(values: &[f64]) -> (Vec<u16>, String) {
    let (lo, hi) = values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
    let scale = if hi > lo { (hi - lo) / 65534.0 } else { 1.0 };
    let gray = values
        .iter()
        .map(|&v| {
            if v.is_finite() {
                (1.0 + ((v - lo) / scale).round()).clamp(1.0, 65535.0) as u16
            } else {
                0
            }
        })
        .collect();
    let map = format!(
        "# value = offset + scale * (gray - 1) for gray >= 1\noffset = {lo:e}\nscale = {scale:e}\nnodata = 0\n"
    );
    (gray, map)
}

/// Sidecar for class rasters: one `gray = label` line per class.
pub fn class_map(labels: &[(u16, &str)]) -> String {
    let mut s = String::from("# categorical raster\n");
    for (g, l) in labels {
        let _ = writeln!(s, "{g} = {l}");
    }
    s
}

pub const HSKW_MAGIC: &[u8; 4] = b"HSKW";
pub const HSKW_VERSION: u16 = 1;
pub const HSKW_HEADER: usize = 64;

fn slice_code(s: &SliceSpec) -> (u16, f64, f64) {
    match *s {
        SliceSpec::FixedX(c) => (0, c.re, c.im),
        SliceSpec::FixedY(c) => (1, c.re, c.im),
        SliceSpec::Line { .. } => (2, 0.0, 0.0),
    }
}

/// Raw grid: 64-byte little-endian header then `nx·ny` f64 row-major
/// (row `j` is `Im w = y0 + j·dy`).
pub fn hskw(geometry: &GridGeometry, data: &[f64]) -> Vec<u8> {
    assert_eq!(data.len(), geometry.len());
    hskw_raw(slice_code(&geometry.slice), geometry, data)
}

/// Same, with the slice kind forced to 2 (a line in a higher-dimensional
/// space, whose origin and direction do not fit the header).
pub fn hskw_line(geometry: &GridGeometry, data: &[f64]) -> Vec<u8> {
    hskw_raw((2, 0.0, 0.0), geometry, data)
}

fn hskw_raw((kind, re, im): (u16, f64, f64), g: &GridGeometry, data: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HSKW_HEADER + 8 * data.len());
    out.extend_from_slice(HSKW_MAGIC);
    out.extend_from_slice(&HSKW_VERSION.to_le_bytes());
    out.extend_from_slice(&kind.to_le_bytes());
    out.extend_from_slice(&(g.nx as u32).to_le_bytes());
    out.extend_from_slice(&(g.ny as u32).to_le_bytes());
    for v in [g.x0, g.y0, g.dx, g.dy, re, im] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    debug_assert_eq!(out.len(), HSKW_HEADER);
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// A decoded raw grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RawGrid {
    pub kind: u16,
    pub nx: usize,
    pub ny: usize,
    /// `x0, y0, dx, dy`.
    pub frame: [f64; 4],
    pub slice_value: [f64; 2],
    pub data: Vec<f64>,
}

pub fn read_hskw(bytes: &[u8]) -> Result<RawGrid, String> {
    if bytes.len() < HSKW_HEADER || &bytes[..4] != HSKW_MAGIC {
        return Err("not an HSKW grid".into());
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    if u16_at(4) != HSKW_VERSION {
        return Err(format!("unsupported version {}", u16_at(4)));
    }
    let (nx, ny) = (u32_at(8) as usize, u32_at(12) as usize);
    if bytes.len() != HSKW_HEADER + 8 * nx * ny {
        return Err("length does not match the header".into());
    }
    Ok(RawGrid {
        kind: u16_at(6),
        nx,
        ny,
        frame: [f64_at(16), f64_at(24), f64_at(32), f64_at(40)],
        slice_value: [f64_at(48), f64_at(56)],
        data: (0..nx * ny).map(|k| f64_at(HSKW_HEADER + 8 * k)).collect(),
    })
}

/// CSV with a header row.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}
