//! One function per experiment kind. Each reads its keys from the
//! `[experiment]` section and returns its output files in memory.

use henon_skew_core::convergence::{ConvergenceReport, PotentialSpec};
use henon_skew_core::currents::{
    classify_pixels, off_band_fraction, slice_measure, GreenField, GridGeometry, PixelClass, SliceSpec,
};
use henon_skew_core::entropy::CandidateWindow;
use henon_skew_core::filtration::{compute_radius, TailConstants};
use henon_skew_core::{
    check_invariance, estimate_constants, BaseDynamics, BasinClass, Direction, GreenOptions, GreenStatus,
    ParamSequence, ProjectiveSystem, SkewSystem,
};
use log::info;
use num_complex::Complex64;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliError;
use crate::formats;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Files produced by an experiment plus a few human-readable summary lines
/// for standard output.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Vec<String>,
}

impl Outputs {
    fn file(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn raster(&mut self, stem: &str, geometry: &GridGeometry, values: &[f64]) {
        let (gray, map) = formats::affine_gray(values);
        self.file(&format!("{stem}.pgm"), formats::pgm16(geometry.nx, geometry.ny, &gray));
        self.file(&format!("{stem}.map"), map.into_bytes());
        self.file(&format!("{stem}.hskw"), formats::hskw(geometry, values));
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

const WINDOW: &[&str] = &["slice", "slice_value", "center", "half", "resolution"];
const GREEN: &[&str] = &["tol", "n_max", "direction", "lambda"];

/// Keys each experiment may read from `[experiment]`, besides `kind` and `seed`.
fn allowed_keys(kind: ExperimentKind) -> Vec<&'static str> {
    let own: &[&[&str]] = match kind {
        ExperimentKind::Filtration => &[&["margin", "samples", "check_points"]],
        ExperimentKind::GreenRaster => &[WINDOW, GREEN],
        ExperimentKind::JuliaRaster => &[WINDOW, GREEN, &["delta"]],
        ExperimentKind::AvgGreen => &[WINDOW, &["tol", "n_max", "n_mc", "depth"]],
        ExperimentKind::SliceMass => &[WINDOW, GREEN, &["band"]],
        ExperimentKind::Converge => &[WINDOW, &["tol", "n_max", "potential", "depth"]],
        ExperimentKind::Theta => &[WINDOW, &["tol", "n_max", "potential", "depth", "n_mc"]],
        ExperimentKind::Rigidity => &[WINDOW, &["tol", "n_max", "potential", "potential2", "depth"]],
        ExperimentKind::Entropy => &[&["slice", "slice_value", "center", "half", "eps", "n_lo", "n_hi", "candidates"]],
        ExperimentKind::BasinRaster => &[
            &["center", "half", "resolution", "n_max", "lambda", "origin", "direction", "n_sphere", "margin"],
        ],
        ExperimentKind::Constants => &[&["n_sphere", "margin"]],
    };
    let mut keys = vec!["kind", "seed"];
    keys.extend(own.iter().flat_map(|s| s.iter().copied()));
    keys
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let allowed = allowed_keys(cfg.kind);
    if let Some(k) = cfg.params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(CliError::config(
            0,
            format!("[experiment] key `{k}` is not used by {}", cfg.kind.name()),
        ));
    }
    info!("running {} (config {})", cfg.kind.name(), &cfg.hash[..12]);
    let out = match cfg.kind {
        ExperimentKind::Filtration => filtration(cfg),
        ExperimentKind::GreenRaster => green_raster(cfg),
        ExperimentKind::JuliaRaster => julia_raster(cfg),
        ExperimentKind::AvgGreen => avg_green(cfg),
        ExperimentKind::SliceMass => slice_mass(cfg),
        ExperimentKind::Converge => converge(cfg),
        ExperimentKind::Theta => theta(cfg),
        ExperimentKind::Rigidity => rigidity(cfg),
        ExperimentKind::Entropy => entropy(cfg),
        ExperimentKind::BasinRaster => basin_raster(cfg),
        ExperimentKind::Constants => constants(cfg),
    }?;
    Ok(out)
}

fn system(cfg: &ExperimentConfig) -> Result<SkewSystem, CliError> {
    Ok(SkewSystem::new(cfg.henon().clone(), cfg.base.clone())?)
}

fn green_opts(cfg: &ExperimentConfig) -> Result<GreenOptions, CliError> {
    let d = GreenOptions::default();
    Ok(GreenOptions {
        tol: cfg.params.positive("tol", d.tol)?,
        n_max: cfg.params.count("n_max", d.n_max)?,
    })
}

/// The slice window: `slice = x | y` fixes that coordinate to `slice_value`;
/// the square has centre `center`, half-width `half` (default `R + 1`).
fn geometry(cfg: &ExperimentConfig, radius: f64, default_res: usize) -> Result<GridGeometry, CliError> {
    let p = &cfg.params;
    let value = p.complex("slice_value", ZERO)?;
    let slice = match p.get_or("slice", "x".to_string())?.as_str() {
        "x" => SliceSpec::FixedX(value),
        "y" => SliceSpec::FixedY(value),
        other => return Err(CliError::config(0, format!("[experiment] slice must be x or y, got `{other}`"))),
    };
    let center = p.complex("center", ZERO)?;
    let half = p.positive("half", radius + 1.0)?;
    let n = p.count("resolution", default_res)?;
    Ok(GridGeometry::square(slice, center, half, n)?)
}

fn is_shift(cfg: &ExperimentConfig) -> bool {
    cfg.base.sigma == BaseDynamics::Shift
}

/// `G⁺` (or `G⁻` with `direction = minus`) over the window: along the base
/// orbit of `lambda`, or along a random sequence when the base is a shift.
fn green_field(cfg: &ExperimentConfig, sys: &SkewSystem, geom: &GridGeometry) -> Result<GreenField, CliError> {
    let opts = green_opts(cfg)?;
    let len = sys.chain_len(&opts);
    let direction = match cfg.params.get_or("direction", "plus".to_string())?.as_str() {
        "plus" => Direction::Forward,
        "minus" => Direction::Backward,
        other => return Err(CliError::config(0, format!("[experiment] direction must be plus or minus, got `{other}`"))),
    };
    let chain = if is_shift(cfg) {
        let mut seq = ParamSequence::new(cfg.base.space.clone(), cfg.require_seed()?);
        sys.chain_random(&mut seq, len, direction)
    } else {
        let lambda = cfg.lambda()?;
        match direction {
            Direction::Forward => sys.chain_plus(&lambda, len)?,
            Direction::Backward => sys.chain_minus(&lambda, len)?,
        }
    };
    Ok(sys.green_field(&chain, geom, &opts))
}

fn filtration(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let fam = cfg.henon();
    let p = &cfg.params;
    let margin = p.positive("margin", 1.1)?;
    let samples = p.count("samples", 64)?;
    let bare = compute_radius(fam, &cfg.base.space, 1.0, samples)?;
    let working = compute_radius(fam, &cfg.base.space, margin, samples)?;
    let tails = TailConstants::derive(fam, &working);
    let mut header = vec!["bare_radius", "margin", "radius", "coeff_sup", "a_sup", "a_inf", "tail_plus", "tail_minus"];
    let mut row = vec![
        num(bare.radius),
        num(margin),
        num(working.radius),
        num(working.coeff_sup),
        num(working.a_sup),
        num(working.a_inf),
        num(tails.plus),
        num(tails.minus),
    ];
    let mut out = Outputs::default();
    out.summary.push(format!("R = {}", bare.radius));
    out.summary.push(format!("working radius = {} (margin {margin})", working.radius));
    if let Some(points) = p.get::<usize>("check_points")? {
        let rep = check_invariance(fam, &cfg.base.space, working.radius, points, cfg.require_seed()?);
        header.extend(["check_points", "violations"]);
        row.extend([num(points as f64), num(rep.total_violations() as f64)]);
        out.summary.push(format!("invariance violations = {}", rep.total_violations()));
    }
    out.file("filtration.csv", formats::csv(&header, &[row]));
    Ok(out)
}

fn status_name(s: GreenStatus) -> &'static str {
    match s {
        GreenStatus::Converged => "converged",
        GreenStatus::EscapedCertified => "escaped",
        GreenStatus::BoundedCertified => "bounded",
        GreenStatus::Undecided => "undecided",
    }
}

fn green_raster(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let sys = system(cfg)?;
    let geom = geometry(cfg, sys.radius(), 256)?;
    let field = green_field(cfg, &sys, &geom)?;
    let values: Vec<f64> = field
        .data
        .iter()
        .map(|e| if e.is_decided() { e.value } else { f64::NAN })
        .collect();
    let mut out = Outputs::default();
    out.raster("green", &geom, &values);
    let rows: Vec<Vec<String>> = [
        GreenStatus::Converged,
        GreenStatus::EscapedCertified,
        GreenStatus::BoundedCertified,
        GreenStatus::Undecided,
    ]
    .into_iter()
    .map(|s| {
        let n = field.data.iter().filter(|e| e.status == s).count();
        vec![status_name(s).to_string(), n.to_string()]
    })
    .collect();
    out.file("green_status.csv", formats::csv(&["status", "count"], &rows));
    let max_err = field.data.iter().map(|e| e.err_bound).fold(0.0, f64::max);
    out.summary.push(format!("max error bound = {max_err:e}"));
    Ok(out)
}

fn julia_raster(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let sys = system(cfg)?;
    let geom = geometry(cfg, sys.radius(), 256)?;
    let delta = cfg.params.positive("delta", 1.0)?;
    let field = green_field(cfg, &sys, &geom)?;
    let classes = classify_pixels(&field, delta);
    const LABELS: [(PixelClass, u16, f64, &str); 4] = [
        (PixelClass::KInterior, 16384, 0.0, "k_interior"),
        (PixelClass::JBand, 65535, 1.0, "j_band"),
        (PixelClass::Escaped, 32768, 2.0, "escaped"),
        (PixelClass::Undecided, 0, 3.0, "undecided"),
    ];
    let lookup = |c: PixelClass| LABELS.iter().find(|l| l.0 == c).expect("all classes listed");
    let gray: Vec<u16> = classes.data.iter().map(|c| lookup(*c).1).collect();
    let codes: Vec<f64> = classes.data.iter().map(|c| lookup(*c).2).collect();
    let mut out = Outputs::default();
    out.file("julia.pgm", formats::pgm16(geom.nx, geom.ny, &gray));
    let labels: Vec<(u16, &str)> = LABELS.iter().map(|l| (l.1, l.3)).collect();
    out.file("julia.map", formats::class_map(&labels).into_bytes());
    out.file("julia.hskw", formats::hskw(&geom, &codes));
    let rows: Vec<Vec<String>> = LABELS
        .iter()
        .map(|l| {
            let n = classes.data.iter().filter(|c| **c == l.0).count();
            vec![l.3.to_string(), n.to_string()]
        })
        .collect();
    out.file("julia.csv", formats::csv(&["class", "count"], &rows));
    Ok(out)
}

fn avg_green(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let sys = system(cfg)?;
    let seed = cfg.require_seed()?;
    let geom = geometry(cfg, sys.radius(), 64)?;
    let n_mc = cfg.params.count("n_mc", 256)?;
    let depth: Option<usize> = cfg.params.get("depth")?;
    let opts = green_opts(cfg)?;
    let mut mean = Vec::with_capacity(geom.len());
    let mut se = Vec::with_capacity(geom.len());
    for j in 0..geom.ny {
        for i in 0..geom.nx {
            let z = geom.point(i, j);
            let a = match depth {
                Some(n) => sys.avg_green_depth(z, n, n_mc, seed)?,
                None => sys.avg_green(z, &opts, n_mc, seed)?,
            };
            mean.push(a.mean);
            se.push(a.std_error);
        }
        if j % 16 == 15 {
            info!("avg-green: {}/{} rows", j + 1, geom.ny);
        }
    }
    let mut out = Outputs::default();
    out.raster("avg_green", &geom, &mean);
    out.file("avg_green_se.hskw", formats::hskw(&geom, &se));
    let max_se = se.iter().copied().fold(0.0, f64::max);
    out.summary.push(format!("max standard error = {max_se:e}"));
    Ok(out)
}

fn slice_mass(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let sys = system(cfg)?;
    let geom = geometry(cfg, sys.radius(), 256)?;
    let width = cfg.params.count("band", 5)?;
    let field = green_field(cfg, &sys, &geom)?;
    let m = slice_measure(&field)?;
    let off = off_band_fraction(&field, &m, width);
    let header = [
        "resolution",
        "total_mass",
        "abs_mass",
        "min_density",
        "truncation_estimate",
        "off_band_fraction",
    ];
    let row = vec![
        geom.nx.to_string(),
        num(m.total_mass),
        num(m.abs_mass()),
        num(m.min_density),
        num(m.truncation_estimate),
        num(off),
    ];
    let mut out = Outputs::default();
    out.file("slice_mass.csv", formats::csv(&header, &[row]));
    out.file("density.hskw", formats::hskw(&geom, &m.density));
    out.summary.push(format!("total mass = {} (2π = {})", m.total_mass, std::f64::consts::TAU));
    out.summary.push(format!("off-band fraction = {off}"));
    Ok(out)
}

fn potential(cfg: &ExperimentConfig, key: &str, default: &str) -> Result<PotentialSpec, CliError> {
    let s: String = cfg.params.get_or(key, default.to_string())?;
    let u = match s.as_str() {
        "fs" => PotentialSpec::FubiniStudy,
        "logplus" => PotentialSpec::LogPlus,
        other => match other.strip_prefix("radial:").map(str::parse::<f64>) {
            Some(Ok(r2)) => PotentialSpec::Radial { r2 },
            _ => {
                return Err(CliError::config(
                    0,
                    format!("[experiment] {key} must be fs, logplus or radial:<r2>, got `{s}`"),
                ))
            }
        },
    };
    if !u.admissible() {
        return Err(CliError::config(0, format!("[experiment] {key} `{s}` is not admissible")));
    }
    Ok(u)
}

fn report_files(out: &mut Outputs, stem: &str, rep: &ConvergenceReport) {
    let rows: Vec<Vec<String>> = rep
        .errors
        .iter()
        .enumerate()
        .map(|(n, e)| vec![n.to_string(), num(*e)])
        .collect();
    out.file(&format!("{stem}.csv"), formats::csv(&["n", "e_n"], &rows));
    let header = [
        "fit_a",
        "fit_residual",
        "fit_lo",
        "fit_hi",
        "masked_fraction",
        "monotone_from",
        "noise_floor",
    ];
    let row = vec![
        num(rep.fit_a),
        num(rep.fit_residual),
        rep.fit_range.0.to_string(),
        rep.fit_range.1.to_string(),
        num(rep.masked_fraction),
        rep.monotone_from.to_string(),
        rep.noise_floor.map(num).unwrap_or_default(),
    ];
    out.file(&format!("{stem}_fit.csv"), formats::csv(&header, &[row]));
    if let Some(last) = rep.errors.last() {
        out.summary.push(format!("e_{} = {last:e}", rep.errors.len() - 1));
    }
    out.summary.push(format!("fit residual = {}", rep.fit_residual));
}

fn converge(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let sys = system(cfg)?;
    let seed = cfg.require_seed()?;
    let geom = geometry(cfg, sys.radius(), 256)?;
    let u = potential(cfg, "potential", "fs")?;
    let n_max = cfg.params.count("depth", 12)?;
    let mut seq = ParamSequence::new(cfg.base.space.clone(), seed);
    let rep = sys.pullback_convergence(&mut seq, u, &geom, n_max, &green_opts(cfg)?)?;
    let mut out = Outputs::default();
    report_files(&mut out, "converge", &rep);
    Ok(out)
}

fn theta(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let sys = system(cfg)?;
    let seed = cfg.require_seed()?;
    let geom = geometry(cfg, sys.radius(), 64)?;
    let u = potential(cfg, "potential", "fs")?;
    let n_max = cfg.params.count("depth", 12)?;
    let n_mc = cfg.params.count("n_mc", 64)?;
    let rep = sys.theta_average_pullback(u, &geom, n_max, n_mc, seed, &green_opts(cfg)?)?;
    let mut out = Outputs::default();
    report_files(&mut out, "theta", &rep);
    Ok(out)
}

fn rigidity(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let sys = system(cfg)?;
    let seed = cfg.require_seed()?;
    let geom = geometry(cfg, sys.radius(), 256)?;
    let u1 = potential(cfg, "potential", "fs")?;
    let u2 = potential(cfg, "potential2", "logplus")?;
    let n = cfg.params.count("depth", 12)?;
    let mut seq = ParamSequence::new(cfg.base.space.clone(), seed);
    let sup = sys.rigidity_probe(&mut seq, u1, u2, &geom, n, &green_opts(cfg)?)?;
    let mut out = Outputs::default();
    out.file("rigidity.csv", formats::csv(&["n", "sup_diff"], &[vec![n.to_string(), num(sup)]]));
    out.summary.push(format!("sup difference at n = {n}: {sup:e}"));
    Ok(out)
}

fn entropy(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let sys = system(cfg)?;
    let seed = cfg.require_seed()?;
    let p = &cfg.params;
    let eps = p.float_list("eps")?.unwrap_or_else(|| vec![0.05]);
    let n_lo = p.count("n_lo", 1)?;
    let n_hi = p.count("n_hi", 10)?;
    let candidates = p.count("candidates", 20_000)?;
    let value = p.complex("slice_value", ZERO)?;
    let slice = match p.get_or("slice", "x".to_string())?.as_str() {
        "x" => SliceSpec::FixedX(value),
        "y" => SliceSpec::FixedY(value),
        other => return Err(CliError::config(0, format!("[experiment] slice must be x or y, got `{other}`"))),
    };
    let window = CandidateWindow {
        slice,
        center: p.complex("center", ZERO)?,
        half: p.positive("half", sys.radius())?,
    };
    let est = sys.entropy_lower_bound(&window, &eps, (n_lo, n_hi), candidates, seed)?;
    let rows: Vec<Vec<String>> = est
        .iter()
        .map(|e| vec![e.n.to_string(), num(e.eps), e.s_n.to_string(), num(e.rate)])
        .collect();
    let mut out = Outputs::default();
    out.file("entropy.csv", formats::csv(&["n", "eps", "s_n", "rate"], &rows));
    for e in est.iter().filter(|e| e.n == n_hi) {
        out.summary.push(format!("n = {}, eps = {}: s_n = {}, rate = {}", e.n, e.eps, e.s_n, e.rate));
    }
    Ok(out)
}

fn projective(cfg: &ExperimentConfig) -> Result<ProjectiveSystem, CliError> {
    let seed = cfg.require_seed()?;
    let n_sphere = cfg.params.count("n_sphere", 2000)?;
    let margin: f64 = cfg.params.get_or("margin", 0.05)?;
    Ok(ProjectiveSystem::with_margin(
        cfg.lift().clone(),
        cfg.base.clone(),
        n_sphere,
        seed,
        margin,
    )?)
}

fn basin_raster(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let sys = projective(cfg)?;
    let dim = sys.lift().k() + 1;
    let p = &cfg.params;
    let vector = |key: &str| -> Result<Vec<Complex64>, CliError> {
        let v = p
            .complex_list(key)?
            .ok_or_else(|| CliError::config(0, format!("[experiment] missing key `{key}`")))?;
        if v.len() != dim {
            return Err(CliError::config(0, format!("[experiment] {key} needs {dim} entries")));
        }
        Ok(v)
    };
    let origin = vector("origin")?;
    let direction = vector("direction")?;
    let geom = GridGeometry::square(
        SliceSpec::FixedX(ZERO),
        p.complex("center", ZERO)?,
        p.positive("half", 2.0)?,
        p.count("resolution", 256)?,
    )?;
    let n_max = p.count("n_max", 200)?;
    let grid = sys.basin_raster(&cfg.lambda()?, &origin, &direction, &geom, n_max)?;
    const LABELS: [(BasinClass, u16, f64, &str); 3] = [
        (BasinClass::AttractedToZero, 16384, 0.0, "attracted_to_zero"),
        (BasinClass::EscapesToInfinity, 65535, 1.0, "escapes_to_infinity"),
        (BasinClass::Indeterminate, 0, 2.0, "indeterminate"),
    ];
    let lookup = |c: BasinClass| LABELS.iter().find(|l| l.0 == c).expect("all classes listed");
    let gray: Vec<u16> = grid.data.iter().map(|c| lookup(*c).1).collect();
    let codes: Vec<f64> = grid.data.iter().map(|c| lookup(*c).2).collect();
    let mut out = Outputs::default();
    out.file("basin.pgm", formats::pgm16(geom.nx, geom.ny, &gray));
    let labels: Vec<(u16, &str)> = LABELS.iter().map(|l| (l.1, l.3)).collect();
    out.file("basin.map", formats::class_map(&labels).into_bytes());
    out.file("basin.hskw", formats::hskw_line(&geom, &codes));
    for l in LABELS {
        let n = grid.data.iter().filter(|c| **c == l.0).count();
        out.summary.push(format!("{} = {n}", l.3));
    }
    Ok(out)
}

fn constants(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let seed = cfg.require_seed()?;
    let n_sphere = cfg.params.count("n_sphere", 2000)?;
    let margin: f64 = cfg.params.get_or("margin", 0.05)?;
    let c = estimate_constants(cfg.lift(), &cfg.base, n_sphere, seed, margin)?;
    let header = ["l", "big_l", "r", "big_r", "margin", "min_sampled", "max_sampled"];
    let row = vec![
        num(c.l_emp),
        num(c.big_l_emp),
        num(c.r),
        num(c.big_r),
        num(c.margin),
        num(c.min_sampled),
        num(c.max_sampled),
    ];
    let mut out = Outputs::default();
    out.file("constants.csv", formats::csv(&header, &[row]));
    out.summary.push(format!("r = {}, R = {}", c.r, c.big_r));
    Ok(out)
}
