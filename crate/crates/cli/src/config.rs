//! Sectioned key/value configs.
//!
//! ```text
//! # the quadratic Hénon map with a = 0.3
//! [family]
//! factor.1.degree = 2
//! factor.1.coeffs = 0, 0
//! factor.1.a = 0.3
//!
//! [base]
//! space = point
//!
//! [experiment]
//! kind = filtration
//! ```
//!
//! `factor.N.coeffs` lists the non-leading coefficients of the monic
//! polynomial from `y^{d-1}` down to `y^0`. Values may be polynomial
//! expressions in the base coordinates `u`, `v`. A homogeneous lift is given
//! with `kind = homogeneous`, `k`, and `component.0 … component.k`.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use henon_skew_core::{
    Base, BaseDynamics, BasePoint, BaseSpace, HenonFactor, HenonFamily, HomogeneousLift,
};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::expr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExperimentKind {
    Filtration,
    GreenRaster,
    JuliaRaster,
    AvgGreen,
    SliceMass,
    Converge,
    Theta,
    Rigidity,
    Entropy,
    BasinRaster,
    Constants,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 11] = [
        ExperimentKind::Filtration,
        ExperimentKind::GreenRaster,
        ExperimentKind::JuliaRaster,
        ExperimentKind::AvgGreen,
        ExperimentKind::SliceMass,
        ExperimentKind::Converge,
        ExperimentKind::Theta,
        ExperimentKind::Rigidity,
        ExperimentKind::Entropy,
        ExperimentKind::BasinRaster,
        ExperimentKind::Constants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Filtration => "filtration",
            ExperimentKind::GreenRaster => "green-raster",
            ExperimentKind::JuliaRaster => "julia-raster",
            ExperimentKind::AvgGreen => "avg-green",
            ExperimentKind::SliceMass => "slice-mass",
            ExperimentKind::Converge => "converge",
            ExperimentKind::Theta => "theta",
            ExperimentKind::Rigidity => "rigidity",
            ExperimentKind::Entropy => "entropy",
            ExperimentKind::BasinRaster => "basin-raster",
            ExperimentKind::Constants => "constants",
        }
    }

    pub fn uses_lift(self) -> bool {
        matches!(self, ExperimentKind::BasinRaster | ExperimentKind::Constants)
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// Section → key → (value, line number).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

const SECTIONS: [&str; 4] = ["family", "base", "experiment", "output"];

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RawConfig::default();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::config(line_no, "unterminated section header"))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(CliError::config(line_no, format!("unknown section [{name}]")));
                }
                cfg.sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(line_no, "expected `key = value`"))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(CliError::config(line_no, "empty key or value"));
            }
            let section = current
                .as_ref()
                .ok_or_else(|| CliError::config(line_no, "key outside of any section"))?;
            let prev = cfg
                .sections
                .get_mut(section)
                .expect("section exists")
                .insert(k.to_string(), (v.to_string(), line_no));
            if prev.is_some() {
                return Err(CliError::config(line_no, format!("duplicate key `{k}` in [{section}]")));
            }
        }
        Ok(cfg)
    }

    pub fn set(&mut self, section: &str, key: &str, value: String) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), (value, 0));
    }

    fn section(&self, name: &str) -> BTreeMap<String, (String, usize)> {
        self.sections.get(name).cloned().unwrap_or_default()
    }

    /// Sorted `section.key = value` lines; the config hash is taken over
    /// this. The output location is not part of the experiment and is left out.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (s, kv) in self.sections.iter().filter(|(s, _)| s.as_str() != "output") {
            for (k, (v, _)) in kv {
                let _ = writeln!(out, "{s}.{k} = {v}");
            }
        }
        out
    }
}

/// Key/value access that remembers which keys were read, so leftovers can be
/// reported as typos.
#[derive(Debug)]
pub struct Section {
    name: String,
    entries: BTreeMap<String, (String, usize)>,
    used: RefCell<BTreeSet<String>>,
}

impl Section {
    fn new(name: &str, entries: BTreeMap<String, (String, usize)>) -> Self {
        Section {
            name: name.to_string(),
            entries,
            used: RefCell::new(BTreeSet::new()),
        }
    }

    pub fn raw(&self, key: &str) -> Option<(&str, usize)> {
        let (v, line) = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some((v.as_str(), *line))
    }

    fn err(&self, line: usize, key: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::config(line, format!("[{}] {key}: {msg}", self.name))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|e| self.err(line, key, e)),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| CliError::config(0, format!("[{}] missing key `{key}`", self.name)))
    }

    /// A number that must be strictly positive.
    pub fn positive(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v: f64 = self.get_or(key, default)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::config(0, format!("[{}] {key} must be positive, got {v}", self.name)))
        }
    }

    pub fn count(&self, key: &str, default: usize) -> Result<usize, CliError> {
        let v: usize = self.get_or(key, default)?;
        if v > 0 {
            Ok(v)
        } else {
            Err(CliError::config(0, format!("[{}] {key} must be at least 1", self.name)))
        }
    }

    pub fn complex(&self, key: &str, default: Complex64) -> Result<Complex64, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some((v, line)) => expr::parse_complex(v).map_err(|e| self.err(line, key, e)),
        }
    }

    /// Comma-separated constants.
    pub fn complex_list(&self, key: &str) -> Result<Option<Vec<Complex64>>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| expr::parse_complex(s.trim()).map_err(|e| self.err(line, key, e)))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }

    pub fn float_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| self.err(line, key, e)))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn ensure_all_used(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        match self.entries.iter().find(|(k, _)| !used.contains(*k)) {
            Some((k, (_, line))) => Err(self.err(*line, k, "unknown key")),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug)]
pub enum FamilySpec {
    Henon(HenonFamily),
    Homogeneous(HomogeneousLift),
}

/// A parsed and validated experiment description.
#[derive(Debug)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub family: FamilySpec,
    pub base: Base,
    pub seed: Option<u64>,
    pub out: PathBuf,
    /// The `[experiment]` section; experiments read their own keys from it.
    pub params: Section,
    /// SHA-256 of the canonical key/value listing.
    pub hash: String,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub kind: Option<ExperimentKind>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_text(text: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let mut raw = RawConfig::parse(text)?;
        if let Some(k) = overrides.kind {
            raw.set("experiment", "kind", k.name().to_string());
        }
        if let Some(s) = overrides.seed {
            raw.set("experiment", "seed", s.to_string());
        }
        if let Some(o) = &overrides.out {
            raw.set("output", "dir", o.display().to_string());
        }
        let hash = hex(&Sha256::digest(raw.canonical().as_bytes()));

        let exp = Section::new("experiment", raw.section("experiment"));
        let kind: ExperimentKind = exp.require("kind")?;
        let seed: Option<u64> = exp.get("seed")?;

        let output = Section::new("output", raw.section("output"));
        let out = PathBuf::from(output.get_or("dir", "out".to_string())?);
        output.ensure_all_used()?;

        let base_sec = Section::new("base", raw.section("base"));
        let base = parse_base(&base_sec)?;
        base_sec.ensure_all_used()?;

        let fam_sec = Section::new("family", raw.section("family"));
        let family = parse_family(&fam_sec)?;
        fam_sec.ensure_all_used()?;

        match (&family, kind.uses_lift()) {
            (FamilySpec::Henon(_), true) => {
                return Err(CliError::config(0, format!("{} needs a homogeneous family", kind.name())))
            }
            (FamilySpec::Homogeneous(_), false) => {
                return Err(CliError::config(0, format!("{} needs a Hénon family", kind.name())))
            }
            _ => {}
        }
        if let FamilySpec::Henon(fam) = &family {
            fam.validate_on(&base.space.grid(16))
                .map_err(|e| CliError::Validation(e.to_string()))?;
        }

        Ok(ExperimentConfig {
            kind,
            family,
            base,
            seed,
            out,
            params: exp,
            hash,
        })
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| {
            CliError::config(0, format!("{} is stochastic and needs a seed", self.kind.name()))
        })
    }

    pub fn henon(&self) -> &HenonFamily {
        match &self.family {
            FamilySpec::Henon(f) => f,
            FamilySpec::Homogeneous(_) => unreachable!("checked at parse time"),
        }
    }

    pub fn lift(&self) -> &HomogeneousLift {
        match &self.family {
            FamilySpec::Homogeneous(l) => l,
            FamilySpec::Henon(_) => unreachable!("checked at parse time"),
        }
    }

    /// The `lambda` key as a base point, defaulting to the centre of the base.
    pub fn lambda(&self) -> Result<BasePoint, CliError> {
        let Some((v, line)) = self.params.raw("lambda") else {
            return Ok(self.base.space.center());
        };
        let nums = parse_floats(v).map_err(|e| CliError::config(line, format!("lambda: {e}")))?;
        let p = match (&self.base.space, nums.as_slice()) {
            (BaseSpace::Circle, [t]) => BasePoint::angle(*t),
            (_, [a]) => BasePoint::scalar(*a),
            (_, [a, b]) => BasePoint::new([*a, *b]),
            _ => return Err(CliError::config(line, "lambda takes one or two numbers")),
        };
        if !self.base.space.contains(&p, 1e-12) {
            return Err(CliError::Validation(format!("lambda {v} is not in the base space")));
        }
        Ok(p)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

fn parse_base(sec: &Section) -> Result<Base, CliError> {
    let space_name: String = sec.get_or("space", "point".to_string())?;
    let pair = |key: &str| -> Result<[f64; 2], CliError> {
        let (v, line) = sec
            .raw(key)
            .ok_or_else(|| CliError::config(0, format!("[base] missing key `{key}`")))?;
        match parse_floats(v).map_err(|e| CliError::config(line, e))?.as_slice() {
            [a] => Ok([*a, 0.0]),
            [a, b] => Ok([*a, *b]),
            _ => Err(CliError::config(line, format!("[base] {key} takes one or two numbers"))),
        }
    };
    let space = match space_name.as_str() {
        "point" => BaseSpace::point(),
        "interval" => {
            let (lo, hi) = (pair("lo")?, pair("hi")?);
            BaseSpace::interval(lo[0], hi[0])
        }
        "rect" => BaseSpace::rect(pair("lo")?, pair("hi")?),
        "circle" => BaseSpace::Circle,
        "finite" => {
            let (v, line) = sec
                .raw("points")
                .ok_or_else(|| CliError::config(0, "[base] finite space needs `points`"))?;
            let pts = v
                .split(';')
                .map(|p| match parse_floats(p).map_err(|e| CliError::config(line, e))?.as_slice() {
                    [a] => Ok(BasePoint::scalar(*a)),
                    [a, b] => Ok(BasePoint::new([*a, *b])),
                    _ => Err(CliError::config(line, "[base] each point takes one or two numbers")),
                })
                .collect::<Result<Vec<_>, _>>()?;
            BaseSpace::Finite(pts)
        }
        other => return Err(CliError::config(0, format!("[base] unknown space `{other}`"))),
    };
    let dyn_name: String = sec.get_or("dynamics", "identity".to_string())?;
    let sigma = match dyn_name.as_str() {
        "identity" => BaseDynamics::Identity,
        "contraction" => BaseDynamics::Contraction { c: sec.complex("c", Complex64::new(0.5, 0.0))? },
        "rotation" => BaseDynamics::Rotation { alpha: sec.require("alpha")? },
        "shift" => BaseDynamics::Shift,
        other => return Err(CliError::config(0, format!("[base] unknown dynamics `{other}`"))),
    };
    Base::new(space, sigma).map_err(|e| CliError::Validation(e.to_string()))
}

fn parse_family(sec: &Section) -> Result<FamilySpec, CliError> {
    let kind: String = sec.get_or("kind", "henon".to_string())?;
    match kind.as_str() {
        "henon" => parse_henon(sec).map(FamilySpec::Henon),
        "homogeneous" => parse_lift(sec).map(FamilySpec::Homogeneous),
        other => Err(CliError::config(0, format!("[family] unknown kind `{other}`"))),
    }
}

fn coeff(sec: &Section, key: &str) -> Result<henon_skew_core::CoeffMap, CliError> {
    let (v, line) = sec
        .raw(key)
        .ok_or_else(|| CliError::config(0, format!("[family] missing key `{key}`")))?;
    expr::parse(v)
        .map_err(|e| CliError::config(line, format!("[family] {key}: {e}")))?
        .to_coeff_map()
        .map_err(|e| CliError::config(line, format!("[family] {key}: {e}")))
}

fn parse_henon(sec: &Section) -> Result<HenonFamily, CliError> {
    let mut indices = BTreeSet::new();
    for key in sec.keys() {
        if let Some(rest) = key.strip_prefix("factor.") {
            let idx = rest.split('.').next().and_then(|s| s.parse::<usize>().ok());
            match idx {
                Some(i) if i >= 1 => {
                    indices.insert(i);
                }
                _ => return Err(CliError::config(0, format!("[family] bad factor key `{key}`"))),
            }
        }
    }
    if indices.is_empty() {
        return Err(CliError::config(0, "[family] no factors given"));
    }
    if indices.iter().copied().ne(1..=indices.len()) {
        return Err(CliError::config(0, "[family] factors must be numbered 1, 2, … without gaps"));
    }
    let mut factors = Vec::new();
    for i in indices {
        let degree: usize = sec.require(&format!("factor.{i}.degree"))?;
        let key = format!("factor.{i}.coeffs");
        let coeffs = match sec.raw(&key) {
            None => vec![henon_skew_core::CoeffMap::zero(); degree],
            Some((v, line)) => v
                .split(',')
                .map(|s| {
                    expr::parse(s.trim())
                        .map_err(|e| e.to_string())
                        .and_then(|p| p.to_coeff_map())
                        .map_err(|e| CliError::config(line, format!("[family] {key}: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        let a = coeff(sec, &format!("factor.{i}.a"))?;
        let f = HenonFactor::from_descending(degree, coeffs, a)
            .map_err(|e| CliError::Validation(format!("factor {i}: {e}")))?;
        factors.push(f);
    }
    HenonFamily::new(factors).map_err(|e| CliError::Validation(e.to_string()))
}

fn parse_lift(sec: &Section) -> Result<HomogeneousLift, CliError> {
    let k: usize = sec.require("k")?;
    let mut comps = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let key = format!("component.{i}");
        let (v, line) = sec
            .raw(&key)
            .ok_or_else(|| CliError::config(0, format!("[family] missing key `{key}`")))?;
        let p = expr::parse(v)
            .map_err(|e| e.to_string())
            .and_then(|p| p.to_homog(k))
            .map_err(|e| CliError::config(line, format!("[family] {key}: {e}")))?;
        comps.push(p);
    }
    let degree = comps[0]
        .homogeneous_degree()
        .ok_or_else(|| CliError::Validation("component.0 is not homogeneous".into()))?;
    HomogeneousLift::new(k, degree, comps).map_err(|e| CliError::Validation(e.to_string()))
}
