//! User-defined diagonal metrics.
//!
//! A document is line based; `#` starts a comment. The top section names the
//! coordinates and gives the four diagonal components; optional sections
//! bind parameters, restrict the domain and set the sampling box.
//!
//! ```text
//! name = schwarzschild-from-file
//! coordinates = t, r, theta, phi
//! g00 = 1 - 2*M/r
//! g11 = -(1 - 2*M/r)^(-1)
//! g22 = -r^2
//! g33 = -r^2*sin(theta)^2
//!
//! [params]
//! M = 1
//!
//! [domain]
//! r > 2*M
//! theta > 0.001
//! theta < 3.14
//!
//! [sample]
//! r = 3 .. 10
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{Matrix4, Vector4};
use sha2::{Digest, Sha256};

use super::expr::{parse_at, Expr, Resolved};
use crate::error::{Error, Position, Result};
use crate::geometry::{ChartId, Family, MetricAtPoint, MetricSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparison {
    fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Gt => ">",
            Comparison::Ge => ">=",
        }
    }

    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Comparison::Lt => a < b,
            Comparison::Le => a <= b,
            Comparison::Gt => a > b,
            Comparison::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub lhs: Expr,
    pub op: Comparison,
    pub rhs: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricConfig {
    pub name: Option<String>,
    pub coordinates: [String; 4],
    /// `g00, g11, g22, g33`.
    pub components: [Expr; 4],
    pub params: BTreeMap<String, f64>,
    pub constraints: Vec<Constraint>,
    /// Sampling ranges for individual coordinates.
    pub sample: BTreeMap<String, (f64, f64)>,
}

impl MetricConfig {
    /// Canonical text form; parsing it yields an identical config.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.name {
            let _ = writeln!(out, "name = {name}");
        }
        let _ = writeln!(out, "coordinates = {}", self.coordinates.join(", "));
        for (i, e) in self.components.iter().enumerate() {
            let _ = writeln!(out, "g{i}{i} = {e}");
        }
        if !self.params.is_empty() {
            out.push_str("\n[params]\n");
            for (k, v) in &self.params {
                let _ = writeln!(out, "{k} = {v:?}");
            }
        }
        if !self.constraints.is_empty() {
            out.push_str("\n[domain]\n");
            for c in &self.constraints {
                let _ = writeln!(out, "{} {} {}", c.lhs, c.op.symbol(), c.rhs);
            }
        }
        if !self.sample.is_empty() {
            out.push_str("\n[sample]\n");
            for coord in &self.coordinates {
                if let Some((lo, hi)) = self.sample.get(coord) {
                    let _ = writeln!(out, "{coord} = {lo:?} .. {hi:?}");
                }
            }
        }
        out
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.serialize().as_bytes()))
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| "config".to_string())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Top,
    Params,
    Domain,
    Sample,
}

fn parse_error(line: usize, column: usize, expected: &[&str]) -> Error {
    Error::Parse {
        position: Position { line, column },
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

/// Splits `key = value` and returns the value with its 1-based column.
fn split_assignment(raw: &str, lineno: usize) -> Result<(&str, &str, usize)> {
    let eq = raw
        .find('=')
        .ok_or_else(|| parse_error(lineno, raw.trim_end().len() + 1, &["`=`"]))?;
    let key = raw[..eq].trim();
    if key.is_empty() {
        return Err(parse_error(lineno, 1, &["key"]));
    }
    let value = &raw[eq + 1..];
    let column = raw[..eq + 1].chars().count() + 1;
    Ok((key, value, column))
}

fn constant(value: &str, lineno: usize, column: usize) -> Result<f64> {
    let e = parse_at(value, lineno, column)?;
    let v = e
        .eval(&|_| None)
        .map_err(|_| parse_error(lineno, column, &["numeric constant"]))?;
    if !v.is_finite() {
        return Err(Error::Eval(format!("line {lineno}: value is not finite")));
    }
    Ok(v)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

pub fn parse_metric_config(text: &str) -> Result<MetricConfig> {
    let mut section = Section::Top;
    let mut name = None;
    let mut coordinates: Option<[String; 4]> = None;
    let mut components: [Option<(Expr, usize)>; 4] = Default::default();
    let mut params = BTreeMap::new();
    let mut constraints = Vec::new();
    let mut sample_raw: Vec<(String, (f64, f64), usize)> = Vec::new();
    let mut uses: Vec<(Vec<String>, usize)> = Vec::new();

    for (idx, full) in text.lines().enumerate() {
        let lineno = idx + 1;
        let raw = match full.find('#') {
            Some(p) => &full[..p],
            None => full,
        };
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('[') {
            section = match trimmed {
                "[params]" => Section::Params,
                "[domain]" => Section::Domain,
                "[sample]" => Section::Sample,
                _ => {
                    let col = raw.find('[').unwrap_or(0) + 1;
                    return Err(parse_error(
                        lineno,
                        col,
                        &["[params]", "[domain]", "[sample]"],
                    ));
                }
            };
            continue;
        }
        match section {
            Section::Top => {
                let (key, value, column) = split_assignment(raw, lineno)?;
                match key {
                    "name" => name = Some(value.trim().to_string()),
                    "coordinates" => {
                        let names: Vec<String> =
                            value.split(',').map(|s| s.trim().to_string()).collect();
                        if names.len() != 4 || !names.iter().all(|n| is_identifier(n)) {
                            return Err(parse_error(
                                lineno,
                                column,
                                &["four comma-separated coordinate names"],
                            ));
                        }
                        let mut sorted = names.clone();
                        sorted.sort();
                        sorted.dedup();
                        if sorted.len() != 4 {
                            return Err(parse_error(
                                lineno,
                                column,
                                &["distinct coordinate names"],
                            ));
                        }
                        coordinates = Some([
                            names[0].clone(),
                            names[1].clone(),
                            names[2].clone(),
                            names[3].clone(),
                        ]);
                    }
                    _ => {
                        let slot = (0..4).find(|i| key == format!("g{i}{i}"));
                        let Some(i) = slot else {
                            let b = key.as_bytes();
                            if b.len() == 3
                                && b[0] == b'g'
                                && b[1].is_ascii_digit()
                                && b[2].is_ascii_digit()
                            {
                                return Err(parse_error(
                                    lineno,
                                    1,
                                    &["diagonal component g00, g11, g22 or g33"],
                                ));
                            }
                            return Err(parse_error(
                                lineno,
                                1,
                                &["name", "coordinates", "g00", "g11", "g22", "g33"],
                            ));
                        };
                        let e = parse_at(value, lineno, column)?;
                        uses.push((e.variables(), lineno));
                        components[i] = Some((e, lineno));
                    }
                }
            }
            Section::Params => {
                let (key, value, column) = split_assignment(raw, lineno)?;
                if !is_identifier(key) {
                    return Err(parse_error(lineno, 1, &["parameter name"]));
                }
                params.insert(key.to_string(), constant(value, lineno, column)?);
            }
            Section::Domain => {
                let (pos, op, len) = find_comparison(raw).ok_or_else(|| {
                    parse_error(lineno, raw.trim_end().len() + 1, &["<", "<=", ">", ">="])
                })?;
                let lhs = parse_at(&raw[..pos], lineno, 1)?;
                let rhs_col = raw[..pos + len].chars().count() + 1;
                let rhs = parse_at(&raw[pos + len..], lineno, rhs_col)?;
                let mut vars = lhs.variables();
                vars.extend(rhs.variables());
                uses.push((vars, lineno));
                constraints.push(Constraint { lhs, op, rhs });
            }
            Section::Sample => {
                let (key, value, column) = split_assignment(raw, lineno)?;
                let dots = value
                    .find("..")
                    .ok_or_else(|| parse_error(lineno, column + value.len(), &["`..`"]))?;
                let lo = constant(&value[..dots], lineno, column)?;
                let hi = constant(&value[dots + 2..], lineno, column + dots + 2)?;
                if !(lo < hi) {
                    return Err(Error::Eval(format!("line {lineno}: empty sampling range")));
                }
                sample_raw.push((key.to_string(), (lo, hi), lineno));
            }
        }
    }

    let end = text.lines().count() + 1;
    let coordinates = coordinates.ok_or_else(|| parse_error(end, 1, &["coordinates"]))?;
    let mut comps = Vec::with_capacity(4);
    for (i, c) in components.into_iter().enumerate() {
        let want = format!("g{i}{i}");
        comps.push(c.ok_or_else(|| parse_error(end, 1, &[want.as_str()]))?.0);
    }
    for (vars, lineno) in &uses {
        if let Some(v) = vars
            .iter()
            .find(|v| !coordinates.contains(v) && !params.contains_key(*v))
        {
            return Err(Error::Eval(format!(
                "line {lineno}: `{v}` is neither a coordinate nor a parameter"
            )));
        }
    }
    if let Some(p) = params.keys().find(|p| coordinates.contains(p)) {
        return Err(Error::Eval(format!("parameter `{p}` shadows a coordinate")));
    }
    let mut sample = BTreeMap::new();
    for (coord, range, lineno) in sample_raw {
        if !coordinates.contains(&coord) {
            return Err(Error::Eval(format!(
                "line {lineno}: `{coord}` is not a coordinate"
            )));
        }
        sample.insert(coord, range);
    }
    let components: [Expr; 4] = comps.try_into().expect("four components");
    Ok(MetricConfig {
        name,
        coordinates,
        components,
        params,
        constraints,
        sample,
    })
}

fn find_comparison(raw: &str) -> Option<(usize, Comparison, usize)> {
    let pos = raw.find(['<', '>'])?;
    let bytes = raw.as_bytes();
    let eq = bytes.get(pos + 1) == Some(&b'=');
    let op = match (bytes[pos], eq) {
        (b'<', false) => Comparison::Lt,
        (b'<', true) => Comparison::Le,
        (b'>', false) => Comparison::Gt,
        _ => Comparison::Ge,
    };
    Some((pos, op, if eq { 2 } else { 1 }))
}

struct Bound {
    lhs: Resolved,
    op: Comparison,
    rhs: Resolved,
}

/// Probe grid per axis, as fractions of the sampling range.
const PROBE_FRACTIONS: [f64; 3] = [0.2, 0.5, 0.8];

/// Builds a diagonal metric with finite-difference derivatives.
///
/// The components are probed on a small grid inside the sampling box; a
/// non-finite value or a wrong signature at any admitted probe point is an
/// error.
pub fn spec_from_config(cfg: &MetricConfig) -> Result<MetricSpec> {
    let comps: Vec<Resolved> = cfg
        .components
        .iter()
        .map(|e| e.resolve(&cfg.coordinates, &cfg.params))
        .collect::<Result<_>>()?;
    let bounds: Vec<Bound> = cfg
        .constraints
        .iter()
        .map(|c| {
            Ok(Bound {
                lhs: c.lhs.resolve(&cfg.coordinates, &cfg.params)?,
                op: c.op,
                rhs: c.rhs.resolve(&cfg.coordinates, &cfg.params)?,
            })
        })
        .collect::<Result<_>>()?;

    let guard = move |x: &[f64; 4]| {
        bounds
            .iter()
            .all(|b| b.op.holds(b.lhs.eval(x), b.rhs.eval(x)))
    };
    let comps_for_eval = comps.clone();
    let components = move |x: &[f64; 4]| {
        Matrix4::from_diagonal(&Vector4::from_fn(|i, _| comps_for_eval[i].eval(x)))
    };

    let mut sample_box = [(-1.0, 1.0); 4];
    for (i, coord) in cfg.coordinates.iter().enumerate() {
        if let Some(&range) = cfg.sample.get(coord) {
            sample_box[i] = range;
        }
    }

    let mut admitted = 0usize;
    for a in PROBE_FRACTIONS {
        for b in PROBE_FRACTIONS {
            for c in PROBE_FRACTIONS {
                for d in PROBE_FRACTIONS {
                    let f = [a, b, c, d];
                    let x: [f64; 4] = std::array::from_fn(|i| {
                        sample_box[i].0 + f[i] * (sample_box[i].1 - sample_box[i].0)
                    });
                    if !guard(&x) {
                        continue;
                    }
                    admitted += 1;
                    for (i, comp) in comps.iter().enumerate() {
                        let v = comp.eval(&x);
                        if !v.is_finite() {
                            return Err(Error::Eval(format!(
                                "g{i}{i} = {} is not finite at {x:?}",
                                cfg.components[i]
                            )));
                        }
                    }
                    let m = MetricAtPoint::from_lower(components(&x))?;
                    if !m.is_lorentzian() {
                        return Err(Error::Signature {
                            eigenvalues: m.eigenvalues(),
                        });
                    }
                }
            }
        }
    }
    if admitted == 0 {
        return Err(Error::Eval(
            "no probe point of the sampling box satisfies the domain constraints".to_string(),
        ));
    }

    Ok(MetricSpec::new(
        cfg.display_name(),
        ChartId::from_names(&cfg.coordinates),
        components,
        guard,
    )
    .with_diagonal(true)
    .with_family(Family::General)
    .with_sample_box(sample_box))
}
