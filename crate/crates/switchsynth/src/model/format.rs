//! Line-oriented text format for models.
//!
//! Explicit form:
//!
//! ```text
//! dimension 2
//! tau 0.5
//! modes 2
//! mode 1
//! A:
//! -0.016666666666666666 0
//! 0 -0.014214641080312722
//! b:
//! 0.3333333333333333 0
//! mode 2
//! ...
//! box:
//! lower: 3 1.5
//! upper: 3.4 1.8
//! eta 1/40          # optional method parameters
//! delta 0.002 0.0015
//! ```
//!
//! Builder shorthand (`builder: boost1` or `builder: boost3`) replaces the
//! mode blocks with named parameter assignments (`x_c 70` or `x_c = 70`);
//! `boost3` additionally accepts `sigma_available: 000 001 ...`. Numbers may
//! be decimals, scientific notation, or fractions like `1/60000`. `#` starts
//! a comment.

use crate::error::{Error, Result};
use crate::flow::{Matrix, Vector};
use crate::model::{
    build_boost_1cell, build_boost_3cell, Boost1CellParams, Boost3CellParams, LinearMode,
    StateBox, SwitchedSystem, ALL_SIGMAS,
};

/// A parsed model file: the system plus optional safe box and method
/// parameters carried alongside it.
#[derive(Clone, Debug)]
pub struct ParsedModel {
    pub system: SwitchedSystem,
    pub region: Option<StateBox>,
    pub eta: Option<f64>,
    pub delta: Option<Vec<f64>>,
}

/// Parse a decimal, scientific-notation or `p/q` fraction literal.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: f64 = num.trim().parse().ok()?;
        let d: f64 = den.trim().parse().ok()?;
        if d == 0.0 {
            return None;
        }
        Some(n / d)
    } else {
        s.parse().ok()
    }
}

struct Lines<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .map(|(i, l)| {
                let l = match l.find('#') {
                    Some(p) => &l[..p],
                    None => l,
                };
                (i + 1, l.trim())
            })
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Lines { items, pos: 0 }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.items.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let it = self.items.get(self.pos).copied();
        if it.is_some() {
            self.pos += 1;
        }
        it
    }

    fn last_line(&self) -> usize {
        self.items.last().map(|(n, _)| *n).unwrap_or(0)
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Split `key value`, `key = value` or `key: value` into (key, value).
fn key_value(line: &str) -> Option<(&str, &str)> {
    let line = line.trim();
    if let Some((k, v)) = line.split_once(':') {
        return Some((k.trim(), v.trim()));
    }
    if let Some((k, v)) = line.split_once('=') {
        return Some((k.trim(), v.trim()));
    }
    let mut it = line.splitn(2, char::is_whitespace);
    let k = it.next()?;
    Some((k, it.next().unwrap_or("").trim()))
}

fn parse_row(line_no: usize, s: &str, expect: Option<usize>) -> Result<Vec<f64>> {
    let vals: Vec<f64> = s
        .split_whitespace()
        .map(|t| parse_real(t).ok_or_else(|| err(line_no, format!("invalid number `{t}`"))))
        .collect::<Result<_>>()?;
    if let Some(n) = expect {
        if vals.len() != n {
            return Err(err(
                line_no,
                format!("expected {n} numbers, got {}", vals.len()),
            ));
        }
    }
    Ok(vals)
}

pub fn parse_system(text: &str) -> Result<ParsedModel> {
    let mut lines = Lines::new(text);
    match lines.peek() {
        Some((_, l)) if key_value(l).map(|(k, _)| k) == Some("builder") => parse_builder(&mut lines),
        Some(_) => parse_explicit(&mut lines),
        None => Err(err(0, "empty model file")),
    }
}

fn parse_tail(
    lines: &mut Lines,
    region: &mut Option<StateBox>,
    eta: &mut Option<f64>,
    delta: &mut Option<Vec<f64>>,
    dim: usize,
) -> Result<()> {
    while let Some((ln, l)) = lines.next() {
        let (key, val) = key_value(l).ok_or_else(|| err(ln, "expected `key value`"))?;
        match key {
            "box" => {
                let (ln_lo, lo_line) =
                    lines.next().ok_or_else(|| err(ln, "box: missing `lower:` row"))?;
                let (klo, vlo) =
                    key_value(lo_line).ok_or_else(|| err(ln_lo, "expected `lower: ...`"))?;
                if klo != "lower" {
                    return Err(err(ln_lo, "expected `lower:` row"));
                }
                let (ln_hi, hi_line) =
                    lines.next().ok_or_else(|| err(ln_lo, "box: missing `upper:` row"))?;
                let (khi, vhi) =
                    key_value(hi_line).ok_or_else(|| err(ln_hi, "expected `upper: ...`"))?;
                if khi != "upper" {
                    return Err(err(ln_hi, "expected `upper:` row"));
                }
                let lo = parse_row(ln_lo, vlo, Some(dim))?;
                let hi = parse_row(ln_hi, vhi, Some(dim))?;
                *region = Some(StateBox::new(Vector::from_vec(lo), Vector::from_vec(hi))?);
            }
            "eta" => {
                let v = parse_real(val).ok_or_else(|| err(ln, "invalid eta"))?;
                if !(v > 0.0) {
                    return Err(err(ln, "eta must be positive"));
                }
                *eta = Some(v);
            }
            "delta" => {
                let row = parse_row(ln, val, None)?;
                if row.is_empty() || row.iter().any(|v| !(*v > 0.0)) {
                    return Err(err(ln, "delta must be positive"));
                }
                *delta = Some(row);
            }
            other => return Err(err(ln, format!("unexpected key `{other}`"))),
        }
    }
    Ok(())
}

fn parse_explicit(lines: &mut Lines) -> Result<ParsedModel> {
    let mut dim: Option<usize> = None;
    let mut tau: Option<f64> = None;
    let mut mode_count: Option<usize> = None;

    // header
    loop {
        let (ln, l) = lines
            .peek()
            .ok_or_else(|| err(lines.last_line(), "missing field `modes`"))?;
        let (key, val) = key_value(l).ok_or_else(|| err(ln, "expected `key value`"))?;
        match key {
            "dimension" => {
                dim = Some(val.parse().map_err(|_| err(ln, "invalid dimension"))?)
            }
            "tau" => {
                let v = parse_real(val).ok_or_else(|| err(ln, "invalid tau"))?;
                if !(v > 0.0) {
                    return Err(err(ln, "tau must be positive"));
                }
                tau = Some(v);
            }
            "modes" => mode_count = Some(val.parse().map_err(|_| err(ln, "invalid modes"))?),
            "mode" => break,
            other => return Err(err(ln, format!("unexpected header key `{other}`"))),
        }
        lines.next();
    }
    let dim = dim.ok_or_else(|| err(lines.last_line(), "missing field `dimension`"))?;
    let tau = tau.ok_or_else(|| err(lines.last_line(), "missing field `tau`"))?;
    let mode_count =
        mode_count.ok_or_else(|| err(lines.last_line(), "missing field `modes`"))?;

    let mut modes = Vec::with_capacity(mode_count);
    for expect_id in 1..=mode_count {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(lines.last_line(), format!("missing block `mode {expect_id}`")))?;
        let (key, val) = key_value(l).ok_or_else(|| err(ln, "expected `mode <id>`"))?;
        if key != "mode" {
            return Err(err(ln, format!("expected `mode {expect_id}`, got `{l}`")));
        }
        let id: usize = val.parse().map_err(|_| err(ln, "invalid mode id"))?;
        if id != expect_id {
            return Err(err(ln, format!("mode ids must appear in order 1..{mode_count}")));
        }
        let (ln_a, la) = lines.next().ok_or_else(|| err(ln, "missing `A:`"))?;
        if la != "A:" {
            return Err(err(ln_a, "expected `A:`"));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for _ in 0..dim {
            let (ln_r, lr) =
                lines.next().ok_or_else(|| err(ln_a, format!("A needs {dim} rows")))?;
            entries.extend(parse_row(ln_r, lr, Some(dim))?);
        }
        let (ln_b, lb) = lines.next().ok_or_else(|| err(ln_a, "missing `b:`"))?;
        if lb != "b:" {
            return Err(err(ln_b, "expected `b:`"));
        }
        let (ln_br, lbr) = lines.next().ok_or_else(|| err(ln_b, "missing b row"))?;
        let b = parse_row(ln_br, lbr, Some(dim))?;
        modes.push(LinearMode {
            id,
            a: Matrix::from_row_slice(dim, dim, &entries),
            b: Vector::from_vec(b),
            sigma: None,
        });
    }

    let mut region = None;
    let mut eta = None;
    let mut delta = None;
    parse_tail(lines, &mut region, &mut eta, &mut delta, dim)?;
    Ok(ParsedModel {
        system: SwitchedSystem::new(dim, modes, tau)?,
        region,
        eta,
        delta,
    })
}

fn parse_builder(lines: &mut Lines) -> Result<ParsedModel> {
    let (ln0, l0) = lines.next().expect("caller checked the builder line");
    let (_, which) = key_value(l0).unwrap();
    let mut tau: Option<f64> = None;
    let mut params: Vec<(usize, String, f64)> = Vec::new();
    let mut sigmas: Option<Vec<[u8; 3]>> = None;
    let mut region = None;
    let mut eta = None;
    let mut delta = None;

    while let Some((ln, l)) = lines.peek() {
        let (key, val) = key_value(l).ok_or_else(|| err(ln, "expected `key value`"))?;
        match key {
            "box" | "eta" | "delta" => break,
            "tau" => {
                let v = parse_real(val).ok_or_else(|| err(ln, "invalid tau"))?;
                if !(v > 0.0) {
                    return Err(err(ln, "tau must be positive"));
                }
                tau = Some(v);
                lines.next();
            }
            "sigma_available" => {
                let mut list = Vec::new();
                for tok in val.split_whitespace() {
                    let bits: Vec<u8> = tok
                        .chars()
                        .map(|c| match c {
                            '0' => Ok(0),
                            '1' => Ok(1),
                            _ => Err(err(ln, format!("invalid sigma triple `{tok}`"))),
                        })
                        .collect::<Result<_>>()?;
                    if bits.len() != 3 {
                        return Err(err(ln, format!("sigma triple `{tok}` must have 3 bits")));
                    }
                    list.push([bits[0], bits[1], bits[2]]);
                }
                if list.is_empty() {
                    return Err(err(ln, "sigma_available must list at least one triple"));
                }
                sigmas = Some(list);
                lines.next();
            }
            _ => {
                let v = parse_real(val)
                    .ok_or_else(|| err(ln, format!("invalid value for `{key}`")))?;
                params.push((ln, key.to_string(), v));
                lines.next();
            }
        }
    }

    let tau = tau.ok_or_else(|| err(ln0, "missing field `tau`"))?;
    let system = match which {
        "boost1" => {
            let mut p = Boost1CellParams::default();
            for (ln, k, v) in &params {
                match k.as_str() {
                    "x_c" => p.x_c = *v,
                    "x_l" => p.x_l = *v,
                    "r_c" => p.r_c = *v,
                    "r_l" => p.r_l = *v,
                    "r_0" => p.r_0 = *v,
                    "v_s" => p.v_s = *v,
                    other => return Err(err(*ln, format!("unknown boost1 parameter `{other}`"))),
                }
            }
            if sigmas.is_some() {
                return Err(err(ln0, "sigma_available only applies to boost3"));
            }
            build_boost_1cell(&p, tau)?
        }
        "boost3" => {
            let mut p = Boost3CellParams::default();
            for (ln, k, v) in &params {
                match k.as_str() {
                    "r" => p.r = *v,
                    "L" | "l" => p.l = *v,
                    "M" | "m" => p.m = *v,
                    "C" | "c" => p.c = *v,
                    "R" => p.r_load = *v,
                    "U" | "u" => p.u = *v,
                    other => return Err(err(*ln, format!("unknown boost3 parameter `{other}`"))),
                }
            }
            let s = sigmas.unwrap_or_else(|| ALL_SIGMAS.to_vec());
            build_boost_3cell(&p, tau, &s)?
        }
        other => return Err(err(ln0, format!("unknown builder `{other}`"))),
    };

    let dim = system.dim;
    parse_tail(lines, &mut region, &mut eta, &mut delta, dim)?;
    Ok(ParsedModel { system, region, eta, delta })
}

/// Serialize in the explicit form; `parse_system` round-trips it exactly
/// (f64 display uses the shortest representation that reparses identically).
pub fn serialize_system(sys: &SwitchedSystem, region: Option<&StateBox>) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "dimension {}", sys.dim).unwrap();
    writeln!(out, "tau {}", sys.tau).unwrap();
    writeln!(out, "modes {}", sys.mode_count()).unwrap();
    for m in &sys.modes {
        writeln!(out, "mode {}", m.id).unwrap();
        writeln!(out, "A:").unwrap();
        for i in 0..sys.dim {
            let row: Vec<String> = (0..sys.dim).map(|j| format!("{}", m.a[(i, j)])).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
        writeln!(out, "b:").unwrap();
        let row: Vec<String> = (0..sys.dim).map(|i| format!("{}", m.b[i])).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    if let Some(r) = region {
        writeln!(out, "box:").unwrap();
        let lo: Vec<String> = (0..r.dim()).map(|i| format!("{}", r.lower[i])).collect();
        let hi: Vec<String> = (0..r.dim()).map(|i| format!("{}", r.upper[i])).collect();
        writeln!(out, "lower: {}", lo.join(" ")).unwrap();
        writeln!(out, "upper: {}", hi.join(" ")).unwrap();
    }
    out
}
