//! On-disk form of a controllable subspace (run-length-encoded cell lists)
//! and an SVG rendering of the per-mode regions.

use std::fmt::Write as _;
use std::io::Write;

use crate::direct::{ControllableSubspace, GriddySet, GridSpec};
use crate::error::{Error, Result};
use crate::flow::Vector;
use crate::model::StateBox;

fn fmt_vec(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Textual subspace artifact: header with the grid, then one RLE cell list
/// per mode as `start+len` runs over linear indices.
pub fn write_subspace(cs: &ControllableSubspace, w: &mut impl Write) -> std::io::Result<()> {
    let spec = &cs.spec;
    writeln!(w, "subspace")?;
    writeln!(w, "dimension {}", spec.dim())?;
    writeln!(w, "v_lower {}", fmt_vec(spec.region.lower.as_slice()))?;
    writeln!(w, "v_upper {}", fmt_vec(spec.region.upper.as_slice()))?;
    writeln!(
        w,
        "dims {}",
        spec.dims
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    )?;
    writeln!(w, "delta {}", fmt_vec(&spec.delta))?;
    writeln!(w, "modes {}", cs.mode_count())?;
    writeln!(w, "iterations {}", cs.iterations)?;
    writeln!(w, "converged {}", cs.converged)?;
    for (i, c) in cs.control.iter().enumerate() {
        writeln!(w, "mode {} cells {}", i + 1, c.count())?;
        let mut line = String::new();
        let mut tokens = 0;
        let mut run: Option<(usize, usize)> = None;
        let flush_run = |line: &mut String, tokens: &mut usize, start: usize, len: usize| {
            if *tokens > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{start}+{len}");
            *tokens += 1;
            *tokens % 16 == 0
        };
        let mut out = Vec::new();
        for idx in c.iter_indices() {
            match run {
                Some((start, len)) if start + len == idx => run = Some((start, len + 1)),
                Some((start, len)) => {
                    if flush_run(&mut line, &mut tokens, start, len) {
                        out.push(std::mem::take(&mut line));
                    }
                    run = Some((idx, 1));
                }
                None => run = Some((idx, 1)),
            }
        }
        if let Some((start, len)) = run {
            flush_run(&mut line, &mut tokens, start, len);
        }
        if !line.is_empty() {
            out.push(line);
        }
        for l in out {
            writeln!(w, "{}", l.trim())?;
        }
    }
    Ok(())
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Read a subspace artifact back; the grid is rebuilt from the stored box
/// and dims, and V' recomputed as the union of the per-mode sets.
pub fn read_subspace(text: &str) -> Result<ControllableSubspace> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut expect = |key: &str| -> Result<(usize, String)> {
        for (ln, l) in lines.by_ref() {
            if l.is_empty() {
                continue;
            }
            return match l.split_once(char::is_whitespace) {
                Some((k, v)) if k == key => Ok((ln, v.trim().to_string())),
                _ if l == key => Ok((ln, String::new())),
                _ => Err(perr(ln, format!("expected `{key}`, got `{l}`"))),
            };
        }
        Err(perr(0, format!("missing `{key}`")))
    };

    expect("subspace")?;
    let (ln, dim_s) = expect("dimension")?;
    let dim: usize = dim_s.parse().map_err(|_| perr(ln, "invalid dimension"))?;
    let parse_f64_row = |ln: usize, s: &str| -> Result<Vec<f64>> {
        let v: Vec<f64> = s
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| perr(ln, format!("invalid number `{t}`"))))
            .collect::<Result<_>>()?;
        if v.len() != dim {
            return Err(perr(ln, format!("expected {dim} numbers")));
        }
        Ok(v)
    };
    let (ln, lo_s) = expect("v_lower")?;
    let lower = parse_f64_row(ln, &lo_s)?;
    let (ln, hi_s) = expect("v_upper")?;
    let upper = parse_f64_row(ln, &hi_s)?;
    let (ln, dims_s) = expect("dims")?;
    let dims: Vec<usize> = dims_s
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| perr(ln, "invalid dims")))
        .collect::<Result<_>>()?;
    if dims.len() != dim || dims.iter().any(|&d| d == 0) {
        return Err(perr(ln, "invalid dims"));
    }
    let (ln_d, delta_s) = expect("delta")?;
    let _stored_delta = parse_f64_row(ln_d, &delta_s)?;
    let (ln, modes_s) = expect("modes")?;
    let mode_count: usize = modes_s.parse().map_err(|_| perr(ln, "invalid modes"))?;
    if mode_count == 0 {
        return Err(perr(ln, "modes must be >= 1"));
    }
    let (ln, it_s) = expect("iterations")?;
    let iterations: usize = it_s.parse().map_err(|_| perr(ln, "invalid iterations"))?;
    let (ln, conv_s) = expect("converged")?;
    let converged: bool = conv_s.parse().map_err(|_| perr(ln, "invalid converged"))?;

    let region = StateBox::new(Vector::from_vec(lower), Vector::from_vec(upper))?;
    let edges = region.edge_lengths();
    let delta: Vec<f64> = edges
        .iter()
        .zip(&dims)
        .map(|(e, &d)| e / d as f64)
        .collect();
    let spec = GridSpec {
        region,
        delta,
        dims,
    };

    let mut control = Vec::with_capacity(mode_count);
    let mut rest: Vec<(usize, &str)> = Vec::new();
    for (ln, l) in lines {
        if !l.is_empty() {
            rest.push((ln, l));
        }
    }
    let mut pos = 0;
    for i in 1..=mode_count {
        let (ln, header) = *rest
            .get(pos)
            .ok_or_else(|| perr(0, format!("missing block `mode {i}`")))?;
        pos += 1;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "mode" || parts[2] != "cells" {
            return Err(perr(ln, format!("expected `mode {i} cells <n>`")));
        }
        if parts[1].parse::<usize>().map_err(|_| perr(ln, "invalid mode id"))? != i {
            return Err(perr(ln, "mode blocks must appear in order"));
        }
        let expected: usize = parts[3].parse().map_err(|_| perr(ln, "invalid cell count"))?;
        let mut set = GriddySet::empty(&spec);
        let mut loaded = 0usize;
        while loaded < expected {
            let (ln, l) = *rest
                .get(pos)
                .ok_or_else(|| perr(ln, format!("mode {i}: cell list truncated")))?;
            pos += 1;
            for tok in l.split_whitespace() {
                let (s, n) = tok
                    .split_once('+')
                    .ok_or_else(|| perr(ln, format!("invalid run `{tok}`")))?;
                let start: usize =
                    s.parse().map_err(|_| perr(ln, format!("invalid run `{tok}`")))?;
                let len: usize =
                    n.parse().map_err(|_| perr(ln, format!("invalid run `{tok}`")))?;
                if len == 0 || start + len > spec.cell_count() {
                    return Err(perr(ln, format!("run `{tok}` outside the grid")));
                }
                for idx in start..start + len {
                    set.insert(idx);
                }
                loaded += len;
            }
        }
        if loaded != expected {
            return Err(perr(ln, format!("mode {i}: expected {expected} cells, got {loaded}")));
        }
        control.push(set);
    }

    let mut v_prime = control[0].clone();
    for c in &control[1..] {
        v_prime = v_prime.union(c)?;
    }
    Ok(ControllableSubspace {
        spec,
        control,
        v_prime,
        iterations,
        converged,
        history: Vec::new(),
    })
}

const PALETTE: [&str; 8] = [
    "#4c72b0", "#55a868", "#c44e52", "#8172b2", "#ccb974", "#64b5cd", "#e17c05", "#777777",
];

/// 2-D occupancy of a griddy set projected on axes (dx, dy).
fn project(set: &GriddySet, dx: usize, dy: usize) -> Vec<Vec<bool>> {
    let spec = &set.spec;
    let mut occ = vec![vec![false; spec.dims[dy]]; spec.dims[dx]];
    for idx in set.iter_indices() {
        let k = spec.decode_index(idx);
        occ[k[dx]][k[dy]] = true;
    }
    occ
}

fn panel_svg(
    out: &mut String,
    spec: &GridSpec,
    layers: &[(&Vec<Vec<bool>>, &str)],
    dx: usize,
    dy: usize,
    x0: f64,
    y0: f64,
    size: f64,
) {
    let nx = spec.dims[dx] as f64;
    let ny = spec.dims[dy] as f64;
    let sx = size / nx;
    let sy = size / ny;
    let _ = write!(
        out,
        "<rect x=\"{x0}\" y=\"{y0}\" width=\"{size}\" height=\"{size}\" fill=\"white\" stroke=\"black\"/>"
    );
    for (occ, color) in layers {
        for (kx, col) in occ.iter().enumerate() {
            // row runs keep the file small
            let mut run: Option<(usize, usize)> = None;
            let emit = |start: usize, len: usize, out: &mut String| {
                let x = x0 + kx as f64 * sx;
                // svg y grows downward; flip so the state y axis points up
                let y = y0 + size - (start + len) as f64 * sy;
                let _ = write!(
                    out,
                    "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"{}\"/>",
                    x,
                    y,
                    sx,
                    sy * len as f64,
                    color
                );
            };
            for (ky, &on) in col.iter().enumerate() {
                match (on, run) {
                    (true, Some((s, l))) if s + l == ky => run = Some((s, l + 1)),
                    (true, prev) => {
                        if let Some((s, l)) = prev {
                            emit(s, l, out);
                        }
                        run = Some((ky, 1));
                    }
                    (false, Some((s, l))) => {
                        emit(s, l, out);
                        run = None;
                    }
                    (false, None) => {}
                }
            }
            if let Some((s, l)) = run {
                emit(s, l, out);
            }
        }
    }
    let _ = write!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">x{} / x{}</text>",
        x0 + 4.0,
        y0 + 14.0,
        dx + 1,
        dy + 1
    );
}

/// Render per-mode controllable regions (colored) and the uncontrollable
/// zones (red overlay) as SVG: one panel for n = 2, one panel per axis
/// pair otherwise.
pub fn write_regions_svg(cs: &ControllableSubspace, w: &mut impl Write) -> std::io::Result<()> {
    let spec = &cs.spec;
    let n = spec.dim();
    let pairs: Vec<(usize, usize)> = if n == 2 {
        vec![(0, 1)]
    } else {
        (0..n)
            .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
            .collect()
    };
    let size = 300.0;
    let margin = 20.0;
    let cols = pairs.len().min(3);
    let rows = pairs.len().div_ceil(cols);
    let width = cols as f64 * (size + margin) + margin;
    let height = rows as f64 * (size + margin) + margin;

    let mode_proj: Vec<Vec<(Vec<Vec<bool>>, &str)>> = pairs
        .iter()
        .map(|&(dx, dy)| {
            let mut layers: Vec<(Vec<Vec<bool>>, &str)> = cs
                .control
                .iter()
                .enumerate()
                .map(|(i, c)| (project(c, dx, dy), PALETTE[i % PALETTE.len()]))
                .collect();
            layers.push((project(&cs.uncontrollable(), dx, dy), "#d62728"));
            layers
        })
        .collect();

    let mut out = String::new();
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    for (pi, &(dx, dy)) in pairs.iter().enumerate() {
        let col = pi % cols;
        let row = pi / cols;
        let x0 = margin + col as f64 * (size + margin);
        let y0 = margin + row as f64 * (size + margin);
        let layers: Vec<(&Vec<Vec<bool>>, &str)> = mode_proj[pi]
            .iter()
            .map(|(occ, color)| (occ, *color))
            .collect();
        panel_svg(&mut out, spec, &layers, dx, dy, x0, y0, size);
    }
    let _ = write!(out, "</svg>");
    w.write_all(out.as_bytes())
}
