//! Controllable-subspace fixpoint and the on-line mode selector.
//!
//! Starting from the full box, each mode's controllable set repeatedly
//! sheds the cells from which that mode may reach the currently
//! uncontrollable part (or leave V outright, which is the first removal).
//! The loop stops when the uncontrollable part is stable. All Pre-images
//! are the sound interval over-approximation, so the output
//! under-approximates the true controllable sets.

use rayon::prelude::*;

use crate::direct::{cell_image_box, iter_ranges, GriddySet, GridSpec};
use crate::error::{Error, Result};
use crate::flow::{FlowMap, Vector};
use crate::numeric;

/// Cell counts after one pass of the fixpoint loop.
#[derive(Clone, Debug)]
pub struct IterationStats {
    pub uncontrol: usize,
    pub control: Vec<usize>,
}

/// Output of the fixpoint: per-mode controllable sets, their union V', and
/// the loop trace.
#[derive(Clone, Debug)]
pub struct ControllableSubspace {
    pub spec: GridSpec,
    pub control: Vec<GriddySet>,
    pub v_prime: GriddySet,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<IterationStats>,
}

impl ControllableSubspace {
    pub fn mode_count(&self) -> usize {
        self.control.len()
    }

    pub fn uncontrollable(&self) -> GriddySet {
        GriddySet::full(&self.spec)
            .difference(&self.v_prime)
            .expect("same grid")
    }
}

/// Cells of `source` whose image bounding box under `f` meets `target`.
fn image_overlap(f: &FlowMap, source: &GriddySet, target: &GriddySet) -> GriddySet {
    let spec = source.spec.clone();
    let words: Vec<u64> = source
        .words()
        .par_iter()
        .enumerate()
        .map(|(wi, &sw)| {
            let mut out = 0u64;
            let mut w = sw;
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                let idx = wi * 64 + b;
                let k = spec.decode_index(idx);
                let (lo, hi) = spec.cell_bounds(&k);
                let (img_lo, img_hi) = cell_image_box(f, &lo, &hi);
                if let Some(ranges) = spec.touching_range(&img_lo, &img_hi) {
                    if iter_ranges(&ranges, &spec.dims)
                        .any(|kk| target.contains(spec.linear_index(&kk)))
                    {
                        out |= 1 << b;
                    }
                }
            }
            out
        })
        .collect();
    let mut g = GriddySet::empty(&spec);
    *g.words_mut() = words;
    g
}

/// Cells whose image bounding box is not contained in V (may exit the safe
/// box in one step).
fn exiting_cells(f: &FlowMap, spec: &GridSpec) -> GriddySet {
    let tol = numeric::DEFAULT.snap_tol;
    let v = &spec.region;
    let scale: Vec<f64> = (0..spec.dim())
        .map(|d| v.lower[d].abs().max(v.upper[d].abs()).max(1.0) * tol)
        .collect();
    let n_words = spec.cell_count().div_ceil(64);
    let words: Vec<u64> = (0..n_words)
        .into_par_iter()
        .map(|wi| {
            let mut out = 0u64;
            for b in 0..64 {
                let idx = wi * 64 + b;
                if idx >= spec.cell_count() {
                    break;
                }
                let k = spec.decode_index(idx);
                let (lo, hi) = spec.cell_bounds(&k);
                let (img_lo, img_hi) = cell_image_box(f, &lo, &hi);
                let inside = (0..spec.dim()).all(|d| {
                    img_lo[d] >= v.lower[d] - scale[d] && img_hi[d] <= v.upper[d] + scale[d]
                });
                if !inside {
                    out |= 1 << b;
                }
            }
            out
        })
        .collect();
    let mut g = GriddySet::empty(spec);
    *g.words_mut() = words;
    g
}

/// Controllable-subspace fixpoint over the cell grid.
///
/// Terminates within `cell_count + 1` passes: the uncontrollable set is
/// non-decreasing and each pass that does not converge grows it by at
/// least one cell.
pub fn algorithm1(flows: &[FlowMap], spec: &GridSpec) -> Result<ControllableSubspace> {
    assert!(!flows.is_empty());
    let full = GriddySet::full(spec);

    // First removal: cells that may leave V in one step under the mode.
    let mut control: Vec<GriddySet> = flows
        .iter()
        .map(|f| full.difference(&exiting_cells(f, spec)))
        .collect::<Result<_>>()?;

    let mut uncontrol = GriddySet::empty(spec);
    let mut history = Vec::new();
    let mut iterations = 0usize;
    let max_iterations = spec.cell_count() + 1;
    let converged = loop {
        iterations += 1;
        let mut v_prime = control[0].clone();
        for c in &control[1..] {
            v_prime = v_prime.union(c)?;
        }
        let uncontrol_new = full.difference(&v_prime)?;
        history.push(IterationStats {
            uncontrol: uncontrol_new.count(),
            control: control.iter().map(|c| c.count()).collect(),
        });
        if uncontrol_new.equals(&uncontrol)? {
            break true;
        }
        // monotonicity: nothing controllable ever comes back
        debug_assert!(uncontrol.difference(&uncontrol_new)?.is_empty());
        if iterations >= max_iterations {
            break false;
        }
        uncontrol = uncontrol_new;
        for (f, c) in flows.iter().zip(control.iter_mut()) {
            let removed = image_overlap(f, c, &uncontrol);
            *c = c.difference(&removed)?;
        }
    };

    let mut v_prime = control[0].clone();
    for c in &control[1..] {
        v_prime = v_prime.union(c)?;
    }
    Ok(ControllableSubspace {
        spec: spec.clone(),
        control,
        v_prime,
        iterations,
        converged,
        history,
    })
}

/// Pick the smallest mode id whose controllable set contains x and whose
/// one-step image of x stays in V'; the forward check makes the choice
/// robust at cell boundaries.
pub fn online_select_mode(
    x: &Vector,
    cs: &ControllableSubspace,
    flows: &[FlowMap],
) -> Result<usize> {
    for (i, f) in flows.iter().enumerate() {
        if cs.control[i].contains_point(x) && cs.v_prime.contains_point(&f.post_point(x)) {
            return Ok(i + 1);
        }
    }
    Err(Error::NoSafeMode { step: 0 })
}

/// Connected components of a griddy set (cells sharing a face or corner),
/// each returned as a sorted list of linear indices; components ordered by
/// their smallest cell.
pub fn connected_components(s: &GriddySet) -> Vec<Vec<usize>> {
    let spec = &s.spec;
    let n = spec.dim();
    let mut seen = vec![false; spec.cell_count()];
    let mut components = Vec::new();
    for start in s.iter_indices() {
        if seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = vec![start];
        seen[start] = true;
        while let Some(idx) = queue.pop() {
            comp.push(idx);
            let k = spec.decode_index(idx);
            let ranges: Vec<(usize, usize)> = (0..n)
                .map(|d| {
                    (
                        k[d].saturating_sub(1),
                        (k[d] + 1).min(spec.dims[d] - 1),
                    )
                })
                .collect();
            for kk in iter_ranges(&ranges, &spec.dims) {
                let j = spec.linear_index(&kk);
                if !seen[j] && s.contains(j) {
                    seen[j] = true;
                    queue.push(j);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}

/// Bounding box (lower, upper corners) of the represented region of a set
/// of cells.
pub fn cells_bounding_box(spec: &GridSpec, cells: &[usize]) -> Option<(Vector, Vector)> {
    let mut lo: Option<Vector> = None;
    let mut hi: Option<Vector> = None;
    for &idx in cells {
        let k = spec.decode_index(idx);
        let (clo, chi) = spec.cell_bounds(&k);
        lo = Some(match lo {
            None => clo,
            Some(v) => v.zip_map(&clo, f64::min),
        });
        hi = Some(match hi {
            None => chi,
            Some(v) => v.zip_map(&chi, f64::max),
        });
    }
    lo.zip(hi)
}

/// The member cell whose center is closest (infinity norm) to x.
pub fn nearest_cell_center(s: &GriddySet, x: &Vector) -> Option<Vector> {
    let spec = &s.spec;
    s.iter_indices()
        .map(|idx| spec.cell_center(&spec.decode_index(idx)))
        .min_by(|a, b| {
            let da = (a - x).amax();
            let db = (b - x).amax();
            da.partial_cmp(&db).expect("finite centers")
        })
}
