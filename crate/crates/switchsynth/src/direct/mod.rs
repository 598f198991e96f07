//! Griddy-set machinery for the direct method: finite unions of closed
//! axis-aligned lattice cells inside the safe box, with exact set algebra
//! and a sound interval Pre-image.

pub mod algorithm;
pub mod io;
pub mod verify;

pub use algorithm::{
    algorithm1, cells_bounding_box, connected_components, nearest_cell_center, online_select_mode,
    ControllableSubspace, IterationStats,
};
pub use verify::{verify_invariance, InvarianceReport};

use crate::error::{Error, Result};
use crate::flow::{FlowMap, Vector};
use crate::model::StateBox;
use crate::numeric;

/// The cell grid covering the safe box V: anisotropic cell sizes, origin at
/// V's lower corner, `dims[i]` cells along axis i.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub region: StateBox,
    pub delta: Vec<f64>,
    pub dims: Vec<usize>,
}

impl GridSpec {
    /// Snap the requested cell size so that every edge of V is an exact
    /// integer number of cells.
    pub fn snap(region: &StateBox, requested_delta: &[f64]) -> Result<GridSpec> {
        let n = region.dim();
        if requested_delta.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: requested_delta.len(),
            });
        }
        let edges = region.edge_lengths();
        let mut dims = Vec::with_capacity(n);
        let mut delta = Vec::with_capacity(n);
        for i in 0..n {
            let d = requested_delta[i];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "cell size must be positive, got {d} in dimension {}",
                    i + 1
                )));
            }
            let count = (edges[i] / d).round().max(1.0) as usize;
            dims.push(count);
            delta.push(edges[i] / count as f64);
        }
        Ok(GridSpec {
            region: region.clone(),
            delta,
            dims,
        })
    }

    /// Default resolution: each edge of V split into `cells_per_edge` cells.
    pub fn uniform(region: &StateBox, cells_per_edge: usize) -> GridSpec {
        let edges = region.edge_lengths();
        let delta: Vec<f64> = edges.iter().map(|e| e / cells_per_edge as f64).collect();
        GridSpec::snap(region, &delta).expect("positive edges give positive delta")
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn cell_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn linear_index(&self, k: &[usize]) -> usize {
        let mut idx = 0;
        for d in 0..self.dim() {
            idx = idx * self.dims[d] + k[d];
        }
        idx
    }

    pub fn decode_index(&self, mut idx: usize) -> Vec<usize> {
        let mut k = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            k[d] = idx % self.dims[d];
            idx /= self.dims[d];
        }
        k
    }

    /// Closed bounds of cell k.
    pub fn cell_bounds(&self, k: &[usize]) -> (Vector, Vector) {
        let n = self.dim();
        let lo = Vector::from_iterator(
            n,
            (0..n).map(|d| self.region.lower[d] + k[d] as f64 * self.delta[d]),
        );
        let hi = Vector::from_iterator(
            n,
            (0..n).map(|d| self.region.lower[d] + (k[d] + 1) as f64 * self.delta[d]),
        );
        (lo, hi)
    }

    pub fn cell_center(&self, k: &[usize]) -> Vector {
        let n = self.dim();
        Vector::from_iterator(
            n,
            (0..n).map(|d| self.region.lower[d] + (k[d] as f64 + 0.5) * self.delta[d]),
        )
    }

    /// Index range of cells whose closed box intersects the closed box
    /// [lo, hi] (touching counts), clamped to the grid; None when disjoint
    /// from V.
    pub fn touching_range(&self, lo: &Vector, hi: &Vector) -> Option<Vec<(usize, usize)>> {
        let tol = numeric::DEFAULT.snap_tol;
        let mut out = Vec::with_capacity(self.dim());
        for d in 0..self.dim() {
            let t_lo = (lo[d] - self.region.lower[d]) / self.delta[d];
            let t_hi = (hi[d] - self.region.lower[d]) / self.delta[d];
            // closed cells: cell k spans [k, k+1] in t units
            let k_lo = numeric::snapped_ceil(t_lo, tol) - 1;
            let k_hi = numeric::snapped_floor(t_hi, tol);
            let k_lo = k_lo.max(0);
            let k_hi = k_hi.min(self.dims[d] as i64 - 1);
            if k_lo > k_hi {
                return None;
            }
            out.push((k_lo as usize, k_hi as usize));
        }
        Some(out)
    }

    /// Cells containing the point x (up to 2^n on cell boundaries); empty
    /// when x is outside V.
    pub fn cells_containing(&self, x: &Vector) -> Vec<usize> {
        match self.touching_range(x, x) {
            Some(ranges) if self.region.contains(x, numeric::DEFAULT.snap_tol) => {
                iter_ranges(&ranges, &self.dims)
                    .map(|k| self.linear_index(&k))
                    .collect()
            }
            _ => Vec::new(),
        }
    }
}

/// Iterate the cartesian product of index ranges in row-major order.
pub(crate) fn iter_ranges<'a>(
    ranges: &'a [(usize, usize)],
    _dims: &'a [usize],
) -> impl Iterator<Item = Vec<usize>> + 'a {
    let mut cursor: Vec<usize> = ranges.iter().map(|(lo, _)| *lo).collect();
    let mut done = ranges.is_empty();
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = cursor.clone();
        let mut d = ranges.len();
        loop {
            if d == 0 {
                done = true;
                break;
            }
            d -= 1;
            cursor[d] += 1;
            if cursor[d] <= ranges[d].1 {
                break;
            }
            cursor[d] = ranges[d].0;
        }
        Some(out)
    })
}

/// A finite union of closed lattice cells, stored as a dense bitset over
/// V's cell range.
#[derive(Clone, Debug)]
pub struct GriddySet {
    pub spec: GridSpec,
    words: Vec<u64>,
}

impl GriddySet {
    pub fn empty(spec: &GridSpec) -> GriddySet {
        let words = vec![0u64; spec.cell_count().div_ceil(64)];
        GriddySet {
            spec: spec.clone(),
            words,
        }
    }

    pub fn full(spec: &GridSpec) -> GriddySet {
        let n = spec.cell_count();
        let mut s = GriddySet::empty(spec);
        for (i, w) in s.words.iter_mut().enumerate() {
            let base = i * 64;
            *w = if base + 64 <= n {
                u64::MAX
            } else if base >= n {
                0
            } else {
                (1u64 << (n - base)) - 1
            };
        }
        s
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.words[idx / 64] >> (idx % 64) & 1 == 1
    }

    pub fn insert(&mut self, idx: usize) {
        self.words[idx / 64] |= 1 << (idx % 64);
    }

    pub fn remove(&mut self, idx: usize) {
        self.words[idx / 64] &= !(1 << (idx % 64));
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    fn check_same_grid(&self, other: &GriddySet) -> Result<()> {
        if self.spec == other.spec {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn union(&self, other: &GriddySet) -> Result<GriddySet> {
        self.check_same_grid(other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a | b)
            .collect();
        Ok(GriddySet {
            spec: self.spec.clone(),
            words,
        })
    }

    pub fn difference(&self, other: &GriddySet) -> Result<GriddySet> {
        self.check_same_grid(other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & !b)
            .collect();
        Ok(GriddySet {
            spec: self.spec.clone(),
            words,
        })
    }

    pub fn equals(&self, other: &GriddySet) -> Result<bool> {
        self.check_same_grid(other)?;
        Ok(self.words == other.words)
    }

    pub fn iter_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + b)
            })
        })
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self) -> &mut Vec<u64> {
        &mut self.words
    }

    /// True when the point lies in the represented set (any containing cell
    /// is a member cell).
    pub fn contains_point(&self, x: &Vector) -> bool {
        self.spec.cells_containing(x).iter().any(|&i| self.contains(i))
    }

    /// Like `contains_point` with the candidate cell range widened by one
    /// cell per axis; used to tell boundary grazing from real violations.
    pub fn contains_point_within_one_cell(&self, x: &Vector) -> bool {
        let one = Vector::from_iterator(self.spec.dim(), self.spec.delta.iter().copied());
        let lo = x - &one;
        let hi = x + &one;
        match self.spec.touching_range(&lo, &hi) {
            Some(ranges) => iter_ranges(&ranges, &self.spec.dims)
                .any(|k| self.contains(self.spec.linear_index(&k))),
            None => false,
        }
    }
}

/// All cells of V that meet the box `b` (cells overlapping b on a set of
/// positive measure; for degenerate dimensions of b every incident cell
/// counts, so a corner point yields up to 2^n cells).
pub fn griddy_from_box(b: &StateBox, spec: &GridSpec) -> Result<GriddySet> {
    let tol = numeric::DEFAULT.snap_tol;
    let v = &spec.region;
    for d in 0..spec.dim() {
        if b.lower[d] < v.lower[d] - tol || b.upper[d] > v.upper[d] + tol {
            return Err(Error::BoxNotContained);
        }
    }
    let mut ranges = Vec::with_capacity(spec.dim());
    for d in 0..spec.dim() {
        let t_lo = (b.lower[d] - v.lower[d]) / spec.delta[d];
        let t_hi = (b.upper[d] - v.lower[d]) / spec.delta[d];
        let degenerate = (b.upper[d] - b.lower[d]).abs() <= tol * spec.delta[d];
        let (k_lo, k_hi) = if degenerate {
            // incident cells on both sides of the hyperplane
            (
                numeric::snapped_ceil(t_lo, tol) - 1,
                numeric::snapped_floor(t_hi, tol),
            )
        } else {
            // positive-measure overlap
            (
                numeric::snapped_floor(t_lo, tol),
                numeric::snapped_ceil(t_hi, tol) - 1,
            )
        };
        let k_lo = k_lo.max(0) as usize;
        let k_hi = k_hi.min(spec.dims[d] as i64 - 1).max(k_lo as i64) as usize;
        ranges.push((k_lo, k_hi));
    }
    let mut out = GriddySet::empty(spec);
    for k in iter_ranges(&ranges, &spec.dims) {
        out.insert(spec.linear_index(&k));
    }
    Ok(out)
}

/// Exact per-coordinate bounding box of the affine image of a cell:
/// `center' = E center + c`, `halfwidth' = |E| halfwidth`. The box contains
/// the true image polytope and is tight in every coordinate.
pub fn cell_image_box(f: &FlowMap, cell_lo: &Vector, cell_hi: &Vector) -> (Vector, Vector) {
    let center = (cell_lo + cell_hi) * 0.5;
    let hw = (cell_hi - cell_lo) * 0.5;
    let c2 = f.post_point(&center);
    let n = f.dim();
    let hw2 = Vector::from_iterator(
        n,
        (0..n).map(|i| (0..n).map(|j| f.e[(i, j)].abs() * hw[j]).sum::<f64>()),
    );
    (&c2 - &hw2, &c2 + &hw2)
}

/// Sound over-approximate Pre-image: every cell whose image bounding box
/// meets the represented set of S. A superset of the true `Pre(S)`
/// restricted to V's cells, because the bounding box contains the image.
pub fn pre_over(f: &FlowMap, s: &GriddySet) -> GriddySet {
    use rayon::prelude::*;
    let spec = &s.spec;
    let n_words = s.words().len();
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
                if let Some(ranges) = spec.touching_range(&img_lo, &img_hi) {
                    if iter_ranges(&ranges, &spec.dims)
                        .any(|kk| s.contains(spec.linear_index(&kk)))
                    {
                        out |= 1 << b;
                    }
                }
            }
            out
        })
        .collect();
    GriddySet {
        spec: spec.clone(),
        words,
    }
}
