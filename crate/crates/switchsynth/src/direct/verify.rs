//! Invariance verification of a converged controllable subspace: every
//! cell of every per-mode set must have its one-step image inside V, and
//! sampled post-images should land back in V'.

use rayon::prelude::*;

use crate::direct::{cell_image_box, ControllableSubspace};
use crate::flow::{FlowMap, Vector};
use crate::numeric;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// The cell-level image bounding box leaves V: the sound guarantee fails.
    ImageLeavesV,
    /// A sampled post-image lands more than one cell away from V'.
    ImageOutsideVPrime,
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub mode: usize,
    pub cell: usize,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, Default)]
pub struct InvarianceReport {
    pub violations: Vec<Violation>,
    /// Sampled post-images that fall out of V' but within one cell of it;
    /// expected at cell boundaries of the discretized set, not failures.
    pub boundary_grazing: usize,
    pub cells_checked: usize,
}

impl InvarianceReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Sample points of a cell: center first, then corners, truncated to
/// `samples_per_cell` (at least the center).
fn sample_points(lo: &Vector, hi: &Vector, samples_per_cell: usize) -> Vec<Vector> {
    let n = lo.len();
    let mut pts = vec![(lo + hi) * 0.5];
    let corners = 1usize << n;
    for mask in 0..corners {
        let p = Vector::from_iterator(
            n,
            (0..n).map(|d| if mask >> d & 1 == 1 { hi[d] } else { lo[d] }),
        );
        pts.push(p);
    }
    pts.truncate(samples_per_cell.max(1));
    pts
}

pub fn verify_invariance(
    flows: &[FlowMap],
    cs: &ControllableSubspace,
    samples_per_cell: usize,
) -> InvarianceReport {
    let spec = &cs.spec;
    let v = &spec.region;
    let tol = numeric::DEFAULT.snap_tol;
    let scale: Vec<f64> = (0..spec.dim())
        .map(|d| v.lower[d].abs().max(v.upper[d].abs()).max(1.0) * tol)
        .collect();

    let per_mode: Vec<(Vec<Violation>, usize, usize)> = flows
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let mut violations = Vec::new();
            let mut grazing = 0usize;
            let mut checked = 0usize;
            for idx in cs.control[i].iter_indices() {
                checked += 1;
                let k = spec.decode_index(idx);
                let (lo, hi) = spec.cell_bounds(&k);
                let (img_lo, img_hi) = cell_image_box(f, &lo, &hi);
                let inside_v = (0..spec.dim()).all(|d| {
                    img_lo[d] >= v.lower[d] - scale[d] && img_hi[d] <= v.upper[d] + scale[d]
                });
                if !inside_v {
                    violations.push(Violation {
                        mode: i + 1,
                        cell: idx,
                        kind: ViolationKind::ImageLeavesV,
                    });
                    continue;
                }
                for p in sample_points(&lo, &hi, samples_per_cell) {
                    let y = f.post_point(&p);
                    if cs.v_prime.contains_point(&y) {
                        continue;
                    }
                    if cs.v_prime.contains_point_within_one_cell(&y) {
                        grazing += 1;
                    } else {
                        violations.push(Violation {
                            mode: i + 1,
                            cell: idx,
                            kind: ViolationKind::ImageOutsideVPrime,
                        });
                    }
                }
            }
            (violations, grazing, checked)
        })
        .collect();

    let mut report = InvarianceReport::default();
    for (v, g, c) in per_mode {
        report.violations.extend(v);
        report.boundary_grazing += g;
        report.cells_checked += c;
    }
    report
}
