//! Mode-labeled transition graph of the grid abstraction restricted to the
//! safe box, and the greatest safety fixpoint on it.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::FlowMap;
use crate::indirect::{lattice_range, Grid, GridPoint};
use crate::model::StateBox;
use crate::numeric;

/// Per (node, mode): either the unique successor node or an exit of V.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Successor {
    Node(usize),
    Exit,
}

/// Deterministic abstraction graph: one successor-or-exit per (node, mode).
#[derive(Clone, Debug)]
pub struct AbstractGraph {
    pub grid: Grid,
    pub region: StateBox,
    /// Grid points whose represented state lies in the closed box, in
    /// lexicographic k order.
    pub nodes: Vec<GridPoint>,
    /// succ[node][mode - 1]
    pub succ: Vec<Vec<Successor>>,
    pub mode_count: usize,
    index: HashMap<Vec<i64>, usize>,
}

impl AbstractGraph {
    pub fn node_index(&self, p: &GridPoint) -> Option<usize> {
        self.index.get(&p.k).copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// Enumerate all grid points inside the closed box and compute, for every
/// node and mode, the nearest grid point of its one-step image. Successor
/// computation is parallel over nodes; the merge order is the node order,
/// so results are deterministic.
pub fn build_abstract_graph(
    flows: &[FlowMap],
    region: &StateBox,
    grid: &Grid,
) -> Result<AbstractGraph> {
    assert_eq!(grid.dim, region.dim());
    let spacing = grid.spacing();
    let ranges: Vec<(i64, i64)> = (0..grid.dim)
        .map(|i| lattice_range(region.lower[i], region.upper[i], spacing))
        .collect();
    if ranges.iter().any(|(lo, hi)| lo > hi) {
        return Err(Error::EmptyGrid);
    }

    let mut nodes = Vec::new();
    let mut cursor: Vec<i64> = ranges.iter().map(|(lo, _)| *lo).collect();
    'outer: loop {
        nodes.push(GridPoint { k: cursor.clone() });
        for d in (0..grid.dim).rev() {
            cursor[d] += 1;
            if cursor[d] <= ranges[d].1 {
                continue 'outer;
            }
            cursor[d] = ranges[d].0;
        }
        break;
    }

    let index: HashMap<Vec<i64>, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, p)| (p.k.clone(), i))
        .collect();

    let tol = numeric::DEFAULT.snap_tol;
    let succ: Vec<Vec<Successor>> = nodes
        .par_iter()
        .map(|p| {
            let x = grid.state(p);
            flows
                .iter()
                .map(|f| {
                    let q = grid.nearest(&f.post_point(&x));
                    match index.get(&q.k) {
                        Some(&j) if region.contains(&grid.state(&q), tol) => Successor::Node(j),
                        _ => Successor::Exit,
                    }
                })
                .collect()
        })
        .collect();

    Ok(AbstractGraph {
        grid: *grid,
        region: region.clone(),
        nodes,
        succ,
        mode_count: flows.len(),
        index,
    })
}

/// Result of safety synthesis: the winning nodes and, per winning node, the
/// modes whose successor stays winning.
#[derive(Clone, Debug)]
pub struct WinningSet {
    pub in_w: Vec<bool>,
    /// mode ids (1-based), empty for losing nodes
    pub mode_map: Vec<Vec<usize>>,
}

impl WinningSet {
    pub fn size(&self) -> usize {
        self.in_w.iter().filter(|b| **b).count()
    }
}

/// Greatest fixpoint of `W -> {q : exists p, succ_p(q) in W}`, successors
/// leaving V never count as safe.
pub fn safety_synthesis(graph: &AbstractGraph) -> WinningSet {
    let n = graph.node_count();
    let mut in_w = vec![true; n];
    loop {
        let mut changed = false;
        for q in 0..n {
            if !in_w[q] {
                continue;
            }
            let safe = graph.succ[q].iter().any(|s| match s {
                Successor::Node(j) => in_w[*j],
                Successor::Exit => false,
            });
            if !safe {
                in_w[q] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mode_map = (0..n)
        .map(|q| {
            if !in_w[q] {
                return Vec::new();
            }
            graph.succ[q]
                .iter()
                .enumerate()
                .filter_map(|(p, s)| match s {
                    Successor::Node(j) if in_w[*j] => Some(p + 1),
                    _ => None,
                })
                .collect()
        })
        .collect();
    WinningSet { in_w, mode_map }
}

fn k_label(p: &GridPoint) -> String {
    let parts: Vec<String> = p.k.iter().map(|k| k.to_string()).collect();
    parts.join(",")
}

/// Textual edge list: `<k-vector> <mode> <k-vector|EXIT>` per line.
pub fn write_edge_list(graph: &AbstractGraph, w: &mut impl Write) -> std::io::Result<()> {
    for (q, succs) in graph.succ.iter().enumerate() {
        for (p, s) in succs.iter().enumerate() {
            match s {
                Successor::Node(j) => writeln!(
                    w,
                    "{} {} {}",
                    k_label(&graph.nodes[q]),
                    p + 1,
                    k_label(&graph.nodes[*j])
                )?,
                Successor::Exit => {
                    writeln!(w, "{} {} EXIT", k_label(&graph.nodes[q]), p + 1)?
                }
            }
        }
    }
    Ok(())
}

/// DOT export for visualization; exits are drawn to a shared sink node.
pub fn write_dot(graph: &AbstractGraph, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "digraph abstraction {{")?;
    writeln!(w, "  exit [label=\"EXIT\", shape=box];")?;
    for (q, succs) in graph.succ.iter().enumerate() {
        for (p, s) in succs.iter().enumerate() {
            match s {
                Successor::Node(j) => writeln!(
                    w,
                    "  \"{}\" -> \"{}\" [label=\"{}\"];",
                    k_label(&graph.nodes[q]),
                    k_label(&graph.nodes[*j]),
                    p + 1
                )?,
                Successor::Exit => writeln!(
                    w,
                    "  \"{}\" -> exit [label=\"{}\"];",
                    k_label(&graph.nodes[q]),
                    p + 1
                )?,
            }
        }
    }
    writeln!(w, "}}")
}
