//! Bounded elementary-cycle enumeration on the winning subgraph.
//!
//! Every cycle of the abstraction restricted to winning nodes and safe
//! modes is a periodic switching rule. Cycles are emitted as mode-label
//! sequences, deduplicated up to rotation, ordered by length then
//! lexicographically.

use std::collections::BTreeSet;

use crate::indirect::{AbstractGraph, Successor, SwitchingPattern, WinningSet};

/// Enumerate elementary cycles of length <= `max_len` inside the subgraph
/// induced by the winning set and its safe modes.
pub fn find_patterns(
    graph: &AbstractGraph,
    winning: &WinningSet,
    max_len: usize,
) -> Vec<SwitchingPattern> {
    assert!(max_len >= 1);
    let n = graph.node_count();
    let mut found: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();

    // DFS from each start node, visiting only nodes with index >= start so
    // each elementary cycle is discovered exactly once (at its minimal node).
    let mut on_path = vec![false; n];
    let mut mode_stack: Vec<usize> = Vec::new();
    // frame: (node, next mode index to try)
    let mut frames: Vec<(usize, usize)> = Vec::new();

    for start in 0..n {
        if !winning.in_w[start] {
            continue;
        }
        frames.push((start, 0));
        on_path[start] = true;
        while let Some(&(q, next_mode)) = frames.last() {
            let depth = frames.len();
            let safe_modes = &winning.mode_map[q];
            if next_mode >= safe_modes.len() || depth > max_len {
                frames.pop();
                on_path[q] = false;
                mode_stack.pop();
                continue;
            }
            let p = safe_modes[next_mode];
            frames.last_mut().unwrap().1 += 1;
            let j = match graph.succ[q][p - 1] {
                Successor::Node(j) => j,
                Successor::Exit => continue,
            };
            if j == start {
                let mut cycle = mode_stack.clone();
                cycle.push(p);
                let canon = SwitchingPattern::new(cycle).canonical_rotation().modes;
                found.insert((canon.len(), canon));
                continue;
            }
            if j < start || on_path[j] || depth == max_len {
                continue;
            }
            on_path[j] = true;
            mode_stack.push(p);
            frames.push((j, 0));
        }
        mode_stack.clear();
    }

    found
        .into_iter()
        .map(|(_, modes)| SwitchingPattern::new(modes))
        .collect()
}
