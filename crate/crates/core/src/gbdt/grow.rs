//! Best-first growth of a single regression tree over binned features.

use alloc::vec;
use alloc::vec::Vec;

use super::binning::BinnedData;
use super::{BoostConfig, Node, Tree};

/// Splits whose gain does not clear this are treated as no improvement;
/// keeps float dust from manufacturing structure on constant gradients.
const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct NodeStats {
    grad: f64,
    hess: f64,
}

#[derive(Debug, Clone)]
struct SplitCandidate {
    gain: f64,
    feature: usize,
    threshold: u16,
}

enum GrowNode {
    Leaf { rows: Vec<u32>, stats: NodeStats, depth: usize },
    Split { feature: usize, threshold: u16, left: usize, right: usize },
}

/// A grown tree plus, per leaf, the training rows it holds and its value.
pub(super) struct GrownTree {
    pub tree: Tree,
    pub leaf_assignments: Vec<(f64, Vec<u32>)>,
}

/// Grow one tree against the given gradients. Returns `None` when no split
/// at the root clears the gain bar; such a round adds nothing the base
/// score has not already captured.
pub(super) fn grow_tree(
    binned: &BinnedData,
    grad: &[f64],
    hess: &[f64],
    config: &BoostConfig,
) -> Option<GrownTree> {
    let rows: Vec<u32> = (0..binned.n_rows() as u32).collect();
    let stats = stats_of(&rows, grad, hess);
    let mut arena: Vec<GrowNode> = vec![GrowNode::Leaf { rows, stats, depth: 0 }];
    // (arena index, candidate); scanned in creation order so gain ties
    // resolve toward the earliest-created leaf.
    let mut candidates: Vec<(usize, SplitCandidate)> = Vec::new();
    if let Some(c) = best_split(binned, grad, hess, leaf_rows(&arena, 0), config) {
        candidates.push((0, c));
    } else {
        return None;
    }

    let mut n_leaves = 1usize;
    while n_leaves < config.max_leaves && !candidates.is_empty() {
        let mut pick = 0;
        for i in 1..candidates.len() {
            if candidates[i].1.gain > candidates[pick].1.gain {
                pick = i;
            }
        }
        let (node_idx, cand) = candidates.swap_remove(pick);

        let (rows, depth) = match &arena[node_idx] {
            GrowNode::Leaf { rows, depth, .. } => (rows.clone(), *depth),
            GrowNode::Split { .. } => unreachable!("candidate points at a split"),
        };
        let col = binned.column(cand.feature);
        let mut left_rows = Vec::new();
        let mut right_rows = Vec::new();
        for &r in &rows {
            if col[r as usize] <= cand.threshold {
                left_rows.push(r);
            } else {
                right_rows.push(r);
            }
        }
        let left_stats = stats_of(&left_rows, grad, hess);
        let right_stats = stats_of(&right_rows, grad, hess);

        let left_idx = arena.len();
        arena.push(GrowNode::Leaf { rows: left_rows, stats: left_stats, depth: depth + 1 });
        let right_idx = arena.len();
        arena.push(GrowNode::Leaf { rows: right_rows, stats: right_stats, depth: depth + 1 });
        arena[node_idx] = GrowNode::Split {
            feature: cand.feature,
            threshold: cand.threshold,
            left: left_idx,
            right: right_idx,
        };
        n_leaves += 1;

        for child in [left_idx, right_idx] {
            if depth + 1 < config.max_depth {
                if let Some(c) = best_split(binned, grad, hess, leaf_rows(&arena, child), config) {
                    candidates.push((child, c));
                }
            }
        }
    }

    Some(finalize(&arena, config))
}

fn leaf_rows(arena: &[GrowNode], idx: usize) -> &[u32] {
    match &arena[idx] {
        GrowNode::Leaf { rows, .. } => rows,
        GrowNode::Split { .. } => unreachable!(),
    }
}

fn stats_of(rows: &[u32], grad: &[f64], hess: &[f64]) -> NodeStats {
    let mut g = 0.0;
    let mut h = 0.0;
    for &r in rows {
        g += grad[r as usize];
        h += hess[r as usize];
    }
    NodeStats { grad: g, hess: h }
}

/// Scan every (feature, threshold) pair via per-bin gradient histograms and
/// keep the strictly best gain. Features and thresholds are visited in
/// ascending order with a strict comparison, so ties resolve to the lowest
/// feature index, then the lowest threshold.
fn best_split(
    binned: &BinnedData,
    grad: &[f64],
    hess: &[f64],
    rows: &[u32],
    config: &BoostConfig,
) -> Option<SplitCandidate> {
    if rows.len() < 2 * config.min_samples_leaf {
        return None;
    }
    let lambda = config.l2_lambda;
    let mut best: Option<SplitCandidate> = None;
    for feature in 0..binned.n_features() {
        // Regular bins only; missing values are rejected before training.
        let col = binned.column(feature);
        let n_bins = 1 + rows
            .iter()
            .map(|&r| col[r as usize])
            .max()
            .unwrap_or(0) as usize;
        if n_bins < 2 {
            continue;
        }
        let mut hist_g = vec![0.0f64; n_bins];
        let mut hist_h = vec![0.0f64; n_bins];
        let mut hist_c = vec![0usize; n_bins];
        for &r in rows {
            let b = col[r as usize] as usize;
            hist_g[b] += grad[r as usize];
            hist_h[b] += hess[r as usize];
            hist_c[b] += 1;
        }
        let total_g: f64 = hist_g.iter().sum();
        let total_h: f64 = hist_h.iter().sum();
        let parent_term = total_g * total_g / (total_h + lambda);

        let mut gl = 0.0;
        let mut hl = 0.0;
        let mut cl = 0usize;
        for t in 0..n_bins - 1 {
            gl += hist_g[t];
            hl += hist_h[t];
            cl += hist_c[t];
            let cr = rows.len() - cl;
            if cl < config.min_samples_leaf {
                continue;
            }
            if cr < config.min_samples_leaf {
                break;
            }
            let gr = total_g - gl;
            let hr = total_h - hl;
            let gain =
                0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent_term);
            if gain > GAIN_EPS && best.as_ref().map_or(true, |b| gain > b.gain) {
                best = Some(SplitCandidate { gain, feature, threshold: t as u16 });
            }
        }
    }
    best
}

/// Convert the growth arena into a pre-order node list with Newton leaf
/// values `-learning_rate * G / (H + lambda)`.
fn finalize(arena: &[GrowNode], config: &BoostConfig) -> GrownTree {
    let mut nodes: Vec<Node> = Vec::new();
    let mut leaf_assignments: Vec<(f64, Vec<u32>)> = Vec::new();
    emit(arena, 0, config, &mut nodes, &mut leaf_assignments);
    GrownTree { tree: Tree { nodes }, leaf_assignments }
}

fn emit(
    arena: &[GrowNode],
    idx: usize,
    config: &BoostConfig,
    nodes: &mut Vec<Node>,
    leaf_assignments: &mut Vec<(f64, Vec<u32>)>,
) -> u32 {
    let my_idx = nodes.len() as u32;
    match &arena[idx] {
        GrowNode::Leaf { rows, stats, .. } => {
            let value =
                -config.learning_rate * stats.grad / (stats.hess + config.l2_lambda);
            nodes.push(Node::Leaf { value });
            leaf_assignments.push((value, rows.clone()));
        }
        GrowNode::Split { feature, threshold, left, right } => {
            nodes.push(Node::Split {
                feature: *feature as u32,
                threshold: *threshold,
                left: 0,
                right: 0,
            });
            let l = emit(arena, *left, config, nodes, leaf_assignments);
            let r = emit(arena, *right, config, nodes, leaf_assignments);
            if let Node::Split { left, right, .. } = &mut nodes[my_idx as usize] {
                *left = l;
                *right = r;
            }
        }
    }
    my_idx
}
