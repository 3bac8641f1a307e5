//! Directed node-weighted Steiner trees on general digraphs.
//!
//! The solver rounds the flow relaxation: nodes with capacity at least
//! `1/sqrt(|V \ R|)` form a high-capacity subgraph that reaches the cheap
//! terminals directly; every remaining terminal is reached through a relay
//! node picked by a greedy hitting set over its candidate relays, with relays
//! wired to the root by plain shortest paths. An outer geometric ladder of
//! cost guesses bounds the root eccentricity when no explicit cap is given.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{
    b_proper_prune, extract_out_tree, shortest_paths, CostMode, GraphError, NodeId,
    NodeWeightedDigraph, OutTree,
};
use crate::lp::{build_dst_lp, solve_lp, FracSolution, LpError, ROW_TOL};

/// Capacity values this close to the split threshold still count as above it.
pub const THRESHOLD_TOL: f64 = 1e-9;
/// Capacities above this belong to the relaxation's support.
pub const SUPPORT_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DstError {
    #[error("terminal set is empty")]
    NoTerminals,
    #[error("terminal {0} is not a node of the graph")]
    UnknownTerminal(NodeId),
    #[error("terminal {0} is unreachable from the root")]
    UnreachableTerminal(NodeId),
    #[error("invalid guess schedule: {0}")]
    InvalidSchedule(String),
    #[error("hitting set input contains an empty set")]
    EmptySetInput,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone)]
pub struct SteinerInstance {
    pub graph: NodeWeightedDigraph,
    pub root: NodeId,
    pub terminals: BTreeSet<NodeId>,
}

impl SteinerInstance {
    pub fn new(
        graph: NodeWeightedDigraph,
        root: NodeId,
        terminals: BTreeSet<NodeId>,
    ) -> Result<Self, DstError> {
        if terminals.is_empty() {
            return Err(DstError::NoTerminals);
        }
        if !graph.contains(root) {
            return Err(DstError::UnknownTerminal(root));
        }
        for &t in &terminals {
            if !graph.contains(t) {
                return Err(DstError::UnknownTerminal(t));
            }
        }
        Ok(SteinerInstance {
            graph,
            root,
            terminals,
        })
    }
}

/// Partition of the terminals induced by the capacity threshold.
#[derive(Debug, Clone)]
pub struct TerminalSplit {
    /// Nodes with capacity at least the threshold (always contains the root
    /// and the terminals).
    pub high_capacity: BTreeSet<NodeId>,
    pub cheap: BTreeSet<NodeId>,
    pub expensive: BTreeSet<NodeId>,
    pub threshold: f64,
}

/// Geometric ladder of optimum guesses; the last value reaches `c_max`.
pub fn guess_opt_schedule(c_min: f64, c_max: f64, eps: f64) -> Result<Vec<f64>, DstError> {
    if c_min <= 0.0 || c_max <= 0.0 || eps <= 0.0 {
        return Err(DstError::InvalidSchedule(format!(
            "all inputs must be positive, got c_min={c_min}, c_max={c_max}, eps={eps}"
        )));
    }
    if c_min > c_max {
        return Err(DstError::InvalidSchedule(format!(
            "c_min={c_min} exceeds c_max={c_max}"
        )));
    }
    let mut guesses = vec![c_min];
    while *guesses.last().unwrap() < c_max {
        let next = guesses.last().unwrap() * (1.0 + eps);
        guesses.push(next);
    }
    Ok(guesses)
}

fn non_terminal_count(g: &NodeWeightedDigraph, terminals: &BTreeSet<NodeId>) -> usize {
    g.node_ids().filter(|v| !terminals.contains(v)).count()
}

/// Threshold `1/sqrt(|V \ R|)`, clamped to one for degenerate instances.
fn capacity_threshold(non_terminals: usize) -> f64 {
    1.0 / (non_terminals.max(1) as f64).sqrt()
}

/// Splits terminals into cheap and expensive by reachability inside the
/// high-capacity subgraph.
pub fn split_terminals(s: &FracSolution, inst: &SteinerInstance) -> TerminalSplit {
    let g = &inst.graph;
    let threshold = capacity_threshold(non_terminal_count(g, &inst.terminals));
    let mut high_capacity: BTreeSet<NodeId> = g
        .node_ids()
        .filter(|&v| s.capacity_of(v) >= threshold - THRESHOLD_TOL)
        .collect();
    // The relaxation pins root and terminal capacities to one.
    high_capacity.insert(inst.root);
    high_capacity.extend(inst.terminals.iter().copied());
    let sub = g
        .induced_subgraph(&high_capacity)
        .expect("high-capacity nodes are present");
    let dm = shortest_paths(&sub, inst.root, CostMode::IncludeBoth).expect("root present");
    let mut cheap = BTreeSet::new();
    let mut expensive = BTreeSet::new();
    for &t in &inst.terminals {
        if dm.dist(t).is_some() {
            cheap.insert(t);
        } else {
            expensive.insert(t);
        }
    }
    TerminalSplit {
        high_capacity,
        cheap,
        expensive,
        threshold,
    }
}

/// For each expensive terminal, the support nodes below the threshold from
/// which the terminal is reachable through the high-capacity subgraph.
pub fn candidate_sets(
    s: &FracSolution,
    inst: &SteinerInstance,
    split: &TerminalSplit,
) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let g = &inst.graph;
    let relays: Vec<NodeId> = g
        .node_ids()
        .filter(|&v| {
            s.capacity_of(v) > SUPPORT_TOL
                && !split.high_capacity.contains(&v)
                && !inst.terminals.contains(&v)
        })
        .collect();
    let mut result = BTreeMap::new();
    for &t in &split.expensive {
        let mut set = BTreeSet::new();
        for &w in &relays {
            let mut keep = split.high_capacity.clone();
            keep.insert(w);
            let sub = g.induced_subgraph(&keep).expect("nodes present");
            let dm = shortest_paths(&sub, w, CostMode::IncludeBoth).expect("relay present");
            if dm.dist(t).is_some() {
                set.insert(w);
            }
        }
        result.insert(t, set);
    }
    result
}

/// Greedy hitting set: repeatedly pick the element contained in the most
/// still-unhit sets, smaller id on ties.
pub fn greedy_hitting_set(
    sets: &[BTreeSet<NodeId>],
    universe: &BTreeSet<NodeId>,
) -> Result<BTreeSet<NodeId>, DstError> {
    if sets.iter().any(|s| s.is_empty()) {
        return Err(DstError::EmptySetInput);
    }
    let mut unhit: Vec<usize> = (0..sets.len()).collect();
    let mut chosen = BTreeSet::new();
    while !unhit.is_empty() {
        let mut best: Option<(usize, NodeId)> = None;
        for &e in universe {
            let count = unhit.iter().filter(|&&i| sets[i].contains(&e)).count();
            if count > 0 && best.map_or(true, |(c, _)| count > c) {
                best = Some((count, e));
            }
        }
        let (_, pick) = best.expect("unhit sets intersect the universe");
        chosen.insert(pick);
        unhit.retain(|&i| !sets[i].contains(&pick));
    }
    Ok(chosen)
}

/// Solve summary for one Steiner run; all counters refer to the graph that
/// actually produced the returned tree.
#[derive(Debug, Clone, Serialize)]
pub struct DstReport {
    pub lp_opt: f64,
    pub lp_iterations: usize,
    /// Maximum root-to-node distance in the solved graph.
    pub f_max: f64,
    pub non_terminal_count: usize,
    pub threshold: f64,
    pub high_capacity_size: usize,
    pub cheap_terminals: Vec<NodeId>,
    pub expensive_terminals: Vec<NodeId>,
    pub candidate_set_sizes: BTreeMap<NodeId, usize>,
    /// Expensive terminals whose candidate set came back empty; these signal
    /// numerical trouble in the relaxation and are reconnected by plain
    /// shortest paths.
    pub empty_candidate_sets: Vec<NodeId>,
    pub hitting_set: Vec<NodeId>,
    pub cheap_tree_cost: f64,
    pub tree_cost: f64,
    /// Guess of the ladder that produced the tree, if the ladder ran.
    pub guess: Option<f64>,
    pub guesses_tried: usize,
}

#[derive(Debug, Clone)]
pub struct DstOutcome {
    pub tree: OutTree,
    pub report: DstReport,
}

/// Full solver: optional eccentricity cap, otherwise the guessing ladder.
///
/// With `f_cap = Some(b)` the graph is pruned once at distance `b` and solved
/// directly (the caller knows every relevant node lies within `b`). Without
/// it, each ladder guess prunes at the guessed optimum and the cheapest
/// feasible tree over all guesses wins.
pub fn solve_dst(
    inst: &SteinerInstance,
    eps: f64,
    f_cap: Option<f64>,
) -> Result<DstOutcome, DstError> {
    let g = &inst.graph;
    let dm = shortest_paths(g, inst.root, CostMode::IncludeBoth)?;
    for &t in &inst.terminals {
        if dm.dist(t).is_none() {
            return Err(DstError::UnreachableTerminal(t));
        }
    }

    if let Some(cap) = f_cap {
        let pruned = b_proper_prune(g, inst.root, cap)?;
        for &t in &inst.terminals {
            if !pruned.contains(t) {
                return Err(DstError::UnreachableTerminal(t));
            }
        }
        let mut outcome = solve_core(&pruned, inst.root, &inst.terminals)?;
        outcome.report.guesses_tried = 1;
        return Ok(outcome);
    }

    let total: f64 = g.total_cost();
    let c_min = g
        .node_ids()
        .map(|v| g.cost(v))
        .filter(|&c| c > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !c_min.is_finite() || total == 0.0 {
        // All-zero costs: nothing to guess, every tree is free.
        let mut outcome = solve_core(g, inst.root, &inst.terminals)?;
        outcome.report.guesses_tried = 1;
        return Ok(outcome);
    }

    let guesses = guess_opt_schedule(c_min, total, eps)?;
    let mut best: Option<DstOutcome> = None;
    let mut tried = 0usize;
    for &guess in &guesses {
        tried += 1;
        let pruned = match b_proper_prune(g, inst.root, guess) {
            Ok(p) => p,
            Err(GraphError::RootOverBudget { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        if inst.terminals.iter().any(|&t| !pruned.contains(t)) {
            continue;
        }
        let mut outcome = solve_core(&pruned, inst.root, &inst.terminals)?;
        outcome.report.guess = Some(guess);
        if best
            .as_ref()
            .map_or(true, |b| outcome.tree.total_cost < b.tree.total_cost)
        {
            best = Some(outcome);
        }
    }
    let mut best = best.expect("the final guess retains every reachable node");
    best.report.guesses_tried = tried;
    Ok(best)
}

/// One rounding pass over a fixed (already pruned) graph.
fn solve_core(
    g: &NodeWeightedDigraph,
    root: NodeId,
    terminals: &BTreeSet<NodeId>,
) -> Result<DstOutcome, DstError> {
    let inst = SteinerInstance::new(g.clone(), root, terminals.clone())?;
    let lp = build_dst_lp(&inst)?;
    let sol = solve_lp(&lp, ROW_TOL)?;
    let split = split_terminals(&sol, &inst);

    // Cheap terminals: one shortest-path tree inside the high-capacity subgraph.
    let sub = g.induced_subgraph(&split.high_capacity)?;
    let mut targets = split.cheap.clone();
    targets.insert(root);
    let cheap_tree = extract_out_tree(&sub, root, &targets)?;

    let candidates = candidate_sets(&sol, &inst, &split);
    let mut empty_candidates = Vec::new();
    let mut nonempty: Vec<(NodeId, BTreeSet<NodeId>)> = Vec::new();
    for (&t, set) in &candidates {
        if set.is_empty() {
            empty_candidates.push(t);
        } else {
            nonempty.push((t, set.clone()));
        }
    }
    let universe: BTreeSet<NodeId> = nonempty.iter().flat_map(|(_, s)| s.iter().copied()).collect();
    let sets: Vec<BTreeSet<NodeId>> = nonempty.iter().map(|(_, s)| s.clone()).collect();
    let hitting = if sets.is_empty() {
        BTreeSet::new()
    } else {
        greedy_hitting_set(&sets, &universe)?
    };

    let dm_root = shortest_paths(g, root, CostMode::IncludeBoth)?;
    let mut union_nodes: BTreeSet<NodeId> = cheap_tree.nodes.clone();

    // Root-to-relay paths.
    for &w in &hitting {
        union_nodes.extend(dm_root.path_to(w).expect("relay is reachable"));
    }
    // Relay-to-terminal paths through the high-capacity subgraph; each
    // terminal uses its closest relay from the hitting set.
    for (t, set) in &nonempty {
        let mut best: Option<(f64, NodeId, Vec<NodeId>)> = None;
        for &w in &hitting {
            if !set.contains(&w) {
                continue;
            }
            let mut keep = split.high_capacity.clone();
            keep.insert(w);
            let gsub = g.induced_subgraph(&keep)?;
            let dmw = shortest_paths(&gsub, w, CostMode::IncludeBoth)?;
            if let Some(d) = dmw.dist(*t) {
                if best.as_ref().map_or(true, |(bd, _, _)| d < *bd) {
                    best = Some((d, w, dmw.path_to(*t).unwrap()));
                }
            }
        }
        let (_, _, path) = best.expect("the hitting set hits every nonempty candidate set");
        union_nodes.extend(path);
    }
    // Terminals whose candidate sets came back empty are patched in with a
    // plain shortest path so the output still spans R.
    for &t in &empty_candidates {
        union_nodes.extend(dm_root.path_to(t).expect("terminal reachable"));
    }

    let union_graph = g.induced_subgraph(&union_nodes)?;
    let mut tree_targets = terminals.clone();
    tree_targets.insert(root);
    let tree = extract_out_tree(&union_graph, root, &tree_targets)?;

    let f_max = g
        .node_ids()
        .filter_map(|v| dm_root.dist(v))
        .fold(0.0f64, f64::max);
    let report = DstReport {
        lp_opt: sol.objective,
        lp_iterations: sol.iterations,
        f_max,
        non_terminal_count: non_terminal_count(g, terminals),
        threshold: split.threshold,
        high_capacity_size: split.high_capacity.len(),
        cheap_terminals: split.cheap.iter().copied().collect(),
        expensive_terminals: split.expensive.iter().copied().collect(),
        candidate_set_sizes: candidates.iter().map(|(&t, s)| (t, s.len())).collect(),
        empty_candidate_sets: empty_candidates,
        hitting_set: hitting.iter().copied().collect(),
        cheap_tree_cost: cheap_tree.total_cost,
        tree_cost: tree.total_cost,
        guess: None,
        guesses_tried: 0,
    };
    Ok(DstOutcome { tree, report })
}

/// Cost ceiling the solver is tested against:
/// `sqrt(max(|V \ R|, 1)) * (2 * lp_opt + f_max * (ln(max(|R|, 2)) + 1))`.
pub fn cost_ceiling(lp_opt: f64, f_max: f64, non_terminals: usize, terminals: usize) -> f64 {
    let root_term = (non_terminals.max(1) as f64).sqrt();
    let log_term = (terminals.max(2) as f64).ln() + 1.0;
    root_term * (2.0 * lp_opt + f_max * log_term)
}
