//! Budget-constrained connected coverage on directed and undirected graphs.
//!
//! Pipeline: prune the graph to the nodes the budget can reach, append one
//! zero-cost sink per ground-set element, solve the flow relaxation, group the
//! element sinks into dyadic capacity buckets, connect each promising bucket
//! with a Steiner subroutine, keep the best prize-to-cost tree, and trim it
//! down to at most `(1 + eps) * budget` while retaining a constant fraction of
//! the prize-to-cost ratio.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::bidirected::{solve_dst_bidirected, BidirectedError};
use crate::dst::{solve_dst, DstError, SteinerInstance};
use crate::graph::{
    b_proper_prune, extract_out_tree, shortest_paths, CostMode, GraphError, NodeId,
    NodeWeightedDigraph, OutTree,
};
use crate::lp::{build_dcbc_lp, solve_lp, FracSolution, LpError, ROW_TOL};

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error("instance is invalid: {0}")]
    BadInstance(String),
    #[error("epsilon {0} is outside (0, 1]")]
    InvalidEpsilon(f64),
    #[error("root cost {root_cost} exceeds budget {budget}; no feasible tree exists")]
    InfeasibleBudget { root_cost: f64, budget: f64 },
    #[error("terminal set for a Steiner connection is empty")]
    EmptyTerminals,
    #[error("instance direction does not match the solver: {0}")]
    WrongKind(String),
    #[error("trimming precondition failed: {0}")]
    TrimPrecondition(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Dst(#[from] DstError),
    #[error(transparent)]
    Bidirected(#[from] BidirectedError),
}

/// Ground set with prizes, per-node coverage sets, graph, root and budget.
#[derive(Debug, Clone)]
pub struct CoverageInstance {
    pub graph: NodeWeightedDigraph,
    pub root: NodeId,
    pub budget: f64,
    pub directed: bool,
    /// Prize per element id.
    pub prizes: Vec<f64>,
    /// Elements covered by each node, indexed by node id.
    pub covers: Vec<BTreeSet<usize>>,
}

impl CoverageInstance {
    pub fn new(
        graph: NodeWeightedDigraph,
        root: NodeId,
        budget: f64,
        directed: bool,
        prizes: Vec<f64>,
        covers: Vec<BTreeSet<usize>>,
    ) -> Result<Self, CoverageError> {
        if !graph.contains(root) {
            return Err(CoverageError::BadInstance(format!(
                "root {root} is not a node of the graph"
            )));
        }
        if budget < 0.0 || budget.is_nan() {
            return Err(CoverageError::BadInstance(format!("budget {budget} is negative")));
        }
        if let Some((x, &p)) = prizes.iter().enumerate().find(|&(_, &p)| p < 0.0 || p.is_nan()) {
            return Err(CoverageError::BadInstance(format!(
                "element {x} has negative prize {p}"
            )));
        }
        if covers.len() != graph.capacity() {
            return Err(CoverageError::BadInstance(format!(
                "covers table has {} entries for {} node ids",
                covers.len(),
                graph.capacity()
            )));
        }
        for (v, set) in covers.iter().enumerate() {
            for &x in set {
                if x >= prizes.len() {
                    return Err(CoverageError::BadInstance(format!(
                        "node {v} references unknown element {x}"
                    )));
                }
            }
        }
        Ok(CoverageInstance {
            graph,
            root,
            budget,
            directed,
            prizes,
            covers,
        })
    }

    pub fn element_count(&self) -> usize {
        self.prizes.len()
    }

    /// Elements covered by a node set and their total prize, each counted once.
    pub fn coverage_of<'a>(
        &self,
        nodes: impl IntoIterator<Item = &'a NodeId>,
    ) -> (BTreeSet<usize>, f64) {
        let mut covered = BTreeSet::new();
        for &v in nodes {
            if v < self.covers.len() {
                covered.extend(self.covers[v].iter().copied());
            }
        }
        // fold from +0.0: summing an empty set must not yield -0.0
        let prize = covered.iter().fold(0.0, |a, &x| a + self.prizes[x]);
        (covered, prize)
    }
}

/// Base graph plus one zero-cost sink node per element, carrying its prize.
#[derive(Debug, Clone)]
pub struct AugmentedGraph {
    pub graph: NodeWeightedDigraph,
    pub root: NodeId,
    pub budget: f64,
    pub base_nodes: BTreeSet<NodeId>,
    /// Element id to its sink node id.
    pub element_node: Vec<NodeId>,
    /// Sink node id back to its element id.
    pub element_of: BTreeMap<NodeId, usize>,
    element_prizes: Vec<f64>,
    covers: Vec<BTreeSet<usize>>,
}

impl AugmentedGraph {
    pub fn prize(&self, v: NodeId) -> f64 {
        self.element_of
            .get(&v)
            .map_or(0.0, |&x| self.element_prizes[x])
    }

    pub fn covers(&self, v: NodeId) -> &BTreeSet<usize> {
        static EMPTY: BTreeSet<usize> = BTreeSet::new();
        self.covers.get(v).unwrap_or(&EMPTY)
    }

    /// Coverage through base nodes only; sinks without their covering node
    /// contribute nothing, which keeps prizes faithful after mapping a tree
    /// back to the base graph.
    pub fn coverage_prize(&self, nodes: &BTreeSet<NodeId>) -> (BTreeSet<usize>, f64) {
        let mut covered = BTreeSet::new();
        for &v in nodes {
            if self.base_nodes.contains(&v) {
                covered.extend(self.covers[v].iter().copied());
            }
        }
        let prize = covered.iter().fold(0.0, |a, &x| a + self.element_prizes[x]);
        (covered, prize)
    }
}

/// Appends one cost-zero sink per element with arcs from every covering node;
/// undirected instances mark the base nodes as a bidirected core.
pub fn augment_graph(inst: &CoverageInstance) -> Result<AugmentedGraph, CoverageError> {
    let base_cap = inst.graph.capacity();
    let n_elem = inst.element_count();
    let mut costs: Vec<f64> = (0..base_cap).map(|v| inst.graph.cost(v)).collect();
    costs.extend(std::iter::repeat_n(0.0, n_elem));
    let mut arcs = inst.graph.arcs();
    for v in inst.graph.node_ids() {
        for &x in &inst.covers[v] {
            arcs.push((v, base_cap + x));
        }
    }
    let base_nodes: BTreeSet<NodeId> = inst.graph.node_ids().collect();
    let mut present: BTreeSet<NodeId> = base_nodes.clone();
    present.extend(base_cap..base_cap + n_elem);
    let mut graph = NodeWeightedDigraph::new(costs, &arcs)?.induced_subgraph(&present)?;
    if !inst.directed {
        graph = graph.with_bidirected_core(base_nodes.clone())?;
    }
    Ok(AugmentedGraph {
        graph,
        root: inst.root,
        budget: inst.budget,
        base_nodes,
        element_node: (base_cap..base_cap + n_elem).collect(),
        element_of: (0..n_elem).map(|x| (base_cap + x, x)).collect(),
        element_prizes: inst.prizes.clone(),
        covers: inst.covers.clone(),
    })
}

/// Element sinks that received enough flow, split into dyadic capacity buckets.
#[derive(Debug, Clone)]
pub struct BucketStructure {
    /// Sinks with capacity at least `1/|X|^2`.
    pub kept: Vec<NodeId>,
    /// `buckets[i]` holds bucket `i + 1`: capacities in `(2^-(i+1), 2^-i]`.
    pub buckets: Vec<Vec<NodeId>>,
    /// Buckets `1..=head_bucket_count` form the high-capacity head group.
    pub head_bucket_count: usize,
    pub head_union: Vec<NodeId>,
    /// Capacity-weighted prize mass retained by the filter.
    pub retained_mass: f64,
}

/// Smallest `i >= 1` with `y > 2^-i`.
fn bucket_index(y: f64) -> usize {
    let mut i = 1usize;
    while y <= 0.5f64.powi(i as i32) {
        i += 1;
    }
    i
}

pub fn select_buckets(s: &FracSolution, aug: &AugmentedGraph) -> BucketStructure {
    let n_elem = aug.element_node.len();
    if n_elem == 0 {
        return BucketStructure {
            kept: Vec::new(),
            buckets: Vec::new(),
            head_bucket_count: 0,
            head_union: Vec::new(),
            retained_mass: 0.0,
        };
    }
    let threshold = 1.0 / (n_elem as f64 * n_elem as f64);
    let mut kept = Vec::new();
    let mut buckets: Vec<Vec<NodeId>> = Vec::new();
    let mut retained_mass = 0.0;
    for &w in &aug.element_node {
        let y = s.capacity_of(w);
        if y < threshold - 1e-9 {
            continue;
        }
        kept.push(w);
        retained_mass += y * aug.prize(w);
        let idx = bucket_index(y);
        if buckets.len() < idx {
            buckets.resize(idx, Vec::new());
        }
        buckets[idx - 1].push(w);
    }
    let log_x = (n_elem as f64).log2();
    let head_bucket_count = if log_x > 1.0 {
        log_x.log2().floor().max(0.0) as usize
    } else {
        0
    };
    let head_union: Vec<NodeId> = buckets
        .iter()
        .take(head_bucket_count)
        .flatten()
        .copied()
        .collect();
    BucketStructure {
        kept,
        buckets,
        head_bucket_count,
        head_union,
        retained_mass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectMode {
    Directed,
    Bidirected,
}

/// Connects a set of element sinks to the root with the Steiner subroutine
/// matching the mode, over the base nodes plus exactly those sinks.
pub fn steiner_connect(
    terms: &BTreeSet<NodeId>,
    aug: &AugmentedGraph,
    mode: ConnectMode,
    f_cap: f64,
) -> Result<OutTree, CoverageError> {
    if terms.is_empty() {
        return Err(CoverageError::EmptyTerminals);
    }
    let mut keep = aug.base_nodes.clone();
    keep.extend(terms.iter().copied());
    let sub = aug.graph.induced_subgraph(&keep)?;
    match mode {
        ConnectMode::Directed => {
            let inst = SteinerInstance::new(sub, aug.root, terms.clone())
                .map_err(CoverageError::Dst)?;
            Ok(solve_dst(&inst, 1.0, Some(f_cap))?.tree)
        }
        ConnectMode::Bidirected => {
            let inst = SteinerInstance::new(sub, aug.root, terms.clone())
                .map_err(CoverageError::Dst)?;
            Ok(solve_dst_bidirected(&inst, false)?.tree)
        }
    }
}

/// Which bucket family produced the selected tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BranchChoice {
    /// Union of the head buckets.
    HeadUnion,
    /// A single dyadic bucket (1-based index).
    Bucket(usize),
    /// No sink received enough flow; the root alone is returned.
    RootFallback,
}

#[derive(Debug, Clone)]
pub struct CandidateTree {
    pub branch: BranchChoice,
    /// Flow guarantee of the branch's terminals (1/delta each), kept for
    /// reporting and for the relaxation-transport certificate in tests.
    pub delta: f64,
    pub tree: OutTree,
    pub covered: BTreeSet<usize>,
    pub prize: f64,
}

/// Builds one spanning candidate per nonempty bucket plus one for the head
/// group. Every candidate is budget-capped at eccentricity `budget` via the
/// Steiner subroutine's cap.
pub fn candidate_trees(
    bs: &BucketStructure,
    aug: &AugmentedGraph,
    mode: ConnectMode,
) -> Result<Vec<CandidateTree>, CoverageError> {
    let n_elem = aug.element_node.len().max(2);
    let mut out = Vec::new();
    if !bs.head_union.is_empty() {
        let terms: BTreeSet<NodeId> = bs.head_union.iter().copied().collect();
        let tree = steiner_connect(&terms, aug, mode, aug.budget)?;
        let (covered, prize) = aug.coverage_prize(&tree.nodes);
        out.push(CandidateTree {
            branch: BranchChoice::HeadUnion,
            delta: (n_elem as f64).log2(),
            tree,
            covered,
            prize,
        });
    }
    for (i, bucket) in bs.buckets.iter().enumerate() {
        if bucket.is_empty() {
            continue;
        }
        let terms: BTreeSet<NodeId> = bucket.iter().copied().collect();
        let tree = steiner_connect(&terms, aug, mode, aug.budget)?;
        let (covered, prize) = aug.coverage_prize(&tree.nodes);
        out.push(CandidateTree {
            branch: BranchChoice::Bucket(i + 1),
            delta: 2f64.powi(i as i32 + 1),
            tree,
            covered,
            prize,
        });
    }
    Ok(out)
}

/// `true` when prize/cost of `a` beats `b`; ties prefer the larger prize,
/// then the smaller cost.
fn better_ratio(a: (f64, f64), b: (f64, f64)) -> bool {
    let lhs = a.0 * b.1;
    let rhs = b.0 * a.1;
    if lhs != rhs {
        return lhs > rhs;
    }
    if a.0 != b.0 {
        return a.0 > b.0;
    }
    a.1 < b.1
}

#[derive(Debug, Clone)]
pub struct TrimResult {
    pub tree: OutTree,
    pub peeled_pieces: usize,
}

/// Cuts an over-budget tree down to cost within `[eps*B/2, (1+eps)*B]` while
/// keeping at least an `eps/4` fraction of its prize-to-cost ratio.
///
/// Trees already within `(1+eps)*B` come back unchanged. Otherwise the tree
/// is peeled bottom-up into pieces of cost between `eps*B/2` and `eps*B`
/// (single nodes above `eps*B` form their own piece; when a subtree overshoots
/// only because of its root's own cost, the root rides along since the
/// reattachment path pays for it anyway). Each piece is materialized by
/// stitching it to the root with a shortest path, the root-side residue is
/// padded back up to `eps*B/2` if it fell below, and the best final
/// prize-to-cost candidate wins.
pub fn trim_tree<F>(
    t: &OutTree,
    eps: f64,
    budget: f64,
    g: &NodeWeightedDigraph,
    root: NodeId,
    prize_of: F,
) -> Result<TrimResult, CoverageError>
where
    F: Fn(&BTreeSet<NodeId>) -> f64,
{
    if !(0.0..=1.0).contains(&eps) || eps == 0.0 {
        return Err(CoverageError::InvalidEpsilon(eps));
    }
    if t.total_cost <= (1.0 + eps) * budget {
        return Ok(TrimResult {
            tree: t.clone(),
            peeled_pieces: 0,
        });
    }
    let half = eps * budget / 2.0;
    let cap = eps * budget;

    // Static tree structure.
    let mut children: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &(u, v) in &t.arcs {
        children.entry(u).or_default().push(v);
    }
    for list in children.values_mut() {
        list.sort_unstable();
    }
    let mut depth: BTreeMap<NodeId, usize> = BTreeMap::from([(root, 0)]);
    let mut stack = vec![root];
    while let Some(u) = stack.pop() {
        let d = depth[&u];
        for &c in children.get(&u).into_iter().flatten() {
            depth.insert(c, d + 1);
            stack.push(c);
        }
    }

    let mut removed: BTreeSet<NodeId> = BTreeSet::new();
    let live_subtree = |v: NodeId, removed: &BTreeSet<NodeId>| -> (BTreeSet<NodeId>, f64) {
        let mut nodes = BTreeSet::new();
        let mut cost = 0.0;
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if removed.contains(&u) || !nodes.insert(u) {
                continue;
            }
            cost += g.cost(u);
            stack.extend(children.get(&u).into_iter().flatten().copied());
        }
        (nodes, cost)
    };

    struct Piece {
        nodes: BTreeSet<NodeId>,
        attach: NodeId,
    }
    let mut pieces: Vec<Piece> = Vec::new();
    let mut live_cost = t.total_cost;
    while live_cost > cap {
        // Deepest live node whose live subtree still costs at least half a cap.
        let mut pick: Option<(usize, NodeId, f64)> = None;
        for &v in &t.nodes {
            if removed.contains(&v) {
                continue;
            }
            let (_, c) = live_subtree(v, &removed);
            if c >= half {
                let d = depth[&v];
                let better = match pick {
                    None => true,
                    Some((pd, pv, _)) => d > pd || (d == pd && v < pv),
                };
                if better {
                    pick = Some((d, v, c));
                }
            }
        }
        let (_, v, sub_cost) = pick.expect("the live root always qualifies");
        let (sub_nodes, _) = live_subtree(v, &removed);
        if sub_cost - g.cost(v) <= cap {
            pieces.push(Piece {
                nodes: sub_nodes.clone(),
                attach: v,
            });
            removed.extend(sub_nodes);
            live_cost -= sub_cost;
        } else {
            // Bundle child subtrees (each below half by depth-maximality)
            // until the bundle reaches half; it then stays below a full cap.
            let mut bundle = BTreeSet::new();
            let mut bundle_cost = 0.0;
            for &c in children.get(&v).into_iter().flatten() {
                if removed.contains(&c) {
                    continue;
                }
                let (nodes, cost) = live_subtree(c, &removed);
                bundle.extend(nodes);
                bundle_cost += cost;
                if bundle_cost >= half {
                    break;
                }
            }
            debug_assert!(bundle_cost >= half && bundle_cost <= cap);
            pieces.push(Piece {
                nodes: bundle.clone(),
                attach: v,
            });
            removed.extend(bundle);
            live_cost -= bundle_cost;
        }
    }

    let dm = shortest_paths(g, root, CostMode::IncludeBoth)?;
    let peeled_pieces = pieces.len();
    let mut candidates: Vec<OutTree> = Vec::new();
    for piece in &pieces {
        let path = dm.path_to(piece.attach).ok_or_else(|| {
            CoverageError::TrimPrecondition(format!(
                "piece attachment {} unreachable from the root",
                piece.attach
            ))
        })?;
        if dm.dist(piece.attach).unwrap() > budget + 1e-9 {
            return Err(CoverageError::TrimPrecondition(format!(
                "graph is not budget-proper: node {} at distance {}",
                piece.attach,
                dm.dist(piece.attach).unwrap()
            )));
        }
        let mut nodes: BTreeSet<NodeId> = piece.nodes.clone();
        nodes.extend(path);
        let sub = g.induced_subgraph(&nodes)?;
        candidates.push(extract_out_tree(&sub, root, &nodes)?);
    }

    // Root-side residue, padded back up through original tree arcs if the
    // peeling left it too small.
    let mut residue: BTreeSet<NodeId> = t
        .nodes
        .iter()
        .copied()
        .filter(|v| !removed.contains(v))
        .collect();
    if !residue.is_empty() {
        let mut residue_cost: f64 = residue.iter().map(|&v| g.cost(v)).sum();
        let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for &(u, v) in &t.arcs {
            parent.insert(v, u);
        }
        while residue_cost < half {
            let next = t
                .nodes
                .iter()
                .copied()
                .find(|v| !residue.contains(v) && parent.get(v).is_some_and(|p| residue.contains(p)));
            match next {
                Some(v) => {
                    residue.insert(v);
                    residue_cost += g.cost(v);
                }
                None => break,
            }
        }
        let arcs: BTreeSet<(NodeId, NodeId)> = t
            .arcs
            .iter()
            .copied()
            .filter(|&(u, v)| residue.contains(&u) && residue.contains(&v))
            .collect();
        candidates.push(OutTree {
            root,
            nodes: residue.clone(),
            arcs,
            total_cost: residue_cost,
        });
    }

    let mut best: Option<(OutTree, f64)> = None;
    for cand in candidates {
        let prize = prize_of(&cand.nodes);
        let better = match &best {
            None => true,
            Some((bt, bp)) => better_ratio((prize, cand.total_cost), (*bp, bt.total_cost)),
        };
        if better {
            best = Some((cand, prize));
        }
    }
    let (tree, _) = best.expect("peeling produced at least one piece");
    Ok(TrimResult {
        tree,
        peeled_pieces,
    })
}

/// Deterministic counters from each pipeline stage.
#[derive(Debug, Clone, Default, Serialize)]
pub struct StageStats {
    pub pruned_nodes: usize,
    pub lp_rows: usize,
    pub lp_vars: usize,
    pub lp_iterations: usize,
    pub bucket_count: usize,
    pub max_bucket_index: usize,
    pub retained_mass: f64,
    pub candidate_count: usize,
    pub trim_peeled_pieces: usize,
}

/// Wall-clock stage timings; in-memory diagnostics only, never serialized so
/// identical runs stay byte-identical.
#[derive(Debug, Clone, Default)]
pub struct StageTimings {
    pub prune_secs: f64,
    pub lp_secs: f64,
    pub candidates_secs: f64,
    pub trim_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tree_nodes: Vec<NodeId>,
    pub tree_arcs: Vec<(NodeId, NodeId)>,
    pub cost: f64,
    pub prize: f64,
    pub covered_elements: Vec<usize>,
    pub budget: f64,
    pub epsilon: f64,
    /// `cost / budget`; 1.0 for the degenerate zero-budget case.
    pub budget_violation: f64,
    pub lp_opt: f64,
    pub chosen_branch: BranchChoice,
    pub stages: StageStats,
    #[serde(skip)]
    pub timings: StageTimings,
}

pub fn solve_dcbc(inst: &CoverageInstance, eps: f64) -> Result<RunReport, CoverageError> {
    if !inst.directed {
        return Err(CoverageError::WrongKind(
            "solve_dcbc expects a directed instance".to_string(),
        ));
    }
    solve_budgeted(inst, eps, ConnectMode::Directed)
}

pub fn solve_ucbc(inst: &CoverageInstance, eps: f64) -> Result<RunReport, CoverageError> {
    if inst.directed {
        return Err(CoverageError::WrongKind(
            "solve_ucbc expects an undirected instance".to_string(),
        ));
    }
    for (u, v) in inst.graph.arcs() {
        if !inst.graph.has_arc(v, u) {
            return Err(CoverageError::WrongKind(format!(
                "undirected instance has an unpaired arc ({u}, {v})"
            )));
        }
    }
    solve_budgeted(inst, eps, ConnectMode::Bidirected)
}

fn solve_budgeted(
    inst: &CoverageInstance,
    eps: f64,
    mode: ConnectMode,
) -> Result<RunReport, CoverageError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(CoverageError::InvalidEpsilon(eps));
    }
    let mut timings = StageTimings::default();
    let clock = std::time::Instant::now();
    let pruned = b_proper_prune(&inst.graph, inst.root, inst.budget).map_err(|e| match e {
        GraphError::RootOverBudget { root_cost, budget } => {
            CoverageError::InfeasibleBudget { root_cost, budget }
        }
        other => CoverageError::Graph(other),
    })?;
    timings.prune_secs = clock.elapsed().as_secs_f64();
    let pruned_inst = CoverageInstance {
        graph: pruned,
        ..inst.clone()
    };
    let aug = augment_graph(&pruned_inst)?;

    let clock = std::time::Instant::now();
    let lp = build_dcbc_lp(&aug)?;
    let sol = solve_lp(&lp, ROW_TOL)?;
    timings.lp_secs = clock.elapsed().as_secs_f64();

    let bs = select_buckets(&sol, &aug);
    let clock = std::time::Instant::now();
    let candidates = candidate_trees(&bs, &aug, mode)?;
    timings.candidates_secs = clock.elapsed().as_secs_f64();

    let mut best: Option<&CandidateTree> = None;
    for cand in &candidates {
        let better = match best {
            None => true,
            Some(b) => better_ratio(
                (cand.prize, cand.tree.total_cost),
                (b.prize, b.tree.total_cost),
            ),
        };
        if better {
            best = Some(cand);
        }
    }

    let clock = std::time::Instant::now();
    let (final_tree, branch, peeled) = match best {
        Some(cand) => {
            let trimmed = trim_tree(
                &cand.tree,
                eps,
                inst.budget,
                &aug.graph,
                inst.root,
                |nodes| aug.coverage_prize(nodes).1,
            )?;
            (trimmed.tree, cand.branch, trimmed.peeled_pieces)
        }
        None => (
            OutTree::singleton(inst.root, aug.graph.cost(inst.root)),
            BranchChoice::RootFallback,
            0,
        ),
    };
    timings.trim_secs = clock.elapsed().as_secs_f64();

    // Back to the base graph: element sinks are leaves, so dropping them
    // leaves a rooted tree.
    let base_tree_nodes: BTreeSet<NodeId> = final_tree
        .nodes
        .iter()
        .copied()
        .filter(|v| aug.base_nodes.contains(v))
        .collect();
    let base_arcs: Vec<(NodeId, NodeId)> = final_tree
        .arcs
        .iter()
        .copied()
        .filter(|&(u, v)| base_tree_nodes.contains(&u) && base_tree_nodes.contains(&v))
        .collect();
    let cost: f64 = base_tree_nodes.iter().map(|&v| inst.graph.cost(v)).sum();
    let (covered, prize) = inst.coverage_of(base_tree_nodes.iter());

    let budget_violation = if inst.budget > 0.0 {
        cost / inst.budget
    } else {
        1.0
    };
    Ok(RunReport {
        tree_nodes: base_tree_nodes.into_iter().collect(),
        tree_arcs: base_arcs,
        cost,
        prize,
        covered_elements: covered.into_iter().collect(),
        budget: inst.budget,
        epsilon: eps,
        budget_violation,
        lp_opt: sol.objective,
        chosen_branch: branch,
        stages: StageStats {
            pruned_nodes: inst.graph.node_count() - pruned_inst.graph.node_count(),
            lp_rows: lp.rows.len(),
            lp_vars: lp.vars.len(),
            lp_iterations: sol.iterations,
            bucket_count: bs.buckets.iter().filter(|b| !b.is_empty()).count(),
            max_bucket_index: bs.buckets.len(),
            retained_mass: bs.retained_mass,
            candidate_count: candidates.len(),
            trim_peeled_pieces: peeled,
        },
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_out_tree;
    use crate::lp::LpStatus;

    fn inst_directed(
        costs: Vec<f64>,
        arcs: &[(NodeId, NodeId)],
        budget: f64,
        prizes: Vec<f64>,
        covers: Vec<BTreeSet<usize>>,
    ) -> CoverageInstance {
        CoverageInstance::new(
            NodeWeightedDigraph::new(costs, arcs).unwrap(),
            0,
            budget,
            true,
            prizes,
            covers,
        )
        .unwrap()
    }

    #[test]
    fn augment_no_elements_is_base_graph() {
        let inst = inst_directed(vec![0.0, 1.0], &[(0, 1)], 5.0, vec![], vec![
            BTreeSet::new(),
            BTreeSet::new(),
        ]);
        let aug = augment_graph(&inst).unwrap();
        assert_eq!(aug.graph.node_count(), 2);
        assert_eq!(aug.graph.arc_count(), 1);
    }

    #[test]
    fn augment_adds_one_sink_per_element() {
        let inst = inst_directed(vec![0.0], &[], 1.0, vec![3.0], vec![BTreeSet::from([0])]);
        let aug = augment_graph(&inst).unwrap();
        assert_eq!(aug.graph.node_count(), 2);
        let w = aug.element_node[0];
        assert_eq!(aug.graph.cost(w), 0.0);
        assert_eq!(aug.prize(w), 3.0);
        assert!(aug.graph.has_arc(0, w));
        assert!(aug.graph.out_neighbors(w).count() == 0);
    }

    #[test]
    fn augment_shared_element_has_full_in_degree() {
        let inst = inst_directed(
            vec![0.0, 1.0, 1.0],
            &[(0, 1), (0, 2)],
            5.0,
            vec![2.0],
            vec![
                BTreeSet::from([0]),
                BTreeSet::from([0]),
                BTreeSet::from([0]),
            ],
        );
        let aug = augment_graph(&inst).unwrap();
        let w = aug.element_node[0];
        assert_eq!(aug.graph.in_neighbors(w).count(), 3);
    }

    #[test]
    fn bucket_boundaries() {
        assert_eq!(bucket_index(1.0), 1);
        assert_eq!(bucket_index(0.6), 1);
        assert_eq!(bucket_index(0.5), 2);
        assert_eq!(bucket_index(0.3), 2);
        assert_eq!(bucket_index(0.25), 3);
    }

    fn frac_with_capacities(caps: &[(NodeId, f64)]) -> FracSolution {
        FracSolution {
            capacity: caps.iter().copied().collect(),
            flow: BTreeMap::new(),
            objective: 0.0,
            status: LpStatus::Optimal,
            iterations: 0,
        }
    }

    #[test]
    fn select_buckets_filters_and_partitions() {
        // Four elements covered by the root.
        let inst = inst_directed(
            vec![0.0],
            &[],
            1.0,
            vec![1.0; 4],
            vec![BTreeSet::from([0, 1, 2, 3])],
        );
        let aug = augment_graph(&inst).unwrap();
        let w = |x: usize| aug.element_node[x];
        // 1/|X|^2 = 1/16; 0.01 is dropped, 0.3 lands in bucket 2, 1.0 in 1.
        let s = frac_with_capacities(&[(w(0), 1.0), (w(1), 0.3), (w(2), 0.01), (w(3), 0.0625)]);
        let bs = select_buckets(&s, &aug);
        assert_eq!(bs.kept, vec![w(0), w(1), w(3)]);
        assert_eq!(bs.buckets[0], vec![w(0)]);
        assert_eq!(bs.buckets[1], vec![w(1)]);
        assert_eq!(bs.buckets[4], vec![w(3)]); // 0.0625 = 2^-4 sits in (2^-5, 2^-4]
        // |X| = 4: head group is bucket 1 only.
        assert_eq!(bs.head_bucket_count, 1);
        assert_eq!(bs.head_union, vec![w(0)]);
        assert!((bs.retained_mass - (1.0 + 0.3 + 0.0625)).abs() < 1e-12);
    }

    #[test]
    fn steiner_connect_adjacent_sink() {
        let inst = inst_directed(vec![0.0], &[], 0.0, vec![5.0], vec![BTreeSet::from([0])]);
        let aug = augment_graph(&inst).unwrap();
        let w = aug.element_node[0];
        let tree = steiner_connect(&BTreeSet::from([w]), &aug, ConnectMode::Directed, 0.0).unwrap();
        assert_eq!(tree.nodes, BTreeSet::from([0, w]));
        assert_eq!(tree.total_cost, 0.0);
    }

    #[test]
    fn steiner_connect_spans_all_sinks_of_a_path() {
        // 0(0) -> 1(2) -> 2(3), one element per node; connecting all sinks
        // forces the whole path plus the three sinks.
        let inst = inst_directed(
            vec![0.0, 2.0, 3.0],
            &[(0, 1), (1, 2)],
            5.0,
            vec![1.0, 1.0, 1.0],
            vec![
                BTreeSet::from([0]),
                BTreeSet::from([1]),
                BTreeSet::from([2]),
            ],
        );
        let aug = augment_graph(&inst).unwrap();
        let terms: BTreeSet<NodeId> = aug.element_node.iter().copied().collect();
        let tree = steiner_connect(&terms, &aug, ConnectMode::Directed, 5.0).unwrap();
        assert!(terms.iter().all(|t| tree.nodes.contains(t)));
        assert!(tree.nodes.is_superset(&BTreeSet::from([0, 1, 2])));
        assert_eq!(tree.total_cost, 5.0);
    }

    #[test]
    fn candidate_trees_one_per_nonempty_bucket() {
        // Two elements on the root, capacities placed by hand: 1.0 lands in
        // bucket 1, 0.3 in bucket 2. |X| = 2 keeps the head group empty, so
        // exactly two bucket candidates come out.
        let inst = inst_directed(
            vec![0.0],
            &[],
            1.0,
            vec![4.0, 9.0],
            vec![BTreeSet::from([0, 1])],
        );
        let aug = augment_graph(&inst).unwrap();
        let w = |x: usize| aug.element_node[x];
        let s = frac_with_capacities(&[(w(0), 1.0), (w(1), 0.3)]);
        let bs = select_buckets(&s, &aug);
        assert!(bs.head_union.is_empty());
        let cands = candidate_trees(&bs, &aug, ConnectMode::Directed).unwrap();
        assert_eq!(cands.len(), 2);
        assert_eq!(cands[0].branch, BranchChoice::Bucket(1));
        assert_eq!(cands[0].delta, 2.0);
        assert_eq!(cands[1].branch, BranchChoice::Bucket(2));
        assert_eq!(cands[1].delta, 4.0);
        // Both candidates span the root and cover both elements through it.
        for c in &cands {
            assert_eq!(c.prize, 13.0);
        }
    }

    #[test]
    fn steiner_connect_rejects_empty_and_unreachable() {
        let inst = inst_directed(vec![0.0, 1.0], &[(1, 0)], 5.0, vec![1.0], vec![
            BTreeSet::new(),
            BTreeSet::from([0]),
        ]);
        let aug = augment_graph(&inst).unwrap();
        assert!(matches!(
            steiner_connect(&BTreeSet::new(), &aug, ConnectMode::Directed, 5.0),
            Err(CoverageError::EmptyTerminals)
        ));
        let w = aug.element_node[0];
        assert!(steiner_connect(&BTreeSet::from([w]), &aug, ConnectMode::Directed, 5.0).is_err());
    }

    #[test]
    fn trim_keeps_feasible_tree_unchanged() {
        let g = NodeWeightedDigraph::new(vec![1.0, 1.0, 1.0], &[(0, 1), (1, 2)]).unwrap();
        let t = extract_out_tree(&g, 0, &BTreeSet::from([2])).unwrap();
        let r = trim_tree(&t, 1.0, 3.0, &g, 0, |nodes| nodes.len() as f64).unwrap();
        assert_eq!(r.tree, t);
        assert_eq!(r.peeled_pieces, 0);
    }

    #[test]
    fn trim_long_unit_path_all_cuts() {
        // Path of 12 unit-cost nodes (cost 12 = 4B with B = 3, eps = 1).
        let n = 12;
        let costs = vec![1.0; n];
        let arcs: Vec<(NodeId, NodeId)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        // Make it budget-proper for B = 3 by shortcut arcs from the root.
        let mut all_arcs = arcs.clone();
        for v in 2..n {
            all_arcs.push((0, v));
        }
        let g = NodeWeightedDigraph::new(costs, &all_arcs).unwrap();
        // The tree is the plain path, cost 12.
        let nodes: BTreeSet<NodeId> = (0..n).collect();
        let tree = OutTree {
            root: 0,
            nodes: nodes.clone(),
            arcs: arcs.iter().copied().collect(),
            total_cost: 12.0,
        };
        let budget = 3.0;
        let eps = 1.0;
        let gamma = 12.0 / 12.0; // prize = node count, unit costs
        let r = trim_tree(&tree, eps, budget, &g, 0, |s| s.len() as f64).unwrap();
        let c = r.tree.total_cost;
        assert!(c >= eps * budget / 2.0 && c <= (1.0 + eps) * budget, "cost {c}");
        let prize = r.tree.nodes.len() as f64;
        assert!(prize / c >= eps * gamma / 4.0 - 1e-9);
        assert!(validate_out_tree(&r.tree, &g, 0).is_empty());
    }

    #[test]
    fn trim_keeps_heavy_prize_branch() {
        // Budget-proper star: four cost-2 branches, budget 2.5, prize only on
        // node 1. The tree costs 8 > 5 = (1+eps)*budget and must be cut down
        // to the branch carrying the prize.
        let g = NodeWeightedDigraph::new(
            vec![0.0, 2.0, 2.0, 2.0, 2.0],
            &[(0, 1), (0, 2), (0, 3), (0, 4)],
        )
        .unwrap();
        let tree = extract_out_tree(&g, 0, &BTreeSet::from([1, 2, 3, 4])).unwrap();
        assert_eq!(tree.total_cost, 8.0);
        let r = trim_tree(&tree, 1.0, 2.5, &g, 0, |s| {
            if s.contains(&1) {
                100.0
            } else {
                0.0
            }
        })
        .unwrap();
        assert!(r.tree.nodes.contains(&1));
        assert!(r.tree.total_cost >= 1.25 && r.tree.total_cost <= 5.0);
        assert!(validate_out_tree(&r.tree, &g, 0).is_empty());
    }

    #[test]
    fn trim_contract_on_random_trees() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for case in 0..120 {
            let n = rng.gen_range(3..=12);
            let costs: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64).collect();
            let mut arcs: Vec<(NodeId, NodeId)> = Vec::new();
            for v in 1..n {
                arcs.push((rng.gen_range(0..v), v));
            }
            let g0 = NodeWeightedDigraph::new(costs, &arcs).unwrap();
            let total = g0.total_cost();
            if total == 0.0 {
                continue;
            }
            let budget = (total / rng.gen_range(2..6) as f64).ceil().max(g0.cost(0));
            let g = match b_proper_prune(&g0, 0, budget) {
                Ok(g) => g,
                Err(_) => continue,
            };
            let keep: BTreeSet<NodeId> = g.node_ids().collect();
            if keep.len() < 2 {
                continue;
            }
            let tree = extract_out_tree(&g, 0, &keep).unwrap();
            let eps = [0.25, 0.5, 1.0][case % 3];
            let prizes: Vec<f64> = (0..g.capacity()).map(|_| rng.gen_range(0..7) as f64).collect();
            let prize_of = |s: &BTreeSet<NodeId>| -> f64 { s.iter().map(|&v| prizes[v]).sum() };
            let before_prize = prize_of(&tree.nodes);
            let before_cost = tree.total_cost;
            let r = trim_tree(&tree, eps, budget, &g, 0, prize_of).unwrap();
            let c = r.tree.total_cost;
            assert!(c <= (1.0 + eps) * budget + 1e-9, "case {case}: cost {c}");
            if before_cost > (1.0 + eps) * budget {
                assert!(c >= eps * budget / 2.0 - 1e-9, "case {case}: cost {c} too small");
                let after = prize_of(&r.tree.nodes);
                assert!(
                    after * before_cost * 4.0 >= eps * before_prize * c - 1e-6,
                    "case {case}: ratio clause failed"
                );
            } else {
                assert_eq!(r.tree, tree, "feasible tree must be unchanged");
            }
            assert!(r.tree.nodes.contains(&0));
            assert!(validate_out_tree(&r.tree, &g, 0).is_empty());
        }
    }

    #[test]
    fn solve_zero_budget_root_coverage() {
        let inst = inst_directed(vec![0.0], &[], 0.0, vec![5.0], vec![BTreeSet::from([0])]);
        let report = solve_dcbc(&inst, 1.0).unwrap();
        assert_eq!(report.prize, 5.0);
        assert_eq!(report.cost, 0.0);
        assert_eq!(report.budget_violation, 1.0);
    }

    #[test]
    fn solve_two_hop_chain_inside_budget() {
        // 0(0) -> 1(1) -> 2(1), unit prizes on distinct elements of nodes 1, 2.
        let inst = inst_directed(
            vec![0.0, 1.0, 1.0],
            &[(0, 1), (1, 2)],
            2.0,
            vec![1.0, 1.0],
            vec![BTreeSet::new(), BTreeSet::from([0]), BTreeSet::from([1])],
        );
        let report = solve_dcbc(&inst, 1.0).unwrap();
        assert_eq!(report.prize, 2.0);
        assert!(report.cost <= 2.0 * 2.0);
        // Both elements reachable within budget: exact optimum is 2.
        assert!(report.lp_opt >= 2.0 - 1e-6);
    }

    #[test]
    fn solve_rejects_bad_epsilon_and_budget() {
        let inst = inst_directed(vec![1.0], &[], 0.5, vec![], vec![BTreeSet::new()]);
        assert!(matches!(
            solve_dcbc(&inst, 0.0),
            Err(CoverageError::InvalidEpsilon(_))
        ));
        assert!(matches!(
            solve_dcbc(&inst, 1.0),
            Err(CoverageError::InfeasibleBudget { .. })
        ));
    }

    #[test]
    fn solve_ucbc_on_symmetric_instance() {
        let inst = CoverageInstance::new(
            NodeWeightedDigraph::new(
                vec![0.0, 1.0, 1.0],
                &[(0, 1), (1, 0), (1, 2), (2, 1)],
            )
            .unwrap(),
            0,
            2.0,
            false,
            vec![1.0, 1.0],
            vec![BTreeSet::new(), BTreeSet::from([0]), BTreeSet::from([1])],
        )
        .unwrap();
        let report = solve_ucbc(&inst, 1.0).unwrap();
        assert_eq!(report.prize, 2.0);
        assert!(report.cost <= 4.0);
    }

    #[test]
    fn solve_ucbc_rejects_directed_instance() {
        let inst = inst_directed(vec![0.0], &[], 1.0, vec![], vec![BTreeSet::new()]);
        assert!(matches!(
            solve_ucbc(&inst, 1.0),
            Err(CoverageError::WrongKind(_))
        ));
    }

    #[test]
    fn bucket_count_mass_and_prize_invariants_on_random_runs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(53);
        for case in 0..40 {
            let n = rng.gen_range(3..=9);
            let costs: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64).collect();
            let mut arcs: Vec<(NodeId, NodeId)> = Vec::new();
            for v in 1..n {
                arcs.push((rng.gen_range(0..v), v));
            }
            for u in 0..n {
                for v in 0..n {
                    if u != v && rng.gen_bool(0.15) && !arcs.contains(&(u, v)) {
                        arcs.push((u, v));
                    }
                }
            }
            let m = rng.gen_range(2..=7);
            let covers: Vec<BTreeSet<usize>> = (0..n)
                .map(|_| (0..m).filter(|_| rng.gen_bool(0.35)).collect())
                .collect();
            let prizes: Vec<f64> = (0..m).map(|_| rng.gen_range(1..9) as f64).collect();
            let total: f64 = costs.iter().sum();
            let budget = (total * 0.45).ceil().max(costs[0]);
            let inst = CoverageInstance::new(
                NodeWeightedDigraph::new(costs, &arcs).unwrap(),
                0,
                budget,
                true,
                prizes,
                covers,
            )
            .unwrap();
            let report = solve_dcbc(&inst, 1.0).unwrap();
            // Bucket count: k <= 2 ceil(log2 |X|) + 1.
            let k_max = 2 * (m as f64).log2().ceil() as usize + 1;
            assert!(
                report.stages.max_bucket_index <= k_max,
                "case {case}: {} buckets exceed {k_max}",
                report.stages.max_bucket_index
            );
            // Retained capacity-weighted prize mass >= (1 - 1/|X|) lp_opt.
            assert!(
                report.stages.retained_mass >= (1.0 - 1.0 / m as f64) * report.lp_opt - 1e-6,
                "case {case}: mass {} vs lp {}",
                report.stages.retained_mass,
                report.lp_opt
            );
            // Reported prize equals the recomputed element-union prize.
            let (covered, prize) = inst.coverage_of(report.tree_nodes.iter());
            assert_eq!(report.prize, prize);
            assert_eq!(
                report.covered_elements,
                covered.into_iter().collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn root_fallback_when_nothing_is_coverable() {
        let inst = inst_directed(vec![0.0], &[], 3.0, vec![], vec![BTreeSet::new()]);
        let report = solve_dcbc(&inst, 1.0).unwrap();
        assert_eq!(report.chosen_branch, BranchChoice::RootFallback);
        assert_eq!(report.prize, 0.0);
        assert_eq!(report.tree_nodes, vec![0]);
    }
}
