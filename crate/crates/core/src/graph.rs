//! Node-weighted directed graphs and the path machinery built on them.
//!
//! Costs live on nodes, not arcs. The cost of a path is the sum of the costs
//! of its nodes, and two endpoint conventions are supported: charge both
//! endpoints, or charge interior nodes only. Everything downstream (pruning,
//! out-tree extraction, spider merging) is expressed through these two.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::collections::BTreeSet;

use thiserror::Error;

pub type NodeId = usize;
pub type Arc = (NodeId, NodeId);

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("node id {0} out of range")]
    UnknownNode(NodeId),
    #[error("node {0} is not present in the graph")]
    AbsentNode(NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate arc ({0}, {1})")]
    DuplicateArc(NodeId, NodeId),
    #[error("negative cost {1} on node {0}")]
    NegativeCost(NodeId, f64),
    #[error("core node {0} has unpaired arc to core node {1}")]
    UnpairedCoreArc(NodeId, NodeId),
    #[error("node {0} is outside the bidirected core but has an outgoing arc")]
    SinkWithOutArc(NodeId),
    #[error("target {0} is not reachable from the root")]
    UnreachableTarget(NodeId),
    #[error("root cost {root_cost} exceeds budget {budget}")]
    RootOverBudget { root_cost: f64, budget: f64 },
}

/// Endpoint convention for node-weighted path costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostMode {
    /// Both endpoints of the path are charged.
    IncludeBoth,
    /// Only interior nodes are charged; source and target are free.
    ExcludeEndpoints,
}

/// Directed graph with nonnegative node costs over a fixed id space `0..capacity`.
///
/// Subgraphs keep the original id space and simply restrict the set of present
/// nodes, so ids stay stable across pruning and induction.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeWeightedDigraph {
    capacity: usize,
    present: Vec<bool>,
    cost: Vec<f64>,
    out: Vec<Vec<NodeId>>,
    incoming: Vec<Vec<NodeId>>,
    /// Nodes whose mutual arcs must all be paired; nodes outside it are sinks.
    bidirected_core: Option<BTreeSet<NodeId>>,
}

impl NodeWeightedDigraph {
    /// Builds a graph over ids `0..costs.len()` with all nodes present.
    pub fn new(costs: Vec<f64>, arcs: &[Arc]) -> Result<Self, GraphError> {
        let capacity = costs.len();
        for (v, &c) in costs.iter().enumerate() {
            if c < 0.0 || c.is_nan() {
                return Err(GraphError::NegativeCost(v, c));
            }
        }
        let mut g = NodeWeightedDigraph {
            capacity,
            present: vec![true; capacity],
            cost: costs,
            out: vec![Vec::new(); capacity],
            incoming: vec![Vec::new(); capacity],
            bidirected_core: None,
        };
        for &(u, v) in arcs {
            if u >= capacity {
                return Err(GraphError::UnknownNode(u));
            }
            if v >= capacity {
                return Err(GraphError::UnknownNode(v));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if g.out[u].contains(&v) {
                return Err(GraphError::DuplicateArc(u, v));
            }
            g.out[u].push(v);
            g.incoming[v].push(u);
        }
        for v in 0..capacity {
            g.out[v].sort_unstable();
            g.incoming[v].sort_unstable();
        }
        Ok(g)
    }

    /// Marks `core` as the bidirected core and checks the structural rules:
    /// arcs inside the core are paired, nodes outside it have no out-arcs.
    pub fn with_bidirected_core(mut self, core: BTreeSet<NodeId>) -> Result<Self, GraphError> {
        for &v in &core {
            if v >= self.capacity {
                return Err(GraphError::UnknownNode(v));
            }
        }
        for v in self.node_ids() {
            if core.contains(&v) {
                for &w in &self.out[v] {
                    if core.contains(&w) && !self.out[w].contains(&v) {
                        return Err(GraphError::UnpairedCoreArc(v, w));
                    }
                }
            } else if !self.out[v].is_empty() {
                return Err(GraphError::SinkWithOutArc(v));
            }
        }
        self.bidirected_core = Some(core);
        Ok(self)
    }

    pub fn bidirected_core(&self) -> Option<&BTreeSet<NodeId>> {
        self.bidirected_core.as_ref()
    }

    /// Id space size; not all ids below it need be present.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v < self.capacity && self.present[v]
    }

    pub fn node_count(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    /// Present node ids in ascending order.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.capacity).filter(|&v| self.present[v])
    }

    pub fn cost(&self, v: NodeId) -> f64 {
        self.cost[v]
    }

    pub fn set_cost(&mut self, v: NodeId, c: f64) {
        self.cost[v] = c;
    }

    pub fn out_neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.out[v].iter().copied().filter(|&w| self.present[w])
    }

    pub fn in_neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.incoming[v].iter().copied().filter(|&w| self.present[w])
    }

    pub fn has_arc(&self, u: NodeId, v: NodeId) -> bool {
        self.contains(u) && self.contains(v) && self.out[u].binary_search(&v).is_ok()
    }

    /// All arcs with both endpoints present, in (tail, head) ascending order.
    pub fn arcs(&self) -> Vec<Arc> {
        let mut arcs = Vec::new();
        for u in self.node_ids() {
            for w in self.out_neighbors(u) {
                arcs.push((u, w));
            }
        }
        arcs
    }

    pub fn arc_count(&self) -> usize {
        self.node_ids().map(|u| self.out_neighbors(u).count()).sum()
    }

    pub fn total_cost(&self) -> f64 {
        self.node_ids().map(|v| self.cost[v]).sum()
    }

    /// True when every present node cost is integral (enables exact arithmetic).
    pub fn integral_costs(&self) -> bool {
        self.node_ids().all(|v| self.cost[v].fract() == 0.0)
    }

    /// Restriction to `keep`; arcs survive when both endpoints survive.
    pub fn induced_subgraph(&self, keep: &BTreeSet<NodeId>) -> Result<Self, GraphError> {
        for &v in keep {
            if !self.contains(v) {
                return Err(GraphError::AbsentNode(v));
            }
        }
        let mut g = self.clone();
        for v in 0..self.capacity {
            g.present[v] = keep.contains(&v);
        }
        if let Some(core) = &self.bidirected_core {
            g.bidirected_core = Some(core.iter().copied().filter(|v| keep.contains(v)).collect());
        }
        Ok(g)
    }
}

/// Single-source node-weighted shortest paths.
#[derive(Debug, Clone)]
pub struct DistanceMap {
    pub source: NodeId,
    pub mode: CostMode,
    dist: Vec<Option<f64>>,
    parent: Vec<Option<NodeId>>,
    source_cost: f64,
    /// Node cost of the target, subtracted at read-out under ExcludeEndpoints.
    target_cost: Vec<f64>,
}

impl DistanceMap {
    /// Distance to `v` under the map's convention, `None` when unreachable.
    pub fn dist(&self, v: NodeId) -> Option<f64> {
        let d = self.dist[v]?;
        Some(match self.mode {
            CostMode::IncludeBoth => d,
            CostMode::ExcludeEndpoints => {
                if v == self.source {
                    0.0
                } else {
                    d - self.source_cost - self.target_cost[v]
                }
            }
        })
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    /// Path from the source to `v` (inclusive), `None` when unreachable.
    pub fn path_to(&self, v: NodeId) -> Option<Vec<NodeId>> {
        self.dist[v]?;
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

/// Dijkstra over node costs. A node's cost is charged when it is settled; the
/// source is charged up front and the target's charge is dropped at read-out
/// under `ExcludeEndpoints`. Equal-cost ties keep the smaller parent id.
pub fn shortest_paths(
    g: &NodeWeightedDigraph,
    source: NodeId,
    mode: CostMode,
) -> Result<DistanceMap, GraphError> {
    if !g.contains(source) {
        return Err(GraphError::AbsentNode(source));
    }
    let cap = g.capacity();
    let mut dist: Vec<Option<f64>> = vec![None; cap];
    let mut parent: Vec<Option<NodeId>> = vec![None; cap];
    let mut settled = vec![false; cap];

    // Internally always accumulate with both endpoints charged; the two
    // conventions differ by a per-target offset, so one run serves both.
    let mut heap: BinaryHeap<Reverse<(OrderedF64, NodeId)>> = BinaryHeap::new();
    dist[source] = Some(g.cost(source));
    heap.push(Reverse((OrderedF64(g.cost(source)), source)));

    while let Some(Reverse((OrderedF64(d), u))) = heap.pop() {
        if settled[u] || dist[u] != Some(d) {
            continue;
        }
        settled[u] = true;
        for v in g.out_neighbors(u) {
            if settled[v] {
                continue;
            }
            let nd = d + g.cost(v);
            match dist[v] {
                Some(old) if nd > old => {}
                Some(old) if nd == old => {
                    // Deterministic parent: keep the smaller id.
                    if parent[v].map_or(true, |p| u < p) {
                        parent[v] = Some(u);
                    }
                }
                _ => {
                    dist[v] = Some(nd);
                    parent[v] = Some(u);
                    heap.push(Reverse((OrderedF64(nd), v)));
                }
            }
        }
    }

    Ok(DistanceMap {
        source,
        mode,
        dist,
        parent,
        source_cost: g.cost(source),
        target_cost: g.cost.clone(),
    })
}

/// Removes every node whose distance from `root` (both endpoints charged)
/// exceeds `budget`. Fails when the root itself cannot be afforded.
pub fn b_proper_prune(
    g: &NodeWeightedDigraph,
    root: NodeId,
    budget: f64,
) -> Result<NodeWeightedDigraph, GraphError> {
    if !g.contains(root) {
        return Err(GraphError::AbsentNode(root));
    }
    if g.cost(root) > budget {
        return Err(GraphError::RootOverBudget {
            root_cost: g.cost(root),
            budget,
        });
    }
    let dm = shortest_paths(g, root, CostMode::IncludeBoth)?;
    let keep: BTreeSet<NodeId> = g
        .node_ids()
        .filter(|&v| dm.dist(v).is_some_and(|d| d <= budget))
        .collect();
    g.induced_subgraph(&keep)
}

/// Rooted out-tree: exactly one directed path from the root to every node.
#[derive(Debug, Clone, PartialEq)]
pub struct OutTree {
    pub root: NodeId,
    pub nodes: BTreeSet<NodeId>,
    pub arcs: BTreeSet<Arc>,
    pub total_cost: f64,
}

impl OutTree {
    pub fn singleton(root: NodeId, cost: f64) -> Self {
        OutTree {
            root,
            nodes: BTreeSet::from([root]),
            arcs: BTreeSet::new(),
            total_cost: cost,
        }
    }

    /// Children of `v` under the tree's arcs.
    pub fn children(&self, v: NodeId) -> Vec<NodeId> {
        self.arcs
            .iter()
            .filter(|&&(u, _)| u == v)
            .map(|&(_, w)| w)
            .collect()
    }

    /// Cost recomputed from the graph over the node set, ids ascending.
    pub fn recompute_cost(&self, g: &NodeWeightedDigraph) -> f64 {
        self.nodes.iter().map(|&v| g.cost(v)).sum()
    }
}

/// Shortest-path out-tree from `root` covering all of `targets`, with
/// branches that serve no target pruned away.
pub fn extract_out_tree(
    g: &NodeWeightedDigraph,
    root: NodeId,
    targets: &BTreeSet<NodeId>,
) -> Result<OutTree, GraphError> {
    if !g.contains(root) {
        return Err(GraphError::AbsentNode(root));
    }
    let dm = shortest_paths(g, root, CostMode::IncludeBoth)?;
    let mut nodes = BTreeSet::from([root]);
    let mut arcs = BTreeSet::new();
    for &t in targets {
        if !g.contains(t) || dm.dist(t).is_none() {
            return Err(GraphError::UnreachableTarget(t));
        }
        let mut cur = t;
        while !nodes.contains(&cur) {
            let p = dm.parent(cur).expect("non-root reachable node has a parent");
            nodes.insert(cur);
            arcs.insert((p, cur));
            cur = p;
        }
    }
    let total_cost = nodes.iter().map(|&v| g.cost(v)).sum();
    Ok(OutTree {
        root,
        nodes,
        arcs,
        total_cost,
    })
}

/// One violation found by [`validate_out_tree`].
#[derive(Debug, Clone, PartialEq)]
pub enum TreeViolation {
    RootMissing(NodeId),
    NodeAbsent(NodeId),
    ArcAbsent(Arc),
    ArcEndpointOutsideTree(Arc),
    MultipleParents(NodeId),
    RootHasParent(NodeId),
    ArcCountMismatch { arcs: usize, nodes: usize },
    Unreachable(NodeId),
    CostMismatch { stored: f64, recomputed: f64 },
}

/// Checks arc membership, rootedness, the single-parent property, and that
/// the stored cost matches an ascending-id recomputation bit for bit.
pub fn validate_out_tree(
    t: &OutTree,
    g: &NodeWeightedDigraph,
    root: NodeId,
) -> Vec<TreeViolation> {
    let mut violations = Vec::new();
    if t.root != root || !t.nodes.contains(&root) {
        violations.push(TreeViolation::RootMissing(root));
    }
    for &v in &t.nodes {
        if !g.contains(v) {
            violations.push(TreeViolation::NodeAbsent(v));
        }
    }
    let mut parent_count = vec![0usize; g.capacity().max(t.nodes.last().map_or(0, |&m| m + 1))];
    for &(u, v) in &t.arcs {
        if !g.has_arc(u, v) {
            violations.push(TreeViolation::ArcAbsent((u, v)));
        }
        if !t.nodes.contains(&u) || !t.nodes.contains(&v) {
            violations.push(TreeViolation::ArcEndpointOutsideTree((u, v)));
            continue;
        }
        parent_count[v] += 1;
        if parent_count[v] > 1 {
            violations.push(TreeViolation::MultipleParents(v));
        }
        if v == t.root {
            violations.push(TreeViolation::RootHasParent(v));
        }
    }
    if t.arcs.len() + 1 != t.nodes.len() {
        violations.push(TreeViolation::ArcCountMismatch {
            arcs: t.arcs.len(),
            nodes: t.nodes.len(),
        });
    }
    // Reachability along tree arcs only.
    let mut reached = BTreeSet::from([t.root]);
    let mut frontier = vec![t.root];
    while let Some(u) = frontier.pop() {
        for &(a, b) in &t.arcs {
            if a == u && t.nodes.contains(&b) && reached.insert(b) {
                frontier.push(b);
            }
        }
    }
    for &v in &t.nodes {
        if !reached.contains(&v) {
            violations.push(TreeViolation::Unreachable(v));
        }
    }
    let recomputed: f64 = t
        .nodes
        .iter()
        .filter(|&&v| g.contains(v))
        .map(|&v| g.cost(v))
        .sum();
    if recomputed != t.total_cost {
        violations.push(TreeViolation::CostMismatch {
            stored: t.total_cost,
            recomputed,
        });
    }
    violations
}

/// Total-ordered f64 wrapper for heap keys; costs are never NaN by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct OrderedF64(pub f64);

impl Eq for OrderedF64 {}

impl PartialOrd for OrderedF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.partial_cmp(&other.0).expect("costs are not NaN")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_graph(costs: &[f64]) -> NodeWeightedDigraph {
        let arcs: Vec<Arc> = (0..costs.len() - 1).map(|i| (i, i + 1)).collect();
        NodeWeightedDigraph::new(costs.to_vec(), &arcs).unwrap()
    }

    #[test]
    fn line_distance_include_both() {
        let g = line_graph(&[2.0, 3.0, 5.0]);
        let dm = shortest_paths(&g, 0, CostMode::IncludeBoth).unwrap();
        assert_eq!(dm.dist(2), Some(10.0));
        assert_eq!(dm.dist(0), Some(2.0));
    }

    #[test]
    fn line_distance_exclude_endpoints() {
        let g = line_graph(&[2.0, 3.0, 5.0]);
        let dm = shortest_paths(&g, 0, CostMode::ExcludeEndpoints).unwrap();
        assert_eq!(dm.dist(2), Some(3.0));
        assert_eq!(dm.dist(0), Some(0.0));
    }

    #[test]
    fn diamond_exclude_endpoints_picks_cheap_interior() {
        // 0 -> 1(1) -> 3 and 0 -> 2(9) -> 3
        let g =
            NodeWeightedDigraph::new(vec![0.0, 1.0, 9.0, 0.0], &[(0, 1), (0, 2), (1, 3), (2, 3)])
                .unwrap();
        let dm = shortest_paths(&g, 0, CostMode::ExcludeEndpoints).unwrap();
        assert_eq!(dm.dist(3), Some(1.0));
        assert_eq!(dm.path_to(3), Some(vec![0, 1, 3]));
    }

    #[test]
    fn unknown_source_rejected() {
        let g = line_graph(&[1.0, 1.0]);
        assert!(matches!(
            shortest_paths(&g, 9, CostMode::IncludeBoth),
            Err(GraphError::AbsentNode(9))
        ));
    }

    #[test]
    fn prune_drops_far_nodes() {
        // 0(0) -> 1(5) -> 2(7), budget 5
        let g = line_graph(&[0.0, 5.0, 7.0]);
        let pruned = b_proper_prune(&g, 0, 5.0).unwrap();
        let kept: Vec<NodeId> = pruned.node_ids().collect();
        assert_eq!(kept, vec![0, 1]);
    }

    #[test]
    fn prune_with_infinite_budget_is_identity() {
        let g = line_graph(&[0.0, 5.0, 7.0]);
        let pruned = b_proper_prune(&g, 0, f64::INFINITY).unwrap();
        assert_eq!(pruned.node_count(), 3);
    }

    #[test]
    fn prune_per_node_distance() {
        // 0(0) -> 1(3), 0 -> 2(6), budget 4 keeps {0, 1}
        let g = NodeWeightedDigraph::new(vec![0.0, 3.0, 6.0], &[(0, 1), (0, 2)]).unwrap();
        let pruned = b_proper_prune(&g, 0, 4.0).unwrap();
        let kept: Vec<NodeId> = pruned.node_ids().collect();
        assert_eq!(kept, vec![0, 1]);
    }

    #[test]
    fn prune_root_over_budget_errors() {
        let g = line_graph(&[3.0, 1.0]);
        assert!(matches!(
            b_proper_prune(&g, 0, 2.0),
            Err(GraphError::RootOverBudget { .. })
        ));
    }

    #[test]
    fn prune_is_idempotent() {
        let g = NodeWeightedDigraph::new(
            vec![0.0, 3.0, 6.0, 2.0],
            &[(0, 1), (0, 2), (1, 3), (3, 2)],
        )
        .unwrap();
        let once = b_proper_prune(&g, 0, 5.0).unwrap();
        let twice = b_proper_prune(&once, 0, 5.0).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn induced_subgraph_filters_arcs() {
        let g = NodeWeightedDigraph::new(
            vec![1.0, 1.0, 1.0],
            &[(0, 1), (1, 0), (1, 2), (2, 0)],
        )
        .unwrap();
        let sub = g.induced_subgraph(&BTreeSet::from([0, 1])).unwrap();
        assert_eq!(sub.arcs(), vec![(0, 1), (1, 0)]);
        let empty = g.induced_subgraph(&BTreeSet::new()).unwrap();
        assert_eq!(empty.node_count(), 0);
        assert_eq!(empty.arcs(), vec![]);
        let full = g.induced_subgraph(&g.node_ids().collect()).unwrap();
        assert_eq!(full, g);
    }

    #[test]
    fn extract_tree_single_target_is_path() {
        let g = line_graph(&[1.0, 2.0, 4.0]);
        let t = extract_out_tree(&g, 0, &BTreeSet::from([2])).unwrap();
        assert_eq!(t.nodes, BTreeSet::from([0, 1, 2]));
        assert_eq!(t.total_cost, 7.0);
        assert!(validate_out_tree(&t, &g, 0).is_empty());
    }

    #[test]
    fn extract_tree_root_only() {
        let g = line_graph(&[3.0, 2.0]);
        let t = extract_out_tree(&g, 0, &BTreeSet::from([0])).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.total_cost, 3.0);
    }

    #[test]
    fn extract_tree_prunes_targetless_branch() {
        // Two branches from the root, targets only on one of them.
        let g = NodeWeightedDigraph::new(
            vec![0.0, 1.0, 1.0, 1.0, 1.0],
            &[(0, 1), (1, 2), (0, 3), (3, 4)],
        )
        .unwrap();
        let t = extract_out_tree(&g, 0, &BTreeSet::from([2])).unwrap();
        assert_eq!(t.nodes, BTreeSet::from([0, 1, 2]));
        assert!(!t.nodes.contains(&3));
        assert!(validate_out_tree(&t, &g, 0).is_empty());
    }

    #[test]
    fn extract_tree_unreachable_target_reports_id() {
        let g = NodeWeightedDigraph::new(vec![1.0, 1.0, 1.0], &[(0, 1), (2, 1)]).unwrap();
        assert_eq!(
            extract_out_tree(&g, 0, &BTreeSet::from([2])),
            Err(GraphError::UnreachableTarget(2))
        );
    }

    #[test]
    fn validate_catches_double_parent_and_cost_drift() {
        let g = NodeWeightedDigraph::new(
            vec![1.0, 1.0, 1.0],
            &[(0, 1), (0, 2), (2, 1)],
        )
        .unwrap();
        let mut t = extract_out_tree(&g, 0, &BTreeSet::from([1, 2])).unwrap();
        t.arcs.insert((2, 1));
        let report = validate_out_tree(&t, &g, 0);
        assert!(report.contains(&TreeViolation::MultipleParents(1)));
        let mut t2 = extract_out_tree(&g, 0, &BTreeSet::from([1])).unwrap();
        t2.total_cost += 1.0;
        let report2 = validate_out_tree(&t2, &g, 0);
        assert!(matches!(report2[0], TreeViolation::CostMismatch { .. }));
    }

    #[test]
    fn bidirected_core_rules_enforced() {
        let ok = NodeWeightedDigraph::new(vec![1.0, 1.0, 0.0], &[(0, 1), (1, 0), (0, 2)])
            .unwrap()
            .with_bidirected_core(BTreeSet::from([0, 1]));
        assert!(ok.is_ok());
        let unpaired = NodeWeightedDigraph::new(vec![1.0, 1.0], &[(0, 1)])
            .unwrap()
            .with_bidirected_core(BTreeSet::from([0, 1]));
        assert_eq!(unpaired.unwrap_err(), GraphError::UnpairedCoreArc(0, 1));
        let sink_out = NodeWeightedDigraph::new(vec![1.0, 1.0], &[(1, 0)])
            .unwrap()
            .with_bidirected_core(BTreeSet::from([0]));
        assert_eq!(sink_out.unwrap_err(), GraphError::SinkWithOutArc(1));
    }

    /// Brute-force distance by enumerating all simple paths.
    fn brute_force_dist(
        g: &NodeWeightedDigraph,
        source: NodeId,
        target: NodeId,
        mode: CostMode,
    ) -> Option<f64> {
        fn dfs(
            g: &NodeWeightedDigraph,
            cur: NodeId,
            target: NodeId,
            visited: &mut Vec<NodeId>,
            best: &mut Option<f64>,
            mode: CostMode,
        ) {
            if cur == target {
                let cost: f64 = match mode {
                    CostMode::IncludeBoth => visited.iter().map(|&v| g.cost(v)).sum(),
                    CostMode::ExcludeEndpoints => visited[1..visited.len() - 1]
                        .iter()
                        .map(|&v| g.cost(v))
                        .sum(),
                };
                if best.map_or(true, |b| cost < b) {
                    *best = Some(cost);
                }
                return;
            }
            let next: Vec<NodeId> = g.out_neighbors(cur).collect();
            for w in next {
                if !visited.contains(&w) {
                    visited.push(w);
                    dfs(g, w, target, visited, best, mode);
                    visited.pop();
                }
            }
        }
        if source == target {
            return Some(match mode {
                CostMode::IncludeBoth => g.cost(source),
                CostMode::ExcludeEndpoints => 0.0,
            });
        }
        let mut best = None;
        let mut visited = vec![source];
        dfs(g, source, target, &mut visited, &mut best, mode);
        best
    }

    #[test]
    fn dijkstra_matches_path_enumeration_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _case in 0..60 {
            let n = rng.gen_range(2..=8);
            let costs: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
            let mut arcs = Vec::new();
            for u in 0..n {
                for v in 0..n {
                    if u != v && rng.gen_bool(0.35) {
                        arcs.push((u, v));
                    }
                }
            }
            let g = NodeWeightedDigraph::new(costs, &arcs).unwrap();
            for mode in [CostMode::IncludeBoth, CostMode::ExcludeEndpoints] {
                let dm = shortest_paths(&g, 0, mode).unwrap();
                for v in 0..n {
                    assert_eq!(
                        dm.dist(v),
                        brute_force_dist(&g, 0, v, mode),
                        "mode {mode:?} node {v}"
                    );
                }
            }
        }
    }

    #[test]
    fn extract_out_tree_always_validates_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _case in 0..60 {
            let n = rng.gen_range(2..=10);
            let costs: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64).collect();
            let mut arcs = Vec::new();
            for v in 1..n {
                arcs.push((rng.gen_range(0..v), v));
            }
            for u in 0..n {
                for v in 0..n {
                    if u != v && rng.gen_bool(0.2) && !arcs.contains(&(u, v)) {
                        arcs.push((u, v));
                    }
                }
            }
            let g = NodeWeightedDigraph::new(costs, &arcs).unwrap();
            let k = rng.gen_range(1..=n);
            let targets: BTreeSet<NodeId> = (0..k).map(|_| rng.gen_range(0..n)).collect();
            let t = extract_out_tree(&g, 0, &targets).unwrap();
            assert!(validate_out_tree(&t, &g, 0).is_empty());
            assert!(targets.iter().all(|t_| t.nodes.contains(t_)));
        }
    }
}
