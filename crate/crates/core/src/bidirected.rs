//! Steiner trees on bidirected graphs with sink terminals.
//!
//! Spider-merge solver: keep a collection of components (initially one per
//! terminal plus one for the root), and repeatedly pick the center node and
//! component subcollection minimizing (center cost + connection distances) /
//! (components joined), realizing the connections with shortest paths whose
//! endpoint costs are excluded. Sorting components by distance means only
//! prefix subcollections need to be scanned. The optional certificate solves
//! the flow relaxation once and checks the per-iteration min-ratio bound
//! against it.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{
    extract_out_tree, shortest_paths, Arc, CostMode, DistanceMap, GraphError, NodeId,
    NodeWeightedDigraph, OutTree,
};
use crate::dst::SteinerInstance;
use crate::lp::{build_dst_lp, solve_lp, LpError, ROW_TOL};

/// Slack on float ratio comparisons and on the certificate bound.
pub const RATIO_TOL: f64 = 1e-9;
pub const CERTIFICATE_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum BidirectedError {
    #[error("graph has no bidirected core")]
    MissingCore,
    #[error("root {0} is not in the bidirected core")]
    RootOutsideCore(NodeId),
    #[error("terminal {0} lies inside the bidirected core")]
    TerminalInCore(NodeId),
    #[error("terminal set is empty")]
    NoTerminals,
    #[error("terminal {0} is unreachable from the root")]
    UnreachableTerminal(NodeId),
    #[error("node {0} is a terminal and cannot act as a spider center")]
    CenterIsTerminal(NodeId),
    #[error("no center can reach two components; the instance is disconnected")]
    Disconnected,
    #[error(
        "iteration {iteration}: realized ratio {ratio} exceeds certificate bound {bound}"
    )]
    CertificateViolation {
        iteration: usize,
        ratio: f64,
        bound: f64,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// One connected component tracked by the solver.
#[derive(Debug, Clone)]
pub struct Component {
    pub nodes: BTreeSet<NodeId>,
    /// Non-terminal part; distances to merged components target these.
    pub core_nodes: BTreeSet<NodeId>,
    /// Set when the component is still an untouched single terminal.
    pub singleton_terminal: Option<NodeId>,
}

impl Component {
    fn min_id(&self) -> NodeId {
        *self.nodes.first().expect("components are nonempty")
    }
}

/// The evolving component collection plus the nodes and arcs accumulated by
/// merges; the final tree is extracted from exactly this pool.
#[derive(Debug, Clone)]
pub struct ComponentSet {
    pub components: Vec<Component>,
    pub pool_nodes: BTreeSet<NodeId>,
    pub pool_arcs: BTreeSet<Arc>,
}

impl ComponentSet {
    pub fn initial(root: NodeId, terminals: &BTreeSet<NodeId>) -> Self {
        let mut components: Vec<Component> = terminals
            .iter()
            .map(|&t| Component {
                nodes: BTreeSet::from([t]),
                core_nodes: BTreeSet::new(),
                singleton_terminal: Some(t),
            })
            .collect();
        components.push(Component {
            nodes: BTreeSet::from([root]),
            core_nodes: BTreeSet::from([root]),
            singleton_terminal: None,
        });
        let mut pool_nodes: BTreeSet<NodeId> = terminals.clone();
        pool_nodes.insert(root);
        ComponentSet {
            components,
            pool_nodes,
            pool_arcs: BTreeSet::new(),
        }
    }
}

/// Distance from a core node to a component: to the terminal itself for a
/// singleton, to the closest core member otherwise, endpoint costs excluded
/// either way. Infinite when unreachable.
pub fn component_distance(
    v: NodeId,
    component: &Component,
    g: &NodeWeightedDigraph,
) -> Result<f64, BidirectedError> {
    let core = g.bidirected_core().ok_or(BidirectedError::MissingCore)?;
    if !core.contains(&v) {
        return Err(BidirectedError::CenterIsTerminal(v));
    }
    let dm = shortest_paths(g, v, CostMode::ExcludeEndpoints)?;
    Ok(distance_from_map(&dm, component).map_or(f64::INFINITY, |(d, _)| d))
}

/// Distance plus the realized target under a precomputed map from the center.
fn distance_from_map(dm: &DistanceMap, component: &Component) -> Option<(f64, NodeId)> {
    match component.singleton_terminal {
        Some(t) => dm.dist(t).map(|d| (d, t)),
        None => {
            let mut best: Option<(f64, NodeId)> = None;
            for &u in &component.core_nodes {
                if let Some(d) = dm.dist(u) {
                    if best.map_or(true, |(bd, bu)| d < bd || (d == bd && u < bu)) {
                        best = Some((d, u));
                    }
                }
            }
            best
        }
    }
}

/// Chosen center and component subcollection with the realized paths.
#[derive(Debug, Clone)]
pub struct Spider {
    pub center: NodeId,
    pub member_indices: Vec<usize>,
    /// One center-to-component path per member, center first.
    pub paths: Vec<Vec<NodeId>>,
    pub ratio_num: f64,
    pub ratio_den: usize,
}

impl Spider {
    pub fn ratio(&self) -> f64 {
        self.ratio_num / self.ratio_den as f64
    }
}

/// Compares ratios num_a/den_a and num_b/den_b; exact cross multiplication on
/// integral instances, slack comparison otherwise.
fn ratio_cmp(num_a: f64, den_a: usize, num_b: f64, den_b: usize, integral: bool) -> Ordering {
    if integral {
        let a = num_a.round() as i128 * den_b as i128;
        let b = num_b.round() as i128 * den_a as i128;
        a.cmp(&b)
    } else {
        let va = num_a / den_a as f64;
        let vb = num_b / den_b as f64;
        if va < vb - RATIO_TOL {
            Ordering::Less
        } else if va > vb + RATIO_TOL {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    }
}

/// Scans every core center and every prefix of components sorted by distance,
/// returning the minimum-ratio spider. Ties prefer fewer members, then the
/// smaller center id.
pub fn min_ratio_spider(
    cs: &ComponentSet,
    g: &NodeWeightedDigraph,
) -> Result<Spider, BidirectedError> {
    let core = g.bidirected_core().ok_or(BidirectedError::MissingCore)?;
    let integral = g.integral_costs();
    let mut best: Option<Spider> = None;
    for &v in core {
        if !g.contains(v) {
            continue;
        }
        let dm = shortest_paths(g, v, CostMode::ExcludeEndpoints)?;
        let mut entries: Vec<(f64, NodeId, usize, NodeId)> = Vec::new(); // (dist, comp min id, index, target)
        for (idx, comp) in cs.components.iter().enumerate() {
            if let Some((d, target)) = distance_from_map(&dm, comp) {
                entries.push((d, comp.min_id(), idx, target));
            }
        }
        entries.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("distances are finite")
                .then(a.1.cmp(&b.1))
        });
        let mut num = g.cost(v);
        for j in 1..=entries.len() {
            num += entries[j - 1].0;
            if j < 2 {
                continue;
            }
            let candidate_better = match &best {
                None => true,
                Some(b) => match ratio_cmp(num, j, b.ratio_num, b.ratio_den, integral) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => (j, v) < (b.ratio_den, b.center),
                },
            };
            if candidate_better {
                let member_indices: Vec<usize> = entries[..j].iter().map(|e| e.2).collect();
                let paths: Vec<Vec<NodeId>> = entries[..j]
                    .iter()
                    .map(|e| dm.path_to(e.3).expect("entry targets are reachable"))
                    .collect();
                best = Some(Spider {
                    center: v,
                    member_indices,
                    paths,
                    ratio_num: num,
                    ratio_den: j,
                });
            }
        }
    }
    best.ok_or(BidirectedError::Disconnected)
}

/// Fuses the spider's components and paths into one component; path arcs are
/// added in both directions between core nodes and one-way into terminals.
/// Components are weakly connected components of the accumulated subgraph, so
/// a bystander component touched by one of the connection paths is absorbed
/// as well.
pub fn merge_components(
    cs: &ComponentSet,
    spider: &Spider,
    g: &NodeWeightedDigraph,
) -> ComponentSet {
    let core = g.bidirected_core().expect("spider came from a cored graph");
    let member_set: BTreeSet<usize> = spider.member_indices.iter().copied().collect();
    let mut merged_nodes: BTreeSet<NodeId> = BTreeSet::from([spider.center]);
    for &idx in &member_set {
        merged_nodes.extend(cs.components[idx].nodes.iter().copied());
    }
    let mut pool_arcs = cs.pool_arcs.clone();
    for path in &spider.paths {
        merged_nodes.extend(path.iter().copied());
        for pair in path.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if core.contains(&b) {
                pool_arcs.insert((a, b));
                pool_arcs.insert((b, a));
            } else {
                pool_arcs.insert((a, b));
            }
        }
    }
    let mut components: Vec<Component> = cs
        .components
        .iter()
        .enumerate()
        .filter(|(idx, _)| !member_set.contains(idx))
        .map(|(_, c)| c.clone())
        .collect();
    // Absorb to a fixpoint: any remaining component sharing a node with the
    // grown one is weakly connected to it now.
    loop {
        let mut absorbed = false;
        components.retain(|c| {
            if c.nodes.is_disjoint(&merged_nodes) {
                true
            } else {
                merged_nodes.extend(c.nodes.iter().copied());
                absorbed = true;
                false
            }
        });
        if !absorbed {
            break;
        }
    }
    let mut pool_nodes = cs.pool_nodes.clone();
    pool_nodes.extend(merged_nodes.iter().copied());
    let merged = Component {
        core_nodes: merged_nodes
            .iter()
            .copied()
            .filter(|n| core.contains(n))
            .collect(),
        nodes: merged_nodes,
        singleton_terminal: None,
    };
    components.push(merged);
    ComponentSet {
        components,
        pool_nodes,
        pool_arcs,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpiderIteration {
    pub components_before: usize,
    pub center: NodeId,
    pub merged_components: usize,
    pub ratio: f64,
    /// `lp_opt / components_before` when the run is certified.
    pub certificate_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BidirectedReport {
    pub iterations: Vec<SpiderIteration>,
    pub lp_opt: Option<f64>,
    pub lp_iterations: Option<usize>,
    pub tree_cost: f64,
}

#[derive(Debug, Clone)]
pub struct BidirectedOutcome {
    pub tree: OutTree,
    pub report: BidirectedReport,
}

/// Runs the spider-merge loop to a single component and extracts the rooted
/// out-tree over the accumulated pool, pruning terminal-free branches.
pub fn solve_dst_bidirected(
    inst: &SteinerInstance,
    certify: bool,
) -> Result<BidirectedOutcome, BidirectedError> {
    let g = &inst.graph;
    let core = g.bidirected_core().ok_or(BidirectedError::MissingCore)?;
    if !core.contains(&inst.root) {
        return Err(BidirectedError::RootOutsideCore(inst.root));
    }
    if inst.terminals.is_empty() {
        return Err(BidirectedError::NoTerminals);
    }
    for &t in &inst.terminals {
        if core.contains(&t) {
            return Err(BidirectedError::TerminalInCore(t));
        }
    }
    let dm = shortest_paths(g, inst.root, CostMode::IncludeBoth)?;
    for &t in &inst.terminals {
        if dm.dist(t).is_none() {
            return Err(BidirectedError::UnreachableTerminal(t));
        }
    }

    let (lp_opt, lp_iterations) = if certify {
        let lp = build_dst_lp(inst)?;
        let sol = solve_lp(&lp, ROW_TOL)?;
        (Some(sol.objective), Some(sol.iterations))
    } else {
        (None, None)
    };

    let mut cs = ComponentSet::initial(inst.root, &inst.terminals);
    let mut iterations = Vec::new();
    while cs.components.len() >= 2 {
        let spider = min_ratio_spider(&cs, g)?;
        let components_before = cs.components.len();
        let ratio = spider.ratio();
        let certificate_bound = lp_opt.map(|opt| opt / components_before as f64);
        if let Some(bound) = certificate_bound {
            if ratio > bound + CERTIFICATE_TOL {
                return Err(BidirectedError::CertificateViolation {
                    iteration: iterations.len() + 1,
                    ratio,
                    bound,
                });
            }
        }
        iterations.push(SpiderIteration {
            components_before,
            center: spider.center,
            merged_components: spider.member_indices.len(),
            ratio,
            certificate_bound,
        });
        cs = merge_components(&cs, &spider, g);
    }

    let full_costs: Vec<f64> = (0..g.capacity()).map(|v| g.cost(v)).collect();
    let pool_arcs: Vec<Arc> = cs.pool_arcs.iter().copied().collect();
    let pool_graph = NodeWeightedDigraph::new(full_costs, &pool_arcs)
        .expect("pool arcs come from the instance graph")
        .induced_subgraph(&cs.pool_nodes)?;
    let mut targets = inst.terminals.clone();
    targets.insert(inst.root);
    let tree = extract_out_tree(&pool_graph, inst.root, &targets)?;
    let report = BidirectedReport {
        iterations,
        lp_opt,
        lp_iterations,
        tree_cost: tree.total_cost,
    };
    Ok(BidirectedOutcome { tree, report })
}

/// Structural check used by tests: the non-terminal part of every merged
/// component must be strongly connected within the accumulated arc pool.
pub fn merged_cores_strongly_connected(cs: &ComponentSet, g: &NodeWeightedDigraph) -> bool {
    let Some(core) = g.bidirected_core() else {
        return false;
    };
    for comp in &cs.components {
        if comp.singleton_terminal.is_some() || comp.core_nodes.len() <= 1 {
            continue;
        }
        let start = *comp.core_nodes.first().unwrap();
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &(a, b) in &cs.pool_arcs {
                if a == u && core.contains(&b) && comp.core_nodes.contains(&b) && seen.insert(b) {
                    stack.push(b);
                }
            }
        }
        if !comp.core_nodes.iter().all(|v| seen.contains(v)) {
            return false;
        }
    }
    true
}
