//! Flow-based linear relaxations and the embedded solver.
//!
//! Both relaxations are built in a compact per-commodity arc-flow form instead
//! of the exponential path form: one commodity per demand node, conservation
//! at intermediate nodes, node capacity consumed by commodity inflow. Flow
//! decomposition makes the two forms agree at the optimum, which is checked
//! against an explicit path-enumeration oracle on small instances.

pub mod simplex;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::coverage::AugmentedGraph;
use crate::dst::SteinerInstance;
use crate::graph::{shortest_paths, Arc, CostMode, NodeId, NodeWeightedDigraph, OutTree};
use simplex::{RowKind, Sense, SimplexProblem, SimplexRow, SimplexStatus};

/// Residual tolerance on constraint rows.
pub const ROW_TOL: f64 = 1e-7;
/// Tolerance used when comparing objectives.
pub const OBJ_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("terminal {0} is unreachable from the root")]
    UnreachableTerminal(NodeId),
    #[error("LP infeasible")]
    Infeasible,
    #[error("LP unbounded")]
    Unbounded,
    #[error("iteration limit reached after {0} pivots")]
    IterationLimit(usize),
    #[error("tree is not a feasible solution: {0}")]
    InfeasibleTree(String),
    #[error("terminal {terminal} carries flow {value}, below the required 1/{delta}")]
    TerminalBelowThreshold { terminal: NodeId, value: f64, delta: f64 },
    #[error("commodity {commodity} pushes {value} through node {node}, above its unit bound")]
    FlowAboveUnit { commodity: NodeId, node: NodeId, value: f64 },
}

#[derive(Debug, Clone)]
pub struct LpVariable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub name: String,
    pub kind: RowKind,
    pub rhs: f64,
    pub terms: Vec<(usize, f64)>,
}

/// A built relaxation plus the catalog mapping variables back to the graph.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub sense: Sense,
    pub vars: Vec<LpVariable>,
    pub rows: Vec<LpRow>,
    pub capacity_var: BTreeMap<NodeId, usize>,
    pub flow_var: BTreeMap<(NodeId, Arc), usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// A fractional solution: node capacities plus per-commodity arc flows.
#[derive(Debug, Clone)]
pub struct FracSolution {
    pub capacity: BTreeMap<NodeId, f64>,
    pub flow: BTreeMap<(NodeId, Arc), f64>,
    pub objective: f64,
    pub status: LpStatus,
    pub iterations: usize,
}

impl FracSolution {
    pub fn capacity_of(&self, v: NodeId) -> f64 {
        self.capacity.get(&v).copied().unwrap_or(0.0)
    }
}

/// Per-node reachability closure: `reaches[u]` holds every node u can reach.
fn reach_closure(g: &NodeWeightedDigraph) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let mut reaches: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for u in g.node_ids() {
        let mut seen = BTreeSet::from([u]);
        let mut stack = vec![u];
        while let Some(x) = stack.pop() {
            for w in g.out_neighbors(x) {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        reaches.insert(u, seen);
    }
    reaches
}

struct LpBuilder {
    vars: Vec<LpVariable>,
    rows: Vec<LpRow>,
    capacity_var: BTreeMap<NodeId, usize>,
    flow_var: BTreeMap<(NodeId, Arc), usize>,
}

impl LpBuilder {
    fn new() -> Self {
        LpBuilder {
            vars: Vec::new(),
            rows: Vec::new(),
            capacity_var: BTreeMap::new(),
            flow_var: BTreeMap::new(),
        }
    }

    fn capacity(&mut self, v: NodeId, lower: f64, upper: f64, objective: f64) -> usize {
        let idx = self.vars.len();
        self.vars.push(LpVariable {
            name: format!("y_{v}"),
            lower,
            upper,
            objective,
        });
        self.capacity_var.insert(v, idx);
        idx
    }

    /// Adds commodity flow variables and the demand / conservation / capacity
    /// rows for one commodity over the useful-arc subnetwork.
    ///
    /// An arc is useful for a commodity when its head can still reach the
    /// demand node, never enters the root, and never leaves the demand node;
    /// this keeps the relaxation equal to the path form while dropping
    /// structurally dead columns.
    fn add_commodity(
        &mut self,
        g: &NodeWeightedDigraph,
        reaches: &BTreeMap<NodeId, BTreeSet<NodeId>>,
        root: NodeId,
        commodity: NodeId,
        demand: CommodityDemand,
        cap_at_own_sink: bool,
    ) {
        let mut in_arcs: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        let mut out_arcs: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        for u in g.node_ids() {
            if u == commodity {
                continue;
            }
            for w in g.out_neighbors(u) {
                if w == root || !reaches[&w].contains(&commodity) {
                    continue;
                }
                let idx = self.vars.len();
                self.vars.push(LpVariable {
                    name: format!("f{commodity}_{u}_{w}"),
                    lower: 0.0,
                    upper: 1.0,
                    objective: 0.0,
                });
                self.flow_var.insert((commodity, (u, w)), idx);
                out_arcs.entry(u).or_default().push(idx);
                in_arcs.entry(w).or_default().push(idx);
            }
        }

        // Demand: inflow at the commodity node.
        let mut demand_terms: Vec<(usize, f64)> = in_arcs
            .get(&commodity)
            .map(|v| v.iter().map(|&i| (i, 1.0)).collect())
            .unwrap_or_default();
        let rhs = match demand {
            CommodityDemand::EqualsCapacity => {
                demand_terms.push((self.capacity_var[&commodity], -1.0));
                0.0
            }
            CommodityDemand::Unit => 1.0,
        };
        self.rows.push(LpRow {
            name: format!("dem_{commodity}"),
            kind: RowKind::Eq,
            rhs,
            terms: demand_terms,
        });

        // Conservation and capacity at intermediate nodes.
        for z in g.node_ids() {
            if z == root || z == commodity {
                continue;
            }
            let inflow = in_arcs.get(&z);
            let outflow = out_arcs.get(&z);
            if inflow.is_none() && outflow.is_none() {
                continue;
            }
            let mut terms: Vec<(usize, f64)> = Vec::new();
            if let Some(fs) = inflow {
                terms.extend(fs.iter().map(|&i| (i, 1.0)));
            }
            if let Some(fs) = outflow {
                terms.extend(fs.iter().map(|&i| (i, -1.0)));
            }
            self.rows.push(LpRow {
                name: format!("con{commodity}_{z}"),
                kind: RowKind::Eq,
                rhs: 0.0,
                terms,
            });
            if let Some(fs) = inflow {
                let mut cap_terms: Vec<(usize, f64)> = fs.iter().map(|&i| (i, 1.0)).collect();
                cap_terms.push((self.capacity_var[&z], -1.0));
                self.rows.push(LpRow {
                    name: format!("cap{commodity}_{z}"),
                    kind: RowKind::Le,
                    rhs: 0.0,
                    terms: cap_terms,
                });
            }
        }

        if cap_at_own_sink {
            // Pin the sink's capacity from below via its own inflow, and the
            // root's via its outflow: both end up at 1 for unit demands.
            if let Some(fs) = in_arcs.get(&commodity) {
                let mut terms: Vec<(usize, f64)> = fs.iter().map(|&i| (i, 1.0)).collect();
                terms.push((self.capacity_var[&commodity], -1.0));
                self.rows.push(LpRow {
                    name: format!("cap{commodity}_{commodity}"),
                    kind: RowKind::Le,
                    rhs: 0.0,
                    terms,
                });
            }
            if let Some(fs) = out_arcs.get(&root) {
                let mut terms: Vec<(usize, f64)> = fs.iter().map(|&i| (i, 1.0)).collect();
                terms.push((self.capacity_var[&root], -1.0));
                self.rows.push(LpRow {
                    name: format!("cap{commodity}_{root}"),
                    kind: RowKind::Le,
                    rhs: 0.0,
                    terms,
                });
            }
        }
    }

    fn finish(self, sense: Sense) -> LpProblem {
        LpProblem {
            sense,
            vars: self.vars,
            rows: self.rows,
            capacity_var: self.capacity_var,
            flow_var: self.flow_var,
        }
    }
}

enum CommodityDemand {
    /// Delivered flow must equal the commodity node's own capacity variable.
    EqualsCapacity,
    /// Delivered flow must equal one.
    Unit,
}

/// Budgeted-coverage relaxation: maximize prize-weighted capacities subject to
/// the budget row and one flow system per non-root node. The root's capacity
/// is fixed to one and its cost still charges the budget row.
///
/// The relaxation is well-defined on any graph; the solver pipeline prunes to
/// the budget-proper subgraph before building it. Unreachable nodes simply
/// carry a zero-flow commodity pinning their capacity to zero.
pub fn build_dcbc_lp(aug: &AugmentedGraph) -> Result<LpProblem, LpError> {
    let g = &aug.graph;
    let root = aug.root;
    let reaches = reach_closure(g);
    let mut b = LpBuilder::new();
    for v in g.node_ids() {
        let (lo, hi) = if v == root { (1.0, 1.0) } else { (0.0, 1.0) };
        b.capacity(v, lo, hi, aug.prize(v));
    }
    let budget_terms: Vec<(usize, f64)> = g
        .node_ids()
        .filter(|&v| g.cost(v) != 0.0)
        .map(|v| (b.capacity_var[&v], g.cost(v)))
        .collect();
    b.rows.push(LpRow {
        name: "budget".to_string(),
        kind: RowKind::Le,
        rhs: aug.budget,
        terms: budget_terms,
    });
    for v in g.node_ids() {
        if v != root {
            b.add_commodity(g, &reaches, root, v, CommodityDemand::EqualsCapacity, false);
        }
    }
    Ok(b.finish(Sense::Maximize))
}

/// Steiner relaxation: minimize cost-weighted capacities with one unit-demand
/// commodity per terminal.
pub fn build_dst_lp(inst: &SteinerInstance) -> Result<LpProblem, LpError> {
    let g = &inst.graph;
    let root = inst.root;
    let dm = shortest_paths(g, root, CostMode::IncludeBoth).expect("root present");
    for &t in &inst.terminals {
        if !g.contains(t) || dm.dist(t).is_none() {
            return Err(LpError::UnreachableTerminal(t));
        }
    }
    let reaches = reach_closure(g);
    let mut b = LpBuilder::new();
    for v in g.node_ids() {
        b.capacity(v, 0.0, 1.0, g.cost(v));
    }
    for &t in &inst.terminals {
        if t != root {
            b.add_commodity(g, &reaches, root, t, CommodityDemand::Unit, true);
        }
    }
    Ok(b.finish(Sense::Minimize))
}

/// Solves a built problem with the embedded simplex.
pub fn solve_lp(p: &LpProblem, _tol: f64) -> Result<FracSolution, LpError> {
    let sp = SimplexProblem {
        sense: p.sense,
        objective: p.vars.iter().map(|v| v.objective).collect(),
        lower: p.vars.iter().map(|v| v.lower).collect(),
        upper: p.vars.iter().map(|v| v.upper).collect(),
        rows: p
            .rows
            .iter()
            .map(|r| SimplexRow {
                kind: r.kind,
                rhs: r.rhs,
                terms: r.terms.clone(),
            })
            .collect(),
    };
    let max_iterations = 300 * (p.rows.len() + p.vars.len()) + 20_000;
    let r = simplex::solve_simplex(&sp, max_iterations);
    let status = match r.status {
        SimplexStatus::Optimal => LpStatus::Optimal,
        SimplexStatus::Infeasible => return Err(LpError::Infeasible),
        SimplexStatus::Unbounded => return Err(LpError::Unbounded),
        SimplexStatus::IterationLimit => return Err(LpError::IterationLimit(r.iterations)),
    };
    let mut capacity = BTreeMap::new();
    for (&v, &idx) in &p.capacity_var {
        capacity.insert(v, r.values[idx]);
    }
    let mut flow = BTreeMap::new();
    for (&key, &idx) in &p.flow_var {
        if r.values[idx] != 0.0 {
            flow.insert(key, r.values[idx]);
        }
    }
    Ok(FracSolution {
        capacity,
        flow,
        objective: r.objective,
        status,
        iterations: r.iterations,
    })
}

/// One violated row or bound found by [`check_lp_feasible`].
#[derive(Debug, Clone)]
pub struct LpViolation {
    pub name: String,
    pub amount: f64,
}

#[derive(Debug, Clone, Default)]
pub struct FeasibilityReport {
    pub violations: Vec<LpViolation>,
    pub objective_recomputed: f64,
    pub objective_mismatch: Option<f64>,
}

impl FeasibilityReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.objective_mismatch.is_none()
    }
}

/// Re-evaluates every row, bound, and the objective of `s` against `p`.
/// Nonzero solution entries with no catalog variable are violations too.
pub fn check_lp_feasible(s: &FracSolution, p: &LpProblem, tol: f64) -> FeasibilityReport {
    let mut values = vec![0.0; p.vars.len()];
    for (&v, &idx) in &p.capacity_var {
        values[idx] = s.capacity_of(v);
    }
    for (&key, &idx) in &p.flow_var {
        values[idx] = s.flow.get(&key).copied().unwrap_or(0.0);
    }
    let mut report = FeasibilityReport::default();
    for (&v, &y) in &s.capacity {
        if y.abs() > tol && !p.capacity_var.contains_key(&v) {
            report.violations.push(LpViolation {
                name: format!("unknown-capacity:{v}"),
                amount: y,
            });
        }
    }
    for (&(c, (u, w)), &f) in &s.flow {
        if f.abs() > tol && !p.flow_var.contains_key(&(c, (u, w))) {
            report.violations.push(LpViolation {
                name: format!("unknown-flow:{c}:{u}->{w}"),
                amount: f,
            });
        }
    }
    for (j, var) in p.vars.iter().enumerate() {
        if values[j] < var.lower - tol || values[j] > var.upper + tol {
            report.violations.push(LpViolation {
                name: format!("bounds:{}", var.name),
                amount: (values[j] - var.upper).max(var.lower - values[j]),
            });
        }
    }
    for row in &p.rows {
        let activity: f64 = row.terms.iter().map(|&(j, a)| a * values[j]).sum();
        let violation = match row.kind {
            RowKind::Le => activity - row.rhs,
            RowKind::Eq => (activity - row.rhs).abs(),
        };
        if violation > tol {
            report.violations.push(LpViolation {
                name: row.name.clone(),
                amount: violation,
            });
        }
    }
    report.objective_recomputed = (0..p.vars.len())
        .map(|j| p.vars[j].objective * values[j])
        .sum();
    if (report.objective_recomputed - s.objective).abs() > tol.max(OBJ_TOL) {
        report.objective_mismatch = Some(report.objective_recomputed - s.objective);
    }
    report
}

/// Turns a budget-feasible tree into an integral relaxation solution whose
/// objective is exactly the tree's covered prize. The witness for the
/// upper-bound property of the relaxation.
pub fn tree_to_dcbc_solution(
    t: &OutTree,
    aug: &AugmentedGraph,
) -> Result<FracSolution, LpError> {
    if t.root != aug.root {
        return Err(LpError::InfeasibleTree(format!(
            "tree rooted at {} instead of {}",
            t.root, aug.root
        )));
    }
    let base_cost: f64 = t
        .nodes
        .iter()
        .filter(|&&v| aug.base_nodes.contains(&v))
        .map(|&v| aug.graph.cost(v))
        .sum();
    if base_cost > aug.budget {
        return Err(LpError::InfeasibleTree(format!(
            "tree cost {} exceeds budget {}",
            base_cost, aug.budget
        )));
    }
    for &v in &t.nodes {
        if !aug.base_nodes.contains(&v) && !aug.element_of.contains_key(&v) {
            return Err(LpError::InfeasibleTree(format!("node {v} outside graph")));
        }
    }

    // Unique tree path from the root to each node.
    let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for &(u, v) in &t.arcs {
        parent.insert(v, u);
    }
    let path_to = |v: NodeId| -> Vec<NodeId> {
        let mut p = vec![v];
        let mut cur = v;
        while let Some(&u) = parent.get(&cur) {
            p.push(u);
            cur = u;
        }
        p.reverse();
        p
    };

    let mut capacity: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut flow: BTreeMap<(NodeId, Arc), f64> = BTreeMap::new();
    let mut objective = 0.0;
    let base_tree: BTreeSet<NodeId> = t
        .nodes
        .iter()
        .copied()
        .filter(|v| aug.base_nodes.contains(v))
        .collect();

    for &v in &base_tree {
        capacity.insert(v, 1.0);
        if v != aug.root {
            let path = path_to(v);
            for pair in path.windows(2) {
                flow.insert((v, (pair[0], pair[1])), 1.0);
            }
        }
    }
    // Each covered element rides the path of its smallest covering tree node.
    for (x, &w) in aug.element_node.iter().enumerate() {
        let carrier = base_tree
            .iter()
            .copied()
            .find(|&v| aug.covers(v).contains(&x));
        if let Some(v) = carrier {
            capacity.insert(w, 1.0);
            let mut path = path_to(v);
            path.push(w);
            for pair in path.windows(2) {
                flow.insert((w, (pair[0], pair[1])), 1.0);
            }
            objective += aug.prize(w);
        }
    }
    capacity.entry(aug.root).or_insert(1.0);
    Ok(FracSolution {
        capacity,
        flow,
        objective,
        status: LpStatus::Optimal,
        iterations: 0,
    })
}

/// Rescales a coverage solution into a Steiner-relaxation solution for the
/// terminal set `terminals`, each of which must carry at least `1/delta`
/// flow. Certifies that the Steiner relaxation's optimum is at most
/// `delta * budget`.
pub fn scale_dcbc_to_dst_solution(
    s: &FracSolution,
    terminals: &BTreeSet<NodeId>,
    delta: f64,
    aug: &AugmentedGraph,
) -> Result<FracSolution, LpError> {
    let tol = 1e-9;
    for &t in terminals {
        let y = s.capacity_of(t);
        if y < 1.0 / delta - tol {
            return Err(LpError::TerminalBelowThreshold {
                terminal: t,
                value: y,
                delta,
            });
        }
    }
    let mut capacity: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut flow: BTreeMap<(NodeId, Arc), f64> = BTreeMap::new();
    let mut through: BTreeMap<NodeId, f64> = BTreeMap::new();
    for &t in terminals {
        let y_t = s.capacity_of(t);
        let mut inflow: BTreeMap<NodeId, f64> = BTreeMap::new();
        let mut outflow_root = 0.0;
        for (&(c, (u, v)), &f) in &s.flow {
            if c != t || f == 0.0 {
                continue;
            }
            let g = f / y_t;
            flow.insert((t, (u, v)), g);
            *inflow.entry(v).or_insert(0.0) += g;
            if u == aug.root {
                outflow_root += g;
            }
        }
        for (&v, &g) in &inflow {
            if v == t || v == aug.root {
                continue;
            }
            if g > 1.0 + 1e-6 {
                return Err(LpError::FlowAboveUnit {
                    commodity: t,
                    node: v,
                    value: g,
                });
            }
            let e = through.entry(v).or_insert(0.0);
            *e = e.max(g.min(1.0));
        }
        let r = through.entry(aug.root).or_insert(0.0);
        *r = r.max(outflow_root.min(1.0));
    }
    for &t in terminals {
        capacity.insert(t, 1.0);
    }
    for (&v, &x) in &through {
        if !terminals.contains(&v) {
            capacity.insert(v, x);
        }
    }
    capacity.entry(aug.root).or_insert(1.0);
    let objective: f64 = capacity
        .iter()
        .map(|(&v, &x)| x * aug.graph.cost(v))
        .sum();
    Ok(FracSolution {
        capacity,
        flow,
        objective,
        status: LpStatus::Optimal,
        iterations: 0,
    })
}

/// Serializes a problem in LP text format.
pub fn dump_lp_format(p: &LpProblem, title: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("\\ Problem: {title}\n"));
    out.push_str(match p.sense {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    out.push_str(" obj:");
    let mut first = true;
    for v in &p.vars {
        if v.objective != 0.0 {
            push_term(&mut out, &mut first, v.objective, &v.name);
        }
    }
    if first {
        out.push_str(" 0 ");
        out.push_str(&p.vars.first().map(|v| v.name.clone()).unwrap_or_default());
    }
    out.push_str("\nSubject To\n");
    for row in &p.rows {
        out.push_str(&format!(" {}:", row.name));
        let mut first = true;
        for &(j, a) in &row.terms {
            push_term(&mut out, &mut first, a, &p.vars[j].name);
        }
        let op = match row.kind {
            RowKind::Le => "<=",
            RowKind::Eq => "=",
        };
        out.push_str(&format!(" {} {}\n", op, fmt_num(row.rhs)));
    }
    out.push_str("Bounds\n");
    for v in &p.vars {
        if v.lower == v.upper {
            out.push_str(&format!(" {} = {}\n", v.name, fmt_num(v.lower)));
        } else if v.upper.is_infinite() {
            out.push_str(&format!(" {} >= {}\n", v.name, fmt_num(v.lower)));
        } else {
            out.push_str(&format!(
                " {} <= {} <= {}\n",
                fmt_num(v.lower),
                v.name,
                fmt_num(v.upper)
            ));
        }
    }
    out.push_str("End\n");
    out
}

fn push_term(out: &mut String, first: &mut bool, coef: f64, name: &str) {
    if *first {
        if coef < 0.0 {
            out.push_str(&format!(" - {} {}", fmt_num(-coef), name));
        } else {
            out.push_str(&format!(" {} {}", fmt_num(coef), name));
        }
        *first = false;
    } else if coef < 0.0 {
        out.push_str(&format!(" - {} {}", fmt_num(-coef), name));
    } else {
        out.push_str(&format!(" + {} {}", fmt_num(coef), name));
    }
}

fn fmt_num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}
