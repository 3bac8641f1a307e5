//! Exact brute-force reference solvers for desk-scale verification.
//!
//! Everything here optimizes for obviousness: node subsets are enumerated
//! outright, feasibility of a subset as a rooted tree is plain reachability
//! inside the subset, and the path-form relaxation oracle spells out every
//! simple path as its own variable. Caps are enforced with explicit errors.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::coverage::{AugmentedGraph, CoverageInstance};
use crate::dst::SteinerInstance;
use crate::graph::{extract_out_tree, GraphError, NodeId, NodeWeightedDigraph, OutTree};
use crate::lp::simplex::{solve_simplex, RowKind, Sense, SimplexProblem, SimplexRow, SimplexStatus};

pub const DEFAULT_CAP: usize = 16;
pub const PATH_LP_CAP: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("instance has {nodes} nodes, above the oracle cap {cap}")]
    CapExceeded { nodes: usize, cap: usize },
    #[error("no feasible solution exists")]
    Infeasible,
    #[error("path-form relaxation failed with status {0:?}")]
    LpFailed(SimplexStatus),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone)]
pub struct CoverageOptimum {
    pub prize: f64,
    pub tree: OutTree,
}

#[derive(Debug, Clone)]
pub struct SteinerOptimum {
    pub cost: f64,
    pub tree: OutTree,
}

/// All subset members reachable from the root using only subset nodes; such a
/// subset is exactly one realizable as a rooted out-tree.
fn subset_is_rooted(g: &NodeWeightedDigraph, root: NodeId, subset: &BTreeSet<NodeId>) -> bool {
    let mut seen = BTreeSet::from([root]);
    let mut stack = vec![root];
    while let Some(u) = stack.pop() {
        for w in g.out_neighbors(u) {
            if subset.contains(&w) && seen.insert(w) {
                stack.push(w);
            }
        }
    }
    subset.iter().all(|v| seen.contains(v))
}

/// Exhaustive optimum for budgeted connected coverage.
pub fn brute_force_dcbc(
    inst: &CoverageInstance,
    cap: usize,
) -> Result<CoverageOptimum, OracleError> {
    let g = &inst.graph;
    let n = g.node_count();
    if n > cap {
        return Err(OracleError::CapExceeded { nodes: n, cap });
    }
    let others: Vec<NodeId> = g.node_ids().filter(|&v| v != inst.root).collect();
    if g.cost(inst.root) > inst.budget {
        return Err(OracleError::Infeasible);
    }
    let mut best_subset = BTreeSet::from([inst.root]);
    let mut best_prize = inst.coverage_of([inst.root].iter()).1;
    let mut best_cost = g.cost(inst.root);
    for mask in 0u64..(1u64 << others.len()) {
        let mut subset = BTreeSet::from([inst.root]);
        for (i, &v) in others.iter().enumerate() {
            if mask >> i & 1 == 1 {
                subset.insert(v);
            }
        }
        let cost: f64 = subset.iter().map(|&v| g.cost(v)).sum();
        if cost > inst.budget || !subset_is_rooted(g, inst.root, &subset) {
            continue;
        }
        let (_, prize) = inst.coverage_of(subset.iter());
        if prize > best_prize || (prize == best_prize && cost < best_cost) {
            best_prize = prize;
            best_cost = cost;
            best_subset = subset;
        }
    }
    let sub = g.induced_subgraph(&best_subset)?;
    let tree = extract_out_tree(&sub, inst.root, &best_subset)?;
    Ok(CoverageOptimum {
        prize: best_prize,
        tree,
    })
}

/// Exhaustive optimum for the directed Steiner tree.
pub fn brute_force_dst(inst: &SteinerInstance, cap: usize) -> Result<SteinerOptimum, OracleError> {
    let g = &inst.graph;
    let n = g.node_count();
    if n > cap {
        return Err(OracleError::CapExceeded { nodes: n, cap });
    }
    let mut required = inst.terminals.clone();
    required.insert(inst.root);
    let optional: Vec<NodeId> = g.node_ids().filter(|v| !required.contains(v)).collect();
    let mut best: Option<(f64, OutTree)> = None;
    for mask in 0u64..(1u64 << optional.len()) {
        let mut subset = required.clone();
        for (i, &v) in optional.iter().enumerate() {
            if mask >> i & 1 == 1 {
                subset.insert(v);
            }
        }
        let sub = g.induced_subgraph(&subset)?;
        let tree = match extract_out_tree(&sub, inst.root, &inst.terminals) {
            Ok(t) => t,
            Err(GraphError::UnreachableTarget(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        if best.as_ref().map_or(true, |(c, _)| tree.total_cost < *c) {
            best = Some((tree.total_cost, tree));
        }
    }
    let (cost, tree) = best.ok_or(OracleError::Infeasible)?;
    Ok(SteinerOptimum { cost, tree })
}

/// Exhaustive optimum for connected set cover: cheapest rooted subset whose
/// coverage is the whole ground set.
pub fn brute_force_csc(
    inst: &CoverageInstance,
    cap: usize,
) -> Result<SteinerOptimum, OracleError> {
    let g = &inst.graph;
    let n = g.node_count();
    if n > cap {
        return Err(OracleError::CapExceeded { nodes: n, cap });
    }
    let all: BTreeSet<usize> = (0..inst.element_count()).collect();
    let others: Vec<NodeId> = g.node_ids().filter(|&v| v != inst.root).collect();
    let mut best: Option<(f64, BTreeSet<NodeId>)> = None;
    for mask in 0u64..(1u64 << others.len()) {
        let mut subset = BTreeSet::from([inst.root]);
        for (i, &v) in others.iter().enumerate() {
            if mask >> i & 1 == 1 {
                subset.insert(v);
            }
        }
        let cost: f64 = subset.iter().map(|&v| g.cost(v)).sum();
        if best.as_ref().is_some_and(|(c, _)| cost >= *c) {
            continue;
        }
        if inst.coverage_of(subset.iter()).0 != all {
            continue;
        }
        if !subset_is_rooted(g, inst.root, &subset) {
            continue;
        }
        best = Some((cost, subset));
    }
    let (cost, subset) = best.ok_or(OracleError::Infeasible)?;
    let sub = g.induced_subgraph(&subset)?;
    let tree = extract_out_tree(&sub, inst.root, &subset)?;
    Ok(SteinerOptimum { cost, tree })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathLpKind {
    Dcbc,
    Dst,
}

fn enumerate_simple_paths(
    g: &NodeWeightedDigraph,
    source: NodeId,
    target: NodeId,
) -> Vec<Vec<NodeId>> {
    fn dfs(
        g: &NodeWeightedDigraph,
        cur: NodeId,
        target: NodeId,
        visited: &mut Vec<NodeId>,
        out: &mut Vec<Vec<NodeId>>,
    ) {
        if cur == target {
            out.push(visited.clone());
            return;
        }
        let next: Vec<NodeId> = g.out_neighbors(cur).collect();
        for w in next {
            if !visited.contains(&w) {
                visited.push(w);
                dfs(g, w, target, visited, out);
                visited.pop();
            }
        }
    }
    let mut out = Vec::new();
    if source == target {
        return out;
    }
    let mut visited = vec![source];
    dfs(g, source, target, &mut visited, &mut out);
    out
}

/// Literal path-form relaxation with one flow variable per simple path,
/// solved by the same embedded simplex. Certifies the compact arc-flow
/// reformulation on tiny instances.
pub fn path_lp_oracle(
    graph: &NodeWeightedDigraph,
    root: NodeId,
    kind: PathLpKind,
    budget: f64,
    prize: &dyn Fn(NodeId) -> f64,
    terminals: &BTreeSet<NodeId>,
) -> Result<f64, OracleError> {
    let n = graph.node_count();
    if n > PATH_LP_CAP {
        return Err(OracleError::CapExceeded {
            nodes: n,
            cap: PATH_LP_CAP,
        });
    }
    let nodes: Vec<NodeId> = graph.node_ids().collect();
    let index_of = |v: NodeId| nodes.iter().position(|&u| u == v).unwrap();

    let mut objective = vec![0.0; nodes.len()];
    let mut lower = vec![0.0; nodes.len()];
    let mut upper = vec![1.0; nodes.len()];
    let mut rows: Vec<SimplexRow> = Vec::new();

    match kind {
        PathLpKind::Dcbc => {
            for (i, &v) in nodes.iter().enumerate() {
                objective[i] = prize(v);
            }
            lower[index_of(root)] = 1.0;
            let budget_terms: Vec<(usize, f64)> = nodes
                .iter()
                .enumerate()
                .filter(|&(_, &v)| graph.cost(v) != 0.0)
                .map(|(i, &v)| (i, graph.cost(v)))
                .collect();
            rows.push(SimplexRow {
                kind: RowKind::Le,
                rhs: budget,
                terms: budget_terms,
            });
            let mut next_var = nodes.len();
            let mut all_vars: Vec<(usize, Vec<NodeId>, NodeId)> = Vec::new(); // (var, path, commodity)
            for &v in &nodes {
                if v == root {
                    continue;
                }
                let paths = enumerate_simple_paths(graph, root, v);
                let mut demand: Vec<(usize, f64)> = Vec::new();
                for path in paths {
                    demand.push((next_var, 1.0));
                    all_vars.push((next_var, path, v));
                    next_var += 1;
                }
                demand.push((index_of(v), -1.0));
                rows.push(SimplexRow {
                    kind: RowKind::Eq,
                    rhs: 0.0,
                    terms: demand,
                });
            }
            // Capacity: flow of commodity v through z bounded by y_z.
            for &v in &nodes {
                if v == root {
                    continue;
                }
                for &z in &nodes {
                    if z == root || z == v {
                        continue;
                    }
                    let terms: Vec<(usize, f64)> = all_vars
                        .iter()
                        .filter(|(_, path, c)| *c == v && path.contains(&z))
                        .map(|(var, _, _)| (*var, 1.0))
                        .collect();
                    if terms.is_empty() {
                        continue;
                    }
                    let mut terms = terms;
                    terms.push((index_of(z), -1.0));
                    rows.push(SimplexRow {
                        kind: RowKind::Le,
                        rhs: 0.0,
                        terms,
                    });
                }
            }
            objective.resize(next_var, 0.0);
            lower.resize(next_var, 0.0);
            upper.resize(next_var, 1.0);
            let p = SimplexProblem {
                sense: Sense::Maximize,
                objective,
                lower,
                upper,
                rows,
            };
            let r = solve_simplex(&p, 500_000);
            if r.status != SimplexStatus::Optimal {
                return Err(OracleError::LpFailed(r.status));
            }
            Ok(r.objective)
        }
        PathLpKind::Dst => {
            for (i, &v) in nodes.iter().enumerate() {
                objective[i] = graph.cost(v);
            }
            let mut next_var = nodes.len();
            let mut all_vars: Vec<(usize, Vec<NodeId>, NodeId)> = Vec::new();
            for &t in terminals {
                if t == root {
                    continue;
                }
                let paths = enumerate_simple_paths(graph, root, t);
                if paths.is_empty() {
                    return Err(OracleError::Infeasible);
                }
                let mut demand: Vec<(usize, f64)> = Vec::new();
                for path in paths {
                    demand.push((next_var, 1.0));
                    all_vars.push((next_var, path, t));
                    next_var += 1;
                }
                rows.push(SimplexRow {
                    kind: RowKind::Eq,
                    rhs: 1.0,
                    terms: demand,
                });
            }
            // Capacity at every node, terminals and root included.
            for &t in terminals {
                if t == root {
                    continue;
                }
                for &z in &nodes {
                    let terms: Vec<(usize, f64)> = all_vars
                        .iter()
                        .filter(|(_, path, c)| *c == t && path.contains(&z))
                        .map(|(var, _, _)| (*var, 1.0))
                        .collect();
                    if terms.is_empty() {
                        continue;
                    }
                    let mut terms = terms;
                    terms.push((index_of(z), -1.0));
                    rows.push(SimplexRow {
                        kind: RowKind::Le,
                        rhs: 0.0,
                        terms,
                    });
                }
            }
            objective.resize(next_var, 0.0);
            lower.resize(next_var, 0.0);
            upper.resize(next_var, 1.0);
            let p = SimplexProblem {
                sense: Sense::Minimize,
                objective,
                lower,
                upper,
                rows,
            };
            let r = solve_simplex(&p, 500_000);
            if r.status != SimplexStatus::Optimal {
                return Err(OracleError::LpFailed(r.status));
            }
            Ok(r.objective)
        }
    }
}

/// Convenience wrapper: path-form optimum of the coverage relaxation on an
/// augmented instance.
pub fn path_lp_dcbc(aug: &AugmentedGraph) -> Result<f64, OracleError> {
    path_lp_oracle(
        &aug.graph,
        aug.root,
        PathLpKind::Dcbc,
        aug.budget,
        &|v| aug.prize(v),
        &BTreeSet::new(),
    )
}

/// Path-form optimum of the Steiner relaxation.
pub fn path_lp_dst(inst: &SteinerInstance) -> Result<f64, OracleError> {
    path_lp_oracle(
        &inst.graph,
        inst.root,
        PathLpKind::Dst,
        0.0,
        &|_| 0.0,
        &inst.terminals,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::augment_graph;
    use crate::lp::{build_dcbc_lp, build_dst_lp, solve_lp, ROW_TOL};

    fn tiny_coverage() -> CoverageInstance {
        // 0(0) -> 1(1) -> 2(1); elements 0 on node 1, 1 on node 2.
        CoverageInstance::new(
            NodeWeightedDigraph::new(vec![0.0, 1.0, 1.0], &[(0, 1), (1, 2)]).unwrap(),
            0,
            2.0,
            true,
            vec![1.0, 1.0],
            vec![BTreeSet::new(), BTreeSet::from([0]), BTreeSet::from([1])],
        )
        .unwrap()
    }

    #[test]
    fn dcbc_oracle_full_path_within_budget() {
        let inst = tiny_coverage();
        let opt = brute_force_dcbc(&inst, DEFAULT_CAP).unwrap();
        assert_eq!(opt.prize, 2.0);
        assert_eq!(opt.tree.nodes, BTreeSet::from([0, 1, 2]));
    }

    #[test]
    fn dcbc_oracle_zero_budget_keeps_root_only() {
        let mut inst = tiny_coverage();
        inst.budget = 0.0;
        let opt = brute_force_dcbc(&inst, DEFAULT_CAP).unwrap();
        assert_eq!(opt.prize, 0.0);
        assert_eq!(opt.tree.nodes, BTreeSet::from([0]));
    }

    #[test]
    fn dcbc_oracle_cap_enforced() {
        let inst = tiny_coverage();
        assert_eq!(
            brute_force_dcbc(&inst, 2).unwrap_err(),
            OracleError::CapExceeded { nodes: 3, cap: 2 }
        );
    }

    #[test]
    fn dst_oracle_picks_cheaper_relay() {
        let g = NodeWeightedDigraph::new(
            vec![0.0, 3.0, 5.0, 0.0],
            &[(0, 1), (0, 2), (1, 3), (2, 3)],
        )
        .unwrap();
        let inst = SteinerInstance::new(g, 0, BTreeSet::from([3])).unwrap();
        let opt = brute_force_dst(&inst, DEFAULT_CAP).unwrap();
        assert_eq!(opt.cost, 3.0);
        assert!(opt.tree.nodes.contains(&1));
    }

    #[test]
    fn dst_oracle_terminals_adjacent_to_root() {
        let g = NodeWeightedDigraph::new(vec![2.0, 1.0, 1.0], &[(0, 1), (0, 2)]).unwrap();
        let inst = SteinerInstance::new(g, 0, BTreeSet::from([1, 2])).unwrap();
        let opt = brute_force_dst(&inst, DEFAULT_CAP).unwrap();
        assert_eq!(opt.cost, 4.0);
    }

    #[test]
    fn dst_oracle_disconnected_is_infeasible() {
        let g = NodeWeightedDigraph::new(vec![0.0, 1.0], &[(1, 0)]).unwrap();
        let inst = SteinerInstance::new(g, 0, BTreeSet::from([1])).unwrap();
        assert_eq!(
            brute_force_dst(&inst, DEFAULT_CAP).unwrap_err(),
            OracleError::Infeasible
        );
    }

    #[test]
    fn csc_oracle_center_covers_everything() {
        // Star: root 0, center 1 covers both elements, leaf 2 covers one.
        let inst = CoverageInstance::new(
            NodeWeightedDigraph::new(vec![0.0, 2.0, 9.0], &[(0, 1), (0, 2)]).unwrap(),
            0,
            0.0,
            true,
            vec![1.0, 1.0],
            vec![
                BTreeSet::new(),
                BTreeSet::from([0, 1]),
                BTreeSet::from([0]),
            ],
        )
        .unwrap();
        let opt = brute_force_csc(&inst, DEFAULT_CAP).unwrap();
        assert_eq!(opt.cost, 2.0);
        assert_eq!(opt.tree.nodes, BTreeSet::from([0, 1]));
    }

    #[test]
    fn csc_oracle_uncoverable_element_is_infeasible() {
        let inst = CoverageInstance::new(
            NodeWeightedDigraph::new(vec![0.0], &[]).unwrap(),
            0,
            0.0,
            true,
            vec![1.0],
            vec![BTreeSet::new()],
        )
        .unwrap();
        assert_eq!(
            brute_force_csc(&inst, DEFAULT_CAP).unwrap_err(),
            OracleError::Infeasible
        );
    }

    #[test]
    fn path_lp_matches_compact_dcbc_examples() {
        for budget in [3.0, 2.0] {
            let inst = CoverageInstance::new(
                NodeWeightedDigraph::new(vec![0.0, 3.0], &[(0, 1)]).unwrap(),
                0,
                budget,
                true,
                vec![7.0],
                vec![BTreeSet::new(), BTreeSet::from([0])],
            )
            .unwrap();
            let aug = augment_graph(&inst).unwrap();
            let compact = solve_lp(&build_dcbc_lp(&aug).unwrap(), ROW_TOL).unwrap();
            let path_opt = path_lp_dcbc(&aug).unwrap();
            assert!(
                (compact.objective - path_opt).abs() < 1e-6,
                "budget {budget}: compact {} vs path {}",
                compact.objective,
                path_opt
            );
        }
    }

    #[test]
    fn path_lp_matches_compact_dst_example() {
        let g = NodeWeightedDigraph::new(
            vec![0.0, 3.0, 5.0, 0.0],
            &[(0, 1), (0, 2), (1, 3), (2, 3)],
        )
        .unwrap();
        let inst = SteinerInstance::new(g, 0, BTreeSet::from([3])).unwrap();
        let compact = solve_lp(&build_dst_lp(&inst).unwrap(), ROW_TOL).unwrap();
        let path_opt = path_lp_dst(&inst).unwrap();
        assert!((compact.objective - 3.0).abs() < 1e-6);
        assert!((compact.objective - path_opt).abs() < 1e-6);
    }
}
