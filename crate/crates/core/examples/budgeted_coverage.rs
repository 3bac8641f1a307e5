//! Directed budgeted connected coverage, end to end.
//!
//! A small delivery scenario: a depot (the root) reaches shops through a
//! directed road network, every shop serves a set of customers, and the tree
//! of opened shops must respect a budget. Run with:
//!
//! ```text
//! cargo run --example budgeted_coverage
//! ```

use std::collections::BTreeSet;

use covertree::coverage::{solve_dcbc, CoverageInstance};
use covertree::graph::NodeWeightedDigraph;
use covertree::oracle::brute_force_dcbc;

fn main() {
    // Nodes: 0 depot, 1-5 shops. Node costs are opening costs.
    let graph = NodeWeightedDigraph::new(
        vec![0.0, 2.0, 3.0, 4.0, 1.0, 6.0],
        &[
            (0, 1),
            (0, 2),
            (1, 3),
            (2, 3),
            (2, 4),
            (4, 5),
            (3, 5),
        ],
    )
    .unwrap();
    // Customers 0-5 with prizes; covers[v] lists the customers shop v serves.
    let prizes = vec![5.0, 3.0, 4.0, 6.0, 2.0, 7.0];
    let covers = vec![
        BTreeSet::new(),
        BTreeSet::from([0, 1]),
        BTreeSet::from([1, 2]),
        BTreeSet::from([3]),
        BTreeSet::from([2, 4]),
        BTreeSet::from([5]),
    ];
    let budget = 7.0;
    let inst = CoverageInstance::new(graph, 0, budget, true, prizes, covers).unwrap();

    for eps in [0.25, 1.0] {
        let report = solve_dcbc(&inst, eps).unwrap();
        println!("eps = {eps}:");
        println!("  tree nodes     : {:?}", report.tree_nodes);
        println!("  covered        : {:?}", report.covered_elements);
        println!(
            "  prize / cost   : {} / {} (budget {}, violation {:.3})",
            report.prize, report.cost, report.budget, report.budget_violation
        );
        println!(
            "  relaxation opt : {:.3} (branch {:?}, {} buckets)",
            report.lp_opt, report.chosen_branch, report.stages.bucket_count
        );
        assert!(report.cost <= (1.0 + eps) * budget);
    }

    // Desk-scale instances can be checked against the exact optimum.
    let oracle = brute_force_dcbc(&inst, 16).unwrap();
    println!("exact optimum at budget {budget}: prize {}", oracle.prize);
}
