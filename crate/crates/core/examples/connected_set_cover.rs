//! Minimum connected set cover by iterated budgeted coverage.
//!
//! A guessed optimum becomes the budget of a unit-prize coverage round; each
//! round zeroes the cost of the nodes it picked so later rounds extend the
//! same tree, and a binary search over a geometric ladder finds the smallest
//! guess whose rounds finish the cover.
//!
//! ```text
//! cargo run --example connected_set_cover
//! ```

use std::collections::BTreeSet;

use covertree::coverage::CoverageInstance;
use covertree::graph::NodeWeightedDigraph;
use covertree::oracle::brute_force_csc;
use covertree::reductions::solve_csc;

fn symmetric(costs: Vec<f64>, edges: &[(usize, usize)]) -> NodeWeightedDigraph {
    let mut arcs = Vec::new();
    for &(u, v) in edges {
        arcs.push((u, v));
        arcs.push((v, u));
    }
    NodeWeightedDigraph::new(costs, &arcs).unwrap()
}

fn main() {
    // Watchman-style instance: every point must be seen by a chosen node.
    let graph = symmetric(
        vec![0.0, 4.0, 4.0, 4.0, 2.0, 5.0],
        &[(0, 1), (0, 2), (0, 3), (1, 4), (3, 5)],
    );
    let covers = vec![
        BTreeSet::new(),
        BTreeSet::from([0]),
        BTreeSet::from([1, 2]),
        BTreeSet::from([3]),
        BTreeSet::from([0, 4]),
        BTreeSet::from([5]),
    ];
    // Budget and prizes are ignored by set cover; elements just need covering.
    let inst = CoverageInstance::new(graph, 0, 0.0, false, vec![1.0; 6], covers).unwrap();

    let out = solve_csc(&inst, 1.0).unwrap();
    println!("accepted guess : {}", out.trace.guess);
    println!("guesses tried  : {}", out.trace.guesses_evaluated);
    println!("rounds:");
    for (i, row) in out.trace.rows.iter().enumerate() {
        println!(
            "  {}: {} uncovered, round paid {}, {} nodes already free",
            i + 1,
            row.uncovered,
            row.tree_cost,
            row.zeroed_nodes
        );
    }
    println!("tree nodes: {:?}", out.tree.nodes);
    println!("tree cost : {}", out.tree.total_cost);

    let opt = brute_force_csc(&inst, 16).unwrap();
    println!("exact optimum: {}", opt.cost);
}
