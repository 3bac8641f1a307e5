//! Undirected budgeted connected coverage.
//!
//! Same contract as the directed solver, but the Steiner connections inside
//! the pipeline run the spider-merge algorithm over the bidirected form of
//! the graph, which buys a polylogarithmic quality guarantee independent of
//! the node count.
//!
//! ```text
//! cargo run --example undirected_coverage
//! ```

use std::collections::BTreeSet;

use covertree::coverage::{solve_ucbc, CoverageInstance};
use covertree::graph::NodeWeightedDigraph;

/// An undirected instance stores every edge as a pair of arcs.
fn symmetric(costs: Vec<f64>, edges: &[(usize, usize)]) -> NodeWeightedDigraph {
    let mut arcs = Vec::with_capacity(edges.len() * 2);
    for &(u, v) in edges {
        arcs.push((u, v));
        arcs.push((v, u));
    }
    NodeWeightedDigraph::new(costs, &arcs).unwrap()
}

fn main() {
    // A sensor field: the root is a gateway, nodes are sensor placements,
    // elements are coverage targets.
    let graph = symmetric(
        vec![0.0, 1.0, 2.0, 2.0, 3.0, 1.0, 4.0],
        &[(0, 1), (0, 2), (1, 3), (2, 3), (2, 4), (3, 5), (4, 6), (5, 6)],
    );
    let prizes = vec![4.0, 4.0, 5.0, 3.0, 6.0];
    let covers = vec![
        BTreeSet::new(),
        BTreeSet::from([0]),
        BTreeSet::from([0, 1]),
        BTreeSet::from([2]),
        BTreeSet::from([3]),
        BTreeSet::from([2, 4]),
        BTreeSet::from([4]),
    ];
    let inst = CoverageInstance::new(graph, 0, 6.0, false, prizes, covers).unwrap();

    let report = solve_ucbc(&inst, 0.5).unwrap();
    println!("tree nodes : {:?}", report.tree_nodes);
    println!("tree edges : {:?}", report.tree_arcs);
    println!(
        "prize {} at cost {} (budget {}, allowed {})",
        report.prize,
        report.cost,
        report.budget,
        1.5 * report.budget
    );
    println!("covered targets: {:?}", report.covered_elements);
    println!("relaxation optimum: {:.3}", report.lp_opt);
}
