//! Node-weighted group Steiner trees, including the edge-weighted variant.
//!
//! Group instances reduce to connected set cover by transposing the
//! node-group incidence (and back, exactly). Edge-weighted inputs first move
//! every edge cost onto a fresh middle node.
//!
//! ```text
//! cargo run --example group_steiner
//! ```

use std::collections::BTreeSet;

use covertree::graph::NodeWeightedDigraph;
use covertree::reductions::{
    csc_to_gst, gst_to_csc, solve_gst, split_edge_weights, EdgeWeightedGraph, GroupInstance,
};

fn symmetric(costs: Vec<f64>, edges: &[(usize, usize)]) -> NodeWeightedDigraph {
    let mut arcs = Vec::new();
    for &(u, v) in edges {
        arcs.push((u, v));
        arcs.push((v, u));
    }
    NodeWeightedDigraph::new(costs, &arcs).unwrap()
}

fn main() {
    let graph = symmetric(
        vec![0.0, 2.0, 3.0, 1.0, 4.0, 2.0],
        &[(0, 1), (0, 2), (1, 3), (2, 4), (3, 5), (4, 5)],
    );
    let groups = vec![
        BTreeSet::from([1, 2]),
        BTreeSet::from([4, 5]),
        BTreeSet::from([3]),
    ];
    let inst = GroupInstance::new(graph, 0, groups.clone(), false).unwrap();

    // The reduction is an exact incidence transpose and round-trips.
    let csc = gst_to_csc(&inst);
    let back = csc_to_gst(&csc).unwrap();
    assert_eq!(back.groups, groups);

    let out = solve_gst(&inst, 1.0).unwrap();
    println!("tree nodes: {:?}", out.tree.nodes);
    println!("tree cost : {}", out.tree.total_cost);
    for (i, group) in groups.iter().enumerate() {
        let touched: Vec<_> = group.iter().filter(|v| out.tree.nodes.contains(v)).collect();
        println!("group {i}: touched at {touched:?}");
    }

    // Edge-weighted graphs: split each edge, then treat it as node-weighted.
    let edge_graph = EdgeWeightedGraph {
        node_count: 4,
        edges: vec![(0, 1, 2.0), (1, 2, 1.0), (0, 3, 5.0), (2, 3, 1.0)],
    };
    let split = split_edge_weights(&edge_graph).unwrap();
    println!(
        "edge-weighted split: {} nodes ({} original + {} edge middles)",
        split.node_count(),
        edge_graph.node_count,
        edge_graph.edges.len()
    );
    let groups = vec![BTreeSet::from([2usize]), BTreeSet::from([3])];
    let inst = GroupInstance::new(split, 0, groups, false).unwrap();
    let out = solve_gst(&inst, 1.0).unwrap();
    println!("edge-weighted tree cost: {}", out.tree.total_cost);
}
