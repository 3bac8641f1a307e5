//! The trimming step in isolation: cutting an over-budget tree down to the
//! `(1 + eps) * budget` window while keeping prize-to-cost quality.
//!
//! ```text
//! cargo run --example trimming
//! ```

use std::collections::BTreeSet;

use covertree::coverage::trim_tree;
use covertree::graph::{extract_out_tree, NodeWeightedDigraph};

fn main() {
    // Budget-proper graph (every node within distance 4 of the root) whose
    // full spanning tree costs 12: three times the budget.
    let graph = NodeWeightedDigraph::new(
        vec![0.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0],
        &[(0, 1), (1, 2), (0, 3), (3, 4), (0, 5), (5, 6)],
    )
    .unwrap();
    let budget = 4.0;
    let everything: BTreeSet<usize> = graph.node_ids().collect();
    let tree = extract_out_tree(&graph, 0, &everything).unwrap();
    println!("input tree: cost {} over budget {budget}", tree.total_cost);

    // Prize concentrated on the branch through node 3.
    let prize_of = |nodes: &BTreeSet<usize>| -> f64 {
        let mut p = 0.0;
        if nodes.contains(&3) {
            p += 5.0;
        }
        if nodes.contains(&4) {
            p += 7.0;
        }
        if nodes.contains(&2) {
            p += 1.0;
        }
        p
    };
    let gamma = prize_of(&tree.nodes) / tree.total_cost;

    for eps in [0.25, 0.5, 1.0] {
        let out = trim_tree(&tree, eps, budget, &graph, 0, prize_of).unwrap();
        let cost = out.tree.total_cost;
        let prize = prize_of(&out.tree.nodes);
        println!(
            "eps {eps}: kept {:?} at cost {cost} (window [{}, {}]), ratio {:.3} vs eps*gamma/4 = {:.3}",
            out.tree.nodes,
            eps * budget / 2.0,
            (1.0 + eps) * budget,
            prize / cost,
            eps * gamma / 4.0
        );
        assert!(cost >= eps * budget / 2.0 && cost <= (1.0 + eps) * budget);
        assert!(prize / cost >= eps * gamma / 4.0 - 1e-9);
    }
}
