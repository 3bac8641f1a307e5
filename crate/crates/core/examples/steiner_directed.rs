//! Node-weighted directed Steiner trees on general digraphs.
//!
//! The solver rounds the flow relaxation with a capacity threshold of
//! `1/sqrt(|V \ R|)`: terminals reachable through high-capacity nodes get a
//! shortest-path tree, the rest are wired through relay nodes chosen by a
//! greedy hitting set. An outer geometric ladder guesses the optimum to bound
//! root eccentricity; passing an explicit cap skips it.
//!
//! ```text
//! cargo run --example steiner_directed
//! ```

use std::collections::BTreeSet;

use covertree::dst::{solve_dst, SteinerInstance};
use covertree::graph::NodeWeightedDigraph;
use covertree::oracle::brute_force_dst;

fn main() {
    // Root 0 must reach terminals 6 and 7; interior nodes have costs.
    let graph = NodeWeightedDigraph::new(
        vec![0.0, 4.0, 1.0, 2.0, 3.0, 2.0, 0.0, 0.0],
        &[
            (0, 1),
            (0, 2),
            (1, 6),
            (2, 3),
            (2, 4),
            (3, 6),
            (4, 5),
            (5, 7),
            (3, 7),
        ],
    )
    .unwrap();
    let inst = SteinerInstance::new(graph, 0, BTreeSet::from([6, 7])).unwrap();

    let out = solve_dst(&inst, 1.0, None).unwrap();
    println!("tree nodes : {:?}", out.tree.nodes);
    println!("tree cost  : {}", out.tree.total_cost);
    println!("relaxation : {:.3}", out.report.lp_opt);
    println!(
        "split      : {} cheap, {} expensive (threshold {:.3})",
        out.report.cheap_terminals.len(),
        out.report.expensive_terminals.len(),
        out.report.threshold
    );
    println!(
        "ladder     : {} guesses tried, winner {:?}",
        out.report.guesses_tried, out.report.guess
    );

    let opt = brute_force_dst(&inst, 16).unwrap();
    println!("exact optimum: {}", opt.cost);

    // A caller that already knows every useful node lies within distance 10
    // can skip the ladder entirely.
    let capped = solve_dst(&inst, 1.0, Some(10.0)).unwrap();
    println!(
        "with eccentricity cap: cost {} in {} solve",
        capped.tree.total_cost, capped.report.guesses_tried
    );
}
