//! Steiner trees on bidirected graphs with sink terminals, with the
//! per-iteration certificate switched on.
//!
//! Non-terminal nodes form a core where every arc is paired with its
//! reverse; terminals only have incoming arcs. The spider-merge loop picks
//! the center and component group minimizing connection cost per component
//! joined. With `certify = true` the flow relaxation is solved once and every
//! iteration's realized ratio is checked against `lp_opt / #components`.
//!
//! ```text
//! cargo run --example steiner_bidirected
//! ```

use std::collections::BTreeSet;

use covertree::bidirected::solve_dst_bidirected;
use covertree::dst::SteinerInstance;
use covertree::graph::NodeWeightedDigraph;

fn main() {
    // Core 0..=4 (bidirected), sinks 5..=7 fed from the core.
    let mut arcs = vec![];
    for &(u, v) in &[(0usize, 1usize), (0, 2), (1, 3), (2, 3), (2, 4)] {
        arcs.push((u, v));
        arcs.push((v, u));
    }
    arcs.extend([(1, 5), (3, 5), (3, 6), (4, 6), (4, 7)]);
    let graph = NodeWeightedDigraph::new(
        vec![0.0, 3.0, 1.0, 2.0, 2.0, 0.0, 0.0, 0.0],
        &arcs,
    )
    .unwrap()
    .with_bidirected_core(BTreeSet::from([0, 1, 2, 3, 4]))
    .unwrap();
    let inst = SteinerInstance::new(graph, 0, BTreeSet::from([5, 6, 7])).unwrap();

    let out = solve_dst_bidirected(&inst, true).unwrap();
    println!("tree nodes: {:?}", out.tree.nodes);
    println!("tree cost : {}", out.tree.total_cost);
    println!("relaxation: {:.3}", out.report.lp_opt.unwrap());
    println!("iterations:");
    for (i, it) in out.report.iterations.iter().enumerate() {
        println!(
            "  {}: {} components, center {}, merged {}, ratio {:.3} <= bound {:.3}",
            i + 1,
            it.components_before,
            it.center,
            it.merged_components,
            it.ratio,
            it.certificate_bound.unwrap()
        );
    }
}
