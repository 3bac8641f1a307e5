//! The flow relaxations up close: build, solve, check, dump, transport.
//!
//! ```text
//! cargo run --example lp_relaxation
//! ```

use std::collections::BTreeSet;

use covertree::coverage::{augment_graph, CoverageInstance};
use covertree::graph::{extract_out_tree, NodeWeightedDigraph};
use covertree::lp::{
    build_dcbc_lp, check_lp_feasible, dump_lp_format, scale_dcbc_to_dst_solution, solve_lp,
    tree_to_dcbc_solution, ROW_TOL,
};
use covertree::oracle::path_lp_dcbc;

fn main() {
    // One arm of cost 3 guarding an element of prize 7. With budget 2 the
    // relaxation goes fractional: y = 2/3 on the arm, objective 14/3.
    let inst = CoverageInstance::new(
        NodeWeightedDigraph::new(vec![0.0, 3.0], &[(0, 1)]).unwrap(),
        0,
        2.0,
        true,
        vec![7.0],
        vec![BTreeSet::new(), BTreeSet::from([0])],
    )
    .unwrap();
    let aug = augment_graph(&inst).unwrap();
    let lp = build_dcbc_lp(&aug).unwrap();
    println!(
        "compact relaxation: {} variables, {} rows",
        lp.vars.len(),
        lp.rows.len()
    );
    let sol = solve_lp(&lp, ROW_TOL).unwrap();
    println!("objective: {:.6} (14/3 = {:.6})", sol.objective, 14.0 / 3.0);
    println!("capacities: {:?}", sol.capacity);

    // The checker re-evaluates every row and the objective.
    let report = check_lp_feasible(&sol, &lp, ROW_TOL);
    println!("feasibility check clean: {}", report.is_clean());

    // The compact arc-flow form agrees with the literal path formulation.
    let path_opt = path_lp_dcbc(&aug).unwrap();
    println!("path-form objective: {:.6}", path_opt);

    // Any budget-feasible tree transports into an integral solution whose
    // objective is exactly its prize, certifying the upper-bound property.
    let mut wide = inst.clone();
    wide.budget = 3.0;
    let aug3 = augment_graph(&wide).unwrap();
    let tree = extract_out_tree(&aug3.graph, 0, &BTreeSet::from([1])).unwrap();
    let transported = tree_to_dcbc_solution(&tree, &aug3).unwrap();
    println!("transported tree objective: {}", transported.objective);

    // Rescaling a coverage solution certifies that the Steiner relaxation of
    // the well-served sinks costs at most delta * budget.
    let sinks: BTreeSet<usize> = aug.element_node.iter().copied().collect();
    let scaled = scale_dcbc_to_dst_solution(&sol, &sinks, 2.0, &aug).unwrap();
    println!(
        "steiner transport objective {:.3} <= delta * budget = {:.3}",
        scaled.objective,
        2.0 * aug.budget
    );

    println!("\nLP text dump:\n{}", dump_lp_format(&lp, "dcbc"));
}
