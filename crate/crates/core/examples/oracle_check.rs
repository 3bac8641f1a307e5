//! Brute-force oracles against the approximation solvers on a seed sweep.
//!
//! ```text
//! cargo run --example oracle_check
//! ```

use covertree::coverage::{solve_dcbc, solve_ucbc};
use covertree::generate::{generate_instance, BudgetPolicy, GenParams};
use covertree::instance::{typed_from_file, InstanceKind, TypedInstance};
use covertree::oracle::{brute_force_dcbc, brute_force_dst};
use covertree::dst::solve_dst;

fn main() {
    println!("budgeted coverage, 20 seeds:");
    println!("seed\toptimum\tsolver\tcost\tbudget");
    for seed in 0..20u64 {
        let params = GenParams {
            kind: if seed % 2 == 0 {
                InstanceKind::Dcbc
            } else {
                InstanceKind::Ucbc
            },
            directed: false,
            nodes: 6 + (seed as usize % 5),
            elements: 3 + (seed as usize % 4),
            density: 0.2,
            cost_range: (0, 6),
            prize_range: (1, 9),
            budget_policy: BudgetPolicy::FractionOfTotal(0.4),
        };
        let file = generate_instance(&params, seed).unwrap();
        let TypedInstance::Coverage(inst) = typed_from_file(&file).unwrap() else {
            unreachable!()
        };
        let report = if inst.directed {
            solve_dcbc(&inst, 1.0).unwrap()
        } else {
            solve_ucbc(&inst, 1.0).unwrap()
        };
        let oracle = brute_force_dcbc(&inst, 16).unwrap();
        println!(
            "{seed}\t{}\t{}\t{}\t{}",
            oracle.prize, report.prize, report.cost, report.budget
        );
        // Bicriteria: the solver may use up to twice the budget at eps = 1,
        // so its prize can legitimately exceed the budget-respecting optimum.
    }

    println!("\ndirected steiner, 10 seeds:");
    println!("seed\toptimum\tsolver");
    for seed in 0..10u64 {
        let params = GenParams {
            kind: InstanceKind::Dst,
            directed: true,
            nodes: 7 + (seed as usize % 6),
            elements: 1 + (seed as usize % 3),
            density: 0.2,
            cost_range: (0, 6),
            prize_range: (1, 9),
            budget_policy: BudgetPolicy::FractionOfTotal(0.5),
        };
        let file = generate_instance(&params, seed).unwrap();
        let TypedInstance::Steiner(inst) = typed_from_file(&file).unwrap() else {
            unreachable!()
        };
        let out = solve_dst(&inst, 1.0, None).unwrap();
        let oracle = brute_force_dst(&inst, 16).unwrap();
        println!("{seed}\t{}\t{}", oracle.cost, out.tree.total_cost);
        assert!(out.tree.total_cost >= oracle.cost);
    }
}
