//! Seeded instance generation and the bench table.
//!
//! ```text
//! cargo run --example generate_and_bench
//! ```

use covertree::generate::{generate_instance, BudgetPolicy, GenParams};
use covertree::instance::{instance_digest, write_instance, InstanceKind};
use covertree::runner::{bench, SolveOptions};

fn main() {
    let params = GenParams {
        kind: InstanceKind::Dcbc,
        directed: true,
        nodes: 8,
        elements: 5,
        density: 0.2,
        cost_range: (0, 6),
        prize_range: (1, 9),
        budget_policy: BudgetPolicy::FractionOfTotal(0.4),
    };

    // Same seed, same bytes.
    let a = generate_instance(&params, 42).unwrap();
    let b = generate_instance(&params, 42).unwrap();
    assert_eq!(write_instance(&a), write_instance(&b));
    println!("seed 42 digest: {}", instance_digest(&a));
    println!("{}", write_instance(&a));

    // The bench harness solves a seed range concurrently and tabulates
    // solution quality against the exact oracle where it fits.
    let table = bench(&params, 0..8, &SolveOptions::default(), 12).unwrap();
    println!("{table}");
}
