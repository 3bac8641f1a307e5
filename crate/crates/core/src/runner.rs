//! Dispatch layer between instance files and the solvers; everything the
//! command-line binary does lives here so it stays thin and testable.

use std::collections::BTreeSet;

use rayon::prelude::*;
use thiserror::Error;

use crate::bidirected::{solve_dst_bidirected, BidirectedError};
use crate::coverage::{solve_dcbc, solve_ucbc, CoverageError, RunReport};
use crate::dst::{solve_dst, DstError};
use crate::generate::{generate_instance, GenError, GenParams};
use crate::graph::GraphError;
use crate::instance::{
    instance_digest, typed_from_file, InstanceFile, InstanceKind, ParseError, SolutionFile,
    TypedInstance, FORMAT_VERSION,
};
use crate::lp::{build_dcbc_lp, build_dst_lp, dump_lp_format, LpError};
use crate::oracle::{
    brute_force_csc, brute_force_dcbc, brute_force_dst, OracleError, DEFAULT_CAP,
};
use crate::coverage::augment_graph;
use crate::reductions::{solve_csc, solve_gst, ReductionError};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Dst(#[from] DstError),
    #[error(transparent)]
    Bidirected(#[from] BidirectedError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("{0}")]
    Usage(String),
}

impl RunnerError {
    /// 2 = provably infeasible input, 3 = validation or usage failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Coverage(CoverageError::InfeasibleBudget { .. })
            | RunnerError::Dst(DstError::UnreachableTerminal(_))
            | RunnerError::Bidirected(BidirectedError::UnreachableTerminal(_))
            | RunnerError::Bidirected(BidirectedError::Disconnected)
            | RunnerError::Reduction(ReductionError::UncoverableElement(_))
            | RunnerError::Reduction(ReductionError::AllGuessesFailed { .. })
            | RunnerError::Oracle(OracleError::Infeasible)
            | RunnerError::Lp(LpError::Infeasible)
            | RunnerError::Graph(GraphError::RootOverBudget { .. }) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub epsilon: f64,
    pub certify: bool,
    pub f_cap: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            epsilon: 1.0,
            certify: false,
            f_cap: None,
        }
    }
}

fn coverage_solution(
    file: &InstanceFile,
    report: &RunReport,
) -> SolutionFile {
    SolutionFile {
        format_version: FORMAT_VERSION,
        kind: file.kind,
        instance_digest: instance_digest(file),
        tree_nodes: report.tree_nodes.clone(),
        tree_arcs: report.tree_arcs.clone(),
        cost: report.cost,
        prize: Some(report.prize),
        covered_elements: Some(report.covered_elements.clone()),
        epsilon: Some(report.epsilon),
        lp_opt: Some(report.lp_opt),
        budget_violation: Some(report.budget_violation),
        stats: serde_json::json!({
            "chosen_branch": report.chosen_branch,
            "stages": report.stages,
        }),
    }
}

/// Solves an instance file with the solver its kind selects.
pub fn solve_instance(
    file: &InstanceFile,
    opts: &SolveOptions,
) -> Result<SolutionFile, RunnerError> {
    let typed = typed_from_file(file)?;
    match typed {
        TypedInstance::Coverage(inst) => {
            let report = if inst.directed {
                solve_dcbc(&inst, opts.epsilon)?
            } else {
                solve_ucbc(&inst, opts.epsilon)?
            };
            Ok(coverage_solution(file, &report))
        }
        TypedInstance::Steiner(inst) => {
            let out = solve_dst(&inst, opts.epsilon, opts.f_cap)?;
            Ok(SolutionFile {
                format_version: FORMAT_VERSION,
                kind: file.kind,
                instance_digest: instance_digest(file),
                tree_nodes: out.tree.nodes.iter().copied().collect(),
                tree_arcs: out.tree.arcs.iter().copied().collect(),
                cost: out.tree.total_cost,
                prize: None,
                covered_elements: None,
                epsilon: Some(opts.epsilon),
                lp_opt: Some(out.report.lp_opt),
                budget_violation: None,
                stats: serde_json::to_value(&out.report).expect("report serializes"),
            })
        }
        TypedInstance::BidirectedSteiner(inst) => {
            let out = solve_dst_bidirected(&inst, opts.certify)?;
            Ok(SolutionFile {
                format_version: FORMAT_VERSION,
                kind: file.kind,
                instance_digest: instance_digest(file),
                tree_nodes: out.tree.nodes.iter().copied().collect(),
                tree_arcs: out.tree.arcs.iter().copied().collect(),
                cost: out.tree.total_cost,
                prize: None,
                covered_elements: None,
                epsilon: None,
                lp_opt: out.report.lp_opt,
                budget_violation: None,
                stats: serde_json::to_value(&out.report).expect("report serializes"),
            })
        }
        TypedInstance::Csc(inst) => {
            let out = solve_csc(&inst, opts.epsilon)?;
            let (covered, _) = inst.coverage_of(out.tree.nodes.iter());
            Ok(SolutionFile {
                format_version: FORMAT_VERSION,
                kind: file.kind,
                instance_digest: instance_digest(file),
                tree_nodes: out.tree.nodes.iter().copied().collect(),
                tree_arcs: out.tree.arcs.iter().copied().collect(),
                cost: out.tree.total_cost,
                prize: None,
                covered_elements: Some(covered.into_iter().collect()),
                epsilon: Some(opts.epsilon),
                lp_opt: None,
                budget_violation: None,
                stats: serde_json::to_value(&out.trace).expect("trace serializes"),
            })
        }
        TypedInstance::Gst(inst) => {
            let out = solve_gst(&inst, opts.epsilon)?;
            Ok(SolutionFile {
                format_version: FORMAT_VERSION,
                kind: file.kind,
                instance_digest: instance_digest(file),
                tree_nodes: out.tree.nodes.iter().copied().collect(),
                tree_arcs: out.tree.arcs.iter().copied().collect(),
                cost: out.tree.total_cost,
                prize: None,
                covered_elements: None,
                epsilon: Some(opts.epsilon),
                lp_opt: None,
                budget_violation: None,
                stats: serde_json::to_value(&out.trace).expect("trace serializes"),
            })
        }
    }
}

/// Exact solution via the brute-force oracles; caps guard the enumeration.
pub fn oracle_instance(file: &InstanceFile, cap: usize) -> Result<SolutionFile, RunnerError> {
    let typed = typed_from_file(file)?;
    let (tree, prize, covered): (crate::graph::OutTree, Option<f64>, Option<Vec<usize>>) =
        match typed {
            TypedInstance::Coverage(inst) => {
                let opt = brute_force_dcbc(&inst, cap)?;
                let (covered, _) = inst.coverage_of(opt.tree.nodes.iter());
                (opt.tree, Some(opt.prize), Some(covered.into_iter().collect()))
            }
            TypedInstance::Steiner(inst) | TypedInstance::BidirectedSteiner(inst) => {
                let opt = brute_force_dst(&inst, cap)?;
                (opt.tree, None, None)
            }
            TypedInstance::Csc(inst) => {
                let opt = brute_force_csc(&inst, cap)?;
                let (covered, _) = inst.coverage_of(opt.tree.nodes.iter());
                (opt.tree, None, Some(covered.into_iter().collect()))
            }
            TypedInstance::Gst(inst) => {
                let csc = crate::reductions::gst_to_csc(&inst);
                let opt = brute_force_csc(&csc, cap)?;
                (opt.tree, None, None)
            }
        };
    Ok(SolutionFile {
        format_version: FORMAT_VERSION,
        kind: file.kind,
        instance_digest: instance_digest(file),
        tree_nodes: tree.nodes.iter().copied().collect(),
        tree_arcs: tree.arcs.iter().copied().collect(),
        cost: tree.total_cost,
        prize,
        covered_elements: covered,
        epsilon: None,
        lp_opt: None,
        budget_violation: None,
        stats: serde_json::json!({"solver": "oracle", "cap": cap}),
    })
}

/// Text dump of the relaxation an instance induces.
pub fn lp_dump(file: &InstanceFile) -> Result<String, RunnerError> {
    let typed = typed_from_file(file)?;
    match typed {
        TypedInstance::Coverage(inst) | TypedInstance::Csc(inst) => {
            let pruned = crate::graph::b_proper_prune(
                &inst.graph,
                inst.root,
                if inst.budget > 0.0 || matches!(file.kind, InstanceKind::Dcbc | InstanceKind::Ucbc)
                {
                    inst.budget
                } else {
                    f64::INFINITY
                },
            )?;
            let pruned_inst = crate::coverage::CoverageInstance {
                graph: pruned,
                ..inst
            };
            let aug = augment_graph(&pruned_inst)?;
            let lp = build_dcbc_lp(&aug)?;
            Ok(dump_lp_format(&lp, file.kind.as_str()))
        }
        TypedInstance::Steiner(inst) | TypedInstance::BidirectedSteiner(inst) => {
            let lp = build_dst_lp(&inst)?;
            Ok(dump_lp_format(&lp, file.kind.as_str()))
        }
        TypedInstance::Gst(inst) => {
            let csc = crate::reductions::gst_to_csc(&inst);
            let aug = augment_graph(&csc)?;
            let lp = build_dcbc_lp(&aug)?;
            Ok(dump_lp_format(&lp, file.kind.as_str()))
        }
    }
}

/// One bench row: per-seed metrics in TSV column order.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub seed: u64,
    pub nodes: usize,
    pub elements: usize,
    pub budget: Option<f64>,
    pub lp_opt: Option<f64>,
    pub value: f64,
    pub oracle: Option<f64>,
    pub ratio: Option<f64>,
    pub violation: Option<f64>,
}

pub const BENCH_HEADER: &str =
    "seed\tkind\tnodes\telements\tbudget\tlp_opt\tvalue\toracle\tratio\tviolation";

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v}"))
}

/// Runs the solver over a seed range and tabulates outcome quality; rows are
/// computed concurrently and emitted in seed order.
pub fn bench(
    params: &GenParams,
    seeds: std::ops::Range<u64>,
    opts: &SolveOptions,
    oracle_cap: usize,
) -> Result<String, RunnerError> {
    let seed_list: Vec<u64> = seeds.collect();
    let rows: Result<Vec<(u64, String)>, String> = seed_list
        .par_iter()
        .map(|&seed| {
            let row = bench_one(params, seed, opts, oracle_cap).map_err(|e| e.to_string())?;
            let minimization = matches!(
                params.kind,
                InstanceKind::Dst | InstanceKind::DstBidirected | InstanceKind::Csc | InstanceKind::Gst
            );
            let ratio = match (row.oracle, minimization) {
                (Some(o), true) if o > 0.0 => Some(row.value / o),
                (Some(o), false) if row.value > 0.0 => Some(o / row.value),
                _ => None,
            };
            let line = format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                seed,
                params.kind.as_str(),
                row.nodes,
                row.elements,
                fmt_opt(row.budget),
                fmt_opt(row.lp_opt),
                row.value,
                fmt_opt(row.oracle),
                fmt_opt(ratio),
                fmt_opt(row.violation),
            );
            Ok((seed, line))
        })
        .collect();
    let mut rows = rows.map_err(RunnerError::Usage)?;
    rows.sort_by_key(|(seed, _)| *seed);
    let mut out = String::from(BENCH_HEADER);
    out.push('\n');
    for (_, line) in rows {
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

fn bench_one(
    params: &GenParams,
    seed: u64,
    opts: &SolveOptions,
    oracle_cap: usize,
) -> Result<BenchRow, RunnerError> {
    let file = generate_instance(params, seed)?;
    let sol = solve_instance(&file, opts)?;
    let maximization = matches!(params.kind, InstanceKind::Dcbc | InstanceKind::Ucbc);
    let value = if maximization {
        sol.prize.unwrap_or(0.0)
    } else {
        sol.cost
    };
    let oracle = if file.nodes.len() <= oracle_cap {
        match oracle_instance(&file, oracle_cap) {
            Ok(o) => Some(if maximization { o.prize.unwrap_or(0.0) } else { o.cost }),
            Err(RunnerError::Oracle(OracleError::Infeasible)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(BenchRow {
        seed,
        nodes: file.nodes.len(),
        elements: file.elements.len().max(file.groups.len()).max(file.terminals.len()),
        budget: file.budget,
        lp_opt: sol.lp_opt,
        value,
        oracle,
        ratio: None,
        violation: sol.budget_violation,
    })
}

/// Summary line printed by the CLI after a solve; deliberately stable.
pub fn summary_line(sol: &SolutionFile) -> String {
    let mut parts = vec![
        format!("kind={}", sol.kind.as_str()),
        format!("nodes={}", sol.tree_nodes.len()),
        format!("cost={}", sol.cost),
    ];
    if let Some(p) = sol.prize {
        parts.push(format!("prize={p}"));
    }
    if let Some(v) = sol.budget_violation {
        parts.push(format!("violation={v}"));
    }
    if let Some(l) = sol.lp_opt {
        parts.push(format!("lp_opt={l}"));
    }
    parts.join(" ")
}

/// TSV rendering of a solution for `--format tsv`.
pub fn solution_tsv(sol: &SolutionFile) -> String {
    let nodes: Vec<String> = sol.tree_nodes.iter().map(|v| v.to_string()).collect();
    format!(
        "kind\tcost\tprize\tlp_opt\tviolation\tnodes\n{}\t{}\t{}\t{}\t{}\t{}\n",
        sol.kind.as_str(),
        sol.cost,
        fmt_opt(sol.prize),
        fmt_opt(sol.lp_opt),
        fmt_opt(sol.budget_violation),
        nodes.join(","),
    )
}

/// Default oracle cap re-exported for the CLI.
pub fn default_oracle_cap() -> usize {
    DEFAULT_CAP
}

/// Terminal ids of a steiner instance file (used by examples and tests).
pub fn terminal_set(file: &InstanceFile) -> BTreeSet<usize> {
    file.terminals.iter().copied().collect()
}
