//! Command-line front end: solve, oracle, verify, gen, bench, lp-dump.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use covertree::generate::{generate_instance, BudgetPolicy, GenParams};
use covertree::instance::{
    parse_instance, parse_solution, verify_solution, write_instance, write_solution, InstanceKind,
};
use covertree::runner::{
    bench, lp_dump, oracle_instance, solution_tsv, solve_instance, summary_line, RunnerError,
    SolveOptions,
};

#[derive(Debug, Parser)]
#[command(name = "covertree", version, about = "Budgeted connected coverage and Steiner tree solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Dcbc,
    Ucbc,
    Dst,
    #[value(name = "dst-bd")]
    DstBd,
    Csc,
    Gst,
}

impl From<KindArg> for InstanceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Dcbc => InstanceKind::Dcbc,
            KindArg::Ucbc => InstanceKind::Ucbc,
            KindArg::Dst => InstanceKind::Dst,
            KindArg::DstBd => InstanceKind::DstBidirected,
            KindArg::Csc => InstanceKind::Csc,
            KindArg::Gst => InstanceKind::Gst,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Tsv,
}

#[derive(Debug, Args)]
struct IoArgs {
    /// Instance file to read.
    #[arg(long)]
    input: PathBuf,
    /// Write the result here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the approximation solver matching the instance kind.
    Solve {
        /// Problem kind; must match the instance file.
        kind: KindArg,
        #[command(flatten)]
        io: IoArgs,
        /// Budget violation / guess ladder factor.
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        /// Check the per-iteration min-ratio bound against the relaxation
        /// (dst-bd only; costs one extra LP solve).
        #[arg(long)]
        certify: bool,
        /// Known eccentricity bound; skips the guess ladder (dst only).
        #[arg(long)]
        fcap: Option<f64>,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
    /// Exact brute-force optimum (small instances only).
    Oracle {
        #[command(flatten)]
        io: IoArgs,
        /// Node-count ceiling for the enumeration.
        #[arg(long, default_value_t = 16)]
        cap: usize,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
    /// Recheck a solution file against its instance.
    Verify {
        /// Instance file the solution claims to solve.
        #[arg(long)]
        input: PathBuf,
        /// Solution file to verify.
        #[arg(long)]
        solution: PathBuf,
    },
    /// Generate a random instance.
    Gen {
        kind: KindArg,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        nodes: usize,
        /// Element / terminal / group count depending on the kind.
        #[arg(long, default_value_t = 6)]
        elements: usize,
        #[arg(long, default_value_t = 0.15)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        cost_min: u64,
        #[arg(long, default_value_t = 8)]
        cost_max: u64,
        #[arg(long, default_value_t = 1)]
        prize_min: u64,
        #[arg(long, default_value_t = 9)]
        prize_max: u64,
        /// "fraction:<f>" of total cost or "oracle:<f>" of the exact cover cost.
        #[arg(long, default_value = "fraction:0.4")]
        budget_policy: String,
        /// Orientation for csc and gst instances.
        #[arg(long)]
        directed: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Solve a seed range of generated instances and tabulate quality.
    Bench {
        kind: KindArg,
        #[arg(long, default_value_t = 0)]
        seed_start: u64,
        #[arg(long, default_value_t = 20)]
        seed_end: u64,
        #[arg(long, default_value_t = 10)]
        nodes: usize,
        #[arg(long, default_value_t = 6)]
        elements: usize,
        #[arg(long, default_value_t = 0.15)]
        density: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long)]
        directed: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the flow relaxation of an instance in LP text format.
    LpDump {
        #[command(flatten)]
        io: IoArgs,
    },
}

fn read_to_string(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn emit(output: &Option<PathBuf>, text: &str, summary: Option<String>) -> Result<(), String> {
    match output {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            if let Some(s) = summary {
                println!("{s}");
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_budget_policy(text: &str) -> Result<BudgetPolicy, String> {
    let (name, value) = text
        .split_once(':')
        .ok_or_else(|| format!("budget policy '{text}' is not of the form name:fraction"))?;
    let f: f64 = value
        .parse()
        .map_err(|_| format!("budget policy fraction '{value}' is not a number"))?;
    match name {
        "fraction" => Ok(BudgetPolicy::FractionOfTotal(f)),
        "oracle" => Ok(BudgetPolicy::OracleDerived(f)),
        _ => Err(format!("unknown budget policy '{name}'")),
    }
}

fn run() -> Result<(), (i32, String)> {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve {
            kind,
            io,
            epsilon,
            certify,
            fcap,
            format,
        } => {
            let text = read_to_string(&io.input).map_err(|e| (3, e))?;
            let (file, _) = parse_instance(&text).map_err(|e| (3, e.to_string()))?;
            let expected: InstanceKind = kind.into();
            if file.kind != expected {
                return Err((
                    3,
                    format!(
                        "instance kind {} does not match subcommand {}",
                        file.kind.as_str(),
                        expected.as_str()
                    ),
                ));
            }
            let opts = SolveOptions {
                epsilon,
                certify,
                f_cap: fcap,
            };
            let sol = solve_instance(&file, &opts).map_err(runner_fail)?;
            let body = match format {
                FormatArg::Json => write_solution(&sol),
                FormatArg::Tsv => solution_tsv(&sol),
            };
            emit(&io.output, &body, Some(summary_line(&sol))).map_err(|e| (3, e))?;
            Ok(())
        }
        Command::Oracle { io, cap, format } => {
            let text = read_to_string(&io.input).map_err(|e| (3, e))?;
            let (file, _) = parse_instance(&text).map_err(|e| (3, e.to_string()))?;
            let sol = oracle_instance(&file, cap).map_err(runner_fail)?;
            let body = match format {
                FormatArg::Json => write_solution(&sol),
                FormatArg::Tsv => solution_tsv(&sol),
            };
            emit(&io.output, &body, Some(summary_line(&sol))).map_err(|e| (3, e))?;
            Ok(())
        }
        Command::Verify { input, solution } => {
            let itext = read_to_string(&input).map_err(|e| (3, e))?;
            let (file, _) = parse_instance(&itext).map_err(|e| (3, e.to_string()))?;
            let stext = read_to_string(&solution).map_err(|e| (3, e))?;
            let sol = parse_solution(&stext).map_err(|e| (3, e.to_string()))?;
            let problems = verify_solution(&file, &sol);
            if problems.is_empty() {
                println!("ok");
                Ok(())
            } else {
                for p in &problems {
                    eprintln!("{p}");
                }
                Err((3, format!("{} problem(s) found", problems.len())))
            }
        }
        Command::Gen {
            kind,
            output,
            nodes,
            elements,
            density,
            cost_min,
            cost_max,
            prize_min,
            prize_max,
            budget_policy,
            directed,
            seed,
        } => {
            let params = GenParams {
                kind: kind.into(),
                directed,
                nodes,
                elements,
                density,
                cost_range: (cost_min, cost_max),
                prize_range: (prize_min, prize_max),
                budget_policy: parse_budget_policy(&budget_policy).map_err(|e| (3, e))?,
            };
            let file = generate_instance(&params, seed).map_err(|e| (3, e.to_string()))?;
            emit(&output, &write_instance(&file), Some(format!(
                "kind={} nodes={} seed={seed}",
                file.kind.as_str(),
                file.nodes.len()
            )))
            .map_err(|e| (3, e))?;
            Ok(())
        }
        Command::Bench {
            kind,
            seed_start,
            seed_end,
            nodes,
            elements,
            density,
            epsilon,
            directed,
            output,
        } => {
            if seed_end <= seed_start {
                return Err((3, "seed range is empty".to_string()));
            }
            let params = GenParams {
                kind: kind.into(),
                directed,
                nodes,
                elements,
                density,
                ..GenParams::default()
            };
            let opts = SolveOptions {
                epsilon,
                ..SolveOptions::default()
            };
            let table = bench(&params, seed_start..seed_end, &opts, 12).map_err(runner_fail)?;
            emit(&output, &table, Some(format!("rows={}", seed_end - seed_start)))
                .map_err(|e| (3, e))?;
            Ok(())
        }
        Command::LpDump { io } => {
            let text = read_to_string(&io.input).map_err(|e| (3, e))?;
            let (file, _) = parse_instance(&text).map_err(|e| (3, e.to_string()))?;
            let dump = lp_dump(&file).map_err(runner_fail)?;
            emit(&io.output, &dump, Some("lp written".to_string())).map_err(|e| (3, e))?;
            Ok(())
        }
    }
}

fn runner_fail(e: RunnerError) -> (i32, String) {
    (e.exit_code(), e.to_string())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("covertree: {message}");
            ExitCode::from(code as u8)
        }
    }
}
