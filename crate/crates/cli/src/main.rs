//! `cubiq` — compile Max 3-SAT (or cubic polynomial) instances into compact
//! QUBO models, solve them, and report transformation statistics.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cubiq::pipeline::{
    run_pipeline, summarize, ExportFormat, InputKind, InstanceStats, MMode, PipelineConfig,
    SolverChoice,
};

#[derive(Parser, Debug)]
#[command(name = "cubiq", version, about)]
struct Args {
    /// Input files (DIMACS CNF or cubic polynomial text).
    #[arg(long = "input", num_args = 1.., required = true)]
    input: Vec<PathBuf>,

    /// Input kind: `cnf` or `poly`.
    #[arg(long, default_value = "cnf", value_parser = parse_kind)]
    kind: InputKind,

    /// Penalty mode: `eq3`, `oracle` (desk scale only), or `fixed:<int>`.
    #[arg(long = "m-mode", default_value = "eq3", value_parser = parse_m_mode)]
    m_mode: MMode,

    /// Solver: `tabu` or `exact` (exhaustive, at most 30 variables).
    #[arg(long, default_value = "tabu", value_parser = parse_solver)]
    solver: SolverChoice,

    /// Seed for the heuristic solver.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Wall-clock limit per instance in seconds (default 30 when no
    /// iteration budget is given).
    #[arg(long = "time-limit")]
    time_limit: Option<f64>,

    /// Iteration budget per instance; makes runs bit-reproducible.
    #[arg(long = "iters")]
    iters: Option<u64>,

    /// Stop as soon as every clause is satisfied.
    #[arg(long = "target-stop")]
    target_stop: bool,

    /// Write the compiled model(s) here: a file for a single input, a
    /// directory otherwise.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Model export format: `qubo` or `json`.
    #[arg(long, default_value = "qubo", value_parser = parse_format)]
    format: ExportFormat,

    /// Write per-instance statistics plus aggregate rows as CSV.
    #[arg(long = "stats")]
    stats: Option<PathBuf>,

    /// Transform and report only; skip solving.
    #[arg(long = "stats-only")]
    stats_only: bool,
}

fn parse_kind(s: &str) -> Result<InputKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_m_mode(s: &str) -> Result<MMode, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_solver(s: &str) -> Result<SolverChoice, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_format(s: &str) -> Result<ExportFormat, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn print_row(stats: &InstanceStats) {
    let satisfied = stats
        .pct_satisfied
        .map(|p| format!("{p:.2}%"))
        .unwrap_or_else(|| "-".into());
    println!(
        "{}: n={} m={} cubic={} forced={} residual={} red_terms={:.2}% red_pairs={:.2}% aux={} M_LB={} nodes={} edges={} satisfied={} elapsed={:.3}s",
        stats.name,
        stats.n,
        stats.m,
        stats.cubic_terms,
        stats.forced_pairs,
        stats.residual_ip,
        stats.pct_reduction_terms,
        stats.pct_reduction_pairs,
        stats.aux_count,
        stats.m_lb,
        stats.q_nodes,
        stats.q_edges,
        satisfied,
        stats.elapsed,
    );
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut cfg = PipelineConfig {
        inputs: args.input,
        kind: args.kind,
        m_mode: args.m_mode,
        solver: args.solver,
        seed: args.seed,
        time_limit: args.time_limit,
        iterations: args.iters,
        target_stop: args.target_stop,
        out: args.out,
        format: args.format,
        stats_path: args.stats,
        stats_only: args.stats_only,
    };
    if cfg.time_limit.is_none() && cfg.iterations.is_none() {
        cfg.time_limit = Some(30.0);
    }

    let results = run_pipeline(&cfg);
    let mut rows = Vec::new();
    let mut failures = 0usize;
    for result in &results {
        match result {
            Ok(stats) => {
                print_row(stats);
                rows.push(stats.clone());
            }
            Err(e) => {
                eprintln!("error: {e}");
                failures += 1;
            }
        }
    }
    if rows.len() > 1 {
        println!("\naggregate ({} instances):", rows.len());
        println!("{:<22} {:>12} {:>12} {:>12} {:>12}", "column", "min", "max", "mean", "stdev");
        for col in summarize(&rows) {
            if col.count == 0 {
                continue;
            }
            println!(
                "{:<22} {:>12.4} {:>12.4} {:>12.4} {:>12.4}",
                col.column, col.min, col.max, col.mean, col.stdev
            );
        }
    }
    if failures > 0 {
        eprintln!("{failures} instance(s) failed");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
