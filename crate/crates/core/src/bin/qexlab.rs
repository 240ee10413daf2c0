//! Command-line front-end for the quantum-expander laboratory.
//!
//! Exit codes: 0 pass, 1 usage/config error, 2 verification failure.

use clap::{Parser, Subcommand};
use qexlab::cli::{
    self, cmd_build_expander, cmd_dump_fourier, cmd_gap_report, cmd_run_reduction, cmd_sweep,
    cmd_verify_extractor, effective_seed, gap_report_csv, sweep_csv, verify_all,
};
use qexlab::QexError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qexlab", version, about = "Quantum expanders from finite-group Cayley graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral-gap rows for one or more group/generator instances.
    GapReport {
        /// Instance as group/generators[/mapping], e.g. pgl2:3/random:4:7
        #[arg(long = "instance", required = true)]
        instances: Vec<String>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// CSV output path
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON sibling report
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Degree-vs-gap plot data over seeded random generator sets.
    Sweep {
        #[arg(long)]
        group: String,
        /// Comma-separated quantum degrees (squares of generator counts)
        #[arg(long)]
        degrees: String,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump the Fourier transform as (row_label, element, re, im) CSV.
    DumpFourier {
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build one expander and write its JSON report.
    BuildExpander {
        #[arg(long)]
        group: String,
        #[arg(long)]
        generators: String,
        /// abelian | dihedral | pgl2 | searched (default: by family)
        #[arg(long)]
        mapping: Option<String>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sampled extractor check against a build-expander report.
    VerifyExtractor {
        #[arg(long)]
        expander: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one reduction instance file.
    RunReduction {
        /// qea-qsd | qed-formula | qsd-qed
        #[arg(long)]
        kind: String,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Run the full cross-module invariant suite.
    VerifyAll {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include the long LPS p=5, q=13 classical Ramanujan run.
        #[arg(long)]
        extended: bool,
        /// Also measure the LPS quantum gap by power iteration
        /// (wall-clock heavy).
        #[arg(long)]
        extended_quantum: bool,
    },
}

fn run(cli: Cli) -> qexlab::Result<u8> {
    match cli.command {
        Command::GapReport { instances, seed, out, out_json } => {
            let seed = effective_seed(seed);
            let doc = cmd_gap_report(&instances, seed)?;
            cli::write_text(&out, &gap_report_csv(&doc))?;
            if let Some(path) = out_json {
                cli::write_json(&path, &doc)?;
            }
            for row in &doc.rows {
                println!(
                    "{}: lambda_bar={:.6} sigma2={:.6} [{}]",
                    row.group,
                    row.lambda_bar,
                    row.sigma2,
                    if row.gap_pass { "pass" } else { "FAIL" }
                );
            }
            Ok(if doc.all_pass { 0 } else { 2 })
        }
        Command::Sweep { group, degrees, trials, seed, out } => {
            let seed = effective_seed(seed);
            let degrees = degrees
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| QexError::Config(format!("bad degree '{s}'")))
                })
                .collect::<qexlab::Result<Vec<_>>>()?;
            let doc = cmd_sweep(&group, &degrees, trials, seed)?;
            cli::write_text(&out, &sweep_csv(&doc))?;
            println!("wrote {} rows to {}", doc.rows.len(), out.display());
            Ok(0)
        }
        Command::DumpFourier { group, seed, out } => {
            let seed = effective_seed(seed);
            let csv = cmd_dump_fourier(&group, seed)?;
            cli::write_text(&out, &csv)?;
            println!("wrote {}", out.display());
            Ok(0)
        }
        Command::BuildExpander { group, generators, mapping, seed, out } => {
            let seed = effective_seed(seed);
            let report = cmd_build_expander(&group, &generators, mapping.as_deref(), seed)?;
            cli::write_json(&out, &report)?;
            println!(
                "{}: N={} D={} sigma2={:.6} good_basis_residual={:.2e}",
                report.group, report.n, report.degree_quantum, report.sigma2,
                report.good_basis_residual
            );
            Ok(0)
        }
        Command::VerifyExtractor { expander, t, trials, seed, out } => {
            let seed = effective_seed(seed);
            let report: cli::ExpanderReport = cli::read_json(&expander)?;
            let verdict = cmd_verify_extractor(&report, t, trials, seed)?;
            if let Some(path) = out {
                cli::write_json(&path, &verdict)?;
            }
            println!(
                "epsilon_bound={:.3e} worst_distance={:.3e} pass={}",
                verdict.epsilon_bound, verdict.worst_distance, verdict.pass
            );
            Ok(if verdict.pass { 0 } else { 2 })
        }
        Command::RunReduction { kind, instance, out, seed } => {
            let seed = effective_seed(seed);
            let spec: cli::InstanceSpec = cli::read_json(&instance)?;
            let doc = cmd_run_reduction(&kind, &spec, seed)?;
            cli::write_json(&out, &doc)?;
            println!("verdict: {}", doc["result"].get("verdict").or(doc["result"].get("value")).map(|v| v.to_string()).unwrap_or_default());
            Ok(0)
        }
        Command::VerifyAll { seed, out, extended, extended_quantum } => {
            let seed = effective_seed(seed);
            let summary = verify_all(seed, extended)?;
            for c in &summary.checks {
                println!("[{}] {} — {}", if c.pass { "pass" } else { "FAIL" }, c.id, c.detail);
            }
            if let Some(path) = &out {
                cli::write_json(path, &summary)?;
            }
            let mut code = if summary.all_pass { 0 } else { 2 };
            if extended_quantum {
                let (lambda_bar, sigma2) = cli::lps_quantum_gap(seed)?;
                println!("lps quantum gap: lambda_bar={lambda_bar:.6} sigma2={sigma2:.6}");
                if sigma2 > lambda_bar + 1e-7 {
                    code = 2;
                }
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                QexError::Config(_) | QexError::Io(_) | QexError::Json(_) => 1,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
