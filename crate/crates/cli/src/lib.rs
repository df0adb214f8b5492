//! `trn`: runs, benchmarks and plots projected-Newton solves from JSON configs.
//!
//! Exit codes: 0 success (converged run, completed bench), 1 solver
//! non-convergence, 2 usage or configuration error.

pub mod bench;
pub mod config;
pub mod output;
pub mod plot;
pub mod run;

use clap::{Parser, Subcommand};
use config::{read_json, resolve_path, BenchConfig, GenMeshConfig, RunConfig};
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "trn", version, about = "Projected Newton for tetrahedral hyperelasticity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a strategy-comparison matrix.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Concurrent cells (overrides the config; 0 = one per core).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Plot energy-above-minimum curves from trace.csv files.
    Plot {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
    /// Write a structured beam as a TetGen .node/.ele pair.
    GenMesh {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Sizes the global element-loop pool from `TRN_THREADS` (unset or 0: one per core).
pub fn init_threads() -> Result<(), String> {
    let threads = match std::env::var("TRN_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| format!("TRN_THREADS must be a nonnegative integer, got `{v}`"))?,
        Err(_) => 0,
    };
    // a pool may already exist when called twice in one process (tests); keep it
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

pub fn execute(cli: Cli) -> i32 {
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Bench { config, jobs } => cmd_bench(&config, jobs),
        Command::Plot { out, traces } => cmd_plot(&out, &traces),
        Command::GenMesh { config } => cmd_gen_mesh(&config),
    }
}

fn usage_error(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    EXIT_USAGE
}

fn cmd_run(path: &std::path::Path) -> i32 {
    let cfg: RunConfig = match read_json(path) {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    match run::execute_run(&cfg, path) {
        Ok(o) => {
            let s = &o.summary;
            println!(
                "{}: {} iterations, mean line search {:.2}, {:.3} s, energy {:e} -> {}",
                s.status,
                s.iterations,
                s.mean_ls_iters,
                s.total_time,
                s.final_energy,
                o.output_dir.display()
            );
            if s.status == "converged" {
                EXIT_OK
            } else {
                EXIT_NOT_CONVERGED
            }
        }
        Err(run::RunError::Solve(e)) => {
            eprintln!("error: {e}");
            EXIT_NOT_CONVERGED
        }
        Err(e) => usage_error(e),
    }
}

fn cmd_bench(path: &std::path::Path, jobs: Option<usize>) -> i32 {
    let cfg: BenchConfig = match read_json(path) {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    match bench::execute_bench(&cfg, path, jobs.unwrap_or(cfg.jobs)) {
        Ok(o) => {
            print!("{}", bench::render_table(&o.cells));
            println!("-> {}", o.output_dir.join("bench_summary.csv").display());
            EXIT_OK
        }
        Err(e) => usage_error(e),
    }
}

fn cmd_plot(out: &std::path::Path, traces: &[PathBuf]) -> i32 {
    let mut loaded = Vec::new();
    for p in traces {
        match output::read_trace_csv(p) {
            Ok(rows) => loaded.push((p, rows)),
            Err(e) => return usage_error(e),
        }
    }
    let series: Vec<plot::Series> = loaded
        .iter()
        .map(|(p, rows)| {
            // label by the run directory, which names the cell in bench outputs
            let label = p.parent().and_then(|d| d.file_name()).map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
            plot::Series { label, rows }
        })
        .collect();
    match std::fs::write(out, plot::render_svg(&series)) {
        Ok(()) => EXIT_OK,
        Err(e) => usage_error(format!("{}: {e}", out.display())),
    }
}

fn cmd_gen_mesh(path: &std::path::Path) -> i32 {
    let cfg: GenMeshConfig = match read_json(path) {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    let source = config::MeshSource::Beam { divisions: cfg.divisions, extent: cfg.extent };
    let mesh = match source.build::<f64>(path) {
        Ok(m) => m,
        Err(e) => return usage_error(e),
    };
    let base = resolve_path(path, &cfg.out);
    if let Some(dir) = base.parent() {
        if let Err(e) = std::fs::create_dir_all(dir) {
            return usage_error(format!("{}: {e}", dir.display()));
        }
    }
    match trn_core::mesh::write_tetgen(&mesh, &base) {
        Ok(()) => {
            println!("{} vertices, {} tets -> {}.node/.ele", mesh.vertex_count(), mesh.tet_count(), base.display());
            EXIT_OK
        }
        Err(e) => usage_error(e),
    }
}
