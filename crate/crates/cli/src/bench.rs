//! Strategy-comparison matrix runner.

use crate::config::{BenchCell, BenchConfig};
use crate::output::{fmt_f64, OutputError, RunSummary};
use crate::run::{execute_run, RunError};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub const SUMMARY_HEADER: [&str; 12] = [
    "mesh",
    "scenario",
    "poisson",
    "strategy",
    "status",
    "iters",
    "mean_ls_iters",
    "total_time",
    "mean_iter_time",
    "pct_time_direction",
    "pct_time_linesearch",
    "pct_time_ratio",
];

pub const SPEEDUP_HEADER: [&str; 8] = ["mesh", "scenario", "poisson", "strategy", "status", "iters", "adaptive_iters", "speedup"];

#[derive(Debug)]
pub struct CellResult {
    pub cell: BenchCell,
    pub outcome: Result<RunSummary, RunError>,
}

impl CellResult {
    pub fn status(&self) -> &str {
        match &self.outcome {
            Ok(s) => &s.status,
            Err(_) => "error",
        }
    }

    pub fn iters(&self) -> Option<usize> {
        self.outcome.as_ref().ok().map(|s| s.iterations)
    }
}

#[derive(Debug)]
pub struct BenchOutcome {
    pub output_dir: PathBuf,
    pub cells: Vec<CellResult>,
}

/// Runs every cell with up to `jobs` concurrent workers and writes
/// `bench_summary.csv` and `speedup.csv` in matrix order.
///
/// Cell failures are recorded in their row; only an invalid matrix or an
/// unwritable summary is an error.
pub fn execute_bench(config: &BenchConfig, config_path: &Path, jobs: usize) -> Result<BenchOutcome, RunError> {
    config.validate()?;
    let cells = config.cells();
    let jobs = match jobs {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        j => j,
    }
    .min(cells.len());

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<RunSummary, RunError>>>> = cells.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(i) else { break };
                let outcome = execute_run(&cell.run, config_path).map(|o| o.summary);
                if let Err(e) = &outcome {
                    eprintln!("cell {} ({}, {}, nu {}, {}): {e}", cell.index, cell.mesh, cell.scenario, cell.poisson, cell.strategy);
                }
                *slots[i].lock().unwrap() = Some(outcome);
            });
        }
    });
    let results: Vec<CellResult> = cells
        .into_iter()
        .zip(slots)
        .map(|(cell, slot)| CellResult { cell, outcome: slot.into_inner().unwrap().expect("every cell runs") })
        .collect();

    let output_dir = crate::config::resolve_path(config_path, &config.output_dir);
    std::fs::create_dir_all(&output_dir).map_err(|source| RunError::CreateDir { path: output_dir.clone(), source })?;
    write_summary_csv(&output_dir.join("bench_summary.csv"), &results)?;
    write_speedup_csv(&output_dir.join("speedup.csv"), &results)?;
    Ok(BenchOutcome { output_dir, cells: results })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv { path: path.into(), source }
}

fn write_summary_csv(path: &Path, results: &[CellResult]) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(SUMMARY_HEADER).map_err(csv_err(path))?;
    for r in results {
        let c = &r.cell;
        let mut row = vec![c.mesh.clone(), c.scenario.clone(), c.poisson.to_string(), c.strategy.clone(), r.status().to_string()];
        match &r.outcome {
            Ok(s) => {
                let pct = |t: f64| if s.total_time > 0.0 { 100.0 * t / s.total_time } else { 0.0 };
                row.extend([
                    s.iterations.to_string(),
                    fmt_f64(s.mean_ls_iters),
                    fmt_f64(s.total_time),
                    fmt_f64(s.mean_iter_time),
                    fmt_f64(pct(s.phase_times.direction)),
                    fmt_f64(pct(s.phase_times.line_search)),
                    fmt_f64(pct(s.phase_times.ratio)),
                ]);
            }
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 7)),
        }
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| OutputError::Io { path: path.into(), source })
}

/// `iters(strategy) / iters(adaptive)` within each (mesh, scenario, poisson) group.
fn write_speedup_csv(path: &Path, results: &[CellResult]) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(SPEEDUP_HEADER).map_err(csv_err(path))?;
    let key = |r: &CellResult| (r.cell.mesh.clone(), r.cell.scenario.clone(), r.cell.poisson.to_bits());
    for r in results {
        let adaptive = results.iter().find(|a| key(a) == key(r) && a.cell.strategy == "adaptive");
        let (Some(adaptive), Some(iters)) = (adaptive, r.iters()) else { continue };
        let adaptive_iters = adaptive.iters();
        let speedup = match adaptive_iters {
            Some(a) if a > 0 && adaptive.status() == "converged" => fmt_f64(iters as f64 / a as f64),
            _ => String::new(),
        };
        w.write_record([
            r.cell.mesh.clone(),
            r.cell.scenario.clone(),
            r.cell.poisson.to_string(),
            r.cell.strategy.clone(),
            r.status().to_string(),
            iters.to_string(),
            adaptive_iters.map(|a| a.to_string()).unwrap_or_default(),
            speedup,
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| OutputError::Io { path: path.into(), source })
}

/// Fixed-width table for the terminal.
pub fn render_table(results: &[CellResult]) -> String {
    let mut out = format!(
        "{:<16} {:<14} {:>7} {:<16} {:<22} {:>6} {:>8} {:>10}\n",
        "mesh", "scenario", "poisson", "strategy", "status", "iters", "mean_ls", "time[s]"
    );
    for r in results {
        let (iters, ls, time) = match &r.outcome {
            Ok(s) => (s.iterations.to_string(), format!("{:.2}", s.mean_ls_iters), format!("{:.3}", s.total_time)),
            Err(_) => ("-".into(), "-".into(), "-".into()),
        };
        out += &format!(
            "{:<16} {:<14} {:>7} {:<16} {:<22} {:>6} {:>8} {:>10}\n",
            r.cell.mesh,
            r.cell.scenario,
            r.cell.poisson,
            r.cell.strategy,
            r.status(),
            iters,
            ls,
            time
        );
    }
    out
}
