//! Command-line entry points: `mesh`, `simulate`, `bench`, `validate`.
//!
//! Exit codes: 0 on success, 1 on a usage error (unknown flag, missing
//! argument), 2 on a runtime failure (bad input file, solver breakdown,
//! non-conforming mesh).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::bench::{run_bench, write_bench_csv};
use crate::cpgraph::{load_mesh, save_mesh, validate_conformity};
use crate::simulation::{load_scenario, run_scenario};
use crate::terrain::{generate_mesh, RefinementConfig, TerrainRaster};
use crate::timestepper::format_duration;
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "damwave",
    version,
    about = "Adaptive-mesh dam-break flooding simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an adaptive mesh from an elevation raster.
    Mesh {
        /// Elevation raster (ESRI ASCII grid).
        #[arg(long)]
        raster: PathBuf,
        /// Largest tolerated elevation error, meters.
        #[arg(long)]
        tolerance: f64,
        /// Mesh file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario end to end, writing gauges, snapshots, and a summary.
    Simulate {
        /// Scenario file.
        #[arg(long)]
        scenario: PathBuf,
        /// Directory receiving all outputs (created if absent).
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Time the pipeline across worker-thread counts and write a CSV.
    Bench {
        /// Scenario file.
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated thread counts, ascending, starting at 1.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        threads: Vec<usize>,
        /// Time steps per configuration.
        #[arg(long, default_value_t = 20)]
        iterations: usize,
        /// CSV file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a mesh for conformity violations.
    Validate {
        /// Mesh file to check.
        #[arg(long)]
        mesh: PathBuf,
    },
}

/// Parses `argv` and runs the chosen subcommand; returns the process exit
/// code. Never panics on bad input.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Mesh {
            raster,
            tolerance,
            out,
        } => {
            let raster = TerrainRaster::load(&raster)?;
            let config = RefinementConfig {
                tolerance,
                ..RefinementConfig::default()
            };
            let mesh = generate_mesh(&raster, &config)?;
            save_mesh(&mesh, &out)?;
            println!(
                "wrote {} triangles ({} vertices, {} edges) to {}",
                mesh.triangle_count(),
                mesh.vertex_count(),
                mesh.edge_count(),
                out.display()
            );
            Ok(0)
        }
        Command::Simulate { scenario, out_dir } => {
            let scenario = load_scenario(&scenario)?;
            let summary = run_scenario(&scenario, &out_dir)?;
            println!(
                "simulated {} steps of {} s = {}",
                summary.final_state.step,
                scenario.tau,
                format_duration(summary.final_state.t)
            );
            for (name, mean) in &summary.region_means {
                println!("region {name}: mean level {mean} m");
            }
            let t = &summary.timing;
            println!(
                "timing: mesh loading {:.3} s, setup {:.3} s, assembly {:.3} s, \
                 solver {:.3} s, step update {:.3} s, file output {:.3} s",
                t.mesh_loading, t.setup, t.assembly, t.solver, t.step_update, t.file_output
            );
            println!("outputs in {}", out_dir.display());
            Ok(0)
        }
        Command::Bench {
            scenario,
            threads,
            iterations,
            out,
        } => {
            let scenario = load_scenario(&scenario)?;
            if iterations == 0 {
                return Err(Error::InvalidArgument(
                    "iterations must be positive".to_string(),
                ));
            }
            let report = run_bench(&scenario, &threads, iterations)?;
            let mut w = BufWriter::new(File::create(&out)?);
            write_bench_csv(&report, &mut w)?;
            w.flush()?;
            for row in &report.rows {
                println!(
                    "{} threads: total {:.3} s, speedup {:.2}, efficiency {:.2}",
                    row.record.threads, row.total, row.speedup, row.efficiency
                );
            }
            println!("wrote {}", out.display());
            Ok(0)
        }
        Command::Validate { mesh } => {
            let mesh = load_mesh(&mesh, crate::cpgraph::DEFAULT_RADIUS)?;
            let report = validate_conformity(&mesh);
            let n = report.violations.len();
            println!("{n} violations");
            for v in &report.violations {
                println!("  {v}");
            }
            // A non-conforming mesh is unusable downstream: runtime error.
            Ok(if n == 0 { 0 } else { 2 })
        }
    }
}
