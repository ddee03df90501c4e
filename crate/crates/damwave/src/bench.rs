//! Performance harness: per-category wall-clock timing, speedup, and
//! efficiency across worker-thread counts.
//!
//! One benchmark run executes the same scenario once per requested thread
//! count, timing six pipeline categories — mesh loading, setup, assembly,
//! solver, step update, file output — with a monotonic clock. Every
//! configuration repeats three times and reports the per-category median,
//! which damps scheduler noise on small problems. The "solver" category
//! includes preconditioner application, not just the iteration loop.
//!
//! Before any timing is published, the harness verifies that the final
//! simulation state is identical across all thread counts (within 1e-12
//! per component). A mismatch aborts with [`Error::Nondeterminism`]: a
//! benchmark of an irreproducible computation measures nothing.

use std::io::Write;

use crate::simulation::{prepare, record_gauges, GaugeSeries, Scenario};
use crate::timestepper::{run_transient, TransientConfig};
use crate::{Error, Result};

/// Repetitions per thread-count configuration; the median is reported.
const REPETITIONS: usize = 3;

/// Timing category names, in report order.
pub const CATEGORY_NAMES: [&str; 6] = [
    "mesh_loading",
    "setup",
    "assembly",
    "solver",
    "step_update",
    "file_output",
];

/// Wall-clock seconds per pipeline category for one configuration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TimingRecord {
    /// Worker threads the configuration ran with.
    pub threads: usize,
    /// Time steps executed.
    pub iterations: usize,
    /// Reading or generating the mesh.
    pub mesh_loading: f64,
    /// Index maps, operators, gauges, initial state.
    pub setup: f64,
    /// Per-step operator and right-hand-side generation.
    pub assembly: f64,
    /// Per-step linear solves (including preconditioner application).
    pub solver: f64,
    /// Per-step state-update arithmetic.
    pub step_update: f64,
    /// Gauge recording and snapshot writing.
    pub file_output: f64,
}

impl TimingRecord {
    /// The six category values in [`CATEGORY_NAMES`] order.
    pub fn categories(&self) -> [f64; 6] {
        [
            self.mesh_loading,
            self.setup,
            self.assembly,
            self.solver,
            self.step_update,
            self.file_output,
        ]
    }

    /// Sum of all categories.
    pub fn total(&self) -> f64 {
        self.categories().iter().sum()
    }

    /// All categories must be finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in CATEGORY_NAMES.iter().zip(self.categories()) {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "timing category {name} is {value}"
                )));
            }
        }
        Ok(())
    }
}

/// One thread count's line in a scaling report.
#[derive(Debug, Clone)]
pub struct BenchRow {
    /// Median per-category times.
    pub record: TimingRecord,
    /// Total time: sum of the median categories.
    pub total: f64,
    /// T₁ / T_p.
    pub speedup: f64,
    /// Speedup divided by the thread count.
    pub efficiency: f64,
    /// Category shares of the total; sums to 1.
    pub fractions: [f64; 6],
}

/// Scaling across thread counts, first row the single-thread baseline.
#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub rows: Vec<BenchRow>,
}

impl ScalingReport {
    /// Derives speedups, efficiencies, and category fractions from raw
    /// records. The first record is the baseline (its speedup is exactly
    /// 1 by construction).
    pub fn from_records(records: Vec<TimingRecord>) -> Result<ScalingReport> {
        if records.is_empty() {
            return Err(Error::InvalidArgument(
                "a scaling report needs at least one record".to_string(),
            ));
        }
        let mut rows = Vec::with_capacity(records.len());
        let mut t1 = 0.0;
        for (k, record) in records.into_iter().enumerate() {
            record.validate()?;
            let total = record.total();
            if !(total > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "configuration with {} threads measured zero total time",
                    record.threads
                )));
            }
            if k == 0 {
                t1 = total;
            }
            let speedup = t1 / total;
            let categories = record.categories();
            rows.push(BenchRow {
                record,
                total,
                speedup,
                efficiency: speedup / record.threads as f64,
                fractions: categories.map(|c| c / total),
            });
        }
        Ok(ScalingReport { rows })
    }
}

/// Writes the report as CSV:
/// `threads,mesh_loading,setup,assembly,solver,step_update,file_output,total,speedup,efficiency`.
pub fn write_bench_csv<W: Write>(report: &ScalingReport, w: &mut W) -> Result<()> {
    writeln!(
        w,
        "threads,mesh_loading,setup,assembly,solver,step_update,file_output,total,speedup,efficiency"
    )?;
    for row in &report.rows {
        let r = &row.record;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.threads,
            r.mesh_loading,
            r.setup,
            r.assembly,
            r.solver,
            r.step_update,
            r.file_output,
            row.total,
            row.speedup,
            row.efficiency
        )?;
    }
    Ok(())
}

/// One timed pipeline execution under the current thread pool. Returns
/// the record and the final level field (the determinism probe).
fn bench_once(scenario: &Scenario, iterations: usize, threads: usize) -> Result<(TimingRecord, Vec<f64>)> {
    let prep = prepare(scenario)?;
    let mut series: Vec<GaugeSeries> = prep
        .gauges
        .iter()
        .map(|g| GaugeSeries::new(g.name.clone()))
        .collect();
    let gauges = &prep.gauges;
    let config = TransientConfig {
        assembler: &prep.assembler,
        mass: &prep.mass,
        damping: &prep.damping,
        constants: &scenario.constants,
        params: prep.params,
        tau: scenario.tau,
        n_steps: iterations,
        picard_sweeps: scenario.picard_sweeps,
        output_cadence: 0, // no snapshots while timing
        solver_tol: scenario.solver_tol,
    };
    let result = run_transient(
        prep.state0,
        &config,
        |state| record_gauges(state, gauges, &mut series),
        |_| Ok(()),
    )?;
    let record = TimingRecord {
        threads,
        iterations,
        mesh_loading: prep.mesh_loading,
        setup: prep.setup,
        assembly: result.records.iter().map(|r| r.assembly).sum(),
        solver: result.records.iter().map(|r| r.solver).sum(),
        step_update: result.records.iter().map(|r| r.step_update).sum(),
        file_output: result.records.iter().map(|r| r.file_output).sum(),
    };
    Ok((record, result.state.u))
}

/// Per-category median of an odd number of repetitions.
fn median_record(reps: &[TimingRecord], threads: usize, iterations: usize) -> TimingRecord {
    let med = |pick: fn(&TimingRecord) -> f64| -> f64 {
        let mut values: Vec<f64> = reps.iter().map(pick).collect();
        values.sort_by(|a, b| a.partial_cmp(b).expect("validated finite"));
        values[values.len() / 2]
    };
    TimingRecord {
        threads,
        iterations,
        mesh_loading: med(|r| r.mesh_loading),
        setup: med(|r| r.setup),
        assembly: med(|r| r.assembly),
        solver: med(|r| r.solver),
        step_update: med(|r| r.step_update),
        file_output: med(|r| r.file_output),
    }
}

/// Runs the scenario for `iterations` steps under each thread count and
/// reports scaling. Thread counts must be strictly ascending and start at
/// 1 (the baseline all speedups divide by). The determinism gate runs
/// before the report is built.
pub fn run_bench(
    scenario: &Scenario,
    thread_counts: &[usize],
    iterations: usize,
) -> Result<ScalingReport> {
    if thread_counts.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one thread count is required".to_string(),
        ));
    }
    if thread_counts[0] != 1 {
        return Err(Error::InvalidArgument(format!(
            "the first thread count must be 1 (the speedup baseline), got {}",
            thread_counts[0]
        )));
    }
    for pair in thread_counts.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidArgument(format!(
                "thread counts must be strictly ascending, got {} after {}",
                pair[1], pair[0]
            )));
        }
    }
    if iterations == 0 {
        return Err(Error::InvalidArgument(
            "iterations must be positive".to_string(),
        ));
    }
    scenario.validate()?;

    let mut probes: Vec<Vec<f64>> = Vec::with_capacity(thread_counts.len());
    let mut records = Vec::with_capacity(thread_counts.len());
    for &threads in thread_counts {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        let mut reps = Vec::with_capacity(REPETITIONS);
        let mut probe = None;
        for rep in 0..REPETITIONS {
            let (record, state) = pool.install(|| bench_once(scenario, iterations, threads))?;
            if rep == 0 {
                probe = Some(state);
            }
            reps.push(record);
        }
        probes.push(probe.expect("at least one repetition ran"));
        records.push(median_record(&reps, threads, iterations));
    }

    let base = &probes[0];
    for (k, probe) in probes.iter().enumerate().skip(1) {
        let max_diff = base
            .iter()
            .zip(probe)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if !(max_diff <= 1e-12) {
            return Err(Error::Nondeterminism(format!(
                "final state with {} threads deviates from the {}-thread baseline \
                 by {max_diff:.3e} (limit 1e-12)",
                thread_counts[k], thread_counts[0]
            )));
        }
    }

    ScalingReport::from_records(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::TerrainRaster;

    fn record(threads: usize, cats: [f64; 6]) -> TimingRecord {
        TimingRecord {
            threads,
            iterations: 20,
            mesh_loading: cats[0],
            setup: cats[1],
            assembly: cats[2],
            solver: cats[3],
            step_update: cats[4],
            file_output: cats[5],
        }
    }

    #[test]
    fn report_derives_speedup_efficiency_and_fractions() {
        let report = ScalingReport::from_records(vec![
            record(1, [1.0, 1.0, 4.0, 2.0, 1.0, 1.0]), // total 10
            record(2, [1.0, 0.5, 2.0, 1.0, 0.3, 0.2]), // total 5
        ])
        .unwrap();
        let r1 = &report.rows[0];
        assert_eq!(r1.speedup, 1.0, "the baseline speedup is exactly 1");
        assert_eq!(r1.efficiency, 1.0);
        let r2 = &report.rows[1];
        assert!((r2.speedup - 2.0).abs() <= 1e-12);
        assert!((r2.efficiency - 1.0).abs() <= 1e-12);
        for row in &report.rows {
            let sum: f64 = row.fractions.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-6, "fractions sum to {sum}");
        }
        assert!((r1.fractions[2] - 0.4).abs() <= 1e-12);
    }

    #[test]
    fn invalid_records_are_rejected() {
        let bad = record(1, [1.0, -0.1, 0.0, 0.0, 0.0, 0.0]);
        assert!(ScalingReport::from_records(vec![bad]).is_err());
        let zero = record(1, [0.0; 6]);
        assert!(ScalingReport::from_records(vec![zero]).is_err());
        assert!(ScalingReport::from_records(vec![]).is_err());
    }

    #[test]
    fn csv_header_and_shape_are_exact() {
        let report = ScalingReport::from_records(vec![
            record(1, [1.0, 1.0, 4.0, 2.0, 1.0, 1.0]),
            record(2, [0.5, 0.5, 2.0, 1.0, 0.5, 0.5]),
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_bench_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "threads,mesh_loading,setup,assembly,solver,step_update,file_output,total,speedup,efficiency"
        );
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].starts_with("1,"));
        assert!(rows[1].starts_with("2,"));
        assert_eq!(rows[0].split(',').count(), 10);
        assert_eq!(rows[0], "1,1,1,4,2,1,1,10,1,1");
    }

    fn tiny_scenario(dir: &std::path::Path) -> Scenario {
        let raster_path = dir.join("flat.asc");
        let raster = TerrainRaster::new(4, 3, 0.0, 0.0, 0.1, -9999.0, vec![-60.0; 12]).unwrap();
        raster.save(&raster_path).unwrap();
        Scenario {
            raster: Some(raster_path),
            regions: vec![crate::simulation::Region {
                name: "west".into(),
                level: 1.0,
                polygon: vec![(-0.01, -0.01), (0.15, -0.01), (0.15, 0.21), (-0.01, 0.21)],
            }],
            tau: 30.0,
            n_steps: 4,
            ..Scenario::default()
        }
    }

    #[test]
    fn single_thread_bench_has_unit_speedup() {
        let dir = tempfile::tempdir().unwrap();
        let scenario = tiny_scenario(dir.path());
        let report = run_bench(&scenario, &[1], 4).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].speedup, 1.0);
        assert_eq!(report.rows[0].efficiency, 1.0);
        assert_eq!(report.rows[0].record.iterations, 4);
    }

    #[test]
    fn bench_passes_the_determinism_gate_across_pools() {
        // Even on a single-core host a 2-thread pool exercises the
        // deterministic-reduction path; the probe states must agree.
        let dir = tempfile::tempdir().unwrap();
        let scenario = tiny_scenario(dir.path());
        let report = run_bench(&scenario, &[1, 2], 4).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rows[1].record.threads, 2);
    }

    #[test]
    fn bad_thread_lists_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let scenario = tiny_scenario(dir.path());
        assert!(run_bench(&scenario, &[], 4).is_err());
        assert!(run_bench(&scenario, &[2, 4], 4).is_err(), "baseline must be 1");
        assert!(run_bench(&scenario, &[1, 4, 2], 4).is_err(), "must ascend");
        assert!(run_bench(&scenario, &[1, 1], 4).is_err(), "strictly");
        assert!(run_bench(&scenario, &[1], 0).is_err(), "zero iterations");
    }
}
