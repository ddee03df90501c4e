//! Dam-break scenarios: initial conditions, gauges, front-speed
//! estimation, and end-to-end execution.
//!
//! A [`Scenario`] (parsed from a plain-text file, see [`scenario`])
//! describes where the mesh comes from, which polygonal regions start at
//! an elevated water level — the dammed configuration at the instant the
//! barrier is removed — and what to observe. [`run_scenario`] wires the
//! pipeline together: terrain → mesh → assembly → time integration →
//! gauge CSVs, snapshot files, and a summary.
//!
//! Initial levels follow a first-match-wins rule over the ordered region
//! list, with a land clamp: where the terrain lies above the reference
//! level, the water surface starts at the terrain, never below ground.
//! Initial velocity is zero everywhere — the configuration is still water
//! on both sides of the vanished barrier.
//!
//! Output hooks run between steps on the driving thread and receive a
//! read-only snapshot of the state, so file writing can never race the
//! integrator.

pub mod scenario;
pub mod vtu;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use crate::cpgraph::MeshGraph;
use crate::femcore::{build_dof_map, Assembler, DofMap, SparseSym};
use crate::terrain::{generate_mesh, TerrainRaster};
use crate::timestepper::{
    derive_params, format_duration, initial_acceleration, run_transient, AlphaParams,
    SimulationState, SystemMatrices, TransientConfig,
};
use crate::{bench::TimingRecord, Error, Result};

pub use scenario::{load_scenario, parse_scenario, GaugeSpec, Region, Scenario};
pub use vtu::{write_vtu, write_vtu_scaled, DEFAULT_EXAGGERATION};

/// Barycentric slack when deciding whether a gauge lies inside a triangle.
const GAUGE_INSIDE_TOL: f64 = 1e-9;

/// Even-odd (crossing-number) point-in-polygon test.
///
/// The polygon is in open form; edges run between consecutive vertices
/// and from the last back to the first. The half-open comparison on the
/// latitude band makes the classification deterministic for points that
/// coincide with a vertex or lie exactly on a horizontal edge: each such
/// point is treated as belonging to exactly one side.
pub fn point_in_polygon(lon: f64, lat: f64, polygon: &[(f64, f64)]) -> bool {
    let n = polygon.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (xi, yi) = polygon[i];
        let (xj, yj) = polygon[j];
        if (yi > lat) != (yj > lat) {
            let x_cross = xi + (lat - yi) * (xj - xi) / (yj - yi);
            if lon < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// A gauge resolved against a mesh: the containing triangle's nodes and
/// the interpolation weights at the gauge position.
#[derive(Debug, Clone)]
pub struct LocatedGauge {
    pub name: String,
    pub lon: f64,
    pub lat: f64,
    /// Id of the containing triangle.
    pub triangle: u64,
    dofs: [usize; 3],
    weights: [f64; 3],
}

impl LocatedGauge {
    /// Linear interpolation of a nodal field at the gauge position.
    pub fn interpolate(&self, u: &[f64]) -> f64 {
        self.weights[0] * u[self.dofs[0]]
            + self.weights[1] * u[self.dofs[1]]
            + self.weights[2] * u[self.dofs[2]]
    }
}

/// Resolves every gauge to its containing triangle, failing if any lies
/// outside the mesh. Runs once at load time so the step loop never has to
/// search.
pub fn locate_gauges(dofmap: &DofMap, gauges: &[GaugeSpec]) -> Result<Vec<LocatedGauge>> {
    gauges.iter().map(|g| locate_one(dofmap, g)).collect()
}

fn locate_one(dofmap: &DofMap, gauge: &GaugeSpec) -> Result<LocatedGauge> {
    // Best candidate = triangle with the least-negative worst barycentric
    // coordinate; ties keep the first (lowest triangle id), so points on
    // shared edges resolve deterministically.
    let mut best: Option<(f64, u64, [usize; 3], [f64; 3])> = None;
    for &(tri, dofs) in dofmap.triangles() {
        let a = dofmap.position(dofs[0]);
        let b = dofmap.position(dofs[1]);
        let c = dofmap.position(dofs[2]);
        let det = (b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1);
        if det == 0.0 {
            continue;
        }
        let l1 = ((gauge.lon - a.0) * (c.1 - a.1) - (c.0 - a.0) * (gauge.lat - a.1)) / det;
        let l2 = ((b.0 - a.0) * (gauge.lat - a.1) - (gauge.lon - a.0) * (b.1 - a.1)) / det;
        let l0 = 1.0 - l1 - l2;
        let worst = l0.min(l1).min(l2);
        if best.is_none_or(|(w, _, _, _)| worst > w) {
            best = Some((worst, tri, dofs, [l0, l1, l2]));
        }
    }
    let (worst, triangle, dofs, weights) =
        best.ok_or_else(|| Error::Scenario("mesh has no triangles".to_string()))?;
    if worst < -GAUGE_INSIDE_TOL {
        return Err(Error::Scenario(format!(
            "gauge `{}` at ({}, {}) lies outside the mesh",
            gauge.name, gauge.lon, gauge.lat
        )));
    }
    Ok(LocatedGauge {
        name: gauge.name.clone(),
        lon: gauge.lon,
        lat: gauge.lat,
        triangle,
        dofs,
        weights,
    })
}

/// Builds the initial state fields from the scenario's regions.
///
/// Each node takes the level of the first region containing it (even-odd
/// rule), else the default level; nodes on land (`h_b > 0`) are clamped up
/// to the terrain so water never starts below ground. Velocity starts at
/// zero. A region wholly outside the mesh's bounding box is a scenario
/// authoring error.
pub fn apply_initial_condition(
    dofmap: &DofMap,
    scenario: &Scenario,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = dofmap.dof_count();
    if n == 0 {
        return Err(Error::Scenario("mesh has no nodes".to_string()));
    }
    let mut lon_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut lat_range = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let (lon, lat) = dofmap.position(i);
        lon_range = (lon_range.0.min(lon), lon_range.1.max(lon));
        lat_range = (lat_range.0.min(lat), lat_range.1.max(lat));
    }
    for region in &scenario.regions {
        let ((plon0, plon1), (plat0, plat1)) = polygon_box(&region.polygon);
        if plon1 < lon_range.0 || plon0 > lon_range.1 || plat1 < lat_range.0
            || plat0 > lat_range.1
        {
            return Err(Error::Scenario(format!(
                "region `{}` lies outside the mesh box [{}, {}] × [{}, {}]",
                region.name, lon_range.0, lon_range.1, lat_range.0, lat_range.1
            )));
        }
    }

    let h_b = dofmap.h_b();
    let mut u0 = vec![0.0; n];
    for i in 0..n {
        let (lon, lat) = dofmap.position(i);
        let mut level = scenario.default_level;
        for region in &scenario.regions {
            if point_in_polygon(lon, lat, &region.polygon) {
                level = region.level;
                break;
            }
        }
        if h_b[i] > 0.0 {
            level = level.max(h_b[i]);
        }
        u0[i] = level;
    }
    Ok((u0, vec![0.0; n]))
}

fn polygon_box(polygon: &[(f64, f64)]) -> ((f64, f64), (f64, f64)) {
    let mut lon = (f64::INFINITY, f64::NEG_INFINITY);
    let mut lat = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in polygon {
        lon = (lon.0.min(x), lon.1.max(x));
        lat = (lat.0.min(y), lat.1.max(y));
    }
    (lon, lat)
}

/// Water level at one gauge over time.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeSeries {
    pub name: String,
    /// `(t seconds, u meters)`, strictly increasing in `t`.
    pub samples: Vec<(f64, f64)>,
}

impl GaugeSeries {
    pub fn new(name: impl Into<String>) -> GaugeSeries {
        GaugeSeries {
            name: name.into(),
            samples: Vec::new(),
        }
    }

    /// Appends one sample, enforcing strictly increasing time.
    pub fn push(&mut self, t: f64, u: f64) -> Result<()> {
        if let Some(&(last, _)) = self.samples.last() {
            if t <= last {
                return Err(Error::InvalidArgument(format!(
                    "gauge `{}`: sample time {t} does not advance past {last}",
                    self.name
                )));
            }
        }
        self.samples.push((t, u));
        Ok(())
    }

    /// Writes the series as CSV with header `t_seconds,u_meters`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "t_seconds,u_meters")?;
        for &(t, u) in &self.samples {
            writeln!(w, "{t},{u}")?;
        }
        Ok(())
    }
}

/// Samples every gauge at the given state and appends to its series.
pub fn record_gauges(
    state: &SimulationState,
    gauges: &[LocatedGauge],
    series: &mut [GaugeSeries],
) -> Result<()> {
    if gauges.len() != series.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} gauges but {} series",
            gauges.len(),
            series.len()
        )));
    }
    for (gauge, out) in gauges.iter().zip(series.iter_mut()) {
        out.push(state.t, gauge.interpolate(&state.u))?;
    }
    Ok(())
}

/// Time at which a series first reaches `threshold`, by linear
/// interpolation between the bracketing samples. A series that starts at
/// or above the threshold crosses at its first sample time.
fn first_crossing(series: &GaugeSeries, threshold: f64) -> Option<f64> {
    let first = series.samples.first()?;
    if first.1 >= threshold {
        return Some(first.0);
    }
    for pair in series.samples.windows(2) {
        let (t0, u0) = pair[0];
        let (t1, u1) = pair[1];
        if u0 < threshold && u1 >= threshold {
            return Some(t0 + (threshold - u0) * (t1 - t0) / (u1 - u0));
        }
    }
    None
}

/// Front speed between two gauges: `distance / (t_b − t_a)` where each
/// `t` is the gauge's first threshold crossing. The sign follows the
/// gauge order; `distance` is the separation in meters.
pub fn estimate_front_speed(
    a: &GaugeSeries,
    b: &GaugeSeries,
    threshold: f64,
    distance: f64,
) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gauge separation must be positive and finite, got {distance}"
        )));
    }
    let t_a = first_crossing(a, threshold)
        .ok_or_else(|| Error::NoArrival(format!("front did not arrive at gauge `{}`", a.name)))?;
    let t_b = first_crossing(b, threshold)
        .ok_or_else(|| Error::NoArrival(format!("front did not arrive at gauge `{}`", b.name)))?;
    if t_b == t_a {
        return Err(Error::InvalidArgument(format!(
            "front reached `{}` and `{}` at the same instant t = {t_a}",
            a.name, b.name
        )));
    }
    Ok(distance / (t_b - t_a))
}

/// Everything run-ready: mesh, operators, located gauges, initial state,
/// and how long the two preparation stages took.
#[derive(Debug)]
pub struct Prepared {
    pub mesh: MeshGraph,
    pub dofmap: DofMap,
    pub assembler: Assembler,
    pub mass: SparseSym,
    pub damping: SparseSym,
    pub gauges: Vec<LocatedGauge>,
    pub params: AlphaParams,
    pub state0: SimulationState,
    /// Wall seconds spent obtaining the mesh.
    pub mesh_loading: f64,
    /// Wall seconds spent on maps, operators, and the initial state.
    pub setup: f64,
}

/// Obtains the mesh: loads it from `mesh`, or generates it adaptively
/// from `raster`; then applies any uniform refinement rounds.
fn obtain_mesh(scenario: &Scenario) -> Result<MeshGraph> {
    let raster = match &scenario.raster {
        Some(path) => Some(TerrainRaster::load(path)?),
        None => None,
    };
    let mut mesh = match &scenario.mesh {
        Some(path) => crate::cpgraph::load_mesh(path, scenario.constants.r)?,
        None => {
            let raster = raster
                .as_ref()
                .ok_or_else(|| Error::Scenario("no mesh and no raster".to_string()))?;
            generate_mesh(raster, &scenario.refinement)?
        }
    };
    if scenario.uniform_rounds > 0 {
        let raster = raster
            .as_ref()
            .ok_or_else(|| Error::Scenario("uniform_rounds needs a raster".to_string()))?;
        let sample = |lon: f64, lat: f64| {
            let lon = lon.clamp(raster.lon_min(), raster.lon_max());
            let lat = lat.clamp(raster.lat_min(), raster.lat_max());
            raster
                .sample_elevation(lon, lat)
                .expect("clamped point is inside the raster")
        };
        mesh.refine_all(scenario.uniform_rounds, Some(&sample))?;
    }
    Ok(mesh)
}

/// Runs the two preparation stages: mesh acquisition ("mesh loading") and
/// operator/state construction ("setup"). Errors carry the stage name.
pub fn prepare(scenario: &Scenario) -> Result<Prepared> {
    let t0 = Instant::now();
    let mesh = obtain_mesh(scenario).map_err(|e| e.in_stage("mesh loading"))?;
    let mesh_loading = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let prep = (|| -> Result<Prepared> {
        let dofmap = build_dof_map(&mesh)?;
        let assembler = Assembler::new(&dofmap, &mesh)?;
        let mass = assembler.mass(false);
        let damping = assembler.damping(&scenario.constants);
        let gauges = locate_gauges(&dofmap, &scenario.gauges)?;
        let (u0, v0) = apply_initial_condition(&dofmap, scenario)?;
        let params = derive_params(scenario.rho, scenario.convention)?;
        let b0 = assembler.stiffness(&u0, &scenario.constants)?;
        let a0 = initial_acceleration(
            &u0,
            &v0,
            &SystemMatrices {
                m: &mass,
                c: &damping,
                b: &b0,
            },
        )?;
        let n = u0.len();
        Ok(Prepared {
            mesh,
            dofmap,
            assembler,
            mass,
            damping,
            gauges,
            params,
            state0: SimulationState {
                u: u0,
                v: v0,
                a: a0,
                t: 0.0,
                step: 0,
            },
            mesh_loading,
            setup: 0.0,
        })
        .map(|p| {
            debug_assert_eq!(p.state0.u.len(), n);
            p
        })
    })()
    .map_err(|e| e.in_stage("setup"))?;
    Ok(Prepared {
        setup: t0.elapsed().as_secs_f64(),
        ..prep
    })
}

/// Mass-weighted mean of `u` over the nodes inside `polygon`; NaN when no
/// node falls inside (regions smaller than the local mesh spacing).
pub fn region_mean(dofmap: &DofMap, weights: &[f64], polygon: &[(f64, f64)], u: &[f64]) -> f64 {
    let mut wsum = 0.0;
    let mut usum = 0.0;
    for i in 0..dofmap.dof_count() {
        let (lon, lat) = dofmap.position(i);
        if point_in_polygon(lon, lat, polygon) {
            wsum += weights[i];
            usum += weights[i] * u[i];
        }
    }
    usum / wsum
}

/// Results of a completed scenario run.
#[derive(Debug)]
pub struct ScenarioSummary {
    /// State after the final step.
    pub final_state: SimulationState,
    /// One series per gauge, sampled at t = 0 and after every step.
    pub gauges: Vec<GaugeSeries>,
    /// Mass-weighted mean level per named region at the final time.
    pub region_means: Vec<(String, f64)>,
    /// Wall-clock cost per pipeline category.
    pub timing: TimingRecord,
}

/// Runs a scenario end to end, writing gauge CSVs (`gauge_<name>.csv`),
/// snapshots (`snapshot_<step>.vtu`, on the output cadence, including the
/// initial state), and `summary.txt` into `out_dir`. Any failure names
/// its pipeline stage.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<ScenarioSummary> {
    scenario.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::from(e).in_stage("output"))?;

    let Prepared {
        mesh,
        dofmap,
        assembler,
        mass,
        damping,
        gauges,
        params,
        state0,
        mesh_loading,
        setup,
    } = prepare(scenario)?;

    let mut series: Vec<GaugeSeries> = gauges
        .iter()
        .map(|g| GaugeSeries::new(g.name.clone()))
        .collect();
    record_gauges(&state0, &gauges, &mut series).map_err(|e| e.in_stage("setup"))?;
    if scenario.output_cadence > 0 {
        write_vtu_scaled(
            &dofmap,
            &state0.u,
            scenario.exaggeration,
            &out_dir.join("snapshot_0.vtu"),
        )
        .map_err(|e| e.in_stage("output"))?;
    }

    let config = TransientConfig {
        assembler: &assembler,
        mass: &mass,
        damping: &damping,
        constants: &scenario.constants,
        params,
        tau: scenario.tau,
        n_steps: scenario.n_steps,
        picard_sweeps: scenario.picard_sweeps,
        output_cadence: scenario.output_cadence,
        solver_tol: scenario.solver_tol,
    };
    let gauges_ref = &gauges;
    let dofmap_ref = &dofmap;
    let result = run_transient(
        state0,
        &config,
        |state| record_gauges(state, gauges_ref, &mut series),
        |state| {
            write_vtu_scaled(
                dofmap_ref,
                &state.u,
                scenario.exaggeration,
                &out_dir.join(format!("snapshot_{}.vtu", state.step)),
            )
        },
    )
    .map_err(|e| e.in_stage("time stepping"))?;

    let t0 = Instant::now();
    let (region_means, solver_iterations) = (|| -> Result<(Vec<(String, f64)>, usize)> {
        for s in &series {
            let path = out_dir.join(format!("gauge_{}.csv", s.name));
            let mut w = BufWriter::new(File::create(path)?);
            s.write_csv(&mut w)?;
            w.flush()?;
        }
        let weights = assembler.mass(true).diag();
        let means: Vec<(String, f64)> = scenario
            .regions
            .iter()
            .map(|r| {
                (
                    r.name.clone(),
                    region_mean(&dofmap, &weights, &r.polygon, &result.state.u),
                )
            })
            .collect();
        let iterations: usize = result.records.iter().map(|r| r.solver_iterations).sum();

        let mut w = BufWriter::new(File::create(out_dir.join("summary.txt"))?);
        writeln!(w, "mesh: {} triangles, {} nodes", mesh.triangle_count(), dofmap.dof_count())?;
        writeln!(
            w,
            "run: {} steps of {} s = {}",
            result.state.step,
            scenario.tau,
            format_duration(result.state.t)
        )?;
        writeln!(w, "linear-solver iterations: {iterations}")?;
        for (name, mean) in &means {
            writeln!(w, "region {name}: mean level {mean} m")?;
        }
        for s in &series {
            if let Some(&(_, u)) = s.samples.last() {
                writeln!(w, "gauge {}: final level {} m", s.name, u)?;
            }
        }
        w.flush()?;
        Ok((means, iterations))
    })()
    .map_err(|e| e.in_stage("output"))?;
    let _ = solver_iterations;
    let output_extra = t0.elapsed().as_secs_f64();

    let timing = TimingRecord {
        threads: rayon::current_num_threads(),
        iterations: scenario.n_steps,
        mesh_loading,
        setup,
        assembly: result.records.iter().map(|r| r.assembly).sum(),
        solver: result.records.iter().map(|r| r.solver).sum(),
        step_update: result.records.iter().map(|r| r.step_update).sum(),
        file_output: result.records.iter().map(|r| r.file_output).sum::<f64>() + output_extra,
    };

    Ok(ScenarioSummary {
        final_state: result.state,
        gauges: series,
        region_means,
        timing,
    })
}
