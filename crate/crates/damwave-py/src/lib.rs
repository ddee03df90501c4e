//! Python bindings for the damwave simulator.
//!
//! Exposes the pieces a notebook workflow needs: elevation rasters, adaptive
//! mesh generation and validation, the damping and integrator parameter
//! helpers, and a one-call scenario runner. Build the importable module with
//! `cargo build -p damwave-py --features extension-module` and copy the
//! resulting `libdamwave_py.so` next to your script as `damwave_py.so`.

use std::collections::HashMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use damwave::cpgraph::{self, Coord, MeshGraph};
use damwave::femcore::{damping_coefficient, PhysicsConstants};
use damwave::simulation::{load_scenario, run_scenario};
use damwave::terrain::{generate_mesh, RefinementConfig, TerrainRaster};
use damwave::timestepper::{derive_params, format_duration, Convention};

fn to_py_err(e: damwave::Error) -> PyErr {
    match &e {
        damwave::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// An elevation raster loaded from an ESRI ASCII grid.
#[pyclass(name = "Raster")]
struct PyRaster {
    inner: TerrainRaster,
}

#[pymethods]
impl PyRaster {
    /// Load a raster from a file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyRaster {
            inner: TerrainRaster::load(&path).map_err(to_py_err)?,
        })
    }

    /// Build a raster in memory from row-major values (north row first).
    #[new]
    fn new(
        ncols: usize,
        nrows: usize,
        xllcorner: f64,
        yllcorner: f64,
        cellsize: f64,
        nodata: f64,
        values: Vec<f64>,
    ) -> PyResult<Self> {
        Ok(PyRaster {
            inner: TerrainRaster::new(ncols, nrows, xllcorner, yllcorner, cellsize, nodata, values)
                .map_err(to_py_err)?,
        })
    }

    /// Write the raster to a file.
    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py_err)
    }

    /// Bilinearly interpolated elevation at a point, meters.
    fn sample(&self, lon: f64, lat: f64) -> PyResult<f64> {
        self.inner.sample_elevation(lon, lat).map_err(to_py_err)
    }

    #[getter]
    fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    #[getter]
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    #[getter]
    fn cellsize(&self) -> f64 {
        self.inner.cellsize()
    }

    fn __repr__(&self) -> String {
        format!(
            "Raster({}x{} cells, cellsize {})",
            self.inner.ncols(),
            self.inner.nrows(),
            self.inner.cellsize()
        )
    }
}

/// A conforming adaptive triangular mesh.
#[pyclass(name = "Mesh")]
struct PyMesh {
    inner: MeshGraph,
}

#[pymethods]
impl PyMesh {
    /// Generate a mesh adapted to a raster, splitting triangles until the
    /// interpolated elevation error is at most `tolerance` meters.
    #[staticmethod]
    fn generate(raster: &PyRaster, tolerance: f64) -> PyResult<Self> {
        let config = RefinementConfig {
            tolerance,
            ..RefinementConfig::default()
        };
        Ok(PyMesh {
            inner: generate_mesh(&raster.inner, &config).map_err(to_py_err)?,
        })
    }

    /// Load a mesh from a file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyMesh {
            inner: cpgraph::load_mesh(&path, cpgraph::DEFAULT_RADIUS).map_err(to_py_err)?,
        })
    }

    /// Write the mesh to a file.
    fn save(&self, path: PathBuf) -> PyResult<()> {
        cpgraph::save_mesh(&self.inner, &path).map_err(to_py_err)
    }

    /// Number of conformity violations (0 for a valid mesh).
    fn validate(&self) -> usize {
        cpgraph::validate_conformity(&self.inner).violations.len()
    }

    /// Smallest interior angle over all triangles, radians.
    fn min_angle(&self) -> f64 {
        self.inner
            .triangles()
            .map(|t| t.min_angle())
            .fold(f64::INFINITY, f64::min)
    }

    #[getter]
    fn triangle_count(&self) -> usize {
        self.inner.triangle_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh({} triangles, {} edges, {} vertices)",
            self.inner.triangle_count(),
            self.inner.edge_count(),
            self.inner.vertex_count()
        )
    }
}

/// Chord distance in meters between two lon-lat points on the default
/// sphere (radius 6 371 000 m).
#[pyfunction]
#[pyo3(name = "chord_length")]
fn py_chord_length(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> f64 {
    cpgraph::chord_length(
        Coord {
            lon: lon1,
            lat: lat1,
            elev: 0.0,
        },
        Coord {
            lon: lon2,
            lat: lat2,
            elev: 0.0,
        },
        cpgraph::DEFAULT_RADIUS,
    )
}

/// Damping coefficient for seabed elevation `h_b` (meters, negative when
/// submerged) given the scale `c0` and depth threshold `h0`.
#[pyfunction]
#[pyo3(name = "damping_coefficient")]
fn py_damping_coefficient(h_b: f64, c0: f64, h0: f64) -> f64 {
    let constants = PhysicsConstants {
        c0,
        h0,
        ..PhysicsConstants::default()
    };
    damping_coefficient(h_b, &constants)
}

/// Integrator parameters `(alpha_m, alpha_f, beta, gamma)` for a spectral
/// radius `rho` in [0, 1]. `convention` is `"standard"` or `"negated"`.
#[pyfunction]
#[pyo3(name = "derive_params")]
fn py_derive_params(rho: f64, convention: &str) -> PyResult<(f64, f64, f64, f64)> {
    let convention = match convention {
        "standard" => Convention::StandardSecondOrder,
        "negated" => Convention::NegatedAlphaF,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown convention `{other}` (expected `standard` or `negated`)"
            )))
        }
    };
    let p = derive_params(rho, convention).map_err(to_py_err)?;
    Ok((p.alpha_m, p.alpha_f, p.beta, p.gamma))
}

/// Human-readable duration: days, hours, and minutes.
#[pyfunction]
#[pyo3(name = "format_duration")]
fn py_format_duration(seconds: f64) -> String {
    format_duration(seconds)
}

/// Run a scenario file end to end, writing gauges, snapshots, and a summary
/// into `out_dir`. Returns the mean water level per named region.
#[pyfunction]
#[pyo3(name = "run_scenario")]
fn py_run_scenario(scenario: PathBuf, out_dir: PathBuf) -> PyResult<HashMap<String, f64>> {
    let scenario = load_scenario(&scenario).map_err(to_py_err)?;
    let summary = run_scenario(&scenario, &out_dir).map_err(to_py_err)?;
    Ok(summary.region_means.into_iter().collect())
}

#[pymodule]
fn damwave_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRaster>()?;
    m.add_class::<PyMesh>()?;
    m.add_function(wrap_pyfunction!(py_chord_length, m)?)?;
    m.add_function(wrap_pyfunction!(py_damping_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(py_derive_params, m)?)?;
    m.add_function(wrap_pyfunction!(py_format_duration, m)?)?;
    m.add_function(wrap_pyfunction!(py_run_scenario, m)?)?;
    m.add("DEFAULT_RADIUS", cpgraph::DEFAULT_RADIUS)?;
    Ok(())
}
