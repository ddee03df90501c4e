//! Raster elevation ingestion and criterion-driven mesh generation.
//!
//! Elevation data arrives as an ESRI ASCII grid — a plain-text raster with a
//! small keyword header followed by row-major cell values, northernmost row
//! first. [`TerrainRaster`] parses and bilinearly samples such grids;
//! [`refinement_criterion`] measures how badly a triangle's linear
//! interpolant misses the raster; [`generate_mesh`] grows a conforming
//! adaptive mesh from a coarse structured start by repeatedly refining every
//! triangle that fails the criterion.
//!
//! Elevations are meters relative to sea level (negative below); raster
//! coordinates are degrees of longitude/latitude.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::cpgraph::{Coord, ElevationFn, MeshBuilder, MeshGraph, TriangleNode};
use crate::{Error, Result};

/// Slack (degrees) tolerated at the raster rim before a query point is
/// declared outside the coverage. Absorbs round-off when mesh vertices are
/// computed on the nominal raster boundary.
const RIM_SLACK_DEG: f64 = 1e-9;

/// Number of coarse rectangles along longitude in [`generate_mesh`].
const COARSE_COLS: usize = 8;

/// Number of coarse rectangles along latitude in [`generate_mesh`].
const COARSE_ROWS: usize = 4;

/// A rectangular elevation raster in geographic coordinates.
///
/// Values are stored row-major with row 0 the *southernmost* row (the ESRI
/// text format lists the northern row first; the parser flips it). Cell
/// `(col, row)` is centered at
/// `(xllcorner + (col+0.5)·cellsize, yllcorner + (row+0.5)·cellsize)`.
///
/// Cells equal to the nodata sentinel are treated as elevation 0 when
/// sampled, and each such access bumps a warning counter queryable via
/// [`TerrainRaster::nodata_hits`].
#[derive(Debug)]
pub struct TerrainRaster {
    ncols: usize,
    nrows: usize,
    xllcorner: f64,
    yllcorner: f64,
    cellsize: f64,
    nodata: f64,
    values: Vec<f64>,
    nodata_hits: AtomicU64,
}

impl Clone for TerrainRaster {
    fn clone(&self) -> Self {
        TerrainRaster {
            ncols: self.ncols,
            nrows: self.nrows,
            xllcorner: self.xllcorner,
            yllcorner: self.yllcorner,
            cellsize: self.cellsize,
            nodata: self.nodata,
            values: self.values.clone(),
            nodata_hits: AtomicU64::new(self.nodata_hits.load(Ordering::Relaxed)),
        }
    }
}

impl TerrainRaster {
    /// Builds a raster from parts, validating the invariants.
    ///
    /// `values` is row-major with row 0 southernmost, `values.len()` must be
    /// `ncols * nrows`, and the covered box must lie inside
    /// [−180, 180] × [−90, 90].
    pub fn new(
        ncols: usize,
        nrows: usize,
        xllcorner: f64,
        yllcorner: f64,
        cellsize: f64,
        nodata: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if ncols == 0 || nrows == 0 {
            return Err(Error::InvalidArgument(
                "raster must have at least one row and one column".into(),
            ));
        }
        if !(cellsize > 0.0) || !cellsize.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "cellsize must be positive and finite, got {cellsize}"
            )));
        }
        if values.len() != ncols * nrows {
            return Err(Error::InvalidArgument(format!(
                "raster with {ncols}x{nrows} cells needs {} values, got {}",
                ncols * nrows,
                values.len()
            )));
        }
        let lon_max = xllcorner + ncols as f64 * cellsize;
        let lat_max = yllcorner + nrows as f64 * cellsize;
        if xllcorner < -180.0 - RIM_SLACK_DEG
            || lon_max > 180.0 + RIM_SLACK_DEG
            || yllcorner < -90.0 - RIM_SLACK_DEG
            || lat_max > 90.0 + RIM_SLACK_DEG
        {
            return Err(Error::InvalidArgument(format!(
                "raster box [{xllcorner}, {lon_max}] x [{yllcorner}, {lat_max}] \
                 exceeds [-180, 180] x [-90, 90]"
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "raster values must be finite, got {bad}"
            )));
        }
        Ok(TerrainRaster {
            ncols,
            nrows,
            xllcorner,
            yllcorner,
            cellsize,
            nodata,
            values,
            nodata_hits: AtomicU64::new(0),
        })
    }

    /// Number of columns (west to east).
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Number of rows (south to north).
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    /// Longitude of the western edge of the westernmost cells.
    pub fn xllcorner(&self) -> f64 {
        self.xllcorner
    }

    /// Latitude of the southern edge of the southernmost cells.
    pub fn yllcorner(&self) -> f64 {
        self.yllcorner
    }

    /// Cell edge length in degrees.
    pub fn cellsize(&self) -> f64 {
        self.cellsize
    }

    /// Sentinel value marking missing cells.
    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    /// Westernmost longitude covered.
    pub fn lon_min(&self) -> f64 {
        self.xllcorner
    }

    /// Easternmost longitude covered.
    pub fn lon_max(&self) -> f64 {
        self.xllcorner + self.ncols as f64 * self.cellsize
    }

    /// Southernmost latitude covered.
    pub fn lat_min(&self) -> f64 {
        self.yllcorner
    }

    /// Northernmost latitude covered.
    pub fn lat_max(&self) -> f64 {
        self.yllcorner + self.nrows as f64 * self.cellsize
    }

    /// Raw stored value of cell `(col, row)`, row 0 southernmost. No nodata
    /// substitution is applied.
    pub fn value(&self, col: usize, row: usize) -> f64 {
        debug_assert!(col < self.ncols && row < self.nrows);
        self.values[row * self.ncols + col]
    }

    /// Center coordinates of cell `(col, row)`.
    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        (
            self.xllcorner + (col as f64 + 0.5) * self.cellsize,
            self.yllcorner + (row as f64 + 0.5) * self.cellsize,
        )
    }

    /// How many times a nodata cell has been touched by sampling so far.
    pub fn nodata_hits(&self) -> u64 {
        self.nodata_hits.load(Ordering::Relaxed)
    }

    /// Stored value of cell `(col, row)` with the nodata sentinel replaced
    /// by 0 and counted.
    fn cell_sampled(&self, col: usize, row: usize) -> f64 {
        let v = self.values[row * self.ncols + col];
        if v == self.nodata {
            self.nodata_hits.fetch_add(1, Ordering::Relaxed);
            0.0
        } else {
            v
        }
    }

    /// Bilinear elevation at `(lon, lat)` degrees.
    ///
    /// Interpolates the four surrounding cell centers; queries between the
    /// raster rim and the outermost cell centers clamp to the border cells
    /// (constant extrapolation across the half-cell margin). Points outside
    /// the covered box are an error.
    pub fn sample_elevation(&self, lon: f64, lat: f64) -> Result<f64> {
        if lon < self.lon_min() - RIM_SLACK_DEG
            || lon > self.lon_max() + RIM_SLACK_DEG
            || lat < self.lat_min() - RIM_SLACK_DEG
            || lat > self.lat_max() + RIM_SLACK_DEG
        {
            return Err(Error::OutOfDomain { lon, lat });
        }
        // Continuous index in cell-center space: 0 at the first center,
        // ncols-1 at the last. Clamping realizes the border behavior.
        let fx = ((lon - self.xllcorner) / self.cellsize - 0.5)
            .clamp(0.0, (self.ncols - 1) as f64);
        let fy = ((lat - self.yllcorner) / self.cellsize - 0.5)
            .clamp(0.0, (self.nrows - 1) as f64);
        let i0 = (fx.floor() as usize).min(self.ncols - 1);
        let j0 = (fy.floor() as usize).min(self.nrows - 1);
        let i1 = (i0 + 1).min(self.ncols - 1);
        let j1 = (j0 + 1).min(self.nrows - 1);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let corners = [
            (i0, j0, (1.0 - tx) * (1.0 - ty)),
            (i1, j0, tx * (1.0 - ty)),
            (i0, j1, (1.0 - tx) * ty),
            (i1, j1, tx * ty),
        ];
        let mut acc = 0.0;
        for (i, j, w) in corners {
            if w != 0.0 {
                acc += w * self.cell_sampled(i, j);
            }
        }
        Ok(acc)
    }

    /// Parses an ESRI ASCII grid from a file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path)?;
        Self::read(BufReader::new(file), &path.display().to_string())
    }

    /// Parses an ESRI ASCII grid from a reader; `label` names the source in
    /// error messages.
    ///
    /// The header consists of `keyword value` lines — `ncols`, `nrows`,
    /// `xllcorner`, `yllcorner`, `cellsize` (required, any order) and
    /// `NODATA_value` (optional, default −9999) — followed by exactly
    /// `ncols·nrows` whitespace-separated cell values, northern row first.
    /// Keywords are matched case-insensitively.
    pub fn read<R: Read>(reader: R, label: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: label.to_string(),
            line,
            message,
        };

        let mut ncols: Option<usize> = None;
        let mut nrows: Option<usize> = None;
        let mut xllcorner: Option<f64> = None;
        let mut yllcorner: Option<f64> = None;
        let mut cellsize: Option<f64> = None;
        let mut nodata: f64 = -9999.0;
        let mut north_first: Vec<f64> = Vec::new();
        let mut in_header = true;

        let mut line_no = 0usize;
        for line in BufReader::new(reader).lines() {
            line_no += 1;
            let line = line?;
            let mut tokens = line.split_whitespace().peekable();
            let first = match tokens.peek() {
                Some(t) => *t,
                None => continue, // blank line
            };
            if in_header && first.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
                let keyword = tokens.next().expect("peeked token present");
                let value = tokens.next().ok_or_else(|| {
                    parse_err(line_no, format!("keyword `{keyword}` is missing its value"))
                })?;
                if let Some(extra) = tokens.next() {
                    return Err(parse_err(
                        line_no,
                        format!("unexpected token `{extra}` after `{keyword} {value}`"),
                    ));
                }
                let as_count = |v: &str| -> Result<usize> {
                    v.parse::<usize>()
                        .ok()
                        .filter(|n| *n > 0)
                        .ok_or_else(|| {
                            parse_err(
                                line_no,
                                format!("`{keyword}` expects a positive integer, got `{v}`"),
                            )
                        })
                };
                let as_float = |v: &str| -> Result<f64> {
                    v.parse::<f64>().map_err(|_| {
                        parse_err(line_no, format!("`{keyword}` expects a number, got `{v}`"))
                    })
                };
                match keyword.to_ascii_lowercase().as_str() {
                    "ncols" => ncols = Some(as_count(value)?),
                    "nrows" => nrows = Some(as_count(value)?),
                    "xllcorner" => xllcorner = Some(as_float(value)?),
                    "yllcorner" => yllcorner = Some(as_float(value)?),
                    "cellsize" => cellsize = Some(as_float(value)?),
                    "nodata_value" => nodata = as_float(value)?,
                    other => {
                        return Err(parse_err(line_no, format!("unknown keyword `{other}`")))
                    }
                }
                continue;
            }
            if in_header {
                // First non-keyword line: the header must be complete.
                for (key, present) in [
                    ("ncols", ncols.is_some()),
                    ("nrows", nrows.is_some()),
                    ("xllcorner", xllcorner.is_some()),
                    ("yllcorner", yllcorner.is_some()),
                    ("cellsize", cellsize.is_some()),
                ] {
                    if !present {
                        return Err(parse_err(
                            line_no,
                            format!("data begins but header keyword `{key}` is missing"),
                        ));
                    }
                }
                in_header = false;
            }
            let expected = ncols.unwrap() * nrows.unwrap();
            for token in tokens {
                let v: f64 = token.parse().map_err(|_| {
                    parse_err(line_no, format!("cell value `{token}` is not a number"))
                })?;
                if north_first.len() == expected {
                    return Err(parse_err(
                        line_no,
                        format!("more than {expected} cell values present"),
                    ));
                }
                north_first.push(v);
            }
        }

        if in_header {
            return Err(parse_err(
                line_no + 1,
                "file ends before any cell values".to_string(),
            ));
        }
        let (ncols, nrows) = (ncols.unwrap(), nrows.unwrap());
        let expected = ncols * nrows;
        if north_first.len() != expected {
            return Err(parse_err(
                line_no + 1,
                format!(
                    "expected {expected} cell values, found {}",
                    north_first.len()
                ),
            ));
        }

        // Flip to row 0 = south.
        let mut values = vec![0.0; expected];
        for file_row in 0..nrows {
            let row = nrows - 1 - file_row;
            let src = &north_first[file_row * ncols..(file_row + 1) * ncols];
            values[row * ncols..(row + 1) * ncols].copy_from_slice(src);
        }

        Self::new(
            ncols,
            nrows,
            xllcorner.unwrap(),
            yllcorner.unwrap(),
            cellsize.unwrap(),
            nodata,
            values,
        )
    }

    /// Writes the raster as an ESRI ASCII grid to a file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Writes the raster as an ESRI ASCII grid.
    ///
    /// Floats are printed with Rust's shortest-round-trip formatting, so a
    /// write → read cycle reproduces every value bit for bit.
    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "ncols {}", self.ncols)?;
        writeln!(w, "nrows {}", self.nrows)?;
        writeln!(w, "xllcorner {}", self.xllcorner)?;
        writeln!(w, "yllcorner {}", self.yllcorner)?;
        writeln!(w, "cellsize {}", self.cellsize)?;
        writeln!(w, "NODATA_value {}", self.nodata)?;
        for file_row in 0..self.nrows {
            let row = self.nrows - 1 - file_row;
            let cells = &self.values[row * self.ncols..(row + 1) * self.ncols];
            let mut line = String::new();
            for (i, v) in cells.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push_str(&v.to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Mesh generation limits for [`generate_mesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementConfig {
    /// Largest tolerated elevation error (meters) between a triangle's
    /// linear interpolant and the raster.
    pub tolerance: f64,
    /// Maximum number of mark-and-refine sweeps.
    pub max_iterations: usize,
    /// Stop refining once the mesh holds at least this many triangles.
    pub max_triangles: usize,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig {
            tolerance: 1.0,
            max_iterations: 32,
            max_triangles: 1 << 20,
        }
    }
}

/// Decides whether `tri` needs refinement to represent the raster within
/// `tolerance` meters.
///
/// The triangle's three vertex elevations define a plane over the lon-lat
/// chart; the criterion is the maximum absolute difference between that
/// plane and the bilinearly sampled raster, taken over every raster cell
/// center inside the triangle plus the three edge midpoints. Triangles
/// smaller than a raster cell are still probed at their midpoints.
pub fn refinement_criterion(
    tri: &TriangleNode,
    raster: &TerrainRaster,
    tolerance: f64,
) -> Result<bool> {
    let [a, b, c] = tri.vertices;
    // Plane z = px·lon + py·lat + pz through the three vertices, via
    // Cramer's rule on the edge-difference system.
    let det = (b.lon - a.lon) * (c.lat - a.lat) - (c.lon - a.lon) * (b.lat - a.lat);
    let scale = [b.lon - a.lon, c.lon - a.lon, b.lat - a.lat, c.lat - a.lat]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .powi(2);
    if det.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateTriangle(format!(
            "triangle {} has (near-)collinear vertices",
            tri.id
        )));
    }
    let px = ((b.elev - a.elev) * (c.lat - a.lat) - (c.elev - a.elev) * (b.lat - a.lat)) / det;
    let py = ((b.lon - a.lon) * (c.elev - a.elev) - (c.lon - a.lon) * (b.elev - a.elev)) / det;
    let pz = a.elev - px * a.lon - py * a.lat;
    let plane = |lon: f64, lat: f64| px * lon + py * lat + pz;

    let mut worst = 0.0f64;

    // Raster cell centers inside the triangle (closed, with a relative
    // slack so centers on a shared edge are seen by both neighbors).
    let lon_lo = a.lon.min(b.lon).min(c.lon);
    let lon_hi = a.lon.max(b.lon).max(c.lon);
    let lat_lo = a.lat.min(b.lat).min(c.lat);
    let lat_hi = a.lat.max(b.lat).max(c.lat);
    let col_lo = (((lon_lo - raster.xllcorner()) / raster.cellsize() - 0.5).ceil()).max(0.0);
    let col_hi =
        (((lon_hi - raster.xllcorner()) / raster.cellsize() - 0.5).floor()).min((raster.ncols() - 1) as f64);
    let row_lo = (((lat_lo - raster.yllcorner()) / raster.cellsize() - 0.5).ceil()).max(0.0);
    let row_hi =
        (((lat_hi - raster.yllcorner()) / raster.cellsize() - 0.5).floor()).min((raster.nrows() - 1) as f64);
    let inside_tol = 1e-12 * det.abs();
    if col_lo <= col_hi && row_lo <= row_hi {
        for row in row_lo as usize..=row_hi as usize {
            for col in col_lo as usize..=col_hi as usize {
                let (lon, lat) = raster.cell_center(col, row);
                // Barycentric sign test against the (CCW) triangle.
                let w0 = (b.lon - a.lon) * (lat - a.lat) - (lon - a.lon) * (b.lat - a.lat);
                let w1 = (c.lon - b.lon) * (lat - b.lat) - (lon - b.lon) * (c.lat - b.lat);
                let w2 = (a.lon - c.lon) * (lat - c.lat) - (lon - c.lon) * (a.lat - c.lat);
                if w0 >= -inside_tol && w1 >= -inside_tol && w2 >= -inside_tol {
                    let v = raster.cell_sampled(col, row);
                    worst = worst.max((plane(lon, lat) - v).abs());
                }
            }
        }
    }

    for (p, q) in [(a, b), (b, c), (c, a)] {
        let lon = 0.5 * (p.lon + q.lon);
        let lat = 0.5 * (p.lat + q.lat);
        let v = raster.sample_elevation(lon, lat)?;
        worst = worst.max((plane(lon, lat) - v).abs());
    }

    Ok(worst > tolerance)
}

/// Builds the 8×4 structured coarse mesh spanning the raster box, vertex
/// elevations sampled from the raster.
fn coarse_mesh(raster: &TerrainRaster, sample: &dyn Fn(f64, f64) -> f64) -> Result<MeshGraph> {
    // Grid lines computed once so adjacent rectangles share bit-identical
    // corner coordinates (the builder dedups vertices by quantized key).
    let xs: Vec<f64> = (0..=COARSE_COLS)
        .map(|i| {
            raster.lon_min()
                + i as f64 * (raster.lon_max() - raster.lon_min()) / COARSE_COLS as f64
        })
        .collect();
    let ys: Vec<f64> = (0..=COARSE_ROWS)
        .map(|j| {
            raster.lat_min()
                + j as f64 * (raster.lat_max() - raster.lat_min()) / COARSE_ROWS as f64
        })
        .collect();
    let at = |lon: f64, lat: f64| Coord::new(lon, lat, sample(lon, lat));
    let mut builder = MeshBuilder::new(crate::cpgraph::DEFAULT_RADIUS);
    for iy in 0..COARSE_ROWS {
        for ix in 0..COARSE_COLS {
            let p00 = at(xs[ix], ys[iy]);
            let p10 = at(xs[ix + 1], ys[iy]);
            let p11 = at(xs[ix + 1], ys[iy + 1]);
            let p01 = at(xs[ix], ys[iy + 1]);
            builder.add_triangle([p00, p10, p11]);
            builder.add_triangle([p00, p11, p01]);
        }
    }
    builder.build()
}

/// Generates a conforming adaptive mesh over the raster.
///
/// Starts from an 8×4 structured rectangle mesh (two triangles each, 64
/// total) spanning the raster box, then repeatedly refines every triangle
/// failing [`refinement_criterion`] until all pass, `max_iterations` sweeps
/// have run, or the triangle count reaches `max_triangles`. New vertices get
/// their elevation by bilinear sampling, so the criterion tightens as the
/// mesh tracks the terrain.
pub fn generate_mesh(raster: &TerrainRaster, config: &RefinementConfig) -> Result<MeshGraph> {
    if raster.ncols() < 2 || raster.nrows() < 2 {
        return Err(Error::InvalidArgument(format!(
            "mesh generation needs at least a 2x2 raster, got {}x{}",
            raster.ncols(),
            raster.nrows()
        )));
    }
    if !(config.tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            config.tolerance
        )));
    }

    // Mesh vertices computed on the nominal rim can land a hair outside the
    // box; clamping keeps the sampler total over every point the refiner
    // can ever produce.
    let sample = move |lon: f64, lat: f64| -> f64 {
        let lon = lon.clamp(raster.lon_min(), raster.lon_max());
        let lat = lat.clamp(raster.lat_min(), raster.lat_max());
        raster.sample_elevation(lon, lat).unwrap_or(0.0)
    };

    let mut mesh = coarse_mesh(raster, &sample)?;
    let terrain: ElevationFn = &sample;

    let mut sweeps = 0usize;
    while sweeps < config.max_iterations && mesh.triangle_count() < config.max_triangles {
        let ids: Vec<u64> = mesh.triangle_ids().collect();
        let flagged: Vec<u64> = ids
            .par_iter()
            .map(|&t| {
                let tri = mesh.triangle(t).expect("id just listed");
                refinement_criterion(tri, raster, config.tolerance).map(|f| (t, f))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .filter_map(|(t, f)| f.then_some(t))
            .collect();
        if flagged.is_empty() {
            break;
        }
        let marked: BTreeSet<u64> = flagged.into_iter().collect();
        mesh.rivara_refine(&marked, Some(terrain))?;
        sweeps += 1;
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpgraph::validate_conformity;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::io::Cursor;

    fn grid(text: &str) -> Result<TerrainRaster> {
        TerrainRaster::read(Cursor::new(text.to_string()), "test.asc")
    }

    /// Raster of the plane z = 2·lon + 3·lat over [0,1] × [0,0.5] with a
    /// power-of-two cell size so centers are exactly representable.
    fn plane_raster() -> TerrainRaster {
        let cs = 0.03125; // 1/32
        let (ncols, nrows) = (32, 16);
        let mut values = Vec::with_capacity(ncols * nrows);
        for row in 0..nrows {
            for col in 0..ncols {
                let lon = (col as f64 + 0.5) * cs;
                let lat = (row as f64 + 0.5) * cs;
                values.push(2.0 * lon + 3.0 * lat);
            }
        }
        TerrainRaster::new(ncols, nrows, 0.0, 0.0, cs, -9999.0, values).unwrap()
    }

    #[test]
    fn parses_minimal_grid() {
        let r = grid("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 0.5\n0 0\n0 0\n")
            .unwrap();
        assert_eq!(r.ncols(), 2);
        assert_eq!(r.nrows(), 2);
        assert_eq!(r.cellsize(), 0.5);
        assert_eq!(r.nodata(), -9999.0);
        assert_eq!(r.value(0, 0), 0.0);
        assert_eq!(r.value(1, 1), 0.0);
    }

    #[test]
    fn data_rows_are_north_first() {
        // Northern row in the file is 1 2; southern row is 3 4.
        let r = grid(
            "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -1\n1 2\n3 4\n",
        )
        .unwrap();
        // Row 0 = south.
        assert_eq!(r.value(0, 0), 3.0);
        assert_eq!(r.value(1, 0), 4.0);
        assert_eq!(r.value(0, 1), 1.0);
        assert_eq!(r.value(1, 1), 2.0);
    }

    #[test]
    fn header_keywords_any_order_and_case() {
        let r = grid(
            "NROWS 1\nNCOLS 1\nCellsize 1\nYllcorner -2\nXllcorner -3\nnodata_VALUE 7\n5\n",
        )
        .unwrap();
        assert_eq!(r.xllcorner(), -3.0);
        assert_eq!(r.yllcorner(), -2.0);
        assert_eq!(r.nodata(), 7.0);
        assert_eq!(r.value(0, 0), 5.0);
    }

    #[test]
    fn missing_keyword_is_a_parse_error_with_line() {
        let err = grid("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\n0 0\n0 0\n").unwrap_err();
        match err {
            Error::Parse { path, line, message } => {
                assert_eq!(path, "test.asc");
                assert_eq!(line, 5);
                assert!(message.contains("cellsize"), "message: {message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_is_a_parse_error_with_line() {
        let err =
            grid("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n0 0\n0 oops\n")
                .unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 7);
                assert!(message.contains("oops"), "message: {message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_value_count_is_a_parse_error() {
        let too_few =
            grid("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n0 0\n0\n").unwrap_err();
        assert!(matches!(too_few, Error::Parse { .. }), "{too_few:?}");
        let too_many =
            grid("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n0 0\n0 0 0\n")
                .unwrap_err();
        assert!(matches!(too_many, Error::Parse { .. }), "{too_many:?}");
    }

    #[test]
    fn rejects_unknown_keyword_and_bad_counts() {
        let unknown =
            grid("ncols 2\nbogus 3\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n0 0 0 0\n")
                .unwrap_err();
        assert!(matches!(unknown, Error::Parse { line: 2, .. }), "{unknown:?}");
        let zero = grid("ncols 0\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n\n").unwrap_err();
        assert!(matches!(zero, Error::Parse { .. }), "{zero:?}");
        let neg_cs =
            grid("ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize -1\n0\n").unwrap_err();
        assert!(matches!(neg_cs, Error::InvalidArgument(_)), "{neg_cs:?}");
    }

    #[test]
    fn rejects_box_outside_world() {
        let err = TerrainRaster::new(4, 4, 179.0, 0.0, 1.0, -9999.0, vec![0.0; 16]).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)), "{err:?}");
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let values = vec![
            0.1,
            -9999.0,
            1e-17,
            1234.567_890_123_456_7,
            -0.0,
            3.0,
            f64::MIN_POSITIVE,
            2.5,
        ];
        let r = TerrainRaster::new(4, 2, -1.25, 0.5, 0.125, -9999.0, values.clone()).unwrap();
        let mut buf = Vec::new();
        r.write(&mut buf).unwrap();
        let back = TerrainRaster::read(Cursor::new(buf), "mem").unwrap();
        assert_eq!(back.ncols(), 4);
        assert_eq!(back.nrows(), 2);
        assert_eq!(back.xllcorner().to_bits(), (-1.25f64).to_bits());
        assert_eq!(back.cellsize().to_bits(), 0.125f64.to_bits());
        for row in 0..2 {
            for col in 0..4 {
                assert_eq!(
                    back.value(col, row).to_bits(),
                    values[row * 4 + col].to_bits(),
                    "cell ({col},{row})"
                );
            }
        }
    }

    #[test]
    fn sample_at_cell_center_returns_stored_value() {
        let r = grid(
            "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 0.25\n1 2\n3 4\n",
        )
        .unwrap();
        let (lon, lat) = r.cell_center(1, 0);
        assert_eq!(r.sample_elevation(lon, lat).unwrap(), 4.0);
        let (lon, lat) = r.cell_center(0, 1);
        assert_eq!(r.sample_elevation(lon, lat).unwrap(), 1.0);
    }

    #[test]
    fn sample_midpoint_of_two_cells_averages() {
        let r = grid(
            "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 0.25\n10 20\n",
        )
        .unwrap();
        // Midpoint between the two cell centers.
        let v = r.sample_elevation(0.25, 0.125).unwrap();
        assert!((v - 15.0).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn bilinear_reproduces_a_plane() {
        let r = plane_raster();
        let mut rng = ChaCha8Rng::seed_from_u64(0x7e44a1);
        for _ in 0..100 {
            let lon: f64 = rng.random_range(0.0..1.0);
            let lat: f64 = rng.random_range(0.0..0.5);
            let v = r.sample_elevation(lon, lat).unwrap();
            let exact = 2.0 * lon + 3.0 * lat;
            // Between the border centers and the rim the sampler clamps, so
            // stay half a cell inside for the exactness check.
            if lon > 0.02 && lon < 0.98 && lat > 0.02 && lat < 0.48 {
                assert!((v - exact).abs() <= 1e-9, "({lon},{lat}): {v} vs {exact}");
            }
        }
    }

    #[test]
    fn border_clamps_and_outside_errors() {
        let r = grid(
            "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 0.25\n1 2\n3 4\n",
        )
        .unwrap();
        // The exact box corner clamps to the corner cell.
        assert_eq!(r.sample_elevation(0.0, 0.0).unwrap(), 3.0);
        assert_eq!(r.sample_elevation(0.5, 0.5).unwrap(), 2.0);
        let err = r.sample_elevation(0.51, 0.1).unwrap_err();
        assert!(matches!(err, Error::OutOfDomain { .. }), "{err:?}");
        assert!(r.sample_elevation(0.1, -0.1).is_err());
    }

    #[test]
    fn nodata_reads_as_zero_and_counts() {
        let r = grid(
            "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n-9999 8\n",
        )
        .unwrap();
        assert_eq!(r.nodata_hits(), 0);
        let (lon, lat) = r.cell_center(0, 0);
        assert_eq!(r.sample_elevation(lon, lat).unwrap(), 0.0);
        assert!(r.nodata_hits() >= 1);
        // The raw accessor does not substitute.
        assert_eq!(r.value(0, 0), -9999.0);
    }

    #[test]
    fn criterion_accepts_plane_terrain() {
        let r = plane_raster();
        // Any triangle with vertex elevations on the same plane matches the
        // raster everywhere.
        let at = |lon: f64, lat: f64| Coord::new(lon, lat, 2.0 * lon + 3.0 * lat);
        let mut b = MeshBuilder::new(crate::cpgraph::DEFAULT_RADIUS);
        b.add_triangle([at(0.1, 0.1), at(0.9, 0.15), at(0.5, 0.4)]);
        let mesh = b.build().unwrap();
        let tri = mesh.triangles().next().unwrap();
        assert!(!refinement_criterion(tri, &r, 1e-6).unwrap());
    }

    #[test]
    fn criterion_flags_a_step() {
        // 0 m on the west half, 10 m on the east half; a triangle spanning
        // the step cannot be linear within 1 m.
        let mut values = Vec::new();
        for _row in 0..8 {
            for col in 0..16 {
                values.push(if col < 8 { 0.0 } else { 10.0 });
            }
        }
        let r = TerrainRaster::new(16, 8, 0.0, 0.0, 0.0625, -9999.0, values).unwrap();
        let at = |lon: f64, lat: f64, elev: f64| Coord::new(lon, lat, elev);
        let mut b = MeshBuilder::new(crate::cpgraph::DEFAULT_RADIUS);
        b.add_triangle([at(0.1, 0.05, 0.0), at(0.9, 0.05, 10.0), at(0.5, 0.45, 10.0)]);
        let mesh = b.build().unwrap();
        let tri = mesh.triangles().next().unwrap();
        assert!(refinement_criterion(tri, &r, 1.0).unwrap());
        // A generous tolerance swallows the step.
        assert!(!refinement_criterion(tri, &r, 100.0).unwrap());
    }

    #[test]
    fn criterion_rejects_degenerate_triangle() {
        let r = plane_raster();
        let tri = TriangleNode {
            id: 0,
            vertices: [
                Coord::new(0.1, 0.1, 0.0),
                Coord::new(0.2, 0.1, 0.0),
                Coord::new(0.3, 0.1, 0.0),
            ],
            bonds: [0, 1, 2],
            rc: false,
        };
        let err = refinement_criterion(&tri, &r, 1.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateTriangle(_)), "{err:?}");
    }

    #[test]
    fn flat_raster_yields_the_coarse_mesh() {
        let r = TerrainRaster::new(8, 4, 0.0, 0.0, 0.125, -9999.0, vec![-5.0; 32]).unwrap();
        let mesh = generate_mesh(&r, &RefinementConfig::default()).unwrap();
        assert_eq!(mesh.triangle_count(), 64);
        assert!(validate_conformity(&mesh).is_conforming());
        // Every vertex picked up the flat elevation.
        for tri in mesh.triangles() {
            for v in tri.vertices {
                assert_eq!(v.elev, -5.0);
            }
        }
    }

    #[test]
    fn generate_rejects_degenerate_raster() {
        let r = TerrainRaster::new(8, 1, 0.0, 0.0, 0.125, -9999.0, vec![0.0; 8]).unwrap();
        let err = generate_mesh(&r, &RefinementConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)), "{err:?}");
    }

    /// Gaussian seamount raster over [0,1] × [0,0.5]: −200 m floor with a
    /// peak rising to +50 m at (0.5, 0.25), σ = 0.04°.
    fn seamount_raster() -> TerrainRaster {
        let cs = 1.0 / 128.0;
        let (ncols, nrows) = (128, 64);
        let mut values = Vec::with_capacity(ncols * nrows);
        for row in 0..nrows {
            for col in 0..ncols {
                let lon = (col as f64 + 0.5) * cs;
                let lat = (row as f64 + 0.5) * cs;
                let d2 = (lon - 0.5).powi(2) + (lat - 0.25).powi(2);
                let sigma2 = 0.04f64.powi(2);
                values.push(-200.0 + 250.0 * (-d2 / (2.0 * sigma2)).exp());
            }
        }
        TerrainRaster::new(ncols, nrows, 0.0, 0.0, cs, -9999.0, values).unwrap()
    }

    #[test]
    fn seamount_concentrates_refinement_near_the_peak() {
        let r = seamount_raster();
        let config = RefinementConfig {
            tolerance: 1.0,
            max_iterations: 24,
            max_triangles: 200_000,
        };
        let mesh = generate_mesh(&r, &config).unwrap();
        assert!(validate_conformity(&mesh).is_conforming());
        assert!(mesh.triangle_count() > 64, "refinement never fired");

        // Median edge length within 2σ of the peak vs. the far field.
        let two_sigma = 0.08;
        let (mut near, mut far) = (Vec::new(), Vec::new());
        for e in mesh.edges() {
            let mid_lon = 0.5 * (e.endpoints[0].lon + e.endpoints[1].lon);
            let mid_lat = 0.5 * (e.endpoints[0].lat + e.endpoints[1].lat);
            let d = ((mid_lon - 0.5).powi(2) + (mid_lat - 0.25).powi(2)).sqrt();
            if d <= two_sigma {
                near.push(e.l);
            } else if d >= 3.0 * two_sigma {
                far.push(e.l);
            }
        }
        let median = |v: &mut Vec<f64>| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[v.len() / 2]
        };
        assert!(near.len() > 10 && far.len() > 10);
        let (m_near, m_far) = (median(&mut near), median(&mut far));
        assert!(
            m_far >= 4.0 * m_near,
            "median edge near peak {m_near} m, far field {m_far} m"
        );
    }

    #[test]
    fn halving_tolerance_never_coarsens() {
        let r = seamount_raster();
        let counts: Vec<usize> = [8.0, 4.0, 2.0]
            .iter()
            .map(|&tol| {
                let config = RefinementConfig {
                    tolerance: tol,
                    max_iterations: 24,
                    max_triangles: 200_000,
                };
                generate_mesh(&r, &config).unwrap().triangle_count()
            })
            .collect();
        assert!(counts[1] >= counts[0], "{counts:?}");
        assert!(counts[2] >= counts[1], "{counts:?}");
    }

    #[test]
    fn generation_is_deterministic() {
        let r = seamount_raster();
        let config = RefinementConfig {
            tolerance: 2.0,
            max_iterations: 24,
            max_triangles: 200_000,
        };
        let a = generate_mesh(&r, &config).unwrap();
        let b = generate_mesh(&r, &config).unwrap();
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        crate::cpgraph::write_mesh(&a, &mut buf_a).unwrap();
        crate::cpgraph::write_mesh(&b, &mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b, "two runs produced different meshes");
    }

    #[test]
    fn max_triangles_caps_growth() {
        let r = seamount_raster();
        let config = RefinementConfig {
            tolerance: 0.5,
            max_iterations: 40,
            max_triangles: 500,
        };
        let mesh = generate_mesh(&r, &config).unwrap();
        // The cap is checked between sweeps, so one sweep may overshoot,
        // but growth stops soon after.
        assert!(mesh.triangle_count() >= 500);
        assert!(mesh.triangle_count() < 5_000);
        assert!(validate_conformity(&mesh).is_conforming());
    }
}
