//! Scenario files: a small plain-text format describing one dam-break run.
//!
//! # Grammar
//!
//! A scenario is line-oriented. `#` starts a comment (to end of line);
//! blank lines are ignored. Three kinds of statements exist:
//!
//! **Scalar keys** — `key = value`, one per line, each key at most once:
//!
//! | key              | meaning                                        | default          |
//! |------------------|------------------------------------------------|------------------|
//! | `mesh`           | path to a mesh file to load                    | —                |
//! | `raster`         | path to an elevation raster (ESRI ASCII)       | —                |
//! | `tolerance`      | adaptive refinement tolerance, meters          | 1.0              |
//! | `max_iterations` | adaptive refinement sweep cap                  | 32               |
//! | `max_triangles`  | adaptive refinement size cap                   | 1048576          |
//! | `uniform_rounds` | extra rounds bisecting every triangle          | 0                |
//! | `default_level`  | initial water level outside all regions, m     | 0.0              |
//! | `tau`            | time step, seconds (required)                  | —                |
//! | `n_steps`        | number of steps (required)                     | —                |
//! | `output_cadence` | write a snapshot every this many steps; 0 = off| 0                |
//! | `exaggeration`   | snapshot z-scale, degrees per meter of level   | 0.001            |
//! | `rho`            | integrator spectral radius target in [0, 1]    | 0.2              |
//! | `convention`     | `standard` or `negated`                        | `standard`       |
//! | `g`              | gravity, m/s²                                  | 9.81             |
//! | `c0`             | reference damping coefficient                  | 5e-4             |
//! | `h0`             | reference depth for damping, m (negative)      | -5.0             |
//! | `radius`         | sphere radius, m                               | 6371000          |
//! | `picard_sweeps`  | extra stiffness refreshes per step             | 0                |
//! | `solver_tol`     | linear-solver relative residual target         | 1e-10            |
//!
//! Either `mesh` or `raster` must be present. With only `raster`, the mesh
//! is generated adaptively; `uniform_rounds` additionally requires `raster`
//! (new midpoints sample their elevation from it).
//!
//! **Regions** — an ordered block per region; the first region containing
//! a node sets its initial level:
//!
//! ```text
//! region atlantic 6.0      # name and initial level in meters
//!   -1.0 40.0              # polygon vertices, lon lat, ≥ 3, open form
//!    9.0 40.0
//!    9.0 49.0
//!   -1.0 49.0
//! end
//! ```
//!
//! **Gauges** — `gauge <name> <lon> <lat>`, one per line. Gauge names
//! become output file names; names and positions must be unique.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::cpgraph::quantize_pair;
use crate::femcore::{PhysicsConstants, DEFAULT_CG_TOL};
use crate::terrain::RefinementConfig;
use crate::timestepper::Convention;
use crate::{Error, Result};

use super::vtu::DEFAULT_EXAGGERATION;

/// One initial-condition polygon: nodes inside it start at `level`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    /// Name used in reports (and to disambiguate errors).
    pub name: String,
    /// Initial water level inside the polygon, meters.
    pub level: f64,
    /// Simple polygon in (lon, lat) degrees, open form (no repeated
    /// closing vertex).
    pub polygon: Vec<(f64, f64)>,
}

/// A named observation point.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeSpec {
    pub name: String,
    pub lon: f64,
    pub lat: f64,
}

/// A fully described dam-break run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Mesh file to load, if any.
    pub mesh: Option<PathBuf>,
    /// Elevation raster; mandatory when the mesh is generated.
    pub raster: Option<PathBuf>,
    /// Adaptive-generation knobs (used only without `mesh`).
    pub refinement: RefinementConfig,
    /// Rounds of refine-everything applied after loading/generation.
    pub uniform_rounds: usize,
    /// Ordered initial-condition polygons; first match wins.
    pub regions: Vec<Region>,
    /// Initial level where no region matches, meters.
    pub default_level: f64,
    /// Observation points.
    pub gauges: Vec<GaugeSpec>,
    /// Time step, seconds.
    pub tau: f64,
    /// Number of steps.
    pub n_steps: usize,
    /// Snapshot cadence in steps; 0 disables snapshots.
    pub output_cadence: usize,
    /// Snapshot z-scale, degrees per meter of water level.
    pub exaggeration: f64,
    /// Physical constants.
    pub constants: PhysicsConstants,
    /// Integrator spectral-radius target.
    pub rho: f64,
    /// Integrator parameter convention.
    pub convention: Convention,
    /// Extra stiffness refreshes per step.
    pub picard_sweeps: usize,
    /// Linear-solver relative residual target.
    pub solver_tol: f64,
}

impl Default for Scenario {
    fn default() -> Scenario {
        Scenario {
            mesh: None,
            raster: None,
            refinement: RefinementConfig::default(),
            uniform_rounds: 0,
            regions: Vec::new(),
            default_level: 0.0,
            gauges: Vec::new(),
            tau: 2500.0,
            n_steps: 0,
            output_cadence: 0,
            exaggeration: DEFAULT_EXAGGERATION,
            constants: PhysicsConstants::default(),
            rho: 0.2,
            convention: Convention::StandardSecondOrder,
            picard_sweeps: 0,
            solver_tol: DEFAULT_CG_TOL,
        }
    }
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    let scenario = parse_scenario(&text, &path.display().to_string())?;
    scenario.validate()?;
    Ok(scenario)
}

/// Region block under construction during parsing.
struct OpenRegion {
    name: String,
    level: f64,
    polygon: Vec<(f64, f64)>,
}

/// Parses scenario text. `label` names the source in error messages
/// (usually the file path). Parsing checks syntax and key presence;
/// semantic checks live in [`Scenario::validate`].
pub fn parse_scenario(text: &str, label: &str) -> Result<Scenario> {
    let mut s = Scenario::default();
    let mut seen: HashSet<String> = HashSet::new();
    let mut open: Option<OpenRegion> = None;
    let (mut have_tau, mut have_steps) = (false, false);

    let err = |line: usize, message: String| Error::Parse {
        path: label.to_string(),
        line,
        message,
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }

        if let Some(region) = open.as_mut() {
            if line == "end" {
                let region = open.take().unwrap();
                s.regions.push(Region {
                    name: region.name,
                    level: region.level,
                    polygon: region.polygon,
                });
            } else {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 2 {
                    return Err(err(
                        line_no,
                        format!(
                            "inside region `{}`: expected `lon lat` or `end`, got `{line}`",
                            region.name
                        ),
                    ));
                }
                let lon = parse_num::<f64>(toks[0], "longitude", line_no, label)?;
                let lat = parse_num::<f64>(toks[1], "latitude", line_no, label)?;
                region.polygon.push((lon, lat));
            }
            continue;
        }

        if let Some(rest) = line.strip_prefix("region ") {
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(err(
                    line_no,
                    format!("expected `region <name> <level>`, got `{line}`"),
                ));
            }
            open = Some(OpenRegion {
                name: toks[0].to_string(),
                level: parse_num::<f64>(toks[1], "region level", line_no, label)?,
                polygon: Vec::new(),
            });
            continue;
        }

        if let Some(rest) = line.strip_prefix("gauge ") {
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(err(
                    line_no,
                    format!("expected `gauge <name> <lon> <lat>`, got `{line}`"),
                ));
            }
            s.gauges.push(GaugeSpec {
                name: toks[0].to_string(),
                lon: parse_num::<f64>(toks[1], "gauge longitude", line_no, label)?,
                lat: parse_num::<f64>(toks[2], "gauge latitude", line_no, label)?,
            });
            continue;
        }

        let Some((key, value)) = line.split_once('=') else {
            return Err(err(
                line_no,
                format!("expected `key = value`, `region ...`, or `gauge ...`, got `{line}`"),
            ));
        };
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(err(line_no, format!("duplicate key `{key}`")));
        }
        match key {
            "mesh" => s.mesh = Some(PathBuf::from(value)),
            "raster" => s.raster = Some(PathBuf::from(value)),
            "tolerance" => {
                s.refinement.tolerance = parse_num(value, key, line_no, label)?;
            }
            "max_iterations" => {
                s.refinement.max_iterations = parse_num(value, key, line_no, label)?;
            }
            "max_triangles" => {
                s.refinement.max_triangles = parse_num(value, key, line_no, label)?;
            }
            "uniform_rounds" => s.uniform_rounds = parse_num(value, key, line_no, label)?,
            "default_level" => s.default_level = parse_num(value, key, line_no, label)?,
            "tau" => {
                s.tau = parse_num(value, key, line_no, label)?;
                have_tau = true;
            }
            "n_steps" => {
                s.n_steps = parse_num(value, key, line_no, label)?;
                have_steps = true;
            }
            "output_cadence" => s.output_cadence = parse_num(value, key, line_no, label)?,
            "exaggeration" => s.exaggeration = parse_num(value, key, line_no, label)?,
            "rho" => s.rho = parse_num(value, key, line_no, label)?,
            "convention" => {
                s.convention = match value {
                    "standard" => Convention::StandardSecondOrder,
                    "negated" => Convention::NegatedAlphaF,
                    other => {
                        return Err(err(
                            line_no,
                            format!("convention must be `standard` or `negated`, got `{other}`"),
                        ))
                    }
                };
            }
            "g" => s.constants.g = parse_num(value, key, line_no, label)?,
            "c0" => s.constants.c0 = parse_num(value, key, line_no, label)?,
            "h0" => s.constants.h0 = parse_num(value, key, line_no, label)?,
            "radius" => s.constants.r = parse_num(value, key, line_no, label)?,
            "picard_sweeps" => s.picard_sweeps = parse_num(value, key, line_no, label)?,
            "solver_tol" => s.solver_tol = parse_num(value, key, line_no, label)?,
            other => return Err(err(line_no, format!("unknown key `{other}`"))),
        }
    }

    if let Some(region) = open {
        return Err(Error::Parse {
            path: label.to_string(),
            line: text.lines().count(),
            message: format!("region `{}` is missing its `end` line", region.name),
        });
    }
    if !have_tau {
        return Err(Error::Scenario(format!("{label}: missing required key `tau`")));
    }
    if !have_steps {
        return Err(Error::Scenario(format!(
            "{label}: missing required key `n_steps`"
        )));
    }
    if s.mesh.is_none() && s.raster.is_none() {
        return Err(Error::Scenario(format!(
            "{label}: a scenario needs `mesh` or `raster`"
        )));
    }
    Ok(s)
}

fn parse_num<T: std::str::FromStr>(
    value: &str,
    what: &str,
    line: usize,
    label: &str,
) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        path: label.to_string(),
        line,
        message: format!("invalid {what}: `{value}`"),
    })
}

/// Characters allowed in region and gauge names (they become file names).
fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl Scenario {
    /// Semantic validation: parameter ranges, polygon simplicity, gauge
    /// uniqueness. Mesh-dependent checks (gauges inside the mesh, regions
    /// overlapping the mesh box) run at preparation time.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Scenario(msg));

        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return bad(format!("tau must be positive and finite, got {}", self.tau));
        }
        if !(self.solver_tol > 0.0) || !self.solver_tol.is_finite() {
            return bad(format!(
                "solver_tol must be positive and finite, got {}",
                self.solver_tol
            ));
        }
        if !self.rho.is_finite() || !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1], got {}", self.rho));
        }
        if !self.exaggeration.is_finite() || self.exaggeration < 0.0 {
            return bad(format!(
                "exaggeration must be finite and non-negative, got {}",
                self.exaggeration
            ));
        }
        self.constants.validate()?;
        if self.mesh.is_none() {
            let t = self.refinement.tolerance;
            if !(t > 0.0) || !t.is_finite() {
                return bad(format!("tolerance must be positive and finite, got {t}"));
            }
        }
        if self.uniform_rounds > 0 && self.raster.is_none() {
            return bad(
                "uniform_rounds needs a raster to sample midpoint elevations from".to_string(),
            );
        }

        let mut names = HashSet::new();
        for region in &self.regions {
            if !valid_name(&region.name) {
                return bad(format!(
                    "region name `{}` may only use letters, digits, `_`, `-`",
                    region.name
                ));
            }
            if !names.insert(region.name.clone()) {
                return bad(format!("duplicate region name `{}`", region.name));
            }
            if !region.level.is_finite() {
                return bad(format!("region `{}` has a non-finite level", region.name));
            }
            validate_polygon(&region.name, &region.polygon)?;
        }

        let mut names = HashSet::new();
        let mut keys = HashSet::new();
        for gauge in &self.gauges {
            if !valid_name(&gauge.name) {
                return bad(format!(
                    "gauge name `{}` may only use letters, digits, `_`, `-`",
                    gauge.name
                ));
            }
            if !names.insert(gauge.name.clone()) {
                return bad(format!("duplicate gauge name `{}`", gauge.name));
            }
            if !world_coords(gauge.lon, gauge.lat) {
                return bad(format!(
                    "gauge `{}` at ({}, {}) is outside lon [-180,180] × lat [-90,90]",
                    gauge.name, gauge.lon, gauge.lat
                ));
            }
            if !keys.insert(quantize_pair(gauge.lon, gauge.lat)) {
                return bad(format!(
                    "gauge `{}` duplicates another gauge's position ({}, {})",
                    gauge.name, gauge.lon, gauge.lat
                ));
            }
        }
        Ok(())
    }
}

fn world_coords(lon: f64, lat: f64) -> bool {
    lon.is_finite()
        && lat.is_finite()
        && (-180.0..=180.0).contains(&lon)
        && (-90.0..=90.0).contains(&lat)
}

/// Rejects degenerate and self-intersecting polygons.
fn validate_polygon(name: &str, polygon: &[(f64, f64)]) -> Result<()> {
    let bad = |msg: String| Err(Error::Scenario(msg));
    let n = polygon.len();
    if n < 3 {
        return bad(format!(
            "region `{name}` needs at least 3 vertices, has {n}"
        ));
    }
    for &(lon, lat) in polygon {
        if !world_coords(lon, lat) {
            return bad(format!(
                "region `{name}` vertex ({lon}, {lat}) is outside lon [-180,180] × lat [-90,90]"
            ));
        }
    }
    for i in 0..n {
        if polygon[i] == polygon[(i + 1) % n] {
            return bad(format!(
                "region `{name}` repeats vertex ({}, {}) — zero-length edge",
                polygon[i].0, polygon[i].1
            ));
        }
    }
    // Pairwise intersection of non-adjacent edges (edge i joins vertex i
    // to i+1, cyclically).
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (a, b) = (polygon[i], polygon[(i + 1) % n]);
            let (c, d) = (polygon[j], polygon[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return bad(format!(
                    "region `{name}` is self-intersecting: edge {i} crosses edge {j}"
                ));
            }
        }
    }
    Ok(())
}

/// Twice the signed area of triangle abc; sign gives orientation.
fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Is `p` (known collinear with a–b) within the segment's bounding box?
fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// Segment intersection including touching and collinear overlap.
fn segments_intersect(
    p1: (f64, f64),
    p2: (f64, f64),
    p3: (f64, f64),
    p4: (f64, f64),
) -> bool {
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p3, p4, p1))
        || (d2 == 0.0 && on_segment(p3, p4, p2))
        || (d3 == 0.0 && on_segment(p1, p2, p3))
        || (d4 == 0.0 && on_segment(p1, p2, p4))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "
# a complete scenario
raster = data/basins.asc     # elevation source
tolerance = 0.5
max_iterations = 40
max_triangles = 200000
uniform_rounds = 2
default_level = 0.25
tau = 2500
n_steps = 300
output_cadence = 10
exaggeration = 0.002
rho = 0.4
convention = negated
g = 9.8
c0 = 4e-4
h0 = -4
picard_sweeps = 1
solver_tol = 1e-9

region atlantic 6.0
  -1.0 40.0
   9.0 40.0    # east side
   9.0 49.0
  -1.0 49.0
end

gauge north 4.0 45.0
gauge south 4.0 41.0
";

    #[test]
    fn full_scenario_parses() {
        let s = parse_scenario(FULL, "inline").unwrap();
        s.validate().unwrap();
        assert_eq!(s.raster.as_deref(), Some(Path::new("data/basins.asc")));
        assert_eq!(s.mesh, None);
        assert_eq!(s.refinement.tolerance, 0.5);
        assert_eq!(s.refinement.max_iterations, 40);
        assert_eq!(s.refinement.max_triangles, 200_000);
        assert_eq!(s.uniform_rounds, 2);
        assert_eq!(s.default_level, 0.25);
        assert_eq!(s.tau, 2500.0);
        assert_eq!(s.n_steps, 300);
        assert_eq!(s.output_cadence, 10);
        assert_eq!(s.exaggeration, 0.002);
        assert_eq!(s.rho, 0.4);
        assert_eq!(s.convention, Convention::NegatedAlphaF);
        assert_eq!(s.constants.g, 9.8);
        assert_eq!(s.constants.c0, 4e-4);
        assert_eq!(s.constants.h0, -4.0);
        assert_eq!(s.picard_sweeps, 1);
        assert_eq!(s.solver_tol, 1e-9);
        assert_eq!(s.regions.len(), 1);
        assert_eq!(s.regions[0].name, "atlantic");
        assert_eq!(s.regions[0].level, 6.0);
        assert_eq!(s.regions[0].polygon.len(), 4);
        assert_eq!(s.regions[0].polygon[1], (9.0, 40.0));
        assert_eq!(s.gauges.len(), 2);
        assert_eq!(s.gauges[1].name, "south");
    }

    #[test]
    fn minimal_scenario_uses_defaults() {
        let s = parse_scenario("mesh = m.dat\ntau = 10\nn_steps = 5\n", "inline").unwrap();
        assert_eq!(s.mesh.as_deref(), Some(Path::new("m.dat")));
        assert_eq!(s.rho, 0.2);
        assert_eq!(s.convention, Convention::StandardSecondOrder);
        assert_eq!(s.constants, PhysicsConstants::default());
        assert_eq!(s.output_cadence, 0);
        assert_eq!(s.picard_sweeps, 0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases: &[(&str, usize, &str)] = &[
            ("tau = fast\n", 1, "invalid tau"),
            ("tau = 10\nwobble = 3\n", 2, "unknown key"),
            ("tau = 10\ntau = 20\n", 2, "duplicate key"),
            ("gauge g1 0.0\n", 1, "gauge <name> <lon> <lat>"),
            ("region a\n", 1, "region <name> <level>"),
            ("region a 1.0\n0.0 0.0 0.0\n", 2, "expected `lon lat`"),
            ("just words\n", 1, "expected `key = value`"),
        ];
        for (text, line, needle) in cases {
            let e = parse_scenario(text, "inline").unwrap_err();
            let msg = e.to_string();
            assert!(
                msg.contains(&format!("inline:{line}")) && msg.contains(needle),
                "for {text:?}: got `{msg}`"
            );
        }
    }

    #[test]
    fn missing_requirements_are_rejected() {
        let e = parse_scenario("mesh = m\nn_steps = 1\n", "x").unwrap_err();
        assert!(e.to_string().contains("tau"));
        let e = parse_scenario("mesh = m\ntau = 1\n", "x").unwrap_err();
        assert!(e.to_string().contains("n_steps"));
        let e = parse_scenario("tau = 1\nn_steps = 1\n", "x").unwrap_err();
        assert!(e.to_string().contains("`mesh` or `raster`"));
        let e = parse_scenario("mesh = m\ntau = 1\nn_steps = 1\nregion a 1\n0 0\n", "x")
            .unwrap_err();
        assert!(e.to_string().contains("missing its `end`"));
    }

    fn base() -> Scenario {
        Scenario {
            mesh: Some(PathBuf::from("m.dat")),
            n_steps: 1,
            ..Scenario::default()
        }
    }

    #[test]
    fn validate_checks_ranges() {
        let mut s = base();
        s.tau = 0.0;
        assert!(s.validate().is_err());
        let mut s = base();
        s.rho = 1.5;
        assert!(s.validate().is_err());
        let mut s = base();
        s.uniform_rounds = 1; // no raster to sample from
        assert!(s.validate().is_err());
        let mut s = base();
        s.mesh = None;
        s.raster = Some(PathBuf::from("r.asc"));
        s.refinement.tolerance = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn validate_rejects_bad_polygons() {
        let poly = |pts: &[(f64, f64)]| Region {
            name: "a".into(),
            level: 1.0,
            polygon: pts.to_vec(),
        };
        // Too few vertices.
        let mut s = base();
        s.regions = vec![poly(&[(0.0, 0.0), (1.0, 0.0)])];
        assert!(s.validate().is_err());
        // Repeated vertex.
        let mut s = base();
        s.regions = vec![poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 1.0)])];
        assert!(s.validate().is_err());
        // Bow-tie self-intersection.
        let mut s = base();
        s.regions = vec![poly(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)])];
        let e = s.validate().unwrap_err();
        assert!(e.to_string().contains("self-intersecting"), "{e}");
        // A convex quad passes.
        let mut s = base();
        s.regions = vec![poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])];
        s.validate().unwrap();
        // A concave (C-shaped) hexagon passes too.
        let mut s = base();
        s.regions = vec![poly(&[
            (0.0, 0.0),
            (3.0, 0.0),
            (3.0, 3.0),
            (0.0, 3.0),
            (0.0, 2.0),
            (2.0, 2.0),
            (2.0, 1.0),
            (0.0, 1.0),
        ])];
        s.validate().unwrap();
    }

    #[test]
    fn validate_rejects_gauge_conflicts() {
        let g = |name: &str, lon: f64, lat: f64| GaugeSpec {
            name: name.into(),
            lon,
            lat,
        };
        let mut s = base();
        s.gauges = vec![g("a", 0.0, 0.0), g("a", 1.0, 0.0)];
        assert!(s.validate().unwrap_err().to_string().contains("duplicate gauge name"));
        // Same position under two names: zero separation is useless for
        // front timing, rejected up front.
        let mut s = base();
        s.gauges = vec![g("a", 1.0, 2.0), g("b", 1.0, 2.0)];
        assert!(s.validate().unwrap_err().to_string().contains("position"));
        let mut s = base();
        s.gauges = vec![g("bad/name", 0.0, 0.0)];
        assert!(s.validate().is_err());
    }

    #[test]
    fn duplicate_region_names_are_rejected() {
        let mut s = base();
        let square = vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        s.regions = vec![
            Region {
                name: "a".into(),
                level: 1.0,
                polygon: square.clone(),
            },
            Region {
                name: "a".into(),
                level: 2.0,
                polygon: square,
            },
        ];
        assert!(s.validate().unwrap_err().to_string().contains("duplicate region"));
    }
}
