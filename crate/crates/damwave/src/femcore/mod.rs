//! P1 finite elements for the wave equation in longitude-latitude
//! coordinates.
//!
//! The water level is expanded in piecewise-linear basis functions on the
//! triangle mesh. Three operators appear in the semi-discrete system
//! `M·ü + C·u̇ + B(u)·u = 0`:
//!
//! * `M` — the consistent mass matrix,
//! * `C` — a mass-type damping matrix with a depth-dependent coefficient
//!   that switches on in shallow water,
//! * `B(u)` — the stiffness of the depth-weighted Laplacian, with the
//!   wave-speed coefficient `g·(u − h_b)` lagged at the given state.
//!
//! All element integrals are evaluated on a local tangent-plane chart per
//! element: longitude differences scale by `R·cos φ_c` and latitude
//! differences by `R`, with `φ_c` the element centroid latitude. That one
//! chart choice carries every metric factor — element areas pick up
//! `cos φ_c`, and the longitude-derivative part of the stiffness picks up
//! `1/cos² φ_c` — so the flat-bottom limit propagates waves at `√(g·depth)`
//! regardless of latitude.
//!
//! Assembly runs in two phases: element matrices are computed in parallel
//! (pure per-element work), then scattered into the global matrix
//! sequentially in ascending element order. The result is bitwise identical
//! at every thread count.

pub mod solver;
pub mod sparse;

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

pub use solver::{solve_spd, solve_spd_warm, SolveStats, DEFAULT_CG_TOL};
pub use sparse::{MatrixPattern, SparseSym};

use crate::cpgraph::{MeshGraph, TriangleNode};
use crate::{Error, Result};

/// Smallest water column (meters) used in the stiffness coefficient; keeps
/// the operator positive semidefinite over dry land.
pub const EPS_DRY: f64 = 0.01;

/// Physical constants of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsConstants {
    /// Gravitational acceleration, m/s².
    pub g: f64,
    /// Sphere radius, meters. Seeds mesh construction; assembled operators
    /// use the radius stored in the mesh itself.
    pub r: f64,
    /// Damping scale (dimensionless prefactor of the shallow-water drag).
    pub c0: f64,
    /// Depth threshold (meters, negative) below which damping fades out.
    pub h0: f64,
}

impl Default for PhysicsConstants {
    fn default() -> Self {
        PhysicsConstants {
            g: 9.81,
            r: 6_371_000.0,
            c0: 5e-4,
            h0: -5.0,
        }
    }
}

impl PhysicsConstants {
    /// Checks the sign constraints (`g > 0`, `r > 0`, `h0 < 0`).
    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gravity must be positive, got {}",
                self.g
            )));
        }
        if !(self.r > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sphere radius must be positive, got {}",
                self.r
            )));
        }
        if !(self.h0 < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "depth threshold h0 must be negative, got {}",
                self.h0
            )));
        }
        Ok(())
    }
}

/// Depth-dependent damping coefficient `c = c0 · h0 / min(h0, h_b)`.
///
/// In deep water (`h_b ≪ h0`) the quotient vanishes; at or above the
/// threshold depth the minimum saturates at `h0` and the coefficient
/// equals `c0`.
pub fn damping_coefficient(h_b: f64, constants: &PhysicsConstants) -> f64 {
    constants.c0 * constants.h0 / constants.h0.min(h_b)
}

/// Degree-of-freedom numbering of a mesh, plus the nodal seabed field.
///
/// Vertices are identified by their quantized (lon, lat) key and numbered
/// in ascending key order, so the numbering is deterministic and stable
/// under any triangle ordering.
#[derive(Debug, Clone)]
pub struct DofMap {
    index: BTreeMap<(i64, i64), usize>,
    lonlat: Vec<(f64, f64)>,
    h_b: Vec<f64>,
    /// Triangle id → dof triple, ascending by id.
    tri_dofs: Vec<(u64, [usize; 3])>,
}

/// Numbers the mesh vertices and captures nodal seabed elevations.
///
/// Fails if two vertices share a quantized position but disagree on
/// elevation — that indicates an inconsistently built mesh.
pub fn build_dof_map(mesh: &MeshGraph) -> Result<DofMap> {
    let mut registry: BTreeMap<(i64, i64), (f64, f64, f64)> = BTreeMap::new();
    for tri in mesh.triangles() {
        for v in tri.vertices {
            match registry.entry(v.key()) {
                Entry::Vacant(e) => {
                    e.insert((v.lon, v.lat, v.elev));
                }
                Entry::Occupied(e) => {
                    let (_, _, elev) = *e.get();
                    if elev != v.elev {
                        return Err(Error::InvalidArgument(format!(
                            "vertex at ({}, {}) carries two elevations: {} and {}",
                            v.lon, v.lat, elev, v.elev
                        )));
                    }
                }
            }
        }
    }

    let mut index = BTreeMap::new();
    let mut lonlat = Vec::with_capacity(registry.len());
    let mut h_b = Vec::with_capacity(registry.len());
    for (i, (key, (lon, lat, elev))) in registry.into_iter().enumerate() {
        index.insert(key, i);
        lonlat.push((lon, lat));
        h_b.push(elev);
    }

    let mut tri_dofs = Vec::with_capacity(mesh.triangle_count());
    for tri in mesh.triangles() {
        let dofs = [
            index[&tri.vertices[0].key()],
            index[&tri.vertices[1].key()],
            index[&tri.vertices[2].key()],
        ];
        if dofs[0] == dofs[1] || dofs[1] == dofs[2] || dofs[0] == dofs[2] {
            return Err(Error::DegenerateTriangle(format!(
                "triangle {} references a vertex twice",
                tri.id
            )));
        }
        tri_dofs.push((tri.id, dofs));
    }

    Ok(DofMap {
        index,
        lonlat,
        h_b,
        tri_dofs,
    })
}

impl DofMap {
    /// Number of degrees of freedom (distinct vertices).
    pub fn dof_count(&self) -> usize {
        self.h_b.len()
    }

    /// Nodal seabed elevations, indexed by dof.
    pub fn h_b(&self) -> &[f64] {
        &self.h_b
    }

    /// Longitude/latitude of a dof.
    pub fn position(&self, dof: usize) -> (f64, f64) {
        self.lonlat[dof]
    }

    /// Dof at the given coordinates, if a vertex sits there (quantized
    /// comparison).
    pub fn dof_at(&self, lon: f64, lat: f64) -> Option<usize> {
        self.index
            .get(&crate::cpgraph::quantize_pair(lon, lat))
            .copied()
    }

    /// Triangle-id/dof-triple pairs in ascending triangle order.
    pub fn triangles(&self) -> &[(u64, [usize; 3])] {
        &self.tri_dofs
    }

    /// Dof triple of one triangle.
    pub fn triangle_dofs(&self, tri: u64) -> Option<[usize; 3]> {
        self.tri_dofs
            .binary_search_by_key(&tri, |(id, _)| *id)
            .ok()
            .map(|k| self.tri_dofs[k].1)
    }
}

/// Precomputed per-element geometry used by every operator assembly.
#[derive(Debug, Clone, Copy)]
struct ElementGeometry {
    dofs: [usize; 3],
    /// Element area in the tangent-plane metric, m².
    area: f64,
    /// P1 basis gradients in local meters, 1/m.
    grads: [[f64; 2]; 3],
    /// Element-mean seabed elevation, meters.
    mean_hb: f64,
    /// Value-array positions of the 3×3 local block in the shared pattern.
    scatter: [[usize; 3]; 3],
}

fn element_geometry(tri: &TriangleNode, dofs: [usize; 3], radius: f64) -> Result<(f64, [[f64; 2]; 3], f64)> {
    let [a, b, c] = tri.vertices;
    let deg = std::f64::consts::PI / 180.0;
    let phi_c = (a.lat + b.lat + c.lat) / 3.0 * deg;
    let sx = radius * phi_c.cos() * deg; // meters per degree of longitude
    let sy = radius * deg; // meters per degree of latitude

    // Local chart with vertex a at the origin.
    let x = [0.0, (b.lon - a.lon) * sx, (c.lon - a.lon) * sx];
    let y = [0.0, (b.lat - a.lat) * sy, (c.lat - a.lat) * sy];
    let two_a = x[1] * y[2] - x[2] * y[1];
    if !(two_a > 0.0) || !two_a.is_finite() {
        return Err(Error::DegenerateTriangle(format!(
            "triangle {} has area {} m² in the tangent plane",
            tri.id,
            0.5 * two_a
        )));
    }
    let grads = [
        [(y[1] - y[2]) / two_a, (x[2] - x[1]) / two_a],
        [(y[2] - y[0]) / two_a, (x[0] - x[2]) / two_a],
        [(y[0] - y[1]) / two_a, (x[1] - x[0]) / two_a],
    ];
    let _ = dofs;
    let mean_hb = (a.elev + b.elev + c.elev) / 3.0;
    Ok((0.5 * two_a, grads, mean_hb))
}

/// Reusable assembly context: shared sparsity pattern plus cached element
/// geometry. Building it once and assembling many operators amortizes the
/// pattern construction, which matters when the stiffness is refreshed
/// every time step.
#[derive(Debug, Clone)]
pub struct Assembler {
    dim: usize,
    pattern: Arc<MatrixPattern>,
    elements: Vec<ElementGeometry>,
}

impl Assembler {
    /// Precomputes geometry and the shared pattern for `mesh` under
    /// `dofmap`. Element areas use the sphere radius carried by the mesh.
    pub fn new(dofmap: &DofMap, mesh: &MeshGraph) -> Result<Assembler> {
        let dim = dofmap.dof_count();
        let radius = mesh.radius();

        let mut pairs = Vec::with_capacity(dofmap.triangles().len() * 3);
        for (_, dofs) in dofmap.triangles() {
            pairs.push((dofs[0], dofs[1]));
            pairs.push((dofs[1], dofs[2]));
            pairs.push((dofs[0], dofs[2]));
        }
        let pattern = Arc::new(MatrixPattern::build(dim, pairs));

        let mut elements = Vec::with_capacity(dofmap.triangles().len());
        for (tri_id, dofs) in dofmap.triangles() {
            let tri = mesh
                .triangle(*tri_id)
                .ok_or(Error::UnknownTriangle(*tri_id))?;
            let (area, grads, mean_hb) = element_geometry(tri, *dofs, radius)?;
            let mut scatter = [[0usize; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    scatter[i][j] = pattern
                        .index_of(dofs[i], dofs[j])
                        .expect("pair inserted above");
                }
            }
            elements.push(ElementGeometry {
                dofs: *dofs,
                area,
                grads,
                mean_hb,
                scatter,
            });
        }

        Ok(Assembler {
            dim,
            pattern,
            elements,
        })
    }

    /// Number of degrees of freedom.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The sparsity pattern shared by every operator from this assembler.
    pub fn pattern(&self) -> &Arc<MatrixPattern> {
        &self.pattern
    }

    /// Total mesh area in the tangent-plane metric, m².
    pub fn total_area(&self) -> f64 {
        self.elements.iter().map(|e| e.area).sum()
    }

    /// Element-mean seabed elevations in element order (ascending triangle
    /// id), for callers that classify elements by depth.
    pub fn element_mean_hb(&self) -> impl Iterator<Item = f64> + '_ {
        self.elements.iter().map(|e| e.mean_hb)
    }

    /// Two-phase deterministic assembly: local 3×3 blocks in parallel,
    /// sequential scatter in ascending element order.
    fn assemble(&self, local: impl Fn(&ElementGeometry) -> [[f64; 3]; 3] + Sync) -> SparseSym {
        let blocks: Vec<[[f64; 3]; 3]> = self.elements.par_iter().map(&local).collect();
        let mut m = SparseSym::zeros(Arc::clone(&self.pattern));
        for (e, block) in self.elements.iter().zip(&blocks) {
            for i in 0..3 {
                for j in 0..3 {
                    m.add_at_index(e.scatter[i][j], block[i][j]);
                }
            }
        }
        m
    }

    /// Consistent (or lumped) P1 mass matrix.
    pub fn mass(&self, lumped: bool) -> SparseSym {
        self.assemble(|e| mass_block(e.area, lumped))
    }

    /// Damping matrix: the element mass block scaled by the damping
    /// coefficient at the element-mean seabed elevation.
    pub fn damping(&self, constants: &PhysicsConstants) -> SparseSym {
        self.assemble(|e| {
            let c = damping_coefficient(e.mean_hb, constants);
            let mut block = mass_block(e.area, false);
            for row in &mut block {
                for v in row {
                    *v *= c;
                }
            }
            block
        })
    }

    /// Stiffness `B(u)` with the wave-speed coefficient lagged at the nodal
    /// state `u`: per element `κ_e = g · max(ū_e − h̄_b, ε_dry)` multiplies
    /// the P1 Laplacian block. Diagonal entries are the negated off-diagonal
    /// row sums, so `B·1 = 0` holds to machine precision.
    pub fn stiffness(&self, u: &[f64], constants: &PhysicsConstants) -> Result<SparseSym> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "state has {} entries but the mesh has {} dofs",
                u.len(),
                self.dim
            )));
        }
        let g = constants.g;
        Ok(self.assemble(|e| {
            let mean_u = (u[e.dofs[0]] + u[e.dofs[1]] + u[e.dofs[2]]) / 3.0;
            let kappa = g * (mean_u - e.mean_hb).max(EPS_DRY);
            let mut block = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in (i + 1)..3 {
                    let v = kappa
                        * e.area
                        * (e.grads[i][0] * e.grads[j][0] + e.grads[i][1] * e.grads[j][1]);
                    block[i][j] = v;
                    block[j][i] = v;
                }
            }
            for i in 0..3 {
                let mut off = 0.0;
                for j in 0..3 {
                    if j != i {
                        off += block[i][j];
                    }
                }
                block[i][i] = -off;
            }
            block
        }))
    }
}

/// Element mass block: `(A/12)·[[2,1,1],[1,2,1],[1,1,2]]` consistent, or
/// `A/3` on the diagonal when lumped.
fn mass_block(area: f64, lumped: bool) -> [[f64; 3]; 3] {
    if lumped {
        let d = area / 3.0;
        [[d, 0.0, 0.0], [0.0, d, 0.0], [0.0, 0.0, d]]
    } else {
        let s = area / 12.0;
        [
            [2.0 * s, s, s],
            [s, 2.0 * s, s],
            [s, s, 2.0 * s],
        ]
    }
}

/// Assembles the consistent mass matrix.
pub fn assemble_mass(dofmap: &DofMap, mesh: &MeshGraph) -> Result<SparseSym> {
    Ok(Assembler::new(dofmap, mesh)?.mass(false))
}

/// Assembles the lumped (diagonal) mass matrix.
pub fn assemble_mass_lumped(dofmap: &DofMap, mesh: &MeshGraph) -> Result<SparseSym> {
    Ok(Assembler::new(dofmap, mesh)?.mass(true))
}

/// Assembles the damping matrix.
pub fn assemble_damping(
    dofmap: &DofMap,
    mesh: &MeshGraph,
    constants: &PhysicsConstants,
) -> Result<SparseSym> {
    Ok(Assembler::new(dofmap, mesh)?.damping(constants))
}

/// Assembles the stiffness matrix at nodal state `u`.
pub fn assemble_stiffness(
    dofmap: &DofMap,
    mesh: &MeshGraph,
    u: &[f64],
    constants: &PhysicsConstants,
) -> Result<SparseSym> {
    Assembler::new(dofmap, mesh)?.stiffness(u, constants)
}
