//! Composition-graph mesh model and longest-edge refinement.
//!
//! A triangular mesh is stored as a graph with two node kinds: triangle
//! nodes carrying their three vertex coordinates and an ordered list of
//! three edge-node ids (bonds), and edge nodes carrying endpoints, length,
//! a boundary flag `b`, a break marker `br`, and the ids of their one or
//! two incident triangles. Refinement is expressed as four rewrite
//! productions over this graph:
//!
//! * **mark-longest** — a triangle flagged by the refinement criterion
//!   (`rc`) marks its longest edge for breaking (`br`).
//! * **propagate** — a marked edge that is not the longest edge of one of
//!   its incident triangles marks that triangle's longest edge too.
//! * **split-interior** — a marked interior edge that is the longest edge
//!   of both incident triangles is bisected; both triangles are replaced
//!   by two children each.
//! * **split-boundary** — a marked boundary edge that is the longest edge
//!   of its single triangle is bisected; the triangle is replaced by two
//!   children.
//!
//! Driving these productions to a fixed point ([`MeshGraph::rivara_refine`])
//! performs Rivara longest-edge bisection: every flagged triangle is
//! eventually bisected and the mesh stays conforming (no hanging nodes)
//! with the minimum interior angle bounded below by half the initial
//! mesh's minimum angle.

mod conformity;
mod format;

pub use conformity::{validate_conformity, ConformityReport, Violation};
pub use format::{load_mesh, read_mesh, save_mesh, write_mesh};

use crate::{Error, Result};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Relative tolerance under which two edge lengths count as tied when
/// choosing a triangle's longest edge. Ties are then broken in favor of
/// boundary edges, and finally by smallest edge id, which makes refinement
/// deterministic and replayable.
pub const LONGEST_EDGE_TIE_TOL: f64 = 1e-12;

/// Default sphere radius in meters used for edge lengths.
pub const DEFAULT_RADIUS: f64 = 6_371_000.0;

/// Resolution (degrees) at which vertex coordinates are quantized when
/// testing two vertices for identity.
pub const VERTEX_QUANTUM_DEG: f64 = 1e-9;

/// A mesh vertex: position in degrees plus elevation in meters
/// (negative below sea level).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coord {
    pub lon: f64,
    pub lat: f64,
    pub elev: f64,
}

impl Coord {
    pub fn new(lon: f64, lat: f64, elev: f64) -> Self {
        Coord { lon, lat, elev }
    }

    /// Quantized identity key; two vertices closer than the quantum in both
    /// coordinates are the same mesh vertex.
    pub fn key(&self) -> (i64, i64) {
        quantize_pair(self.lon, self.lat)
    }

    /// Position mapped to the sphere of radius `radius`, in meters.
    /// Elevation is deliberately ignored: edge lengths measure map
    /// distance, not terrain relief.
    pub fn to_sphere(&self, radius: f64) -> [f64; 3] {
        let lon = self.lon.to_radians();
        let lat = self.lat.to_radians();
        [
            radius * lat.cos() * lon.cos(),
            radius * lat.cos() * lon.sin(),
            radius * lat.sin(),
        ]
    }
}

/// Quantizes a lon/lat pair to the vertex identity grid.
pub fn quantize_pair(lon: f64, lat: f64) -> (i64, i64) {
    (
        (lon / VERTEX_QUANTUM_DEG).round() as i64,
        (lat / VERTEX_QUANTUM_DEG).round() as i64,
    )
}

/// Straight-line (chord) distance in meters between two points mapped to
/// the sphere of the given radius. Elevation is ignored. The chord is
/// monotone in great-circle distance, so "longest edge" comparisons agree
/// with the geodesic ordering while staying cheap and pole-safe.
pub fn chord_length(p: Coord, q: Coord, radius: f64) -> f64 {
    let a = p.to_sphere(radius);
    let b = q.to_sphere(radius);
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Triangle node: three vertices in counterclockwise order (positive area
/// in the lon-lat plane) and the ids of the three side edges, where bond
/// `k` is the edge between vertices `k` and `(k + 1) % 3`.
#[derive(Debug, Clone)]
pub struct TriangleNode {
    pub id: u64,
    pub vertices: [Coord; 3],
    pub bonds: [u64; 3],
    /// Refinement-criterion flag; consumed by the mark-longest production.
    pub rc: bool,
}

impl TriangleNode {
    /// Signed area in the lon-lat plane, degree² units. Positive for
    /// counterclockwise vertex order.
    pub fn signed_area_deg2(&self) -> f64 {
        let [a, b, c] = &self.vertices;
        0.5 * ((b.lon - a.lon) * (c.lat - a.lat) - (c.lon - a.lon) * (b.lat - a.lat))
    }

    /// Minimum interior angle in radians, measured in the lon-lat plane.
    pub fn min_angle(&self) -> f64 {
        let mut min = f64::INFINITY;
        for k in 0..3 {
            let o = self.vertices[k];
            let p = self.vertices[(k + 1) % 3];
            let q = self.vertices[(k + 2) % 3];
            let u = (p.lon - o.lon, p.lat - o.lat);
            let v = (q.lon - o.lon, q.lat - o.lat);
            let dot = u.0 * v.0 + u.1 * v.1;
            let nu = (u.0 * u.0 + u.1 * u.1).sqrt();
            let nv = (v.0 * v.0 + v.1 * v.1).sqrt();
            let cos = (dot / (nu * nv)).clamp(-1.0, 1.0);
            min = min.min(cos.acos());
        }
        min
    }

    /// Index `k` such that `bonds[k] == edge`, if any.
    fn bond_index(&self, edge: u64) -> Option<usize> {
        self.bonds.iter().position(|&b| b == edge)
    }
}

/// Incident-triangle list of an edge: one entry on the boundary, two in
/// the interior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incident {
    slots: [u64; 2],
    len: u8,
}

impl Incident {
    pub fn none() -> Self {
        Incident { slots: [0, 0], len: 0 }
    }

    pub fn one(t: u64) -> Self {
        Incident { slots: [t, 0], len: 1 }
    }

    pub fn two(t0: u64, t1: u64) -> Self {
        Incident { slots: [t0, t1], len: 2 }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.slots[..self.len as usize]
    }

    pub fn contains(&self, t: u64) -> bool {
        self.as_slice().contains(&t)
    }

    fn push(&mut self, t: u64) -> Result<()> {
        if self.len >= 2 {
            return Err(Error::NotConforming(format!(
                "edge already has two incident triangles, cannot add {t}"
            )));
        }
        self.slots[self.len as usize] = t;
        self.len += 1;
        Ok(())
    }

    /// Replaces triangle id `old` with `new`; panics if `old` is absent
    /// (that would be an internal bookkeeping bug, not a user error).
    fn replace(&mut self, old: u64, new: u64) {
        for slot in &mut self.slots[..self.len as usize] {
            if *slot == old {
                *slot = new;
                return;
            }
        }
        panic!("edge incidence list does not contain triangle {old}");
    }
}

/// Edge node: endpoints, chord length, boundary flag `b`, break marker
/// `br`, and incident triangles.
#[derive(Debug, Clone)]
pub struct EdgeNode {
    pub id: u64,
    pub endpoints: [Coord; 2],
    /// Chord length in meters at the mesh's sphere radius; always equals
    /// `chord_length(endpoints[0], endpoints[1], radius)`.
    pub l: f64,
    /// Boundary flag: true iff exactly one triangle is incident.
    pub b: bool,
    /// Break marker set by the marking productions and consumed by the
    /// split productions.
    pub br: bool,
    pub incident: Incident,
}

impl EdgeNode {
    /// Unordered endpoint identity, for matching edges to triangle sides.
    fn key(&self) -> ((i64, i64), (i64, i64)) {
        edge_key(self.endpoints[0], self.endpoints[1])
    }
}

/// Unordered quantized endpoint-pair key.
fn edge_key(a: Coord, b: Coord) -> ((i64, i64), (i64, i64)) {
    let ka = a.key();
    let kb = b.key();
    if ka <= kb {
        (ka, kb)
    } else {
        (kb, ka)
    }
}

/// Elevation source consulted when a split creates a new vertex: given
/// (lon, lat) in degrees, returns elevation in meters. When absent, new
/// vertices take the mean of the parent edge's endpoint elevations.
pub type ElevationFn<'a> = &'a dyn Fn(f64, f64) -> f64;

/// One applied production, as recorded by [`MeshGraph::rivara_refine`].
/// The sequence of records replays the whole derivation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Production {
    /// A flagged triangle marked its longest edge.
    MarkLongest { tri: u64, edge: u64 },
    /// Marked edge `from_edge` was not the longest of incident triangle
    /// `tri`, so that triangle's longest edge `edge` was newly marked.
    Propagate { from_edge: u64, tri: u64, edge: u64 },
    /// A marked interior edge, longest for both sharers, was bisected.
    SplitInterior { edge: u64, created: [u64; 4] },
    /// A marked boundary edge, longest for its triangle, was bisected.
    SplitBoundary { edge: u64, created: [u64; 2] },
}

impl Production {
    /// Short tag for compact golden-sequence assertions.
    pub fn tag(&self) -> &'static str {
        match self {
            Production::MarkLongest { .. } => "mark",
            Production::Propagate { .. } => "propagate",
            Production::SplitInterior { .. } => "split-interior",
            Production::SplitBoundary { .. } => "split-boundary",
        }
    }
}

/// Full record of one refinement run.
#[derive(Debug, Clone, Default)]
pub struct RefinementLog {
    pub productions: Vec<Production>,
}

impl RefinementLog {
    pub fn tags(&self) -> Vec<&'static str> {
        self.productions.iter().map(|p| p.tag()).collect()
    }
}

/// The mesh graph. Triangles and edges share one id counter; ids are never
/// reused, so a refinement log unambiguously names every entity it touched.
#[derive(Debug, Clone)]
pub struct MeshGraph {
    triangles: BTreeMap<u64, TriangleNode>,
    edges: BTreeMap<u64, EdgeNode>,
    next_id: u64,
    radius: f64,
}

impl MeshGraph {
    /// Creates an empty mesh whose edge lengths are chords on the sphere
    /// of `radius` meters.
    pub fn new(radius: f64) -> Self {
        MeshGraph {
            triangles: BTreeMap::new(),
            edges: BTreeMap::new(),
            next_id: 0,
            radius,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.edges.values().filter(|e| e.b).count()
    }

    /// Number of distinct vertices (by quantized identity).
    pub fn vertex_count(&self) -> usize {
        let mut keys = BTreeSet::new();
        for t in self.triangles.values() {
            for v in &t.vertices {
                keys.insert(v.key());
            }
        }
        keys.len()
    }

    pub fn triangles(&self) -> impl Iterator<Item = &TriangleNode> {
        self.triangles.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &EdgeNode> {
        self.edges.values()
    }

    pub fn triangle(&self, id: u64) -> Option<&TriangleNode> {
        self.triangles.get(&id)
    }

    pub fn edge(&self, id: u64) -> Option<&EdgeNode> {
        self.edges.get(&id)
    }

    pub fn triangle_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.triangles.keys().copied()
    }

    /// Minimum interior angle over all triangles, radians, measured in the
    /// lon-lat plane. Infinite on an empty mesh.
    pub fn min_interior_angle(&self) -> f64 {
        self.triangles
            .values()
            .map(|t| t.min_angle())
            .fold(f64::INFINITY, f64::min)
    }

    /// Sets the refinement-criterion flag on a triangle. The flag is
    /// consumed by [`MeshGraph::mark_element`].
    pub fn flag_for_refinement(&mut self, tri: u64) -> Result<()> {
        let t = self
            .triangles
            .get_mut(&tri)
            .ok_or(Error::UnknownTriangle(tri))?;
        t.rc = true;
        Ok(())
    }

    fn alloc_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// Whether `edge` counts as a longest edge of triangle `tri`, i.e. its
    /// length is within [`LONGEST_EDGE_TIE_TOL`] of the triangle's maximum
    /// side length.
    pub fn is_longest_edge_of(&self, edge: u64, tri: u64) -> Result<bool> {
        let t = self.triangles.get(&tri).ok_or(Error::UnknownTriangle(tri))?;
        let e = self.edges.get(&edge).ok_or(Error::UnknownEdge(edge))?;
        let lmax = self.max_side_length(t)?;
        Ok(e.l >= lmax * (1.0 - LONGEST_EDGE_TIE_TOL))
    }

    fn max_side_length(&self, t: &TriangleNode) -> Result<f64> {
        let mut lmax = 0.0f64;
        for &b in &t.bonds {
            let e = self.edges.get(&b).ok_or(Error::UnknownEdge(b))?;
            lmax = lmax.max(e.l);
        }
        Ok(lmax)
    }

    /// The longest edge of a triangle under the deterministic tie-breaking
    /// rule: among sides within the tie tolerance of the maximum length,
    /// boundary edges win over interior ones, then the smallest edge id.
    pub fn longest_edge_of(&self, tri: u64) -> Result<u64> {
        let t = self.triangles.get(&tri).ok_or(Error::UnknownTriangle(tri))?;
        let lmax = self.max_side_length(t)?;
        let mut best: Option<(bool, u64)> = None; // (is_interior, id): min wins
        for &b in &t.bonds {
            let e = &self.edges[&b];
            if e.l >= lmax * (1.0 - LONGEST_EDGE_TIE_TOL) {
                let cand = (!e.b, b);
                if best.map_or(true, |cur| cand < cur) {
                    best = Some(cand);
                }
            }
        }
        Ok(best.expect("triangle has at least one longest edge").1)
    }

    /// Mark-longest production: consumes the triangle's `rc` flag and sets
    /// the break marker on its longest edge. Returns the marked edge.
    pub fn mark_element(&mut self, tri: u64) -> Result<u64> {
        let t = self.triangles.get(&tri).ok_or(Error::UnknownTriangle(tri))?;
        if !t.rc {
            return Err(Error::NotFlagged(tri));
        }
        let edge = self.longest_edge_of(tri)?;
        self.triangles.get_mut(&tri).expect("checked above").rc = false;
        self.edges.get_mut(&edge).expect("bond exists").br = true;
        Ok(edge)
    }

    /// Propagate production. For a marked edge with two incident
    /// triangles: if the edge is not the longest edge of one of them, that
    /// triangle's longest edge is marked and returned. Returns `None` when
    /// the edge is the longest edge of both sharers (the interior split
    /// applies instead) or lies on the boundary (the boundary split
    /// applies).
    pub fn propagate_mark(&mut self, edge: u64) -> Result<Option<u64>> {
        Ok(self.propagate_mark_impl(edge)?.map(|(id, _)| id))
    }

    /// Like [`MeshGraph::propagate_mark`] but also reports whether the
    /// returned edge was newly marked (false when it already carried `br`).
    fn propagate_mark_impl(&mut self, edge: u64) -> Result<Option<(u64, bool)>> {
        let e = self.edges.get(&edge).ok_or(Error::UnknownEdge(edge))?;
        if !e.br {
            return Err(Error::ProductionMismatch {
                edge,
                reason: "edge is not marked for breaking".into(),
            });
        }
        if e.incident.len() < 2 {
            return Ok(None); // boundary: split-boundary applies
        }
        let mut sharers = [e.incident.as_slice()[0], e.incident.as_slice()[1]];
        sharers.sort_unstable();
        for tri in sharers {
            if !self.is_longest_edge_of(edge, tri)? {
                let target = self.longest_edge_of(tri)?;
                let t = self.edges.get_mut(&target).expect("bond exists");
                let fresh = !t.br;
                t.br = true;
                return Ok(Some((target, fresh)));
            }
        }
        Ok(None) // longest for both: split-interior applies
    }

    /// Midpoint of an edge: coordinate-wise mean position; elevation from
    /// the terrain callback when provided, else the endpoint mean.
    fn edge_midpoint(&self, e: &EdgeNode, terrain: Option<ElevationFn>) -> Coord {
        let [p, q] = e.endpoints;
        let lon = 0.5 * (p.lon + q.lon);
        let lat = 0.5 * (p.lat + q.lat);
        let elev = match terrain {
            Some(f) => f(lon, lat),
            None => 0.5 * (p.elev + q.elev),
        };
        Coord::new(lon, lat, elev)
    }

    fn make_edge(&mut self, a: Coord, b: Coord, boundary: bool, incident: Incident) -> u64 {
        let id = self.alloc_id();
        let l = chord_length(a, b, self.radius);
        self.edges.insert(
            id,
            EdgeNode {
                id,
                endpoints: [a, b],
                l,
                b: boundary,
                br: false,
                incident,
            },
        );
        id
    }

    /// Bisects triangle `parent` through side `k` (whose edge must carry
    /// id `edge`) using precreated sub-edge ids `sub` (covering the parent
    /// edge's two halves, endpoint order `[endpoints[0]→m, m→endpoints[1]]`).
    /// Returns the two child triangle ids `(child_a, child_b)` where
    /// `child_a` contains the side's origin vertex.
    fn bisect_through(
        &mut self,
        parent_id: u64,
        edge: u64,
        m: Coord,
        sub: [u64; 2],
    ) -> (u64, u64) {
        let parent = self.triangles.remove(&parent_id).expect("parent exists");
        let k = parent
            .bond_index(edge)
            .expect("split edge is a bond of its incident triangle");
        let k1 = (k + 1) % 3;
        let ko = (k + 2) % 3;
        let vk = parent.vertices[k];
        let vk1 = parent.vertices[k1];
        let vo = parent.vertices[ko];

        // Which precreated sub-edge touches vk / vk1: sub[0] covers the
        // half at the parent edge's first endpoint.
        let first_end = self.edges[&sub[0]].endpoints[0];
        let (sub_k, sub_k1) = if first_end.key() == vk.key() {
            (sub[0], sub[1])
        } else {
            (sub[1], sub[0])
        };

        let median = self.make_edge(m, vo, false, Incident::none());
        let child_a = self.alloc_id();
        let child_b = self.alloc_id();

        // child_a = (vk, m, vo): sides vk→m, m→vo, vo→vk.
        self.triangles.insert(
            child_a,
            TriangleNode {
                id: child_a,
                vertices: [vk, m, vo],
                bonds: [sub_k, median, parent.bonds[ko]],
                rc: false,
            },
        );
        // child_b = (m, vk1, vo): sides m→vk1, vk1→vo, vo→m.
        self.triangles.insert(
            child_b,
            TriangleNode {
                id: child_b,
                vertices: [m, vk1, vo],
                bonds: [sub_k1, parent.bonds[k1], median],
                rc: false,
            },
        );

        // Patch incidences: the median joins exactly the two children; the
        // parent's other two sides trade the parent for the child that
        // keeps them; the sub-edges gain their child.
        self.edges.get_mut(&median).expect("just created").incident =
            Incident::two(child_a, child_b);
        self.edges
            .get_mut(&parent.bonds[ko])
            .expect("bond exists")
            .incident
            .replace(parent_id, child_a);
        self.edges
            .get_mut(&parent.bonds[k1])
            .expect("bond exists")
            .incident
            .replace(parent_id, child_b);
        self.edges
            .get_mut(&sub_k)
            .expect("just created")
            .incident
            .push(child_a)
            .expect("sub-edge has at most two incident triangles");
        self.edges
            .get_mut(&sub_k1)
            .expect("just created")
            .incident
            .push(child_b)
            .expect("sub-edge has at most two incident triangles");

        (child_a, child_b)
    }

    /// Interior-split production: bisects a marked interior edge that is
    /// the longest edge of both incident triangles. Returns the four child
    /// triangle ids; consumes the edge mark. Adds exactly 2 triangles and
    /// 3 edges to the mesh.
    pub fn split_interior(
        &mut self,
        edge: u64,
        terrain: Option<ElevationFn>,
    ) -> Result<[u64; 4]> {
        let e = self.edges.get(&edge).ok_or(Error::UnknownEdge(edge))?;
        if !e.br {
            return Err(Error::ProductionMismatch {
                edge,
                reason: "edge is not marked for breaking".into(),
            });
        }
        if e.incident.len() != 2 {
            return Err(Error::ProductionMismatch {
                edge,
                reason: "edge is on the boundary; the boundary split applies".into(),
            });
        }
        let mut parents = [e.incident.as_slice()[0], e.incident.as_slice()[1]];
        parents.sort_unstable();
        for tri in parents {
            if !self.is_longest_edge_of(edge, tri)? {
                return Err(Error::ProductionMismatch {
                    edge,
                    reason: format!("edge is not the longest edge of triangle {tri}"),
                });
            }
        }

        let e = &self.edges[&edge];
        let [p, q] = e.endpoints;
        let m = self.edge_midpoint(e, terrain);
        // Sub-edges start with no incidence and collect their children as
        // the two parents are bisected.
        let sub_a = self.make_edge(p, m, false, Incident::none());
        let sub_b = self.make_edge(m, q, false, Incident::none());

        let (c0, c1) = self.bisect_through(parents[0], edge, m, [sub_a, sub_b]);
        let (c2, c3) = self.bisect_through(parents[1], edge, m, [sub_a, sub_b]);
        self.edges.remove(&edge);
        Ok([c0, c1, c2, c3])
    }

    /// Boundary-split production: bisects a marked boundary edge that is
    /// the longest edge of its single incident triangle. Returns the two
    /// child triangle ids; consumes the edge mark. The child sub-edges
    /// inherit the boundary flag. Adds exactly 1 triangle and 2 edges.
    pub fn split_boundary(
        &mut self,
        edge: u64,
        terrain: Option<ElevationFn>,
    ) -> Result<[u64; 2]> {
        let e = self.edges.get(&edge).ok_or(Error::UnknownEdge(edge))?;
        if !e.br {
            return Err(Error::ProductionMismatch {
                edge,
                reason: "edge is not marked for breaking".into(),
            });
        }
        if !e.b || e.incident.len() != 1 {
            return Err(Error::ProductionMismatch {
                edge,
                reason: "edge is not a boundary edge; the interior split applies".into(),
            });
        }
        let parent = e.incident.as_slice()[0];
        if !self.is_longest_edge_of(edge, parent)? {
            return Err(Error::ProductionMismatch {
                edge,
                reason: format!("edge is not the longest edge of triangle {parent}"),
            });
        }

        let e = &self.edges[&edge];
        let [p, q] = e.endpoints;
        let m = self.edge_midpoint(e, terrain);
        let sub_a = self.make_edge(p, m, true, Incident::none());
        let sub_b = self.make_edge(m, q, true, Incident::none());

        let (c0, c1) = self.bisect_through(parent, edge, m, [sub_a, sub_b]);
        self.edges.remove(&edge);
        Ok([c0, c1])
    }

    /// Rivara longest-edge refinement driver.
    ///
    /// Flags every triangle in `marked`, applies the mark-longest
    /// production to each, then processes the marked edges as a FIFO
    /// work list: a split production fires whenever a marked edge is the
    /// longest edge of all its sharers, otherwise the mark propagates and
    /// the edge returns to the back of the queue. Terminates because every
    /// propagation marks a strictly longer edge. On return no break marker
    /// and no refinement flag survives, every originally marked triangle
    /// has been bisected, and the mesh is conforming.
    pub fn rivara_refine(
        &mut self,
        marked: &BTreeSet<u64>,
        terrain: Option<ElevationFn>,
    ) -> Result<RefinementLog> {
        let mut log = RefinementLog::default();
        for &tri in marked {
            self.flag_for_refinement(tri)?;
        }
        let mut queue: VecDeque<u64> = VecDeque::new();
        for &tri in marked {
            let edge = self.mark_element(tri)?;
            log.productions.push(Production::MarkLongest { tri, edge });
            queue.push_back(edge);
        }

        while let Some(edge) = queue.pop_front() {
            // Stale queue entries: the edge may have been split (and thus
            // removed) while waiting, or may appear twice.
            let e = match self.edges.get(&edge) {
                Some(e) if e.br => e,
                _ => continue,
            };

            if e.incident.len() == 1 {
                let tri = e.incident.as_slice()[0];
                if self.is_longest_edge_of(edge, tri)? {
                    let created = self.split_boundary(edge, terrain)?;
                    log.productions.push(Production::SplitBoundary { edge, created });
                } else {
                    // A marked boundary edge is always the longest edge of
                    // its triangle (bisection can only shrink the other
                    // sides relative to it), so this branch is defensive:
                    // escalate by marking the triangle's longest edge and
                    // revisit.
                    debug_assert!(false, "marked boundary edge lost longest-edge status");
                    let target = self.longest_edge_of(tri)?;
                    let fresh = !self.edges[&target].br;
                    self.edges.get_mut(&target).expect("bond exists").br = true;
                    if fresh {
                        log.productions.push(Production::Propagate {
                            from_edge: edge,
                            tri,
                            edge: target,
                        });
                        queue.push_back(target);
                    }
                    queue.push_back(edge);
                }
                continue;
            }

            let sharers = [e.incident.as_slice()[0], e.incident.as_slice()[1]];
            match self.propagate_mark_impl(edge)? {
                None => {
                    let created = self.split_interior(edge, terrain)?;
                    log.productions.push(Production::SplitInterior { edge, created });
                }
                Some((target, fresh)) => {
                    if fresh {
                        let tri = *sharers
                            .iter()
                            .find(|&&t| {
                                self.triangles
                                    .get(&t)
                                    .map(|tn| tn.bond_index(target).is_some())
                                    .unwrap_or(false)
                            })
                            .expect("propagation target belongs to a sharer");
                        log.productions.push(Production::Propagate {
                            from_edge: edge,
                            tri,
                            edge: target,
                        });
                        queue.push_back(target);
                    }
                    // Not splittable yet: wait behind the longer edge.
                    queue.push_back(edge);
                }
            }
        }
        Ok(log)
    }

    /// Refines every triangle, `rounds` times over. Two rounds halve the
    /// edge lengths of a structured mesh; this is the uniform-resolution
    /// workhorse for channel and benchmark meshes.
    pub fn refine_all(&mut self, rounds: usize, terrain: Option<ElevationFn>) -> Result<()> {
        for _ in 0..rounds {
            let all: BTreeSet<u64> = self.triangles.keys().copied().collect();
            self.rivara_refine(&all, terrain)?;
        }
        Ok(())
    }
}

/// Builds a [`MeshGraph`] from triangle vertex triples, wiring up shared
/// edges by quantized endpoint identity. Triangles are normalized to
/// counterclockwise orientation; edges shared by more than two triangles
/// or degenerate (collinear) triangles are rejected.
pub struct MeshBuilder {
    radius: f64,
    triangles: Vec<[Coord; 3]>,
}

impl MeshBuilder {
    pub fn new(radius: f64) -> Self {
        MeshBuilder {
            radius,
            triangles: Vec::new(),
        }
    }

    pub fn add_triangle(&mut self, vertices: [Coord; 3]) -> &mut Self {
        self.triangles.push(vertices);
        self
    }

    pub fn build(self) -> Result<MeshGraph> {
        let mut mesh = MeshGraph::new(self.radius);
        let mut edge_by_key: BTreeMap<((i64, i64), (i64, i64)), u64> = BTreeMap::new();

        for mut vs in self.triangles {
            let area = 0.5
                * ((vs[1].lon - vs[0].lon) * (vs[2].lat - vs[0].lat)
                    - (vs[2].lon - vs[0].lon) * (vs[1].lat - vs[0].lat));
            if area == 0.0 {
                return Err(Error::DegenerateTriangle(format!(
                    "collinear vertices at ({}, {})",
                    vs[0].lon, vs[0].lat
                )));
            }
            if area < 0.0 {
                vs.swap(1, 2);
            }
            let tri_id = mesh.alloc_id();
            let mut bonds = [0u64; 3];
            for k in 0..3 {
                let a = vs[k];
                let b = vs[(k + 1) % 3];
                let key = edge_key(a, b);
                let edge_id = match edge_by_key.get(&key) {
                    Some(&id) => id,
                    None => {
                        let id = mesh.make_edge(a, b, false, Incident::none());
                        edge_by_key.insert(key, id);
                        id
                    }
                };
                mesh.edges
                    .get_mut(&edge_id)
                    .expect("just created or looked up")
                    .incident
                    .push(tri_id)?;
                bonds[k] = edge_id;
            }
            mesh.triangles.insert(
                tri_id,
                TriangleNode {
                    id: tri_id,
                    vertices: vs,
                    bonds,
                    rc: false,
                },
            );
        }

        // Boundary flags follow from incidence counts.
        for e in mesh.edges.values_mut() {
            e.b = e.incident.len() == 1;
        }
        Ok(mesh)
    }
}
