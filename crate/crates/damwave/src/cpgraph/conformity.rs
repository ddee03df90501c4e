//! Structural and geometric conformity validation.
//!
//! The checker is an independent oracle over the raw graph: it trusts no
//! invariant maintained by the productions, and instead rescans every
//! incidence list, every bond/endpoint pairing, and — the expensive part —
//! every (vertex, edge) pair that could form a hanging node (a vertex in
//! the strict interior of another triangle's edge).

use super::{quantize_pair, Coord, MeshGraph};
use std::collections::BTreeSet;
use std::fmt;

/// Distance below which a vertex counts as lying on an edge, meters.
pub const HANGING_NODE_TOL_M: f64 = 1e-9;

/// One conformity violation.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// An edge with zero or more than two incident triangles.
    EdgeIncidence { edge: u64, count: usize },
    /// A vertex strictly inside another triangle's edge.
    HangingVertex { lon: f64, lat: f64, edge: u64 },
    /// A triangle side whose bond's endpoints do not match the side's
    /// vertex pair.
    EndpointMismatch { tri: u64, edge: u64 },
    /// Referential or attribute inconsistency (dangling ids, boundary flag
    /// contradicting the incidence count, stored length diverging from the
    /// recomputed chord, non-positive triangle area).
    Structural { detail: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EdgeIncidence { edge, count } => {
                write!(f, "edge {edge} has {count} incident triangles")
            }
            Violation::HangingVertex { lon, lat, edge } => {
                write!(f, "vertex ({lon}, {lat}) lies inside edge {edge}")
            }
            Violation::EndpointMismatch { tri, edge } => {
                write!(f, "triangle {tri} and edge {edge} disagree on endpoints")
            }
            Violation::Structural { detail } => write!(f, "{detail}"),
        }
    }
}

/// Result of a conformity scan; empty ⇔ the mesh is conforming.
#[derive(Debug, Clone, Default)]
pub struct ConformityReport {
    pub violations: Vec<Violation>,
}

impl ConformityReport {
    pub fn is_conforming(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ConformityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} violations", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// Scans the whole mesh for conformity violations. Returns an empty report
/// exactly when the mesh is conforming.
pub fn validate_conformity(mesh: &MeshGraph) -> ConformityReport {
    let mut report = ConformityReport::default();

    // Referential pass: triangles ↔ edges agree on existence, endpoints,
    // and incidence; triangles have positive area.
    for t in mesh.triangles() {
        if t.signed_area_deg2() <= 0.0 {
            report.violations.push(Violation::Structural {
                detail: format!(
                    "triangle {} has non-positive area {}",
                    t.id,
                    t.signed_area_deg2()
                ),
            });
        }
        for k in 0..3 {
            let a = t.vertices[k];
            let b = t.vertices[(k + 1) % 3];
            let bond = t.bonds[k];
            match mesh.edge(bond) {
                None => report.violations.push(Violation::Structural {
                    detail: format!("triangle {} references missing edge {bond}", t.id),
                }),
                Some(e) => {
                    let side = unordered(a, b);
                    if e.key() != side {
                        report
                            .violations
                            .push(Violation::EndpointMismatch { tri: t.id, edge: bond });
                    }
                    if !e.incident.contains(t.id) {
                        report.violations.push(Violation::Structural {
                            detail: format!(
                                "edge {bond} does not list incident triangle {}",
                                t.id
                            ),
                        });
                    }
                }
            }
        }
    }

    for e in mesh.edges() {
        let count = e.incident.len();
        if count == 0 || count > 2 {
            report
                .violations
                .push(Violation::EdgeIncidence { edge: e.id, count });
        }
        if e.b != (count == 1) {
            report.violations.push(Violation::Structural {
                detail: format!(
                    "edge {} boundary flag {} contradicts incidence count {count}",
                    e.id, e.b
                ),
            });
        }
        for &tid in e.incident.as_slice() {
            match mesh.triangle(tid) {
                None => report.violations.push(Violation::Structural {
                    detail: format!("edge {} references missing triangle {tid}", e.id),
                }),
                Some(t) => {
                    if t.bond_index(e.id).is_none() {
                        report.violations.push(Violation::Structural {
                            detail: format!(
                                "triangle {tid} does not list bond {} back",
                                e.id
                            ),
                        });
                    }
                }
            }
        }
        let recomputed = super::chord_length(e.endpoints[0], e.endpoints[1], mesh.radius());
        if (e.l - recomputed).abs() > 1e-9 * recomputed.max(1.0) {
            report.violations.push(Violation::Structural {
                detail: format!(
                    "edge {} stores length {} but its endpoints give {}",
                    e.id, e.l, recomputed
                ),
            });
        }
    }

    // Hanging-node pass. Distances are measured in a local equirectangular
    // chart (meters); the chart is linear in lon/lat, so a vertex exactly
    // on an edge segment has distance exactly zero regardless of where on
    // the sphere the edge sits.
    let mut keys = BTreeSet::new();
    let mut verts: Vec<(f64, f64)> = Vec::new();
    for t in mesh.triangles() {
        for v in &t.vertices {
            if keys.insert(v.key()) {
                verts.push((v.lon, v.lat));
            }
        }
    }
    // Sort by longitude and probe each edge's lon window only.
    verts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    let lons: Vec<f64> = verts.iter().map(|v| v.0).collect();
    // Window padding: 1e-8° is ≈1 mm of longitude at the equator — far
    // wider than the 1e-9 m tolerance, still tiny for candidate culling.
    let pad = 1e-8;

    for e in mesh.edges() {
        let [p, q] = e.endpoints;
        let lo = p.lon.min(q.lon) - pad;
        let hi = p.lon.max(q.lon) + pad;
        let start = lons.partition_point(|&x| x < lo);
        let lat_lo = p.lat.min(q.lat) - pad;
        let lat_hi = p.lat.max(q.lat) + pad;
        for &(vlon, vlat) in verts[start..].iter().take_while(|v| v.0 <= hi) {
            if vlat < lat_lo || vlat > lat_hi {
                continue;
            }
            let vkey = quantize_pair(vlon, vlat);
            if vkey == p.key() || vkey == q.key() {
                continue;
            }
            if let Some((d_seg, d_p, d_q)) = segment_metrics(p, q, vlon, vlat, mesh.radius()) {
                if d_seg <= HANGING_NODE_TOL_M
                    && d_p > HANGING_NODE_TOL_M
                    && d_q > HANGING_NODE_TOL_M
                {
                    report.violations.push(Violation::HangingVertex {
                        lon: vlon,
                        lat: vlat,
                        edge: e.id,
                    });
                }
            }
        }
    }

    report
}

fn unordered(a: Coord, b: Coord) -> ((i64, i64), (i64, i64)) {
    let ka = a.key();
    let kb = b.key();
    if ka <= kb {
        (ka, kb)
    } else {
        (kb, ka)
    }
}

/// Distance in meters from point `v` to segment `pq` plus the distances to
/// the two endpoints, all measured in a local equirectangular chart
/// centered on the segment. Returns `None` for a degenerate segment.
fn segment_metrics(p: Coord, q: Coord, vlon: f64, vlat: f64, radius: f64) -> Option<(f64, f64, f64)> {
    let lat0 = (0.5 * (p.lat + q.lat)).to_radians();
    let sx = radius * lat0.cos() * std::f64::consts::PI / 180.0;
    let sy = radius * std::f64::consts::PI / 180.0;
    let ax = (p.lon - vlon) * sx;
    let ay = (p.lat - vlat) * sy;
    let bx = (q.lon - vlon) * sx;
    let by = (q.lat - vlat) * sy;
    let dx = bx - ax;
    let dy = by - ay;
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return None;
    }
    // Project the origin (= v) onto the segment.
    let t = (-(ax * dx + ay * dy) / len2).clamp(0.0, 1.0);
    let cx = ax + t * dx;
    let cy = ay + t * dy;
    let d_seg = (cx * cx + cy * cy).sqrt();
    let d_p = (ax * ax + ay * ay).sqrt();
    let d_q = (bx * bx + by * by).sqrt();
    Some((d_seg, d_p, d_q))
}
