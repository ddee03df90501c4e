//! Plain-text mesh serialization (`damwave-mesh v1`).
//!
//! Layout, space-separated with LF line endings:
//!
//! ```text
//! damwave-mesh v1
//! V <vertex count>
//! <vertex id> <lon> <lat> <elev>      (one line per vertex)
//! T <triangle count>
//! <triangle id> <v1> <v2> <v3>        (vertex ids, counterclockwise)
//! E <edge count>
//! <edge id> <v1> <v2> <b>             (b = 1 boundary, 0 interior)
//! ```
//!
//! Vertex ids are file-local (dense, assigned in writing order); triangle
//! and edge ids are the graph ids and survive a round trip. Floats are
//! written in Rust's shortest round-trip decimal form, so save → load
//! reproduces coordinates bit-for-bit. Edge lengths are not stored: they
//! are recomputed from the endpoints and the caller-supplied sphere
//! radius, which is context, not mesh data.

use super::{Coord, EdgeNode, Incident, MeshGraph, TriangleNode};
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub const MESH_HEADER: &str = "damwave-mesh v1";

/// Serializes a mesh to a writer in the `damwave-mesh v1` format.
pub fn write_mesh<W: Write>(mesh: &MeshGraph, out: &mut W) -> Result<()> {
    // Vertex table: first-encounter order over triangles (ascending id),
    // then over edges (for robustness; conforming meshes add none here).
    let mut index: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    let mut verts: Vec<Coord> = Vec::new();
    let intern = |c: Coord, index: &mut BTreeMap<(i64, i64), usize>, verts: &mut Vec<Coord>| {
        *index.entry(c.key()).or_insert_with(|| {
            verts.push(c);
            verts.len() - 1
        })
    };
    for t in mesh.triangles() {
        for &v in &t.vertices {
            intern(v, &mut index, &mut verts);
        }
    }
    for e in mesh.edges() {
        for &v in &e.endpoints {
            intern(v, &mut index, &mut verts);
        }
    }

    writeln!(out, "{MESH_HEADER}")?;
    writeln!(out, "V {}", verts.len())?;
    for (i, v) in verts.iter().enumerate() {
        writeln!(out, "{i} {} {} {}", v.lon, v.lat, v.elev)?;
    }
    writeln!(out, "T {}", mesh.triangle_count())?;
    for t in mesh.triangles() {
        let vid = |c: &Coord| index[&c.key()];
        writeln!(
            out,
            "{} {} {} {}",
            t.id,
            vid(&t.vertices[0]),
            vid(&t.vertices[1]),
            vid(&t.vertices[2])
        )?;
    }
    writeln!(out, "E {}", mesh.edge_count())?;
    for e in mesh.edges() {
        let vid = |c: &Coord| index[&c.key()];
        writeln!(
            out,
            "{} {} {} {}",
            e.id,
            vid(&e.endpoints[0]),
            vid(&e.endpoints[1]),
            u8::from(e.b)
        )?;
    }
    Ok(())
}

/// Saves a mesh to a file; see [`write_mesh`].
pub fn save_mesh(mesh: &MeshGraph, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_mesh(mesh, &mut file)?;
    file.flush()?;
    Ok(())
}

struct LineReader<R> {
    inner: R,
    path: String,
    line_no: usize,
    buf: String,
}

impl<R: BufRead> LineReader<R> {
    fn next_line(&mut self) -> Result<String> {
        loop {
            self.buf.clear();
            let n = self.inner.read_line(&mut self.buf)?;
            self.line_no += 1;
            if n == 0 {
                return Err(self.err("unexpected end of file"));
            }
            let trimmed = self.buf.trim();
            if !trimmed.is_empty() {
                return Ok(trimmed.to_string());
            }
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.line_no,
            message: message.into(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, what: &str, rd_path: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        path: rd_path.to_string(),
        line,
        message: format!("invalid {what}: {tok:?}"),
    })
}

/// Reads a mesh in the `damwave-mesh v1` format. Edge lengths are
/// recomputed as chords on the sphere of `radius` meters.
pub fn read_mesh<R: BufRead>(reader: R, origin: &str, radius: f64) -> Result<MeshGraph> {
    let mut rd = LineReader {
        inner: reader,
        path: origin.to_string(),
        line_no: 0,
        buf: String::new(),
    };

    let header = rd.next_line()?;
    if header != MESH_HEADER {
        return Err(rd.err(format!("expected header {MESH_HEADER:?}, found {header:?}")));
    }

    let section = |rd: &mut LineReader<R>, tag: &str| -> Result<usize> {
        let line = rd.next_line()?;
        let (path, line_no) = (rd.path.clone(), rd.line_no);
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(t), Some(n), None) if t == tag => parse_num(n, "count", &path, line_no),
            _ => Err(Error::Parse {
                path,
                line: line_no,
                message: format!("expected section line {tag:?} <count>, found {line:?}"),
            }),
        }
    };

    let nv = section(&mut rd, "V")?;
    let mut verts: Vec<Coord> = Vec::with_capacity(nv);
    for expect in 0..nv {
        let line = rd.next_line()?;
        let (path, line_no) = (rd.path.clone(), rd.line_no);
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::Parse {
                path,
                line: line_no,
                message: format!("expected `id lon lat elev`, found {line:?}"),
            });
        }
        let id: usize = parse_num(toks[0], "vertex id", &path, line_no)?;
        if id != expect {
            return Err(Error::Parse {
                path,
                line: line_no,
                message: format!("vertex ids must be dense and ascending; expected {expect}, found {id}"),
            });
        }
        verts.push(Coord::new(
            parse_num(toks[1], "longitude", &path, line_no)?,
            parse_num(toks[2], "latitude", &path, line_no)?,
            parse_num(toks[3], "elevation", &path, line_no)?,
        ));
    }

    let vertex = |i: usize, path: &str, line_no: usize| -> Result<Coord> {
        verts.get(i).copied().ok_or_else(|| Error::Parse {
            path: path.to_string(),
            line: line_no,
            message: format!("vertex id {i} out of range (have {})", verts.len()),
        })
    };

    let nt = section(&mut rd, "T")?;
    let mut mesh = MeshGraph::new(radius);
    let mut tri_rows: Vec<(u64, [usize; 3])> = Vec::with_capacity(nt);
    for _ in 0..nt {
        let line = rd.next_line()?;
        let (path, line_no) = (rd.path.clone(), rd.line_no);
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::Parse {
                path,
                line: line_no,
                message: format!("expected `id v1 v2 v3`, found {line:?}"),
            });
        }
        let id: u64 = parse_num(toks[0], "triangle id", &path, line_no)?;
        let v = [
            parse_num::<usize>(toks[1], "vertex id", &path, line_no)?,
            parse_num::<usize>(toks[2], "vertex id", &path, line_no)?,
            parse_num::<usize>(toks[3], "vertex id", &path, line_no)?,
        ];
        for &i in &v {
            vertex(i, &path, line_no)?;
        }
        tri_rows.push((id, v));
    }

    let ne = section(&mut rd, "E")?;
    let mut edge_by_key: BTreeMap<((i64, i64), (i64, i64)), u64> = BTreeMap::new();
    for _ in 0..ne {
        let line = rd.next_line()?;
        let (path, line_no) = (rd.path.clone(), rd.line_no);
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::Parse {
                path,
                line: line_no,
                message: format!("expected `id v1 v2 b`, found {line:?}"),
            });
        }
        let id: u64 = parse_num(toks[0], "edge id", &path, line_no)?;
        let a = vertex(parse_num(toks[1], "vertex id", &path, line_no)?, &path, line_no)?;
        let b = vertex(parse_num(toks[2], "vertex id", &path, line_no)?, &path, line_no)?;
        let flag: u8 = parse_num(toks[3], "boundary flag", &path, line_no)?;
        if flag > 1 {
            return Err(Error::Parse {
                path,
                line: line_no,
                message: format!("boundary flag must be 0 or 1, found {flag}"),
            });
        }
        let node = EdgeNode {
            id,
            endpoints: [a, b],
            l: super::chord_length(a, b, radius),
            b: flag == 1,
            br: false,
            incident: Incident::none(),
        };
        if mesh.edges.insert(id, node).is_some() {
            return Err(Error::Parse {
                path,
                line: line_no,
                message: format!("duplicate edge id {id}"),
            });
        }
        edge_by_key.insert(
            super::edge_key(a, b),
            id,
        );
    }

    // Wire triangles to edges by endpoint identity and rebuild incidences.
    for (id, v) in tri_rows {
        let vs = [verts[v[0]], verts[v[1]], verts[v[2]]];
        let mut bonds = [0u64; 3];
        for k in 0..3 {
            let key = super::edge_key(vs[k], vs[(k + 1) % 3]);
            let edge_id = *edge_by_key.get(&key).ok_or_else(|| Error::Parse {
                path: origin.to_string(),
                line: rd.line_no,
                message: format!("triangle {id} side {k} has no edge entry"),
            })?;
            bonds[k] = edge_id;
            mesh.edges
                .get_mut(&edge_id)
                .expect("inserted above")
                .incident
                .push(id)
                .map_err(|_| Error::Parse {
                    path: origin.to_string(),
                    line: rd.line_no,
                    message: format!("edge {edge_id} is shared by more than two triangles"),
                })?;
        }
        let node = TriangleNode {
            id,
            vertices: vs,
            bonds,
            rc: false,
        };
        if node.signed_area_deg2() <= 0.0 {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: rd.line_no,
                message: format!("triangle {id} is degenerate or clockwise"),
            });
        }
        if mesh.triangles.insert(id, node).is_some() {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: rd.line_no,
                message: format!("duplicate triangle id {id}"),
            });
        }
    }

    // Validate stored boundary flags against the rebuilt incidences.
    for e in mesh.edges.values() {
        let count = e.incident.len();
        if count == 0 || e.b != (count == 1) {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: rd.line_no,
                message: format!(
                    "edge {} boundary flag {} contradicts its {count} incident triangles",
                    e.id,
                    u8::from(e.b)
                ),
            });
        }
    }

    let max_tri = mesh.triangles.keys().next_back().copied().unwrap_or(0);
    let max_edge = mesh.edges.keys().next_back().copied().unwrap_or(0);
    mesh.next_id = max_tri.max(max_edge) + 1;
    Ok(mesh)
}

/// Loads a mesh file; see [`read_mesh`].
pub fn load_mesh(path: &Path, radius: f64) -> Result<MeshGraph> {
    let file = std::fs::File::open(path)?;
    read_mesh(
        BufReader::new(file),
        &path.display().to_string(),
        radius,
    )
}
