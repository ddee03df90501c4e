//! Shared helpers for the integration tests: independent dense linear
//! algebra (so solver and assembly results can be checked against a second
//! implementation), a polygon-membership oracle, and seeded random mesh
//! generators.

#![allow(dead_code)]

use damwave::cpgraph::{Coord, MeshBuilder, MeshGraph, DEFAULT_RADIUS};
use rand::Rng;

/// Solves `a x = b` for dense symmetric positive-definite `a` by Cholesky
/// factorization. Panics if the matrix is not positive definite.
pub fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    assert_eq!(a.len(), n);
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                assert!(s > 0.0, "pivot {i} is {s}: not positive definite");
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations,
/// unsorted. Converges to near machine precision for the modest sizes used
/// in tests.
pub fn jacobi_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let scale: f64 = a
        .iter()
        .flatten()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).collect()
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

fn max_abs(a: &[Vec<f64>]) -> f64 {
    a.iter().flatten().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Spectral radius of a dense square matrix by repeated squaring with
/// per-squaring renormalization: after 48 doublings the power is 2^48, so
/// `max|entry|^(1/k)` has converged to the largest eigenvalue magnitude even
/// for defective matrices (the polynomial growth factor decays like
/// `exp(O(log k / k))`). Accumulates `log ρ = Σ 2^(-j) log n_j` from the
/// normalization constants so nothing overflows.
pub fn spectral_radius(a: &[Vec<f64>]) -> f64 {
    let mut b = a.to_vec();
    let mut log_rho = 0.0;
    for j in 1..=48 {
        b = mat_mul(&b, &b);
        let n_j = max_abs(&b);
        if n_j == 0.0 {
            return 0.0;
        }
        log_rho += (0.5f64).powi(j) * n_j.ln();
        let inv = 1.0 / n_j;
        for row in &mut b {
            for v in row {
                *v *= inv;
            }
        }
    }
    log_rho.exp()
}

/// Winding number of a closed polygon around a point. Nonzero means inside
/// for simple polygons — an independent check of the even-odd crossing test.
pub fn winding_number(lon: f64, lat: f64, polygon: &[(f64, f64)]) -> i32 {
    let mut wn = 0i32;
    for i in 0..polygon.len() {
        let (x1, y1) = polygon[i];
        let (x2, y2) = polygon[(i + 1) % polygon.len()];
        let side = (x2 - x1) * (lat - y1) - (lon - x1) * (y2 - y1);
        if y1 <= lat {
            if y2 > lat && side > 0.0 {
                wn += 1;
            }
        } else if y2 <= lat && side < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Distance from a point to the nearest polygon edge, used to skip
/// borderline cases where the two membership tests may legitimately
/// disagree.
pub fn distance_to_polygon(lon: f64, lat: f64, polygon: &[(f64, f64)]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..polygon.len() {
        let (x1, y1) = polygon[i];
        let (x2, y2) = polygon[(i + 1) % polygon.len()];
        let (dx, dy) = (x2 - x1, y2 - y1);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((lon - x1) * dx + (lat - y1) * dy) / len2).clamp(0.0, 1.0)
        };
        let (px, py) = (x1 + t * dx, y1 + t * dy);
        best = best.min(((lon - px).powi(2) + (lat - py).powi(2)).sqrt());
    }
    best
}

/// Builds a regular `cols`×`rows` grid triangulation (two triangles per
/// cell, alternating diagonals) with uniform elevation — the cheap way to
/// get a large conforming mesh without running the refinement cascade.
pub fn regular_grid_mesh(cols: usize, rows: usize, cell: f64, elev: f64) -> MeshGraph {
    let mut builder = MeshBuilder::new(DEFAULT_RADIUS);
    let at = |c: usize, r: usize| Coord::new(c as f64 * cell, r as f64 * cell, elev);
    for r in 0..rows {
        for c in 0..cols {
            let (sw, se, ne, nw) = (at(c, r), at(c + 1, r), at(c + 1, r + 1), at(c, r + 1));
            if (r + c) % 2 == 0 {
                builder.add_triangle([sw, se, ne]);
                builder.add_triangle([sw, ne, nw]);
            } else {
                builder.add_triangle([sw, se, nw]);
                builder.add_triangle([se, ne, nw]);
            }
        }
    }
    builder.build().expect("regular grid must triangulate")
}

/// Builds a conforming triangulation of a jittered `cols`×`rows` grid:
/// each cell is split along a diagonal, interior vertices are displaced by
/// up to ±`jitter` cell widths, and every vertex gets elevation `elev`.
/// Jitter below ~0.35 keeps all triangles positively oriented.
pub fn jittered_grid_mesh<R: Rng>(
    rng: &mut R,
    cols: usize,
    rows: usize,
    jitter: f64,
    elev: f64,
) -> MeshGraph {
    let cell = 0.05;
    let mut coords = vec![vec![Coord::new(0.0, 0.0, elev); cols + 1]; rows + 1];
    for (r, row) in coords.iter_mut().enumerate() {
        for (c, coord) in row.iter_mut().enumerate() {
            let interior = r > 0 && r < rows && c > 0 && c < cols;
            let (dx, dy) = if interior {
                (
                    rng.random_range(-jitter..=jitter),
                    rng.random_range(-jitter..=jitter),
                )
            } else {
                (0.0, 0.0)
            };
            *coord = Coord::new((c as f64 + dx) * cell, (r as f64 + dy) * cell, elev);
        }
    }
    let mut builder = MeshBuilder::new(DEFAULT_RADIUS);
    for r in 0..rows {
        for c in 0..cols {
            let sw = coords[r][c];
            let se = coords[r][c + 1];
            let ne = coords[r + 1][c + 1];
            let nw = coords[r + 1][c];
            if rng.random_range(0..2) == 0 {
                builder.add_triangle([sw, se, ne]);
                builder.add_triangle([sw, ne, nw]);
            } else {
                builder.add_triangle([sw, se, nw]);
                builder.add_triangle([se, ne, nw]);
            }
        }
    }
    builder.build().expect("jittered grid must triangulate")
}
