//! Cross-checks the sparse assembly and iterative solver against an
//! independent dense implementation (Cholesky factorization and Jacobi
//! eigenvalue iteration) on seeded random inputs.

mod common;

use common::{cholesky_solve, jacobi_eigenvalues, jittered_grid_mesh};
use damwave::femcore::{
    build_dof_map, solve_spd, Assembler, PhysicsConstants, SparseSym, DEFAULT_CG_TOL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assembled_operators(seed: u64) -> (SparseSym, SparseSym, SparseSym, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mesh = jittered_grid_mesh(&mut rng, 7, 6, 0.2, -50.0);
    let dofmap = build_dof_map(&mesh).unwrap();
    let assembler = Assembler::new(&dofmap, &mesh).unwrap();
    let constants = PhysicsConstants::default();
    let dim = dofmap.dof_count();
    let m = assembler.mass(false);
    let c = assembler.damping(&constants);
    let b = assembler
        .stiffness(&vec![0.0; dim], &constants)
        .unwrap();
    (m, c, b, dim)
}

#[test]
fn conjugate_gradients_matches_dense_cholesky_on_random_spd_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    let n = 200;
    // A = Rᵀ R + n·I is comfortably positive definite and fully dense.
    let r: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = if i == j { n as f64 } else { 0.0 };
            for (ri, rj) in r.iter().map(|row| (row[i], row[j])) {
                s += ri * rj;
            }
            a[i][j] = s;
        }
    }
    let rhs: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();

    let sparse = SparseSym::from_dense(&a).unwrap();
    let x_cg = solve_spd(&sparse, &rhs, DEFAULT_CG_TOL, 10 * n).unwrap();
    let x_dense = cholesky_solve(&a, &rhs);

    let scale = x_dense.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for (cg, dense) in x_cg.iter().zip(&x_dense) {
        assert!(
            (cg - dense).abs() <= 1e-7 * scale,
            "cg {cg} vs dense {dense}"
        );
    }
}

#[test]
fn mass_matrix_is_positive_definite_on_random_meshes() {
    for seed in [1u64, 2, 3] {
        let (m, _, _, dim) = assembled_operators(seed);
        let eigs = jacobi_eigenvalues(&m.to_dense());
        let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(
            min > 0.0,
            "seed {seed}: smallest mass eigenvalue {min} on {dim} dofs"
        );
    }
}

#[test]
fn damping_matrix_is_positive_semidefinite() {
    let (_, c, _, _) = assembled_operators(7);
    let eigs = jacobi_eigenvalues(&c.to_dense());
    let max = eigs.iter().cloned().fold(0.0f64, f64::max);
    let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min >= -1e-12 * max.max(1e-300), "negative eigenvalue {min}");
}

#[test]
fn stiffness_annihilates_constants_and_is_otherwise_positive() {
    let (_, _, b, dim) = assembled_operators(11);
    // No-flux boundaries: a constant level exerts no restoring force.
    let ones = vec![1.0; dim];
    let residual = b.matvec(&ones);
    let scale = b.max_abs();
    for (i, v) in residual.iter().enumerate() {
        assert!(v.abs() <= 1e-10 * scale, "row {i} sums to {v}");
    }
    let mut eigs = jacobi_eigenvalues(&b.to_dense());
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!(eigs[0].abs() <= 1e-9 * scale, "nullspace eigenvalue {}", eigs[0]);
    assert!(
        eigs[1] > 1e-6 * scale,
        "second eigenvalue {} is not clearly positive",
        eigs[1]
    );
}

#[test]
fn lumped_mass_preserves_total_measure() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mesh = jittered_grid_mesh(&mut rng, 5, 4, 0.15, -30.0);
    let dofmap = build_dof_map(&mesh).unwrap();
    let assembler = Assembler::new(&dofmap, &mesh).unwrap();
    let consistent = assembler.mass(false);
    let lumped = assembler.mass(true);
    let total_consistent: f64 = consistent.row_sums().iter().sum();
    let total_lumped: f64 = lumped.diag().iter().sum();
    assert!(
        (total_consistent - total_lumped).abs() <= 1e-9 * total_consistent.abs(),
        "{total_consistent} vs {total_lumped}"
    );
}
