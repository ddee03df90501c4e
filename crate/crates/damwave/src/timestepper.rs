//! Generalized-α time integration of `M·ü + C·u̇ + B(u)·u = 0`.
//!
//! The integrator family is parametrized by the spectral radius `ρ ∈ [0,1]`
//! it should exhibit at infinitely stiff modes: `ρ = 1` preserves every
//! frequency (midpoint-like), `ρ = 0` annihilates unresolved oscillations
//! in one step. From `ρ` follow the two averaging offsets
//!
//! ```text
//! α_m = (2ρ − 1)/(ρ + 1),      α_f = ρ/(ρ + 1),
//! ```
//!
//! and the Newmark pair `(β, γ)`. Two sign conventions for that pair are
//! implemented (see [`Convention`]); the default satisfies the second-order
//! condition `γ = ½ − α_m + α_f`.
//!
//! Each step solves one symmetric positive definite system for the new
//! acceleration and then applies the Newmark update to velocity and
//! displacement. The nonlinear stiffness coefficient is frozen at the last
//! accepted state (optionally refreshed by Picard sweeps in
//! [`run_transient`]), so the per-step system stays linear.

use std::time::Instant;

use crate::femcore::{
    solve_spd_warm, Assembler, PhysicsConstants, SparseSym, DEFAULT_CG_TOL,
};
use crate::{Error, Result};

/// How `β` and `γ` are derived from the averaging offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// `γ = ½ − α_m + α_f`, `β = ¼(1 − α_m + α_f)²` — satisfies the
    /// second-order accuracy condition. The default.
    StandardSecondOrder,
    /// `γ = ½ − α_m − α_f`, `β = ¼(1 − α_m − α_f)²` — an alternate form
    /// with the sign of `α_f` flipped, kept selectable for comparison. It
    /// violates the second-order condition whenever `α_f ≠ 0`, degrading
    /// the scheme to first order.
    NegatedAlphaF,
}

/// Generalized-α parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaParams {
    /// Target spectral radius at infinite frequency.
    pub rho: f64,
    /// Mass-average offset.
    pub alpha_m: f64,
    /// Force-average offset.
    pub alpha_f: f64,
    /// Newmark displacement weight.
    pub beta: f64,
    /// Newmark velocity weight.
    pub gamma: f64,
    /// Which `(β, γ)` derivation produced this set.
    pub convention: Convention,
}

/// Derives the generalized-α parameters for a target spectral radius.
pub fn derive_params(rho: f64, convention: Convention) -> Result<AlphaParams> {
    if !rho.is_finite() || !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidArgument(format!(
            "spectral radius must lie in [0, 1], got {rho}"
        )));
    }
    let alpha_m = (2.0 * rho - 1.0) / (rho + 1.0);
    let alpha_f = rho / (rho + 1.0);
    let (beta, gamma) = match convention {
        Convention::StandardSecondOrder => {
            let gamma = 0.5 - alpha_m + alpha_f;
            let beta = 0.25 * (1.0 - alpha_m + alpha_f).powi(2);
            (beta, gamma)
        }
        Convention::NegatedAlphaF => {
            let gamma = 0.5 - alpha_m - alpha_f;
            let beta = 0.25 * (1.0 - alpha_m - alpha_f).powi(2);
            (beta, gamma)
        }
    };
    Ok(AlphaParams {
        rho,
        alpha_m,
        alpha_f,
        beta,
        gamma,
        convention,
    })
}

/// The three assembled operators of one step, borrowed from their owners.
#[derive(Debug, Clone, Copy)]
pub struct SystemMatrices<'a> {
    /// Mass matrix.
    pub m: &'a SparseSym,
    /// Damping matrix.
    pub c: &'a SparseSym,
    /// Stiffness matrix, assembled at the state the step departs from.
    pub b: &'a SparseSym,
}

/// Nodal state of the transient at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    /// Water level, meters.
    pub u: Vec<f64>,
    /// Velocity `u̇`, m/s.
    pub v: Vec<f64>,
    /// Acceleration `ü`, m/s².
    pub a: Vec<f64>,
    /// Simulated time, seconds (`t = step·τ`).
    pub t: f64,
    /// Completed step count.
    pub step: u64,
}

impl SimulationState {
    /// State at rest: `u` given, `v = a = 0`, `t = 0`.
    pub fn at_rest(u: Vec<f64>) -> SimulationState {
        let n = u.len();
        SimulationState {
            u,
            v: vec![0.0; n],
            a: vec![0.0; n],
            t: 0.0,
            step: 0,
        }
    }
}

/// Iteration budget for the per-step solves.
fn max_iterations(dim: usize) -> usize {
    10 * dim + 100
}

/// Consistent initial acceleration: solves `M·a0 = −C·v0 − B·u0`.
pub fn initial_acceleration(
    u0: &[f64],
    v0: &[f64],
    matrices: &SystemMatrices,
) -> Result<Vec<f64>> {
    let mut rhs = matrices.c.matvec(v0);
    let bu = matrices.b.matvec(u0);
    for (r, b) in rhs.iter_mut().zip(&bu) {
        *r = -(*r + b);
    }
    let (a0, _) = solve_spd_warm(
        matrices.m,
        &rhs,
        None,
        DEFAULT_CG_TOL,
        max_iterations(u0.len()),
    )?;
    Ok(a0)
}

/// Effective left-hand operator of one step:
/// `(1−α_m)·M + (1−α_f)·γτ·C + (1−α_f)·βτ²·B`.
fn effective_matrix(
    matrices: &SystemMatrices,
    params: &AlphaParams,
    tau: f64,
) -> Result<SparseSym> {
    SparseSym::linear_combination(&[
        (1.0 - params.alpha_m, matrices.m),
        ((1.0 - params.alpha_f) * params.gamma * tau, matrices.c),
        ((1.0 - params.alpha_f) * params.beta * tau * tau, matrices.b),
    ])
}

/// Right-hand side of the effective system (the negated α-averaged
/// residual of the predictors).
fn effective_rhs(
    state: &SimulationState,
    matrices: &SystemMatrices,
    params: &AlphaParams,
    tau: f64,
) -> Vec<f64> {
    let n = state.u.len();
    let one_af = 1.0 - params.alpha_f;

    // M-term input: α_m·a_n.
    let ma = matrices.m.matvec(&state.a);

    // C-term input: v_n + (1−α_f)(1−γ)τ·a_n.
    let cv = 1.0 - params.gamma;
    let mut vc = vec![0.0; n];
    for i in 0..n {
        vc[i] = state.v[i] + one_af * cv * tau * state.a[i];
    }
    let cva = matrices.c.matvec(&vc);

    // B-term input: u_n + (1−α_f)[τ·v_n + (½−β)τ²·a_n].
    let cu = 0.5 - params.beta;
    let mut ub = vec![0.0; n];
    for i in 0..n {
        ub[i] = state.u[i] + one_af * (tau * state.v[i] + cu * tau * tau * state.a[i]);
    }
    let bub = matrices.b.matvec(&ub);

    let mut rhs = vec![0.0; n];
    for i in 0..n {
        rhs[i] = -(params.alpha_m * ma[i] + cva[i] + bub[i]);
    }
    rhs
}

/// Newmark update from `(state, a_new)` to the next time level.
fn newmark_update(
    state: &SimulationState,
    a_new: Vec<f64>,
    params: &AlphaParams,
    tau: f64,
) -> SimulationState {
    let n = state.u.len();
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    for i in 0..n {
        v[i] = state.v[i] + tau * ((1.0 - params.gamma) * state.a[i] + params.gamma * a_new[i]);
        u[i] = state.u[i]
            + tau * state.v[i]
            + tau * tau * ((0.5 - params.beta) * state.a[i] + params.beta * a_new[i]);
    }
    let step = state.step + 1;
    SimulationState {
        u,
        v,
        a: a_new,
        // Recomputed from the step count so time carries no accumulation
        // drift and t = step·τ holds exactly.
        t: step as f64 * tau,
        step,
    }
}

/// Advances the state by one time step of size `tau`.
///
/// The stiffness in `matrices` must be assembled at `state.u` (the
/// coefficient is lagged). One SPD solve yields the new acceleration; the
/// Newmark formulas then update velocity and displacement.
pub fn step(
    state: &SimulationState,
    matrices: &SystemMatrices,
    params: &AlphaParams,
    tau: f64,
) -> Result<SimulationState> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive and finite, got {tau}"
        )));
    }
    let eff = effective_matrix(matrices, params, tau)?;
    let rhs = effective_rhs(state, matrices, params, tau);
    let (a_new, _) = solve_spd_warm(
        &eff,
        &rhs,
        Some(&state.a),
        DEFAULT_CG_TOL,
        max_iterations(state.u.len()),
    )?;
    Ok(newmark_update(state, a_new, params, tau))
}

/// Wall-clock seconds one transient step spent in each work category.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepTimings {
    /// Operator and right-hand-side generation.
    pub assembly: f64,
    /// Linear solve.
    pub solver: f64,
    /// State update arithmetic.
    pub step_update: f64,
    /// Output hook (gauges, snapshots).
    pub file_output: f64,
    /// Iterations the linear solver needed.
    pub solver_iterations: usize,
}

/// Knobs of a transient run.
#[derive(Debug, Clone, Copy)]
pub struct TransientConfig<'a> {
    /// Assembly context of the mesh being integrated.
    pub assembler: &'a Assembler,
    /// Mass matrix (constant through the run).
    pub mass: &'a SparseSym,
    /// Damping matrix (constant through the run).
    pub damping: &'a SparseSym,
    /// Physical constants for the stiffness refresh.
    pub constants: &'a PhysicsConstants,
    /// Integrator parameters.
    pub params: AlphaParams,
    /// Time step, seconds.
    pub tau: f64,
    /// Number of steps to run.
    pub n_steps: usize,
    /// Extra stiffness refreshes per step: 0 keeps the plainly lagged
    /// coefficient; `k` re-evaluates `B` at the freshly predicted level and
    /// repeats the solve `k` times.
    pub picard_sweeps: usize,
    /// Call the output hook every this many steps; 0 disables it.
    pub output_cadence: usize,
    /// Relative residual target of the per-step solves.
    pub solver_tol: f64,
}

/// Final state plus per-step timing records of a transient run.
#[derive(Debug, Clone)]
pub struct TransientResult {
    /// State after the last step.
    pub state: SimulationState,
    /// One record per executed step.
    pub records: Vec<StepTimings>,
}

/// Runs `n_steps` of the transient, reassembling the stiffness at every
/// accepted state.
///
/// `each_step` runs after every step (gauge recording); `output` runs on
/// the configured cadence (snapshot writing) and its cost is booked as
/// file output. Solver failures are wrapped with the failing step index.
pub fn run_transient(
    state0: SimulationState,
    config: &TransientConfig,
    mut each_step: impl FnMut(&SimulationState) -> Result<()>,
    mut output: impl FnMut(&SimulationState) -> Result<()>,
) -> Result<TransientResult> {
    if !(config.tau > 0.0) || !config.tau.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive and finite, got {}",
            config.tau
        )));
    }
    let mut state = state0;
    let mut records = Vec::with_capacity(config.n_steps);
    let max_iter = max_iterations(state.u.len());

    for n in 0..config.n_steps {
        let step_index = state.step + 1;
        let mut timing = StepTimings::default();
        let wrap = |e: Error| e.in_stage(format!("step {step_index}"));

        // Lagged stiffness, optionally refreshed at the predicted level.
        let mut candidate: Option<SimulationState> = None;
        for _sweep in 0..=config.picard_sweeps {
            let eval_u = candidate.as_ref().map_or(&state.u, |s| &s.u);

            let t0 = Instant::now();
            let b = config
                .assembler
                .stiffness(eval_u, config.constants)
                .map_err(wrap)?;
            let matrices = SystemMatrices {
                m: config.mass,
                c: config.damping,
                b: &b,
            };
            let eff = effective_matrix(&matrices, &config.params, config.tau).map_err(wrap)?;
            let rhs = effective_rhs(&state, &matrices, &config.params, config.tau);
            timing.assembly += t0.elapsed().as_secs_f64();

            let t0 = Instant::now();
            let (a_new, stats) = solve_spd_warm(
                &eff,
                &rhs,
                Some(&state.a),
                config.solver_tol,
                max_iter,
            )
            .map_err(wrap)?;
            timing.solver += t0.elapsed().as_secs_f64();
            timing.solver_iterations += stats.iterations;

            let t0 = Instant::now();
            candidate = Some(newmark_update(&state, a_new, &config.params, config.tau));
            timing.step_update += t0.elapsed().as_secs_f64();
        }
        state = candidate.expect("at least one sweep runs");

        let t0 = Instant::now();
        each_step(&state)?;
        if config.output_cadence > 0 && (n + 1) % config.output_cadence == 0 {
            output(&state)?;
        }
        timing.file_output += t0.elapsed().as_secs_f64();

        records.push(timing);
    }

    Ok(TransientResult { state, records })
}

/// Formats a simulated duration the way run logs report it: integer days,
/// hours, and minutes, omitting leading zero units (seconds are truncated).
pub fn format_duration(seconds: f64) -> String {
    let total_minutes = (seconds.max(0.0) / 60.0).floor() as u64;
    let days = total_minutes / (24 * 60);
    let hours = (total_minutes / 60) % 24;
    let minutes = total_minutes % 60;

    let unit = |n: u64, name: &str| {
        if n == 1 {
            format!("1 {name}")
        } else {
            format!("{n} {name}s")
        }
    };
    let mut parts = Vec::new();
    if days > 0 {
        parts.push(unit(days, "day"));
    }
    if hours > 0 || days > 0 {
        parts.push(unit(hours, "hour"));
    }
    parts.push(unit(minutes, "minute"));
    parts.join(" ")
}
