//! Damped Newton engine shared by the flow solver, the transport solver,
//! and the local fracture solves of the nonlinear-elimination
//! preconditioner. One implementation keeps damping, scaling, and
//! convergence semantics identical across all of them.

use std::time::Instant;

use crate::linalg::{DirectSolver, SparseMatrix};

/// A square nonlinear system R(u) = 0 with an exact sparse Jacobian.
pub trait NonlinearProblem {
    fn n_unknowns(&self) -> usize;

    /// Residual and Jacobian at `u`.
    fn assemble(&self, u: &[f64]) -> (Vec<f64>, SparseMatrix);

    /// Multiplier turning equation `i`'s raw residual into the
    /// dimensionless quantity tested against the tolerance.
    fn residual_scale(&self, i: usize) -> f64;

    /// Solve J step = rhs. Defaults to sparse LU; implementations may
    /// exploit structure (the upwind transport Jacobian is triangular in
    /// flow order). The solver carries the symbolic factorization across
    /// the iterations of one Newton solve.
    fn solve_linear(
        &self,
        solver: &mut DirectSolver,
        jacobian: &SparseMatrix,
        rhs: &[f64],
    ) -> crate::Result<Vec<f64>> {
        solver.solve(jacobian, rhs)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonParams {
    /// Convergence test: max_i |scale_i * R_i| <= tol.
    pub tol: f64,
    pub max_iterations: usize,
    /// Per-unknown update clamp |Δu_i| <= max_change, if set.
    pub max_change: Option<f64>,
    /// Hard bounds applied to every iterate, if set.
    pub bounds: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub iterations: usize,
    pub converged: bool,
    /// Scaled residual max-norm before each iteration plus the final one;
    /// always `iterations + 1` entries.
    pub residual_history: Vec<f64>,
    pub wall_seconds: f64,
    /// A Newton step failed because the Jacobian could not be factored.
    pub linear_failure: bool,
    /// Set by the preconditioned driver when a local solve ran.
    pub activated: bool,
    pub local_iterations: usize,
}

pub fn scaled_max_norm<P: NonlinearProblem>(problem: &P, residual: &[f64]) -> f64 {
    residual
        .iter()
        .enumerate()
        .map(|(i, r)| (problem.residual_scale(i) * r).abs())
        .fold(0.0, f64::max)
}

/// Solve R(u) = 0 starting from `u0`. Returns the last iterate together
/// with the report; non-convergence is an outcome, not an error.
pub fn newton_solve<P: NonlinearProblem>(
    problem: &P,
    u0: &[f64],
    params: &NewtonParams,
) -> (Vec<f64>, NewtonReport) {
    let start = Instant::now();
    let mut solver = DirectSolver::new();
    let mut u = u0.to_vec();
    let (mut residual, mut jacobian) = problem.assemble(&u);
    let mut norm = scaled_max_norm(problem, &residual);
    let mut history = vec![norm];
    let mut iterations = 0;
    let mut linear_failure = false;

    while norm > params.tol && norm.is_finite() {
        if iterations >= params.max_iterations {
            break;
        }
        let rhs: Vec<f64> = residual.iter().map(|r| -r).collect();
        let step = match problem.solve_linear(&mut solver, &jacobian, &rhs) {
            Ok(s) => s,
            Err(_) => {
                linear_failure = true;
                break;
            }
        };
        for (ui, si) in u.iter_mut().zip(&step) {
            let mut delta = *si;
            if let Some(cap) = params.max_change {
                delta = delta.clamp(-cap, cap);
            }
            *ui += delta;
            if let Some((lo, hi)) = params.bounds {
                *ui = ui.clamp(lo, hi);
            }
        }
        let (r, j) = problem.assemble(&u);
        residual = r;
        jacobian = j;
        norm = scaled_max_norm(problem, &residual);
        history.push(norm);
        iterations += 1;
    }

    let converged = norm <= params.tol && norm.is_finite();
    let report = NewtonReport {
        iterations,
        converged,
        residual_history: history,
        wall_seconds: start.elapsed().as_secs_f64(),
        linear_failure,
        activated: false,
        local_iterations: 0,
    };
    (u, report)
}
