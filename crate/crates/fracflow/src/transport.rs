//! The implicit transport subproblem: water saturation unknowns with
//! phase upwinding against fixed total fluxes from the flow solve.

use crate::linalg::{SparseBuilder, SparseMatrix};
use crate::model::{ConnKind, ReservoirModel};
use crate::newton::NonlinearProblem;
use crate::physics::{FluidModel, WellKind};
use crate::flow::FlowState;

/// A connection with its frozen total flux (positive a -> b).
#[derive(Debug, Clone, Copy)]
pub struct TransportConnection {
    pub a: usize,
    pub b: usize,
    pub flux: f64,
    pub kind: ConnKind,
}

impl TransportConnection {
    /// Upwind unknown for the current flux sign.
    pub fn upwind(&self) -> usize {
        if self.flux >= 0.0 {
            self.a
        } else {
            self.b
        }
    }
}

/// Well source term for transport. Injectors carry pure water; producer
/// rates split by the fractional flow of the perforated cell.
#[derive(Debug, Clone, Copy)]
pub struct TransportWellTerm {
    pub cell: usize,
    /// Total volumetric rate, positive into the reservoir.
    pub rate: f64,
    pub water_only: bool,
}

/// Everything frozen during one transport solve. Unknown ordering matches
/// the global convention: matrix cells first, fracture cells appended.
#[derive(Debug, Clone)]
pub struct TransportSystem {
    pub n_matrix: usize,
    pub n_unknowns: usize,
    pub pore_volume: Vec<f64>,
    pub dt: f64,
    /// Saturations at the previous accepted step.
    pub s_prev: Vec<f64>,
    /// rho_w(p^{n+1}) / rho_w(p^n) per cell.
    pub density_ratio: Vec<f64>,
    pub connections: Vec<TransportConnection>,
    pub wells: Vec<TransportWellTerm>,
    pub fluid: FluidModel,
}

impl TransportSystem {
    /// Assemble the transport system for one step from a converged flow
    /// state. Connection order mirrors `model.connections`.
    pub fn from_flow(
        model: &ReservoirModel,
        flow: &FlowState,
        s_prev: &[f64],
        p_prev: &[f64],
        dt: f64,
    ) -> Self {
        let connections = model
            .connections
            .iter()
            .zip(&flow.total_flux)
            .map(|(c, &f)| TransportConnection { a: c.a, b: c.b, flux: f, kind: c.kind })
            .collect();
        let mut wells = Vec::new();
        for (well, rates) in model.wells.iter().zip(&flow.perf_rates) {
            for (perf, &q) in well.perforations.iter().zip(rates) {
                wells.push(TransportWellTerm {
                    cell: perf.cell,
                    rate: q,
                    water_only: well.kind == WellKind::Injector,
                });
            }
        }
        let density_ratio = flow
            .pressure
            .iter()
            .zip(p_prev)
            .map(|(&p, &p0)| model.fluid.water_density(p) / model.fluid.water_density(p0))
            .collect();
        TransportSystem {
            n_matrix: model.n_matrix(),
            n_unknowns: model.n_unknowns(),
            pore_volume: model.pore_volumes.clone(),
            dt,
            s_prev: s_prev.to_vec(),
            density_ratio,
            connections,
            wells,
            fluid: model.fluid.clone(),
        }
    }

    /// Water flux across connection `idx` at saturations `u`.
    pub fn water_flux(&self, u: &[f64], idx: usize) -> f64 {
        let c = &self.connections[idx];
        let (fw, _) = self.fluid.fractional_flow(u[c.upwind()]);
        fw * c.flux
    }

    /// Connection indices of the matrix-fracture faces, in stable order.
    pub fn mf_connection_indices(&self) -> Vec<usize> {
        self.connections
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ConnKind::MatrixFracture)
            .map(|(i, _)| i)
            .collect()
    }

    /// Water fluxes across all matrix-fracture faces at saturations `u`.
    pub fn mf_water_fluxes(&self, u: &[f64]) -> Vec<f64> {
        self.mf_connection_indices()
            .into_iter()
            .map(|i| self.water_flux(u, i))
            .collect()
    }
}

/// Residual and exact Jacobian of the implicit upwind transport system.
pub fn assemble_transport_residual(system: &TransportSystem, u: &[f64]) -> (Vec<f64>, SparseMatrix) {
    let n = system.n_unknowns;
    let mut residual = vec![0.0; n];
    let mut jac = SparseBuilder::square(n);

    for i in 0..n {
        let coeff = system.pore_volume[i] * system.density_ratio[i] / system.dt;
        residual[i] += coeff * (u[i] - system.s_prev[i]);
        jac.add(i, i, coeff);
    }

    for c in &system.connections {
        if c.flux == 0.0 {
            continue;
        }
        let up = c.upwind();
        let (fw, dfw) = system.fluid.fractional_flow(u[up]);
        let term = fw * c.flux;
        residual[c.a] += term;
        residual[c.b] -= term;
        let d = dfw * c.flux;
        jac.add(c.a, up, d);
        jac.add(c.b, up, -d);
    }

    for w in &system.wells {
        if w.water_only {
            residual[w.cell] -= w.rate;
        } else {
            let (fw, dfw) = system.fluid.fractional_flow(u[w.cell]);
            residual[w.cell] -= fw * w.rate;
            jac.add(w.cell, w.cell, -dfw * w.rate);
        }
    }

    (residual, jac.build())
}

impl NonlinearProblem for TransportSystem {
    fn n_unknowns(&self) -> usize {
        self.n_unknowns
    }

    fn assemble(&self, u: &[f64]) -> (Vec<f64>, SparseMatrix) {
        assemble_transport_residual(self, u)
    }

    /// Residuals are volume rates; dt/PV turns them into saturation units.
    fn residual_scale(&self, i: usize) -> f64 {
        self.dt / self.pore_volume[i]
    }

    fn solve_linear(
        &self,
        solver: &mut crate::linalg::DirectSolver,
        jacobian: &SparseMatrix,
        rhs: &[f64],
    ) -> crate::Result<Vec<f64>> {
        match upwind_topological_order(self.n_unknowns, &self.connections) {
            Some(order) => solve_in_flow_order(&order, jacobian, rhs),
            None => solver.solve(jacobian, rhs),
        }
    }
}

/// Order the cells so every upwind neighbor precedes its downwind cell.
/// Total fluxes derive from a potential field, so the directed flux graph
/// is acyclic for any physical flow state; `None` (a cycle, possible only
/// in synthetic systems) falls back to the general solver.
pub(crate) fn upwind_topological_order(
    n: usize,
    connections: &[TransportConnection],
) -> Option<Vec<usize>> {
    let mut indegree = vec![0usize; n];
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for c in connections {
        if c.flux == 0.0 {
            continue;
        }
        let up = c.upwind();
        let down = if up == c.a { c.b } else { c.a };
        adjacency[up].push(down);
        indegree[down] += 1;
    }
    let mut queue: std::collections::VecDeque<usize> =
        (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = queue.pop_front() {
        order.push(i);
        for &j in &adjacency[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                queue.push_back(j);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// In flow order the upwind Jacobian is lower triangular: one substitution
/// sweep solves it exactly.
pub(crate) fn solve_in_flow_order(
    order: &[usize],
    jacobian: &SparseMatrix,
    rhs: &[f64],
) -> crate::Result<Vec<f64>> {
    let mut x = vec![0.0; rhs.len()];
    for &i in order {
        let mut acc = rhs[i];
        let mut diag = 0.0;
        for (c, v) in jacobian.row(i) {
            if c == i {
                diag = v;
            } else {
                acc -= v * x[c];
            }
        }
        let xi = acc / diag;
        if !xi.is_finite() {
            return Err(crate::FracflowError::LinearSolve(
                "non-finite entry in flow-order substitution".into(),
            ));
        }
        x[i] = xi;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::{newton_solve, NewtonParams};

    fn chain_system(n: usize, flux: f64, inject: f64) -> TransportSystem {
        let connections = (0..n - 1)
            .map(|i| TransportConnection { a: i, b: i + 1, flux, kind: ConnKind::MatrixMatrix })
            .collect();
        TransportSystem {
            n_matrix: n,
            n_unknowns: n,
            pore_volume: vec![100.0; n],
            dt: 43200.0,
            s_prev: vec![0.0; n],
            density_ratio: vec![1.0; n],
            connections,
            wells: vec![
                TransportWellTerm { cell: 0, rate: inject, water_only: true },
                TransportWellTerm { cell: n - 1, rate: -inject, water_only: false },
            ],
            fluid: FluidModel::default(),
        }
    }

    fn transport_params() -> NewtonParams {
        NewtonParams {
            tol: 1e-6,
            max_iterations: 25,
            max_change: Some(0.2),
            bounds: Some((0.0, 1.0)),
        }
    }

    #[test]
    fn stationary_state_has_zero_residual() {
        let mut sys = chain_system(5, 0.0, 0.0);
        sys.wells.clear();
        sys.s_prev = vec![0.3; 5];
        let u = sys.s_prev.clone();
        let (r, _) = assemble_transport_residual(&sys, &u);
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn positive_flux_chain_gives_lower_bidiagonal_jacobian() {
        let sys = chain_system(6, 5e-4, 5e-4);
        let u = vec![0.4; 6];
        let (_, jac) = assemble_transport_residual(&sys, &u);
        for row in 0..6 {
            let cols: Vec<usize> = jac.row(row).map(|(c, _)| c).collect();
            for c in cols {
                assert!(c == row || c + 1 == row, "row {row} references column {c}");
            }
        }
    }

    #[test]
    fn jacobian_matches_central_finite_differences() {
        // small chain with a fracture-like third connection and wells
        let mut sys = chain_system(6, 4e-4, 3e-4);
        sys.connections.push(TransportConnection { a: 1, b: 4, flux: -2e-4, kind: ConnKind::MatrixFracture });
        let u: Vec<f64> = (0..6).map(|i| 0.1 + 0.12 * i as f64).collect();
        let (_, jac) = assemble_transport_residual(&sys, &u);
        let h = 1e-7;
        for col in 0..6 {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[col] += h;
            dn[col] -= h;
            let (ru, _) = assemble_transport_residual(&sys, &up);
            let (rd, _) = assemble_transport_residual(&sys, &dn);
            let fd: Vec<f64> = ru.iter().zip(&rd).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            let col_max = (0..6).map(|r| jac.get(r, col).abs()).fold(0.0, f64::max);
            for row in 0..6 {
                let err = (jac.get(row, col) - fd[row]).abs();
                assert!(err <= 1e-6 * col_max.max(1e-12), "({row},{col}): {err}");
            }
        }
    }

    #[test]
    fn implicit_step_matches_cell_by_cell_bisection() {
        // the 1D upwind system is lower triangular: an independent oracle
        // solves it cell by cell with scalar bisection
        let sys = chain_system(10, 6e-4, 6e-4);
        let u0 = sys.s_prev.clone();
        let params = NewtonParams { tol: 1e-12, ..transport_params() };
        let (u, report) = newton_solve(&sys, &u0, &params);
        assert!(report.converged);

        let fluid = FluidModel::default();
        let coeff = 100.0 / sys.dt;
        let flux = 6e-4;
        let mut oracle = vec![0.0; 10];
        for i in 0..10 {
            let inflow = if i == 0 { 6e-4 } else { fluid.fractional_flow(oracle[i - 1]).0 * flux };
            let outflow_of = |s: f64| {
                if i == 9 {
                    // producer: f_w(s) times production rate, plus chain has no outlet conn
                    fluid.fractional_flow(s).0 * 6e-4
                } else {
                    fluid.fractional_flow(s).0 * flux
                }
            };
            let residual = |s: f64| coeff * s + outflow_of(s) - inflow;
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if residual(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            oracle[i] = 0.5 * (lo + hi);
        }
        for i in 0..10 {
            assert!(
                (u[i] - oracle[i]).abs() < 1e-10,
                "cell {i}: newton {} vs oracle {}",
                u[i],
                oracle[i]
            );
        }
    }

    #[test]
    fn converged_step_conserves_water_in_incompressible_limit() {
        let sys = chain_system(8, 5e-4, 5e-4);
        let u0 = sys.s_prev.clone();
        let params = NewtonParams { tol: 1e-10, ..transport_params() };
        let (u, report) = newton_solve(&sys, &u0, &params);
        assert!(report.converged);
        assert!(u.iter().all(|&s| (-1e-9..=1.0 + 1e-9).contains(&s)));
        let injected = 5e-4 * sys.dt;
        let produced: f64 = sys.fluid.fractional_flow(u[7]).0 * 5e-4 * sys.dt;
        let stored: f64 = u.iter().zip(&sys.s_prev).map(|(a, b)| 100.0 * (a - b)).sum();
        assert!(((stored + produced - injected) / injected).abs() < 1e-6);
    }
}
