//! The flow (pressure) subproblem of the sequential-implicit split.
//!
//! One total-mass equation per unknown with saturations frozen at their
//! previous-step values: compressible accumulation plus total Darcy flux
//! balanced against well sources. Mobilities are upwinded by the
//! previous-step potential, which keeps the incompressible system linear.

use crate::linalg::{SparseBuilder, SparseMatrix};
use crate::model::ReservoirModel;
use crate::newton::{newton_solve, NewtonParams, NewtonReport, NonlinearProblem};
use crate::physics::{WellControl, WellKind};

/// Converged flow solution: pressures, one signed total flux per model
/// connection (positive a -> b), and per-perforation total rates
/// (positive into the reservoir).
#[derive(Debug, Clone)]
pub struct FlowState {
    pub pressure: Vec<f64>,
    pub total_flux: Vec<f64>,
    pub perf_rates: Vec<Vec<f64>>,
}

/// Per-well operating point for one timestep; rates carry any schedule
/// multiplier already applied.
#[derive(Debug, Clone)]
pub struct WellOperation {
    pub control: WellControl,
    pub kind: WellKind,
}

pub struct FlowProblem<'a> {
    model: &'a ReservoirModel,
    dt: f64,
    p_prev: &'a [f64],
    s_prev: &'a [f64],
    operations: Vec<WellOperation>,
    /// Total mobility per unknown at frozen saturations.
    mobility: Vec<f64>,
    /// Upwind mobility per connection, fixed by the previous potential.
    conn_mobility: Vec<f64>,
    /// Rate-well distribution weights per perforation.
    rate_weights: Vec<Vec<f64>>,
}

impl<'a> FlowProblem<'a> {
    pub fn new(
        model: &'a ReservoirModel,
        dt: f64,
        p_prev: &'a [f64],
        s_prev: &'a [f64],
        operations: Vec<WellOperation>,
    ) -> Self {
        assert_eq!(operations.len(), model.wells.len());
        let mobility: Vec<f64> = s_prev.iter().map(|&s| model.fluid.total_mobility(s)).collect();
        let conn_mobility: Vec<f64> = model
            .connections
            .iter()
            .map(|c| {
                let dp = p_prev[c.a] - p_prev[c.b];
                if dp > 0.0 {
                    mobility[c.a]
                } else if dp < 0.0 {
                    mobility[c.b]
                } else {
                    0.5 * (mobility[c.a] + mobility[c.b])
                }
            })
            .collect();
        let rate_weights = model
            .wells
            .iter()
            .map(|w| {
                let total: f64 = w.perforations.iter().map(|p| p.well_index).sum();
                w.perforations.iter().map(|p| p.well_index / total).collect()
            })
            .collect();
        FlowProblem { model, dt, p_prev, s_prev, operations, mobility, conn_mobility, rate_weights }
    }

    /// Total fluxes at the given pressures, using the frozen mobilities.
    pub fn fluxes(&self, p: &[f64]) -> Vec<f64> {
        self.model
            .connections
            .iter()
            .zip(&self.conn_mobility)
            .map(|(c, &lam)| c.trans * lam * (p[c.a] - p[c.b]))
            .collect()
    }

    /// Per-perforation total volumetric rates (positive into the cell).
    pub fn perforation_rates(&self, p: &[f64]) -> Vec<Vec<f64>> {
        self.model
            .wells
            .iter()
            .zip(&self.operations)
            .zip(&self.rate_weights)
            .map(|((well, op), weights)| {
                well.perforations
                    .iter()
                    .zip(weights)
                    .map(|(perf, &w)| match op.control {
                        WellControl::Rate(q) => q * w,
                        WellControl::Bhp(bhp) => {
                            perf.well_index * self.mobility[perf.cell] * (bhp - p[perf.cell])
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

impl NonlinearProblem for FlowProblem<'_> {
    fn n_unknowns(&self) -> usize {
        self.model.n_unknowns()
    }

    fn assemble(&self, p: &[f64]) -> (Vec<f64>, SparseMatrix) {
        let n = self.n_unknowns();
        let fluid = &self.model.fluid;
        let mut residual = vec![0.0; n];
        let mut jac = SparseBuilder::square(n);

        // compressible accumulation: PV/dt * sum_alpha S_alpha^n (1 - exp(-c_alpha dp))
        for i in 0..n {
            let pv_dt = self.model.pore_volumes[i] / self.dt;
            let dp = p[i] - self.p_prev[i];
            let sw = self.s_prev[i];
            let so = 1.0 - sw;
            let ew = (-fluid.c_w * dp).exp();
            let eo = (-fluid.c_o * dp).exp();
            residual[i] += pv_dt * (sw * (1.0 - ew) + so * (1.0 - eo));
            jac.add(i, i, pv_dt * (sw * fluid.c_w * ew + so * fluid.c_o * eo));
        }

        // total flux, linear at frozen upwind mobilities
        for (c, &lam) in self.model.connections.iter().zip(&self.conn_mobility) {
            let t = c.trans * lam;
            let flux = t * (p[c.a] - p[c.b]);
            residual[c.a] += flux;
            residual[c.b] -= flux;
            jac.add(c.a, c.a, t);
            jac.add(c.a, c.b, -t);
            jac.add(c.b, c.b, t);
            jac.add(c.b, c.a, -t);
        }

        // wells: sources subtract from the residual
        for ((well, op), weights) in self.model.wells.iter().zip(&self.operations).zip(&self.rate_weights) {
            for (perf, &w) in well.perforations.iter().zip(weights) {
                match op.control {
                    WellControl::Rate(q) => {
                        residual[perf.cell] -= q * w;
                    }
                    WellControl::Bhp(bhp) => {
                        let t = perf.well_index * self.mobility[perf.cell];
                        residual[perf.cell] -= t * (bhp - p[perf.cell]);
                        jac.add(perf.cell, perf.cell, t);
                    }
                }
            }
        }

        (residual, jac.build())
    }

    fn residual_scale(&self, i: usize) -> f64 {
        self.dt / self.model.pore_volumes[i]
    }
}

/// Solve the flow subproblem with standard Newton. Non-convergence is
/// reported, not raised; the timestep controller decides what to do.
pub fn solve_flow(problem: &FlowProblem, params: &NewtonParams) -> (FlowState, NewtonReport) {
    let (p, report) = newton_solve(problem, problem.p_prev, params);
    let state = FlowState {
        total_flux: problem.fluxes(&p),
        perf_rates: problem.perforation_rates(&p),
        pressure: p,
    };
    (state, report)
}
