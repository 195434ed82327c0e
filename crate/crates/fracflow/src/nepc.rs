//! Nonlinear-elimination right preconditioning of the transport solve.
//!
//! When matrix-fracture water fluxes change abruptly between steps, the
//! fracture unknowns are pre-solved on a decoupled fracture subproblem
//! (matrix-fracture exchange frozen as Neumann sources) and injected back
//! before the first global Newton iteration. The global residual,
//! Jacobian, and convergence test are untouched: any accepted solution
//! satisfies exactly the same criteria as the unpreconditioned solver.

use log::warn;

use crate::error::{FracflowError, Result};
use crate::linalg::{SparseBuilder, SparseMatrix};
use crate::newton::{newton_solve, NewtonParams, NewtonReport, NonlinearProblem};
use crate::physics::FluidModel;
use crate::transport::{TransportConnection, TransportSystem, TransportWellTerm};

/// Selection maps between global unknowns and the fracture subspace.
#[derive(Debug, Clone)]
pub struct SubdomainMaps {
    n_total: usize,
    fracture_indices: Vec<usize>,
    is_fracture: Vec<bool>,
}

impl SubdomainMaps {
    pub fn new(fracture_indices: Vec<usize>, n_total: usize) -> Self {
        let mut is_fracture = vec![false; n_total];
        for &i in &fracture_indices {
            is_fracture[i] = true;
        }
        SubdomainMaps { n_total, fracture_indices, is_fracture }
    }

    /// The standard partition of a transport system: matrix unknowns
    /// first, fracture unknowns appended.
    pub fn for_system(system: &TransportSystem) -> Self {
        Self::new((system.n_matrix..system.n_unknowns).collect(), system.n_unknowns)
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn n_fracture(&self) -> usize {
        self.fracture_indices.len()
    }

    pub fn fracture_indices(&self) -> &[usize] {
        &self.fracture_indices
    }

    pub fn is_fracture(&self, i: usize) -> bool {
        self.is_fracture[i]
    }

    /// Π_f: gather the fracture coordinates.
    pub fn project_fracture(&self, u: &[f64]) -> Vec<f64> {
        self.fracture_indices.iter().map(|&i| u[i]).collect()
    }

    /// Π_fᵀ: scatter fracture coordinates into a zero global vector.
    pub fn scatter_fracture(&self, uf: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_total];
        for (&i, &v) in self.fracture_indices.iter().zip(uf) {
            out[i] = v;
        }
        out
    }

    /// Π_m: zero the fracture coordinates.
    pub fn zero_fracture(&self, u: &[f64]) -> Vec<f64> {
        let mut out = u.to_vec();
        for &i in &self.fracture_indices {
            out[i] = 0.0;
        }
        out
    }

    /// Π_m u + Π_fᵀ u_f: replace the fracture entries of `u`.
    pub fn inject(&self, u: &[f64], uf: &[f64]) -> Vec<f64> {
        let mut out = u.to_vec();
        for (&i, &v) in self.fracture_indices.iter().zip(uf) {
            out[i] = v;
        }
        out
    }
}

/// u' = Π_m u + Π_fᵀ u_f_half.
pub fn inject_update(u: &[f64], u_f_half: &[f64], maps: &SubdomainMaps) -> Vec<f64> {
    maps.inject(u, u_f_half)
}

/// Water fluxes across matrix-fracture faces at the two most recent
/// accepted steps. Differences are taken between accepted steps only;
/// failed attempts never enter the history.
#[derive(Debug, Clone, Default)]
pub struct FluxHistory {
    prev: Option<Vec<f64>>,
    prev2: Option<Vec<f64>>,
}

impl FluxHistory {
    pub fn new() -> Self {
        FluxHistory::default()
    }

    /// Shift the history by one accepted step.
    pub fn push_accepted(&mut self, fluxes: Vec<f64>) {
        self.prev2 = self.prev.take();
        self.prev = Some(fluxes);
    }

    /// Two prior accepted steps are required before the criterion can fire.
    pub fn is_ready(&self) -> bool {
        self.prev.is_some() && self.prev2.is_some()
    }

    pub fn clear(&mut self) {
        self.prev = None;
        self.prev2 = None;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Sum,
    Mean,
}

/// How the fracture subproblem treats matrix-fracture exchange: frozen at
/// the entry state (Neumann sources) or dropped outright (ablation).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingTreatment {
    FreezeAtEntry,
    Drop,
}

#[derive(Debug, Clone, Copy)]
pub struct ActivationConfig {
    /// Activation threshold on the flux-difference ratio score.
    pub gamma: f64,
    pub reduction: Reduction,
    /// Denominator guard; faces with |ΔF| at or below it are stagnant.
    pub eps_flux: f64,
    /// Iteration cap for the local fracture solves.
    pub local_max_iters: usize,
    /// Activate unconditionally on retries after a timestep cut.
    pub activate_on_cut: bool,
    pub coupling: CouplingTreatment,
}

impl Default for ActivationConfig {
    fn default() -> Self {
        ActivationConfig {
            gamma: 0.25,
            reduction: Reduction::Mean,
            eps_flux: 1e-12,
            local_max_iters: 5,
            activate_on_cut: true,
            coupling: CouplingTreatment::FreezeAtEntry,
        }
    }
}

/// Ratio of second- to first-order flux differences over the
/// matrix-fracture faces: Σ or mean of |Δ²F_i| / |ΔF_i|. Returns
/// (activate, score); inactive until two accepted steps are recorded.
///
/// The mean is taken over the full face set: faces whose first
/// difference is below the guard contribute zero but still count, so a
/// handful of noisy faces in a large network cannot keep the solver in
/// preconditioned mode. Activation then marks genuinely collective flux
/// transitions (well events, breakthrough) rather than single-face
/// settling.
pub fn activation_criterion(
    history: &FluxHistory,
    current: &[f64],
    config: &ActivationConfig,
) -> (bool, f64) {
    let (Some(prev), Some(prev2)) = (&history.prev, &history.prev2) else {
        return (false, 0.0);
    };
    assert_eq!(prev.len(), current.len());
    assert_eq!(prev2.len(), current.len());
    if current.is_empty() {
        return (false, 0.0);
    }

    let mut score = 0.0;
    for i in 0..current.len() {
        let df = current[i] - prev[i];
        let df_prev = prev[i] - prev2[i];
        let d2f = df - df_prev;
        match config.reduction {
            Reduction::Sum => {
                score += d2f.abs() / (df.abs() + config.eps_flux);
            }
            Reduction::Mean => {
                if df.abs() > config.eps_flux {
                    score += d2f.abs() / (df.abs() + config.eps_flux);
                }
            }
        }
    }
    if config.reduction == Reduction::Mean {
        score /= current.len() as f64;
    }
    (score > config.gamma, score)
}

/// The decoupled fracture subproblem R̃_ff(u_f): fracture accumulation and
/// fracture-fracture fluxes implicit in u_f, matrix-fracture exchange
/// held constant at the entry state.
#[derive(Debug, Clone)]
pub struct FractureSubproblem {
    pub pore_volume: Vec<f64>,
    pub dt: f64,
    pub s_prev: Vec<f64>,
    pub density_ratio: Vec<f64>,
    /// Fracture-fracture connections in local indices.
    pub connections: Vec<TransportConnection>,
    /// Frozen per-cell sources (matrix-fracture exchange at entry).
    pub frozen_source: Vec<f64>,
    /// Wells perforating fracture cells, in local indices.
    pub wells: Vec<TransportWellTerm>,
    pub fluid: FluidModel,
}

impl NonlinearProblem for FractureSubproblem {
    fn n_unknowns(&self) -> usize {
        self.pore_volume.len()
    }

    fn assemble(&self, uf: &[f64]) -> (Vec<f64>, SparseMatrix) {
        let n = self.n_unknowns();
        let mut residual = self.frozen_source.clone();
        let mut jac = SparseBuilder::square(n);
        for i in 0..n {
            let coeff = self.pore_volume[i] * self.density_ratio[i] / self.dt;
            residual[i] += coeff * (uf[i] - self.s_prev[i]);
            jac.add(i, i, coeff);
        }
        for c in &self.connections {
            if c.flux == 0.0 {
                continue;
            }
            let up = c.upwind();
            let (fw, dfw) = self.fluid.fractional_flow(uf[up]);
            let term = fw * c.flux;
            residual[c.a] += term;
            residual[c.b] -= term;
            jac.add(c.a, up, dfw * c.flux);
            jac.add(c.b, up, -dfw * c.flux);
        }
        for w in &self.wells {
            if w.water_only {
                residual[w.cell] -= w.rate;
            } else {
                let (fw, dfw) = self.fluid.fractional_flow(uf[w.cell]);
                residual[w.cell] -= fw * w.rate;
                jac.add(w.cell, w.cell, -dfw * w.rate);
            }
        }
        (residual, jac.build())
    }

    fn residual_scale(&self, i: usize) -> f64 {
        self.dt / self.pore_volume[i]
    }

    fn solve_linear(
        &self,
        solver: &mut crate::linalg::DirectSolver,
        jacobian: &SparseMatrix,
        rhs: &[f64],
    ) -> Result<Vec<f64>> {
        match crate::transport::upwind_topological_order(self.n_unknowns(), &self.connections) {
            Some(order) => crate::transport::solve_in_flow_order(&order, jacobian, rhs),
            None => solver.solve(jacobian, rhs),
        }
    }
}

/// Restrict the global transport system to the fracture rows with matrix
/// unknowns frozen at the entry state `u`.
///
/// An upwind exchange term depends on exactly one side's saturation, so
/// the matrix-fracture terms split cleanly: matrix-upwind exchanges are
/// functions of u_m and enter as constant Neumann sources (or are
/// dropped), while fracture-upwind exchanges are functions of u_f and
/// stay implicit. The subproblem Jacobian is then exactly the (f,f)
/// block of the global Jacobian.
pub fn extract_fracture_subproblem(
    system: &TransportSystem,
    u: &[f64],
    maps: &SubdomainMaps,
    coupling: CouplingTreatment,
) -> Result<FractureSubproblem> {
    if maps.n_fracture() == 0 {
        return Err(FracflowError::EmptyFractureSet);
    }
    let mut local_of = vec![usize::MAX; maps.n_total()];
    for (local, &g) in maps.fracture_indices().iter().enumerate() {
        local_of[g] = local;
    }

    let nf = maps.n_fracture();
    let gather = |v: &[f64]| maps.fracture_indices().iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let mut frozen_source = vec![0.0; nf];
    let mut connections = Vec::new();
    let mut wells: Vec<TransportWellTerm> = Vec::new();
    for c in &system.connections {
        match (maps.is_fracture(c.a), maps.is_fracture(c.b)) {
            (true, true) => connections.push(TransportConnection {
                a: local_of[c.a],
                b: local_of[c.b],
                flux: c.flux,
                kind: c.kind,
            }),
            (false, true) | (true, false) => {
                let up = c.upwind();
                if maps.is_fracture(up) {
                    // the fracture's own outflow response: implicit in u_f,
                    // entering the local system like a produced stream
                    wells.push(TransportWellTerm {
                        cell: local_of[up],
                        rate: -c.flux.abs(),
                        water_only: false,
                    });
                } else if coupling == CouplingTreatment::FreezeAtEntry {
                    let (fw, _) = system.fluid.fractional_flow(u[up]);
                    let term = fw * c.flux;
                    if maps.is_fracture(c.a) {
                        frozen_source[local_of[c.a]] += term;
                    } else {
                        frozen_source[local_of[c.b]] -= term;
                    }
                }
            }
            (false, false) => {}
        }
    }
    for w in &system.wells {
        if maps.is_fracture(w.cell) {
            wells.push(TransportWellTerm { cell: local_of[w.cell], ..*w });
        }
    }

    Ok(FractureSubproblem {
        pore_volume: gather(&system.pore_volume),
        dt: system.dt,
        s_prev: gather(&system.s_prev),
        density_ratio: gather(&system.density_ratio),
        connections,
        frozen_source,
        wells,
        fluid: system.fluid.clone(),
    })
}

/// A few damped Newton iterations on the fracture subproblem; returns the
/// last iterate even when unconverged. A singular local Jacobian degrades
/// the preconditioner to the identity.
pub fn local_fracture_solve(
    subproblem: &FractureSubproblem,
    uf0: &[f64],
    config: &ActivationConfig,
    params: &NewtonParams,
) -> (Vec<f64>, usize) {
    let local_params = NewtonParams { max_iterations: config.local_max_iters, ..*params };
    let (uf, report) = newton_solve(subproblem, uf0, &local_params);
    if report.linear_failure {
        warn!("singular fracture subproblem Jacobian; skipping local solve");
        return (uf0.to_vec(), report.iterations);
    }
    (uf, report.iterations)
}

/// Nonlinear-elimination preconditioned exact Newton. Without activation
/// this is bitwise-identical to the plain Newton solve; with it, one
/// local fracture solve improves the initial guess, then the unmodified
/// global Newton runs. On a system without fracture unknowns the
/// preconditioner is inapplicable and the plain solve runs.
pub fn en_ne_solve(
    system: &TransportSystem,
    u0: &[f64],
    history: &FluxHistory,
    config: &ActivationConfig,
    cut_occurred: bool,
    params: &NewtonParams,
) -> (Vec<f64>, NewtonReport) {
    let current = system.mf_water_fluxes(u0);
    let (by_score, _score) = activation_criterion(history, &current, config);
    let activate = by_score || (cut_occurred && config.activate_on_cut);
    let maps = SubdomainMaps::for_system(system);
    if !activate || maps.n_fracture() == 0 {
        return newton_solve(system, u0, params);
    }

    let subproblem = extract_fracture_subproblem(system, u0, &maps, config.coupling)
        .expect("fracture set is non-empty");
    let uf0 = maps.project_fracture(u0);
    let (uf_half, local_iterations) = local_fracture_solve(&subproblem, &uf0, config, params);
    let u_preconditioned = inject_update(u0, &uf_half, &maps);

    let (u, mut report) = newton_solve(system, &u_preconditioned, params);
    report.activated = true;
    report.local_iterations = local_iterations;
    (u, report)
}
