//! Sequential-implicit time loop: per step, solve flow, hand the total
//! fluxes to the implicit transport solve, and maintain the ramped
//! timestep with cut-on-failure control and the matrix-fracture flux
//! history driving adaptive preconditioning.

use std::time::Instant;

use thiserror::Error;

use crate::model::ReservoirModel;
use crate::nepc::{en_ne_solve, ActivationConfig, FluxHistory};
use crate::newton::{newton_solve, NewtonParams};
use crate::flow::{solve_flow, FlowProblem, WellOperation};
use crate::physics::{WellControl, WellKind};
use crate::transport::TransportSystem;
use crate::units::DAY;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Newton,
    EnNe,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_newton: usize,
    /// Attempts allowed per step before the simulation aborts.
    pub max_cuts: usize,
    /// Transport convergence tolerance on the PV/dt-scaled residual.
    pub tolerance: f64,
    pub flow_tolerance: f64,
    /// Per-iteration saturation change clamp.
    pub ds_max: f64,
    pub dt_initial: f64,
    pub dt_target: f64,
    pub ramp_factor: f64,
    pub cut_factor: f64,
    pub activation: ActivationConfig,
    pub solver_kind: SolverKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_newton: 25,
            max_cuts: 6,
            tolerance: 1e-6,
            flow_tolerance: 1e-6,
            ds_max: 0.2,
            dt_initial: 0.9 * DAY,
            dt_target: 30.0 * DAY,
            ramp_factor: 1.3,
            cut_factor: 0.5,
            activation: ActivationConfig::default(),
            solver_kind: SolverKind::Newton,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.dt_initial > 0.0 && self.dt_initial <= self.dt_target) {
            return Err(crate::FracflowError::config("solver", "require 0 < dt_initial <= dt_target"));
        }
        if !(self.cut_factor > 0.0 && self.cut_factor < 1.0) {
            return Err(crate::FracflowError::config("solver", "cut_factor must lie in (0, 1)"));
        }
        if !(self.ramp_factor > 1.0) {
            return Err(crate::FracflowError::config("solver", "ramp_factor must exceed 1"));
        }
        Ok(())
    }

    pub fn transport_params(&self) -> NewtonParams {
        NewtonParams {
            tol: self.tolerance,
            max_iterations: self.max_newton,
            max_change: Some(self.ds_max),
            bounds: Some((0.0, 1.0)),
        }
    }

    pub fn flow_params(&self) -> NewtonParams {
        NewtonParams {
            tol: self.flow_tolerance,
            max_iterations: self.max_newton,
            max_change: None,
            bounds: None,
        }
    }
}

/// Pressures and water saturations over all unknowns.
#[derive(Debug, Clone)]
pub struct SimState {
    pub pressure: Vec<f64>,
    pub saturation: Vec<f64>,
}

impl SimState {
    pub fn uniform(n: usize, pressure: f64, saturation: f64) -> Self {
        SimState { pressure: vec![pressure; n], saturation: vec![saturation; n] }
    }
}

#[derive(Debug, Clone)]
pub struct StepReport {
    pub step: usize,
    /// Accepted step length, seconds.
    pub dt: f64,
    pub flow_iterations: usize,
    /// Transport iterations of the accepted attempt.
    pub transport_iterations: usize,
    /// Nonlinear iterations burned by attempts that ended in a cut.
    pub wasted_iterations: usize,
    pub cuts: usize,
    pub activated: bool,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub fraction_of_total: f64,
    pub state: SimState,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub reports: Vec<StepReport>,
    pub final_state: SimState,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("step {step}: nonlinear solver failed {attempts} attempts; cut limit exhausted")]
    MaxCutsExceeded {
        step: usize,
        attempts: usize,
        reports: Vec<StepReport>,
    },
}

/// Well controls over the run: injector rates are multiplied by the most
/// recent scheduled factor; saturation snapshots fire once the run
/// crosses each requested fraction of total time.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub total_time: f64,
    /// (time, factor) pairs, sorted by time; factor applies from its time on.
    pub rate_changes: Vec<(f64, f64)>,
    pub snapshot_fractions: Vec<f64>,
}

impl Schedule {
    pub fn constant(total_time: f64) -> Self {
        Schedule { total_time, rate_changes: Vec::new(), snapshot_fractions: vec![0.15, 0.5, 1.0] }
    }

    pub fn multiplier_at(&self, t: f64) -> f64 {
        self.rate_changes
            .iter()
            .rev()
            .find(|(at, _)| *at <= t)
            .map(|(_, f)| *f)
            .unwrap_or(1.0)
    }

    /// The next time the step must land on exactly: a rate change or the
    /// end of the simulation.
    fn next_boundary(&self, t: f64) -> f64 {
        let guard = 1e-9 * self.total_time.max(1.0);
        self.rate_changes
            .iter()
            .map(|(at, _)| *at)
            .filter(|&at| at > t + guard && at < self.total_time)
            .fold(self.total_time, f64::min)
    }
}

/// dt for the next step: grow from the last accepted dt up to the target.
pub fn ramp_schedule(last_dt: f64, config: &SolverConfig) -> f64 {
    (last_dt * config.ramp_factor).min(config.dt_target)
}

fn well_operations(model: &ReservoirModel, multiplier: f64) -> Vec<WellOperation> {
    model
        .wells
        .iter()
        .map(|w| {
            let control = match (w.kind, w.control) {
                (WellKind::Injector, WellControl::Rate(q)) => WellControl::Rate(q * multiplier),
                (_, c) => c,
            };
            WellOperation { control, kind: w.kind }
        })
        .collect()
}

/// Advance the model from `initial` to `schedule.total_time`.
pub fn run_simulation(
    model: &ReservoirModel,
    schedule: &Schedule,
    config: &SolverConfig,
    initial: SimState,
) -> Result<SimulationOutput, SimulationError> {
    let transport_params = config.transport_params();
    let flow_params = config.flow_params();
    let total = schedule.total_time;
    let time_guard = 1e-9 * total.max(1.0);

    let mut state = initial;
    let mut history = FluxHistory::new();
    let mut reports: Vec<StepReport> = Vec::new();
    let mut snapshots: Vec<Snapshot> = Vec::new();
    let mut snap_times: Vec<f64> = schedule.snapshot_fractions.iter().map(|f| f * total).collect();
    snap_times.sort_by(f64::total_cmp);
    let mut next_snapshot = 0usize;

    let mut t = 0.0;
    let mut dt_next = config.dt_initial;
    let mut step = 0usize;

    while total - t > time_guard {
        let boundary = schedule.next_boundary(t);
        let clipped = dt_next >= boundary - t;
        let mut dt = if clipped { boundary - t } else { dt_next };
        let step_start = Instant::now();
        let mut cuts = 0usize;
        let mut wasted = 0usize;
        let mut attempt = 0usize;

        let accepted = loop {
            attempt += 1;
            let multiplier = schedule.multiplier_at(t + 0.5 * dt);
            let operations = well_operations(model, multiplier);
            let flow_problem = FlowProblem::new(model, dt, &state.pressure, &state.saturation, operations);
            let (flow_state, flow_report) = solve_flow(&flow_problem, &flow_params);

            let transport = flow_report.converged.then(|| {
                let system =
                    TransportSystem::from_flow(model, &flow_state, &state.saturation, &state.pressure, dt);
                let (u, report) = match config.solver_kind {
                    SolverKind::Newton => newton_solve(&system, &state.saturation, &transport_params),
                    SolverKind::EnNe => en_ne_solve(
                        &system,
                        &state.saturation,
                        &history,
                        &config.activation,
                        cuts > 0,
                        &transport_params,
                    ),
                };
                (system, u, report)
            });

            match transport {
                Some((system, u, report)) if report.converged => {
                    break (flow_state, flow_report, system, u, report);
                }
                outcome => {
                    wasted += match &outcome {
                        Some((_, _, report)) => flow_report.iterations + report.iterations,
                        None => flow_report.iterations,
                    };
                    if attempt >= config.max_cuts {
                        return Err(SimulationError::MaxCutsExceeded { step, attempts: attempt, reports });
                    }
                    cuts += 1;
                    dt *= config.cut_factor;
                }
            }
        };

        let (flow_state, flow_report, system, u, transport_report) = accepted;
        // the history stores beginning-of-step flux estimates (new total
        // fluxes at entry saturations), matching what the activation
        // criterion compares against on later steps
        history.push_accepted(system.mf_water_fluxes(&state.saturation));
        state.pressure = flow_state.pressure;
        state.saturation = u;
        t = if clipped && cuts == 0 { boundary } else { t + dt };

        reports.push(StepReport {
            step,
            dt,
            flow_iterations: flow_report.iterations,
            transport_iterations: transport_report.iterations,
            wasted_iterations: wasted,
            cuts,
            activated: transport_report.activated,
            wall_seconds: step_start.elapsed().as_secs_f64(),
        });

        while next_snapshot < snap_times.len() && t >= snap_times[next_snapshot] - time_guard {
            snapshots.push(Snapshot {
                time: t,
                fraction_of_total: snap_times[next_snapshot] / total,
                state: state.clone(),
            });
            next_snapshot += 1;
        }

        dt_next = ramp_schedule(dt, config);
        step += 1;
    }

    Ok(SimulationOutput { reports, final_state: state, snapshots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edfm::EdfmTopology;
    use crate::mesh::{build_cartesian_grid, RockModel};
    use crate::physics::{peaceman_well_index, FluidModel, Perforation, WellSpec};
    use crate::units::{BAR, YEAR};

    fn small_model(rate: f64) -> ReservoirModel {
        let grid = build_cartesian_grid((4, 1, 1), (40.0, 10.0, 10.0)).unwrap();
        let rock = RockModel::uniform(&grid, 1e-13, 0.2).unwrap();
        let wi = peaceman_well_index(10.0, 10.0, 10.0, 1e-13, 1e-13, 0.1).unwrap();
        let wells = vec![
            WellSpec {
                name: "inj".into(),
                kind: WellKind::Injector,
                control: WellControl::Rate(rate),
                perforations: vec![Perforation { cell: 0, well_index: wi }],
            },
            WellSpec {
                name: "prod".into(),
                kind: WellKind::Producer,
                control: WellControl::Bhp(50.0 * BAR),
                perforations: vec![Perforation { cell: 3, well_index: wi }],
            },
        ];
        ReservoirModel::new(grid, rock, FluidModel::default(), EdfmTopology::empty(4), wells).unwrap()
    }

    #[test]
    fn ramp_doubles_until_target() {
        let config = SolverConfig {
            dt_initial: DAY,
            dt_target: 30.0 * DAY,
            ramp_factor: 2.0,
            ..SolverConfig::default()
        };
        let mut dts = vec![config.dt_initial];
        for _ in 0..6 {
            dts.push(ramp_schedule(*dts.last().unwrap(), &config));
        }
        let days: Vec<f64> = dts.iter().map(|d| d / DAY).collect();
        assert_eq!(days, vec![1.0, 2.0, 4.0, 8.0, 16.0, 30.0, 30.0]);
        assert_eq!(ramp_schedule(30.0 * DAY, &config), 30.0 * DAY);
    }

    #[test]
    fn packaged_ramp_yields_71_steps_over_five_years() {
        // zero-rate wells keep every step trivially convergent, isolating
        // the schedule: 14 ramp steps + 56 target steps + 1 clipped step
        let model = small_model(0.0);
        let schedule = Schedule::constant(5.0 * YEAR);
        let config = SolverConfig::default();
        let initial = SimState::uniform(model.n_unknowns(), 100.0 * BAR, 0.0);
        let out = run_simulation(&model, &schedule, &config, initial).unwrap();
        assert_eq!(out.reports.len(), 71);
        assert!(out.reports.iter().all(|r| r.cuts == 0));
        assert!(out.reports.iter().all(|r| r.transport_iterations == 0));
        let sum_dt: f64 = out.reports.iter().map(|r| r.dt).sum();
        assert!((sum_dt - 5.0 * YEAR).abs() < 1e-6);
        // cumulative iterations are non-decreasing by construction
        assert_eq!(out.snapshots.len(), 3);
    }

    #[test]
    fn forced_non_convergence_exhausts_exactly_max_cuts_attempts() {
        let model = small_model(1e-5);
        let schedule = Schedule::constant(100.0 * DAY);
        let config = SolverConfig { tolerance: 0.0, max_cuts: 6, ..SolverConfig::default() };
        let initial = SimState::uniform(model.n_unknowns(), 100.0 * BAR, 0.0);
        match run_simulation(&model, &schedule, &config, initial) {
            Err(SimulationError::MaxCutsExceeded { step, attempts, reports }) => {
                assert_eq!(step, 0);
                assert_eq!(attempts, 6);
                assert!(reports.is_empty());
            }
            other => panic!("expected cut-limit error, got {other:?}"),
        }
    }

    #[test]
    fn waterflood_advances_to_total_time_and_lands_on_boundaries() {
        let model = small_model(2e-6);
        let mut schedule = Schedule::constant(100.0 * DAY);
        schedule.rate_changes = vec![(50.0 * DAY, 2.0)];
        let config = SolverConfig { dt_initial: 8.0 * DAY, dt_target: 16.0 * DAY, ..SolverConfig::default() };
        let initial = SimState::uniform(model.n_unknowns(), 100.0 * BAR, 0.0);
        let out = run_simulation(&model, &schedule, &config, initial).unwrap();
        // one step must end exactly on the rate change
        let mut t = 0.0;
        let mut landed = false;
        for r in &out.reports {
            t += r.dt;
            if (t - 50.0 * DAY).abs() < 1e-6 {
                landed = true;
            }
        }
        assert!(landed, "no step landed on the rate-change boundary");
        let total: f64 = out.reports.iter().map(|r| r.dt).sum();
        assert!((total - 100.0 * DAY).abs() < 1e-6);
        // saturations stay physical
        assert!(out.final_state.saturation.iter().all(|&s| (-1e-9..=1.0 + 1e-9).contains(&s)));
        // water reached the producer cell
        assert!(out.final_state.saturation[3] > 0.0);
    }

    #[test]
    fn schedule_multiplier_switches_at_change_time() {
        let mut schedule = Schedule::constant(100.0 * DAY);
        schedule.rate_changes = vec![(50.0 * DAY, 2.0)];
        assert_eq!(schedule.multiplier_at(10.0 * DAY), 1.0);
        assert_eq!(schedule.multiplier_at(50.0 * DAY), 2.0);
        assert_eq!(schedule.multiplier_at(80.0 * DAY), 2.0);
    }
}
