//! Newton-vs-EN-NE comparison harness: runs both arms of a case from the
//! same initial state, writes per-step CSVs, a summary, and cumulative
//! iteration/time charts.

use std::path::{Path, PathBuf};

use crate::case::BuiltCase;
use crate::error::{FracflowError, Result};
use crate::output::svg::{line_chart, Series};
use crate::sim::{run_simulation, SimState, SimulationError, SolverConfig, SolverKind, StepReport};
use crate::units::DAY;

pub const STEP_CSV_HEADER: &str = "step,dt_days,flow_iters,transport_iters,wasted,cuts,activated,wall_s";

#[derive(Debug, Clone, Copy, Default)]
pub struct ArmTotals {
    /// All transport Newton iterations, accepted plus wasted.
    pub total_iterations: usize,
    pub wasted_iterations: usize,
    pub cuts: usize,
    pub activations: usize,
    pub wall_seconds: f64,
}

#[derive(Debug)]
pub struct ArmResult {
    pub kind: SolverKind,
    pub label: &'static str,
    pub reports: Vec<StepReport>,
    pub final_state: Option<SimState>,
    /// Simulation failure, if the arm aborted; partial reports are kept.
    pub error: Option<String>,
}

impl ArmResult {
    pub fn totals(&self) -> ArmTotals {
        let mut t = ArmTotals::default();
        for r in &self.reports {
            t.total_iterations += r.transport_iterations + r.wasted_iterations;
            t.wasted_iterations += r.wasted_iterations;
            t.cuts += r.cuts;
            t.activations += r.activated as usize;
            t.wall_seconds += r.wall_seconds;
        }
        t
    }
}

#[derive(Debug)]
pub struct BenchmarkResult {
    pub newton: ArmResult,
    pub enne: ArmResult,
}

#[derive(Debug, Clone, Default)]
pub struct BenchOptions {
    /// Write wall-clock columns as zero for byte-reproducible output.
    pub zero_walltime: bool,
}

fn run_arm(case: &BuiltCase, kind: SolverKind, label: &'static str) -> ArmResult {
    let config = SolverConfig { solver_kind: kind, ..case.solver.clone() };
    match run_simulation(&case.model, &case.schedule, &config, case.initial.clone()) {
        Ok(out) => ArmResult {
            kind,
            label,
            reports: out.reports,
            final_state: Some(out.final_state),
            error: None,
        },
        Err(SimulationError::MaxCutsExceeded { reports, .. } ) => {
            let err = format!("{label} arm aborted: timestep cut limit exhausted");
            ArmResult { kind, label, reports, final_state: None, error: Some(err) }
        }
    }
}

/// Run both arms from identical initial states and emit all report files
/// into `out_dir`. Set `FRACFLOW_THREADS` to 2 or more to run the arms
/// concurrently (wall times then overlap; totals remain comparable only
/// per arm).
pub fn run_benchmark(case: &BuiltCase, out_dir: &Path, options: &BenchOptions) -> Result<BenchmarkResult> {
    std::fs::create_dir_all(out_dir).map_err(|e| FracflowError::io(out_dir, e))?;

    let parallel = std::env::var("FRACFLOW_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .map(|n| n >= 2)
        .unwrap_or(false);

    let (newton, enne) = if parallel {
        std::thread::scope(|scope| {
            let a = scope.spawn(|| run_arm(case, SolverKind::Newton, "newton"));
            let b = scope.spawn(|| run_arm(case, SolverKind::EnNe, "enne"));
            (a.join().expect("newton arm panicked"), b.join().expect("enne arm panicked"))
        })
    } else {
        (
            run_arm(case, SolverKind::Newton, "newton"),
            run_arm(case, SolverKind::EnNe, "enne"),
        )
    };

    let result = BenchmarkResult { newton, enne };
    write_reports(&result, out_dir, options)?;
    Ok(result)
}

pub fn step_csv(reports: &[StepReport], zero_walltime: bool) -> String {
    let mut out = String::from(STEP_CSV_HEADER);
    out.push('\n');
    for r in reports {
        let wall = if zero_walltime { 0.0 } else { r.wall_seconds };
        out.push_str(&format!(
            "{},{:.6},{},{},{},{},{},{:.6}\n",
            r.step,
            r.dt / DAY,
            r.flow_iterations,
            r.transport_iterations,
            r.wasted_iterations,
            r.cuts,
            r.activated as u8,
            wall
        ));
    }
    out
}

fn cumulative(reports: &[StepReport], f: impl Fn(&StepReport) -> f64) -> Vec<(f64, f64)> {
    let mut acc = 0.0;
    reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            acc += f(r);
            (i as f64, acc)
        })
        .collect()
}

fn write_reports(result: &BenchmarkResult, out_dir: &Path, options: &BenchOptions) -> Result<()> {
    let write = |name: &str, contents: String| -> Result<PathBuf> {
        let path = out_dir.join(name);
        std::fs::write(&path, contents).map_err(|e| FracflowError::io(&path, e))?;
        Ok(path)
    };

    for arm in [&result.newton, &result.enne] {
        write(&format!("{}.csv", arm.label), step_csv(&arm.reports, options.zero_walltime))?;
    }

    let mut summary = String::from("arm,steps,total_iterations,wasted,cuts,activations,wall_s\n");
    for arm in [&result.newton, &result.enne] {
        let t = arm.totals();
        let wall = if options.zero_walltime { 0.0 } else { t.wall_seconds };
        summary.push_str(&format!(
            "{},{},{},{},{},{},{:.6}\n",
            arm.label,
            arm.reports.len(),
            t.total_iterations,
            t.wasted_iterations,
            t.cuts,
            t.activations,
            wall
        ));
    }
    write("summary.csv", summary)?;

    let iter_series = [
        Series {
            label: "newton",
            color: "#1f77b4",
            points: cumulative(&result.newton.reports, |r| {
                (r.transport_iterations + r.wasted_iterations) as f64
            }),
        },
        Series {
            label: "enne",
            color: "#2ca02c",
            points: cumulative(&result.enne.reports, |r| {
                (r.transport_iterations + r.wasted_iterations) as f64
            }),
        },
    ];
    write(
        "cumulative_iterations.svg",
        line_chart("Cumulative nonlinear iterations", "timestep", "iterations", &iter_series),
    )?;

    let time_series = [
        Series {
            label: "newton",
            color: "#1f77b4",
            points: cumulative(&result.newton.reports, |r| r.wall_seconds),
        },
        Series {
            label: "enne",
            color: "#2ca02c",
            points: cumulative(&result.enne.reports, |r| r.wall_seconds),
        },
    ];
    write(
        "cumulative_time.svg",
        line_chart("Cumulative wall time", "timestep", "seconds", &time_series),
    )?;

    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(step: usize, iters: usize, wasted: usize, activated: bool) -> StepReport {
        StepReport {
            step,
            dt: DAY,
            flow_iterations: 1,
            transport_iterations: iters,
            wasted_iterations: wasted,
            cuts: (wasted > 0) as usize,
            activated,
            wall_seconds: 0.125,
        }
    }

    #[test]
    fn csv_header_is_pinned() {
        assert_eq!(
            STEP_CSV_HEADER,
            "step,dt_days,flow_iters,transport_iters,wasted,cuts,activated,wall_s"
        );
        let csv = step_csv(&[report(0, 5, 0, false)], true);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), STEP_CSV_HEADER);
        assert_eq!(lines.next().unwrap(), "0,1.000000,1,5,0,0,0,0.000000");
    }

    #[test]
    fn totals_equal_series_sums() {
        let arm = ArmResult {
            kind: SolverKind::Newton,
            label: "newton",
            reports: vec![report(0, 5, 0, false), report(1, 7, 12, true), report(2, 4, 0, true)],
            final_state: None,
            error: None,
        };
        let t = arm.totals();
        assert_eq!(t.total_iterations, 5 + 7 + 12 + 4);
        assert_eq!(t.wasted_iterations, 12);
        assert_eq!(t.cuts, 1);
        assert_eq!(t.activations, 2);
    }

    #[test]
    fn zero_walltime_makes_output_reproducible() {
        let reports = vec![report(0, 3, 0, false)];
        let a = step_csv(&reports, true);
        let mut other = reports.clone();
        other[0].wall_seconds = 0.5; // a different measured time
        let b = step_csv(&other, true);
        assert_eq!(a, b);
    }
}
