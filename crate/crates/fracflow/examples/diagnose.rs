use fracflow::case::load_and_build;
use fracflow::sim::{run_simulation, SolverConfig, SolverKind};
use std::path::Path;

fn main() {
    let built = load_and_build(Path::new("cases/case2.toml")).unwrap();
    println!("frac cells: {}", built.model.topology.n_fracture_cells());
    for eps in [1e-9f64] {
        for kind in [SolverKind::Newton, SolverKind::EnNe] {
            let mut c = SolverConfig { solver_kind: kind, ..built.solver.clone() };
            c.activation.eps_flux = eps;
            let label = if kind == SolverKind::Newton { "newton" } else { "enne  " };
            let t0 = std::time::Instant::now();
            match run_simulation(&built.model, &built.schedule, &c, built.initial.clone()) {
                Ok(out) => {
                    let total: usize = out.reports.iter().map(|r| r.transport_iterations + r.wasted_iterations).sum();
                    let wasted: usize = out.reports.iter().map(|r| r.wasted_iterations).sum();
                    let cuts: usize = out.reports.iter().map(|r| r.cuts).sum();
                    let act: usize = out.reports.iter().filter(|r| r.activated).count();
                    println!("eps={eps:.0e} {label} steps={:>3} total={:>5} wasted={:>4} cuts={:>3} act={:>3} wall={:.0}s",
                        out.reports.len(), total, wasted, cuts, act, t0.elapsed().as_secs_f64());
                }
                Err(e) => println!("eps={eps:.0e} {label} FAILED: {e}"),
            }
        }
    }
}
