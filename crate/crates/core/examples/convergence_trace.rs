//! Rate and augmented objective per inner iteration, grouped by penalty stage.

use pddgp::channel::{ScenarioConfig, SystemDims};
use pddgp::experiments::{build_problem, solve_pddgp};
use pddgp::solver::SolverConfig;

fn main() -> pddgp::Result<()> {
    let scenario = ScenarioConfig::default();
    for n_t in [4, 8, 16] {
        let dims = SystemDims { n_t, n_r: 4, n_p: 4, n_i: 64, k: scenario.num_receivers() };
        let problem = build_problem(&scenario, &dims, 0)?;
        let sol = solve_pddgp(&problem, &SolverConfig::default(), scenario.seed, 0)?;
        println!("N_T = {n_t}: {} after {} iterations", sol.termination.as_str(), sol.inner_iterations);
        let mut stage = 0;
        for rec in &sol.trace.records {
            if rec.outer_stage != stage {
                stage = rec.outer_stage;
                println!("  stage {stage}, rho = {:.0e}", rec.rho);
            }
            if rec.iter % 10 == 0 || rec.iter == sol.inner_iterations {
                println!(
                    "    {:4}  R = {:.6}  Rhat = {:.6}  gap = {:.1e}",
                    rec.iter,
                    rec.rate_nats,
                    rec.augmented_nats,
                    (rec.rate_nats - rec.augmented_nats).abs()
                );
            }
        }
    }
    Ok(())
}
