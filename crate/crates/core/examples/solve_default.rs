//! One joint solve on the default scenario: 8 transmit antennas, 64 surface
//! elements, 20 dBm budget and four primary receivers.

use pddgp::channel::{ScenarioConfig, SystemDims};
use pddgp::experiments::{build_problem, solve_pddgp};
use pddgp::solver::SolverConfig;

fn main() -> pddgp::Result<()> {
    let scenario = ScenarioConfig::default();
    let dims = SystemDims { n_t: 8, n_r: 4, n_p: 4, n_i: 64, k: scenario.num_receivers() };
    let problem = build_problem(&scenario, &dims, 0)?;
    let sol = solve_pddgp(&problem, &SolverConfig::default(), scenario.seed, 0)?;

    println!("termination      {}", sol.termination.as_str());
    println!("rate             {:.4} nats/s/Hz ({:.4} bit/s/Hz)", sol.rate_nats, sol.rate_bps_hz());
    println!("|R - Rhat|       {:.2e}", (sol.rate_nats - sol.augmented_nats).abs());
    println!("tr(X)            {:.4} W of {:.4} W", sol.x.trace(), problem.p_max);
    println!("iterations       {} inner, {} outer", sol.inner_iterations, sol.outer_iterations);
    println!("wall time        {:.1} ms", sol.wall_ms);
    for (k, (i, p)) in sol.interference.iter().zip(&problem.thresholds).enumerate() {
        println!("PR{k}: interference {i:.4} / threshold {p:.4} (noise units)");
    }
    Ok(())
}
