//! The three methods on identical channels, realization by realization.

use pddgp::channel::{ScenarioConfig, SystemDims};
use pddgp::experiments::{build_problem, run_method, Method};
use pddgp::solver::SolverConfig;

fn main() -> pddgp::Result<()> {
    let scenario = ScenarioConfig::default();
    let dims = SystemDims { n_t: 8, n_r: 4, n_p: 4, n_i: 64, k: scenario.num_receivers() };
    let cfg = SolverConfig::default();
    println!("{:>3} {:>10} {:>10} {:>13}", "r", "pddgp", "no_irs", "random_phase");
    for r in 0..5 {
        let problem = build_problem(&scenario, &dims, r)?;
        let rates: Vec<f64> = Method::ALL
            .iter()
            .map(|m| run_method(*m, &problem, &cfg, scenario.seed, r).map(|s| s.rate_bps_hz()))
            .collect::<pddgp::Result<_>>()?;
        println!("{r:>3} {:>10.3} {:>10.3} {:>13.3}", rates[0], rates[1], rates[2]);
    }
    Ok(())
}
