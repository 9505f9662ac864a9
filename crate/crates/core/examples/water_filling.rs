//! With no surface and no primary receivers the solver reduces to
//! water-filling over the direct channel.

use pddgp::channel::{ScenarioConfig, SystemDims};
use pddgp::experiments::{build_problem, solve_pddgp};
use pddgp::solver::{water_filling_capacity, SolverConfig};

fn main() -> pddgp::Result<()> {
    let scenario = ScenarioConfig::default().with_receivers(0);
    let dims = SystemDims { n_t: 4, n_r: 4, n_p: 4, n_i: 0, k: 0 };
    for r in 0..5 {
        let pb = build_problem(&scenario, &dims, r)?;
        let sol = solve_pddgp(&pb, &SolverConfig::default(), scenario.seed, r)?;
        let closed = water_filling_capacity(&pb.channels.h_tr, pb.p_max);
        println!("r = {r}: solver {:.9}  closed form {:.9}  diff {:.1e}", sol.rate_nats, closed, (sol.rate_nats - closed).abs());
    }
    Ok(())
}
