//! Average rate versus transmit budget for the joint solver and both baselines.

use pddgp::channel::{ScenarioConfig, SystemDims};
use pddgp::experiments::{run_sweep, ExperimentSpec, Method, Sweep};

fn main() -> pddgp::Result<()> {
    let scenario = ScenarioConfig::default();
    let dims = SystemDims { n_t: 8, n_r: 4, n_p: 4, n_i: 64, k: scenario.num_receivers() };
    let spec = ExperimentSpec {
        sweep: Sweep::PmaxDbm(vec![0.0, 10.0, 20.0, 30.0]),
        realizations: 10,
        methods: Method::ALL.to_vec(),
        threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        ..ExperimentSpec::new(scenario, dims)
    };
    let res = run_sweep(&spec)?;

    print!("{:>10}", "pmax_dbm");
    for m in &spec.methods {
        print!("{:>16}", m.as_str());
    }
    println!();
    for p in [0.0, 10.0, 20.0, 30.0] {
        print!("{p:>10.0}");
        for m in &spec.methods {
            let c = res.cell(*m, p).expect("cell exists");
            print!("{:>9.3} ± {:<4.2}", c.mean_rate_nats / std::f64::consts::LN_2, c.std_rate_nats / std::f64::consts::LN_2);
        }
        println!();
    }
    println!("(bit/s/Hz, mean ± sample std over {} realizations)", spec.realizations);
    Ok(())
}
