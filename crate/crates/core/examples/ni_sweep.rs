//! Average rate versus surface size with N_T=16, N_R=4, N_P=2. Channels are
//! nested across sizes, so every added element extends the same realization.

use pddgp::channel::{ScenarioConfig, SystemDims};
use pddgp::experiments::{run_sweep, ExperimentSpec, Method, Sweep};

fn main() -> pddgp::Result<()> {
    let scenario = ScenarioConfig::default();
    let dims = SystemDims { n_t: 16, n_r: 4, n_p: 2, n_i: 0, k: scenario.num_receivers() };
    let sizes = [16, 32, 64, 128];
    let spec = ExperimentSpec {
        sweep: Sweep::NI(sizes.to_vec()),
        realizations: 10,
        methods: vec![Method::Pddgp, Method::RandomPhase],
        threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        ..ExperimentSpec::new(scenario, dims)
    };
    let res = run_sweep(&spec)?;
    for n in sizes {
        let joint = res.cell(Method::Pddgp, n as f64).expect("cell exists");
        let random = res.cell(Method::RandomPhase, n as f64).expect("cell exists");
        println!(
            "N_I = {n:3}: pddgp {:.3}  random_phase {:.3} bit/s/Hz",
            joint.mean_rate_nats / std::f64::consts::LN_2,
            random.mean_rate_nats / std::f64::consts::LN_2
        );
    }
    Ok(())
}
