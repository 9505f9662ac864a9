//! Per-iteration cost against surface size, measured and modeled.

use pddgp::channel::{ScenarioConfig, SystemDims};
use pddgp::experiments::{benchmark_scaling, grad_theta_complex_mults, ExperimentSpec};

fn main() -> pddgp::Result<()> {
    let scenario = ScenarioConfig::default();
    let dims = SystemDims { n_t: 8, n_r: 4, n_p: 4, n_i: 64, k: scenario.num_receivers() };
    let spec = ExperimentSpec { realizations: 3, ..ExperimentSpec::new(scenario, dims) };
    let sizes = [64, 128, 256, 512];
    let rows = benchmark_scaling(&spec, &sizes)?;
    let base = rows[0].mean_iter_ms;
    for row in &rows {
        let d = SystemDims { n_i: row.n_i, ..dims };
        println!(
            "N_I = {:3}: {:.3} ms/iter (x{:.2})  gradient multiplies {}",
            row.n_i,
            row.mean_iter_ms,
            row.mean_iter_ms / base,
            grad_theta_complex_mults(&d)
        );
    }
    Ok(())
}
