//! Large-scale gains of the default geometry and an empirical check of the
//! small-scale fading power.

use pddgp::channel::{sample_raw_channels, watts_to_dbm, ScenarioConfig, SystemDims};

fn main() -> pddgp::Result<()> {
    let scenario = ScenarioConfig::default();
    let g = scenario.link_gains()?;
    let db = |x: f64| 10.0 * x.log10();
    println!("ST-SR {:.1} dB, ST-IRS {:.1} dB, IRS-SR {:.1} dB", db(g.tr), db(g.ti), db(g.ir));
    for (k, (tk, ik)) in g.pr.iter().enumerate() {
        println!("ST-PR{k} {:.1} dB, IRS-PR{k} {:.1} dB", db(*tk), db(*ik));
    }
    println!("noise {:.2} dBm", watts_to_dbm(scenario.noise_power_watts()?));

    let dims = SystemDims { n_t: 4, n_r: 4, n_p: 4, n_i: 16, k: scenario.num_receivers() };
    let draws = 200;
    let mut power = 0.0;
    for r in 0..draws {
        let ch = sample_raw_channels(&dims, &scenario, r)?;
        power += ch.h_ti.norm_squared() / (dims.n_i * dims.n_t) as f64;
    }
    println!("mean |h_ti|^2 / gain = {:.4} over {} draws", power / draws as f64 / g.ti, draws);
    Ok(())
}
