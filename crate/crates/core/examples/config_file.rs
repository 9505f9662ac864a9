//! Parse a scenario file, apply an override and print the echo block that
//! reproduces the run.

use pddgp::config::ConfigFile;

fn main() -> pddgp::Result<()> {
    let src = r#"
[scenario]
seed = 11
pmax_dbm = 25.0

[dims]
n_i = 32

[experiment]
realizations = 4
methods = ["pddgp", "no_irs"]
"#;
    let mut file = ConfigFile::parse(src)?;
    file.scenario.pk_watts = pddgp::config::OneOrMany::Many(vec![1e-13, 2e-13, 1e-13, 5e-14]);
    let spec = file.to_spec(src)?;
    println!("p_max = {:.4} W, thresholds = {:?}", spec.scenario.p_max_watts, spec.scenario.normalized_thresholds()?);
    println!("{}", file.to_toml());

    match ConfigFile::parse("[dims]\nn_t = 8\nn_x = 3\n").and_then(|f| f.to_spec("")) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
