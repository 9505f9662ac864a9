use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pddgp::config::{ConfigFile, OneOrMany};
use pddgp::experiments::{
    benchmark_scaling, build_problem, run_convergence, run_sweep, solve_pddgp, write_benchmark,
    write_convergence, ExperimentSpec,
};
use pddgp::report::{infeasible_reason, ConvergenceSummary, Environment, Results, RunSummary, SolveSummary};

/// Rate maximization for IRS-assisted underlay spectrum-sharing MIMO links.
#[derive(Parser)]
#[command(name = "pddgp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one realization and print a JSON summary.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        realization: Option<u64>,
        #[arg(long)]
        pmax_dbm: Option<f64>,
        /// Same threshold for every primary receiver.
        #[arg(long)]
        pk_watts: Option<f64>,
        #[arg(long)]
        n_i: Option<usize>,
        #[arg(long)]
        n_t: Option<usize>,
    },
    /// Per-iteration traces for each transmit antenna count.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        n_t_list: Option<Vec<usize>>,
    },
    /// Monte-Carlo sweep over the configured variable and methods.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Mean per-iteration wall time versus IRS size.
    Benchmark {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        n_i_list: Option<Vec<usize>>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML scenario/experiment file.
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Comma-separated subset of pddgp,no_irs,random_phase.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// No progress messages on stderr.
    #[arg(long)]
    quiet: bool,
    /// Record wall-clock columns. Off by default so reruns are byte-identical;
    /// the benchmark command always records timing.
    #[arg(long)]
    timing: bool,
}

enum Failure {
    Usage(String),
    Infeasible,
}

impl From<pddgp::Error> for Failure {
    fn from(e: pddgp::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

struct Loaded {
    file: ConfigFile,
    spec: ExperimentSpec,
    out: Option<PathBuf>,
    quiet: bool,
}

fn load(common: &Common, timing: bool, tweak: impl FnOnce(&mut ConfigFile)) -> Result<Loaded, Failure> {
    let (mut file, src) = ConfigFile::load(&common.config)?;
    if let Some(seed) = common.seed {
        file.scenario.seed = seed;
    }
    if let Some(r) = common.realizations {
        file.experiment.realizations = r;
    }
    if let Some(m) = &common.methods {
        file.experiment.methods = m.clone();
    }
    if let Some(t) = common.threads {
        file.experiment.threads = t;
    }
    tweak(&mut file);
    let mut spec = file.to_spec(&src)?;
    spec.record_timing = timing;
    Ok(Loaded {
        file,
        spec,
        out: common.out.clone(),
        quiet: common.quiet,
    })
}

fn out_dir(l: &Loaded) -> Result<PathBuf, Failure> {
    let dir = l.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    std::fs::create_dir_all(&dir)
        .map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn finish(l: &Loaded, dir: Option<&Path>, mut summary: RunSummary) -> Result<(), Failure> {
    if let Some(dir) = dir {
        let path = dir.join("summary.json");
        summary.files.push(path.display().to_string());
        summary.write(&path)?;
    }
    // A closed pipe on stdout is not an error worth reporting.
    let _ = writeln!(std::io::stdout(), "{}", summary.to_json());
    if !l.quiet {
        eprintln!("{}: {}", summary.command, summary.status);
    }
    if summary.status == "ok" {
        Ok(())
    } else {
        Err(Failure::Infeasible)
    }
}

fn environment(l: &Loaded) -> Environment {
    Environment::current(l.spec.threads, l.spec.record_timing)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { common, realization, pmax_dbm, pk_watts, n_i, n_t } => {
            let l = load(&common, common.timing, |f| {
                if let Some(p) = pmax_dbm {
                    f.scenario.pmax_dbm = p;
                }
                if let Some(p) = pk_watts {
                    f.scenario.pk_watts = OneOrMany::One(p);
                }
                if let Some(n) = n_i {
                    f.dims.n_i = n;
                }
                if let Some(n) = n_t {
                    f.dims.n_t = n;
                }
            })?;
            let r = realization.unwrap_or(0);
            let problem = build_problem(&l.spec.scenario, &l.spec.dims, r)?;
            let sol = solve_pddgp(&problem, &l.spec.solver, l.spec.scenario.seed, r)?;
            let summary = RunSummary {
                command: "solve",
                status: if sol.converged() { "ok" } else { "infeasible" },
                reason: infeasible_reason(&sol),
                files: Vec::new(),
                results: Results::Solve(SolveSummary::from_solution(&sol, &problem.thresholds, l.spec.record_timing)),
                config: l.file.clone(),
                environment: environment(&l),
            };
            let dir = match &l.out {
                Some(_) => Some(out_dir(&l)?),
                None => None,
            };
            finish(&l, dir.as_deref(), summary)
        }
        Command::Convergence { common, n_t_list } => {
            let l = load(&common, common.timing, |f| {
                if let Some(v) = n_t_list {
                    f.experiment.convergence_n_t = v;
                }
            })?;
            let dir = out_dir(&l)?;
            let runs = run_convergence(&l.spec, &l.file.experiment.convergence_n_t)?;
            let files = write_convergence(&dir, &runs, l.spec.record_timing)?;
            let thresholds = l.spec.scenario.normalized_thresholds()?;
            let all_ok = runs.iter().all(|r| r.solution.converged());
            let summary = RunSummary {
                command: "convergence",
                status: if all_ok { "ok" } else { "infeasible" },
                reason: runs.iter().find_map(|r| infeasible_reason(&r.solution)),
                files: files.iter().map(|p| p.display().to_string()).collect(),
                results: Results::Convergence(
                    runs.iter()
                        .map(|r| ConvergenceSummary {
                            n_t: r.n_t,
                            solve: SolveSummary::from_solution(&r.solution, &thresholds, l.spec.record_timing),
                        })
                        .collect(),
                ),
                config: l.file.clone(),
                environment: environment(&l),
            };
            finish(&l, Some(&dir), summary)
        }
        Command::Sweep { common } => {
            let l = load(&common, common.timing, |_| {})?;
            let dir = out_dir(&l)?;
            let res = run_sweep(&l.spec)?;
            let path = dir.join("sweep.csv");
            res.write_csv(&path)?;
            let summary = RunSummary {
                command: "sweep",
                status: "ok",
                reason: None,
                files: vec![path.display().to_string()],
                results: Results::Sweep(res.cells),
                config: l.file.clone(),
                environment: environment(&l),
            };
            finish(&l, Some(&dir), summary)
        }
        Command::Benchmark { common, n_i_list } => {
            let l = load(&common, true, |f| {
                if let Some(v) = n_i_list {
                    f.experiment.benchmark_n_i = v;
                }
            })?;
            let dir = out_dir(&l)?;
            let rows = benchmark_scaling(&l.spec, &l.file.experiment.benchmark_n_i)?;
            let path = dir.join("benchmark.csv");
            write_benchmark(&path, &rows)?;
            let summary = RunSummary {
                command: "benchmark",
                status: "ok",
                reason: None,
                files: vec![path.display().to_string()],
                results: Results::Benchmark(rows),
                config: l.file.clone(),
                environment: environment(&l),
            };
            finish(&l, Some(&dir), summary)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Infeasible) => ExitCode::from(2),
    }
}
