//! TOML scenario/experiment files.
//!
//! ```toml
//! [scenario]
//! seed = 1
//! st_m = [300.0, 0.0]
//! sr_m = [600.0, 0.0]
//! irs_m = [300.0, 30.0]
//! pr_m = [[0.0, 0.0], [0.0, 5.0], [0.0, 10.0], [0.0, 15.0]]
//! exponent_direct = 3.75
//! exponent_irs = 2.2
//! ref_distance_m = 1.0
//! ref_loss_db = -30.0
//! noise_psd_dbm_hz = -174.0
//! bandwidth_hz = 10e6
//! pmax_dbm = 20.0
//! pk_watts = 1e-13          # one value for every receiver, or a list
//!
//! [dims]
//! n_t = 8
//! n_r = 4
//! n_p = 4
//! n_i = 64                  # the receiver count comes from pr_m
//!
//! [solver]                  # any SolverConfig field
//! rho0 = 10.0
//!
//! [experiment]
//! realizations = 20
//! methods = ["pddgp", "no_irs", "random_phase"]
//! sweep = "pmax_dbm"        # "none" | "pmax_dbm" | "n_i"
//! values = [0.0, 10.0, 20.0]
//! convergence_n_t = [4, 8, 16]
//! benchmark_n_i = [64, 128, 256, 512]
//! ```
//!
//! Every section and key is optional; missing values fall back to the
//! default scenario.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{dbm_to_watts, PathLossModel, ScenarioConfig, SystemDims};
use crate::error::{Error, Result};
use crate::experiments::{ExperimentSpec, Method, Sweep};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub seed: u64,
    pub st_m: [f64; 2],
    pub sr_m: [f64; 2],
    pub irs_m: [f64; 2],
    pub pr_m: Vec<[f64; 2]>,
    pub exponent_direct: f64,
    pub exponent_irs: f64,
    pub ref_distance_m: f64,
    pub ref_loss_db: f64,
    pub noise_psd_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub pmax_dbm: f64,
    pub pk_watts: OneOrMany,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        Self {
            seed: s.seed,
            st_m: s.st_m,
            sr_m: s.sr_m,
            irs_m: s.irs_m,
            pr_m: s.pr_m,
            exponent_direct: s.exponent_direct,
            exponent_irs: s.exponent_irs,
            ref_distance_m: s.path_loss.ref_distance_m,
            ref_loss_db: s.path_loss.ref_loss_db,
            noise_psd_dbm_hz: s.noise_psd_dbm_hz,
            bandwidth_hz: s.bandwidth_hz,
            pmax_dbm: 20.0,
            pk_watts: OneOrMany::One(1e-13),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimsSection {
    pub n_t: usize,
    pub n_r: usize,
    pub n_p: usize,
    pub n_i: usize,
}

impl Default for DimsSection {
    fn default() -> Self {
        Self { n_t: 8, n_r: 4, n_p: 4, n_i: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub realizations: usize,
    pub methods: Vec<String>,
    pub sweep: String,
    pub values: Vec<f64>,
    pub convergence_n_t: Vec<usize>,
    pub benchmark_n_i: Vec<usize>,
    pub threads: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            realizations: 20,
            methods: vec!["pddgp".into()],
            sweep: "none".into(),
            values: Vec::new(),
            convergence_n_t: Vec::new(),
            benchmark_n_i: vec![64, 128, 256, 512],
            threads: 1,
        }
    }
}

/// Parsed file contents; also the echo block written with every run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: ScenarioSection,
    pub dims: DimsSection,
    pub solver: SolverConfig,
    pub experiment: ExperimentSection,
}

/// 1-based line of `key` inside `[section]`, or of the section header when
/// the key is absent.
pub fn locate_key(src: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    let mut header_line = 0;
    for (n, line) in src.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                header_line = n + 1;
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return n + 1;
                }
            }
        }
    }
    header_line
}

impl ConfigFile {
    pub fn parse(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let src = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok((Self::parse(&src)?, src))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Semantic validation; errors name the offending key and its line in `src`.
    pub fn to_spec(&self, src: &str) -> Result<ExperimentSpec> {
        let err = |section: &str, key: &str, message: String| Error::Config {
            key: format!("{section}.{key}"),
            line: locate_key(src, section, key),
            message,
        };
        let s = &self.scenario;
        let k = s.pr_m.len();
        let pk_watts = match &s.pk_watts {
            OneOrMany::One(v) => vec![*v; k],
            OneOrMany::Many(v) => v.clone(),
        };
        if pk_watts.len() != k {
            return Err(err("scenario", "pk_watts", format!("{} thresholds for {k} receivers", pk_watts.len())));
        }
        if let Some(p) = pk_watts.iter().find(|p| !(**p >= 0.0)) {
            return Err(err("scenario", "pk_watts", format!("threshold must be >= 0 W, got {p}")));
        }
        if !(s.bandwidth_hz > 0.0) {
            return Err(err("scenario", "bandwidth_hz", format!("must be positive, got {}", s.bandwidth_hz)));
        }
        if !(s.ref_distance_m > 0.0) {
            return Err(err("scenario", "ref_distance_m", format!("must be positive, got {}", s.ref_distance_m)));
        }
        if !s.pmax_dbm.is_finite() {
            return Err(err("scenario", "pmax_dbm", "must be finite".into()));
        }
        let scenario = ScenarioConfig {
            st_m: s.st_m,
            sr_m: s.sr_m,
            irs_m: s.irs_m,
            pr_m: s.pr_m.clone(),
            exponent_direct: s.exponent_direct,
            exponent_irs: s.exponent_irs,
            path_loss: PathLossModel {
                ref_distance_m: s.ref_distance_m,
                ref_loss_db: s.ref_loss_db,
            },
            noise_psd_dbm_hz: s.noise_psd_dbm_hz,
            bandwidth_hz: s.bandwidth_hz,
            p_max_watts: dbm_to_watts(s.pmax_dbm),
            pk_watts,
            seed: s.seed,
        };
        if let Err(e) = scenario.validate() {
            return Err(err("scenario", "pr_m", e.to_string()));
        }

        let d = &self.dims;
        for (key, v) in [("n_t", d.n_t), ("n_r", d.n_r), ("n_p", d.n_p)] {
            if v == 0 {
                return Err(err("dims", key, "must be at least 1".into()));
            }
        }
        let dims = SystemDims { n_t: d.n_t, n_r: d.n_r, n_p: d.n_p, n_i: d.n_i, k };

        if let Err(e) = self.solver.validate() {
            return Err(err("solver", first_word(&e.to_string()), e.to_string()));
        }

        let x = &self.experiment;
        if x.realizations == 0 {
            return Err(err("experiment", "realizations", "must be at least 1".into()));
        }
        let methods = x
            .methods
            .iter()
            .map(|m| m.parse::<Method>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| err("experiment", "methods", e.to_string()))?;
        if methods.is_empty() {
            return Err(err("experiment", "methods", "at least one method is required".into()));
        }
        let sorted = x.values.windows(2).all(|w| w[0] <= w[1]);
        let sweep = match x.sweep.as_str() {
            "none" => Sweep::None,
            "pmax_dbm" | "n_i" if x.values.is_empty() || !sorted => {
                return Err(err("experiment", "values", "sweep values must be non-empty and sorted".into()));
            }
            "pmax_dbm" => Sweep::PmaxDbm(x.values.clone()),
            "n_i" => {
                if x.values.iter().any(|v| *v < 0.0 || v.fract() != 0.0) {
                    return Err(err("experiment", "values", "n_i values must be nonnegative integers".into()));
                }
                Sweep::NI(x.values.iter().map(|v| *v as usize).collect())
            }
            other => {
                return Err(err("experiment", "sweep", format!("unknown sweep `{other}` (none, pmax_dbm or n_i)")));
            }
        };

        let spec = ExperimentSpec {
            scenario,
            dims,
            sweep,
            realizations: x.realizations,
            methods,
            solver: self.solver.clone(),
            threads: x.threads.max(1),
            record_timing: true,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn first_word(s: &str) -> &str {
    // solver validation messages start with the field name
    s.trim_start_matches("invalid argument: ").split_whitespace().next().unwrap_or("solver")
}
