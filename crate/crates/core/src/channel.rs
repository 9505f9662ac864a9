//! Scenario geometry, large-scale path loss and Rayleigh channel sampling.
//!
//! All channel draws come from counter-addressed ChaCha streams: the key is
//! derived from the scenario seed and the stream id is
//! `realization_index * STREAMS_PER_REALIZATION + lane`, where each lane
//! belongs to one link (see the `LANE_*` constants). A realization can thus
//! be regenerated on its own, on any thread, in any order.
//!
//! Entries that touch the IRS are emitted element by element (rows of
//! `h_ti`, columns of `h_ir` and `h_ik`), so the channel set for `n_i`
//! elements is a prefix of the one for any larger surface with the same seed
//! and realization.

use nalgebra::{Complex, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{dims, invalid, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Number of RNG streams reserved for each realization.
pub const STREAMS_PER_REALIZATION: u64 = 1 << 12;
pub const LANE_TR: u64 = 0;
pub const LANE_TI: u64 = 1;
pub const LANE_IR: u64 = 2;
/// Phase initialisation for the solver (also the frozen phases of the
/// random-phase baseline).
pub const LANE_INIT_PHASE: u64 = 3;
/// `h_tk` for receiver k uses `LANE_PR_BASE + 2k`, `h_ik` uses `LANE_PR_BASE + 2k + 1`.
pub const LANE_PR_BASE: u64 = 16;

/// Antenna and element counts of one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDims {
    pub n_t: usize,
    pub n_r: usize,
    pub n_p: usize,
    /// IRS elements; zero means no surface is deployed.
    pub n_i: usize,
    /// Number of primary receivers.
    pub k: usize,
}

impl SystemDims {
    pub fn validate(&self) -> Result<()> {
        if self.n_t == 0 || self.n_r == 0 || self.n_p == 0 {
            return Err(invalid(format!(
                "antenna counts must be at least 1 (n_t={}, n_r={}, n_p={})",
                self.n_t, self.n_r, self.n_p
            )));
        }
        if (2 * self.k as u64 + LANE_PR_BASE) >= STREAMS_PER_REALIZATION {
            return Err(invalid(format!("too many primary receivers: {}", self.k)));
        }
        Ok(())
    }
}

/// Reference-distance path-loss model `PL = ref_loss_db - 10 ξ log10(d / d0)` dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub ref_distance_m: f64,
    pub ref_loss_db: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            ref_distance_m: 1.0,
            ref_loss_db: -30.0,
        }
    }
}

impl PathLossModel {
    pub fn gain_db(&self, distance_m: f64, exponent: f64) -> Result<f64> {
        if !(distance_m > 0.0) || !(self.ref_distance_m > 0.0) {
            return Err(invalid(format!(
                "path loss needs positive distances (d={distance_m}, d0={})",
                self.ref_distance_m
            )));
        }
        Ok(self.ref_loss_db - 10.0 * exponent * (distance_m / self.ref_distance_m).log10())
    }

    pub fn gain_linear(&self, distance_m: f64, exponent: f64) -> Result<f64> {
        Ok(db_to_linear(self.gain_db(distance_m, exponent)?))
    }
}

/// Linear power gain of a link at distance `d` with exponent `exponent`,
/// using the -30 dB reference loss at `d0`.
pub fn path_loss_linear(d: f64, exponent: f64, d0: f64) -> Result<f64> {
    PathLossModel {
        ref_distance_m: d0,
        ref_loss_db: -30.0,
    }
    .gain_linear(d, exponent)
}

/// Thermal noise power in watts for a PSD in dBm/Hz over `bandwidth_hz`.
pub fn noise_power_watts(psd_dbm_hz: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) {
        return Err(invalid(format!("bandwidth must be positive, got {bandwidth_hz}")));
    }
    Ok(dbm_to_watts(psd_dbm_hz + 10.0 * bandwidth_hz.log10()))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Physical description of a scenario. Positions are in meters, the noise
/// PSD in dBm/Hz, the bandwidth in Hz and every power in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub st_m: [f64; 2],
    pub sr_m: [f64; 2],
    pub irs_m: [f64; 2],
    pub pr_m: Vec<[f64; 2]>,
    /// Exponent of the ST-SR and ST-PR links.
    pub exponent_direct: f64,
    /// Exponent of the ST-IRS, IRS-SR and IRS-PR links.
    pub exponent_irs: f64,
    pub path_loss: PathLossModel,
    pub noise_psd_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub p_max_watts: f64,
    /// Interference thresholds before noise normalization, one per receiver.
    pub pk_watts: Vec<f64>,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    /// Four primary receivers stacked on the y axis, ST at (300, 0), SR at
    /// (600, 0), IRS at (300, 30), 20 dBm budget and 1e-13 W thresholds.
    fn default() -> Self {
        Self {
            st_m: [300.0, 0.0],
            sr_m: [600.0, 0.0],
            irs_m: [300.0, 30.0],
            pr_m: vec![[0.0, 0.0], [0.0, 5.0], [0.0, 10.0], [0.0, 15.0]],
            exponent_direct: 3.75,
            exponent_irs: 2.2,
            path_loss: PathLossModel::default(),
            noise_psd_dbm_hz: -174.0,
            bandwidth_hz: 10e6,
            p_max_watts: dbm_to_watts(20.0),
            pk_watts: vec![1e-13; 4],
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn num_receivers(&self) -> usize {
        self.pr_m.len()
    }

    /// Keeps only the first `k` primary receivers.
    pub fn with_receivers(mut self, k: usize) -> Self {
        self.pr_m.truncate(k);
        self.pk_watts.truncate(k);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.pr_m.len() != self.pk_watts.len() {
            return Err(invalid(format!(
                "{} primary receiver positions but {} thresholds",
                self.pr_m.len(),
                self.pk_watts.len()
            )));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(invalid("bandwidth_hz must be positive"));
        }
        if !(self.p_max_watts > 0.0) {
            return Err(invalid("p_max must be positive"));
        }
        // A zero threshold is admitted: it is a legal (if degenerate) problem
        // whose only feasible covariance is zero, reported by the solver.
        if let Some(p) = self.pk_watts.iter().find(|p| !(**p >= 0.0)) {
            return Err(invalid(format!("interference threshold must be >= 0, got {p}")));
        }
        for (name, d) in self.link_distances() {
            if !(d > 0.0) {
                return Err(invalid(format!("zero-length link {name}")));
            }
        }
        Ok(())
    }

    fn link_distances(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("ST-SR".to_string(), distance(self.st_m, self.sr_m)),
            ("ST-IRS".to_string(), distance(self.st_m, self.irs_m)),
            ("IRS-SR".to_string(), distance(self.irs_m, self.sr_m)),
        ];
        for (k, pr) in self.pr_m.iter().enumerate() {
            out.push((format!("ST-PR{k}"), distance(self.st_m, *pr)));
            out.push((format!("IRS-PR{k}"), distance(self.irs_m, *pr)));
        }
        out
    }

    pub fn noise_power_watts(&self) -> Result<f64> {
        noise_power_watts(self.noise_psd_dbm_hz, self.bandwidth_hz)
    }

    /// Noise standard deviation σ used to normalize the transmitter-side channels.
    pub fn noise_sigma(&self) -> Result<f64> {
        Ok(self.noise_power_watts()?.sqrt())
    }

    /// Interference thresholds expressed relative to the noise power.
    pub fn normalized_thresholds(&self) -> Result<Vec<f64>> {
        let noise = self.noise_power_watts()?;
        Ok(normalize_thresholds(&self.pk_watts, noise))
    }

    /// Per-link linear gains `(tr, ti, ir, [(tk, ik)])`.
    pub fn link_gains(&self) -> Result<LinkGains> {
        let pl = &self.path_loss;
        let mut pr = Vec::with_capacity(self.pr_m.len());
        for p in &self.pr_m {
            pr.push((
                pl.gain_linear(distance(self.st_m, *p), self.exponent_direct)?,
                pl.gain_linear(distance(self.irs_m, *p), self.exponent_irs)?,
            ));
        }
        Ok(LinkGains {
            tr: pl.gain_linear(distance(self.st_m, self.sr_m), self.exponent_direct)?,
            ti: pl.gain_linear(distance(self.st_m, self.irs_m), self.exponent_irs)?,
            ir: pl.gain_linear(distance(self.irs_m, self.sr_m), self.exponent_irs)?,
            pr,
        })
    }
}

/// Converts watt thresholds to multiples of the noise power.
pub fn normalize_thresholds(pk_watts: &[f64], noise_power_watts: f64) -> Vec<f64> {
    pk_watts.iter().map(|p| p / noise_power_watts).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkGains {
    pub tr: f64,
    pub ti: f64,
    pub ir: f64,
    pub pr: Vec<(f64, f64)>,
}

/// One channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// ST to SR, `n_r x n_t`.
    pub h_tr: CMatrix,
    /// ST to IRS, `n_i x n_t`.
    pub h_ti: CMatrix,
    /// IRS to SR, `n_r x n_i`.
    pub h_ir: CMatrix,
    /// ST to each PR, `n_p x n_t`.
    pub h_tk: Vec<CMatrix>,
    /// IRS to each PR, `n_p x n_i`.
    pub h_ik: Vec<CMatrix>,
    pub noise_normalized: bool,
}

impl ChannelSet {
    pub fn dims(&self) -> SystemDims {
        SystemDims {
            n_t: self.h_tr.ncols(),
            n_r: self.h_tr.nrows(),
            n_p: self.h_tk.first().map_or(1, |h| h.nrows()),
            n_i: self.h_ti.nrows(),
            k: self.h_tk.len(),
        }
    }

    pub fn n_t(&self) -> usize {
        self.h_tr.ncols()
    }

    pub fn n_i(&self) -> usize {
        self.h_ti.nrows()
    }

    pub fn num_receivers(&self) -> usize {
        self.h_tk.len()
    }

    pub fn check(&self) -> Result<()> {
        let (n_r, n_t) = self.h_tr.shape();
        let n_i = self.h_ti.nrows();
        if self.h_ti.ncols() != n_t {
            return Err(dims(format!("h_ti has {} columns, expected {n_t}", self.h_ti.ncols())));
        }
        if self.h_ir.shape() != (n_r, n_i) {
            return Err(dims(format!("h_ir is {:?}, expected {:?}", self.h_ir.shape(), (n_r, n_i))));
        }
        if self.h_tk.len() != self.h_ik.len() {
            return Err(dims("h_tk and h_ik have different receiver counts"));
        }
        for (k, (tk, ik)) in self.h_tk.iter().zip(&self.h_ik).enumerate() {
            if tk.ncols() != n_t || ik.ncols() != n_i || tk.nrows() != ik.nrows() {
                return Err(dims(format!(
                    "receiver {k}: h_tk is {:?}, h_ik is {:?}",
                    tk.shape(),
                    ik.shape()
                )));
            }
        }
        Ok(())
    }

    /// Divides the transmitter-side links by `sigma`. IRS-side links are untouched.
    pub fn normalized(mut self, sigma: f64) -> Self {
        let inv = C64::new(1.0 / sigma, 0.0);
        self.h_tr *= inv;
        self.h_ti *= inv;
        for h in &mut self.h_tk {
            *h *= inv;
        }
        self.noise_normalized = true;
        self
    }

    /// The same scenario with the surface removed.
    pub fn without_irs(&self) -> Self {
        let n_t = self.n_t();
        Self {
            h_tr: self.h_tr.clone(),
            h_ti: CMatrix::zeros(0, n_t),
            h_ir: CMatrix::zeros(self.h_tr.nrows(), 0),
            h_tk: self.h_tk.clone(),
            h_ik: self.h_tk.iter().map(|h| CMatrix::zeros(h.nrows(), 0)).collect(),
            noise_normalized: self.noise_normalized,
        }
    }

    /// The same scenario restricted to the first `k` primary receivers.
    pub fn with_receivers(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.h_tk.truncate(k);
        out.h_ik.truncate(k);
        out
    }
}

/// RNG for `lane` of realization `realization_index` under `seed`.
pub fn stream_rng(seed: u64, realization_index: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization_index.wrapping_mul(STREAMS_PER_REALIZATION).wrapping_add(lane));
    rng
}

/// One CN(0, 1) sample: independent real and imaginary parts of variance 1/2.
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn gaussian_row_major(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> CMatrix {
    let data: Vec<C64> = (0..rows * cols).map(|_| complex_gaussian(rng) * scale).collect();
    CMatrix::from_row_slice(rows, cols, &data)
}

fn gaussian_col_major(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> CMatrix {
    let data: Vec<C64> = (0..rows * cols).map(|_| complex_gaussian(rng) * scale).collect();
    CMatrix::from_column_slice(rows, cols, &data)
}

/// Draws the un-normalized channels of realization `realization_index`.
pub fn sample_raw_channels(
    dims: &SystemDims,
    cfg: &ScenarioConfig,
    realization_index: u64,
) -> Result<ChannelSet> {
    dims.validate()?;
    cfg.validate()?;
    if cfg.num_receivers() != dims.k {
        return Err(invalid(format!(
            "dims expect {} primary receivers, scenario has {}",
            dims.k,
            cfg.num_receivers()
        )));
    }
    let gains = cfg.link_gains()?;
    let rng = |lane| stream_rng(cfg.seed, realization_index, lane);

    let h_tr = gaussian_row_major(&mut rng(LANE_TR), dims.n_r, dims.n_t, gains.tr.sqrt());
    let h_ti = gaussian_row_major(&mut rng(LANE_TI), dims.n_i, dims.n_t, gains.ti.sqrt());
    let h_ir = gaussian_col_major(&mut rng(LANE_IR), dims.n_r, dims.n_i, gains.ir.sqrt());
    let mut h_tk = Vec::with_capacity(dims.k);
    let mut h_ik = Vec::with_capacity(dims.k);
    for (k, (g_tk, g_ik)) in gains.pr.iter().enumerate() {
        let lane = LANE_PR_BASE + 2 * k as u64;
        h_tk.push(gaussian_row_major(&mut rng(lane), dims.n_p, dims.n_t, g_tk.sqrt()));
        h_ik.push(gaussian_col_major(&mut rng(lane + 1), dims.n_p, dims.n_i, g_ik.sqrt()));
    }
    Ok(ChannelSet {
        h_tr,
        h_ti,
        h_ir,
        h_tk,
        h_ik,
        noise_normalized: false,
    })
}

/// Draws realization `realization_index` and normalizes it by the noise σ.
pub fn sample_channels(
    dims: &SystemDims,
    cfg: &ScenarioConfig,
    realization_index: u64,
) -> Result<ChannelSet> {
    let sigma = cfg.noise_sigma()?;
    Ok(sample_raw_channels(dims, cfg, realization_index)?.normalized(sigma))
}

/// Uniform random unit-modulus phases drawn from `lane` of a realization.
pub fn random_phases(seed: u64, realization_index: u64, lane: u64, n: usize) -> CVector {
    use rand::Rng;
    let mut rng = stream_rng(seed, realization_index, lane);
    CVector::from_iterator(
        n,
        (0..n).map(|_| C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))),
    )
}
