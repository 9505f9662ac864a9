//! Effective channels, the achievable rate, interference residuals and the
//! augmented Lagrangian that the inner solver ascends.

use nalgebra::linalg::Cholesky;

use crate::channel::{ChannelSet, CMatrix, CVector, C64};
use crate::error::{dims, invalid, Result};

/// Tolerance on `|theta_l| - 1`.
pub const UNIT_MODULUS_TOL: f64 = 1e-12;
/// Relative tolerance on `||X - X^H||`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest admitted eigenvalue of a transmit covariance.
pub const PSD_TOL: f64 = 1e-10;
/// Slack on the trace bound.
pub const TRACE_TOL: f64 = 1e-10;

/// IRS reflection coefficients, one unit-modulus entry per element.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(CVector);

impl PhaseVector {
    pub fn new(theta: CVector) -> Result<Self> {
        if let Some((l, t)) = theta
            .iter()
            .enumerate()
            .find(|(_, t)| !((t.norm() - 1.0).abs() <= UNIT_MODULUS_TOL))
        {
            return Err(invalid(format!("phase entry {l} has modulus {}", t.norm())));
        }
        Ok(Self(theta))
    }

    pub fn from_angles(phi: &[f64]) -> Self {
        Self(CVector::from_iterator(phi.len(), phi.iter().map(|p| C64::from_polar(1.0, *p))))
    }

    pub fn ones(n: usize) -> Self {
        Self(CVector::from_element(n, C64::new(1.0, 0.0)))
    }

    /// Wraps a vector already known to be unit modulus (projection output).
    pub(crate) fn from_projected(theta: CVector) -> Self {
        Self(theta)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &CVector {
        &self.0
    }

    pub fn into_vector(self) -> CVector {
        self.0
    }

    pub fn angles(&self) -> Vec<f64> {
        self.0.iter().map(|t| t.arg()).collect()
    }
}

/// Hermitian positive semidefinite transmit covariance with bounded trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitCovariance(CMatrix);

impl TransmitCovariance {
    /// Validates Hermiticity, positive semidefiniteness and `tr(X) <= p_max`.
    pub fn new(x: CMatrix, p_max: f64) -> Result<Self> {
        if !x.is_square() {
            return Err(dims(format!("covariance must be square, got {:?}", x.shape())));
        }
        let scale = x.norm().max(1.0);
        let asym = (&x - x.adjoint()).norm();
        if !(asym <= HERMITIAN_TOL * scale) {
            return Err(invalid(format!("covariance is not Hermitian (||X - X^H|| = {asym:e})")));
        }
        let h = hermitian_part(&x);
        let min_eig = h.clone().symmetric_eigenvalues().min();
        if x.nrows() > 0 && !(min_eig >= -PSD_TOL) {
            return Err(invalid(format!("covariance is not PSD (min eigenvalue {min_eig:e})")));
        }
        let tr = h.trace().re;
        if !(tr <= p_max + TRACE_TOL) {
            return Err(invalid(format!("trace {tr} exceeds power budget {p_max}")));
        }
        Ok(Self(h))
    }

    /// `(p / n) I`, the isotropic full-power covariance.
    pub fn isotropic(n: usize, p: f64) -> Self {
        Self(CMatrix::identity(n, n) * C64::new(p / n as f64, 0.0))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    pub(crate) fn from_projected(x: CMatrix) -> Self {
        Self(x)
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// Nonnegative slacks turning each interference constraint into an equality.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackVector(Vec<f64>);

impl SlackVector {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if let Some(v) = s.iter().find(|v| !(**v >= 0.0)) {
            return Err(invalid(format!("slack must be nonnegative, got {v}")));
        }
        Ok(Self(s))
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![0.0; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Multipliers and penalty parameter of the augmented Lagrangian.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub upsilon: Vec<f64>,
    pub rho: f64,
}

impl DualState {
    pub fn new(upsilon: Vec<f64>, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(invalid(format!("penalty parameter must be positive, got {rho}")));
        }
        Ok(Self { upsilon, rho })
    }

    pub fn initial(k: usize, rho: f64) -> Result<Self> {
        Self::new(vec![0.0; k], rho)
    }

    /// Combined weight `upsilon_k + g_k / rho` multiplying each constraint gradient.
    pub fn weight(&self, k: usize, residual: f64) -> f64 {
        self.upsilon[k] + residual / self.rho
    }
}

pub(crate) fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// `h_out diag(theta) h_ti + direct` without forming the diagonal matrix.
fn cascade(h_out: &CMatrix, theta: &CVector, h_ti: &CMatrix, direct: &CMatrix) -> CMatrix {
    let mut out = direct.clone();
    if theta.is_empty() {
        return out;
    }
    let mut scaled = h_ti.clone();
    for (mut row, t) in scaled.row_iter_mut().zip(theta.iter()) {
        row *= *t;
    }
    out.gemm(C64::new(1.0, 0.0), h_out, &scaled, C64::new(1.0, 0.0));
    out
}

fn check_theta(ch: &ChannelSet, theta: &CVector) -> Result<()> {
    if theta.len() != ch.n_i() {
        return Err(dims(format!(
            "phase vector has {} entries, surface has {} elements",
            theta.len(),
            ch.n_i()
        )));
    }
    Ok(())
}

fn check_x(ch: &ChannelSet, x: &CMatrix) -> Result<()> {
    let n = ch.n_t();
    if x.shape() != (n, n) {
        return Err(dims(format!("covariance is {:?}, expected {n}x{n}", x.shape())));
    }
    Ok(())
}

/// `Z_R = H_IR diag(theta) H_TI + H_TR`.
pub fn effective_channel_sr(ch: &ChannelSet, theta: &PhaseVector) -> Result<CMatrix> {
    ch.check()?;
    check_theta(ch, theta.as_vector())?;
    Ok(cascade(&ch.h_ir, theta.as_vector(), &ch.h_ti, &ch.h_tr))
}

/// `Z_k = H_Ik diag(theta) H_TI + H_Tk`.
pub fn effective_channel_pr(ch: &ChannelSet, theta: &PhaseVector, k: usize) -> Result<CMatrix> {
    ch.check()?;
    check_theta(ch, theta.as_vector())?;
    if k >= ch.num_receivers() {
        return Err(invalid(format!("receiver index {k} out of range")));
    }
    Ok(cascade(&ch.h_ik[k], theta.as_vector(), &ch.h_ti, &ch.h_tk[k]))
}

/// `ln det(M)` for Hermitian positive definite `M`, after symmetrization.
pub fn ln_det_hpd(m: &CMatrix) -> Result<f64> {
    let chol = Cholesky::new(hermitian_part(m))
        .ok_or_else(|| invalid("matrix is not positive definite"))?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.re.ln()).sum::<f64>())
}

/// `Re tr(Z X Z^H)`; the imaginary residue is dropped.
pub(crate) fn quad_trace(z: &CMatrix, x: &CMatrix) -> f64 {
    let zx = z * x;
    zx.iter().zip(z.iter()).map(|(a, b)| (a * b.conj()).re).sum()
}

/// `I + Z X Z^H`.
pub(crate) fn rate_matrix(z: &CMatrix, x: &CMatrix) -> CMatrix {
    let n = z.nrows();
    let mut m = CMatrix::identity(n, n);
    let zx = z * x;
    m.gemm(C64::new(1.0, 0.0), &zx, &z.adjoint(), C64::new(1.0, 0.0));
    hermitian_part(&m)
}

/// Effective channels and every quantity that depends only on `(X, theta)`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub z_r: CMatrix,
    pub z_k: Vec<CMatrix>,
    /// Achievable rate in nats.
    pub rate: f64,
    /// `tr(Z_k X Z_k^H)` per receiver.
    pub interference: Vec<f64>,
}

impl Evaluation {
    /// Evaluates at raw `theta` and `x`; neither set membership is checked.
    pub fn at(ch: &ChannelSet, theta: &CVector, x: &CMatrix) -> Result<Self> {
        ch.check()?;
        check_theta(ch, theta)?;
        check_x(ch, x)?;
        let z_r = cascade(&ch.h_ir, theta, &ch.h_ti, &ch.h_tr);
        let z_k: Vec<CMatrix> = ch
            .h_ik
            .iter()
            .zip(&ch.h_tk)
            .map(|(h_ik, h_tk)| cascade(h_ik, theta, &ch.h_ti, h_tk))
            .collect();
        Self::from_effective(z_r, z_k, x)
    }

    pub(crate) fn from_effective(z_r: CMatrix, z_k: Vec<CMatrix>, x: &CMatrix) -> Result<Self> {
        let rate = ln_det_hpd(&rate_matrix(&z_r, x))?;
        let interference = z_k.iter().map(|z| quad_trace(z, x)).collect();
        Ok(Self {
            z_r,
            z_k,
            rate,
            interference,
        })
    }

    /// `g_k = tr(Z_k X Z_k^H) + s_k - P_k` for every receiver.
    pub fn residuals(&self, slack: &[f64], thresholds: &[f64]) -> Vec<f64> {
        self.interference
            .iter()
            .zip(slack)
            .zip(thresholds)
            .map(|((i, s), p)| i + s - p)
            .collect()
    }

    /// `R - sum_k upsilon_k g_k - (1 / 2 rho) sum_k g_k^2`.
    pub fn augmented(&self, slack: &[f64], dual: &DualState, thresholds: &[f64]) -> f64 {
        let g = self.residuals(slack, thresholds);
        let linear: f64 = g.iter().zip(&dual.upsilon).map(|(g, u)| u * g).sum();
        let quad: f64 = g.iter().map(|g| g * g).sum();
        self.rate - linear - quad / (2.0 * dual.rho)
    }
}

/// `ln det(I + Z_R X Z_R^H)` in nats.
pub fn rate(x: &TransmitCovariance, theta: &PhaseVector, ch: &ChannelSet) -> Result<f64> {
    let z_r = effective_channel_sr(ch, theta)?;
    check_x(ch, x.as_matrix())?;
    ln_det_hpd(&rate_matrix(&z_r, x.as_matrix()))
}

/// `tr(Z_k X Z_k^H)`, the noise-normalized interference at receiver `k`.
pub fn interference_power(
    x: &TransmitCovariance,
    theta: &PhaseVector,
    ch: &ChannelSet,
    k: usize,
) -> Result<f64> {
    let z = effective_channel_pr(ch, theta, k)?;
    check_x(ch, x.as_matrix())?;
    Ok(quad_trace(&z, x.as_matrix()))
}

/// `g_k = tr(Z_k X Z_k^H) + s_k - P_k`.
pub fn constraint_residual(
    x: &TransmitCovariance,
    theta: &PhaseVector,
    threshold: f64,
    slack: f64,
    ch: &ChannelSet,
    k: usize,
) -> Result<f64> {
    if !(slack >= 0.0) {
        return Err(invalid(format!("slack must be nonnegative, got {slack}")));
    }
    Ok(interference_power(x, theta, ch, k)? + slack - threshold)
}

/// Augmented Lagrangian value at `(X, theta, s)`.
pub fn augmented_objective(
    x: &TransmitCovariance,
    theta: &PhaseVector,
    slack: &SlackVector,
    dual: &DualState,
    ch: &ChannelSet,
    thresholds: &[f64],
) -> Result<f64> {
    let k = ch.num_receivers();
    if slack.as_slice().len() != k || dual.upsilon.len() != k || thresholds.len() != k {
        return Err(dims(format!("expected {k} slacks, multipliers and thresholds")));
    }
    let ev = Evaluation::at(ch, theta.as_vector(), x.as_matrix())?;
    Ok(ev.augmented(slack.as_slice(), dual, thresholds))
}
