//! Euclidean projections onto the unit-modulus set and the trace-bounded PSD
//! cone, and the closed-form slack maximizer.

use crate::channel::{ChannelSet, CMatrix, CVector, C64};
use crate::error::{invalid, Result};
use crate::objective::{hermitian_part, DualState, Evaluation, PhaseVector, SlackVector, TransmitCovariance};

/// Normalizes each entry to unit modulus. Zero entries map to `1 + 0j`.
pub fn project_phase(theta: &CVector) -> PhaseVector {
    PhaseVector::from_projected(theta.map(|t| {
        let r = t.norm();
        if r > 0.0 {
            t / r
        } else {
            C64::new(1.0, 0.0)
        }
    }))
}

/// Water level `nu >= 0` with `sum_i max(lambda_i - nu, 0) = budget`, or 0
/// when the clipped eigenvalues already fit the budget. Exact sort-and-scan.
pub fn water_level(eigenvalues: &[f64], budget: f64) -> f64 {
    let mut lam: Vec<f64> = eigenvalues.iter().map(|l| l.max(0.0)).collect();
    if lam.iter().sum::<f64>() <= budget {
        return 0.0;
    }
    lam.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    for m in 0..lam.len() {
        prefix += lam[m];
        let nu = (prefix - budget) / (m + 1) as f64;
        let next = lam.get(m + 1).copied().unwrap_or(0.0);
        if nu >= next {
            return nu;
        }
    }
    // unreachable for budget >= 0: the last step has next = 0 <= nu
    (prefix - budget) / lam.len() as f64
}

/// Bisection on the same equation as [`water_level`], to `tol` in `nu`.
pub fn water_level_bisection(eigenvalues: &[f64], budget: f64, tol: f64) -> f64 {
    let used = |nu: f64| eigenvalues.iter().map(|l| (l - nu).max(0.0)).sum::<f64>();
    if used(0.0) <= budget {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, eigenvalues.iter().cloned().fold(0.0, f64::max));
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if used(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Projection of `w` onto `{X >= 0, tr(X) <= p_max}` in Frobenius norm.
pub fn project_covariance(w: &CMatrix, p_max: f64) -> Result<TransmitCovariance> {
    if !(p_max > 0.0) {
        return Err(invalid(format!("power budget must be positive, got {p_max}")));
    }
    if !w.is_square() {
        return Err(crate::error::dims(format!("expected a square matrix, got {:?}", w.shape())));
    }
    let n = w.nrows();
    if n == 0 {
        return Ok(TransmitCovariance::zeros(0));
    }
    let eig = hermitian_part(w).symmetric_eigen();
    let nu = water_level(eig.eigenvalues.as_slice(), p_max);
    let shifted: Vec<f64> = eig.eigenvalues.iter().map(|l| (l - nu).max(0.0)).collect();
    let mut scaled = eig.eigenvectors.clone();
    for (mut col, l) in scaled.column_iter_mut().zip(&shifted) {
        col *= C64::new(*l, 0.0);
    }
    let x = hermitian_part(&(scaled * eig.eigenvectors.adjoint()));
    Ok(TransmitCovariance::from_projected(x))
}

/// Slack maximizing the augmented Lagrangian with `(X, theta)` fixed:
/// `s_k = max(0, P_k - tr(Z_k X Z_k^H) - rho upsilon_k)`.
pub fn slack_from_interference(interference: &[f64], thresholds: &[f64], dual: &DualState) -> SlackVector {
    SlackVector::new(
        interference
            .iter()
            .zip(thresholds)
            .zip(&dual.upsilon)
            .map(|((i, p), u)| (p - i - dual.rho * u).max(0.0))
            .collect(),
    )
    .expect("clamped slack is nonnegative")
}

/// Closed-form slack update at `(X, theta)`.
pub fn update_slack(
    x: &TransmitCovariance,
    theta: &PhaseVector,
    ch: &ChannelSet,
    thresholds: &[f64],
    dual: &DualState,
) -> Result<SlackVector> {
    let k = ch.num_receivers();
    if thresholds.len() != k || dual.upsilon.len() != k {
        return Err(crate::error::dims(format!("expected {k} thresholds and multipliers")));
    }
    let ev = Evaluation::at(ch, theta.as_vector(), x.as_matrix())?;
    Ok(slack_from_interference(&ev.interference, thresholds, dual))
}
