//! Closed-form gradients of the augmented Lagrangian and a central-difference
//! oracle used to check them.
//!
//! Gradients are taken with respect to the conjugate variable. For the phase
//! vector the first-order change is `2 Re(grad^H d theta)`; for the
//! covariance, restricted to Hermitian perturbations, it is `Re tr(G dX)`.

use nalgebra::linalg::Cholesky;

use crate::channel::{ChannelSet, CMatrix, CVector, C64};
use crate::error::{invalid, Result};
use crate::objective::{
    hermitian_part, rate_matrix, DualState, Evaluation, PhaseVector, SlackVector,
    TransmitCovariance,
};

/// Relative finite-difference step; the absolute step is `FD_STEP * max(1, |coordinate|)`.
pub const FD_STEP: f64 = 1e-6;

/// `(I + Z_R X Z_R^H)^{-1} Z_R`, solved through the Cholesky factor.
pub(crate) fn whitened_channel(z_r: &CMatrix, x: &CMatrix) -> Result<CMatrix> {
    let chol = Cholesky::new(rate_matrix(z_r, x))
        .ok_or_else(|| invalid("rate matrix is not positive definite"))?;
    Ok(chol.solve(z_r))
}

/// Penalty weights `upsilon_k + g_k / rho` shared by both gradients.
pub(crate) fn penalty_weights(
    ev: &Evaluation,
    slack: &[f64],
    dual: &DualState,
    thresholds: &[f64],
) -> Vec<f64> {
    ev.residuals(slack, thresholds)
        .iter()
        .enumerate()
        .map(|(k, g)| dual.weight(k, *g))
        .collect()
}

/// `vecd(H_out^H M H_TI^H)` evaluated as a column-wise inner product, linear in `n_i`.
fn cascade_diag(h_out: &CMatrix, m: &CMatrix, h_ti: &CMatrix) -> CVector {
    // t = M H_TI^H is (rows of h_out) x n_i
    let t = m * h_ti.adjoint();
    CVector::from_iterator(
        h_out.ncols(),
        h_out
            .column_iter()
            .zip(t.column_iter())
            .map(|(h, t)| h.iter().zip(t.iter()).map(|(a, b)| a.conj() * b).sum()),
    )
}

/// Phase gradient from a precomputed evaluation.
pub(crate) fn grad_theta_at(
    ch: &ChannelSet,
    ev: &Evaluation,
    x: &CMatrix,
    weights: &[f64],
) -> Result<CVector> {
    if ch.n_i() == 0 {
        return Ok(CVector::zeros(0));
    }
    let xi = whitened_channel(&ev.z_r, x)?;
    let mut grad = cascade_diag(&ch.h_ir, &(xi * x), &ch.h_ti);
    for ((h_ik, z_k), w) in ch.h_ik.iter().zip(&ev.z_k).zip(weights) {
        if *w == 0.0 {
            continue;
        }
        let d = cascade_diag(h_ik, &(z_k * x), &ch.h_ti);
        grad.axpy(C64::new(-w, 0.0), &d, C64::new(1.0, 0.0));
    }
    Ok(grad)
}

/// Covariance gradient from a precomputed evaluation; exactly Hermitian.
pub(crate) fn grad_x_at(ev: &Evaluation, x: &CMatrix, weights: &[f64]) -> Result<CMatrix> {
    let xi = whitened_channel(&ev.z_r, x)?;
    let mut g = ev.z_r.adjoint() * xi;
    for (z_k, w) in ev.z_k.iter().zip(weights) {
        if *w == 0.0 {
            continue;
        }
        g.gemm(C64::new(-w, 0.0), &z_k.adjoint(), z_k, C64::new(1.0, 0.0));
    }
    Ok(hermitian_part(&g))
}

fn check_lengths(ch: &ChannelSet, slack: &SlackVector, dual: &DualState, p: &[f64]) -> Result<()> {
    let k = ch.num_receivers();
    if slack.as_slice().len() != k || dual.upsilon.len() != k || p.len() != k {
        return Err(crate::error::dims(format!(
            "expected {k} slacks, multipliers and thresholds"
        )));
    }
    Ok(())
}

/// Gradient of the augmented Lagrangian with respect to the conjugate phases.
pub fn grad_theta(
    x: &TransmitCovariance,
    theta: &PhaseVector,
    slack: &SlackVector,
    dual: &DualState,
    ch: &ChannelSet,
    thresholds: &[f64],
) -> Result<CVector> {
    check_lengths(ch, slack, dual, thresholds)?;
    let ev = Evaluation::at(ch, theta.as_vector(), x.as_matrix())?;
    let w = penalty_weights(&ev, slack.as_slice(), dual, thresholds);
    grad_theta_at(ch, &ev, x.as_matrix(), &w)
}

/// Gradient of the augmented Lagrangian with respect to the covariance.
pub fn grad_x(
    x: &TransmitCovariance,
    theta: &PhaseVector,
    slack: &SlackVector,
    dual: &DualState,
    ch: &ChannelSet,
    thresholds: &[f64],
) -> Result<CMatrix> {
    check_lengths(ch, slack, dual, thresholds)?;
    let ev = Evaluation::at(ch, theta.as_vector(), x.as_matrix())?;
    let w = penalty_weights(&ev, slack.as_slice(), dual, thresholds);
    grad_x_at(&ev, x.as_matrix(), &w)
}

fn central<F: FnMut(f64) -> f64>(mut f: F, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

/// Central-difference gradient of a real function of a complex vector:
/// `(df/dRe + j df/dIm) / 2` per coordinate.
pub fn finite_diff_gradient<F>(f: F, point: &CVector, step: f64) -> CVector
where
    F: Fn(&CVector) -> f64,
{
    let mut work = point.clone();
    CVector::from_iterator(
        point.len(),
        (0..point.len()).map(|i| {
            let base = point[i];
            let h = step * base.norm().max(1.0);
            let d_re = central(
                |t| {
                    work[i] = base + C64::new(t, 0.0);
                    f(&work)
                },
                h,
            );
            let d_im = central(
                |t| {
                    work[i] = base + C64::new(0.0, t);
                    f(&work)
                },
                h,
            );
            work[i] = base;
            C64::new(d_re, d_im) * 0.5
        }),
    )
}

/// Central-difference gradient of a real function on Hermitian matrices.
///
/// Diagonal entries are perturbed along the real axis; each off-diagonal
/// pair `(i, j), (j, i)` is perturbed by `(t, t)` and `(jt, -jt)`, so every
/// probe stays Hermitian. The result `G` satisfies `df = Re tr(G dX)`.
pub fn finite_diff_gradient_hermitian<F>(f: F, point: &CMatrix, step: f64) -> CMatrix
where
    F: Fn(&CMatrix) -> f64,
{
    let n = point.nrows();
    let mut work = point.clone();
    let mut grad = CMatrix::zeros(n, n);
    for i in 0..n {
        let base = point[(i, i)];
        let h = step * base.norm().max(1.0);
        let d = central(
            |t| {
                work[(i, i)] = base + C64::new(t, 0.0);
                f(&work)
            },
            h,
        );
        work[(i, i)] = base;
        grad[(i, i)] = C64::new(d, 0.0);
        for j in (i + 1)..n {
            let (bij, bji) = (point[(i, j)], point[(j, i)]);
            let h = step * bij.norm().max(1.0);
            let mut probe = |dij: C64, t: f64| {
                work[(i, j)] = bij + dij * t;
                work[(j, i)] = bji + dij.conj() * t;
                f(&work)
            };
            let d_re = central(|t| probe(C64::new(1.0, 0.0), t), h);
            let d_im = central(|t| probe(C64::new(0.0, 1.0), t), h);
            work[(i, j)] = bij;
            work[(j, i)] = bji;
            let g = C64::new(d_re, d_im) * 0.5;
            grad[(i, j)] = g;
            grad[(j, i)] = g.conj();
        }
    }
    grad
}
