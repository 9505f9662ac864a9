//! Reference implementations shared by the integration tests. Nothing here
//! calls into the solver's own numerics; the library is only used for types
//! and channel sampling.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pddgp::channel::C64;
use pddgp::channel::ChannelSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 ^ seed)
}

/// Standard complex normal via Box-Muller.
pub fn cn(rng: &mut ChaCha8Rng) -> C64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    let r = (-u1.ln()).sqrt();
    let a = 2.0 * std::f64::consts::PI * u2;
    C64::new(r * a.cos(), r * a.sin())
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| cn(rng))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMat {
    let a = random_matrix(rng, n, n);
    (&a + a.adjoint()) * C64::new(0.5 * scale, 0.0)
}

/// Random PSD matrix with the given trace.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, trace: f64) -> CMat {
    let a = random_matrix(rng, n, n);
    let g = &a * a.adjoint();
    let t = g.trace().re;
    g * C64::new(trace / t, 0.0)
}

pub fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| {
        let a: f64 = rng.random_range(0.0..2.0 * std::f64::consts::PI);
        C64::new(a.cos(), a.sin())
    })
}

/// `H_TR + H_IR diag(theta) H_TI` with an explicit diagonal matrix.
pub fn cascade_explicit(direct: &CMat, h_ir: &CMat, theta: &CVec, h_ti: &CMat) -> CMat {
    if theta.is_empty() {
        return direct.clone();
    }
    direct + h_ir * CMat::from_diagonal(theta) * h_ti
}

/// `ln det(I + Z X Z^H)` through the LU determinant.
pub fn log_det_rate(z: &CMat, x: &CMat) -> f64 {
    let n = z.nrows();
    let m = CMat::identity(n, n) + z * x * z.adjoint();
    m.determinant().ln().re
}

/// Augmented objective written out term by term.
#[allow(clippy::too_many_arguments)]
pub fn augmented_oracle(
    ch: &ChannelSet,
    theta: &CVec,
    x: &CMat,
    slack: &[f64],
    upsilon: &[f64],
    rho: f64,
    thresholds: &[f64],
) -> f64 {
    let z_r = cascade_explicit(&ch.h_tr, &ch.h_ir, theta, &ch.h_ti);
    let mut f = log_det_rate(&z_r, x);
    for k in 0..thresholds.len() {
        let z_k = cascade_explicit(&ch.h_tk[k], &ch.h_ik[k], theta, &ch.h_ti);
        let i_k = (&z_k * x * z_k.adjoint()).trace().re;
        let g = i_k + slack[k] - thresholds[k];
        f -= upsilon[k] * g + g * g / (2.0 * rho);
    }
    f
}

fn central(f: &mut dyn FnMut(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

/// Gradient w.r.t. the conjugate variable: `(d/dRe + j d/dIm) / 2`, step
/// `1e-6 * max(1, |z|)`.
pub fn fd_gradient_vec(f: &dyn Fn(&CVec) -> f64, point: &CVec) -> CVec {
    let mut out = CVec::zeros(point.len());
    for i in 0..point.len() {
        let h = 1e-6 * point[i].norm().max(1.0);
        let along = |dir: C64| {
            central(
                &mut |t| {
                    let mut p = point.clone();
                    p[i] += dir * t;
                    f(&p)
                },
                h,
            )
        };
        let d_re = along(C64::new(1.0, 0.0));
        let d_im = along(C64::new(0.0, 1.0));
        out[i] = C64::new(d_re, d_im) * 0.5;
    }
    out
}

/// Gradient on Hermitian matrices under `df = Re tr(G dX)`, perturbing along
/// Hermitian directions only.
pub fn fd_gradient_hermitian(f: &dyn Fn(&CMat) -> f64, point: &CMat) -> CMat {
    let n = point.nrows();
    let mut out = CMat::zeros(n, n);
    let h = 1e-6 * point.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let deriv = |dir: &CMat| central(&mut |t| f(&(point + dir * C64::new(t, 0.0))), h);
    for i in 0..n {
        let mut e = CMat::zeros(n, n);
        e[(i, i)] = C64::new(1.0, 0.0);
        out[(i, i)] = C64::new(deriv(&e), 0.0);
        for j in i + 1..n {
            let mut sym = CMat::zeros(n, n);
            sym[(i, j)] = C64::new(1.0, 0.0);
            sym[(j, i)] = C64::new(1.0, 0.0);
            let mut skew = CMat::zeros(n, n);
            skew[(i, j)] = C64::new(0.0, 1.0);
            skew[(j, i)] = C64::new(0.0, -1.0);
            let g = C64::new(deriv(&sym), deriv(&skew)) * 0.5;
            out[(i, j)] = g;
            out[(j, i)] = g.conj();
        }
    }
    out
}

pub fn rel_err_vec(a: &CVec, b: &CVec) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn rel_err_mat(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn psd_part(m: &CMat) -> CMat {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let clipped = eig.eigenvalues.map(|l| C64::new(l.max(0.0), 0.0));
    &eig.eigenvectors * CMat::from_diagonal(&clipped) * eig.eigenvectors.adjoint()
}

fn trace_halfspace(m: &CMat, budget: f64) -> CMat {
    let n = m.nrows();
    let excess = m.trace().re - budget;
    if excess <= 0.0 {
        m.clone()
    } else {
        m - CMat::identity(n, n) * C64::new(excess / n as f64, 0.0)
    }
}

/// Euclidean projection onto `{X >= 0, tr X <= budget}` by Dykstra's
/// alternating projections between the PSD cone and the trace halfspace.
pub fn dykstra_projection(w: &CMat, budget: f64) -> CMat {
    let n = w.nrows();
    let mut x = (w + w.adjoint()) * C64::new(0.5, 0.0);
    let mut p = CMat::zeros(n, n);
    let mut q = CMat::zeros(n, n);
    for _ in 0..200_000 {
        let y = psd_part(&(&x + &p));
        p = &x + &p - &y;
        let x_new = trace_halfspace(&(&y + &q), budget);
        q = &y + &q - &x_new;
        let moved = (&x_new - &x).norm();
        x = x_new;
        if moved < 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    x
}

/// Water-filling capacity of `h` (nats) with the level found by bisection.
pub fn water_filling_oracle(h: &CMat, p_max: f64) -> f64 {
    let gram = h.adjoint() * h;
    let gains: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().cloned().filter(|g| *g > 1e-14).collect();
    if gains.is_empty() {
        return 0.0;
    }
    let power = |mu: f64| gains.iter().map(|g| (mu - 1.0 / g).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, p_max + gains.iter().map(|g| 1.0 / g).fold(0.0, f64::max));
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if power(mid) > p_max {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    gains.iter().map(|g| (1.0 + g * (mu - 1.0 / g).max(0.0)).ln()).sum()
}

/// Exhaustive search over `(x, phi)` for a single-antenna link with one
/// surface element and one primary receiver.
pub struct ScalarInstance {
    pub direct: C64,
    pub h_ir: C64,
    pub h_ti: C64,
    pub pr_direct: C64,
    pub pr_ir: C64,
    pub p_max: f64,
    pub threshold: f64,
}

impl ScalarInstance {
    pub fn from_channels(ch: &ChannelSet, p_max: f64, threshold: f64) -> Self {
        Self {
            direct: ch.h_tr[(0, 0)],
            h_ir: ch.h_ir[(0, 0)],
            h_ti: ch.h_ti[(0, 0)],
            pr_direct: ch.h_tk[0][(0, 0)],
            pr_ir: ch.h_ik[0][(0, 0)],
            p_max,
            threshold,
        }
    }

    fn gains(&self, phi: f64) -> (f64, f64) {
        let e = C64::new(phi.cos(), phi.sin());
        let z = self.direct + self.h_ir * e * self.h_ti;
        let zk = self.pr_direct + self.pr_ir * e * self.h_ti;
        (z.norm_sqr(), zk.norm_sqr())
    }

    pub fn rate(&self, x: f64, phi: f64) -> f64 {
        (1.0 + self.gains(phi).0 * x).ln()
    }

    pub fn interference(&self, x: f64, phi: f64) -> f64 {
        self.gains(phi).1 * x
    }

    /// Best feasible grid point, its rate, and the largest rate change to
    /// any of its eight neighbours (the grid resolution in rate units).
    pub fn grid_search(&self, step: f64) -> GridResult {
        let nx = (1.0 / step).round() as usize;
        let nphi = (2.0 * std::f64::consts::PI / step).ceil() as usize;
        let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
        for j in 0..nphi {
            let phi = j as f64 * step;
            let (a, b) = self.gains(phi);
            for i in (0..=nx).rev() {
                let x = i as f64 * step * self.p_max;
                if b * x <= self.threshold {
                    let r = (1.0 + a * x).ln();
                    if r > best.0 {
                        best = (r, i, j);
                    }
                    // rate grows with x; smaller x on this column is worse
                    break;
                }
            }
        }
        let (rate, i, j) = best;
        let mut resolution: f64 = 0.0;
        for di in [-1i64, 0, 1] {
            for dj in [-1i64, 0, 1] {
                let ii = (i as i64 + di).clamp(0, nx as i64) as f64;
                let phi = (j as i64 + dj) as f64 * step;
                resolution = resolution.max((self.rate(ii * step * self.p_max, phi) - rate).abs());
            }
        }
        GridResult { rate, x: i as f64 * step * self.p_max, phi: j as f64 * step, resolution }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GridResult {
    pub rate: f64,
    pub x: f64,
    pub phi: f64,
    pub resolution: f64,
}
