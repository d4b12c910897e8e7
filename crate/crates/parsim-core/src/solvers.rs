//! Dense small-matrix steady-state solvers: discrete algebraic Riccati and
//! Lyapunov equations, the steady-state Kalman and LQG gains, and spectral
//! radius. All inputs are `nalgebra` dynamic matrices; the systems handled
//! here are tiny (n <= 8), so simple iterations beat anything fancier.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    assert!(a.is_square(), "spectral_radius needs a square matrix");
    if a.nrows() == 0 {
        return 0.0;
    }
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn sym(x: &DMatrix<f64>) -> DMatrix<f64> {
    (x + x.transpose()) * 0.5
}

/// Solve the discrete algebraic Riccati equation
///
/// `X = A' X A + Q - A' X B (B' X B + R)^{-1} B' X A`
///
/// by a damped fixed-point iteration on the Riccati recursion, symmetrizing
/// every step. The estimation-form equation is obtained by calling with
/// `(A', C', Q, R)`.
pub fn solve_dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n || !q.is_square() || q.nrows() != n {
        return Err(Error::Dimension(format!(
            "dare: A {}x{}, B {}x{}, Q {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    if !r.is_square() || r.nrows() != b.ncols() {
        return Err(Error::Dimension(format!(
            "dare: R {}x{} vs B with {} columns",
            r.nrows(),
            r.ncols(),
            b.ncols()
        )));
    }

    let step = |x: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let btxb_r = b.transpose() * x * b + r;
        let inv = btxb_r
            .try_inverse()
            .ok_or(Error::Singular("dare: B' X B + R"))?;
        let next = a.transpose() * x * a + q - a.transpose() * x * b * inv * b.transpose() * x * a;
        Ok(sym(&next))
    };

    let mut x = sym(q);
    let mut damping = 1.0;
    let mut last_residual = f64::INFINITY;
    for _ in 0..max_iter {
        let next = step(&x)?;
        let residual = (&next - &x).norm();
        if residual <= tol * (1.0 + x.norm()) {
            return Ok(next);
        }
        // Halve the step whenever the residual grows; the plain recursion is
        // the finite-horizon Riccati iteration and normally contracts on its own.
        if residual > last_residual {
            damping = (damping * 0.5).max(0.25);
        }
        x = &x + (&next - &x) * damping;
        last_residual = residual;
    }
    Err(Error::NoConvergence {
        iters: max_iter,
        residual: last_residual,
    })
}

/// Solve the discrete Lyapunov equation `A X A' - X + Q = 0` for strictly
/// stable `A` via Smith doubling. The transposed form `A' X A - X + Q = 0`
/// is obtained by calling with `A'`.
pub fn solve_dlyap(a: &DMatrix<f64>, q: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension(format!(
            "dlyap: A {}x{}, Q {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let radius = spectral_radius(a);
    if radius >= 1.0 {
        return Err(Error::Unstable {
            what: "dlyap A",
            radius,
        });
    }

    // X_{j+1} = X_j + A_j X_j A_j',  A_{j+1} = A_j^2; the partial sums are the
    // truncated series sum_i A^i Q (A')^i with geometrically doubling reach.
    let mut x = q.clone();
    let mut ak = a.clone();
    for _ in 0..128 {
        let incr = &ak * &x * ak.transpose();
        let next = &x + &incr;
        ak = &ak * &ak;
        let done = incr.norm() <= 0.5 * tol * (1.0 + next.norm());
        x = next;
        if done {
            break;
        }
    }
    let residual = (a * &x * a.transpose() - &x + q).norm();
    if residual > tol * (1.0 + x.norm()) {
        return Err(Error::NoConvergence {
            iters: 128,
            residual,
        });
    }
    if q == &q.transpose() {
        x = sym(&x);
    }
    Ok(x)
}

/// Steady-state Kalman gain `K = P C' (C P C' + R)^{-1}`.
pub fn kalman_gain(p: &DMatrix<f64>, c: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let innov = c * p * c.transpose() + r;
    let inv = innov
        .try_inverse()
        .ok_or(Error::Singular("kalman_gain: C P C' + R"))?;
    Ok(p * c.transpose() * inv)
}

/// Steady-state LQG feedback gain `L = -(B' S B + U)^{-1} B' S A`.
pub fn lqg_gain(
    s: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    u: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let h = b.transpose() * s * b + u;
    let inv = h.try_inverse().ok_or(Error::Singular("lqg_gain: B' S B + U"))?;
    Ok(-(inv * b.transpose() * s * a))
}
