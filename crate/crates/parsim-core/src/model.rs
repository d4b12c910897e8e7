//! Plant, controller and attacker models with their derived steady-state
//! quantities, plus the watermark covariance specification.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::solvers::{kalman_gain, lqg_gain, solve_dare, solve_dlyap, spectral_radius};

const RICCATI_TOL: f64 = 1e-12;
const RICCATI_MAX_ITER: usize = 100_000;
/// A model is rejected when the filter/control closed loop has spectral
/// radius above `1 - STABILITY_MARGIN`.
const STABILITY_MARGIN: f64 = 1e-6;

fn check_square(name: &str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension(format!(
            "{name} must be {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_pd(name: &str, m: &DMatrix<f64>) -> Result<()> {
    if (m - m.transpose()).norm() > 1e-9 * (1.0 + m.norm()) {
        return Err(Error::Domain(format!("{name} must be symmetric")));
    }
    if m.clone().cholesky().is_none() {
        return Err(Error::Domain(format!("{name} must be positive definite")));
    }
    Ok(())
}

fn check_psd(name: &str, m: &DMatrix<f64>) -> Result<()> {
    if (m - m.transpose()).norm() > 1e-9 * (1.0 + m.norm()) {
        return Err(Error::Domain(format!("{name} must be symmetric")));
    }
    let eigs = m.clone().symmetric_eigenvalues();
    if eigs.iter().any(|&e| e < -1e-10 * (1.0 + m.norm())) {
        return Err(Error::Domain(format!("{name} must be positive semi-definite")));
    }
    Ok(())
}

/// Closed-loop matrices and their spectral radii.
///
/// `acl = A + B L` is the control loop; `acal = (I - K C)(A + B L)` is the
/// estimator-side loop driving the post-attack filter state.
#[derive(Debug, Clone)]
pub struct ClosedLoopMats {
    pub acl: DMatrix<f64>,
    pub acal: DMatrix<f64>,
    pub acl_radius: f64,
    pub acal_radius: f64,
}

/// Linear plant with LQG controller and steady-state Kalman filter.
///
/// Carries both the raw parameters `(A, B, C, Q, R, W, U)` and the derived
/// steady-state quantities: the two Riccati solutions `P` and `S`, the gains
/// `K` and `L`, and the pre-attack innovation covariance
/// `Sigma0 = C P C' + R`.
#[derive(Debug, Clone)]
pub struct SystemModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub u: DMatrix<f64>,
    /// Estimation Riccati solution (one-step prediction error covariance).
    pub p: DMatrix<f64>,
    /// Kalman gain.
    pub k: DMatrix<f64>,
    /// Control Riccati solution.
    pub s: DMatrix<f64>,
    /// LQG state-feedback gain.
    pub l: DMatrix<f64>,
    /// Pre-attack innovation covariance.
    pub sigma0: DMatrix<f64>,
}

impl SystemModel {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        w: DMatrix<f64>,
        u: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::Dimension("A must be square".into()));
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!("B must have {n} rows")));
        }
        if c.ncols() != n {
            return Err(Error::Dimension(format!("C must have {n} columns")));
        }
        let m = c.nrows();
        let p_in = b.ncols();
        check_square("Q", &q, n)?;
        check_square("R", &r, m)?;
        check_square("W", &w, n)?;
        check_square("U", &u, p_in)?;
        check_pd("Q", &q)?;
        check_pd("R", &r)?;
        check_psd("W", &w)?;
        check_psd("U", &u)?;

        let p = solve_dare(&a.transpose(), &c.transpose(), &q, &r, RICCATI_TOL, RICCATI_MAX_ITER)?;
        let s = solve_dare(&a, &b, &w, &u, RICCATI_TOL, RICCATI_MAX_ITER)?;
        let k = kalman_gain(&p, &c, &r)?;
        let l = lqg_gain(&s, &a, &b, &u)?;
        let sigma0 = &c * &p * c.transpose() + &r;

        let model = Self { a, b, c, q, r, w, u, p, k, s, l, sigma0 };
        let loops = model.closed_loop();
        if loops.acal_radius > 1.0 - STABILITY_MARGIN {
            return Err(Error::Unstable {
                what: "(I - KC)(A + BL)",
                radius: loops.acal_radius,
            });
        }
        Ok(model)
    }

    /// State dimension n.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Measurement dimension m.
    pub fn m(&self) -> usize {
        self.c.nrows()
    }

    /// Input dimension p.
    pub fn p_in(&self) -> usize {
        self.b.ncols()
    }

    pub fn closed_loop(&self) -> ClosedLoopMats {
        let acl = &self.a + &self.b * &self.l;
        let ikc = DMatrix::identity(self.n(), self.n()) - &self.k * &self.c;
        let acal = &ikc * &acl;
        let acl_radius = spectral_radius(&acl);
        let acal_radius = spectral_radius(&acal);
        ClosedLoopMats { acl, acal, acl_radius, acal_radius }
    }
}

/// Attacker process `z_k = A_a z_{k-1} + w_a`, `w_a ~ N(0, Q_a)`, together
/// with the geometric attack-onset prior parameter `rho`.
#[derive(Debug, Clone)]
pub struct AttackModel {
    pub a_a: DMatrix<f64>,
    pub q_a: DMatrix<f64>,
    /// Geometric prior parameter, `P{Gamma = k} = rho (1 - rho)^{k-1}`.
    pub rho: f64,
    /// Prior mass at k <= 0; fixed to zero.
    pub pi0: f64,
    /// Stationary covariance of the fake-data process, `E_zz(0)`.
    pub stationary_cov: DMatrix<f64>,
    /// Covariance used for the onset-step likelihood. Defaults to
    /// `E_zz(0)`; overridable because no closed form is prescribed.
    pub q_z: DMatrix<f64>,
}

impl AttackModel {
    pub fn new(a_a: DMatrix<f64>, q_a: DMatrix<f64>, rho: f64) -> Result<Self> {
        if !(0.0 < rho && rho < 1.0) {
            return Err(Error::Domain(format!("rho must lie in (0,1), got {rho}")));
        }
        if !a_a.is_square() || q_a.nrows() != a_a.nrows() || q_a.ncols() != a_a.ncols() {
            return Err(Error::Dimension("A_a and Q_a must be square with equal size".into()));
        }
        let radius = spectral_radius(&a_a);
        if radius >= 1.0 {
            return Err(Error::Unstable { what: "A_a", radius });
        }
        check_pd("Q_a", &q_a)?;
        let stationary_cov = solve_dlyap(&a_a, &q_a, 1e-12)?;
        let q_z = stationary_cov.clone();
        Ok(Self { a_a, q_a, rho, pi0: 0.0, stationary_cov, q_z })
    }

    /// Replace the onset-step innovation covariance `Q_z`.
    pub fn with_q_z(mut self, q_z: DMatrix<f64>) -> Result<Self> {
        check_pd("Q_z", &q_z)?;
        if q_z.nrows() != self.a_a.nrows() {
            return Err(Error::Dimension("Q_z size must match A_a".into()));
        }
        self.q_z = q_z;
        Ok(self)
    }

    /// Measurement dimension m of the spoofed channel.
    pub fn m(&self) -> usize {
        self.a_a.nrows()
    }
}

/// Watermark covariance specification.
#[derive(Debug, Clone)]
pub enum WatermarkConfig {
    /// `Sigma_e = sigma2 * I_p` (equal power on every input channel).
    DiagonalEqualPower { sigma2: f64 },
    /// `Sigma_e = v v'`.
    RankOne { v: DVector<f64> },
    /// Arbitrary PSD covariance.
    Custom { sigma_e: DMatrix<f64> },
}

impl WatermarkConfig {
    /// No watermark at all (`Sigma_e = 0`).
    pub fn off() -> Self {
        WatermarkConfig::DiagonalEqualPower { sigma2: 0.0 }
    }

    /// The covariance matrix `Sigma_e` for input dimension `p_in`.
    pub fn covariance(&self, p_in: usize) -> Result<DMatrix<f64>> {
        match self {
            WatermarkConfig::DiagonalEqualPower { sigma2 } => {
                if *sigma2 < 0.0 {
                    return Err(Error::Domain("sigma_e^2 must be >= 0".into()));
                }
                Ok(DMatrix::identity(p_in, p_in) * *sigma2)
            }
            WatermarkConfig::RankOne { v } => {
                if v.len() != p_in {
                    return Err(Error::Dimension(format!("rank-one direction must have length {p_in}")));
                }
                Ok(v * v.transpose())
            }
            WatermarkConfig::Custom { sigma_e } => {
                if sigma_e.nrows() != p_in || sigma_e.ncols() != p_in {
                    return Err(Error::Dimension(format!("Sigma_e must be {p_in}x{p_in}")));
                }
                check_psd("Sigma_e", sigma_e)?;
                Ok(sigma_e.clone())
            }
        }
    }

    /// A factor `F` with `F F' = Sigma_e`, for sampling `e = F eta`. Uses a
    /// symmetric eigendecomposition with eigenvalues clipped at zero, so a
    /// semi-definite covariance (rank-one, zero) is handled.
    pub fn sqrt_factor(&self, p_in: usize) -> Result<DMatrix<f64>> {
        let sigma = self.covariance(p_in)?;
        Ok(psd_sqrt(&sigma))
    }
}

/// Symmetric PSD square root with eigenvalue clipping at zero.
pub fn psd_sqrt(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = sigma.clone().symmetric_eigen();
    let vals = eig.eigenvalues.map(|e| e.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&vals)
}
