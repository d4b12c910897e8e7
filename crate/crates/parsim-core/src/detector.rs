//! Online attack detector: joint innovation/watermark likelihood ratios,
//! posterior recursion in linear and log domain, two-threshold decisions.
//!
//! Conventions. At step k the innovation is compared against three
//! conditional densities: attack ongoing (mean `mu1`, covariance `Q_a`),
//! attack starting this step (mean `mu2`, covariance `Q_z`), and no attack
//! (zero mean, covariance `Sigma0`). The ratios against the no-attack
//! density are `L_a` and `L_b`; `L_c` and `L_d` are the same ratios with the
//! watermark term removed, used on steps whose control carried no watermark.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::model::{AttackModel, SystemModel};

/// Largest magnitude allowed for a log-ratio before exponentiation.
const LOG_RATIO_CLAMP: f64 = 700.0;
/// Posterior is kept strictly below one so `(1 - p)` factors stay nonzero.
pub const P_MAX: f64 = 1.0 - 1e-15;

fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Precomputed Gaussian: Cholesky factor and log-determinant.
#[derive(Debug, Clone)]
struct GaussianKernel {
    chol: Cholesky<f64, Dyn>,
    logdet: f64,
}

impl GaussianKernel {
    fn new(name: &'static str, sigma: &DMatrix<f64>) -> Result<Self> {
        let chol = sigma.clone().cholesky().ok_or(Error::Singular(name))?;
        let logdet = chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        Ok(Self { chol, logdet })
    }

    /// `log N(x; mu, Sigma)` up to the shared `-m/2 log 2 pi` constant,
    /// which cancels in every ratio.
    fn log_density(&self, x: &DVector<f64>, mu: &DVector<f64>) -> f64 {
        let d = x - mu;
        let y = self.chol.l_dirty().solve_lower_triangular(&d).expect("chol solve");
        -0.5 * (self.logdet + y.norm_squared())
    }

    fn log_density_zero_mean(&self, x: &DVector<f64>) -> f64 {
        let y = self.chol.l_dirty().solve_lower_triangular(x).expect("chol solve");
        -0.5 * (self.logdet + y.norm_squared())
    }
}

/// Conditioning variables for the step-k likelihoods, with the derived
/// conditional means.
#[derive(Debug, Clone)]
pub struct LikelihoodContext {
    /// Previous received observation, standing in for the attacker state.
    pub z_prev: DVector<f64>,
    /// Previous filtered state estimate.
    pub xhat_prev: DVector<f64>,
    /// Watermark carried by the previous control input (`s_{k-2} e_{k-1}`).
    pub e_s_prev: DVector<f64>,
    /// Mean under an ongoing attack.
    pub mu1: DVector<f64>,
    /// Mean under an attack starting this step.
    pub mu2: DVector<f64>,
    /// `mu1` with the watermark term removed.
    pub mu1_nowm: DVector<f64>,
    /// `mu2` with the watermark term removed.
    pub mu2_nowm: DVector<f64>,
}

/// Log-domain likelihood ratios for one innovation.
#[derive(Debug, Clone, Copy)]
pub struct LogRatios {
    pub la: f64,
    pub lb: f64,
    pub lc: f64,
    pub ld: f64,
}

/// Linear-domain likelihood ratios.
#[derive(Debug, Clone, Copy)]
pub struct Ratios {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl LogRatios {
    pub fn exp(&self) -> Ratios {
        let e = |v: f64| v.clamp(-LOG_RATIO_CLAMP, LOG_RATIO_CLAMP).exp();
        Ratios { a: e(self.la), b: e(self.lb), c: e(self.lc), d: e(self.ld) }
    }
}

/// Precomputed matrices shared by every likelihood evaluation.
#[derive(Debug, Clone)]
pub struct LikelihoodEngine {
    a_a: DMatrix<f64>,
    /// `C (A + B L)`.
    c_abl: DMatrix<f64>,
    /// `C B`.
    cb: DMatrix<f64>,
    f0: GaussianKernel,
    f1: GaussianKernel,
    f2: GaussianKernel,
    m: usize,
}

impl LikelihoodEngine {
    pub fn new(model: &SystemModel, attack: &AttackModel) -> Result<Self> {
        if attack.m() != model.m() {
            return Err(Error::Dimension("attacker dimension must match output dimension".into()));
        }
        let abl = &model.a + &model.b * &model.l;
        Ok(Self {
            a_a: attack.a_a.clone(),
            c_abl: &model.c * abl,
            cb: &model.c * &model.b,
            f0: GaussianKernel::new("Sigma0", &model.sigma0)?,
            f1: GaussianKernel::new("Q_a", &attack.q_a)?,
            f2: GaussianKernel::new("Q_z", &attack.q_z)?,
            m: model.m(),
        })
    }

    /// Build the conditioning context for one step.
    pub fn context(
        &self,
        z_prev: &DVector<f64>,
        xhat_prev: &DVector<f64>,
        e_s_prev: &DVector<f64>,
    ) -> LikelihoodContext {
        let base = -(&self.c_abl * xhat_prev);
        let wm = &self.cb * e_s_prev;
        let mu2_nowm = base.clone();
        let mu1_nowm = &self.a_a * z_prev + &base;
        LikelihoodContext {
            z_prev: z_prev.clone(),
            xhat_prev: xhat_prev.clone(),
            e_s_prev: e_s_prev.clone(),
            mu1: &mu1_nowm - &wm,
            mu2: &mu2_nowm - &wm,
            mu1_nowm,
            mu2_nowm,
        }
    }

    /// All four log ratios at the innovation `gamma`.
    pub fn log_ratios(&self, gamma: &DVector<f64>, ctx: &LikelihoodContext) -> Result<LogRatios> {
        if gamma.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite innovation".into()));
        }
        if gamma.len() != self.m {
            return Err(Error::Dimension(format!("innovation must have length {}", self.m)));
        }
        let l0 = self.f0.log_density_zero_mean(gamma);
        let la = self.f1.log_density(gamma, &ctx.mu1) - l0;
        let lb = self.f2.log_density(gamma, &ctx.mu2) - l0;
        let (lc, ld) = if ctx.e_s_prev.iter().all(|&v| v == 0.0) {
            (la, lb)
        } else {
            (
                self.f1.log_density(gamma, &ctx.mu1_nowm) - l0,
                self.f2.log_density(gamma, &ctx.mu2_nowm) - l0,
            )
        };
        Ok(LogRatios { la, lb, lc, ld })
    }

    /// Linear-domain ratios `(L_a, L_b, L_c, L_d)`.
    pub fn likelihood_ratios(
        &self,
        gamma: &DVector<f64>,
        ctx: &LikelihoodContext,
    ) -> Result<Ratios> {
        Ok(self.log_ratios(gamma, ctx)?.exp())
    }
}

/// One posterior update. Applies the no-watermark branch `(L_c, L_d)` when
/// `s_km2` is false, else `(L_a, L_b)`; the result is clamped to
/// `[0, 1 - 1e-15]`.
pub fn update_posterior(p: f64, ratios: &Ratios, s_km2: bool, rho: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("posterior must lie in [0,1), got {p}")));
    }
    let (l, l_new) = if s_km2 { (ratios.a, ratios.b) } else { (ratios.c, ratios.d) };
    if !(l > 0.0 && l_new > 0.0) {
        return Err(Error::Domain("likelihood ratios must be positive".into()));
    }
    // Scale by the largest ratio so huge ratios cannot overflow the sum.
    let scale = l.max(l_new).max(1.0);
    let num = p * (l / scale) + (1.0 - p) * rho * (l_new / scale);
    let den = (1.0 - rho) * (1.0 - p) / scale + num;
    if den <= 0.0 {
        return Err(Error::Domain("posterior recursion denominator not positive".into()));
    }
    Ok((num / den).clamp(0.0, P_MAX))
}

/// One Shiryaev-statistic update in the linear domain.
pub fn update_sr(sr: f64, ratios: &Ratios, s_km2: bool, rho: f64) -> Result<f64> {
    if sr < 0.0 {
        return Err(Error::Domain("SR must be >= 0".into()));
    }
    let (l, l_new) = if s_km2 { (ratios.a, ratios.b) } else { (ratios.c, ratios.d) };
    Ok((l * sr + l_new) / (1.0 - rho))
}

/// One Shiryaev-statistic update in the log domain; `lsr = log SR`, with
/// `-inf` encoding `SR = 0`.
pub fn update_lsr(lsr: f64, log_ratios: &LogRatios, s_km2: bool, rho: f64) -> f64 {
    let (la, lb) = if s_km2 {
        (log_ratios.la, log_ratios.lb)
    } else {
        (log_ratios.lc, log_ratios.ld)
    };
    logaddexp(la + lsr, lb) - (1.0 - rho).ln()
}

/// Posterior implied by a log-domain statistic: `p = SR / (SR + 1/rho)`.
pub fn posterior_from_lsr(lsr: f64, rho: f64) -> f64 {
    if lsr == f64::NEG_INFINITY {
        return 0.0;
    }
    // 1 / (1 + exp(-lsr)/rho), stable on both tails
    let t = -lsr + (1.0 / rho).ln();
    if t > 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// Two-threshold decision: alarm when `p >= th_d`, else watermark when
/// `p >= th_s`.
pub fn decide(p: f64, th_s: f64, th_d: f64) -> (bool, bool) {
    assert!(
        (0.0..=1.0).contains(&th_s) && th_s <= th_d && th_d <= 1.0,
        "need 0 <= th_s <= th_d <= 1"
    );
    if p >= th_d {
        (false, true)
    } else {
        (p >= th_s, false)
    }
}

/// Mutable detector state carried between steps.
#[derive(Debug, Clone)]
pub struct DetectorState {
    /// Posterior probability of an ongoing attack.
    pub p: f64,
    /// Log of the Shiryaev statistic; `-inf` until the first update.
    pub lsr: f64,
    /// Filtered state estimate.
    pub xhat: DVector<f64>,
    /// Previous received observation (true or fake).
    pub prev_obs: DVector<f64>,
    /// Watermark carried by the most recent control input.
    pub e_s: DVector<f64>,
    /// Whether that watermark was active (`s_{k-1}` at issue time).
    pub last_s: bool,
    pub terminated: bool,
}

impl DetectorState {
    pub fn new(n: usize, m: usize, p_in: usize) -> Self {
        Self {
            p: 0.0,
            lsr: f64::NEG_INFINITY,
            xhat: DVector::zeros(n),
            prev_obs: DVector::zeros(m),
            e_s: DVector::zeros(p_in),
            last_s: false,
            terminated: false,
        }
    }
}

/// Output of one detector step. The innovation itself is available from
/// [`Detector::last_gamma`].
#[derive(Debug, Clone, Copy)]
pub struct DetectorStepOut {
    pub p: f64,
    pub lsr: f64,
    pub log_ratios: LogRatios,
}

/// Full online detector: Kalman prediction, likelihood evaluation, posterior
/// update. Decisions are layered on top so the same machinery serves the
/// two-threshold policy and the always-on / periodic baselines.
#[derive(Debug, Clone)]
pub struct Detector {
    engine: LikelihoodEngine,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    k: DMatrix<f64>,
    rho: f64,
    pub state: DetectorState,
    last_gamma: DVector<f64>,
}

impl Detector {
    pub fn new(model: &SystemModel, attack: &AttackModel) -> Result<Self> {
        Ok(Self {
            engine: LikelihoodEngine::new(model, attack)?,
            a: model.a.clone(),
            b: model.b.clone(),
            c: model.c.clone(),
            k: model.k.clone(),
            rho: attack.rho,
            state: DetectorState::new(model.n(), model.m(), model.p_in()),
            last_gamma: DVector::zeros(model.m()),
        })
    }

    pub fn engine(&self) -> &LikelihoodEngine {
        &self.engine
    }

    /// Innovation formed by the most recent step.
    pub fn last_gamma(&self) -> &DVector<f64> {
        &self.last_gamma
    }

    /// Run the Kalman filter only (no posterior update); used during burn-in.
    pub fn track_only(&mut self, received: &DVector<f64>, u_prev: &DVector<f64>) {
        let xpred = &self.a * &self.state.xhat + &self.b * u_prev;
        let gamma = received - &self.c * &xpred;
        self.state.xhat = &xpred + &self.k * &gamma;
        self.state.prev_obs.copy_from(received);
        self.last_gamma = gamma;
    }

    /// One detection step: form the innovation from the Kalman prediction,
    /// update posterior and log-statistic, then fold the observation into
    /// the filter.
    pub fn step(&mut self, received: &DVector<f64>, u_prev: &DVector<f64>) -> Result<DetectorStepOut> {
        if self.state.terminated {
            return Err(Error::Terminated);
        }
        let xpred = &self.a * &self.state.xhat + &self.b * u_prev;
        let gamma = received - &self.c * &xpred;
        let ctx = self
            .engine
            .context(&self.state.prev_obs, &self.state.xhat, &self.state.e_s);
        let log_ratios = self.engine.log_ratios(&gamma, &ctx)?;
        let ratios = log_ratios.exp();
        let s_km2 = self.state.last_s;
        self.state.p = update_posterior(self.state.p, &ratios, s_km2, self.rho)?;
        self.state.lsr = update_lsr(self.state.lsr, &log_ratios, s_km2, self.rho);
        self.state.xhat = &xpred + &self.k * &gamma;
        self.state.prev_obs.copy_from(received);
        self.last_gamma = gamma;
        Ok(DetectorStepOut {
            p: self.state.p,
            lsr: self.state.lsr,
            log_ratios,
        })
    }

    /// Spec-shaped step: also issues the `(s, d)` decision for the given
    /// thresholds and latches termination on an alarm.
    pub fn step_with_thresholds(
        &mut self,
        received: &DVector<f64>,
        u_prev: &DVector<f64>,
        th_s: f64,
        th_d: f64,
    ) -> Result<(DetectorStepOut, bool, bool)> {
        let out = self.step(received, u_prev)?;
        let (s, d) = decide(out.p, th_s, th_d);
        if d {
            self.state.terminated = true;
        }
        Ok((out, s, d))
    }

    /// Record the watermark component of the control input just issued; it
    /// conditions the next step's likelihoods and branch selection.
    pub fn set_watermark_context(&mut self, e_s: DVector<f64>, active: bool) {
        self.state.e_s = e_s;
        self.state.last_s = active;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use nalgebra::{dmatrix, dvector};

    fn ratios(v: [f64; 4]) -> Ratios {
        Ratios { a: v[0], b: v[1], c: v[2], d: v[3] }
    }

    #[test]
    fn unit_ratios_reduce_to_prior_update() {
        let r = ratios([1.0, 1.0, 1.0, 1.0]);
        for p in [0.0, 0.2, 0.9] {
            for s in [false, true] {
                let p2 = update_posterior(p, &r, s, 0.25).unwrap();
                assert!((p2 - (p + (1.0 - p) * 0.25)).abs() < 1e-15);
            }
        }
        let p2 = update_posterior(0.0, &r, false, 0.001).unwrap();
        assert!((p2 - 0.001).abs() < 1e-18);
    }

    #[test]
    fn posterior_direct_substitution() {
        // p=0.5, rho=0.001, L_c = L_d = 2
        let r = ratios([9.0, 9.0, 2.0, 2.0]);
        let p2 = update_posterior(0.5, &r, false, 0.001).unwrap();
        let expect = (0.5 * 2.0 + 0.5 * 0.001 * 2.0) / (0.999 * 0.5 + 0.5 * 2.0 + 0.5 * 0.001 * 2.0);
        assert!((p2 - expect).abs() < 1e-15);
        assert!((p2 - 0.6671109630123292).abs() < 1e-12);
    }

    #[test]
    fn sr_recursion_examples() {
        let r = ratios([1.0, 1.0, 1.0, 1.0]);
        // rho -> 0 limit with SR = 0: SR' = 1
        let sr = update_sr(0.0, &r, false, 1e-300).unwrap();
        assert!((sr - 1.0).abs() < 1e-12);
        let sr = update_sr(1.0, &r, true, 0.5).unwrap();
        assert!((sr - 4.0).abs() < 1e-12);
    }

    #[test]
    fn posterior_and_sr_recursions_agree() {
        use rand::Rng;
        let mut rng = crate::streams::stream(99, crate::streams::Lane::Transition, 0);
        for _ in 0..10_000 {
            let p: f64 = rng.gen_range(0.0..0.999);
            let rho: f64 = rng.gen_range(1e-4..0.5);
            let sr = p / ((1.0 - p) * rho);
            let r = ratios([
                rng.gen_range(0.01..20.0),
                rng.gen_range(0.01..20.0),
                rng.gen_range(0.01..20.0),
                rng.gen_range(0.01..20.0),
            ]);
            let s = rng.gen_bool(0.5);
            let p2 = update_posterior(p, &r, s, rho).unwrap();
            let sr2 = update_sr(sr, &r, s, rho).unwrap();
            let p_from_sr = sr2 / (sr2 + 1.0 / rho);
            assert!((p2 - p_from_sr).abs() <= 1e-9, "p2={p2} p_from_sr={p_from_sr}");
        }
    }

    #[test]
    fn log_and_linear_sr_agree() {
        let lr = LogRatios { la: 0.3, lb: -0.2, lc: 0.1, ld: 0.4 };
        let r = lr.exp();
        let mut sr = 0.0;
        let mut lsr = f64::NEG_INFINITY;
        for i in 0..50 {
            let s = i % 3 == 0;
            sr = update_sr(sr, &r, s, 0.01).unwrap();
            lsr = update_lsr(lsr, &lr, s, 0.01);
            assert!((sr.ln() - lsr).abs() < 1e-9 * (1.0 + lsr.abs()));
        }
        // posterior from lsr matches direct relation
        let p = posterior_from_lsr(lsr, 0.01);
        assert!((p - sr / (sr + 100.0)).abs() < 1e-12);
    }

    #[test]
    fn decide_cases() {
        assert_eq!(decide(0.0, 0.2, 0.9), (false, false));
        assert_eq!(decide(0.95, 0.2, 0.9), (false, true));
        assert_eq!(decide(0.5, 0.2, 0.9), (true, false));
    }

    #[test]
    #[should_panic]
    fn decide_rejects_crossed_thresholds() {
        decide(0.5, 0.9, 0.2);
    }

    #[test]
    fn identical_densities_give_unit_ratio() {
        // A_a = 0 and Q_a = Q_z = Sigma0 make the attacked and healthy
        // densities coincide when the context is centred.
        let (model, _) = fixtures::system_a().unwrap();
        let sigma0 = model.sigma0.clone();
        let attack = crate::model::AttackModel::new(dmatrix![0.0], sigma0.clone(), 0.001)
            .unwrap()
            .with_q_z(sigma0)
            .unwrap();
        let engine = LikelihoodEngine::new(&model, &attack).unwrap();
        let ctx = engine.context(&dvector![3.7], &DVector::zeros(2), &DVector::zeros(2));
        for g in [-2.0, 0.0, 1.5] {
            let r = engine.likelihood_ratios(&dvector![g], &ctx).unwrap();
            assert!((r.a - 1.0).abs() < 1e-12);
            assert!((r.b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ratio_at_conditional_mean() {
        // gamma = mu1 makes the numerator quadratic form vanish:
        // L_a = sqrt(|Sigma0|/|Q_a|) exp(gamma' Sigma0^{-1} gamma / 2)
        let (model, attack) = fixtures::system_a().unwrap();
        let engine = LikelihoodEngine::new(&model, &attack).unwrap();
        let ctx = engine.context(&dvector![2.0], &dvector![0.3, -0.4], &dvector![0.0, 0.0]);
        let gamma = ctx.mu1.clone();
        let r = engine.likelihood_ratios(&gamma, &ctx).unwrap();
        let s0 = model.sigma0[(0, 0)];
        let qa = attack.q_a[(0, 0)];
        let expect = (s0 / qa).sqrt() * (0.5 * gamma[0] * gamma[0] / s0).exp();
        assert!((r.a - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn system_a_density_quotient_oracle() {
        // z = 1, xhat = 0, e = 0, gamma = 0:
        // mu1 = A_a z = 0.5, L_a = sqrt(Sigma0/Q_a) exp(-mu1^2/(2 Q_a))
        let (model, attack) = fixtures::system_a().unwrap();
        let engine = LikelihoodEngine::new(&model, &attack).unwrap();
        let ctx = engine.context(&dvector![1.0], &DVector::zeros(2), &DVector::zeros(2));
        assert!((ctx.mu1[0] - 0.5).abs() < 1e-14);
        let r = engine.likelihood_ratios(&dvector![0.0], &ctx).unwrap();
        let s0 = model.sigma0[(0, 0)];
        let expect = (s0 / 7.5f64).sqrt() * (-0.5 * 0.25 / 7.5f64).exp();
        assert!((r.a - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn posterior_monotone_under_unit_ratios() {
        let r = ratios([1.0; 4]);
        let mut p = 0.0;
        let mut last = -1.0;
        for _ in 0..20_000 {
            p = update_posterior(p, &r, false, 0.01).unwrap();
            assert!(p > last);
            last = p;
        }
        assert!(p > 1.0 - 1e-9);
    }

    #[test]
    fn equal_pairs_make_branch_irrelevant() {
        let r = ratios([3.0, 0.5, 3.0, 0.5]);
        let p0 = update_posterior(0.3, &r, false, 0.01).unwrap();
        let p1 = update_posterior(0.3, &r, true, 0.01).unwrap();
        assert_eq!(p0, p1);
    }

    #[test]
    fn step_after_termination_errors() {
        let (model, attack) = fixtures::system_a().unwrap();
        let mut det = Detector::new(&model, &attack).unwrap();
        det.state.terminated = true;
        let err = det.step(&dvector![0.0], &DVector::zeros(2)).unwrap_err();
        assert!(matches!(err, Error::Terminated));
    }
}
