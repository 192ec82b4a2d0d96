//! Stage one: per-asset conditional mean and variance by maximum likelihood.
//!
//! The variance model is EGARCH(1,1),
//!
//! ```text
//! ln h_t = ω + a_mag (|z_{t-1}| - E|z|) + xi z_{t-1} + b_pers ln h_{t-1}
//! ```
//!
//! with `z = ε / √h` and `E|z|` taken under the innovation law, or the
//! GARCH(1,1) baseline `h_t = α0 + α1 ε²_{t-1} + γ1 h_{t-1}` with a
//! constant mean.
//!
//! Fitting runs on returns divided by their sample standard deviation and
//! maps the optimum back; the map is exact for both models, so reported
//! parameters, log-likelihoods and standard errors refer to the input scale.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use chrono::NaiveDate;

use crate::distributions::{DistFamily, InnovationDist};
use crate::linalg::Matrix;
use crate::market_data::ReturnSeries;
use crate::math::{abs, exp, ln, sqrt};
use crate::optimize::{self, Constraint, Method, OptResult, ParamEntry, ParamSpace, StepPolicy, Tolerances};
use crate::{Error, Result};

/// ARMA(p, q) orders of the conditional mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct MeanSpec {
    pub ar: usize,
    pub ma: usize,
    pub constant: bool,
}

impl MeanSpec {
    pub const MAX_ORDER: usize = 5;

    pub fn new(ar: usize, ma: usize, constant: bool) -> Result<Self> {
        if ar > Self::MAX_ORDER || ma > Self::MAX_ORDER {
            return Err(Error::InvalidParameter(alloc::format!(
                "ARMA orders are capped at {}",
                Self::MAX_ORDER
            )));
        }
        Ok(Self { ar, ma, constant })
    }

    pub fn constant_only() -> Self {
        Self { ar: 0, ma: 0, constant: true }
    }

    pub fn n_params(&self) -> usize {
        usize::from(self.constant) + self.ar + self.ma
    }
}

impl Default for MeanSpec {
    fn default() -> Self {
        Self::constant_only()
    }
}

/// Mean-equation coefficients. `mu` is ignored (treated as 0) when the
/// spec has no constant.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanParams {
    pub mu: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
}

impl MeanParams {
    pub fn constant(mu: f64) -> Self {
        Self { mu, ar: Vec::new(), ma: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EgarchParams {
    pub mean: MeanParams,
    /// Log-variance intercept.
    pub omega: f64,
    /// Magnitude effect.
    pub a_mag: f64,
    /// Sign (leverage) effect.
    pub xi: f64,
    /// Persistence of log-variance.
    pub b_pers: f64,
    pub dist: InnovationDist,
}

impl EgarchParams {
    pub fn validate(&self) -> Result<()> {
        self.dist.validate()?;
        if !(abs(self.b_pers) < 1.0) {
            return Err(Error::InvalidParameter(alloc::format!("|b_pers| must be < 1, got {}", self.b_pers)));
        }
        Ok(())
    }

    /// Log-variance fixed point `ω / (1 - b_pers)`.
    pub fn unconditional_log_variance(&self) -> f64 {
        self.omega / (1.0 - self.b_pers)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Garch11Params {
    pub mu: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub gamma1: f64,
    pub dist: InnovationDist,
}

impl Garch11Params {
    pub fn validate(&self) -> Result<()> {
        self.dist.validate()?;
        if !(self.alpha0 > 0.0 && self.alpha1 >= 0.0 && self.gamma1 >= 0.0 && self.alpha1 + self.gamma1 < 1.0) {
            return Err(Error::InvalidParameter("GARCH(1,1) needs α0 > 0, α1, γ1 ≥ 0, α1 + γ1 < 1".to_string()));
        }
        Ok(())
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.alpha0 / (1.0 - self.alpha1 - self.gamma1)
    }
}

/// One named estimate with its asymptotic standard error.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
}

impl Estimate {
    pub fn t_stat(&self) -> Option<f64> {
        self.std_error.map(|se| self.value / se)
    }
}

/// A fitted univariate volatility model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VolFit<P> {
    pub symbol: String,
    pub dates: Vec<NaiveDate>,
    pub params: P,
    pub estimates: Vec<Estimate>,
    /// Conditional variances, one per return.
    pub h: Vec<f64>,
    /// Mean-equation residuals.
    pub eps: Vec<f64>,
    /// Standardized residuals `ε / √h`.
    pub z: Vec<f64>,
    pub loglik: f64,
    pub n_params: usize,
    pub nobs: usize,
    /// `2k - 2 loglik`
    pub aic: f64,
    /// `aic / nobs`
    pub aic_per_obs: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm of the finite-difference gradient of the negative
    /// log-likelihood at the optimum, with respect to the natural
    /// parameters of the unit-variance-scaled problem.
    pub gradient_norm: f64,
}

pub type EgarchFit = VolFit<EgarchParams>;
pub type Garch11Fit = VolFit<Garch11Params>;

/// `2k - 2 loglik`.
pub fn aic(loglik: f64, k: usize) -> f64 {
    2.0 * k as f64 - 2.0 * loglik
}

/// Conditional-mean residuals
/// `ε_t = r_t - μ - Σ φ_i r_{t-i} - Σ θ_j ε_{t-j}`; pre-sample returns are
/// the sample mean and pre-sample residuals are zero.
pub fn mean_filter(r: &[f64], mean: &MeanParams) -> Result<Vec<f64>> {
    let (p, q) = (mean.ar.len(), mean.ma.len());
    if r.len() <= p + q + 10 {
        return Err(Error::TooShort { needed: p + q + 11, got: r.len() });
    }
    Ok(mean_residuals(r, mean))
}

fn mean_residuals(r: &[f64], mean: &MeanParams) -> Vec<f64> {
    let n = r.len();
    if mean.ar.is_empty() && mean.ma.is_empty() {
        return r.iter().map(|v| v - mean.mu).collect();
    }
    let rbar = r.iter().sum::<f64>() / n as f64;
    let mut eps = vec![0.0; n];
    for t in 0..n {
        let mut e = r[t] - mean.mu;
        for (i, phi) in mean.ar.iter().enumerate() {
            let lag = i + 1;
            e -= phi * if t >= lag { r[t - lag] } else { rbar };
        }
        for (j, theta) in mean.ma.iter().enumerate() {
            let lag = j + 1;
            if t >= lag {
                e -= theta * eps[t - lag];
            }
        }
        eps[t] = e;
    }
    eps
}

fn initial_variance(eps: &[f64]) -> f64 {
    eps.iter().map(|e| e * e).sum::<f64>() / eps.len() as f64
}

/// Conditional variance path of EGARCH(1,1); `h_1` is the mean of `ε²`.
pub fn egarch_filter(eps: &[f64], params: &EgarchParams) -> Vec<f64> {
    let mut h = Vec::with_capacity(eps.len());
    if eps.is_empty() {
        return h;
    }
    let e_abs = params.dist.abs_moment();
    let mut ln_h = ln(initial_variance(eps));
    h.push(exp(ln_h));
    for t in 1..eps.len() {
        let z = eps[t - 1] / sqrt(h[t - 1]);
        ln_h = params.omega + params.a_mag * (abs(z) - e_abs) + params.xi * z + params.b_pers * ln_h;
        h.push(exp(ln_h));
    }
    h
}

/// Conditional variance path of GARCH(1,1); `h_1` is the mean of `ε²`.
pub fn garch11_filter(eps: &[f64], params: &Garch11Params) -> Vec<f64> {
    let mut h = Vec::with_capacity(eps.len());
    if eps.is_empty() {
        return h;
    }
    h.push(initial_variance(eps));
    for t in 1..eps.len() {
        h.push(params.alpha0 + params.alpha1 * eps[t - 1] * eps[t - 1] + params.gamma1 * h[t - 1]);
    }
    h
}

/// `Σ_t [ln f(z_t) - ½ ln h_t]`; any non-finite term gives `-∞`.
pub fn gaussianized_loglik(eps: &[f64], h: &[f64], dist: &InnovationDist) -> f64 {
    let mut ll = 0.0;
    for (e, v) in eps.iter().zip(h) {
        if !(*v > 0.0) || !v.is_finite() {
            return f64::NEG_INFINITY;
        }
        ll += dist.logpdf(e / sqrt(*v)) - 0.5 * ln(*v);
    }
    if ll.is_finite() {
        ll
    } else {
        f64::NEG_INFINITY
    }
}

pub fn egarch_loglik(r: &[f64], params: &EgarchParams) -> f64 {
    let eps = mean_residuals(r, &params.mean);
    let h = egarch_filter(&eps, params);
    gaussianized_loglik(&eps, &h, &params.dist)
}

pub fn garch11_loglik(r: &[f64], params: &Garch11Params) -> f64 {
    let eps: Vec<f64> = r.iter().map(|v| v - params.mu).collect();
    let h = garch11_filter(&eps, params);
    gaussianized_loglik(&eps, &h, &params.dist)
}

/// Optimizer settings shared by the stage-one fits.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitOptions {
    pub tolerances: Tolerances,
}

const SHAPE_BOUNDS: (f64, f64) = (2.01, 200.0);
const SKEW_BOUNDS: (f64, f64) = (0.1, 10.0);

fn dist_entries(family: DistFamily) -> Vec<ParamEntry> {
    let mut v = Vec::new();
    if family != DistFamily::Normal {
        v.push(ParamEntry::new("shape", Constraint::Interval { lo: SHAPE_BOUNDS.0, hi: SHAPE_BOUNDS.1 }));
    }
    if family == DistFamily::SkewStudentT {
        v.push(ParamEntry::new("skew", Constraint::Interval { lo: SKEW_BOUNDS.0, hi: SKEW_BOUNDS.1 }));
    }
    v
}

fn dist_start(family: DistFamily) -> Vec<f64> {
    match family {
        DistFamily::Normal => vec![],
        DistFamily::StudentT => vec![8.0],
        DistFamily::SkewStudentT => vec![8.0, 1.0],
    }
}

struct Scaled {
    values: Vec<f64>,
    scale: f64,
}

fn standardize(r: &ReturnSeries, min_len: usize) -> Result<Scaled> {
    let x = r.values();
    if x.len() < min_len {
        return Err(Error::TooShort { needed: min_len, got: x.len() });
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    if !(var > 0.0) || var <= (1e-14 * mean) * (1e-14 * mean) {
        return Err(Error::ZeroVariance);
    }
    let scale = sqrt(var);
    Ok(Scaled { values: x.iter().map(|v| v / scale).collect(), scale })
}

/// Quasi-Newton from `x0`; if that does not converge, a simplex pass from
/// its end point followed by a second quasi-Newton pass.
fn run_optimizer<F: Fn(&[f64]) -> f64>(f: &F, space: &ParamSpace, x0: &[f64], opts: &FitOptions) -> Result<OptResult> {
    let first = optimize::minimize(f, space, x0, Method::QuasiNewton, opts.tolerances)?;
    if first.converged {
        return Ok(first);
    }
    let simplex = optimize::minimize(f, space, &first.x_opt, Method::Simplex, opts.tolerances)?;
    let mut second = optimize::minimize(f, space, &simplex.x_opt, Method::QuasiNewton, opts.tolerances)?;
    second.iterations += first.iterations + simplex.iterations;
    second.evaluations += first.evaluations + simplex.evaluations;
    Ok(second)
}

fn gradient_norm<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    optimize::finite_diff_gradient(f, x, StepPolicy::default())
        .map(|g| g.iter().fold(0.0_f64, |m, v| m.max(abs(*v))))
        .unwrap_or(f64::INFINITY)
}

#[derive(Debug, Clone, Copy)]
struct EgarchLayout {
    mean: MeanSpec,
    family: DistFamily,
}

impl EgarchLayout {
    fn space(&self) -> ParamSpace {
        let mut e = Vec::new();
        if self.mean.constant {
            e.push(ParamEntry::new("mu", Constraint::Free));
        }
        for i in 1..=self.mean.ar {
            e.push(ParamEntry::new(alloc::format!("ar{i}"), Constraint::Interval { lo: -1.0, hi: 1.0 }));
        }
        for j in 1..=self.mean.ma {
            e.push(ParamEntry::new(alloc::format!("ma{j}"), Constraint::Interval { lo: -1.0, hi: 1.0 }));
        }
        e.push(ParamEntry::new("omega", Constraint::Free));
        e.push(ParamEntry::new("a_mag", Constraint::Free));
        e.push(ParamEntry::new("xi", Constraint::Free));
        e.push(ParamEntry::new("b_pers", Constraint::Interval { lo: -1.0, hi: 1.0 }));
        e.extend(dist_entries(self.family));
        ParamSpace::new(e).expect("static layout")
    }

    fn unpack(&self, x: &[f64]) -> EgarchParams {
        let mut k = 0;
        let mu = if self.mean.constant {
            k += 1;
            x[0]
        } else {
            0.0
        };
        let ar = x[k..k + self.mean.ar].to_vec();
        k += self.mean.ar;
        let ma = x[k..k + self.mean.ma].to_vec();
        k += self.mean.ma;
        EgarchParams {
            mean: MeanParams { mu, ar, ma },
            omega: x[k],
            a_mag: x[k + 1],
            xi: x[k + 2],
            b_pers: x[k + 3],
            dist: InnovationDist::from_params(self.family, &x[k + 4..]),
        }
    }

    fn pack(&self, p: &EgarchParams) -> Vec<f64> {
        let mut x = Vec::new();
        if self.mean.constant {
            x.push(p.mean.mu);
        }
        x.extend_from_slice(&p.mean.ar);
        x.extend_from_slice(&p.mean.ma);
        x.extend_from_slice(&[p.omega, p.a_mag, p.xi, p.b_pers]);
        x.extend(p.dist.params());
        x
    }

    fn omega_index(&self) -> usize {
        self.mean.n_params()
    }
}

/// Re-expresses EGARCH parameters fitted on `r / c` in the units of `r`.
fn egarch_unscale(p: &EgarchParams, c: f64) -> EgarchParams {
    let mut out = p.clone();
    out.mean.mu = p.mean.mu * c;
    out.omega = p.omega + 2.0 * ln(c) * (1.0 - p.b_pers);
    out
}

/// Joint maximum likelihood over the mean, EGARCH(1,1) and innovation
/// parameters.
pub fn fit_egarch(r: &ReturnSeries, mean: MeanSpec, family: DistFamily) -> Result<EgarchFit> {
    fit_egarch_with(r, mean, family, &FitOptions::default())
}

pub fn fit_egarch_with(r: &ReturnSeries, mean: MeanSpec, family: DistFamily, opts: &FitOptions) -> Result<EgarchFit> {
    let mean = MeanSpec::new(mean.ar, mean.ma, mean.constant)?;
    let scaled = standardize(r, mean.ar + mean.ma + 11)?;
    let layout = EgarchLayout { mean, family };
    let space = layout.space();
    let y = &scaled.values;
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let b0 = 0.9;
    let var = y.iter().map(|v| (v - ybar) * (v - ybar)).sum::<f64>() / (y.len() - 1) as f64;
    let start = EgarchParams {
        mean: MeanParams { mu: if mean.constant { ybar } else { 0.0 }, ar: vec![0.0; mean.ar], ma: vec![0.0; mean.ma] },
        omega: ln(var) * (1.0 - b0),
        a_mag: 0.1,
        xi: -0.05,
        b_pers: b0,
        dist: InnovationDist::from_params(family, &dist_start(family)),
    };
    let negll = |x: &[f64]| -egarch_loglik(y, &layout.unpack(x));
    let opt = run_optimizer(&negll, &space, &layout.pack(&start), opts)?;
    let grad = gradient_norm(&negll, &opt.x_opt);
    let cov_scaled = optimize::covariance_at(&negll, &space, &opt.x_opt).ok().flatten();

    let fitted_scaled = layout.unpack(&opt.x_opt);
    let params = egarch_unscale(&fitted_scaled, scaled.scale);
    let x_final = layout.pack(&params);

    // d(original)/d(scaled): μ scales by c, ω picks up -2 ln c per unit of b_pers.
    let k = space.dimension();
    let mut jac = Matrix::identity(k);
    if mean.constant {
        jac[(0, 0)] = scaled.scale;
    }
    let oi = layout.omega_index();
    jac[(oi, oi + 3)] = -2.0 * ln(scaled.scale);
    let cov = cov_scaled.map(|c| jac.matmul(&c).matmul(&jac.transpose()));
    let se = optimize::standard_errors(cov.as_ref(), k);

    let eps = mean_residuals(r.values(), &params.mean);
    let h = egarch_filter(&eps, &params);
    let loglik = gaussianized_loglik(&eps, &h, &params.dist);
    Ok(assemble(r, params, &space, &x_final, se, eps, h, loglik, &opt, grad))
}

#[allow(clippy::too_many_arguments)]
fn assemble<P>(
    r: &ReturnSeries,
    params: P,
    space: &ParamSpace,
    x: &[f64],
    se: Vec<Option<f64>>,
    eps: Vec<f64>,
    h: Vec<f64>,
    loglik: f64,
    opt: &OptResult,
    gradient_norm: f64,
) -> VolFit<P> {
    let estimates = space
        .names()
        .into_iter()
        .zip(x)
        .zip(se)
        .map(|((name, value), std_error)| Estimate { name: name.to_string(), value: *value, std_error })
        .collect();
    let z = eps.iter().zip(&h).map(|(e, v)| e / sqrt(*v)).collect();
    let n_params = space.dimension();
    let nobs = r.len();
    let a = aic(loglik, n_params);
    VolFit {
        symbol: r.symbol().to_string(),
        dates: r.dates().to_vec(),
        params,
        estimates,
        h,
        eps,
        z,
        loglik,
        n_params,
        nobs,
        aic: a,
        aic_per_obs: a / nobs as f64,
        converged: opt.converged && loglik.is_finite(),
        iterations: opt.iterations,
        gradient_norm,
    }
}

fn garch_space(family: DistFamily) -> ParamSpace {
    let mut e = vec![
        ParamEntry::new("mu", Constraint::Free),
        ParamEntry::new("alpha0", Constraint::Positive),
        ParamEntry::new("alpha1", Constraint::PairSumLtOne { partner: 3 }),
        ParamEntry::new("gamma1", Constraint::PairSumLtOne { partner: 2 }),
    ];
    e.extend(dist_entries(family));
    ParamSpace::new(e).expect("static layout")
}

fn garch_unpack(family: DistFamily, x: &[f64]) -> Garch11Params {
    Garch11Params { mu: x[0], alpha0: x[1], alpha1: x[2], gamma1: x[3], dist: InnovationDist::from_params(family, &x[4..]) }
}

fn garch_pack(p: &Garch11Params) -> Vec<f64> {
    let mut x = vec![p.mu, p.alpha0, p.alpha1, p.gamma1];
    x.extend(p.dist.params());
    x
}

/// Constant-mean GARCH(1,1) by maximum likelihood.
pub fn fit_garch11(r: &ReturnSeries, family: DistFamily) -> Result<Garch11Fit> {
    fit_garch11_with(r, family, &FitOptions::default())
}

pub fn fit_garch11_with(r: &ReturnSeries, family: DistFamily, opts: &FitOptions) -> Result<Garch11Fit> {
    let scaled = standardize(r, 11)?;
    let space = garch_space(family);
    let y = &scaled.values;
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let var = y.iter().map(|v| (v - ybar) * (v - ybar)).sum::<f64>() / (y.len() - 1) as f64;
    let start = Garch11Params {
        mu: ybar,
        alpha0: var * 0.05,
        alpha1: 0.05,
        gamma1: 0.9,
        dist: InnovationDist::from_params(family, &dist_start(family)),
    };
    let negll = |x: &[f64]| -garch11_loglik(y, &garch_unpack(family, x));
    let opt = run_optimizer(&negll, &space, &garch_pack(&start), opts)?;
    let grad = gradient_norm(&negll, &opt.x_opt);
    let cov_scaled = optimize::covariance_at(&negll, &space, &opt.x_opt).ok().flatten();

    let c = scaled.scale;
    let mut params = garch_unpack(family, &opt.x_opt);
    params.mu *= c;
    params.alpha0 *= c * c;
    let x_final = garch_pack(&params);
    let k = space.dimension();
    let mut jac = Matrix::identity(k);
    jac[(0, 0)] = c;
    jac[(1, 1)] = c * c;
    let cov = cov_scaled.map(|m| jac.matmul(&m).matmul(&jac.transpose()));
    let se = optimize::standard_errors(cov.as_ref(), k);

    let eps: Vec<f64> = r.values().iter().map(|v| v - params.mu).collect();
    let h = garch11_filter(&eps, &params);
    let loglik = gaussianized_loglik(&eps, &h, &params.dist);
    Ok(assemble(r, params, &space, &x_final, se, eps, h, loglik, &opt, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::SQRT_2_OVER_PI;

    fn gaussian(omega: f64, a_mag: f64, xi: f64, b_pers: f64) -> EgarchParams {
        EgarchParams { mean: MeanParams::constant(0.0), omega, a_mag, xi, b_pers, dist: InnovationDist::Normal }
    }

    #[test]
    fn mean_filter_identity_and_ar_unit_root() {
        let r: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin() * 0.01).collect();
        assert_eq!(mean_filter(&r, &MeanParams::constant(0.0)).unwrap(), r);
        let c = vec![0.02; 20];
        let eps = mean_filter(&c, &MeanParams { mu: 0.0, ar: vec![1.0], ma: vec![] }).unwrap();
        assert!(eps[1..].iter().all(|e| abs(*e) < 1e-18));
        assert!(matches!(mean_filter(&r[..11], &MeanParams { mu: 0.0, ar: vec![0.1], ma: vec![] }), Err(Error::TooShort { .. })));
    }

    #[test]
    fn constant_recursion_when_dynamics_vanish() {
        let eps = [0.3, -1.2, 0.4, 2.0, -0.1];
        let h = egarch_filter(&eps, &gaussian(-1.5, 0.0, 0.0, 0.0));
        assert!(h[1..].iter().all(|v| abs(v - exp(-1.5)) < 1e-15));
    }

    #[test]
    fn negative_shock_raises_variance_when_xi_negative() {
        let p = gaussian(-0.1, 0.1, -0.05, 0.9);
        let up = egarch_filter(&[0.5, 0.8, 0.0], &p);
        let down = egarch_filter(&[0.5, -0.8, 0.0], &p);
        assert_eq!(up[1], down[1]);
        assert!(down[2] > up[2]);
    }

    #[test]
    fn hand_unrolled_three_steps() {
        let p = gaussian(-0.1, 0.1, -0.05, 0.9);
        let eps = [0.2, -0.5, 0.3, 0.1];
        let h = egarch_filter(&eps, &p);
        let h1 = (0.04 + 0.25 + 0.09 + 0.01) / 4.0;
        let z1 = 0.2 / libm::sqrt(h1);
        let lh2 = -0.1 + 0.1 * (libm::fabs(z1) - SQRT_2_OVER_PI) - 0.05 * z1 + 0.9 * libm::log(h1);
        let z2 = -0.5 / libm::exp(0.5 * lh2);
        let lh3 = -0.1 + 0.1 * (libm::fabs(z2) - SQRT_2_OVER_PI) - 0.05 * z2 + 0.9 * lh2;
        let z3 = 0.3 / libm::exp(0.5 * lh3);
        let lh4 = -0.1 + 0.1 * (libm::fabs(z3) - SQRT_2_OVER_PI) - 0.05 * z3 + 0.9 * lh3;
        let expect = [h1, libm::exp(lh2), libm::exp(lh3), libm::exp(lh4)];
        for (a, b) in h.iter().zip(&expect) {
            assert!(abs(a - b) < 1e-12 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn constant_variance_reduces_to_iid_normal() {
        let r = [0.01, -0.02, 0.015, 0.003, -0.007, 0.012, -0.001, 0.004, -0.018, 0.009, 0.0, 0.006];
        let s2 = r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64;
        let p = gaussian(ln(s2), 0.0, 0.0, 0.0);
        let iid: f64 = r.iter().map(|v| -0.5 * v * v / s2 - 0.5 * ln(s2) - crate::math::LN_SQRT_2PI).sum();
        assert!(abs(egarch_loglik(&r, &p) - iid) < 1e-10);
        let g = Garch11Params { mu: 0.0, alpha0: s2, alpha1: 0.0, gamma1: 0.0, dist: InnovationDist::Normal };
        assert!(abs(garch11_loglik(&r, &g) - iid) < 1e-10);
        assert_eq!(egarch_loglik(&r, &p), egarch_loglik(&r, &p));
    }

    #[test]
    fn aic_identity() {
        assert_eq!(aic(0.0, 1), 2.0);
        assert_eq!(aic(10.5, 4) - aic(10.5, 3), 2.0);
        // 517 returns, seven parameters (μ, ω, α1, β1, γ1, skew, shape)
        assert!(abs(aic(1656.919, 7) / 517.0 + 6.383) < 5e-4);
    }

    #[test]
    fn degenerate_series_is_rejected() {
        let r = ReturnSeries::with_daily_calendar("C", NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), vec![0.001; 200]).unwrap();
        assert_eq!(fit_egarch(&r, MeanSpec::constant_only(), DistFamily::StudentT).unwrap_err(), Error::ZeroVariance);
        assert_eq!(fit_garch11(&r, DistFamily::Normal).unwrap_err(), Error::ZeroVariance);
    }

    #[test]
    fn unscaling_preserves_the_likelihood_up_to_jacobian() {
        let r: Vec<f64> = (0..300).map(|i| 0.01 * ((i as f64 * 1.3).sin() + 0.3 * (i as f64 * 0.17).cos())).collect();
        let c = 0.01;
        let scaled: Vec<f64> = r.iter().map(|v| v / c).collect();
        let p = EgarchParams {
            mean: MeanParams { mu: 0.05, ar: vec![0.1], ma: vec![-0.2] },
            omega: -0.05,
            a_mag: 0.12,
            xi: -0.04,
            b_pers: 0.93,
            dist: InnovationDist::SkewStudentT { shape: 6.0, skew: 1.1 },
        };
        let ll_scaled = egarch_loglik(&scaled, &p);
        let ll = egarch_loglik(&r, &egarch_unscale(&p, c));
        assert!(abs(ll - (ll_scaled - 300.0 * ln(c))) < 1e-8);
    }
}
