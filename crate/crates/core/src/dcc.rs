//! Stage two: DCC(1,1) correlation dynamics over standardized residuals.
//!
//! ```text
//! Q_t = Q̄ (1 - α - β) + α z_{t-1} z_{t-1}ᵀ + β Q_{t-1},    Q_0 = Q̄
//! R_t = diag(Q_t)^{-1/2} Q_t diag(Q_t)^{-1/2}
//! ```
//!
//! `Q̄` is the sample second-moment matrix of the residuals and stays fixed
//! while `(α, β, ν)` are estimated from the standardized multivariate t.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use chrono::NaiveDate;

use crate::distributions::{mvt_log_const, mvt_logpdf_factored, JointDist};
use crate::egarch::{aic, Estimate, VolFit};
use crate::linalg::{Cholesky, Matrix};
use crate::math::{abs, ln, sqrt};
use crate::optimize::{self, Constraint, Method, ParamEntry, ParamSpace, StepPolicy, Tolerances};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DccParams {
    pub alpha: f64,
    pub beta: f64,
    pub dist: JointDist,
}

impl DccParams {
    pub fn new(alpha: f64, beta: f64, dist: JointDist) -> Result<Self> {
        let p = Self { alpha, beta, dist };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.alpha + self.beta < 1.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "DCC needs α, β ≥ 0 and α + β < 1, got ({}, {})",
                self.alpha,
                self.beta
            )));
        }
        if let JointDist::StudentT { shape } = self.dist {
            if !(shape > 2.0) {
                return Err(Error::InvalidParameter(alloc::format!("joint shape must be > 2, got {shape}")));
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> Option<f64> {
        match self.dist {
            JointDist::Normal => None,
            JointDist::StudentT { shape } => Some(shape),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum JointFamily {
    Normal,
    #[default]
    StudentT,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DccFit {
    pub symbols: Vec<String>,
    pub dates: Vec<NaiveDate>,
    pub params: DccParams,
    pub estimates: Vec<Estimate>,
    pub qbar: Matrix,
    pub q_path: Vec<Matrix>,
    pub r_path: Vec<Matrix>,
    /// Correlation-stage log-likelihood `Σ_t ln f(z_t; R_t, ν)`.
    pub loglik: f64,
    /// Log-likelihood of the returns under `H_t = D_t R_t D_t`: the
    /// correlation stage plus `-½ Σ_i ln h_{i,t}`.
    pub loglik_joint: f64,
    /// Stage-one parameters of every asset plus the correlation stage.
    pub n_params_joint: usize,
    pub aic_joint: f64,
    pub aic_per_obs: f64,
    pub nobs: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm of the finite-difference gradient of the negative
    /// correlation-stage log-likelihood in `(α, β, ν)`.
    pub gradient_norm: f64,
}

fn check_panel(z: &[Vec<f64>]) -> Result<usize> {
    let k = z.len();
    if k == 0 {
        return Err(Error::TooFewSeries { needed: 1, got: 0 });
    }
    let n = z[0].len();
    for s in z {
        if s.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: s.len() });
        }
    }
    if n == 0 {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    for s in z {
        if let Some(i) = s.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
    }
    Ok(n)
}

/// `Q̄ = (1/n) Σ_t z_t z_tᵀ` over `k` residual series of common length.
pub fn unconditional_corr(z: &[Vec<f64>]) -> Result<Matrix> {
    let n = check_panel(z)?;
    let k = z.len();
    if n < k + 10 {
        return Err(Error::TooShort { needed: k + 10, got: n });
    }
    let mut q = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let s = z[i].iter().zip(&z[j]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            q[(i, j)] = s;
            q[(j, i)] = s;
        }
        if !(q[(i, i)] > 0.0) {
            return Err(Error::ZeroVariance);
        }
    }
    Ok(q)
}

fn next_q(qbar: &Matrix, q_prev: &Matrix, z_prev: &[f64], alpha: f64, beta: f64) -> Matrix {
    let k = qbar.rows();
    let w = 1.0 - alpha - beta;
    let mut q = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v = w * qbar[(i, j)] + alpha * z_prev[i] * z_prev[j] + beta * q_prev[(i, j)];
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    q
}

/// Rescales `Q` to a correlation matrix; the diagonal is set to one.
pub fn rescale(q: &Matrix) -> Matrix {
    let k = q.rows();
    let inv_sd: Vec<f64> = q.diag().iter().map(|d| 1.0 / sqrt(*d)).collect();
    let mut r = Matrix::identity(k);
    for i in 0..k {
        for j in 0..i {
            let v = (q[(i, j)] * inv_sd[i] * inv_sd[j]).clamp(-1.0, 1.0);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    r
}

fn column(z: &[Vec<f64>], t: usize) -> Vec<f64> {
    z.iter().map(|s| s[t]).collect()
}

/// `(Q_path, R_path)`, one matrix per observation. Every `R_t` is checked
/// for positive definiteness.
pub fn dcc_filter(z: &[Vec<f64>], params: &DccParams, qbar: &Matrix) -> Result<(Vec<Matrix>, Vec<Matrix>)> {
    params.validate()?;
    let n = check_panel(z)?;
    if qbar.rows() != z.len() || !qbar.is_square() {
        return Err(Error::LengthMismatch { expected: z.len(), got: qbar.rows() });
    }
    let mut qs = Vec::with_capacity(n);
    let mut rs = Vec::with_capacity(n);
    let mut q = qbar.clone();
    for t in 0..n {
        if t > 0 {
            q = next_q(qbar, &q, &column(z, t - 1), params.alpha, params.beta);
        }
        let r = rescale(&q);
        Cholesky::new(&r)?;
        qs.push(q.clone());
        rs.push(r);
    }
    Ok((qs, rs))
}

/// `Σ_t ln f(z_t; R_t, ν)`; `-∞` when any `R_t` fails to factor or a term
/// is not finite.
pub fn dcc_loglik(z: &[Vec<f64>], params: &DccParams, qbar: &Matrix) -> f64 {
    if params.validate().is_err() {
        return f64::NEG_INFINITY;
    }
    let Ok(n) = check_panel(z) else {
        return f64::NEG_INFINITY;
    };
    let shape = params.shape();
    let c = mvt_log_const(z.len(), shape);
    let mut q = qbar.clone();
    let mut ll = 0.0;
    let mut prev = column(z, 0);
    for t in 0..n {
        let zt = column(z, t);
        if t > 0 {
            q = next_q(qbar, &q, &prev, params.alpha, params.beta);
        }
        let Ok(chol) = Cholesky::new(&rescale(&q)) else {
            return f64::NEG_INFINITY;
        };
        ll += mvt_logpdf_factored(&zt, &chol, shape, c);
        prev = zt;
    }
    if ll.is_finite() {
        ll
    } else {
        f64::NEG_INFINITY
    }
}

const SHAPE_BOUNDS: (f64, f64) = (2.01, 200.0);

fn space(family: JointFamily) -> ParamSpace {
    let mut e = vec![
        ParamEntry::new("alpha", Constraint::PairSumLtOne { partner: 1 }),
        ParamEntry::new("beta", Constraint::PairSumLtOne { partner: 0 }),
    ];
    if family == JointFamily::StudentT {
        e.push(ParamEntry::new("shape", Constraint::Interval { lo: SHAPE_BOUNDS.0, hi: SHAPE_BOUNDS.1 }));
    }
    ParamSpace::new(e).expect("static layout")
}

fn unpack(family: JointFamily, x: &[f64]) -> DccParams {
    let dist = match family {
        JointFamily::Normal => JointDist::Normal,
        JointFamily::StudentT => JointDist::StudentT { shape: x[2] },
    };
    DccParams { alpha: x[0], beta: x[1], dist }
}

/// Estimates `(α, β, ν)` from the standardized residuals of stage-one
/// fits sharing one calendar.
pub fn fit_dcc<P>(fits: &[VolFit<P>], family: JointFamily) -> Result<DccFit> {
    fit_dcc_with(fits, family, Tolerances::default())
}

pub fn fit_dcc_with<P>(fits: &[VolFit<P>], family: JointFamily, tol: Tolerances) -> Result<DccFit> {
    if fits.len() < 2 {
        return Err(Error::TooFewSeries { needed: 2, got: fits.len() });
    }
    let dates = &fits[0].dates;
    for f in &fits[1..] {
        if f.z.len() != fits[0].z.len() {
            return Err(Error::LengthMismatch { expected: fits[0].z.len(), got: f.z.len() });
        }
        if &f.dates != dates {
            return Err(Error::CalendarMismatch);
        }
    }
    let z: Vec<Vec<f64>> = fits.iter().map(|f| f.z.clone()).collect();
    let qbar = unconditional_corr(&z)?;
    let space = space(family);
    let mut x0 = vec![0.05, 0.9];
    if family == JointFamily::StudentT {
        x0.push(8.0);
    }
    let negll = |x: &[f64]| -dcc_loglik(&z, &unpack(family, x), &qbar);
    let mut opt = optimize::minimize(&negll, &space, &x0, Method::QuasiNewton, tol)?;
    if !opt.converged {
        let simplex = optimize::minimize(&negll, &space, &opt.x_opt, Method::Simplex, tol)?;
        let polish = optimize::minimize(&negll, &space, &simplex.x_opt, Method::QuasiNewton, tol)?;
        let iterations = opt.iterations + simplex.iterations + polish.iterations;
        opt = polish;
        opt.iterations = iterations;
    }
    let gradient_norm = optimize::finite_diff_gradient(&negll, &opt.x_opt, StepPolicy::default())
        .map(|g| g.iter().fold(0.0_f64, |m, v| m.max(abs(*v))))
        .unwrap_or(f64::INFINITY);
    let cov = optimize::covariance_at(&negll, &space, &opt.x_opt).ok().flatten();
    let se = optimize::standard_errors(cov.as_ref(), space.dimension());
    let params = unpack(family, &opt.x_opt);
    let (q_path, r_path) = dcc_filter(&z, &params, &qbar)?;
    let loglik = dcc_loglik(&z, &params, &qbar);
    let n = z[0].len();
    let log_scale: f64 = fits.iter().map(|f| f.h.iter().map(|h| 0.5 * ln(*h)).sum::<f64>()).sum();
    let loglik_joint = loglik - log_scale;
    let n_params_joint = fits.iter().map(|f| f.n_params).sum::<usize>() + space.dimension();
    let aic_joint = aic(loglik_joint, n_params_joint);
    let estimates = space
        .names()
        .into_iter()
        .zip(&opt.x_opt)
        .zip(se)
        .map(|((name, value), std_error)| Estimate { name: name.to_string(), value: *value, std_error })
        .collect();
    Ok(DccFit {
        symbols: fits.iter().map(|f| f.symbol.clone()).collect(),
        dates: dates.clone(),
        params,
        estimates,
        qbar,
        q_path,
        r_path,
        loglik,
        loglik_joint,
        n_params_joint,
        aic_joint,
        aic_per_obs: aic_joint / n as f64,
        nobs: n,
        converged: opt.converged && loglik.is_finite(),
        iterations: opt.iterations,
        gradient_norm,
    })
}

/// `H_t = D_t R_t D_t` with `D_t = diag(√h_{i,t})`.
pub fn conditional_covariance<H: AsRef<[f64]>>(fit: &DccFit, h_paths: &[H], t: usize) -> Result<Matrix> {
    let k = fit.qbar.rows();
    if h_paths.len() != k {
        return Err(Error::LengthMismatch { expected: k, got: h_paths.len() });
    }
    let r = fit.r_path.get(t).ok_or(Error::OutOfRange { index: t, len: fit.r_path.len() })?;
    let mut var = Vec::with_capacity(k);
    for h in h_paths {
        let h = h.as_ref();
        var.push(*h.get(t).ok_or(Error::OutOfRange { index: t, len: h.len() })?);
    }
    let d: Vec<f64> = var.iter().map(|v| sqrt(*v)).collect();
    let mut out = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            out[(i, j)] = if i == j { var[i] } else { d[i] * r[(i, j)] * d[j] };
        }
    }
    Ok(out)
}

/// Dated `ρ_{ij,t}` series.
pub fn dynamic_correlation(fit: &DccFit, i: usize, j: usize) -> Result<Vec<(NaiveDate, f64)>> {
    let k = fit.qbar.rows();
    for idx in [i, j] {
        if idx >= k {
            return Err(Error::OutOfRange { index: idx, len: k });
        }
    }
    if i == j {
        return Err(Error::DiagonalRequested);
    }
    Ok(fit.dates.iter().zip(&fit.r_path).map(|(d, r)| (*d, r[(i, j)])).collect())
}
