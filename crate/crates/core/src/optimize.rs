//! Parameter transforms and unconstrained minimization.
//!
//! Objectives are written over the constrained (natural) parameter vector.
//! [`minimize`] maps them onto an unconstrained space through the transforms
//! of a [`ParamSpace`] and searches there with Nelder-Mead or BFGS.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::math::{abs, exp, ln, logistic, logit, powf};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    Free,
    /// `x > 0`, log transform.
    Positive,
    /// `lo < x < hi`, scaled logistic transform.
    Interval { lo: f64, hi: f64 },
    /// `x > 0`, `partner > 0`, `x + partner < 1`. Both members carry the
    /// constraint naming each other; the lower index stores
    /// `logit(x + partner)`, the higher `logit(lower / (x + partner))`.
    PairSumLtOne { partner: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub constraint: Constraint,
}

impl ParamEntry {
    pub fn new(name: impl Into<String>, constraint: Constraint) -> Self {
        Self { name: name.into(), constraint }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpace {
    entries: Vec<ParamEntry>,
}

impl ParamSpace {
    pub fn new(entries: Vec<ParamEntry>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if entries[..i].iter().any(|o| o.name == e.name) {
                return Err(Error::InvalidParameter(alloc::format!("duplicate parameter name `{}`", e.name)));
            }
            match e.constraint {
                Constraint::Interval { lo, hi } if !(lo < hi) => {
                    return Err(Error::InvalidParameter(alloc::format!("empty interval for `{}`", e.name)));
                }
                Constraint::PairSumLtOne { partner } => {
                    let ok = partner != i
                        && entries
                            .get(partner)
                            .is_some_and(|p| p.constraint == Constraint::PairSumLtOne { partner: i });
                    if !ok {
                        return Err(Error::InvalidParameter(alloc::format!("unmatched pair for `{}`", e.name)));
                    }
                }
                _ => {}
            }
        }
        Ok(Self { entries })
    }

    pub fn dimension(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    fn violation(&self, i: usize) -> Error {
        Error::ConstraintViolation { name: self.entries[i].name.clone() }
    }

    pub fn to_unconstrained(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dimension() {
            return Err(Error::LengthMismatch { expected: self.dimension(), got: x.len() });
        }
        let mut y = vec![0.0; x.len()];
        for (i, e) in self.entries.iter().enumerate() {
            let v = x[i];
            if !v.is_finite() {
                return Err(self.violation(i));
            }
            y[i] = match e.constraint {
                Constraint::Free => v,
                Constraint::Positive => {
                    if !(v > 0.0) {
                        return Err(self.violation(i));
                    }
                    ln(v)
                }
                Constraint::Interval { lo, hi } => {
                    if !(v > lo && v < hi) {
                        return Err(self.violation(i));
                    }
                    logit((v - lo) / (hi - lo))
                }
                Constraint::PairSumLtOne { partner } => {
                    let (a, b) = if i < partner { (v, x[partner]) } else { (x[partner], v) };
                    if !(a > 0.0 && b > 0.0 && a + b < 1.0) {
                        return Err(self.violation(i));
                    }
                    if i < partner {
                        logit(a + b)
                    } else {
                        logit(a / (a + b))
                    }
                }
            };
        }
        Ok(y)
    }

    /// Maps any real vector strictly inside the feasible region.
    pub fn from_unconstrained(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.dimension(), "dimension mismatch");
        let mut x = vec![0.0; y.len()];
        for (i, e) in self.entries.iter().enumerate() {
            x[i] = match e.constraint {
                Constraint::Free => y[i],
                Constraint::Positive => exp(y[i]).clamp(f64::MIN_POSITIVE, f64::MAX),
                Constraint::Interval { lo, hi } => inside(lo + (hi - lo) * logistic(y[i]), lo, hi),
                Constraint::PairSumLtOne { partner } => {
                    let (lead, tail) = if i < partner { (i, partner) } else { (partner, i) };
                    let s = inside(logistic(y[lead]), 0.0, 1.0);
                    let share = inside(logistic(y[tail]), 0.0, 1.0);
                    let a = (s * share).max(f64::MIN_POSITIVE);
                    let b = (s * (1.0 - share)).max(f64::MIN_POSITIVE);
                    if i == lead {
                        a
                    } else {
                        b
                    }
                }
            };
        }
        x
    }

    /// Jacobian `dx/dy` of [`Self::from_unconstrained`].
    pub fn jacobian(&self, y: &[f64]) -> Matrix {
        let n = self.dimension();
        let mut j = Matrix::zeros(n, n);
        for (i, e) in self.entries.iter().enumerate() {
            match e.constraint {
                Constraint::Free => j[(i, i)] = 1.0,
                Constraint::Positive => j[(i, i)] = exp(y[i]),
                Constraint::Interval { lo, hi } => {
                    let p = logistic(y[i]);
                    j[(i, i)] = (hi - lo) * p * (1.0 - p);
                }
                Constraint::PairSumLtOne { partner } => {
                    if i > partner {
                        continue;
                    }
                    let s = logistic(y[i]);
                    let w = logistic(y[partner]);
                    let ds = s * (1.0 - s);
                    let dw = w * (1.0 - w);
                    // a = s w, b = s (1 - w)
                    j[(i, i)] = ds * w;
                    j[(i, partner)] = s * dw;
                    j[(partner, i)] = ds * (1.0 - w);
                    j[(partner, partner)] = -s * dw;
                }
            }
        }
        j
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.to_unconstrained(x).is_ok()
    }
}

fn inside(v: f64, lo: f64, hi: f64) -> f64 {
    let eps = (hi - lo) * f64::EPSILON;
    v.clamp(lo + eps, hi - eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    Simplex,
    #[default]
    QuasiNewton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative function change.
    pub f_tol: f64,
    /// Relative step size in the unconstrained space.
    pub x_tol: f64,
    /// Absolute gradient max-norm (quasi-Newton only).
    pub g_tol: f64,
    /// Iteration cap; `None` picks 2000 for simplex, 500 for quasi-Newton.
    pub max_iter: Option<usize>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { f_tol: 1e-8, x_tol: 1e-8, g_tol: 1e-6, max_iter: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    /// Optimum in the constrained space.
    pub x_opt: Vec<f64>,
    pub f_opt: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Max-norm of the unconstrained gradient at the optimum (quasi-Newton).
    pub gradient_norm: Option<f64>,
}

/// How finite-difference steps are sized per coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    /// `h_i = rel * max(|x_i|, 1)`
    Relative(f64),
    Absolute(f64),
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self::Relative(powf(f64::EPSILON, 1.0 / 3.0))
    }
}

impl StepPolicy {
    fn step(self, x: f64) -> f64 {
        match self {
            Self::Relative(r) => r * abs(x).max(1.0),
            Self::Absolute(h) => h,
        }
    }
}

/// Central-difference gradient.
pub fn finite_diff_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], step: StepPolicy) -> Result<Vec<f64>> {
    let mut xp = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let h = step.step(x[i]);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFinite { index: i });
        }
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

/// Forward-difference gradient, the secondary scheme for cross-checks.
pub fn forward_diff_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], step: StepPolicy) -> Result<Vec<f64>> {
    let f0 = f(x);
    if !f0.is_finite() {
        return Err(Error::NonFiniteStart);
    }
    let mut xp = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let h = step.step(x[i]);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i];
        if !fp.is_finite() {
            return Err(Error::NonFinite { index: i });
        }
        g[i] = (fp - f0) / h;
    }
    Ok(g)
}

/// Central second-difference Hessian.
pub fn finite_diff_hessian<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Result<Matrix> {
    let n = x.len();
    let rel = powf(f64::EPSILON, 0.25);
    let h: Vec<f64> = x.iter().map(|v| rel * abs(*v).max(1.0)).collect();
    let f0 = f(x);
    if !f0.is_finite() {
        return Err(Error::NonFiniteStart);
    }
    let mut hess = Matrix::zeros(n, n);
    let mut xp = x.to_vec();
    let eval = |xp: &mut [f64], moves: &[(usize, f64)]| -> Result<f64> {
        for &(i, d) in moves {
            xp[i] += d;
        }
        let v = f(xp);
        for &(i, d) in moves {
            xp[i] -= d;
        }
        xp.copy_from_slice(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { index: moves[0].0 })
        }
    };
    for i in 0..n {
        let fp = eval(&mut xp, &[(i, h[i])])?;
        let fm = eval(&mut xp, &[(i, -h[i])])?;
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let fpp = eval(&mut xp, &[(i, h[i]), (j, h[j])])?;
            let fpm = eval(&mut xp, &[(i, h[i]), (j, -h[j])])?;
            let fmp = eval(&mut xp, &[(i, -h[i]), (j, h[j])])?;
            let fmm = eval(&mut xp, &[(i, -h[i]), (j, -h[j])])?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

/// Inverse Hessian of `f` at the constrained point `x`, computed in the
/// unconstrained coordinates and mapped back through the transform
/// Jacobian. `None` when the Hessian is singular.
pub fn covariance_at<F: Fn(&[f64]) -> f64>(f: F, space: &ParamSpace, x: &[f64]) -> Result<Option<Matrix>> {
    let y = space.to_unconstrained(x)?;
    let g = |yy: &[f64]| f(&space.from_unconstrained(yy));
    let hess = finite_diff_hessian(g, &y)?;
    let Some(inv) = hess.inverse() else {
        return Ok(None);
    };
    let j = space.jacobian(&y);
    Ok(Some(j.matmul(&inv).matmul(&j.transpose())))
}

/// Square roots of the covariance diagonal; `None` where non-positive.
pub fn standard_errors(cov: Option<&Matrix>, n: usize) -> Vec<Option<f64>> {
    match cov {
        None => vec![None; n],
        Some(c) => c.diag().into_iter().map(|v| (v > 0.0 && v.is_finite()).then(|| crate::math::sqrt(v))).collect(),
    }
}

/// Minimizes `objective` over the space, starting from constrained `x0`.
///
/// An exhausted iteration cap yields `converged = false`, not an error.
pub fn minimize<F: Fn(&[f64]) -> f64>(
    objective: F,
    space: &ParamSpace,
    x0: &[f64],
    method: Method,
    tol: Tolerances,
) -> Result<OptResult> {
    let y0 = space.to_unconstrained(x0)?;
    let evals = core::cell::Cell::new(0usize);
    let g = |y: &[f64]| {
        evals.set(evals.get() + 1);
        let v = objective(&space.from_unconstrained(y));
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    if !g(&y0).is_finite() {
        return Err(Error::NonFiniteStart);
    }
    let (y, f_opt, iterations, converged, gradient_norm) = match method {
        Method::Simplex => {
            let (y, f, it, ok) = nelder_mead(&g, &y0, tol, tol.max_iter.unwrap_or(2000));
            (y, f, it, ok, None)
        }
        Method::QuasiNewton => {
            let (y, f, it, ok, gn) = bfgs(&g, &y0, tol, tol.max_iter.unwrap_or(500));
            (y, f, it, ok, Some(gn))
        }
    };
    Ok(OptResult {
        x_opt: space.from_unconstrained(&y),
        f_opt,
        iterations: iterations.max(1),
        evaluations: evals.get(),
        converged,
        gradient_norm,
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(abs(*x)))
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, y0: &[f64], tol: Tolerances, max_iter: usize) -> (Vec<f64>, f64, usize, bool) {
    let n = y0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(y0.to_vec());
    for i in 0..n {
        let mut v = y0.to_vec();
        v[i] += if abs(v[i]) > 1e-3 { 0.1 * abs(v[i]).max(0.25) } else { 0.25 };
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut it = 0;
    let mut converged = false;
    while it < max_iter {
        it += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fv = order.iter().map(|&i| fv[i]).collect();

        let f_spread = fv[n] - fv[0];
        let size = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).fold(0.0_f64, |m, (a, b)| m.max(abs(a - b))))
            .fold(0.0_f64, f64::max);
        if f_spread <= tol.f_tol * abs(fv[0]).max(1.0) && size <= tol.x_tol * max_abs(&simplex[0]).max(1.0) {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect() };
        let xr = along(alpha);
        let fr = f(&xr);
        if fr < fv[0] {
            let xe = along(alpha * gamma);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
            continue;
        }
        if fr < fv[n - 1] {
            simplex[n] = xr;
            fv[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < fv[n] {
            let xc = along(alpha * rho);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = f(&xc);
            (xc, fc)
        };
        if fc < fv[n].min(fr) {
            simplex[n] = xc;
            fv[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[0].iter().zip(&simplex[i]).map(|(b, v)| b + sigma * (v - b)).collect();
            fv[i] = f(&shrunk);
            simplex[i] = shrunk;
        }
    }
    let best = (0..=n).min_by(|&a, &b| fv[a].total_cmp(&fv[b])).unwrap();
    (simplex[best].clone(), fv[best], it, converged)
}

fn gradient<F: Fn(&[f64]) -> f64>(f: &F, y: &[f64]) -> Vec<f64> {
    let step = StepPolicy::default();
    let mut yp = y.to_vec();
    let mut g = vec![0.0; y.len()];
    for i in 0..y.len() {
        let h = step.step(y[i]);
        yp[i] = y[i] + h;
        let fp = f(&yp);
        yp[i] = y[i] - h;
        let fm = f(&yp);
        yp[i] = y[i];
        g[i] = if fp.is_finite() && fm.is_finite() {
            (fp - fm) / (2.0 * h)
        } else {
            // one-sided fallback next to a region where the objective blows up
            let f0 = f(y);
            if fp.is_finite() {
                (fp - f0) / h
            } else if fm.is_finite() {
                (f0 - fm) / h
            } else {
                0.0
            }
        };
    }
    g
}

fn bfgs<F: Fn(&[f64]) -> f64>(f: &F, y0: &[f64], tol: Tolerances, max_iter: usize) -> (Vec<f64>, f64, usize, bool, f64) {
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut fy = f(&y);
    let mut g = gradient(f, &y);
    let mut h_inv = Matrix::identity(n);
    let mut scaled = false;
    let mut it = 0;
    let mut converged = false;
    while it < max_iter {
        if max_abs(&g) <= tol.g_tol {
            converged = true;
            break;
        }
        it += 1;
        let mut p: Vec<f64> = h_inv.mul_vec(&g).iter().map(|v| -v).collect();
        let mut slope: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            h_inv = Matrix::identity(n);
            p = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }
        let Some((alpha, f_new)) = line_search(f, &y, fy, &p, slope) else {
            // no decrease available: at the noise floor of the gradient
            converged = max_abs(&g) <= 1e3 * tol.g_tol;
            break;
        };
        let s: Vec<f64> = p.iter().map(|v| alpha * v).collect();
        let y_new: Vec<f64> = y.iter().zip(&s).map(|(a, b)| a + b).collect();
        let g_new = gradient(f, &y_new);
        let df = fy - f_new;
        let step_small = max_abs(&s) <= tol.x_tol * max_abs(&y_new).max(1.0);
        let yk: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        y = y_new;
        fy = f_new;
        g = g_new;
        if df <= tol.f_tol * abs(fy).max(1.0) && step_small {
            converged = true;
            break;
        }
        let sy: f64 = s.iter().zip(&yk).map(|(a, b)| a * b).sum();
        let yy: f64 = yk.iter().map(|v| v * v).sum();
        if sy > 1e-12 * crate::math::sqrt(yy * s.iter().map(|v| v * v).sum::<f64>()) {
            if !scaled {
                h_inv = Matrix::identity(n);
                let gamma = sy / yy;
                for i in 0..n {
                    h_inv[(i, i)] = gamma;
                }
                scaled = true;
            }
            let rho = 1.0 / sy;
            let hy = h_inv.mul_vec(&yk);
            let yhy: f64 = yk.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    h_inv[(i, j)] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
    }
    let gn = max_abs(&g);
    (y, fy, it, converged, gn)
}

/// Weak-Wolfe line search (bracketing with interpolation). Directional
/// derivatives come from central differences along `p`. An accepted step is
/// polished by one secant step on the directional derivative, which is exact
/// on quadratics.
fn line_search<F: Fn(&[f64]) -> f64>(f: &F, y: &[f64], f0: f64, p: &[f64], slope: f64) -> Option<(f64, f64)> {
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    let pmax = max_abs(p);
    if !(pmax > 0.0) {
        return None;
    }
    let phi = |a: f64| -> f64 {
        let t: Vec<f64> = y.iter().zip(p).map(|(u, v)| u + a * v).collect();
        f(&t)
    };
    let hd = powf(f64::EPSILON, 1.0 / 3.0) * max_abs(y).max(1.0) / pmax;
    let dphi = |a: f64| -> f64 { (phi(a + hd) - phi(a - hd)) / (2.0 * hd) };
    let (mut lo, mut f_lo, mut d_lo) = (0.0, f0, slope);
    let mut hi = f64::INFINITY;
    let mut f_hi = f64::INFINITY;
    let mut alpha = 1.0;
    let mut best: Option<(f64, f64)> = None;
    for _ in 0..60 {
        let fa = phi(alpha);
        if !fa.is_finite() || fa > f0 + C1 * alpha * slope || fa >= f_lo {
            hi = alpha;
            f_hi = fa;
        } else {
            if best.is_none_or(|(_, fb)| fa < fb) {
                best = Some((alpha, fa));
            }
            let d = dphi(alpha);
            if !d.is_finite() {
                hi = alpha;
                f_hi = fa;
            } else if d >= C2 * slope {
                if d != slope {
                    let a_star = alpha - d * (alpha - lo) / (d - d_lo);
                    if a_star.is_finite() && a_star > 0.0 && abs(a_star - alpha) > 1e-6 * alpha {
                        let fs = phi(a_star);
                        if fs.is_finite() && fs < fa {
                            return Some((a_star, fs));
                        }
                    }
                }
                return Some((alpha, fa));
            } else {
                lo = alpha;
                f_lo = fa;
                d_lo = d;
            }
        }
        alpha = if hi.is_finite() {
            let width = hi - lo;
            let mut next = 0.5 * (lo + hi);
            if f_hi.is_finite() {
                // quadratic through (lo, f_lo, d_lo) and (hi, f_hi)
                let curv = f_hi - f_lo - d_lo * width;
                if curv > 0.0 {
                    next = lo - d_lo * width * width / (2.0 * curv);
                }
            }
            next.clamp(lo + 0.1 * width, hi - 0.1 * width)
        } else {
            2.0 * alpha
        };
        if hi.is_finite() && hi - lo < 1e-16 * alpha.max(1.0) {
            break;
        }
    }
    best
}
