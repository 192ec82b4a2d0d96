//! Standardized (zero mean, unit variance) innovation distributions.
//!
//! The skewed Student-t uses the inverse-scale-factor construction: the
//! positive half of a unit-variance t is stretched by `skew`, the negative
//! half compressed by it, and the result is re-centred and re-scaled so the
//! mean is 0 and the variance 1. `skew = 1` is the symmetric case.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::linalg::{Cholesky, Matrix};
use crate::math::{self, exp, ln, ln_gamma, sqrt};
use crate::{Error, Result};

/// Distribution family without parameter values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DistFamily {
    Normal,
    StudentT,
    #[default]
    SkewStudentT,
}

impl DistFamily {
    /// Number of shape parameters the family adds to a model.
    pub fn n_params(self) -> usize {
        match self {
            Self::Normal => 0,
            Self::StudentT => 1,
            Self::SkewStudentT => 2,
        }
    }
}

/// Innovation law with its shape parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum InnovationDist {
    /// Gaussian; the `shape -> ∞` limit of the t families.
    Normal,
    StudentT { shape: f64 },
    SkewStudentT { shape: f64, skew: f64 },
}

/// Precomputed constants of the skewed t.
#[derive(Debug, Clone, Copy)]
struct SkewT {
    nu: f64,
    xi: f64,
    /// Scale turning a standard t into a unit-variance one.
    s: f64,
    mu: f64,
    sigma: f64,
    ln_g: f64,
}

impl SkewT {
    fn new(nu: f64, xi: f64) -> Self {
        let m1 = unit_t_abs_moment(nu);
        let mu = m1 * (xi - 1.0 / xi);
        let var = (1.0 - m1 * m1) * (xi * xi + 1.0 / (xi * xi)) + 2.0 * m1 * m1 - 1.0;
        Self { nu, xi, s: sqrt((nu - 2.0) / nu), mu, sigma: sqrt(var), ln_g: ln(2.0 / (xi + 1.0 / xi)) }
    }

    /// Log density of the unit-variance t.
    fn ln_f(&self, x: f64) -> f64 {
        math::student_t_ln_pdf(x / self.s, self.nu) - ln(self.s)
    }

    fn cdf_f(&self, x: f64) -> f64 {
        math::student_t_cdf(x / self.s, self.nu)
    }

    /// `∫_{-∞}^a x f(x) dx` for the unit-variance t.
    fn partial_mean_f(&self, a: f64) -> f64 {
        let u = a / self.s;
        -self.s * (self.nu + u * u) / (self.nu - 1.0) * exp(math::student_t_ln_pdf(u, self.nu))
    }

    fn logpdf(&self, z: f64) -> f64 {
        let y = z * self.sigma + self.mu;
        let arg = if y >= 0.0 { y / self.xi } else { y * self.xi };
        ln(self.sigma) + self.ln_g + self.ln_f(arg)
    }

    fn cdf_y(&self, y: f64) -> f64 {
        let g = exp(self.ln_g);
        let p0 = 1.0 / (1.0 + self.xi * self.xi);
        if y < 0.0 {
            g / self.xi * self.cdf_f(y * self.xi)
        } else {
            p0 + g * self.xi * (self.cdf_f(y / self.xi) - 0.5)
        }
    }

    fn cdf(&self, z: f64) -> f64 {
        self.cdf_y(z * self.sigma + self.mu)
    }

    /// `E|Z| = 2 E[(μ - Y)^+] / σ`, in closed form through the t cdf and
    /// its partial first moment.
    fn abs_moment(&self) -> f64 {
        let (xi, c) = (self.xi, self.mu);
        let g = exp(self.ln_g);
        let lower = if c < 0.0 {
            g / xi * (c * self.cdf_f(c * xi) - self.partial_mean_f(c * xi) / xi)
        } else {
            let neg = g / xi * (0.5 * c - self.partial_mean_f(0.0) / xi);
            let pos = g * xi
                * (c * (self.cdf_f(c / xi) - 0.5) - xi * (self.partial_mean_f(c / xi) - self.partial_mean_f(0.0)));
            neg + pos
        };
        2.0 * lower / self.sigma
    }
}

/// `E|X|` for the unit-variance Student-t.
fn unit_t_abs_moment(nu: f64) -> f64 {
    2.0 * sqrt(nu - 2.0) * exp(ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu))
        / ((nu - 1.0) * sqrt(core::f64::consts::PI))
}

impl InnovationDist {
    pub fn family(&self) -> DistFamily {
        match self {
            Self::Normal => DistFamily::Normal,
            Self::StudentT { .. } => DistFamily::StudentT,
            Self::SkewStudentT { .. } => DistFamily::SkewStudentT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Normal => Ok(()),
            Self::StudentT { shape } => check_shape(shape),
            Self::SkewStudentT { shape, skew } => {
                check_shape(shape)?;
                if !(skew > 0.0) || !skew.is_finite() {
                    return Err(Error::InvalidParameter(alloc::format!("skew must be > 0, got {skew}")));
                }
                Ok(())
            }
        }
    }

    pub fn shape(&self) -> Option<f64> {
        match *self {
            Self::Normal => None,
            Self::StudentT { shape } | Self::SkewStudentT { shape, .. } => Some(shape),
        }
    }

    pub fn skew(&self) -> Option<f64> {
        match *self {
            Self::SkewStudentT { skew, .. } => Some(skew),
            _ => None,
        }
    }

    /// Parameter values in model order (shape, then skew).
    pub fn params(&self) -> Vec<f64> {
        match *self {
            Self::Normal => Vec::new(),
            Self::StudentT { shape } => alloc::vec![shape],
            Self::SkewStudentT { shape, skew } => alloc::vec![shape, skew],
        }
    }

    pub fn from_params(family: DistFamily, p: &[f64]) -> Self {
        match family {
            DistFamily::Normal => Self::Normal,
            DistFamily::StudentT => Self::StudentT { shape: p[0] },
            DistFamily::SkewStudentT => Self::SkewStudentT { shape: p[0], skew: p[1] },
        }
    }

    pub fn logpdf(&self, z: f64) -> f64 {
        match *self {
            Self::Normal => -0.5 * z * z - math::LN_SQRT_2PI,
            Self::StudentT { shape } => {
                let s = sqrt((shape - 2.0) / shape);
                math::student_t_ln_pdf(z / s, shape) - ln(s)
            }
            Self::SkewStudentT { shape, skew } => SkewT::new(shape, skew).logpdf(z),
        }
    }

    pub fn pdf(&self, z: f64) -> f64 {
        exp(self.logpdf(z))
    }

    pub fn cdf(&self, z: f64) -> f64 {
        match *self {
            Self::Normal => math::norm_cdf(z),
            Self::StudentT { shape } => math::student_t_cdf(z / sqrt((shape - 2.0) / shape), shape),
            Self::SkewStudentT { shape, skew } => SkewT::new(shape, skew).cdf(z),
        }
    }

    /// `E|Z|`, the centring term of the EGARCH magnitude effect.
    pub fn abs_moment(&self) -> f64 {
        match *self {
            Self::Normal => math::SQRT_2_OVER_PI,
            Self::StudentT { shape } => unit_t_abs_moment(shape),
            Self::SkewStudentT { shape, skew } => SkewT::new(shape, skew).abs_moment(),
        }
    }

    /// Inverse cdf by bisection on a bracketing interval, width 1e-12.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        if let Self::Normal = self {
            return Ok(math::norm_quantile(p));
        }
        let skew = SkewT::new(self.shape().unwrap(), self.skew().unwrap_or(1.0));
        let cdf = |z: f64| match self {
            Self::StudentT { .. } => self.cdf(z),
            _ => skew.cdf(z),
        };
        let (mut lo, mut hi) = (-1.0, 1.0);
        while cdf(lo) > p {
            lo *= 2.0;
        }
        while cdf(hi) < p {
            hi *= 2.0;
        }
        Ok(math::bisect(|z| cdf(z) - p, lo, hi, 1e-12))
    }

    /// One standardized draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Normal => rng.sample(StandardNormal),
            Self::StudentT { shape } => standard_t(rng, shape) * sqrt((shape - 2.0) / shape),
            Self::SkewStudentT { shape, skew } => {
                let st = SkewT::new(shape, skew);
                let w = math::abs(standard_t(rng, shape) * st.s);
                let u: f64 = rng.random();
                let y = if u < skew * skew / (1.0 + skew * skew) { skew * w } else { -w / skew };
                (y - st.mu) / st.sigma
            }
        }
    }

    /// `n` draws from a ChaCha8 stream seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }
}

fn check_shape(shape: f64) -> Result<()> {
    if !(shape > 2.0) || shape.is_nan() {
        return Err(Error::InvalidParameter(alloc::format!("shape must be > 2, got {shape}")));
    }
    Ok(())
}

pub(crate) fn standard_t<R: Rng + ?Sized>(rng: &mut R, nu: f64) -> f64 {
    let n: f64 = rng.sample(StandardNormal);
    let chi = ChiSquared::new(nu).expect("shape validated").sample(rng);
    n / sqrt(chi / nu)
}

/// Joint law of the standardized residual vector in the correlation stage.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum JointDist {
    Normal,
    StudentT { shape: f64 },
}

/// Log density constant for a k-variate standardized t (or normal).
pub fn mvt_log_const(k: usize, shape: Option<f64>) -> f64 {
    let kf = k as f64;
    match shape {
        None => -kf * math::LN_SQRT_2PI,
        Some(nu) => {
            ln_gamma(0.5 * (nu + kf)) - ln_gamma(0.5 * nu) - 0.5 * kf * ln(core::f64::consts::PI * (nu - 2.0))
        }
    }
}

/// Log density given a factored correlation matrix and the constant from
/// [`mvt_log_const`].
pub fn mvt_logpdf_factored(z: &[f64], chol: &Cholesky, shape: Option<f64>, log_const: f64) -> f64 {
    let q = chol.quad_form(z);
    let half_ln_det = 0.5 * chol.ln_det();
    match shape {
        None => log_const - half_ln_det - 0.5 * q,
        Some(nu) => log_const - half_ln_det - 0.5 * (nu + z.len() as f64) * math::ln_1p(q / (nu - 2.0)),
    }
}

/// Log density of the standardized multivariate t with correlation `r`
/// and one joint shape: covariance of `z` equals `r`.
pub fn mvt_logpdf(z: &[f64], r: &Matrix, shape: f64) -> Result<f64> {
    check_shape(shape)?;
    if r.rows() != z.len() || !r.is_square() {
        return Err(Error::LengthMismatch { expected: r.rows(), got: z.len() });
    }
    let chol = r.cholesky()?;
    Ok(mvt_logpdf_factored(z, &chol, Some(shape), mvt_log_const(z.len(), Some(shape))))
}
