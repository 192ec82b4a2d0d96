//! Seeded simulators for the stage-one and stage-two models.
//!
//! Every path starts from the model's unconditional level and discards
//! `burn` steps before recording. All draws come from one ChaCha8 stream.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::dcc::{rescale, DccParams};
use crate::distributions::JointDist;
use crate::egarch::{EgarchParams, Garch11Params, MeanParams};
use crate::linalg::Matrix;
use crate::math::{abs, exp, sqrt};
use crate::{Error, Result};

/// One simulated univariate path.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    pub returns: Vec<f64>,
    pub eps: Vec<f64>,
    pub h: Vec<f64>,
    pub z: Vec<f64>,
}

/// Returns generated by the ARMA mean from the innovations `eps`, with
/// zero pre-sample values.
pub fn arma_path(mean: &MeanParams, eps: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; eps.len()];
    for t in 0..eps.len() {
        let mut v = mean.mu + eps[t];
        for (i, phi) in mean.ar.iter().enumerate() {
            if t > i {
                v += phi * r[t - i - 1];
            }
        }
        for (j, theta) in mean.ma.iter().enumerate() {
            if t > j {
                v += theta * eps[t - j - 1];
            }
        }
        r[t] = v;
    }
    r
}

fn drop_burn(path: SimPath, burn: usize) -> SimPath {
    SimPath {
        returns: path.returns[burn..].to_vec(),
        eps: path.eps[burn..].to_vec(),
        h: path.h[burn..].to_vec(),
        z: path.z[burn..].to_vec(),
    }
}

pub fn simulate_egarch(params: &EgarchParams, n: usize, burn: usize, seed: u64) -> Result<SimPath> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = n + burn;
    let e_abs = params.dist.abs_moment();
    let mut ln_h = params.unconditional_log_variance();
    let (mut eps, mut h, mut z) = (Vec::with_capacity(total), Vec::with_capacity(total), Vec::with_capacity(total));
    for t in 0..total {
        if t > 0 {
            let zp = z[t - 1];
            ln_h = params.omega + params.a_mag * (abs(zp) - e_abs) + params.xi * zp + params.b_pers * ln_h;
        }
        let ht = exp(ln_h);
        let zt = params.dist.draw(&mut rng);
        h.push(ht);
        z.push(zt);
        eps.push(zt * sqrt(ht));
    }
    let returns = arma_path(&params.mean, &eps);
    Ok(drop_burn(SimPath { returns, eps, h, z }, burn))
}

pub fn simulate_garch11(params: &Garch11Params, n: usize, burn: usize, seed: u64) -> Result<SimPath> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = n + burn;
    let mut ht = params.unconditional_variance();
    let (mut eps, mut h, mut z) = (Vec::with_capacity(total), Vec::with_capacity(total), Vec::with_capacity(total));
    for t in 0..total {
        if t > 0 {
            let e: f64 = eps[t - 1];
            ht = params.alpha0 + params.alpha1 * e * e + params.gamma1 * ht;
        }
        let zt = params.dist.draw(&mut rng);
        h.push(ht);
        z.push(zt);
        eps.push(zt * sqrt(ht));
    }
    let returns = eps.iter().map(|e| params.mu + e).collect();
    Ok(drop_burn(SimPath { returns, eps, h, z }, burn))
}

/// A simulated panel: per-asset paths plus the correlation path.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPanel {
    pub assets: Vec<SimPath>,
    pub r_path: Vec<Matrix>,
}

/// Draws `z` with covariance `chol_l · chol_lᵀ` from the standardized
/// multivariate law.
fn draw_joint(rng: &mut ChaCha8Rng, l: &Matrix, dist: JointDist) -> Vec<f64> {
    let k = l.rows();
    let g: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
    let mut z = l.mul_vec(&g);
    if let JointDist::StudentT { shape } = dist {
        let w = ChiSquared::new(shape).expect("shape validated").sample(rng);
        let s = sqrt((shape - 2.0) / w);
        z.iter_mut().for_each(|v| *v *= s);
    }
    z
}

/// DCC-correlated standardized residuals only; `target` plays the role of
/// `Q̄`.
pub fn simulate_dcc(params: &DccParams, target: &Matrix, n: usize, burn: usize, seed: u64) -> Result<(Vec<Vec<f64>>, Vec<Matrix>)> {
    params.validate()?;
    let k = target.rows();
    target.cholesky()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: Vec<Vec<f64>> = vec![Vec::with_capacity(n); k];
    let mut rs = Vec::with_capacity(n);
    let mut q = target.clone();
    let mut prev: Vec<f64> = vec![0.0; k];
    let w = 1.0 - params.alpha - params.beta;
    for t in 0..n + burn {
        if t > 0 {
            for i in 0..k {
                for j in 0..k {
                    q[(i, j)] = w * target[(i, j)] + params.alpha * prev[i] * prev[j] + params.beta * q[(i, j)];
                }
            }
        }
        let r = rescale(&q);
        let chol = r.cholesky()?;
        let zt = draw_joint(&mut rng, chol.factor(), params.dist);
        if t >= burn {
            for i in 0..k {
                z[i].push(zt[i]);
            }
            rs.push(r);
        }
        prev = zt;
    }
    Ok((z, rs))
}

/// Per-asset EGARCH processes driven by DCC-correlated shocks. Each
/// asset's `dist` should match the marginal of the joint law for the
/// magnitude term to be centred.
pub fn simulate_dcc_egarch(assets: &[EgarchParams], dcc: &DccParams, target: &Matrix, n: usize, burn: usize, seed: u64) -> Result<SimPanel> {
    if assets.len() != target.rows() {
        return Err(Error::LengthMismatch { expected: target.rows(), got: assets.len() });
    }
    for a in assets {
        a.validate()?;
    }
    let (z, r_path) = simulate_dcc(dcc, target, n + burn, 0, seed)?;
    let mut paths = Vec::with_capacity(assets.len());
    for (a, zi) in assets.iter().zip(z) {
        let e_abs = a.dist.abs_moment();
        let mut ln_h = a.unconditional_log_variance();
        let mut h = Vec::with_capacity(zi.len());
        for t in 0..zi.len() {
            if t > 0 {
                let zp = zi[t - 1];
                ln_h = a.omega + a.a_mag * (abs(zp) - e_abs) + a.xi * zp + a.b_pers * ln_h;
            }
            h.push(exp(ln_h));
        }
        let eps: Vec<f64> = zi.iter().zip(&h).map(|(z, h)| z * sqrt(*h)).collect();
        let returns = arma_path(&a.mean, &eps);
        paths.push(drop_burn(SimPath { returns, eps, h, z: zi }, burn));
    }
    Ok(SimPanel { assets: paths, r_path: r_path[burn..].to_vec() })
}

/// Correlation matrix with every off-diagonal equal to `rho`.
pub fn equicorrelation(k: usize, rho: f64) -> Matrix {
    let mut m = Matrix::identity(k);
    for i in 0..k {
        for j in 0..k {
            if i != j {
                m[(i, j)] = rho;
            }
        }
    }
    m
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::InnovationDist;
    use crate::egarch::{egarch_filter, mean_filter};

    #[test]
    fn arma_filter_inverts_simulation() {
        let mean = MeanParams { mu: 0.001, ar: vec![0.4], ma: vec![-0.3] };
        let eps = InnovationDist::Normal.sample(2000, 11).iter().map(|v| v * 0.01).collect::<Vec<_>>();
        let r = arma_path(&mean, &eps);
        let back = mean_filter(&r, &mean).unwrap();
        for t in 200..2000 {
            assert!(abs(back[t] - eps[t]) < 1e-8);
        }
    }

    #[test]
    fn egarch_filter_reproduces_simulated_variance() {
        let p = EgarchParams {
            mean: MeanParams::constant(0.0),
            omega: -0.2,
            a_mag: 0.15,
            xi: -0.08,
            b_pers: 0.95,
            dist: InnovationDist::StudentT { shape: 7.0 },
        };
        let s = simulate_egarch(&p, 3000, 500, 3).unwrap();
        let h = egarch_filter(&s.eps, &p);
        for t in 500..3000 {
            assert!(abs(h[t] / s.h[t] - 1.0) < 1e-8);
        }
        assert_eq!(s, simulate_egarch(&p, 3000, 500, 3).unwrap());
    }

    #[test]
    fn garch_long_run_variance() {
        let p = Garch11Params { mu: 0.0, alpha0: 0.02, alpha1: 0.08, gamma1: 0.9, dist: InnovationDist::Normal };
        let s = simulate_garch11(&p, 200_000, 1000, 5).unwrap();
        let v = s.eps.iter().map(|e| e * e).sum::<f64>() / s.eps.len() as f64;
        assert!(abs(v / p.unconditional_variance() - 1.0) < 0.05, "{v}");
    }

    #[test]
    fn dcc_draws_have_unit_variance() {
        let p = DccParams::new(0.05, 0.9, JointDist::StudentT { shape: 8.0 }).unwrap();
        let (z, rs) = simulate_dcc(&p, &equicorrelation(3, 0.4), 20_000, 200, 9).unwrap();
        assert_eq!(rs.len(), 20_000);
        for s in &z {
            let v = s.iter().map(|x| x * x).sum::<f64>() / s.len() as f64;
            assert!(abs(v - 1.0) < 0.05, "{v}");
        }
    }
}
