//! Monte Carlo risk machinery: bias/variance/MSE estimation with standard
//! errors, supremum over designed theta families, and rate-slope regression
//! across a sample-size grid.
//!
//! Replications are the unit of parallelism. Replication `r` owns the RNG
//! substream `(cfg.seed, r)`; per-replication results are collected in
//! replication order and reduced sequentially, so moments are bit-identical
//! whether the loop runs serially or across any number of threads. Several
//! estimators evaluated against the same `(theta, cfg, reps)` always see
//! the same observation streams.

pub mod checks;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::param_spaces::{q_of_theta, BallSpec, NamedTheta};
use crate::rates::minimax_rate;
use crate::seq_model::{simulate_into, ModelConfig, Observation};

/// Monte Carlo moments of `q_hat - Q(theta)` with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    /// Mean error (Monte Carlo bias estimate).
    pub mean_error: f64,
    /// Unbiased sample variance of the error.
    pub variance: f64,
    /// `mean_error^2 + variance * (reps-1)/reps`, the plug-in MSE; the
    /// identity holds exactly by construction.
    pub mse: f64,
    /// Plug-in standard error of the MSE from the fourth moment.
    pub se_mse: f64,
    pub reps: u64,
    pub theta_id: String,
    pub estimator_id: String,
    pub seed: u64,
    pub n: u64,
}

impl RiskEstimate {
    fn from_errors(
        errors: &[f64],
        theta_id: &str,
        estimator_id: &str,
        cfg: &ModelConfig,
    ) -> RiskEstimate {
        let r = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / r;
        let mut m2 = 0.0;
        let mut m4 = 0.0;
        for &e in errors {
            let d = e - mean;
            m2 += d * d;
            let e2 = e * e;
            m4 += e2 * e2;
        }
        let variance = if errors.len() > 1 { m2 / (r - 1.0) } else { 0.0 };
        let mse = mean * mean + variance * (r - 1.0) / r;
        let m4 = m4 / r;
        let se_mse = ((m4 - mse * mse).max(0.0) / r).sqrt();
        RiskEstimate {
            mean_error: mean,
            variance,
            mse,
            se_mse,
            reps: errors.len() as u64,
            theta_id: theta_id.to_string(),
            estimator_id: estimator_id.to_string(),
            seed: cfg.seed,
            n: cfg.n,
        }
    }
}

/// Per-replication errors of several estimators on shared observation
/// streams, in replication order (column-major: one vector per estimator).
fn replication_errors(
    estimators: &[Estimator],
    theta: &NamedTheta,
    cfg: &ModelConfig,
    reps: u64,
) -> Result<Vec<Vec<f64>>> {
    if reps < 100 {
        return Err(Error::InvalidArgument(format!(
            "reps = {reps} too small: need at least 100"
        )));
    }
    let scheme = cfg.scheme();
    let support = theta.theta.support_len();
    let len = estimators
        .iter()
        .map(|e| e.required_len(&scheme, support, cfg.tail_blocks))
        .max()
        .unwrap_or(0);
    let q_true = q_of_theta(&theta.theta);

    let per_rep: Vec<Result<Vec<f64>>> = (0..reps)
        .into_par_iter()
        .map_init(Vec::new, |buf: &mut Vec<f64>, rep| {
            simulate_into(&theta.theta, cfg, rep, len, buf);
            let obs = Observation::from_parts(cfg.n, std::mem::take(buf))?;
            let mut errs = Vec::with_capacity(estimators.len());
            for est in estimators {
                let value = est.evaluate(&obs, &scheme, &theta.theta)?;
                if !value.is_finite() {
                    return Err(Error::NonFinite {
                        value,
                        context: est.id(),
                        rep,
                    });
                }
                errs.push(value - q_true);
            }
            *buf = obs.into_inner();
            Ok(errs)
        })
        .collect();

    let mut columns = vec![Vec::with_capacity(reps as usize); estimators.len()];
    for rep in per_rep {
        let errs = rep?;
        for (col, e) in columns.iter_mut().zip(errs) {
            col.push(e);
        }
    }
    Ok(columns)
}

/// Monte Carlo risk of several estimators on shared observation streams.
pub fn mc_risk_multi(
    estimators: &[Estimator],
    theta: &NamedTheta,
    cfg: &ModelConfig,
    reps: u64,
) -> Result<Vec<RiskEstimate>> {
    let columns = replication_errors(estimators, theta, cfg, reps)?;
    Ok(estimators
        .iter()
        .zip(&columns)
        .map(|(est, errs)| RiskEstimate::from_errors(errs, &theta.id, &est.id(), cfg))
        .collect())
}

/// Monte Carlo risk of one estimator: `reps` independent simulate+estimate
/// rounds with per-replication substreams.
pub fn mc_risk(
    estimator: &Estimator,
    theta: &NamedTheta,
    cfg: &ModelConfig,
    reps: u64,
) -> Result<RiskEstimate> {
    Ok(
        mc_risk_multi(std::slice::from_ref(estimator), theta, cfg, reps)?
            .pop()
            .expect("one estimator in, one estimate out"),
    )
}

/// Risk of one estimator over a whole family, with the supremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupRisk {
    /// Risk at the family member attaining the maximum MSE.
    pub sup: RiskEstimate,
    /// Provenance of the attaining member.
    pub argmax_theta_id: String,
    /// Risk at every family member, in family order.
    pub per_theta: Vec<RiskEstimate>,
}

/// Supremum of the Monte Carlo MSE over a finite theta family. Ties on the
/// MSE resolve to the lexicographically smallest theta id, so the result
/// does not depend on family order.
pub fn sup_risk(
    estimator: &Estimator,
    family: &[NamedTheta],
    cfg: &ModelConfig,
    reps: u64,
) -> Result<SupRisk> {
    Ok(
        sup_risk_multi(std::slice::from_ref(estimator), family, cfg, reps)?
            .pop()
            .expect("one estimator in, one sup out"),
    )
}

/// [`sup_risk`] for several estimators sharing observation streams.
pub fn sup_risk_multi(
    estimators: &[Estimator],
    family: &[NamedTheta],
    cfg: &ModelConfig,
    reps: u64,
) -> Result<Vec<SupRisk>> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty theta family".into()));
    }
    let mut per_estimator: Vec<Vec<RiskEstimate>> = vec![Vec::new(); estimators.len()];
    for theta in family {
        let risks = mc_risk_multi(estimators, theta, cfg, reps)?;
        for (bucket, risk) in per_estimator.iter_mut().zip(risks) {
            bucket.push(risk);
        }
    }
    Ok(per_estimator
        .into_iter()
        .map(|per_theta| {
            let best = per_theta
                .iter()
                .reduce(|a, b| {
                    if b.mse > a.mse || (b.mse == a.mse && b.theta_id < a.theta_id) {
                        b
                    } else {
                        a
                    }
                })
                .expect("nonempty family")
                .clone();
            SupRisk {
                argmax_theta_id: best.theta_id.clone(),
                sup: best,
                per_theta,
            }
        })
        .collect())
}

/// Ordinary least squares of `log mse` on `log n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub n_grid: Vec<u64>,
    pub log_mse: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `-r` from the minimax rate of the declared ball.
    pub target_slope: f64,
}

/// Fit the empirical risk decay of an estimator against the sample size:
/// sup-risk over `builder(ball, n)` at every grid point, then OLS of
/// `ln mse` on `ln n`. Errors with `DegenerateFit` when any MSE vanishes.
pub fn rate_slope<F>(
    estimator: &Estimator,
    family_builder: F,
    ball: &BallSpec,
    n_grid: &[u64],
    reps: u64,
    seed: u64,
) -> Result<SlopeFit>
where
    F: Fn(&BallSpec, u64) -> Result<Vec<NamedTheta>>,
{
    if n_grid.len() < 4 {
        return Err(Error::InvalidArgument(
            "slope fit needs at least 4 grid points".into(),
        ));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "n grid must be strictly increasing".into(),
        ));
    }
    let mut mses = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let cfg = ModelConfig::new(n, seed)?;
        let family = family_builder(ball, n)?;
        let sup = sup_risk(estimator, &family, &cfg, reps)?;
        mses.push(sup.sup.mse);
    }
    fit_slope(n_grid, &mses, -minimax_rate(ball).r)
}

/// OLS fit of `ln mse` against `ln n` with an annotated target slope.
pub fn fit_slope(n_grid: &[u64], mses: &[f64], target_slope: f64) -> Result<SlopeFit> {
    if mses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
        return Err(Error::DegenerateFit(format!(
            "mse values must be positive and finite: {mses:?}"
        )));
    }
    let xs: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = mses.iter().map(|m| m.ln()).collect();
    let k = xs.len() as f64;
    let x_bar = xs.iter().sum::<f64>() / k;
    let y_bar = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar) * (x - x_bar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_bar) * (y - y_bar))
        .sum();
    let syy: f64 = ys.iter().map(|y| (y - y_bar) * (y - y_bar)).sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(SlopeFit {
        n_grid: n_grid.to_vec(),
        log_mse: ys,
        slope,
        intercept,
        r_squared,
        target_slope,
    })
}

/// Component-wise Monte Carlo MSEs of the oracle-tuned estimator: head,
/// middle (at the oracle cut) and tail against their own mass targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRisk {
    pub xi0_mse: f64,
    pub mid_mse: f64,
    pub tail_mse: f64,
    pub reps: u64,
}

/// Measure the three components of the oracle-tuned estimator separately.
pub fn component_risk(
    ball: &BallSpec,
    theta: &NamedTheta,
    cfg: &ModelConfig,
    reps: u64,
) -> Result<ComponentRisk> {
    use crate::estimators::q_kstar;
    if reps < 100 {
        return Err(Error::InvalidArgument(format!(
            "reps = {reps} too small: need at least 100"
        )));
    }
    let scheme = cfg.scheme();
    let len =
        crate::seq_model::observation_len(&scheme, theta.theta.support_len(), cfg.tail_blocks);
    let m0 = scheme.m0;
    let m_j = scheme.block_end(scheme.j_max);
    let mut xi0_true = 0.0;
    let mut mid_true = 0.0;
    let mut tail_true = 0.0;
    for (idx, c) in theta.theta.coeffs().iter().enumerate() {
        let i = idx as u64 + 1;
        if i <= m0 {
            xi0_true += c * c;
        } else if i <= m_j {
            mid_true += c * c;
        } else {
            tail_true += c * c;
        }
    }

    let per_rep: Vec<Result<[f64; 3]>> = (0..reps)
        .into_par_iter()
        .map_init(Vec::new, |buf: &mut Vec<f64>, rep| {
            simulate_into(&theta.theta, cfg, rep, len, buf);
            let obs = Observation::from_parts(cfg.n, std::mem::take(buf))?;
            let report = q_kstar(&obs, ball, &scheme)?;
            let out = [
                report.xi0 - xi0_true,
                report.xi_mid - mid_true,
                report.xi_tail - tail_true,
            ];
            *buf = obs.into_inner();
            Ok(out)
        })
        .collect();

    let mut acc = [0.0f64; 3];
    let mut count = 0u64;
    for rep in per_rep {
        let errs = rep?;
        for (a, e) in acc.iter_mut().zip(errs) {
            *a += e * e;
        }
        count += 1;
    }
    let r = count as f64;
    Ok(ComponentRisk {
        xi0_mse: acc[0] / r,
        mid_mse: acc[1] / r,
        tail_mse: acc[2] / r,
        reps: count,
    })
}
