//! Estimators of the quadratic functional: the unbiased head estimate, the
//! family of block/term thresholding estimates, the oracle-tuned block cut,
//! the ball-free adaptive maximization, and a plain unbiased baseline.
//!
//! The estimate always splits as `q_hat = xi0 + xi_mid + xi_tail`:
//!
//! * `xi0 = sum_{i <= m0} (Y_i^2 - 1/n)` — unbiased quadratic head,
//! * `xi_k = (sum_{m0 < i <= m_k} Y_i^2 - lambda_k)_+
//!            + sum_{m_k < i <= m_J} [ (Y_i^2 - tau_{k,i}/n)_+ - mu_{k,i} ]`
//!   for `k < J`; `xi_J` keeps only the block term,
//! * `xi_tail = sum_{i > m_J} (Y_i^2 - gamma_i ln n / n)_+` over the
//!   simulated range.
//!
//! Two distinct middles share the name in the literature: the oracle-tuned
//! `xi_{k*}` (needs the ball) and the adaptive `max_k (xi_k - omega_k)`
//! (ball-free). Reports label which one they carry.
//!
//! Floating-point conventions, fixed so that independent straight-line
//! re-evaluations reproduce results bit for bit: all sums run over ascending
//! coordinates; the head estimate is the running sum of squares minus
//! `m0/n`; penalized values are composed as `(xi0 + (xi_k - omega_k)) +
//! xi_tail`, which makes the maximized form and the three-part sum agree
//! exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss;
use crate::param_spaces::{q_of_theta, BallSpec};
use crate::seq_model::{
    lambda_k, observation_len, omega_k_with, tail_truncation_bound, BlockScheme, Observation,
    ThetaVector, DEFAULT_PENALTY,
};

/// Which middle component an [`EstimateReport`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MidKind {
    /// Ball-dependent `xi_{k*}` at the oracle block cut.
    Oracle { k_star: usize },
    /// Ball-free penalized maximum over `k`.
    Adaptive,
}

/// A quadratic-functional estimate with its component breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub q_hat: f64,
    pub xi0: f64,
    pub xi_mid: f64,
    pub xi_tail: f64,
    pub mid: MidKind,
    /// Adaptive only: the argmax block (smallest index on exact ties).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax_k: Option<usize>,
    /// Adaptive only: all J penalized values `Q_k - omega_k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_k_penalized: Option<Vec<f64>>,
    /// Upper bound on the expected mass of the un-simulated tail.
    pub tail_truncation_bound: f64,
    /// True when the raw value was clipped at zero (off by default).
    pub clipped: bool,
}

impl EstimateReport {
    /// Clip the reported value at zero, recording that this was done.
    pub fn clipped_at_zero(mut self) -> Self {
        self.q_hat = self.q_hat.max(0.0);
        self.clipped = true;
        self
    }
}

fn require_len(obs: &Observation, need: u64) -> Result<()> {
    if (obs.len() as u64) < need {
        Err(Error::ObservationTooShort {
            len: obs.len(),
            need: need as usize,
        })
    } else {
        Ok(())
    }
}

/// Unbiased head estimate `xi0 = sum_{i <= m0} Y_i^2 - m0/n`.
pub fn xi0_hat(obs: &Observation, scheme: &BlockScheme) -> Result<f64> {
    require_len(obs, scheme.m0)?;
    let mut sum = 0.0;
    for &y in &obs.values()[..scheme.m0 as usize] {
        sum += y * y;
    }
    Ok(sum - scheme.m0 as f64 / scheme.n as f64)
}

/// Unbiased baseline `sum_{i <= upto} (Y_i^2 - 1/n)` for the truncated
/// functional; evaluated as the running sum of squares minus `upto/n`.
pub fn unbiased_baseline(obs: &Observation, upto: usize) -> Result<f64> {
    require_len(obs, upto as u64)?;
    let mut sum = 0.0;
    for &y in &obs.values()[..upto] {
        sum += y * y;
    }
    Ok(sum - upto as f64 / obs.n as f64)
}

/// Per-scheme constants shared by the thresholding estimators.
struct Tables {
    /// `lambda_k` for k = 1..=J (index 0 unused).
    lambda: Vec<f64>,
    /// `g(2t)/n` for t = 0..=J (index 0 unused).
    mu_for_gap: Vec<f64>,
}

fn tables(scheme: &BlockScheme) -> Tables {
    let j = scheme.j_max;
    let n = scheme.n as f64;
    let mut lambda = vec![0.0; j + 1];
    for (k, l) in lambda.iter_mut().enumerate().skip(1) {
        *l = lambda_k(k, scheme).expect("k in range");
    }
    let mut mu_for_gap = vec![0.0; j + 1];
    for (t, m) in mu_for_gap.iter_mut().enumerate().skip(1) {
        *m = gauss::pos_part_mean(2.0 * t as f64) / n;
    }
    Tables { lambda, mu_for_gap }
}

fn xi_k_eval(obs: &Observation, k: usize, scheme: &BlockScheme, tables: &Tables) -> f64 {
    let n = scheme.n as f64;
    let y = obs.values();
    let m0 = scheme.m0 as usize;
    let m_k = scheme.block_end(k) as usize;
    let mut block_sum = 0.0;
    for &v in &y[m0..m_k] {
        block_sum += v * v;
    }
    let block_part = (block_sum - tables.lambda[k]).max(0.0);
    let mut term_acc = 0.0;
    for b in (k + 1)..=scheme.j_max {
        let t = b - k;
        let thr = 2.0 * t as f64 / n;
        let mu = tables.mu_for_gap[t];
        let lo = scheme.block_end(b - 1) as usize;
        let hi = scheme.block_end(b) as usize;
        for &v in &y[lo..hi] {
            term_acc += (v * v - thr).max(0.0) - mu;
        }
    }
    block_part + term_acc
}

/// Thresholding estimate `xi_k` of the middle mass, for `1 <= k <= J`.
/// `k = J` keeps only the block term (the natural limit of the family).
pub fn xi_k_hat(obs: &Observation, k: usize, scheme: &BlockScheme) -> Result<f64> {
    if k < 1 || k > scheme.j_max {
        return Err(Error::BlockOutOfRange {
            k,
            min: 1,
            max: scheme.j_max,
        });
    }
    require_len(obs, scheme.block_end(scheme.j_max))?;
    Ok(xi_k_eval(obs, k, scheme, &tables(scheme)))
}

/// Oracle block cut: the largest `k* >= 1` with
/// `m_{k*} <= max(2 m0, n^{p*/(1+2 p* s*)} (ln n)^{-1/(1+2 p* s*)})`,
/// clamped to the available family `1..=J`. Free of the radius `M`.
pub fn k_star(ball: &BallSpec, scheme: &BlockScheme) -> usize {
    let nf = scheme.n as f64;
    let denom = 1.0 + 2.0 * ball.p_star() * ball.s_star();
    let cut = nf.powf(ball.p_star() / denom) * nf.ln().powf(-1.0 / denom);
    let bound = ((2 * scheme.m0) as f64).max(cut);
    let mut k = 1usize;
    while k + 1 <= scheme.j_max && (scheme.block_end(k + 1) as f64) <= bound {
        k += 1;
    }
    k
}

/// Tail estimate over the simulated range:
/// `sum_{i > m_J} (Y_i^2 - gamma_i ln n / n)_+`. Always nonnegative.
pub fn xi_tail_hat(obs: &Observation, scheme: &BlockScheme) -> Result<f64> {
    let m_j = scheme.block_end(scheme.j_max);
    require_len(obs, m_j)?;
    let n = scheme.n as f64;
    let ln_n = scheme.ln_n();
    let y = obs.values();
    let mut acc = 0.0;
    let mut lo = m_j as usize;
    let mut block_len = m_j as usize;
    let mut t = 1u32;
    while lo < y.len() {
        let gamma = 2.0 * (t as f64 + 1.0);
        let thr = gamma * ln_n / n;
        let hi = (lo + block_len).min(y.len());
        for &v in &y[lo..hi] {
            acc += (v * v - thr).max(0.0);
        }
        lo = hi;
        block_len *= 2;
        t += 1;
    }
    Ok(acc)
}

/// Ball-tuned estimate: `xi0 + xi_{k*} + xi_tail` at the oracle cut.
pub fn q_kstar(obs: &Observation, ball: &BallSpec, scheme: &BlockScheme) -> Result<EstimateReport> {
    require_len(obs, scheme.block_end(scheme.j_max))?;
    let tbl = tables(scheme);
    let ks = k_star(ball, scheme);
    let xi0 = xi0_hat(obs, scheme)?;
    let xi_mid = xi_k_eval(obs, ks, scheme, &tbl);
    let xi_tail = xi_tail_hat(obs, scheme)?;
    Ok(EstimateReport {
        q_hat: (xi0 + xi_mid) + xi_tail,
        xi0,
        xi_mid,
        xi_tail,
        mid: MidKind::Oracle { k_star: ks },
        argmax_k: None,
        per_k_penalized: None,
        tail_truncation_bound: tail_truncation_bound(scheme, obs.len()),
        clipped: false,
    })
}

/// Ball-free adaptive estimate with an explicit penalty multiplier:
/// `q_hat = max_k { xi0 + xi_k + xi_tail - penalty sqrt(m_k ln n)/n }`.
pub fn q_adaptive_with_penalty(
    obs: &Observation,
    scheme: &BlockScheme,
    penalty: f64,
) -> Result<EstimateReport> {
    require_len(obs, scheme.block_end(scheme.j_max))?;
    let tbl = tables(scheme);
    let xi0 = xi0_hat(obs, scheme)?;
    let xi_tail = xi_tail_hat(obs, scheme)?;
    let j = scheme.j_max;
    let mut best_k = 1usize;
    let mut best = f64::NEG_INFINITY;
    let mut penalized = Vec::with_capacity(j);
    for k in 1..=j {
        let d = xi_k_eval(obs, k, scheme, &tbl) - omega_k_with(penalty, k, scheme);
        penalized.push((xi0 + d) + xi_tail);
        if d > best {
            best = d;
            best_k = k;
        }
    }
    Ok(EstimateReport {
        q_hat: (xi0 + best) + xi_tail,
        xi0,
        xi_mid: best,
        xi_tail,
        mid: MidKind::Adaptive,
        argmax_k: Some(best_k),
        per_k_penalized: Some(penalized),
        tail_truncation_bound: tail_truncation_bound(scheme, obs.len()),
        clipped: false,
    })
}

/// Ball-free adaptive estimate with the default penalty multiplier 6.
pub fn q_adaptive(obs: &Observation, scheme: &BlockScheme) -> Result<EstimateReport> {
    q_adaptive_with_penalty(obs, scheme, DEFAULT_PENALTY)
}

/// Estimator selector for experiments; evaluation is a pure function of
/// `(observation, parameters)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Estimator {
    QAdaptive { penalty: f64 },
    QKstar { ball: BallSpec },
    UnbiasedBaseline { upto: usize },
    /// Zero-error dummy that returns `Q(theta)` itself.
    PluginOracle,
}

impl Estimator {
    pub fn adaptive() -> Self {
        Estimator::QAdaptive {
            penalty: DEFAULT_PENALTY,
        }
    }

    pub fn id(&self) -> String {
        match self {
            Estimator::QAdaptive { penalty } => format!("q_adaptive(penalty={penalty})"),
            Estimator::QKstar { ball } => format!("q_kstar[{}]", ball.label()),
            Estimator::UnbiasedBaseline { upto } => format!("unbiased_baseline(upto={upto})"),
            Estimator::PluginOracle => "plugin_oracle".into(),
        }
    }

    /// Shortest observation prefix the estimator reads.
    pub fn required_len(
        &self,
        scheme: &BlockScheme,
        support_len: usize,
        tail_blocks: usize,
    ) -> usize {
        match self {
            Estimator::QAdaptive { .. } | Estimator::QKstar { .. } => {
                observation_len(scheme, support_len, tail_blocks)
            }
            Estimator::UnbiasedBaseline { upto } => *upto,
            Estimator::PluginOracle => 0,
        }
    }

    pub fn evaluate(
        &self,
        obs: &Observation,
        scheme: &BlockScheme,
        theta: &ThetaVector,
    ) -> Result<f64> {
        match self {
            Estimator::QAdaptive { penalty } => {
                Ok(q_adaptive_with_penalty(obs, scheme, *penalty)?.q_hat)
            }
            Estimator::QKstar { ball } => Ok(q_kstar(obs, ball, scheme)?.q_hat),
            Estimator::UnbiasedBaseline { upto } => unbiased_baseline(obs, *upto),
            Estimator::PluginOracle => Ok(q_of_theta(theta)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq_model::{
        block_scheme, gamma, mu_ki, omega_k, simulate_rep, tau, ModelConfig,
    };
    use approx::assert_relative_eq;

    fn zero_obs(n: u64, len: usize) -> Observation {
        Observation::from_parts(n, vec![0.0; len]).unwrap()
    }

    #[test]
    fn xi0_on_zero_observation_is_minus_m0_over_n() {
        let s = block_scheme(1024).unwrap();
        let obs = zero_obs(1024, s.m0 as usize);
        assert_eq!(xi0_hat(&obs, &s).unwrap(), -(s.m0 as f64) / 1024.0);
    }

    #[test]
    fn xi0_cancels_at_height_one_over_sqrt_n() {
        let s = block_scheme(1024).unwrap();
        let h = 1.0 / 1024f64.sqrt();
        let obs = Observation::from_parts(1024, vec![h; s.m0 as usize]).unwrap();
        assert!(xi0_hat(&obs, &s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn xi0_rejects_short_observation() {
        let s = block_scheme(1024).unwrap();
        let obs = zero_obs(1024, s.m0 as usize - 1);
        assert!(matches!(
            xi0_hat(&obs, &s),
            Err(Error::ObservationTooShort { .. })
        ));
    }

    #[test]
    fn xi_k_on_zero_observation_is_minus_sum_of_mu() {
        let s = block_scheme(256).unwrap();
        let m_j = s.block_end(s.j_max) as usize;
        let obs = zero_obs(256, m_j);
        for k in 1..=s.j_max {
            let mut expect = 0.0;
            for i in (s.block_end(k) + 1)..=(m_j as u64) {
                expect -= mu_ki(k, i, &s).unwrap();
            }
            let got = xi_k_hat(&obs, k, &s).unwrap();
            assert_eq!(got, 0.0 + expect, "k = {k}");
            if k < s.j_max {
                assert!(got < 0.0);
            }
        }
    }

    #[test]
    fn xi_k_single_active_term() {
        let s = block_scheme(256).unwrap();
        let m_j = s.block_end(s.j_max);
        let k = 2;
        let i0 = s.block_end(k) + 3;
        let t = 0.9;
        let mut y = vec![0.0; m_j as usize];
        y[i0 as usize - 1] = t;
        let obs = Observation::from_parts(256, y).unwrap();
        let tau_i0 = tau(k, i0, &s).unwrap() as f64;
        assert!(t * t > tau_i0 / 256.0);
        let mut mu_sum = 0.0;
        for i in (s.block_end(k) + 1)..=m_j {
            mu_sum += mu_ki(k, i, &s).unwrap();
        }
        let expect = (t * t - tau_i0 / 256.0) - mu_sum;
        assert_relative_eq!(
            xi_k_hat(&obs, k, &s).unwrap(),
            expect,
            max_relative = 1e-12
        );
    }

    #[test]
    fn xi_k_rejects_out_of_range_k() {
        let s = block_scheme(256).unwrap();
        let obs = zero_obs(256, s.block_end(s.j_max) as usize);
        assert!(xi_k_hat(&obs, 0, &s).is_err());
        assert!(xi_k_hat(&obs, s.j_max + 1, &s).is_err());
    }

    /// Straight-line re-evaluation of the middle estimate at the oracle cut,
    /// written against the public per-index primitives only.
    fn xi_mid_oracle_straight_line(obs: &Observation, ball: &BallSpec, s: &BlockScheme) -> f64 {
        let ks = k_star(ball, s);
        let n = s.n as f64;
        let mut block = 0.0;
        for i in (s.m0 + 1)..=s.block_end(ks) {
            block += obs.y(i) * obs.y(i);
        }
        let block_part = (block - lambda_k(ks, s).unwrap()).max(0.0);
        let mut term = 0.0;
        for i in (s.block_end(ks) + 1)..=s.block_end(s.j_max) {
            let thr = tau(ks, i, s).unwrap() as f64 / n;
            term += (obs.y(i) * obs.y(i) - thr).max(0.0) - mu_ki(ks, i, s).unwrap();
        }
        block_part + term
    }

    #[test]
    fn oracle_mid_matches_straight_line_bit_for_bit() {
        let ball = BallSpec::lp(2.0, 0.125, 1.0).unwrap();
        let cfg = ModelConfig::new(256, 11).unwrap();
        let s = cfg.scheme();
        let theta = ThetaVector::new(vec![0.3, -0.1, 0.0, 0.25]).unwrap();
        for rep in 0..100 {
            let obs = simulate_rep(&theta, &cfg, rep);
            let via_family = xi_k_hat(&obs, k_star(&ball, &s), &s).unwrap();
            let straight = xi_mid_oracle_straight_line(&obs, &ball, &s);
            assert_eq!(via_family, straight, "rep {rep}");
        }
    }

    #[test]
    fn k_star_hand_examples() {
        let s = block_scheme(1024).unwrap();
        // p = 2, alpha = 1: cut ~ 10.9 < 2 m0 = 42, so k* = 1
        assert_eq!(k_star(&BallSpec::lp(2.0, 1.0, 1.0).unwrap(), &s), 1);
        // p = 2, alpha = 1/8: cut ~ 2839, m_7 = 2688 <= cut < m_8
        assert_eq!(k_star(&BallSpec::lp(2.0, 0.125, 1.0).unwrap(), &s), 7);
    }

    #[test]
    fn k_star_ignores_radius() {
        let s = block_scheme(4096).unwrap();
        for (p, a) in [(2.0, 0.125), (1.5, 0.3), (2.0, 1.0)] {
            let k1 = k_star(&BallSpec::lp(p, a, 1.0).unwrap(), &s);
            let k2 = k_star(&BallSpec::lp(p, a, 2.0).unwrap(), &s);
            assert_eq!(k1, k2);
        }
    }

    #[test]
    fn tail_on_zero_observation_is_zero() {
        let s = block_scheme(256).unwrap();
        let obs = zero_obs(256, 4 * s.block_end(s.j_max) as usize);
        assert_eq!(xi_tail_hat(&obs, &s).unwrap(), 0.0);
    }

    #[test]
    fn tail_single_spike() {
        let s = block_scheme(256).unwrap();
        let m_j = s.block_end(s.j_max);
        let i0 = 2 * m_j + 5; // second tail block, gamma = 6
        let t = 0.8;
        let mut y = vec![0.0; 4 * m_j as usize];
        y[i0 as usize - 1] = t;
        let obs = Observation::from_parts(256, y).unwrap();
        let g = gamma(i0, &s).unwrap() as f64;
        assert_eq!(g, 6.0);
        let thr = g * 256f64.ln() / 256.0;
        assert!(t * t > thr);
        assert_relative_eq!(
            xi_tail_hat(&obs, &s).unwrap(),
            t * t - thr,
            max_relative = 1e-12
        );
    }

    #[test]
    fn tail_is_zero_when_nothing_extends_past_m_j() {
        let s = block_scheme(256).unwrap();
        let obs = zero_obs(256, s.block_end(s.j_max) as usize);
        assert_eq!(xi_tail_hat(&obs, &s).unwrap(), 0.0);
    }

    #[test]
    fn q_kstar_components_sum_exactly() {
        let ball = BallSpec::lp(2.0, 0.5, 1.0).unwrap();
        let cfg = ModelConfig::new(256, 5).unwrap();
        let theta = ThetaVector::spike(1, 1.0).unwrap();
        let obs = simulate_rep(&theta, &cfg, 0);
        let r = q_kstar(&obs, &ball, &cfg.scheme()).unwrap();
        assert_eq!(r.q_hat, (r.xi0 + r.xi_mid) + r.xi_tail);
        assert!(matches!(r.mid, MidKind::Oracle { .. }));
        assert!(r.argmax_k.is_none());
    }

    #[test]
    fn q_kstar_on_zero_observation_matches_closed_form() {
        let ball = BallSpec::lp(2.0, 0.125, 1.0).unwrap();
        let s = block_scheme(256).unwrap();
        let obs = zero_obs(256, 4 * s.block_end(s.j_max) as usize);
        let r = q_kstar(&obs, &ball, &s).unwrap();
        let ks = k_star(&ball, &s);
        let mut mu_sum = 0.0;
        for i in (s.block_end(ks) + 1)..=s.block_end(s.j_max) {
            mu_sum += mu_ki(ks, i, &s).unwrap();
        }
        let expect = (-(s.m0 as f64) / 256.0 + -mu_sum) + 0.0;
        assert_eq!(r.q_hat, expect);
        assert!(r.q_hat < 0.0);
    }

    #[test]
    fn adaptive_report_structure() {
        let cfg = ModelConfig::new(256, 9).unwrap();
        let s = cfg.scheme();
        let theta = ThetaVector::new(vec![0.4, 0.1]).unwrap();
        let obs = simulate_rep(&theta, &cfg, 0);
        let r = q_adaptive(&obs, &s).unwrap();
        let per_k = r.per_k_penalized.as_ref().unwrap();
        assert_eq!(per_k.len(), s.j_max);
        let max = per_k.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.q_hat, max);
        assert_eq!(per_k[r.argmax_k.unwrap() - 1], max);
        assert_eq!(r.q_hat, (r.xi0 + r.xi_mid) + r.xi_tail);
        assert_eq!(r.mid, MidKind::Adaptive);
    }

    #[test]
    fn adaptive_equals_component_form_bit_for_bit() {
        let cfg = ModelConfig::new(512, 31).unwrap();
        let s = cfg.scheme();
        let theta = ThetaVector::new(vec![0.2, -0.6, 0.05]).unwrap();
        for rep in 0..100 {
            let obs = simulate_rep(&theta, &cfg, rep);
            let r = q_adaptive(&obs, &s).unwrap();
            // component form: xi0 + max_k (xi_k - omega_k) + xi_tail
            let xi0 = xi0_hat(&obs, &s).unwrap();
            let xi_tail = xi_tail_hat(&obs, &s).unwrap();
            let mut best = f64::NEG_INFINITY;
            for k in 1..=s.j_max {
                let d = xi_k_hat(&obs, k, &s).unwrap() - omega_k(k, &s);
                best = best.max(d);
            }
            assert_eq!(r.q_hat, (xi0 + best) + xi_tail, "rep {rep}");
        }
    }

    #[test]
    fn adaptive_dominates_every_penalized_component() {
        let cfg = ModelConfig::new(512, 77).unwrap();
        let s = cfg.scheme();
        let theta = ThetaVector::new(vec![0.1, 0.0, 0.0, 0.5, -0.2]).unwrap();
        for rep in 0..50 {
            let obs = simulate_rep(&theta, &cfg, rep);
            let r = q_adaptive(&obs, &s).unwrap();
            let xi0 = xi0_hat(&obs, &s).unwrap();
            let xi_tail = xi_tail_hat(&obs, &s).unwrap();
            for k in 1..=s.j_max {
                let candidate =
                    (xi0 + (xi_k_hat(&obs, k, &s).unwrap() - omega_k(k, &s))) + xi_tail;
                assert!(r.q_hat >= candidate, "rep {rep}, k {k}");
            }
        }
    }

    #[test]
    fn adaptive_straight_line_recomputation_at_zero_signal() {
        // full re-derivation from the raw observation, using only index
        // primitives and plain ascending loops
        let cfg = ModelConfig::new(256, 123).unwrap();
        let s = cfg.scheme();
        let obs = simulate_rep(&ThetaVector::zero(), &cfg, 0);
        let n = s.n as f64;

        let mut xi0 = 0.0;
        for i in 1..=s.m0 {
            xi0 += obs.y(i) * obs.y(i);
        }
        xi0 -= s.m0 as f64 / n;

        let m_j = s.block_end(s.j_max);
        let mut xi_tail = 0.0;
        for i in (m_j + 1)..=(obs.len() as u64) {
            let thr = gamma(i, &s).unwrap() as f64 * n.ln() / n;
            xi_tail += (obs.y(i) * obs.y(i) - thr).max(0.0);
        }

        let mut best = f64::NEG_INFINITY;
        for k in 1..=s.j_max {
            let mut block = 0.0;
            for i in (s.m0 + 1)..=s.block_end(k) {
                block += obs.y(i) * obs.y(i);
            }
            let mut xi_k = (block - lambda_k(k, &s).unwrap()).max(0.0);
            let mut term = 0.0;
            if k < s.j_max {
                for i in (s.block_end(k) + 1)..=m_j {
                    let thr = tau(k, i, &s).unwrap() as f64 / n;
                    term += (obs.y(i) * obs.y(i) - thr).max(0.0) - mu_ki(k, i, &s).unwrap();
                }
            }
            xi_k += term;
            let d = xi_k - omega_k(k, &s);
            if d > best {
                best = d;
            }
        }
        let expected = (xi0 + best) + xi_tail;
        assert_eq!(q_adaptive(&obs, &s).unwrap().q_hat, expected);
    }

    #[test]
    fn zero_penalty_picks_plain_maximum() {
        let cfg = ModelConfig::new(256, 4).unwrap();
        let s = cfg.scheme();
        let obs = simulate_rep(&ThetaVector::zero(), &cfg, 0);
        let r = q_adaptive_with_penalty(&obs, &s, 0.0).unwrap();
        let mut best = f64::NEG_INFINITY;
        for k in 1..=s.j_max {
            best = best.max(xi_k_hat(&obs, k, &s).unwrap());
        }
        assert_eq!(r.xi_mid, best);
    }

    #[test]
    fn baseline_on_zero_observation() {
        let obs = zero_obs(1024, 100);
        assert_eq!(unbiased_baseline(&obs, 100).unwrap(), -100.0 / 1024.0);
    }

    #[test]
    fn baseline_at_m0_equals_xi0() {
        let cfg = ModelConfig::new(1024, 8).unwrap();
        let s = cfg.scheme();
        let obs = simulate_rep(&ThetaVector::new(vec![0.5; 10]).unwrap(), &cfg, 0);
        assert_eq!(
            unbiased_baseline(&obs, s.m0 as usize).unwrap(),
            xi0_hat(&obs, &s).unwrap()
        );
    }

    #[test]
    fn clipping_is_recorded() {
        let ball = BallSpec::lp(2.0, 0.5, 1.0).unwrap();
        let s = block_scheme(256).unwrap();
        let obs = zero_obs(256, 4 * s.block_end(s.j_max) as usize);
        let raw = q_kstar(&obs, &ball, &s).unwrap();
        assert!(raw.q_hat < 0.0 && !raw.clipped);
        let clipped = raw.clipped_at_zero();
        assert_eq!(clipped.q_hat, 0.0);
        assert!(clipped.clipped);
    }

    #[test]
    fn estimator_ids_and_required_len() {
        let s = block_scheme(256).unwrap();
        let full = observation_len(&s, 0, 2);
        assert_eq!(Estimator::adaptive().required_len(&s, 0, 2), full);
        assert_eq!(
            Estimator::UnbiasedBaseline { upto: 17 }.required_len(&s, 0, 2),
            17
        );
        assert!(Estimator::adaptive().id().contains("q_adaptive"));
        assert_eq!(Estimator::PluginOracle.id(), "plugin_oracle");
    }

    #[test]
    fn report_serializes_all_fields() {
        let cfg = ModelConfig::new(256, 9).unwrap();
        let obs = simulate_rep(&ThetaVector::zero(), &cfg, 0);
        let r = q_adaptive(&obs, &cfg.scheme()).unwrap();
        let js = serde_json::to_string(&r).unwrap();
        for key in [
            "q_hat",
            "xi0",
            "xi_mid",
            "xi_tail",
            "argmax_k",
            "per_k_penalized",
            "tail_truncation_bound",
        ] {
            assert!(js.contains(key), "missing {key} in {js}");
        }
        let back: EstimateReport = serde_json::from_str(&js).unwrap();
        assert_eq!(back, r);
    }
}
