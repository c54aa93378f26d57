//! Numerical check suites for the moment identities and bounds the
//! thresholding estimators rely on, plus the block-geometry consistency
//! checks. Every entry reports pass/fail with the offending parameter, so
//! the suites double as a self-test command.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss;
use crate::quad::integrate;
use crate::seq_model::{block_scheme, gamma, rep_rng, tau};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CheckReport {
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: String) {
        self.checks.push(CheckResult {
            name: name.into(),
            passed,
            detail,
        });
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Quadrature evaluation of `E (Z^2 - tau)_+ = int_{sqrt(tau)}^inf
/// (z^2 - tau) 2 phi(z) dz`, used as the independent route against the
/// closed form.
pub fn pos_part_mean_by_quadrature(tau: f64) -> f64 {
    let a = tau.sqrt();
    integrate(
        &|z: f64| (z * z - tau) * 2.0 * gauss::phi(z),
        a,
        a + 45.0,
        1e-12,
    )
}

/// Moment-bound suite over a threshold grid, with the production closed
/// form for the centering constant.
///
/// Per threshold `tau`: (a) closed form vs quadrature to 1e-10 relative,
/// (b) the mean bound `0 < g(tau) <= 4 phi(sqrt tau)/sqrt tau`, (c) the
/// exact variance against its tail bound, (d) a Monte Carlo check of the
/// shifted variance bound `Var (X^2 - tau)_+ <= 6 theta^2 +
/// (4 sqrt(tau) + 18) e^{-tau/2}` for `X ~ N(theta, 1)` over a theta grid,
/// within 3 Monte Carlo standard errors.
pub fn lemma1_suite(tau_grid: &[f64], reps: u64, seed: u64) -> Result<CheckReport> {
    lemma1_suite_with_mean_fn(&gauss::pos_part_mean, tau_grid, reps, seed)
}

/// [`lemma1_suite`] with an injectable closed form, so a wrong centering
/// constant is caught by the suite itself (negative-control hook).
pub fn lemma1_suite_with_mean_fn(
    mean_fn: &dyn Fn(f64) -> f64,
    tau_grid: &[f64],
    reps: u64,
    seed: u64,
) -> Result<CheckReport> {
    if tau_grid.iter().any(|&t| !(1.0..=40.0).contains(&t)) {
        return Err(Error::InvalidArgument(
            "tau grid must lie in [1, 40]".into(),
        ));
    }
    if reps < 1000 {
        return Err(Error::InvalidArgument(
            "moment suite needs at least 1000 replications".into(),
        ));
    }
    let mut report = CheckReport::default();
    for &tau in tau_grid {
        let g = mean_fn(tau);
        let q = pos_part_mean_by_quadrature(tau);
        let rel = (g - q).abs() / q.abs().max(f64::MIN_POSITIVE);
        report.push(
            format!("closed_form_vs_quadrature(tau={tau})"),
            rel < 1e-10,
            format!("closed = {g:.15e}, quadrature = {q:.15e}, rel = {rel:.3e}"),
        );

        let mean_bound = gauss::pos_part_mean_bound(tau);
        report.push(
            format!("mean_bound(tau={tau})"),
            g > 0.0 && g <= mean_bound,
            format!("g = {g:.6e}, bound = {mean_bound:.6e}"),
        );

        let v = gauss::pos_part_second_moment(tau) - g * g;
        let v_bound = gauss::pos_part_variance_bound(tau);
        report.push(
            format!("variance_bound(tau={tau})"),
            v > 0.0 && v <= v_bound,
            format!("V = {v:.6e}, bound = {v_bound:.6e}"),
        );

        let root = tau.sqrt();
        let thetas = [0.0, 0.5, 1.0, 0.5 * root, root, 2.0 * root];
        for (ti, &theta) in thetas.iter().enumerate() {
            let (var, se) = mc_shifted_pos_part_variance(theta, tau, reps, seed, ti as u64);
            let bound = gauss::shifted_pos_part_variance_bound(theta, tau);
            report.push(
                format!("mc_shifted_variance(tau={tau},theta={theta:.4})"),
                var <= bound + 3.0 * se,
                format!("mc var = {var:.6e} (se {se:.2e}), bound = {bound:.6e}"),
            );
        }
    }
    Ok(report)
}

/// Sample variance of `(X^2 - tau)_+`, `X ~ N(theta, 1)`, with its plug-in
/// standard error.
fn mc_shifted_pos_part_variance(
    theta: f64,
    tau: f64,
    reps: u64,
    seed: u64,
    stream: u64,
) -> (f64, f64) {
    let mut rng = rep_rng(seed ^ 0x6c31_u64, stream);
    let mut values = Vec::with_capacity(reps as usize);
    for _ in 0..reps {
        let z: f64 = StandardNormal.sample(&mut rng);
        let x = theta + z;
        values.push((x * x - tau).max(0.0));
    }
    let r = reps as f64;
    let mean = values.iter().sum::<f64>() / r;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for v in &values {
        let d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    let var = m2 / (r - 1.0);
    let m4 = m4 / r;
    let se = ((m4 - var * var).max(0.0) / r).sqrt();
    (var, se)
}

/// Empirical survival-function dominance for the blockwise positive-part
/// sum: with `X_i = theta_i + Z_i` and fixed `xi = sum theta_i^2`, the sum
/// `sum_i (X_i^2 - lambda)_+` should be stochastically largest when all of
/// `xi` sits in one coordinate.
///
/// Compares the spike allocation against three alternatives (even split and
/// two partial concentrations) on the grid `x = 0.5, 1.0, ..., 4.0`; passes
/// where the spike survival is at least the alternative survival minus
/// 3 Monte Carlo standard errors of the difference.
pub fn lemma2_dominance(
    xi: f64,
    lambda: f64,
    m: usize,
    reps: u64,
    seed: u64,
) -> Result<CheckReport> {
    if !(2..=4).contains(&m) {
        return Err(Error::InvalidArgument("m must be 2, 3 or 4".into()));
    }
    if reps < 100_000 {
        return Err(Error::InvalidArgument(
            "dominance check needs at least 1e5 replications".into(),
        ));
    }
    if !(xi > 0.0) || lambda < 0.0 {
        return Err(Error::InvalidArgument(
            "need xi > 0 and lambda >= 0".into(),
        ));
    }

    let x_grid: Vec<f64> = (1..=8).map(|i| 0.5 * i as f64).collect();
    let spike = allocation(xi, m, 1.0);
    let alternatives = [
        ("even", allocation(xi, m, 1.0 / m as f64)),
        ("front_0.75", allocation(xi, m, 0.75)),
        ("front_0.9", allocation(xi, m, 0.9)),
    ];

    let spike_surv = survival_curve(&spike, lambda, &x_grid, reps, seed, 0);
    let mut report = CheckReport::default();
    for (alloc_idx, (name, alloc)) in alternatives.iter().enumerate() {
        let alt_surv = survival_curve(alloc, lambda, &x_grid, reps, seed, 1 + alloc_idx as u64);
        for (xi_idx, &x) in x_grid.iter().enumerate() {
            let p_spike = spike_surv[xi_idx];
            let p_alt = alt_surv[xi_idx];
            let se_diff = ((p_spike * (1.0 - p_spike) + p_alt * (1.0 - p_alt)) / reps as f64)
                .sqrt();
            report.push(
                format!("dominance(alloc={name},x={x})"),
                p_spike >= p_alt - 3.0 * se_diff,
                format!("spike = {p_spike:.5}, alt = {p_alt:.5}, se_diff = {se_diff:.2e}"),
            );
        }
    }
    Ok(report)
}

/// Energy allocation putting `front` of `xi` on the first coordinate and
/// spreading the rest evenly. `front = 1` is the spike.
fn allocation(xi: f64, m: usize, front: f64) -> Vec<f64> {
    let mut theta = vec![0.0; m];
    theta[0] = (xi * front).sqrt();
    if m > 1 && front < 1.0 {
        let rest = (xi * (1.0 - front) / (m - 1) as f64).sqrt();
        for t in theta.iter_mut().skip(1) {
            *t = rest;
        }
    }
    theta
}

fn survival_curve(
    theta: &[f64],
    lambda: f64,
    x_grid: &[f64],
    reps: u64,
    seed: u64,
    stream: u64,
) -> Vec<f64> {
    let mut rng = rep_rng(seed ^ 0x6c32_u64, stream);
    let mut counts = vec![0u64; x_grid.len()];
    for _ in 0..reps {
        let mut s = 0.0;
        for &t in theta {
            let z: f64 = StandardNormal.sample(&mut rng);
            let x = t + z;
            s += (x * x - lambda).max(0.0);
        }
        for (c, &x) in counts.iter_mut().zip(x_grid) {
            if s >= x {
                *c += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|c| c as f64 / reps as f64)
        .collect()
}

/// Block-geometry consistency checks: the blocks partition the index range
/// and the dyadic-ceiling thresholds agree with their block-constant
/// restatements, through two simulated tail blocks.
pub fn scheme_consistency_suite(n_values: &[u64]) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    for &n in n_values {
        let s = block_scheme(n)?;
        let mut partition_ok = true;
        let mut next = s.m0 + 1;
        for k in 1..=s.j_max {
            let (lo, hi) = s.block_range(k);
            if lo != next || hi < lo {
                partition_ok = false;
            }
            next = hi + 1;
        }
        report.push(
            format!("block_partition(n={n})"),
            partition_ok,
            format!("m0 = {}, J = {}", s.m0, s.j_max),
        );

        let mut tau_ok = true;
        for k in 1..s.j_max {
            for b in (k + 1)..=s.j_max {
                let (lo, hi) = s.block_range(b);
                for i in [lo, (lo + hi) / 2, hi] {
                    if tau(k, i, &s)? != 2 * (b - k) as u32 {
                        tau_ok = false;
                    }
                }
            }
        }
        report.push(
            format!("tau_block_constancy(n={n})"),
            tau_ok,
            "tau = 2(j+1-k) on every interior block".into(),
        );

        let m_j = s.block_end(s.j_max);
        let mut gamma_ok = true;
        for t in 1..=2u32 {
            let lo = (m_j << (t - 1)) + 1;
            let hi = m_j << t;
            for i in [lo, (lo + hi) / 2, hi] {
                if gamma(i, &s)? != 2 * (t + 1) {
                    gamma_ok = false;
                }
            }
        }
        report.push(
            format!("gamma_block_constancy(n={n})"),
            gamma_ok,
            "gamma = 2(t+1) on tail block t".into(),
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_matches_closed_form_tightly() {
        for tau in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 40.0] {
            let closed = gauss::pos_part_mean(tau);
            let quad = pos_part_mean_by_quadrature(tau);
            let rel = (closed - quad).abs() / quad;
            assert!(rel < 1e-10, "tau = {tau}: rel = {rel:.3e}");
        }
    }

    #[test]
    fn default_suite_passes() {
        let report = lemma1_suite(&[1.0, 2.0, 4.0, 8.0, 16.0, 32.0], 20_000, 7).unwrap();
        assert!(report.passed(), "failures: {:?}", report.failures());
    }

    #[test]
    fn deep_tail_threshold_passes_and_is_tiny() {
        let report = lemma1_suite(&[40.0], 20_000, 7).unwrap();
        assert!(report.passed(), "failures: {:?}", report.failures());
        assert!(gauss::pos_part_mean(40.0) < 1e-8);
    }

    #[test]
    fn injected_wrong_mean_is_caught_with_tau_pinpointed() {
        let wrong = |tau: f64| gauss::pos_part_mean(tau) * 1.001;
        let report = lemma1_suite_with_mean_fn(&wrong, &[2.0, 4.0], 2_000, 7).unwrap();
        assert!(!report.passed());
        let failures = report.failures();
        assert!(failures
            .iter()
            .any(|f| f.name.contains("tau=2") && f.name.contains("closed_form")));
    }

    #[test]
    fn suite_validates_inputs() {
        assert!(lemma1_suite(&[0.5], 2_000, 0).is_err());
        assert!(lemma1_suite(&[41.0], 2_000, 0).is_err());
        assert!(lemma1_suite(&[2.0], 10, 0).is_err());
    }

    #[test]
    fn dominance_validates_inputs() {
        assert!(lemma2_dominance(1.0, 0.5, 5, 100_000, 0).is_err());
        assert!(lemma2_dominance(1.0, 0.5, 2, 10, 0).is_err());
        assert!(lemma2_dominance(-1.0, 0.5, 2, 100_000, 0).is_err());
    }

    #[test]
    fn dominance_holds_for_small_case() {
        let report = lemma2_dominance(1.0, 0.5, 2, 100_000, 11).unwrap();
        assert!(report.passed(), "failures: {:?}", report.failures());
    }

    #[test]
    fn zero_threshold_collapses_to_equality_in_distribution() {
        // lambda = 0: the sum is a noncentral chi-square depending on theta
        // only through xi, so all allocations have the same law
        let report = lemma2_dominance(1.0, 0.0, 3, 100_000, 5).unwrap();
        assert!(report.passed(), "failures: {:?}", report.failures());
    }

    #[test]
    fn scheme_consistency_across_standard_sizes() {
        let report = scheme_consistency_suite(&[32, 128, 1024]).unwrap();
        assert!(report.passed(), "failures: {:?}", report.failures());
    }
}
