//! Rate calculus: minimax exponents over Lp/Besov balls, adaptive log
//! penalties, the penalized-quadratic model-selection benchmark, and the
//! regime comparison table.
//!
//! Rates are handled as exponent pairs `(n_exp, log_exp)` meaning
//! `n^{n_exp} (ln n)^{log_exp}`; unspecified multiplicative constants are
//! never materialized. A rate is "at least as fast" as another when its
//! exponent pair is lexicographically no larger: more negative `n_exp`
//! first, smaller `log_exp` on ties.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param_spaces::{a_theta, BallSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `alpha p* > 1/2`: the parametric rate with the efficiency constant.
    Efficient,
    /// `alpha p* = 1/2`: parametric rate, log-inflated squared bias.
    Boundary,
    /// `alpha p* < 1/2`, `p >= 2`.
    SlowDense,
    /// `alpha p* < 1/2`, `p < 2`.
    SlowSparse,
}

/// Minimax and adaptive rate summary for one ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    /// Exponent of `n` in the minimax rate `n^{-r}`.
    pub r: f64,
    /// Exponent of `ln n` in the adaptive rate; zero in the efficient regime.
    pub log_exp: f64,
    pub regime: Regime,
    /// `4 A(Theta)`, present only in the efficient regime.
    pub efficient_constant: Option<f64>,
}

/// Exponent pair `n^{n_exp} (ln n)^{log_exp}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub n_exp: f64,
    pub log_exp: f64,
}

impl RatePair {
    pub fn new(n_exp: f64, log_exp: f64) -> Self {
        Self { n_exp, log_exp }
    }

    /// True when `self` decays at least as fast (lexicographic comparison).
    pub fn at_least_as_fast(&self, other: &RatePair) -> bool {
        const EPS: f64 = 1e-12;
        if self.n_exp < other.n_exp - EPS {
            return true;
        }
        if self.n_exp > other.n_exp + EPS {
            return false;
        }
        self.log_exp <= other.log_exp + EPS
    }

    /// Asymptotic order of the larger of two rates (the slower decay wins).
    fn max_rate(a: RatePair, b: RatePair) -> RatePair {
        if a.at_least_as_fast(&b) {
            b
        } else {
            a
        }
    }

    /// Asymptotic order of the smaller of two rates.
    fn min_rate(a: RatePair, b: RatePair) -> RatePair {
        if a.at_least_as_fast(&b) {
            a
        } else {
            b
        }
    }
}

/// Minimax rate exponent and the adaptive logarithmic penalty:
/// `r = 1` when `alpha p* >= 1/2`, otherwise `r = 2 - p*/(1 + 2 p* s*)`;
/// the non-efficient regimes pay `(ln n)^{2 p* s*/(1 + 2 p* s*)}`.
pub fn minimax_rate(ball: &BallSpec) -> RateSummary {
    let ps = ball.p_star();
    let ss = ball.s_star();
    let ap = ball.alpha * ps;
    let denom = 1.0 + 2.0 * ps * ss;
    if ap > 0.5 {
        RateSummary {
            r: 1.0,
            log_exp: 0.0,
            regime: Regime::Efficient,
            efficient_constant: Some(4.0 * a_theta(ball)),
        }
    } else {
        let regime = if ap == 0.5 {
            Regime::Boundary
        } else if ball.p >= 2.0 {
            Regime::SlowDense
        } else {
            Regime::SlowSparse
        };
        RateSummary {
            r: if ap == 0.5 { 1.0 } else { 2.0 - ps / denom },
            log_exp: 2.0 * ps * ss / denom,
            regime,
            efficient_constant: None,
        }
    }
}

/// Exponent pair of the adaptive estimator's worst-case risk.
pub fn adaptive_rate_pair(ball: &BallSpec) -> RatePair {
    let summary = minimax_rate(ball);
    match summary.regime {
        Regime::Efficient => RatePair::new(-1.0, 0.0),
        _ => RatePair::new(-summary.r, summary.log_exp),
    }
}

fn lm_branch_pairs(ball: &BallSpec) -> (RatePair, RatePair) {
    let s = ball.s();
    let a = ball.alpha;
    // (ln n / n^2)^{4s/(1+4s)} and (ln n / n)^{4a/(1+2a)}
    let s_branch = RatePair::new(-8.0 * s / (1.0 + 4.0 * s), 4.0 * s / (1.0 + 4.0 * s));
    let a_branch = RatePair::new(-4.0 * a / (1.0 + 2.0 * a), 4.0 * a / (1.0 + 2.0 * a));
    (s_branch, a_branch)
}

/// Exponent pair of the penalized-quadratic model-selection benchmark:
/// the order of `min((ln n/n^2)^{4s/(1+4s)}, (ln n/n)^{4a/(1+2a)}) + 1/n`.
pub fn lm_rate_pair(ball: &BallSpec) -> Result<RatePair> {
    if ball.p >= 2.0 {
        return Err(Error::InvalidArgument(
            "model-selection benchmark is stated for p < 2".into(),
        ));
    }
    let (s_branch, a_branch) = lm_branch_pairs(ball);
    Ok(RatePair::max_rate(
        RatePair::min_rate(s_branch, a_branch),
        RatePair::new(-1.0, 0.0),
    ))
}

/// Numeric evaluation of the model-selection risk envelope at a given `n`,
/// with unit constants:
/// `min((ln n/n^2)^{4s/(1+4s)}, (ln n/n)^{4a/(1+2a)}) + 1/n`.
pub fn lm_rate(ball: &BallSpec, n: u64) -> Result<f64> {
    if ball.p >= 2.0 {
        return Err(Error::InvalidArgument(
            "model-selection benchmark is stated for p < 2".into(),
        ));
    }
    if n < 20 {
        return Err(Error::SampleSizeTooSmall(n));
    }
    let nf = n as f64;
    let s = ball.s();
    let a = ball.alpha;
    let s_branch = (nf.ln() / (nf * nf)).powf(4.0 * s / (1.0 + 4.0 * s));
    let a_branch = (nf.ln() / nf).powf(4.0 * a / (1.0 + 2.0 * a));
    Ok(s_branch.min(a_branch) + 1.0 / nf)
}

/// One cell of the regime comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCell {
    pub p_range: String,
    pub alpha_range: String,
    /// Symbolic order of the model-selection benchmark risk.
    pub lm_rate: String,
    /// Symbolic order of the adaptive estimator's risk.
    pub q_rate: String,
    pub lm_pair: RatePair,
    pub q_pair: RatePair,
}

/// Representative point inside each of the eight comparison cells, in table
/// order. The `p`-blocks are `0<p<1` (one cell, forced by `s > 0`),
/// `1<=p<4/3` (three cells) and `4/3<=p<2` (four cells).
pub fn table_cells() -> Vec<(String, String, f64, f64)> {
    let cells: Vec<(&str, &str, f64, f64)> = vec![
        ("0<p<1", "alpha>1/p-1/2", 0.8, 1.0),
        ("1<=p<4/3", "alpha<=1/(2p)", 1.2, 0.4),
        ("1<=p<4/3", "1/(2p)<alpha<=1/2", 1.2, 0.45),
        ("1<=p<4/3", "alpha>1/2", 1.2, 0.7),
        ("4/3<=p<2", "alpha<=2/p-1", 1.6, 0.2),
        ("4/3<=p<2", "2/p-1<alpha<=1/(2p)", 1.6, 0.3),
        ("4/3<=p<2", "1/(2p)<alpha<=1/p-1/4", 1.6, 0.35),
        ("4/3<=p<2", "alpha>1/p-1/4", 1.6, 0.5),
    ];
    cells
        .into_iter()
        .map(|(pr, ar, p, a)| (pr.to_string(), ar.to_string(), p, a))
        .collect()
}

fn symbolic_lm(ball: &BallSpec, pair: &RatePair) -> String {
    let (s_branch, a_branch) = lm_branch_pairs(ball);
    if *pair == RatePair::new(-1.0, 0.0) {
        "n^-1".into()
    } else if (pair.n_exp - a_branch.n_exp).abs() < 1e-12 {
        "(log n/n)^{4a/(1+2a)}".into()
    } else if (pair.n_exp - s_branch.n_exp).abs() < 1e-12 {
        "(log n/n^2)^{4s/(1+4s)}".into()
    } else {
        format!("n^{} (log n)^{}", pair.n_exp, pair.log_exp)
    }
}

fn symbolic_q(ball: &BallSpec, pair: &RatePair) -> String {
    if *pair == RatePair::new(-1.0, 0.0) {
        "n^-1".into()
    } else if ball.p < 2.0 {
        "n^-(2-p/(1+2ps)) (log n)^{2ps/(1+2ps)}".into()
    } else {
        "n^-(8a/(1+4a)) (log n)^{4a/(1+4a)}".into()
    }
}

/// Evaluate both risk orders at one `(p, alpha)` point (sparse side).
pub fn compare_at(p: f64, alpha: f64) -> Result<(RatePair, RatePair)> {
    let ball = BallSpec::lp(p, alpha, 1.0)?;
    Ok((lm_rate_pair(&ball)?, adaptive_rate_pair(&ball)))
}

/// The regime comparison table over the supplied grid points, deduplicated
/// by cell. The default grid from [`table_cells`] reproduces all eight
/// cells of the sparse-side comparison.
pub fn regime_table(points: &[(String, String, f64, f64)]) -> Result<Vec<RegimeCell>> {
    let mut out: Vec<RegimeCell> = Vec::new();
    for (p_range, alpha_range, p, alpha) in points {
        let ball = BallSpec::lp(*p, *alpha, 1.0)?;
        let lm_pair = lm_rate_pair(&ball)?;
        let q_pair = adaptive_rate_pair(&ball);
        let cell = RegimeCell {
            p_range: p_range.clone(),
            alpha_range: alpha_range.clone(),
            lm_rate: symbolic_lm(&ball, &lm_pair),
            q_rate: symbolic_q(&ball, &q_pair),
            lm_pair,
            q_pair,
        };
        if !out
            .iter()
            .any(|c| c.p_range == cell.p_range && c.alpha_range == cell.alpha_range)
        {
            out.push(cell);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn efficient_regime_has_unit_rate() {
        for (p, a) in [(2.0, 0.5), (2.0, 1.0), (1.5, 0.4), (0.8, 1.0), (4.0, 0.3)] {
            let ball = BallSpec::lp(p, a, 1.0).unwrap();
            if a * ball.p_star() > 0.5 {
                let r = minimax_rate(&ball);
                assert_eq!(r.r, 1.0);
                assert_eq!(r.log_exp, 0.0);
                assert_eq!(r.regime, Regime::Efficient);
                assert!(r.efficient_constant.is_some());
            }
        }
    }

    #[test]
    fn dense_slow_rate_matches_classical_exponent() {
        // p = 2, alpha = 1/8: r = 2 - 2/1.5 = 2/3 = 8a/(1+4a)
        let ball = BallSpec::lp(2.0, 0.125, 1.0).unwrap();
        let r = minimax_rate(&ball);
        assert_relative_eq!(r.r, 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(
            r.r,
            8.0 * 0.125 / (1.0 + 4.0 * 0.125),
            max_relative = 1e-12
        );
        assert_eq!(r.regime, Regime::SlowDense);
        // log exponent 2 p* s* / (1 + 2 p* s*) = 0.5 / 1.5
        assert_relative_eq!(r.log_exp, 1.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn sparse_slow_rate_hand_example() {
        // p = 1.5, alpha = 0.3: s* = s = 4/30, r = 2 - 1.5/1.4
        let ball = BallSpec::lp(1.5, 0.3, 1.0).unwrap();
        let r = minimax_rate(&ball);
        assert_relative_eq!(r.r, 2.0 - 1.5 / 1.4, max_relative = 1e-12);
        assert!((r.r - 0.92857).abs() < 1e-5);
        assert!((r.log_exp - 0.28571).abs() < 1e-5);
        assert_eq!(r.regime, Regime::SlowSparse);
    }

    #[test]
    fn boundary_regime_is_reported_distinctly() {
        let ball = BallSpec::lp(2.0, 0.25, 1.0).unwrap();
        let r = minimax_rate(&ball);
        assert_eq!(r.regime, Regime::Boundary);
        assert_eq!(r.r, 1.0);
        assert!(r.log_exp > 0.0);
        assert!(r.efficient_constant.is_none());
    }

    #[test]
    fn rate_is_continuous_at_the_regime_boundary() {
        for p in [1.2f64, 1.5, 2.0, 3.0] {
            let ps = p.min(2.0);
            let a_star = 0.5 / ps;
            for eps in [1e-3, 1e-5, 1e-7] {
                let below = BallSpec::lp(p, a_star - eps, 1.0).unwrap();
                let r = minimax_rate(&below).r;
                assert!(
                    (r - 1.0).abs() < 10.0 * eps,
                    "discontinuity at p = {p}: r = {r}"
                );
            }
        }
    }

    #[test]
    fn rate_is_monotone_in_alpha() {
        for p in [0.9, 1.2, 1.5, 2.0, 3.0] {
            let mut prev = 0.0;
            for i in 1..200 {
                let alpha = 0.01 * i as f64;
                let Ok(ball) = BallSpec::lp(p, alpha, 1.0) else {
                    continue;
                };
                let r = minimax_rate(&ball).r;
                assert!(r >= prev - 1e-12, "r drops at p = {p}, alpha = {alpha}");
                assert!(r > 0.0 && r <= 1.0);
                prev = r;
            }
        }
    }

    #[test]
    fn lm_rejects_dense_balls() {
        assert!(lm_rate(&BallSpec::lp(2.0, 0.2, 1.0).unwrap(), 1024).is_err());
        assert!(lm_rate_pair(&BallSpec::lp(2.5, 0.2, 1.0).unwrap()).is_err());
    }

    #[test]
    fn lm_envelope_dominated_by_parametric_term_for_smooth_balls() {
        // p = 1, alpha = 0.75: both branches beat 1/n, envelope ~ 1/n
        let ball = BallSpec::lp(1.0, 0.75, 1.0).unwrap();
        assert_eq!(lm_rate_pair(&ball).unwrap(), RatePair::new(-1.0, 0.0));
        // log factors die off slowly; n * envelope must fall toward 1
        let mut prev = f64::INFINITY;
        for n in [1u64 << 20, 1 << 30, 1 << 40, 1 << 50] {
            let ratio = lm_rate(&ball, n).unwrap() * n as f64;
            assert!(ratio > 1.0 && ratio < prev, "ratio {ratio} at n = {n}");
            prev = ratio;
        }
        assert!(prev < 1.1);
    }

    #[test]
    fn lm_envelope_alpha_branch_example() {
        // p = 1.2, alpha = 0.4: alpha-branch decays faster than the
        // s-branch, and slower than 1/n, so it is the envelope order
        let ball = BallSpec::lp(1.2, 0.4, 1.0).unwrap();
        let pair = lm_rate_pair(&ball).unwrap();
        let expect = 4.0 * 0.4 / 1.8;
        assert_relative_eq!(pair.n_exp, -expect, max_relative = 1e-12);
        assert_relative_eq!(pair.log_exp, expect, max_relative = 1e-12);
        // numeric: the alpha branch attains the min at large n
        let n = 1u64 << 20;
        let nf = n as f64;
        let s = ball.s();
        let s_branch = (nf.ln() / (nf * nf)).powf(4.0 * s / (1.0 + 4.0 * s));
        let a_branch = (nf.ln() / nf).powf(4.0 * 0.4 / 1.8);
        assert!(a_branch < s_branch);
        assert_relative_eq!(
            lm_rate(&ball, n).unwrap(),
            a_branch + 1.0 / nf,
            max_relative = 1e-12
        );
    }

    #[test]
    fn lm_envelope_branches_cross_continuously() {
        // at alpha = 2/p - 1 the two branch n-exponents coincide, and the
        // envelope value is continuous in alpha across the crossing
        let p = 1.6;
        let a_cross = 2.0 / p - 1.0;
        let ball = BallSpec::lp(p, a_cross, 1.0).unwrap();
        let (s_branch, a_branch) = super::lm_branch_pairs(&ball);
        assert_relative_eq!(s_branch.n_exp, a_branch.n_exp, max_relative = 1e-12);
        let n = 1u64 << 16;
        let at = |alpha: f64| lm_rate(&BallSpec::lp(p, alpha, 1.0).unwrap(), n).unwrap();
        let mut prev_gap = f64::INFINITY;
        for eps in [1e-2, 1e-4, 1e-6] {
            let gap = (at(a_cross + eps) - at(a_cross - eps)).abs();
            assert!(gap < prev_gap, "envelope jump {gap} at eps = {eps}");
            prev_gap = gap;
        }
        // gap shrinks linearly in eps: ~ value * d(exponent)/d(alpha) * ln n * eps
        assert!(prev_gap < 1e-4 * at(a_cross));
    }

    #[test]
    fn table_reproduces_all_eight_cells() {
        let table = regime_table(&table_cells()).unwrap();
        assert_eq!(table.len(), 8);
        let got: Vec<(&str, &str)> = table
            .iter()
            .map(|c| (c.lm_rate.as_str(), c.q_rate.as_str()))
            .collect();
        let expect = vec![
            ("n^-1", "n^-1"),
            (
                "(log n/n)^{4a/(1+2a)}",
                "n^-(2-p/(1+2ps)) (log n)^{2ps/(1+2ps)}",
            ),
            ("(log n/n)^{4a/(1+2a)}", "n^-1"),
            ("n^-1", "n^-1"),
            (
                "(log n/n)^{4a/(1+2a)}",
                "n^-(2-p/(1+2ps)) (log n)^{2ps/(1+2ps)}",
            ),
            (
                "(log n/n^2)^{4s/(1+4s)}",
                "n^-(2-p/(1+2ps)) (log n)^{2ps/(1+2ps)}",
            ),
            ("(log n/n^2)^{4s/(1+4s)}", "n^-1"),
            ("n^-1", "n^-1"),
        ];
        assert_eq!(got, expect);
    }

    #[test]
    fn adaptive_rate_is_lexicographically_at_least_as_fast_in_every_cell() {
        // several sample points per cell, not just the representatives
        let samples = [
            (0.8, 0.9),
            (0.8, 2.0),
            (0.95, 0.75),
            (1.1, 0.42),
            (1.2, 0.38),
            (1.3, 0.45),
            (1.25, 0.48),
            (1.1, 0.6),
            (1.3, 2.0),
            (1.4, 0.18),
            (1.7, 0.12),
            (1.5, 0.3),
            (1.9, 0.25),
            (1.6, 0.33),
            (1.9, 0.27),
            (1.5, 0.4),
            (1.9, 0.6),
        ];
        for (p, a) in samples {
            let Ok(ball) = BallSpec::lp(p, a, 1.0) else {
                continue;
            };
            let lm = lm_rate_pair(&ball).unwrap();
            let q = adaptive_rate_pair(&ball);
            assert!(
                q.at_least_as_fast(&lm),
                "q = {q:?} slower than lm = {lm:?} at p = {p}, alpha = {a}"
            );
        }
    }

    #[test]
    fn efficient_cells_have_unit_pair() {
        for (p, a) in [(1.2, 0.6), (1.6, 0.5), (0.8, 1.0)] {
            let ball = BallSpec::lp(p, a, 1.0).unwrap();
            assert!(ball.alpha * ball.p_star() > 0.5);
            assert_eq!(adaptive_rate_pair(&ball), RatePair::new(-1.0, 0.0));
        }
    }
}
