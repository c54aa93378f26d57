//! Lp and Besov coefficient balls, membership tests, the supremum constant
//! `A(Theta) = sup_theta sum theta_i^2`, and the adversarial configurations
//! used to probe worst-case risk.
//!
//! An Lp ball constrains `(sum_i i^{ps} |theta_i|^p)^{1/p} <= M` with
//! `s = alpha + 1/2 - 1/p > 0`. A Besov ball constrains the levelwise
//! aggregation `( sum_j (2^{js} ||theta_{j.}||_p)^q )^{1/q} <= M`, where
//! coordinate `i = 2^j + k` sits at level `j`, position `k`. `q = inf` is
//! supported as the supremum over levels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seq_model::ThetaVector;

/// Relative tolerance used by membership checks; far below any experimental
/// effect, present only to absorb floating-point norm evaluation.
pub const MEMBERSHIP_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallKind {
    Lp,
    Besov,
}

/// An Lp or Besov ball. `q` is ignored for Lp balls; `f64::INFINITY` selects
/// the supremum aggregation for Besov balls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub kind: BallKind,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub radius: f64,
}

impl BallSpec {
    pub fn lp(p: f64, alpha: f64, radius: f64) -> Result<Self> {
        Self::validate(Self {
            kind: BallKind::Lp,
            p,
            q: 2.0,
            alpha,
            radius,
        })
    }

    pub fn besov(p: f64, q: f64, alpha: f64, radius: f64) -> Result<Self> {
        Self::validate(Self {
            kind: BallKind::Besov,
            p,
            q,
            alpha,
            radius,
        })
    }

    pub fn validate(ball: Self) -> Result<Self> {
        if !(ball.p > 0.0) || !ball.p.is_finite() {
            return Err(Error::InvalidBall(format!("p = {} must be positive", ball.p)));
        }
        if ball.kind == BallKind::Besov && !(ball.q > 0.0) {
            return Err(Error::InvalidBall(format!("q = {} must be positive", ball.q)));
        }
        if !(ball.alpha > 0.0) || !ball.alpha.is_finite() {
            return Err(Error::InvalidBall(format!(
                "alpha = {} must be positive",
                ball.alpha
            )));
        }
        if !(ball.radius > 0.0) || !ball.radius.is_finite() {
            return Err(Error::InvalidBall(format!(
                "radius = {} must be positive",
                ball.radius
            )));
        }
        if ball.s() <= 0.0 {
            return Err(Error::InvalidBall(format!(
                "s = alpha + 1/2 - 1/p = {} must be positive",
                ball.s()
            )));
        }
        Ok(ball)
    }

    /// `s = alpha + 1/2 - 1/p`.
    pub fn s(&self) -> f64 {
        self.alpha + 0.5 - 1.0 / self.p
    }

    /// `p* = min(p, 2)`.
    pub fn p_star(&self) -> f64 {
        self.p.min(2.0)
    }

    /// `s* = alpha + 1/2 - 1/p*`; equals `alpha` in the dense case `p >= 2`.
    pub fn s_star(&self) -> f64 {
        self.alpha + 0.5 - 1.0 / self.p_star()
    }

    pub fn label(&self) -> String {
        match self.kind {
            BallKind::Lp => format!("lp(p={},alpha={},M={})", self.p, self.alpha, self.radius),
            BallKind::Besov => format!(
                "besov(p={},q={},alpha={},M={})",
                self.p, self.q, self.alpha, self.radius
            ),
        }
    }
}

/// Ball norm of a finite-support vector.
pub fn ball_norm(theta: &ThetaVector, ball: &BallSpec) -> f64 {
    match ball.kind {
        BallKind::Lp => lp_norm(theta, ball),
        BallKind::Besov => besov_norm(theta, ball),
    }
}

fn lp_norm(theta: &ThetaVector, ball: &BallSpec) -> f64 {
    let ps = ball.p * ball.s();
    let mut acc = 0.0;
    for (idx, &c) in theta.coeffs().iter().enumerate() {
        if c != 0.0 {
            let i = (idx + 1) as f64;
            acc += i.powf(ps) * c.abs().powf(ball.p);
        }
    }
    acc.powf(1.0 / ball.p)
}

fn besov_norm(theta: &ThetaVector, ball: &BallSpec) -> f64 {
    let coeffs = theta.coeffs();
    if coeffs.is_empty() {
        return 0.0;
    }
    let s = ball.s();
    // level j covers 1-based indices 2^j ..= 2^{j+1} - 1
    let top_level = usize::BITS as usize - 1 - coeffs.len().leading_zeros() as usize;
    let mut level_terms = Vec::with_capacity(top_level + 1);
    for j in 0..=top_level {
        let lo = (1usize << j) - 1;
        let hi = ((1usize << (j + 1)) - 1).min(coeffs.len());
        let mut acc = 0.0;
        for &c in &coeffs[lo..hi] {
            if c != 0.0 {
                acc += c.abs().powf(ball.p);
            }
        }
        let level_norm = acc.powf(1.0 / ball.p);
        level_terms.push(2f64.powf(j as f64 * s) * level_norm);
    }
    if ball.q.is_infinite() {
        level_terms.into_iter().fold(0.0, f64::max)
    } else {
        level_terms
            .into_iter()
            .map(|t| t.powf(ball.q))
            .sum::<f64>()
            .powf(1.0 / ball.q)
    }
}

/// Membership check: the exact ball norm together with
/// `norm <= M (1 + 1e-9)`.
pub fn membership(theta: &ThetaVector, ball: &BallSpec) -> (f64, bool) {
    let norm = ball_norm(theta, ball);
    (norm, norm <= ball.radius * (1.0 + MEMBERSHIP_RTOL))
}

/// The quadratic functional `Q(theta) = sum_i theta_i^2`.
pub fn q_of_theta(theta: &ThetaVector) -> f64 {
    theta.coeffs().iter().fold(0.0, |acc, c| acc + c * c)
}

/// Riemann zeta on `(1, inf)` by direct summation with an Euler-Maclaurin
/// tail, accurate to ~1e-12 even for exponents barely above 1.
fn zeta(beta: f64) -> f64 {
    let n = 10_000u64;
    let mut sum = 0.0;
    for i in 1..=n {
        sum += (i as f64).powf(-beta);
    }
    let nf = n as f64;
    sum + nf.powf(1.0 - beta) / (beta - 1.0) - 0.5 * nf.powf(-beta)
        + beta / 12.0 * nf.powf(-beta - 1.0)
}

/// Supremum of `Q(theta)` over the ball.
///
/// For `p <= 2` (and Besov `q <= 2`) the supremum is `M^2`, attained by the
/// spike at the first coordinate, where the weight is 1. When `p > 2` (or
/// Besov `q > 2`) the squared l2 mass of power-decay members exceeds the
/// spike, and the supremum has the closed forms below (Lagrange
/// stationarity of `sum u_i^{2/p}` under the weighted-simplex constraint):
///
/// * Lp, `p > 2`: `M^2 zeta(2ps/(p-2))^{(p-2)/p}`
/// * Besov, `q > 2`: `M^2 (1 - 2^{-c q/(q-2)})^{-(q-2)/q}` with
///   `c = 2s` for `p <= 2` and `c = 2 alpha` for `p > 2`
/// * Besov, `q = inf`: limits of the above.
pub fn a_theta(ball: &BallSpec) -> f64 {
    let m2 = ball.radius * ball.radius;
    match ball.kind {
        BallKind::Lp => {
            if ball.p <= 2.0 {
                m2
            } else {
                let beta = 2.0 * ball.p * ball.s() / (ball.p - 2.0);
                m2 * zeta(beta).powf((ball.p - 2.0) / ball.p)
            }
        }
        BallKind::Besov => {
            if ball.q <= 2.0 {
                return m2;
            }
            // decay exponent of the level weights after within-level
            // optimization (spike for p <= 2, flat for p > 2)
            let c = if ball.p <= 2.0 {
                2.0 * ball.s()
            } else {
                2.0 * ball.alpha
            };
            if ball.q.is_infinite() {
                m2 / (1.0 - 2f64.powf(-c))
            } else {
                let e = ball.q / (ball.q - 2.0);
                m2 * (1.0 - 2f64.powf(-c * e)).powf(-(ball.q - 2.0) / ball.q)
            }
        }
    }
}

/// A coefficient vector with experiment provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTheta {
    pub id: String,
    pub theta: ThetaVector,
}

impl NamedTheta {
    pub fn new(id: impl Into<String>, theta: ThetaVector) -> Self {
        Self {
            id: id.into(),
            theta,
        }
    }

    pub fn zero() -> Self {
        Self::new("zero", ThetaVector::zero())
    }
}

/// Sparse-case adversary: `k = ceil(sqrt(b m ln m))` spikes of height
/// `1/sqrt(n)` with `m = ceil(n^{p/(1+2ps)} (ln n)^{-1/(1+2ps)})`.
///
/// Spikes sit at the top of the index range `m, m-1, ..., m-k+1`, where the
/// Lp weights are largest, so the membership check is the binding worst
/// case. Errors if `(b, n)` push the norm past the radius.
pub fn sparse_hypercube(ball: &BallSpec, n: u64, b: f64) -> Result<ThetaVector> {
    if ball.p >= 2.0 {
        return Err(Error::InvalidArgument(
            "sparse hypercube applies to p < 2".into(),
        ));
    }
    if ball.alpha > 1.0 / (2.0 * ball.p) {
        return Err(Error::InvalidArgument(
            "sparse hypercube applies to alpha <= 1/(2p)".into(),
        ));
    }
    if !(b > 0.0) {
        return Err(Error::InvalidArgument("b must be positive".into()));
    }
    let (m, k) = sparse_hypercube_shape(ball, n, b);
    let height = 1.0 / (n as f64).sqrt();
    let mut coeffs = vec![0.0; m];
    for c in coeffs[m - k..].iter_mut() {
        *c = height;
    }
    let theta = ThetaVector::new(coeffs)?;
    let (norm, ok) = membership(&theta, ball);
    if !ok {
        return Err(Error::MembershipViolation {
            norm,
            radius: ball.radius,
        });
    }
    Ok(theta)
}

/// The `(m, k)` pair behind [`sparse_hypercube`].
pub fn sparse_hypercube_shape(ball: &BallSpec, n: u64, b: f64) -> (usize, usize) {
    let nf = n as f64;
    let ps = ball.p * ball.s();
    let denom = 1.0 + 2.0 * ps;
    let m = (nf.powf(ball.p / denom) * nf.ln().powf(-1.0 / denom)).ceil() as usize;
    let m = m.max(1);
    let k = ((b * m as f64 * (m as f64).ln()).sqrt().ceil() as usize).clamp(1, m);
    (m, k)
}

/// Dense-case adversary: `N = ceil(delta^{-2/(4 alpha + 1)})` equal
/// coordinates of height `c delta^{(2 alpha + 1)/(4 alpha + 1)}` with
/// `delta = d sqrt(ln n) / n`; `c` is calibrated by bisection to the largest
/// height keeping membership, within 1e-6 of the boundary.
///
/// Returns the vector and the calibrated `c`.
pub fn dense_modulus(ball: &BallSpec, n: u64, d: f64) -> Result<(ThetaVector, f64)> {
    if ball.p < 2.0 {
        return Err(Error::InvalidArgument(
            "dense modulus applies to p >= 2".into(),
        ));
    }
    if !(d > 0.0) {
        return Err(Error::InvalidArgument("d must be positive".into()));
    }
    let nf = n as f64;
    let delta = d * nf.ln().sqrt() / nf;
    let count = delta
        .powf(-2.0 / (4.0 * ball.alpha + 1.0))
        .ceil()
        .max(1.0) as usize;
    let unit = ThetaVector::new(vec![1.0; count])?;
    let unit_norm = ball_norm(&unit, ball);

    // Bisect the height against membership. The norm is homogeneous so the
    // bracket [0, 2M/unit_norm] always contains the boundary.
    let mut lo = 0.0f64;
    let mut hi = 2.0 * ball.radius / unit_norm;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if membership(&scaled(&unit, mid), ball).1 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-7 * hi {
            break;
        }
    }
    let height = lo;
    let theta = scaled(&unit, height);
    let (norm, ok) = membership(&theta, ball);
    debug_assert!(ok, "calibrated dense vector left the ball: norm = {norm}");
    let c = height / delta.powf((2.0 * ball.alpha + 1.0) / (4.0 * ball.alpha + 1.0));
    Ok((theta, c))
}

fn scaled(theta: &ThetaVector, factor: f64) -> ThetaVector {
    ThetaVector::new(theta.coeffs().iter().map(|c| c * factor).collect())
        .expect("scaling preserves finiteness")
}

/// Adversarial family selector used by experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversarialFamily {
    SparseHypercube,
    DenseModulus,
    SingleSpike,
}

/// Knobs for the adversarial generators. `b` drives the sparse hypercube,
/// `d` the dense modulus scale; the dense height constant `c` is calibrated,
/// never set. `spike_height = None` calibrates the single spike to the
/// radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdversarialConfig {
    pub family: AdversarialFamily,
    pub b: f64,
    pub d: f64,
    pub spike_height: Option<f64>,
}

impl AdversarialConfig {
    pub fn new(family: AdversarialFamily) -> Self {
        Self {
            family,
            b: 0.05,
            d: 0.8,
            spike_height: None,
        }
    }

    /// Instantiate the configured family member for `(ball, n)`; the id
    /// records the calibrated constants.
    pub fn build(&self, ball: &BallSpec, n: u64) -> Result<NamedTheta> {
        match self.family {
            AdversarialFamily::SparseHypercube => {
                let theta = sparse_hypercube(ball, n, self.b)?;
                let (m, k) = sparse_hypercube_shape(ball, n, self.b);
                Ok(NamedTheta::new(
                    format!("sparse_hypercube(b={},m={m},k={k})", self.b),
                    theta,
                ))
            }
            AdversarialFamily::DenseModulus => {
                let (theta, c) = dense_modulus(ball, n, self.d)?;
                Ok(NamedTheta::new(
                    format!(
                        "dense_modulus(d={},c={c:.6},N={})",
                        self.d,
                        theta.support_len()
                    ),
                    theta,
                ))
            }
            AdversarialFamily::SingleSpike => {
                let height = self.spike_height.unwrap_or(ball.radius);
                let theta = ThetaVector::spike(1, height)?;
                let (norm, ok) = membership(&theta, ball);
                if !ok {
                    return Err(Error::MembershipViolation {
                        norm,
                        radius: ball.radius,
                    });
                }
                Ok(NamedTheta::new(format!("spike(h={height})"), theta))
            }
        }
    }
}
