//! The Gaussian sequence model `Y_i = theta_i + n^{-1/2} z_i`, its dyadic
//! block geometry, and the threshold/centering constants consumed by every
//! estimator.
//!
//! Block geometry: `m_0 = max(1, round(n / (ln n)^2))`, `m_k = 2^k m_0`, and
//! `J` is the largest integer with `2^J <= n`. Block `k >= 1` covers the
//! coordinates `m_{k-1}+1 ..= m_k`. All bare logarithms are natural logs;
//! only the dyadic ceilings in `gamma` and `tau` use base 2.
//!
//! Reproducibility contract: every replication draws from an independent
//! ChaCha substream keyed by `(seed, replication index)`, so simulations are
//! pure functions of their arguments and parallel Monte Carlo is
//! order-independent.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss;

/// Largest admissible sample-size parameter; keeps `m_{J+2}` comfortably
/// inside u64 index arithmetic.
pub const MAX_N: u64 = 1 << 26;

/// Sample-size parameter, RNG seed, and the number of dyadic blocks
/// simulated beyond `m_J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n: u64,
    pub seed: u64,
    pub tail_blocks: usize,
}

impl ModelConfig {
    /// Config with the default two simulated tail blocks.
    pub fn new(n: u64, seed: u64) -> Result<Self> {
        Self::with_tail_blocks(n, seed, 2)
    }

    pub fn with_tail_blocks(n: u64, seed: u64, tail_blocks: usize) -> Result<Self> {
        if n < 20 {
            return Err(Error::SampleSizeTooSmall(n));
        }
        if n > MAX_N {
            return Err(Error::InvalidArgument(format!(
                "n = {n} exceeds supported maximum {MAX_N}"
            )));
        }
        Ok(Self {
            n,
            seed,
            tail_blocks,
        })
    }

    pub fn scheme(&self) -> BlockScheme {
        // n was validated on construction.
        block_scheme(self.n).expect("validated n")
    }
}

/// The dyadic block index geometry derived from `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockScheme {
    pub n: u64,
    pub m0: u64,
    #[serde(rename = "J")]
    pub j_max: usize,
}

impl BlockScheme {
    /// `m_k = 2^k m_0`. Also used for the simulated tail blocks `k > J`.
    pub fn block_end(&self, k: usize) -> u64 {
        self.m0 << k
    }

    /// Half-open coordinate range `(m_{k-1}, m_k]` of block `k >= 1`,
    /// returned as 1-based inclusive bounds.
    pub fn block_range(&self, k: usize) -> (u64, u64) {
        (self.block_end(k - 1) + 1, self.block_end(k))
    }

    pub fn ln_n(&self) -> f64 {
        (self.n as f64).ln()
    }
}

/// Derive the block scheme from the sample-size parameter.
///
/// `m0 = max(1, round(n / (ln n)^2))` and `J` is the largest integer with
/// `2^J <= n`. Rejects `n < 20`, where the geometry degenerates.
pub fn block_scheme(n: u64) -> Result<BlockScheme> {
    if n < 20 {
        return Err(Error::SampleSizeTooSmall(n));
    }
    if n > MAX_N {
        return Err(Error::InvalidArgument(format!(
            "n = {n} exceeds supported maximum {MAX_N}"
        )));
    }
    let ln_n = (n as f64).ln();
    let m0 = ((n as f64) / (ln_n * ln_n)).round().max(1.0) as u64;
    let j_max = 63 - n.leading_zeros() as usize;
    Ok(BlockScheme { n, m0, j_max })
}

/// A finite-support coefficient sequence, indexed from 1. Trailing zeros are
/// implied, never stored: the canonical form trims them on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ThetaVectorRepr", into = "ThetaVectorRepr")]
pub struct ThetaVector {
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ThetaVectorRepr {
    support_len: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<ThetaVectorRepr> for ThetaVector {
    type Error = Error;
    fn try_from(r: ThetaVectorRepr) -> Result<Self> {
        if r.support_len != r.coeffs.len() {
            return Err(Error::InvalidArgument(format!(
                "support_len {} does not match coeffs length {}",
                r.support_len,
                r.coeffs.len()
            )));
        }
        ThetaVector::new(r.coeffs)
    }
}

impl From<ThetaVector> for ThetaVectorRepr {
    fn from(t: ThetaVector) -> Self {
        ThetaVectorRepr {
            support_len: t.coeffs.len(),
            coeffs: t.coeffs,
        }
    }
}

impl ThetaVector {
    /// Build from 1-based coefficients; rejects non-finite entries and trims
    /// trailing zeros.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "theta contains a non-finite coefficient".into(),
            ));
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Ok(Self { coeffs })
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// Single spike `height * e_index`.
    pub fn spike(index: usize, height: f64) -> Result<Self> {
        if index == 0 {
            return Err(Error::InvalidArgument("theta indices start at 1".into()));
        }
        let mut coeffs = vec![0.0; index];
        coeffs[index - 1] = height;
        Self::new(coeffs)
    }

    /// 1-based coefficient access; zero beyond the support.
    pub fn get(&self, i: u64) -> f64 {
        if i == 0 || i as usize > self.coeffs.len() {
            0.0
        } else {
            self.coeffs[i as usize - 1]
        }
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// One realization of the sequence model: `y_i` for `i = 1..=len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub n: u64,
    y: Vec<f64>,
}

impl Observation {
    pub fn from_parts(n: u64, y: Vec<f64>) -> Result<Self> {
        if n < 20 {
            return Err(Error::SampleSizeTooSmall(n));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "observation contains a non-finite value".into(),
            ));
        }
        Ok(Self { n, y })
    }

    /// 1-based access.
    pub fn y(&self, i: u64) -> f64 {
        self.y[i as usize - 1]
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// 0-based raw storage; `values()[i]` is coordinate `i + 1`.
    pub fn values(&self) -> &[f64] {
        &self.y
    }

    /// Take the storage back (buffer reuse in replication loops).
    pub fn into_inner(self) -> Vec<f64> {
        self.y
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for replication `rep` of the experiment keyed by
/// `seed`. The seed is expanded to a ChaCha key and the replication index
/// selects a ChaCha stream, so distinct `(seed, rep)` pairs never overlap.
pub fn rep_rng(seed: u64, rep: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(rep);
    rng
}

/// Number of coordinates a full observation carries: every block up to
/// `m_J` (extended if the signal support reaches further), plus
/// `tail_blocks` additional dyadic blocks.
pub fn observation_len(scheme: &BlockScheme, support_len: usize, tail_blocks: usize) -> usize {
    let mut t = scheme.j_max;
    while scheme.block_end(t) < support_len as u64 {
        t += 1;
    }
    scheme.block_end(t + tail_blocks) as usize
}

/// Draw replication `rep`, truncated to the first `len` coordinates.
///
/// Prefix property: the first `len` coordinates are identical no matter how
/// much further the observation extends, so component estimators can be
/// exercised on short prefixes of the same stream.
pub fn simulate_len(theta: &ThetaVector, cfg: &ModelConfig, rep: u64, len: usize) -> Observation {
    let inv_sqrt_n = 1.0 / (cfg.n as f64).sqrt();
    let mut rng = rep_rng(cfg.seed, rep);
    let mut y = Vec::with_capacity(len);
    let support = theta.support_len().min(len);
    for &c in &theta.coeffs()[..support] {
        let z: f64 = StandardNormal.sample(&mut rng);
        y.push(c + inv_sqrt_n * z);
    }
    for _ in support..len {
        let z: f64 = StandardNormal.sample(&mut rng);
        y.push(inv_sqrt_n * z);
    }
    Observation { n: cfg.n, y }
}

/// Same stream as [`simulate_len`], reusing `buf` as storage.
pub fn simulate_into(theta: &ThetaVector, cfg: &ModelConfig, rep: u64, len: usize, buf: &mut Vec<f64>) {
    buf.clear();
    buf.reserve(len);
    let inv_sqrt_n = 1.0 / (cfg.n as f64).sqrt();
    let mut rng = rep_rng(cfg.seed, rep);
    let support = theta.support_len().min(len);
    for &c in &theta.coeffs()[..support] {
        let z: f64 = StandardNormal.sample(&mut rng);
        buf.push(c + inv_sqrt_n * z);
    }
    for _ in support..len {
        let z: f64 = StandardNormal.sample(&mut rng);
        buf.push(inv_sqrt_n * z);
    }
}

/// Draw replication `rep` at full length.
pub fn simulate_rep(theta: &ThetaVector, cfg: &ModelConfig, rep: u64) -> Observation {
    let scheme = cfg.scheme();
    let len = observation_len(&scheme, theta.support_len(), cfg.tail_blocks);
    simulate_len(theta, cfg, rep, len)
}

/// Draw the observation for replication 0. Same `(theta, cfg)` always gives
/// bit-identical output.
pub fn simulate(theta: &ThetaVector, cfg: &ModelConfig) -> Observation {
    simulate_rep(theta, cfg, 0)
}

/// Tail threshold exponent `gamma_i = 2 (ceil(log2(i / m_J)) + 1)` for
/// `i >= m_J + 1`; constant on each dyadic tail block.
pub fn gamma(i: u64, scheme: &BlockScheme) -> Result<u32> {
    let m_j = scheme.block_end(scheme.j_max);
    if i <= m_j {
        return Err(Error::IndexOutOfRange {
            i,
            min: m_j + 1,
            max: u64::MAX,
            what: "gamma (tail thresholds start after m_J)",
        });
    }
    let mut t = 0u32;
    let mut end = m_j;
    while i > end {
        end *= 2;
        t += 1;
    }
    Ok(2 * (t + 1))
}

/// Term threshold exponent `tau_{k,i} = 2 ceil(log2(i / m_k))` for
/// `1 <= k <= J-1` and `m_k + 1 <= i <= m_J`; equals `2 (j + 1 - k)` on
/// block `j + 1`.
pub fn tau(k: usize, i: u64, scheme: &BlockScheme) -> Result<u32> {
    if k < 1 || k > scheme.j_max - 1 {
        return Err(Error::BlockOutOfRange {
            k,
            min: 1,
            max: scheme.j_max - 1,
        });
    }
    let m_k = scheme.block_end(k);
    let m_j = scheme.block_end(scheme.j_max);
    if i <= m_k || i > m_j {
        return Err(Error::IndexOutOfRange {
            i,
            min: m_k + 1,
            max: m_j,
            what: "tau",
        });
    }
    let mut t = 0u32;
    let mut end = m_k;
    while i > end {
        end *= 2;
        t += 1;
    }
    Ok(2 * t)
}

/// Block threshold for a chi-square sum over `m` coordinates:
/// `(m + 2 sqrt(m ln m)) / n`.
pub fn lambda_for_gap(m: u64, n: u64) -> Result<f64> {
    if m < 1 {
        return Err(Error::InvalidArgument(
            "block threshold needs m_k - m_0 >= 1".into(),
        ));
    }
    let mf = m as f64;
    Ok((mf + 2.0 * (mf * mf.ln()).sqrt()) / n as f64)
}

/// Block threshold `lambda_k = ((m_k - m_0) + 2 sqrt((m_k - m_0) ln(m_k - m_0))) / n`.
pub fn lambda_k(k: usize, scheme: &BlockScheme) -> Result<f64> {
    if k < 1 || k > scheme.j_max {
        return Err(Error::BlockOutOfRange {
            k,
            min: 1,
            max: scheme.j_max,
        });
    }
    lambda_for_gap(scheme.block_end(k) - scheme.m0, scheme.n)
}

/// Centering constant `mu_{k,i} = E_0 (Y_i^2 - tau_{k,i}/n)_+ = g(tau_{k,i}) / n`.
pub fn mu_ki(k: usize, i: u64, scheme: &BlockScheme) -> Result<f64> {
    let t = tau(k, i, scheme)?;
    Ok(gauss::pos_part_mean(t as f64) / scheme.n as f64)
}

/// Default penalty multiplier in the adaptive maximization.
pub const DEFAULT_PENALTY: f64 = 6.0;

/// Penalty `omega_k = c sqrt(m_k ln n) / n` with an explicit multiplier.
pub fn omega_k_with(penalty: f64, k: usize, scheme: &BlockScheme) -> f64 {
    penalty * (scheme.block_end(k) as f64 * scheme.ln_n()).sqrt() / scheme.n as f64
}

/// Penalty `omega_k = 6 sqrt(m_k ln n) / n`.
pub fn omega_k(k: usize, scheme: &BlockScheme) -> f64 {
    omega_k_with(DEFAULT_PENALTY, k, scheme)
}

/// Upper bound on the expected mass of the un-simulated tail: the sum of
/// `4 / (sqrt(2 pi gamma_i ln n) n^{1 + gamma_i/2})` over every coordinate
/// past `simulated_len`. Reported as a diagnostic next to estimates.
pub fn tail_truncation_bound(scheme: &BlockScheme, simulated_len: usize) -> f64 {
    let n = scheme.n as f64;
    let ln_n = scheme.ln_n();
    let m_j = scheme.block_end(scheme.j_max) as f64;
    let mut total = 0.0;
    let mut block_start = m_j; // exclusive
    let mut block_len = m_j;
    for t in 1..200 {
        let gamma = 2.0 * (t as f64 + 1.0);
        let per_coord = 4.0
            / ((2.0 * std::f64::consts::PI * gamma * ln_n).sqrt() * n.powf(1.0 + gamma / 2.0));
        let block_end = block_start + block_len;
        let covered = (simulated_len as f64).clamp(block_start, block_end);
        let remaining = block_end - covered;
        total += remaining * per_coord;
        if per_coord * block_end < 1e-300 {
            break;
        }
        block_start = block_end;
        block_len *= 2.0;
    }
    total
}
