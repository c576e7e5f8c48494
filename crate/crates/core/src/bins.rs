//! Balls into bins with a non-uniform bin distribution: majorization,
//! exact expected maximum load by enumeration, and its Monte Carlo twin.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Largest number of compositions `exact_expected_max` will enumerate.
pub const COMPOSITION_LIMIT: u128 = 1_000_000;

const SUM_TOLERANCE: f64 = 1e-12;
const MAJORIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::invalid("probability vector is empty"));
        }
        if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!("probability entry {v} is not a finite nonnegative value")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(ProbabilityVector(p))
    }

    /// Normalises nonnegative weights.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        let total: f64 = w.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::invalid("weights must have a positive finite sum"));
        }
        let mut p: Vec<f64> = w.iter().map(|v| v / total).collect();
        // Push the rounding residue into the largest entry.
        let residue = 1.0 - p.iter().sum::<f64>();
        let imax = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap_or(0);
        p[imax] += residue;
        Self::new(p)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("uniform vector needs n >= 1"));
        }
        Self::from_weights(&vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `x ≻ y`: the descending prefix sums of `x` dominate those of `y` and the
/// totals agree (both within 1e-9).
pub fn majorizes(x: &[f64], y: &[f64]) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(Error::invalid("majorization needs non-empty vectors"));
    }
    let desc = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    };
    let (xs, ys) = (desc(x), desc(y));
    let (mut px, mut py) = (0.0, 0.0);
    for k in 0..xs.len() {
        px += xs[k];
        py += ys[k];
        if k + 1 < xs.len() && px < py - MAJORIZATION_TOLERANCE {
            return Ok(false);
        }
    }
    Ok((px - py).abs() <= MAJORIZATION_TOLERANCE)
}

/// `C(m + n - 1, n - 1)`, saturating at `u128::MAX`.
pub fn composition_count(m: u64, n: usize) -> u128 {
    let k = (n as u128).saturating_sub(1);
    let total = m as u128 + k;
    let k = k.min(total - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = match c.checked_mul(total - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// `E[max_i X_i]` for `X ~ Multinomial(m, p)` by enumerating every
/// composition of `m` into `|p|` parts.
pub fn exact_expected_max(m: u64, p: &ProbabilityVector) -> Result<f64> {
    let compositions = composition_count(m, p.len());
    if compositions > COMPOSITION_LIMIT {
        return Err(Error::TooLarge { compositions, limit: COMPOSITION_LIMIT });
    }
    let m = m as usize;
    let mut binom = vec![vec![1.0f64; m + 1]; m + 1];
    for r in 1..=m {
        for k in 1..r {
            binom[r][k] = binom[r - 1][k - 1] + binom[r - 1][k];
        }
    }
    let mut acc = 0.0;
    enumerate(p.as_slice(), 0, m, 1.0, 0, &binom, &mut acc);
    Ok(acc)
}

fn enumerate(p: &[f64], bin: usize, remaining: usize, prob: f64, max: usize, binom: &[Vec<f64>], acc: &mut f64) {
    if bin + 1 == p.len() {
        let pr = prob * p[bin].powi(remaining as i32);
        *acc += pr * max.max(remaining) as f64;
        return;
    }
    for x in 0..=remaining {
        let pr = prob * binom[remaining][x] * p[bin].powi(x as i32);
        if pr == 0.0 {
            continue;
        }
        enumerate(p, bin + 1, remaining - x, pr, max.max(x), binom, acc);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Standard error of the mean; zero for a single trial.
    pub se: f64,
    pub trials: u64,
}

/// Monte Carlo `E[max load]`: each trial throws `m` balls independently
/// from `p` using the stream `derive(seed, BALLS, trial)`.
pub fn mc_expected_max(m: u64, p: &ProbabilityVector, trials: u64, seed: u64) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let probs = p.as_slice();
    let n = probs.len();
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &q in probs {
        acc += q;
        cumulative.push(acc);
    }
    let total = acc;
    let last_positive = probs.iter().rposition(|&q| q > 0.0).unwrap_or(n - 1);

    let maxima: Vec<u64> = (0..trials)
        .into_par_iter()
        .map_init(
            || vec![0u64; n],
            |counts, t| {
                counts.iter_mut().for_each(|c| *c = 0);
                let mut rng = rng::stream(rng::derive(seed, tag::BALLS, t));
                for _ in 0..m {
                    let u = rng.random::<f64>() * total;
                    let i = cumulative.partition_point(|&c| c <= u).min(last_positive);
                    counts[i] += 1;
                }
                counts.iter().copied().max().unwrap_or(0)
            },
        )
        .collect();
    Ok(summarize(&maxima))
}

fn summarize(values: &[u64]) -> McEstimate {
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    let se = if values.len() > 1 {
        let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    McEstimate { mean, se, trials: values.len() as u64 }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchurVerdict {
    pub expected_p: f64,
    pub expected_q: f64,
    /// Standard errors; zero for exact verdicts.
    pub se_p: f64,
    pub se_q: f64,
    pub exact: bool,
    pub pass: bool,
}

impl SchurVerdict {
    pub fn combined_se(&self) -> f64 {
        self.se_p.hypot(self.se_q)
    }
}

fn check_majorized(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<()> {
    if !majorizes(p.as_slice(), q.as_slice())? {
        return Err(Error::invalid("p does not majorize q"));
    }
    Ok(())
}

/// Monte Carlo check that `E_p[max] >= E_q[max]` for `p ≻ q`, allowing two
/// combined standard errors of noise.
pub fn check_schur_monotonicity(
    m: u64,
    p: &ProbabilityVector,
    q: &ProbabilityVector,
    trials: u64,
    seed: u64,
) -> Result<SchurVerdict> {
    check_majorized(p, q)?;
    let ep = mc_expected_max(m, p, trials, rng::derive(seed, tag::VECTOR, 0))?;
    let eq = mc_expected_max(m, q, trials, rng::derive(seed, tag::VECTOR, 1))?;
    let combined = ep.se.hypot(eq.se);
    Ok(SchurVerdict {
        expected_p: ep.mean,
        expected_q: eq.mean,
        se_p: ep.se,
        se_q: eq.se,
        exact: false,
        pass: ep.mean >= eq.mean - 2.0 * combined,
    })
}

/// Enumeration-based version of [`check_schur_monotonicity`].
pub fn check_schur_monotonicity_exact(m: u64, p: &ProbabilityVector, q: &ProbabilityVector) -> Result<SchurVerdict> {
    check_majorized(p, q)?;
    let ep = exact_expected_max(m, p)?;
    let eq = exact_expected_max(m, q)?;
    Ok(SchurVerdict { expected_p: ep, expected_q: eq, se_p: 0.0, se_q: 0.0, exact: true, pass: ep >= eq - 1e-12 })
}
