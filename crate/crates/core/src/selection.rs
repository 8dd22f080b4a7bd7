//! Band-set sizing.
//!
//! With independent bands, the busy count of a selected set is
//! Poisson-binomial. Reconstruction succeeds with certainty for `|A_N| <= K`
//! and otherwise only when at most `floor(K / 2)` bands are busy; the
//! expected throughput of a set is that success probability times the sum of
//! its vacancy probabilities.

use crate::error::{Error, Result};

/// `pmf[i]` = P(exactly `i` of the independent events occur) for
/// `i = 0..=max_count`, by truncated iterative convolution.
pub fn poisson_binomial_pmf(busy_probs: &[f64], max_count: usize) -> Vec<f64> {
    let mut pmf = vec![0.0; max_count + 1];
    pmf[0] = 1.0;
    for (seen, &q) in busy_probs.iter().enumerate() {
        let top = (seen + 1).min(max_count);
        for i in (1..=top).rev() {
            pmf[i] = pmf[i] * (1.0 - q) + pmf[i - 1] * q;
        }
        pmf[0] *= 1.0 - q;
    }
    pmf
}

/// Probability that a set with the given vacancy probabilities is
/// reconstructed from `k` branches.
pub fn success_probability(vacancy_probs: &[f64], k: usize) -> f64 {
    if vacancy_probs.len() <= k {
        return 1.0;
    }
    let busy: Vec<f64> = vacancy_probs.iter().map(|p| 1.0 - p).collect();
    poisson_binomial_pmf(&busy, k / 2)
        .iter()
        .sum::<f64>()
        .min(1.0)
}

/// Expected vacant bands delivered by a set.
pub fn expected_throughput(vacancy_probs: &[f64], k: usize) -> f64 {
    success_probability(vacancy_probs, k) * vacancy_probs.iter().sum::<f64>()
}

/// Band indices sorted by descending score, ties broken by lower index.
pub fn rank_bands(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeDecision {
    pub size: usize,
    pub objective_value: f64,
    pub success_probability: f64,
}

/// Throughput-maximising set size over the prefix sets of the bands ranked
/// by vacancy probability. Ties go to the smaller size.
pub fn optimize_size(vacancy_probs: &[f64], k: usize) -> Result<SizeDecision> {
    let n = vacancy_probs.len();
    if k == 0 || k > n {
        return Err(Error::config(
            "k_branches",
            format!("need 1 <= K <= N, got K={k} N={n}"),
        ));
    }
    let ranked: Vec<f64> = rank_bands(vacancy_probs)
        .into_iter()
        .map(|i| vacancy_probs[i])
        .collect();
    let mut best: Option<SizeDecision> = None;
    for size in k..=n {
        let prefix = &ranked[..size];
        let success = success_probability(prefix, k);
        let value = success * prefix.iter().sum::<f64>();
        if best.as_ref().is_none_or(|b| value > b.objective_value) {
            best = Some(SizeDecision {
                size,
                objective_value: value,
                success_probability: success,
            });
        }
    }
    Ok(best.expect("k..=n is non-empty"))
}

/// Observation counts needed for every band's stationary estimate to be
/// within `mu / 2` of the truth with probability at least `1 - delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExplorationThreshold {
    /// Transition observations per band.
    pub per_band: u64,
    /// Exploration slots delivering `per_band` observations of every band.
    pub slots: u64,
}

pub fn exploration_threshold(
    n: usize,
    k: usize,
    mu: f64,
    delta: f64,
) -> Result<ExplorationThreshold> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::config(
            "k_branches",
            format!("need 1 <= K <= N, got K={k} N={n}"),
        ));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::config("mu", format!("{mu} is outside (0, 1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::config("delta", format!("{delta} is outside (0, 1)")));
    }
    let per_band = (2.0 / (mu * mu) * (2.0 * n as f64 / delta).ln()).ceil() as u64;
    let groups = n.div_ceil(k) as u64;
    Ok(ExplorationThreshold {
        per_band,
        slots: 2 * groups * per_band,
    })
}

/// Every estimate is strictly within `mu / 2` of its true value.
pub fn mu_correct(estimates: &[f64], truth: &[f64], mu: f64) -> bool {
    debug_assert_eq!(estimates.len(), truth.len());
    estimates
        .iter()
        .zip(truth)
        .all(|(e, t)| (e - t).abs() < mu / 2.0)
}
