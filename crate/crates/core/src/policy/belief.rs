use crate::error::{Error, Result};

/// Transition counts of one band, indexed `[from][to]` with 0 = vacant, 1 = busy.
pub type TransitionCounts = [[u64; 2]; 2];

/// Row-normalised transition estimate: for `v != u`,
/// `p[u][v] = C[u][v] / (C[u][v] + C[u][u])` and `p[u][u] = 1 - p[u][v]`.
pub fn estimate_transition(counts: &TransitionCounts) -> [[f64; 2]; 2] {
    let off = |u: usize| {
        let v = 1 - u;
        counts[u][v] as f64 / (counts[u][v] + counts[u][u]) as f64
    };
    let p01 = off(0);
    let p10 = off(1);
    [[1.0 - p01, p01], [p10, 1.0 - p10]]
}

/// Next-slot vacancy beliefs.
///
/// Bands in `observed` (successfully sensed this slot) take `p10` if busy and
/// `p00` if vacant; every other band is propagated one step,
/// `(1 - w) * p10 + w * p00`.
pub fn propagate_belief(
    omega: &[f64],
    observed: Option<(&[usize], &[bool])>,
    p10: &[f64],
    p00: &[f64],
) -> Vec<f64> {
    let mut next: Vec<f64> = omega
        .iter()
        .enumerate()
        .map(|(n, &w)| ((1.0 - w) * p10[n] + w * p00[n]).clamp(0.0, 1.0))
        .collect();
    if let Some((bands, busy)) = observed {
        for (&n, &b) in bands.iter().zip(busy) {
            next[n] = if b { p10[n] } else { p00[n] };
        }
    }
    next
}

/// Learner state: vacancy beliefs and transition statistics of every band.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub omega: Vec<f64>,
    counts: Vec<TransitionCounts>,
    obs_count: Vec<u64>,
    pub slot_index: u64,
}

impl BeliefState {
    /// Uniform beliefs and one pseudo-count per transition.
    pub fn new(n_bands: usize) -> Self {
        Self {
            omega: vec![0.5; n_bands],
            counts: vec![[[1; 2]; 2]; n_bands],
            obs_count: vec![0; n_bands],
            slot_index: 0,
        }
    }

    pub fn n_bands(&self) -> usize {
        self.omega.len()
    }

    pub fn counts(&self, band: usize) -> &TransitionCounts {
        &self.counts[band]
    }

    pub fn obs_count(&self, band: usize) -> u64 {
        self.obs_count[band]
    }

    pub fn min_obs_count(&self) -> u64 {
        self.obs_count.iter().copied().min().unwrap_or(0)
    }

    pub fn record_transition(&mut self, band: usize, prev_busy: bool, now_busy: bool) {
        self.counts[band][prev_busy as usize][now_busy as usize] += 1;
        self.obs_count[band] += 1;
    }

    /// Records one transition per band of `selected` from two consecutive
    /// successful senses of the same set.
    pub fn update_counts(&mut self, selected: &[usize], prev: &[bool], now: &[bool]) -> Result<()> {
        if prev.len() != selected.len() || now.len() != selected.len() {
            return Err(Error::usage(format!(
                "{} bands with {} previous and {} current statuses",
                selected.len(),
                prev.len(),
                now.len()
            )));
        }
        if let Some(&n) = selected.iter().find(|&&n| n >= self.n_bands()) {
            return Err(Error::usage(format!("band index {n} out of range")));
        }
        for ((&n, &p), &c) in selected.iter().zip(prev).zip(now) {
            self.record_transition(n, p, c);
        }
        Ok(())
    }

    pub fn transition_estimate(&self, band: usize) -> [[f64; 2]; 2] {
        estimate_transition(&self.counts[band])
    }

    pub fn p10_estimates(&self) -> Vec<f64> {
        (0..self.n_bands())
            .map(|n| self.transition_estimate(n)[1][0])
            .collect()
    }

    pub fn p00_estimates(&self) -> Vec<f64> {
        (0..self.n_bands())
            .map(|n| self.transition_estimate(n)[0][0])
            .collect()
    }

    /// Estimated stationary vacancy `p10 / (p10 + p01)` of every band.
    pub fn stationary_estimates(&self) -> Vec<f64> {
        (0..self.n_bands())
            .map(|n| {
                let p = self.transition_estimate(n);
                p[1][0] / (p[1][0] + p[0][1])
            })
            .collect()
    }

    /// Advances `omega` one slot using the current transition estimates.
    pub fn propagate(&mut self, observed: Option<(&[usize], &[bool])>) {
        let p10 = self.p10_estimates();
        let p00 = self.p00_estimates();
        self.omega = propagate_belief(&self.omega, observed, &p10, &p00);
        self.slot_index += 1;
    }
}
