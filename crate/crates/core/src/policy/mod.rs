//! Band-selection policies.
//!
//! Time is divided into blocks of `2 * ceil(N / K)` slots. At block `b` a
//! learning policy explores with probability `min(1, L / b)`: it senses the
//! contiguous groups of `K` bands, each for two consecutive slots, which
//! yields one transition observation per band. Otherwise it exploits,
//! sensing in every slot the `M` bands with the highest vacancy belief.
//!
//! - LDM always exploits with `M = K`, so reconstruction never fails.
//! - OLDM uses `M = K` until every band has enough observations for the
//!   stationary estimates to be trusted, then sizes `M` to maximise the
//!   expected throughput under the estimated statistics.
//! - IMP knows the true statistics and the optimal `M` from the first slot.

mod belief;

pub use belief::{estimate_transition, propagate_belief, BeliefState, TransitionCounts};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reconstruction::SenseResult;
use crate::rng::SimRng;
use crate::selection::{exploration_threshold, optimize_size, rank_bands};
use crate::spectrum::BandStatistics;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyMode {
    #[serde(rename = "LDM", alias = "ldm")]
    Ldm,
    #[serde(rename = "OLDM", alias = "oldm")]
    Oldm,
    #[serde(rename = "IMP", alias = "imp")]
    Imp,
}

impl PolicyMode {
    pub fn name(self) -> &'static str {
        match self {
            PolicyMode::Ldm => "LDM",
            PolicyMode::Oldm => "OLDM",
            PolicyMode::Imp => "IMP",
        }
    }
}

impl std::fmt::Display for PolicyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PolicyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LDM" => Ok(PolicyMode::Ldm),
            "OLDM" => Ok(PolicyMode::Oldm),
            "IMP" => Ok(PolicyMode::Imp),
            other => Err(Error::config(
                "policies",
                format!("unknown policy `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub n_bands: usize,
    pub k_branches: usize,
    pub horizon: usize,
    pub exploration_coefficient: f64,
    pub mu: f64,
    pub delta: f64,
    pub mode: PolicyMode,
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bands == 0 {
            return Err(Error::config("n_bands", "must be at least 1"));
        }
        if self.k_branches == 0 || self.k_branches > self.n_bands {
            return Err(Error::config(
                "k_branches",
                format!(
                    "need 1 <= K <= N, got K={} N={}",
                    self.k_branches, self.n_bands
                ),
            ));
        }
        if !self.exploration_coefficient.is_finite() || self.exploration_coefficient <= 0.0 {
            return Err(Error::config("exploration_coefficient", "must be positive"));
        }
        exploration_threshold(self.n_bands, self.k_branches, self.mu, self.delta)?;
        Ok(())
    }

    /// Number of contiguous exploration groups, `ceil(N / K)`.
    pub fn groups(&self) -> usize {
        self.n_bands.div_ceil(self.k_branches)
    }

    pub fn block_len(&self) -> usize {
        2 * self.groups()
    }

    pub fn n_blocks(&self) -> usize {
        self.horizon.div_ceil(self.block_len())
    }
}

/// Exploration probability of 1-based block `block`.
pub fn epsilon(block: u64, exploration_coefficient: f64) -> f64 {
    (exploration_coefficient / block as f64).min(1.0)
}

/// Bands of 0-based exploration group `group`: `group*K .. min((group+1)*K, N)`.
pub fn explore_group(group: usize, n: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || group >= n.div_ceil(k) {
        return Err(Error::usage(format!(
            "group {group} out of range for N={n} K={k}"
        )));
    }
    Ok((group * k..((group + 1) * k).min(n)).collect())
}

/// The `m` bands with the largest beliefs, ties to the lower index.
pub fn exploit_select(omega: &[f64], m: usize) -> Vec<usize> {
    let mut ranked = rank_bands(omega);
    ranked.truncate(m);
    ranked
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Explore,
    Exploit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub selected: Vec<usize>,
    /// Sensed status per selected band (`true` = busy).
    pub statuses: Vec<bool>,
    pub failed: bool,
    /// Vacant bands among `statuses`, zero when reconstruction failed.
    pub throughput: usize,
    pub phase: Phase,
}

/// Source of sensing results for the selected bands of a slot.
pub trait SensingChannel {
    /// Senses `selected` at slot `slot`. `prior_vacancy` holds the policy's
    /// current belief for each selected band.
    fn sense(
        &mut self,
        slot: usize,
        selected: &[usize],
        prior_vacancy: &[f64],
    ) -> Result<SenseResult>;
}

#[derive(Debug, Clone, Copy)]
struct LastSense {
    slot: usize,
    busy: bool,
    set_len: usize,
}

/// Runs one policy for `cfg.horizon` slots.
///
/// `truth` is required for [`PolicyMode::Imp`] and ignored otherwise.
/// Transition counts are only fed from consecutive successful senses of sets
/// with at most `K` bands, whose success does not depend on the occupancy.
pub fn run_policy(
    cfg: &PolicyConfig,
    truth: Option<&BandStatistics>,
    channel: &mut dyn SensingChannel,
    rng: &mut SimRng,
) -> Result<Vec<SlotOutcome>> {
    cfg.validate()?;
    let n = cfg.n_bands;
    let k = cfg.k_branches;
    let learning = cfg.mode != PolicyMode::Imp;

    let mut belief = BeliefState::new(n);
    let mut imp_size = k;
    let mut true_p10 = Vec::new();
    let mut true_p00 = Vec::new();
    if !learning {
        let stats =
            truth.ok_or_else(|| Error::config("policies", "IMP needs the true band statistics"))?;
        if stats.n_bands() != n {
            return Err(Error::config(
                "n_bands",
                format!(
                    "statistics describe {} bands, config has {n}",
                    stats.n_bands()
                ),
            ));
        }
        let p0 = stats.stationary_vacancy();
        imp_size = optimize_size(&p0, k)?.size;
        belief.omega = p0;
        true_p10 = stats.p10().to_vec();
        true_p00 = stats.p00();
    }
    let needed = exploration_threshold(n, k, cfg.mu, cfg.delta)?.per_band;

    let mut out = Vec::with_capacity(cfg.horizon);
    let mut last: Vec<Option<LastSense>> = vec![None; n];
    let mut t = 0usize;
    for block in 1..=cfg.n_blocks() as u64 {
        let explore = learning && rng.random::<f64>() < epsilon(block, cfg.exploration_coefficient);
        let exploit_size = match cfg.mode {
            PolicyMode::Ldm => k,
            PolicyMode::Imp => imp_size,
            PolicyMode::Oldm if belief.min_obs_count() >= needed => {
                optimize_size(&belief.stationary_estimates(), k)?.size
            }
            PolicyMode::Oldm => k,
        };
        for i in 0..cfg.block_len() {
            if t >= cfg.horizon {
                break;
            }
            let (selected, phase) = if explore {
                (explore_group(i / 2, n, k)?, Phase::Explore)
            } else {
                (exploit_select(&belief.omega, exploit_size), Phase::Exploit)
            };
            let prior: Vec<f64> = selected.iter().map(|&b| belief.omega[b]).collect();
            let sensed = channel.sense(t, &selected, &prior)?;
            if sensed.statuses.len() != selected.len() {
                return Err(Error::usage(format!(
                    "channel returned {} statuses for {} bands",
                    sensed.statuses.len(),
                    selected.len()
                )));
            }

            if !sensed.failed {
                for (&band, &busy) in selected.iter().zip(&sensed.statuses) {
                    if learning {
                        if let Some(prev) = last[band] {
                            if prev.slot + 1 == t && prev.set_len <= k && selected.len() <= k {
                                belief.record_transition(band, prev.busy, busy);
                            }
                        }
                    }
                    last[band] = Some(LastSense {
                        slot: t,
                        busy,
                        set_len: selected.len(),
                    });
                }
            }

            let observed =
                (!sensed.failed).then_some((selected.as_slice(), sensed.statuses.as_slice()));
            if learning {
                belief.propagate(observed);
            } else {
                belief.omega = propagate_belief(&belief.omega, observed, &true_p10, &true_p00);
                belief.slot_index += 1;
            }

            out.push(SlotOutcome {
                throughput: sensed.throughput(),
                failed: sensed.failed,
                statuses: sensed.statuses,
                selected,
                phase,
            });
            t += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruction::oracle_sense;
    use crate::rng::seeded;
    use crate::spectrum::{occupancy_trajectory, OccupancyState, CASE1_VACANCY};

    struct Oracle {
        traj: Vec<OccupancyState>,
        k: usize,
    }

    impl SensingChannel for Oracle {
        fn sense(&mut self, slot: usize, selected: &[usize], _: &[f64]) -> Result<SenseResult> {
            let s: Vec<bool> = selected.iter().map(|&b| self.traj[slot].busy[b]).collect();
            Ok(oracle_sense(&s, self.k))
        }
    }

    fn config(mode: PolicyMode, l: f64, horizon: usize) -> PolicyConfig {
        PolicyConfig {
            n_bands: 8,
            k_branches: 4,
            horizon,
            exploration_coefficient: l,
            mu: 0.45,
            delta: 0.1,
            mode,
        }
    }

    fn case1() -> BandStatistics {
        BandStatistics::from_stationary(&CASE1_VACANCY, 0.5).unwrap()
    }

    fn run(cfg: &PolicyConfig, seed: u64) -> Vec<SlotOutcome> {
        let stats = case1();
        let traj = occupancy_trajectory(&stats, cfg.horizon, &mut seeded(seed));
        let mut ch = Oracle {
            traj,
            k: cfg.k_branches,
        };
        run_policy(cfg, Some(&stats), &mut ch, &mut seeded(seed + 1)).unwrap()
    }

    #[test]
    fn epsilon_values() {
        assert_eq!(epsilon(5, 10.0), 1.0);
        assert_eq!(epsilon(20, 10.0), 0.5);
        assert_eq!(epsilon(1, 1.0), 1.0);
    }

    #[test]
    fn explore_groups() {
        assert_eq!(explore_group(0, 8, 4).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(explore_group(1, 8, 4).unwrap(), vec![4, 5, 6, 7]);
        assert_eq!(explore_group(1, 7, 4).unwrap(), vec![4, 5, 6]);
        assert!(explore_group(2, 8, 4).is_err());
    }

    #[test]
    fn exploit_selection() {
        assert_eq!(exploit_select(&[0.9, 0.1, 0.8, 0.7], 3), vec![0, 2, 3]);
        assert_eq!(exploit_select(&[0.5; 6], 4), vec![0, 1, 2, 3]);
        let w = [0.3, 0.9, 0.5, 0.7, 0.2];
        let scaled: Vec<f64> = w.iter().map(|v| v * 0.37).collect();
        assert_eq!(exploit_select(&w, 2), exploit_select(&scaled, 2));
        assert_eq!(exploit_select(&w, 2), vec![1, 3]);
    }

    #[test]
    fn block_accounting() {
        let cfg = config(PolicyMode::Ldm, 10.0, 10_000);
        assert_eq!(cfg.block_len(), 4);
        assert_eq!(cfg.n_blocks(), 2500);
        let out = run(&cfg, 1);
        assert_eq!(out.len(), 10_000);
        // phases only change on block boundaries
        for block in out.chunks(4) {
            assert!(block.iter().all(|o| o.phase == block[0].phase));
        }
        let odd = PolicyConfig {
            n_bands: 7,
            horizon: 10,
            ..cfg
        };
        assert_eq!(odd.n_blocks(), 3);
    }

    #[test]
    fn pure_exploration_observes_every_band_once_per_block() {
        let cfg = config(PolicyMode::Ldm, 1e9, 400);
        let stats = case1();
        let traj = occupancy_trajectory(&stats, cfg.horizon, &mut seeded(3));
        let mut ch = Oracle { traj, k: 4 };
        let out = run_policy(&cfg, None, &mut ch, &mut seeded(4)).unwrap();
        assert!(out.iter().all(|o| o.phase == Phase::Explore && !o.failed));
        for (t, o) in out.iter().enumerate() {
            let group = (t % 4) / 2;
            assert_eq!(o.selected, explore_group(group, 8, 4).unwrap());
        }
        // recount transitions independently of the policy's belief
        let mut belief = BeliefState::new(8);
        for pair in out.chunks(2) {
            belief
                .update_counts(&pair[0].selected, &pair[0].statuses, &pair[1].statuses)
                .unwrap();
        }
        for band in 0..8 {
            assert_eq!(belief.obs_count(band), 100);
        }
    }

    #[test]
    fn ldm_never_fails() {
        let out = run(&config(PolicyMode::Ldm, 10.0, 5000), 7);
        assert!(out.iter().all(|o| !o.failed && o.selected.len() == 4));
        for o in &out {
            let vacant = o.statuses.iter().filter(|b| !**b).count();
            assert_eq!(o.throughput, vacant);
        }
    }

    #[test]
    fn imp_uses_optimal_size_from_first_slot() {
        let out = run(&config(PolicyMode::Imp, 10.0, 1000), 9);
        assert!(out
            .iter()
            .all(|o| o.selected.len() == 7 && o.phase == Phase::Exploit));
        assert!(out.iter().filter(|o| o.failed).all(|o| o.throughput == 0));
    }

    #[test]
    fn imp_needs_truth() {
        let cfg = config(PolicyMode::Imp, 10.0, 10);
        let stats = case1();
        let traj = occupancy_trajectory(&stats, 10, &mut seeded(1));
        let mut ch = Oracle { traj, k: 4 };
        assert!(run_policy(&cfg, None, &mut ch, &mut seeded(2)).is_err());
    }

    #[test]
    fn oldm_grows_the_set_after_enough_observations() {
        let out = run(&config(PolicyMode::Oldm, 10.0, 10_000), 11);
        let early = out[..40].iter().all(|o| o.selected.len() == 4);
        assert!(early);
        assert!(out[8000..].iter().any(|o| o.selected.len() > 4));
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = config(PolicyMode::Oldm, 10.0, 3000);
        assert_eq!(run(&cfg, 13), run(&cfg, 13));
    }

    #[test]
    fn invalid_config_rejected_before_first_slot() {
        let mut cfg = config(PolicyMode::Ldm, 10.0, 10);
        cfg.k_branches = 9;
        assert!(cfg.validate().is_err());
        cfg.k_branches = 4;
        cfg.mu = 1.5;
        assert!(cfg.validate().is_err());
        cfg.mu = 0.1;
        cfg.exploration_coefficient = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn imp_throughput_matches_exact_expectation_when_memoryless() {
        // with lambda = 1 the chains are i.i.d. and beliefs stay at p0, so IMP
        // always senses the same top-M set; compare with the exact mean of
        // vacant * 1{busy <= gamma} over all occupancy patterns of that set
        let stats = BandStatistics::from_stationary(&CASE1_VACANCY, 1.0).unwrap();
        let cfg = config(PolicyMode::Imp, 10.0, 100_000);
        let traj = occupancy_trajectory(&stats, cfg.horizon, &mut seeded(17));
        let mut ch = Oracle { traj, k: 4 };
        let out = run_policy(&cfg, Some(&stats), &mut ch, &mut seeded(18)).unwrap();
        let mean = out.iter().map(|o| o.throughput as f64).sum::<f64>() / out.len() as f64;

        let m = optimize_size(&CASE1_VACANCY, 4).unwrap().size;
        let set = &CASE1_VACANCY[8 - m..];
        let g = crate::reconstruction::gamma(m, 4);
        let mut exact = 0.0;
        for mask in 0u32..(1 << m) {
            let busy = mask.count_ones() as usize;
            let p: f64 = (0..m)
                .map(|i| {
                    if mask >> i & 1 == 1 {
                        1.0 - set[i]
                    } else {
                        set[i]
                    }
                })
                .product();
            if busy <= g {
                exact += p * (m - busy) as f64;
            }
        }
        assert!((mean - exact).abs() < 0.02, "{mean} vs {exact}");
    }
}
