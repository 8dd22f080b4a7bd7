//! Seeded Monte-Carlo experiments.
//!
//! Within a replication every policy sees the same occupancy trajectory, the
//! same mixing matrix and the same per-slot band content (common random
//! numbers). Replications run in parallel and are merged in index order, so
//! results do not depend on scheduling.

use rayon::prelude::*;

use super::config::{ExperimentConfig, RsMode};
use crate::error::{Error, Result};
use crate::policy::{run_policy, PolicyMode, SensingChannel, SlotOutcome};
use crate::reconstruction::{
    oracle_sense, signal_sense, RecoveryConfig, RecoveryParams, SenseResult,
};
use crate::rng::{derive_seed, seeded, stream, Stream};
use crate::sns::{draw_sensing_matrix, measure, SensingMatrix};
use crate::spectrum::{
    occupancy_trajectory, synthesize_band_spectra, BandStatistics, OccupancyState,
};

/// Applies the sparsity rule to the ground truth.
pub struct OracleChannel<'a> {
    pub trajectory: &'a [OccupancyState],
    pub k_branches: usize,
}

impl SensingChannel for OracleChannel<'_> {
    fn sense(&mut self, slot: usize, selected: &[usize], _prior: &[f64]) -> Result<SenseResult> {
        let state = self
            .trajectory
            .get(slot)
            .ok_or_else(|| Error::usage(format!("slot {slot} beyond trajectory")))?;
        let truth: Vec<bool> = selected.iter().map(|&b| state.busy[b]).collect();
        Ok(oracle_sense(&truth, self.k_branches))
    }
}

/// Synthesises, measures and reconstructs every slot.
pub struct SignalChannel<'a> {
    pub trajectory: &'a [OccupancyState],
    pub matrix: SensingMatrix,
    pub params: RecoveryParams,
    pub bins_per_band: usize,
    pub signal_power: f64,
    /// Base seed of the per-slot streams.
    pub slot_seed: u64,
    pub redraw_matrix: bool,
}

impl SensingChannel for SignalChannel<'_> {
    fn sense(&mut self, slot: usize, selected: &[usize], prior: &[f64]) -> Result<SenseResult> {
        let state = self
            .trajectory
            .get(slot)
            .ok_or_else(|| Error::usage(format!("slot {slot} beyond trajectory")))?;
        let mut rng = stream(self.slot_seed, Stream::Slot, slot as u64);
        let spectra =
            synthesize_band_spectra(state, self.bins_per_band, self.signal_power, &mut rng)?;
        let k = self.matrix.k_branches();
        let fresh;
        let matrix = if self.redraw_matrix {
            fresh = draw_sensing_matrix(k, self.matrix.n_bands(), &mut rng)?;
            &fresh
        } else {
            &self.matrix
        };
        let a_sub = matrix.select_submatrix(selected)?;
        let batch = measure(
            &a_sub,
            &spectra.rows(selected),
            selected,
            self.params.noise_variance,
            &mut rng,
        )?;
        let activity = prior.iter().map(|p| 1.0 - p).collect();
        let cfg = RecoveryConfig::new(k, activity, &self.params)?;
        signal_sense(&batch, &a_sub, &cfg)
    }
}

/// Per-replication totals.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationSummary {
    pub index: usize,
    /// Total throughput per reported policy.
    pub total_throughput: Vec<f64>,
    /// Final cumulative regret per reported policy.
    pub final_regret: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub policies: Vec<PolicyMode>,
    /// `[policy][slot]` mean instantaneous throughput.
    pub mean_throughput: Vec<Vec<f64>>,
    /// `[policy][slot]` mean cumulative regret against IMP.
    pub mean_regret: Vec<Vec<f64>>,
    pub replications: Vec<ReplicationSummary>,
}

impl MetricSeries {
    pub fn horizon(&self) -> usize {
        self.mean_throughput.first().map_or(0, Vec::len)
    }

    pub fn index_of(&self, mode: PolicyMode) -> Option<usize> {
        self.policies.iter().position(|&p| p == mode)
    }

    pub fn throughput(&self, mode: PolicyMode) -> Option<&[f64]> {
        self.index_of(mode)
            .map(|i| self.mean_throughput[i].as_slice())
    }

    pub fn regret(&self, mode: PolicyMode) -> Option<&[f64]> {
        self.index_of(mode).map(|i| self.mean_regret[i].as_slice())
    }

    pub fn final_regret(&self, mode: PolicyMode) -> Option<f64> {
        self.regret(mode).map(|r| r.last().copied().unwrap_or(0.0))
    }
}

/// Cumulative regret: running sum of `imp[t] - policy[t]`.
pub fn compute_regret(policy: &[f64], imp: &[f64]) -> Result<Vec<f64>> {
    if policy.len() != imp.len() {
        return Err(Error::usage(format!(
            "series lengths differ: {} vs {}",
            policy.len(),
            imp.len()
        )));
    }
    Ok(imp
        .iter()
        .zip(policy)
        .scan(0.0, |acc, (i, p)| {
            *acc += i - p;
            Some(*acc)
        })
        .collect())
}

/// Throughput credited to a slot: bands reported vacant that truly are.
fn credited(outcome: &SlotOutcome, state: &OccupancyState) -> f64 {
    if outcome.failed {
        return 0.0;
    }
    outcome
        .selected
        .iter()
        .zip(&outcome.statuses)
        .filter(|(&b, &busy)| !busy && !state.busy[b])
        .count() as f64
}

/// Per-slot throughput of each mode in `modes` for replication `index`.
pub fn run_replication(
    cfg: &ExperimentConfig,
    stats: &BandStatistics,
    modes: &[PolicyMode],
    index: usize,
) -> Result<Vec<Vec<f64>>> {
    let r = index as u64;
    let trajectory = occupancy_trajectory(
        stats,
        cfg.horizon,
        &mut stream(cfg.seed, Stream::Occupancy, r),
    );
    let matrix = match cfg.rs_mode {
        RsMode::Signal => Some(draw_sensing_matrix(
            cfg.k_branches,
            cfg.n_bands,
            &mut stream(cfg.seed, Stream::Matrix, r),
        )?),
        RsMode::Oracle => None,
    };
    let policy_seed = derive_seed(cfg.seed, Stream::Policy, r);
    let slot_seed = derive_seed(cfg.seed, Stream::Slot, r);

    modes
        .iter()
        .map(|&mode| {
            let pcfg = cfg.policy_config(mode);
            let mut rng = seeded(policy_seed);
            let outcomes = match &matrix {
                None => {
                    let mut ch = OracleChannel {
                        trajectory: &trajectory,
                        k_branches: cfg.k_branches,
                    };
                    run_policy(&pcfg, Some(stats), &mut ch, &mut rng)?
                }
                Some(m) => {
                    let mut ch = SignalChannel {
                        trajectory: &trajectory,
                        matrix: m.clone(),
                        params: cfg.recovery_params(),
                        bins_per_band: cfg.bins_per_band,
                        signal_power: cfg.signal_power,
                        slot_seed,
                        redraw_matrix: cfg.redraw_matrix,
                    };
                    run_policy(&pcfg, Some(stats), &mut ch, &mut rng)?
                }
            };
            Ok(outcomes
                .iter()
                .zip(&trajectory)
                .map(|(o, s)| credited(o, s))
                .collect())
        })
        .collect()
}

/// Runs every requested policy (plus IMP as the regret baseline) over all
/// replications and averages per slot.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricSeries> {
    cfg.validate()?;
    let stats = cfg.statistics()?;
    let reported = cfg.unique_policies();
    let mut modes = reported.clone();
    if !modes.contains(&PolicyMode::Imp) {
        modes.push(PolicyMode::Imp);
    }
    let imp = modes
        .iter()
        .position(|&m| m == PolicyMode::Imp)
        .expect("IMP added above");

    let per_rep: Vec<Vec<Vec<f64>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(cfg, &stats, &modes, r))
        .collect::<Result<_>>()?;

    let horizon = cfg.horizon;
    let mut sums = vec![vec![0.0; horizon]; modes.len()];
    let mut summaries = Vec::with_capacity(cfg.replications);
    for (index, rep) in per_rep.iter().enumerate() {
        for (acc, series) in sums.iter_mut().zip(rep) {
            for (a, v) in acc.iter_mut().zip(series) {
                *a += v;
            }
        }
        let imp_total: f64 = rep[imp].iter().sum();
        let totals: Vec<f64> = reported
            .iter()
            .map(|m| rep[modes.iter().position(|x| x == m).unwrap()].iter().sum())
            .collect();
        summaries.push(ReplicationSummary {
            index,
            final_regret: totals.iter().map(|t| imp_total - t).collect(),
            total_throughput: totals,
        });
    }
    let reps = cfg.replications as f64;
    let means: Vec<Vec<f64>> = sums
        .into_iter()
        .map(|s| s.into_iter().map(|v| v / reps).collect())
        .collect();

    let mut mean_throughput = Vec::with_capacity(reported.len());
    let mut mean_regret = Vec::with_capacity(reported.len());
    for m in &reported {
        let i = modes.iter().position(|x| x == m).unwrap();
        mean_regret.push(compute_regret(&means[i], &means[imp])?);
        mean_throughput.push(means[i].clone());
    }
    Ok(MetricSeries {
        policies: reported,
        mean_throughput,
        mean_regret,
        replications: summaries,
    })
}
