//! Reconstruction and sensing of the selected bands.
//!
//! Two modes are provided. [`oracle_sense`] applies the sparsity rule to the
//! ground-truth statuses directly. [`signal_sense`] runs the full chain on
//! compressed measurements: least-squares recovery when `|A_N| <= K`, a
//! greedy Bayesian support search otherwise, followed by energy detection.
//!
//! Reconstruction of `|A_N|` bands from `K` branches succeeds when at most
//! `gamma(|A_N|, K)` of them are busy, where gamma is `|A_N|` for
//! `|A_N| <= K` and `floor(K / 2)` beyond.

mod energy;
mod fbmp;

pub use energy::{energy_detect, energy_threshold};
pub use fbmp::{fbmp_recover, support_log_score, FbmpEstimate};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sns::{complexify, MeasurementBatch};

/// Noise variances below this fraction of the signal variance are treated as
/// this floor, which keeps covariance matrices invertible in noiseless runs.
pub(crate) const NOISE_FLOOR_REL: f64 = 1e-12;

/// Standard deviations of residual noise energy tolerated before the residual
/// is counted as unexplained signal.
const RESIDUAL_NOISE_SIGMAS: f64 = 3.0;

/// Largest tolerable busy count for `n_selected` bands sensed with `k` branches.
pub fn gamma(n_selected: usize, k: usize) -> usize {
    if n_selected <= k {
        n_selected
    } else {
        k / 2
    }
}

/// Outcome of sensing one selected band set.
#[derive(Debug, Clone, PartialEq)]
pub struct SenseResult {
    /// Detected status per selected band (`true` = busy), in selection order.
    pub statuses: Vec<bool>,
    /// Reconstruction failed; statuses must not be used for learning.
    pub failed: bool,
    /// Residual energy not explained by the recovered bands and the noise
    /// floor, relative to the measurement energy. Signal mode only.
    pub residual_ratio: Option<f64>,
}

impl SenseResult {
    pub fn busy_count(&self) -> usize {
        self.statuses.iter().filter(|&&b| b).count()
    }

    /// Vacant bands delivered by this slot, zero on failure.
    pub fn throughput(&self) -> usize {
        if self.failed {
            0
        } else {
            self.statuses.len() - self.busy_count()
        }
    }
}

/// Applies the sparsity criterion to the true statuses of the selected bands.
pub fn oracle_sense(true_statuses: &[bool], k: usize) -> SenseResult {
    let busy = true_statuses.iter().filter(|&&b| b).count();
    SenseResult {
        statuses: true_statuses.to_vec(),
        failed: busy > gamma(true_statuses.len(), k),
        residual_ratio: None,
    }
}

/// Static recovery hyperparameters shared by every slot of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryParams {
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub search_breadth: usize,
    pub energy_fa_rate: f64,
    pub failure_threshold: f64,
}

impl Default for RecoveryParams {
    fn default() -> Self {
        Self {
            signal_variance: 1.0,
            noise_variance: 0.0,
            search_breadth: 5,
            energy_fa_rate: 0.05,
            failure_threshold: 0.1,
        }
    }
}

/// Per-slot recovery configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryConfig {
    pub gamma_threshold: usize,
    /// Prior probability that each selected band is busy.
    pub prior_activity: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub search_breadth: usize,
    pub energy_fa_rate: f64,
    pub failure_threshold: f64,
}

impl RecoveryConfig {
    pub fn new(k: usize, prior_activity: Vec<f64>, params: &RecoveryParams) -> Result<Self> {
        if let Some(p) = prior_activity.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::usage(format!(
                "prior activity {p} is not a probability"
            )));
        }
        if params.signal_variance.is_nan() || params.signal_variance <= 0.0 {
            return Err(Error::config("signal_power", "must be positive"));
        }
        if params.noise_variance.is_nan() || params.noise_variance < 0.0 {
            return Err(Error::config(
                "snr_db",
                "noise variance must be non-negative",
            ));
        }
        if params.search_breadth == 0 {
            return Err(Error::config("search_breadth", "must be at least 1"));
        }
        if !(params.energy_fa_rate > 0.0 && params.energy_fa_rate < 1.0) {
            return Err(Error::config("energy_fa_rate", "must lie in (0, 1)"));
        }
        Ok(Self {
            gamma_threshold: gamma(prior_activity.len(), k),
            prior_activity,
            signal_variance: params.signal_variance,
            noise_variance: params.noise_variance,
            search_breadth: params.search_breadth,
            energy_fa_rate: params.energy_fa_rate,
            failure_threshold: params.failure_threshold,
        })
    }

    pub(crate) fn effective_noise_variance(&self) -> f64 {
        self.noise_variance
            .max(NOISE_FLOOR_REL * self.signal_variance)
    }
}

/// Least-squares recovery for `|A_N| <= K`, one solve per frequency bin.
pub fn direct_solve(batch: &MeasurementBatch, a_sub: &DMatrix<f64>) -> Result<DMatrix<Complex64>> {
    let (k, m) = a_sub.shape();
    if m > k {
        return Err(Error::usage(format!(
            "direct solve needs at most K={k} bands, got {m}"
        )));
    }
    if batch.samples.nrows() != k {
        return Err(Error::usage(format!(
            "{} measurement rows for a {k}-row mixing matrix",
            batch.samples.nrows()
        )));
    }
    let pinv = pseudo_inverse(a_sub)?;
    Ok(complexify(&pinv) * &batch.samples)
}

fn pseudo_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = a.clone().svd(true, true);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if max.is_nan() || max <= 0.0 || min <= 1e-10 * max {
        return Err(Error::Numerical(format!(
            "mixing sub-matrix is numerically singular (condition {:.3e})",
            max / min
        )));
    }
    svd.pseudo_inverse(0.0)
        .map_err(|e| Error::Numerical(e.to_string()))
}

/// Measurement energy left unexplained after removing the expected noise
/// contribution, as an amplitude ratio to the total measurement energy.
pub(crate) fn excess_residual_ratio(
    residual: &DMatrix<Complex64>,
    measurement: &DMatrix<Complex64>,
    free_dims: usize,
    noise_variance: f64,
) -> f64 {
    let total = measurement.norm_squared();
    if total == 0.0 {
        return 0.0;
    }
    let cells = (free_dims * measurement.ncols()) as f64;
    let expected = cells * noise_variance;
    let slack = RESIDUAL_NOISE_SIGMAS * noise_variance * cells.sqrt();
    let excess = (residual.norm_squared() - expected - slack).max(0.0);
    (excess / total).sqrt()
}

/// Recovers, detects and flags one slot's measurement.
///
/// `|A_N| <= K` is solved directly; larger sets go through the Bayesian
/// support search. The slot is flagged failed when more than gamma bands are
/// detected busy or the residual ratio exceeds `cfg.failure_threshold`.
pub fn signal_sense(
    batch: &MeasurementBatch,
    a_sub: &DMatrix<f64>,
    cfg: &RecoveryConfig,
) -> Result<SenseResult> {
    let (k, m) = a_sub.shape();
    if cfg.prior_activity.len() != m {
        return Err(Error::usage(format!(
            "{} prior entries for {m} selected bands",
            cfg.prior_activity.len()
        )));
    }
    let noise = cfg.effective_noise_variance();
    let (recovered, band_noise, residual_ratio) = if m <= k {
        let x = direct_solve(batch, a_sub)?;
        let gram_inv = (a_sub.transpose() * a_sub)
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular Gram matrix".into()))?;
        let band_noise: Vec<f64> = (0..m).map(|n| noise * gram_inv[(n, n)]).collect();
        let residual = &batch.samples - complexify(a_sub) * &x;
        let ratio = excess_residual_ratio(&residual, &batch.samples, k - m, cfg.noise_variance);
        (x, band_noise, ratio)
    } else {
        let est = fbmp_recover(batch, a_sub, cfg)?;
        let mut band_noise = vec![noise; m];
        if !est.support.is_empty() {
            let a_s = a_sub.select_columns(&est.support);
            if let Some(g) = (a_s.transpose() * &a_s).try_inverse() {
                for (i, &n) in est.support.iter().enumerate() {
                    band_noise[n] = noise * g[(i, i)];
                }
            }
        }
        (est.spectra, band_noise, est.residual_ratio)
    };
    let statuses = energy_detect(&recovered, &band_noise, cfg.energy_fa_rate)?;
    let busy = statuses.iter().filter(|&&b| b).count();
    Ok(SenseResult {
        failed: busy > cfg.gamma_threshold || residual_ratio > cfg.failure_threshold,
        statuses,
        residual_ratio: Some(residual_ratio),
    })
}
