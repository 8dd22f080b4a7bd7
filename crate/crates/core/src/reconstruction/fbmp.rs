//! Greedy Bayesian support search over band activity patterns.
//!
//! Every frequency bin shares the same support. Given support `s`, bins are
//! modelled as `z_f ~ CN(0, Phi_s)` with
//! `Phi_s = noise * I + signal * A_s A_s^T`, so the log-likelihood of the
//! whole measurement depends on the data only through `S = Re(Z Z^H)`:
//!
//! `log p(Z | s) = -F log det Phi_s - tr(Phi_s^{-1} S) + const`.
//!
//! The search grows supports one band at a time, keeping the `D` best
//! candidates of each size, and never looks past `gamma` bands.

use std::collections::BTreeSet;

use nalgebra::{Cholesky, DMatrix, Dyn};
use num_complex::Complex64;

use super::{excess_residual_ratio, RecoveryConfig};
use crate::error::{Error, Result};
use crate::sns::{complexify, MeasurementBatch};

/// Probabilities are clamped away from 0 and 1 before taking logs.
const PRIOR_CLAMP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FbmpEstimate {
    /// Indices into the selected-band list, ascending.
    pub support: Vec<usize>,
    /// `|A_N| x F` conditional-mean spectra; rows outside the support are zero.
    pub spectra: DMatrix<Complex64>,
    pub residual_ratio: f64,
    pub log_score: f64,
}

struct Model<'a> {
    a: &'a DMatrix<f64>,
    scatter: DMatrix<f64>,
    bins: f64,
    signal: f64,
    noise: f64,
    log_active: Vec<f64>,
    log_inactive: Vec<f64>,
}

impl<'a> Model<'a> {
    fn new(batch: &MeasurementBatch, a: &'a DMatrix<f64>, cfg: &RecoveryConfig) -> Self {
        let z = &batch.samples;
        let scatter = (z * z.adjoint()).map(|c| c.re);
        let clamp = |p: f64| p.clamp(PRIOR_CLAMP, 1.0 - PRIOR_CLAMP);
        Self {
            a,
            scatter,
            bins: z.ncols() as f64,
            signal: cfg.signal_variance,
            noise: cfg.effective_noise_variance(),
            log_active: cfg.prior_activity.iter().map(|&p| clamp(p).ln()).collect(),
            log_inactive: cfg
                .prior_activity
                .iter()
                .map(|&p| (1.0 - clamp(p)).ln())
                .collect(),
        }
    }

    fn covariance(&self, support: &[usize]) -> DMatrix<f64> {
        let k = self.a.nrows();
        let mut phi = DMatrix::identity(k, k) * self.noise;
        if !support.is_empty() {
            let a_s = self.a.select_columns(support);
            phi += &a_s * a_s.transpose() * self.signal;
        }
        phi
    }

    fn log_prior(&self, support: &[usize]) -> f64 {
        (0..self.log_active.len())
            .map(|n| {
                if support.contains(&n) {
                    self.log_active[n]
                } else {
                    self.log_inactive[n]
                }
            })
            .sum()
    }

    fn score(&self, support: &[usize]) -> Result<(f64, Cholesky<f64, Dyn>)> {
        let chol = Cholesky::new(self.covariance(support)).ok_or_else(|| {
            Error::Numerical("support covariance is not positive definite".into())
        })?;
        let log_det: f64 = 2.0
            * chol
                .l_dirty()
                .diagonal()
                .iter()
                .map(|d| d.ln())
                .sum::<f64>();
        let trace = chol.solve(&self.scatter).trace();
        Ok((-self.bins * log_det - trace + self.log_prior(support), chol))
    }
}

/// Log posterior score (up to a constant) of one candidate support.
pub fn support_log_score(
    batch: &MeasurementBatch,
    a_sub: &DMatrix<f64>,
    cfg: &RecoveryConfig,
    support: &[usize],
) -> Result<f64> {
    check_inputs(batch, a_sub, cfg)?;
    Model::new(batch, a_sub, cfg).score(support).map(|(s, _)| s)
}

fn check_inputs(
    batch: &MeasurementBatch,
    a_sub: &DMatrix<f64>,
    cfg: &RecoveryConfig,
) -> Result<()> {
    if batch.samples.nrows() != a_sub.nrows() {
        return Err(Error::usage(format!(
            "{} measurement rows for a {}-row mixing matrix",
            batch.samples.nrows(),
            a_sub.nrows()
        )));
    }
    if cfg.prior_activity.len() != a_sub.ncols() {
        return Err(Error::usage(format!(
            "{} prior entries for {} selected bands",
            cfg.prior_activity.len(),
            a_sub.ncols()
        )));
    }
    Ok(())
}

/// Approximate MAP support with its conditional-mean spectra.
pub fn fbmp_recover(
    batch: &MeasurementBatch,
    a_sub: &DMatrix<f64>,
    cfg: &RecoveryConfig,
) -> Result<FbmpEstimate> {
    check_inputs(batch, a_sub, cfg)?;
    let model = Model::new(batch, a_sub, cfg);
    let m = a_sub.ncols();
    let max_size = cfg.gamma_threshold.min(m);

    let (empty_score, empty_chol) = model.score(&[])?;
    let mut best = (empty_score, Vec::new(), empty_chol);
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];

    for _ in 0..max_size {
        let candidates: BTreeSet<Vec<usize>> = frontier
            .iter()
            .flat_map(|parent| {
                (0..m).filter(|n| !parent.contains(n)).map(move |n| {
                    let mut child = parent.clone();
                    child.push(n);
                    child.sort_unstable();
                    child
                })
            })
            .collect();
        let mut scored = Vec::with_capacity(candidates.len());
        for support in candidates {
            let (score, chol) = model.score(&support)?;
            scored.push((score, support, chol));
        }
        // descending score, lexicographic support on ties
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        scored.truncate(cfg.search_breadth);
        if let Some(top) = scored.first() {
            if top.0 > best.0 {
                best = top.clone();
            }
        }
        frontier = scored.into_iter().map(|(_, s, _)| s).collect();
    }

    let (log_score, support, chol) = best;
    let z = &batch.samples;
    let mut spectra = DMatrix::<Complex64>::zeros(m, z.ncols());
    let mut fitted = DMatrix::<Complex64>::zeros(z.nrows(), z.ncols());
    if !support.is_empty() {
        let a_s = a_sub.select_columns(&support);
        // X_s = signal * A_s^T Phi^{-1} Z
        let gain = (chol.solve(&a_s) * model.signal).transpose();
        let x_s = complexify(&gain) * z;
        fitted = complexify(&a_s) * &x_s;
        for (i, &n) in support.iter().enumerate() {
            spectra.row_mut(n).copy_from(&x_s.row(i));
        }
    }
    let residual = z - fitted;
    let free = a_sub.nrows().saturating_sub(support.len());
    let residual_ratio = excess_residual_ratio(&residual, z, free, cfg.noise_variance);
    Ok(FbmpEstimate {
        support,
        spectra,
        residual_ratio,
        log_score,
    })
}
