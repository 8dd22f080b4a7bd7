//! Simulated sub-Nyquist front end.
//!
//! The analog mixing/filtering chain is not modelled; the measurement
//! equation is applied directly per frequency bin:
//! `Z[:, f] = A_sub * X[:, f] + W[:, f]`, where `A_sub` holds the mixing
//! coefficients of the selected bands.

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Number of `K`-column subsets checked for full rank when the master matrix
/// is drawn. All subsets are checked when there are at most this many.
const RANK_CHECK_SUBSETS: usize = 512;

/// Relative singular-value tolerance for numerical rank.
const RANK_TOL: f64 = 1e-10;

/// Receiver signal-to-noise ratio per busy band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Snr {
    Db(f64),
    Named(SnrKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrKeyword {
    Noiseless,
}

impl Snr {
    pub const NOISELESS: Snr = Snr::Named(SnrKeyword::Noiseless);

    /// Per-branch complex noise variance giving this SNR for a band of `signal_power`.
    pub fn noise_power(self, signal_power: f64) -> f64 {
        match self {
            Snr::Db(db) => signal_power * 10f64.powf(-db / 10.0),
            Snr::Named(SnrKeyword::Noiseless) => 0.0,
        }
    }

    pub fn is_noiseless(self) -> bool {
        matches!(self, Snr::Named(SnrKeyword::Noiseless))
    }
}

impl std::fmt::Display for Snr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Snr::Db(db) => write!(f, "{db}"),
            Snr::Named(SnrKeyword::Noiseless) => write!(f, "noiseless"),
        }
    }
}

impl std::str::FromStr for Snr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("noiseless") || s.eq_ignore_ascii_case("inf") {
            return Ok(Snr::NOISELESS);
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Snr::Db)
            .ok_or_else(|| {
                Error::config(
                    "snr_db",
                    format!("`{s}` is neither a number nor `noiseless`"),
                )
            })
    }
}

/// `K x N` master matrix of real mixing coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    entries: DMatrix<f64>,
}

impl SensingMatrix {
    /// Wraps an explicit matrix. No rank check is applied.
    pub fn from_entries(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.nrows() > entries.ncols() {
            return Err(Error::config(
                "k_branches",
                format!(
                    "need 1 <= K <= N, got K={} N={}",
                    entries.nrows(),
                    entries.ncols()
                ),
            ));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn k_branches(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_bands(&self) -> usize {
        self.entries.ncols()
    }

    /// Columns at `selected`, in selection order.
    pub fn select_submatrix(&self, selected: &[usize]) -> Result<DMatrix<f64>> {
        validate_selection(selected, self.n_bands())?;
        Ok(self.entries.select_columns(selected))
    }
}

pub(crate) fn validate_selection(selected: &[usize], n_bands: usize) -> Result<()> {
    if let Some(&n) = selected.iter().find(|&&n| n >= n_bands) {
        return Err(Error::usage(format!(
            "band index {n} out of range 0..{n_bands}"
        )));
    }
    if !selected.iter().all_unique() {
        return Err(Error::usage(format!(
            "duplicate band index in {selected:?}"
        )));
    }
    Ok(())
}

/// Numerical rank via singular values.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * max).count()
}

fn has_full_kcolumn_rank(entries: &DMatrix<f64>, rng: &mut SimRng) -> bool {
    let (k, n) = entries.shape();
    if numerical_rank(entries) < k {
        return false;
    }
    let total = binomial(n, k);
    if total <= RANK_CHECK_SUBSETS as u128 {
        (0..n)
            .combinations(k)
            .all(|cols| numerical_rank(&entries.select_columns(&cols)) == k)
    } else {
        (0..RANK_CHECK_SUBSETS).all(|_| {
            let cols = sample(rng, n, k).into_vec();
            numerical_rank(&entries.select_columns(&cols)) == k
        })
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Draws an i.i.d. standard Gaussian `K x N` matrix whose `K`-column
/// sub-matrices have full rank. A rank-deficient draw is redrawn once.
pub fn draw_sensing_matrix(k: usize, n: usize, rng: &mut SimRng) -> Result<SensingMatrix> {
    if k == 0 || k > n {
        return Err(Error::config(
            "k_branches",
            format!("need 1 <= K <= N, got K={k} N={n}"),
        ));
    }
    for _ in 0..2 {
        let entries = DMatrix::from_fn(k, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        if has_full_kcolumn_rank(&entries, rng) {
            return Ok(SensingMatrix { entries });
        }
    }
    Err(Error::Numerical(format!(
        "two consecutive {k}x{n} Gaussian draws were rank deficient"
    )))
}

/// Compressed samples of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBatch {
    /// `K x F`, one column per frequency bin.
    pub samples: DMatrix<Complex64>,
    pub selected: Vec<usize>,
    pub noise_power: f64,
}

impl MeasurementBatch {
    pub fn k_branches(&self) -> usize {
        self.samples.nrows()
    }
}

pub(crate) fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Applies the measurement equation to the rows `spectra` of the selected
/// bands, adding per-branch complex AWGN of variance `noise_power`.
pub fn measure(
    a_sub: &DMatrix<f64>,
    spectra: &DMatrix<Complex64>,
    selected: &[usize],
    noise_power: f64,
    rng: &mut SimRng,
) -> Result<MeasurementBatch> {
    if a_sub.ncols() != spectra.nrows() {
        return Err(Error::usage(format!(
            "mixing matrix has {} columns but {} band rows were given",
            a_sub.ncols(),
            spectra.nrows()
        )));
    }
    if selected.len() != a_sub.ncols() {
        return Err(Error::usage(format!(
            "{} selected bands for a {}-column mixing matrix",
            selected.len(),
            a_sub.ncols()
        )));
    }
    if noise_power.is_nan() || noise_power < 0.0 {
        return Err(Error::config("snr_db", "noise power must be non-negative"));
    }
    let mut samples = complexify(a_sub) * spectra;
    if noise_power > 0.0 {
        let sd = (noise_power / 2.0).sqrt();
        for z in samples.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z += Complex64::new(sd * re, sd * im);
        }
    }
    Ok(MeasurementBatch {
        samples,
        selected: selected.to_vec(),
        noise_power,
    })
}
