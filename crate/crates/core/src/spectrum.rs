//! Ground-truth spectrum environment.
//!
//! Each of the `N` bands is an independent two-state Markov chain
//! (vacant = `false`, busy = `true`). Busy bands carry flat-spectrum
//! circularly-symmetric complex Gaussian content on a grid of `F` bins per
//! band; vacant bands carry nothing.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Stationary vacancy vector of the first reference scenario (eight bands).
pub const CASE1_VACANCY: [f64; 8] = [0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];
/// Stationary vacancy vector of the second reference scenario (eight bands).
pub const CASE2_VACANCY: [f64; 8] = [0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.80, 0.90];

/// True per-band transition probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct BandStatistics {
    p01: Vec<f64>,
    p10: Vec<f64>,
}

impl BandStatistics {
    /// `p01[n]` is P(busy at t+1 | vacant at t), `p10[n]` is P(vacant at t+1 | busy at t).
    pub fn new(p01: Vec<f64>, p10: Vec<f64>) -> Result<Self> {
        if p01.is_empty() {
            return Err(Error::config("p01", "at least one band is required"));
        }
        if p01.len() != p10.len() {
            return Err(Error::config(
                "p10",
                format!("length {} differs from p01 length {}", p10.len(), p01.len()),
            ));
        }
        for (name, v) in [("p01", &p01), ("p10", &p10)] {
            if let Some((n, p)) = v
                .iter()
                .enumerate()
                .find(|(_, p)| !(0.0..=1.0).contains(*p))
            {
                return Err(Error::config(
                    name,
                    format!("band {n}: {p} is not a probability"),
                ));
            }
        }
        if let Some(n) = (0..p01.len()).find(|&n| p01[n] + p10[n] <= 0.0) {
            return Err(Error::config(
                "p10",
                format!("band {n}: p01 + p10 = 0 has no stationary distribution"),
            ));
        }
        Ok(Self { p01, p10 })
    }

    /// Builds chains with the given stationary vacancy `p0` and mixing speed
    /// `lambda`: `p10 = lambda * p0`, `p01 = lambda * (1 - p0)`.
    pub fn from_stationary(p0: &[f64], lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::config(
                "lambda_mixing",
                format!("{lambda} is outside (0, 1]"),
            ));
        }
        if let Some(p) = p0.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::config(
                "stationary",
                format!("{p} is not a probability"),
            ));
        }
        let p10 = p0.iter().map(|p| lambda * p).collect();
        let p01 = p0.iter().map(|p| lambda * (1.0 - p)).collect();
        Self::new(p01, p10)
    }

    pub fn n_bands(&self) -> usize {
        self.p01.len()
    }

    pub fn p01(&self) -> &[f64] {
        &self.p01
    }

    pub fn p10(&self) -> &[f64] {
        &self.p10
    }

    /// P(vacant at t+1 | vacant at t).
    pub fn p00(&self) -> Vec<f64> {
        self.p01.iter().map(|p| 1.0 - p).collect()
    }

    /// Stationary vacancy probability `p10 / (p10 + p01)` of every band.
    pub fn stationary_vacancy(&self) -> Vec<f64> {
        // construction guarantees a positive denominator
        self.p10
            .iter()
            .zip(&self.p01)
            .map(|(p10, p01)| p10 / (p10 + p01))
            .collect()
    }
}

/// Repeats `base` cyclically until `n` entries are produced.
pub fn extend_by_repetition(base: &[f64], n: usize) -> Vec<f64> {
    base.iter().copied().cycle().take(n).collect()
}

/// Busy/vacant status of every band at one time slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OccupancyState {
    pub busy: Vec<bool>,
    pub slot_index: u64,
}

impl OccupancyState {
    pub fn n_bands(&self) -> usize {
        self.busy.len()
    }

    pub fn busy_count(&self) -> usize {
        self.busy.iter().filter(|&&b| b).count()
    }
}

/// Draws every band from its stationary distribution.
pub fn init_occupancy(stats: &BandStatistics, rng: &mut SimRng) -> OccupancyState {
    let busy = stats
        .stationary_vacancy()
        .into_iter()
        .map(|p0| rng.random::<f64>() >= p0)
        .collect();
    OccupancyState {
        busy,
        slot_index: 0,
    }
}

/// Advances every band one step along its own chain.
pub fn step_occupancy(
    state: &OccupancyState,
    stats: &BandStatistics,
    rng: &mut SimRng,
) -> Result<OccupancyState> {
    if state.n_bands() != stats.n_bands() {
        return Err(Error::config(
            "n_bands",
            format!(
                "occupancy has {} bands but statistics describe {}",
                state.n_bands(),
                stats.n_bands()
            ),
        ));
    }
    let busy = state
        .busy
        .iter()
        .enumerate()
        .map(|(n, &busy)| {
            let u: f64 = rng.random();
            if busy {
                u >= stats.p10[n]
            } else {
                u < stats.p01[n]
            }
        })
        .collect();
    Ok(OccupancyState {
        busy,
        slot_index: state.slot_index + 1,
    })
}

/// Occupancy trajectory of `horizon` slots, starting from the stationary law.
pub fn occupancy_trajectory(
    stats: &BandStatistics,
    horizon: usize,
    rng: &mut SimRng,
) -> Vec<OccupancyState> {
    let mut out = Vec::with_capacity(horizon);
    if horizon == 0 {
        return out;
    }
    let mut state = init_occupancy(stats, rng);
    for _ in 1..horizon {
        let next = step_occupancy(&state, stats, rng).expect("lengths match by construction");
        out.push(std::mem::replace(&mut state, next));
    }
    out.push(state);
    out
}

/// Frequency-domain content of all bands for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSpectra {
    /// `N x F` grid, one row per band.
    pub grid: DMatrix<Complex64>,
    /// Average per-bin power of each row.
    pub band_power: Vec<f64>,
}

impl BandSpectra {
    pub fn bins_per_band(&self) -> usize {
        self.grid.ncols()
    }

    /// Rows of the selected bands, in selection order.
    pub fn rows(&self, selected: &[usize]) -> DMatrix<Complex64> {
        DMatrix::from_fn(selected.len(), self.grid.ncols(), |i, f| {
            self.grid[(selected[i], f)]
        })
    }
}

/// Fills busy rows with complex Gaussian bins scaled to exactly `signal_power`
/// average power per bin; vacant rows stay zero.
pub fn synthesize_band_spectra(
    state: &OccupancyState,
    bins_per_band: usize,
    signal_power: f64,
    rng: &mut SimRng,
) -> Result<BandSpectra> {
    if bins_per_band == 0 {
        return Err(Error::config("bins_per_band", "must be at least 1"));
    }
    if signal_power.is_nan() || signal_power <= 0.0 {
        return Err(Error::config("signal_power", "must be positive"));
    }
    let n = state.n_bands();
    let mut grid = DMatrix::<Complex64>::zeros(n, bins_per_band);
    let mut band_power = vec![0.0; n];
    for (band, &busy) in state.busy.iter().enumerate() {
        if !busy {
            continue;
        }
        let mut energy = 0.0;
        for f in 0..bins_per_band {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = Complex64::new(re, im);
            energy += z.norm_sqr();
            grid[(band, f)] = z;
        }
        // a zero-energy Gaussian row has probability zero
        let scale = (signal_power * bins_per_band as f64 / energy).sqrt();
        for f in 0..bins_per_band {
            grid[(band, f)] *= scale;
        }
        band_power[band] = signal_power;
    }
    Ok(BandSpectra { grid, band_power })
}
