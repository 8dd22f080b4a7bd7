use nalgebra::DMatrix;
use num_complex::Complex64;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Energy threshold for a band of `bins` complex bins whose noise-only bins
/// have variance `noise_variance`, at false-alarm rate `fa_rate`.
///
/// Under noise only, `2 E / noise_variance` is chi-square with `2 * bins`
/// degrees of freedom.
pub fn energy_threshold(bins: usize, noise_variance: f64, fa_rate: f64) -> Result<f64> {
    if !(fa_rate > 0.0 && fa_rate < 1.0) {
        return Err(Error::config("energy_fa_rate", "must lie in (0, 1)"));
    }
    let chi = ChiSquared::new(2.0 * bins as f64)
        .map_err(|e| Error::Numerical(format!("chi-square law: {e}")))?;
    Ok(noise_variance * chi.inverse_cdf(1.0 - fa_rate) / 2.0)
}

/// Declares row `n` of `spectra` busy when its energy exceeds the noise-only
/// `(1 - fa_rate)` quantile for variance `noise_variance[n]`.
pub fn energy_detect(
    spectra: &DMatrix<Complex64>,
    noise_variance: &[f64],
    fa_rate: f64,
) -> Result<Vec<bool>> {
    if noise_variance.len() != spectra.nrows() {
        return Err(Error::usage(format!(
            "{} noise variances for {} bands",
            noise_variance.len(),
            spectra.nrows()
        )));
    }
    let unit = energy_threshold(spectra.ncols(), 1.0, fa_rate)?;
    Ok(spectra
        .row_iter()
        .zip(noise_variance)
        .map(|(row, &var)| {
            let energy: f64 = row.iter().map(|z| z.norm_sqr()).sum();
            energy > unit * var
        })
        .collect())
}
