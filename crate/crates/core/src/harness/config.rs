//! Experiment configuration.
//!
//! Configs are flat TOML files; every key maps to one [`ExperimentConfig`]
//! field and omitted keys take the documented defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{PolicyConfig, PolicyMode};
use crate::reconstruction::RecoveryParams;
use crate::sns::Snr;
use crate::spectrum::{extend_by_repetition, BandStatistics, CASE1_VACANCY, CASE2_VACANCY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseName {
    Case1,
    Case2,
    /// Statistics given by `p01`/`p10` or by `stationary`.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RsMode {
    /// Sparsity rule applied to the true statuses.
    Oracle,
    /// Full measurement, recovery and energy detection chain.
    Signal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n_bands: usize,
    pub k_branches: usize,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub case: CaseName,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationary: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p01: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p10: Option<Vec<f64>>,
    pub lambda_mixing: f64,
    pub snr_db: Snr,
    pub rs_mode: RsMode,
    pub policies: Vec<PolicyMode>,
    pub exploration_coefficient: f64,
    pub mu: f64,
    pub delta: f64,
    pub bins_per_band: usize,
    pub signal_power: f64,
    pub energy_fa_rate: f64,
    pub search_breadth: usize,
    pub failure_threshold: f64,
    /// Draw a fresh mixing matrix every slot instead of once per replication.
    pub redraw_matrix: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_bands: 8,
            k_branches: 4,
            horizon: 10_000,
            replications: 100,
            seed: 1,
            case: CaseName::Case1,
            stationary: None,
            p01: None,
            p10: None,
            lambda_mixing: 0.5,
            snr_db: Snr::NOISELESS,
            rs_mode: RsMode::Oracle,
            policies: vec![PolicyMode::Ldm, PolicyMode::Oldm, PolicyMode::Imp],
            exploration_coefficient: 30.0,
            mu: 0.3,
            delta: 0.1,
            bins_per_band: 64,
            signal_power: 1.0,
            energy_fa_rate: 0.05,
            search_breadth: 5,
            failure_threshold: 0.1,
            redraw_matrix: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config fields are TOML-representable")
    }

    /// Overrides one field from its textual value, using the same syntax as
    /// the config file (`policies = ["LDM", "IMP"]`, `snr_db = "noiseless"`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut table = toml::Table::try_from(&*self).expect("config serialises to a table");
        let parsed: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {value}")) {
            Ok(mut t) => t.remove("v").expect("key present"),
            // bare words such as `signal` or `LDM` are taken as strings
            Err(_) => toml::Value::String(value.to_string()),
        };
        table.insert(key.to_string(), parsed);
        *self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(key, e.message().to_string()))?;
        Ok(())
    }

    /// Checks every range and consistency rule, naming the offending field.
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
        if self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        if self.policies.is_empty() {
            return Err(Error::config("policies", "at least one policy is required"));
        }
        if self.bins_per_band == 0 {
            return Err(Error::config("bins_per_band", "must be at least 1"));
        }
        if !(self.signal_power > 0.0 && self.signal_power.is_finite()) {
            return Err(Error::config("signal_power", "must be positive"));
        }
        if !(self.energy_fa_rate > 0.0 && self.energy_fa_rate < 1.0) {
            return Err(Error::config("energy_fa_rate", "must lie in (0, 1)"));
        }
        if self.search_breadth == 0 {
            return Err(Error::config("search_breadth", "must be at least 1"));
        }
        if self.failure_threshold.is_nan() || self.failure_threshold < 0.0 {
            return Err(Error::config("failure_threshold", "must be non-negative"));
        }
        if let Snr::Db(db) = self.snr_db {
            if !db.is_finite() {
                return Err(Error::config("snr_db", "must be finite or `noiseless`"));
            }
        }
        self.policy_config(PolicyMode::Ldm).validate()?;
        self.statistics()?;
        Ok(())
    }

    /// Ground-truth statistics for `n_bands` bands. The reference cases are
    /// repeated cyclically when more than eight bands are configured.
    pub fn statistics(&self) -> Result<BandStatistics> {
        let stats = match self.case {
            CaseName::Case1 => BandStatistics::from_stationary(
                &extend_by_repetition(&CASE1_VACANCY, self.n_bands),
                self.lambda_mixing,
            )?,
            CaseName::Case2 => BandStatistics::from_stationary(
                &extend_by_repetition(&CASE2_VACANCY, self.n_bands),
                self.lambda_mixing,
            )?,
            CaseName::Custom => match (&self.p01, &self.p10, &self.stationary) {
                (Some(p01), Some(p10), _) => BandStatistics::new(p01.clone(), p10.clone())?,
                (None, None, Some(p0)) => BandStatistics::from_stationary(p0, self.lambda_mixing)?,
                _ => {
                    return Err(Error::config(
                        "case",
                        "custom statistics need both `p01` and `p10`, or `stationary`",
                    ))
                }
            },
        };
        if stats.n_bands() != self.n_bands {
            return Err(Error::config(
                "n_bands",
                format!(
                    "statistics describe {} bands, n_bands is {}",
                    stats.n_bands(),
                    self.n_bands
                ),
            ));
        }
        Ok(stats)
    }

    pub fn policy_config(&self, mode: PolicyMode) -> PolicyConfig {
        PolicyConfig {
            n_bands: self.n_bands,
            k_branches: self.k_branches,
            horizon: self.horizon,
            exploration_coefficient: self.exploration_coefficient,
            mu: self.mu,
            delta: self.delta,
            mode,
        }
    }

    pub fn recovery_params(&self) -> RecoveryParams {
        RecoveryParams {
            signal_variance: self.signal_power,
            noise_variance: self.snr_db.noise_power(self.signal_power),
            search_breadth: self.search_breadth,
            energy_fa_rate: self.energy_fa_rate,
            failure_threshold: self.failure_threshold,
        }
    }

    /// Requested policies without duplicates, in the configured order.
    pub fn unique_policies(&self) -> Vec<PolicyMode> {
        let mut out: Vec<PolicyMode> = Vec::new();
        for p in &self.policies {
            if !out.contains(p) {
                out.push(*p);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml_str(text, Path::new("test.toml"))
    }

    #[test]
    fn defaults_are_valid() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.statistics().unwrap().n_bands(), 8);
    }

    #[test]
    fn parses_flat_files() {
        let cfg = parse(
            r#"
            n_bands = 8
            k_branches = 4
            case = "case2"
            snr_db = 20
            rs_mode = "signal"
            policies = ["OLDM", "IMP"]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.case, CaseName::Case2);
        assert_eq!(cfg.snr_db, Snr::Db(20.0));
        assert_eq!(cfg.rs_mode, RsMode::Signal);
        assert_eq!(cfg.policies, vec![PolicyMode::Oldm, PolicyMode::Imp]);
        assert_eq!(cfg.horizon, 10_000);
        assert_eq!(
            parse("snr_db = \"noiseless\"").unwrap().snr_db,
            Snr::NOISELESS
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(parse("n_bandz = 3"), Err(Error::Parse { .. })));
    }

    #[test]
    fn validation_names_the_field() {
        let cfg = ExperimentConfig {
            k_branches: 9,
            ..ExperimentConfig::default()
        };
        match cfg.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "k_branches"),
            other => panic!("{other:?}"),
        }
        let cfg = ExperimentConfig {
            mu: 0.0,
            ..ExperimentConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "mu"));
        let cfg = ExperimentConfig {
            case: CaseName::Custom,
            ..ExperimentConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "case"));
    }

    #[test]
    fn custom_statistics() {
        let cfg = parse(
            r#"
            n_bands = 2
            k_branches = 1
            case = "custom"
            p01 = [0.1, 0.2]
            p10 = [0.3, 0.4]
            "#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.statistics().unwrap().p10(), &[0.3, 0.4]);
        let cfg = parse("n_bands = 3\ncase = \"custom\"\nk_branches = 2\nstationary = [0.5, 0.6]")
            .unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "n_bands"));
    }

    #[test]
    fn larger_n_repeats_case_vectors() {
        let cfg = ExperimentConfig {
            n_bands: 12,
            ..ExperimentConfig::default()
        };
        let p0 = cfg.statistics().unwrap().stationary_vacancy();
        assert!((p0[8] - 0.60).abs() < 1e-12 && (p0[11] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn set_overrides_fields() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("k_branches", "3").unwrap();
        cfg.set("rs_mode", "signal").unwrap();
        cfg.set("snr_db", "noiseless").unwrap();
        cfg.set("snr_db", "12.5").unwrap();
        cfg.set("policies", "[\"IMP\"]").unwrap();
        assert_eq!(cfg.k_branches, 3);
        assert_eq!(cfg.rs_mode, RsMode::Signal);
        assert_eq!(cfg.snr_db, Snr::Db(12.5));
        assert_eq!(cfg.policies, vec![PolicyMode::Imp]);
        assert!(cfg.set("no_such_field", "1").is_err());
        assert!(cfg.set("k_branches", "\"x\"").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig {
            snr_db: Snr::Db(20.0),
            stationary: Some(vec![0.5; 8]),
            case: CaseName::Custom,
            ..ExperimentConfig::default()
        };
        let back = parse(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }
}
