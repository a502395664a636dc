use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::channel::{ChannelConfig, ChannelScenario};
use crate::error::{Error, Result};
use crate::fusion::{FusionMode, FusionParams, ReceiverConfig, SicOrdering};
use crate::lpu::{ConstellationKind, InitMethod, InitStrategy, SweepSchedule};

/// Receivers the driver can evaluate on each trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    VmpSic,
    VmpNoniterative,
    Mrc,
    Zf,
    Mfb,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 5] = [
        DetectorKind::VmpSic,
        DetectorKind::VmpNoniterative,
        DetectorKind::Mrc,
        DetectorKind::Zf,
        DetectorKind::Mfb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::VmpSic => "vmp-sic",
            DetectorKind::VmpNoniterative => "vmp-noniterative",
            DetectorKind::Mrc => "mrc",
            DetectorKind::Zf => "zf",
            DetectorKind::Mfb => "mfb",
        }
    }

    /// Parses a comma-separated list; `all` expands to every detector.
    pub fn parse_list(s: &str) -> Result<Vec<DetectorKind>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(DetectorKind::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        out.sort_unstable();
        out.dedup();
        if out.is_empty() {
            return Err(Error::Config("no detector selected".into()));
        }
        Ok(out)
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectorKind::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown detector `{s}`")))
    }
}

/// Complete description of one experiment. Serialized as a flat TOML table
/// whose keys carry their units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub scenario: ChannelScenario,
    pub constellation: ConstellationKind,
    pub snr_db: Vec<f64>,
    /// Channel realizations per SNR point.
    pub trials: usize,
    pub seed: u64,
    pub detectors: Vec<DetectorKind>,
    pub init: InitMethod,
    pub init_strategy: InitStrategy,
    pub fusion: FusionMode,
    pub p0: f64,
    pub b_max: usize,
    pub iterations: usize,
    pub schedule: SweepSchedule,
    pub ordering: SicOrdering,
    /// CSV destination; not part of the configuration digest.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(flatten)]
    pub channel: ChannelConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            scenario: ChannelScenario::LowCorr,
            constellation: ConstellationKind::Qpsk,
            snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            trials: 1000,
            seed: 1,
            detectors: DetectorKind::ALL.to_vec(),
            init: InitMethod::MrcGlobal,
            init_strategy: InitStrategy::PerSicStep,
            fusion: FusionMode::All,
            p0: 0.75,
            b_max: 3,
            iterations: 1,
            schedule: SweepSchedule::Sequential,
            ordering: SicOrdering::LrMetric,
            output: None,
            channel: ChannelConfig::default(),
        }
    }
}

impl SimConfig {
    /// Parses a flat TOML table. Keys not naming a field are rejected.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let table: toml::Table = s
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let known = Self::known_keys()?;
        if let Some(bad) = table.keys().find(|k| !known.iter().any(|n| n == *k)) {
            return Err(Error::Config(format!("unknown configuration key `{bad}`")));
        }
        let cfg: SimConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn known_keys() -> Result<Vec<String>> {
        let defaults = toml::Table::try_from(SimConfig::default())
            .map_err(|e| Error::Config(e.to_string()))?;
        let mut keys: Vec<String> = defaults.keys().cloned().collect();
        keys.push("output".into());
        Ok(keys)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.snr_db.is_empty() {
            return Err(Error::Config("the SNR grid is empty".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR values must be finite".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.detectors.is_empty() {
            return Err(Error::Config("no detector selected".into()));
        }
        if !(self.p0 > 0.0 && self.p0 <= 1.0) {
            return Err(Error::Config(format!(
                "p0 must lie in (0, 1], got {}",
                self.p0
            )));
        }
        if self.b_max == 0 || self.b_max > self.channel.subarrays {
            return Err(Error::Config(format!(
                "b_max must lie in 1..={}, got {}",
                self.channel.subarrays, self.b_max
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        Ok(())
    }

    /// Channel configuration with the scenario's angular spread applied.
    pub fn effective_channel(&self) -> ChannelConfig {
        let mut c = self.channel.clone();
        self.scenario.apply(&mut c);
        c
    }

    pub fn fusion_params(&self) -> FusionParams {
        FusionParams {
            mode: self.fusion,
            p0: self.p0,
            b_max: self.b_max,
        }
    }

    /// Receiver settings for a given noise variance.
    pub fn receiver(&self, noise_var: f64) -> ReceiverConfig {
        ReceiverConfig {
            alphabet: self.constellation.build(),
            subarrays: self.channel.subarrays,
            noise_var,
            init: self.init,
            strategy: self.init_strategy,
            fusion: self.fusion_params(),
            iterations: self.iterations,
            schedule: self.schedule,
            ordering: self.ordering,
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form, with
    /// the output path cleared.
    pub fn digest(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.output = None;
        let text = canonical.to_toml_string()?;
        let hash = Sha256::digest(text.as_bytes());
        Ok(hex::encode(hash)[..16].to_string())
    }
}

/// Parses `a:b:step` (inclusive of `b` up to rounding) or a single value.
pub fn parse_snr_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| -> Result<f64> {
        p.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("invalid SNR value `{p}`")))
    };
    match parts.as_slice() {
        [one] => Ok(vec![num(one)?]),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return Err(Error::Config(format!("invalid SNR range `{s}`")));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize + 1;
            Ok((0..n).map(|i| a + step * i as f64).collect())
        }
        _ => Err(Error::Config(format!(
            "SNR range must be `a:b:step`, got `{s}`"
        ))),
    }
}
