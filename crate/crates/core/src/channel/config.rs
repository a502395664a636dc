use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Parameters of the channel generator. Lengths are in metres, angles in
/// radians, slopes in dB per metre.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub antennas: usize,
    pub users: usize,
    pub subarrays: usize,
    pub clusters: usize,
    /// Scatterers in every BS-cluster.
    pub cluster_scatterers: usize,
    /// Scatterers in every U-cluster.
    pub user_scatterers: usize,
    /// BS-clusters visible to each user.
    pub clusters_per_user: usize,
    pub d_r_m: f64,
    pub d_s_m: f64,
    /// BS antenna spacing in carrier wavelengths; fixes the wavelength used
    /// to make both spacings dimensionless inside the correlation sums.
    pub d_r_wavelengths: f64,
    pub vr_length_log_mean: f64,
    pub vr_length_log_std: f64,
    pub psi_mean_db_per_m: f64,
    pub psi_std_db_per_m: f64,
    /// Half-width of the uniform azimuth distributions around zero.
    pub azimuth_half_range_rad: f64,
    pub theta_bs_rad: f64,
    pub theta_user_rad: f64,
    /// Realizations sharing one draw of geometry and correlation matrices.
    pub refresh_period: usize,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            antennas: 256,
            users: 32,
            subarrays: 4,
            clusters: 20,
            cluster_scatterers: 31,
            user_scatterers: 31,
            clusters_per_user: 4,
            d_r_m: 0.0578,
            d_s_m: 5.0,
            d_r_wavelengths: 0.5,
            vr_length_log_mean: 0.7,
            vr_length_log_std: 0.2,
            psi_mean_db_per_m: -0.21,
            psi_std_db_per_m: 0.8,
            azimuth_half_range_rad: FRAC_PI_2,
            theta_bs_rad: 7.0 * PI / 8.0,
            theta_user_rad: 3.0 * PI / 4.0,
            refresh_period: 50,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.antennas == 0 || self.users == 0 || self.subarrays == 0 {
            return fail("antennas, users and subarrays must be positive".into());
        }
        if !self.antennas.is_multiple_of(self.subarrays) {
            return fail(format!(
                "antennas ({}) must be divisible by subarrays ({})",
                self.antennas, self.subarrays
            ));
        }
        if self.clusters_per_user == 0 || self.clusters_per_user > self.clusters {
            return fail(format!(
                "clusters_per_user must lie in 1..={}, got {}",
                self.clusters, self.clusters_per_user
            ));
        }
        if self.cluster_scatterers == 0 || self.user_scatterers == 0 {
            return fail("scatterer counts must be positive".into());
        }
        if !(self.d_r_m > 0.0 && self.d_s_m > 0.0 && self.d_r_wavelengths > 0.0) {
            return fail("spacings must be positive".into());
        }
        if !(self.vr_length_log_std >= 0.0 && self.psi_std_db_per_m >= 0.0) {
            return fail("standard deviations must be non-negative".into());
        }
        if self.refresh_period == 0 {
            return fail("refresh_period must be positive".into());
        }
        Ok(())
    }

    pub fn antennas_per_subarray(&self) -> usize {
        self.antennas / self.subarrays
    }

    /// Carrier wavelength implied by `d_r_m` and `d_r_wavelengths`.
    pub fn wavelength_m(&self) -> f64 {
        self.d_r_m / self.d_r_wavelengths
    }

    /// U-cluster virtual spacing in wavelengths.
    pub fn d_s_wavelengths(&self) -> f64 {
        self.d_s_m / self.wavelength_m()
    }

    pub fn array_length_m(&self) -> f64 {
        self.antennas as f64 * self.d_r_m
    }

    pub fn total_scatterers(&self) -> usize {
        self.clusters * self.cluster_scatterers
    }
}

/// Channel families compared in the evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelScenario {
    /// `H ~ CN(0, I)`.
    Iid,
    /// BS-cluster angular spread 7π/8.
    #[default]
    LowCorr,
    /// BS-cluster angular spread 3π/4.
    HighCorr,
    /// Geometry model with the configured angular spreads.
    Custom,
}

impl ChannelScenario {
    /// Pins the BS angular spread for the preset scenarios.
    pub fn apply(self, cfg: &mut ChannelConfig) {
        match self {
            ChannelScenario::LowCorr => cfg.theta_bs_rad = 7.0 * PI / 8.0,
            ChannelScenario::HighCorr => cfg.theta_bs_rad = 3.0 * PI / 4.0,
            ChannelScenario::Iid | ChannelScenario::Custom => {}
        }
    }
}

impl std::str::FromStr for ChannelScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid" => Ok(ChannelScenario::Iid),
            "low-corr" => Ok(ChannelScenario::LowCorr),
            "high-corr" => Ok(ChannelScenario::HighCorr),
            "custom" => Ok(ChannelScenario::Custom),
            other => Err(Error::Config(format!("unknown channel scenario `{other}`"))),
        }
    }
}
