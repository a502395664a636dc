use num_complex::Complex64;
use std::io::{Read, Write};
use std::sync::Arc;

use super::config::{ChannelConfig, ChannelScenario};
use super::correlation::{bs_correlation, u_correlation};
use super::geometry::{
    sample_geometry, sample_user_visibility, visibility_gain, ClusterGeometry, UserVisibility,
};
use crate::error::{Error, Result};
use crate::numerics::{
    condition_number, hermitian_sqrt, sample_cgauss, sample_cgauss_vector, CMatrix, CVector, SimRng,
};

const DUMP_MAGIC: &[u8; 4] = b"XLH1";
const MAX_SINGULAR_REDRAWS: usize = 10;
const SINGULAR_CONDITION: f64 = 1e10;

/// Long-term channel statistics shared by every realization of a refresh
/// block: geometry, visibility and all correlation matrices.
#[derive(Clone, Debug)]
pub struct ChannelStatistics {
    pub geometry: ClusterGeometry,
    pub visibility: UserVisibility,
    /// `R_i`, one per cluster, `r_i × r_i`.
    pub bs_correlation: Vec<CMatrix>,
    /// `ρ_i^{1/2} R_i^{1/2}`, the cluster-side factor of every sub-channel.
    pub cluster_factors: Vec<CMatrix>,
    /// `α̃_{i,k}` for each user, aligned with `visibility.clusters[k]`.
    pub user_azimuths: Vec<Vec<f64>>,
    /// `R̃_{i,k}`, aligned with `visibility.clusters[k]`.
    pub user_correlation: Vec<Vec<CMatrix>>,
    /// `R̃_{i,k}^{1/2} 1`, the only part of the user-side factor that survives
    /// multiplication by `D_k g_k`.
    user_weights: Vec<Vec<CVector>>,
    user_scatterers: usize,
}

impl ChannelStatistics {
    /// Draws fresh geometry, visibility and user-side azimuths.
    pub fn sample(cfg: &ChannelConfig, rng: &mut SimRng) -> Result<Self> {
        let geometry = sample_geometry(cfg, rng)?;
        let visibility = sample_user_visibility(cfg, rng)?;
        let user_azimuths = visibility
            .clusters
            .iter()
            .map(|set| {
                set.iter()
                    .map(|_| rng.uniform(-cfg.azimuth_half_range_rad, cfg.azimuth_half_range_rad))
                    .collect()
            })
            .collect();
        Self::from_parts(cfg, geometry, visibility, user_azimuths)
    }

    /// Builds the correlation structure for a given geometry and visibility.
    pub fn from_parts(
        cfg: &ChannelConfig,
        geometry: ClusterGeometry,
        visibility: UserVisibility,
        user_azimuths: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if geometry.antennas != cfg.antennas
            || geometry.len() != visibility.cluster_scatterers.len()
        {
            return Err(Error::Dimension(
                "geometry does not match the configuration".into(),
            ));
        }
        if visibility.users() != user_azimuths.len()
            || visibility
                .clusters
                .iter()
                .zip(&user_azimuths)
                .any(|(v, a)| v.len() != a.len())
        {
            return Err(Error::Dimension(
                "one user azimuth is needed per visible cluster".into(),
            ));
        }
        let mut bs_corr = Vec::with_capacity(geometry.len());
        let mut cluster_factors = Vec::with_capacity(geometry.len());
        for (i, cluster) in geometry.clusters.iter().enumerate() {
            let r = bs_correlation(
                visibility.cluster_scatterers[i],
                cfg.d_r_wavelengths,
                cluster.azimuth_rad,
                cfg.theta_bs_rad,
                cluster.count,
            );
            let mut factor = hermitian_sqrt(&r)?;
            for (row, n) in cluster.antennas().enumerate() {
                let g = visibility_gain(&geometry, i, n, cfg.d_r_m).sqrt();
                factor.row_mut(row).scale_mut(g);
            }
            bs_corr.push(r);
            cluster_factors.push(factor);
        }
        let d_s = cfg.d_s_wavelengths();
        let mut user_correlation = Vec::with_capacity(visibility.users());
        let mut user_weights = Vec::with_capacity(visibility.users());
        for (set, azimuths) in visibility.clusters.iter().zip(&user_azimuths) {
            let mut corr = Vec::with_capacity(set.len());
            let mut weights = Vec::with_capacity(set.len());
            for (&i, &az) in set.iter().zip(azimuths) {
                let s_i = visibility.cluster_scatterers[i];
                let r = u_correlation(s_i, d_s, az, cfg.theta_user_rad);
                let root = hermitian_sqrt(&r)?;
                weights.push(root.column_sum());
                corr.push(r);
            }
            user_correlation.push(corr);
            user_weights.push(weights);
        }
        Ok(ChannelStatistics {
            geometry,
            visibility,
            bs_correlation: bs_corr,
            cluster_factors,
            user_azimuths,
            user_correlation,
            user_weights,
            user_scatterers: cfg.user_scatterers,
        })
    }

    pub fn users(&self) -> usize {
        self.visibility.users()
    }
}

/// One channel matrix together with everything it was built from.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    h: CMatrix,
    subarrays: usize,
    /// `None` for i.i.d. channels.
    pub statistics: Option<Arc<ChannelStatistics>>,
    /// `G_i`, `r_i × S_i`.
    pub fading: Vec<CMatrix>,
    /// `g_k`, length `S`.
    pub user_fading: Vec<CVector>,
    /// Factor already applied by [`normalize_channel`].
    pub scale: f64,
}

impl ChannelRealization {
    /// Wraps an explicit channel matrix.
    pub fn from_matrix(h: CMatrix, subarrays: usize) -> Result<Self> {
        if subarrays == 0 || !h.nrows().is_multiple_of(subarrays) {
            return Err(Error::Dimension(format!(
                "{} antennas cannot be split into {subarrays} sub-arrays",
                h.nrows()
            )));
        }
        Ok(ChannelRealization {
            h,
            subarrays,
            statistics: None,
            fading: Vec::new(),
            user_fading: Vec::new(),
            scale: 1.0,
        })
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn users(&self) -> usize {
        self.h.ncols()
    }

    pub fn subarrays(&self) -> usize {
        self.subarrays
    }

    pub fn antennas_per_subarray(&self) -> usize {
        self.h.nrows() / self.subarrays
    }

    /// `H̃_b`, rows `b·M_b .. (b+1)·M_b`.
    pub fn subarray(&self, b: usize) -> CMatrix {
        let mb = self.antennas_per_subarray();
        self.h.rows(b * mb, mb).into_owned()
    }

    pub fn subarray_views(&self) -> Vec<CMatrix> {
        (0..self.subarrays).map(|b| self.subarray(b)).collect()
    }

    /// Average per-antenna power `trace(H Hᴴ) / M`.
    pub fn power_per_antenna(&self) -> f64 {
        self.h.norm_squared() / self.antennas() as f64
    }

    fn apply_scale(&mut self, s: f64) {
        self.h.scale_mut(s);
        self.scale *= s;
    }

    /// Writes `H` in a small binary format: the bytes `XLH1`, rows and
    /// columns as little-endian `u64`, then every entry in column-major order
    /// as little-endian `f64` real and imaginary parts.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.h.nrows() as u64).to_le_bytes())?;
        w.write_all(&(self.h.ncols() as u64).to_le_bytes())?;
        for z in self.h.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a matrix written by [`ChannelRealization::write_dump`].
    pub fn read_dump<R: Read>(mut r: R) -> Result<CMatrix> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::Config("not a channel dump".into()));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let rows = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let cols = u64::from_le_bytes(word) as usize;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            r.read_exact(&mut word)?;
            let re = f64::from_le_bytes(word);
            r.read_exact(&mut word)?;
            data.push(Complex64::new(re, f64::from_le_bytes(word)));
        }
        Ok(CMatrix::from_vec(rows, cols, data))
    }
}

/// Draws fresh fast fading and builds `H` from the long-term statistics.
pub fn assemble_channel(
    cfg: &ChannelConfig,
    stats: &Arc<ChannelStatistics>,
    rng: &mut SimRng,
) -> Result<ChannelRealization> {
    cfg.validate()?;
    if stats.users() != cfg.users || stats.geometry.antennas != cfg.antennas {
        return Err(Error::Dimension(
            "statistics were drawn for a different configuration".into(),
        ));
    }
    let vis = &stats.visibility;
    let mut fading = Vec::with_capacity(stats.geometry.len());
    for (i, cluster) in stats.geometry.clusters.iter().enumerate() {
        fading.push(sample_cgauss(
            rng,
            cluster.count,
            vis.cluster_scatterers[i],
            1.0,
        )?);
    }
    let mut user_fading = Vec::with_capacity(cfg.users);
    for _ in 0..cfg.users {
        user_fading.push(sample_cgauss_vector(rng, stats.user_scatterers, 1.0)?);
    }
    let mut h = CMatrix::zeros(cfg.antennas, cfg.users);
    for (k, g) in user_fading.iter().enumerate() {
        if vis.clusters[k].is_empty() {
            return Err(Error::Config(format!("user {k} sees no cluster")));
        }
        // D_k g_k puts the same value, the sum of g_k, on every visible scatterer.
        let total: Complex64 = g.sum();
        for (j, &i) in vis.clusters[k].iter().enumerate() {
            let cluster = &stats.geometry.clusters[i];
            let part = &stats.cluster_factors[i] * (&fading[i] * &stats.user_weights[k][j]);
            let mut col = h.column_mut(k);
            let mut rows = col.rows_mut(cluster.first, cluster.count);
            rows.axpy(total, &part, Complex64::new(1.0, 0.0));
        }
    }
    Ok(ChannelRealization {
        h,
        subarrays: cfg.subarrays,
        statistics: Some(Arc::clone(stats)),
        fading,
        user_fading,
        scale: 1.0,
    })
}

/// Scales every member so that the batch-average `trace(H Hᴴ)` equals `M`.
/// Returns the applied factor.
pub fn normalize_channel(batch: &mut [ChannelRealization]) -> Result<f64> {
    let first = batch
        .first()
        .ok_or_else(|| Error::DegenerateChannel("cannot normalize an empty batch".into()))?;
    let m = first.antennas() as f64;
    let avg = batch.iter().map(|r| r.h.norm_squared()).sum::<f64>() / batch.len() as f64;
    if !(avg > 0.0) || !avg.is_finite() {
        return Err(Error::DegenerateChannel(format!(
            "batch-average channel energy is {avg}"
        )));
    }
    let s = (m / avg).sqrt();
    for r in batch.iter_mut() {
        r.apply_scale(s);
    }
    Ok(s)
}

/// `H` with i.i.d. `CN(0, 1)` entries.
pub fn make_iid_channel(
    antennas: usize,
    users: usize,
    subarrays: usize,
    rng: &mut SimRng,
) -> Result<ChannelRealization> {
    let h = sample_cgauss(rng, antennas, users, 1.0)?;
    ChannelRealization::from_matrix(h, subarrays)
}

/// Draws `count` realizations sharing one set of long-term statistics and,
/// for correlated scenarios, normalizes them as a batch.
///
/// With `require_full_rank`, a realization whose condition number exceeds
/// 1e10 has its fast fading redrawn, at most ten times.
pub fn generate_block(
    cfg: &ChannelConfig,
    scenario: ChannelScenario,
    count: usize,
    require_full_rank: bool,
    rng: &mut SimRng,
) -> Result<Vec<ChannelRealization>> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    scenario.apply(&mut cfg);
    let stats = match scenario {
        ChannelScenario::Iid => None,
        _ => Some(Arc::new(ChannelStatistics::sample(&cfg, rng)?)),
    };
    let mut batch = Vec::with_capacity(count);
    for t in 0..count {
        let mut attempt = 0;
        loop {
            let r = match &stats {
                None => make_iid_channel(cfg.antennas, cfg.users, cfg.subarrays, rng)?,
                Some(s) => assemble_channel(&cfg, s, rng)?,
            };
            if !require_full_rank {
                batch.push(r);
                break;
            }
            let condition = condition_number(r.h());
            if condition < SINGULAR_CONDITION {
                batch.push(r);
                break;
            }
            attempt += 1;
            log::warn!("realization {t}: condition number {condition:e}, redrawing fast fading");
            if attempt >= MAX_SINGULAR_REDRAWS {
                return Err(Error::SingularChannel { condition });
            }
        }
    }
    if stats.is_some() && !batch.is_empty() {
        normalize_channel(&mut batch)?;
    }
    Ok(batch)
}
