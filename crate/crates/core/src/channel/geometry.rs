use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::ChannelConfig;
use crate::error::{Error, Result};
use crate::numerics::{CMatrix, SimRng};

const MAX_CLUSTER_RETRIES: usize = 1000;

/// One BS-cluster and its visibility region on the array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center_m: f64,
    pub length_m: f64,
    /// Slope as drawn; only its magnitude enters the gain profile.
    pub slope_db_per_m: f64,
    pub azimuth_rad: f64,
    /// First visible antenna (zero-based).
    pub first: usize,
    /// Number of visible antennas `r_i`.
    pub count: usize,
}

impl Cluster {
    pub fn antennas(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.count
    }

    pub fn contains(&self, antenna: usize) -> bool {
        self.antennas().contains(&antenna)
    }
}

/// All BS-clusters of one long-term draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterGeometry {
    pub antennas: usize,
    pub clusters: Vec<Cluster>,
}

impl ClusterGeometry {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

/// Antennas whose positions `n · d_r` fall inside `[center - length/2,
/// center + length/2]`, clipped to the array. Returns `(first, count)` or
/// `None` when no antenna is covered.
pub fn cluster_antennas(
    center: f64,
    length: f64,
    d_r: f64,
    antennas: usize,
) -> Option<(usize, usize)> {
    if antennas == 0 || !(d_r > 0.0) || !(length >= 0.0) {
        return None;
    }
    let lo = ((center - length / 2.0) / d_r).ceil().max(0.0);
    let hi = ((center + length / 2.0) / d_r)
        .floor()
        .min((antennas - 1) as f64);
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return None;
    }
    let first = lo as usize;
    Some((first, hi as usize - first + 1))
}

/// Draws every cluster's centre, length, slope and azimuth. Clusters whose
/// interval covers no antenna are redrawn.
pub fn sample_geometry(cfg: &ChannelConfig, rng: &mut SimRng) -> Result<ClusterGeometry> {
    cfg.validate()?;
    let array = cfg.array_length_m();
    let mut clusters = Vec::with_capacity(cfg.clusters);
    for i in 0..cfg.clusters {
        let mut drawn = None;
        for _ in 0..MAX_CLUSTER_RETRIES {
            let center_m = rng.uniform(0.0, array);
            let length_m = rng.lognormal(cfg.vr_length_log_mean, cfg.vr_length_log_std);
            let slope_db_per_m = rng.normal(cfg.psi_mean_db_per_m, cfg.psi_std_db_per_m);
            let azimuth_rad = rng.uniform(-cfg.azimuth_half_range_rad, cfg.azimuth_half_range_rad);
            if let Some((first, count)) =
                cluster_antennas(center_m, length_m, cfg.d_r_m, cfg.antennas)
            {
                drawn = Some(Cluster {
                    center_m,
                    length_m,
                    slope_db_per_m,
                    azimuth_rad,
                    first,
                    count,
                });
                break;
            }
        }
        match drawn {
            Some(c) => clusters.push(c),
            None => {
                return Err(Error::Config(format!(
                    "cluster {i}: no antenna inside its visibility region after {MAX_CLUSTER_RETRIES} draws"
                )))
            }
        }
    }
    Ok(ClusterGeometry {
        antennas: cfg.antennas,
        clusters,
    })
}

/// Energy weight of cluster `i` at antenna `n` (zero-based):
/// `10^(-|ψ_i| · |c_i - n d_r| / 10)` inside the visibility region, zero outside.
pub fn visibility_gain(geom: &ClusterGeometry, i: usize, n: usize, d_r: f64) -> f64 {
    let c = &geom.clusters[i];
    if !c.contains(n) {
        return 0.0;
    }
    let dist = (c.center_m - d_r * n as f64).abs();
    10f64.powf(-c.slope_db_per_m.abs() * dist / 10.0)
}

/// `M × r_i` selection matrix placing cluster `i`'s rows in the full array.
pub fn association_matrix(geom: &ClusterGeometry, i: usize, antennas: usize) -> CMatrix {
    let c = &geom.clusters[i];
    let mut a = CMatrix::zeros(antennas, c.count);
    for j in 0..c.count {
        a[(c.first + j, j)] = Complex64::new(1.0, 0.0);
    }
    a
}

/// Which clusters, and therefore which scatterers, each user sees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserVisibility {
    /// Scatterer count of every cluster, in cluster order.
    pub cluster_scatterers: Vec<usize>,
    /// Sorted visible cluster indices per user.
    pub clusters: Vec<Vec<usize>>,
}

impl UserVisibility {
    pub fn new(cluster_scatterers: Vec<usize>, clusters: Vec<Vec<usize>>) -> Result<Self> {
        let c = cluster_scatterers.len();
        for (k, set) in clusters.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::Config(format!("user {k} sees no cluster")));
            }
            if set.iter().any(|&i| i >= c) {
                return Err(Error::Config(format!(
                    "user {k} references a cluster outside 0..{c}"
                )));
            }
        }
        let clusters = clusters
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        Ok(UserVisibility {
            cluster_scatterers,
            clusters,
        })
    }

    pub fn users(&self) -> usize {
        self.clusters.len()
    }

    /// `S' = Σ_i S_i`.
    pub fn total_scatterers(&self) -> usize {
        self.cluster_scatterers.iter().sum()
    }

    /// Index of cluster `i`'s first scatterer in the stacked scatterer list.
    pub fn scatterer_offset(&self, i: usize) -> usize {
        self.cluster_scatterers[..i].iter().sum()
    }

    /// `S_k`: stacked scatterer indices of every cluster user `k` sees.
    pub fn scatterer_set(&self, k: usize) -> Vec<usize> {
        self.clusters[k]
            .iter()
            .flat_map(|&i| {
                let off = self.scatterer_offset(i);
                off..off + self.cluster_scatterers[i]
            })
            .collect()
    }
}

/// Assigns `n_b` distinct clusters to every user, independently.
pub fn sample_user_visibility(cfg: &ChannelConfig, rng: &mut SimRng) -> Result<UserVisibility> {
    cfg.validate()?;
    let sets = (0..cfg.users)
        .map(|_| rng.distinct_indices(cfg.clusters, cfg.clusters_per_user))
        .collect();
    UserVisibility::new(vec![cfg.cluster_scatterers; cfg.clusters], sets)
}

/// `S' × S` matrix whose row `m` is all ones when scatterer `m` is visible to
/// user `k` and all zeros otherwise.
pub fn visibility_matrix(vis: &UserVisibility, k: usize, user_scatterers: usize) -> CMatrix {
    let mut d = CMatrix::zeros(vis.total_scatterers(), user_scatterers);
    for m in vis.scatterer_set(k) {
        d.row_mut(m).fill(Complex64::new(1.0, 0.0));
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_cluster(center_m: f64, length_m: f64, d_r: f64, antennas: usize) -> ClusterGeometry {
        let (first, count) = cluster_antennas(center_m, length_m, d_r, antennas).unwrap();
        ClusterGeometry {
            antennas,
            clusters: vec![Cluster {
                center_m,
                length_m,
                slope_db_per_m: -0.21,
                azimuth_rad: 0.0,
                first,
                count,
            }],
        }
    }

    #[test]
    fn centered_region_covers_three_antennas() {
        let d_r = 0.0578;
        let (first, count) = cluster_antennas(4.0 * d_r, 3.0 * d_r, d_r, 9).unwrap();
        assert_eq!((first, count), (3, 3));
    }

    #[test]
    fn long_region_covers_whole_array() {
        assert_eq!(cluster_antennas(0.3, 100.0, 0.0578, 16), Some((0, 16)));
    }

    #[test]
    fn region_off_the_array_is_empty() {
        assert_eq!(cluster_antennas(2.0, 0.01, 0.0578, 16), None);
        assert_eq!(cluster_antennas(0.03, 0.01, 0.0578, 16), None);
    }

    #[test]
    fn mean_region_length_matches_lognormal_mean() {
        let cfg = ChannelConfig {
            clusters: 10_000,
            clusters_per_user: 1,
            ..Default::default()
        };
        let mut rng = SimRng::new(11);
        let geom = sample_geometry(&cfg, &mut rng).unwrap();
        let mean = geom.clusters.iter().map(|c| c.length_m).sum::<f64>() / geom.len() as f64;
        let oracle = (0.7f64 + 0.2 * 0.2 / 2.0).exp();
        assert!((oracle - 2.054).abs() < 1e-3);
        assert!((mean - oracle).abs() / oracle < 0.05, "mean {mean}");
        for c in &geom.clusters {
            assert!(c.count >= 1 && c.first + c.count <= cfg.antennas);
            assert!(c.azimuth_rad.abs() <= std::f64::consts::FRAC_PI_2);
        }
    }

    #[test]
    fn gain_profile() {
        let d_r = 0.0578;
        let geom = one_cluster(20.0 * d_r, 40.0 * d_r, d_r, 64);
        assert_eq!(visibility_gain(&geom, 0, 20, d_r), 1.0);
        let g = visibility_gain(&geom, 0, 30, d_r);
        let want = 10f64.powf(-0.21 * 0.578 / 10.0);
        assert!((g - want).abs() < 1e-12);
        assert_eq!(visibility_gain(&geom, 0, 50, d_r), 0.0);
        for n in 0..64 {
            let g = visibility_gain(&geom, 0, n, d_r);
            assert!((0.0..=1.0).contains(&g));
        }
    }

    #[test]
    fn association_matrix_worked_example() {
        // Antennas 2..=4 of 5 in one-based numbering.
        let geom = one_cluster(0.2, 0.25, 0.1, 5);
        assert_eq!((geom.clusters[0].first, geom.clusters[0].count), (1, 3));
        let a = association_matrix(&geom, 0, 5);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        #[rustfmt::skip]
        let want = CMatrix::from_row_slice(5, 3, &[
            zero, zero, zero,
            one, zero, zero,
            zero, one, zero,
            zero, zero, one,
            zero, zero, zero,
        ]);
        assert_eq!(a, want);
    }

    #[test]
    fn association_full_visibility_is_identity() {
        let geom = one_cluster(0.5, 100.0, 0.1, 6);
        assert_eq!(association_matrix(&geom, 0, 6), CMatrix::identity(6, 6));
    }

    #[test]
    fn visibility_matrix_worked_example() {
        let vis = UserVisibility::new(vec![3, 3, 3], vec![vec![0, 2]]).unwrap();
        let d = visibility_matrix(&vis, 0, 5);
        assert_eq!(d.shape(), (9, 5));
        for m in 0..9 {
            let expect = if (3..6).contains(&m) { 0.0 } else { 1.0 };
            for s in 0..5 {
                assert_eq!(d[(m, s)].re, expect);
                assert_eq!(d[(m, s)].im, 0.0);
            }
        }
    }

    #[test]
    fn visibility_all_clusters_is_all_ones() {
        let vis = UserVisibility::new(vec![2, 3], vec![vec![0, 1]]).unwrap();
        let d = visibility_matrix(&vis, 0, 4);
        assert!(d.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn empty_visibility_rejected() {
        assert!(UserVisibility::new(vec![3, 3], vec![vec![]]).is_err());
        assert!(UserVisibility::new(vec![3, 3], vec![vec![2]]).is_err());
    }

    #[test]
    fn sampled_visibility_has_distinct_clusters() {
        let cfg = ChannelConfig::default();
        let vis = sample_user_visibility(&cfg, &mut SimRng::new(5)).unwrap();
        assert_eq!(vis.users(), cfg.users);
        for k in 0..cfg.users {
            assert_eq!(vis.clusters[k].len(), cfg.clusters_per_user);
            assert_eq!(
                vis.scatterer_set(k).len(),
                cfg.clusters_per_user * cfg.cluster_scatterers
            );
        }
    }
}
