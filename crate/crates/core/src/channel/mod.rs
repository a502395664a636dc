//! Spatially non-stationary double-scattering channels.
//!
//! BS-side clusters each illuminate a contiguous run of antennas (their
//! visibility region) with a log-linear energy profile and their own spatial
//! correlation. Every user sees `n_b` of the clusters through its U-cluster.
//! Antenna and cluster indices are zero-based throughout; antenna `n` sits at
//! `n · d_r` metres along the array.

mod assemble;
mod config;
mod correlation;
mod geometry;

pub use assemble::{
    assemble_channel, generate_block, make_iid_channel, normalize_channel, ChannelRealization,
    ChannelStatistics,
};
pub use config::{ChannelConfig, ChannelScenario};
pub use correlation::{bs_correlation, u_correlation};
pub use geometry::{
    association_matrix, cluster_antennas, sample_geometry, sample_user_visibility, visibility_gain,
    visibility_matrix, Cluster, ClusterGeometry, UserVisibility,
};
