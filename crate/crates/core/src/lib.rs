//! Monte Carlo coverage simulator for two-hop mmWave integrated access and
//! backhaul (IAB) networks.
//!
//! Backhaul from the IAB donor to each IAB child can be carried on the
//! direct link, reflected by a reconfigurable intelligent surface (RIS), or
//! amplified by a network-controlled repeater (NCR). The simulator estimates
//! the service coverage probability `Pr(R_u >= beta)` of uniformly dropped
//! user equipments under seasonal tree foliage and rain.
//!
//! Modules, bottom-up:
//! - [`geometry`]: points, regions, tree-line fields and vegetation depth.
//! - [`channel`]: path loss, antenna pattern, foliage, rain, fading, link budgets.
//! - [`ris`]: cascaded RIS channels, joint active/passive beamforming, NCR forwarding.
//! - [`network`]: association, bandwidth partitioning, interference, SINR and rates.
//! - [`montecarlo`]: seeded trials, coverage estimation and parameter sweeps.

pub mod channel;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod network;
pub mod ris;
pub mod rng;

pub use channel::{
    AntennaPattern, CarrierConfig, ChannelConfig, LinkBudget, PathLossConfig, RainConfig,
    RainTable,
};
pub use error::{Error, Result};
pub use geometry::{Orientation, Point, Region, TreeField, TreeFieldParams, TreeLine, VegetationDepth};
pub use montecarlo::{
    estimate_coverage, run_sweep, run_trial, CoverageEstimate, FoliageSpec, Scenario, SweepAxis,
    SweepRow, Variant,
};
pub use network::{
    Antenna, Association, BackhaulPath, Deployment, Node, NodeId, NodeKind, RateReport,
    ResourceSplit,
};
pub use ris::{ComplexMatrix, NcrConfig, PhaseConfig, RisPanel, RisSolution};
