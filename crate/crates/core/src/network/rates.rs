use std::collections::BTreeMap;

use crate::channel::db_to_linear;
use crate::error::{Error, Result};

use super::allocation::{allocate_bandwidth, Allocation, NodeLoad};
use super::association::{ncr_snr, ris_snr, RisGains};
use super::links::{aggregate_interference, noise_power_dbm, Band, BeamPlan, LinkModel};
use super::{Association, BackhaulPath, Deployment, FadingSource, Foliage, NetworkConfig, NodeId, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackhaulReport {
    pub sbs: NodeId,
    pub donor: NodeId,
    pub path: BackhaulPath,
    pub bandwidth_hz: f64,
    pub sinr: f64,
    pub rate_bps: f64,
    pub ue_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeRate {
    pub ue: NodeId,
    pub serving: NodeId,
    pub access_bandwidth_hz: f64,
    pub sinr: f64,
    pub access_rate_bps: f64,
    /// Per-UE share of the serving IAB SBS's backhaul rate, when it has one.
    pub backhaul_share_bps: Option<f64>,
    pub rate_bps: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateReport {
    pub ues: Vec<UeRate>,
    pub backhaul: BTreeMap<NodeId, BackhaulReport>,
    pub allocation: Allocation,
    /// Links evaluated at the 1 m distance clamp.
    pub clamped_links: usize,
}

impl RateReport {
    pub fn covered(&self, threshold_bps: f64) -> usize {
        self.ues.iter().filter(|u| u.rate_bps >= threshold_bps).count()
    }
}

fn shannon(bandwidth_hz: f64, sinr: f64) -> f64 {
    if bandwidth_hz <= 0.0 {
        0.0
    } else {
        bandwidth_hz * (1.0 + sinr).log2()
    }
}

/// Access and backhaul SINRs and rates of one realization.
///
/// A UE on an IAB SBS gets `min(access rate, backhaul rate / N_k)`; UEs on a
/// donor or a non-IAB SBS get their access rate. Interference on access comes
/// from every other base station serving UEs; on the direct backhaul, from
/// other donors. Relayed backhaul paths see no interference.
#[allow(clippy::too_many_arguments)]
pub fn compute_rates(
    deployment: &Deployment,
    association: &Association,
    foliage: &Foliage,
    config: &NetworkConfig,
    beams: &BeamPlan,
    fading: &dyn FadingSource,
    ris: &RisGains,
) -> Result<RateReport> {
    let links = LinkModel::new(deployment, foliage, &config.channel);
    let nf = config.channel.noise_figure_db;
    let mut report = RateReport::default();

    let loads: Vec<NodeLoad> = deployment
        .base_stations()
        .map(|bs| NodeLoad {
            node: bs.id,
            ue_count: association.ue_count(bs.id),
            backhaul_donor: association.sbs_backhaul.get(&bs.id).map(|a| a.donor),
        })
        .collect();
    report.allocation = allocate_bandwidth(&config.split, &loads);

    let backhaul_noise = noise_power_dbm(config.split.backhaul(), nf);
    for (&sbs_id, assignment) in &association.sbs_backhaul {
        let sbs = deployment.node(sbs_id);
        let donor = deployment.node(assignment.donor);
        let bandwidth = report.allocation.backhaul_hz.get(&sbs_id).copied().unwrap_or(0.0);
        let sinr = match assignment.path {
            BackhaulPath::Direct => {
                let budget = links.aligned(donor, sbs, fading.power(donor.id, sbs_id));
                report.clamped_links += budget.path_loss_clamped as usize;
                let (interference, clamped) =
                    aggregate_interference(&links, beams, Band::Backhaul, sbs_id, donor.id, fading, config.interference_loss);
                report.clamped_links += clamped as usize;
                db_to_linear(budget.p_rx_dbm) / (interference + db_to_linear(backhaul_noise))
            }
            BackhaulPath::Ris(ris_id) => {
                let gain = ris.get(donor.id, ris_id, sbs_id).ok_or_else(|| {
                    Error::Config(format!("no optimized RIS gain for `{}` via {ris_id}", sbs.name))
                })?;
                ris_snr(donor, gain, backhaul_noise)
            }
            BackhaulPath::Ncr(ncr_id) => {
                let node = deployment.node(ncr_id);
                let NodeKind::Ncr(cfg) = node.kind else {
                    return Err(Error::Config(format!("node `{}` is not an NCR", node.name)));
                };
                let fades = (fading.power(donor.id, ncr_id), fading.power(ncr_id, sbs_id));
                ncr_snr(&links, donor, node, &cfg, sbs, config.split.backhaul(), fades)
            }
        };
        report.backhaul.insert(
            sbs_id,
            BackhaulReport {
                sbs: sbs_id,
                donor: donor.id,
                path: assignment.path,
                bandwidth_hz: bandwidth,
                sinr,
                rate_bps: shannon(bandwidth, sinr),
                ue_count: association.ue_count(sbs_id),
            },
        );
    }

    let access_noise = db_to_linear(noise_power_dbm(config.split.access(), nf));
    for (&ue_id, &bs_id) in &association.ue_to_bs {
        let ue = deployment.node(ue_id);
        let bs = deployment.node(bs_id);
        let signal = links.aligned(bs, ue, fading.power(bs_id, ue_id));
        report.clamped_links += signal.path_loss_clamped as usize;
        let (interference, clamped) = aggregate_interference(&links, beams, Band::Access, ue_id, bs_id, fading, config.interference_loss);
        report.clamped_links += clamped as usize;
        let sinr = db_to_linear(signal.p_rx_dbm) / (interference + access_noise);
        let bandwidth = report.allocation.access_hz_per_ue.get(&bs_id).copied().unwrap_or(0.0);
        let access_rate = shannon(bandwidth, sinr);
        let backhaul_share = report.backhaul.get(&bs_id).map(|b| {
            if b.ue_count == 0 {
                0.0
            } else {
                b.rate_bps / b.ue_count as f64
            }
        });
        let rate = match backhaul_share {
            Some(share) => access_rate.min(share),
            None => access_rate,
        };
        report.ues.push(UeRate {
            ue: ue_id,
            serving: bs_id,
            access_bandwidth_hz: bandwidth,
            sinr,
            access_rate_bps: rate_or_zero(access_rate),
            backhaul_share_bps: backhaul_share,
            rate_bps: rate_or_zero(rate),
        });
    }
    Ok(report)
}

fn rate_or_zero(r: f64) -> f64 {
    if r.is_nan() {
        0.0
    } else {
        r
    }
}
