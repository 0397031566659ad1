use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::channel::{db_to_linear, linear_to_db};
use crate::error::{Error, Result};
use crate::ris::{ncr_end_to_end_snr, ncr_forward_with_noise, optimize_ris, synthesize_los_channel, NcrConfig};

use super::links::{noise_power_dbm, LinkModel};
use super::{AssociationRule, BackhaulPath, Deployment, FadingSource, Foliage, NetworkConfig, Node, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackhaulAssignment {
    pub donor: NodeId,
    pub path: BackhaulPath,
}

/// Optimized cascaded gains `|g_c w|^2` keyed by `(donor, ris, sbs)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RisGains {
    gains: BTreeMap<(NodeId, NodeId, NodeId), f64>,
}

impl RisGains {
    pub fn get(&self, donor: NodeId, ris: NodeId, sbs: NodeId) -> Option<f64> {
        self.gains.get(&(donor, ris, sbs)).copied()
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

/// Serving base station per UE: the largest received power, fading-averaged
/// or instantaneous per `config.association`. Ties go to the lower id.
pub fn associate_ues(
    deployment: &Deployment,
    foliage: &Foliage,
    config: &NetworkConfig,
    fading: &dyn FadingSource,
) -> BTreeMap<NodeId, NodeId> {
    let links = LinkModel::new(deployment, foliage, &config.channel);
    let mut out = BTreeMap::new();
    for ue in deployment.ues() {
        let mut best: Option<(NodeId, f64)> = None;
        for bs in deployment.base_stations() {
            let h = match config.association {
                AssociationRule::AveragePower => 1.0,
                AssociationRule::InstantaneousPower => fading.power(bs.id, ue.id),
            };
            let p = links.aligned(bs, ue, h).p_rx_dbm;
            if best.is_none_or(|(_, b)| p > b) {
                best = Some((bs.id, p));
            }
        }
        if let Some((bs, _)) = best {
            out.insert(ue.id, bs);
        }
    }
    out
}

/// Runs the joint RIS optimization for every `(donor, ris, IAB SBS)` triple
/// allowed by the path policy.
pub fn ris_gains(deployment: &Deployment, foliage: &Foliage, config: &NetworkConfig) -> Result<RisGains> {
    let mut gains = RisGains::default();
    if !config.paths.ris {
        return Ok(gains);
    }
    let links = LinkModel::new(deployment, foliage, &config.channel);
    for donor in deployment.donors() {
        for (ris, _) in deployment.ris_panels() {
            for sbs in deployment.iab_sbss() {
                let gain = ris_cascade_gain(&links, donor, ris, sbs, config)?;
                gains.gains.insert((donor.id, ris.id, sbs.id), gain);
            }
        }
    }
    Ok(gains)
}

fn ris_cascade_gain(links: &LinkModel<'_>, donor: &Node, ris: &Node, sbs: &Node, config: &NetworkConfig) -> Result<f64> {
    let fc = config.channel.carrier.frequency_ghz;
    let hop1 = links.budget(donor, ris, donor.p_tx_dbm, donor.antenna.boresight_gain(), 0.0, 1.0);
    let hop2 = links.budget(ris, sbs, 0.0, 0.0, sbs.antenna.boresight_gain(), 1.0);
    // The sectored main-lobe gains already stand for the BS array gains, so
    // each hop is scaled to carry exactly its budget gain per RIS element.
    let g_br = synthesize_los_channel(
        donor.position,
        ris.position,
        donor.elements,
        ris.elements,
        fc,
        -hop1.large_scale_gain_db() + linear_to_db(donor.elements as f64),
    )?;
    let g_ru_full = synthesize_los_channel(
        ris.position,
        sbs.position,
        ris.elements,
        sbs.elements,
        fc,
        -hop2.large_scale_gain_db() + linear_to_db(sbs.elements as f64),
    )?;
    // The hop is rank one, so any non-zero column spans the dominant receive direction.
    let column = (0..g_ru_full.cols())
        .map(|c| (0..g_ru_full.rows()).map(|r| g_ru_full.get(r, c)).collect::<Vec<_>>())
        .max_by(|a, b| col_norm(a).total_cmp(&col_norm(b)))
        .unwrap_or_default();
    let norm = col_norm(&column);
    if norm == 0.0 {
        return Ok(0.0);
    }
    let combiner: Vec<Complex64> = column.iter().map(|z| z / norm).collect();
    let g_ru = g_ru_full.combine_rows(&combiner)?;
    Ok(optimize_ris(&g_br, &g_ru, config.ris_tolerance, config.ris_max_iterations)?.gain)
}

fn col_norm(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

/// SNR of the donor -> NCR -> SBS path with per-hop fading powers `h1`, `h2`.
pub(super) fn ncr_snr(
    links: &LinkModel<'_>,
    donor: &Node,
    ncr: &Node,
    ncr_config: &NcrConfig,
    sbs: &Node,
    bandwidth_hz: f64,
    (h1, h2): (f64, f64),
) -> f64 {
    let nf = links.channel.noise_figure_db;
    let noise = noise_power_dbm(bandwidth_hz, nf);
    let hop1 = links.budget(donor, ncr, donor.p_tx_dbm, donor.antenna.boresight_gain(), ncr_config.antenna_gain_db, h1);
    let forwarded = ncr_forward_with_noise(hop1.p_rx_dbm, noise, ncr_config);
    let hop2 = links.budget(ncr, sbs, 0.0, ncr_config.antenna_gain_db, sbs.antenna.boresight_gain(), h2);
    let hop2_gain_db = hop2.p_rx_dbm;
    if !hop2_gain_db.is_finite() || !forwarded.signal_dbm.is_finite() {
        return 0.0;
    }
    ncr_end_to_end_snr(&forwarded, hop2_gain_db, noise)
}

pub(super) fn direct_snr(links: &LinkModel<'_>, donor: &Node, sbs: &Node, bandwidth_hz: f64) -> f64 {
    let noise = noise_power_dbm(bandwidth_hz, links.channel.noise_figure_db);
    db_to_linear(links.aligned(donor, sbs, 1.0).p_rx_dbm - noise)
}

pub(super) fn ris_snr(donor: &Node, gain: f64, noise_dbm: f64) -> f64 {
    db_to_linear(donor.p_tx_dbm + linear_to_db(gain) - noise_dbm)
}

/// Donor and backhaul path per IAB SBS.
///
/// The donor minimizes the total path, foliage and rain loss (ties to the
/// lower id). Among the paths allowed by `config.paths`, the one with the largest
/// fading-averaged SNR wins; ties prefer direct, then RIS, then NCR, each in
/// id order. SNRs of all paths scale identically with bandwidth, so the
/// ranking does not depend on `psi`.
pub fn associate_backhaul(
    deployment: &Deployment,
    foliage: &Foliage,
    config: &NetworkConfig,
    ris: &RisGains,
) -> Result<BTreeMap<NodeId, BackhaulAssignment>> {
    let links = LinkModel::new(deployment, foliage, &config.channel);
    let bandwidth = config.split.total_bandwidth;
    let noise = noise_power_dbm(bandwidth, config.channel.noise_figure_db);
    let mut out = BTreeMap::new();
    for sbs in deployment.iab_sbss() {
        let mut donor: Option<(&Node, f64)> = None;
        for d in deployment.donors() {
            let loss = links.aligned(d, sbs, 1.0).losses_db();
            if donor.is_none_or(|(_, b)| loss < b) {
                donor = Some((d, loss));
            }
        }
        let Some((donor, _)) = donor else {
            return Err(Error::Config(format!("IAB SBS `{}` has no donor to backhaul from", sbs.name)));
        };

        let mut best: Option<(BackhaulPath, f64)> = None;
        let mut consider = |path: BackhaulPath, snr: f64| {
            if best.is_none_or(|(_, b)| snr > b) {
                best = Some((path, snr));
            }
        };
        if config.paths.direct {
            consider(BackhaulPath::Direct, direct_snr(&links, donor, sbs, bandwidth));
        }
        if config.paths.ris {
            for (node, _) in deployment.ris_panels() {
                let gain = ris.get(donor.id, node.id, sbs.id).ok_or_else(|| {
                    Error::Config(format!("no optimized RIS gain for `{}` via `{}`", sbs.name, node.name))
                })?;
                consider(BackhaulPath::Ris(node.id), ris_snr(donor, gain, noise));
            }
        }
        if config.paths.ncr {
            for (node, ncr) in deployment.ncrs() {
                consider(BackhaulPath::Ncr(node.id), ncr_snr(&links, donor, node, ncr, sbs, bandwidth, (1.0, 1.0)));
            }
        }
        let path = best.map(|(p, _)| p).unwrap_or(BackhaulPath::Direct);
        out.insert(
            sbs.id,
            BackhaulAssignment {
                donor: donor.id,
                path,
            },
        );
    }
    Ok(out)
}
