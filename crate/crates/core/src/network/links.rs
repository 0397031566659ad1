use std::collections::BTreeMap;

use crate::channel::{db_to_linear, ChannelConfig, LinkBudget};
use crate::geometry::VegetationDepth;

use super::{Association, Deployment, FadingSource, Foliage, Node, NodeId};

/// Thermal noise `-174 dBm/Hz + 10 log10(B) + NF`; `-inf` for an empty band.
pub fn noise_power_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    if bandwidth_hz <= 0.0 {
        return f64::NEG_INFINITY;
    }
    -174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

/// Link budgets between nodes of one realization.
#[derive(Debug, Clone, Copy)]
pub struct LinkModel<'a> {
    pub deployment: &'a Deployment,
    pub foliage: &'a Foliage,
    pub channel: &'a ChannelConfig,
}

impl<'a> LinkModel<'a> {
    pub fn new(deployment: &'a Deployment, foliage: &'a Foliage, channel: &'a ChannelConfig) -> Self {
        LinkModel {
            deployment,
            foliage,
            channel,
        }
    }

    pub fn depth(&self, a: &Node, b: &Node) -> VegetationDepth {
        self.foliage.depth(a, b)
    }

    /// Budget of `tx -> rx` with explicit antenna gains and fading power.
    pub fn budget(&self, tx: &Node, rx: &Node, p_tx_dbm: f64, tx_gain_db: f64, rx_gain_db: f64, fading: f64) -> LinkBudget {
        LinkBudget::compose(
            self.channel,
            p_tx_dbm,
            tx.position.distance(&rx.position),
            self.depth(tx, rx),
            tx_gain_db,
            rx_gain_db,
            fading,
        )
    }

    /// Budget with both ends steering their main lobes at each other.
    pub fn aligned(&self, tx: &Node, rx: &Node, fading: f64) -> LinkBudget {
        self.budget(tx, rx, tx.p_tx_dbm, tx.antenna.boresight_gain(), rx.antenna.boresight_gain(), fading)
    }
}

/// Where every transmitting base station points its beam in each band.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BeamPlan {
    /// Base station -> the served UE its access beam points at.
    pub access: BTreeMap<NodeId, NodeId>,
    /// Donor -> the IAB child its backhaul beam points at.
    pub backhaul: BTreeMap<NodeId, NodeId>,
}

impl BeamPlan {
    /// Each active transmitter points at one of its receivers; `pick(tx, n)`
    /// returns an index in `0..n` into its receivers listed in id order.
    pub fn from_choices(association: &Association, mut pick: impl FnMut(NodeId, usize) -> usize) -> Self {
        let mut served: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (&ue, &bs) in &association.ue_to_bs {
            served.entry(bs).or_default().push(ue);
        }
        let mut children: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (&sbs, assignment) in &association.sbs_backhaul {
            children.entry(assignment.donor).or_default().push(sbs);
        }
        let mut choose = |map: BTreeMap<NodeId, Vec<NodeId>>| {
            map.into_iter()
                .map(|(tx, rxs)| {
                    let idx = pick(tx, rxs.len()).min(rxs.len() - 1);
                    (tx, rxs[idx])
                })
                .collect::<BTreeMap<_, _>>()
        };
        let access = choose(served);
        let backhaul = choose(children);
        BeamPlan { access, backhaul }
    }

    /// Every transmitter points at its lowest-id receiver.
    pub fn first(association: &Association) -> Self {
        Self::from_choices(association, |_, _| 0)
    }
}

/// Which loss terms interfering links carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterferenceLoss {
    /// Path loss (with its LoS/NLoS exponent), antenna gains and fading only;
    /// foliage and rain attenuate the serving links but not interference.
    #[default]
    PathOnly,
    /// The complete budget, including foliage and rain excess loss.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Access,
    Backhaul,
}

/// Sum of received interference power (mW) at `victim`, served by `serving`,
/// from every other base station transmitting in `band`.
///
/// Interferers radiate toward their own beam target; the victim receives
/// with its beam on `serving`. `loss` selects whether foliage and rain
/// attenuate the interfering links. Returns the total and whether any interfering
/// link hit the 1 m distance clamp.
pub fn aggregate_interference(
    links: &LinkModel<'_>,
    beams: &BeamPlan,
    band: Band,
    victim: NodeId,
    serving: NodeId,
    fading: &dyn FadingSource,
    loss: InterferenceLoss,
) -> (f64, bool) {
    let deployment = links.deployment;
    let victim_node = deployment.node(victim);
    let serving_node = deployment.node(serving);
    let transmitters = match band {
        Band::Access => &beams.access,
        Band::Backhaul => &beams.backhaul,
    };
    let mut total = 0.0;
    let mut clamped = false;
    for (&tx, &target) in transmitters {
        if tx == serving || tx == victim {
            continue;
        }
        let tx_node = deployment.node(tx);
        let target_node = deployment.node(target);
        let tx_gain = tx_node.antenna.gain_towards(tx_node.position, target_node.position, victim_node.position);
        let rx_gain = victim_node
            .antenna
            .gain_towards(victim_node.position, serving_node.position, tx_node.position);
        let mut budget = links.budget(tx_node, victim_node, tx_node.p_tx_dbm, tx_gain, rx_gain, fading.power(tx, victim));
        if loss == InterferenceLoss::PathOnly {
            budget.foliage_in_leaf_db = 0.0;
            budget.foliage_out_of_leaf_db = 0.0;
            budget.rain_db = 0.0;
            budget.p_rx_dbm = budget.recompute_p_rx_dbm();
        }
        clamped |= budget.path_loss_clamped;
        total += db_to_linear(budget.p_rx_dbm);
    }
    (total, clamped)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures;
    use super::super::{BackhaulAssignment, BackhaulPath, DeploymentBuilder, UnitFading};
    use super::*;
    use crate::channel::{antenna_gain_db, path_loss_db};
    use crate::geometry::Point;
    use approx::assert_relative_eq;

    #[test]
    fn noise_power_values() {
        assert_relative_eq!(noise_power_dbm(1e9, 0.0), -84.0, epsilon = 1e-12);
        assert_relative_eq!(noise_power_dbm(200e6, 7.0), -174.0 + 83.01029995663981 + 7.0, epsilon = 1e-9);
        assert_eq!(noise_power_dbm(0.0, 7.0), f64::NEG_INFINITY);
    }

    fn two_cell() -> (Deployment, Association) {
        let mut b = DeploymentBuilder::new();
        let a = b.donor("a", Point::new(0.0, 0.0), 40.0, fixtures::pattern(), 16);
        let s = b.iab_sbs("s", Point::new(200.0, 0.0), 30.0, fixtures::pattern(), 4);
        let u1 = b.ue("u1", Point::new(0.0, 50.0));
        let u2 = b.ue("u2", Point::new(200.0, 50.0));
        let d = b.build().unwrap();
        let mut assoc = Association::default();
        assoc.ue_to_bs.insert(u1, a);
        assoc.ue_to_bs.insert(u2, s);
        assoc.sbs_backhaul.insert(
            s,
            BackhaulAssignment {
                donor: a,
                path: BackhaulPath::Direct,
            },
        );
        (d, assoc)
    }

    #[test]
    fn beam_plan_first_targets() {
        let (_, assoc) = two_cell();
        let beams = BeamPlan::first(&assoc);
        assert_eq!(beams.access[&NodeId(0)], NodeId(2));
        assert_eq!(beams.access[&NodeId(1)], NodeId(3));
        assert_eq!(beams.backhaul[&NodeId(0)], NodeId(1));
    }

    #[test]
    fn access_interference_matches_hand_budget() {
        let (d, assoc) = two_cell();
        let foliage = Foliage::none();
        let ch = fixtures::channel();
        let links = LinkModel::new(&d, &foliage, &ch);
        let beams = BeamPlan::first(&assoc);
        // u1 (served by a) hears s, which beams at u2 straight north of it.
        let (mw, clamped) = aggregate_interference(&links, &beams, Band::Access, NodeId(2), NodeId(0), &UnitFading, InterferenceLoss::PathOnly);
        assert!(!clamped);
        let s = Point::new(200.0, 0.0);
        let u1 = Point::new(0.0, 50.0);
        let u2 = Point::new(200.0, 50.0);
        let off = s.bearing_to(&u1) - s.bearing_to(&u2);
        let g = antenna_gain_db(off, &fixtures::pattern());
        let pl = path_loss_db(s.distance(&u1), 28.0, 2.0).db;
        assert_relative_eq!(10.0 * mw.log10(), 30.0 + g - pl, epsilon = 1e-9);
    }

    #[test]
    fn backhaul_interference_only_from_other_donors() {
        let (d, assoc) = two_cell();
        let foliage = Foliage::none();
        let ch = fixtures::channel();
        let links = LinkModel::new(&d, &foliage, &ch);
        let beams = BeamPlan::first(&assoc);
        let (mw, _) = aggregate_interference(&links, &beams, Band::Backhaul, NodeId(1), NodeId(0), &UnitFading, InterferenceLoss::PathOnly);
        assert_eq!(mw, 0.0);
    }
}
