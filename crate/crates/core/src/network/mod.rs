//! Two-hop IAB network: deployment topology, UE and backhaul association,
//! bandwidth partitioning between access and backhaul, aggregate
//! interference, SINR and the end-to-end UE rate with its min rule.

mod allocation;
mod association;
mod links;
mod rates;

use std::collections::BTreeMap;

use crate::channel::{AntennaPattern, ChannelConfig};
use crate::error::{Error, Result};
use crate::geometry::{vegetation_depth, Point, TreeField, VegetationDepth};
use crate::ris::{NcrConfig, RisPanel};

pub use allocation::{allocate_bandwidth, Allocation, NodeLoad};
pub use association::{associate_backhaul, associate_ues, ris_gains, BackhaulAssignment, RisGains};
pub use links::{aggregate_interference, noise_power_dbm, Band, BeamPlan, InterferenceLoss, LinkModel};
pub use rates::{compute_rates, BackhaulReport, RateReport, UeRate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    /// Fiber-connected macro base station (IAB donor).
    Donor,
    /// Small base station wirelessly backhauled by a donor.
    IabSbs,
    /// Small base station with dedicated wired backhaul.
    NonIabSbs,
    Ue,
    Ris(RisPanel),
    Ncr(NcrConfig),
}

impl NodeKind {
    pub fn is_base_station(&self) -> bool {
        matches!(self, NodeKind::Donor | NodeKind::IabSbs | NodeKind::NonIabSbs)
    }

    pub fn label(&self) -> &'static str {
        match self {
            NodeKind::Donor => "mbs",
            NodeKind::IabSbs => "sbs_iab",
            NodeKind::NonIabSbs => "sbs_non_iab",
            NodeKind::Ue => "ue",
            NodeKind::Ris(_) => "ris",
            NodeKind::Ncr(_) => "ncr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Antenna {
    /// 0 dBi in every direction.
    Omni,
    Sectored(AntennaPattern),
}

impl Antenna {
    /// Gain toward `target` when the main lobe points from `origin` to `beam_target`.
    pub fn gain_towards(&self, origin: Point, beam_target: Point, target: Point) -> f64 {
        match self {
            Antenna::Omni => 0.0,
            Antenna::Sectored(pattern) => {
                let offset = origin.bearing_to(&target) - origin.bearing_to(&beam_target);
                crate::channel::antenna_gain_db(offset, pattern)
            }
        }
    }

    pub fn boresight_gain(&self) -> f64 {
        match self {
            Antenna::Omni => 0.0,
            Antenna::Sectored(pattern) => pattern.main_gain_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub name: String,
    pub kind: NodeKind,
    pub position: Point,
    pub p_tx_dbm: f64,
    pub antenna: Antenna,
    /// Antenna elements (donor transmit array, SBS receive array, RIS elements).
    pub elements: usize,
}

/// Every node of one network realization; `NodeId` is the index into `nodes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    nodes: Vec<Node>,
}

impl Deployment {
    pub fn new(nodes: Vec<Node>) -> Result<Self> {
        for (idx, node) in nodes.iter().enumerate() {
            if node.id != NodeId(idx) {
                return Err(Error::Config(format!(
                    "node `{}` has id {} but sits at index {idx}",
                    node.name, node.id
                )));
            }
            if !node.position.is_finite() {
                return Err(Error::Config(format!("node `{}` has a non-finite position", node.name)));
            }
            if node.kind.is_base_station() && !node.p_tx_dbm.is_finite() {
                return Err(Error::Config(format!("node `{}` has a non-finite transmit power", node.name)));
            }
            if node.kind == NodeKind::Ue && node.antenna != Antenna::Omni {
                return Err(Error::Config(format!("UE `{}` must use an omnidirectional antenna", node.name)));
            }
            if node.elements == 0 {
                return Err(Error::Config(format!("node `{}` needs at least one antenna element", node.name)));
            }
        }
        let mut names: Vec<&str> = nodes.iter().map(|n| n.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate node name `{}`", w[0])));
        }
        if !nodes.iter().any(|n| n.kind.is_base_station()) {
            return Err(Error::Config("deployment has no base station".into()));
        }
        Ok(Deployment { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn find(&self, name: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn base_stations(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind.is_base_station())
    }

    pub fn donors(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Donor)
    }

    pub fn iab_sbss(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::IabSbs)
    }

    pub fn ues(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Ue)
    }

    pub fn ris_panels(&self) -> impl Iterator<Item = (&Node, &RisPanel)> {
        self.nodes.iter().filter_map(|n| match &n.kind {
            NodeKind::Ris(panel) => Some((n, panel)),
            _ => None,
        })
    }

    pub fn ncrs(&self) -> impl Iterator<Item = (&Node, &NcrConfig)> {
        self.nodes.iter().filter_map(|n| match &n.kind {
            NodeKind::Ncr(cfg) => Some((n, cfg)),
            _ => None,
        })
    }

    /// Copy of this deployment with one UE appended per point, named `ue<i>`.
    pub fn with_ues(&self, points: &[Point]) -> Result<Deployment> {
        let mut nodes = self.nodes.clone();
        let base = nodes.len();
        for (i, p) in points.iter().enumerate() {
            nodes.push(Node {
                id: NodeId(base + i),
                name: format!("ue{i}"),
                kind: NodeKind::Ue,
                position: *p,
                p_tx_dbm: f64::NEG_INFINITY,
                antenna: Antenna::Omni,
                elements: 1,
            });
        }
        Deployment::new(nodes)
    }
}

/// Incremental construction of a [`Deployment`].
#[derive(Debug, Default, Clone)]
pub struct DeploymentBuilder {
    nodes: Vec<Node>,
}

impl DeploymentBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, name: &str, kind: NodeKind, position: Point, p_tx_dbm: f64, antenna: Antenna, elements: usize) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            id,
            name: name.to_string(),
            kind,
            position,
            p_tx_dbm,
            antenna,
            elements,
        });
        id
    }

    pub fn donor(&mut self, name: &str, position: Point, p_tx_dbm: f64, pattern: AntennaPattern, elements: usize) -> NodeId {
        self.push(name, NodeKind::Donor, position, p_tx_dbm, Antenna::Sectored(pattern), elements)
    }

    pub fn iab_sbs(&mut self, name: &str, position: Point, p_tx_dbm: f64, pattern: AntennaPattern, elements: usize) -> NodeId {
        self.push(name, NodeKind::IabSbs, position, p_tx_dbm, Antenna::Sectored(pattern), elements)
    }

    pub fn non_iab_sbs(&mut self, name: &str, position: Point, p_tx_dbm: f64, pattern: AntennaPattern, elements: usize) -> NodeId {
        self.push(name, NodeKind::NonIabSbs, position, p_tx_dbm, Antenna::Sectored(pattern), elements)
    }

    pub fn ris(&mut self, name: &str, panel: RisPanel) -> NodeId {
        self.push(name, NodeKind::Ris(panel), panel.position, f64::NEG_INFINITY, Antenna::Omni, panel.elements)
    }

    pub fn ncr(&mut self, name: &str, config: NcrConfig) -> NodeId {
        self.push(name, NodeKind::Ncr(config), config.position, config.max_output_dbm, Antenna::Omni, 1)
    }

    pub fn ue(&mut self, name: &str, position: Point) -> NodeId {
        self.push(name, NodeKind::Ue, position, f64::NEG_INFINITY, Antenna::Omni, 1)
    }

    pub fn build(self) -> Result<Deployment> {
        Deployment::new(self.nodes)
    }
}

/// Explicit per-link vegetation, keyed by unordered node pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkDepths {
    depths: BTreeMap<(NodeId, NodeId), VegetationDepth>,
}

impl LinkDepths {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn set(&mut self, a: NodeId, b: NodeId, depth: VegetationDepth) {
        self.depths.insert(Self::key(a, b), depth);
    }

    pub fn get(&self, a: NodeId, b: NodeId) -> VegetationDepth {
        self.depths.get(&Self::key(a, b)).copied().unwrap_or(VegetationDepth::ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((NodeId, NodeId), VegetationDepth)> + '_ {
        self.depths.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }
}

/// Source of vegetation depth for every link of a realization.
#[derive(Debug, Clone, PartialEq)]
pub enum Foliage {
    /// Geometric crossing of a sampled tree-line field.
    Field(TreeField),
    /// Depths assigned per link; unlisted links are clear.
    PerLink(LinkDepths),
}

impl Foliage {
    pub fn none() -> Self {
        Foliage::PerLink(LinkDepths::new())
    }

    pub fn depth(&self, a: &Node, b: &Node) -> VegetationDepth {
        match self {
            Foliage::Field(field) => {
                if a.position == b.position {
                    VegetationDepth::ZERO
                } else {
                    vegetation_depth(a.position, b.position, field)
                }
            }
            Foliage::PerLink(depths) => depths.get(a.id, b.id),
        }
    }
}

/// Small-scale fading power per directed link.
pub trait FadingSource: Sync {
    fn power(&self, tx: NodeId, rx: NodeId) -> f64;
}

/// Fading pinned to its mean, `|h|^2 = 1` on every link.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitFading;

impl FadingSource for UnitFading {
    fn power(&self, _tx: NodeId, _rx: NodeId) -> f64 {
        1.0
    }
}

impl<F: Fn(NodeId, NodeId) -> f64 + Sync> FadingSource for F {
    fn power(&self, tx: NodeId, rx: NodeId) -> f64 {
        self(tx, rx)
    }
}

/// Access/backhaul split of the carrier bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceSplit {
    pub psi: f64,
    pub total_bandwidth: f64,
}

impl ResourceSplit {
    pub fn new(psi: f64, total_bandwidth: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&psi) {
            return Err(Error::invalid("psi", format!("must lie in [0, 1], got {psi}")));
        }
        if !(total_bandwidth.is_finite() && total_bandwidth > 0.0) {
            return Err(Error::invalid("bandwidth", format!("must be > 0, got {total_bandwidth}")));
        }
        Ok(ResourceSplit { psi, total_bandwidth })
    }

    pub fn backhaul(&self) -> f64 {
        self.psi * self.total_bandwidth
    }

    pub fn access(&self) -> f64 {
        self.total_bandwidth - self.backhaul()
    }
}

/// How UEs pick their serving base station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssociationRule {
    /// Maximum fading-averaged received power.
    #[default]
    AveragePower,
    /// Maximum instantaneous received power, fading included.
    InstantaneousPower,
}

/// Which backhaul paths an IAB SBS may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathPolicy {
    pub direct: bool,
    pub ris: bool,
    pub ncr: bool,
}

impl PathPolicy {
    pub const DIRECT_ONLY: PathPolicy = PathPolicy {
        direct: true,
        ris: false,
        ncr: false,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    pub channel: ChannelConfig,
    pub split: ResourceSplit,
    pub association: AssociationRule,
    pub paths: PathPolicy,
    pub ris_tolerance: f64,
    pub ris_max_iterations: usize,
    pub interference_loss: InterferenceLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackhaulPath {
    Direct,
    Ris(NodeId),
    Ncr(NodeId),
}

impl BackhaulPath {
    pub fn label(&self) -> &'static str {
        match self {
            BackhaulPath::Direct => "direct",
            BackhaulPath::Ris(_) => "ris",
            BackhaulPath::Ncr(_) => "ncr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Association {
    pub ue_to_bs: BTreeMap<NodeId, NodeId>,
    pub sbs_backhaul: BTreeMap<NodeId, BackhaulAssignment>,
}

impl Association {
    pub fn ue_count(&self, bs: NodeId) -> usize {
        self.ue_to_bs.values().filter(|&&s| s == bs).count()
    }

    /// UEs served by `bs`, in id order.
    pub fn served_by(&self, bs: NodeId) -> Vec<NodeId> {
        self.ue_to_bs.iter().filter(|(_, &s)| s == bs).map(|(&u, _)| u).collect()
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::channel::{CarrierConfig, PathLossConfig, RainConfig};

    pub fn pattern() -> AntennaPattern {
        AntennaPattern::new(20.0, -5.0, 30f64.to_radians()).unwrap()
    }

    pub fn channel() -> ChannelConfig {
        ChannelConfig {
            carrier: CarrierConfig::new(28.0, 400e6).unwrap(),
            path_loss: PathLossConfig::new(2.0, 3.0).unwrap(),
            rain: RainConfig::new(0.2051, 0.9679).unwrap(),
            rain_rate_mm_per_hr: 0.0,
            noise_figure_db: 7.0,
        }
    }

    pub fn config(psi: f64, paths: PathPolicy) -> NetworkConfig {
        NetworkConfig {
            channel: channel(),
            split: ResourceSplit::new(psi, 400e6).unwrap(),
            association: AssociationRule::AveragePower,
            paths,
            ris_tolerance: 1e-9,
            ris_max_iterations: 100,
            interference_loss: InterferenceLoss::PathOnly,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TreeLine;

    #[test]
    fn deployment_validation() {
        let mut b = DeploymentBuilder::new();
        b.ue("u", Point::new(0.0, 0.0));
        assert!(matches!(b.build(), Err(Error::Config(_))));

        let mut b = DeploymentBuilder::new();
        b.donor("a", Point::new(0.0, 0.0), 40.0, fixtures::pattern(), 16);
        b.iab_sbs("a", Point::new(10.0, 0.0), 30.0, fixtures::pattern(), 4);
        assert!(b.build().is_err());

        let mut b = DeploymentBuilder::new();
        b.donor("mbs", Point::new(0.0, 0.0), 40.0, fixtures::pattern(), 16);
        let d = b.build().unwrap();
        let with = d.with_ues(&[Point::new(1.0, 2.0), Point::new(3.0, 4.0)]).unwrap();
        assert_eq!(with.ues().count(), 2);
        assert_eq!(with.find("ue1").unwrap().id, NodeId(2));
    }

    #[test]
    fn link_depths_are_unordered() {
        let mut depths = LinkDepths::new();
        let d = VegetationDepth {
            in_leaf: 3.0,
            out_of_leaf: 1.0,
        };
        depths.set(NodeId(4), NodeId(1), d);
        assert_eq!(depths.get(NodeId(1), NodeId(4)), d);
        assert_eq!(depths.get(NodeId(1), NodeId(2)), VegetationDepth::ZERO);
    }

    #[test]
    fn field_foliage_uses_geometry() {
        let mut b = DeploymentBuilder::new();
        let a = b.donor("mbs", Point::new(0.0, -50.0), 40.0, fixtures::pattern(), 16);
        let u = b.ue("u", Point::new(0.0, 50.0));
        let d = b.build().unwrap();
        let field = TreeField {
            lines: vec![TreeLine::new(Point::new(0.0, 0.0), 0.0, 100.0, 5.0, false).unwrap()],
            density: 0.0,
        };
        let depth = Foliage::Field(field).depth(d.node(a), d.node(u));
        assert!((depth.out_of_leaf - 5.0).abs() < 1e-12);
    }

    #[test]
    fn resource_split_partition() {
        let s = ResourceSplit::new(0.3, 400e6).unwrap();
        assert_eq!(s.backhaul() + s.access(), 400e6);
        assert!(ResourceSplit::new(1.5, 400e6).is_err());
        assert!(ResourceSplit::new(-0.1, 400e6).is_err());
    }

    #[test]
    fn sectored_antenna_gain_towards() {
        let ant = Antenna::Sectored(fixtures::pattern());
        let o = Point::new(0.0, 0.0);
        assert_eq!(ant.gain_towards(o, Point::new(10.0, 0.0), Point::new(50.0, 0.0)), 20.0);
        assert_eq!(ant.gain_towards(o, Point::new(10.0, 0.0), Point::new(0.0, 50.0)), -5.0);
        assert_eq!(Antenna::Omni.gain_towards(o, Point::new(1.0, 0.0), Point::new(0.0, 1.0)), 0.0);
    }
}
