use std::collections::BTreeMap;

use super::{NodeId, ResourceSplit};

/// Load of one base station for bandwidth partitioning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeLoad {
    pub node: NodeId,
    pub ue_count: usize,
    /// Donor feeding this node's wireless backhaul, if it is an IAB SBS.
    pub backhaul_donor: Option<NodeId>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Allocation {
    /// Backhaul bandwidth of each IAB SBS (Hz).
    pub backhaul_hz: BTreeMap<NodeId, f64>,
    /// Access bandwidth of each UE of a base station (Hz).
    pub access_hz_per_ue: BTreeMap<NodeId, f64>,
}

/// Load-proportional split: each donor's `psi * B` is shared by its IAB
/// children in proportion to their UE counts, and every base station's
/// `(1 - psi) * B` is shared equally by its UEs.
pub fn allocate_bandwidth(split: &ResourceSplit, loads: &[NodeLoad]) -> Allocation {
    let mut donor_load: BTreeMap<NodeId, usize> = BTreeMap::new();
    for load in loads {
        if let Some(donor) = load.backhaul_donor {
            *donor_load.entry(donor).or_default() += load.ue_count;
        }
    }
    let mut out = Allocation::default();
    for load in loads {
        if let Some(donor) = load.backhaul_donor {
            let total = donor_load[&donor];
            let share = if total == 0 {
                0.0
            } else {
                split.backhaul() * load.ue_count as f64 / total as f64
            };
            out.backhaul_hz.insert(load.node, share);
        }
        let per_ue = if load.ue_count == 0 {
            0.0
        } else {
            split.access() / load.ue_count as f64
        };
        out.access_hz_per_ue.insert(load.node, per_ue);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn proportional_backhaul_and_equal_access() {
        let split = ResourceSplit::new(0.4, 1e9).unwrap();
        let loads = [
            NodeLoad {
                node: NodeId(0),
                ue_count: 5,
                backhaul_donor: None,
            },
            NodeLoad {
                node: NodeId(1),
                ue_count: 3,
                backhaul_donor: Some(NodeId(0)),
            },
            NodeLoad {
                node: NodeId(2),
                ue_count: 1,
                backhaul_donor: Some(NodeId(0)),
            },
        ];
        let a = allocate_bandwidth(&split, &loads);
        assert_relative_eq!(a.backhaul_hz[&NodeId(1)], 300e6, max_relative = 1e-12);
        assert_relative_eq!(a.backhaul_hz[&NodeId(2)], 100e6, max_relative = 1e-12);
        assert_relative_eq!(a.access_hz_per_ue[&NodeId(0)], 120e6, max_relative = 1e-12);
        assert_relative_eq!(a.access_hz_per_ue[&NodeId(1)], 200e6, max_relative = 1e-12);
        assert!(!a.backhaul_hz.contains_key(&NodeId(0)));
    }

    #[test]
    fn idle_nodes_get_nothing() {
        let split = ResourceSplit::new(0.5, 1e9).unwrap();
        let loads = [NodeLoad {
            node: NodeId(3),
            ue_count: 0,
            backhaul_donor: Some(NodeId(0)),
        }];
        let a = allocate_bandwidth(&split, &loads);
        assert_eq!(a.backhaul_hz[&NodeId(3)], 0.0);
        assert_eq!(a.access_hz_per_ue[&NodeId(3)], 0.0);
    }

    proptest! {
        #[test]
        fn donor_shares_sum_to_backhaul_band(psi in 0.0..=1.0f64, counts in prop::collection::vec(0usize..20, 1..6)) {
            let split = ResourceSplit::new(psi, 1e9).unwrap();
            let loads: Vec<NodeLoad> = counts
                .iter()
                .enumerate()
                .map(|(i, &c)| NodeLoad { node: NodeId(i + 1), ue_count: c, backhaul_donor: Some(NodeId(0)) })
                .collect();
            let a = allocate_bandwidth(&split, &loads);
            let sum: f64 = a.backhaul_hz.values().sum();
            let total: usize = counts.iter().sum();
            let expected = if total == 0 { 0.0 } else { split.backhaul() };
            prop_assert!((sum - expected).abs() <= 1e-6 * split.total_bandwidth);
            for (load, count) in loads.iter().zip(&counts) {
                let access_total = a.access_hz_per_ue[&load.node] * *count as f64;
                let expected = if *count == 0 { 0.0 } else { split.access() };
                prop_assert!((access_total - expected).abs() <= 1e-6 * split.total_bandwidth);
            }
        }
    }
}
