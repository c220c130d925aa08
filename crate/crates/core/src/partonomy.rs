//! Part-of hierarchy over geographic regions (country ⊃ state ⊃ city ⊃
//! cluster) with inverse-popularity information weights, and the
//! information-weighted user similarities defined over it.
//!
//! Layer 0 holds the leaves. Region nodes come from a [`RegionForest`];
//! a region whose id equals a dataset context id receives that context's
//! recommendation units as leaves, unless the forest binds leaves
//! explicitly through `cluster_id`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::ids::{ContextIdx, NodeIdx, UnitIdx, UserIdx};
use crate::units::UnitIndex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartonomyError {
    #[error("duplicate partonomy node `{0}`")]
    DuplicateNode(String),
    #[error("node `{child}` at layer {child_layer} cannot be a child of `{parent}` at layer {parent_layer}")]
    LayerMismatch {
        parent: String,
        parent_layer: u32,
        child: String,
        child_layer: u32,
    },
    #[error("context node `{0}` must sit at layer 1 to receive leaf units")]
    ContextLayer(String),
    #[error("node `{0}` binds a cluster but is not an empty layer-0 leaf")]
    ClusterLeaf(String),
    #[error("layer {layer} has no layer below it or does not exist (max layer {max})")]
    InvalidLayer { layer: usize, max: usize },
}

/// One region as it appears in a partonomy file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionNode {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub layer: u32,
    #[serde(default)]
    pub children: Vec<RegionNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_id: Option<u32>,
}

/// The region skeleton of a partonomy: a list of root trees.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionForest(pub Vec<RegionNode>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InformationMode {
    /// 1 / (users active in the subtree)
    #[default]
    Inverse,
    /// ln(1 + active users overall / users active in the subtree)
    LogInverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartonomyNode {
    pub id: String,
    pub layer: u32,
    pub parent: Option<NodeIdx>,
    pub children: Vec<NodeIdx>,
    pub unit: Option<UnitIdx>,
    pub context: Option<ContextIdx>,
}

#[derive(Debug, Clone)]
pub struct Partonomy {
    nodes: Vec<PartonomyNode>,
    layers: Vec<Vec<NodeIdx>>,
    information: Vec<f64>,
    layer_information: Vec<f64>,
    unit_leaf: HashMap<UnitIdx, NodeIdx>,
    context_node: HashMap<ContextIdx, NodeIdx>,
}

impl Partonomy {
    /// Builds the node structure and attaches units as leaves. Information
    /// weights start at zero; call [`Partonomy::build_information`].
    pub fn from_forest(
        forest: &RegionForest,
        dataset: &Dataset,
        units: &UnitIndex,
    ) -> Result<Self, PartonomyError> {
        let mut p = Partonomy {
            nodes: Vec::new(),
            layers: Vec::new(),
            information: Vec::new(),
            layer_information: Vec::new(),
            unit_leaf: HashMap::new(),
            context_node: HashMap::new(),
        };
        let mut seen = BTreeSet::new();
        for root in &forest.0 {
            p.add_region(root, None, dataset, units, &mut seen)?;
        }

        // Each remaining unit hangs under the context holding most of its triples.
        let mut home: BTreeMap<UnitIdx, BTreeMap<ContextIdx, usize>> = BTreeMap::new();
        for (t, _) in dataset.triples() {
            if let Some(u) = units.unit_of_item(t.item) {
                *home.entry(u).or_default().entry(t.context).or_insert(0) += 1;
            }
        }
        for (unit, per_ctx) in home {
            if p.unit_leaf.contains_key(&unit) {
                continue;
            }
            // max_by_key keeps the last maximum; iterate in reverse to favor the lowest context
            let ctx = per_ctx
                .iter()
                .rev()
                .max_by_key(|(_, n)| **n)
                .map(|(g, _)| *g)
                .expect("nonempty");
            let Some(&parent) = p.context_node.get(&ctx) else { continue };
            if p.nodes[parent.index()].layer != 1 {
                return Err(PartonomyError::ContextLayer(p.nodes[parent.index()].id.clone()));
            }
            let leaf = p.push_node(PartonomyNode {
                id: format!("unit:{}", units.label(unit)),
                layer: 0,
                parent: Some(parent),
                children: Vec::new(),
                unit: Some(unit),
                context: None,
            });
            p.unit_leaf.insert(unit, leaf);
        }

        let max_layer = p.nodes.iter().map(|n| n.layer as usize).max().unwrap_or(0);
        p.layers = vec![Vec::new(); max_layer + 1];
        for (k, n) in p.nodes.iter().enumerate() {
            p.layers[n.layer as usize].push(NodeIdx::from(k));
        }
        p.information = vec![0.0; p.nodes.len()];
        p.layer_information = vec![0.0; p.layers.len()];
        Ok(p)
    }

    fn push_node(&mut self, node: PartonomyNode) -> NodeIdx {
        let idx = NodeIdx::from(self.nodes.len());
        if let Some(parent) = node.parent {
            self.nodes[parent.index()].children.push(idx);
        }
        self.nodes.push(node);
        idx
    }

    fn add_region(
        &mut self,
        region: &RegionNode,
        parent: Option<NodeIdx>,
        dataset: &Dataset,
        units: &UnitIndex,
        seen: &mut BTreeSet<String>,
    ) -> Result<(), PartonomyError> {
        if !seen.insert(region.id.clone()) {
            return Err(PartonomyError::DuplicateNode(region.id.clone()));
        }
        if let Some(pidx) = parent {
            let pn = &self.nodes[pidx.index()];
            if pn.layer != region.layer + 1 {
                return Err(PartonomyError::LayerMismatch {
                    parent: pn.id.clone(),
                    parent_layer: pn.layer,
                    child: region.id.clone(),
                    child_layer: region.layer,
                });
            }
        }
        let unit = match region.cluster_id {
            Some(cid) => {
                if region.layer != 0 || !region.children.is_empty() {
                    return Err(PartonomyError::ClusterLeaf(region.id.clone()));
                }
                let u = UnitIdx(cid);
                (u.index() < units.len()).then_some(u)
            }
            None => None,
        };
        let context = dataset.context_index(&region.id);
        let idx = self.push_node(PartonomyNode {
            id: region.id.clone(),
            layer: region.layer,
            parent,
            children: Vec::new(),
            unit,
            context,
        });
        if let Some(u) = unit {
            self.unit_leaf.insert(u, idx);
        }
        if let Some(g) = context {
            self.context_node.insert(g, idx);
        }
        for child in &region.children {
            self.add_region(child, Some(idx), dataset, units, seen)?;
        }
        Ok(())
    }

    /// Sets information(c) from the number of distinct users with at least
    /// one selection inside c's subtree. Nodes nobody touched get 0.
    pub fn build_information(&mut self, dataset: &Dataset, units: &UnitIndex, mode: InformationMode) {
        let touched = self.touched_nodes(dataset, units);
        let mut counts = vec![0usize; self.nodes.len()];
        for nodes in touched.values() {
            for n in nodes {
                counts[n.index()] += 1;
            }
        }
        let active = touched.len() as f64;
        self.information = counts
            .iter()
            .map(|&c| match (c, mode) {
                (0, _) => 0.0,
                (c, InformationMode::Inverse) => 1.0 / c as f64,
                (c, InformationMode::LogInverse) => (1.0 + active / c as f64).ln(),
            })
            .collect();
        self.layer_information = self
            .layers
            .iter()
            .map(|nodes| nodes.iter().map(|n| self.information[n.index()]).sum())
            .collect();
    }

    /// Overrides the information weights. Intended for fixtures.
    pub fn set_information(&mut self, information: Vec<f64>) {
        assert_eq!(information.len(), self.nodes.len());
        self.information = information;
        self.layer_information = self
            .layers
            .iter()
            .map(|nodes| nodes.iter().map(|n| self.information[n.index()]).sum())
            .collect();
    }

    /// Every node each user touched: the leaves of their units, the nodes of
    /// the contexts they were active in, and all ancestors of those.
    fn touched_nodes(&self, dataset: &Dataset, units: &UnitIndex) -> BTreeMap<UserIdx, Vec<NodeIdx>> {
        let mut touched: BTreeMap<UserIdx, BTreeSet<NodeIdx>> = BTreeMap::new();
        for (t, _) in dataset.triples() {
            let leaf = units.unit_of_item(t.item).and_then(|u| self.unit_leaf.get(&u));
            let region = self.context_node.get(&t.context);
            for start in [leaf, region].into_iter().flatten() {
                let set = touched.entry(t.user).or_default();
                let mut cur = Some(*start);
                while let Some(n) = cur {
                    if !set.insert(n) {
                        break;
                    }
                    cur = self.nodes[n.index()].parent;
                }
            }
        }
        touched.into_iter().map(|(u, s)| (u, s.into_iter().collect())).collect()
    }

    pub fn nodes(&self) -> &[PartonomyNode] {
        &self.nodes
    }

    pub fn node(&self, n: NodeIdx) -> &PartonomyNode {
        &self.nodes[n.index()]
    }

    pub fn find(&self, id: &str) -> Option<NodeIdx> {
        self.nodes.iter().position(|n| n.id == id).map(NodeIdx::from)
    }

    pub fn information(&self, n: NodeIdx) -> f64 {
        self.information[n.index()]
    }

    pub fn information_weights(&self) -> &[f64] {
        &self.information
    }

    pub fn max_layer(&self) -> usize {
        self.layers.len().saturating_sub(1)
    }

    pub fn layer(&self, l: usize) -> &[NodeIdx] {
        self.layers.get(l).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn leaf_of_unit(&self, u: UnitIdx) -> Option<NodeIdx> {
        self.unit_leaf.get(&u).copied()
    }

    pub fn node_of_context(&self, g: ContextIdx) -> Option<NodeIdx> {
        self.context_node.get(&g).copied()
    }

    fn check_layer(&self, layer: usize) -> Result<(), PartonomyError> {
        if layer == 0 || layer > self.max_layer() {
            return Err(PartonomyError::InvalidLayer { layer, max: self.max_layer() });
        }
        Ok(())
    }
}

/// Per layer: (parent, touched children) ascending by parent.
type LayerEntries = Vec<Vec<(NodeIdx, Vec<NodeIdx>)>>;

/// Per user, per touched non-leaf node: the touched children of that node.
#[derive(Debug, Clone, Default)]
pub struct UserFootprint {
    /// `[user][layer]` → (parent, touched children) ascending by parent.
    per_user: HashMap<UserIdx, LayerEntries>,
}

impl UserFootprint {
    pub fn build(p: &Partonomy, dataset: &Dataset, units: &UnitIndex) -> Self {
        let layers = p.layers.len();
        let per_user = p
            .touched_nodes(dataset, units)
            .into_iter()
            .map(|(u, nodes)| {
                let mut by_parent: BTreeMap<NodeIdx, Vec<NodeIdx>> = BTreeMap::new();
                for n in nodes {
                    if let Some(parent) = p.nodes[n.index()].parent {
                        by_parent.entry(parent).or_default().push(n);
                    }
                }
                let mut by_layer = vec![Vec::new(); layers];
                for (parent, children) in by_parent {
                    by_layer[p.nodes[parent.index()].layer as usize].push((parent, children));
                }
                (u, by_layer)
            })
            .collect();
        UserFootprint { per_user }
    }

    /// Builds a footprint from explicit child sets. Intended for fixtures.
    pub fn from_sets(p: &Partonomy, sets: &[(UserIdx, NodeIdx, Vec<NodeIdx>)]) -> Self {
        let mut per_user: HashMap<UserIdx, LayerEntries> = HashMap::new();
        for (u, parent, children) in sets {
            let layer = p.node(*parent).layer as usize;
            let entry = per_user.entry(*u).or_insert_with(|| vec![Vec::new(); p.layers.len()]);
            let mut c = children.clone();
            c.sort_unstable();
            c.dedup();
            entry[layer].push((*parent, c));
            entry[layer].sort_by_key(|(n, _)| *n);
        }
        UserFootprint { per_user }
    }

    fn layer_entries(&self, u: UserIdx, layer: usize) -> &[(NodeIdx, Vec<NodeIdx>)] {
        self.per_user
            .get(&u)
            .and_then(|l| l.get(layer))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Children of `g` in which `u` selected something.
    pub fn children(&self, p: &Partonomy, u: UserIdx, g: NodeIdx) -> &[NodeIdx] {
        let entries = self.layer_entries(u, p.node(g).layer as usize);
        match entries.binary_search_by_key(&g, |(n, _)| *n) {
            Ok(k) => &entries[k].1,
            Err(_) => &[],
        }
    }

    /// Whether `u` touched any node at all.
    pub fn is_active(&self, u: UserIdx) -> bool {
        self.per_user.contains_key(&u)
    }
}

/// Information-weighted overlap of two ascending child sets:
/// information of the intersection over information of the union, 0 when
/// the union weighs nothing.
pub fn sim_inf_sets(a: &[NodeIdx], b: &[NodeIdx], information: &[f64]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut shared, mut union) = (0.0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => {
                let w = information[a[i].index()];
                shared += w;
                union += w;
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => {
                union += information[a[i].index()];
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                union += information[b[j].index()];
                j += 1;
            }
        }
    }
    union += a[i..].iter().map(|n| information[n.index()]).sum::<f64>();
    union += b[j..].iter().map(|n| information[n.index()]).sum::<f64>();
    if union > 0.0 {
        (shared / union).min(1.0)
    } else {
        0.0
    }
}

/// Similarity of two users with respect to the non-leaf node `g`.
pub fn sim_inf(u: UserIdx, u2: UserIdx, g: NodeIdx, p: &Partonomy, f: &UserFootprint) -> f64 {
    sim_inf_sets(f.children(p, u, g), f.children(p, u2, g), &p.information)
}

/// Similarity of two users at partonomy layer `layer`: the
/// information-weighted mean of [`sim_inf`] over the nodes of that layer.
pub fn sim_two_layer(
    u: UserIdx,
    u2: UserIdx,
    layer: usize,
    p: &Partonomy,
    f: &UserFootprint,
) -> Result<f64, PartonomyError> {
    p.check_layer(layer)?;
    Ok(two_layer_unchecked(u, u2, layer, p, f))
}

pub(crate) fn two_layer_unchecked(u: UserIdx, u2: UserIdx, layer: usize, p: &Partonomy, f: &UserFootprint) -> f64 {
    let denom = p.layer_information[layer];
    if denom <= 0.0 {
        return 0.0;
    }
    // sim_inf is zero unless both users touched the node, so only shared
    // parents contribute to the numerator.
    let a = f.layer_entries(u, layer);
    let b = f.layer_entries(u2, layer);
    let (mut i, mut j) = (0, 0);
    let mut numer = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Equal => {
                let g = a[i].0;
                let w = p.information[g.index()];
                if w > 0.0 {
                    numer += sim_inf_sets(&a[i].1, &b[j].1, &p.information) * w;
                }
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    (numer / denom).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(i: u32) -> NodeIdx {
        NodeIdx(i)
    }

    #[test]
    fn sim_inf_hand_values() {
        let info = [1.0, 0.5, 0.25];
        // disjoint
        assert_eq!(sim_inf_sets(&[n(0)], &[n(1)], &info), 0.0);
        // identical
        assert_eq!(sim_inf_sets(&[n(0), n(2)], &[n(0), n(2)], &info), 1.0);
        // A = {c1, c2}, B = {c2, c3}
        let s = sim_inf_sets(&[n(0), n(1)], &[n(1), n(2)], &info);
        assert!((s - 0.5 / 1.75).abs() < 1e-12);
        // empty union
        assert_eq!(sim_inf_sets(&[], &[], &info), 0.0);
        // zero-information union
        assert_eq!(sim_inf_sets(&[n(0)], &[n(0)], &[0.0]), 0.0);
    }
}
