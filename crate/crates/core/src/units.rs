//! Recommendation units: the things that get ranked and returned.
//!
//! For point-coordinate data (photos) a unit is a DBSCAN cluster; for
//! well-defined POIs (print providers) a unit is the raw item itself.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::clustering::Clustering;
use crate::dataset::Dataset;
use crate::ids::{ContextIdx, ItemIdx, UnitIdx, UserIdx};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitKind {
    Items,
    Clusters,
}

/// Unit-level view of a dataset.
#[derive(Debug, Clone)]
pub struct UnitIndex {
    kind: UnitKind,
    labels: Vec<String>,
    unit_of_item: Vec<Option<UnitIdx>>,
    /// Units per (user, context) with summed event counts, ascending by unit.
    node_units: HashMap<(UserIdx, ContextIdx), Vec<(UnitIdx, u32)>>,
    /// Units per user over every context, ascending by unit.
    user_units: HashMap<UserIdx, Vec<(UnitIdx, u32)>>,
    context_units: Vec<Vec<UnitIdx>>,
    /// Distinct users selecting the unit anywhere.
    popularity: Vec<u32>,
    /// Units of each context ordered for backfill: in-context popularity,
    /// then global popularity, then id.
    popular_in_context: Vec<Vec<UnitIdx>>,
}

impl UnitIndex {
    /// Every item is its own unit; `UnitIdx(i) == ItemIdx(i)`.
    pub fn items(dataset: &Dataset) -> Self {
        let unit_of_item = (0..dataset.num_items()).map(|i| Some(UnitIdx::from(i))).collect();
        let labels = (0..dataset.num_items())
            .map(|i| dataset.item_id(ItemIdx::from(i)).to_owned())
            .collect();
        Self::build(dataset, UnitKind::Items, labels, unit_of_item)
    }

    /// Units are clusters; `UnitIdx(c) == ClusterId(c)`. Noise items and
    /// items outside the clustering map to no unit.
    pub fn clusters(dataset: &Dataset, clustering: &Clustering) -> Self {
        let unit_of_item = (0..dataset.num_items())
            .map(|i| clustering.cluster_of(ItemIdx::from(i)).map(|c| UnitIdx(c.0)))
            .collect();
        let labels = (0..clustering.len()).map(|c| c.to_string()).collect();
        Self::build(dataset, UnitKind::Clusters, labels, unit_of_item)
    }

    fn build(
        dataset: &Dataset,
        kind: UnitKind,
        labels: Vec<String>,
        unit_of_item: Vec<Option<UnitIdx>>,
    ) -> Self {
        let n_units = labels.len();
        let mut node_acc: BTreeMap<(UserIdx, ContextIdx), BTreeMap<UnitIdx, u32>> = BTreeMap::new();
        let mut user_acc: BTreeMap<UserIdx, BTreeMap<UnitIdx, u32>> = BTreeMap::new();
        for (t, count) in dataset.triples() {
            let Some(unit) = unit_of_item[t.item.index()] else { continue };
            *node_acc.entry((t.user, t.context)).or_default().entry(unit).or_insert(0) += count;
            *user_acc.entry(t.user).or_default().entry(unit).or_insert(0) += count;
        }

        let mut popularity = vec![0u32; n_units];
        for units in user_acc.values() {
            for u in units.keys() {
                popularity[u.index()] += 1;
            }
        }

        let n_ctx = dataset.num_contexts();
        let mut context_users: Vec<HashMap<UnitIdx, u32>> = vec![HashMap::new(); n_ctx];
        for ((_, g), units) in &node_acc {
            for u in units.keys() {
                *context_users[g.index()].entry(*u).or_insert(0) += 1;
            }
        }
        let mut context_units = Vec::with_capacity(n_ctx);
        let mut popular_in_context = Vec::with_capacity(n_ctx);
        for counts in &context_users {
            let mut units: Vec<UnitIdx> = counts.keys().copied().collect();
            units.sort_unstable();
            let mut ranked = units.clone();
            ranked.sort_by(|a, b| {
                counts[b]
                    .cmp(&counts[a])
                    .then(popularity[b.index()].cmp(&popularity[a.index()]))
                    .then(a.cmp(b))
            });
            context_units.push(units);
            popular_in_context.push(ranked);
        }

        let flatten = |m: BTreeMap<UnitIdx, u32>| m.into_iter().collect::<Vec<_>>();
        UnitIndex {
            kind,
            labels,
            unit_of_item,
            node_units: node_acc.into_iter().map(|(k, m)| (k, flatten(m))).collect(),
            user_units: user_acc.into_iter().map(|(k, m)| (k, flatten(m))).collect(),
            context_units,
            popularity,
            popular_in_context,
        }
    }

    pub fn kind(&self) -> UnitKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, u: UnitIdx) -> &str {
        &self.labels[u.index()]
    }

    pub fn unit_of_item(&self, i: ItemIdx) -> Option<UnitIdx> {
        self.unit_of_item.get(i.index()).copied().flatten()
    }

    /// Units `u` selected in `g`, with event counts.
    pub fn node_units(&self, u: UserIdx, g: ContextIdx) -> &[(UnitIdx, u32)] {
        self.node_units.get(&(u, g)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Units `u` selected in any context.
    pub fn user_units(&self, u: UserIdx) -> &[(UnitIdx, u32)] {
        self.user_units.get(&u).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn node_unit_set(&self, u: UserIdx, g: ContextIdx) -> HashSet<UnitIdx> {
        self.node_units(u, g).iter().map(|(x, _)| *x).collect()
    }

    /// Units with at least one selection in `g`, ascending.
    pub fn context_units(&self, g: ContextIdx) -> &[UnitIdx] {
        self.context_units.get(g.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn popularity(&self, u: UnitIdx) -> u32 {
        self.popularity[u.index()]
    }

    /// Units of `g`, most popular among the context's users first.
    pub fn popular_in_context(&self, g: ContextIdx) -> &[UnitIdx] {
        self.popular_in_context.get(g.index()).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{dbscan, DbscanParams};
    use crate::dataset::{EventRecord, GeoContext};
    use crate::geo::{BoundingBox, Coordinate};

    fn fixture(rows: &[(&str, &str, f64)]) -> Dataset {
        let region = BoundingBox::new(Coordinate { lat: 0.0, lon: 0.0 }, Coordinate { lat: 1.0, lon: 1.0 }).unwrap();
        let events = rows.iter().map(|&(u, i, lat)| EventRecord {
            user: u.into(),
            item: i.into(),
            location: Coordinate { lat, lon: 0.5 },
            context: None,
            timestamp: None,
        });
        Dataset::ingest(events, vec![GeoContext { id: "g".into(), name: String::new(), region }]).unwrap().0
    }

    #[test]
    fn items_mode_mirrors_items() {
        let d = fixture(&[("a", "x", 0.1), ("a", "y", 0.2), ("a", "x", 0.1), ("b", "y", 0.2)]);
        let u = UnitIndex::items(&d);
        assert_eq!(u.len(), 2);
        assert_eq!(u.label(UnitIdx(1)), "y");
        let a = d.user_index("a").unwrap();
        assert_eq!(u.node_units(a, ContextIdx(0)), &[(UnitIdx(0), 2), (UnitIdx(1), 1)]);
        assert_eq!(u.popularity(UnitIdx(1)), 2);
        assert_eq!(u.popular_in_context(ContextIdx(0)), &[UnitIdx(1), UnitIdx(0)]);
    }

    #[test]
    fn clusters_mode_merges_items_and_drops_noise() {
        // x and y 11 m apart, z far away
        let d = fixture(&[("a", "x", 0.5), ("b", "y", 0.5001), ("c", "z", 0.9)]);
        let points: Vec<_> = (0..d.num_items()).map(|i| (ItemIdx::from(i), d.item_location(ItemIdx::from(i)))).collect();
        let c = dbscan(&points, DbscanParams::new(0.1, 2).unwrap());
        let u = UnitIndex::clusters(&d, &c);
        assert_eq!(u.kind(), UnitKind::Clusters);
        assert_eq!(u.len(), 1);
        assert_eq!(u.unit_of_item(d.item_index("x").unwrap()), Some(UnitIdx(0)));
        assert_eq!(u.unit_of_item(d.item_index("z").unwrap()), None);
        assert_eq!(u.popularity(UnitIdx(0)), 2);
        assert!(u.node_units(d.user_index("c").unwrap(), ContextIdx(0)).is_empty());
        assert_eq!(u.context_units(ContextIdx(0)), &[UnitIdx(0)]);
    }
}
