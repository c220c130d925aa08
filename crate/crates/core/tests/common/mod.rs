#![allow(dead_code)]

use georel::{BoundingBox, Coordinate, Dataset, EdgeWeight, EventRecord, GeoContext, NodeRef, Scheme};
use std::collections::HashMap;

/// A 1°×1° context whose south-west corner sits at (`lat`, 0).
pub fn context(id: &str, lat: f64) -> GeoContext {
    GeoContext {
        id: id.into(),
        name: id.into(),
        region: BoundingBox::new(Coordinate { lat, lon: 0.0 }, Coordinate { lat: lat + 1.0, lon: 1.0 }).unwrap(),
    }
}

/// Contexts `g0` and `g1`, ten degrees apart.
pub fn two_contexts() -> Vec<GeoContext> {
    vec![context("g0", 0.0), context("g1", 10.0)]
}

pub fn event(user: &str, item: &str, ctx: &str, lat: f64, lon: f64) -> EventRecord {
    EventRecord {
        user: user.into(),
        item: item.into(),
        location: Coordinate { lat, lon },
        context: Some(ctx.into()),
        timestamp: None,
    }
}

/// Builds a dataset from (user, item, context) rows over [`two_contexts`].
/// Items sit at distinct, widely spaced points inside their context.
pub fn dataset(rows: &[(&str, &str, &str)]) -> Dataset {
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let events: Vec<EventRecord> = rows
        .iter()
        .map(|&(u, i, g)| {
            let n = slot.len();
            let k = *slot.entry(i).or_insert(n);
            let base = if g == "g0" { 0.0 } else { 10.0 };
            let lat = base + 0.05 + 0.03 * (k % 30) as f64;
            let lon = 0.05 + 0.03 * (k / 30) as f64;
            event(u, i, g, lat, lon)
        })
        .collect();
    let (d, diagnostics) = Dataset::ingest(events, two_contexts()).unwrap();
    assert!(diagnostics.is_empty(), "{diagnostics:?}");
    d
}

pub fn node(d: &Dataset, user: &str, ctx: &str) -> NodeRef {
    NodeRef::new(d.user_index(user).unwrap(), d.context_index(ctx).unwrap())
}

/// Weights looked up by neighbor user; unlisted neighbors weigh `default`.
pub struct TableWeight {
    pub by_user: HashMap<georel::UserIdx, f64>,
    pub default: f64,
}

impl TableWeight {
    pub fn new(d: &Dataset, entries: &[(&str, f64)], default: f64) -> Self {
        TableWeight {
            by_user: entries.iter().map(|&(u, w)| (d.user_index(u).unwrap(), w)).collect(),
            default,
        }
    }
}

impl EdgeWeight for TableWeight {
    fn scheme(&self) -> Scheme {
        Scheme::CollaborativeFiltering
    }

    fn weight(&self, _v: NodeRef, other: NodeRef) -> f64 {
        self.by_user.get(&other.user).copied().unwrap_or(self.default)
    }
}
