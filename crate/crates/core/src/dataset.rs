//! The ternary relation of (user, context, item) selections and its indices.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use thiserror::Error;

use crate::geo::{BoundingBox, Coordinate};
use crate::ids::{ContextIdx, Interner, ItemIdx, UserIdx};

/// A declared region of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoContext {
    pub id: String,
    pub name: String,
    pub region: BoundingBox,
}

/// One implicit-feedback observation: `user` selected `item` at `location`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub user: String,
    pub item: String,
    pub location: Coordinate,
    pub context: Option<String>,
    /// Seconds since the epoch. Carried through ingestion, never used for scoring.
    pub timestamp: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub user: UserIdx,
    pub context: ContextIdx,
    pub item: ItemIdx,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("duplicate context id `{0}`")]
    DuplicateContext(String),
}

/// Why an event was dropped during ingestion.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RejectReason {
    #[error("coordinate out of range ({lat}, {lon})")]
    InvalidCoordinate { lat: f64, lon: f64 },
    #[error("declared context `{0}` is not defined")]
    UnknownContext(String),
    #[error("location falls inside no context region")]
    NoContainingContext,
    #[error("location falls inside several context regions: {}", .0.join(", "))]
    AmbiguousContext(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    /// Zero-based position of the event in the input stream.
    pub record: usize,
    pub reason: RejectReason,
}

/// The relation S ⊆ U × G × I plus the indices every recommender needs:
/// items per context, items per (user, context) node, and item popularity.
///
/// Immutable once built. Filtering (for train/test splits) produces a new
/// value sharing the same id interners, so indices stay comparable.
#[derive(Debug, Clone)]
pub struct Dataset {
    users: Arc<Interner>,
    items: Arc<Interner>,
    contexts: Arc<Vec<GeoContext>>,
    context_ids: Arc<Interner>,
    item_locations: Arc<Vec<Coordinate>>,
    triples: BTreeMap<Triple, u32>,
    context_items: Vec<Vec<ItemIdx>>,
    node_items: BTreeMap<(UserIdx, ContextIdx), Vec<ItemIdx>>,
    item_popularity: Vec<u32>,
}

impl Dataset {
    /// Builds a dataset from raw events. Events that cannot be attributed to
    /// exactly one context are skipped and reported; ingestion continues.
    pub fn ingest<I>(events: I, contexts: Vec<GeoContext>) -> Result<(Dataset, Vec<Diagnostic>), DataError>
    where
        I: IntoIterator<Item = EventRecord>,
    {
        let mut context_ids = Interner::new();
        for ctx in &contexts {
            if context_ids.get(&ctx.id).is_some() {
                return Err(DataError::DuplicateContext(ctx.id.clone()));
            }
            context_ids.intern(&ctx.id);
        }

        let mut users = Interner::new();
        let mut items = Interner::new();
        let mut item_locations = Vec::new();
        let mut triples: BTreeMap<Triple, u32> = BTreeMap::new();
        let mut diagnostics = Vec::new();

        for (record, ev) in events.into_iter().enumerate() {
            let reject = |reason| Diagnostic { record, reason };
            if !ev.location.is_valid() {
                diagnostics.push(reject(RejectReason::InvalidCoordinate {
                    lat: ev.location.lat,
                    lon: ev.location.lon,
                }));
                continue;
            }
            let context = match &ev.context {
                Some(id) => match context_ids.get(id) {
                    Some(c) => ContextIdx(c),
                    None => {
                        diagnostics.push(reject(RejectReason::UnknownContext(id.clone())));
                        continue;
                    }
                },
                None => {
                    let hits: Vec<usize> = contexts
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| c.region.contains(ev.location))
                        .map(|(i, _)| i)
                        .collect();
                    match hits.as_slice() {
                        [one] => ContextIdx::from(*one),
                        [] => {
                            diagnostics.push(reject(RejectReason::NoContainingContext));
                            continue;
                        }
                        many => {
                            let names = many.iter().map(|&i| contexts[i].id.clone()).collect();
                            diagnostics.push(reject(RejectReason::AmbiguousContext(names)));
                            continue;
                        }
                    }
                }
            };

            let user = UserIdx(users.intern(&ev.user));
            let item = ItemIdx(items.intern(&ev.item));
            if item.index() == item_locations.len() {
                item_locations.push(ev.location);
            }
            *triples.entry(Triple { user, context, item }).or_insert(0) += 1;
        }

        let dataset = Dataset::from_parts(
            Arc::new(users),
            Arc::new(items),
            Arc::new(contexts),
            Arc::new(context_ids),
            Arc::new(item_locations),
            triples,
        );
        Ok((dataset, diagnostics))
    }

    fn from_parts(
        users: Arc<Interner>,
        items: Arc<Interner>,
        contexts: Arc<Vec<GeoContext>>,
        context_ids: Arc<Interner>,
        item_locations: Arc<Vec<Coordinate>>,
        triples: BTreeMap<Triple, u32>,
    ) -> Dataset {
        let mut context_items: Vec<Vec<ItemIdx>> = vec![Vec::new(); contexts.len()];
        let mut node_items: BTreeMap<(UserIdx, ContextIdx), Vec<ItemIdx>> = BTreeMap::new();
        let mut item_users: Vec<HashSet<UserIdx>> = vec![HashSet::new(); items.len()];

        for t in triples.keys() {
            context_items[t.context.index()].push(t.item);
            node_items.entry((t.user, t.context)).or_default().push(t.item);
            item_users[t.item.index()].insert(t.user);
        }
        for list in &mut context_items {
            list.sort_unstable();
            list.dedup();
        }
        // BTreeMap iteration already yields items in ascending order per node
        let item_popularity = item_users.iter().map(|s| s.len() as u32).collect();

        Dataset {
            users,
            items,
            contexts,
            context_ids,
            item_locations,
            triples,
            context_items,
            node_items,
            item_popularity,
        }
    }

    /// A new dataset holding only the triples for which `keep` returns true.
    /// Interners and item locations are shared with `self`.
    pub fn filter_triples<F>(&self, keep: F) -> Dataset
    where
        F: Fn(&Triple) -> bool,
    {
        let triples = self
            .triples
            .iter()
            .filter(|(t, _)| keep(t))
            .map(|(t, c)| (*t, *c))
            .collect();
        Dataset::from_parts(
            Arc::clone(&self.users),
            Arc::clone(&self.items),
            Arc::clone(&self.contexts),
            Arc::clone(&self.context_ids),
            Arc::clone(&self.item_locations),
            triples,
        )
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn num_contexts(&self) -> usize {
        self.contexts.len()
    }

    pub fn user_index(&self, id: &str) -> Option<UserIdx> {
        self.users.get(id).map(UserIdx)
    }

    pub fn item_index(&self, id: &str) -> Option<ItemIdx> {
        self.items.get(id).map(ItemIdx)
    }

    pub fn context_index(&self, id: &str) -> Option<ContextIdx> {
        self.context_ids.get(id).map(ContextIdx)
    }

    pub fn user_id(&self, u: UserIdx) -> &str {
        self.users.resolve(u.0)
    }

    pub fn item_id(&self, i: ItemIdx) -> &str {
        self.items.resolve(i.0)
    }

    pub fn context(&self, g: ContextIdx) -> &GeoContext {
        &self.contexts[g.index()]
    }

    pub fn contexts(&self) -> &[GeoContext] {
        &self.contexts
    }

    pub fn item_location(&self, i: ItemIdx) -> Coordinate {
        self.item_locations[i.index()]
    }

    /// Distinct triples with the number of events that produced each.
    pub fn triples(&self) -> impl Iterator<Item = (Triple, u32)> + '_ {
        self.triples.iter().map(|(t, c)| (*t, *c))
    }

    pub fn num_triples(&self) -> usize {
        self.triples.len()
    }

    pub fn event_count(&self, t: &Triple) -> u32 {
        self.triples.get(t).copied().unwrap_or(0)
    }

    /// I_g: items selected by anyone in context `g`, ascending.
    pub fn items_in_context(&self, g: ContextIdx) -> &[ItemIdx] {
        self.context_items.get(g.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Items `u` selected in `g`, ascending.
    pub fn node_items(&self, u: UserIdx, g: ContextIdx) -> &[ItemIdx] {
        self.node_items.get(&(u, g)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every (user, context) pair with at least one selection, ascending by user.
    pub fn nodes(&self) -> impl Iterator<Item = (UserIdx, ContextIdx)> + '_ {
        self.node_items.keys().copied()
    }

    /// Number of distinct users who selected `i` in any context.
    pub fn popularity(&self, i: ItemIdx) -> u32 {
        self.item_popularity.get(i.index()).copied().unwrap_or(0)
    }
}
