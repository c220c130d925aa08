//! Weighted neighbor-vote top-N recommendation.
//!
//! Every neighbor v' of the query node v adds w(v, v') to the score of each
//! unit it selected in the query context. Units the query user already
//! selected there are never returned. Equal scores are ordered by
//! descending global unit popularity, then ascending unit id.

use std::cmp::Ordering;

use thiserror::Error;

use crate::graph::{NodeRef, RelationalGraph};
use crate::ids::{ContextIdx, UnitIdx};
use crate::units::UnitIndex;
use crate::weighting::{EdgeWeight, Scheme};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecommendError {
    #[error("context has no activity (context #{0})")]
    NoActivity(ContextIdx),
    #[error("list length must be at least 1")]
    ZeroLength,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recommendation {
    pub unit: UnitIdx,
    pub score: f64,
    /// Filled in from context popularity rather than earned by neighbor votes.
    pub backfilled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationList {
    pub query: NodeRef,
    pub scheme: Scheme,
    pub n: usize,
    pub items: Vec<Recommendation>,
}

impl RecommendationList {
    pub fn units(&self) -> Vec<UnitIdx> {
        self.items.iter().map(|r| r.unit).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Orders (unit, score) pairs best first.
pub fn rank_order(units: &UnitIndex) -> impl Fn(&(UnitIdx, f64), &(UnitIdx, f64)) -> Ordering + '_ {
    move |a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| units.popularity(b.0).cmp(&units.popularity(a.0)))
            .then_with(|| a.0.cmp(&b.0))
    }
}

/// Scores of every candidate unit reached through a neighbor, ascending by
/// unit. Candidates exclude the query user's own units in the query context.
/// Units reached only through zero-weight edges are present with score 0.
pub fn score_all(
    graph: &RelationalGraph,
    units: &UnitIndex,
    weight: &dyn EdgeWeight,
    v: NodeRef,
) -> Result<Vec<(UnitIdx, f64)>, RecommendError> {
    if graph.residents(v.context).is_empty() {
        return Err(RecommendError::NoActivity(v.context));
    }
    let own = units.node_units(v.user, v.context);
    let mut scores = vec![0.0f64; units.len()];
    let mut reached = vec![false; units.len()];
    let mut touched = Vec::new();

    for nb in graph.neighbors(v) {
        let w = weight.weight(v, nb);
        for &(unit, _) in units.node_units(nb.user, v.context) {
            let k = unit.index();
            scores[k] += w;
            if !reached[k] {
                reached[k] = true;
                touched.push(unit);
            }
        }
    }

    touched.sort_unstable();
    Ok(touched
        .into_iter()
        .filter(|u| own.binary_search_by_key(u, |(x, _)| *x).is_err())
        .map(|u| (u, scores[u.index()]))
        .collect())
}

/// Top-`n` units for `v` by accumulated neighbor weight. Only units with a
/// positive score are ranked; with `backfill`, remaining slots are filled
/// with the context's most popular units not yet listed or selected.
pub fn recommend(
    graph: &RelationalGraph,
    units: &UnitIndex,
    weight: &dyn EdgeWeight,
    v: NodeRef,
    n: usize,
    backfill: bool,
) -> Result<RecommendationList, RecommendError> {
    if n == 0 {
        return Err(RecommendError::ZeroLength);
    }
    let mut scored: Vec<(UnitIdx, f64)> = score_all(graph, units, weight, v)?
        .into_iter()
        .filter(|(_, s)| *s > 0.0)
        .collect();
    scored.sort_by(rank_order(units));
    scored.truncate(n);

    let mut items: Vec<Recommendation> = scored
        .into_iter()
        .map(|(unit, score)| Recommendation { unit, score, backfilled: false })
        .collect();

    if backfill && items.len() < n {
        let own = units.node_units(v.user, v.context);
        for &unit in units.popular_in_context(v.context) {
            if items.len() == n {
                break;
            }
            let listed = items.iter().any(|r| r.unit == unit);
            let selected = own.binary_search_by_key(&unit, |(x, _)| *x).is_ok();
            if !listed && !selected {
                items.push(Recommendation { unit, score: 0.0, backfilled: true });
            }
        }
    }

    Ok(RecommendationList { query: v, scheme: weight.scheme(), n, items })
}
