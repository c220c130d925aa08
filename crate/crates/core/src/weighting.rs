//! Edge weights w(v, v') for the relational graph.
//!
//! Each scheme turns the same neighbor-vote algorithm into a different
//! recommender: uniform weights give most-popular, cosine over unit
//! profiles gives user-based collaborative filtering, and so on.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dataset::Dataset;
use crate::geo::{centroid, haversine_km, Coordinate};
use crate::graph::NodeRef;
use crate::ids::{ContextIdx, UnitIdx, UserIdx};
use crate::partonomy::{two_layer_unchecked, Partonomy, PartonomyError, UserFootprint};
use crate::units::{UnitIndex, UnitKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("scheme `{0}` needs cluster units")]
    RequiresClusters(Scheme),
    #[error("scheme `{0}` needs a partonomy")]
    RequiresPartonomy(Scheme),
    #[error(transparent)]
    Partonomy(#[from] PartonomyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    /// Uniform weights: most popular.
    MostPopular,
    /// Cosine over unit profiles.
    CollaborativeFiltering,
    /// Distance between in-context centroids.
    Geographic,
    /// Geographic similarity per shared cluster.
    IntraCluster,
    /// Two-layer partonomy similarity.
    TwoLayer,
    /// Two-layer for cold-start queries, cosine otherwise.
    CfTwoLayer,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::MostPopular,
        Scheme::CollaborativeFiltering,
        Scheme::Geographic,
        Scheme::IntraCluster,
        Scheme::TwoLayer,
        Scheme::CfTwoLayer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::MostPopular => "mp",
            Scheme::CollaborativeFiltering => "cf",
            Scheme::Geographic => "geo",
            Scheme::IntraCluster => "ic",
            Scheme::TwoLayer => "tl",
            Scheme::CfTwoLayer => "cf-tl",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

/// A weight function over adjacent nodes. Implementations are pure and
/// shared across threads while queries run.
pub trait EdgeWeight: Sync {
    fn scheme(&self) -> Scheme;

    /// Whether w(v, v') = w(v', v) is guaranteed.
    fn is_symmetric(&self) -> bool {
        true
    }

    /// Weight of the edge from query node `v` to its neighbor `other`. Both
    /// nodes share a context; callers never ask about non-adjacent pairs.
    fn weight(&self, v: NodeRef, other: NodeRef) -> f64;
}

impl<W: EdgeWeight + ?Sized> EdgeWeight for &W {
    fn scheme(&self) -> Scheme {
        (**self).scheme()
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
    fn weight(&self, v: NodeRef, other: NodeRef) -> f64 {
        (**self).weight(v, other)
    }
}

impl<W: EdgeWeight + ?Sized> EdgeWeight for Box<W> {
    fn scheme(&self) -> Scheme {
        (**self).scheme()
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
    fn weight(&self, v: NodeRef, other: NodeRef) -> f64 {
        (**self).weight(v, other)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Uniform;

impl EdgeWeight for Uniform {
    fn scheme(&self) -> Scheme {
        Scheme::MostPopular
    }

    fn weight(&self, _v: NodeRef, _other: NodeRef) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProfileScope {
    /// Only units of the query context.
    Context,
    /// Units of every context the user was active in.
    #[default]
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProfileMode {
    /// Component is 1 for every selected unit.
    #[default]
    Binary,
    /// Component is the number of events behind the unit.
    Count,
}

/// Sparse preference vector over recommendation units.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileVector {
    entries: Vec<(UnitIdx, f64)>,
    norm_sq: f64,
}

impl ProfileVector {
    pub fn from_units(units: &[(UnitIdx, u32)], mode: ProfileMode) -> Self {
        let entries: Vec<(UnitIdx, f64)> = units
            .iter()
            .map(|&(u, c)| match mode {
                ProfileMode::Binary => (u, 1.0),
                ProfileMode::Count => (u, c as f64),
            })
            .collect();
        let norm_sq = entries.iter().map(|(_, x)| x * x).sum::<f64>();
        ProfileVector { entries, norm_sq }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(UnitIdx, f64)] {
        &self.entries
    }

    /// Cosine similarity; 0 if either vector is empty.
    pub fn cosine(&self, other: &ProfileVector) -> f64 {
        if self.norm_sq == 0.0 || other.norm_sq == 0.0 {
            return 0.0;
        }
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut dot = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Equal => {
                    dot += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
            }
        }
        (dot / (self.norm_sq * other.norm_sq).sqrt()).clamp(0.0, 1.0)
    }
}

/// Profile vectors for every node (context scope) or every user (all scope).
#[derive(Debug, Clone)]
pub struct Profiles {
    scope: ProfileScope,
    by_node: HashMap<(UserIdx, ContextIdx), ProfileVector>,
    by_user: HashMap<UserIdx, ProfileVector>,
    empty: ProfileVector,
}

impl Profiles {
    pub fn build(dataset: &Dataset, units: &UnitIndex, scope: ProfileScope, mode: ProfileMode) -> Self {
        let mut by_node = HashMap::new();
        let mut by_user = HashMap::new();
        match scope {
            ProfileScope::Context => {
                for (u, g) in dataset.nodes() {
                    by_node.insert((u, g), ProfileVector::from_units(units.node_units(u, g), mode));
                }
            }
            ProfileScope::All => {
                for (u, _) in dataset.nodes() {
                    by_user
                        .entry(u)
                        .or_insert_with(|| ProfileVector::from_units(units.user_units(u), mode));
                }
            }
        }
        Profiles { scope, by_node, by_user, empty: ProfileVector::default() }
    }

    pub fn scope(&self) -> ProfileScope {
        self.scope
    }

    pub fn get(&self, v: NodeRef) -> &ProfileVector {
        let found = match self.scope {
            ProfileScope::Context => self.by_node.get(&(v.user, v.context)),
            ProfileScope::All => self.by_user.get(&v.user),
        };
        found.unwrap_or(&self.empty)
    }
}

/// Cosine similarity between profile vectors.
#[derive(Debug, Clone)]
pub struct Cosine {
    profiles: Profiles,
}

impl Cosine {
    pub fn new(profiles: Profiles) -> Self {
        Cosine { profiles }
    }
}

impl EdgeWeight for Cosine {
    fn scheme(&self) -> Scheme {
        Scheme::CollaborativeFiltering
    }

    fn weight(&self, v: NodeRef, other: NodeRef) -> f64 {
        self.profiles.get(v).cosine(self.profiles.get(other))
    }
}

/// 1 − d(c_u, c_u') / d_max between the users' in-context centroids.
#[derive(Debug, Clone)]
pub struct Geographic {
    centroids: HashMap<(UserIdx, ContextIdx), Coordinate>,
    d_max: Vec<Option<f64>>,
}

impl Geographic {
    pub fn new(dataset: &Dataset) -> Self {
        let centroids = dataset
            .nodes()
            .map(|(u, g)| {
                let pts: Vec<Coordinate> =
                    dataset.node_items(u, g).iter().map(|&i| dataset.item_location(i)).collect();
                ((u, g), centroid(&pts).expect("nodes have items"))
            })
            .collect();
        let d_max = dataset.contexts().iter().map(|c| c.region.d_max().ok()).collect();
        Geographic { centroids, d_max }
    }
}

/// Distance similarity clamped into [0, 1].
pub fn geo_similarity(a: Coordinate, b: Coordinate, d_max: f64) -> f64 {
    (1.0 - haversine_km(a, b) / d_max).clamp(0.0, 1.0)
}

impl EdgeWeight for Geographic {
    fn scheme(&self) -> Scheme {
        Scheme::Geographic
    }

    fn weight(&self, v: NodeRef, other: NodeRef) -> f64 {
        let Some(Some(d_max)) = self.d_max.get(v.context.index()) else { return 0.0 };
        match (
            self.centroids.get(&(v.user, v.context)),
            self.centroids.get(&(other.user, other.context)),
        ) {
            (Some(&a), Some(&b)) => geo_similarity(a, b, *d_max),
            _ => 0.0,
        }
    }
}

/// Geographic similarity evaluated inside every cluster both users
/// photographed, summed and divided by the number of clusters in the context.
#[derive(Debug, Clone)]
pub struct IntraCluster {
    /// Per node: (cluster unit, centroid of the user's items in it), ascending.
    node_clusters: HashMap<(UserIdx, ContextIdx), Vec<(UnitIdx, Coordinate)>>,
    context_clusters: Vec<usize>,
    d_max: f64,
}

impl IntraCluster {
    /// `d_max_km` bounds centroid distances inside one cluster, normally
    /// twice the clustering radius.
    pub fn new(dataset: &Dataset, units: &UnitIndex, d_max_km: f64) -> Result<Self, WeightError> {
        if units.kind() != UnitKind::Clusters {
            return Err(WeightError::RequiresClusters(Scheme::IntraCluster));
        }
        let mut node_clusters = HashMap::new();
        for (u, g) in dataset.nodes() {
            let mut groups: std::collections::BTreeMap<UnitIdx, Vec<Coordinate>> = Default::default();
            for &i in dataset.node_items(u, g) {
                if let Some(unit) = units.unit_of_item(i) {
                    groups.entry(unit).or_default().push(dataset.item_location(i));
                }
            }
            if !groups.is_empty() {
                let list = groups
                    .into_iter()
                    .map(|(c, pts)| (c, centroid(&pts).expect("nonempty group")))
                    .collect();
                node_clusters.insert((u, g), list);
            }
        }
        let context_clusters = (0..dataset.num_contexts())
            .map(|g| units.context_units(ContextIdx::from(g)).len())
            .collect();
        Ok(IntraCluster { node_clusters, context_clusters, d_max: d_max_km })
    }
}

impl EdgeWeight for IntraCluster {
    fn scheme(&self) -> Scheme {
        Scheme::IntraCluster
    }

    fn weight(&self, v: NodeRef, other: NodeRef) -> f64 {
        let total = self.context_clusters.get(v.context.index()).copied().unwrap_or(0);
        if total == 0 {
            return 0.0;
        }
        let (Some(a), Some(b)) = (
            self.node_clusters.get(&(v.user, v.context)),
            self.node_clusters.get(&(other.user, other.context)),
        ) else {
            return 0.0;
        };
        let (mut i, mut j) = (0, 0);
        let mut sum = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Equal => {
                    sum += geo_similarity(a[i].1, b[j].1, self.d_max);
                    i += 1;
                    j += 1;
                }
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
            }
        }
        (sum / total as f64).clamp(0.0, 1.0)
    }
}

/// Two-layer partonomy similarity between the nodes' users.
#[derive(Debug, Clone, Copy)]
pub struct TwoLayer<'a> {
    partonomy: &'a Partonomy,
    footprints: &'a UserFootprint,
    layer: usize,
}

impl<'a> TwoLayer<'a> {
    pub fn new(partonomy: &'a Partonomy, footprints: &'a UserFootprint, layer: usize) -> Result<Self, WeightError> {
        if layer == 0 || layer > partonomy.max_layer() {
            return Err(PartonomyError::InvalidLayer { layer, max: partonomy.max_layer() }.into());
        }
        Ok(TwoLayer { partonomy, footprints, layer })
    }
}

impl EdgeWeight for TwoLayer<'_> {
    fn scheme(&self) -> Scheme {
        Scheme::TwoLayer
    }

    fn weight(&self, v: NodeRef, other: NodeRef) -> f64 {
        two_layer_unchecked(v.user, other.user, self.layer, self.partonomy, self.footprints)
    }
}

/// Switches on the query node: two-layer similarity when the query user has
/// no selections in the query context, cosine otherwise. Not symmetric.
#[derive(Debug, Clone)]
pub struct CfTwoLayer<'a> {
    dataset: &'a Dataset,
    cosine: Cosine,
    two_layer: TwoLayer<'a>,
}

impl<'a> CfTwoLayer<'a> {
    /// `dataset` must be the training data; it decides who is cold-start.
    pub fn new(dataset: &'a Dataset, cosine: Cosine, two_layer: TwoLayer<'a>) -> Self {
        CfTwoLayer { dataset, cosine, two_layer }
    }

    pub fn is_cold_start(&self, v: NodeRef) -> bool {
        self.dataset.node_items(v.user, v.context).is_empty()
    }
}

impl EdgeWeight for CfTwoLayer<'_> {
    fn scheme(&self) -> Scheme {
        Scheme::CfTwoLayer
    }

    fn is_symmetric(&self) -> bool {
        false
    }

    fn weight(&self, v: NodeRef, other: NodeRef) -> f64 {
        if self.is_cold_start(v) {
            self.two_layer.weight(v, other)
        } else {
            self.cosine.weight(v, other)
        }
    }
}
