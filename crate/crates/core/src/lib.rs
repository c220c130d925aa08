//! Location-aware top-N recommendation over a relational graph of
//! (user, geographic context) nodes.
//!
//! A [`Dataset`] holds the deduplicated (user, context, item) selections.
//! From a training dataset a [`Model`] derives the DBSCAN clustering,
//! recommendation units, the graph and (optionally) the region partonomy;
//! each recommender is then one [`EdgeWeight`] plugged into the same
//! weighted neighbor vote.

pub mod clustering;
pub mod dataset;
pub mod eval;
pub mod geo;
pub mod graph;
pub mod ids;
pub mod io;
pub mod model;
pub mod partonomy;
pub mod recommend;
pub mod synth;
pub mod units;
pub mod weighting;

pub use clustering::{dbscan, Cluster, Clustering, DbscanParams};
pub use dataset::{Dataset, Diagnostic, EventRecord, GeoContext, Triple};
pub use geo::{haversine_km, BoundingBox, Coordinate};
pub use graph::{NodeRef, RelationalGraph};
pub use ids::{ClusterId, ContextIdx, ItemIdx, NodeIdx, UnitIdx, UserIdx};
pub use model::{Model, ModelConfig};
pub use partonomy::{Partonomy, RegionForest, RegionNode};
pub use recommend::{recommend, score_all, Recommendation, RecommendationList};
pub use units::{UnitIndex, UnitKind};
pub use weighting::{EdgeWeight, Scheme};
