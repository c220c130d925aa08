//! Everything a query needs, derived from one (training) dataset.

use thiserror::Error;

use crate::clustering::{dbscan, Clustering, DbscanParams};
use crate::dataset::Dataset;
use crate::geo::Coordinate;
use crate::graph::{NodeRef, RelationalGraph};
use crate::ids::{ContextIdx, ItemIdx, UnitIdx, UserIdx};
use crate::partonomy::{InformationMode, Partonomy, PartonomyError, RegionForest, UserFootprint};
use crate::recommend::{recommend, RecommendError, RecommendationList};
use crate::units::{UnitIndex, UnitKind};
use crate::weighting::{
    CfTwoLayer, Cosine, EdgeWeight, Geographic, IntraCluster, ProfileMode, ProfileScope, Profiles, Scheme,
    TwoLayer, Uniform, WeightError,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Partonomy(#[from] PartonomyError),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub units: UnitKind,
    pub dbscan: DbscanParams,
    pub profile_mode: ProfileMode,
    pub cf_scope: ProfileScope,
    pub tl_layer: usize,
    pub information: InformationMode,
    /// Per-cluster distance bound for intra-cluster weights; defaults to
    /// twice the clustering radius.
    pub ic_d_max_km: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            units: UnitKind::Clusters,
            dbscan: DbscanParams::default(),
            profile_mode: ProfileMode::Binary,
            cf_scope: ProfileScope::All,
            tl_layer: 1,
            information: InformationMode::Inverse,
            ic_d_max_km: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Model {
    dataset: Dataset,
    config: ModelConfig,
    clustering: Option<Clustering>,
    units: UnitIndex,
    graph: RelationalGraph,
    partonomy: Option<(Partonomy, UserFootprint)>,
}

impl Model {
    pub fn build(dataset: Dataset, regions: Option<&RegionForest>, config: ModelConfig) -> Result<Model, ModelError> {
        let (clustering, units) = match config.units {
            UnitKind::Items => (None, UnitIndex::items(&dataset)),
            UnitKind::Clusters => {
                let clustering = cluster_items(&dataset, None, config.dbscan);
                let units = UnitIndex::clusters(&dataset, &clustering);
                (Some(clustering), units)
            }
        };
        let graph = RelationalGraph::build(&dataset);
        let partonomy = match regions {
            Some(forest) => {
                let mut p = Partonomy::from_forest(forest, &dataset, &units)?;
                p.build_information(&dataset, &units, config.information);
                let f = UserFootprint::build(&p, &dataset, &units);
                Some((p, f))
            }
            None => None,
        };
        Ok(Model { dataset, config, clustering, units, graph, partonomy })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn clustering(&self) -> Option<&Clustering> {
        self.clustering.as_ref()
    }

    pub fn units(&self) -> &UnitIndex {
        &self.units
    }

    pub fn graph(&self) -> &RelationalGraph {
        &self.graph
    }

    pub fn partonomy(&self) -> Option<(&Partonomy, &UserFootprint)> {
        self.partonomy.as_ref().map(|(p, f)| (p, f))
    }

    /// The unit an item counts as when matching hidden selections. Items
    /// missing from the training clustering are placed by location.
    pub fn unit_for_item(&self, item: ItemIdx, location: Coordinate) -> Option<UnitIdx> {
        match &self.clustering {
            None => self.units.unit_of_item(item),
            Some(c) => c
                .cluster_of(item)
                .or_else(|| c.locate(location))
                .map(|cid| UnitIdx(cid.0)),
        }
    }

    pub fn weighting(&self, scheme: Scheme) -> Result<Box<dyn EdgeWeight + '_>, WeightError> {
        let cosine = |scope| {
            Cosine::new(Profiles::build(&self.dataset, &self.units, scope, self.config.profile_mode))
        };
        let two_layer = || {
            let (p, f) = self
                .partonomy
                .as_ref()
                .ok_or(WeightError::RequiresPartonomy(scheme))?;
            TwoLayer::new(p, f, self.config.tl_layer)
        };
        Ok(match scheme {
            Scheme::MostPopular => Box::new(Uniform),
            Scheme::CollaborativeFiltering => Box::new(cosine(self.config.cf_scope)),
            Scheme::Geographic => Box::new(Geographic::new(&self.dataset)),
            Scheme::IntraCluster => {
                let d_max = self
                    .config
                    .ic_d_max_km
                    .unwrap_or(2.0 * self.config.dbscan.radius_km);
                Box::new(IntraCluster::new(&self.dataset, &self.units, d_max)?)
            }
            Scheme::TwoLayer => Box::new(two_layer()?),
            Scheme::CfTwoLayer => {
                let tl = two_layer()?;
                Box::new(CfTwoLayer::new(&self.dataset, cosine(ProfileScope::All), tl))
            }
        })
    }

    pub fn recommend(
        &self,
        weight: &dyn EdgeWeight,
        user: UserIdx,
        context: ContextIdx,
        n: usize,
        backfill: bool,
    ) -> Result<RecommendationList, RecommendError> {
        recommend(&self.graph, &self.units, weight, NodeRef::new(user, context), n, backfill)
    }
}

/// Clusters the items selected in `context` (or in every context) by location.
pub fn cluster_items(dataset: &Dataset, context: Option<ContextIdx>, params: DbscanParams) -> Clustering {
    let mut items: Vec<ItemIdx> = dataset
        .triples()
        .filter(|(t, _)| context.is_none_or(|g| t.context == g))
        .map(|(t, _)| t.item)
        .collect();
    items.sort_unstable();
    items.dedup();
    let points: Vec<(ItemIdx, Coordinate)> = items.into_iter().map(|i| (i, dataset.item_location(i))).collect();
    dbscan(&points, params)
}
