use std::fmt::Write as _;

use log::{debug, info, warn};
use rayon::prelude::*;

use super::metrics::{mean_std, precision_recall_at_n};
use super::split::{make_splits, Scenario, Split};
use super::EvalError;
use crate::dataset::Dataset;
use crate::ids::{ContextIdx, UnitIdx};
use crate::model::{Model, ModelConfig};
use crate::partonomy::RegionForest;
use crate::weighting::Scheme;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub n_splits: usize,
    pub seed: u64,
    /// Minimum in-context selections for a user to be tested.
    pub min_items: usize,
    pub backfill: bool,
    pub model: ModelConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: Scenario::LeaveSomeOut { hide: 4 },
            n: 10,
            n_splits: 5,
            seed: 42,
            min_items: 5,
            backfill: true,
            model: ModelConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitResult {
    pub split: usize,
    pub precision: f64,
    pub recall: f64,
    /// Test users with a nonempty list and at least one hidden selection.
    pub users: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub scheme: Scheme,
    pub scenario: Scenario,
    pub n: usize,
    pub splits: Vec<SplitResult>,
    pub mean_precision: f64,
    pub std_precision: f64,
    pub mean_recall: f64,
    pub std_recall: f64,
}

impl EvalReport {
    fn from_splits(scheme: Scheme, scenario: Scenario, n: usize, splits: Vec<SplitResult>) -> Self {
        let p: Vec<f64> = splits.iter().map(|s| s.precision).collect();
        let r: Vec<f64> = splits.iter().map(|s| s.recall).collect();
        let (mean_precision, std_precision) = mean_std(&p);
        let (mean_recall, std_recall) = mean_std(&r);
        EvalReport { scheme, scenario, n, splits, mean_precision, std_precision, mean_recall, std_recall }
    }

    /// Leave-one-out reports recall only: with one hidden selection,
    /// precision is recall divided by n.
    pub fn reports_precision(&self) -> bool {
        self.scenario != Scenario::LeaveOneOut
    }

    /// CSV with columns `scheme,scenario,split,precision_at_n,recall_at_n`:
    /// one row per split followed by `mean` and `std` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scheme,scenario,split,precision_at_n,recall_at_n\n");
        let precision = |x: f64| if self.reports_precision() { format!("{x:.6}") } else { String::new() };
        let mut row = |split: &str, p: f64, r: f64| {
            let _ = writeln!(out, "{},{},{},{},{:.6}", self.scheme, self.scenario, split, precision(p), r);
        };
        for s in &self.splits {
            row(&s.split.to_string(), s.precision, s.recall);
        }
        row("mean", self.mean_precision, self.mean_recall);
        row("std", self.std_precision, self.std_recall);
        out
    }
}

/// Splits the data, rebuilds every model structure from each training
/// split, queries each test user and averages precision/recall@n.
pub fn run_experiment(
    dataset: &Dataset,
    regions: Option<&RegionForest>,
    context: ContextIdx,
    scheme: Scheme,
    config: &ExperimentConfig,
) -> Result<EvalReport, EvalError> {
    let mut reports = evaluate_schemes(dataset, regions, context, &[scheme], config)?;
    Ok(reports.remove(0))
}

/// Like [`run_experiment`] for several schemes sharing the same splits and
/// per-split models.
pub fn evaluate_schemes(
    dataset: &Dataset,
    regions: Option<&RegionForest>,
    context: ContextIdx,
    schemes: &[Scheme],
    config: &ExperimentConfig,
) -> Result<Vec<EvalReport>, EvalError> {
    if config.n == 0 {
        return Err(EvalError::InvalidScenario("n must be at least 1".into()));
    }
    let set = make_splits(dataset, context, config.scenario, config.n_splits, config.seed, config.min_items)?;
    for d in &set.diagnostics {
        warn!("{d}");
    }
    info!(
        "{} split(s), {} test users in `{}`",
        set.splits.len(),
        set.test_users.len(),
        dataset.context(context).id
    );

    let mut per_scheme: Vec<Vec<SplitResult>> = vec![Vec::new(); schemes.len()];
    for split in &set.splits {
        let model = Model::build(split.training.clone(), regions, config.model)?;
        for (k, &scheme) in schemes.iter().enumerate() {
            let result = evaluate_split(&model, split, dataset, context, scheme, config)?;
            debug!(
                "split {} {}: precision {:.4} recall {:.4} over {} users",
                split.index, scheme, result.precision, result.recall, result.users
            );
            per_scheme[k].push(result);
        }
    }

    Ok(schemes
        .iter()
        .zip(per_scheme)
        .map(|(&s, results)| EvalReport::from_splits(s, config.scenario, config.n, results))
        .collect())
}

fn evaluate_split(
    model: &Model,
    split: &Split,
    full: &Dataset,
    context: ContextIdx,
    scheme: Scheme,
    config: &ExperimentConfig,
) -> Result<SplitResult, EvalError> {
    let weight = model.weighting(scheme)?;
    let weight = weight.as_ref();
    let queries: Vec<_> = split.hidden.iter().collect();

    let outcomes: Vec<Option<(f64, f64)>> = queries
        .par_iter()
        .map(|(&user, items)| -> Result<Option<(f64, f64)>, EvalError> {
            let list = match model.recommend(weight, user, context, config.n, config.backfill) {
                Ok(list) => list,
                // nobody left in the context after hiding
                Err(crate::recommend::RecommendError::NoActivity(_)) => return Ok(None),
                Err(e) => return Err(e.into()),
            };
            if list.is_empty() {
                return Ok(None);
            }
            let hidden: Vec<Option<UnitIdx>> = items
                .iter()
                .map(|&i| model.unit_for_item(i, full.item_location(i)))
                .collect();
            Ok(precision_recall_at_n(&list.units(), &hidden, config.n))
        })
        .collect::<Result<_, _>>()?;

    let scored: Vec<(f64, f64)> = outcomes.into_iter().flatten().collect();
    let users = scored.len();
    let (precision, recall) = if users == 0 {
        warn!("split {}: no test user received a recommendation", split.index);
        (0.0, 0.0)
    } else {
        let p = scored.iter().map(|x| x.0).sum::<f64>() / users as f64;
        let r = scored.iter().map(|x| x.1).sum::<f64>() / users as f64;
        (p, r)
    };
    Ok(SplitResult { split: split.index, precision, recall, users })
}
