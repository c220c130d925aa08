use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use crate::dataset::Dataset;
use crate::ids::{ContextIdx, ItemIdx, UserIdx};

/// How test users' selections in the evaluation context are hidden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scenario {
    /// Hide everything: every test user is cold-start.
    LeaveAllOut,
    /// Hide `hide` selections per test user.
    LeaveSomeOut { hide: usize },
    /// A `cold_fraction` of test users lose everything, the rest lose `hide`.
    LeaveSomeAllOut { cold_fraction: f64, hide: usize },
    /// Hide exactly one selection per test user.
    LeaveOneOut,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::LeaveAllOut => "leave-all-out",
            Scenario::LeaveSomeOut { .. } => "leave-some-out",
            Scenario::LeaveSomeAllOut { .. } => "leave-some-all-out",
            Scenario::LeaveOneOut => "leave-one-out",
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        match *self {
            Scenario::LeaveSomeOut { hide } | Scenario::LeaveSomeAllOut { hide, .. } if hide == 0 => {
                Err(EvalError::InvalidScenario("hide count must be at least 1".into()))
            }
            Scenario::LeaveSomeAllOut { cold_fraction, .. } if !(0.0..=1.0).contains(&cold_fraction) => Err(
                EvalError::InvalidScenario(format!("cold fraction {cold_fraction} is not a probability")),
            ),
            _ => Ok(()),
        }
    }

    /// Selections hidden for a warm test user, if the scenario has warm users.
    fn hide_count(&self) -> Option<usize> {
        match *self {
            Scenario::LeaveAllOut => None,
            Scenario::LeaveSomeOut { hide } | Scenario::LeaveSomeAllOut { hide, .. } => Some(hide),
            Scenario::LeaveOneOut => Some(1),
        }
    }

    /// Leave-all-out admits only one possible split.
    pub fn effective_splits(&self, requested: usize) -> usize {
        match self {
            Scenario::LeaveAllOut => 1,
            _ => requested,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub index: usize,
    /// Hidden items per test user, ascending. All lie in the evaluation context.
    pub hidden: BTreeMap<UserIdx, Vec<ItemIdx>>,
    /// Test users whose in-context selections were all hidden.
    pub cold: BTreeSet<UserIdx>,
    /// The original dataset minus the hidden triples.
    pub training: Dataset,
}

#[derive(Debug, Clone)]
pub struct SplitSet {
    pub splits: Vec<Split>,
    pub test_users: Vec<UserIdx>,
    /// Human-readable notes about excluded users and adjusted settings.
    pub diagnostics: Vec<String>,
}

/// Draws train/test splits for `context`.
///
/// Test users are those with at least `min_items` selections in the context;
/// users with fewer selections than the scenario hides are excluded.
pub fn make_splits(
    dataset: &Dataset,
    context: ContextIdx,
    scenario: Scenario,
    n_splits: usize,
    seed: u64,
    min_items: usize,
) -> Result<SplitSet, EvalError> {
    scenario.validate()?;
    if n_splits == 0 {
        return Err(EvalError::InvalidScenario("at least one split is required".into()));
    }
    let mut diagnostics = Vec::new();
    let effective = scenario.effective_splits(n_splits);
    if effective != n_splits {
        diagnostics.push(format!(
            "{scenario} admits a single split; {n_splits} requested, using 1"
        ));
    }

    let mut eligible: Vec<UserIdx> = dataset
        .nodes()
        .filter(|&(_, g)| g == context)
        .map(|(u, _)| u)
        .filter(|&u| dataset.node_items(u, context).len() >= min_items.max(1))
        .collect();
    eligible.sort_unstable();
    if let Some(k) = scenario.hide_count() {
        eligible.retain(|&u| {
            let have = dataset.node_items(u, context).len();
            if have < k {
                diagnostics.push(format!(
                    "user `{}` has {have} selections, fewer than the {k} to hide; excluded",
                    dataset.user_id(u)
                ));
                false
            } else {
                true
            }
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut splits = Vec::with_capacity(effective);
    for index in 0..effective {
        let cold: BTreeSet<UserIdx> = match scenario {
            Scenario::LeaveAllOut => eligible.iter().copied().collect(),
            Scenario::LeaveSomeAllOut { cold_fraction, .. } => {
                let n_cold = (cold_fraction * eligible.len() as f64).round() as usize;
                let mut order = eligible.clone();
                order.shuffle(&mut rng);
                order.into_iter().take(n_cold).collect()
            }
            _ => BTreeSet::new(),
        };

        let mut hidden = BTreeMap::new();
        for &u in &eligible {
            let mut items = dataset.node_items(u, context).to_vec();
            if !cold.contains(&u) {
                let k = scenario.hide_count().expect("warm users only exist when hiding some");
                let (chosen, _) = items.partial_shuffle(&mut rng, k);
                let mut chosen = chosen.to_vec();
                chosen.sort_unstable();
                items = chosen;
            }
            hidden.insert(u, items);
        }

        let drop: HashSet<(UserIdx, ItemIdx)> = hidden
            .iter()
            .flat_map(|(&u, items)| items.iter().map(move |&i| (u, i)))
            .collect();
        let training = dataset.filter_triples(|t| !(t.context == context && drop.contains(&(t.user, t.item))));
        splits.push(Split { index, hidden, cold, training });
    }

    Ok(SplitSet { splits, test_users: eligible, diagnostics })
}
