mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use common::dataset;
use georel::eval::{evaluate_schemes, make_splits, mean_std, run_experiment, EvalError, ExperimentConfig, Scenario};
use georel::synth::{generate, SynthConfig};
use georel::{ContextIdx, Dataset, ItemIdx, ModelConfig, Scheme, UnitKind, UserIdx};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `users` users with `per_user` distinct items each in g0 out of a pool of
/// 20, plus a little g1 activity so global popularity differs from local.
/// The last `light` users select only 3 items.
fn population(users: usize, per_user: usize, seed: u64) -> Dataset {
    population_with_light(users, per_user, 0, seed)
}

fn population_with_light(users: usize, per_user: usize, light: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<(String, String, &str)> = Vec::new();
    for u in 0..users + light {
        let want = if u < users { per_user } else { 3 };
        let mut chosen = BTreeSet::new();
        while chosen.len() < want {
            // skewed towards low item numbers
            let x: f64 = rng.gen();
            chosen.insert((x * x * 20.0) as usize);
        }
        for i in chosen {
            rows.push((format!("u{u:03}"), format!("i{i:02}"), "g0"));
        }
        if u % 3 == 0 {
            rows.push((format!("u{u:03}"), format!("i{:02}", rng.gen_range(0..20)), "g1"));
        }
    }
    let refs: Vec<(&str, &str, &str)> = rows.iter().map(|(u, i, g)| (u.as_str(), i.as_str(), *g)).collect();
    dataset(&refs)
}

fn g0(d: &Dataset) -> ContextIdx {
    d.context_index("g0").unwrap()
}

#[test]
fn leave_all_out_hides_everything_once() {
    let d = population(30, 5, 1);
    let set = make_splits(&d, g0(&d), Scenario::LeaveAllOut, 5, 9, 5).unwrap();
    assert_eq!(set.splits.len(), 1);
    assert!(set.diagnostics.iter().any(|m| m.contains("using 1")));
    let split = &set.splits[0];
    assert_eq!(split.cold.len(), 30);
    for (&u, hidden) in &split.hidden {
        assert_eq!(hidden.as_slice(), d.node_items(u, g0(&d)));
        assert!(split.training.node_items(u, g0(&d)).is_empty());
    }
    // other contexts are untouched
    let g1 = d.context_index("g1").unwrap();
    for u in 0..d.num_users() {
        let u = UserIdx::from(u);
        assert_eq!(split.training.node_items(u, g1), d.node_items(u, g1));
    }
}

#[test]
fn leave_some_out_keeps_the_rest() {
    let d = population(40, 5, 2);
    let set = make_splits(&d, g0(&d), Scenario::LeaveSomeOut { hide: 4 }, 3, 9, 5).unwrap();
    assert_eq!(set.splits.len(), 3);
    for split in &set.splits {
        assert!(split.cold.is_empty());
        for (&u, hidden) in &split.hidden {
            assert_eq!(hidden.len(), 4);
            let kept = split.training.node_items(u, g0(&d));
            assert_eq!(kept.len(), 1);
            assert!(hidden.iter().all(|i| !kept.contains(i)));
            assert!(hidden.iter().all(|i| d.node_items(u, g0(&d)).contains(i)));
        }
        assert_eq!(split.training.num_triples() + 4 * 40, d.num_triples());
    }
}

#[test]
fn mixed_scenario_makes_the_requested_share_cold() {
    let d = population(100, 6, 3);
    let scenario = Scenario::LeaveSomeAllOut { cold_fraction: 0.7, hide: 4 };
    let set = make_splits(&d, g0(&d), scenario, 4, 11, 5).unwrap();
    let mut cold_sets = HashSet::new();
    for split in &set.splits {
        assert_eq!(split.cold.len(), 70);
        cold_sets.insert(split.cold.iter().copied().collect::<Vec<_>>());
        for (&u, hidden) in &split.hidden {
            let expect = if split.cold.contains(&u) { 6 } else { 4 };
            assert_eq!(hidden.len(), expect);
            let kept: HashSet<ItemIdx> = split.training.node_items(u, g0(&d)).iter().copied().collect();
            assert!(hidden.iter().all(|i| !kept.contains(i)));
        }
    }
    assert!(cold_sets.len() > 1, "splits should draw different cold users");
}

#[test]
fn users_short_of_the_hide_count_are_excluded() {
    let rows = [("a", "x", "g0"), ("a", "y", "g0"), ("a", "z", "g0"), ("b", "x", "g0")];
    let d = dataset(&rows);
    let set = make_splits(&d, g0(&d), Scenario::LeaveSomeOut { hide: 4 }, 2, 0, 1).unwrap();
    assert!(set.test_users.is_empty());
    assert!(set.diagnostics.iter().any(|m| m.contains("`a`") && m.contains("excluded")));

    let set = make_splits(&d, g0(&d), Scenario::LeaveOneOut, 2, 0, 2).unwrap();
    assert_eq!(set.test_users, vec![d.user_index("a").unwrap()]);
}

#[test]
fn splits_are_reproducible() {
    let d = population(50, 5, 4);
    let s = Scenario::LeaveSomeAllOut { cold_fraction: 0.3, hide: 2 };
    let hidden = |seed| -> Vec<BTreeMap<UserIdx, Vec<ItemIdx>>> {
        make_splits(&d, g0(&d), s, 3, seed, 5).unwrap().splits.into_iter().map(|x| x.hidden).collect()
    };
    assert_eq!(hidden(5), hidden(5));
    assert_ne!(hidden(5), hidden(6));
}

#[test]
fn invalid_settings() {
    let d = population(10, 5, 5);
    let bad = |s, n| matches!(make_splits(&d, g0(&d), s, n, 0, 5), Err(EvalError::InvalidScenario(_)));
    assert!(bad(Scenario::LeaveSomeOut { hide: 0 }, 1));
    assert!(bad(Scenario::LeaveSomeAllOut { cold_fraction: 1.5, hide: 2 }, 1));
    assert!(bad(Scenario::LeaveOneOut, 0));
    let config = ExperimentConfig { n: 0, ..items_config(Scenario::LeaveOneOut) };
    assert!(run_experiment(&d, None, g0(&d), Scheme::MostPopular, &config).is_err());
}

fn items_config(scenario: Scenario) -> ExperimentConfig {
    ExperimentConfig {
        scenario,
        n: 5,
        n_splits: 3,
        seed: 17,
        min_items: 5,
        backfill: false,
        model: ModelConfig { units: UnitKind::Items, ..ModelConfig::default() },
    }
}

/// Precision and recall of a popularity ranking computed straight from the
/// training triples, averaged over users who receive a nonempty list.
fn popularity_baseline(split: &georel::eval::Split, context: ContextIdx, n: usize) -> (f64, f64) {
    let train = &split.training;
    let mut in_context: BTreeMap<ItemIdx, BTreeSet<UserIdx>> = BTreeMap::new();
    let mut anywhere: BTreeMap<ItemIdx, BTreeSet<UserIdx>> = BTreeMap::new();
    for (t, _) in train.triples() {
        anywhere.entry(t.item).or_default().insert(t.user);
        if t.context == context {
            in_context.entry(t.item).or_default().insert(t.user);
        }
    }
    let (mut p, mut r, mut users) = (0.0, 0.0, 0);
    for (&u, hidden) in &split.hidden {
        let own = train.node_items(u, context);
        let mut ranked: Vec<(usize, usize, ItemIdx)> = in_context
            .iter()
            .filter(|(i, _)| !own.contains(i))
            .map(|(&i, who)| (who.iter().filter(|&&w| w != u).count(), anywhere[&i].len(), i))
            .filter(|x| x.0 > 0)
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
        ranked.truncate(n);
        if ranked.is_empty() {
            continue;
        }
        let hits = hidden.iter().filter(|i| ranked.iter().any(|x| x.2 == **i)).count();
        p += hits as f64 / n as f64;
        r += hits as f64 / hidden.len() as f64;
        users += 1;
    }
    if users == 0 {
        return (0.0, 0.0);
    }
    (p / users as f64, r / users as f64)
}

#[test]
fn most_popular_matches_the_popularity_baseline() {
    let d = population_with_light(120, 6, 40, 6);
    for scenario in [
        Scenario::LeaveSomeOut { hide: 2 },
        Scenario::LeaveAllOut,
        Scenario::LeaveSomeAllOut { cold_fraction: 0.5, hide: 3 },
    ] {
        let config = items_config(scenario);
        let report = run_experiment(&d, None, g0(&d), Scheme::MostPopular, &config).unwrap();
        let set = make_splits(&d, g0(&d), scenario, config.n_splits, config.seed, config.min_items).unwrap();
        assert_eq!(report.splits.len(), set.splits.len());
        for (got, split) in report.splits.iter().zip(&set.splits) {
            let (p, r) = popularity_baseline(split, g0(&d), config.n);
            assert!((got.precision - p).abs() < 1e-12, "{scenario}: {} vs {p}", got.precision);
            assert!((got.recall - r).abs() < 1e-12, "{scenario}: {} vs {r}", got.recall);
        }
        assert!(report.mean_recall > 0.0);
        let recalls: Vec<f64> = report.splits.iter().map(|s| s.recall).collect();
        let (mean, std) = mean_std(&recalls);
        assert!((report.mean_recall - mean).abs() < 1e-12);
        assert!((report.std_recall - std).abs() < 1e-12);
        let direct = recalls.iter().sum::<f64>() / recalls.len() as f64;
        assert!((report.mean_recall - direct).abs() < 1e-12);
    }
}

#[test]
fn reports_are_deterministic_and_shared_across_schemes() {
    let d = population(80, 6, 7);
    let config = items_config(Scenario::LeaveSomeOut { hide: 2 });
    let schemes = [Scheme::MostPopular, Scheme::CollaborativeFiltering, Scheme::Geographic];
    let a = evaluate_schemes(&d, None, g0(&d), &schemes, &config).unwrap();
    let b = evaluate_schemes(&d, None, g0(&d), &schemes, &config).unwrap();
    assert_eq!(a, b);
    for (k, &s) in schemes.iter().enumerate() {
        assert_eq!(a[k], run_experiment(&d, None, g0(&d), s, &config).unwrap());
    }
}

#[test]
fn leave_one_out_reports_recall_only() {
    let d = population(40, 5, 8);
    let config = items_config(Scenario::LeaveOneOut);
    let report = run_experiment(&d, None, g0(&d), Scheme::CollaborativeFiltering, &config).unwrap();
    assert!(!report.reports_precision());
    let csv = report.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "scheme,scenario,split,precision_at_n,recall_at_n");
    assert_eq!(lines.len(), 1 + config.n_splits + 2);
    assert!(lines[1].starts_with("cf,leave-one-out,0,,"));
    assert!(lines[lines.len() - 2].starts_with("cf,leave-one-out,mean,,"));
    for line in &lines[1..] {
        let r: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&r));
    }
}

#[test]
fn uniform_preferences_leave_cf_no_better_than_popularity() {
    // without preference structure, similarity carries no signal: across
    // seeds the paired CF - MP recall differences should center on zero
    let config = SynthConfig {
        users: 300,
        concentration: 0.0,
        ..SynthConfig::default()
    };
    let experiment = ExperimentConfig {
        scenario: Scenario::LeaveSomeOut { hide: 4 },
        n: 10,
        n_splits: 2,
        seed: 3,
        min_items: 5,
        backfill: true,
        model: ModelConfig::default(),
    };
    let diffs: Vec<f64> = (0..10u64)
        .map(|seed| {
            let data = generate(&config, 1000 + seed).unwrap();
            let (d, _) = data.dataset().unwrap();
            let g = d.context_index(&data.target_context).unwrap();
            let schemes = [Scheme::MostPopular, Scheme::CollaborativeFiltering];
            let r = evaluate_schemes(&d, None, g, &schemes, &experiment).unwrap();
            r[1].mean_recall - r[0].mean_recall
        })
        .collect();
    let (mean, std) = mean_std(&diffs);
    let t = mean / (std / (diffs.len() as f64).sqrt());
    eprintln!("paired recall differences {diffs:?}, t = {t:.3}");
    // two-sided, 9 degrees of freedom, 1% level
    assert!(t.abs() < 3.25, "t = {t}");
}
