use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use georel::clustering::DbscanParams;
use georel::dataset::{Dataset, EventRecord, GeoContext};
use georel::eval::{evaluate_schemes, ExperimentConfig, Scenario};
use georel::geo::{BoundingBox, Coordinate};
use georel::io::{self, ClusterFile, RecommendationFile};
use georel::model::{cluster_items, Model, ModelConfig};
use georel::partonomy::RegionForest;
use georel::synth::{generate, SynthConfig};
use georel::units::UnitKind;
use georel::weighting::{ProfileScope, Scheme};

#[derive(Parser)]
#[command(name = "georel", version, about = "Location-aware recommendation over a user-context graph")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Info)]
    log: LogLevel,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogLevel {
    Quiet,
    Info,
    Debug,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster item locations with DBSCAN.
    Cluster(ClusterArgs),
    /// Top-n recommendations for one user in one context.
    Recommend(RecommendArgs),
    /// Offline evaluation of one or more schemes.
    Evaluate(EvaluateArgs),
    /// Write a synthetic dataset in the ingestion formats.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    events: PathBuf,
    /// Without a contexts file, events are grouped by their declared context id.
    #[arg(long)]
    contexts: Option<PathBuf>,
    /// Cluster only this context's items.
    #[arg(long)]
    context: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    radius_km: f64,
    #[arg(long, default_value_t = 3)]
    min_points: usize,
    /// Output JSON (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum UnitsArg {
    Clusters,
    Items,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ScopeArg {
    Context,
    All,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    contexts: PathBuf,
    /// Region hierarchy; required by `tl` and `cf-tl`.
    #[arg(long)]
    partonomy: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = UnitsArg::Clusters)]
    units: UnitsArg,
    #[arg(long, default_value_t = 1.0)]
    radius_km: f64,
    #[arg(long, default_value_t = 3)]
    min_points: usize,
    /// Profile scope of the `cf` scheme.
    #[arg(long, value_enum, default_value_t = ScopeArg::All)]
    cf_scope: ScopeArg,
    /// Partonomy layer used by the two-layer similarity.
    #[arg(long, default_value_t = 1)]
    tl_layer: usize,
}

#[derive(Args)]
struct RecommendArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    user: String,
    #[arg(long)]
    context: String,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value = "cf")]
    scheme: Scheme,
    /// Fill short lists with the context's most popular units.
    #[arg(long)]
    backfill: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ScenarioArg {
    /// leave-all-out
    All,
    /// leave-some-out
    Some,
    /// leave-some-all-out
    Mix,
    /// leave-one-out
    One,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    context: String,
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    /// Share of cold-start test users in the `mix` scenario.
    #[arg(long, default_value_t = 0.5)]
    cold_fraction: f64,
    /// Selections hidden per warm test user.
    #[arg(long, default_value_t = 4)]
    hide: usize,
    /// One scheme or a comma-separated list.
    #[arg(long, value_delimiter = ',', required = true)]
    scheme: Vec<Scheme>,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    splits: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Minimum in-context selections for a test user.
    #[arg(long, default_value_t = 5)]
    min_items: usize,
    /// Do not fill short lists with popular units.
    #[arg(long)]
    no_backfill: bool,
    /// Report CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    archetypes: Option<usize>,
    #[arg(long)]
    pois_per_city: Option<usize>,
    #[arg(long)]
    concentration: Option<f64>,
    #[arg(long)]
    consistency: Option<f64>,
    #[arg(long)]
    landmark_share: Option<f64>,
    #[arg(long)]
    cold_start_fraction: Option<f64>,
}

enum Failure {
    Usage(String),
    Data(String),
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn data(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.log {
        LogLevel::Quiet => log::LevelFilter::Error,
        LogLevel::Info => log::LevelFilter::Info,
        LogLevel::Debug => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }

    let result = match cli.command {
        Command::Cluster(a) => run_cluster(a),
        Command::Recommend(a) => run_recommend(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Synth(a) => run_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dbscan_params(radius_km: f64, min_points: usize) -> Result<DbscanParams, Failure> {
    DbscanParams::new(radius_km, min_points).map_err(|e| usage(e.to_string()))
}

fn io_failure(path: &Path, e: io::IoError) -> Failure {
    match e {
        io::IoError::File { .. } => data(e),
        other => data(format!("{}: {other}", path.display())),
    }
}

fn load_dataset(events: &Path, contexts: Vec<GeoContext>) -> Result<Dataset, Failure> {
    let events = io::read_events_file(events).map_err(|e| io_failure(events, e))?;
    ingest(events, contexts)
}

fn ingest(events: Vec<EventRecord>, contexts: Vec<GeoContext>) -> Result<Dataset, Failure> {
    let (dataset, diagnostics) = Dataset::ingest(events, contexts).map_err(data)?;
    for d in &diagnostics {
        warn!("event {}: {}", d.record, d.reason);
    }
    info!(
        "{} users, {} items, {} contexts, {} triples",
        dataset.num_users(),
        dataset.num_items(),
        dataset.num_contexts(),
        dataset.num_triples()
    );
    Ok(dataset)
}

fn read_contexts(path: &Path) -> Result<Vec<GeoContext>, Failure> {
    io::read_contexts_file(path).map_err(|e| io_failure(path, e))
}

fn read_partonomy(path: Option<&Path>) -> Result<Option<RegionForest>, Failure> {
    path.map(|p| io::read_partonomy_file(p).map_err(|e| io_failure(p, e)))
        .transpose()
}

fn run_cluster(a: ClusterArgs) -> Result<(), Failure> {
    let params = dbscan_params(a.radius_km, a.min_points)?;
    let dataset = match &a.contexts {
        Some(path) => load_dataset(&a.events, read_contexts(path)?)?,
        None => {
            // one world-sized context; declared context ids only filter
            let mut events = io::read_events_file(&a.events).map_err(|e| io_failure(&a.events, e))?;
            if let Some(c) = &a.context {
                events.retain(|e| e.context.as_deref() == Some(c.as_str()));
                if events.is_empty() {
                    return Err(data(format!("no events declare context `{c}`")));
                }
            }
            for e in &mut events {
                e.context = None;
            }
            let world = GeoContext {
                id: "world".into(),
                name: String::new(),
                region: BoundingBox::new(Coordinate { lat: -90.0, lon: -180.0 }, Coordinate { lat: 90.0, lon: 180.0 })
                    .expect("whole globe is a valid box"),
            };
            ingest(events, vec![world])?
        }
    };
    let context = match (&a.contexts, &a.context) {
        (Some(_), Some(c)) => Some(
            dataset
                .context_index(c)
                .ok_or_else(|| data(format!("unknown context `{c}`")))?,
        ),
        _ => None,
    };
    let clustering = cluster_items(&dataset, context, params);
    info!("{} clusters, {} noise items", clustering.len(), clustering.noise().len());
    let doc = ClusterFile::new(&dataset, &clustering);
    let json = serde_json::to_string_pretty(&doc).map_err(data)? + "\n";
    io::write_output(a.out.as_deref(), &json).map_err(data)
}

fn model_config(a: &ModelArgs, schemes: &[Scheme]) -> Result<ModelConfig, Failure> {
    if a.partonomy.is_none() {
        if let Some(s) = schemes.iter().find(|s| matches!(s, Scheme::TwoLayer | Scheme::CfTwoLayer)) {
            return Err(usage(format!("scheme `{s}` requires --partonomy")));
        }
    }
    if a.tl_layer == 0 {
        return Err(usage("--tl-layer must be at least 1"));
    }
    if a.units == UnitsArg::Items && schemes.contains(&Scheme::IntraCluster) {
        return Err(usage("scheme `ic` requires cluster units"));
    }
    Ok(ModelConfig {
        units: match a.units {
            UnitsArg::Clusters => UnitKind::Clusters,
            UnitsArg::Items => UnitKind::Items,
        },
        dbscan: dbscan_params(a.radius_km, a.min_points)?,
        cf_scope: match a.cf_scope {
            ScopeArg::Context => ProfileScope::Context,
            ScopeArg::All => ProfileScope::All,
        },
        tl_layer: a.tl_layer,
        ..ModelConfig::default()
    })
}

fn run_recommend(a: RecommendArgs) -> Result<(), Failure> {
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let config = model_config(&a.model, &[a.scheme])?;
    let dataset = load_dataset(&a.model.events, read_contexts(&a.model.contexts)?)?;
    let regions = read_partonomy(a.model.partonomy.as_deref())?;
    let user = dataset
        .user_index(&a.user)
        .ok_or_else(|| data(format!("unknown user `{}`", a.user)))?;
    let context = dataset
        .context_index(&a.context)
        .ok_or_else(|| data(format!("unknown context `{}`", a.context)))?;
    let model = Model::build(dataset, regions.as_ref(), config).map_err(data)?;
    let weight = model.weighting(a.scheme).map_err(data)?;
    let list = model
        .recommend(weight.as_ref(), user, context, a.n, a.backfill)
        .map_err(data)?;
    let doc = RecommendationFile::new(model.dataset(), model.units(), &list);
    let json = serde_json::to_string_pretty(&doc).map_err(data)? + "\n";
    io::write_output(a.out.as_deref(), &json).map_err(data)
}

fn run_evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let scenario = match a.scenario {
        ScenarioArg::All => Scenario::LeaveAllOut,
        ScenarioArg::Some => Scenario::LeaveSomeOut { hide: a.hide },
        ScenarioArg::Mix => Scenario::LeaveSomeAllOut { cold_fraction: a.cold_fraction, hide: a.hide },
        ScenarioArg::One => Scenario::LeaveOneOut,
    };
    scenario.validate().map_err(|e| usage(e.to_string()))?;
    if a.n == 0 || a.splits == 0 {
        return Err(usage("--n and --splits must be at least 1"));
    }
    let mut schemes: Vec<Scheme> = Vec::new();
    for &s in &a.scheme {
        if !schemes.contains(&s) {
            schemes.push(s);
        }
    }
    let model = model_config(&a.model, &schemes)?;
    let config = ExperimentConfig {
        scenario,
        n: a.n,
        n_splits: a.splits,
        seed: a.seed,
        min_items: a.min_items,
        backfill: !a.no_backfill,
        model,
    };
    let dataset = load_dataset(&a.model.events, read_contexts(&a.model.contexts)?)?;
    let regions = read_partonomy(a.model.partonomy.as_deref())?;
    let context = dataset
        .context_index(&a.context)
        .ok_or_else(|| data(format!("unknown context `{}`", a.context)))?;

    let reports = evaluate_schemes(&dataset, regions.as_ref(), context, &schemes, &config).map_err(data)?;
    let mut csv = String::new();
    for (k, r) in reports.iter().enumerate() {
        info!("{}: mean precision {:.4}, mean recall {:.4}", r.scheme, r.mean_precision, r.mean_recall);
        let body = r.to_csv();
        // one header for the whole file
        csv.push_str(if k == 0 { &body } else { body.split_once('\n').map_or("", |(_, rest)| rest) });
    }
    io::write_output(a.out.as_deref(), &csv).map_err(data)
}

fn run_synth(a: SynthArgs) -> Result<(), Failure> {
    let d = SynthConfig::default();
    let config = SynthConfig {
        users: a.users.unwrap_or(d.users),
        archetypes: a.archetypes.unwrap_or(d.archetypes),
        pois_per_city: a.pois_per_city.unwrap_or(d.pois_per_city),
        concentration: a.concentration.unwrap_or(d.concentration),
        consistency: a.consistency.unwrap_or(d.consistency),
        landmark_share: a.landmark_share.unwrap_or(d.landmark_share),
        cold_start_fraction: a.cold_start_fraction.unwrap_or(d.cold_start_fraction),
        ..d
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let generated = generate(&config, a.seed).map_err(data)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| data(format!("{}: {e}", a.out_dir.display())))?;
    let events = a.out_dir.join("events.csv");
    let contexts = a.out_dir.join("contexts.json");
    let partonomy = a.out_dir.join("partonomy.json");
    io::write_events_file(&events, &generated.events).map_err(data)?;
    io::write_contexts_file(&contexts, &generated.contexts).map_err(data)?;
    io::write_partonomy_file(&partonomy, &generated.regions).map_err(data)?;
    info!(
        "{} events from {} users; evaluation context `{}`",
        generated.events.len(),
        config.users,
        generated.target_context
    );
    println!("{}", generated.target_context);
    Ok(())
}
