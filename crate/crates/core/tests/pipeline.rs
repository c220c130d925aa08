use georel::io::{self, RecommendationFile};
use georel::synth::{generate, SynthConfig};
use georel::{Dataset, Model, ModelConfig, Scheme};

#[test]
fn synthetic_files_round_trip_into_recommendations() {
    let config = SynthConfig { users: 120, ..SynthConfig::default() };
    let data = generate(&config, 5).unwrap();
    let dir = tempdir();
    let (ev, cx, pt) = (dir.join("events.csv"), dir.join("contexts.json"), dir.join("partonomy.json"));
    io::write_events_file(&ev, &data.events).unwrap();
    io::write_contexts_file(&cx, &data.contexts).unwrap();
    io::write_partonomy_file(&pt, &data.regions).unwrap();

    let events = io::read_events_file(&ev).unwrap();
    assert_eq!(events, data.events);
    let contexts = io::read_contexts_file(&cx).unwrap();
    let regions = io::read_partonomy_file(&pt).unwrap();
    assert_eq!(regions, data.regions);

    let (d, diagnostics) = Dataset::ingest(events, contexts).unwrap();
    assert!(diagnostics.is_empty());
    let g = d.context_index(&data.target_context).unwrap();
    let model = Model::build(d, Some(&regions), ModelConfig::default()).unwrap();
    assert!(!model.units().is_empty());

    let residents = model.graph().residents(g).to_vec();
    assert!(!residents.is_empty());
    for scheme in Scheme::ALL {
        let w = model.weighting(scheme).unwrap();
        for &u in residents.iter().take(10) {
            let list = model.recommend(w.as_ref(), u, g, 10, true).unwrap();
            assert!(list.items.len() <= 10);
            assert_eq!(list.scheme, scheme);
            let doc = RecommendationFile::new(model.dataset(), model.units(), &list);
            let json = serde_json::to_string(&doc).unwrap();
            let back: RecommendationFile = serde_json::from_str(&json).unwrap();
            assert_eq!(back, doc);
        }
    }

    // every clustered item locates to its own cluster
    let c = model.clustering().unwrap();
    for cl in c.clusters() {
        for &i in &cl.core {
            assert_eq!(model.unit_for_item(i, model.dataset().item_location(i)).map(|u| u.0), Some(cl.id.0));
        }
    }
    std::fs::remove_dir_all(dir).unwrap();
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("georel-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
