//! File formats.
//!
//! * events: CSV with header `user_id,item_id,lat,lon,context_id,timestamp`,
//!   where the last two columns may be empty;
//! * contexts: JSON array of `{id, name, sw: [lat, lon], ne: [lat, lon]}`;
//! * partonomy: JSON forest of `{id, name, layer, children, cluster_id?}`;
//! * clusters and recommendation lists: JSON documents written by the CLI.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::Clustering;
use crate::dataset::{Dataset, EventRecord, GeoContext};
use crate::geo::{BoundingBox, Coordinate, GeoError};
use crate::partonomy::RegionForest;
use crate::recommend::RecommendationList;
use crate::units::UnitIndex;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("events CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("context `{id}`: {source}")]
    InvalidContext {
        id: String,
        #[source]
        source: GeoError,
    },
}

fn open(path: &Path) -> Result<BufReader<File>, IoError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| IoError::File { path: path.to_owned(), source })
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| IoError::File { path: path.to_owned(), source })
}

#[derive(Debug, Serialize, Deserialize)]
struct EventRow {
    user_id: String,
    item_id: String,
    lat: f64,
    lon: f64,
    context_id: Option<String>,
    timestamp: Option<i64>,
}

pub fn read_events<R: Read>(reader: R) -> Result<Vec<EventRecord>, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut events = Vec::new();
    for row in rdr.deserialize::<EventRow>() {
        let row = row?;
        events.push(EventRecord {
            user: row.user_id,
            item: row.item_id,
            // range checks happen at ingestion, with a per-record diagnostic
            location: Coordinate { lat: row.lat, lon: row.lon },
            context: row.context_id.filter(|c| !c.is_empty()),
            timestamp: row.timestamp,
        });
    }
    Ok(events)
}

pub fn write_events<W: Write>(writer: W, events: &[EventRecord]) -> Result<(), IoError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for e in events {
        wtr.serialize(EventRow {
            user_id: e.user.clone(),
            item_id: e.item.clone(),
            lat: e.location.lat,
            lon: e.location.lon,
            context_id: e.context.clone(),
            timestamp: e.timestamp,
        })?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ContextRow {
    id: String,
    #[serde(default)]
    name: String,
    sw: [f64; 2],
    ne: [f64; 2],
}

pub fn read_contexts<R: Read>(reader: R) -> Result<Vec<GeoContext>, IoError> {
    let rows: Vec<ContextRow> = serde_json::from_reader(reader)?;
    rows.into_iter()
        .map(|r| {
            let region = Coordinate::new(r.sw[0], r.sw[1])
                .and_then(|sw| Ok((sw, Coordinate::new(r.ne[0], r.ne[1])?)))
                .and_then(|(sw, ne)| BoundingBox::new(sw, ne))
                .map_err(|source| IoError::InvalidContext { id: r.id.clone(), source })?;
            Ok(GeoContext { id: r.id, name: r.name, region })
        })
        .collect()
}

pub fn write_contexts<W: Write>(writer: W, contexts: &[GeoContext]) -> Result<(), IoError> {
    let rows: Vec<ContextRow> = contexts
        .iter()
        .map(|c| ContextRow {
            id: c.id.clone(),
            name: c.name.clone(),
            sw: [c.region.sw.lat, c.region.sw.lon],
            ne: [c.region.ne.lat, c.region.ne.lon],
        })
        .collect();
    serde_json::to_writer_pretty(writer, &rows)?;
    Ok(())
}

pub fn read_partonomy<R: Read>(reader: R) -> Result<RegionForest, IoError> {
    Ok(serde_json::from_reader(reader)?)
}

pub fn write_partonomy<W: Write>(writer: W, forest: &RegionForest) -> Result<(), IoError> {
    serde_json::to_writer_pretty(writer, forest)?;
    Ok(())
}

pub fn read_events_file(path: &Path) -> Result<Vec<EventRecord>, IoError> {
    read_events(open(path)?)
}

pub fn write_events_file(path: &Path, events: &[EventRecord]) -> Result<(), IoError> {
    write_events(create(path)?, events)
}

pub fn read_contexts_file(path: &Path) -> Result<Vec<GeoContext>, IoError> {
    read_contexts(open(path)?)
}

pub fn write_contexts_file(path: &Path, contexts: &[GeoContext]) -> Result<(), IoError> {
    let mut w = create(path)?;
    write_contexts(&mut w, contexts)?;
    w.flush().map_err(|source| IoError::File { path: path.to_owned(), source })
}

pub fn read_partonomy_file(path: &Path) -> Result<RegionForest, IoError> {
    read_partonomy(open(path)?)
}

pub fn write_partonomy_file(path: &Path, forest: &RegionForest) -> Result<(), IoError> {
    let mut w = create(path)?;
    write_partonomy(&mut w, forest)?;
    w.flush().map_err(|source| IoError::File { path: path.to_owned(), source })
}

/// Writes `contents` to `path`, or to stdout when `path` is `None`.
pub fn write_output(path: Option<&Path>, contents: &str) -> Result<(), IoError> {
    match path {
        Some(p) => std::fs::write(p, contents).map_err(|source| IoError::File { path: p.to_owned(), source }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| IoError::File { path: PathBuf::from("<stdout>"), source })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub id: u32,
    pub centroid: [f64; 2],
    pub size: usize,
}

/// The `cluster` subcommand's output document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFile {
    pub radius_km: f64,
    pub min_points: usize,
    /// Item id → cluster id; noise items are absent.
    pub assignment: std::collections::BTreeMap<String, u32>,
    pub clusters: Vec<ClusterSummary>,
    pub noise: Vec<String>,
}

impl ClusterFile {
    pub fn new(dataset: &Dataset, clustering: &Clustering) -> Self {
        let mut assignment = std::collections::BTreeMap::new();
        for c in clustering.clusters() {
            for &i in &c.members {
                assignment.insert(dataset.item_id(i).to_owned(), c.id.0);
            }
        }
        ClusterFile {
            radius_km: clustering.params().radius_km,
            min_points: clustering.params().min_points,
            assignment,
            clusters: clustering
                .clusters()
                .iter()
                .map(|c| ClusterSummary {
                    id: c.id.0,
                    centroid: [c.centroid.lat, c.centroid.lon],
                    size: c.members.len(),
                })
                .collect(),
            noise: clustering.noise().iter().map(|&i| dataset.item_id(i).to_owned()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendedUnit {
    pub unit: String,
    pub score: f64,
    pub backfilled: bool,
}

/// The `recommend` subcommand's output document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationFile {
    pub user: String,
    pub context: String,
    pub scheme: String,
    pub items: Vec<RecommendedUnit>,
}

impl RecommendationFile {
    pub fn new(dataset: &Dataset, units: &UnitIndex, list: &RecommendationList) -> Self {
        RecommendationFile {
            user: dataset.user_id(list.query.user).to_owned(),
            context: dataset.context(list.query.context).id.clone(),
            scheme: list.scheme.to_string(),
            items: list
                .items
                .iter()
                .map(|r| RecommendedUnit { unit: units.label(r.unit).to_owned(), score: r.score, backfilled: r.backfilled })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_with_empty_optional_columns() {
        let csv = "user_id,item_id,lat,lon,context_id,timestamp\n\
                   u1,i1,-22.9,-43.2,,\n\
                   u2,i2,-22.8,-43.1,rio,1300000000\n";
        let events = read_events(csv.as_bytes()).unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].context, None);
        assert_eq!(events[0].timestamp, None);
        assert_eq!(events[1].context.as_deref(), Some("rio"));
        assert_eq!(events[1].timestamp, Some(1_300_000_000));
    }

    #[test]
    fn malformed_event_row_is_an_error() {
        let csv = "user_id,item_id,lat,lon,context_id,timestamp\nu1,i1,north,-43.2,,\n";
        assert!(matches!(read_events(csv.as_bytes()), Err(IoError::Csv(_))));
    }

    #[test]
    fn events_round_trip() {
        let csv = "user_id,item_id,lat,lon,context_id,timestamp\nu1,i1,-22.9,-43.2,rio,\n";
        let events = read_events(csv.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_events(&mut buf, &events).unwrap();
        assert_eq!(read_events(buf.as_slice()).unwrap(), events);
    }

    #[test]
    fn contexts_parse_and_validate() {
        let json = r#"[{"id":"rio","name":"Rio","sw":[-23.1,-43.8],"ne":[-22.7,-43.1]}]"#;
        let ctx = read_contexts(json.as_bytes()).unwrap();
        assert_eq!(ctx[0].id, "rio");
        assert!(ctx[0].region.contains(Coordinate { lat: -22.9, lon: -43.2 }));

        let inverted = r#"[{"id":"x","name":"","sw":[1,1],"ne":[0,0]}]"#;
        assert!(matches!(
            read_contexts(inverted.as_bytes()),
            Err(IoError::InvalidContext { .. })
        ));
    }

    #[test]
    fn partonomy_forest_parses() {
        let json = r#"[{"id":"br","name":"Brazil","layer":2,"children":[
            {"id":"rio","name":"Rio","layer":1,"children":[{"id":"c7","layer":0,"cluster_id":7}]}]}]"#;
        let forest = read_partonomy(json.as_bytes()).unwrap();
        assert_eq!(forest.0[0].children[0].children[0].cluster_id, Some(7));
    }
}
