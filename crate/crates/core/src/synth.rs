//! Seeded generator of geotagged photo collections with planted structure.
//!
//! The world is a grid of cities grouped into states and countries. Every
//! city holds a jittered grid of POIs, a few of which are landmarks that
//! everybody photographs. Each user follows an archetype: in a city the
//! archetype prefers a handful of POIs, and it prefers a few cities to
//! travel to. `concentration` controls how often a user photographs a
//! favorite instead of a random POI, `consistency` how often the user keeps
//! their archetype when visiting another city (and travels to the
//! archetype's cities). One city is the evaluation target.
//!
//! Every photo is a distinct item; photos of one POI scatter normally
//! around it, so DBSCAN recovers the POIs as clusters.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::dataset::{DataError, Dataset, Diagnostic, EventRecord, GeoContext};
use crate::geo::{BoundingBox, Coordinate};
use crate::partonomy::{RegionForest, RegionNode};

const CITY_SPAN_DEG: f64 = 0.5;
const CITY_PITCH_DEG: f64 = 2.0;
const GRID_COLUMNS: usize = 10;
const ORIGIN: (f64, f64) = (-40.0, -100.0);
const KM_PER_DEG: f64 = 111.195;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("{name} = {value} is not in [0, 1]")]
    Fraction { name: &'static str, value: f64 },
    #[error("range {name} = {lo}..={hi} is empty")]
    Range { name: &'static str, lo: usize, hi: usize },
    #[error("{landmarks} landmarks and {favorites} favorites do not fit in {pois} POIs per city")]
    TooFewPois { pois: usize, landmarks: usize, favorites: usize },
    #[error("{requested} cities to visit but only {available} besides the target")]
    TooFewCities { requested: usize, available: usize },
    #[error("{0} cities exceed the {max} grid slots", max = GRID_COLUMNS * 9)]
    TooManyCities(usize),
    #[error("POIs {spacing_km:.2} km apart cannot be separated with photo spread {spread_km} km")]
    Crowded { spacing_km: f64, spread_km: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub users: usize,
    pub countries: usize,
    pub states_per_country: usize,
    pub cities_per_state: usize,
    pub pois_per_city: usize,
    pub landmarks_per_city: usize,
    /// Standard deviation of photo positions around their POI.
    pub spread_km: f64,
    pub archetypes: usize,
    /// Favorite POIs per archetype and city.
    pub favorites_per_city: usize,
    /// Cities (besides the target) each archetype likes to visit.
    pub favorite_cities: usize,
    /// Probability that a non-landmark photo shows a favorite POI.
    pub concentration: f64,
    /// Probability of keeping the archetype in a visited city, and of
    /// choosing a visited city among the archetype's favorites.
    pub consistency: f64,
    /// Probability that a photo shows a landmark.
    pub landmark_share: f64,
    /// Fraction of users who never visit the target city.
    pub cold_start_fraction: f64,
    /// Fraction of target visitors who take `heavy_photos` there.
    pub heavy_fraction: f64,
    pub heavy_photos: (usize, usize),
    pub light_photos: (usize, usize),
    /// Other cities visited per user.
    pub other_cities: (usize, usize),
    pub photos_per_other_city: (usize, usize),
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            users: 2000,
            countries: 2,
            states_per_country: 3,
            cities_per_state: 3,
            pois_per_city: 64,
            landmarks_per_city: 4,
            spread_km: 0.15,
            archetypes: 16,
            favorites_per_city: 4,
            favorite_cities: 3,
            concentration: 0.8,
            consistency: 0.8,
            landmark_share: 0.3,
            cold_start_fraction: 0.1,
            heavy_fraction: 0.5,
            heavy_photos: (6, 12),
            light_photos: (1, 4),
            other_cities: (2, 4),
            photos_per_other_city: (3, 8),
        }
    }
}

impl SynthConfig {
    pub fn num_cities(&self) -> usize {
        self.countries * self.states_per_country * self.cities_per_state
    }

    fn poi_spacing_km(&self) -> f64 {
        let side = (self.pois_per_city as f64).sqrt().ceil();
        // POIs sit in the middle 40% of their cell, so neighbors are at least
        // 0.6 cells apart; longitude degrees shrink away from the equator
        0.6 * CITY_SPAN_DEG / side * KM_PER_DEG * ORIGIN.0.abs().to_radians().cos()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, v) in [
            ("users", self.users),
            ("countries", self.countries),
            ("states_per_country", self.states_per_country),
            ("cities_per_state", self.cities_per_state),
            ("pois_per_city", self.pois_per_city),
            ("archetypes", self.archetypes),
            ("favorites_per_city", self.favorites_per_city),
        ] {
            if v == 0 {
                return Err(SynthError::Zero(name));
            }
        }
        for (name, value) in [
            ("concentration", self.concentration),
            ("consistency", self.consistency),
            ("landmark_share", self.landmark_share),
            ("cold_start_fraction", self.cold_start_fraction),
            ("heavy_fraction", self.heavy_fraction),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SynthError::Fraction { name, value });
            }
        }
        for (name, (lo, hi)) in [
            ("heavy_photos", self.heavy_photos),
            ("light_photos", self.light_photos),
            ("other_cities", self.other_cities),
            ("photos_per_other_city", self.photos_per_other_city),
        ] {
            if lo > hi {
                return Err(SynthError::Range { name, lo, hi });
            }
        }
        if self.landmarks_per_city + self.favorites_per_city > self.pois_per_city {
            return Err(SynthError::TooFewPois {
                pois: self.pois_per_city,
                landmarks: self.landmarks_per_city,
                favorites: self.favorites_per_city,
            });
        }
        let cities = self.num_cities();
        if cities > GRID_COLUMNS * 9 {
            return Err(SynthError::TooManyCities(cities));
        }
        let available = cities - 1;
        let requested = self.other_cities.1.max(self.favorite_cities);
        if requested > available {
            return Err(SynthError::TooFewCities { requested, available });
        }
        let spacing_km = self.poi_spacing_km();
        if self.spread_km.is_nan() || self.spread_km < 0.0 || spacing_km < 6.0 * self.spread_km + 1.0 {
            return Err(SynthError::Crowded { spacing_km, spread_km: self.spread_km });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub events: Vec<EventRecord>,
    pub contexts: Vec<GeoContext>,
    pub regions: RegionForest,
    pub target_context: String,
    /// Home archetype of user `k` (id `u{k:05}`).
    pub archetype: Vec<usize>,
}

impl SyntheticData {
    pub fn dataset(&self) -> Result<(Dataset, Vec<Diagnostic>), DataError> {
        Dataset::ingest(self.events.iter().cloned(), self.contexts.clone())
    }
}

struct City {
    context: String,
    pois: Vec<Coordinate>,
    landmarks: Vec<usize>,
    ordinary: Vec<usize>,
}

struct Generator<'a> {
    config: &'a SynthConfig,
    rng: ChaCha8Rng,
    jitter: Normal<f64>,
    events: Vec<EventRecord>,
}

impl Generator<'_> {
    fn photo(&mut self, user: usize, city: &City, poi: usize) {
        let center = city.pois[poi];
        let dlat = self.jitter.sample(&mut self.rng) / KM_PER_DEG;
        let dlon = self.jitter.sample(&mut self.rng) / (KM_PER_DEG * center.lat.to_radians().cos());
        let n = self.events.len();
        self.events.push(EventRecord {
            user: format!("u{user:05}"),
            item: format!("p{n:07}"),
            location: Coordinate { lat: center.lat + dlat, lon: center.lon + dlon },
            context: Some(city.context.clone()),
            timestamp: Some(1_300_000_000 + 60 * n as i64),
        });
    }

    fn pick_poi(&mut self, city: &City, favorites: &[usize]) -> usize {
        if !city.landmarks.is_empty() && self.rng.gen_bool(self.config.landmark_share) {
            *city.landmarks.choose(&mut self.rng).unwrap()
        } else if self.rng.gen_bool(self.config.concentration) {
            *favorites.choose(&mut self.rng).unwrap()
        } else {
            *city.ordinary.choose(&mut self.rng).unwrap()
        }
    }

    fn range(&mut self, (lo, hi): (usize, usize)) -> usize {
        self.rng.gen_range(lo..=hi)
    }
}

/// Generates a dataset; identical `(config, seed)` pairs give identical output.
pub fn generate(config: &SynthConfig, seed: u64) -> Result<SyntheticData, SynthError> {
    config.validate()?;
    let mut gen = Generator {
        config,
        rng: ChaCha8Rng::seed_from_u64(seed),
        jitter: Normal::new(0.0, config.spread_km).expect("validated spread"),
        events: Vec::new(),
    };

    let mut cities = Vec::new();
    let mut contexts = Vec::new();
    let mut regions = Vec::new();
    let side = (config.pois_per_city as f64).sqrt().ceil() as usize;
    let cell = CITY_SPAN_DEG / side as f64;
    for k in 0..config.countries {
        let mut states = Vec::new();
        for s in 0..config.states_per_country {
            let mut city_nodes = Vec::new();
            for t in 0..config.cities_per_state {
                let slot = cities.len();
                let sw = Coordinate {
                    lat: ORIGIN.0 + CITY_PITCH_DEG * (slot / GRID_COLUMNS) as f64,
                    lon: ORIGIN.1 + CITY_PITCH_DEG * (slot % GRID_COLUMNS) as f64,
                };
                let ne = Coordinate { lat: sw.lat + CITY_SPAN_DEG, lon: sw.lon + CITY_SPAN_DEG };
                let id = format!("city-{k}-{s}-{t}");
                let pois: Vec<Coordinate> = (0..config.pois_per_city)
                    .map(|p| {
                        let (r, c) = ((p / side) as f64, (p % side) as f64);
                        Coordinate {
                            lat: sw.lat + cell * (r + gen.rng.gen_range(0.3..0.7)),
                            lon: sw.lon + cell * (c + gen.rng.gen_range(0.3..0.7)),
                        }
                    })
                    .collect();
                let mut order: Vec<usize> = (0..config.pois_per_city).collect();
                order.shuffle(&mut gen.rng);
                let ordinary = order.split_off(config.landmarks_per_city);
                contexts.push(GeoContext {
                    id: id.clone(),
                    name: format!("City {k}.{s}.{t}"),
                    region: BoundingBox::new(sw, ne).expect("grid cells are valid boxes"),
                });
                city_nodes.push(RegionNode {
                    id: id.clone(),
                    name: format!("City {k}.{s}.{t}"),
                    layer: 1,
                    children: Vec::new(),
                    cluster_id: None,
                });
                cities.push(City { context: id, pois, landmarks: order, ordinary });
            }
            states.push(RegionNode {
                id: format!("state-{k}-{s}"),
                name: format!("State {k}.{s}"),
                layer: 2,
                children: city_nodes,
                cluster_id: None,
            });
        }
        regions.push(RegionNode {
            id: format!("country-{k}"),
            name: format!("Country {k}"),
            layer: 3,
            children: states,
            cluster_id: None,
        });
    }

    // favorites[a][c]: ordinary POIs archetype `a` prefers in city `c`
    let favorites: Vec<Vec<Vec<usize>>> = (0..config.archetypes)
        .map(|_| {
            cities
                .iter()
                .map(|city| {
                    city.ordinary
                        .choose_multiple(&mut gen.rng, config.favorites_per_city)
                        .copied()
                        .collect()
                })
                .collect()
        })
        .collect();
    let target = 0;
    let others: Vec<usize> = (1..cities.len()).collect();
    let favorite_cities: Vec<Vec<usize>> = (0..config.archetypes)
        .map(|_| others.choose_multiple(&mut gen.rng, config.favorite_cities).copied().collect())
        .collect();

    let mut archetype = Vec::with_capacity(config.users);
    for user in 0..config.users {
        let home = gen.rng.gen_range(0..config.archetypes);
        archetype.push(home);
        let persona = |gen: &mut Generator| {
            if gen.rng.gen_bool(config.consistency) {
                home
            } else {
                gen.rng.gen_range(0..config.archetypes)
            }
        };

        if !gen.rng.gen_bool(config.cold_start_fraction) {
            let a = persona(&mut gen);
            let count = if gen.rng.gen_bool(config.heavy_fraction) {
                gen.range(config.heavy_photos)
            } else {
                gen.range(config.light_photos)
            };
            for _ in 0..count {
                let poi = gen.pick_poi(&cities[target], &favorites[a][target]);
                gen.photo(user, &cities[target], poi);
            }
        }

        let trips = gen.range(config.other_cities);
        let mut visited = Vec::with_capacity(trips);
        while visited.len() < trips {
            let pool = if !favorite_cities[home].is_empty() && gen.rng.gen_bool(config.consistency) {
                &favorite_cities[home]
            } else {
                &others
            };
            let c = *pool.choose(&mut gen.rng).unwrap();
            if !visited.contains(&c) {
                visited.push(c);
            }
        }
        for c in visited {
            let a = persona(&mut gen);
            let count = gen.range(config.photos_per_other_city);
            for _ in 0..count {
                let poi = gen.pick_poi(&cities[c], &favorites[a][c]);
                gen.photo(user, &cities[c], poi);
            }
        }
    }

    Ok(SyntheticData {
        events: gen.events,
        contexts,
        regions: RegionForest(regions),
        target_context: cities[target].context.clone(),
        archetype,
    })
}
