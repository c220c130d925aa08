//! Coordinates, great-circle distances and bounding-box regions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// IUGG mean Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Regions whose corner-to-corner distance falls below this (10 m) are degenerate.
pub const MIN_REGION_DIAGONAL_KM: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    OutOfRange { lat: f64, lon: f64 },
    #[error("empty point set")]
    EmptyPointSet,
    #[error("degenerate context region")]
    DegenerateRegion,
    #[error("region corners are inverted (south-west must not exceed north-east)")]
    InvertedRegion,
}

/// A latitude/longitude pair in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coordinate {
    pub lat: f64,
    pub lon: f64,
}

impl Coordinate {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        let c = Coordinate { lat, lon };
        if c.is_valid() {
            Ok(c)
        } else {
            Err(GeoError::OutOfRange { lat, lon })
        }
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }
}

/// Great-circle distance in kilometers using the haversine formula.
pub fn haversine_km(a: Coordinate, b: Coordinate) -> f64 {
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();

    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    // rounding can push h a hair past 1 for antipodal points
    let h = h.clamp(0.0, 1.0);
    2.0 * EARTH_RADIUS_KM * h.sqrt().asin()
}

/// Arithmetic mean of latitudes and longitudes.
///
/// This is the planar centroid: accurate for city-sized point sets, wrong
/// for sets straddling the antimeridian or a pole.
pub fn centroid(points: &[Coordinate]) -> Result<Coordinate, GeoError> {
    if points.is_empty() {
        return Err(GeoError::EmptyPointSet);
    }
    let n = points.len() as f64;
    let (lat, lon) = points
        .iter()
        .fold((0.0, 0.0), |(la, lo), p| (la + p.lat, lo + p.lon));
    Ok(Coordinate { lat: lat / n, lon: lon / n })
}

/// Axis-aligned latitude/longitude box. Boxes crossing the antimeridian are
/// not representable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub sw: Coordinate,
    pub ne: Coordinate,
}

impl BoundingBox {
    pub fn new(sw: Coordinate, ne: Coordinate) -> Result<Self, GeoError> {
        for c in [sw, ne] {
            if !c.is_valid() {
                return Err(GeoError::OutOfRange { lat: c.lat, lon: c.lon });
            }
        }
        if sw.lat > ne.lat || sw.lon > ne.lon {
            return Err(GeoError::InvertedRegion);
        }
        Ok(BoundingBox { sw, ne })
    }

    /// Smallest box enclosing every point. Returns `None` for an empty slice.
    pub fn enclosing(points: &[Coordinate]) -> Option<Self> {
        let first = points.first()?;
        let mut sw = *first;
        let mut ne = *first;
        for p in &points[1..] {
            sw.lat = sw.lat.min(p.lat);
            sw.lon = sw.lon.min(p.lon);
            ne.lat = ne.lat.max(p.lat);
            ne.lon = ne.lon.max(p.lon);
        }
        Some(BoundingBox { sw, ne })
    }

    pub fn contains(&self, p: Coordinate) -> bool {
        p.lat >= self.sw.lat && p.lat <= self.ne.lat && p.lon >= self.sw.lon && p.lon <= self.ne.lon
    }

    /// Largest distance between two points of the region, taken as the
    /// corner-to-corner diagonal. Regions whose diagonal is shorter than
    /// [`MIN_REGION_DIAGONAL_KM`] are degenerate.
    pub fn d_max(&self) -> Result<f64, GeoError> {
        let d = haversine_km(self.sw, self.ne);
        if d < MIN_REGION_DIAGONAL_KM {
            Err(GeoError::DegenerateRegion)
        } else {
            Ok(d)
        }
    }
}
