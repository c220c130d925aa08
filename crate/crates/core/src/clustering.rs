//! DBSCAN over geotagged items with haversine distances.
//!
//! Points are visited in ascending item order, and a border point that is
//! density-reachable from several clusters joins the first one to reach it.
//! Neighborhood queries go through a lat/lon grid whose cells are sized so
//! that every point within the radius lies in one of the 3x3 surrounding
//! cells; the final test is always the exact haversine distance.

use std::collections::{BTreeMap, HashMap, VecDeque};

use thiserror::Error;

use crate::geo::{centroid, haversine_km, Coordinate, EARTH_RADIUS_KM};
use crate::ids::{ClusterId, ItemIdx};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusteringError {
    #[error("radius must be positive, got {0} km")]
    InvalidRadius(f64),
    #[error("min_points must be at least 1")]
    InvalidMinPoints,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanParams {
    pub radius_km: f64,
    pub min_points: usize,
}

impl DbscanParams {
    pub fn new(radius_km: f64, min_points: usize) -> Result<Self, ClusteringError> {
        if !(radius_km > 0.0 && radius_km.is_finite()) {
            return Err(ClusteringError::InvalidRadius(radius_km));
        }
        if min_points == 0 {
            return Err(ClusteringError::InvalidMinPoints);
        }
        Ok(DbscanParams { radius_km, min_points })
    }
}

impl Default for DbscanParams {
    fn default() -> Self {
        DbscanParams { radius_km: 1.0, min_points: 3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: ClusterId,
    /// All members, ascending.
    pub members: Vec<ItemIdx>,
    /// Members whose neighborhood holds at least `min_points` points, ascending.
    pub core: Vec<ItemIdx>,
    pub centroid: Coordinate,
}

#[derive(Debug, Clone)]
pub struct Clustering {
    params: DbscanParams,
    assignment: BTreeMap<ItemIdx, ClusterId>,
    clusters: Vec<Cluster>,
    noise: Vec<ItemIdx>,
    core_points: Vec<(Coordinate, ClusterId)>,
    core_grid: GridIndex,
}

impl Clustering {
    pub fn params(&self) -> DbscanParams {
        self.params
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster(&self, id: ClusterId) -> &Cluster {
        &self.clusters[id.index()]
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Noise items, ascending.
    pub fn noise(&self) -> &[ItemIdx] {
        &self.noise
    }

    /// The cluster an item belongs to; `None` for noise and unknown items.
    pub fn cluster_of(&self, item: ItemIdx) -> Option<ClusterId> {
        self.assignment.get(&item).copied()
    }

    /// Assigns an arbitrary location to the cluster of its nearest core point
    /// within the radius, i.e. the cluster it would border if it had been
    /// part of the input. Ties go to the lower cluster id.
    pub fn locate(&self, p: Coordinate) -> Option<ClusterId> {
        let mut best: Option<(f64, ClusterId)> = None;
        for j in self.core_grid.candidates(p) {
            let (q, cid) = self.core_points[j];
            let d = haversine_km(p, q);
            if d > self.params.radius_km {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bc)) => d < bd || (d == bd && cid < bc),
            };
            if better {
                best = Some((d, cid));
            }
        }
        best.map(|(_, c)| c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Label {
    Unvisited,
    Noise,
    Member(u32),
}

/// Runs DBSCAN with ε = `params.radius_km`. Item ids must be distinct.
pub fn dbscan(points: &[(ItemIdx, Coordinate)], params: DbscanParams) -> Clustering {
    let mut pts = points.to_vec();
    pts.sort_by_key(|(i, _)| *i);
    debug_assert!(pts.windows(2).all(|w| w[0].0 != w[1].0), "item ids must be distinct");

    let coords: Vec<Coordinate> = pts.iter().map(|(_, c)| *c).collect();
    let grid = GridIndex::new(&coords, params.radius_km);
    let neighborhood = |i: usize| -> Vec<usize> {
        let mut nb: Vec<usize> = grid
            .candidates(coords[i])
            .filter(|&j| haversine_km(coords[i], coords[j]) <= params.radius_km)
            .collect();
        nb.sort_unstable();
        nb
    };

    let n = pts.len();
    let mut labels = vec![Label::Unvisited; n];
    let mut is_core = vec![false; n];
    // cluster id + 1 of the expansion that last queued each point
    let mut queued = vec![0u32; n];
    let mut next_cluster = 0u32;

    for i in 0..n {
        if labels[i] != Label::Unvisited {
            continue;
        }
        let nb = neighborhood(i);
        if nb.len() < params.min_points {
            labels[i] = Label::Noise;
            continue;
        }
        let cid = next_cluster;
        next_cluster += 1;
        labels[i] = Label::Member(cid);
        is_core[i] = true;

        let mut queue = VecDeque::new();
        for &j in &nb {
            if j != i && queued[j] != cid + 1 {
                queued[j] = cid + 1;
                queue.push_back(j);
            }
        }
        while let Some(q) = queue.pop_front() {
            match labels[q] {
                Label::Member(_) => continue,
                Label::Noise => {
                    // too sparse to be core, so nothing further to expand
                    labels[q] = Label::Member(cid);
                }
                Label::Unvisited => {
                    labels[q] = Label::Member(cid);
                    let nq = neighborhood(q);
                    if nq.len() >= params.min_points {
                        is_core[q] = true;
                        for r in nq {
                            let open = matches!(labels[r], Label::Unvisited | Label::Noise);
                            if open && queued[r] != cid + 1 {
                                queued[r] = cid + 1;
                                queue.push_back(r);
                            }
                        }
                    }
                }
            }
        }
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); next_cluster as usize];
    let mut noise = Vec::new();
    let mut assignment = BTreeMap::new();
    for (k, label) in labels.iter().enumerate() {
        match *label {
            Label::Member(c) => {
                members[c as usize].push(k);
                assignment.insert(pts[k].0, ClusterId(c));
            }
            _ => noise.push(pts[k].0),
        }
    }

    let mut core_points = Vec::new();
    let clusters = members
        .into_iter()
        .enumerate()
        .map(|(c, ks)| {
            let id = ClusterId(c as u32);
            let member_coords: Vec<Coordinate> = ks.iter().map(|&k| coords[k]).collect();
            let core: Vec<ItemIdx> = ks.iter().filter(|&&k| is_core[k]).map(|&k| pts[k].0).collect();
            core_points.extend(ks.iter().filter(|&&k| is_core[k]).map(|&k| (coords[k], id)));
            Cluster {
                id,
                members: ks.iter().map(|&k| pts[k].0).collect(),
                core,
                centroid: centroid(&member_coords).expect("clusters are nonempty"),
            }
        })
        .collect();

    let core_coords: Vec<Coordinate> = core_points.iter().map(|(c, _)| *c).collect();
    let core_grid = GridIndex::new(&core_coords, params.radius_km);
    Clustering {
        params,
        assignment,
        clusters,
        noise,
        core_points,
        core_grid,
    }
}

/// Uniform lat/lon binning. `candidates` returns a superset of the points
/// within `radius_km` of the query, provided the query itself lies within
/// `radius_km` of the indexed latitude range.
#[derive(Debug, Clone)]
struct GridIndex {
    dlat: f64,
    dlon: f64,
    lon_cells: i64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl GridIndex {
    fn new(points: &[Coordinate], radius_km: f64) -> Self {
        let dlat = (radius_km / EARTH_RADIUS_KM).to_degrees();
        let max_abs_lat = points.iter().map(|p| p.lat.abs()).fold(0.0f64, f64::max);
        // Any query within range of an indexed point has |lat| below this.
        let lat_bound = (max_abs_lat + dlat).min(90.0).to_radians();

        // hav(d) >= cos(lat1) cos(lat2) hav(dlon), so within the latitude bound
        // hav(dlon) <= hav(radius) / cos^2(lat_bound).
        let hav_r = (radius_km / EARTH_RADIUS_KM / 2.0).sin().powi(2);
        let cos_b = lat_bound.cos();
        let s = if cos_b > 1e-12 { hav_r / (cos_b * cos_b) } else { f64::INFINITY };
        let lon_cells = if s >= 1.0 {
            1
        } else {
            let min_width = 2.0 * s.sqrt().asin().to_degrees();
            ((360.0 / min_width).floor() as i64).max(1)
        };
        let dlon = 360.0 / lon_cells as f64;

        let mut grid = GridIndex { dlat, dlon, lon_cells, cells: HashMap::new() };
        for (k, p) in points.iter().enumerate() {
            let key = grid.cell(*p);
            grid.cells.entry(key).or_default().push(k);
        }
        grid
    }

    fn cell(&self, p: Coordinate) -> (i64, i64) {
        let lat = ((p.lat + 90.0) / self.dlat).floor() as i64;
        let lon = (((p.lon + 180.0) / self.dlon).floor() as i64).clamp(0, self.lon_cells - 1);
        (lat, lon)
    }

    fn candidates(&self, p: Coordinate) -> impl Iterator<Item = usize> + '_ {
        let (la, lo) = self.cell(p);
        let mut lons = vec![lo];
        for step in [-1, 1] {
            let c = (lo + step).rem_euclid(self.lon_cells);
            if !lons.contains(&c) {
                lons.push(c);
            }
        }
        (la - 1..=la + 1)
            .flat_map(move |a| lons.clone().into_iter().map(move |b| (a, b)))
            .filter_map(|key| self.cells.get(&key))
            .flat_map(|v| v.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(coords: &[(f64, f64)]) -> Vec<(ItemIdx, Coordinate)> {
        coords
            .iter()
            .enumerate()
            .map(|(i, &(lat, lon))| (ItemIdx(i as u32), Coordinate { lat, lon }))
            .collect()
    }

    #[test]
    fn identical_points_form_one_cluster() {
        let c = dbscan(&pts(&[(1.0, 1.0); 5]), DbscanParams::default());
        assert_eq!(c.len(), 1);
        assert_eq!(c.clusters()[0].members.len(), 5);
        assert!(c.noise().is_empty());
    }

    #[test]
    fn isolated_points_are_noise() {
        // ~100 km apart
        let c = dbscan(&pts(&[(0.0, 0.0), (0.0, 0.9)]), DbscanParams::default());
        assert!(c.is_empty());
        assert_eq!(c.noise().len(), 2);
        assert_eq!(c.cluster_of(ItemIdx(0)), None);
    }

    #[test]
    fn meridian_chain_is_one_cluster() {
        let step = (0.9 / EARTH_RADIUS_KM).to_degrees();
        let chain: Vec<(f64, f64)> = (0..4).map(|k| (k as f64 * step, 10.0)).collect();
        let c = dbscan(&pts(&chain), DbscanParams::default());
        assert_eq!(c.len(), 1);
        assert_eq!(c.clusters()[0].members.len(), 4);
        // the two interior points are core; the ends are border points
        assert_eq!(c.clusters()[0].core, vec![ItemIdx(1), ItemIdx(2)]);
    }

    #[test]
    fn cluster_lookup() {
        let mut coords = vec![(5.0, 5.0); 3];
        coords.push((40.0, 40.0));
        let c = dbscan(&pts(&coords), DbscanParams::default());
        assert_eq!(c.cluster_of(ItemIdx(0)), Some(ClusterId(0)));
        assert_eq!(c.cluster_of(ItemIdx(3)), None);
        assert_eq!(c.cluster_of(ItemIdx(99)), None);
        assert_eq!(c.locate(Coordinate { lat: 5.001, lon: 5.0 }), Some(ClusterId(0)));
        assert_eq!(c.locate(Coordinate { lat: 6.0, lon: 5.0 }), None);
    }

    #[test]
    fn clusters_across_the_antimeridian_are_found() {
        let c = dbscan(
            &pts(&[(0.0, 179.999), (0.0, -179.999), (0.0, 180.0)]),
            DbscanParams::default(),
        );
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn invalid_params() {
        assert!(DbscanParams::new(0.0, 3).is_err());
        assert!(DbscanParams::new(1.0, 0).is_err());
        assert!(DbscanParams::new(f64::NAN, 3).is_err());
    }

    #[test]
    fn empty_input() {
        let c = dbscan(&[], DbscanParams::default());
        assert!(c.is_empty() && c.noise().is_empty());
        assert_eq!(c.locate(Coordinate { lat: 0.0, lon: 0.0 }), None);
    }
}
