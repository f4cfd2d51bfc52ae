//! Sensor-field geometry: disk coverage, grid-sampled coverage ratio, the
//! partition of the field into disjoint subregions keyed by covering set, and
//! greedy cover sequencing.
//!
//! Coverage is evaluated on a uniform grid of sample points placed at cell
//! centers. A point is covered when it lies on or inside a sensing disk.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::geom::{NodeId, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("degenerate field: width={width} height={height}")]
    DegenerateField { width: f64, height: f64 },
    #[error("grid resolution {resolution} must be in (0, {max}]")]
    InvalidResolution { resolution: f64, max: f64 },
    #[error("base station ({x}, {y}) lies outside the field")]
    BaseStationOutside { x: f64, y: f64 },
    #[error("sensor {node}: {reason}")]
    InvalidPlacement { node: NodeId, reason: &'static str },
    #[error("members do not cover the field")]
    NotACover,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig {
    pub width: f64,
    pub height: f64,
    /// Side of one coverage sample cell, in meters.
    pub grid_resolution: f64,
    pub bs_position: Point,
}

impl FieldConfig {
    pub fn new(width: f64, height: f64, grid_resolution: f64, bs_position: Point) -> Result<Self, FieldError> {
        let field = Self { width, height, grid_resolution, bs_position };
        field.validate()?;
        Ok(field)
    }

    /// Field with the default grid (width / 200) and the base station at the center.
    pub fn square(side: f64) -> Self {
        Self {
            width: side,
            height: side,
            grid_resolution: side / 200.0,
            bs_position: Point::new(side / 2.0, side / 2.0),
        }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if !(self.width > 0.0 && self.height > 0.0) || !self.width.is_finite() || !self.height.is_finite() {
            return Err(FieldError::DegenerateField { width: self.width, height: self.height });
        }
        let max = self.width.min(self.height) / 10.0;
        if !(self.grid_resolution > 0.0 && self.grid_resolution <= max) {
            return Err(FieldError::InvalidResolution { resolution: self.grid_resolution, max });
        }
        if !self.contains(self.bs_position) {
            return Err(FieldError::BaseStationOutside { x: self.bs_position.x, y: self.bs_position.y });
        }
        Ok(())
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn grid(&self) -> SampleGrid {
        let nx = ((self.width / self.grid_resolution).round() as usize).max(1);
        let ny = ((self.height / self.grid_resolution).round() as usize).max(1);
        SampleGrid { nx, ny, dx: self.width / nx as f64, dy: self.height / ny as f64 }
    }
}

/// Row-major grid of cell-center sample points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl SampleGrid {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn point(&self, index: usize) -> Point {
        let row = index / self.nx;
        let col = index % self.nx;
        Point::new((col as f64 + 0.5) * self.dx, (row as f64 + 0.5) * self.dy)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Row-major indices of the sample points on or inside the disk.
    pub fn indices_in_disk(&self, center: Point, radius: f64) -> Vec<u32> {
        let r2 = radius * radius;
        let col_range = self.cell_span(center.x - radius, center.x + radius, self.dx, self.nx);
        let row_range = self.cell_span(center.y - radius, center.y + radius, self.dy, self.ny);
        let mut out = Vec::new();
        for row in row_range {
            for col in col_range.clone() {
                let idx = row * self.nx + col;
                if self.point(idx).distance_sq(center) <= r2 {
                    out.push(idx as u32);
                }
            }
        }
        out
    }

    fn cell_span(&self, lo: f64, hi: f64, step: f64, n: usize) -> std::ops::Range<usize> {
        // widen by one cell on each side; the exact distance test filters
        let first = ((lo / step).floor() - 1.0).max(0.0) as usize;
        let last = (((hi / step).ceil() + 1.0).max(0.0) as usize).min(n);
        first.min(last)..last
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorPlacement {
    pub node_id: NodeId,
    pub position: Point,
    /// Sensing disk radius.
    pub sensing_range: f64,
    pub radio_range: f64,
}

impl SensorPlacement {
    pub fn new(
        node_id: NodeId,
        position: Point,
        sensing_range: f64,
        radio_range: f64,
        field: &FieldConfig,
    ) -> Result<Self, FieldError> {
        if !(sensing_range > 0.0) {
            return Err(FieldError::InvalidPlacement { node: node_id, reason: "sensing range must be positive" });
        }
        if !(radio_range > 0.0) {
            return Err(FieldError::InvalidPlacement { node: node_id, reason: "radio range must be positive" });
        }
        if !field.contains(position) {
            return Err(FieldError::InvalidPlacement { node: node_id, reason: "position outside field" });
        }
        Ok(Self { node_id, position, sensing_range, radio_range })
    }
}

/// True iff `point` lies within the sensing disk of `placement` (boundary inclusive).
pub fn covers_point(placement: &SensorPlacement, point: Point) -> bool {
    placement.position.distance_sq(point) <= placement.sensing_range * placement.sensing_range
}

/// Precomputed sample-point membership of every sensing disk.
#[derive(Debug, Clone)]
pub struct CoverageIndex {
    grid: SampleGrid,
    ids: Vec<NodeId>,
    covered: Vec<Vec<u32>>,
}

impl CoverageIndex {
    pub fn build(placements: &[SensorPlacement], field: &FieldConfig) -> Result<Self, FieldError> {
        field.validate()?;
        let grid = field.grid();
        let ids = placements.iter().map(|p| p.node_id).collect();
        let covered = placements
            .iter()
            .map(|p| grid.indices_in_disk(p.position, p.sensing_range))
            .collect();
        Ok(Self { grid, ids, covered })
    }

    pub fn grid(&self) -> &SampleGrid {
        &self.grid
    }

    pub fn sensor_count(&self) -> usize {
        self.ids.len()
    }

    pub fn node_id(&self, slot: usize) -> NodeId {
        self.ids[slot]
    }

    pub fn slot_of(&self, id: NodeId) -> Option<usize> {
        self.ids.iter().position(|&n| n == id)
    }

    /// Sample indices covered by the sensor in `slot`.
    pub fn covered_by(&self, slot: usize) -> &[u32] {
        &self.covered[slot]
    }

    /// Grid estimate of the area (m²) of the sensor's disk inside the field.
    pub fn covered_area(&self, slot: usize) -> f64 {
        self.covered[slot].len() as f64 * self.grid.cell_area()
    }

    /// Per-sample count of covering sensors, restricted to the slots in `active`.
    pub fn cover_counts<I: IntoIterator<Item = usize>>(&self, active: I) -> Vec<u32> {
        let mut counts = vec![0u32; self.grid.len()];
        for slot in active {
            for &i in &self.covered[slot] {
                counts[i as usize] += 1;
            }
        }
        counts
    }
}

/// Fraction of grid sample points covered by at least one sensor.
pub fn coverage_ratio(placements: &[SensorPlacement], field: &FieldConfig) -> Result<f64, FieldError> {
    let index = CoverageIndex::build(placements, field)?;
    let counts = index.cover_counts(0..placements.len());
    let covered = counts.iter().filter(|&&c| c > 0).count();
    Ok(covered as f64 / counts.len() as f64)
}

/// True iff the sensors in `members` jointly cover every grid sample point.
pub fn is_cover(members: &BTreeSet<NodeId>, placements: &[SensorPlacement], field: &FieldConfig) -> bool {
    let Ok(index) = CoverageIndex::build(placements, field) else {
        return false;
    };
    let slots = (0..placements.len()).filter(|&s| members.contains(&placements[s].node_id));
    index.cover_counts(slots).iter().all(|&c| c > 0)
}

/// Maximal set of sample points covered by exactly the same sensors.
#[derive(Debug, Clone, PartialEq)]
pub struct SubRegion {
    pub region_id: usize,
    /// Sorted ids of the sensors covering every sample point of the region.
    pub covering_set: Vec<NodeId>,
    pub sample_indices: Vec<usize>,
    pub sample_points: Vec<Point>,
    /// Sample count times cell area, m².
    pub area_estimate: f64,
}

impl SubRegion {
    pub fn is_uncovered(&self) -> bool {
        self.covering_set.is_empty()
    }
}

/// Labels every sample point with its covering set and merges equal labels.
///
/// Regions are ordered by label; the uncovered region (empty label), when it
/// exists, is always first. With zero sensors the whole grid is one uncovered
/// region.
pub fn compute_subregions(placements: &[SensorPlacement], field: &FieldConfig) -> Result<Vec<SubRegion>, FieldError> {
    let index = CoverageIndex::build(placements, field)?;
    Ok(subregions_from_index(&index))
}

pub fn subregions_from_index(index: &CoverageIndex) -> Vec<SubRegion> {
    let grid = *index.grid();
    let mut labels: Vec<Vec<NodeId>> = vec![Vec::new(); grid.len()];
    for slot in 0..index.sensor_count() {
        let id = index.node_id(slot);
        for &i in index.covered_by(slot) {
            labels[i as usize].push(id);
        }
    }
    let mut groups: BTreeMap<Vec<NodeId>, Vec<usize>> = BTreeMap::new();
    for (i, mut label) in labels.into_iter().enumerate() {
        label.sort_unstable();
        groups.entry(label).or_default().push(i);
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(region_id, (covering_set, sample_indices))| SubRegion {
            region_id,
            sample_points: sample_indices.iter().map(|&i| grid.point(i)).collect(),
            area_estimate: sample_indices.len() as f64 * grid.cell_area(),
            covering_set,
            sample_indices,
        })
        .collect()
}

/// A sensor subset covering the whole field, `index`-th in a cover sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    pub index: usize,
    pub members: BTreeSet<NodeId>,
}

impl Cover {
    pub fn try_new(
        index: usize,
        members: BTreeSet<NodeId>,
        placements: &[SensorPlacement],
        field: &FieldConfig,
    ) -> Result<Self, FieldError> {
        if is_cover(&members, placements, field) {
            Ok(Self { index, members })
        } else {
            Err(FieldError::NotACover)
        }
    }
}

/// Greedy sequence of covers under per-node energy budgets.
///
/// Each cover is built by scanning uncovered sample points in row-major order
/// and adding, for each, the candidate with the most remaining energy among
/// the sensors covering it (ties to the lowest id). A sensor is a candidate
/// only while its remaining energy pays `per_round_cost`. Every member of a
/// finished cover is charged `per_round_cost`. The sequence stops at the first
/// cover that cannot be completed; an empty result means no cover exists.
pub fn greedy_cover_sequence(
    placements: &[SensorPlacement],
    field: &FieldConfig,
    residual_energies: &[f64],
    per_round_cost: f64,
) -> Vec<Cover> {
    assert_eq!(placements.len(), residual_energies.len(), "one residual energy per placement");
    let Ok(index) = CoverageIndex::build(placements, field) else {
        return Vec::new();
    };
    if !(per_round_cost > 0.0) {
        // zero cost admits unbounded sequences; nothing meaningful to return
        return Vec::new();
    }
    let grid_len = index.grid().len();
    let mut covering: Vec<Vec<usize>> = vec![Vec::new(); grid_len];
    for slot in 0..placements.len() {
        for &i in index.covered_by(slot) {
            covering[i as usize].push(slot);
        }
    }
    let mut remaining = residual_energies.to_vec();
    let mut sequence = Vec::new();
    'covers: loop {
        let mut covered = vec![false; grid_len];
        let mut chosen: Vec<usize> = Vec::new();
        for point in 0..grid_len {
            if covered[point] {
                continue;
            }
            let best = covering[point]
                .iter()
                .copied()
                .filter(|&s| remaining[s] >= per_round_cost && !chosen.contains(&s))
                .max_by(|&a, &b| {
                    remaining[a]
                        .total_cmp(&remaining[b])
                        .then_with(|| placements[b].node_id.cmp(&placements[a].node_id))
                });
            let Some(slot) = best else {
                break 'covers;
            };
            chosen.push(slot);
            for &i in index.covered_by(slot) {
                covered[i as usize] = true;
            }
        }
        for &slot in &chosen {
            remaining[slot] -= per_round_cost;
        }
        sequence.push(Cover {
            index: sequence.len(),
            members: chosen.iter().map(|&s| placements[s].node_id).collect(),
        });
    }
    sequence
}
