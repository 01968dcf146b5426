// SPDX-License-Identifier: Apache-2.0

//! Layered navigation belief over an occupancy grid.
//!
//! Three co-registered layers live on the grid:
//!
//! * **base**: map prior. Free 0.02, unknown 0, occupied 1, plus a linear
//!   halo in `[0.2, 0.6]` around small occupied components (objects).
//! * **motion**: evidence deposited along straight-line extrapolations of the
//!   base velocity at several horizons, blended by per-horizon weights.
//! * **synergy**: flood-fill amplification around cells where the map prior
//!   and motion evidence overlap, with a reset/increment/cap hysteresis.
//!
//! The combined belief is the point-wise maximum of the three layers.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, GuiderError, Result};
use crate::field::{CellIndex, Field, Mask, ScalarField};
use crate::raster::components_8;

const FREE_PRIOR: f64 = 0.02;
const UNKNOWN_PRIOR: f64 = 0.0;
const OCCUPIED_PRIOR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellState {
    Free,
    Unknown,
    Occupied,
}

/// Placement of a grid in the global frame. Cell `(x, y)` covers
/// `[ox + x·res, ox + (x+1)·res) × [oy + y·res, oy + (y+1)·res)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: (f64, f64),
}

impl GridGeometry {
    #[inline]
    pub fn cell_center(&self, x: usize, y: usize) -> (f64, f64) {
        (
            self.origin.0 + (x as f64 + 0.5) * self.resolution,
            self.origin.1 + (y as f64 + 0.5) * self.resolution,
        )
    }

    pub fn world_to_cell(&self, wx: f64, wy: f64) -> Option<CellIndex> {
        let fx = ((wx - self.origin.0) / self.resolution).floor();
        let fy = ((wy - self.origin.1) / self.resolution).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some(CellIndex::new(fx as usize, fy as usize))
    }

    /// Inclusive cell range whose centers may lie within the world box.
    fn cell_range(&self, min: (f64, f64), max: (f64, f64)) -> Option<(usize, usize, usize, usize)> {
        let to_idx = |w: f64, o: f64| (w - o) / self.resolution - 0.5;
        let x0 = to_idx(min.0, self.origin.0).floor().max(0.0);
        let y0 = to_idx(min.1, self.origin.1).floor().max(0.0);
        let x1 = to_idx(max.0, self.origin.0).ceil().min(self.width as f64 - 1.0);
        let y1 = to_idx(max.1, self.origin.1).ceil().min(self.height as f64 - 1.0);
        if x0 > x1 || y0 > y1 {
            return None;
        }
        Some((x0 as usize, y0 as usize, x1 as usize, y1 as usize))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    geometry: GridGeometry,
    cells: Field<CellState>,
}

impl OccupancyGrid {
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: (f64, f64),
        cells: Vec<CellState>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(GuiderError::Config("occupancy grid must have at least one cell".into()));
        }
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(GuiderError::Config(format!("grid resolution must be > 0, got {resolution}")));
        }
        let cells = Field::from_vec(width, height, cells)?;
        Ok(OccupancyGrid {
            geometry: GridGeometry {
                width,
                height,
                resolution,
                origin,
            },
            cells,
        })
    }

    pub fn geometry(&self) -> GridGeometry {
        self.geometry
    }

    pub fn cells(&self) -> &Field<CellState> {
        &self.cells
    }

    pub fn width(&self) -> usize {
        self.geometry.width
    }

    pub fn height(&self) -> usize {
        self.geometry.height
    }

    pub fn occupied_mask(&self) -> Mask {
        self.cells.map(|&c| c == CellState::Occupied)
    }
}

/// Navigation-phase hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavParams {
    /// Cell size used when building grids (m).
    pub cell_size: f64,
    pub gamma_base_free: f64,
    pub gamma_base_obj: f64,
    /// Object halo radius (m).
    pub inflation_radius: f64,
    /// Halo values `[far, adjacent]`.
    pub inflation_band: [f64; 2],
    /// Occupied components up to this many cells are treated as objects.
    pub max_object_cells: usize,
    pub prediction_step: f64,
    pub update_distance: f64,
    pub motion_radius: f64,
    /// Minimum motion evidence for a synergy seed (β).
    pub motion_threshold: f64,
    pub gamma_decay: f64,
    /// Motion blend factor λ.
    pub motion_blend: f64,
    /// Minimum base belief for a synergy seed.
    pub seed_base_threshold: f64,
    pub synergy_radius: f64,
    pub gamma_syn: f64,
    pub synergy_lower_bound: f64,
    pub synergy_reset: f64,
    pub synergy_increment: f64,
    pub synergy_cap: f64,
    /// Extrapolation horizons (s).
    pub horizons: Vec<f64>,
    /// Blend weight per horizon.
    pub horizon_weights: Vec<f64>,
}

impl Default for NavParams {
    fn default() -> Self {
        NavParams {
            cell_size: 0.05,
            gamma_base_free: 0.55,
            gamma_base_obj: 0.50,
            inflation_radius: 0.75,
            inflation_band: [0.2, 0.6],
            max_object_cells: 400,
            prediction_step: 0.10,
            update_distance: 0.30,
            motion_radius: 1.00,
            motion_threshold: 0.01,
            gamma_decay: 0.25,
            motion_blend: 0.40,
            seed_base_threshold: 0.2,
            synergy_radius: 0.15,
            gamma_syn: 0.75,
            synergy_lower_bound: 0.60,
            synergy_reset: 0.70,
            synergy_increment: 0.05,
            synergy_cap: 0.90,
            horizons: vec![5.0, 10.0, 30.0],
            horizon_weights: vec![0.60, 0.60, 0.85],
        }
    }
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(GuiderError::Config(format!("nav.{name} must be in (0, 1], got {v}")))
    }
}

impl NavParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_base_free", self.gamma_base_free),
            ("gamma_base_obj", self.gamma_base_obj),
            ("gamma_decay", self.gamma_decay),
            ("gamma_syn", self.gamma_syn),
            ("motion_blend", self.motion_blend),
            ("synergy_cap", self.synergy_cap),
        ] {
            unit_interval(name, v)?;
        }
        for w in &self.horizon_weights {
            unit_interval("horizon_weights", *w)?;
        }
        for (name, v) in [
            ("cell_size", self.cell_size),
            ("inflation_radius", self.inflation_radius),
            ("prediction_step", self.prediction_step),
            ("update_distance", self.update_distance),
            ("motion_radius", self.motion_radius),
            ("motion_threshold", self.motion_threshold),
            ("synergy_radius", self.synergy_radius),
            ("synergy_increment", self.synergy_increment),
        ] {
            ensure_positive("nav", name, v)?;
        }
        let [low, high] = self.inflation_band;
        if !(0.0 <= low && low < high && high <= 1.0) {
            return Err(GuiderError::Config(format!(
                "nav.inflation_band must satisfy 0 <= low < high <= 1, got [{low}, {high}]"
            )));
        }
        if !(self.synergy_lower_bound < self.synergy_reset && self.synergy_reset < self.synergy_cap) {
            return Err(GuiderError::Config(format!(
                "nav synergy bounds must satisfy lower_bound < reset < cap, got {} / {} / {}",
                self.synergy_lower_bound, self.synergy_reset, self.synergy_cap
            )));
        }
        if self.horizons.is_empty() || self.horizons.len() != self.horizon_weights.len() {
            return Err(GuiderError::Config(format!(
                "nav.horizons ({}) and nav.horizon_weights ({}) must be non-empty and equal length",
                self.horizons.len(),
                self.horizon_weights.len()
            )));
        }
        for h in &self.horizons {
            ensure_positive("nav", "horizons", *h)?;
        }
        if !(0.0..=1.0).contains(&self.seed_base_threshold) {
            return Err(GuiderError::Config(format!(
                "nav.seed_base_threshold must be in [0, 1], got {}",
                self.seed_base_threshold
            )));
        }
        Ok(())
    }
}

/// One base odometry sample in the global frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseOdometry {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

/// The three belief layers plus the bookkeeping needed to update them.
#[derive(Debug, Clone, PartialEq)]
pub struct NavBeliefState {
    geometry: GridGeometry,
    base: ScalarField,
    motion: ScalarField,
    synergy: ScalarField,
    base_initial: ScalarField,
    object_region: Mask,
    occupied: Mask,
    last_update_pose: Option<(f64, f64)>,
    update_count: u64,
}

impl NavBeliefState {
    /// Piecewise map prior followed by object inflation; the result is
    /// snapshotted as the decay target.
    pub fn init(grid: &OccupancyGrid, params: &NavParams) -> Result<Self> {
        params.validate()?;
        let geometry = grid.geometry();
        if geometry.width == 0 || geometry.height == 0 {
            return Err(GuiderError::Config("occupancy grid is empty".into()));
        }
        let base = grid.cells().map(|c| match c {
            CellState::Free => FREE_PRIOR,
            CellState::Unknown => UNKNOWN_PRIOR,
            CellState::Occupied => OCCUPIED_PRIOR,
        });
        let zeros = ScalarField::filled(geometry.width, geometry.height, 0.0);
        let mut state = NavBeliefState {
            geometry,
            base_initial: base.clone(),
            base,
            motion: zeros.clone(),
            synergy: zeros,
            object_region: Mask::filled(geometry.width, geometry.height, false),
            occupied: grid.occupied_mask(),
            last_update_pose: None,
            update_count: 0,
        };
        state.inflate_objects(grid, params);
        state.base_initial = state.base.clone();
        Ok(state)
    }

    /// Raise free cells near object-like occupied components to a linear
    /// halo: `band[1]` when touching the object, `band[0]` at
    /// `inflation_radius`. Distance is the gap between cell squares.
    pub fn inflate_objects(&mut self, grid: &OccupancyGrid, params: &NavParams) {
        let geo = self.geometry;
        let res = geo.resolution;
        let [low, high] = params.inflation_band;
        let radius = params.inflation_radius;
        let reach = (radius / res).ceil() as i64 + 1;
        let occupied = grid.occupied_mask();
        let cells = grid.cells();

        for component in components_8(&occupied) {
            if component.len() > params.max_object_cells {
                continue;
            }
            let mut in_comp = vec![false; occupied.len()];
            for &i in &component {
                in_comp[i] = true;
                self.object_region[i] = true;
            }
            let w = geo.width as i64;
            let is_member = |x: i64, y: i64| occupied.in_bounds(x, y) && in_comp[(y * w + x) as usize];
            for &i in &component {
                let (cx, cy) = ((i % geo.width) as i64, (i / geo.width) as i64);
                let interior = (-1..=1).all(|dy| (-1..=1).all(|dx| is_member(cx + dx, cy + dy)));
                if interior {
                    continue;
                }
                for dy in -reach..=reach {
                    for dx in -reach..=reach {
                        let (tx, ty) = (cx + dx, cy + dy);
                        if !occupied.in_bounds(tx, ty) {
                            continue;
                        }
                        let t = (ty * w + tx) as usize;
                        if cells[t] != CellState::Free {
                            continue;
                        }
                        let gx = (dx.abs() - 1).max(0) as f64;
                        let gy = (dy.abs() - 1).max(0) as f64;
                        let gap = (gx * gx + gy * gy).sqrt() * res;
                        if gap > radius + 1e-9 {
                            continue;
                        }
                        let value = (high - (high - low) * gap / radius).max(low);
                        if value > self.base[t] {
                            self.base[t] = value;
                        }
                        self.object_region[t] = true;
                    }
                }
            }
        }
    }

    /// Relax the base layer toward its snapshot and shrink the motion and
    /// synergy layers multiplicatively.
    pub fn decay_layers(&mut self, params: &NavParams) {
        for i in 0..self.base.len() {
            let gamma = if self.object_region[i] {
                params.gamma_base_obj
            } else {
                params.gamma_base_free
            };
            let init = self.base_initial[i];
            self.base[i] = init + gamma * (self.base[i] - init);
        }
        for v in self.motion.data_mut() {
            *v *= params.gamma_decay;
        }
        for v in self.synergy.data_mut() {
            *v *= params.gamma_syn;
        }
    }

    /// Whether `odo` has moved far enough from the last accepted pose.
    /// The first sample is always accepted.
    pub fn needs_update(&self, odo: &BaseOdometry, params: &NavParams) -> bool {
        match self.last_update_pose {
            None => true,
            Some((lx, ly)) => (odo.x - lx).hypot(odo.y - ly) >= params.update_distance,
        }
    }

    /// Deposit blended radial evidence: `motion ← clip(motion + λ·Ẽ, 0, 1)`.
    /// Returns `false` (and changes nothing) below the update distance.
    pub fn update_motion_layer(&mut self, odo: &BaseOdometry, params: &NavParams) -> bool {
        if !self.needs_update(odo, params) {
            return false;
        }
        let lambda = params.motion_blend;
        for_each_motion_evidence(&self.geometry, odo, params, |i, e| {
            let v = self.motion[i] + lambda * e;
            self.motion[i] = v.clamp(0.0, 1.0);
        });
        self.last_update_pose = Some((odo.x, odo.y));
        self.update_count += 1;
        true
    }

    /// Flood-fill spread from every seed cell out to `synergy_radius`,
    /// applying the hysteresis rule once per visit.
    pub fn update_synergy_layer(&mut self, params: &NavParams) {
        let geo = self.geometry;
        let (w, h) = (geo.width as i64, geo.height as i64);
        let radius_cells = params.synergy_radius / geo.resolution;
        let r2 = radius_cells * radius_cells + 1e-9;

        let seeds: Vec<usize> = (0..self.base.len())
            .filter(|&i| self.base[i] >= params.seed_base_threshold && self.motion[i] >= params.motion_threshold)
            .collect();
        if seeds.is_empty() {
            return;
        }

        // Every cell of a lattice disk clipped to the grid connects to its
        // centre through a monotone path inside the disk, so the 8-connected
        // flood fill from a seed reaches exactly these offsets.
        let reach = r2.sqrt().floor() as i64;
        let offsets: Vec<(i64, i64)> = (-reach..=reach)
            .flat_map(|dy| (-reach..=reach).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| ((dx * dx + dy * dy) as f64) <= r2)
            .collect();
        for &seed in &seeds {
            let (sx, sy) = ((seed % geo.width) as i64, (seed / geo.width) as i64);
            for &(dx, dy) in &offsets {
                let (nx, ny) = (sx + dx, sy + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let j = (ny * w + nx) as usize;
                self.synergy[j] = synergy_visit(self.synergy[j], params);
            }
        }
    }

    /// One accepted update: decay, deposit motion evidence, spread synergy.
    /// Returns whether the sample passed the update-distance gate.
    pub fn observe(&mut self, odo: &BaseOdometry, params: &NavParams) -> bool {
        if !self.needs_update(odo, params) {
            return false;
        }
        self.decay_layers(params);
        self.update_motion_layer(odo, params);
        self.update_synergy_layer(params);
        true
    }

    pub fn combined_belief(&self) -> ScalarField {
        let data = self
            .base
            .iter()
            .zip(self.motion.iter())
            .zip(self.synergy.iter())
            .map(|((&b, &m), &s)| b.max(m).max(s))
            .collect();
        ScalarField::from_vec(self.base.width(), self.base.height(), data).expect("layers share a shape")
    }

    /// Peak of the combined belief over non-occupied cells. Exact ties on the
    /// combined value go to the larger layer sum, then the lower row-major
    /// index.
    pub fn predict_area(&self) -> Option<(CellIndex, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..self.base.len() {
            if self.occupied[i] {
                continue;
            }
            let (b, m, s) = (self.base[i], self.motion[i], self.synergy[i]);
            let combined = b.max(m).max(s);
            let sum = b + m + s;
            let better = match best {
                None => true,
                Some((_, bc, bs)) => combined > bc || (combined == bc && sum > bs),
            };
            if better {
                best = Some((i, combined, sum));
            }
        }
        best.map(|(i, c, _)| (self.base.cell_of(i), c))
    }

    pub fn geometry(&self) -> GridGeometry {
        self.geometry
    }

    pub fn base_layer(&self) -> &ScalarField {
        &self.base
    }

    pub fn motion_layer(&self) -> &ScalarField {
        &self.motion
    }

    pub fn synergy_layer(&self) -> &ScalarField {
        &self.synergy
    }

    pub fn base_layer_initial(&self) -> &ScalarField {
        &self.base_initial
    }

    pub fn object_region(&self) -> &Mask {
        &self.object_region
    }

    pub fn last_update_pose(&self) -> Option<(f64, f64)> {
        self.last_update_pose
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    /// Direct layer access for scripted experiments and bindings.
    pub fn layers_mut(&mut self) -> (&mut ScalarField, &mut ScalarField, &mut ScalarField) {
        (&mut self.base, &mut self.motion, &mut self.synergy)
    }
}

/// Synergy hysteresis for a single visit.
#[inline]
pub fn synergy_visit(value: f64, params: &NavParams) -> f64 {
    if value < params.synergy_lower_bound {
        params.synergy_reset
    } else {
        (value + params.synergy_increment).min(params.synergy_cap)
    }
}

/// Radial evidence `max(0, 1 − dist / d_max)`.
#[inline]
pub fn radial_evidence(dist: f64, motion_radius: f64) -> f64 {
    (1.0 - dist / motion_radius).max(0.0)
}

/// Calls `f(linear_index, Ẽ)` for every cell with non-zero blended evidence.
///
/// Poses are sampled every `prediction_step` over `(0, τ]`. Along a straight
/// extrapolation the squared distance to a cell is a parabola in `t`, so the
/// nearest sample is the one closest to the unconstrained minimiser.
fn for_each_motion_evidence<F: FnMut(usize, f64)>(
    geo: &GridGeometry,
    odo: &BaseOdometry,
    params: &NavParams,
    mut f: F,
) {
    let dmax = params.motion_radius;
    let dmax2 = dmax * dmax * (1.0 + 1e-9);
    let dt = params.prediction_step;
    let speed2 = odo.vx * odo.vx + odo.vy * odo.vy;
    let stationary = speed2 <= 1e-18;
    let samples: Vec<usize> = params
        .horizons
        .iter()
        .map(|&tau| ((tau / dt).round() as usize).max(1))
        .collect();
    let longest = *samples.iter().max().unwrap_or(&1) as f64 * dt;

    let (mut lo, mut hi) = ((odo.x, odo.y), (odo.x, odo.y));
    if !stationary {
        for t in [dt, longest] {
            let (px, py) = (odo.x + odo.vx * t, odo.y + odo.vy * t);
            lo = (lo.0.min(px), lo.1.min(py));
            hi = (hi.0.max(px), hi.1.max(py));
        }
    }
    let Some((x0, y0, x1, y1)) = geo.cell_range((lo.0 - dmax, lo.1 - dmax), (hi.0 + dmax, hi.1 + dmax)) else {
        return;
    };

    for y in y0..=y1 {
        for x in x0..=x1 {
            let (cx, cy) = geo.cell_center(x, y);
            if !stationary {
                let (rx, ry) = (cx - odo.x, cy - odo.y);
                let along = rx * odo.vx + ry * odo.vy;
                if rx * rx + ry * ry - along * along / speed2 >= dmax2 {
                    continue;
                }
            }
            let t_star = if stationary {
                0.0
            } else {
                ((cx - odo.x) * odo.vx + (cy - odo.y) * odo.vy) / speed2
            };
            let mut blended = 0.0f64;
            let mut cached: Option<(f64, f64)> = None;
            for (n, &weight) in samples.iter().zip(params.horizon_weights.iter()) {
                let k = if stationary {
                    0.0
                } else {
                    (t_star / dt).round().clamp(1.0, *n as f64)
                };
                let dist = match cached {
                    Some((ck, d)) if ck == k => d,
                    _ => {
                        let t = k * dt;
                        let d = (cx - (odo.x + odo.vx * t)).hypot(cy - (odo.y + odo.vy * t));
                        cached = Some((k, d));
                        d
                    }
                };
                blended = blended.max(weight * radial_evidence(dist, dmax));
            }
            if blended > 0.0 {
                f(y * geo.width + x, blended);
            }
        }
    }
}

/// Blended multi-horizon evidence `Ẽ` for one odometry sample, as a field.
pub fn motion_evidence(geo: &GridGeometry, odo: &BaseOdometry, params: &NavParams) -> ScalarField {
    let mut out = ScalarField::filled(geo.width, geo.height, 0.0);
    for_each_motion_evidence(geo, odo, params, |i, e| out[i] = e);
    out
}

/// Peak of a scalar field; ties go to the lowest row-major index.
pub fn predicted_area(field: &ScalarField) -> Option<(CellIndex, f64)> {
    field.argmax()
}
