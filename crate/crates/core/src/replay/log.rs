// SPDX-License-Identifier: Apache-2.0

//! Session log directory: `manifest.json`, JSON-lines pose streams and
//! PGM image assets.
//!
//! Occupancy grids follow the map-server convention: 0 is occupied, 254
//! free, anything else unknown, and image row 0 is the top (largest y) row.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codec::{dequantize, read_jsonl, read_pgm, read_text, write_jsonl, write_pgm, Pgm};
use crate::error::{GuiderError, Result};
use crate::field::{Field, Mask, ScalarField};
use crate::nav_belief::{BaseOdometry, CellState, OccupancyGrid};
use crate::scene_geometry::{CameraIntrinsics, RigidTransform, Vec3};

pub const FORMAT: &str = "guider-session/1";
pub const MANIFEST: &str = "manifest.json";

/// Occupancy pixel values.
pub const PGM_OCCUPIED: u16 = 0;
pub const PGM_FREE: u16 = 254;
pub const PGM_UNKNOWN: u16 = 205;

/// One pose sample: `{t, frame, x, y, z, vx, vy, vz}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSample {
    pub t: f64,
    pub frame: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
}

impl PoseSample {
    pub fn position(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn base_odometry(&self) -> BaseOdometry {
        BaseOdometry {
            t: self.t,
            x: self.x,
            y: self.y,
            vx: self.vx,
            vy: self.vy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRef {
    pub image: String,
    pub resolution: f64,
    /// World position of the lower-left corner of cell (0, 0).
    pub origin: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub name: String,
    /// Polygon vertices in the grid frame.
    pub polygon: Vec<[f64; 2]>,
}

impl Region {
    /// Even-odd point-in-polygon test.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let p = &self.polygon;
        let mut inside = false;
        let mut j = p.len() - 1;
        for i in 0..p.len() {
            let ([xi, yi], [xj, yj]) = (p[i], p[j]);
            if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavigationPhase {
    pub grid: GridRef,
    pub odometry: String,
    pub regions: Vec<Region>,
    /// Name of the region the operator finally drives to.
    pub ground_truth: String,
    /// Instant the base reaches the target.
    pub contact_t: f64,
    /// Scripted instant the operator is told to change goal, if any.
    #[serde(default)]
    pub redirect_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthRef {
    pub image: String,
    /// Metres per 16-bit unit; 0 marks a missing measurement.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRef {
    pub name: String,
    pub mask: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManipulationPhase {
    pub intrinsics: CameraIntrinsics,
    /// Camera-to-TCP-frame transform as three `[R | t]` rows.
    pub camera_pose: [[f64; 4]; 3],
    pub depth: DepthRef,
    /// 16-bit saliency map, full scale = 1.
    pub saliency: String,
    pub instances: Vec<InstanceRef>,
    pub tcp: String,
    /// Name of the instance finally grasped.
    pub ground_truth: String,
    /// Instant of the grasp command.
    pub contact_t: f64,
    #[serde(default)]
    pub redirect_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub navigation: Option<NavigationPhase>,
    #[serde(default)]
    pub manipulation: Option<ManipulationPhase>,
}

/// Decoded manipulation assets.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub mask: Mask,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavigationData {
    pub grid: OccupancyGrid,
    pub odometry: Vec<PoseSample>,
    pub regions: Vec<Region>,
    pub ground_truth: usize,
    pub contact_t: f64,
    pub redirect_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManipulationData {
    pub intrinsics: CameraIntrinsics,
    pub camera_pose: RigidTransform,
    pub depth: ScalarField,
    pub saliency: ScalarField,
    pub instances: Vec<Instance>,
    pub tcp: Vec<PoseSample>,
    pub ground_truth: usize,
    pub contact_t: f64,
    pub redirect_t: Option<f64>,
}

/// A fully loaded and validated session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub name: String,
    pub seed: Option<u64>,
    pub navigation: Option<NavigationData>,
    pub manipulation: Option<ManipulationData>,
}

fn check_stream(path: &Path, samples: &[PoseSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(GuiderError::parse(path, 1, "stream is empty"));
    }
    for (i, s) in samples.iter().enumerate() {
        let finite = [s.t, s.x, s.y, s.z, s.vx, s.vy, s.vz].iter().all(|v| v.is_finite());
        if !finite {
            return Err(GuiderError::parse(path, i + 1, "non-finite value"));
        }
        if i > 0 && !(s.t > samples[i - 1].t) {
            return Err(GuiderError::parse(path, i + 1, format!("timestamp {} is not increasing", s.t)));
        }
    }
    Ok(())
}

fn check_event(what: &str, contact_t: f64, redirect_t: Option<f64>, samples: &[PoseSample]) -> Result<()> {
    let start = samples[0].t;
    if !(contact_t >= start) {
        return Err(GuiderError::Input(format!(
            "{what} contact time {contact_t} precedes the stream start {start}"
        )));
    }
    if let Some(r) = redirect_t {
        if !(start..=contact_t).contains(&r) {
            return Err(GuiderError::Input(format!("{what} redirect time {r} lies outside [{start}, {contact_t}]")));
        }
    }
    Ok(())
}

fn find_truth(what: &str, names: impl Iterator<Item = String>, truth: &str) -> Result<usize> {
    let names: Vec<String> = names.collect();
    if let Some(dup) = names.iter().enumerate().find(|(i, n)| names[..*i].contains(n)) {
        return Err(GuiderError::Input(format!("{what} name {:?} appears twice", dup.1)));
    }
    names
        .iter()
        .position(|n| n == truth)
        .ok_or_else(|| GuiderError::Input(format!("{what} ground truth {truth:?} is not among {names:?}")))
}

pub fn grid_from_pgm(img: &Pgm, grid: &GridRef) -> Result<OccupancyGrid> {
    let (w, h) = (img.pixels.width(), img.pixels.height());
    let mut cells = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let v = *img.pixels.get(x, h - 1 - y);
            cells.push(match v {
                PGM_OCCUPIED => CellState::Occupied,
                PGM_FREE => CellState::Free,
                _ => CellState::Unknown,
            });
        }
    }
    OccupancyGrid::new(w, h, grid.resolution, (grid.origin[0], grid.origin[1]), cells)
}

pub fn grid_to_pgm(grid: &OccupancyGrid) -> Pgm {
    let (w, h) = (grid.width(), grid.height());
    let mut data = Vec::with_capacity(w * h);
    for row in 0..h {
        for x in 0..w {
            data.push(match grid.cells().get(x, h - 1 - row) {
                CellState::Occupied => PGM_OCCUPIED,
                CellState::Free => PGM_FREE,
                CellState::Unknown => PGM_UNKNOWN,
            });
        }
    }
    Pgm {
        maxval: 255,
        pixels: Field::from_vec(w, h, data).expect("shape"),
    }
}

pub fn mask_from_pgm(img: &Pgm) -> Mask {
    let half = img.maxval / 2;
    img.pixels.map(|&v| v > half)
}

pub fn mask_to_pgm(mask: &Mask) -> Pgm {
    Pgm {
        maxval: 255,
        pixels: mask.map(|&b| if b { 255 } else { 0 }),
    }
}

/// Resolve an asset name against the log directory, refusing escapes.
fn asset(dir: &Path, name: &str) -> Result<PathBuf> {
    let p = Path::new(name);
    if p.is_absolute() || p.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
        return Err(GuiderError::Input(format!("asset path {name:?} must stay inside the log directory")));
    }
    Ok(dir.join(p))
}

/// Missing inputs are input errors, not environment failures.
fn missing_as_input(e: GuiderError) -> GuiderError {
    match e {
        GuiderError::Io { path, source } if source.kind() == std::io::ErrorKind::NotFound => {
            GuiderError::Input(format!("{} does not exist", path.display()))
        }
        other => other,
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = read_text(&path).map_err(missing_as_input)?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| GuiderError::parse(&path, e.line(), e.to_string()))?;
    if m.format != FORMAT {
        return Err(GuiderError::parse(&path, 1, format!("unsupported format {:?}, expected {FORMAT:?}", m.format)));
    }
    if m.navigation.is_none() && m.manipulation.is_none() {
        return Err(GuiderError::parse(&path, 1, "log has neither a navigation nor a manipulation phase"));
    }
    Ok(m)
}

impl SessionLog {
    pub fn load(dir: &Path) -> Result<Self> {
        let m = read_manifest(dir)?;
        let load = || -> Result<SessionLog> {
            let navigation = m.navigation.as_ref().map(|n| load_navigation(dir, n)).transpose()?;
            let manipulation = m.manipulation.as_ref().map(|p| load_manipulation(dir, p)).transpose()?;
            Ok(SessionLog {
                name: m.name.clone(),
                seed: m.seed,
                navigation,
                manipulation,
            })
        };
        load().map_err(missing_as_input)
    }
}

fn load_navigation(dir: &Path, n: &NavigationPhase) -> Result<NavigationData> {
    let grid = grid_from_pgm(&read_pgm(&asset(dir, &n.grid.image)?)?, &n.grid)?;
    let odo_path = asset(dir, &n.odometry)?;
    let odometry: Vec<PoseSample> = read_jsonl(&odo_path)?;
    check_stream(&odo_path, &odometry)?;
    for r in &n.regions {
        if r.polygon.len() < 3 {
            return Err(GuiderError::Input(format!("region {:?} needs at least three vertices", r.name)));
        }
    }
    let ground_truth = find_truth("region", n.regions.iter().map(|r| r.name.clone()), &n.ground_truth)?;
    check_event("navigation", n.contact_t, n.redirect_t, &odometry)?;
    Ok(NavigationData {
        grid,
        odometry,
        regions: n.regions.clone(),
        ground_truth,
        contact_t: n.contact_t,
        redirect_t: n.redirect_t,
    })
}

fn load_manipulation(dir: &Path, p: &ManipulationPhase) -> Result<ManipulationData> {
    p.intrinsics.validate()?;
    let (w, h) = (p.intrinsics.width, p.intrinsics.height);
    let sized = |img: Pgm, what: &str| -> Result<Pgm> {
        if img.pixels.width() != w || img.pixels.height() != h {
            return Err(GuiderError::Input(format!(
                "{what} is {}x{}, camera is {w}x{h}",
                img.pixels.width(),
                img.pixels.height()
            )));
        }
        Ok(img)
    };
    if !(p.depth.scale > 0.0) {
        return Err(GuiderError::Input("depth scale must be > 0".into()));
    }
    let depth = dequantize(&sized(read_pgm(&asset(dir, &p.depth.image)?)?, "depth")?, p.depth.scale, true);
    let sal = sized(read_pgm(&asset(dir, &p.saliency)?)?, "saliency")?;
    let saliency = dequantize(&sal, 1.0 / sal.maxval as f64, false);
    let mut instances = Vec::with_capacity(p.instances.len());
    for inst in &p.instances {
        if !(0.0..=1.0).contains(&inst.confidence) {
            return Err(GuiderError::Input(format!("instance {:?} confidence outside [0, 1]", inst.name)));
        }
        let img = sized(read_pgm(&asset(dir, &inst.mask)?)?, &inst.mask)?;
        instances.push(Instance {
            name: inst.name.clone(),
            mask: mask_from_pgm(&img),
            confidence: inst.confidence,
        });
    }
    let tcp_path = asset(dir, &p.tcp)?;
    let tcp: Vec<PoseSample> = read_jsonl(&tcp_path)?;
    check_stream(&tcp_path, &tcp)?;
    let ground_truth = find_truth("instance", p.instances.iter().map(|i| i.name.clone()), &p.ground_truth)?;
    check_event("manipulation", p.contact_t, p.redirect_t, &tcp)?;
    Ok(ManipulationData {
        intrinsics: p.intrinsics.clone(),
        camera_pose: RigidTransform::from_rows(p.camera_pose)?,
        depth,
        saliency,
        instances,
        tcp,
        ground_truth,
        contact_t: p.contact_t,
        redirect_t: p.redirect_t,
    })
}

/// In-memory assets of a log about to be written.
#[derive(Debug, Clone)]
pub struct LogAssets {
    pub manifest: Manifest,
    pub pgms: Vec<(String, Pgm)>,
    pub streams: Vec<(String, Vec<PoseSample>)>,
}

pub fn write_log(dir: &Path, assets: &LogAssets) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| GuiderError::io(dir, e))?;
    let json = serde_json::to_string_pretty(&assets.manifest).expect("manifest serializes");
    crate::codec::write_text(&dir.join(MANIFEST), &(json + "\n"))?;
    for (name, img) in &assets.pgms {
        write_pgm(&asset(dir, name)?, img)?;
    }
    for (name, samples) in &assets.streams {
        write_jsonl(&asset(dir, name)?, samples)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_membership() {
        let r = Region {
            name: "a".into(),
            polygon: vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]],
        };
        assert!(r.contains(1.0, 0.5));
        assert!(!r.contains(2.5, 0.5));
        assert!(!r.contains(1.0, -0.1));
    }

    #[test]
    fn grid_pgm_roundtrip_flips_rows() {
        let cells = vec![
            CellState::Occupied,
            CellState::Free,
            CellState::Unknown,
            CellState::Free,
            CellState::Free,
            CellState::Occupied,
        ];
        let g = OccupancyGrid::new(3, 2, 0.1, (1.0, 2.0), cells).unwrap();
        let img = grid_to_pgm(&g);
        // Grid row 0 is the bottom image row.
        assert_eq!(*img.pixels.get(0, 1), PGM_OCCUPIED);
        let back = grid_from_pgm(
            &img,
            &GridRef {
                image: "g.pgm".into(),
                resolution: 0.1,
                origin: [1.0, 2.0],
            },
        )
        .unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn missing_manifest_is_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = SessionLog::load(dir.path()).unwrap_err();
        assert!(matches!(err, GuiderError::Input(_)), "{err}");
    }

    #[test]
    fn asset_paths_cannot_escape() {
        assert!(asset(Path::new("/tmp/x"), "../y").is_err());
        assert!(asset(Path::new("/tmp/x"), "/etc/passwd").is_err());
        assert!(asset(Path::new("/tmp/x"), "a/b.pgm").is_ok());
    }
}
