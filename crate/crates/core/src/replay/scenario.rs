// SPDX-License-Identifier: Apache-2.0

//! Synthetic sessions mirroring five task variants: a direct drive and
//! grasp, a base redirection, a manipulator redirection, a tool grasp and a
//! combined redirection onto the one graspable object of an infeasible pair.
//!
//! Every template shares one 10 m × 10 m room with four tables (R1 to R4).
//! The manipulation scene is viewed by a downward-looking camera 1 m above a
//! table top, expressed in the robot base frame.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::log::{
    grid_to_pgm, mask_to_pgm, DepthRef, GridRef, InstanceRef, LogAssets, ManipulationPhase, Manifest,
    NavigationPhase, PoseSample, Region, FORMAT,
};
use crate::codec::{quantize_u16, Pgm};
use crate::error::{ensure_positive, GuiderError, Result};
use crate::field::{Mask, ScalarField};
use crate::nav_belief::{CellState, OccupancyGrid};
use crate::raster::squared_distance_to_background;
use crate::rng::stage_rng;
use crate::scene_geometry::{CameraIntrinsics, RigidTransform, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Template {
    T1Direct,
    T2BaseRedirect,
    T3ManipRedirect,
    T4Tool,
    T5Infeasible,
}

impl Template {
    pub const ALL: [Template; 5] = [
        Template::T1Direct,
        Template::T2BaseRedirect,
        Template::T3ManipRedirect,
        Template::T4Tool,
        Template::T5Infeasible,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Template::T1Direct => "t1_direct",
            Template::T2BaseRedirect => "t2_base_redirect",
            Template::T3ManipRedirect => "t3_manip_redirect",
            Template::T4Tool => "t4_tool",
            Template::T5Infeasible => "t5_infeasible",
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Template {
    type Err = GuiderError;

    fn from_str(s: &str) -> Result<Self> {
        Template::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Template::ALL.iter().map(|t| t.name()).collect();
                GuiderError::Config(format!("unknown template {s:?}, expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    /// Cruise speed of the base, m/s.
    pub base_speed: f64,
    pub base_accel: f64,
    /// Odometry rate, Hz.
    pub base_rate: f64,
    pub base_position_noise: f64,
    pub base_velocity_noise: f64,
    /// Pause at an intermediate goal before a base redirection, s.
    pub redirect_dwell: f64,
    /// Time between the base stopping and the manipulation stream starting.
    pub scan_duration: f64,
    /// TCP stream rate, Hz.
    pub tcp_rate: f64,
    pub tcp_noise: f64,
    pub depth_noise: f64,
    pub saliency_noise: f64,
    pub image_width: usize,
    pub image_height: usize,
    pub focal_length: f64,
    /// Camera height above the table top, m.
    pub camera_height: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            base_speed: 0.6,
            base_accel: 1.0,
            base_rate: 10.0,
            base_position_noise: 0.005,
            base_velocity_noise: 0.01,
            redirect_dwell: 2.0,
            scan_duration: 5.0,
            tcp_rate: 50.0,
            tcp_noise: 0.0002,
            depth_noise: 0.001,
            saliency_noise: 0.02,
            image_width: 640,
            image_height: 480,
            focal_length: 600.0,
            camera_height: 1.15,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("base_speed", self.base_speed),
            ("base_accel", self.base_accel),
            ("base_rate", self.base_rate),
            ("tcp_rate", self.tcp_rate),
            ("focal_length", self.focal_length),
            ("camera_height", self.camera_height),
        ] {
            ensure_positive("scenario", name, v)?;
        }
        for (name, v) in [
            ("base_position_noise", self.base_position_noise),
            ("base_velocity_noise", self.base_velocity_noise),
            ("redirect_dwell", self.redirect_dwell),
            ("scan_duration", self.scan_duration),
            ("tcp_noise", self.tcp_noise),
            ("depth_noise", self.depth_noise),
            ("saliency_noise", self.saliency_noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(GuiderError::Config(format!("scenario.{name} must be >= 0, got {v}")));
            }
        }
        if self.image_width < 64 || self.image_height < 64 {
            return Err(GuiderError::Config("scenario image must be at least 64x64".into()));
        }
        Ok(())
    }
}

const ROOM: f64 = 10.0;
const WALL: f64 = 0.1;
const START: (f64, f64) = (1.2, 1.2);
/// Region polygons extend this far past the table edges.
const REGION_MARGIN: f64 = 0.9;
/// Stopping distance from a table edge.
const STANDOFF: f64 = 0.55;
const TABLE_TOP_Z: f64 = 0.75;
/// Horizontal offset of the camera axis from the base origin, m.
const CAMERA_X: f64 = 0.7;

struct Table {
    name: &'static str,
    center: (f64, f64),
    half: (f64, f64),
}

const TABLES: [Table; 4] = [
    Table { name: "R1", center: (2.0, 8.5), half: (0.4, 0.3) },
    Table { name: "R2", center: (5.0, 8.5), half: (0.4, 0.3) },
    Table { name: "R3", center: (8.5, 4.5), half: (0.3, 0.4) },
    Table { name: "R4", center: (8.5, 1.5), half: (0.3, 0.4) },
];

fn table(name: &str) -> &'static Table {
    TABLES.iter().find(|t| t.name == name).expect("known table")
}

/// Stopping point in front of a table, on the side facing the room centre.
fn approach(name: &str) -> (f64, f64) {
    let t = table(name);
    if t.half.0 < t.half.1 {
        (t.center.0 - t.half.0 - STANDOFF, t.center.1)
    } else {
        (t.center.0, t.center.1 - t.half.1 - STANDOFF)
    }
}

pub fn room_grid(resolution: f64) -> Result<OccupancyGrid> {
    let n = (ROOM / resolution).round() as usize;
    let mut cells = vec![CellState::Free; n * n];
    for y in 0..n {
        for x in 0..n {
            let (cx, cy) = ((x as f64 + 0.5) * resolution, (y as f64 + 0.5) * resolution);
            let wall = cx < WALL || cy < WALL || cx > ROOM - WALL || cy > ROOM - WALL;
            let furniture = TABLES
                .iter()
                .any(|t| (cx - t.center.0).abs() <= t.half.0 && (cy - t.center.1).abs() <= t.half.1);
            if wall || furniture {
                cells[y * n + x] = CellState::Occupied;
            }
        }
    }
    OccupancyGrid::new(n, n, resolution, (0.0, 0.0), cells)
}

pub fn regions() -> Vec<Region> {
    TABLES
        .iter()
        .map(|t| {
            let (x0, x1) = (t.center.0 - t.half.0 - REGION_MARGIN, t.center.0 + t.half.0 + REGION_MARGIN);
            let (y0, y1) = (t.center.1 - t.half.1 - REGION_MARGIN, t.center.1 + t.half.1 + REGION_MARGIN);
            Region {
                name: t.name.into(),
                polygon: vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]],
            }
        })
        .collect()
}

/// Trapezoidal speed profile over a straight leg of length `len`.
struct Leg {
    t0: f64,
    from: (f64, f64),
    dir: (f64, f64),
    len: f64,
    v: f64,
    a: f64,
    t_acc: f64,
    duration: f64,
}

impl Leg {
    fn new(t0: f64, from: (f64, f64), to: (f64, f64), v_max: f64, a: f64) -> Leg {
        let (dx, dy) = (to.0 - from.0, to.1 - from.1);
        let len = dx.hypot(dy);
        let dir = if len > 0.0 { (dx / len, dy / len) } else { (1.0, 0.0) };
        let (v, t_acc) = if len >= v_max * v_max / a {
            (v_max, v_max / a)
        } else {
            let v = (len * a).sqrt();
            (v, v / a)
        };
        let cruise = if v > 0.0 { (len - v * t_acc) / v } else { 0.0 };
        Leg { t0, from, dir, len, v, a, t_acc, duration: 2.0 * t_acc + cruise }
    }

    fn end(&self) -> f64 {
        self.t0 + self.duration
    }

    /// Distance travelled and speed at absolute time `t`.
    fn state(&self, t: f64) -> (f64, f64) {
        let tau = (t - self.t0).clamp(0.0, self.duration);
        let t_dec = self.duration - self.t_acc;
        if tau < self.t_acc {
            (0.5 * self.a * tau * tau, self.a * tau)
        } else if tau <= t_dec {
            (0.5 * self.v * self.t_acc + self.v * (tau - self.t_acc), self.v)
        } else {
            let r = self.duration - tau;
            (self.len - 0.5 * self.a * r * r, self.a * r)
        }
    }
}

struct DriveScript {
    legs: Vec<Leg>,
    contact_t: f64,
    redirect_t: Option<f64>,
}

fn drive(goals: &[&str], p: &ScenarioParams) -> DriveScript {
    let mut legs = Vec::new();
    let mut t = 0.0;
    let mut at = START;
    let mut redirect_t = None;
    for (k, g) in goals.iter().enumerate() {
        if k > 0 {
            t += p.redirect_dwell;
            redirect_t = Some(t);
        }
        let to = approach(g);
        let leg = Leg::new(t, at, to, p.base_speed, p.base_accel);
        t = leg.end();
        at = to;
        legs.push(leg);
    }
    DriveScript { contact_t: t, legs, redirect_t }
}

fn base_stream(script: &DriveScript, p: &ScenarioParams, rng: &mut ChaCha8Rng) -> Vec<PoseSample> {
    let pos_noise = Normal::new(0.0, p.base_position_noise).expect("finite sigma");
    let vel_noise = Normal::new(0.0, p.base_velocity_noise).expect("finite sigma");
    let end = script.contact_t + 1.0;
    let n = (end * p.base_rate).floor() as usize;
    (0..=n)
        .map(|k| {
            let t = k as f64 / p.base_rate;
            // The active leg is the last one that has started.
            let leg = script.legs.iter().rev().find(|l| l.t0 <= t).unwrap_or(&script.legs[0]);
            let (s, v) = leg.state(t);
            PoseSample {
                t,
                frame: "map".into(),
                x: leg.from.0 + leg.dir.0 * s + pos_noise.sample(rng),
                y: leg.from.1 + leg.dir.1 * s + pos_noise.sample(rng),
                z: 0.0,
                vx: leg.dir.0 * v + vel_noise.sample(rng),
                vy: leg.dir.1 * v + vel_noise.sample(rng),
                vz: 0.0,
            }
        })
        .collect()
}

/// Footprint primitive in the table plane (base frame, metres).
#[derive(Debug, Clone, Copy)]
enum Part {
    Rect { center: (f64, f64), half: (f64, f64) },
    Disk { center: (f64, f64), radius: f64 },
}

impl Part {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Part::Rect { center, half } => (x - center.0).abs() <= half.0 && (y - center.1).abs() <= half.1,
            Part::Disk { center, radius } => (x - center.0).hypot(y - center.1) <= radius,
        }
    }
}

#[derive(Debug, Clone)]
struct SceneObject {
    name: &'static str,
    parts: Vec<Part>,
    height: f64,
    confidence: f64,
    /// Point the operator steers the TCP to, in the table plane.
    grasp_xy: (f64, f64),
}

impl SceneObject {
    fn contains(&self, x: f64, y: f64) -> bool {
        self.parts.iter().any(|p| p.contains(x, y))
    }

    /// TCP target: 2 cm above the top surface.
    fn grasp_pose(&self) -> Vec3 {
        Vec3::new(self.grasp_xy.0, self.grasp_xy.1, TABLE_TOP_Z + self.height + 0.02)
    }
}

fn cube(name: &'static str, x: f64, y: f64) -> SceneObject {
    SceneObject {
        name,
        parts: vec![Part::Rect { center: (x, y), half: (0.025, 0.025) }],
        height: 0.05,
        confidence: 0.9,
        grasp_xy: (x, y),
    }
}

fn scene_objects(t: Template) -> Vec<SceneObject> {
    let c = CAMERA_X;
    match t {
        Template::T1Direct | Template::T2BaseRedirect | Template::T3ManipRedirect => vec![
            cube("yellow_cube", c + 0.04, 0.0),
            cube("left_blue_cube", c - 0.04, 0.14),
            cube("right_blue_cube", c - 0.04, -0.14),
        ],
        Template::T4Tool => vec![
            SceneObject {
                name: "drill",
                parts: vec![
                    Part::Rect { center: (c + 0.02, 0.12), half: (0.08, 0.025) },
                    Part::Rect { center: (c + 0.08, 0.05), half: (0.02, 0.06) },
                ],
                height: 0.06,
                confidence: 0.85,
                grasp_xy: (c + 0.08, 0.05),
            },
            SceneObject {
                name: "hammer",
                parts: vec![Part::Rect { center: (c - 0.12, -0.02), half: (0.015, 0.11) }],
                height: 0.03,
                confidence: 0.9,
                grasp_xy: (c - 0.12, -0.02),
            },
            SceneObject {
                name: "toolbox",
                parts: vec![Part::Rect { center: (c + 0.06, -0.16), half: (0.08, 0.06) }],
                height: 0.09,
                confidence: 0.9,
                grasp_xy: (c + 0.06, -0.16),
            },
        ],
        Template::T5Infeasible => vec![
            SceneObject {
                name: "coffee_can",
                parts: vec![Part::Disk { center: (c, 0.0), radius: 0.06 }],
                height: 0.15,
                confidence: 0.92,
                grasp_xy: (c, 0.0),
            },
            SceneObject {
                name: "fruit",
                parts: vec![Part::Rect { center: (c, -0.16), half: (0.07, 0.025) }],
                height: 0.04,
                confidence: 0.88,
                grasp_xy: (c, -0.16),
            },
        ],
    }
}

/// Camera frame to base frame: optical axis straight down.
pub fn camera_pose(p: &ScenarioParams) -> RigidTransform {
    RigidTransform::from_rows([
        [1.0, 0.0, 0.0, CAMERA_X],
        [0.0, -1.0, 0.0, 0.0],
        [0.0, 0.0, -1.0, TABLE_TOP_Z + p.camera_height],
    ])
    .expect("proper rotation")
}

pub fn intrinsics(p: &ScenarioParams) -> Result<CameraIntrinsics> {
    CameraIntrinsics::new(
        p.focal_length,
        p.focal_length,
        p.image_width as f64 / 2.0,
        p.image_height as f64 / 2.0,
        p.image_width,
        p.image_height,
    )
}

struct RenderedScene {
    depth: ScalarField,
    masks: Vec<Mask>,
}

fn render_scene(objects: &[SceneObject], intr: &CameraIntrinsics, p: &ScenarioParams) -> RenderedScene {
    let (w, h) = (intr.width, intr.height);
    let cam_z = TABLE_TOP_Z + p.camera_height;
    let mut depth = ScalarField::filled(w, h, p.camera_height);
    let mut masks = vec![Mask::filled(w, h, false); objects.len()];
    let mut order: Vec<usize> = (0..objects.len()).collect();
    order.sort_by(|&a, &b| objects[b].height.total_cmp(&objects[a].height));
    for v in 0..h {
        for u in 0..w {
            for &k in &order {
                let z = cam_z - (TABLE_TOP_Z + objects[k].height);
                let x = CAMERA_X + (u as f64 - intr.cx) / intr.fx * z;
                let y = -(v as f64 - intr.cy) / intr.fy * z;
                if objects[k].contains(x, y) {
                    *depth.get_mut(u, v) = z;
                    *masks[k].get_mut(u, v) = true;
                    break;
                }
            }
        }
    }
    RenderedScene { depth, masks }
}

/// Saliency peaks in object interiors and falls toward their rims.
fn render_saliency(masks: &[Mask], p: &ScenarioParams, rng: &mut ChaCha8Rng) -> ScalarField {
    let (w, h) = (masks[0].width(), masks[0].height());
    let mut s = ScalarField::filled(w, h, 0.15);
    for m in masks {
        let d2 = squared_distance_to_background(m);
        for (i, &d) in d2.iter().enumerate() {
            if m[i] {
                s[i] = s[i].max(0.6 + 0.4 * (d.sqrt() / 10.0).min(1.0));
            }
        }
    }
    if p.saliency_noise > 0.0 {
        let n = Normal::new(0.0, p.saliency_noise).expect("finite sigma");
        for v in s.data_mut() {
            *v = (*v + n.sample(rng)).clamp(0.0, 1.0);
        }
    }
    s
}

/// Minimum-jerk blend between TCP waypoints, each reached after its
/// duration and then held for its dwell.
struct Waypoint {
    to: Vec3,
    duration: f64,
    dwell: f64,
}

struct ReachScript {
    start: Vec3,
    waypoints: Vec<Waypoint>,
    t0: f64,
}

impl ReachScript {
    fn end(&self) -> f64 {
        self.t0 + self.waypoints.iter().map(|w| w.duration + w.dwell).sum::<f64>()
    }

    /// Start time of waypoint `k`'s motion.
    fn departure(&self, k: usize) -> f64 {
        self.t0 + self.waypoints[..k].iter().map(|w| w.duration + w.dwell).sum::<f64>()
    }

    fn state(&self, t: f64) -> (Vec3, Vec3) {
        let mut from = self.start;
        let mut t0 = self.t0;
        for w in &self.waypoints {
            if t < t0 + w.duration {
                let tau = ((t - t0) / w.duration).max(0.0);
                let s = tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
                let ds = 30.0 * tau * tau * (1.0 - tau) * (1.0 - tau) / w.duration;
                return (from + (w.to - from) * s, (w.to - from) * ds);
            }
            t0 += w.duration;
            if t < t0 + w.dwell {
                return (w.to, Vec3::zeros());
            }
            t0 += w.dwell;
            from = w.to;
        }
        (from, Vec3::zeros())
    }
}

fn tcp_stream(script: &ReachScript, p: &ScenarioParams, rng: &mut ChaCha8Rng) -> Vec<PoseSample> {
    let noise = Normal::new(0.0, p.tcp_noise).expect("finite sigma");
    let n = ((script.end() - script.t0) * p.tcp_rate).round() as usize;
    (0..=n)
        .map(|k| {
            let t = script.t0 + k as f64 / p.tcp_rate;
            let (q, v) = script.state(t);
            PoseSample {
                t,
                frame: "base_link".into(),
                x: q.x + noise.sample(rng),
                y: q.y + noise.sample(rng),
                z: q.z + noise.sample(rng),
                vx: v.x,
                vy: v.y,
                vz: v.z,
            }
        })
        .collect()
}

/// Home pose of the arm above and behind the table.
const TCP_HOME: [f64; 3] = [0.35, 0.0, 1.15];

fn hover(p: Vec3) -> Vec3 {
    p + Vec3::new(0.0, 0.0, 0.10)
}

fn reach_script(t: Template, objects: &[SceneObject], t0: f64) -> (ReachScript, &'static str, Option<usize>) {
    let find = |n: &str| objects.iter().find(|o| o.name == n).expect("scene object").grasp_pose();
    let go = |to: Vec3, duration: f64, dwell: f64| Waypoint { to, duration, dwell };
    let start = Vec3::from(TCP_HOME);
    let (waypoints, truth, redirect) = match t {
        Template::T1Direct | Template::T2BaseRedirect => {
            let g = find("yellow_cube");
            (vec![go(hover(g), 4.0, 0.0), go(g, 1.5, 1.0)], "yellow_cube", None)
        }
        Template::T3ManipRedirect => {
            let (a, b) = (find("yellow_cube"), find("left_blue_cube"));
            (
                vec![go(hover(a), 4.0, 0.0), go(a, 1.5, 1.5), go(hover(b), 1.5, 0.0), go(b, 1.0, 1.0)],
                "left_blue_cube",
                Some(2),
            )
        }
        Template::T4Tool => {
            let g = find("drill");
            (vec![go(hover(g), 4.0, 0.0), go(g, 1.5, 1.0)], "drill", None)
        }
        Template::T5Infeasible => {
            let (a, b) = (find("coffee_can"), find("fruit"));
            (
                vec![go(hover(a), 4.0, 0.0), go(a, 1.5, 2.0), go(hover(b), 1.5, 0.0), go(b, 1.0, 1.0)],
                "fruit",
                Some(2),
            )
        }
    };
    (ReachScript { start, waypoints, t0 }, truth, redirect)
}

fn nav_goals(t: Template) -> &'static [&'static str] {
    match t {
        Template::T1Direct | Template::T3ManipRedirect => &["R3"],
        Template::T2BaseRedirect => &["R4", "R3"],
        Template::T4Tool => &["R1"],
        Template::T5Infeasible => &["R1", "R2"],
    }
}

/// Build a complete session log for `template`. All noise is drawn from
/// streams split off `seed`.
pub fn generate_scenario(
    template: Template,
    seed: u64,
    params: &ScenarioParams,
    grid_resolution: f64,
) -> Result<LogAssets> {
    params.validate()?;
    ensure_positive("nav", "cell_size", grid_resolution)?;
    let mut nav_rng = stage_rng(seed, "scenario.navigation");
    let mut tcp_rng = stage_rng(seed, "scenario.tcp");
    let mut img_rng = stage_rng(seed, "scenario.images");

    let goals = nav_goals(template);
    let script = drive(goals, params);
    let odometry = base_stream(&script, params, &mut nav_rng);
    let grid = room_grid(grid_resolution)?;
    let navigation = NavigationPhase {
        grid: GridRef {
            image: "grid.pgm".into(),
            resolution: grid_resolution,
            origin: [0.0, 0.0],
        },
        odometry: "base.jsonl".into(),
        regions: regions(),
        ground_truth: goals.last().expect("goal").to_string(),
        contact_t: script.contact_t,
        redirect_t: script.redirect_t,
    };

    let intr = intrinsics(params)?;
    let objects = scene_objects(template);
    let scene = render_scene(&objects, &intr, params);
    let mut depth = scene.depth.clone();
    if params.depth_noise > 0.0 {
        let n = Normal::new(0.0, params.depth_noise).expect("finite sigma");
        for v in depth.data_mut() {
            *v += n.sample(&mut img_rng);
        }
    }
    let saliency = render_saliency(&scene.masks, params, &mut img_rng);
    let depth_scale = 1e-4;

    let t0 = ((script.contact_t + params.scan_duration) * 100.0).round() / 100.0;
    let (reach, truth, redirect_wp) = reach_script(template, &objects, t0);
    let tcp = tcp_stream(&reach, params, &mut tcp_rng);

    let mut pgms = vec![
        ("grid.pgm".to_string(), grid_to_pgm(&grid)),
        ("depth.pgm".to_string(), quantize_u16(&depth, depth_scale)),
        (
            "saliency.pgm".to_string(),
            Pgm {
                maxval: u16::MAX,
                pixels: saliency.map(|&v| (v * 65535.0).round() as u16),
            },
        ),
    ];
    let mut instances = Vec::new();
    for (o, m) in objects.iter().zip(&scene.masks) {
        let file = format!("mask_{}.pgm", o.name);
        pgms.push((file.clone(), mask_to_pgm(m)));
        instances.push(InstanceRef {
            name: o.name.into(),
            mask: file,
            confidence: o.confidence,
        });
    }
    // The segmenter also returns the table top, which the area filter drops.
    let jitter: f64 = img_rng.gen_range(0.9..0.97);
    pgms.push(("mask_table.pgm".into(), mask_to_pgm(&Mask::filled(intr.width, intr.height, true))));
    instances.push(InstanceRef {
        name: "table".into(),
        mask: "mask_table.pgm".into(),
        confidence: (jitter * 100.0).round() / 100.0,
    });

    let manipulation = ManipulationPhase {
        intrinsics: intr,
        camera_pose: camera_pose(params).to_rows(),
        depth: DepthRef {
            image: "depth.pgm".into(),
            scale: depth_scale,
        },
        saliency: "saliency.pgm".into(),
        instances,
        tcp: "tcp.jsonl".into(),
        ground_truth: truth.into(),
        contact_t: reach.end(),
        redirect_t: redirect_wp.map(|k| reach.departure(k)),
    };

    Ok(LogAssets {
        manifest: Manifest {
            format: FORMAT.into(),
            name: template.name().into(),
            seed: Some(seed),
            navigation: Some(navigation),
            manipulation: Some(manipulation),
        },
        pgms,
        streams: vec![("base.jsonl".into(), odometry), ("tcp.jsonl".into(), tcp)],
    })
}
