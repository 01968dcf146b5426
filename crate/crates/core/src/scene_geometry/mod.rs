// SPDX-License-Identifier: Apache-2.0

//! Depth reprojection, multi-view cloud merging, support-plane removal,
//! density clustering and centroid projection.

mod hdbscan;
mod normals;
mod ransac;

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, GuiderError, Result};
use crate::field::ScalarField;

pub use hdbscan::{cluster_objects, ClusterParams};
pub use normals::{estimate_normals, NormalParams};
pub use ransac::{fit_plane_ransac, Plane, PlaneFit, PlaneParams};

pub type Vec3 = Vector3<f64>;

/// Metric depth image; zero or non-finite pixels carry no measurement.
pub type DepthImage = ScalarField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("camera", "fx", self.fx)?;
        ensure_positive("camera", "fy", self.fy)?;
        if self.width == 0 || self.height == 0 {
            return Err(GuiderError::Config("camera image size must be nonzero".into()));
        }
        let inside = |c: f64, n: usize| c.is_finite() && c >= 0.0 && c < n as f64;
        if !inside(self.cx, self.width) || !inside(self.cy, self.height) {
            return Err(GuiderError::Config(format!(
                "principal point ({}, {}) lies outside the {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub frame: String,
}

impl PointCloud {
    pub fn new(frame: impl Into<String>, points: Vec<Vec3>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(GuiderError::Input(format!("non-finite point {p:?}")));
        }
        Ok(PointCloud {
            points,
            frame: frame.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vec3,
}

impl RigidTransform {
    const TOL: f64 = 1e-9;

    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        let det = rotation.determinant();
        if !(ortho <= Self::TOL && (det - 1.0).abs() <= Self::TOL) {
            return Err(GuiderError::Input(format!(
                "rotation is not proper orthonormal (|RᵀR - I| = {ortho:e}, det = {det})"
            )));
        }
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(GuiderError::Input("translation must be finite".into()));
        }
        Ok(RigidTransform {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Rotation about +Z by `yaw` radians followed by a translation.
    pub fn from_yaw(yaw: f64, t: Vec3) -> Self {
        let (s, c) = yaw.sin_cos();
        RigidTransform {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation: t,
        }
    }

    /// Row-major 3x4 `[R | t]`.
    pub fn from_rows(rows: [[f64; 4]; 3]) -> Result<Self> {
        let r = Matrix3::from_fn(|i, j| rows[i][j]);
        Self::new(r, Vec3::new(rows[0][3], rows[1][3], rows[2][3]))
    }

    pub fn to_rows(&self) -> [[f64; 4]; 3] {
        let mut out = [[0.0; 4]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().take(3).enumerate() {
                *v = self.rotation[(i, j)];
            }
            row[3] = self.translation[i];
        }
        out
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }
}

/// Axis-aligned box, bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Box3 {
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn validate(&self) -> Result<()> {
        if (0..3).all(|i| self.min[i].is_finite() && self.max[i].is_finite() && self.min[i] < self.max[i]) {
            Ok(())
        } else {
            Err(GuiderError::Config(format!("workspace box {self:?} is empty")))
        }
    }
}

impl Default for Box3 {
    fn default() -> Self {
        Box3 {
            min: [-1.0, -1.0, 0.0],
            max: [1.0, 1.0, 1.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneParams {
    pub depth_band: [f64; 2],
    pub min_range: f64,
    pub workspace: Box3,
    pub voxel_leaf: f64,
    pub plane: PlaneParams,
    pub normals: NormalParams,
    pub cluster: ClusterParams,
    /// Pixel stride used when reprojecting depth for prompt generation.
    pub prompt_stride: usize,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            depth_band: [0.3, 2.0],
            min_range: 0.30,
            workspace: Box3::default(),
            voxel_leaf: 0.01,
            plane: PlaneParams::default(),
            normals: NormalParams::default(),
            cluster: ClusterParams::default(),
            prompt_stride: 2,
        }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.depth_band;
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(GuiderError::Config(format!("scene.depth_band [{lo}, {hi}] is invalid")));
        }
        if !(self.min_range >= 0.0 && self.min_range.is_finite()) {
            return Err(GuiderError::Config("scene.min_range must be >= 0".into()));
        }
        ensure_positive("scene", "voxel_leaf", self.voxel_leaf)?;
        if self.prompt_stride == 0 {
            return Err(GuiderError::Config("scene.prompt_stride must be >= 1".into()));
        }
        self.workspace.validate()?;
        self.plane.validate()?;
        self.normals.validate()?;
        self.cluster.validate()
    }
}

fn depth_is_valid(z: f64) -> bool {
    z.is_finite() && z > 0.0
}

/// Back-project every valid depth pixel through the pinhole model.
pub fn reproject_depth(depth: &DepthImage, intr: &CameraIntrinsics) -> Result<PointCloud> {
    reproject_depth_strided(depth, intr, 1)
}

/// As [`reproject_depth`], sampling every `stride`-th row and column.
pub fn reproject_depth_strided(depth: &DepthImage, intr: &CameraIntrinsics, stride: usize) -> Result<PointCloud> {
    if depth.width() != intr.width || depth.height() != intr.height {
        return Err(GuiderError::Input(format!(
            "depth image is {}x{} but intrinsics describe {}x{}",
            depth.width(),
            depth.height(),
            intr.width,
            intr.height
        )));
    }
    let stride = stride.max(1);
    let mut points = Vec::new();
    for v in (0..depth.height()).step_by(stride) {
        for u in (0..depth.width()).step_by(stride) {
            let z = *depth.get(u, v);
            if depth_is_valid(z) {
                points.push(Vec3::new(
                    (u as f64 - intr.cx) / intr.fx * z,
                    (v as f64 - intr.cy) / intr.fy * z,
                    z,
                ));
            }
        }
    }
    Ok(PointCloud {
        points,
        frame: "camera".into(),
    })
}

/// Keep points whose camera-frame Z lies in `band` and map them through `t`.
pub fn transform_and_band_filter(cloud: &PointCloud, t: &RigidTransform, band: [f64; 2], frame: &str) -> PointCloud {
    PointCloud {
        points: cloud
            .points
            .iter()
            .filter(|p| p.z >= band[0] && p.z <= band[1])
            .map(|p| t.apply(p))
            .collect(),
        frame: frame.into(),
    }
}

/// One representative per occupied `leaf`-cube: the centroid of its occupants.
/// Output is ordered by voxel key.
pub fn voxel_downsample(points: &[Vec3], leaf: f64) -> Vec<Vec3> {
    let mut cells: BTreeMap<[i64; 3], (Vec3, usize)> = BTreeMap::new();
    for p in points {
        let key = [
            (p.x / leaf).floor() as i64,
            (p.y / leaf).floor() as i64,
            (p.z / leaf).floor() as i64,
        ];
        let e = cells.entry(key).or_insert((Vec3::zeros(), 0));
        e.0 += p;
        e.1 += 1;
    }
    cells.into_values().map(|(s, n)| s / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergedScan {
    pub cloud: PointCloud,
    /// Points surviving range and workspace filtering, before voxelization.
    pub kept: usize,
    pub empty: bool,
}

/// Fuse camera-frame views into a voxelized base-frame cloud.
pub fn merge_scan(views: &[(PointCloud, RigidTransform)], params: &SceneParams) -> Result<MergedScan> {
    if views.is_empty() {
        return Err(GuiderError::Input("merge_scan needs at least one view".into()));
    }
    let mut union = Vec::new();
    for (cloud, t) in views {
        union.extend(
            cloud
                .points
                .iter()
                .filter(|p| p.norm() >= params.min_range)
                .map(|p| t.apply(p))
                .filter(|q| params.workspace.contains(q)),
        );
    }
    let kept = union.len();
    let points = voxel_downsample(&union, params.voxel_leaf);
    if points.is_empty() {
        log::warn!("merged scan is empty after range and workspace filtering");
    }
    Ok(MergedScan {
        empty: points.is_empty(),
        cloud: PointCloud {
            points,
            frame: "base".into(),
        },
        kept,
    })
}

/// Pinhole projection of a camera-frame point.
pub fn project_centroid(c: &Vec3, intr: &CameraIntrinsics) -> Result<(f64, f64)> {
    if !(c.z > 0.0) {
        return Err(GuiderError::Projection(c.z));
    }
    Ok((intr.fx * c.x / c.z + intr.cx, intr.fy * c.y / c.z + intr.cy))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenePrompt {
    pub centroid: Vec3,
    pub pixel: (f64, f64),
    pub size: usize,
}

/// Depth image to per-object pixel prompts: band filter, plane removal,
/// normal-augmented clustering and centroid projection.
pub fn object_prompts(
    depth: &DepthImage,
    intr: &CameraIntrinsics,
    params: &SceneParams,
    seed: u64,
) -> Result<Vec<ScenePrompt>> {
    let cloud = reproject_depth_strided(depth, intr, params.prompt_stride)?;
    let cloud = transform_and_band_filter(&cloud, &RigidTransform::identity(), params.depth_band, "camera");
    if cloud.len() < 3 {
        return Ok(Vec::new());
    }
    let residual = match fit_plane_ransac(&cloud, &params.plane, seed) {
        Ok(fit) => fit.residual,
        Err(GuiderError::Degenerate(msg)) => {
            log::debug!("plane fit skipped: {msg}");
            cloud
        }
        Err(e) => return Err(e),
    };
    if residual.is_empty() {
        return Ok(Vec::new());
    }
    let normals = estimate_normals(&residual, &params.normals)?;
    let clusters = cluster_objects(&residual, &normals, &params.cluster)?;
    clusters
        .into_iter()
        .map(|c| {
            Ok(ScenePrompt {
                pixel: project_centroid(&c.centroid, intr)?,
                centroid: c.centroid,
                size: c.members.len(),
            })
        })
        .collect()
}
