// SPDX-License-Identifier: Apache-2.0

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{voxel_downsample, PointCloud, Vec3};
use crate::error::{ensure_positive, GuiderError, Result};
use crate::rng::stage_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlaneParams {
    pub downsample_leaf: f64,
    pub distance_threshold: f64,
    pub iterations: usize,
    pub removal_distance: f64,
}

impl Default for PlaneParams {
    fn default() -> Self {
        PlaneParams {
            downsample_leaf: 0.002,
            distance_threshold: 0.0085,
            iterations: 2000,
            removal_distance: 0.005,
        }
    }
}

impl PlaneParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("scene.plane", "downsample_leaf", self.downsample_leaf)?;
        ensure_positive("scene.plane", "distance_threshold", self.distance_threshold)?;
        ensure_positive("scene.plane", "removal_distance", self.removal_distance)?;
        if self.iterations == 0 {
            return Err(GuiderError::Config("scene.plane.iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// `normal · p + d = 0` with a unit normal whose largest-magnitude component is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vec3,
    pub d: f64,
}

impl Plane {
    fn through(a: &Vec3, b: &Vec3, c: &Vec3) -> Option<Plane> {
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len < 1e-12 {
            return None;
        }
        let n = n / len;
        Some(Plane { normal: n, d: -n.dot(a) }.canonical())
    }

    fn canonical(self) -> Plane {
        let n = self.normal;
        let lead = (0..3).fold(0, |best, i| if n[i].abs() > n[best].abs() + 1e-12 { i } else { best });
        if n[lead] < 0.0 {
            Plane {
                normal: -n,
                d: -self.d,
            }
        } else {
            self
        }
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) + self.d
    }

    pub fn coefficients(&self) -> [f64; 4] {
        [self.normal.x, self.normal.y, self.normal.z, self.d]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFit {
    pub plane: Plane,
    /// Inlier count on the downsampled cloud the hypotheses were scored on.
    pub support: usize,
    /// Input-cloud indices within the distance threshold.
    pub inliers: Vec<usize>,
    /// Input cloud with points near the plane removed.
    pub residual: PointCloud,
}

fn first_non_collinear(points: &[Vec3]) -> Option<(usize, usize, usize)> {
    let a = 0;
    let b = (1..points.len()).max_by(|&i, &j| {
        (points[i] - points[a])
            .norm()
            .total_cmp(&(points[j] - points[a]).norm())
    })?;
    let ab = points[b] - points[a];
    let (c, area) = (0..points.len())
        .map(|i| (i, ab.cross(&(points[i] - points[a])).norm()))
        .max_by(|x, y| x.1.total_cmp(&y.1))?;
    (area > 1e-12).then_some((a, b, c))
}

fn support(plane: &Plane, points: &[Vec3], threshold: f64) -> usize {
    points
        .iter()
        .filter(|p| plane.signed_distance(p).abs() <= threshold)
        .count()
}

/// Seeded RANSAC with 3-point hypotheses on a voxel-downsampled copy.
pub fn fit_plane_ransac(cloud: &PointCloud, params: &PlaneParams, seed: u64) -> Result<PlaneFit> {
    let ds = voxel_downsample(&cloud.points, params.downsample_leaf);
    if ds.len() < 3 {
        return Err(GuiderError::Degenerate(format!(
            "plane fit needs 3 points, got {}",
            ds.len()
        )));
    }
    let (a, b, c) = first_non_collinear(&ds)
        .ok_or_else(|| GuiderError::Degenerate("all points are collinear".into()))?;
    let fallback = Plane::through(&ds[a], &ds[b], &ds[c]).expect("non-collinear");

    let mut rng = stage_rng(seed, "ransac");
    let hypotheses: Vec<Option<Plane>> = (0..params.iterations)
        .map(|_| {
            let idx = sample(&mut rng, ds.len(), 3);
            Plane::through(&ds[idx.index(0)], &ds[idx.index(1)], &ds[idx.index(2)])
        })
        .collect();
    let scores: Vec<usize> = hypotheses
        .par_iter()
        .map(|h| h.map_or(0, |p| support(&p, &ds, params.distance_threshold)))
        .collect();

    let mut best = (support(&fallback, &ds, params.distance_threshold), fallback);
    for (h, &s) in hypotheses.iter().zip(&scores) {
        if let Some(p) = h {
            if s > best.0 {
                best = (s, *p);
            }
        }
    }
    let (count, plane) = best;

    let mut inliers = Vec::new();
    let mut residual = Vec::new();
    for (i, p) in cloud.points.iter().enumerate() {
        let dist = plane.signed_distance(p).abs();
        if dist <= params.distance_threshold {
            inliers.push(i);
        }
        if dist > params.removal_distance {
            residual.push(*p);
        }
    }
    Ok(PlaneFit {
        plane,
        support: count,
        inliers,
        residual: PointCloud {
            points: residual,
            frame: cloud.frame.clone(),
        },
    })
}
