// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PointCloud, Vec3};
use crate::error::{ensure_positive, GuiderError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalParams {
    pub radius: f64,
    pub k_nn: usize,
}

impl Default for NormalParams {
    fn default() -> Self {
        NormalParams {
            radius: 0.005,
            k_nn: 5,
        }
    }
}

impl NormalParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("scene.normals", "radius", self.radius)?;
        if self.k_nn < 3 {
            return Err(GuiderError::Config("scene.normals.k_nn must be >= 3".into()));
        }
        Ok(())
    }
}

pub const FALLBACK_NORMAL: Vec3 = Vec3::new(0.0, 0.0, 1.0);

/// Orient toward +Z; in-plane normals fall back to +X, then +Y.
pub(crate) fn canonical_sign(n: Vec3) -> Vec3 {
    const EPS: f64 = 1e-12;
    let lead = if n.z.abs() > EPS {
        n.z
    } else if n.x.abs() > EPS {
        n.x
    } else {
        n.y
    };
    if lead < 0.0 {
        -n
    } else {
        n
    }
}

struct VoxelHash {
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl VoxelHash {
    fn new(points: &[Vec3], cell: f64) -> Self {
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i);
        }
        VoxelHash { cell, buckets }
    }

    fn key(p: &Vec3, cell: f64) -> [i64; 3] {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    }

    /// Indices within `radius` of `q`, nearest first, ties by index.
    fn within(&self, points: &[Vec3], q: &Vec3, radius: f64) -> Vec<(f64, usize)> {
        let [kx, ky, kz] = Self::key(q, self.cell);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(b) = self.buckets.get(&[kx + dx, ky + dy, kz + dz]) {
                        for &j in b {
                            let d = (points[j] - q).norm();
                            if d <= radius {
                                out.push((d, j));
                            }
                        }
                    }
                }
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out
    }
}

/// Smallest-eigenvalue eigenvector of the neighbourhood covariance.
pub(crate) fn covariance_normal(neighbors: &[Vec3]) -> Vec3 {
    let n = neighbors.len() as f64;
    let mean = neighbors.iter().sum::<Vec3>() / n;
    let cov = neighbors
        .iter()
        .map(|p| {
            let d = p - mean;
            d * d.transpose()
        })
        .sum::<Matrix3<f64>>()
        / n;
    let eig = SymmetricEigen::new(cov);
    let i = eig.eigenvalues.imin();
    eig.eigenvectors.column(i).normalize()
}

/// Per-point unit normals from up to `k_nn` neighbours within `radius`
/// (the point itself included).
pub fn estimate_normals(cloud: &PointCloud, params: &NormalParams) -> Result<Vec<Vec3>> {
    if cloud.is_empty() {
        return Err(GuiderError::Input("normal estimation needs a nonempty cloud".into()));
    }
    let pts = &cloud.points;
    let hash = VoxelHash::new(pts, params.radius);
    Ok(pts
        .par_iter()
        .map(|q| {
            let near = hash.within(pts, q, params.radius);
            if near.len() < 3 {
                return FALLBACK_NORMAL;
            }
            let nb: Vec<Vec3> = near.iter().take(params.k_nn).map(|&(_, j)| pts[j]).collect();
            let n = covariance_normal(&nb);
            if n.iter().all(|c| c.is_finite()) {
                canonical_sign(n)
            } else {
                FALLBACK_NORMAL
            }
        })
        .collect())
}
