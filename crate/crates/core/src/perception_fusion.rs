// SPDX-License-Identifier: Apache-2.0

//! Saliency thresholding, instance-mask filtering and agreement fusion.

use serde::{Deserialize, Serialize};

use crate::error::{GuiderError, Result};
use crate::field::{Field, Mask, ScalarField};

/// Fused value where neither source fires.
pub const P_NONE: f64 = 0.0;
/// Fused value where exactly one source fires.
pub const P_SINGLE: f64 = 0.6;
/// Fused value where both sources agree.
pub const P_BOTH: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionParams {
    pub saliency_threshold: f64,
    pub stretch_epsilon: f64,
    pub max_area_fraction: f64,
    pub min_confidence: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams {
            saliency_threshold: 0.9,
            stretch_epsilon: 1e-8,
            max_area_fraction: 0.25,
            min_confidence: 0.4,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(GuiderError::Config(format!("fusion.{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("saliency_threshold", self.saliency_threshold)?;
        unit("max_area_fraction", self.max_area_fraction)?;
        unit("min_confidence", self.min_confidence)?;
        crate::error::ensure_positive("fusion", "stretch_epsilon", self.stretch_epsilon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMask {
    pub mask: Mask,
    pub confidence: f64,
    /// Pixel prompt the mask was produced from, if known.
    pub prompt: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedSaliency {
    pub p: ScalarField,
    /// Depth at salient pixels with a valid measurement.
    pub zbuffer: Field<Option<f64>>,
}

/// Min-max stretch with an epsilon-guarded denominator, then `> τ`.
pub fn normalize_and_threshold(s: &ScalarField, tau: f64, eps: f64) -> Mask {
    let Some((lo, hi)) = s.min_max() else {
        return Mask::filled(s.width(), s.height(), false);
    };
    let den = hi - lo + eps;
    s.map(|&v| (v - lo) / den > tau)
}

/// Drop oversized or low-confidence masks and OR the rest together.
pub fn filter_and_merge_masks(
    masks: &[InstanceMask],
    width: usize,
    height: usize,
    params: &FusionParams,
) -> Result<Mask> {
    let mut merged = Mask::filled(width, height, false);
    let max_area = params.max_area_fraction * (width * height) as f64;
    for (i, m) in masks.iter().enumerate() {
        if m.mask.width() != width || m.mask.height() != height {
            return Err(GuiderError::Input(format!(
                "instance mask {i} is {}x{}, image is {width}x{height}",
                m.mask.width(),
                m.mask.height()
            )));
        }
        if m.mask.count() as f64 > max_area || m.confidence < params.min_confidence {
            continue;
        }
        merged.or_assign(&m.mask)?;
    }
    Ok(merged)
}

/// Agreement weighting of two co-registered masks plus a depth buffer.
pub fn fuse_2d(b: &Mask, f: &Mask, depth: &ScalarField) -> Result<FusedSaliency> {
    b.check_same_shape(f)?;
    b.check_same_shape(depth)?;
    let p = b.zip_map(f, |&x, &y| match (x, y) {
        (true, true) => P_BOTH,
        (false, false) => P_NONE,
        _ => P_SINGLE,
    })?;
    let zbuffer = p.zip_map(depth, |&pv, &z| (pv > 0.0 && z.is_finite() && z > 0.0).then_some(z))?;
    Ok(FusedSaliency { p, zbuffer })
}
