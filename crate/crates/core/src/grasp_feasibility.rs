// SPDX-License-Identifier: Apache-2.0

//! Parallel-jaw grasp feasibility: bounding-box, disk-erosion and contour-pair
//! rectangle tests, and the masks they feed into the cascade.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, GuiderError, Result};
use crate::field::Mask;
use crate::geom2d::{convex_hull, min_area_rect, pixel_corner_outline, OrientedRect, Pt};
use crate::raster::{boundary_pixels, components_8, erode_disk};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraspParams {
    /// Half of the maximum jaw opening, metres.
    pub half_aperture: f64,
    /// Finger thickness, metres.
    pub finger_width: f64,
    /// Extra jaw travel required beyond the object, metres.
    pub clearance_extension: f64,
    /// Midpoint merge distance for candidate pairs, pixels.
    pub d_skip: f64,
    pub cov_main_min: f64,
    pub cov_extra_max: f64,
    /// Coarse marching step for the normal clearance, pixels.
    pub march_step: f64,
}

impl Default for GraspParams {
    fn default() -> Self {
        GraspParams {
            half_aperture: 0.0425,
            finger_width: 0.00825,
            clearance_extension: 0.002,
            d_skip: 1.0,
            cov_main_min: 0.99,
            cov_extra_max: 0.95,
            march_step: 0.5,
        }
    }
}

impl GraspParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("grasp", "half_aperture", self.half_aperture)?;
        ensure_positive("grasp", "finger_width", self.finger_width)?;
        ensure_positive("grasp", "march_step", self.march_step)?;
        if !(self.clearance_extension >= 0.0 && self.d_skip >= 0.0) {
            return Err(GuiderError::Config(
                "grasp.clearance_extension and grasp.d_skip must be >= 0".into(),
            ));
        }
        for (name, v) in [("cov_main_min", self.cov_main_min), ("cov_extra_max", self.cov_extra_max)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(GuiderError::Config(format!("grasp.{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    fn opening(&self) -> f64 {
        2.0 * self.half_aperture
    }
}

/// One object's silhouette with its metric scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectMask2D {
    pub mask: Mask,
    pub z_obj: f64,
    /// Metres per pixel, `z_obj / f_x`.
    pub gamma: f64,
}

impl ObjectMask2D {
    pub fn new(mask: Mask, z_obj: f64, fx: f64) -> Result<Self> {
        if !mask.any() {
            return Err(GuiderError::Input("object mask is empty".into()));
        }
        if !(z_obj > 0.0 && z_obj.is_finite()) {
            return Err(GuiderError::Input(format!("object depth must be > 0, got {z_obj}")));
        }
        ensure_positive("camera", "fx", fx)?;
        Ok(ObjectMask2D {
            mask,
            z_obj,
            gamma: z_obj / fx,
        })
    }
}

/// Minimum-area rectangle over pixel footprints; returns the verdict and the
/// short side in metres.
pub fn bbox_feasible(obj: &ObjectMask2D, grip: &GraspParams) -> (bool, f64) {
    let boundary = boundary_pixels(&obj.mask);
    let outline = pixel_corner_outline(&obj.mask, &boundary);
    let short_px = min_area_rect(&outline).map_or(0.0, |(_, s, _)| s);
    let short_m = short_px * obj.gamma;
    (short_m <= grip.opening(), short_m)
}

/// Disk radius in pixels for the tool circle, rounded half away from zero, at least 1.
pub fn kernel_radius(grip: &GraspParams, gamma: f64) -> u32 {
    ((grip.half_aperture / gamma).round() as u32).max(1)
}

/// Feasible when the disk erosion removes the whole silhouette.
pub fn morph_feasible(obj: &ObjectMask2D, grip: &GraspParams) -> bool {
    !erode_disk(&obj.mask, kernel_radius(grip, obj.gamma)).any()
}

fn contour_points(mask: &Mask) -> Vec<Pt> {
    boundary_pixels(mask)
        .into_iter()
        .map(|i| Pt::pixel_center(i, mask.width()))
        .collect()
}

fn inside(mask: &Mask, p: Pt) -> bool {
    matches!(mask.get_signed(p.x.floor() as i64, p.y.floor() as i64), Some(true))
}

fn centroid(mask: &Mask) -> Option<Pt> {
    let idx = mask.set_indices();
    if idx.is_empty() {
        return None;
    }
    let sum = idx
        .iter()
        .fold(Pt::new(0.0, 0.0), |acc, &i| acc.add(Pt::pixel_center(i, mask.width())));
    Some(sum.scale(1.0 / idx.len() as f64))
}

/// March from `from` along unit `dir`; return the centre of the last set pixel
/// before the first exit that follows a stretch inside the mask.
fn raycast_far_side(mask: &Mask, from: Pt, dir: Pt, step: f64) -> Option<Pt> {
    let mut seen_inside = false;
    let mut last: Option<Pt> = None;
    let mut s = 0.0;
    loop {
        let p = from.add(dir.scale(s));
        let (x, y) = (p.x.floor() as i64, p.y.floor() as i64);
        if !mask.in_bounds(x, y) {
            return None;
        }
        if *mask.get(x as usize, y as usize) {
            seen_inside = true;
            last = Some(Pt::new(x as f64 + 0.5, y as f64 + 0.5));
        } else if seen_inside {
            return last;
        }
        s += step;
    }
}

fn round2(v: f64) -> i64 {
    (v * 100.0).round() as i64
}

/// Candidate contact points: hull vertices of the silhouette, hull vertices of
/// each component that survives the tool-disk erosion, and far-side raycast
/// hits through the centroid. Deduplicated at 0.01 px and sorted.
pub fn candidate_points(mask: &Mask, grip: &GraspParams, gamma: f64) -> Vec<Pt> {
    let contour = contour_points(mask);
    if contour.is_empty() {
        return Vec::new();
    }
    let hull = convex_hull(&contour);
    let mut set: Vec<Pt> = hull.clone();

    let eroded = erode_disk(mask, kernel_radius(grip, gamma));
    for comp in components_8(&eroded) {
        let piece = Mask::from_indices(mask.width(), mask.height(), &comp);
        set.extend(convex_hull(&contour_points(&piece)));
    }

    if let Some(c) = centroid(mask) {
        for v in &hull {
            let d = c.sub(*v);
            let len = d.norm();
            if len < 1e-12 {
                continue;
            }
            if let Some(hit) = raycast_far_side(mask, c, d.scale(1.0 / len), grip.march_step) {
                set.push(hit);
            }
        }
    }

    let mut unique: BTreeMap<(i64, i64), Pt> = BTreeMap::new();
    for p in set {
        unique
            .entry((round2(p.x), round2(p.y)))
            .or_insert(Pt::new(round2(p.x) as f64 / 100.0, round2(p.y) as f64 / 100.0));
    }
    unique.into_values().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraspCandidate {
    pub p_a: Pt,
    pub p_b: Pt,
    pub midpoint: Pt,
    /// Unit inward normal.
    pub normal: Pt,
    pub delta_perp_px: f64,
    pub cov_main: f64,
    pub cov_extra: f64,
    pub feasible: bool,
    pub main_rect: OrientedRect,
    pub clearance_rect: OrientedRect,
}

/// Exit distances along `-dir` and `+dir` from a point inside the mask:
/// coarse marching, then bisection on the crossing step.
fn normal_span(mask: &Mask, m: Pt, dir: Pt, step: f64) -> Option<(f64, f64)> {
    if !inside(mask, m) {
        return None;
    }
    let limit = 2.0 * (mask.width() + mask.height()) as f64 + 2.0;
    let mut exits = [0.0; 2];
    for (k, sign) in [-1.0, 1.0].into_iter().enumerate() {
        let at = |s: f64| inside(mask, m.add(dir.scale(sign * s)));
        let mut s = 0.0;
        while s < limit && at(s + step) {
            s += step;
        }
        let (mut lo, mut hi) = (s, s + step);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if at(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        exits[k] = 0.5 * (lo + hi);
    }
    Some((exits[0], exits[1]))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairReport {
    pub points: usize,
    pub pairs: usize,
    pub merged: usize,
    /// Pairs whose midpoint is off the mask or whose span exceeds the opening.
    pub discarded: usize,
    pub candidates: Vec<GraspCandidate>,
}

impl PairReport {
    pub fn any_feasible(&self) -> bool {
        self.candidates.iter().any(|c| c.feasible)
    }
}

fn merge_close_pairs(points: &[Pt], d_skip: f64) -> (Vec<(usize, usize)>, usize) {
    let mut kept = Vec::new();
    let mut merged = 0;
    let cell = d_skip.max(1e-9);
    let mut grid: HashMap<(i64, i64), Vec<Pt>> = HashMap::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let m = points[i].midpoint(points[j]);
            let (cx, cy) = ((m.x / cell).floor() as i64, (m.y / cell).floor() as i64);
            let close = d_skip > 0.0
                && (-1..=1).any(|dx| {
                    (-1..=1).any(|dy| {
                        grid.get(&(cx + dx, cy + dy))
                            .is_some_and(|v| v.iter().any(|q| q.dist(m) < d_skip))
                    })
                });
            if close {
                merged += 1;
            } else {
                grid.entry((cx, cy)).or_default().push(m);
                kept.push((i, j));
            }
        }
    }
    (kept, merged)
}

fn evaluate_pair(mask: &Mask, a: Pt, b: Pt, grip: &GraspParams, gamma: f64) -> Option<GraspCandidate> {
    let n = Pt::new(-(b.y - a.y), b.x - a.x);
    let len = n.norm();
    if len < 1e-12 {
        return None;
    }
    let n = n.scale(1.0 / len);
    let m = a.midpoint(b);
    let (back, fwd) = normal_span(mask, m, n, grip.march_step)?;
    let delta = back + fwd;
    if delta <= 0.0 || delta * gamma > grip.opening() {
        return None;
    }
    let center = m.add(n.scale(0.5 * (fwd - back)));
    let main_rect = OrientedRect {
        center,
        axis: n,
        length: delta,
        width: grip.finger_width / gamma,
    };
    let clearance_rect = OrientedRect {
        length: delta + grip.clearance_extension / gamma,
        ..main_rect
    };
    let cov_main = main_rect.coverage(mask);
    let cov_extra = clearance_rect.coverage(mask);
    Some(GraspCandidate {
        p_a: a,
        p_b: b,
        midpoint: m,
        normal: n,
        delta_perp_px: delta,
        cov_main,
        cov_extra,
        feasible: cov_main >= grip.cov_main_min && cov_extra < grip.cov_extra_max,
        main_rect,
        clearance_rect,
    })
}

/// Evaluate all unordered pairs of sorted candidate points in parallel;
/// results keep pair order.
pub fn evaluate_pairs(points: &[Pt], mask: &Mask, grip: &GraspParams, gamma: f64) -> PairReport {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    let total = pts.len() * pts.len().saturating_sub(1) / 2;
    let (pairs, merged) = merge_close_pairs(&pts, grip.d_skip);
    let evaluated: Vec<Option<GraspCandidate>> = pairs
        .par_iter()
        .map(|&(i, j)| evaluate_pair(mask, pts[i], pts[j], grip, gamma))
        .collect();
    let discarded = evaluated.iter().filter(|c| c.is_none()).count();
    PairReport {
        points: pts.len(),
        pairs: total,
        merged,
        discarded,
        candidates: evaluated.into_iter().flatten().collect(),
    }
}

/// Contour-pair rectangle test for one object.
pub fn advanced_feasible(obj: &ObjectMask2D, grip: &GraspParams) -> PairReport {
    let points = candidate_points(&obj.mask, grip, obj.gamma);
    evaluate_pairs(&points, &obj.mask, grip, obj.gamma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectVerdict {
    pub bbox: bool,
    pub bbox_short_side_m: f64,
    pub morph: bool,
    pub advanced: bool,
    pub report: PairReport,
}

pub fn assess_object(obj: &ObjectMask2D, grip: &GraspParams) -> ObjectVerdict {
    let (bbox, short) = bbox_feasible(obj, grip);
    let report = advanced_feasible(obj, grip);
    ObjectVerdict {
        bbox,
        bbox_short_side_m: short,
        morph: morph_feasible(obj, grip),
        advanced: report.any_feasible(),
        report,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityMasks {
    pub bbox: Mask,
    pub morph: Mask,
    pub adv_obj: Mask,
    pub adv_rect: Mask,
}

impl FeasibilityMasks {
    pub fn empty(width: usize, height: usize) -> Self {
        let m = Mask::filled(width, height, false);
        FeasibilityMasks {
            bbox: m.clone(),
            morph: m.clone(),
            adv_obj: m.clone(),
            adv_rect: m,
        }
    }

    /// Every mask set everywhere; disables the geometric gating.
    pub fn all_ones(width: usize, height: usize) -> Self {
        let m = Mask::filled(width, height, true);
        FeasibilityMasks {
            bbox: m.clone(),
            morph: m.clone(),
            adv_obj: m.clone(),
            adv_rect: m,
        }
    }
}

/// Run all three tests on each object and accumulate the four masks.
pub fn feasibility_masks(
    objects: &[ObjectMask2D],
    width: usize,
    height: usize,
    grip: &GraspParams,
) -> Result<(FeasibilityMasks, Vec<ObjectVerdict>)> {
    let mut out = FeasibilityMasks::empty(width, height);
    let mut verdicts = Vec::with_capacity(objects.len());
    for obj in objects {
        if obj.mask.width() != width || obj.mask.height() != height {
            return Err(GuiderError::Input("object mask does not match image size".into()));
        }
        let v = assess_object(obj, grip);
        if v.bbox {
            out.bbox.or_assign(&obj.mask)?;
        }
        if v.morph {
            out.morph.or_assign(&obj.mask)?;
        }
        if v.advanced {
            out.adv_obj.or_assign(&obj.mask)?;
            for c in v.report.candidates.iter().filter(|c| c.feasible) {
                for (x, y) in c.main_rect.covered_pixels() {
                    if out.adv_rect.in_bounds(x, y) {
                        *out.adv_rect.get_mut(x as usize, y as usize) = true;
                    }
                }
            }
        }
        verdicts.push(v);
    }
    Ok((out, verdicts))
}

#[derive(Serialize)]
struct CandidateRecord<'a> {
    object: usize,
    p_a: [f64; 2],
    p_b: [f64; 2],
    delta_perp_px: f64,
    cov_main: f64,
    cov_extra: f64,
    feasible: bool,
    main_rect: &'a OrientedRect,
}

/// One JSON object per evaluated candidate.
pub fn write_candidates_jsonl<W: Write>(out: &mut W, verdicts: &[ObjectVerdict]) -> std::io::Result<()> {
    for (object, v) in verdicts.iter().enumerate() {
        for c in &v.report.candidates {
            let rec = CandidateRecord {
                object,
                p_a: [c.p_a.x, c.p_a.y],
                p_b: [c.p_b.x, c.p_b.y],
                delta_perp_px: c.delta_perp_px,
                cov_main: c.cov_main,
                cov_extra: c.cov_extra,
                feasible: c.feasible,
                main_rect: &c.main_rect,
            };
            serde_json::to_writer(&mut *out, &rec)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}
