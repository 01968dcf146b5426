// SPDX-License-Identifier: Apache-2.0

//! Pixel probability cascade (centre bias, feasibility-mask multiplication,
//! depth weighting, flooring) and connected-object pooling into ranked
//! proposals.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, GuiderError, Result};
use crate::field::{Field, Mask, ScalarField};
use crate::grasp_feasibility::FeasibilityMasks;
use crate::perception_fusion::FusedSaliency;
use crate::raster::components_8;
use crate::scene_geometry::{CameraIntrinsics, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CascadeParams {
    pub sigma_c: f64,
    pub lambda_in: f64,
    pub lambda_out: f64,
    /// Depth-weight exponent coefficient.
    pub alpha_depth: f64,
    pub z0: f64,
    pub depth_apply_threshold: f64,
    pub floor: f64,
    pub pool_threshold: f64,
    pub n_min: usize,
    pub rescale_band: [f64; 2],
    pub relevance_threshold: f64,
    pub otsu_bins: usize,
    /// Treat every feasibility mask as all-ones.
    pub feasibility_ablation: bool,
}

impl Default for CascadeParams {
    fn default() -> Self {
        CascadeParams {
            sigma_c: 240.0,
            lambda_in: 1.2,
            lambda_out: 0.4,
            alpha_depth: 1.5,
            z0: 1.0,
            depth_apply_threshold: 0.3,
            floor: 0.01,
            pool_threshold: 0.01,
            n_min: 10,
            rescale_band: [0.5, 0.7],
            relevance_threshold: 0.05,
            otsu_bins: 64,
            feasibility_ablation: false,
        }
    }
}

impl CascadeParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("cascade", "sigma_c", self.sigma_c)?;
        ensure_positive("cascade", "lambda_out", self.lambda_out)?;
        ensure_positive("cascade", "alpha_depth", self.alpha_depth)?;
        ensure_positive("cascade", "floor", self.floor)?;
        if !(self.lambda_out < 1.0 && 1.0 < self.lambda_in) {
            return Err(GuiderError::Config(format!(
                "cascade needs lambda_out < 1 < lambda_in, got {} and {}",
                self.lambda_out, self.lambda_in
            )));
        }
        let [lo, hi] = self.rescale_band;
        if !(0.0 < lo && lo < hi && hi <= 1.0) {
            return Err(GuiderError::Config(format!(
                "cascade.rescale_band needs 0 < g_min < g_max <= 1, got [{lo}, {hi}]"
            )));
        }
        if self.otsu_bins < 2 {
            return Err(GuiderError::Config("cascade.otsu_bins must be >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.pool_threshold) || !(0.0..=1.0).contains(&self.relevance_threshold) {
            return Err(GuiderError::Config("cascade thresholds must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Gaussian centred on the principal point; pixel coordinates are indices.
pub fn centre_bias(p: &ScalarField, intr: &CameraIntrinsics, params: &CascadeParams) -> ScalarField {
    let w = p.width();
    let k = 1.0 / (2.0 * params.sigma_c * params.sigma_c);
    let data = p
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let (du, dv) = ((i % w) as f64 - intr.cx, (i / w) as f64 - intr.cy);
            v * (-(du * du + dv * dv) * k).exp()
        })
        .collect();
    ScalarField::from_vec(w, p.height(), data).expect("same shape")
}

pub fn apply_mask(p: &ScalarField, m: &Mask, params: &CascadeParams) -> Result<ScalarField> {
    p.zip_map(m, |&v, &inside| {
        (v * if inside { params.lambda_in } else { params.lambda_out }).clamp(0.0, 1.0)
    })
}

pub fn depth_weight(p: &ScalarField, zbuffer: &Field<Option<f64>>, params: &CascadeParams) -> Result<ScalarField> {
    p.zip_map(zbuffer, |&v, z| match z {
        Some(z) if v > params.depth_apply_threshold => v * (-params.alpha_depth * (z - params.z0).powi(2)).exp(),
        _ => v,
    })
}

/// `max(P, ε)` on pixels that were positive at some stage; others stay as they are.
pub fn floor_probs(p: &ScalarField, ever_positive: &Mask, params: &CascadeParams) -> Result<ScalarField> {
    p.zip_map(ever_positive, |&v, &seen| if seen { v.max(params.floor) } else { v })
}

/// Every intermediate image of one cascade run, in stage order.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeTrace {
    pub stages: Vec<(&'static str, ScalarField)>,
    pub ever_positive: Mask,
}

impl CascadeTrace {
    /// The floored image P*.
    pub fn output(&self) -> &ScalarField {
        &self.stages.last().expect("nonempty trace").1
    }
}

const MASK_STAGES: [&str; 4] = ["mask_bbox", "mask_morph", "mask_adv_obj", "mask_adv_rect"];

pub fn run_cascade(
    fused: &FusedSaliency,
    masks: &FeasibilityMasks,
    intr: &CameraIntrinsics,
    params: &CascadeParams,
) -> Result<CascadeTrace> {
    let p0 = fused.p.clone();
    let mut ever = p0.map(|&v| v > 0.0);
    let mut stages = vec![("fused", p0)];
    let mut push = |name: &'static str, img: ScalarField, ever: &mut Mask| {
        for (e, &v) in ever.data_mut().iter_mut().zip(img.iter()) {
            *e |= v > 0.0;
        }
        stages.push((name, img));
    };

    let biased = centre_bias(&fused.p, intr, params);
    push("centre_bias", biased.clone(), &mut ever);

    let ones = Mask::filled(fused.p.width(), fused.p.height(), true);
    let ordered = [&masks.bbox, &masks.morph, &masks.adv_obj, &masks.adv_rect];
    let mut cur = biased;
    for (name, m) in MASK_STAGES.iter().zip(ordered) {
        let m = if params.feasibility_ablation { &ones } else { m };
        cur = apply_mask(&cur, m, params)?;
        push(name, cur.clone(), &mut ever);
    }
    cur = depth_weight(&cur, &fused.zbuffer, params)?;
    push("depth", cur.clone(), &mut ever);
    let floored = floor_probs(&cur, &ever, params)?;
    stages.push(("floor", floored));
    Ok(CascadeTrace {
        stages,
        ever_positive: ever,
    })
}

/// Bin index separating the two Otsu classes: bins `<= k` form the low
/// class. `None` when all values fall in one bin range of zero width.
pub fn otsu_split(values: &[f64], bins: usize) -> Option<(f64, f64, usize)> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo > 1e-12) {
        return None;
    }
    let width = (hi - lo) / bins as f64;
    let mut hist = vec![0usize; bins];
    for &v in values {
        hist[bin_of(v, lo, width, bins)] += 1;
    }
    let centre = |b: usize| lo + (b as f64 + 0.5) * width;
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(b, &c)| c as f64 * centre(b)).sum();
    let (mut w0, mut s0) = (0.0, 0.0);
    let mut best: Option<(f64, usize)> = None;
    for (k, &c) in hist.iter().enumerate().take(bins - 1) {
        w0 += c as f64;
        s0 += c as f64 * centre(k);
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let between = w0 * w1 * (s0 / w0 - (sum_all - s0) / w1).powi(2);
        if best.map_or(true, |(b, _)| between > b) {
            best = Some((between, k));
        }
    }
    best.map(|(_, k)| (lo, width, k))
}

fn bin_of(v: f64, lo: f64, width: f64, bins: usize) -> usize {
    (((v - lo) / width).floor() as usize).min(bins - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectProposal {
    /// Rank order, 0 is the most likely object.
    pub id: usize,
    #[serde(skip)]
    pub pixels: Vec<usize>,
    pub pixel_count: usize,
    /// Component minimum of P* before rescaling.
    pub raw_g: f64,
    pub g: f64,
    /// Mean pixel coordinates `(u, v)`.
    pub pixel_centroid: (f64, f64),
    pub depth: f64,
    /// Camera-frame centroid, metres.
    pub centroid: [f64; 3],
}

impl ObjectProposal {
    pub fn centroid_vec(&self) -> Vec3 {
        Vec3::from(self.centroid)
    }
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Foreground components of P*, each trimmed by its own Otsu pass and
/// scored by its minimum. Proposals come back best first.
pub fn pool_objects(
    p_star: &ScalarField,
    zbuffer: &Field<Option<f64>>,
    intr: &CameraIntrinsics,
    params: &CascadeParams,
) -> Result<Vec<ObjectProposal>> {
    p_star.check_same_shape(zbuffer)?;
    let (w, h) = (p_star.width(), p_star.height());
    let fg = p_star.map(|&v| v >= params.pool_threshold);

    let mut pieces: Vec<Vec<usize>> = Vec::new();
    for comp in components_8(&fg).into_iter().filter(|c| c.len() >= params.n_min) {
        let values: Vec<f64> = comp.iter().map(|&i| p_star[i]).collect();
        let Some((lo, width, k)) = otsu_split(&values, params.otsu_bins) else {
            pieces.push(comp);
            continue;
        };
        let kept: Vec<usize> = comp
            .iter()
            .copied()
            .filter(|&i| bin_of(p_star[i], lo, width, params.otsu_bins) > k)
            .collect();
        let sub = Mask::from_indices(w, h, &kept);
        pieces.extend(components_8(&sub).into_iter().filter(|c| c.len() >= params.n_min));
    }

    let mut props = Vec::new();
    for pixels in pieces {
        let mut depths: Vec<f64> = pixels.iter().filter_map(|&i| zbuffer[i]).collect();
        let Some(depth) = median(&mut depths) else {
            log::debug!("dropping component of {} px with no valid depth", pixels.len());
            continue;
        };
        let raw_g = pixels.iter().map(|&i| p_star[i]).fold(f64::INFINITY, f64::min);
        let n = pixels.len() as f64;
        let (su, sv) = pixels
            .iter()
            .fold((0.0, 0.0), |(a, b), &i| (a + (i % w) as f64, b + (i / w) as f64));
        let (u, v) = (su / n, sv / n);
        props.push(ObjectProposal {
            id: 0,
            pixel_count: pixels.len(),
            pixels,
            raw_g,
            g: raw_g,
            pixel_centroid: (u, v),
            depth,
            centroid: [(u - intr.cx) / intr.fx * depth, (v - intr.cy) / intr.fy * depth, depth],
        });
    }

    // Ascending rank: lower raw score, then smaller, then later in row-major order.
    props.sort_by(|a, b| {
        a.raw_g
            .total_cmp(&b.raw_g)
            .then(a.pixel_count.cmp(&b.pixel_count))
            .then(b.pixels[0].cmp(&a.pixels[0]))
    });
    let [g_min, g_max] = params.rescale_band;
    let qualifying: Vec<usize> = (0..props.len())
        .filter(|&i| props[i].raw_g > params.relevance_threshold)
        .collect();
    let m = qualifying.len();
    for (rank, &i) in qualifying.iter().enumerate() {
        props[i].g = if m == 1 {
            g_max
        } else {
            g_min + (g_max - g_min) * rank as f64 / (m - 1) as f64
        };
    }
    props.reverse();
    for (id, p) in props.iter_mut().enumerate() {
        p.id = id;
    }
    Ok(props)
}

/// Image in which every proposal's pixels carry its score.
pub fn score_image(props: &[ObjectProposal], width: usize, height: usize) -> ScalarField {
    let mut g = ScalarField::filled(width, height, 0.0);
    for p in props {
        for &i in &p.pixels {
            g[i] = p.g;
        }
    }
    g
}

#[derive(Serialize)]
struct ProposalRecord {
    id: usize,
    g: f64,
    centroid_xyz: [f64; 3],
    pixels: usize,
}

pub fn write_proposals_jsonl<W: Write>(out: &mut W, props: &[ObjectProposal]) -> std::io::Result<()> {
    for p in props {
        let rec = ProposalRecord {
            id: p.id,
            g: p.g,
            centroid_xyz: p.centroid,
            pixels: p.pixel_count,
        };
        serde_json::to_writer(&mut *out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
