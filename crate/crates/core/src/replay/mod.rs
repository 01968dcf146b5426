// SPDX-License-Identifier: Apache-2.0

//! Session replay: drives the navigation belief over the base odometry and
//! the manipulation pipeline over one RGB-D frame and the TCP stream, then
//! scores each phase against its ground truth.

pub mod log;
pub mod metrics;
pub mod scenario;

use serde::Serialize;

use crate::config::Config;
use crate::eef_evolution::{estimate_derivatives, EefState, EefTracker, TraceRow};
use crate::error::{GuiderError, Result};
use crate::field::{Mask, ScalarField};
use crate::grasp_feasibility::{feasibility_masks, FeasibilityMasks, ObjectMask2D, ObjectVerdict};
use crate::nav_belief::NavBeliefState;
use crate::object_cascade::{pool_objects, run_cascade, CascadeTrace, ObjectProposal};
use crate::perception_fusion::{filter_and_merge_masks, fuse_2d, normalize_and_threshold, FusedSaliency};
use crate::scene_geometry::{object_prompts, ScenePrompt, Vec3};

pub use self::log::SessionLog;
use self::log::{ManipulationData, NavigationData};
pub use self::metrics::{MetricResult, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Phase {
    Navigation,
    Manipulation,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Navigation => "navigation",
            Phase::Manipulation => "manipulation",
        }
    }
}

/// Which phases a replay covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseSelection {
    Navigation,
    Manipulation,
    Both,
}

impl PhaseSelection {
    pub fn includes(self, p: Phase) -> bool {
        matches!(
            (self, p),
            (PhaseSelection::Both, _)
                | (PhaseSelection::Navigation, Phase::Navigation)
                | (PhaseSelection::Manipulation, Phase::Manipulation)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineEntry {
    pub t: f64,
    /// Index into [`Timeline::targets`] of the top-ranked target.
    pub predicted: Option<usize>,
    /// One score per [`Timeline::columns`] entry.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timeline {
    pub phase: Phase,
    /// Names the ground truth is expressed in (regions or instances).
    pub targets: Vec<String>,
    /// Score columns: one per region, or one per object proposal.
    pub columns: Vec<String>,
    pub entries: Vec<TimelineEntry>,
}

impl Timeline {
    pub fn samples(&self) -> Vec<Sample> {
        self.entries
            .iter()
            .map(|e| Sample {
                t: e.t,
                predicted: e.predicted,
            })
            .collect()
    }
}

/// Intermediate products of the perception pipeline.
#[derive(Debug, Clone)]
pub struct Perception {
    pub saliency_mask: Mask,
    pub instance_mask: Mask,
    pub fused: FusedSaliency,
    /// Indices of the instances that passed the area and confidence filter.
    pub kept_instances: Vec<usize>,
    pub verdicts: Vec<ObjectVerdict>,
    /// Instance index of each verdict.
    pub assessed: Vec<usize>,
    pub feasibility: FeasibilityMasks,
    pub cascade: CascadeTrace,
    pub proposals: Vec<ObjectProposal>,
    /// Proposal centroids in the TCP frame.
    pub centroids: Vec<Vec3>,
    /// Instance each proposal overlaps most, if any.
    pub labels: Vec<Option<usize>>,
    pub prompts: Vec<ScenePrompt>,
}

#[derive(Debug, Clone)]
pub struct PhaseOutcome {
    pub timeline: Timeline,
    pub truth: usize,
    pub contact_t: f64,
    pub redirect_t: Option<f64>,
    pub metrics: MetricResult,
}

#[derive(Debug, Clone)]
pub struct NavigationOutcome {
    pub phase: PhaseOutcome,
    pub final_state: NavBeliefState,
}

#[derive(Debug, Clone)]
pub struct ManipulationOutcome {
    pub phase: PhaseOutcome,
    pub perception: Perception,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub name: String,
    pub navigation: Option<NavigationOutcome>,
    pub manipulation: Option<ManipulationOutcome>,
}

impl ReplayOutcome {
    pub fn phases(&self) -> Vec<&PhaseOutcome> {
        let mut v = Vec::new();
        if let Some(n) = &self.navigation {
            v.push(&n.phase);
        }
        if let Some(m) = &self.manipulation {
            v.push(&m.phase);
        }
        v
    }
}

fn region_index(nav: &NavigationData, state: &NavBeliefState, cell: crate::field::CellIndex) -> Option<usize> {
    let (x, y) = state.geometry().cell_center(cell.x, cell.y);
    nav.regions.iter().position(|r| r.contains(x, y))
}

pub fn replay_navigation(nav: &NavigationData, cfg: &Config) -> Result<NavigationOutcome> {
    let mut state = NavBeliefState::init(&nav.grid, &cfg.nav)?;
    let geo = state.geometry();
    // Cells whose centres fall in each region polygon.
    let members: Vec<Vec<usize>> = nav
        .regions
        .iter()
        .map(|r| {
            (0..geo.width * geo.height)
                .filter(|&i| {
                    let (x, y) = geo.cell_center(i % geo.width, i / geo.width);
                    r.contains(x, y)
                })
                .collect()
        })
        .collect();
    let occupied = nav.grid.occupied_mask();
    let score = |state: &NavBeliefState| -> Vec<f64> {
        let combined = state.combined_belief();
        members
            .iter()
            .map(|cells| {
                cells
                    .iter()
                    .filter(|&&i| !occupied[i])
                    .map(|&i| combined[i])
                    .fold(0.0, f64::max)
            })
            .collect()
    };
    let mut scores = score(&state);
    let mut predicted = state.predict_area().and_then(|(c, _)| region_index(nav, &state, c));
    let mut entries = Vec::with_capacity(nav.odometry.len());
    for s in &nav.odometry {
        if state.observe(&s.base_odometry(), &cfg.nav) {
            scores = score(&state);
            predicted = state.predict_area().and_then(|(c, _)| region_index(nav, &state, c));
        }
        entries.push(TimelineEntry {
            t: s.t,
            predicted,
            scores: scores.clone(),
        });
    }
    let names: Vec<String> = nav.regions.iter().map(|r| r.name.clone()).collect();
    let timeline = Timeline {
        phase: Phase::Navigation,
        targets: names.clone(),
        columns: names,
        entries,
    };
    let metrics = metrics::evaluate(&timeline.samples(), nav.ground_truth, nav.contact_t, cfg.replay.hold)?;
    Ok(NavigationOutcome {
        phase: PhaseOutcome {
            timeline,
            truth: nav.ground_truth,
            contact_t: nav.contact_t,
            redirect_t: nav.redirect_t,
            metrics,
        },
        final_state: state,
    })
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Saliency, instance masks and depth through fusion, feasibility, the
/// cascade and pooling.
pub fn perceive(m: &ManipulationData, cfg: &Config, seed: u64) -> Result<Perception> {
    let intr = &m.intrinsics;
    let (w, h) = (intr.width, intr.height);
    let saliency_mask = normalize_and_threshold(
        &m.saliency,
        cfg.fusion.saliency_threshold,
        cfg.fusion.stretch_epsilon,
    );
    let instances: Vec<crate::perception_fusion::InstanceMask> = m
        .instances
        .iter()
        .map(|i| crate::perception_fusion::InstanceMask {
            mask: i.mask.clone(),
            confidence: i.confidence,
            prompt: None,
        })
        .collect();
    let instance_mask = filter_and_merge_masks(&instances, w, h, &cfg.fusion)?;
    let fused = fuse_2d(&saliency_mask, &instance_mask, &m.depth)?;

    let max_area = cfg.fusion.max_area_fraction * (w * h) as f64;
    let kept_instances: Vec<usize> = (0..m.instances.len())
        .filter(|&k| {
            let i = &m.instances[k];
            i.mask.any() && i.mask.count() as f64 <= max_area && i.confidence >= cfg.fusion.min_confidence
        })
        .collect();
    let mut objects = Vec::with_capacity(kept_instances.len());
    let mut object_of = Vec::with_capacity(kept_instances.len());
    for &k in &kept_instances {
        let mask = &m.instances[k].mask;
        let depths: Vec<f64> = mask
            .set_indices()
            .into_iter()
            .map(|i| m.depth[i])
            .filter(|z| z.is_finite() && *z > 0.0)
            .collect();
        let Some(z) = median(depths) else {
            ::log::debug!("instance {:?} has no valid depth; skipping feasibility", m.instances[k].name);
            continue;
        };
        objects.push(ObjectMask2D::new(mask.clone(), z, intr.fx)?);
        object_of.push(k);
    }
    let (feasibility, verdicts) = feasibility_masks(&objects, w, h, &cfg.grasp)?;
    let cascade = run_cascade(&fused, &feasibility, intr, &cfg.cascade)?;
    let proposals = pool_objects(cascade.output(), &fused.zbuffer, intr, &cfg.cascade)?;
    let centroids = proposals.iter().map(|p| m.camera_pose.apply(&p.centroid_vec())).collect();
    let labels = proposals
        .iter()
        .map(|p| {
            let mut best: Option<(usize, usize)> = None;
            for &k in &kept_instances {
                let overlap = p.pixels.iter().filter(|&&i| m.instances[k].mask[i]).count();
                if overlap > 0 && best.map_or(true, |(_, o)| overlap > o) {
                    best = Some((k, overlap));
                }
            }
            best.map(|(k, _)| k)
        })
        .collect();
    let prompts = if cfg.replay.scene_prompts {
        object_prompts(&m.depth, intr, &cfg.scene, seed)?
    } else {
        Vec::new()
    };
    Ok(Perception {
        saliency_mask,
        instance_mask,
        fused,
        kept_instances,
        verdicts,
        assessed: object_of,
        feasibility,
        cascade,
        proposals,
        centroids,
        labels,
        prompts,
    })
}

pub fn replay_manipulation(m: &ManipulationData, cfg: &Config, seed: u64) -> Result<ManipulationOutcome> {
    let perception = perceive(m, cfg, seed)?;
    if perception.proposals.is_empty() {
        return Err(GuiderError::Input("perception produced no object proposals".into()));
    }
    let props: Vec<(Vec3, f64)> = perception
        .centroids
        .iter()
        .zip(&perception.proposals)
        .map(|(c, p)| (*c, p.g))
        .collect();
    let mut tracker = EefTracker::new(&props, cfg.eef.clone())?;
    let ts: Vec<f64> = m.tcp.iter().map(|s| s.t).collect();
    let qs: Vec<Vec3> = m.tcp.iter().map(|s| s.position()).collect();
    let derivs = estimate_derivatives(&ts, &qs)?;
    let mut entries = Vec::with_capacity(m.tcp.len());
    let mut trace = Vec::with_capacity(m.tcp.len() * props.len());
    for (k, s) in m.tcp.iter().enumerate() {
        let (qd, qdd) = derivs[k];
        let rows = tracker.observe(&EefState {
            t: s.t,
            q: qs[k],
            qd,
            qdd,
        })?;
        trace.extend(rows);
        entries.push(TimelineEntry {
            t: s.t,
            predicted: perception.labels[tracker.top()],
            scores: tracker.objects().iter().map(|o| o.p).collect(),
        });
    }
    let columns = perception
        .proposals
        .iter()
        .zip(&perception.labels)
        .map(|(p, l)| match l {
            Some(k) => format!("p{}:{}", p.id, m.instances[*k].name),
            None => format!("p{}", p.id),
        })
        .collect();
    let timeline = Timeline {
        phase: Phase::Manipulation,
        targets: m.instances.iter().map(|i| i.name.clone()).collect(),
        columns,
        entries,
    };
    let metrics = metrics::evaluate(&timeline.samples(), m.ground_truth, m.contact_t, cfg.replay.hold)?;
    Ok(ManipulationOutcome {
        phase: PhaseOutcome {
            timeline,
            truth: m.ground_truth,
            contact_t: m.contact_t,
            redirect_t: m.redirect_t,
            metrics,
        },
        perception,
        trace,
    })
}

/// Replay the selected phases of a session. Deterministic in
/// `(log, cfg, seed)`.
pub fn replay(log: &SessionLog, cfg: &Config, seed: u64, phases: PhaseSelection) -> Result<ReplayOutcome> {
    cfg.validate()?;
    let navigation = match (&log.navigation, phases.includes(Phase::Navigation)) {
        (Some(n), true) => Some(replay_navigation(n, cfg)?),
        _ => None,
    };
    let manipulation = match (&log.manipulation, phases.includes(Phase::Manipulation)) {
        (Some(m), true) => Some(replay_manipulation(m, cfg, seed)?),
        _ => None,
    };
    Ok(ReplayOutcome {
        name: log.name.clone(),
        navigation,
        manipulation,
    })
}

/// A score image in which each pooled object carries its initial score.
pub fn proposal_scores(p: &Perception, width: usize, height: usize) -> ScalarField {
    crate::object_cascade::score_image(&p.proposals, width, height)
}
