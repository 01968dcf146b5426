// SPDX-License-Identifier: Apache-2.0

//! Per-object grasp-intent probabilities driven by end-effector kinematics.
//!
//! Each object grows with proximity and approach and decays with distance;
//! a forward-Euler step at a fixed `dt` is clipped so no belief drops faster
//! than its bias `β` or rises above its ceiling.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, GuiderError, Result};
use crate::scene_geometry::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EefParams {
    pub r_g: f64,
    pub h_g: f64,
    pub alpha_g: f64,
    /// Decay coefficient.
    pub alpha_d: f64,
    pub gamma_v: f64,
    pub gamma_a: f64,
    pub delta: f64,
    pub kappa: f64,
    pub p_cap: f64,
    pub low_evidence_threshold: f64,
    pub dt: f64,
    pub beta_topk: f64,
    pub beta_other: f64,
    pub k: usize,
    pub tau_pred: f64,
    pub p_max: f64,
    pub approach_snap: f64,
}

impl Default for EefParams {
    fn default() -> Self {
        EefParams {
            r_g: 0.028,
            h_g: 0.10,
            alpha_g: 0.08,
            alpha_d: 0.80,
            gamma_v: 0.10,
            gamma_a: 0.05,
            delta: 0.10,
            kappa: 10.0,
            p_cap: 0.30,
            low_evidence_threshold: 0.05,
            dt: 0.004,
            beta_topk: 0.002,
            beta_other: 0.005,
            k: 2,
            tau_pred: 0.3,
            p_max: 0.99,
            approach_snap: 0.005,
        }
    }
}

impl EefParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r_g", self.r_g),
            ("h_g", self.h_g),
            ("alpha_g", self.alpha_g),
            ("alpha_d", self.alpha_d),
            ("gamma_v", self.gamma_v),
            ("gamma_a", self.gamma_a),
            ("delta", self.delta),
            ("kappa", self.kappa),
            ("p_cap", self.p_cap),
            ("low_evidence_threshold", self.low_evidence_threshold),
            ("dt", self.dt),
            ("beta_topk", self.beta_topk),
            ("beta_other", self.beta_other),
            ("tau_pred", self.tau_pred),
            ("p_max", self.p_max),
            ("approach_snap", self.approach_snap),
        ] {
            ensure_positive("eef", name, v)?;
        }
        if self.p_cap >= self.p_max || self.p_max > 1.0 {
            return Err(GuiderError::Config(format!(
                "eef needs p_cap < p_max <= 1, got {} and {}",
                self.p_cap, self.p_max
            )));
        }
        if self.k == 0 {
            return Err(GuiderError::Config("eef.k must be >= 1".into()));
        }
        Ok(())
    }
}

/// TCP kinematics at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EefState {
    pub t: f64,
    pub q: Vec3,
    pub qd: Vec3,
    pub qdd: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectBelief {
    pub id: usize,
    pub centroid: Vec3,
    pub p: f64,
    pub p_init: f64,
    pub d_prev: Option<f64>,
    pub low_evidence: bool,
}

impl ObjectBelief {
    pub fn new(id: usize, centroid: Vec3, g: f64, params: &EefParams) -> Self {
        let low = g < params.low_evidence_threshold;
        let ceiling = if low { params.p_cap } else { params.p_max };
        ObjectBelief {
            id,
            centroid,
            p: g.clamp(0.0, ceiling),
            p_init: g,
            d_prev: None,
            low_evidence: low,
        }
    }

    pub fn ceiling(&self, params: &EefParams) -> f64 {
        if self.low_evidence {
            params.p_cap
        } else {
            params.p_max
        }
    }
}

/// Distance from a centroid to the upright gripper cylinder hanging below the TCP.
pub fn cylinder_distance(c: &Vec3, q: &Vec3, params: &EefParams) -> f64 {
    let rho = (c.x - q.x).hypot(c.y - q.y);
    let (z_min, z_max) = (q.z - params.h_g, q.z);
    let radial = (rho - params.r_g).max(0.0);
    let vertical = (z_min - c.z).max(c.z - z_max).max(0.0);
    radial.hypot(vertical)
}

pub fn approach_indicator(d: f64, d_prev: f64, params: &EefParams) -> bool {
    d - d_prev < 0.0 || d < params.approach_snap
}

/// Growth and decay rates.
pub fn growth_decay(low_evidence: bool, d: f64, app: bool, v: f64, a: f64, params: &EefParams) -> (f64, f64) {
    let app_bar = if app { 0.0 } else { 1.0 };
    let alpha_g = if low_evidence {
        params.alpha_g / params.kappa
    } else {
        params.alpha_g
    };
    let g = alpha_g / (d + params.delta) * (1.0 + params.gamma_v * v + params.gamma_a * a) * (1.0 - 0.7 * app_bar);
    let dcy = params.alpha_d
        * (d + params.delta)
        * (1.0 + 0.3 * params.gamma_v * v + 0.3 * params.gamma_a * a)
        * (1.0 + 0.5 * app_bar);
    (g, dcy)
}

/// Second-order extrapolation `τ_pred` ahead.
pub fn predict_tcp(s: &EefState, params: &EefParams) -> Vec3 {
    let tau = params.tau_pred;
    s.q + s.qd * tau + s.qdd * (0.5 * tau * tau)
}

fn nearest_ids(objects: &[ObjectBelief], p: &Vec3, n: usize) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> = objects.iter().map(|o| ((o.centroid - p).norm(), o.id)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order.into_iter().take(n).map(|(_, id)| id).collect()
}

/// K nearest centroids to the predicted TCP, plus the one nearest the current TCP.
pub fn top_k_set(objects: &[ObjectBelief], q_hat: &Vec3, q: &Vec3, k: usize) -> BTreeSet<usize> {
    let mut set: BTreeSet<usize> = nearest_ids(objects, q_hat, k).into_iter().collect();
    set.extend(nearest_ids(objects, q, 1));
    set
}

/// Inputs held constant across the substeps between two log samples.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldInputs {
    pub d: Vec<f64>,
    pub app: Vec<bool>,
    pub top_k: BTreeSet<usize>,
    pub speed: f64,
    pub accel: f64,
}

/// Evaluate distances, approach flags and the top-K set at a log sample and
/// advance each object's previous distance.
pub fn sample_inputs(objects: &mut [ObjectBelief], s: &EefState, params: &EefParams) -> HeldInputs {
    let mut d = Vec::with_capacity(objects.len());
    let mut app = Vec::with_capacity(objects.len());
    for o in objects.iter_mut() {
        let di = cylinder_distance(&o.centroid, &s.q, params);
        let prev = o.d_prev.unwrap_or(di);
        app.push(approach_indicator(di, prev, params));
        d.push(di);
        o.d_prev = Some(di);
    }
    HeldInputs {
        d,
        app,
        top_k: top_k_set(objects, &predict_tcp(s, params), &s.q, params.k),
        speed: s.qd.norm(),
        accel: s.qdd.norm(),
    }
}

/// One forward-Euler step of length `dt` with clipped update.
pub fn step(objects: &mut [ObjectBelief], held: &HeldInputs, params: &EefParams) {
    for (i, o) in objects.iter_mut().enumerate() {
        let (g, dcy) = growth_decay(o.low_evidence, held.d[i], held.app[i], held.speed, held.accel, params);
        let beta = if held.top_k.contains(&o.id) {
            params.beta_topk
        } else {
            params.beta_other
        };
        let candidate = o.p + params.dt * (g - dcy);
        o.p = candidate.max(o.p - beta).min(o.ceiling(params)).max(0.0);
    }
}

/// Divided-difference first and second derivatives of a sampled trajectory:
/// three-point Lagrange stencils, centred inside and one-sided at the ends.
pub fn estimate_derivatives(t: &[f64], q: &[Vec3]) -> Result<Vec<(Vec3, Vec3)>> {
    if t.len() != q.len() {
        return Err(GuiderError::Input(format!("{} timestamps for {} positions", t.len(), q.len())));
    }
    let n = t.len();
    if n < 3 {
        return Err(GuiderError::TooFewSamples(n));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(GuiderError::Input("timestamps must be strictly increasing".into()));
    }
    Ok((0..n)
        .map(|i| {
            let base = i.saturating_sub(1).min(n - 3);
            let nodes = [base, base + 1, base + 2];
            let mut d1 = Vec3::zeros();
            let mut d2 = Vec3::zeros();
            for (j, &nj) in nodes.iter().enumerate() {
                let others: Vec<usize> = nodes.iter().enumerate().filter(|&(m, _)| m != j).map(|(_, &x)| x).collect();
                let den = (t[nj] - t[others[0]]) * (t[nj] - t[others[1]]);
                let l1 = ((t[i] - t[others[0]]) + (t[i] - t[others[1]])) / den;
                let l2 = 2.0 / den;
                d1 += q[nj] * l1;
                d2 += q[nj] * l2;
            }
            (d1, d2)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub object_id: usize,
    pub p: f64,
    pub d: f64,
    pub app: bool,
    pub in_topk: bool,
}

/// Integrates the object beliefs over a stream of log samples.
#[derive(Debug, Clone)]
pub struct EefTracker {
    params: EefParams,
    objects: Vec<ObjectBelief>,
    time: Option<f64>,
    held: Option<HeldInputs>,
    steps: u64,
}

impl EefTracker {
    /// `proposals` are `(centroid, g)` pairs; ids follow their order.
    pub fn new(proposals: &[(Vec3, f64)], params: EefParams) -> Result<Self> {
        params.validate()?;
        if proposals.is_empty() {
            return Err(GuiderError::Input("end-effector tracking needs at least one object".into()));
        }
        let objects = proposals
            .iter()
            .enumerate()
            .map(|(id, (c, g))| ObjectBelief::new(id, *c, *g, &params))
            .collect();
        Ok(EefTracker {
            params,
            objects,
            time: None,
            held: None,
            steps: 0,
        })
    }

    pub fn objects(&self) -> &[ObjectBelief] {
        &self.objects
    }

    pub fn params(&self) -> &EefParams {
        &self.params
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Highest-probability object; ties go to the lower id.
    pub fn top(&self) -> usize {
        let mut best = 0;
        for (i, o) in self.objects.iter().enumerate() {
            if o.p > self.objects[best].p {
                best = i;
            }
        }
        self.objects[best].id
    }

    /// Integrate from the previous sample to `s.t` with the previous sample's
    /// inputs held, then latch the inputs of `s`.
    pub fn observe(&mut self, s: &EefState) -> Result<Vec<TraceRow>> {
        if let Some(t0) = self.time {
            if s.t < t0 {
                return Err(GuiderError::Input(format!("sample at t={} precedes t={}", s.t, t0)));
            }
            if let Some(held) = &self.held {
                let n = ((s.t - t0) / self.params.dt + 1e-9).floor() as u64;
                for _ in 0..n {
                    step(&mut self.objects, held, &self.params);
                }
                self.steps += n;
                // Carry the unintegrated remainder so long logs do not drift.
                self.time = Some(t0 + n as f64 * self.params.dt);
            }
        } else {
            self.time = Some(s.t);
        }
        let held = sample_inputs(&mut self.objects, s, &self.params);
        let rows = self
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| TraceRow {
                t: s.t,
                object_id: o.id,
                p: o.p,
                d: held.d[i],
                app: held.app[i],
                in_topk: held.top_k.contains(&o.id),
            })
            .collect();
        self.held = Some(held);
        Ok(rows)
    }
}

pub fn write_trace_csv<W: Write>(out: &mut W, rows: &[TraceRow]) -> std::io::Result<()> {
    writeln!(out, "t,object_id,p,d,app,in_topk")?;
    for r in rows {
        writeln!(
            out,
            "{:.4},{},{:.6},{:.6},{},{}",
            r.t, r.object_id, r.p, r.d, r.app as u8, r.in_topk as u8
        )?;
    }
    Ok(())
}
