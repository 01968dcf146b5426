// SPDX-License-Identifier: Apache-2.0

//! Timeline metrics and paired statistics.
//!
//! A timeline is piecewise constant: the prediction made at sample `t_k`
//! holds until `t_{k+1}`, and the last one holds until the contact (or
//! command) instant. Samples at or after that instant are ignored.

use serde::Serialize;

use crate::error::{GuiderError, Result};

/// Slack on the hold-duration comparison, absorbing timestamp rounding.
pub const HOLD_EPS: f64 = 1e-9;
/// Largest sample count accepted by [`wilcoxon_exact`] after dropping zeros.
pub const WILCOXON_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub predicted: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricResult {
    /// Contact time minus the start of the first held correct run.
    pub rtcp: Option<f64>,
    /// Percent of the time after the first correct prediction spent correct.
    pub stability: f64,
    pub first_confident_t: Option<f64>,
    pub first_correct_t: Option<f64>,
    pub contact_t: f64,
}

/// Single-pass evaluation over a timeline.
#[derive(Debug, Clone)]
pub struct StreamingMetrics {
    truth: usize,
    contact_t: f64,
    hold: f64,
    prev: Option<Sample>,
    run_start: Option<f64>,
    confident: Option<f64>,
    first_correct: Option<f64>,
    correct_time: f64,
}

impl StreamingMetrics {
    pub fn new(truth: usize, contact_t: f64, hold: f64) -> Result<Self> {
        if !contact_t.is_finite() || !(hold >= 0.0) {
            return Err(GuiderError::Input(format!("bad contact time {contact_t} or hold {hold}")));
        }
        Ok(StreamingMetrics {
            truth,
            contact_t,
            hold,
            prev: None,
            run_start: None,
            confident: None,
            first_correct: None,
            correct_time: 0.0,
        })
    }

    fn close_interval(&mut self, end: f64) {
        let Some(prev) = self.prev else { return };
        let end = end.min(self.contact_t);
        if prev.t >= end {
            return;
        }
        if prev.predicted == Some(self.truth) {
            self.correct_time += end - prev.t;
            if let Some(start) = self.run_start {
                if self.confident.is_none() && end - start >= self.hold - HOLD_EPS {
                    self.confident = Some(start);
                }
            }
        }
    }

    pub fn push(&mut self, s: Sample) -> Result<()> {
        match self.prev {
            None if self.contact_t < s.t => {
                return Err(GuiderError::Input(format!(
                    "contact time {} precedes the timeline start {}",
                    self.contact_t, s.t
                )))
            }
            Some(p) if s.t < p.t => {
                return Err(GuiderError::Input(format!("timeline goes back in time at t={}", s.t)));
            }
            _ => {}
        }
        if s.t >= self.contact_t && self.prev.is_some() {
            self.close_interval(self.contact_t);
            self.prev = Some(Sample { t: self.contact_t, predicted: None });
            return Ok(());
        }
        self.close_interval(s.t);
        let correct = s.predicted == Some(self.truth) && s.t < self.contact_t;
        if correct {
            if self.first_correct.is_none() {
                self.first_correct = Some(s.t);
            }
            if self.run_start.is_none() {
                self.run_start = Some(s.t);
            }
        } else {
            self.run_start = None;
        }
        self.prev = Some(s);
        Ok(())
    }

    pub fn finish(mut self) -> Result<MetricResult> {
        if self.prev.is_none() {
            return Err(GuiderError::Input("timeline is empty".into()));
        }
        self.close_interval(self.contact_t);
        let stability = match self.first_correct {
            Some(t0) if self.contact_t > t0 => (100.0 * self.correct_time / (self.contact_t - t0)).clamp(0.0, 100.0),
            _ => 0.0,
        };
        Ok(MetricResult {
            rtcp: self.confident.map(|t| self.contact_t - t),
            stability,
            first_confident_t: self.confident,
            first_correct_t: self.first_correct,
            contact_t: self.contact_t,
        })
    }
}

pub fn evaluate(samples: &[Sample], truth: usize, contact_t: f64, hold: f64) -> Result<MetricResult> {
    let mut m = StreamingMetrics::new(truth, contact_t, hold)?;
    for &s in samples {
        m.push(s)?;
    }
    m.finish()
}

pub fn rtcp(samples: &[Sample], truth: usize, contact_t: f64, hold: f64) -> Result<Option<f64>> {
    Ok(evaluate(samples, truth, contact_t, hold)?.rtcp)
}

pub fn stability(samples: &[Sample], truth: usize, contact_t: f64) -> Result<f64> {
    Ok(evaluate(samples, truth, contact_t, 0.0)?.stability)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub median: f64,
    /// Median absolute deviation, unscaled.
    pub mad: f64,
    pub n: usize,
}

fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn aggregate(values: &[f64]) -> Result<Aggregate> {
    if values.is_empty() {
        return Err(GuiderError::Input("cannot aggregate an empty set".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(GuiderError::Input("cannot aggregate NaN".into()));
    }
    let median = median_of(values.to_vec());
    let mad = median_of(values.iter().map(|v| (v - median).abs()).collect());
    Ok(Aggregate {
        median,
        mad,
        n: values.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Alternative {
    /// First member of each pair tends to be larger.
    Greater,
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilcoxonResult {
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_two: f64,
    pub p_one: f64,
    /// Matched-pairs rank-biserial correlation.
    pub r_bs: f64,
}

/// Mid-ranks of `values` (1-based), doubled so they stay integral.
pub fn doubled_midranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share their mean; doubled that is i + j + 2.
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

/// Exact paired signed-rank test on `x − y`.
pub fn wilcoxon_exact(pairs: &[(f64, f64)], alternative: Alternative) -> Result<WilcoxonResult> {
    if pairs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(GuiderError::Input("Wilcoxon pairs must be finite".into()));
    }
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            n,
            w_plus: 0.0,
            w_minus: 0.0,
            p_two: 1.0,
            p_one: 1.0,
            r_bs: 0.0,
        });
    }
    if n > WILCOXON_MAX_N {
        return Err(GuiderError::Input(format!(
            "exact Wilcoxon supports at most {WILCOXON_MAX_N} non-zero pairs, got {n}"
        )));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let r2 = doubled_midranks(&abs);
    let total: u64 = r2.iter().sum();
    let w2_plus: u64 = r2.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();

    // counts[s] = number of sign patterns whose doubled W+ equals s.
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in &r2 {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(n as i32);
    let upper: u64 = counts[w2_plus as usize..].iter().sum();
    let lower: u64 = counts[..=w2_plus as usize].iter().sum();
    let (p_upper, p_lower) = (upper as f64 / all, lower as f64 / all);
    let p_one = match alternative {
        Alternative::Greater => p_upper,
        Alternative::Less => p_lower,
    };
    let (w_plus, w_minus) = (w2_plus as f64 / 2.0, (total - w2_plus) as f64 / 2.0);
    Ok(WilcoxonResult {
        n,
        w_plus,
        w_minus,
        p_two: (2.0 * p_upper.min(p_lower)).min(1.0),
        p_one,
        r_bs: (w_plus - w_minus) / (w_plus + w_minus),
    })
}
