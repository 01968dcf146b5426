// SPDX-License-Identifier: Apache-2.0

//! Heatmap rendering to binary PPM.
//!
//! Values are clamped to a range (default `[0, 1]`) and mapped through a
//! five-stop piecewise-linear ramp:
//!
//! | t    | RGB             |
//! |------|-----------------|
//! | 0.00 | (0, 0, 4)       |
//! | 0.25 | (87, 16, 110)   |
//! | 0.50 | (188, 55, 84)   |
//! | 0.75 | (249, 142, 9)   |
//! | 1.00 | (252, 255, 164) |
//!
//! A strict maximum is drawn in pure green. One legend row sweeping the ramp
//! left to right is appended below the image. Field row 0 is the top row.

use std::path::Path;

use crate::error::{GuiderError, Result};
use crate::field::ScalarField;

const STOPS: [(f64, [f64; 3]); 5] = [
    (0.00, [0.0, 0.0, 4.0]),
    (0.25, [87.0, 16.0, 110.0]),
    (0.50, [188.0, 55.0, 84.0]),
    (0.75, [249.0, 142.0, 9.0]),
    (1.00, [252.0, 255.0, 164.0]),
];

pub const PEAK_MARKER: [u8; 3] = [0, 255, 0];

pub fn colormap(t: f64) -> [u8; 3] {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    for pair in STOPS.windows(2) {
        let ((t0, c0), (t1, c1)) = (pair[0], pair[1]);
        if t <= t1 {
            let s = (t - t0) / (t1 - t0);
            return [0, 1, 2].map(|k| (c0[k] + s * (c1[k] - c0[k])).round() as u8);
        }
    }
    STOPS[4].1.map(|c| c as u8)
}

/// Index of the unique strict maximum, if any.
fn strict_peak(field: &ScalarField) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    let mut unique = false;
    for (i, &v) in field.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some((_, b)) if v < b => {}
            Some((_, b)) if v == b => unique = false,
            _ => {
                best = Some((i, v));
                unique = true;
            }
        }
    }
    best.filter(|_| unique).map(|(i, _)| i)
}

pub fn encode_heatmap(field: &ScalarField, range: (f64, f64)) -> Result<Vec<u8>> {
    if field.is_empty() {
        return Err(GuiderError::Input("cannot render an empty field".into()));
    }
    let (lo, hi) = range;
    if !(hi > lo) {
        return Err(GuiderError::Input(format!("render range must satisfy lo < hi, got [{lo}, {hi}]")));
    }
    let (w, h) = (field.width(), field.height());
    let mut out = format!("P6\n{w} {}\n255\n", h + 1).into_bytes();
    let peak = strict_peak(field);
    for (i, &v) in field.iter().enumerate() {
        let rgb = if Some(i) == peak {
            PEAK_MARKER
        } else {
            colormap((v - lo) / (hi - lo))
        };
        out.extend_from_slice(&rgb);
    }
    for x in 0..w {
        let t = if w == 1 { 1.0 } else { x as f64 / (w - 1) as f64 };
        out.extend_from_slice(&colormap(t));
    }
    Ok(out)
}

pub fn render_heatmap(field: &ScalarField, out_path: &Path, range: (f64, f64)) -> Result<()> {
    let bytes = encode_heatmap(field, range)?;
    std::fs::write(out_path, bytes).map_err(|e| GuiderError::io(out_path, e))
}
