// SPDX-License-Identifier: Apache-2.0

//! Binary-image kernels: connected components, boundary extraction, exact
//! Euclidean distance transform and disk erosion.

use std::collections::VecDeque;

use crate::field::Mask;

const NEIGHBORS_8: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

const NEIGHBORS_4: [(i64, i64); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

/// 8-connected components of the set pixels.
///
/// Components are ordered by their lowest row-major index and each member
/// list is sorted ascending.
pub fn components_8(mask: &Mask) -> Vec<Vec<usize>> {
    let w = mask.width();
    let mut label = vec![usize::MAX; mask.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = Vec::new();
        label[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            members.push(i);
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for (dx, dy) in NEIGHBORS_8 {
                let (nx, ny) = (x + dx, y + dy);
                if mask.in_bounds(nx, ny) {
                    let j = ny as usize * w + nx as usize;
                    if mask[j] && label[j] == usize::MAX {
                        label[j] = id;
                        queue.push_back(j);
                    }
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// Set pixels with at least one 4-neighbour that is unset or outside the image.
pub fn boundary_pixels(mask: &Mask) -> Vec<usize> {
    let w = mask.width();
    (0..mask.len())
        .filter(|&i| {
            mask[i] && {
                let (x, y) = ((i % w) as i64, (i / w) as i64);
                NEIGHBORS_4
                    .iter()
                    .any(|&(dx, dy)| !matches!(mask.get_signed(x + dx, y + dy), Some(true)))
            }
        })
        .collect()
}

/// Squared Euclidean distance from every pixel to the nearest unset pixel,
/// treating everything outside the image as unset. Unset pixels map to 0.
pub fn squared_distance_to_background(mask: &Mask) -> Vec<f64> {
    let (w, h) = (mask.width(), mask.height());
    // One-pixel background ring stands in for the outside of the image.
    let (pw, ph) = (w + 2, h + 2);
    let inf = ((pw * pw + ph * ph) as f64) * 4.0;
    let mut grid = vec![0.0f64; pw * ph];
    for y in 0..h {
        for x in 0..w {
            if *mask.get(x, y) {
                grid[(y + 1) * pw + x + 1] = inf;
            }
        }
    }

    let mut buf_in = vec![0.0; pw.max(ph)];
    let mut buf_out = vec![0.0; pw.max(ph)];
    let mut v = vec![0usize; pw.max(ph)];
    let mut z = vec![0.0f64; pw.max(ph) + 1];

    for x in 0..pw {
        for y in 0..ph {
            buf_in[y] = grid[y * pw + x];
        }
        edt_1d(&buf_in[..ph], &mut buf_out[..ph], &mut v, &mut z);
        for y in 0..ph {
            grid[y * pw + x] = buf_out[y];
        }
    }
    for y in 0..ph {
        buf_in[..pw].copy_from_slice(&grid[y * pw..(y + 1) * pw]);
        edt_1d(&buf_in[..pw], &mut buf_out[..pw], &mut v, &mut z);
        grid[y * pw..(y + 1) * pw].copy_from_slice(&buf_out[..pw]);
    }

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = grid[(y + 1) * pw + x + 1];
        }
    }
    out
}

/// Lower envelope of parabolas (Felzenszwalb & Huttenlocher 1D pass).
fn edt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let intersect = |q: usize, p: usize| {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
    };
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let mut s = intersect(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = intersect(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate().take(n) {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}

/// Erode with a disk structuring element `{(dx,dy) : dx²+dy² ≤ radius²}`.
/// Pixels outside the image count as unset.
pub fn erode_disk(mask: &Mask, radius: u32) -> Mask {
    let r2 = (radius as f64) * (radius as f64);
    let dist = squared_distance_to_background(mask);
    let data = dist.iter().map(|&d| d > r2).collect();
    Mask::from_vec(mask.width(), mask.height(), data).expect("same shape")
}
