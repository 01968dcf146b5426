// SPDX-License-Identifier: Apache-2.0

//! Planar helpers in pixel coordinates: convex hull, minimum-area rectangle
//! and oriented-rectangle rasterization.
//!
//! Pixel `(x, y)` covers `[x, x+1) × [y, y+1)`; its centre is `(x+0.5, y+0.5)`.

use serde::Serialize;

use crate::field::Mask;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Pt {
    pub x: f64,
    pub y: f64,
}

impl Pt {
    pub const fn new(x: f64, y: f64) -> Self {
        Pt { x, y }
    }

    pub fn pixel_center(i: usize, width: usize) -> Self {
        Pt::new((i % width) as f64 + 0.5, (i / width) as f64 + 0.5)
    }

    pub fn sub(self, o: Pt) -> Pt {
        Pt::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Pt) -> Pt {
        Pt::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, k: f64) -> Pt {
        Pt::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Pt) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Pt) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Pt) -> f64 {
        self.sub(o).norm()
    }

    pub fn midpoint(self, o: Pt) -> Pt {
        Pt::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }
}

/// Convex hull by monotone chain, counter-clockwise in image axes, no
/// collinear vertices. Fewer than three distinct points are returned as-is.
pub fn convex_hull(points: &[Pt]) -> Vec<Pt> {
    let mut p: Vec<Pt> = points.to_vec();
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let turn = |o: Pt, a: Pt, b: Pt| a.sub(o).cross(b.sub(o));
    let mut hull: Vec<Pt> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Pt>> = if pass == 0 {
            Box::new(p.iter())
        } else {
            Box::new(p.iter().rev())
        };
        for &q in iter {
            while hull.len() >= start + 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        // All points collinear: keep the two extremes.
        return vec![p[0], p[p.len() - 1]];
    }
    hull
}

/// Oriented rectangle: centre, unit `axis`, full `length` along the axis and
/// full `width` across it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrientedRect {
    pub center: Pt,
    pub axis: Pt,
    pub length: f64,
    pub width: f64,
}

impl OrientedRect {
    const EDGE_TOL: f64 = 1e-9;

    pub fn contains(&self, p: Pt) -> bool {
        let d = p.sub(self.center);
        let perp = Pt::new(-self.axis.y, self.axis.x);
        d.dot(self.axis).abs() <= 0.5 * self.length + Self::EDGE_TOL
            && d.dot(perp).abs() <= 0.5 * self.width + Self::EDGE_TOL
    }

    pub fn corners(&self) -> [Pt; 4] {
        let a = self.axis.scale(0.5 * self.length);
        let b = Pt::new(-self.axis.y, self.axis.x).scale(0.5 * self.width);
        let c = self.center;
        [c.add(a).add(b), c.add(a).sub(b), c.sub(a).sub(b), c.sub(a).add(b)]
    }

    /// Integer pixels whose centres fall inside, including off-image pixels.
    pub fn covered_pixels(&self) -> Vec<(i64, i64)> {
        let cs = self.corners();
        let lo_x = cs.iter().map(|c| c.x).fold(f64::INFINITY, f64::min);
        let hi_x = cs.iter().map(|c| c.x).fold(f64::NEG_INFINITY, f64::max);
        let lo_y = cs.iter().map(|c| c.y).fold(f64::INFINITY, f64::min);
        let hi_y = cs.iter().map(|c| c.y).fold(f64::NEG_INFINITY, f64::max);
        let mut out = Vec::new();
        for y in (lo_y - 1.0).floor() as i64..=(hi_y + 1.0).ceil() as i64 {
            for x in (lo_x - 1.0).floor() as i64..=(hi_x + 1.0).ceil() as i64 {
                if self.contains(Pt::new(x as f64 + 0.5, y as f64 + 0.5)) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Fraction of covered pixel centres that land on set mask pixels.
    /// Pixels beyond the image count as unset; an empty footprint gives 0.
    pub fn coverage(&self, mask: &Mask) -> f64 {
        let px = self.covered_pixels();
        if px.is_empty() {
            return 0.0;
        }
        let hit = px
            .iter()
            .filter(|&&(x, y)| matches!(mask.get_signed(x, y), Some(true)))
            .count();
        hit as f64 / px.len() as f64
    }
}

/// Minimum-area enclosing rectangle of a point set by rotating calipers
/// over hull edges. Returns `(rect, short side, long side)`.
pub fn min_area_rect(points: &[Pt]) -> Option<(OrientedRect, f64, f64)> {
    let hull = convex_hull(points);
    match hull.len() {
        0 => return None,
        1 => {
            return Some((
                OrientedRect {
                    center: hull[0],
                    axis: Pt::new(1.0, 0.0),
                    length: 0.0,
                    width: 0.0,
                },
                0.0,
                0.0,
            ))
        }
        _ => {}
    }
    let mut best: Option<(f64, OrientedRect)> = None;
    for i in 0..hull.len() {
        let e = hull[(i + 1) % hull.len()].sub(hull[i]);
        let len = e.norm();
        if len == 0.0 {
            continue;
        }
        let u = e.scale(1.0 / len);
        let v = Pt::new(-u.y, u.x);
        let (mut u0, mut u1, mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &hull {
            let (a, b) = (p.dot(u), p.dot(v));
            u0 = u0.min(a);
            u1 = u1.max(a);
            v0 = v0.min(b);
            v1 = v1.max(b);
        }
        let area = (u1 - u0) * (v1 - v0);
        if best.as_ref().map_or(true, |(a, _)| area < *a - 1e-12) {
            let center = u.scale(0.5 * (u0 + u1)).add(v.scale(0.5 * (v0 + v1)));
            best = Some((
                area,
                OrientedRect {
                    center,
                    axis: u,
                    length: u1 - u0,
                    width: v1 - v0,
                },
            ));
        }
    }
    best.map(|(_, r)| (r, r.length.min(r.width), r.length.max(r.width)))
}

/// Corner points of every boundary pixel, the outline used for
/// pixel-exact extents.
pub fn pixel_corner_outline(mask: &Mask, boundary: &[usize]) -> Vec<Pt> {
    let w = mask.width();
    let mut pts = Vec::with_capacity(boundary.len() * 4);
    for &i in boundary {
        let (x, y) = ((i % w) as f64, (i / w) as f64);
        pts.extend([Pt::new(x, y), Pt::new(x + 1.0, y), Pt::new(x, y + 1.0), Pt::new(x + 1.0, y + 1.0)]);
    }
    pts
}
