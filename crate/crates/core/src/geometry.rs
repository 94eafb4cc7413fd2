/*
Copyright 2026 The maobs Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

//! Planar convex geometry: hulls, half-plane clipping, areas.

pub type Point = [f64; 2];

#[inline]
pub fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Signed shoelace area; positive for counter-clockwise polygons.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s
}

pub fn area(poly: &[Point]) -> f64 {
    signed_area(poly).abs()
}

pub fn perimeter(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| dist(poly[i], poly[(i + 1) % n])).sum()
}

pub fn centroid(poly: &[Point]) -> Point {
    let a = signed_area(poly);
    let n = poly.len();
    if a.abs() < 1e-300 {
        let (sx, sy) = poly.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p[0], acc.1 + p[1]));
        return [sx / n.max(1) as f64, sy / n.max(1) as f64];
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let w = p[0] * q[1] - q[0] * p[1];
        cx += (p[0] + q[0]) * w;
        cy += (p[1] + q[1]) * w;
    }
    [cx / (6.0 * a), cy / (6.0 * a)]
}

/// Andrew's monotone chain. Returns the hull counter-clockwise without
/// collinear vertices. Degenerate inputs return 1 or 2 points.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.iter().copied().filter(|p| p[0].is_finite() && p[1].is_finite()).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Keeps the part of a convex polygon where `n . p <= c`.
pub fn clip_halfplane(poly: &[Point], n: Point, c: f64) -> Vec<Point> {
    let len = poly.len();
    if len == 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(len + 1);
    for i in 0..len {
        let p = poly[i];
        let q = poly[(i + 1) % len];
        let fp = n[0] * p[0] + n[1] * p[1] - c;
        let fq = n[0] * q[0] + n[1] * q[1] - c;
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Sutherland-Hodgman clip of `subject` against the convex CCW polygon `clip`.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut out = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        // inside is the left side of a->b: cross(a, b, p) >= 0
        let normal = [b[1] - a[1], a[0] - b[0]];
        let c = normal[0] * a[0] + normal[1] * a[1];
        out = clip_halfplane(&out, normal, c);
    }
    out
}

/// Signed distance from `p` to the boundary of a convex CCW polygon;
/// positive inside.
pub fn inner_distance(poly: &[Point], p: Point) -> f64 {
    let n = poly.len();
    let mut d = f64::INFINITY;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let len = dist(a, b);
        if len == 0.0 {
            continue;
        }
        d = d.min(cross(a, b, p) / len);
    }
    d
}

pub fn contains(poly: &[Point], p: Point, tol: f64) -> bool {
    match poly.len() {
        0 => false,
        1 => dist(poly[0], p) <= tol,
        2 => {
            let (a, b) = (poly[0], poly[1]);
            let len = dist(a, b);
            let t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (len * len);
            (0.0..=1.0).contains(&t) && (cross(a, b, p) / len).abs() <= tol
        }
        _ => inner_distance(poly, p) >= -tol,
    }
}

pub fn regular_polygon(center: Point, radius: f64, sides: usize) -> Vec<Point> {
    (0..sides)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / sides as f64;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect()
}

pub fn diameter(points: &[Point]) -> f64 {
    let hull = convex_hull(points);
    let mut d: f64 = 0.0;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            d = d.max(dist(hull[i], hull[j]));
        }
    }
    d
}
