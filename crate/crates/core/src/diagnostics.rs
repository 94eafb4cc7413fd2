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

//! Regularity diagnostics for computed maximizers.

use rayon::prelude::*;
use serde::Serialize;

use crate::convexity::{fd_gradient, hessian_field, hessian_field_of, normal_mapping_cell, ConvexGridFunction};
use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::grid::{GridFunction, NEIGHBORS};
use crate::interp;
use crate::legendre::{legendre_transform, TransformMode};
use crate::solver::contact_tolerance;

/// Number of rays used by the growth fits.
pub const GROWTH_DIRECTIONS: usize = 16;
/// Flatness threshold of the strict-convexity scan, in units of `h`.
pub const FLAT_DIAMETER: f64 = 3.0;
/// Primary determinants below this fraction of the upper bound mark the lower
/// bound as degenerate.
const DEGENERATE_DET_FRACTION: f64 = 1e-8;

/// Slope of a supporting plane at `k`: the centroid of the normal cell when it
/// exists, the finite-difference gradient otherwise.
pub fn support_slope(u: &ConvexGridFunction, k: usize) -> Point {
    match normal_mapping_cell(u, k) {
        Ok(cell) if !cell.is_empty() => geometry::centroid(&cell),
        _ => fd_gradient(u, k),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetBounds {
    pub upper: f64,
    /// Reciprocal of the largest dual determinant at matched slopes; zero when
    /// the primal determinant degenerates in the region.
    pub lower: f64,
    pub degenerate: bool,
    pub nodes: usize,
}

impl DetBounds {
    pub fn finite_positive(&self) -> bool {
        self.upper.is_finite() && self.upper > 0.0 && self.lower.is_finite() && self.lower > 0.0
    }
}

/// Determinant bounds over interior nodes at distance at least `margin`
/// (`>= 4h`) from the boundary.
pub fn det_bounds(u: &ConvexGridFunction, margin: f64) -> Result<DetBounds> {
    let grid = u.grid();
    if !(margin >= 4.0 * grid.h() * (1.0 - 1e-12)) {
        return Err(Error::InvalidSpec(format!("margin {margin} below 4h")));
    }
    let region: Vec<usize> =
        grid.interior_nodes().filter(|&k| grid.boundary_distance(grid.coord(k)) >= margin).collect();
    if region.is_empty() {
        return Err(Error::EmptyInterior(margin));
    }
    let hf = hessian_field(u);
    let upper = region.iter().map(|&k| hf.det(k)).fold(0.0, f64::max);
    let dmin = region.iter().map(|&k| hf.det(k)).fold(f64::INFINITY, f64::min);
    let degenerate = !(upper > 0.0) || dmin <= DEGENERATE_DET_FRACTION * upper;
    let lower = if degenerate {
        0.0
    } else {
        match legendre_transform(u, None, TransformMode::Refined) {
            Ok(pair) => {
                let ddet = hessian_field(&pair.dual).det_function();
                let dgrid = pair.dual_grid();
                let worst = region
                    .iter()
                    .filter_map(|&k| {
                        let y = pair.slopes[k];
                        let j = dgrid.locate(y)?;
                        if dgrid.depth(j) < 2 {
                            return None;
                        }
                        interp::sample(&ddet, y)
                    })
                    .fold(0.0, f64::max);
                if worst > 0.0 {
                    1.0 / worst
                } else {
                    dmin
                }
            }
            Err(_) => 0.0,
        }
    };
    Ok(DetBounds { upper, lower, degenerate: degenerate || lower == 0.0, nodes: region.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub passed: bool,
    pub max_diameter: f64,
    pub worst_node: Option<usize>,
    /// Endpoints of the longest chord of the worst contact set.
    pub worst_segment: Option<[Point; 2]>,
    /// Nodes of the worst contact set.
    #[serde(skip)]
    pub worst_set: Vec<usize>,
    pub tolerance: f64,
}

/// Median of the smaller Hessian eigenvalue over interior nodes.
fn reference_curvature(u: &ConvexGridFunction) -> f64 {
    let hf = hessian_field(u);
    let mut k: Vec<f64> = u
        .grid()
        .interior_nodes()
        .map(|n| {
            let [a, b, c] = hf.entries(n);
            let m = 0.5 * (a + b);
            let r = (0.25 * (a - b) * (a - b) + c * c).sqrt();
            (m - r).max(0.0)
        })
        .collect();
    if k.is_empty() {
        return 0.0;
    }
    k.sort_by(f64::total_cmp);
    k[k.len() / 2]
}

fn farthest_pair(points: &[Point]) -> (f64, [Point; 2]) {
    let hull = geometry::convex_hull(points);
    let mut best = (0.0, [points[0], points[0]]);
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            let d = geometry::dist(hull[i], hull[j]);
            if d > best.0 {
                best = (d, [hull[i], hull[j]]);
            }
        }
    }
    best
}

/// Tangent-plane contact sets at every interior node; passes when none is
/// wider than `3h`.
pub fn strict_convexity_scan(u: &ConvexGridFunction) -> ScanReport {
    let grid = u.grid();
    let h = grid.h();
    let tol = (0.1 * reference_curvature(u) * h * h).max(1e-12 * u.range().max(1.0));
    let v = u.values();
    let coords = grid.coords();
    let nodes: Vec<usize> = grid.interior_nodes().collect();
    let sets: Vec<(f64, usize, [Point; 2])> = nodes
        .par_iter()
        .map(|&k| {
            let p = support_slope(u, k);
            let x0 = coords[k];
            let set: Vec<Point> = (0..grid.len())
                .filter(|&j| {
                    let x = coords[j];
                    v[j] - v[k] - p[0] * (x[0] - x0[0]) - p[1] * (x[1] - x0[1]) <= tol
                })
                .map(|j| coords[j])
                .collect();
            let (d, seg) = farthest_pair(&set);
            (d, k, seg)
        })
        .collect();
    let worst = sets.iter().fold(None::<&(f64, usize, [Point; 2])>, |b, s| match b {
        Some(b) if b.0 >= s.0 => Some(b),
        _ => Some(s),
    });
    let (max_diameter, worst_node, worst_segment) = match worst {
        Some(&(d, k, seg)) => (d, Some(k), Some(seg)),
        None => (0.0, None, None),
    };
    let worst_set = worst_node
        .map(|k| {
            let p = support_slope(u, k);
            let x0 = coords[k];
            (0..grid.len())
                .filter(|&j| {
                    let x = coords[j];
                    v[j] - v[k] - p[0] * (x[0] - x0[0]) - p[1] * (x[1] - x0[1]) <= tol
                })
                .collect()
        })
        .unwrap_or_default();
    ScanReport {
        passed: max_diameter <= FLAT_DIAMETER * h * (1.0 + 1e-9),
        max_diameter,
        worst_node,
        worst_segment,
        worst_set,
        tolerance: tol,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthReport {
    pub base: Point,
    pub radii: Vec<f64>,
    /// Median over rays of `u - l` at each radius.
    pub median_growth: Vec<f64>,
    /// Log-log slope of the median curve.
    pub exponent: f64,
    pub r_squared: f64,
    /// `1 + alpha` from the halving ratio `sigma`.
    pub upper_exponent: f64,
    /// `1 + beta` from the doubling factor `theta`.
    pub lower_exponent: f64,
    pub theta: f64,
    pub sigma: f64,
}

impl GrowthReport {
    /// Fitted exponents ordered inside `(1, 3]` (up to `slack`).
    pub fn consistent(&self, slack: f64) -> bool {
        self.upper_exponent > 1.0 - slack
            && self.upper_exponent <= self.lower_exponent + slack
            && self.lower_exponent <= 3.0 + slack
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,growth\n");
        for (r, g) in self.radii.iter().zip(&self.median_growth) {
            s.push_str(&format!("{r:?},{g:?}\n"));
        }
        s
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

/// Radial growth of `u - l` around the node nearest `x0`, where `l` supports
/// `u` there. Radii halve from the inner distance down to `2h`.
pub fn growth_exponents(u: &ConvexGridFunction, x0: Point) -> Result<GrowthReport> {
    let grid = u.grid();
    let k0 = grid
        .locate(x0)
        .filter(|&k| grid.is_interior(k))
        .ok_or_else(|| Error::InvalidSpec(format!("growth base {x0:?} is not an interior node")))?;
    let base = grid.coord(k0);
    let p = support_slope(u, k0);
    let u0 = u.value(k0);
    let h = grid.h();
    let r_max = grid.boundary_distance(base) - 1e-9 * h;
    let mut radii = Vec::new();
    let mut r = r_max;
    while r >= 2.0 * h * (1.0 - 1e-6) {
        radii.push(r);
        r *= 0.5;
    }
    if radii.len() < 3 {
        return Err(Error::InsufficientRadii(radii.len()));
    }
    radii.reverse();
    let rays: Vec<Point> = (0..GROWTH_DIRECTIONS)
        .map(|m| {
            let t = 2.0 * std::f64::consts::PI * m as f64 / GROWTH_DIRECTIONS as f64;
            [t.cos(), t.sin()]
        })
        .collect();
    let g = |d: Point, r: f64| -> Option<f64> {
        let x = [base[0] + r * d[0], base[1] + r * d[1]];
        interp::sample(u.function(), x).map(|v| v - u0 - p[0] * (x[0] - base[0]) - p[1] * (x[1] - base[1]))
    };
    let mut med = Vec::with_capacity(radii.len());
    for &r in &radii {
        let vals: Vec<f64> = rays.iter().filter_map(|&d| g(d, r)).collect();
        med.push(median(vals).max(0.0));
    }
    let keep: Vec<usize> = (0..radii.len()).filter(|&i| med[i] > 0.0).collect();
    if keep.len() < 3 {
        return Err(Error::InsufficientRadii(keep.len()));
    }
    let lx: Vec<f64> = keep.iter().map(|&i| radii[i].ln()).collect();
    let ly: Vec<f64> = keep.iter().map(|&i| med[i].ln()).collect();
    let (exponent, r_squared) = fit(&lx, &ly);
    // halving ratio between consecutive dyadic radii
    let sigma = median(
        keep.windows(2).filter(|w| w[1] == w[0] + 1).map(|w| 1.0 - 2.0 * med[w[0]] / med[w[1]]).collect(),
    );
    let upper_exponent = 1.0 - (1.0 - sigma).log2();
    // doubling factor: per ray, t with g(t r) = g(r) / 2
    let mut thetas = Vec::new();
    for &i in &keep {
        for &d in &rays {
            let Some(top) = g(d, radii[i]) else { continue };
            if !(top > 0.0) {
                continue;
            }
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..60 {
                let m = 0.5 * (lo + hi);
                match g(d, m * radii[i]) {
                    Some(v) if v < 0.5 * top => lo = m,
                    _ => hi = m,
                }
            }
            thetas.push(0.5 * (lo + hi));
        }
    }
    let theta = median(thetas);
    let lower_exponent = 0.5f64.ln() / theta.ln();
    Ok(GrowthReport {
        base,
        radii,
        median_growth: med,
        exponent,
        r_squared,
        upper_exponent,
        lower_exponent,
        theta,
        sigma,
    })
}

/// Contact nodes `u - psi <= 10 h^2 range(u)`.
pub fn contact_set(u: &GridFunction, psi: &GridFunction) -> Result<Vec<bool>> {
    let tol = contact_tolerance(u);
    Ok(u.zip_with(psi, |a, b| a - b)?.values().iter().map(|&g| g <= tol).collect())
}

/// Contact nodes with a neighbour outside the contact set.
pub fn contact_boundary(u: &GridFunction, psi: &GridFunction) -> Result<Vec<usize>> {
    let t = contact_set(u, psi)?;
    let grid = u.grid();
    Ok((0..grid.len())
        .filter(|&k| t[k] && NEIGHBORS.iter().any(|&(di, dj)| grid.neighbor(k, di, dj).is_some_and(|n| !t[n])))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadraticGrowth {
    pub c1: f64,
    pub c2: f64,
    pub samples: usize,
}

impl QuadraticGrowth {
    /// `C1` bounded away from zero relative to `C2`.
    pub fn passed(&self) -> bool {
        self.c1.is_finite() && self.c2.is_finite() && self.c1 > 1e-3 * self.c2.max(f64::MIN_POSITIVE)
    }
}

/// Bounds of `(u - l_p) / |x - p|^2` over radii in `[2h, r_max]`, where `l_p`
/// supports `u` at the contact-boundary node nearest `p`. Under full
/// contact the nearest contact node is used.
pub fn quadratic_growth_check(u: &ConvexGridFunction, psi: &GridFunction, p: Point) -> Result<QuadraticGrowth> {
    let grid = u.grid();
    let mut boundary = contact_boundary(u.function(), psi)?;
    if boundary.is_empty() {
        // full contact: every contact node is a base candidate
        let t = contact_set(u.function(), psi)?;
        boundary = (0..grid.len()).filter(|&k| t[k]).collect();
    }
    let h = grid.h();
    let k = boundary
        .iter()
        .copied()
        .filter(|&k| geometry::dist(grid.coord(k), p) <= h * (1.0 + 1e-9))
        .min_by(|&a, &b| geometry::dist(grid.coord(a), p).total_cmp(&geometry::dist(grid.coord(b), p)))
        .ok_or(Error::NoContactBoundary)?;
    let base = grid.coord(k);
    // p is in T only up to the contact tolerance, so the plane supports u
    // itself; on exact contact it is psi's tangent plane
    let slope = support_slope(u, k);
    let level = u.value(k);
    let r_max = grid.boundary_distance(base);
    if r_max < 2.0 * h {
        return Err(Error::InsufficientRadii(0));
    }
    let (mut c1, mut c2, mut samples) = (f64::INFINITY, 0.0f64, 0usize);
    let mut r = 2.0 * h;
    while r <= r_max {
        for m in 0..GROWTH_DIRECTIONS {
            let t = 2.0 * std::f64::consts::PI * m as f64 / GROWTH_DIRECTIONS as f64;
            let x = [base[0] + r * t.cos(), base[1] + r * t.sin()];
            if let Some(v) = interp::sample(u.function(), x) {
                let q = (v - level - slope[0] * (x[0] - base[0]) - slope[1] * (x[1] - base[1])) / (r * r);
                c1 = c1.min(q);
                c2 = c2.max(q);
                samples += 1;
            }
        }
        r *= 2.0;
    }
    if samples == 0 {
        return Err(Error::InsufficientRadii(0));
    }
    Ok(QuadraticGrowth { c1, c2, samples })
}

/// Distance between the widest tangent-plane contact set (when wider than
/// `3h`) and the obstacle contact set; `f64::MAX` without a flat candidate.
pub fn contact_separation(u: &ConvexGridFunction, psi: &GridFunction, scan: &ScanReport) -> Result<f64> {
    if scan.passed || scan.worst_set.is_empty() {
        return Ok(f64::MAX);
    }
    let grid = u.grid();
    let t = contact_set(u.function(), psi)?;
    let contact: Vec<Point> = (0..grid.len()).filter(|&k| t[k]).map(|k| grid.coord(k)).collect();
    if contact.is_empty() {
        return Ok(f64::MAX);
    }
    let mut d = f64::MAX;
    for &k in &scan.worst_set {
        let x = grid.coord(k);
        for &c in &contact {
            d = d.min(geometry::dist(x, c));
        }
    }
    Ok(d)
}

/// Interior nodes where the one-sided slopes along an axis or diagonal jump
/// by at least `min_jump`: `(u(x + re) + u(x - re) - 2u(x)) / r` with `r` the
/// stencil length. C^{1,1} functions give `O(h)`, a crease `|x1|` gives 2.
pub fn crease_nodes(u: &GridFunction, min_jump: f64) -> Vec<usize> {
    let grid = u.grid();
    let h = grid.h();
    grid.interior_nodes()
        .filter(|&k| {
            [(1, 0), (0, 1), (1, 1), (1, -1)].iter().any(|&(di, dj)| {
                let (Some(a), Some(b)) = (grid.neighbor(k, di, dj), grid.neighbor(k, -di, -dj)) else {
                    return false;
                };
                let r = h * ((di * di + dj * dj) as f64).sqrt();
                (u.value(a) + u.value(b) - 2.0 * u.value(k)) / r >= min_jump
            })
        })
        .collect()
}

/// `true` when the smaller Hessian eigenvalue of `psi` is at least `floor` at
/// every interior node.
pub fn uniformly_convex(psi: &GridFunction, floor: f64) -> bool {
    let hf = hessian_field_of(psi);
    psi.grid().interior_nodes().all(|k| {
        let [a, b, c] = hf.entries(k);
        0.5 * (a + b) - (0.25 * (a - b) * (a - b) + c * c).sqrt() >= floor
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Domain, Grid2D};
    use std::sync::Arc;

    fn sq(h: f64) -> Arc<Grid2D> {
        Arc::new(build_grid(&Domain::rectangle([-1.0, -1.0], [1.0, 1.0]), h).unwrap())
    }

    #[test]
    fn paraboloid_bounds_and_scan() {
        let g = sq(1.0 / 16.0);
        let u = ConvexGridFunction::from_fn(&g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        let b = det_bounds(&u, 0.25).unwrap();
        assert!((b.upper - 1.0).abs() < 0.05 && (b.lower - 1.0).abs() < 0.05, "{b:?}");
        let s = strict_convexity_scan(&u);
        assert!(s.passed && s.max_diameter <= g.h(), "{s:?}");
    }

    #[test]
    fn quadratic_doubling() {
        let g = sq(1.0 / 32.0);
        let u = ConvexGridFunction::from_fn(&g, |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        let r = growth_exponents(&u, [0.0, 0.0]).unwrap();
        assert!((r.theta - 0.5f64.sqrt()).abs() < 1e-3, "{r:?}");
        assert!((r.exponent - 2.0).abs() < 1e-3 && (r.lower_exponent - 2.0).abs() < 1e-2);
        assert!((r.upper_exponent - 2.0).abs() < 1e-2 && r.consistent(1e-9));
    }

    #[test]
    fn ribbon_is_flagged() {
        let g = sq(1.0 / 16.0);
        let u = ConvexGridFunction::from_fn(&g, |x| (x[0].abs() - 0.5).max(0.0)).unwrap();
        let s = strict_convexity_scan(&u);
        assert!(!s.passed);
        let [a, b] = s.worst_segment.unwrap();
        assert!((a[1] - b[1]).abs() > 1.0);
        let cone = ConvexGridFunction::from_fn(&g, |x| (x[0] * x[0] + x[1] * x[1]).sqrt()).unwrap();
        assert!(!strict_convexity_scan(&cone).passed);
        let b = det_bounds(&cone, 0.25).unwrap();
        assert!(b.upper.is_finite() && b.lower == 0.0 && b.degenerate);
    }

    #[test]
    fn full_contact_growth_is_half() {
        let g = sq(1.0 / 16.0);
        let f = |x: Point| 0.5 * (x[0] * x[0] + x[1] * x[1]);
        let u = ConvexGridFunction::from_fn(&g, f).unwrap();
        let psi = GridFunction::from_fn(&g, f).unwrap();
        let q = quadratic_growth_check(&u, &psi, [0.0, 0.0]).unwrap();
        assert!((q.c1 - 0.5).abs() < 0.05 && (q.c2 - 0.5).abs() < 0.05, "{q:?}");
        let empty = GridFunction::constant(&g, -1.0);
        assert!(matches!(quadratic_growth_check(&u, &empty, [0.0, 0.0]), Err(Error::NoContactBoundary)));
    }
}
