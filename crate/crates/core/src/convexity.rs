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

//! Discrete convex analysis on the masked lattice.
//!
//! Convexity is the wide-stencil notion: at every interior node the centered
//! second differences along both axes and both diagonals are nonnegative.

use std::ops::Deref;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::grid::{Grid2D, GridFunction, DIRECTIONS};

/// Relative slack of the convexity certificate.
pub const CVX_REL_TOL: f64 = 1e-9;

/// Convexity tolerance for data `g`: `1e-9 * range`, with a rounding floor.
pub fn convexity_tolerance(g: &GridFunction) -> f64 {
    let scale = g.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    CVX_REL_TOL * g.range() + 64.0 * f64::EPSILON * scale
}

/// Largest negative part of a centered second difference (raw value units).
pub fn convexity_violation(g: &GridFunction) -> f64 {
    let grid = g.grid();
    let v = g.values();
    let mut worst = 0.0f64;
    for k in grid.interior_nodes() {
        for &(di, dj) in &DIRECTIONS {
            let p = grid.neighbor(k, di, dj).unwrap();
            let m = grid.neighbor(k, -di, -dj).unwrap();
            worst = worst.max(2.0 * v[k] - v[p] - v[m]);
        }
    }
    worst
}

/// A grid function whose wide-stencil second differences are nonnegative up
/// to [`convexity_tolerance`].
#[derive(Clone, Debug)]
pub struct ConvexGridFunction {
    f: GridFunction,
    violation: f64,
}

impl ConvexGridFunction {
    pub fn certify(f: GridFunction) -> Result<Self> {
        let violation = convexity_violation(&f);
        let tolerance = convexity_tolerance(&f);
        if violation > tolerance {
            return Err(Error::NotConvex { violation, tolerance });
        }
        Ok(ConvexGridFunction { f, violation })
    }

    pub fn from_fn(grid: &Arc<Grid2D>, u: impl Fn(Point) -> f64) -> Result<Self> {
        Self::certify(GridFunction::from_fn(grid, u)?)
    }

    /// Wraps `f` without failing, recording its measured violation.
    pub fn assume(f: GridFunction) -> Self {
        let violation = convexity_violation(&f);
        ConvexGridFunction { f, violation }
    }

    pub fn violation(&self) -> f64 {
        self.violation
    }

    pub fn function(&self) -> &GridFunction {
        &self.f
    }

    pub fn into_function(self) -> GridFunction {
        self.f
    }
}

impl Deref for ConvexGridFunction {
    type Target = GridFunction;
    fn deref(&self) -> &GridFunction {
        &self.f
    }
}

fn lower_hull_line(ys: &mut [f64]) -> bool {
    let m = ys.len();
    if m < 3 {
        return false;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(m);
    for i in 0..m {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // orientation of (a, ya), (b, yb), (i, yi); pop when b lies strictly above the chord
            let cr = (b - a) as f64 * (ys[i] - ys[a]) - (i - a) as f64 * (ys[b] - ys[a]);
            if cr < 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut changed = false;
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        for i in a + 1..b {
            let t = (i - a) as f64 / (b - a) as f64;
            let chord = ys[a] + t * (ys[b] - ys[a]);
            let ulps = 8.0 * f64::EPSILON * ys[a].abs().max(ys[b].abs()).max(ys[i].abs());
            if ys[i] - chord > ulps {
                ys[i] = chord;
                changed = true;
            }
        }
    }
    changed
}

/// Maximum number of sweeps over all lattice lines.
const ENVELOPE_MAX_PASSES: usize = 100_000;

/// Largest function below `g` satisfying the wide-stencil conditions.
///
/// Computed by exact lower hulls along every row, column and diagonal,
/// repeated until a full pass leaves every value unchanged. Lines are split at
/// nodes where no stencil condition applies.
pub fn convex_envelope(g: &GridFunction) -> Result<ConvexGridFunction> {
    if let Some(k) = g.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(k));
    }
    let grid = g.grid().clone();
    let lines = segments(&grid);
    let mut v = g.values().to_vec();
    let mut buf = Vec::new();
    for _ in 0..ENVELOPE_MAX_PASSES {
        let mut changed = false;
        for seg in &lines {
            buf.clear();
            buf.extend(seg.iter().map(|&k| v[k]));
            if lower_hull_line(&mut buf) {
                changed = true;
                for (&k, &y) in seg.iter().zip(&buf) {
                    v[k] = y;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let f = GridFunction::new(grid, v)?;
    let violation = convexity_violation(&f);
    Ok(ConvexGridFunction { f, violation })
}

/// Maximal lattice segments whose inner nodes are interior and whose
/// endpoints are not, in all four stencil directions.
pub(crate) fn segments(grid: &Grid2D) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for &(di, dj) in &DIRECTIONS {
        for k in 0..grid.len() {
            // segments start at non-interior nodes with a successor
            if grid.is_interior(k) {
                continue;
            }
            let mut seg = vec![k];
            let mut cur = k;
            while let Some(n) = grid.neighbor(cur, di, dj) {
                seg.push(n);
                if !grid.is_interior(n) {
                    break;
                }
                cur = n;
            }
            if seg.len() >= 3 && !grid.is_interior(*seg.last().unwrap()) {
                out.push(seg);
            }
        }
    }
    out
}

/// Centered second differences `(u_11, u_22, u_12)` at an interior node.
#[inline]
pub fn stencil_hessian(grid: &Grid2D, v: &[f64], k: usize) -> [f64; 3] {
    let h2 = grid.h() * grid.h();
    let n = |di, dj| v[grid.neighbor(k, di, dj).expect("interior node")];
    let a = (n(1, 0) + n(-1, 0) - 2.0 * v[k]) / h2;
    let b = (n(0, 1) + n(0, -1) - 2.0 * v[k]) / h2;
    let c = (n(1, 1) + n(-1, -1) - n(1, -1) - n(-1, 1)) / (4.0 * h2);
    [a, b, c]
}

/// Finite-difference gradient: centered where both axis neighbours exist,
/// second-order one-sided otherwise (first order on two-node lines).
pub fn fd_gradient(u: &GridFunction, k: usize) -> Point {
    let grid = u.grid();
    let h = grid.h();
    let v = u.values();
    let one_sided = |di: i64, dj: i64, s: f64| {
        let a = grid.neighbor(k, di, dj).unwrap();
        match grid.neighbor(k, 2 * di, 2 * dj) {
            Some(b) => s * (-3.0 * v[k] + 4.0 * v[a] - v[b]) / (2.0 * h),
            None => s * (v[a] - v[k]) / h,
        }
    };
    let slope = |di: i64, dj: i64| match (grid.neighbor(k, di, dj), grid.neighbor(k, -di, -dj)) {
        (Some(a), Some(b)) => (v[a] - v[b]) / (2.0 * h),
        (Some(_), None) => one_sided(di, dj, 1.0),
        (None, Some(_)) => one_sided(-di, -dj, -1.0),
        (None, None) => 0.0,
    };
    [slope(1, 0), slope(0, 1)]
}

/// Centered 9-point Hessians, determinants and cofactors.
///
/// Entries live on interior nodes; boundary nodes carry the values of their
/// proxy interior node so that quadratures over the whole mask are defined.
#[derive(Clone, Debug)]
pub struct HessianField {
    grid: Arc<Grid2D>,
    entries: Vec<[f64; 3]>,
    det: Vec<f64>,
    clamped: Vec<usize>,
}

impl HessianField {
    pub fn grid(&self) -> &Arc<Grid2D> {
        &self.grid
    }

    pub fn hessian(&self, k: usize) -> [[f64; 2]; 2] {
        let [a, b, c] = self.entries[k];
        [[a, c], [c, b]]
    }

    pub fn entries(&self, k: usize) -> [f64; 3] {
        self.entries[k]
    }

    pub fn cofactor(&self, k: usize) -> [[f64; 2]; 2] {
        let [a, b, c] = self.entries[k];
        [[b, -c], [-c, a]]
    }

    /// Determinant clamped at zero.
    pub fn det(&self, k: usize) -> f64 {
        self.det[k]
    }

    pub fn dets(&self) -> &[f64] {
        &self.det
    }

    /// Interior nodes whose raw determinant was negative.
    pub fn clamped_nodes(&self) -> &[usize] {
        &self.clamped
    }

    pub fn det_function(&self) -> GridFunction {
        GridFunction::new(self.grid.clone(), self.det.clone()).expect("finite determinants")
    }
}

pub fn hessian_field(u: &ConvexGridFunction) -> HessianField {
    hessian_field_of(u.function())
}

/// Hessian field of an arbitrary grid function (no convexity requirement).
pub fn hessian_field_of(u: &GridFunction) -> HessianField {
    let grid = u.grid().clone();
    let v = u.values();
    let mut entries = vec![[0.0; 3]; grid.len()];
    for k in grid.interior_nodes() {
        entries[k] = stencil_hessian(&grid, v, k);
    }
    for k in grid.boundary_nodes() {
        entries[k] = entries[grid.proxy(k)];
    }
    let mut clamped = Vec::new();
    let det = entries
        .iter()
        .enumerate()
        .map(|(k, &[a, b, c])| {
            let d = a * b - c * c;
            if d < 0.0 {
                if grid.is_interior(k) {
                    clamped.push(k);
                }
                0.0
            } else {
                d
            }
        })
        .collect();
    HessianField { grid, entries, det, clamped }
}

/// Slopes of supporting planes of the discrete graph at an interior node.
///
/// Starts from the box spanned by the one-sided axis slopes and clips it with
/// the half-plane `p . (y - x) <= u(y) - u(x)` of every other node `y`.
pub fn normal_mapping_cell(u: &ConvexGridFunction, node: usize) -> Result<Vec<Point>> {
    let grid = u.grid();
    if node >= grid.len() || grid.is_boundary(node) {
        return Err(Error::BoundaryNode(node));
    }
    Ok(cell_unchecked(u.function(), node))
}

fn cell_unchecked(u: &GridFunction, node: usize) -> Vec<Point> {
    let grid = u.grid();
    let h = grid.h();
    let v = u.values();
    let u0 = v[node];
    let n = |di, dj| v[grid.neighbor(node, di, dj).unwrap()];
    // work in lattice units q = h p
    let (lo1, hi1) = (u0 - n(-1, 0), n(1, 0) - u0);
    let (lo2, hi2) = (u0 - n(0, -1), n(0, 1) - u0);
    if lo1 > hi1 || lo2 > hi2 {
        return Vec::new();
    }
    let mut poly = vec![[lo1, lo2], [hi1, lo2], [hi1, hi2], [lo1, hi2]];
    let (i0, j0) = grid.lattice_index(node);
    for y in 0..grid.len() {
        if y == node {
            continue;
        }
        let (i, j) = grid.lattice_index(y);
        let d = [i as f64 - i0 as f64, j as f64 - j0 as f64];
        let c = v[y] - u0;
        if poly.iter().all(|q| d[0] * q[0] + d[1] * q[1] <= c) {
            continue;
        }
        poly = geometry::clip_halfplane(&poly, d, c);
        if poly.len() < 3 {
            return Vec::new();
        }
    }
    poly.iter().map(|q| [q[0] / h, q[1] / h]).collect()
}

/// Per-node Aleksandrov masses: areas of the normal-mapping cells.
#[derive(Clone, Debug)]
pub struct MAMeasure {
    grid: Arc<Grid2D>,
    masses: Vec<f64>,
    total: f64,
}

impl MAMeasure {
    pub fn mass(&self, k: usize) -> f64 {
        self.masses[k]
    }
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }
    pub fn total(&self) -> f64 {
        self.total
    }
    pub fn mass_of(&self, nodes: &[usize]) -> f64 {
        nodes.iter().map(|&k| self.masses[k]).sum()
    }
    pub fn as_grid_function(&self) -> GridFunction {
        GridFunction::new(self.grid.clone(), self.masses.clone()).expect("finite masses")
    }
}

pub fn ma_measure(u: &ConvexGridFunction) -> MAMeasure {
    let grid = u.grid().clone();
    let masses: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| if grid.is_interior(k) { geometry::area(&cell_unchecked(u.function(), k)) } else { 0.0 })
        .collect();
    let total = masses.iter().sum();
    MAMeasure { grid, masses, total }
}

/// Interior nodes inside the closed rectangle `[min, max]`.
pub fn nodes_in_rect(grid: &Grid2D, min: Point, max: Point) -> Vec<usize> {
    let tol = 1e-9 * grid.h();
    (0..grid.len())
        .filter(|&k| {
            let p = grid.coord(k);
            p[0] >= min[0] - tol && p[0] <= max[0] + tol && p[1] >= min[1] - tol && p[1] <= max[1] + tol
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakContinuityReport {
    pub base_mass: f64,
    /// Amplitude and mass of `E` for each member of the sequence.
    pub sequence: Vec<(f64, f64)>,
    /// Mass of the last member minus the base mass.
    pub gap: f64,
}

/// Sequence length of [`weak_continuity_check`].
pub const WEAK_SEQUENCE_LEN: usize = 6;

/// Perturbs `u` by the convex family `delta 2^{-i} |x - c|^4` (`c` the mask
/// centroid) and compares masses of the node set `e`.
pub fn weak_continuity_check(u: &ConvexGridFunction, delta: f64, e: &[usize]) -> Result<WeakContinuityReport> {
    let grid = u.grid();
    for &k in e {
        if k >= grid.len() || grid.is_boundary(k) {
            return Err(Error::EOutsideDomain(k));
        }
    }
    let n = grid.len() as f64;
    let c = grid.coords().iter().fold([0.0, 0.0], |s, p| [s[0] + p[0] / n, s[1] + p[1] / n]);
    let base_mass = ma_measure(u).mass_of(e);
    let mut sequence = Vec::with_capacity(WEAK_SEQUENCE_LEN);
    for i in 0..WEAK_SEQUENCE_LEN {
        let amp = delta * 0.5f64.powi(i as i32);
        let vals = grid
            .coords()
            .iter()
            .zip(u.values())
            .map(|(p, &v)| {
                let r2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
                v + amp * r2 * r2
            })
            .collect();
        let ui = ConvexGridFunction { f: GridFunction::new(grid.clone(), vals)?, violation: u.violation };
        let masses: Vec<f64> = e.par_iter().map(|&k| geometry::area(&cell_unchecked(ui.function(), k))).collect();
        sequence.push((amp, masses.iter().sum()));
    }
    let gap = sequence.last().map_or(0.0, |&(_, m)| m - base_mass);
    Ok(WeakContinuityReport { base_mass, sequence, gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Domain};

    fn square(h: f64) -> Arc<Grid2D> {
        Arc::new(build_grid(&Domain::rectangle([-1.0, -1.0], [1.0, 1.0]), h).unwrap())
    }

    #[test]
    fn line_hull_basics() {
        let mut ys = vec![0.0, 1.0, 0.0];
        assert!(lower_hull_line(&mut ys));
        assert_eq!(ys, vec![0.0, 0.0, 0.0]);
        let mut ys = vec![4.0, 1.0, 0.0, 1.0, 4.0];
        assert!(!lower_hull_line(&mut ys));
    }

    #[test]
    fn paraboloid_hessian_exact() {
        let g = square(0.125);
        let u = ConvexGridFunction::from_fn(&g, |p| 0.5 * (p[0] * p[0] + p[1] * p[1])).unwrap();
        let hf = hessian_field(&u);
        for k in g.interior_nodes() {
            assert!((hf.det(k) - 1.0).abs() < 1e-12);
            let [a, b, c] = hf.entries(k);
            assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12 && c.abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_leaves_convex_input_alone() {
        let g = square(0.125);
        let u = GridFunction::from_fn(&g, |p| (p[0] * p[0] + p[1] * p[1]).sqrt()).unwrap();
        let e = convex_envelope(&u).unwrap();
        assert_eq!(e.values(), u.values());
    }

    #[test]
    fn envelope_rejects_non_finite() {
        let g = square(0.5);
        let mut v = vec![0.0; g.len()];
        v[0] = f64::INFINITY;
        let gf = GridFunction::new(g.clone(), vec![0.0; g.len()]).unwrap();
        assert!(convex_envelope(&gf).is_ok());
        assert!(GridFunction::new(g, v).is_err());
    }

    #[test]
    fn affine_cells_are_points() {
        let g = square(0.25);
        let u = ConvexGridFunction::from_fn(&g, |p| 0.3 * p[0] - 0.7 * p[1] + 2.0).unwrap();
        let m = ma_measure(&u);
        assert!(m.total().abs() < 1e-12);
        assert!(matches!(normal_mapping_cell(&u, 0), Err(Error::BoundaryNode(0))));
    }

    #[test]
    fn weak_continuity_zero_delta() {
        let g = square(0.125);
        let u = ConvexGridFunction::from_fn(&g, |p| 0.5 * (p[0] * p[0] + p[1] * p[1])).unwrap();
        let e = nodes_in_rect(&g, [-0.5, -0.5], [0.5, 0.5]);
        let r = weak_continuity_check(&u, 0.0, &e).unwrap();
        assert_eq!(r.gap, 0.0);
        assert!(matches!(weak_continuity_check(&u, 0.1, &[0]), Err(Error::EOutsideDomain(0))));
    }
}
