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

//! The graph rotation `z1 = -x3, z2 = x2, z3 = x1` and the rotated functional.
//!
//! The epigraph of a convex `u` maps onto the epigraph of a convex `v(z1, z2)`
//! exactly where `u` decreases in `x1`; there `v1 = -1 / u_{x1} > 0`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::convexity::{convex_envelope, fd_gradient, hessian_field, hessian_field_of, ConvexGridFunction};
use crate::error::{Error, Result};
use crate::functional::{check_alpha, DELTA_DET};
use crate::geometry::Point;
use crate::grid::{build_grid, Domain, GridFunction, NEIGHBORS};
use crate::interp;
use crate::solver::NodeResidual;

/// Slope floor for representability.
pub const SIGMA_MIN: f64 = 1e-3;
/// Strictness floor of the rotated residual.
pub const ROTATED_DET_FLOOR: f64 = 0.01;
/// Fraction of nodes allowed below the slope floor in [`eval_A_hat`].
pub const SLOPE_FAILURE_FRACTION: f64 = 0.01;

/// Rows of the rotation acting on `(x1, x2, x3)`.
pub const ROTATION: [[f64; 3]; 3] = [[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]];

pub fn lambda(alpha: f64) -> f64 {
    1.0 - 4.0 * alpha
}

/// Primal heights and slopes at arbitrary points.
pub trait GraphSource: Sync {
    /// `(u(x), Du(x))`, `None` outside the source's domain.
    fn eval(&self, x: Point) -> Option<(f64, Point)>;
}

impl GraphSource for GridFunction {
    fn eval(&self, x: Point) -> Option<(f64, Point)> {
        interp::sample_with_gradient(self, x)
    }
}

impl GraphSource for ConvexGridFunction {
    fn eval(&self, x: Point) -> Option<(f64, Point)> {
        interp::sample_with_gradient(self.function(), x)
    }
}

/// A graph given by closed forms.
pub struct AnalyticGraph<F, G> {
    pub value: F,
    pub gradient: G,
}

impl<F, G> GraphSource for AnalyticGraph<F, G>
where
    F: Fn(Point) -> f64 + Sync,
    G: Fn(Point) -> Point + Sync,
{
    fn eval(&self, x: Point) -> Option<(f64, Point)> {
        Some(((self.value)(x), (self.gradient)(x)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct Window {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
}

impl Window {
    pub fn new(x1: [f64; 2], x2: [f64; 2]) -> Result<Self> {
        if !(x1[0] < x1[1] && x2[0] < x2[1]) || ![x1, x2].iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::InvalidSpec(format!("empty rotation window {x1:?} x {x2:?}")));
        }
        Ok(Window { x1, x2 })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RotationMetadata {
    pub rotation: [[f64; 3]; 3],
    pub window: Option<Window>,
    pub z_min: Point,
    pub z_max: Point,
    pub h: f64,
    pub correspondence_error: f64,
}

#[derive(Clone, Debug)]
pub struct RotatedGraph {
    pub v: ConvexGridFunction,
    pub window: Option<Window>,
    /// Rotated-back point `(x1, x2, x3)` of every `v` node.
    pub back: Vec<[f64; 3]>,
    /// Max of `|u(x1, x2) - x3|` over the rotated-back points.
    pub correspondence_error: f64,
}

impl RotatedGraph {
    /// Wraps a function already given in rotated coordinates.
    pub fn from_function(v: ConvexGridFunction) -> Self {
        let grid = v.grid().clone();
        let back = (0..grid.len())
            .map(|k| {
                let z = grid.coord(k);
                [v.value(k), z[1], -z[0]]
            })
            .collect();
        RotatedGraph { v, window: None, back, correspondence_error: 0.0 }
    }

    pub fn metadata(&self) -> RotationMetadata {
        let grid = self.v.grid();
        let bbox = grid.domain().map(|d| d.bbox()).unwrap_or((grid.origin(), grid.origin()));
        RotationMetadata {
            rotation: ROTATION,
            window: self.window,
            z_min: bbox.0,
            z_max: bbox.1,
            h: grid.h(),
            correspondence_error: self.correspondence_error,
        }
    }

    /// Max over an `n x n` sample of the window of `|v(-u(x), x2) - x1|`,
    /// taken where the rotated point falls inside the rotated lattice.
    pub fn back_error(&self, u: &dyn GraphSource, n: usize) -> Result<f64> {
        let w = self.window.ok_or_else(|| Error::InvalidSpec("rotated graph has no primal window".into()))?;
        let grid = self.v.grid();
        let (lo, hi) = grid.domain().map(|d| d.bbox()).unwrap_or((grid.origin(), grid.origin()));
        let n = n.max(2);
        let mut worst = 0.0f64;
        let mut seen = 0;
        for i in 0..n {
            for j in 0..n {
                let x = [
                    w.x1[0] + (w.x1[1] - w.x1[0]) * i as f64 / (n - 1) as f64,
                    w.x2[0] + (w.x2[1] - w.x2[0]) * j as f64 / (n - 1) as f64,
                ];
                let Some((ux, _)) = u.eval(x) else { continue };
                let z = [-ux, x[1]];
                if z[0] < lo[0] || z[0] > hi[0] || z[1] < lo[1] || z[1] > hi[1] {
                    continue;
                }
                if let Some(vz) = interp::sample(self.v.function(), z) {
                    worst = worst.max((vz - x[0]).abs());
                    seen += 1;
                }
            }
        }
        if seen == 0 {
            return Err(Error::NotGraphAfterRotation("no window sample maps into the rotated lattice".into()));
        }
        Ok(worst)
    }
}

/// Solves `u(x1, x2) = t` for `x1` in `[a, b]` with `u` decreasing in `x1`.
fn invert(u: &dyn GraphSource, x2: f64, t: f64, [mut a, mut b]: [f64; 2]) -> Option<f64> {
    let g = |x1: f64| u.eval([x1, x2]).map(|(v, _)| v - t);
    let (ga, gb) = (g(a)?, g(b)?);
    let slack = 1e-12 * (1.0 + t.abs());
    if ga < -slack || gb > slack {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if g(m)? > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Rotates the graph of `u` over `window`, where `u` must decrease in `x1`
/// with slope at most `-SIGMA_MIN`. The rotated lattice has spacing `h` over
/// the largest `z1`-interval covered for every `x2` in the window.
pub fn rotate_graph(u: &dyn GraphSource, window: Window, h: f64) -> Result<RotatedGraph> {
    let samples = 64usize;
    let lerp = |r: [f64; 2], i: usize| r[0] + (r[1] - r[0]) * i as f64 / samples as f64;
    let mut z1_lo = f64::NEG_INFINITY;
    let mut z1_hi = f64::INFINITY;
    for j in 0..=samples {
        let x2 = lerp(window.x2, j);
        for i in 0..=samples {
            let x = [lerp(window.x1, i), x2];
            let (_, g) = u.eval(x).ok_or_else(|| Error::NotGraphAfterRotation(format!("no primal value at {x:?}")))?;
            if !(g[0] <= -SIGMA_MIN) {
                return Err(Error::NotGraphAfterRotation(format!("slope u_x1 = {:.3e} at {x:?} is above -{SIGMA_MIN}", g[0])));
            }
        }
        let left = u.eval([window.x1[0], x2]).unwrap().0;
        let right = u.eval([window.x1[1], x2]).unwrap().0;
        z1_lo = z1_lo.max(-left);
        z1_hi = z1_hi.min(-right);
    }
    if !(z1_hi > z1_lo) {
        return Err(Error::NotGraphAfterRotation("rotated image of the window is empty".into()));
    }
    let shrink = 1e-9 * (z1_hi - z1_lo);
    let domain = Domain::rectangle([z1_lo + shrink, window.x2[0]], [z1_hi - shrink, window.x2[1]]);
    let grid = Arc::new(build_grid(&domain, h)?);
    let values: Vec<Option<f64>> =
        grid.coords().par_iter().map(|z| invert(u, z[1], -z[0], window.x1)).collect();
    let values: Vec<f64> = values
        .into_iter()
        .enumerate()
        .map(|(k, v)| v.ok_or_else(|| Error::NotGraphAfterRotation(format!("no preimage for rotated node {k}"))))
        .collect::<Result<_>>()?;
    let v = convex_envelope(&GridFunction::new(grid.clone(), values)?)?;
    let mut back = Vec::with_capacity(grid.len());
    let mut err = 0.0f64;
    for k in 0..grid.len() {
        let z = grid.coord(k);
        let p = [v.value(k), z[1], -z[0]];
        if let Some((ux, _)) = u.eval([p[0], p[1]]) {
            err = err.max((ux - p[2]).abs());
        }
        back.push(p);
    }
    Ok(RotatedGraph { v, window: Some(window), back, correspondence_error: err })
}

fn slopes(rg: &RotatedGraph) -> Result<Vec<f64>> {
    let grid = rg.v.grid();
    let s: Vec<f64> = (0..grid.len()).map(|k| fd_gradient(&rg.v, k)[0]).collect();
    let low = s.iter().filter(|v| !(v.abs() >= SIGMA_MIN)).count();
    let fraction = low as f64 / s.len() as f64;
    if fraction > SLOPE_FAILURE_FRACTION {
        return Err(Error::VanishingSlope(100.0 * fraction));
    }
    Ok(s)
}

/// `integrate(det^alpha |v1|^{1 - 4 alpha})`; for `alpha = 0`,
/// `integrate((log det - 2 log v1^2) |v1|)`.
#[allow(non_snake_case)]
pub fn eval_A_hat(rg: &RotatedGraph, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let grid = rg.v.grid();
    let v1 = slopes(rg)?;
    let hf = hessian_field(&rg.v);
    let lam = lambda(alpha);
    let mut s = 0.0;
    for k in 0..grid.len() {
        let a = v1[k].abs();
        let d = hf.det(k);
        let term = if alpha > 0.0 {
            if d == 0.0 {
                0.0
            } else {
                d.powf(alpha) * a.powf(lam)
            }
        } else {
            (d.max(DELTA_DET).ln() - 2.0 * (a * a).ln()) * a
        };
        s += grid.weight(k) * term;
    }
    Ok(s)
}

/// Primal `eval_A` restricted to nodes of the window whose rotated image lies
/// in the rotated lattice's `z1` range.
#[allow(non_snake_case)]
pub fn eval_A_preimage(u: &ConvexGridFunction, rg: &RotatedGraph, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let w = rg.window.ok_or_else(|| Error::InvalidSpec("rotated graph has no primal window".into()))?;
    let vg = rg.v.grid();
    let (lo, hi) = vg.domain().map(|d| d.bbox()).unwrap_or((vg.origin(), vg.origin()));
    let grid = u.grid();
    let hf = hessian_field(u);
    let mut s = 0.0;
    for k in 0..grid.len() {
        let x = grid.coord(k);
        let z1 = -u.value(k);
        let inside = x[0] >= w.x1[0] && x[0] <= w.x1[1] && x[1] >= w.x2[0] && x[1] <= w.x2[1];
        if !inside || z1 < lo[0] || z1 > hi[0] {
            continue;
        }
        let d = hf.det(k);
        let edge = |t: f64, r: [f64; 2]| if (t - r[0]).abs() < 1e-9 * grid.h() || (t - r[1]).abs() < 1e-9 * grid.h() { 0.5 } else { 1.0 };
        let trap = edge(x[0], w.x1) * edge(x[1], w.x2);
        s += trap * grid.weight(k) * if alpha > 0.0 { d.powf(alpha) } else { d.max(DELTA_DET).ln() };
    }
    Ok(s)
}

/// `V^{ij} (d^{alpha-1})_{ij} - g - F` at nodes two rings inside the rotated
/// lattice, with `F = F_t / (alpha v1^lambda)` (`F_t / v1` for `alpha = 0`).
pub fn rotated_el_residual(rg: &RotatedGraph, alpha: f64, f_t: &GridFunction) -> Result<NodeResidual> {
    check_alpha(alpha)?;
    let grid = rg.v.grid().clone();
    if !grid.same_lattice(f_t.grid()) {
        return Err(Error::GridMismatch("load lives on a different lattice".into()));
    }
    let hf = hessian_field_of(rg.v.function());
    let v1: Vec<f64> = (0..grid.len()).map(|k| fd_gradient(&rg.v, k)[0]).collect();
    let h = grid.h();
    let h2 = h * h;
    let lam = lambda(alpha);
    let raw = |k: usize| {
        let [a, b, c] = hf.entries(k);
        a * b - c * c
    };
    let strict = |k: usize| raw(k) >= ROTATED_DET_FLOOR;
    let mut values = vec![0.0; grid.len()];
    let mut evaluated = vec![false; grid.len()];
    let mut low_slope = 0usize;
    let mut candidates = 0usize;
    for k in 0..grid.len() {
        if grid.depth(k) < 2 {
            continue;
        }
        let nb = |di, dj| grid.neighbor(k, di, dj).unwrap();
        if !(strict(k) && NEIGHBORS.iter().all(|&(di, dj)| strict(nb(di, dj)))) {
            continue;
        }
        candidates += 1;
        if !(v1[k].abs() >= SIGMA_MIN) {
            low_slope += 1;
            continue;
        }
        let w = |di, dj| raw(nb(di, dj)).powf(alpha - 1.0);
        let w0 = w(0, 0);
        let w11 = (w(1, 0) + w(-1, 0) - 2.0 * w0) / h2;
        let w22 = (w(0, 1) + w(0, -1) - 2.0 * w0) / h2;
        let w12 = (w(1, 1) + w(-1, -1) - w(1, -1) - w(-1, 1)) / (4.0 * h2);
        let [a, b, c] = hf.entries(k);
        let d = raw(k);
        let lhs = b * w11 + a * w22 - 2.0 * c * w12;
        let (e, wst) = (hf.entries(nb(1, 0)), hf.entries(nb(-1, 0)));
        let v111 = (e[0] - wst[0]) / (2.0 * h);
        let v221 = (e[1] - wst[1]) / (2.0 * h);
        let v121 = (e[2] - wst[2]) / (2.0 * h);
        let trace = (b * v111 + a * v221 - 2.0 * c * v121) / d;
        let p = v1[k];
        let da = d.powf(alpha);
        let g = lam * (2.0 * (1.0 - alpha) * da * trace / p - 4.0 * (1.0 - alpha) * da * a / (p * p));
        let load = if alpha > 0.0 { f_t.value(k) / (alpha * p.powf(lam)) } else { f_t.value(k) / p };
        values[k] = lhs - g - load;
        evaluated[k] = true;
    }
    if candidates == 0 {
        return Err(Error::NoStrictRegion("rotated lattice has no strictly convex interior node".into()));
    }
    if low_slope > 0 && !evaluated.iter().any(|&e| e) {
        return Err(Error::VanishingSlope(100.0 * low_slope as f64 / candidates as f64));
    }
    Ok(NodeResidual { grid, values, evaluated })
}

/// The `g` term alone at every interior node of depth two; zero when
/// `lambda = 0`.
pub fn rotated_g_term(rg: &RotatedGraph, alpha: f64) -> Result<GridFunction> {
    let z = GridFunction::constant(rg.v.grid(), 0.0);
    let full = rotated_el_residual(rg, alpha, &z)?;
    let grid = rg.v.grid();
    let hf = hessian_field_of(rg.v.function());
    let h2 = grid.h() * grid.h();
    let raw = |k: usize| {
        let [a, b, c] = hf.entries(k);
        a * b - c * c
    };
    let mut g = vec![0.0; grid.len()];
    for k in 0..grid.len() {
        if !full.evaluated[k] {
            continue;
        }
        let nb = |di, dj| grid.neighbor(k, di, dj).unwrap();
        let w = |di, dj| raw(nb(di, dj)).powf(alpha - 1.0);
        let w0 = w(0, 0);
        let [a, b, c] = hf.entries(k);
        let lhs = b * (w(1, 0) + w(-1, 0) - 2.0 * w0) / h2 + a * (w(0, 1) + w(0, -1) - 2.0 * w0) / h2
            - 2.0 * c * (w(1, 1) + w(-1, -1) - w(1, -1) - w(-1, 1)) / (4.0 * h2);
        g[k] = lhs - full.values[k];
    }
    GridFunction::new(grid.clone(), g)
}

#[derive(Clone, Debug)]
pub struct SublevelSlice {
    pub s: f64,
    pub h: f64,
    /// `v - s z1 - h` on the rotated lattice.
    pub vhat: GridFunction,
    pub inside: Vec<bool>,
    pub count: usize,
    /// Max nodewise `|det D^2 vhat - det D^2 v|`.
    pub det_gap: f64,
    /// Max of `det D^2 vhat` over the slice.
    pub det_max: f64,
    /// Max `|vhat|` over slice nodes with a neighbour outside the slice.
    pub boundary_level: f64,
}

pub fn sublevel_slice(rg: &RotatedGraph, s: f64, h: f64) -> Result<SublevelSlice> {
    if !(s > 0.0 && s < 0.5 && h > 0.0 && h < 0.5) {
        return Err(Error::InvalidSpec(format!("slice parameters s = {s}, h = {h} outside (0, 1/2)")));
    }
    let grid = rg.v.grid();
    let vals: Vec<f64> = (0..grid.len()).map(|k| rg.v.value(k) - s * grid.coord(k)[0] - h).collect();
    let vhat = GridFunction::new(grid.clone(), vals)?;
    let inside: Vec<bool> = vhat.values().iter().map(|&x| x < 0.0).collect();
    let count = inside.iter().filter(|&&b| b).count();
    if count < 4 {
        return Err(Error::EmptySlice(count));
    }
    let hv = hessian_field_of(rg.v.function());
    let hh = hessian_field_of(&vhat);
    let mut det_gap = 0.0f64;
    let mut det_max = 0.0f64;
    let mut boundary_level = 0.0f64;
    for k in 0..grid.len() {
        if grid.is_interior(k) {
            det_gap = det_gap.max((hh.det(k) - hv.det(k)).abs());
        }
        if !inside[k] {
            continue;
        }
        det_max = det_max.max(hh.det(k));
        let edge = NEIGHBORS.iter().any(|&(di, dj)| grid.neighbor(k, di, dj).is_none_or(|n| !inside[n]));
        if edge {
            boundary_level = boundary_level.max(vhat.value(k).abs());
        }
    }
    Ok(SublevelSlice { s, h, vhat, inside, count, det_gap, det_max, boundary_level })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc_window() -> Window {
        Window::new([-2.0, -1.0], [-0.5, 0.5]).unwrap()
    }

    fn paraboloid() -> AnalyticGraph<impl Fn(Point) -> f64 + Sync, impl Fn(Point) -> Point + Sync> {
        AnalyticGraph { value: |x: Point| 0.5 * (x[0] * x[0] + x[1] * x[1]), gradient: |x: Point| x }
    }

    #[test]
    fn paraboloid_window_inverts_in_closed_form() {
        let rg = rotate_graph(&paraboloid(), disc_window(), 1.0 / 32.0).unwrap();
        let grid = rg.v.grid();
        for k in 0..grid.len() {
            let z = grid.coord(k);
            let exact = -(-2.0 * z[0] - z[1] * z[1]).sqrt();
            assert!((rg.v.value(k) - exact).abs() < 1e-12);
        }
        assert!(rg.correspondence_error < 1e-12);
        assert!(rg.back_error(&paraboloid(), 17).unwrap() < 1e-3);
    }

    #[test]
    fn flat_slope_is_rejected() {
        let r = rotate_graph(&paraboloid(), Window::new([-1.0, 0.5], [-0.5, 0.5]).unwrap(), 0.1);
        assert!(matches!(r, Err(Error::NotGraphAfterRotation(_))));
    }

    #[test]
    fn g_vanishes_at_affine_exponent() {
        let rg = rotate_graph(&paraboloid(), disc_window(), 1.0 / 32.0).unwrap();
        let g = rotated_g_term(&rg, 0.25).unwrap();
        assert!(g.values().iter().all(|&x| x == 0.0));
        let g0 = rotated_g_term(&rg, 0.0).unwrap();
        assert!(g0.max_abs_diff(&GridFunction::constant(rg.v.grid(), 0.0)) > 1e-3);
    }

    #[test]
    fn slice_of_quadratic() {
        let g = Arc::new(build_grid(&Domain::rectangle([-1.0, -1.0], [1.0, 1.0]), 1.0 / 16.0).unwrap());
        let v = ConvexGridFunction::from_fn(&g, |z| z[0] * z[0] + z[1] * z[1]).unwrap();
        let rg = RotatedGraph::from_function(v);
        let sl = sublevel_slice(&rg, 0.25, 0.25).unwrap();
        assert!(sl.count > 4);
        assert!(sl.det_gap < 1e-9);
        let lifted = ConvexGridFunction::from_fn(&g, |z| z[0] * z[0] + z[1] * z[1] + 1.0).unwrap();
        assert!(matches!(sublevel_slice(&RotatedGraph::from_function(lifted), 0.25, 0.01), Err(Error::EmptySlice(0))));
    }
}
