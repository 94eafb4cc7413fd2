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

//! Discrete Legendre transform and duality checks.
//!
//! `u*(y) = max_k (x_k . y - u_k)` over primal nodes. The refined mode adds
//! the exact conjugate of the local quadratic model at the maximizing node,
//! which removes the piecewise-affine error of the plain maximum.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexity::{convex_envelope, fd_gradient, hessian_field, hessian_field_of, ConvexGridFunction, HessianField};
use crate::error::{Error, Result};
use crate::functional::{check_alpha, FunctionalSpec};
use crate::geometry::{self, Point};
use crate::grid::{build_grid, integrate, Domain, Grid2D, GridFunction};
use crate::solver::NodeResidual;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformMode {
    /// Plain maximum over primal nodes.
    Direct,
    /// Maximum plus the local quadratic correction.
    #[default]
    Refined,
}

/// Hull area below which the dual domain counts as collapsed (relative to the
/// square of the slope magnitude).
const DEGENERATE_AREA: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct DualPair {
    pub primal: ConvexGridFunction,
    pub dual: ConvexGridFunction,
    /// Finite-difference gradient at every primal node.
    pub slopes: Vec<Point>,
    /// Slope hull bounding the dual lattice.
    pub hull: Vec<Point>,
    pub mode: TransformMode,
}

impl DualPair {
    pub fn dual_grid(&self) -> &Arc<Grid2D> {
        self.dual.grid()
    }
}

struct Conjugator<'a> {
    u: &'a GridFunction,
    hf: HessianField,
    grads: Vec<Point>,
    mode: TransformMode,
}

impl<'a> Conjugator<'a> {
    fn new(u: &'a GridFunction, mode: TransformMode) -> Self {
        let grads = (0..u.grid().len()).map(|k| fd_gradient(u, k)).collect();
        Conjugator { u, hf: hessian_field_of(u), grads, mode }
    }

    fn value(&self, y: Point) -> f64 {
        let grid = self.u.grid();
        let v = self.u.values();
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for (k, x) in grid.coords().iter().enumerate() {
            let s = x[0] * y[0] + x[1] * y[1] - v[k];
            if s > best {
                best = s;
                arg = k;
            }
        }
        if self.mode == TransformMode::Direct {
            return best;
        }
        let [a, b, c] = self.hf.entries(arg);
        let det = a * b - c * c;
        if !(a > 0.0 && det > 0.0) {
            return best;
        }
        let g = self.grads[arg];
        let r = [y[0] - g[0], y[1] - g[1]];
        let dx = [(b * r[0] - c * r[1]) / det, (a * r[1] - c * r[0]) / det];
        let h = grid.h();
        let x = grid.coord(arg);
        let inside = grid.domain().is_none_or(|d| d.contains([x[0] + dx[0], x[1] + dx[1]], 1e-12));
        if dx[0].abs() > h || dx[1].abs() > h || !inside {
            return best;
        }
        best.max(best + 0.5 * (r[0] * dx[0] + r[1] * dx[1]))
    }
}

/// `u*(y)` at arbitrary slopes.
pub fn conjugate_values(u: &GridFunction, ys: &[Point], mode: TransformMode) -> Vec<f64> {
    let cj = Conjugator::new(u, mode);
    ys.par_iter().map(|&y| cj.value(y)).collect()
}

pub fn conjugate_value(u: &GridFunction, y: Point, mode: TransformMode) -> f64 {
    Conjugator::new(u, mode).value(y)
}

/// Transforms `u` onto a lattice over its slope hull. `h_dual` defaults to
/// `sqrt(area(hull) / N)` so that both lattices have about as many nodes.
pub fn legendre_transform(u: &ConvexGridFunction, h_dual: Option<f64>, mode: TransformMode) -> Result<DualPair> {
    let grid = u.grid();
    let slopes: Vec<Point> = (0..grid.len()).map(|k| fd_gradient(u, k)).collect();
    let hull = geometry::convex_hull(&slopes);
    let scale = slopes.iter().fold(1.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
    let area = geometry::area(&hull);
    if hull.len() < 3 || area <= DEGENERATE_AREA * scale * scale {
        return Err(Error::DegenerateDual(area));
    }
    let hd = h_dual.unwrap_or_else(|| (area / grid.len() as f64).sqrt());
    let dual_grid = Arc::new(build_grid(&Domain::Polygon { vertices: hull.clone() }, hd)?);
    let values = conjugate_values(u, dual_grid.coords(), mode);
    let dual = convex_envelope(&GridFunction::new(dual_grid, values)?)?;
    Ok(DualPair { primal: u.clone(), dual, slopes, hull, mode })
}

/// Max of `|u**(x) - u(x)|` over primal nodes two rings from the boundary
/// with determinant at least 0.01; `u**` is the plain maximum over dual nodes.
pub fn involution_error(pair: &DualPair) -> Result<f64> {
    let grid = pair.primal.grid();
    let hf = hessian_field(&pair.primal);
    let nodes: Vec<usize> = (0..grid.len()).filter(|&k| grid.depth(k) >= 2 && hf.det(k) >= 0.01).collect();
    if nodes.is_empty() {
        return Err(Error::NoStrictRegion("no strictly convex primal node".into()));
    }
    let xs: Vec<Point> = nodes.iter().map(|&k| grid.coord(k)).collect();
    let back = conjugate_values(pair.dual.function(), &xs, TransformMode::Direct);
    Ok(nodes.iter().zip(&back).map(|(&k, b)| (b - pair.primal.value(k)).abs()).fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualityCheck {
    pub max_violation: f64,
    pub matched: usize,
    /// Pairs skipped because the slope left the usable part of the dual lattice.
    pub skipped: usize,
}

/// Strictness floor of the determinant duality check.
pub const DUALITY_DET_FLOOR: f64 = 0.01;

/// `max |det D^2 u(x) det D^2 u*(Du(x)) - 1|` over matched interior pairs.
pub fn det_duality_check(pair: &DualPair) -> Result<DualityCheck> {
    let grid = pair.primal.grid();
    let dgrid = pair.dual_grid();
    let hp = hessian_field(&pair.primal);
    let hd = hessian_field(&pair.dual);
    let ddet = hd.det_function();
    let (mut worst, mut matched, mut skipped) = (0.0f64, 0, 0);
    for k in 0..grid.len() {
        if grid.depth(k) < 2 || hp.det(k) < DUALITY_DET_FLOOR {
            continue;
        }
        let y = pair.slopes[k];
        let near = dgrid.locate(y);
        let usable = near.is_some_and(|j| dgrid.depth(j) >= 2);
        let dy = if usable { crate::interp::sample(&ddet, y) } else { None };
        match dy {
            Some(dy) if dy >= DUALITY_DET_FLOOR => {
                worst = worst.max((hp.det(k) * dy - 1.0).abs());
                matched += 1;
            }
            _ => skipped += 1,
        }
    }
    if matched == 0 {
        return Err(Error::NoStrictRegion("no matched pair with both determinants above 0.01".into()));
    }
    Ok(DualityCheck { max_violation: worst, matched, skipped })
}

fn load_is_zero(spec: &FunctionalSpec) -> bool {
    spec.f_fn.is_none() && spec.f.values().iter().all(|&v| v == 0.0)
}

/// Dual functional by quadrature on the dual lattice.
pub fn eval_J_dual(pair: &DualPair, spec: &FunctionalSpec) -> Result<f64> {
    #![allow(non_snake_case)]
    let alpha = spec.alpha;
    check_alpha(alpha)?;
    let dual = &pair.dual;
    let dgrid = dual.grid();
    let hd = hessian_field(dual);
    let det = hd.det_function();
    let main = if alpha > 0.0 {
        integrate(&det.map(|d| d.powf(1.0 - alpha))?)
    } else {
        -integrate(&det.map(|d| if d > 0.0 { d * d.ln() } else { 0.0 })?)
    };
    if load_is_zero(spec) {
        return Ok(main);
    }
    let domain = spec.grid().domain().cloned();
    let tol = spec.grid().h();
    let mut load = vec![0.0; dgrid.len()];
    for (j, slot) in load.iter_mut().enumerate() {
        let y = dgrid.coord(j);
        let x = fd_gradient(dual, j);
        if let Some(d) = &domain {
            if !d.contains(x, tol) {
                return Err(Error::FOutOfDomain(x));
            }
        }
        let f = spec.load_at(x)?;
        *slot = f * (y[0] * x[0] + y[1] * x[1] - dual.value(j)) * hd.det(j);
    }
    let load = integrate(&GridFunction::new(dgrid.clone(), load)?);
    Ok(main - spec.load_coefficient() * load)
}

/// Residual of `U*^{ij} w*_{ij} = -(alpha / (1 - alpha)) f(Du*) det D^2 u*`
/// with `w* = det^{-alpha}` (for `alpha = 0`: `w* = -log det`, right side
/// `-f(Du*) det`), at dual nodes two rings inside the dual lattice.
pub fn dual_el_residual(pair: &DualPair, spec: &FunctionalSpec) -> Result<NodeResidual> {
    let alpha = spec.alpha;
    check_alpha(alpha)?;
    let dual = &pair.dual;
    let grid = dual.grid().clone();
    let hd = hessian_field(dual);
    let h2 = grid.h() * grid.h();
    let raw = |k: usize| {
        let [a, b, c] = hd.entries(k);
        a * b - c * c
    };
    let wstar = |d: f64| if alpha > 0.0 { d.powf(-alpha) } else { -d.ln() };
    let zero_load = load_is_zero(spec);
    let mut values = vec![0.0; grid.len()];
    let mut evaluated = vec![false; grid.len()];
    for k in 0..grid.len() {
        if grid.depth(k) < 2 {
            continue;
        }
        let ok = raw(k) >= DUALITY_DET_FLOOR
            && crate::grid::NEIGHBORS.iter().all(|&(di, dj)| raw(grid.neighbor(k, di, dj).unwrap()) >= DUALITY_DET_FLOOR);
        if !ok {
            continue;
        }
        let w = |di, dj| wstar(raw(grid.neighbor(k, di, dj).unwrap()));
        let w0 = w(0, 0);
        let w11 = (w(1, 0) + w(-1, 0) - 2.0 * w0) / h2;
        let w22 = (w(0, 1) + w(0, -1) - 2.0 * w0) / h2;
        let w12 = (w(1, 1) + w(-1, -1) - w(1, -1) - w(-1, 1)) / (4.0 * h2);
        let [a, b, c] = hd.entries(k);
        let lhs = b * w11 + a * w22 - 2.0 * c * w12;
        let f = if zero_load { 0.0 } else { spec.load_at(fd_gradient(dual, k))? };
        let rhs = if alpha > 0.0 { -(alpha / (1.0 - alpha)) * f * raw(k) } else { -f * raw(k) };
        values[k] = lhs - rhs;
        evaluated[k] = true;
    }
    if !evaluated.iter().any(|&e| e) {
        return Err(Error::NoStrictRegion("dual lattice has no strictly convex interior node".into()));
    }
    Ok(NodeResidual { grid, values, evaluated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn sq(h: f64) -> Arc<Grid2D> {
        Arc::new(build_grid(&Domain::rectangle([-1.0, -1.0], [1.0, 1.0]), h).unwrap())
    }

    #[test]
    fn affine_is_degenerate_but_pointwise_conjugate_works() {
        let g = sq(0.125);
        let u = ConvexGridFunction::from_fn(&g, |p| 0.5 * p[0] - 0.25 * p[1] + 0.75).unwrap();
        assert!(matches!(legendre_transform(&u, None, TransformMode::Refined), Err(Error::DegenerateDual(_))));
        let v = conjugate_value(&u, [0.5, -0.25], TransformMode::Direct);
        assert!((v + 0.75).abs() < 1e-14);
    }

    #[test]
    fn paraboloid_is_self_dual() {
        let g = sq(1.0 / 16.0);
        let u = ConvexGridFunction::from_fn(&g, |p| 0.5 * (p[0] * p[0] + p[1] * p[1])).unwrap();
        let pair = legendre_transform(&u, None, TransformMode::Refined).unwrap();
        assert!((geometry::area(&pair.hull) - 4.0).abs() < 1e-12);
        for k in 0..pair.dual_grid().len() {
            let y = pair.dual_grid().coord(k);
            assert!((pair.dual.value(k) - 0.5 * (y[0] * y[0] + y[1] * y[1])).abs() < 1e-12);
        }
        let chk = det_duality_check(&pair).unwrap();
        assert!(chk.max_violation < 1e-9);
    }
}
