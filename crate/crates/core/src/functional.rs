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

//! The functionals `A_alpha`, `J_alpha`, the obstacle penalty and the boundary
//! barrier, evaluated by quadrature on the grid.

#![allow(non_snake_case)]

use std::fmt;
use std::sync::Arc;

use crate::convexity::{fd_gradient, hessian_field, ConvexGridFunction};
use crate::error::{Error, Result};
use crate::geometry::{self, Point};
use crate::grid::{integrate, Grid2D, GridFunction};

/// Upper end of the admissible exponent range in two dimensions.
pub const ALPHA_MAX: f64 = 0.25;
/// Determinant floor of the logarithmic functional.
pub const DELTA_DET: f64 = 1e-12;
/// Fraction of interior nodes allowed below [`DELTA_DET`] when `alpha = 0`.
pub const LOG_DEGENERATE_FRACTION: f64 = 0.01;

pub type PointFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Data defining `J_alpha` and the admissible class.
#[derive(Clone)]
pub struct FunctionalSpec {
    pub alpha: f64,
    pub f: GridFunction,
    /// Analytic load, used wherever `f` is needed off the grid.
    pub f_fn: Option<PointFn>,
    pub phi: GridFunction,
    pub psi: GridFunction,
    /// Convex hull of the finite-difference gradients of `phi`.
    pub target: Vec<Point>,
}

impl fmt::Debug for FunctionalSpec {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("FunctionalSpec")
            .field("alpha", &self.alpha)
            .field("nodes", &self.f.grid().len())
            .field("analytic_f", &self.f_fn.is_some())
            .field("target", &self.target)
            .finish()
    }
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=ALPHA_MAX).contains(&alpha) {
        return Err(Error::InvalidSpec(format!("alpha = {alpha} outside the admissible range [0, 0.25]")));
    }
    Ok(())
}

impl FunctionalSpec {
    pub fn new(alpha: f64, f: GridFunction, phi: GridFunction, psi: GridFunction) -> Result<Self> {
        check_alpha(alpha)?;
        let grid = phi.grid().clone();
        for g in [&f, &psi] {
            if !g.grid().same_lattice(&grid) {
                return Err(Error::GridMismatch("f, phi and psi must share one grid".into()));
            }
        }
        let range = phi.range().max(psi.range()).max(f64::MIN_POSITIVE);
        for k in grid.boundary_nodes() {
            if !(phi.value(k) - psi.value(k) >= 1e-12 * range) {
                return Err(Error::InfeasibleConstraints(format!(
                    "obstacle {} not below boundary datum {} at boundary node {k}",
                    psi.value(k),
                    phi.value(k)
                )));
            }
        }
        for k in grid.interior_nodes() {
            for &(di, dj) in &crate::grid::DIRECTIONS {
                let p = grid.neighbor(k, di, dj).unwrap();
                let m = grid.neighbor(k, -di, -dj).unwrap();
                if !(phi.value(p) + phi.value(m) - 2.0 * phi.value(k) > 0.0) {
                    return Err(Error::InvalidSpec(format!("boundary datum is not uniformly convex at node {k}")));
                }
            }
        }
        let slopes: Vec<Point> = (0..grid.len()).map(|k| fd_gradient(&phi, k)).collect();
        let target = geometry::convex_hull(&slopes);
        Ok(FunctionalSpec { alpha, f, f_fn: None, phi, psi, target })
    }

    pub fn with_analytic_load(mut self, f: PointFn) -> Self {
        self.f_fn = Some(f);
        self
    }

    pub fn grid(&self) -> &Arc<Grid2D> {
        self.phi.grid()
    }

    /// Coefficient of the load term: `alpha` for `alpha > 0`, `1` for the log case.
    pub fn load_coefficient(&self) -> f64 {
        if self.alpha > 0.0 {
            self.alpha
        } else {
            1.0
        }
    }

    /// Load at an arbitrary point: analytic when available, otherwise
    /// interpolated inside the mask.
    pub fn load_at(&self, x: Point) -> Result<f64> {
        if let Some(f) = &self.f_fn {
            let v = f(x);
            return if v.is_finite() { Ok(v) } else { Err(Error::FOutOfDomain(x)) };
        }
        crate::interp::sample(&self.f, x).ok_or(Error::FOutOfDomain(x))
    }
}

/// Penalty parameters: `eps` schedule, obstacle weight `a`, barrier index `j`.
#[derive(Clone, Debug)]
pub struct PenaltyConfig {
    pub schedule: Vec<f64>,
    pub a: GridFunction,
    /// Decay exponent of `a` near the boundary.
    pub decay: f64,
    pub barrier_j: u32,
    /// Add the `H_j(u - phi)` term over the boundary collar.
    pub attached_boundary: bool,
}

pub const DEFAULT_STAGES: usize = 8;
pub const DEFAULT_EPS0: f64 = 0.1;

pub fn default_schedule() -> Vec<f64> {
    (0..DEFAULT_STAGES).map(|i| DEFAULT_EPS0 * 0.5f64.powi(i as i32)).collect()
}

/// `dist(x, boundary)^p` at interior nodes, zero on boundary nodes.
pub fn boundary_weight(grid: &Arc<Grid2D>, p: f64) -> GridFunction {
    let v = (0..grid.len())
        .map(|k| if grid.is_boundary(k) { 0.0 } else { grid.boundary_distance(grid.coord(k)).max(grid.h() * 0.5).powf(p) })
        .collect();
    GridFunction::new(grid.clone(), v).expect("finite weights")
}

impl PenaltyConfig {
    pub fn new(grid: &Arc<Grid2D>, schedule: Vec<f64>, decay: f64, barrier_j: u32) -> Result<Self> {
        let cfg = PenaltyConfig { schedule, a: boundary_weight(grid, decay), decay, barrier_j, attached_boundary: false };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn default_for(grid: &Arc<Grid2D>) -> Self {
        Self::new(grid, default_schedule(), 3.0, 0).expect("default penalty configuration is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schedule.is_empty() || self.schedule.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::InvalidSpec("penalty schedule must be nonempty and positive".into()));
        }
        for w in self.schedule.windows(2) {
            let r = w[1] / w[0];
            if !(0.1..=0.9).contains(&r) {
                return Err(Error::InvalidSpec(format!("penalty ratio {r} outside [0.1, 0.9]")));
            }
        }
        if !(self.decay.is_finite() && self.decay > 0.0) {
            return Err(Error::InvalidSpec("weight decay exponent must be positive".into()));
        }
        let grid = self.a.grid();
        for k in 0..grid.len() {
            let a = self.a.value(k);
            if (grid.is_interior(k) && !(a > 0.0)) || (grid.is_boundary(k) && a != 0.0) {
                return Err(Error::InvalidSpec(format!("obstacle weight a has wrong sign at node {k}")));
            }
        }
        Ok(())
    }
}

/// `integrate(det^alpha)`, or `integrate(log max(det, DELTA_DET))` for `alpha = 0`.
pub fn eval_A(u: &ConvexGridFunction, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let hf = hessian_field(u);
    let grid = u.grid();
    if alpha > 0.0 {
        return Ok(integrate(&hf.det_function().map(|d| d.powf(alpha))?));
    }
    let low = grid.interior_nodes().filter(|&k| hf.det(k) < DELTA_DET).count();
    let fraction = low as f64 / grid.interior_count() as f64;
    if fraction > LOG_DEGENERATE_FRACTION {
        return Err(Error::LogOfDegenerateHessian { floor: DELTA_DET, fraction: 100.0 * fraction });
    }
    Ok(integrate(&hf.det_function().map(|d| d.max(DELTA_DET).ln())?))
}

/// `eval_A - c integrate(f u)` with `c = alpha` (or `1` when `alpha = 0`).
pub fn eval_J(u: &ConvexGridFunction, spec: &FunctionalSpec) -> Result<f64> {
    let a = eval_A(u, spec.alpha)?;
    let fu = u.zip_with(&spec.f, |x, y| x * y)?;
    Ok(a - spec.load_coefficient() * integrate(&fu))
}

/// `eps integrate(a (u - lower)^{-2})` over nodes with `a > 0`.
pub fn eval_obstacle_penalty(u: &GridFunction, lower: &GridFunction, cfg: &PenaltyConfig, eps: f64) -> Result<f64> {
    let grid = u.grid();
    let mut s = 0.0;
    for k in 0..grid.len() {
        let a = cfg.a.value(k);
        if a == 0.0 {
            continue;
        }
        let gap = u.value(k) - lower.value(k);
        if !(gap > 0.0) {
            return Err(Error::ContactWithObstacle(k));
        }
        s += a * grid.weight(k) / (gap * gap);
    }
    Ok(eps * s)
}

/// `H(4^j t)` with `H(s) = (1 - s^2)^{-4}`.
pub fn eval_barrier_H(t: f64, j: u32) -> Result<f64> {
    let s = 4f64.powi(j as i32) * t;
    if !(s.abs() < 1.0) {
        return Err(Error::BarrierDomain(s.abs()));
    }
    Ok((1.0 - s * s).powi(-4))
}

/// `J(t u + (1-t) v) - t J(u) - (1-t) J(v)` without a boundary check.
pub fn concavity_gap(u: &ConvexGridFunction, v: &ConvexGridFunction, spec: &FunctionalSpec, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidSpec(format!("interpolation parameter {t} outside (0, 1)")));
    }
    let mid = ConvexGridFunction::certify(u.combine(t, v, 1.0 - t)?)?;
    Ok(eval_J(&mid, spec)? - (t * eval_J(u, spec)? + (1.0 - t) * eval_J(v, spec)?))
}

/// [`concavity_gap`] for arguments that share boundary values.
pub fn concavity_probe(u: &ConvexGridFunction, v: &ConvexGridFunction, spec: &FunctionalSpec, t: f64) -> Result<f64> {
    let grid = u.grid();
    if !grid.same_lattice(v.grid()) {
        return Err(Error::GridMismatch("probe arguments live on different grids".into()));
    }
    let tol = 1e-12 * u.range().max(v.range()).max(1.0);
    if let Some(k) = grid.boundary_nodes().find(|&k| (u.value(k) - v.value(k)).abs() > tol) {
        return Err(Error::BoundaryMismatch(k));
    }
    if u.values() == v.values() {
        return Ok(0.0);
    }
    concavity_gap(u, v, spec, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Domain};

    fn unit(h: f64) -> Arc<Grid2D> {
        Arc::new(build_grid(&Domain::unit_square(), h).unwrap())
    }

    fn spec(g: &Arc<Grid2D>, alpha: f64, f: f64) -> FunctionalSpec {
        let phi = GridFunction::from_fn(g, |p| 0.5 * (p[0] * p[0] + p[1] * p[1])).unwrap();
        FunctionalSpec::new(alpha, GridFunction::constant(g, f), phi, GridFunction::constant(g, -1e6)).unwrap()
    }

    #[test]
    fn barrier_values() {
        assert_eq!(eval_barrier_H(0.0, 3).unwrap(), 1.0);
        assert!((eval_barrier_H(0.5, 0).unwrap() - 3.1605).abs() < 1e-4);
        assert!(matches!(eval_barrier_H(0.25, 1), Err(Error::BarrierDomain(_))));
    }

    #[test]
    fn alpha_range_enforced() {
        let g = unit(0.25);
        let phi = GridFunction::from_fn(&g, |p| p[0] * p[0] + p[1] * p[1]).unwrap();
        let z = GridFunction::constant(&g, 0.0);
        let r = FunctionalSpec::new(0.3, z.clone(), phi, GridFunction::constant(&g, -1.0));
        assert!(matches!(r, Err(Error::InvalidSpec(m)) if m.contains("[0, 0.25]")));
    }

    #[test]
    fn obstacle_must_stay_below_boundary_data() {
        let g = unit(0.25);
        let phi = GridFunction::from_fn(&g, |p| p[0] * p[0] + p[1] * p[1]).unwrap();
        let z = GridFunction::constant(&g, 0.0);
        let r = FunctionalSpec::new(0.1, z, phi.clone(), phi);
        assert!(matches!(r, Err(Error::InfeasibleConstraints(_))));
    }

    #[test]
    fn penalty_and_homogeneity() {
        let g = unit(1.0 / 16.0);
        let cfg = PenaltyConfig::default_for(&g);
        let lower = GridFunction::constant(&g, 0.0);
        let one = GridFunction::constant(&g, 1.0);
        let two = GridFunction::constant(&g, 2.0);
        let p1 = eval_obstacle_penalty(&one, &lower, &cfg, 1.0).unwrap();
        let p2 = eval_obstacle_penalty(&two, &lower, &cfg, 1.0).unwrap();
        assert!((p2 - p1 / 4.0).abs() <= 1e-14 * p1);
        let mut touch = vec![1.0; g.len()];
        let k = g.interior_nodes().nth(7).unwrap();
        touch[k] = 0.0;
        let touch = GridFunction::new(g.clone(), touch).unwrap();
        assert!(matches!(eval_obstacle_penalty(&touch, &lower, &cfg, 1.0), Err(Error::ContactWithObstacle(j)) if j == k));
    }

    #[test]
    fn identical_probe_is_zero() {
        let g = unit(0.125);
        let s = spec(&g, 0.25, 1.0);
        let u = ConvexGridFunction::certify(s.phi.clone()).unwrap();
        assert_eq!(concavity_probe(&u, &u, &s, 0.5).unwrap(), 0.0);
        let v = ConvexGridFunction::from_fn(&g, |p| p[0] * p[0] + p[1] * p[1]).unwrap();
        assert!(matches!(concavity_probe(&u, &v, &s, 0.5), Err(Error::BoundaryMismatch(_))));
    }

    #[test]
    fn log_functional_detects_degeneracy() {
        let g = unit(0.125);
        let u = ConvexGridFunction::from_fn(&g, |p| p[0] + 2.0 * p[1]).unwrap();
        assert!(matches!(eval_A(&u, 0.0), Err(Error::LogOfDegenerateHessian { .. })));
        assert_eq!(eval_A(&u, 0.25).unwrap(), 0.0);
    }
}
