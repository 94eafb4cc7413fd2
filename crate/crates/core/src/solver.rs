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

//! Penalized maximization of `J_alpha` over the discrete admissible class.
//!
//! Each penalty stage maximizes `J - eps_i G` by damped Newton ascent with
//! backtracking from the previous stage's maximizer. A last stage with
//! `eps = 0` enforces `u >= psi` as a bound constraint by projected Newton
//! steps, which is where contact with the obstacle first appears.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::convexity::{convex_envelope, hessian_field_of, ConvexGridFunction};
use crate::discrete::Discrete;
use crate::error::{Error, Result};
use crate::functional::{eval_J, FunctionalSpec, PenaltyConfig, DEFAULT_EPS0};
use crate::geometry;
use crate::grid::{Grid2D, GridFunction, NEIGHBORS};

#[derive(Clone, Debug)]
pub struct SolveConfig {
    /// Newton iterations per penalty stage.
    pub max_inner: usize,
    /// Iterations of the final bound-constrained stage.
    pub max_final: usize,
    /// Relative objective tolerance.
    pub tol_j: f64,
    /// Max-norm tolerance on node updates.
    pub tol_u: f64,
    /// Run the `eps = 0` stage after the penalty schedule.
    pub final_stage: bool,
    /// Starting iterate; defaults to the boundary datum lifted above the obstacle.
    pub initial: Option<GridFunction>,
    pub record_wall_clock: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_inner: 200,
            max_final: 2000,
            tol_j: 1e-14,
            tol_u: 1e-11,
            final_stage: true,
            initial: None,
            record_wall_clock: false,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_j > 0.0 && self.tol_u > 0.0) || self.max_inner == 0 || self.max_final == 0 {
            return Err(Error::InvalidSpec("solver tolerances and iteration caps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub eps: f64,
    pub iterations: usize,
    /// Penalized objective after every accepted step, starting value first.
    pub trace: Vec<f64>,
    /// Unpenalized discrete objective at the stage maximizer.
    pub objective: f64,
    /// Smallest `u - psi` over interior nodes.
    pub min_gap: f64,
    pub converged: bool,
}

/// Per-node residual with the set of nodes where it was evaluated.
#[derive(Clone, Debug)]
pub struct NodeResidual {
    pub grid: Arc<Grid2D>,
    pub values: Vec<f64>,
    pub evaluated: Vec<bool>,
}

impl NodeResidual {
    pub fn count(&self) -> usize {
        self.evaluated.iter().filter(|&&e| e).count()
    }

    fn abs_values(&self) -> Vec<f64> {
        self.values.iter().zip(&self.evaluated).filter(|(_, &e)| e).map(|(v, _)| v.abs()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.abs_values().into_iter().fold(0.0, f64::max)
    }

    pub fn median_abs(&self) -> f64 {
        median(self.abs_values())
    }

    /// Keeps only nodes where `keep` holds.
    pub fn restricted(&self, keep: impl Fn(usize) -> bool) -> NodeResidual {
        let evaluated = self.evaluated.iter().enumerate().map(|(k, &e)| e && keep(k)).collect();
        NodeResidual { grid: self.grid.clone(), values: self.values.clone(), evaluated }
    }

    /// Residual values, zero where not evaluated.
    pub fn to_grid_function(&self) -> GridFunction {
        let v = self.values.iter().zip(&self.evaluated).map(|(&v, &e)| if e { v } else { 0.0 }).collect();
        GridFunction::new(self.grid.clone(), v).expect("finite residual")
    }
}

pub(crate) fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub stages: Vec<StageReport>,
    pub u: ConvexGridFunction,
    /// Discrete objective of the final iterate.
    pub objective: f64,
    /// `eval_J` of the final iterate.
    pub j_value: f64,
    /// Interior nodes with `u - psi <= contact_tol`.
    pub contact: Vec<bool>,
    pub contact_tol: f64,
    /// Euler-Lagrange residual off the contact set.
    pub residual: NodeResidual,
    pub wall_clock: Option<f64>,
}

impl SolveReport {
    pub fn contact_count(&self) -> usize {
        self.contact.iter().filter(|&&c| c).count()
    }
}

/// Determinant floor for residual evaluation.
pub const RESIDUAL_DET_FLOOR: f64 = 0.01;

/// `U^{ij} w_{ij} - f` with `w = det^{alpha - 1}` at nodes whose 3x3
/// neighbourhood is interior and has determinant at least 0.01.
pub fn el_residual(u: &GridFunction, spec: &FunctionalSpec) -> Result<NodeResidual> {
    let grid = u.grid().clone();
    let hf = hessian_field_of(u);
    let h2 = grid.h() * grid.h();
    let raw_det = |k: usize| {
        let [a, b, c] = hf.entries(k);
        a * b - c * c
    };
    let mut values = vec![0.0; grid.len()];
    let mut evaluated = vec![false; grid.len()];
    for k in 0..grid.len() {
        if grid.depth(k) < 2 {
            continue;
        }
        let ok = raw_det(k) >= RESIDUAL_DET_FLOOR
            && NEIGHBORS.iter().all(|&(di, dj)| raw_det(grid.neighbor(k, di, dj).unwrap()) >= RESIDUAL_DET_FLOOR);
        if !ok {
            continue;
        }
        let w = |di, dj| raw_det(grid.neighbor(k, di, dj).unwrap()).powf(spec.alpha - 1.0);
        let w0 = w(0, 0);
        let w11 = (w(1, 0) + w(-1, 0) - 2.0 * w0) / h2;
        let w22 = (w(0, 1) + w(0, -1) - 2.0 * w0) / h2;
        let w12 = (w(1, 1) + w(-1, -1) - w(1, -1) - w(-1, 1)) / (4.0 * h2);
        let [a, b, c] = hf.entries(k);
        values[k] = b * w11 + a * w22 - 2.0 * c * w12 - spec.f.value(k);
        evaluated[k] = true;
    }
    if !evaluated.iter().any(|&e| e) {
        return Err(Error::NoStrictRegion("no node with determinant >= 0.01 in its neighbourhood".into()));
    }
    Ok(NodeResidual { grid, values, evaluated })
}

/// Support function of a convex polygon.
fn support(poly: &[geometry::Point], d: [f64; 2]) -> f64 {
    poly.iter().map(|p| p[0] * d[0] + p[1] * d[1]).fold(f64::NEG_INFINITY, f64::max)
}

/// Maximum number of raise/envelope rounds in [`project_admissible`].
const PROJECTION_ROUNDS: usize = 50;

/// Moves `g` into the discrete admissible class.
///
/// Boundary nodes take the datum, values are raised to the obstacle, neighbour
/// slopes are capped by the support function of the gradient-target polygon
/// (by raising the lower endpoint), and the result is convexified. The rounds
/// repeat until nothing changes.
pub fn project_admissible(g: &GridFunction, spec: &FunctionalSpec) -> Result<ConvexGridFunction> {
    let grid = spec.grid().clone();
    if !g.grid().same_lattice(&grid) {
        return Err(Error::GridMismatch("projection input does not match the functional grid".into()));
    }
    for k in grid.boundary_nodes() {
        if spec.psi.value(k) >= spec.phi.value(k) {
            return Err(Error::InfeasibleConstraints(format!("obstacle reaches the boundary datum at node {k}")));
        }
    }
    let h = grid.h();
    let slack = 1e-9 * spec.phi.range().max(1e-300);
    let caps: Vec<((i64, i64), f64)> = NEIGHBORS
        .iter()
        .map(|&(di, dj)| ((di, dj), h * support(&spec.target, [di as f64, dj as f64])))
        .collect();
    let mut v = g.values().to_vec();
    for k in grid.boundary_nodes() {
        v[k] = spec.phi.value(k);
    }
    let mut out = None;
    for _ in 0..PROJECTION_ROUNDS {
        let before = v.clone();
        for k in grid.interior_nodes() {
            v[k] = v[k].max(spec.psi.value(k));
        }
        loop {
            let mut changed = false;
            for k in grid.interior_nodes() {
                for &((di, dj), cap) in &caps {
                    let y = grid.neighbor(k, di, dj).unwrap();
                    // u(y) - u(k) <= h_P(y - k)
                    if v[y] - v[k] > cap + slack {
                        v[k] = v[y] - cap;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let env = convex_envelope(&GridFunction::new(grid.clone(), v.clone())?)?;
        v = env.values().to_vec();
        let done = v == before;
        out = Some(env);
        if done {
            break;
        }
    }
    Ok(out.expect("at least one round"))
}

/// Phase-one rounds allowed when lifting the datum above the obstacle.
const PHASE_ONE_ROUNDS: usize = 200;

/// Starting iterate strictly above the obstacle.
///
/// Starts from the datum. If it does not clear the obstacle on the unknowns,
/// the obstacle is lowered until it does and raised back in steps, each step
/// re-maximizing the barrier objective so the iterate stays strictly convex.
pub(crate) fn initial_point(d: &Discrete, spec: &FunctionalSpec, eps: f64, cfg: &SolveConfig) -> Result<Vec<f64>> {
    let grid = spec.grid();
    let phi = spec.phi.values();
    let psi = spec.psi.values();
    let margin = (0..grid.len())
        .filter(|&k| !d.is_free(k))
        .map(|k| phi[k] - psi[k])
        .fold(f64::INFINITY, f64::min);
    if !(margin > 0.0) {
        return Err(Error::InfeasibleConstraints("obstacle meets the boundary datum on the pinned nodes".into()));
    }
    let mut u = phi.to_vec();
    if d.objective(&u, eps).is_none() && d.objective(&u, 0.0).is_none() && d.free.iter().all(|&k| u[k] > psi[k]) {
        return Err(Error::InfeasibleConstraints("boundary datum is not strictly convex on the grid".into()));
    }
    let clearance = |u: &[f64]| d.free.iter().map(|&k| u[k] - psi[k]).fold(f64::INFINITY, f64::min);
    let mut gmin = clearance(&u);
    if gmin > 0.0 && d.objective(&u, eps).is_some() {
        return Ok(u);
    }
    let mut shift = -gmin + 0.5 * margin;
    let mut lowered = d.clone();
    for _ in 0..PHASE_ONE_ROUNDS {
        for &k in &d.free {
            lowered.psi[k] = psi[k] - shift;
        }
        newton_stage(&lowered, &mut u, eps, cfg)?;
        gmin = clearance(&u);
        if gmin > 0.0 && shift == 0.0 {
            return Ok(u);
        }
        let next = (0.5 * (shift - gmin)).max(0.0);
        if !(next < shift) {
            break;
        }
        shift = next;
        if gmin > 0.0 && shift <= 0.0 {
            return Ok(u);
        }
    }
    Err(Error::InfeasibleConstraints("no strictly convex iterate clears the obstacle".into()))
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn gather(d: &Discrete, u: &[f64]) -> Vec<f64> {
    d.free.iter().map(|&k| u[k]).collect()
}

fn min_interior_gap(grid: &Grid2D, u: &[f64], psi: &[f64]) -> f64 {
    grid.interior_nodes().map(|k| u[k] - psi[k]).fold(f64::INFINITY, f64::min)
}

/// Halvings allowed in one line search.
const MAX_HALVINGS: usize = 60;

/// Damped Newton ascent on the penalized objective at fixed `eps > 0`.
fn newton_stage(d: &Discrete, u: &mut [f64], eps: f64, cfg: &SolveConfig) -> Result<(usize, Vec<f64>, bool)> {
    let mut phi_val = d
        .objective(u, eps)
        .ok_or_else(|| Error::InfeasibleConstraints("stage start outside the barrier domain".into()))?;
    let mut trace = vec![phi_val];
    let mut rel_change = f64::INFINITY;
    for it in 0..cfg.max_inner {
        let (g, m) = d.gradient_and_matrix(u, eps, true);
        let chol = m.unwrap().cholesky().map_err(|p| Error::NonConvergence(format!("Newton matrix lost definiteness at unknown {p}")))?;
        let dir = chol.solve(&g);
        let dec: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        if 0.5 * dec <= cfg.tol_j * (1.0 + phi_val.abs()) || max_abs(&dir) <= cfg.tol_u {
            return Ok((it, trace, true));
        }
        let x0 = gather(d, u);
        let mut s = 1.0;
        let mut accepted = false;
        let mut trial = u.to_vec();
        for _ in 0..MAX_HALVINGS {
            let x: Vec<f64> = x0.iter().zip(&dir).map(|(a, b)| a + s * b).collect();
            d.scatter(&mut trial, &x);
            if let Some(v) = d.objective(&trial, eps) {
                if v >= phi_val {
                    rel_change = (v - phi_val) / (1.0 + phi_val.abs());
                    phi_val = v;
                    u.copy_from_slice(&trial);
                    trace.push(v);
                    accepted = true;
                    break;
                }
            }
            s *= 0.5;
        }
        if !accepted {
            // the predicted gain is below what the objective can resolve
            let resolved = 0.5 * dec > 1e3 * f64::EPSILON * (1.0 + phi_val.abs()) * (d.free.len() as f64).sqrt();
            if resolved {
                return Err(Error::NonConvergence(format!("line search failed at eps = {eps:e} with decrement {dec:e}")));
            }
            return Ok((it, trace, true));
        }
    }
    if rel_change > 10.0 * cfg.tol_j {
        return Err(Error::NonConvergence(format!("{} Newton iterations at eps = {eps:e}", cfg.max_inner)));
    }
    Ok((cfg.max_inner, trace, false))
}

/// Projected Newton ascent with the bound `u >= psi` on the unknowns.
fn projected_stage(d: &Discrete, u: &mut [f64], cfg: &SolveConfig, range: f64) -> Result<(usize, Vec<f64>, bool)> {
    let mut phi_val = d.objective(u, 0.0).ok_or_else(|| Error::InfeasibleConstraints("final stage start infeasible".into()))?;
    let mut trace = vec![phi_val];
    let psi: Vec<f64> = d.free.iter().map(|&k| d.psi[k]).collect();
    let delta0 = 1e-4 * (1.0 + range);
    let mut rel_change = f64::INFINITY;
    for it in 0..cfg.max_final {
        let (g, m) = d.gradient_and_matrix(u, 0.0, true);
        let mut m = m.unwrap();
        let x0 = gather(d, u);
        let diag: Vec<f64> = (0..x0.len()).map(|p| m.get(p, p)).collect();
        let stat = x0
            .iter()
            .enumerate()
            .map(|(p, &x)| (x - (x + g[p] / diag[p]).max(psi[p])).abs())
            .fold(0.0f64, f64::max);
        let delta = delta0.min(stat);
        let active: Vec<bool> = (0..x0.len()).map(|p| x0[p] - psi[p] <= delta && g[p] < 0.0).collect();
        for p in 0..x0.len() {
            if active[p] {
                m.isolate(p, diag[p]);
            }
        }
        let chol = m.cholesky().map_err(|p| Error::NonConvergence(format!("reduced Newton matrix lost definiteness at unknown {p}")))?;
        let dir = chol.solve(&g);
        let dec: f64 = (0..x0.len()).filter(|&p| !active[p]).map(|p| g[p] * dir[p]).sum();
        if stat <= cfg.tol_u && 0.5 * dec <= cfg.tol_j * (1.0 + phi_val.abs()) {
            return Ok((it, trace, true));
        }
        let mut s = 1.0;
        let mut accepted = false;
        let mut trial = u.to_vec();
        for _ in 0..MAX_HALVINGS {
            let x: Vec<f64> = (0..x0.len()).map(|p| (x0[p] + s * dir[p]).max(psi[p])).collect();
            let pred: f64 = (0..x0.len())
                .map(|p| if active[p] { g[p] * (x[p] - x0[p]) } else { s * g[p] * dir[p] })
                .sum();
            d.scatter(&mut trial, &x);
            if let Some(v) = d.objective(&trial, 0.0) {
                if v - phi_val >= 1e-4 * pred || (v >= phi_val && pred <= 1e3 * f64::EPSILON * (1.0 + phi_val.abs())) {
                    rel_change = (v - phi_val) / (1.0 + phi_val.abs());
                    phi_val = v;
                    u.copy_from_slice(&trial);
                    trace.push(v);
                    accepted = true;
                    break;
                }
            }
            s *= 0.5;
        }
        if !accepted {
            let resolved = 0.5 * dec > 1e3 * f64::EPSILON * (1.0 + phi_val.abs()) * (x0.len() as f64).sqrt();
            if resolved && stat > cfg.tol_u {
                return Err(Error::NonConvergence(format!("projected search failed (stationarity {stat:e})")));
            }
            return Ok((it, trace, true));
        }
    }
    if rel_change > 10.0 * cfg.tol_j {
        return Err(Error::NonConvergence(format!("{} projected Newton iterations", cfg.max_final)));
    }
    Ok((cfg.max_final, trace, false))
}

/// Maximizes `J_alpha` over the discrete admissible class.
pub fn maximize(spec: &FunctionalSpec, pcfg: &PenaltyConfig, scfg: &SolveConfig) -> Result<SolveReport> {
    pcfg.validate()?;
    scfg.validate()?;
    let started = Instant::now();
    let grid = spec.grid().clone();
    if !pcfg.a.grid().same_lattice(&grid) {
        return Err(Error::GridMismatch("penalty weight does not match the functional grid".into()));
    }
    let d = Discrete::new(spec, pcfg);
    if d.free.is_empty() {
        return Err(Error::GridTooCoarse("no free nodes beyond the boundary collar".into()));
    }
    let mut u = match &scfg.initial {
        Some(g) => {
            if !g.grid().same_lattice(&grid) {
                return Err(Error::GridMismatch("initial iterate does not match the functional grid".into()));
            }
            let mut u = spec.phi.values().to_vec();
            for &k in &d.free {
                u[k] = g.value(k);
            }
            if d.objective(&u, pcfg.schedule[0]).is_none() {
                return Err(Error::InfeasibleConstraints("initial iterate is not strictly admissible".into()));
            }
            u
        }
        None => initial_point(&d, spec, pcfg.schedule[0], scfg)?,
    };
    let psi = spec.psi.values();
    let mut stages = Vec::new();
    for &eps in &pcfg.schedule {
        let (iterations, trace, converged) = newton_stage(&d, &mut u, eps, scfg)?;
        stages.push(StageReport {
            eps,
            iterations,
            trace,
            objective: d.objective(&u, 0.0).unwrap_or(f64::NAN),
            min_gap: min_interior_gap(&grid, &u, psi),
            converged,
        });
    }
    if scfg.final_stage {
        let (iterations, trace, converged) = projected_stage(&d, &mut u, scfg, spec.phi.range())?;
        stages.push(StageReport {
            eps: 0.0,
            iterations,
            trace,
            objective: d.objective(&u, 0.0).unwrap_or(f64::NAN),
            min_gap: min_interior_gap(&grid, &u, psi),
            converged,
        });
    }
    let objective = d.objective(&u, 0.0).unwrap_or(f64::NAN);
    let uf = GridFunction::new(grid.clone(), u)?;
    let contact_tol = contact_tolerance(&uf);
    let contact: Vec<bool> = (0..grid.len())
        .map(|k| grid.is_interior(k) && uf.value(k) - psi[k] <= contact_tol)
        .collect();
    let residual = el_residual(&uf, spec)?.restricted(|k| !contact[k]);
    let u = ConvexGridFunction::assume(uf);
    let j_value = eval_J(&u, spec)?;
    let wall_clock = scfg.record_wall_clock.then(|| started.elapsed().as_secs_f64());
    Ok(SolveReport { stages, u, objective, j_value, contact, contact_tol, residual, wall_clock })
}

/// `10 h^2 range(u)`.
pub fn contact_tolerance(u: &GridFunction) -> f64 {
    let h = u.grid().h();
    10.0 * h * h * u.range()
}

/// Largest interior node count accepted by [`brute_force_maximize`].
pub const BRUTE_FORCE_MAX_INTERIOR: usize = 49;

#[derive(Clone, Debug)]
pub struct BruteForceResult {
    pub u: GridFunction,
    pub objective: f64,
    pub sweeps: usize,
}

/// Sweep cap of the coordinate ascent.
pub const BRUTE_FORCE_MAX_SWEEPS: usize = 200_000;

/// Maximizes the concave one-dimensional restriction `t -> local(p, t)` on
/// `[lo, inf)` by safeguarded Newton steps with bisection.
fn coordinate_step(d: &Discrete, u: &[f64], p: usize, lo: f64) -> f64 {
    let (mut a, mut b) = (lo, f64::INFINITY);
    let mut t = 0.0;
    for _ in 0..200 {
        let (_, d1, d2) = match d.local(u, p, t) {
            Some(v) => v,
            None => {
                // outside the positive-definite cone: shrink toward the feasible side
                b = t;
                t = 0.5 * (a.max(lo) + t);
                continue;
            }
        };
        if d1 > 0.0 {
            a = t;
        } else {
            b = t;
        }
        let mut next = if d2 < 0.0 { t - d1 / d2 } else { f64::NAN };
        if !(next > a && next < b) {
            next = if b.is_finite() { 0.5 * (a + b) } else { a + 2.0 * (a - lo).abs().max(1e-3) };
        }
        if next <= lo && d1 <= 0.0 {
            next = lo;
        }
        if (next - t).abs() <= 1e-15 * (1.0 + u[d.free[p]].abs()) {
            t = next;
            break;
        }
        t = next;
    }
    if d.local(u, p, t).is_none() {
        return 0.0;
    }
    t.max(lo)
}

/// Cyclic coordinate ascent on the `eps = 0` discrete objective with the hard
/// bound `u >= psi`; the reference for [`maximize`] on small grids.
pub fn brute_force_maximize(spec: &FunctionalSpec, start: Option<&GridFunction>) -> Result<BruteForceResult> {
    let grid = spec.grid().clone();
    if grid.interior_count() > BRUTE_FORCE_MAX_INTERIOR {
        return Err(Error::InvalidSpec(format!("{} interior nodes exceed the reference limit", grid.interior_count())));
    }
    let pen = PenaltyConfig::default_for(&grid);
    let d = Discrete::new(spec, &pen);
    let mut u = match start {
        Some(g) => {
            let mut u = spec.phi.values().to_vec();
            for &k in &d.free {
                u[k] = g.value(k).max(spec.psi.value(k));
            }
            if d.objective(&u, 0.0).is_none() {
                return Err(Error::InfeasibleConstraints("reference start is not admissible".into()));
            }
            u
        }
        None => initial_point(&d, spec, DEFAULT_EPS0, &SolveConfig::default())?,
    };
    let mut obj = d.objective(&u, 0.0).expect("feasible start");
    let mut sweeps = 0;
    while sweeps < BRUTE_FORCE_MAX_SWEEPS {
        sweeps += 1;
        let mut moved = 0.0f64;
        for p in 0..d.free.len() {
            let k = d.free[p];
            let t = coordinate_step(&d, &u, p, d.psi[k] - u[k]);
            let before = u[k];
            u[k] += t;
            if u[k] < d.psi[k] {
                u[k] = d.psi[k];
            }
            moved = moved.max((u[k] - before).abs());
        }
        let now = d.objective(&u, 0.0).expect("coordinate steps stay feasible");
        let stagnant = (now - obj).abs() <= 1e-16 * (1.0 + now.abs());
        obj = now;
        if moved <= 1e-14 || (stagnant && moved <= 1e-12) {
            break;
        }
    }
    Ok(BruteForceResult { u: GridFunction::new(grid, u)?, objective: obj, sweeps })
}
