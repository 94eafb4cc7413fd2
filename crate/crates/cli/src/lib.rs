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

//! Subcommand drivers behind the `maobs` binary.
//!
//! Exit codes: 0 success, 1 configuration error, 2 non-convergence,
//! 3 failed verdict, 4 degenerate transform.

use std::fs;
use std::path::{Path, PathBuf};

use maobs::benchmarks::{benchmark_spec, default_domain, Benchmark};
use maobs::config::{read_grid_file, RunConfig};
use maobs::convexity::{convexity_violation, ConvexGridFunction};
use maobs::diagnostics::{
    contact_boundary, contact_separation, det_bounds, growth_exponents, quadratic_growth_check, strict_convexity_scan,
    uniformly_convex, DetBounds, GrowthReport, ScanReport,
};
use maobs::functional::{eval_J, PenaltyConfig};
use maobs::geometry::Point;
use maobs::legendre::{det_duality_check, eval_J_dual, involution_error, legendre_transform, DualityCheck, TransformMode};
use maobs::rotation::{eval_A_hat, eval_A_preimage, rotate_graph, RotationMetadata};
use maobs::solver::{brute_force_maximize, maximize, SolveConfig, StageReport};
use maobs::{Error, GridFunction};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Config = 1,
    NonConvergence = 2,
    Verdict = 3,
    Transform = 4,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Exit status for an error raised by `solve`/`verify` (or by `transform`
/// when `transform` is set).
pub fn exit_for(err: &Error, transform: bool) -> Exit {
    match err {
        Error::NonConvergence(_) => Exit::NonConvergence,
        Error::DegenerateDual(_) | Error::NotGraphAfterRotation(_) | Error::NoStrictRegion(_) | Error::VanishingSlope(_)
            if transform =>
        {
            Exit::Transform
        }
        _ => Exit::Config,
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> maobs::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let p = dir.join(name);
    fs::write(&p, contents)?;
    Ok(p)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualSummary {
    pub nodes: usize,
    pub median_abs: Option<f64>,
    pub max_abs: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub alpha: f64,
    pub h: f64,
    pub nodes: usize,
    pub interior_nodes: usize,
    pub stages: Vec<StageReport>,
    pub objective: f64,
    pub j_value: f64,
    pub contact_nodes: usize,
    pub contact_tol: f64,
    pub residual: ResidualSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock: Option<f64>,
}

/// Runs the maximization and writes `u.csv`, `u.json`, `report.json`,
/// `residual.csv` and `contact.csv` into `out`.
pub fn cmd_solve(cfg: &RunConfig, out: &Path, deterministic: bool) -> maobs::Result<SolveSummary> {
    let spec = cfg.spec()?;
    let grid = spec.grid().clone();
    let pcfg = cfg.penalty_config(&grid)?;
    let mut scfg = cfg.solve_config(&grid)?;
    scfg.record_wall_clock = !deterministic;
    let rep = maximize(&spec, &pcfg, &scfg)?;
    let n = rep.residual.count();
    let summary = SolveSummary {
        alpha: spec.alpha,
        h: grid.h(),
        nodes: grid.len(),
        interior_nodes: grid.interior_count(),
        stages: rep.stages.clone(),
        objective: rep.objective,
        j_value: rep.j_value,
        contact_nodes: rep.contact_count(),
        contact_tol: rep.contact_tol,
        residual: ResidualSummary {
            nodes: n,
            median_abs: (n > 0).then(|| rep.residual.median_abs()),
            max_abs: (n > 0).then(|| rep.residual.max_abs()),
        },
        wall_clock: rep.wall_clock,
    };
    write(out, "u.csv", &rep.u.to_csv())?;
    write(out, "u.json", &rep.u.to_json())?;
    write(out, "residual.csv", &rep.residual.to_grid_function().to_csv())?;
    let mask: Vec<f64> = rep.contact.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();
    write(out, "contact.csv", &GridFunction::new(grid, mask)?.to_csv())?;
    write(out, "report.json", &to_json(&summary))?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadraticVerdict {
    pub point: Point,
    pub c1: f64,
    pub c2: f64,
    pub exponent: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub convex: bool,
    pub convexity_violation: f64,
    pub det_bounds: Option<DetBounds>,
    pub det_bounds_passed: Option<bool>,
    pub strict_convexity: Option<ScanReport>,
    pub growth: Vec<GrowthReport>,
    pub growth_passed: bool,
    pub quadratic_growth: Option<QuadraticVerdict>,
    /// `f64::MAX` when no flat candidate exists.
    pub contact_separation: Option<f64>,
}

/// Exponent window of the quadratic-growth verdict.
pub const QUADRATIC_EXPONENT: [f64; 2] = [1.7, 2.3];
/// Smallest Hessian eigenvalue for an obstacle to count as uniformly convex.
pub const UNIFORM_CONVEXITY_FLOOR: f64 = 1e-3;

/// Runs the diagnostics on a solution file and writes `verdict.json`.
pub fn cmd_verify(cfg: &RunConfig, solution: &Path, out: &Path) -> maobs::Result<VerifyReport> {
    let spec = cfg.spec()?;
    let grid = spec.grid().clone();
    let raw = read_grid_file(&grid, solution)?;
    let violation = convexity_violation(&raw);
    let convex = ConvexGridFunction::certify(raw.clone()).is_ok();
    let mut rep = VerifyReport {
        passed: false,
        convex,
        convexity_violation: violation,
        det_bounds: None,
        det_bounds_passed: None,
        strict_convexity: None,
        growth: Vec::new(),
        growth_passed: false,
        quadratic_growth: None,
        contact_separation: None,
    };
    if convex {
        let u = ConvexGridFunction::assume(raw);
        match det_bounds(&u, cfg.margin().max(4.0 * grid.h())) {
            Ok(b) => {
                rep.det_bounds_passed = Some(b.finite_positive());
                rep.det_bounds = Some(b);
            }
            Err(Error::EmptyInterior(_)) => {}
            Err(e) => return Err(e),
        }
        let scan = strict_convexity_scan(&u);
        let n = cfg.verify.growth_points.unwrap_or(3).max(1);
        if let Some(d) = grid.domain() {
            let (lo, hi) = d.bbox();
            for i in 1..=n {
                for j in 1..=n {
                    let t = |a: f64, b: f64, m: usize| a + (b - a) * m as f64 / (n + 1) as f64;
                    let x = [t(lo[0], hi[0], i), t(lo[1], hi[1], j)];
                    match growth_exponents(&u, x) {
                        Ok(g) => rep.growth.push(g),
                        Err(Error::InsufficientRadii(_)) | Err(Error::InvalidSpec(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        rep.growth_passed = rep.growth.iter().all(|g| g.r_squared < 0.9 || g.consistent(0.05));
        if uniformly_convex(&spec.psi, UNIFORM_CONVEXITY_FLOOR) {
            let h = grid.h();
            let boundary = contact_boundary(u.function(), &spec.psi)?;
            let pick = boundary
                .iter()
                .copied()
                .filter(|&k| grid.boundary_distance(grid.coord(k)) >= 8.0 * h)
                .max_by(|&a, &b| {
                    grid.boundary_distance(grid.coord(a)).total_cmp(&grid.boundary_distance(grid.coord(b))).then(b.cmp(&a))
                });
            if let Some(k) = pick {
                let p = grid.coord(k);
                let q = quadratic_growth_check(&u, &spec.psi, p)?;
                let g = growth_exponents(&u, p)?;
                let ok = q.passed() && g.exponent >= QUADRATIC_EXPONENT[0] && g.exponent <= QUADRATIC_EXPONENT[1];
                rep.quadratic_growth = Some(QuadraticVerdict { point: p, c1: q.c1, c2: q.c2, exponent: g.exponent, passed: ok });
            }
        }
        rep.contact_separation = Some(contact_separation(&u, &spec.psi, &scan)?);
        rep.strict_convexity = Some(scan);
    }
    rep.passed = rep.convex
        && rep.det_bounds_passed.unwrap_or(true)
        && rep.strict_convexity.as_ref().is_some_and(|s| s.passed)
        && rep.growth_passed
        && rep.quadratic_growth.as_ref().is_none_or(|q| q.passed)
        && rep.contact_separation.is_some_and(|d| d > 0.0);
    write(out, "verdict.json", &to_json(&rep))?;
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformKind {
    Legendre,
    Rotate,
}

#[derive(Clone, Debug, Serialize)]
pub struct LegendreMetrics {
    #[serde(rename = "legendre_mode")]
    pub mode: TransformMode,
    pub dual_nodes: usize,
    pub dual_h: f64,
    pub hull: Vec<Point>,
    pub duality: DualityCheck,
    pub involution_error: f64,
    pub j_primal: Option<f64>,
    pub j_dual: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RotationMetrics {
    pub metadata: RotationMetadata,
    pub alpha: f64,
    pub a_hat: f64,
    pub a_primal: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum TransformReport {
    Legendre(LegendreMetrics),
    Rotate(RotationMetrics),
}

/// Transforms a solution file and writes the transformed grid plus
/// `transform.json`.
pub fn cmd_transform(cfg: &RunConfig, solution: &Path, kind: TransformKind, out: &Path) -> maobs::Result<TransformReport> {
    let spec = cfg.spec()?;
    let grid = spec.grid().clone();
    let u = ConvexGridFunction::certify(read_grid_file(&grid, solution)?)?;
    let rep = match kind {
        TransformKind::Legendre => {
            let t = &cfg.transform;
            let pair = legendre_transform(&u, t.h_dual, t.legendre_mode)?;
            let duality = det_duality_check(&pair)?;
            let inv = involution_error(&pair)?;
            let j_primal = eval_J(&u, &spec).ok();
            let j_dual = eval_J_dual(&pair, &spec).ok();
            write(out, "dual.csv", &pair.dual.to_csv())?;
            write(out, "dual.json", &pair.dual.to_json())?;
            TransformReport::Legendre(LegendreMetrics {
                mode: pair.mode,
                dual_nodes: pair.dual_grid().len(),
                dual_h: pair.dual_grid().h(),
                hull: pair.hull.clone(),
                duality,
                involution_error: inv,
                j_primal,
                j_dual,
            })
        }
        TransformKind::Rotate => {
            let window = cfg.window()?.ok_or_else(|| Error::InvalidSpec("rotation needs [transform] window_x1 and window_x2".into()))?;
            let rg = rotate_graph(u.function(), window, cfg.transform.h_rotated.unwrap_or(grid.h()))?;
            let alpha = spec.alpha;
            let a_hat = eval_A_hat(&rg, alpha)?;
            let a_primal = eval_A_preimage(&u, &rg, alpha)?;
            write(out, "rotated.csv", &rg.v.to_csv())?;
            write(out, "rotated.json", &rg.v.to_json())?;
            write(out, "rotation.json", &to_json(&rg.metadata()))?;
            TransformReport::Rotate(RotationMetrics { metadata: rg.metadata(), alpha, a_hat, a_primal, gap: (a_hat - a_primal).abs() })
        }
    };
    write(out, "transform.json", &to_json(&rep))?;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusEntry {
    pub benchmark: Benchmark,
    pub alpha: f64,
    pub h: f64,
    pub objective: f64,
    pub contact_nodes: usize,
    pub residual_median: Option<f64>,
    /// Relative objective gap to the coordinate-ascent reference (9x9 lattice only).
    pub oracle_objective_gap: Option<f64>,
    pub oracle_iterate_gap: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusReport {
    pub passed: bool,
    pub entries: Vec<CorpusEntry>,
}

pub const ORACLE_OBJECTIVE_TOL: f64 = 1e-6;
pub const ORACLE_ITERATE_TOL: f64 = 1e-4;
/// Spacing of the reference corpus on `[-1, 1]^2` (a 9x9 lattice).
pub const ORACLE_H: f64 = 0.25;

/// Built-in benchmarks at `h` plus the reference comparison on the 9x9 corpus.
pub fn cmd_corpus(h: f64, out: &Path, deterministic: bool) -> maobs::Result<CorpusReport> {
    let mut entries = Vec::new();
    let mut passed = true;
    let scfg = SolveConfig { record_wall_clock: !deterministic, ..SolveConfig::default() };
    for hh in [ORACLE_H, h] {
        for kind in Benchmark::ALL {
            for alpha in [0.0, 0.25] {
                let spec = benchmark_spec(kind, alpha, &default_domain(), hh)?;
                let pcfg = PenaltyConfig::default_for(spec.grid());
                let rep = maximize(&spec, &pcfg, &scfg)?;
                let (mut og, mut ig) = (None, None);
                if hh == ORACLE_H {
                    let b = brute_force_maximize(&spec, None)?;
                    let rel = (rep.objective - b.objective).abs() / b.objective.abs().max(1.0);
                    let it = rep.u.max_abs_diff(&b.u);
                    passed &= rel <= ORACLE_OBJECTIVE_TOL && it <= ORACLE_ITERATE_TOL;
                    og = Some(rel);
                    ig = Some(it);
                }
                let n = rep.residual.count();
                entries.push(CorpusEntry {
                    benchmark: kind,
                    alpha,
                    h: hh,
                    objective: rep.objective,
                    contact_nodes: rep.contact_count(),
                    residual_median: (n > 0).then(|| rep.residual.median_abs()),
                    oracle_objective_gap: og,
                    oracle_iterate_gap: ig,
                });
            }
        }
        if hh == h {
            break;
        }
    }
    let rep = CorpusReport { passed, entries };
    write(out, "corpus.json", &to_json(&rep))?;
    Ok(rep)
}
