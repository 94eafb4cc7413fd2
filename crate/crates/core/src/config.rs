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

//! TOML run configuration.
//!
//! ```toml
//! [domain]
//! kind = "rectangle"
//! min = [-1.0, -1.0]
//! max = [1.0, 1.0]
//! h = 0.0625
//!
//! [functional]
//! alpha = 0.25
//! f = "0"
//! phi = "(x1^2 + x2^2)/2"
//! psi = "0.1 + 0.1*(x1^2 + x2^2)"
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::benchmarks::{benchmark_spec, Benchmark, INACTIVE_OBSTACLE};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::functional::{check_alpha, default_schedule, FunctionalSpec, PenaltyConfig, DEFAULT_EPS0};
use crate::grid::{build_grid, Domain, Grid2D, GridFunction};
use crate::legendre::TransformMode;
use crate::rotation::Window;
use crate::solver::SolveConfig;

pub const MAX_CONFIG_BYTES: usize = 1 << 20;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: String,
    pub min: Option<[f64; 2]>,
    pub max: Option<[f64; 2]>,
    pub center: Option<[f64; 2]>,
    pub radius: Option<f64>,
    pub vertices: Option<Vec<[f64; 2]>>,
    pub h: f64,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    pub alpha: f64,
    pub benchmark: Option<Benchmark>,
    pub f: Option<String>,
    pub phi: Option<String>,
    /// Expression, or `"none"` for an inactive obstacle.
    pub psi: Option<String>,
    pub f_file: Option<PathBuf>,
    pub phi_file: Option<PathBuf>,
    pub psi_file: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PenaltySection {
    pub eps0: f64,
    pub stages: usize,
    pub schedule: Option<Vec<f64>>,
    pub decay: f64,
    pub barrier_j: u32,
    pub attached_boundary: bool,
}

impl Default for PenaltySection {
    fn default() -> Self {
        PenaltySection {
            eps0: DEFAULT_EPS0,
            stages: default_schedule().len(),
            schedule: None,
            decay: 3.0,
            barrier_j: 0,
            attached_boundary: false,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSection {
    pub max_inner: usize,
    pub max_final: usize,
    pub tol_j: f64,
    pub tol_u: f64,
    pub final_stage: bool,
    pub initial_file: Option<PathBuf>,
}

impl Default for SolveSection {
    fn default() -> Self {
        let d = SolveConfig::default();
        SolveSection {
            max_inner: d.max_inner,
            max_final: d.max_final,
            tol_j: d.tol_j,
            tol_u: d.tol_u,
            final_stage: d.final_stage,
            initial_file: None,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Interior margin of the determinant bounds; defaults to `8h`.
    pub margin: Option<f64>,
    /// Base points per axis of the growth fits.
    pub growth_points: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformSection {
    pub legendre_mode: TransformMode,
    pub h_dual: Option<f64>,
    pub window_x1: Option<[f64; 2]>,
    pub window_x2: Option<[f64; 2]>,
    pub h_rotated: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: DomainConfig,
    functional: FunctionalConfig,
    #[serde(default)]
    penalty: PenaltySection,
    #[serde(default)]
    solve: SolveSection,
    #[serde(default)]
    output: OutputSection,
    #[serde(default)]
    verify: VerifySection,
    #[serde(default)]
    transform: TransformSection,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub domain: Domain,
    pub h: f64,
    pub functional: FunctionalConfig,
    pub penalty: PenaltySection,
    pub solve: SolveSection,
    pub output: OutputSection,
    pub verify: VerifySection,
    pub transform: TransformSection,
    /// Directory that relative file paths resolve against.
    pub base_dir: PathBuf,
}

fn domain_of(d: &DomainConfig) -> Result<Domain> {
    let need = |o: Option<[f64; 2]>, name: &str| o.ok_or_else(|| Error::InvalidSpec(format!("domain needs '{name}'")));
    let dom = match d.kind.as_str() {
        "rectangle" => {
            let (lo, hi) = (need(d.min, "min")?, need(d.max, "max")?);
            if !(lo[0] < hi[0] && lo[1] < hi[1]) {
                return Err(Error::DegenerateDomain(format!("rectangle {lo:?} .. {hi:?}")));
            }
            Domain::rectangle(lo, hi)
        }
        "disc" => {
            let r = d.radius.ok_or_else(|| Error::InvalidSpec("domain needs 'radius'".into()))?;
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::DegenerateDomain(format!("radius {r}")));
            }
            Domain::Disc { center: need(d.center, "center")?, radius: r }
        }
        "polygon" => Domain::Polygon {
            vertices: d.vertices.clone().ok_or_else(|| Error::InvalidSpec("domain needs 'vertices'".into()))?,
        },
        other => return Err(Error::InvalidSpec(format!("unknown domain kind '{other}'"))),
    };
    dom.normalized()
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        if text.len() > MAX_CONFIG_BYTES {
            return Err(Error::Parse("configuration larger than 1 MiB".into()));
        }
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let cfg = RunConfig {
            domain: domain_of(&raw.domain)?,
            h: raw.domain.h,
            functional: raw.functional,
            penalty: raw.penalty,
            solve: raw.solve,
            output: raw.output,
            verify: raw.verify,
            transform: raw.transform,
            base_dir: base_dir.to_path_buf(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidSpec(format!("grid spacing h = {} must be positive", self.h)));
        }
        check_alpha(self.functional.alpha)?;
        let fc = &self.functional;
        if fc.benchmark.is_some() && (fc.f.is_some() || fc.phi.is_some() || fc.psi.is_some()) {
            return Err(Error::InvalidSpec("'benchmark' excludes explicit f, phi, psi".into()));
        }
        for (e, file, name) in [(&fc.f, &fc.f_file, "f"), (&fc.phi, &fc.phi_file, "phi"), (&fc.psi, &fc.psi_file, "psi")] {
            if e.is_some() && file.is_some() {
                return Err(Error::InvalidSpec(format!("'{name}' given both as expression and file")));
            }
        }
        if fc.benchmark.is_none() && fc.phi.is_none() && fc.phi_file.is_none() {
            return Err(Error::InvalidSpec("boundary datum 'phi' is required".into()));
        }
        for s in [&fc.f, &fc.phi].into_iter().flatten() {
            Expr::parse(s)?;
        }
        if let Some(s) = fc.psi.as_deref().filter(|s| *s != "none") {
            Expr::parse(s)?;
        }
        let files = [&fc.f_file, &fc.phi_file, &fc.psi_file, &self.solve.initial_file];
        for f in files.into_iter().flatten() {
            let p = self.resolve(f);
            if !p.is_file() {
                return Err(Error::InvalidSpec(format!("missing file {}", p.display())));
            }
        }
        let p = &self.penalty;
        if !(p.eps0.is_finite() && p.eps0 > 0.0) || p.stages == 0 {
            return Err(Error::InvalidSpec("penalty needs eps0 > 0 and at least one stage".into()));
        }
        let s = &self.solve;
        if !(s.tol_j > 0.0 && s.tol_u > 0.0) || s.max_inner == 0 || s.max_final == 0 {
            return Err(Error::InvalidSpec("solver tolerances and iteration caps must be positive".into()));
        }
        if let (Some(a), Some(b)) = (self.transform.window_x1, self.transform.window_x2) {
            Window::new(a, b)?;
        }
        Ok(())
    }

    /// Applies command-line overrides and revalidates.
    pub fn with_overrides(mut self, h: Option<f64>, alpha: Option<f64>) -> Result<Self> {
        if let Some(h) = h {
            self.h = h;
        }
        if let Some(a) = alpha {
            self.functional.alpha = a;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn grid(&self) -> Result<Arc<Grid2D>> {
        Ok(Arc::new(build_grid(&self.domain, self.h)?))
    }

    /// Reads a grid file (CSV with header `x,y,value`, or JSON) on `grid`.
    pub fn read_grid_file(&self, grid: &Arc<Grid2D>, p: &Path) -> Result<GridFunction> {
        read_grid_file(grid, &self.resolve(p))
    }

    fn field(&self, grid: &Arc<Grid2D>, expr: &Option<String>, file: &Option<PathBuf>, default: f64) -> Result<GridFunction> {
        match (expr, file) {
            (Some(s), _) if s == "none" => Ok(GridFunction::constant(grid, INACTIVE_OBSTACLE)),
            (Some(s), _) => {
                let e = Expr::parse(s)?;
                GridFunction::from_fn(grid, |x| e.eval(x))
            }
            (None, Some(p)) => self.read_grid_file(grid, p),
            (None, None) => Ok(GridFunction::constant(grid, default)),
        }
    }

    pub fn spec(&self) -> Result<FunctionalSpec> {
        let fc = &self.functional;
        if let Some(kind) = fc.benchmark {
            return benchmark_spec(kind, fc.alpha, &self.domain, self.h);
        }
        let grid = self.grid()?;
        let f = self.field(&grid, &fc.f, &fc.f_file, 0.0)?;
        let phi = self.field(&grid, &fc.phi, &fc.phi_file, 0.0)?;
        let psi = self.field(&grid, &fc.psi, &fc.psi_file, INACTIVE_OBSTACLE)?;
        let spec = FunctionalSpec::new(fc.alpha, f, phi, psi)?;
        Ok(match &fc.f {
            Some(s) => {
                let e = Arc::new(Expr::parse(s)?);
                spec.with_analytic_load(Arc::new(move |x| e.eval(x)))
            }
            None => spec,
        })
    }

    pub fn penalty_config(&self, grid: &Arc<Grid2D>) -> Result<PenaltyConfig> {
        let p = &self.penalty;
        let schedule = p
            .schedule
            .clone()
            .unwrap_or_else(|| (0..p.stages).map(|i| p.eps0 * 0.5f64.powi(i as i32)).collect());
        let mut cfg = PenaltyConfig::new(grid, schedule, p.decay, p.barrier_j)?;
        cfg.attached_boundary = p.attached_boundary;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn solve_config(&self, grid: &Arc<Grid2D>) -> Result<SolveConfig> {
        let s = &self.solve;
        let initial = match &s.initial_file {
            Some(p) => Some(self.read_grid_file(grid, p)?),
            None => None,
        };
        let cfg = SolveConfig {
            max_inner: s.max_inner,
            max_final: s.max_final,
            tol_j: s.tol_j,
            tol_u: s.tol_u,
            final_stage: s.final_stage,
            initial,
            record_wall_clock: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn margin(&self) -> f64 {
        self.verify.margin.unwrap_or(8.0 * self.h)
    }

    pub fn window(&self) -> Result<Option<Window>> {
        match (self.transform.window_x1, self.transform.window_x2) {
            (Some(a), Some(b)) => Window::new(a, b).map(Some),
            (None, None) => Ok(None),
            _ => Err(Error::InvalidSpec("rotation window needs both window_x1 and window_x2".into())),
        }
    }
}

/// Reads a grid file on `grid`: JSON documents by extension, CSV otherwise.
pub fn read_grid_file(grid: &Arc<Grid2D>, path: &Path) -> Result<GridFunction> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let f = GridFunction::from_json(&text)?;
        if !f.grid().same_lattice(grid) {
            return Err(Error::GridMismatch(format!("{} lives on a different lattice", path.display())));
        }
        return GridFunction::new(grid.clone(), f.into_values());
    }
    GridFunction::from_csv(grid, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const OBSTACLE: &str = r#"
[domain]
kind = "rectangle"
min = [-1.0, -1.0]
max = [1.0, 1.0]
h = 0.25

[functional]
alpha = 0.25
f = "0"
phi = "(x1^2 + x2^2)/2"
psi = "0.1 + 0.1*(x1^2 + x2^2)"

[penalty]
stages = 4
"#;

    #[test]
    fn parses_and_builds() {
        let c = RunConfig::parse(OBSTACLE, Path::new(".")).unwrap();
        let spec = c.spec().unwrap();
        assert_eq!(spec.grid().len(), 81);
        assert_eq!(c.penalty_config(spec.grid()).unwrap().schedule, vec![0.1, 0.05, 0.025, 0.0125]);
        assert!((c.margin() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_alpha_and_missing_file() {
        let bad = OBSTACLE.replace("alpha = 0.25", "alpha = 0.3");
        assert!(matches!(RunConfig::parse(&bad, Path::new(".")), Err(Error::InvalidSpec(m)) if m.contains("[0, 0.25]")));
        let missing = OBSTACLE.replace("psi = \"0.1 + 0.1*(x1^2 + x2^2)\"", "psi_file = \"nope.csv\"");
        assert!(matches!(RunConfig::parse(&missing, Path::new("/nonexistent")), Err(Error::InvalidSpec(m)) if m.contains("missing file")));
        let unknown = OBSTACLE.replace("[penalty]", "[penalty]\nbogus = 1");
        assert!(matches!(RunConfig::parse(&unknown, Path::new(".")), Err(Error::Parse(_))));
    }

    #[test]
    fn benchmark_shortcut() {
        let text = "[domain]\nkind = \"disc\"\ncenter = [0.0, 0.0]\nradius = 1.0\nh = 0.25\n[functional]\nalpha = 0.0\nbenchmark = \"quadratic\"\n";
        let c = RunConfig::parse(text, Path::new(".")).unwrap();
        assert!(c.spec().is_ok());
    }
}
