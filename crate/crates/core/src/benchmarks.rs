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

//! Benchmark problems with known maximizers.

use std::sync::Arc;

use crate::error::Result;
use crate::functional::{FunctionalSpec, PointFn};
use crate::geometry::Point;
use crate::grid::{build_grid, Domain, GridFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    /// `f = 0`, `phi = |x|^2 / 2`, inactive obstacle; the maximizer is `phi`.
    Quadratic,
    /// Load manufactured from `cosh x1 + cosh x2`, inactive obstacle.
    Manufactured,
    /// `f = 0`, `phi = |x|^2 / 2`, `psi = 0.1 + 0.1 |x|^2`, contact for `|x| < 1/2`.
    Obstacle,
}

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [Benchmark::Quadratic, Benchmark::Manufactured, Benchmark::Obstacle];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Quadratic => "quadratic",
            Benchmark::Manufactured => "manufactured",
            Benchmark::Obstacle => "obstacle",
        }
    }
}

/// Obstacle value far below every datum used here.
pub const INACTIVE_OBSTACLE: f64 = -1e6;

pub fn half_norm2(p: Point) -> f64 {
    0.5 * (p[0] * p[0] + p[1] * p[1])
}

pub fn cosh_sum(p: Point) -> f64 {
    p[0].cosh() + p[1].cosh()
}

pub fn obstacle_bump(p: Point) -> f64 {
    0.1 + 0.1 * (p[0] * p[0] + p[1] * p[1])
}

/// `U^{ij} w_{ij}` of `cosh x1 + cosh x2` with `w = det^{alpha - 1}`.
pub fn manufactured_load(alpha: f64) -> PointFn {
    Arc::new(move |p: Point| {
        let term = |ci: f64, si: f64, cj: f64| {
            cj.powf(alpha) * (alpha - 1.0) * ((alpha - 2.0) * ci.powf(alpha - 3.0) * si * si + ci.powf(alpha - 1.0))
        };
        let (c1, s1, c2, s2) = (p[0].cosh(), p[0].sinh(), p[1].cosh(), p[1].sinh());
        term(c1, s1, c2) + term(c2, s2, c1)
    })
}

pub fn default_domain() -> Domain {
    Domain::rectangle([-1.0, -1.0], [1.0, 1.0])
}

/// Builds the benchmark on `domain` with spacing `h`.
pub fn benchmark_spec(kind: Benchmark, alpha: f64, domain: &Domain, h: f64) -> Result<FunctionalSpec> {
    let g = Arc::new(build_grid(domain, h)?);
    let inactive = GridFunction::constant(&g, INACTIVE_OBSTACLE);
    match kind {
        Benchmark::Quadratic => {
            let phi = GridFunction::from_fn(&g, half_norm2)?;
            FunctionalSpec::new(alpha, GridFunction::constant(&g, 0.0), phi, inactive)
        }
        Benchmark::Manufactured => {
            let load = manufactured_load(alpha);
            let f = GridFunction::from_fn(&g, |p| load(p))?;
            let phi = GridFunction::from_fn(&g, cosh_sum)?;
            Ok(FunctionalSpec::new(alpha, f, phi, inactive)?.with_analytic_load(load))
        }
        Benchmark::Obstacle => {
            let phi = GridFunction::from_fn(&g, half_norm2)?;
            let psi = GridFunction::from_fn(&g, obstacle_bump)?;
            FunctionalSpec::new(alpha, GridFunction::constant(&g, 0.0), phi, psi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manufactured_load_matches_differences() {
        // U^{ij} w_{ij} by nested central differences of the closed forms
        for &alpha in &[0.0, 0.1, 0.25] {
            let f = manufactured_load(alpha);
            let w = |p: Point| (p[0].cosh() * p[1].cosh()).powf(alpha - 1.0);
            let e = 1e-3;
            for &p in &[[0.3, -0.2], [0.9, 0.7], [-0.5, 0.0]] {
                let w11 = (w([p[0] + e, p[1]]) + w([p[0] - e, p[1]]) - 2.0 * w(p)) / (e * e);
                let w22 = (w([p[0], p[1] + e]) + w([p[0], p[1] - e]) - 2.0 * w(p)) / (e * e);
                let lhs = p[1].cosh() * w11 + p[0].cosh() * w22;
                assert!((lhs - f(p)).abs() < 1e-5, "alpha {alpha} at {p:?}");
            }
        }
    }
}
