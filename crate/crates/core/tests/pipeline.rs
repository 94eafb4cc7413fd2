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

use maobs::benchmarks::{benchmark_spec, cosh_sum, default_domain, Benchmark};
use maobs::functional::{eval_J, PenaltyConfig};
use maobs::grid::GridFunction;
use maobs::rotation::{rotate_graph, sublevel_slice, AnalyticGraph, Window};
use maobs::solver::{el_residual, maximize, project_admissible, SolveConfig};
use maobs::Error;

#[test]
fn quadratic_datum_is_its_own_maximizer() {
    for &alpha in &[0.0, 0.1, 0.25] {
        let spec = benchmark_spec(Benchmark::Quadratic, alpha, &default_domain(), 1.0 / 16.0).unwrap();
        let rep = maximize(&spec, &PenaltyConfig::default_for(spec.grid()), &SolveConfig::default()).unwrap();
        assert!(rep.u.function().max_abs_diff(&spec.phi) < 1e-6, "alpha {alpha}");
        assert_eq!(rep.contact_count(), 0);
    }
}

#[test]
fn maximizer_beats_admissible_competitors() {
    let spec = benchmark_spec(Benchmark::Manufactured, 0.1, &default_domain(), 1.0 / 16.0).unwrap();
    let rep = maximize(&spec, &PenaltyConfig::default_for(spec.grid()), &SolveConfig::default()).unwrap();
    let g = spec.grid();
    for amp in [-0.2, -0.05, 0.05, 0.2] {
        let raw = GridFunction::from_fn(g, |x| {
            cosh_sum(x) + amp * (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]) * (1.0 + 0.5 * x[0])
        })
        .unwrap();
        let v = project_admissible(&raw, &spec).unwrap();
        assert!(eval_J(&v, &spec).unwrap() <= rep.j_value + 1e-9, "amplitude {amp}");
    }
}

#[test]
fn obstacle_maximizer_respects_constraints() {
    let spec = benchmark_spec(Benchmark::Obstacle, 0.25, &default_domain(), 1.0 / 16.0).unwrap();
    let rep = maximize(&spec, &PenaltyConfig::default_for(spec.grid()), &SolveConfig::default()).unwrap();
    let g = spec.grid();
    for k in 0..g.len() {
        assert!(rep.u.function().value(k) >= spec.psi.value(k) - 1e-12);
        if g.is_boundary(k) {
            assert_eq!(rep.u.function().value(k), spec.phi.value(k));
        }
    }
    // contact sits around the origin, not on the collar
    assert!(rep.contact[g.locate([0.0, 0.0]).unwrap()]);
    assert!(rep.contact.iter().enumerate().all(|(k, &c)| !c || g.depth(k) >= 2));
}

#[test]
fn manufactured_solution_has_small_residual() {
    for &alpha in &[0.0, 0.25] {
        let mut prev = f64::INFINITY;
        for h in [1.0 / 16.0, 1.0 / 32.0] {
            let spec = benchmark_spec(Benchmark::Manufactured, alpha, &default_domain(), h).unwrap();
            let exact = GridFunction::from_fn(spec.grid(), cosh_sum).unwrap();
            let r = el_residual(&exact, &spec).unwrap().max_abs();
            assert!(r < prev / 2.0, "alpha {alpha}, h {h}: {r} vs {prev}");
            prev = r;
        }
    }
}

#[test]
fn penalty_schedule_is_validated() {
    let g = benchmark_spec(Benchmark::Obstacle, 0.0, &default_domain(), 0.25).unwrap().grid().clone();
    assert!(matches!(PenaltyConfig::new(&g, vec![1.0, 0.01], 3.0, 0), Err(Error::InvalidSpec(_))));
    assert!(matches!(PenaltyConfig::new(&g, vec![], 3.0, 0), Err(Error::InvalidSpec(_))));
    assert!(PenaltyConfig::new(&g, vec![1.0, 0.5, 0.25], 3.0, 0).is_ok());
}

#[test]
fn paraboloid_slices_are_nonempty() {
    let para = AnalyticGraph { value: |x: [f64; 2]| 0.5 * (x[0] * x[0] + x[1] * x[1]), gradient: |x: [f64; 2]| x };
    let rg = rotate_graph(&para, Window::new([-2.0, -1.0], [-0.5, 0.5]).unwrap(), 1.0 / 16.0).unwrap();
    let sl = sublevel_slice(&rg, 0.25, 0.25).unwrap();
    assert!(sl.count > 4 && sl.det_gap <= 1e-8);
}
