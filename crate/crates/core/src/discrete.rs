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

//! The discrete penalized objective shared by the solver and the
//! coordinate-ascent reference.
//!
//! Unknowns are the nodes whose whole 3x3 neighbourhood is interior; boundary
//! nodes and the first interior ring keep the boundary datum. The smooth part
//! is `sum_interior h^2 F(A_k) - c sum_k f_k u_k w_k`, with `A_k` the centered
//! Hessian and `F = det^alpha` (or `log det`), minus the obstacle barrier
//! `eps sum a_k w_k (u_k - psi_k)^{-2}` over the unknowns.

use std::sync::Arc;

use rayon::prelude::*;

use crate::banded::BandMatrix;
use crate::functional::{FunctionalSpec, PenaltyConfig};
use crate::grid::Grid2D;

pub(crate) const STENCIL: [(i64, i64); 9] = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)];
const CA: [f64; 9] = [-2.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
const CB: [f64; 9] = [-2.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
const CC: [f64; 9] = [0.0, 0.0, 0.0, 0.0, 0.0, 0.25, 0.25, -0.25, -0.25];

const PINNED: usize = usize::MAX;

/// `F(A)` for `A = [[a, c], [c, b]]`; `None` outside the positive-definite cone.
#[inline]
pub(crate) fn f_value(alpha: f64, a: f64, b: f64, c: f64) -> Option<f64> {
    let d = a * b - c * c;
    if !(a > 0.0 && d > 0.0) {
        return None;
    }
    Some(if alpha > 0.0 { d.powf(alpha) } else { d.ln() })
}

/// Gradient and Hessian of `F` with respect to `(a, b, c)`.
#[inline]
pub(crate) fn f_derivs(alpha: f64, a: f64, b: f64, c: f64) -> ([f64; 3], [[f64; 3]; 3]) {
    let d = a * b - c * c;
    let gd = [b, a, -2.0 * c];
    let d2 = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -2.0]];
    let (s1, s2) = if alpha > 0.0 {
        (alpha * d.powf(alpha - 1.0), alpha * (alpha - 1.0) * d.powf(alpha - 2.0))
    } else {
        (1.0 / d, -1.0 / (d * d))
    };
    let g = [s1 * gd[0], s1 * gd[1], s1 * gd[2]];
    let mut hm = [[0.0; 3]; 3];
    for r in 0..3 {
        for q in 0..3 {
            hm[r][q] = s1 * d2[r][q] + s2 * gd[r] * gd[q];
        }
    }
    (g, hm)
}

#[derive(Clone, Debug)]
pub(crate) struct Discrete {
    pub grid: Arc<Grid2D>,
    pub alpha: f64,
    h2: f64,
    inv_h2: f64,
    /// Stencil node ids per interior node, in [`STENCIL`] order.
    stencils: Vec<[usize; 9]>,
    pub free: Vec<usize>,
    slot: Vec<usize>,
    fw: Vec<f64>,
    pub psi: Vec<f64>,
    aw: Vec<f64>,
    /// Collar nodes released from the datum and held by `H_j(u - phi)`.
    attached: Option<(u32, Vec<usize>)>,
    pub phi: Vec<f64>,
    /// For every unknown: (interior index, stencil position) pairs touching it.
    touches: Vec<Vec<(usize, usize)>>,
    bw: usize,
}

impl Discrete {
    pub fn new(spec: &FunctionalSpec, pen: &PenaltyConfig) -> Self {
        let grid = spec.grid().clone();
        let h = grid.h();
        let interior: Vec<usize> = grid.interior_nodes().collect();
        let stencils: Vec<[usize; 9]> = interior
            .iter()
            .map(|&k| {
                let mut s = [0; 9];
                for (t, &(di, dj)) in STENCIL.iter().enumerate() {
                    s[t] = grid.neighbor(k, di, dj).expect("interior stencil");
                }
                s
            })
            .collect();
        let min_depth = if pen.attached_boundary { 1 } else { 2 };
        let free: Vec<usize> = (0..grid.len()).filter(|&k| grid.depth(k) >= min_depth).collect();
        let mut slot = vec![PINNED; grid.len()];
        for (i, &k) in free.iter().enumerate() {
            slot[k] = i;
        }
        let coef = spec.load_coefficient();
        let fw = (0..grid.len()).map(|k| coef * spec.f.value(k) * grid.weight(k)).collect();
        let aw = (0..grid.len()).map(|k| if slot[k] == PINNED { 0.0 } else { pen.a.value(k) * grid.weight(k) }).collect();
        let attached = if pen.attached_boundary {
            Some((pen.barrier_j, (0..grid.len()).filter(|&k| grid.depth(k) == 1).collect()))
        } else {
            None
        };
        let mut touches = vec![Vec::new(); free.len()];
        for (i, s) in stencils.iter().enumerate() {
            for (t, &k) in s.iter().enumerate() {
                if slot[k] != PINNED {
                    touches[slot[k]].push((i, t));
                }
            }
        }
        let mut bw = 0;
        for s in &stencils {
            let idx: Vec<usize> = s.iter().filter(|&&k| slot[k] != PINNED).map(|&k| slot[k]).collect();
            for &p in &idx {
                for &q in &idx {
                    bw = bw.max(p.abs_diff(q));
                }
            }
        }
        Discrete {
            grid,
            alpha: spec.alpha,
            h2: h * h,
            inv_h2: 1.0 / (h * h),
            stencils,
            free,
            slot,
            fw,
            psi: spec.psi.values().to_vec(),
            aw,
            attached,
            phi: spec.phi.values().to_vec(),
            touches,
            bw,
        }
    }

    pub fn is_free(&self, k: usize) -> bool {
        self.slot[k] != PINNED
    }

    #[inline]
    fn abc(&self, u: &[f64], i: usize) -> (f64, f64, f64) {
        let s = &self.stencils[i];
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for t in 0..9 {
            let v = u[s[t]];
            a += CA[t] * v;
            b += CB[t] * v;
            c += CC[t] * v;
        }
        (a * self.inv_h2, b * self.inv_h2, c * self.inv_h2)
    }

    /// Penalized objective; `None` outside the domain of definition.
    pub fn objective(&self, u: &[f64], eps: f64) -> Option<f64> {
        let terms: Vec<Option<f64>> = (0..self.stencils.len())
            .into_par_iter()
            .map(|i| {
                let (a, b, c) = self.abc(u, i);
                f_value(self.alpha, a, b, c)
            })
            .collect();
        let mut s = 0.0;
        for t in terms {
            s += self.h2 * t?;
        }
        for (k, &v) in u.iter().enumerate() {
            s -= self.fw[k] * v;
        }
        for &k in &self.free {
            let gap = u[k] - self.psi[k];
            if eps > 0.0 {
                if !(gap > 0.0) {
                    return None;
                }
                s -= eps * self.aw[k] / (gap * gap);
            } else if gap < 0.0 {
                return None;
            }
        }
        if let Some((j, nodes)) = &self.attached {
            for &k in nodes {
                let h = crate::functional::eval_barrier_H(u[k] - self.phi[k], *j).ok()?;
                s -= self.grid.weight(k) * h;
            }
        }
        Some(s)
    }

    fn cell_derivs(&self, u: &[f64]) -> Vec<([f64; 3], [[f64; 3]; 3])> {
        (0..self.stencils.len())
            .into_par_iter()
            .map(|i| {
                let (a, b, c) = self.abc(u, i);
                f_derivs(self.alpha, a, b, c)
            })
            .collect()
    }

    fn barrier_derivs(&self, k: usize, u: &[f64], eps: f64) -> (f64, f64) {
        let mut g = -self.fw[k];
        let mut m = 0.0;
        if eps > 0.0 {
            let gap = u[k] - self.psi[k];
            g += 2.0 * eps * self.aw[k] / gap.powi(3);
            m += 6.0 * eps * self.aw[k] / gap.powi(4);
        }
        if let Some((j, _)) = &self.attached {
            if self.grid.depth(k) == 1 {
                let q = 4f64.powi(*j as i32);
                let s = q * (u[k] - self.phi[k]);
                let r = 1.0 - s * s;
                let w = self.grid.weight(k);
                g -= w * q * 8.0 * s / r.powi(5);
                m += w * q * q * (8.0 / r.powi(5) + 80.0 * s * s / r.powi(6));
            }
        }
        (g, m)
    }

    /// Gradient over the unknowns and the positive-definite Newton matrix
    /// (negated Hessian of the objective).
    pub fn gradient_and_matrix(&self, u: &[f64], eps: f64, want_matrix: bool) -> (Vec<f64>, Option<BandMatrix>) {
        let cells = self.cell_derivs(u);
        let m = self.free.len();
        let mut g = vec![0.0; m];
        let mut mat = want_matrix.then(|| BandMatrix::zeros(m, self.bw));
        let coef = |t: usize| [CA[t] * self.inv_h2, CB[t] * self.inv_h2, CC[t] * self.inv_h2];
        for (i, s) in self.stencils.iter().enumerate() {
            let (gr, hm) = &cells[i];
            for t in 0..9 {
                let p = self.slot[s[t]];
                if p == PINNED {
                    continue;
                }
                let ct = coef(t);
                g[p] += self.h2 * (gr[0] * ct[0] + gr[1] * ct[1] + gr[2] * ct[2]);
                if let Some(mat) = mat.as_mut() {
                    let hc = [
                        hm[0][0] * ct[0] + hm[0][1] * ct[1] + hm[0][2] * ct[2],
                        hm[1][0] * ct[0] + hm[1][1] * ct[1] + hm[1][2] * ct[2],
                        hm[2][0] * ct[0] + hm[2][1] * ct[1] + hm[2][2] * ct[2],
                    ];
                    for r in 0..=t {
                        let q = self.slot[s[r]];
                        if q == PINNED {
                            continue;
                        }
                        let cr = coef(r);
                        let v = -self.h2 * (cr[0] * hc[0] + cr[1] * hc[1] + cr[2] * hc[2]);
                        if p == q && r != t {
                            mat.add(p, p, 2.0 * v);
                        } else {
                            mat.add(p, q, v);
                        }
                    }
                }
            }
        }
        for (p, &k) in self.free.iter().enumerate() {
            let (gb, mb) = self.barrier_derivs(k, u, eps);
            g[p] += gb;
            if let Some(mat) = mat.as_mut() {
                mat.add(p, p, mb);
            }
        }
        (g, mat)
    }

    /// The part of the `eps = 0` objective that depends on unknown `p`, with
    /// first and second derivatives, after moving it by `t`.
    pub fn local(&self, u: &[f64], p: usize, t: f64) -> Option<(f64, f64, f64)> {
        let k = self.free[p];
        let (mut v, mut d1, mut d2) = (-self.fw[k] * (u[k] + t), -self.fw[k], 0.0);
        for &(i, pos) in &self.touches[p] {
            let (a, b, c) = self.abc(u, i);
            let ct = [CA[pos] * self.inv_h2, CB[pos] * self.inv_h2, CC[pos] * self.inv_h2];
            let (a, b, c) = (a + t * ct[0], b + t * ct[1], c + t * ct[2]);
            v += self.h2 * f_value(self.alpha, a, b, c)?;
            let (gr, hm) = f_derivs(self.alpha, a, b, c);
            d1 += self.h2 * (gr[0] * ct[0] + gr[1] * ct[1] + gr[2] * ct[2]);
            let mut q = 0.0;
            for r in 0..3 {
                for s in 0..3 {
                    q += ct[r] * hm[r][s] * ct[s];
                }
            }
            d2 += self.h2 * q;
        }
        Some((v, d1, d2))
    }

    /// Writes unknown values back into a full node vector.
    pub fn scatter(&self, u: &mut [f64], x: &[f64]) {
        for (p, &k) in self.free.iter().enumerate() {
            u[k] = x[p];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Domain, GridFunction};

    fn setup(alpha: f64, eps_psi: f64) -> (Discrete, Vec<f64>) {
        let g = Arc::new(build_grid(&Domain::rectangle([-1.0, -1.0], [1.0, 1.0]), 0.25).unwrap());
        let phi = GridFunction::from_fn(&g, |p| 0.5 * (p[0] * p[0] + p[1] * p[1]) + 0.1 * p[0].exp()).unwrap();
        let psi = GridFunction::constant(&g, eps_psi);
        let f = GridFunction::from_fn(&g, |p| 0.3 + p[1]).unwrap();
        let spec = FunctionalSpec::new(alpha, f, phi.clone(), psi).unwrap();
        let pen = PenaltyConfig::default_for(&g);
        let mut u = phi.values().to_vec();
        for (k, v) in u.iter_mut().enumerate() {
            let p = g.coord(k);
            *v += 0.01 * (3.0 * p[0]).sin() * (2.0 * p[1]).cos();
        }
        (Discrete::new(&spec, &pen), u)
    }

    #[test]
    fn gradient_matches_differences() {
        for &alpha in &[0.0, 0.1, 0.25] {
            let (d, u) = setup(alpha, -0.5);
            let eps = 0.05;
            let (g, m) = d.gradient_and_matrix(&u, eps, true);
            let m = m.unwrap();
            for p in [0, 3, d.free.len() - 1] {
                let k = d.free[p];
                let step = 1e-6;
                let mut up = u.clone();
                up[k] += step;
                let mut dn = u.clone();
                dn[k] -= step;
                let fd = (d.objective(&up, eps).unwrap() - d.objective(&dn, eps).unwrap()) / (2.0 * step);
                assert!((fd - g[p]).abs() < 1e-6 * (1.0 + g[p].abs()), "alpha {alpha}: {fd} vs {}", g[p]);
                let (gp, _) = d.gradient_and_matrix(&up, eps, false);
                let (gm, _) = d.gradient_and_matrix(&dn, eps, false);
                for q in 0..d.free.len() {
                    let fd2 = -(gp[q] - gm[q]) / (2.0 * step);
                    assert!((fd2 - m.get(q, p)).abs() < 1e-5 * (1.0 + fd2.abs()));
                }
            }
        }
    }

    #[test]
    fn local_matches_objective() {
        let (d, u) = setup(0.25, -0.5);
        let p = 4;
        let (v0, d1, _) = d.local(&u, p, 0.0).unwrap();
        let (v1, _, _) = d.local(&u, p, 1e-3).unwrap();
        let mut up = u.clone();
        up[d.free[p]] += 1e-3;
        let full = d.objective(&up, 0.0).unwrap() - d.objective(&u, 0.0).unwrap();
        assert!(((v1 - v0) - full).abs() < 1e-12);
        let (g, _) = d.gradient_and_matrix(&u, 0.0, false);
        assert!((d1 - g[p]).abs() < 1e-12);
    }
}
