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

//! Lattice discretization of a convex planar domain and scalar grid functions.
//!
//! Nodes are the points of the axis-aligned lattice `origin + h (i, j)` that
//! lie in the closed domain. A node is *interior* when all eight lattice
//! neighbours are in the mask, otherwise it is a *boundary* node. Node ids are
//! assigned row-major by `y` then `x`, which is also the CSV row order.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Point};

/// Number of sides of the polygon used to clip boundary cells of a disc.
const DISC_CLIP_SIDES: usize = 4096;

/// The eight lattice neighbour offsets, axes first.
pub const NEIGHBORS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)];

/// Stencil directions for second differences: both axes and both diagonals.
pub const DIRECTIONS: [(i64, i64); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Polygon { vertices: Vec<Point> },
    Disc { center: Point, radius: f64 },
}

impl Domain {
    pub fn rectangle(min: Point, max: Point) -> Self {
        Domain::Polygon { vertices: vec![min, [max[0], min[1]], max, [min[0], max[1]]] }
    }

    pub fn unit_square() -> Self {
        Self::rectangle([0.0, 0.0], [1.0, 1.0])
    }

    pub fn unit_disc() -> Self {
        Domain::Disc { center: [0.0, 0.0], radius: 1.0 }
    }

    /// Validates and normalizes the description (polygons become CCW hulls).
    pub fn normalized(&self) -> Result<Self> {
        match self {
            Domain::Disc { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0 && center.iter().all(|c| c.is_finite())) {
                    return Err(Error::DegenerateDomain(format!("disc radius {radius}")));
                }
                Ok(self.clone())
            }
            Domain::Polygon { vertices } => {
                let hull = geometry::convex_hull(vertices);
                let a = geometry::area(&hull);
                if hull.len() < 3 || !(a > 0.0) {
                    return Err(Error::DegenerateDomain("polygon has empty interior".into()));
                }
                let given = geometry::area(vertices);
                if (given - a).abs() > 1e-9 * a {
                    return Err(Error::DegenerateDomain("polygon is not convex".into()));
                }
                Ok(Domain::Polygon { vertices: hull })
            }
        }
    }

    pub fn bbox(&self) -> (Point, Point) {
        match self {
            Domain::Disc { center, radius } => {
                ([center[0] - radius, center[1] - radius], [center[0] + radius, center[1] + radius])
            }
            Domain::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn inner_distance(&self, p: Point) -> f64 {
        match self {
            Domain::Disc { center, radius } => radius - geometry::dist(*center, p),
            Domain::Polygon { vertices } => geometry::inner_distance(vertices, p),
        }
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.inner_distance(p) >= -tol
    }

    pub fn area(&self) -> f64 {
        match self {
            Domain::Disc { radius, .. } => std::f64::consts::PI * radius * radius,
            Domain::Polygon { vertices } => geometry::area(vertices),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            Domain::Disc { radius, .. } => 2.0 * std::f64::consts::PI * radius,
            Domain::Polygon { vertices } => geometry::perimeter(vertices),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Disc { radius, .. } => 2.0 * radius,
            Domain::Polygon { vertices } => geometry::diameter(vertices),
        }
    }

    fn clip_polygon(&self) -> Vec<Point> {
        match self {
            Domain::Disc { center, radius } => geometry::regular_polygon(*center, *radius, DISC_CLIP_SIDES),
            Domain::Polygon { vertices } => vertices.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Grid2D {
    h: f64,
    origin: Point,
    nx: usize,
    ny: usize,
    lattice: Vec<Option<usize>>,
    ij: Vec<(usize, usize)>,
    coords: Vec<Point>,
    interior: Vec<bool>,
    depth: Vec<u32>,
    weights: Vec<f64>,
    proxy: Vec<usize>,
    domain: Option<Domain>,
}

/// Builds the masked lattice for a convex domain with spacing `h`.
pub fn build_grid(domain: &Domain, h: f64) -> Result<Grid2D> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidSpec(format!("grid spacing must be positive, got {h}")));
    }
    let domain = domain.normalized()?;
    let (lo, hi) = domain.bbox();
    let width = (hi[0] - lo[0]).min(hi[1] - lo[1]);
    if width / h < 3.0 - 1e-9 {
        return Err(Error::GridTooCoarse(format!("only {:.2} cells across the domain", width / h)));
    }
    let nx = ((hi[0] - lo[0]) / h + 1e-9).floor() as usize + 1;
    let ny = ((hi[1] - lo[1]) / h + 1e-9).floor() as usize + 1;
    let tol = 1e-9 * h;
    let mut mask = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let p = [lo[0] + i as f64 * h, lo[1] + j as f64 * h];
            mask[j * nx + i] = domain.contains(p, tol);
        }
    }
    let clip = domain.clip_polygon();
    Grid2D::assemble(h, lo, nx, ny, &mask, None, Some(domain), Some(&clip))
}

impl Grid2D {
    fn assemble(
        h: f64,
        origin: Point,
        nx: usize,
        ny: usize,
        mask: &[bool],
        weights: Option<Vec<f64>>,
        domain: Option<Domain>,
        clip: Option<&[Point]>,
    ) -> Result<Self> {
        let mut lattice = vec![None; nx * ny];
        let mut ij = Vec::new();
        let mut coords = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                if mask[j * nx + i] {
                    lattice[j * nx + i] = Some(ij.len());
                    ij.push((i, j));
                    coords.push([origin[0] + i as f64 * h, origin[1] + j as f64 * h]);
                }
            }
        }
        let n = ij.len();
        if n == 0 {
            return Err(Error::DegenerateDomain("no lattice nodes inside the domain".into()));
        }
        let lookup = |i: i64, j: i64| -> Option<usize> {
            if i < 0 || j < 0 || i >= nx as i64 || j >= ny as i64 {
                None
            } else {
                lattice[j as usize * nx + i as usize]
            }
        };
        let interior: Vec<bool> = ij
            .iter()
            .map(|&(i, j)| NEIGHBORS.iter().all(|&(di, dj)| lookup(i as i64 + di, j as i64 + dj).is_some()))
            .collect();
        if !interior.iter().any(|&b| b) {
            return Err(Error::GridTooCoarse("grid has no interior node".into()));
        }
        // ring index from the boundary, 8-connected
        let mut depth = vec![u32::MAX; n];
        let mut frontier: Vec<usize> = (0..n).filter(|&k| !interior[k]).collect();
        for &k in &frontier {
            depth[k] = 0;
        }
        let mut level = 0;
        while !frontier.is_empty() {
            level += 1;
            let mut next = Vec::new();
            for &k in &frontier {
                let (i, j) = ij[k];
                for &(di, dj) in &NEIGHBORS {
                    if let Some(m) = lookup(i as i64 + di, j as i64 + dj) {
                        if depth[m] == u32::MAX {
                            depth[m] = level;
                            next.push(m);
                        }
                    }
                }
            }
            next.sort_unstable();
            frontier = next;
        }
        let weights = match weights {
            Some(w) => {
                if w.len() != n {
                    return Err(Error::GridMismatch(format!("{} weights for {} nodes", w.len(), n)));
                }
                w
            }
            None => {
                let clip = clip.expect("domain clip polygon");
                (0..n)
                    .map(|k| {
                        if interior[k] {
                            h * h
                        } else {
                            let c = coords[k];
                            let hh = 0.5 * h;
                            let cell = [
                                [c[0] - hh, c[1] - hh],
                                [c[0] + hh, c[1] - hh],
                                [c[0] + hh, c[1] + hh],
                                [c[0] - hh, c[1] + hh],
                            ];
                            geometry::area(&geometry::clip_convex(&cell, clip))
                        }
                    })
                    .collect()
            }
        };
        let proxy = (0..n)
            .map(|k| {
                if interior[k] {
                    return k;
                }
                let (i, j) = ij[k];
                for r in 1..(nx.max(ny) as i64) {
                    let mut best: Option<(i64, usize)> = None;
                    for dj in -r..=r {
                        for di in -r..=r {
                            if di.abs() != r && dj.abs() != r {
                                continue;
                            }
                            if let Some(m) = lookup(i as i64 + di, j as i64 + dj) {
                                if interior[m] {
                                    let d2 = di * di + dj * dj;
                                    if best.is_none_or(|(bd, bm)| d2 < bd || (d2 == bd && m < bm)) {
                                        best = Some((d2, m));
                                    }
                                }
                            }
                        }
                    }
                    if let Some((_, m)) = best {
                        return m;
                    }
                }
                unreachable!("grid has an interior node")
            })
            .collect();
        Ok(Grid2D { h, origin, nx, ny, lattice, ij, coords, interior, depth, weights, proxy, domain })
    }

    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn origin(&self) -> Point {
        self.origin
    }
    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }
    pub fn len(&self) -> usize {
        self.ij.len()
    }
    pub fn is_empty(&self) -> bool {
        self.ij.is_empty()
    }
    pub fn domain(&self) -> Option<&Domain> {
        self.domain.as_ref()
    }
    pub fn coord(&self, k: usize) -> Point {
        self.coords[k]
    }
    pub fn coords(&self) -> &[Point] {
        &self.coords
    }
    pub fn lattice_index(&self, k: usize) -> (usize, usize) {
        self.ij[k]
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }
    pub fn is_interior(&self, k: usize) -> bool {
        self.interior[k]
    }
    pub fn is_boundary(&self, k: usize) -> bool {
        !self.interior[k]
    }
    /// 0 on boundary nodes, 1 on interior nodes touching the boundary, and so on.
    pub fn depth(&self, k: usize) -> u32 {
        self.depth[k]
    }
    /// Interior node whose stencil quantities stand in for node `k`.
    pub fn proxy(&self, k: usize) -> usize {
        self.proxy[k]
    }

    pub fn node(&self, i: i64, j: i64) -> Option<usize> {
        if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
            None
        } else {
            self.lattice[j as usize * self.nx + i as usize]
        }
    }

    pub fn neighbor(&self, k: usize, di: i64, dj: i64) -> Option<usize> {
        let (i, j) = self.ij[k];
        self.node(i as i64 + di, j as i64 + dj)
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&k| self.interior[k])
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&k| !self.interior[k])
    }

    pub fn boundary_count(&self) -> usize {
        self.interior.iter().filter(|&&b| !b).count()
    }

    pub fn interior_count(&self) -> usize {
        self.len() - self.boundary_count()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Domain area when known, otherwise the quadrature area.
    pub fn area(&self) -> f64 {
        self.domain.as_ref().map_or_else(|| self.total_weight(), Domain::area)
    }

    pub fn perimeter(&self) -> f64 {
        self.domain.as_ref().map_or_else(
            || self.boundary_count() as f64 * self.h,
            Domain::perimeter,
        )
    }

    /// Distance to the domain boundary (to the nearest boundary node when the
    /// domain description is unavailable).
    pub fn boundary_distance(&self, p: Point) -> f64 {
        match &self.domain {
            Some(d) => d.inner_distance(p).max(0.0),
            None => self
                .boundary_nodes()
                .map(|b| geometry::dist(self.coords[b], p))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Nearest masked lattice node to `p`, if the nearest lattice point is masked.
    pub fn locate(&self, p: Point) -> Option<usize> {
        let i = ((p[0] - self.origin[0]) / self.h).round() as i64;
        let j = ((p[1] - self.origin[1]) / self.h).round() as i64;
        self.node(i, j)
    }

    /// Lattice coordinates of `p` (fractional).
    pub fn lattice_coords(&self, p: Point) -> (f64, f64) {
        ((p[0] - self.origin[0]) / self.h, (p[1] - self.origin[1]) / self.h)
    }

    /// `true` when every lattice row, column and diagonal meets the mask in a
    /// contiguous run.
    pub fn is_grid_convex(&self) -> bool {
        for &(di, dj) in &DIRECTIONS {
            // start points of each line: nodes whose predecessor is off-lattice
            for j in 0..self.ny as i64 {
                for i in 0..self.nx as i64 {
                    let (pi, pj) = (i - di, j - dj);
                    if pi >= 0 && pj >= 0 && pi < self.nx as i64 && pj < self.ny as i64 {
                        continue;
                    }
                    let mut runs = 0;
                    let mut inside = false;
                    let (mut a, mut b) = (i, j);
                    while a >= 0 && b >= 0 && a < self.nx as i64 && b < self.ny as i64 {
                        let m = self.node(a, b).is_some();
                        if m && !inside {
                            runs += 1;
                        }
                        inside = m;
                        a += di;
                        b += dj;
                    }
                    if runs > 1 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Same lattice and mask (weights are not compared).
    pub fn same_lattice(&self, other: &Grid2D) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.h - other.h).abs() <= 1e-12 * self.h
            && (self.origin[0] - other.origin[0]).abs() <= 1e-9 * self.h
            && (self.origin[1] - other.origin[1]).abs() <= 1e-9 * self.h
            && self.ij == other.ij
    }

    pub fn mask(&self) -> Vec<bool> {
        self.lattice.iter().map(Option::is_some).collect()
    }
}

/// One real value per node of a shared grid.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: Arc<Grid2D>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid2D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: &Arc<Grid2D>, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values = grid.coords().iter().map(|&p| f(p)).collect();
        Self::new(grid.clone(), values)
    }

    pub fn constant(grid: &Arc<Grid2D>, c: f64) -> Self {
        GridFunction { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    pub fn grid(&self) -> &Arc<Grid2D> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    fn check_same(&self, other: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_lattice(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch("functions live on different grids".into()))
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&x, &y)| f(x, y)).collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
    pub fn range(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 40);
        s.push_str("x,y,value\n");
        for (p, v) in self.grid.coords().iter().zip(&self.values) {
            s.push_str(&format!("{},{},{}\n", p[0], p[1], v));
        }
        s
    }

    /// Reads a CSV produced by [`GridFunction::to_csv`] onto `grid`.
    pub fn from_csv(grid: &Arc<Grid2D>, text: &str) -> Result<Self> {
        let rows = parse_csv_rows(text)?;
        if rows.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} rows for {} nodes", rows.len(), grid.len())));
        }
        let tol = 1e-7 * grid.h();
        let mut values = Vec::with_capacity(rows.len());
        for (k, r) in rows.iter().enumerate() {
            let p = grid.coord(k);
            if (r[0] - p[0]).abs() > tol || (r[1] - p[1]).abs() > tol {
                return Err(Error::GridMismatch(format!("row {k} at ({}, {}) but node at ({}, {})", r[0], r[1], p[0], p[1])));
            }
            values.push(r[2]);
        }
        Self::new(grid.clone(), values)
    }

    pub fn to_document(&self) -> GridDocument {
        let g = &self.grid;
        GridDocument {
            h: g.h,
            origin: g.origin,
            nx: g.nx,
            ny: g.ny,
            mask: g.mask().into_iter().map(u8::from).collect(),
            weights: g.weights.clone(),
            values: self.values.clone(),
            domain: g.domain.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("grid document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GridDocument = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        doc.into_function()
    }
}

/// Splits `x,y,value` CSV text into numeric rows. The header line is optional.
pub fn parse_csv_rows(text: &str) -> Result<Vec<[f64; 3]>> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if ln == 0 && line.replace(' ', "").eq_ignore_ascii_case("x,y,value") {
            continue;
        }
        let mut fields = line.split(',');
        let mut row = [0.0; 3];
        for slot in row.iter_mut() {
            let f = fields
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: expected 3 fields", ln + 1)))?;
            *slot = f
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))?;
            if !slot.is_finite() {
                return Err(Error::Parse(format!("line {}: non-finite value", ln + 1)));
            }
        }
        if fields.next().is_some() {
            return Err(Error::Parse(format!("line {}: expected 3 fields", ln + 1)));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// JSON form of a grid function: lattice, mask, weights and values.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GridDocument {
    pub h: f64,
    pub origin: Point,
    pub nx: usize,
    pub ny: usize,
    /// Row-major lattice mask, 1 for nodes in the domain.
    pub mask: Vec<u8>,
    pub weights: Vec<f64>,
    /// One value per masked node, in node order.
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
}

/// Upper bound on lattice size accepted from documents.
const MAX_DOCUMENT_NODES: usize = 1 << 22;

impl GridDocument {
    pub fn into_grid(&self) -> Result<Grid2D> {
        if !(self.h.is_finite() && self.h > 0.0) || !self.origin.iter().all(|c| c.is_finite()) {
            return Err(Error::Parse("invalid spacing or origin".into()));
        }
        let cells = self.nx.checked_mul(self.ny).filter(|&c| c <= MAX_DOCUMENT_NODES);
        let cells = cells.ok_or_else(|| Error::Parse("lattice too large".into()))?;
        if self.mask.len() != cells {
            return Err(Error::Parse(format!("mask has {} entries for a {}x{} lattice", self.mask.len(), self.nx, self.ny)));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Parse("weights must be finite and nonnegative".into()));
        }
        let mask: Vec<bool> = self.mask.iter().map(|&m| m != 0).collect();
        let domain = match &self.domain {
            Some(d) => Some(d.normalized()?),
            None => None,
        };
        Grid2D::assemble(self.h, self.origin, self.nx, self.ny, &mask, Some(self.weights.clone()), domain, None)
    }

    pub fn into_function(self) -> Result<GridFunction> {
        let grid = Arc::new(self.into_grid()?);
        GridFunction::new(grid, self.values)
    }
}

/// Quadrature `sum_k g(k) w(k)` in node order.
pub fn integrate(g: &GridFunction) -> f64 {
    g.values.iter().zip(g.grid.weights()).map(|(v, w)| v * w).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_quarter_spacing_counts() {
        let g = build_grid(&Domain::unit_square(), 0.25).unwrap();
        assert_eq!(g.dims(), (5, 5));
        assert_eq!(g.len(), 25);
        assert_eq!(g.boundary_count(), 16);
        assert_eq!(g.interior_count(), 9);
        assert!((g.total_weight() - 1.0).abs() < 1e-14);
        assert!(g.is_grid_convex());
    }

    #[test]
    fn unit_disc_half_spacing_area() {
        let g = build_grid(&Domain::unit_disc(), 0.5).unwrap();
        assert_eq!(g.len(), 13);
        assert_eq!(g.interior_count(), 1);
        let pi = std::f64::consts::PI;
        assert!((g.total_weight() - pi).abs() <= 2.0 * 0.5 * 2.0 * pi);
        assert!(g.is_grid_convex());
    }

    #[test]
    fn spacing_equal_to_side_is_too_coarse() {
        assert!(matches!(build_grid(&Domain::unit_square(), 1.0), Err(Error::GridTooCoarse(_))));
        assert!(matches!(build_grid(&Domain::unit_square(), 0.0), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn degenerate_domains_rejected() {
        let flat = Domain::Polygon { vertices: vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]] };
        assert!(matches!(build_grid(&flat, 0.1), Err(Error::DegenerateDomain(_))));
        let disc = Domain::Disc { center: [0.0, 0.0], radius: 0.0 };
        assert!(matches!(build_grid(&disc, 0.1), Err(Error::DegenerateDomain(_))));
        let dart = Domain::Polygon { vertices: vec![[0.0, 0.0], [2.0, 1.0], [0.0, 2.0], [1.0, 1.0]] };
        assert!(matches!(build_grid(&dart, 0.1), Err(Error::DegenerateDomain(_))));
    }

    #[test]
    fn integrate_constants_and_linear() {
        let g = Arc::new(build_grid(&Domain::unit_square(), 0.25).unwrap());
        assert!((integrate(&GridFunction::constant(&g, 1.0)) - 1.0).abs() <= 0.02);
        assert_eq!(integrate(&GridFunction::constant(&g, 0.0)), 0.0);
        let fine = Arc::new(build_grid(&Domain::unit_square(), 1.0 / 64.0).unwrap());
        let x1 = GridFunction::from_fn(&fine, |p| p[0]).unwrap();
        assert!((integrate(&x1) - 0.5).abs() <= 1e-3);
    }

    #[test]
    fn disc_weights_within_perimeter_bound() {
        for &h in &[0.1, 0.05, 1.0 / 64.0] {
            let g = build_grid(&Domain::unit_disc(), h).unwrap();
            let pi = std::f64::consts::PI;
            assert!((g.total_weight() - pi).abs() <= 2.0 * h * 2.0 * pi, "h={h}");
            assert!(g.is_grid_convex());
            for k in g.interior_nodes() {
                assert!(g.neighbor(k, 1, 1).is_some());
            }
        }
    }

    #[test]
    fn proxies_point_to_interior_nodes() {
        let g = build_grid(&Domain::unit_disc(), 0.1).unwrap();
        for k in 0..g.len() {
            assert!(g.is_interior(g.proxy(k)));
            assert_eq!(g.depth(k) == 0, g.is_boundary(k));
        }
    }

    #[test]
    fn csv_and_json_round_trip() {
        let g = Arc::new(build_grid(&Domain::unit_disc(), 0.2).unwrap());
        let f = GridFunction::from_fn(&g, |p| (p[0] * 3.1).sin() + p[1] / 7.0).unwrap();
        let back = GridFunction::from_csv(&g, &f.to_csv()).unwrap();
        assert_eq!(back.values(), f.values());
        let back = GridFunction::from_json(&f.to_json()).unwrap();
        assert_eq!(back.values(), f.values());
        assert!(back.grid().same_lattice(&g));
        assert_eq!(back.grid().weights(), g.weights());
    }

    #[test]
    fn csv_rejects_wrong_coordinates() {
        let g = Arc::new(build_grid(&Domain::unit_square(), 0.25).unwrap());
        let other = Arc::new(build_grid(&Domain::rectangle([0.0, 0.0], [2.0, 2.0]), 0.5).unwrap());
        let f = GridFunction::constant(&other, 1.0);
        assert!(matches!(GridFunction::from_csv(&g, &f.to_csv()), Err(Error::GridMismatch(_))));
        assert!(matches!(parse_csv_rows("x,y,value\n1,2\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_csv_rows("1,2,nan\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn non_finite_values_rejected() {
        let g = Arc::new(build_grid(&Domain::unit_square(), 0.25).unwrap());
        let mut v = vec![0.0; g.len()];
        v[3] = f64::NAN;
        assert!(matches!(GridFunction::new(g, v), Err(Error::NonFinite(3))));
    }
}
