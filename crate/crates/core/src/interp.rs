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

//! Sampling grid functions between nodes.
//!
//! Catmull-Rom bicubic interpolation on the lattice. Stencil nodes missing from
//! the mask are filled by linear extrapolation along rows, then columns; if the
//! stencil still has holes the sampler falls back to bilinear weights on the
//! enclosing cell.

use crate::geometry::Point;
use crate::grid::GridFunction;

fn weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

fn dweights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    [
        0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
        0.5 * (9.0 * t2 - 10.0 * t),
        0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
        0.5 * (3.0 * t2 - 2.0 * t),
    ]
}

fn fill(line: &mut [Option<f64>; 4]) {
    if let (Some(a), Some(b)) = (line[1], line[2]) {
        line[0].get_or_insert(2.0 * a - b);
        line[3].get_or_insert(2.0 * b - a);
    }
}

/// Value and gradient of the bicubic interpolant at `p`, or `None` when `p`
/// is not covered by the mask.
pub fn sample_with_gradient(f: &GridFunction, p: Point) -> Option<(f64, [f64; 2])> {
    let g = f.grid();
    let (nx, ny) = g.dims();
    let (s, r) = g.lattice_coords(p);
    let slack = 1e-9;
    if s < -slack || r < -slack || s > (nx - 1) as f64 + slack || r > (ny - 1) as f64 + slack {
        return None;
    }
    let i0 = (s.floor() as i64).clamp(0, nx as i64 - 2);
    let j0 = (r.floor() as i64).clamp(0, ny as i64 - 2);
    let (tx, ty) = (s - i0 as f64, r - j0 as f64);
    let mut st = [[None; 4]; 4];
    for (b, row) in st.iter_mut().enumerate() {
        for (a, slot) in row.iter_mut().enumerate() {
            *slot = g.node(i0 - 1 + a as i64, j0 - 1 + b as i64).map(|k| f.value(k));
        }
        fill(row);
    }
    for a in 0..4 {
        let mut col = [st[0][a], st[1][a], st[2][a], st[3][a]];
        fill(&mut col);
        for b in 0..4 {
            st[b][a] = col[b];
        }
    }
    let h = g.h();
    if st.iter().all(|row| row.iter().all(Option::is_some)) {
        let (wx, wy, dx, dy) = (weights(tx), weights(ty), dweights(tx), dweights(ty));
        let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
        for b in 0..4 {
            for a in 0..4 {
                let z = st[b][a].unwrap();
                v += wx[a] * wy[b] * z;
                gx += dx[a] * wy[b] * z;
                gy += wx[a] * dy[b] * z;
            }
        }
        return Some((v, [gx / h, gy / h]));
    }
    let corners = [st[1][1], st[1][2], st[2][1], st[2][2]];
    if corners.iter().all(Option::is_some) {
        let [c00, c10, c01, c11] = corners.map(Option::unwrap);
        let v = c00 * (1.0 - tx) * (1.0 - ty) + c10 * tx * (1.0 - ty) + c01 * (1.0 - tx) * ty + c11 * tx * ty;
        let gx = ((c10 - c00) * (1.0 - ty) + (c11 - c01) * ty) / h;
        let gy = ((c01 - c00) * (1.0 - tx) + (c11 - c10) * tx) / h;
        return Some((v, [gx, gy]));
    }
    // linear on a triangle of three present corners
    let tri = [
        (corners[0], corners[1], corners[2], tx + ty <= 1.0, false),
        (corners[3], corners[2], corners[1], tx + ty >= 1.0, true),
    ];
    for &(a, b, c, inside, flipped) in &tri {
        if let (Some(a), Some(b), Some(c), true) = (a, b, c, inside) {
            let (u, w) = if flipped { (1.0 - tx, 1.0 - ty) } else { (tx, ty) };
            let v = a + (b - a) * u + (c - a) * w;
            let sgn = if flipped { -1.0 } else { 1.0 };
            return Some((v, [sgn * (b - a) / h, sgn * (c - a) / h]));
        }
    }
    let tri = [
        (corners[1], corners[0], corners[3], tx >= ty, 0),
        (corners[2], corners[3], corners[0], tx <= ty, 1),
    ];
    for &(a, b, c, inside, which) in &tri {
        if let (Some(a), Some(b), Some(c), true) = (a, b, c, inside) {
            // a is the right-angle corner at (1,0) or (0,1)
            let (gx, gy) = if which == 0 { (a - b, c - a) } else { (b - a, a - c) };
            let (ox, oy) = if which == 0 { (1.0, 0.0) } else { (0.0, 1.0) };
            let v = a + gx * (tx - ox) + gy * (ty - oy);
            return Some((v, [gx / h, gy / h]));
        }
    }
    let k = g.locate(p)?;
    let q = g.coord(k);
    if (q[0] - p[0]).abs() > 1e-9 * h || (q[1] - p[1]).abs() > 1e-9 * h {
        return None;
    }
    let slope = |di: i64, dj: i64| match (g.neighbor(k, di, dj), g.neighbor(k, -di, -dj)) {
        (Some(a), Some(b)) => (f.value(a) - f.value(b)) / (2.0 * h),
        (Some(a), None) => (f.value(a) - f.value(k)) / h,
        (None, Some(b)) => (f.value(k) - f.value(b)) / h,
        (None, None) => 0.0,
    };
    Some((f.value(k), [slope(1, 0), slope(0, 1)]))
}

pub fn sample(f: &GridFunction, p: Point) -> Option<f64> {
    sample_with_gradient(f, p).map(|(v, _)| v)
}
