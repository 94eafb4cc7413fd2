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

//! Discrete obstacle maximization for Monge-Ampère type functionals on planar
//! convex domains, with the convex-analysis and regularity diagnostics used to
//! check computed maximizers.

// NaN-rejecting `!(x > 0.0)` guards are intentional; lattice loops index several arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod error;
pub mod expr;
pub mod geometry;
pub mod grid;
pub mod legendre;
pub mod rotation;
pub mod solver;
pub mod interp;
pub mod banded;
pub mod benchmarks;
pub mod config;
pub mod convexity;
pub mod diagnostics;
mod discrete;
pub mod functional;

pub use error::{Error, Result};
pub use grid::{build_grid, integrate, Domain, Grid2D, GridFunction};
