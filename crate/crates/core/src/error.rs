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

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("node {0} is a boundary node")]
    BoundaryNode(usize),
    #[error("function is not wide-stencil convex (violation {violation:.3e} exceeds {tolerance:.3e})")]
    NotConvex { violation: f64, tolerance: f64 },
    #[error("determinant below {floor:e} on {fraction:.2}% of interior nodes; log-functional undefined")]
    LogOfDegenerateHessian { floor: f64, fraction: f64 },
    #[error("contact with obstacle at interior node {0}")]
    ContactWithObstacle(usize),
    #[error("barrier argument |4^j t| = {0} is outside (-1, 1)")]
    BarrierDomain(f64),
    #[error("boundary values differ at node {0}")]
    BoundaryMismatch(usize),
    #[error("no strictly convex region: {0}")]
    NoStrictRegion(String),
    #[error("load evaluated outside its domain at {0:?}")]
    FOutOfDomain([f64; 2]),
    #[error("dual domain is degenerate (slope hull area {0:e})")]
    DegenerateDual(f64),
    #[error("rotated graph is not a function: {0}")]
    NotGraphAfterRotation(String),
    #[error("slope |v_1| below floor on {0:.2}% of nodes")]
    VanishingSlope(f64),
    #[error("sub-level slice is empty or too small ({0} nodes)")]
    EmptySlice(usize),
    #[error("infeasible constraints: {0}")]
    InfeasibleConstraints(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("set E is not compactly inside the domain (node {0})")]
    EOutsideDomain(usize),
    #[error("no nodes at distance >= {0} from the boundary")]
    EmptyInterior(f64),
    #[error("only {0} dyadic radii fit inside the domain")]
    InsufficientRadii(usize),
    #[error("no contact-set boundary near the requested point")]
    NoContactBoundary,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid input: {0}")]
    InvalidSpec(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
