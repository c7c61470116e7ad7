//! Weak Galerkin finite elements for the convection-diffusion-reaction
//! equation
//!
//! ```text
//! -rho laplace(u) + div(b u) + c u = f
//! ```
//!
//! on general polygonal meshes, including nonconvex elements. Unknowns are
//! doublets {u_0, u_b}: discontinuous P_k inside each element and P_q on
//! each edge. The discrete weak gradient and weak divergence are computed
//! in [P_r]^2 / P_r per element, convection is stabilized by an upwind
//! jump penalty on outflow edges, and the global system is solved by
//! sparse LU (optionally after static condensation of the interior
//! unknowns).
//!
//! Per-element work (operator construction, assembly, norm evaluation) is
//! data-parallel via rayon when the `parallel` feature is enabled (the
//! default); results are bitwise identical either way.

pub mod basis;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod norms;
pub mod problem;
pub mod quadrature;
pub mod sparse;
pub mod space;
pub mod study;
pub mod system;
pub mod util;
pub mod weak_ops;

pub use error::{Error, Result};
