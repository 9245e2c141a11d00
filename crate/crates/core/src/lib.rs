//! Dehn-filled approximate Einstein metrics on solid tori.
//!
//! The crate builds the cohomogeneity-one metrics `V^{-1} dr^2 + V dθ^2 + r^2 g_T`
//! obtained by gluing a `T^{n-2}` black hole into a hyperbolic cusp, measures
//! their Einstein deficit in weighted norms, assembles the linearized gauged
//! Einstein operator on torus-invariant deformations and perturbs the glued
//! profiles to exact Einstein profiles by Newton iteration.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bump;
pub mod curvature;
pub mod error;
pub mod fd;
pub mod fit;
pub mod gluing;
pub mod lattice;
pub mod linearized;
pub mod norms;
pub mod profiles;
pub mod solver;
pub mod spline;

pub use error::{Error, Result};
