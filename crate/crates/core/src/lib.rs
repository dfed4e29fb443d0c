//! Delaunay-weighted two-sample testing for high-dimensional data that lie on
//! an unknown low-dimensional manifold.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`manifold::embed`] estimates geodesic distances on a connected
//!    proximity graph and maps the pooled sample into `R^d` with classical MDS.
//! 2. [`delaunay::weight_matrix`] lifts the embedding onto a sphere by inverse
//!    stereographic projection, locates for each point the Delaunay simplex of
//!    the remaining points that supports its convex-hull projection, and turns
//!    the simplex into a row of barycentric weights.
//! 3. [`dwtest::statistic`] sums the weights between same-label pairs.
//! 4. [`dwtest::permutation_test`] calibrates the statistic by relabeling;
//!    [`dwtest::null_moments`] gives its exact conditional mean and variance.
//!
//! [`baselines`] provides k-NN, energy-distance, and Gaussian-kernel MMD tests
//! that share the same permutation engine, and [`benchmark`] runs the
//! simulation designs end to end.

pub mod baselines;
pub mod benchmark;
pub mod dataset;
pub mod delaunay;
pub mod dwtest;
mod error;
pub mod linalg;
pub mod manifold;
pub mod permutation;
pub mod report;
pub mod rng;

pub use error::{Error, ErrorClass, Result};
