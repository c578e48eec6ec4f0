//! Geometry-aware route-risk scoring for dynamic multi-agent execution graphs.
//!
//! A route through an execution graph is scored by coupling per-node temporal
//! failure history with one of two propagation models:
//!
//! - [`euclidean`]: discrete diffusion over the route subgraph, suited to dense
//!   cyclic regimes where alternative paths absorb spread.
//! - [`hyperbolic`]: a Poincaré-ball embedding with fitted curvature, suited to
//!   tree-like regimes where exposure grows exponentially with depth.
//!
//! A small learned [`gate`] reads nine structural features of the graph and route
//! and blends the two scores. [`cascade`] checks the branching-process threshold
//! `p > e^{-γ}` by simulation, and [`harness`] reproduces the scenario benchmark
//! (generators, attack protocols, comparators, margins) with [`stats`] on top.
//!
//! The crate is `no_std` and only needs `alloc`. IO, file formats, caching across
//! threads and the command line live in the `georoute` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cascade;
pub mod error;
pub mod euclidean;
pub mod gate;
pub mod graph;
pub mod harness;
pub mod hyperbolic;
pub mod math;
pub mod rng;
pub mod score;
pub mod stats;
pub mod temporal;

pub use error::{Error, Result};
pub use graph::{Edge, FailureCategory, FailureEvent, GraphSnapshot, NodeAttrs, NodeId, Route, RouteId};
pub use score::{RouteScore, ScoreTerm};
