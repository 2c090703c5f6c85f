//! Light `(1 + eps)`-stretch spanners for point sets of low doubling dimension.
//!
//! The pipeline builds a net hierarchy, decomposes the point set into pieces
//! with sparse spanning trees, builds path-based light spanners on each piece
//! and joins them with a short-edge layer. The [`audit`] module holds the
//! exact oracles used to check every guarantee.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod audit;
pub mod base;
pub mod config;
pub mod decompose;
pub mod error;
pub mod generate;
pub mod graph;
pub mod hierarchy;
pub mod light;
pub mod metric;
pub mod path;
pub mod report;
pub mod sparse;
pub mod tree;

pub use error::{Error, Result};
pub use graph::{Provenance, SpannerGraph, Stage};
pub use hierarchy::{NeighborLists, NetHierarchy};
pub use metric::{MetricSpace, PointId};
