#![allow(clippy::needless_range_loop)] // index loops read better in the numerics here

//! Isometric multi-manifold embedding.
//!
//! Data spread over several clusters or manifolds breaks classical Isomap:
//! the neighborhood graph disconnects and no geodesics exist across the
//! gaps. This crate implements the family of algorithms that handle such
//! data while keeping every manifold's internal geometry intact:
//!
//! - [`isomap::isomap`] — classical Isomap (errors on disconnected data);
//! - [`isomap::kcc_isomap`] — Isomap over a graph completed with the k
//!   shortest vertex-disjoint inter-component edges;
//! - [`misomap::m_isomap`] — per-manifold Isomap composed through a jointly
//!   embedded skeleton and per-manifold rigid transforms;
//! - [`dcisomap::dc_isomap`] — decomposition-composition Isomap, original
//!   and revised (fictitious-cluster) variants;
//! - [`linalg::pca_embed`] — the PCA baseline.
//!
//! [`synth`] provides deterministic multi-strip Swiss-roll generators and
//! CSV I/O; [`metrics`] the evaluation side (Procrustes residual, geodesic
//! preservation, residual variance).

pub mod dcisomap;
pub mod error;
pub mod graph;
pub mod isomap;
pub mod linalg;
pub mod mds;
pub mod metrics;
pub mod misomap;
pub mod synth;

pub use error::{Error, Result, Warning};
