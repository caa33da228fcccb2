//! Melnikov functions for two-dimensional invariant manifolds of
//! three-dimensional flows, with Hill's spherical vortex as the built-in
//! test case.
//!
//! The pipeline runs from a velocity field ([`fields`]) through a
//! `(p, alpha)` chart of a manifold ([`trajectory`]) to Melnikov values
//! ([`melnikov`]), grids of them ([`grid`]), their zero contours
//! ([`contour`]) and lobe volumes ([`lobes`]). [`oracle`] checks the
//! predicted displacements against direct integration.

pub mod closed_form;
pub mod contour;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod lobes;
pub mod melnikov;
pub mod oracle;
pub mod quadrature;
pub mod surface;
pub mod trajectory;

pub use contour::{zero_contours, ContourSet};
pub use error::{Error, Result};
pub use fields::{FieldModel, PerturbationModel, SaddleSpectrum};
pub use geometry::{Mat3, SphericalPoint, Vec3};
pub use grid::{build_melnikov_grid, MelnikovField};
pub use lobes::{lobe_regions, lobe_volume, LobeReport};
pub use melnikov::{melnikov_heteroclinic, melnikov_stable, melnikov_unstable, MelnikovValue, SurfaceKind};
pub use oracle::{fit_order, measure_displacement, DisplacementSample, OrderFit};
pub use quadrature::QuadratureSpec;
pub use trajectory::{ChartKind, ManifoldChart};
