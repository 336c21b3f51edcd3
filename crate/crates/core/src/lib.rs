//! Shape-preserving smoothing of piecewise polynomials.
//!
//! A monotone or convex (more generally `q`-monotone) piecewise polynomial
//! on a partition `Z` is turned into a spline of minimal defect on a finer
//! partition, keeping the shape and an error controlled by local moduli of
//! smoothness. The crate also ships the tools around that construction:
//! certified nonnegativity of polynomials, `L_p` quasi-norms, moduli of
//! smoothness, partitions and remeshes, and a small experiment harness for
//! approximation rates.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

mod bspline;
pub mod cli;
pub mod error;
pub mod glue;
pub mod interval;
pub mod io;
pub mod jackson;
pub mod norms;
pub mod partition;
pub mod poly;
pub mod ppf;
pub mod quadrature;
pub mod report;
pub mod smoothing;

pub use error::{Error, Result};
pub use interval::Interval;
pub use jackson::{RateRow, RateStudyConfig, RateStudyReport, Target};
pub use norms::{Evaluable, Exponent, ModulusEstimate};
pub use partition::{Partition, PartitionKind, RemeshKind, RemeshVerdict};
pub use poly::{Certificate, Polynomial};
pub use ppf::{ContinuityDefect, PiecewisePoly, ShapeSpec, ShapeVerdict};
pub use report::{CoreRecord, ErrorEntry, ReportConfig, SmoothingReport};
pub use smoothing::{DeltaMode, GlueConfig, Pipeline, RemeshChoice, SmoothOptions, SmoothOutcome};
