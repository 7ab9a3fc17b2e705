//! Independent reference implementations and synthetic data for checking
//! the rfsplat renderer and solver.
//!
//! The brute-force renderer shares no visibility or blending code with the
//! main path: it loops over every Gaussian, checks every other Gaussian
//! against every segment, and sees each Gaussian along its exact direction.

// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod brute;
pub mod cross_section;
pub mod gradcheck;
pub mod observations;
pub mod scenes;
pub mod suites;

pub use brute::{brute_force_render, segment_visibility, SegmentHit, MAX_GAUSSIANS};
pub use cross_section::{analytic_projected_area, monte_carlo_cross_section, AreaEstimate};
pub use gradcheck::{
    check_gradients, random_gradient_case, GradientCase, GradientCheckRow, GradientCheckTable, GradientTolerance,
};
pub use observations::{generate_observations, Protocol};
pub use scenes::{classroom_tx_positions, generate_scene, metal, random_attributes, SyntheticSceneSpec, Template};
pub use suites::{blend_suite, cross_section_suite, gradient_suite, visibility_suite, SuiteReport};
