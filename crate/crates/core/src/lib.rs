//! Forward and backward iteration of analytic self-maps of the unit disk and
//! the upper half-plane: bounded-step backward sequences, classification of
//! parabolic dynamics, and numerical conjugation to translations.

// NaN must fail range checks, so negated comparisons are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atlas;
pub mod classify;
pub mod config;
pub mod conjugation;
pub mod error;
pub mod extrapolate;
pub mod geometry;
pub mod iteration;
pub mod parse;
pub mod taxonomy;
pub mod verify;

pub use atlas::{atlas, eval_map, invert_branch, parse_map, AtlasEntry, SelfMap, ATLAS_NAMES};
pub use classify::{
    approach_geometry, classify, classify_from, classify_with, find_denjoy_wolff,
    multiplier_bound_check, Approach, ClassificationReport, DwPoint, MultiplierBound,
};
pub use config::Tolerances;
pub use conjugation::{
    backward_conjugation, forward_conjugation, injectivity_probe, lateral_limit,
    nonexistence_check, step_identities, verify_cor_ratios, ConjugationField, Grid,
};
pub use error::{Error, Result};
pub use geometry::{BoundaryPoint, Horocycle, Mobius, Model, ModelPoint};
pub use iteration::{
    backward_orbit, backward_orbit_with, forward_orbit, newton_preimage, step_limits, Backward,
    BackwardOptions, Direction, EmptyEvidence, OrbitPoint, OrbitRecord, StepLimits,
};
pub use num_complex::Complex64;
pub use taxonomy::{BisbsClass, ForwardClass, Label};
