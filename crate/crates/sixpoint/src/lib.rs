//! Sparse motion segmentation from point trajectories.
//!
//! Segments tracked 2D feature trajectories into rigidly moving bodies using a
//! six-point projective consistency test. A six-trajectory bundle moving rigidly
//! admits a motion signature `s` orthogonal to the per-frame invariant vector `z`
//! of its image points; the residual of that constraint, turned into an image
//! distance and aggregated over frames, scores how well a point fits a cluster.
//!
//! Pipeline stages:
//! 1. spatial K-means seeding of six-point clusters,
//! 2. per-point classification against every seed cluster,
//! 3. rejection of undersized clusters,
//! 4. naive-Bayes-like cluster linking and connected-component merging,
//! 5. refinement merging driven by extreme-value statistics of mixed-bundle
//!    scores, down to the requested number of motions.

pub mod batch;
pub mod eval;
pub mod geometry;
pub mod gev;
pub mod invariant;
pub mod kmeans;
pub mod par;
pub mod pipeline;
pub mod score;
pub mod signature;
pub mod synth;
pub mod traj;

pub use eval::{misclassification_error, EvalError, EvaluationReport, SequenceOutcome, Stats};
pub use gev::{fit_gev_mle, gev_log_likelihood, gev_mode, GevError, GevParams};
pub use invariant::MotionSignature;
pub use pipeline::{segment, FrameChoice, SegmentConfig, SegmentError, SegmentationResult};
pub use score::{matching_score, BundleScore};
pub use signature::estimate_signature;
pub use synth::{generate_scene, project_scene, SceneSpec, SynthError};
pub use traj::{load_trajectories, save_trajectories, TrajectoryError, TrajectorySet};
