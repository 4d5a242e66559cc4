//! Block-scrambling image encryption, the two-stage jigsaw-solver attack on
//! it, and the placement metrics used to score the attack.

pub mod assembly;
pub mod attack;
pub mod chroma;
pub mod cipher;
pub mod datasets;
pub mod dissimilarity;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod image;
pub mod jpeg;
pub mod keys;
pub mod metrics;
pub mod restoration;
pub mod solver;
pub mod stream;
pub mod synth;

pub use crate::assembly::Assembly;
pub use crate::attack::{attack, score_attack, AttackConfig, AttackOutcome};
pub use crate::cipher::{decrypt, encrypt, BlockPattern, CipherConfig, Schedule};
pub use crate::error::{Error, Result};
pub use crate::experiment::{run_experiment, Condition, ExperimentConfig, ResultRow};
pub use crate::grid::{merge_blocks, split_blocks, BlockGrid, Tile};
pub use crate::image::Image;
pub use crate::jpeg::{jpeg_cycle, JpegParams, Subsampling};
pub use crate::keys::KeySet;
pub use crate::metrics::{evaluate, MetricsReport};
pub use crate::restoration::{restore_subblocks, BlockSymmetry, RestorationHypothesis};
pub use crate::solver::{build_compatibility, ga_solve, CompatibilityTable, GaParams};
pub use crate::stream::{draw_permutation, KeyStream, RandomStream};
