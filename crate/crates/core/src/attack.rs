//! The full ciphertext-only attack and its scoring against the key schedule.

use std::time::Duration;

use crate::assembly::Assembly;
use crate::chroma::{flatten_chroma, BlockReconstructor, ChromaPrior};
use crate::cipher::{CipherConfig, Schedule};
use crate::dissimilarity::Metric;
use crate::error::{Error, Result};
use crate::grid::{merge_blocks, split_blocks, BlockGrid, Tile};
use crate::image::Image;
use crate::metrics::{evaluate, MetricsReport};
use crate::restoration::{best_symmetry, restore_subblocks, BlockSymmetry, RestorationHypothesis};
use crate::solver::{build_compatibility, ga_solve_detailed, GaParams};
use crate::stream::{invert_permutation, KeyStream, RandomStream};

#[derive(Clone, Debug, Default)]
pub struct AttackConfig {
    pub cipher: CipherConfig,
    pub ga: GaParams,
    pub metric: Metric,
    /// Set for ciphertexts that went through 4:2:0 JPEG: the hypothesis is
    /// searched on chroma-flattened input and blocks are rebuilt by least
    /// squares under this prior instead of a plain inverse transform.
    pub chroma_prior: Option<ChromaPrior>,
    pub skip_restoration: bool,
    pub skip_solver: bool,
}

#[derive(Clone, Debug)]
pub struct AttackOutcome {
    /// `None` when restoration was skipped.
    pub hypothesis: Option<RestorationHypothesis>,
    /// Ciphertext with the intra-block transform undone, blocks still shuffled.
    pub restored: Image,
    /// Piece ids are ciphertext block positions.
    pub assembly: Assembly,
    pub fitness: f64,
    pub timed_out: bool,
    /// Restored blocks placed according to `assembly`.
    pub reassembled: Image,
}

pub fn attack(ciphertext: &Image, cfg: &AttackConfig) -> Result<AttackOutcome> {
    cfg.cipher.validate()?;
    let (restored, hypothesis) = if cfg.skip_restoration {
        (ciphertext.clone(), None)
    } else if let Some(prior) = &cfg.chroma_prior {
        let (_, hyp) = restore_subblocks(&flatten_chroma(ciphertext)?, &cfg.cipher)?;
        let img = BlockReconstructor::new(&hyp, cfg.cipher.m, prior)?.reconstruct(ciphertext)?;
        (img, Some(hyp))
    } else {
        let (img, hyp) = restore_subblocks(ciphertext, &cfg.cipher)?;
        (img, Some(hyp))
    };
    let grid = split_blocks(&restored, cfg.cipher.m)?;
    let (assembly, fitness, timed_out) = if cfg.skip_solver || grid.len() < 2 {
        (Assembly::identity(grid.rows, grid.cols), 0.0, false)
    } else {
        let table = build_compatibility(&grid.blocks, cfg.metric)?;
        let out = ga_solve_detailed(&table, grid.rows, grid.cols, &cfg.ga)?;
        (out.assembly, out.fitness, out.timed_out)
    };
    let reassembled = place(&grid, &assembly)?;
    Ok(AttackOutcome {
        hypothesis,
        restored,
        assembly,
        fitness,
        timed_out,
        reassembled,
    })
}

/// Builds the image that puts block `assembly.cells()[k]` of `grid` at cell `k`.
pub fn place(grid: &BlockGrid, assembly: &Assembly) -> Result<Image> {
    if assembly.len() != grid.len() || assembly.rows() != grid.rows {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} assembly for a {}x{} block grid",
            assembly.rows(),
            assembly.cols(),
            grid.rows,
            grid.cols
        )));
    }
    let blocks: Vec<Tile> = assembly.cells().iter().map(|&id| grid.blocks[id].clone()).collect();
    merge_blocks(&BlockGrid { blocks, ..grid.clone() })
}

/// Ground-truth placement of ciphertext block ids: cell `c` holds the
/// ciphertext position whose plaintext block came from `c`.
pub fn truth_assembly(schedule: &Schedule, rows: usize, cols: usize) -> Result<Assembly> {
    Assembly::new(rows, cols, invert_permutation(&schedule.block_perm))
}

/// Whole-block symmetry left over after undoing `pattern` with `hyp`,
/// found by pushing a seeded noise block through both.
pub fn residual_symmetry(schedule: &Schedule, hyp: &RestorationHypothesis, m: usize) -> (BlockSymmetry, f64) {
    let mut rng = RandomStream::derived(&[0x9B0BE, m as u64]);
    let probe: Vec<Tile> = (0..4)
        .map(|_| Tile::new(m, (0..m * m * 3).map(|_| rng.below(256) as u8).collect()).expect("sized buffer"))
        .collect();
    let pattern = schedule.pattern(0);
    let seen: Vec<Tile> = probe.iter().map(|b| hyp.apply_block(&pattern.encrypt_block(b))).collect();
    best_symmetry(&probe, &seen)
}

/// Scores an attack on a ciphertext produced with `schedule`.
///
/// When restoration ran, the truth is first viewed through the residual
/// whole-block rotation/mirror, which no seam statistic can resolve and
/// which turns the whole reassembled picture.
pub fn score_attack(outcome: &AttackOutcome, schedule: &Schedule, cipher: &CipherConfig) -> Result<MetricsReport> {
    let (rows, cols) = (outcome.assembly.rows(), outcome.assembly.cols());
    let mut truth = truth_assembly(schedule, rows, cols)?;
    if let Some(hyp) = &outcome.hypothesis {
        let (g, _) = residual_symmetry(schedule, hyp, cipher.m);
        truth = truth.transformed(g.orientation)?;
    }
    evaluate(&outcome.assembly, &truth)
}

/// Default wall-clock budget for one puzzle.
pub const PUZZLE_TIMEOUT: Duration = Duration::from_secs(300);
