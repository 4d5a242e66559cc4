//! Undoing 4:2:0 chroma loss on ciphertexts.
//!
//! Chroma subsampling averages each 2x2 cell and the decoder blends
//! neighbouring cells back with a triangle filter. On a ciphertext whose
//! colour planes are scrambled independently, this smears unrelated planes
//! into each other. Luma survives at full resolution, and the per-cell chroma
//! means can be recovered by inverting the upsampling filter, so:
//!
//! * [`flatten_chroma`] rebuilds RGB from luma plus the recovered cell
//!   chroma, with no knowledge of the cipher;
//! * [`BlockReconstructor`] additionally uses a restoration hypothesis: every
//!   luma sample is a known mix of three decrypted pixels, and a smoothness
//!   prior on the decrypted block picks the natural solution of the
//!   resulting least-squares problem.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{merge_blocks, split_blocks, BlockGrid, Tile};
use crate::image::Image;
use crate::restoration::RestorationHypothesis;

/// Rows: Y, Cb, Cr (chroma without the 128 offset).
const TO_YCC: [[f64; 3]; 3] = [
    [0.299, 0.587, 0.114],
    [-0.168_736, -0.331_264, 0.5],
    [0.5, -0.418_688, -0.081_312],
];

fn ycc(px: [u8; 3], row: usize) -> f64 {
    (0..3).map(|k| TO_YCC[row][k] * px[k] as f64).sum()
}

fn to_rgb(y: f64, cb: f64, cr: f64) -> [u8; 3] {
    [y + 1.402 * cr, y - 0.344_136 * cb - 0.714_136 * cr, y + 1.772 * cb].map(|v| v.round().clamp(0.0, 255.0) as u8)
}

/// Least-squares inverse of 2x triangle upsampling along one axis.
fn unsample_operator(n: usize) -> DMatrix<f64> {
    let h = n / 2;
    let mut up = DMatrix::<f64>::zeros(n, h);
    for i in 0..h {
        up[(2 * i, i)] += 0.75;
        up[(2 * i, i.saturating_sub(1))] += 0.25;
        up[(2 * i + 1, i)] += 0.75;
        up[(2 * i + 1, (i + 1).min(h - 1))] += 0.25;
    }
    let gram = up.transpose() * &up;
    gram.cholesky().expect("upsampling operator has full column rank").inverse() * up.transpose()
}

fn check_even(img: &Image) -> Result<()> {
    if img.width() % 2 != 0 || img.height() % 2 != 0 || img.width() < 2 || img.height() < 2 {
        return Err(Error::InvalidParameter(format!(
            "chroma cells need even dimensions, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    Ok(())
}

/// Per-cell Cb and Cr (rows = height / 2, cols = width / 2).
pub fn cell_chroma(img: &Image) -> Result<[DMatrix<f64>; 2]> {
    check_even(img)?;
    let (w, h) = (img.width(), img.height());
    let rows = unsample_operator(h);
    let cols = unsample_operator(w);
    Ok([1, 2].map(|ch| {
        let full = DMatrix::<f64>::from_fn(h, w, |y, x| ycc(img.pixel(x, y), ch));
        &rows * full * cols.transpose()
    }))
}

/// Luma as decoded, chroma replaced by the recovered cell values.
pub fn flatten_chroma(img: &Image) -> Result<Image> {
    let [cb, cr] = cell_chroma(img)?;
    Ok(Image::from_fn(img.width(), img.height(), |x, y| {
        to_rgb(ycc(img.pixel(x, y), 0), cb[(y / 2, x / 2)], cr[(y / 2, x / 2)])
    }))
}

/// Weights of the reconstruction objective.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ChromaPrior {
    /// Penalty on squared differences between 4-neighbours in each channel.
    pub smoothness: f64,
    /// Penalty on differing neighbour steps between channels.
    pub cross_channel: f64,
    /// Weight of the cell chroma equations relative to luma.
    pub chroma_weight: f64,
}

impl Default for ChromaPrior {
    fn default() -> Self {
        Self {
            smoothness: 0.05,
            cross_channel: 0.4,
            chroma_weight: 1.0,
        }
    }
}

/// Which decrypted sample feeds each ciphertext sample of a block, and
/// whether it is inverted. Indexed by interleaved ciphertext sample.
fn sample_map(hyp: &RestorationHypothesis, m: usize) -> Vec<(usize, bool)> {
    let n = m * m * 3;
    let coded = |f: &dyn Fn(usize) -> u8| hyp.apply_block(&Tile::new(m, (0..n).map(f).collect()).expect("sized"));
    let zero = coded(&|_| 0);
    let digits: Vec<Tile> = (0..3).map(|d| coded(&|i| ((i >> (8 * d)) & 0xFF) as u8)).collect();
    let mut out = vec![(0, false); n];
    for j in 0..n {
        let inverted = zero.data()[j] == 255;
        let src = digits.iter().enumerate().fold(0usize, |acc, (d, t)| {
            let v = t.data()[j];
            acc | ((if inverted { 255 - v } else { v }) as usize) << (8 * d)
        });
        out[src] = (j, inverted);
    }
    out
}

/// Regularised least-squares inverse of "decrypt, then lose chroma detail",
/// precomputed for one hypothesis and shared by every block.
pub struct BlockReconstructor {
    m: usize,
    gain: DMatrix<f64>,
    offset: DVector<f64>,
}

impl BlockReconstructor {
    /// Cost grows with the sixth power of `m`; meant for small blocks.
    pub fn new(hyp: &RestorationHypothesis, m: usize, prior: &ChromaPrior) -> Result<Self> {
        if m < 4 || m % 4 != 0 {
            return Err(Error::InvalidParameter(format!("block size {m} must be a multiple of 4")));
        }
        let map = sample_map(hyp, m);
        let unknowns = m * m * 3;
        let cells = (m / 2) * (m / 2);
        let rows = m * m + 2 * cells;
        let mut model = DMatrix::<f64>::zeros(rows, unknowns);
        let mut offset = DVector::<f64>::zeros(rows);
        let mut weight = vec![1.0; rows];
        for y in 0..m {
            for x in 0..m {
                let e = y * m + x;
                let cell = (y / 2) * (m / 2) + x / 2;
                for k in 0..3 {
                    let (j, inverted) = map[e * 3 + k];
                    let (sign, base) = if inverted { (-1.0, 255.0) } else { (1.0, 0.0) };
                    model[(e, j)] += TO_YCC[0][k] * sign;
                    offset[e] += TO_YCC[0][k] * base;
                    for ch in 1..3 {
                        let r = m * m + (ch - 1) * cells + cell;
                        model[(r, j)] += TO_YCC[ch][k] * sign / 4.0;
                        offset[r] += TO_YCC[ch][k] * base / 4.0;
                        weight[r] = prior.chroma_weight;
                    }
                }
            }
        }
        let weighted = DMatrix::<f64>::from_fn(rows, unknowns, |r, c| model[(r, c)] * weight[r]);
        let mut normal = model.transpose() * &weighted;

        let at = |c: usize, y: usize, x: usize| (y * m + x) * 3 + c;
        for y in 0..m {
            for x in 0..m {
                for (y2, x2) in [(y, x + 1), (y + 1, x)] {
                    if y2 >= m || x2 >= m {
                        continue;
                    }
                    for c in 0..3 {
                        let (p, q) = (at(c, y, x), at(c, y2, x2));
                        normal[(p, p)] += prior.smoothness;
                        normal[(q, q)] += prior.smoothness;
                        normal[(p, q)] -= prior.smoothness;
                        normal[(q, p)] -= prior.smoothness;
                    }
                    for c in 0..3 {
                        for c2 in c + 1..3 {
                            let terms = [
                                (at(c, y, x), 1.0),
                                (at(c, y2, x2), -1.0),
                                (at(c2, y, x), -1.0),
                                (at(c2, y2, x2), 1.0),
                            ];
                            for &(i, si) in &terms {
                                for &(j, sj) in &terms {
                                    normal[(i, j)] += prior.cross_channel * si * sj;
                                }
                            }
                        }
                    }
                }
            }
        }
        let chol = normal
            .cholesky()
            .ok_or_else(|| Error::InvalidParameter("reconstruction prior is too weak".into()))?;
        let gain = chol.solve(&weighted.transpose());
        Ok(Self { m, gain, offset })
    }

    /// Decrypted-domain blocks, in ciphertext order.
    pub fn reconstruct(&self, ciphertext: &Image) -> Result<Image> {
        let m = self.m;
        let [cb, cr] = cell_chroma(ciphertext)?;
        let grid = split_blocks(ciphertext, m)?;
        let cells = (m / 2) * (m / 2);
        let blocks = (0..grid.len())
            .into_par_iter()
            .map(|b| {
                let tile = &grid.blocks[b];
                let (cy, cx) = (b / grid.cols * m / 2, b % grid.cols * m / 2);
                let mut obs = DVector::<f64>::zeros(m * m + 2 * cells);
                for y in 0..m {
                    for x in 0..m {
                        obs[y * m + x] = ycc([tile.get(y, x, 0), tile.get(y, x, 1), tile.get(y, x, 2)], 0);
                    }
                }
                for y in 0..m / 2 {
                    for x in 0..m / 2 {
                        obs[m * m + y * (m / 2) + x] = cb[(cy + y, cx + x)];
                        obs[m * m + cells + y * (m / 2) + x] = cr[(cy + y, cx + x)];
                    }
                }
                let d = &self.gain * (obs - &self.offset);
                Tile::new(m, d.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect()).expect("sized")
            })
            .collect();
        merge_blocks(&BlockGrid { blocks, ..grid })
    }
}
