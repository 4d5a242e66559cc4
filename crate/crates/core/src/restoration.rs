//! First attack stage: estimate and undo the intra-block transform from the
//! ciphertext alone.
//!
//! The cipher applies one pattern to every block, so every statistic below is
//! pooled over all blocks of the image:
//!
//! 1. Within each encrypted sub-block position, planes 1 and 2 are aligned to
//!    plane 0 by picking the orientation and polarity (16 candidates) with the
//!    largest pixel covariance against plane 0. Colour planes of natural
//!    images are strongly positively correlated, so this fixes the relative
//!    geometry and polarity of the three planes at a position.
//! 2. For each of the 24 sub-block arrangements, the remaining unknown per
//!    position is a joint orientation/polarity (16) and a channel order (6).
//!    The objective is the integer SSD over the four internal seams of every
//!    block; the four positions form a cycle (TL-TR-BR-BL), which is minimised
//!    exactly by enumerating the two diagonal positions and minimising the
//!    other two independently.
//! 3. The arrangement with the lowest objective wins; ties go to the
//!    lexicographically smallest arrangement, then the smallest states.
//!
//! Rotating or mirroring every block as a whole, inverting all channels, or
//! permuting channels globally leaves every internal seam unchanged, so the
//! result is only determined up to those global symmetries.

use rayon::prelude::*;

use crate::cipher::{negpos, BlockPattern, ChannelPerm, CipherConfig, Orientation};
use crate::dissimilarity::{edge_coord, Side};
use crate::error::Result;
use crate::grid::{merge_blocks, split_blocks, BlockGrid, Tile};
use crate::image::Image;

/// Where one decrypted colour plane is read from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct PlaneSource {
    /// Channel index inside the encrypted sub-block.
    pub plane: u8,
    /// Orientation applied to that plane.
    pub orientation: Orientation,
    /// Whether the samples are inverted.
    pub inverted: bool,
}

/// Estimated inverse of the shared intra-block transform.
#[derive(Clone, Debug, PartialEq)]
pub struct RestorationHypothesis {
    /// Decrypted quadrant `p` is rebuilt from encrypted quadrant `subblock_source[p]`.
    pub subblock_source: [u8; 4],
    /// Per decrypted quadrant and channel.
    pub planes: [[PlaneSource; 3]; 4],
    /// Mean squared seam difference per internal boundary sample (lower is better).
    pub score: f64,
}

impl RestorationHypothesis {
    pub fn identity() -> Self {
        let planes = std::array::from_fn(|_| {
            std::array::from_fn(|c| PlaneSource {
                plane: c as u8,
                ..PlaneSource::default()
            })
        });
        Self {
            subblock_source: [0, 1, 2, 3],
            planes,
            score: 0.0,
        }
    }

    /// The exact inverse of a known pattern, for checking the search.
    pub fn from_pattern(pattern: &BlockPattern) -> Self {
        let mut h = Self::identity();
        for (q, &dst) in pattern.subblock_perm.iter().enumerate() {
            let t = &pattern.transforms[q];
            let inv_order = t.channel_perm.inverse().order();
            h.subblock_source[dst as usize] = q as u8;
            for c in 0..3 {
                h.planes[dst as usize][c] = PlaneSource {
                    plane: inv_order[c] as u8,
                    orientation: t.orientation[c].inverse(),
                    inverted: t.polarity[c],
                };
            }
        }
        h
    }

    pub fn apply_block(&self, block: &Tile) -> Tile {
        let quads = block.quadrants();
        let s = quads[0].side();
        let out: [Tile; 4] = std::array::from_fn(|p| {
            let src = &quads[self.subblock_source[p] as usize];
            let mut t = Tile::filled(s, [0; 3]);
            for (c, ps) in self.planes[p].iter().enumerate() {
                for y in 0..s {
                    for x in 0..s {
                        let (sy, sx) = ps.orientation.source(y, x, s);
                        t.set(y, x, c, negpos(src.get(sy, sx, ps.plane as usize), ps.inverted));
                    }
                }
            }
            t
        });
        Tile::from_quadrants(&out)
    }

    pub fn apply(&self, img: &Image, m: usize) -> Result<Image> {
        let grid = split_blocks(img, m)?;
        let blocks = grid.blocks.iter().map(|b| self.apply_block(b)).collect();
        merge_blocks(&BlockGrid { blocks, ..grid })
    }
}

/// Mean squared difference per sample over the four internal seams of every block.
pub fn internal_seam_score(img: &Image, m: usize) -> Result<f64> {
    let grid = split_blocks(img, m)?;
    let s = m / 2;
    let mut total = 0u64;
    for block in &grid.blocks {
        let q = block.quadrants();
        for (a, b, side) in [(0, 1, Side::Right), (2, 3, Side::Right), (0, 2, Side::Bottom), (1, 3, Side::Bottom)] {
            total += crate::dissimilarity::seam_ssd(&q[a], &q[b], side);
        }
    }
    Ok(total as f64 / (grid.len() * 4 * s * 3) as f64)
}

/// Score of `hyp` on `img`: the internal seam score of the restored image.
pub fn score_hypothesis(img: &Image, hyp: &RestorationHypothesis, m: usize) -> Result<f64> {
    internal_seam_score(&hyp.apply(img, m)?, m)
}

/// A symmetry of whole blocks that leaves every internal seam unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct BlockSymmetry {
    pub orientation: Orientation,
    pub inverted: bool,
    pub channel_perm: ChannelPerm,
}

impl BlockSymmetry {
    /// All 96 symmetries, identity first.
    pub fn all() -> impl Iterator<Item = BlockSymmetry> {
        ChannelPerm::all().flat_map(|channel_perm| {
            [false, true].into_iter().flat_map(move |inverted| {
                Orientation::all().map(move |orientation| BlockSymmetry {
                    orientation,
                    inverted,
                    channel_perm,
                })
            })
        })
    }

    /// Output channel `c` reads channel `order[c]` at the oriented position.
    pub fn apply(&self, tile: &Tile) -> Tile {
        let n = tile.side();
        let order = self.channel_perm.order();
        let mut out = Tile::filled(n, [0; 3]);
        for y in 0..n {
            for x in 0..n {
                let (sy, sx) = self.orientation.source(y, x, n);
                for (c, &k) in order.iter().enumerate() {
                    out.set(y, x, c, negpos(tile.get(sy, sx, k), self.inverted));
                }
            }
        }
        out
    }
}

/// The symmetry `g` maximising the fraction of samples where `g(expected)`
/// equals `actual`, pooled over all pairs; ties go to the earliest in
/// [`BlockSymmetry::all`].
pub fn best_symmetry(expected: &[Tile], actual: &[Tile]) -> (BlockSymmetry, f64) {
    let total: usize = expected.iter().map(|t| t.data().len()).sum();
    let mut best = (BlockSymmetry::default(), -1.0);
    for g in BlockSymmetry::all() {
        let hits: usize = expected
            .iter()
            .zip(actual)
            .map(|(e, a)| g.apply(e).data().iter().zip(a.data()).filter(|(x, y)| x == y).count())
            .sum();
        let frac = if total == 0 { 1.0 } else { hits as f64 / total as f64 };
        if frac > best.1 {
            best = (g, frac);
        }
    }
    best
}

const STATES: usize = 96;

#[derive(Clone, Copy)]
struct State {
    orientation: Orientation,
    inverted: bool,
    order: [usize; 3],
}

fn state(i: usize) -> State {
    State {
        orientation: Orientation::from_index((i % 8) as u8),
        inverted: (i / 8) % 2 == 1,
        order: ChannelPerm::from_index((i / 16) as u8).order(),
    }
}

/// Planes of every block, `[position][channel]`, each `n_blocks * s * s` samples.
struct PlaneStack {
    s: usize,
    n: usize,
    planes: Vec<Vec<u8>>,
}

impl PlaneStack {
    fn new(grid: &BlockGrid) -> Self {
        let s = grid.block_size / 2;
        let n = grid.len();
        let mut planes = vec![Vec::with_capacity(n * s * s); 12];
        for block in &grid.blocks {
            for (q, quad) in block.quadrants().iter().enumerate() {
                for c in 0..3 {
                    let dst = &mut planes[q * 3 + c];
                    dst.extend(quad.data().iter().skip(c).step_by(3));
                }
            }
        }
        Self { s, n, planes }
    }

    fn plane(&self, q: usize, c: usize) -> &[u8] {
        &self.planes[q * 3 + c]
    }
}

fn source_table(o: Orientation, s: usize) -> Vec<usize> {
    (0..s * s)
        .map(|i| {
            let (sy, sx) = o.source(i / s, i % s, s);
            sy * s + sx
        })
        .collect()
}

/// Orientation/polarity of `other` that best matches `reference`, by pooled covariance.
fn align(reference: &[u8], other: &[u8], s: usize, tables: &[Vec<usize>]) -> (Orientation, bool) {
    let n = reference.len() as i128;
    let sum_a: i128 = reference.iter().map(|&v| v as i128).sum();
    let sum_b: i128 = other.iter().map(|&v| v as i128).sum();
    let area = s * s;
    let mut best = (i128::MIN, 0usize);
    for (o, table) in tables.iter().enumerate() {
        let mut dot = 0i64;
        for (ra, ob) in reference.chunks_exact(area).zip(other.chunks_exact(area)) {
            for (i, &a) in ra.iter().enumerate() {
                dot += a as i64 * ob[table[i]] as i64;
            }
        }
        let cov = n * dot as i128 - sum_a * sum_b;
        for (pol, value) in [(0usize, cov), (1, -cov)] {
            let t = o + 8 * pol;
            if value > best.0 || (value == best.0 && t < best.1) {
                best = (value, t);
            }
        }
    }
    (Orientation::from_index((best.1 % 8) as u8), best.1 >= 8)
}

/// Estimates the shared intra-block inverse and applies it.
///
/// The block order is left untouched; reassembling the blocks is the
/// solver's job.
pub fn restore_subblocks(img: &Image, cfg: &CipherConfig) -> Result<(Image, RestorationHypothesis)> {
    cfg.validate()?;
    let grid = split_blocks(img, cfg.m)?;
    let hyp = search(&grid);
    let restored = hyp.apply(img, cfg.m)?;
    Ok((restored, hyp))
}

fn search(grid: &BlockGrid) -> RestorationHypothesis {
    let stack = PlaneStack::new(grid);
    let (s, n) = (stack.s, stack.n);
    let tables: Vec<Vec<usize>> = Orientation::all().map(|o| source_table(o, s)).collect();

    // Stage 1: align planes 1 and 2 to plane 0 at each encrypted position.
    let mut alignment = [[(Orientation::IDENTITY, false); 3]; 4];
    for (q, row) in alignment.iter_mut().enumerate() {
        for k in 1..3 {
            row[k] = align(stack.plane(q, 0), stack.plane(q, k), s, &tables);
        }
    }
    let aligned: Vec<Vec<u8>> = (0..12)
        .map(|i| {
            let (q, k) = (i / 3, i % 3);
            let (o, inv) = alignment[q][k];
            let table = &tables[o.index() as usize];
            stack
                .plane(q, k)
                .chunks_exact(s * s)
                .flat_map(|b| table.iter().map(move |&j| negpos(b[j], inv)))
                .collect()
        })
        .collect();

    // Edge samples of every aligned plane under every orientation:
    // edges[((q*3 + k)*8 + o)*4 + side] holds n*s samples.
    let edges: Vec<Vec<u8>> = (0..12 * 8 * 4)
        .map(|i| {
            let side = Side::ALL[i % 4];
            let o = (i / 4) % 8;
            let plane = &aligned[i / 32];
            let table = &tables[o];
            let mut out = Vec::with_capacity(n * s);
            for b in plane.chunks_exact(s * s) {
                for j in 0..s {
                    let (y, x) = edge_coord(side, s, j, 0);
                    out.push(b[table[y * s + x]]);
                }
            }
            out
        })
        .collect();
    let edge = |q: usize, k: usize, o: usize, side: Side| -> &[u8] {
        &edges[((q * 3 + k) * 8 + o) * 4 + side as usize]
    };
    let sums: Vec<(i64, i64)> = edges
        .iter()
        .map(|e| {
            e.iter().fold((0i64, 0i64), |(a, a2), &v| (a + v as i64, a2 + (v as i64) * (v as i64)))
        })
        .collect();
    let sum_of = |q: usize, k: usize, o: usize, side: Side| sums[((q * 3 + k) * 8 + o) * 4 + side as usize];
    let samples = (n * s) as i64;

    // Pairwise seam tables for horizontal (a left of b) and vertical (a above b) seams.
    let relations = [(Side::Right, Side::Left), (Side::Bottom, Side::Top)];
    let pairs: Vec<(usize, usize, usize)> = (0..2)
        .flat_map(|r| (0..4).flat_map(move |a| (0..4).map(move |b| (r, a, b))))
        .filter(|&(_, a, b)| a != b)
        .collect();
    let seam_tables: Vec<Vec<u64>> = pairs
        .par_iter()
        .map(|&(r, qa, qb)| {
            let (side_a, side_b) = relations[r];
            // base[((ka*3 + kb)*8 + oa)*8 + ob] = (same polarity, opposite polarity)
            let mut base = vec![(0u64, 0u64); 9 * 64];
            for ka in 0..3 {
                for kb in 0..3 {
                    for oa in 0..8 {
                        let va = edge(qa, ka, oa, side_a);
                        let (sa, sa2) = sum_of(qa, ka, oa, side_a);
                        for ob in 0..8 {
                            let vb = edge(qb, kb, ob, side_b);
                            let (sb, sb2) = sum_of(qb, kb, ob, side_b);
                            let dot: i64 = va.iter().zip(vb).map(|(&x, &y)| x as i64 * y as i64).sum();
                            let same = sa2 + sb2 - 2 * dot;
                            let opposite = samples * 255 * 255 - 510 * (sa + sb) + sa2 + sb2 + 2 * dot;
                            base[((ka * 3 + kb) * 8 + oa) * 8 + ob] = (same as u64, opposite as u64);
                        }
                    }
                }
            }
            let mut table = vec![0u64; STATES * STATES];
            for sa_idx in 0..STATES {
                let a = state(sa_idx);
                for sb_idx in 0..STATES {
                    let b = state(sb_idx);
                    let flip = a.inverted != b.inverted;
                    let mut cost = 0u64;
                    for c in 0..3 {
                        let e = base[((a.order[c] * 3 + b.order[c]) * 8 + a.orientation.index() as usize) * 8
                            + b.orientation.index() as usize];
                        cost += if flip { e.1 } else { e.0 };
                    }
                    table[sa_idx * STATES + sb_idx] = cost;
                }
            }
            table
        })
        .collect();
    let seam = |r: usize, qa: usize, qb: usize| -> &[u64] {
        let idx = pairs.iter().position(|&p| p == (r, qa, qb)).unwrap();
        &seam_tables[idx]
    };

    let mut best: Option<(u64, [usize; 4], [usize; 4])> = None;
    for src in arrangements() {
        let e01 = seam(0, src[0], src[1]);
        let e23 = seam(0, src[2], src[3]);
        let e02 = seam(1, src[0], src[2]);
        let e13 = seam(1, src[1], src[3]);
        let mut local: Option<(u64, usize, usize)> = None;
        for s0 in 0..STATES {
            for s3 in 0..STATES {
                let m1 = (0..STATES).map(|s1| e01[s0 * STATES + s1] + e13[s1 * STATES + s3]).min().unwrap();
                let m2 = (0..STATES).map(|s2| e02[s0 * STATES + s2] + e23[s2 * STATES + s3]).min().unwrap();
                let total = m1 + m2;
                if local.is_none_or(|(t, _, _)| total < t) {
                    local = Some((total, s0, s3));
                }
            }
        }
        let (total, s0, s3) = local.unwrap();
        if best.as_ref().is_none_or(|(t, _, _)| total < *t) {
            let argmin = |f: &dyn Fn(usize) -> u64| (0..STATES).min_by_key(|&i| (f(i), i)).unwrap();
            let s1 = argmin(&|s1| e01[s0 * STATES + s1] + e13[s1 * STATES + s3]);
            let s2 = argmin(&|s2| e02[s0 * STATES + s2] + e23[s2 * STATES + s3]);
            best = Some((total, src, [s0, s1, s2, s3]));
        }
    }
    let (total, src, states) = best.expect("24 arrangements");

    let mut hyp = RestorationHypothesis::identity();
    for p in 0..4 {
        let q = src[p];
        let st = state(states[p]);
        hyp.subblock_source[p] = q as u8;
        for c in 0..3 {
            let k = st.order[c];
            let (ao, ainv) = alignment[q][k];
            hyp.planes[p][c] = PlaneSource {
                plane: k as u8,
                orientation: ao.then(st.orientation),
                inverted: ainv ^ st.inverted,
            };
        }
    }
    hyp.score = total as f64 / (n * 4 * s * 3) as f64;
    hyp
}

/// The 24 arrangements of four positions in lexicographic order.
fn arrangements() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if crate::stream::is_permutation(&p) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrangements_are_sorted_and_complete() {
        let a = arrangements();
        assert_eq!(a.len(), 24);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn constant_image_gives_identity() {
        let img = Image::filled(64, 64, [17, 99, 201]);
        let (out, hyp) = restore_subblocks(&img, &CipherConfig::default()).unwrap();
        assert_eq!(out, img);
        assert_eq!(hyp, RestorationHypothesis::identity());
    }

    #[test]
    fn from_pattern_inverts_encryption() {
        use crate::cipher::{generate_pattern, CipherConfig};
        use crate::keys::KeySet;
        let cfg = CipherConfig::default();
        let schedule = generate_pattern(&KeySet::new([1, 2, 3, 4, 5]), &cfg, 1).unwrap();
        let pattern = &schedule.patterns[0];
        let block = Tile::new(16, (0..16 * 16 * 3).map(|v| (v * 31 % 251) as u8).collect()).unwrap();
        let enc = pattern.encrypt_block(&block);
        assert_eq!(RestorationHypothesis::from_pattern(pattern).apply_block(&enc), block);
    }

    #[test]
    fn search_score_matches_direct_score() {
        let img = crate::synth::scene(96, 64, 3);
        let (_, hyp) = restore_subblocks(&img, &CipherConfig::default()).unwrap();
        let direct = score_hypothesis(&img, &hyp, 16).unwrap();
        assert!((hyp.score - direct).abs() < 1e-9, "{} vs {}", hyp.score, direct);
    }
}
