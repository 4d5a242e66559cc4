//! Block-scrambling cipher: block permutation followed by a keyed intra-block
//! transform (sub-block permutation, per-channel rotation/flip, per-channel
//! negative-positive inversion and channel shuffle).
//!
//! Stream usage per key:
//! * k1: one permutation over all blocks.
//! * k2: the sub-block permutation (shared by all channels).
//! * k3: three lanes, one per channel, each drawing an orientation per sub-block position.
//! * k4: three lanes, one per channel, each drawing a polarity bit per sub-block position.
//! * k5: one channel permutation per sub-block position.
//!
//! By default a single [`BlockPattern`] is drawn and applied to every block.
//! With `per_block_pattern` each block position draws its own pattern, in
//! raster order of the encrypted image.

use crate::error::{Error, Result};
use crate::grid::{merge_blocks, split_blocks, BlockGrid, Tile};
use crate::image::Image;
use crate::keys::KeySet;
use crate::stream::{invert_permutation, KeyStream, RandomStream};

/// Element of the dihedral group of the square: an optional horizontal mirror
/// followed by `rotation` quarter turns clockwise. Values 0..4 are pure
/// rotations, 4..8 the mirrored ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Orientation(u8);

impl Orientation {
    pub const IDENTITY: Orientation = Orientation(0);

    pub fn new(rotation: u8, flipped: bool) -> Self {
        Orientation((rotation & 3) | if flipped { 4 } else { 0 })
    }

    pub fn from_index(i: u8) -> Self {
        assert!(i < 8, "orientation index {i} out of range");
        Orientation(i)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Orientation> {
        (0..8).map(Orientation)
    }

    pub fn rotation(self) -> u8 {
        self.0 & 3
    }

    pub fn flipped(self) -> bool {
        self.0 & 4 != 0
    }

    /// Coordinate in the input that lands at `(y, x)` of the transformed `side x side` square.
    #[inline]
    pub fn source(self, y: usize, x: usize, side: usize) -> (usize, usize) {
        let (mut y, mut x) = (y, x);
        for _ in 0..self.rotation() {
            // clockwise quarter turn: out(y, x) = in(side-1-x, y)
            (y, x) = (side - 1 - x, y);
        }
        if self.flipped() {
            x = side - 1 - x;
        }
        (y, x)
    }

    pub fn inverse(self) -> Self {
        if self.flipped() {
            self
        } else {
            Orientation((4 - self.rotation()) & 3)
        }
    }

    /// The single orientation equivalent to applying `self` and then `next`.
    pub fn then(self, next: Orientation) -> Orientation {
        const S: usize = 3;
        Orientation::all()
            .find(|cand| {
                (0..S * S).all(|i| {
                    let (y, x) = (i / S, i % S);
                    let (my, mx) = next.source(y, x, S);
                    cand.source(y, x, S) == self.source(my, mx, S)
                })
            })
            .expect("dihedral group is closed")
    }
}

/// A permutation of the three colour planes: output channel `c` takes input channel `order()[c]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ChannelPerm(u8);

const CHANNEL_ORDERS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

impl ChannelPerm {
    pub const IDENTITY: ChannelPerm = ChannelPerm(0);

    pub fn from_index(i: u8) -> Self {
        assert!(i < 6, "channel permutation index {i} out of range");
        ChannelPerm(i)
    }

    pub fn from_order(order: [usize; 3]) -> Option<Self> {
        CHANNEL_ORDERS
            .iter()
            .position(|o| *o == order)
            .map(|i| ChannelPerm(i as u8))
    }

    pub fn all() -> impl Iterator<Item = ChannelPerm> {
        (0..6).map(ChannelPerm)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn order(self) -> [usize; 3] {
        CHANNEL_ORDERS[self.0 as usize]
    }

    pub fn inverse(self) -> Self {
        let o = self.order();
        let mut inv = [0; 3];
        for (c, &src) in o.iter().enumerate() {
            inv[src] = c;
        }
        Self::from_order(inv).unwrap()
    }
}

/// Intra-sub-block transform for one sub-block position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct SubBlockTransform {
    pub orientation: [Orientation; 3],
    pub polarity: [bool; 3],
    pub channel_perm: ChannelPerm,
}

/// Sub-block permutation plus one transform per sub-block position.
///
/// Encrypted quadrant `q` takes plaintext quadrant `subblock_perm[q]`;
/// `transforms[q]` is then applied at that encrypted position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BlockPattern {
    pub subblock_perm: [u8; 4],
    pub transforms: [SubBlockTransform; 4],
}

impl BlockPattern {
    pub const IDENTITY: BlockPattern = BlockPattern {
        subblock_perm: [0, 1, 2, 3],
        transforms: [SubBlockTransform {
            orientation: [Orientation::IDENTITY; 3],
            polarity: [false; 3],
            channel_perm: ChannelPerm::IDENTITY,
        }; 4],
    };

    pub fn encrypt_block(&self, block: &Tile) -> Tile {
        let mut quads = permute_quadrants(&block.quadrants(), &self.subblock_perm);
        for (q, t) in quads.iter_mut().zip(&self.transforms) {
            orient_channels(q, t.orientation);
            negpos_channels(q, t.polarity);
            shuffle_channels(q, t.channel_perm);
        }
        Tile::from_quadrants(&quads)
    }

    pub fn decrypt_block(&self, block: &Tile) -> Tile {
        let mut quads = block.quadrants();
        for (q, t) in quads.iter_mut().zip(&self.transforms) {
            shuffle_channels(q, t.channel_perm.inverse());
            negpos_channels(q, t.polarity);
            orient_channels(q, t.orientation.map(Orientation::inverse));
        }
        Tile::from_quadrants(&unpermute_quadrants(&quads, &self.subblock_perm))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct CipherConfig {
    /// Block side in pixels; must be even.
    pub m: usize,
    /// Probability that a polarity bit is 1.
    pub negpos_probability: f64,
    /// Draw a fresh pattern for every block instead of sharing one.
    pub per_block_pattern: bool,
}

impl Default for CipherConfig {
    fn default() -> Self {
        Self {
            m: 16,
            negpos_probability: 0.5,
            per_block_pattern: false,
        }
    }
}

impl CipherConfig {
    pub fn with_block_size(m: usize) -> Self {
        Self {
            m,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "block size must be a positive even number, got {}",
                self.m
            )));
        }
        if !(0.0..=1.0).contains(&self.negpos_probability) {
            return Err(Error::InvalidParameter(format!(
                "negpos probability {} outside [0, 1]",
                self.negpos_probability
            )));
        }
        Ok(())
    }
}

/// Everything the keys decide for one image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    /// Encrypted block position `p` holds plaintext block `block_perm[p]`.
    pub block_perm: Vec<usize>,
    /// One pattern shared by all blocks, or one per encrypted block position.
    pub patterns: Vec<BlockPattern>,
}

impl Schedule {
    pub fn pattern(&self, position: usize) -> &BlockPattern {
        if self.patterns.len() == 1 {
            &self.patterns[0]
        } else {
            &self.patterns[position]
        }
    }
}

/// One stream per key, with three channel lanes for k3 and k4.
pub struct KeyStreams<S> {
    pub k1: S,
    pub k2: S,
    pub k3: [S; 3],
    pub k4: [S; 3],
    pub k5: S,
}

impl KeyStreams<RandomStream> {
    pub fn from_keys(keys: &KeySet) -> Self {
        Self {
            k1: RandomStream::new(keys.k1),
            k2: RandomStream::new(keys.k2),
            k3: std::array::from_fn(|c| RandomStream::lane(keys.k3, c as u64)),
            k4: std::array::from_fn(|c| RandomStream::lane(keys.k4, c as u64)),
            k5: RandomStream::new(keys.k5),
        }
    }
}

impl<S: Clone> KeyStreams<S> {
    pub fn uniform(stream: S) -> Self {
        Self {
            k1: stream.clone(),
            k2: stream.clone(),
            k3: [stream.clone(), stream.clone(), stream.clone()],
            k4: [stream.clone(), stream.clone(), stream.clone()],
            k5: stream,
        }
    }
}

fn draw_pattern<S: KeyStream>(streams: &mut KeyStreams<S>, p: f64) -> BlockPattern {
    let perm = streams.k2.permutation(4);
    let mut transforms = [SubBlockTransform::default(); 4];
    for t in transforms.iter_mut() {
        for c in 0..3 {
            t.orientation[c] = Orientation::from_index(streams.k3[c].below(8) as u8);
            t.polarity[c] = streams.k4[c].bit(p);
        }
        t.channel_perm = ChannelPerm::from_index(streams.k5.below(6) as u8);
    }
    BlockPattern {
        subblock_perm: [perm[0] as u8, perm[1] as u8, perm[2] as u8, perm[3] as u8],
        transforms,
    }
}

pub fn schedule_from_streams<S: KeyStream>(
    streams: &mut KeyStreams<S>,
    n_blocks: usize,
    cfg: &CipherConfig,
) -> Schedule {
    let block_perm = streams.k1.permutation(n_blocks);
    let count = if cfg.per_block_pattern { n_blocks } else { 1 };
    let patterns = (0..count)
        .map(|_| draw_pattern(streams, cfg.negpos_probability))
        .collect();
    Schedule {
        block_perm,
        patterns,
    }
}

/// Draws the block permutation and intra-block pattern(s) for an image of `n_blocks` blocks.
pub fn generate_pattern(keys: &KeySet, cfg: &CipherConfig, n_blocks: usize) -> Result<Schedule> {
    cfg.validate()?;
    Ok(schedule_from_streams(
        &mut KeyStreams::from_keys(keys),
        n_blocks,
        cfg,
    ))
}

/// Negative-positive transform of one sample.
#[inline]
pub fn negpos(p: u8, r: bool) -> u8 {
    if r {
        p ^ 0xFF
    } else {
        p
    }
}

pub fn permute_blocks(grid: &BlockGrid, perm: &[usize]) -> BlockGrid {
    BlockGrid {
        rows: grid.rows,
        cols: grid.cols,
        block_size: grid.block_size,
        blocks: perm.iter().map(|&src| grid.blocks[src].clone()).collect(),
    }
}

pub fn unpermute_blocks(grid: &BlockGrid, perm: &[usize]) -> BlockGrid {
    permute_blocks(grid, &invert_permutation(perm))
}

pub fn permute_quadrants(quads: &[Tile; 4], perm: &[u8; 4]) -> [Tile; 4] {
    std::array::from_fn(|q| quads[perm[q] as usize].clone())
}

pub fn unpermute_quadrants(quads: &[Tile; 4], perm: &[u8; 4]) -> [Tile; 4] {
    let mut out = quads.clone();
    for (q, &src) in perm.iter().enumerate() {
        out[src as usize] = quads[q].clone();
    }
    out
}

pub fn orient_channels(tile: &mut Tile, orientation: [Orientation; 3]) {
    if orientation.iter().all(|o| *o == Orientation::IDENTITY) {
        return;
    }
    let src = tile.clone();
    let s = tile.side();
    for y in 0..s {
        for x in 0..s {
            for (c, o) in orientation.iter().enumerate() {
                let (sy, sx) = o.source(y, x, s);
                tile.set(y, x, c, src.get(sy, sx, c));
            }
        }
    }
}

pub fn negpos_channels(tile: &mut Tile, polarity: [bool; 3]) {
    for px in tile.data_mut().chunks_exact_mut(3) {
        for (v, &r) in px.iter_mut().zip(&polarity) {
            *v = negpos(*v, r);
        }
    }
}

pub fn shuffle_channels(tile: &mut Tile, perm: ChannelPerm) {
    let order = perm.order();
    for px in tile.data_mut().chunks_exact_mut(3) {
        let old = [px[0], px[1], px[2]];
        for c in 0..3 {
            px[c] = old[order[c]];
        }
    }
}

pub fn encrypt_with(img: &Image, schedule: &Schedule, cfg: &CipherConfig) -> Result<Image> {
    cfg.validate()?;
    let grid = split_blocks(img, cfg.m)?;
    check_schedule(schedule, grid.len())?;
    let blocks = schedule
        .block_perm
        .iter()
        .enumerate()
        .map(|(p, &src)| schedule.pattern(p).encrypt_block(&grid.blocks[src]))
        .collect();
    merge_blocks(&BlockGrid { blocks, ..grid })
}

pub fn decrypt_with(img: &Image, schedule: &Schedule, cfg: &CipherConfig) -> Result<Image> {
    cfg.validate()?;
    let grid = split_blocks(img, cfg.m)?;
    check_schedule(schedule, grid.len())?;
    let mut blocks = vec![Tile::filled(cfg.m, [0; 3]); grid.len()];
    for (p, &dst) in schedule.block_perm.iter().enumerate() {
        blocks[dst] = schedule.pattern(p).decrypt_block(&grid.blocks[p]);
    }
    merge_blocks(&BlockGrid { blocks, ..grid })
}

fn check_schedule(schedule: &Schedule, n: usize) -> Result<()> {
    if schedule.block_perm.len() != n || !(schedule.patterns.len() == 1 || schedule.patterns.len() == n) {
        return Err(Error::ShapeMismatch(format!(
            "schedule covers {} blocks with {} patterns, image has {n}",
            schedule.block_perm.len(),
            schedule.patterns.len()
        )));
    }
    Ok(())
}

fn blocks_in(img: &Image, m: usize) -> Result<usize> {
    crate::grid::check_divisible(img, m)?;
    Ok((img.width() / m) * (img.height() / m))
}

pub fn encrypt(img: &Image, keys: &KeySet, cfg: &CipherConfig) -> Result<Image> {
    cfg.validate()?;
    let schedule = generate_pattern(keys, cfg, blocks_in(img, cfg.m)?)?;
    encrypt_with(img, &schedule, cfg)
}

pub fn decrypt(img: &Image, keys: &KeySet, cfg: &CipherConfig) -> Result<Image> {
    cfg.validate()?;
    let schedule = generate_pattern(keys, cfg, blocks_in(img, cfg.m)?)?;
    decrypt_with(img, &schedule, cfg)
}
