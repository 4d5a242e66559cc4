//! Square tiles and the raster-ordered block grid.

use crate::error::{Error, Result};
use crate::image::Image;

/// A square `side x side` RGB tile stored row-major and interleaved.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tile {
    side: usize,
    data: Vec<u8>,
}

impl Tile {
    pub fn new(side: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != side * side * 3 {
            return Err(Error::SizeMismatch(format!(
                "tile of side {side} needs {} bytes, got {}",
                side * side * 3,
                data.len()
            )));
        }
        Ok(Self { side, data })
    }

    pub fn filled(side: usize, rgb: [u8; 3]) -> Self {
        Self {
            side,
            data: rgb.iter().copied().cycle().take(side * side * 3).collect(),
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> u8 {
        self.data[(y * self.side + x) * 3 + c]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: u8) {
        self.data[(y * self.side + x) * 3 + c] = v;
    }

    /// Cuts the `side x side` window with top-left corner `(x0, y0)` out of a larger tile.
    pub fn crop(&self, x0: usize, y0: usize, side: usize) -> Tile {
        let mut data = Vec::with_capacity(side * side * 3);
        for y in y0..y0 + side {
            let start = (y * self.side + x0) * 3;
            data.extend_from_slice(&self.data[start..start + side * 3]);
        }
        Tile { side, data }
    }

    /// Copies `src` into this tile with its top-left corner at `(x0, y0)`.
    pub fn paste(&mut self, src: &Tile, x0: usize, y0: usize) {
        let s = src.side;
        for y in 0..s {
            let dst = ((y0 + y) * self.side + x0) * 3;
            self.data[dst..dst + s * 3].copy_from_slice(&src.data[y * s * 3..(y + 1) * s * 3]);
        }
    }

    /// Splits into the four quadrants in raster order: top-left, top-right, bottom-left, bottom-right.
    pub fn quadrants(&self) -> [Tile; 4] {
        let h = self.side / 2;
        [
            self.crop(0, 0, h),
            self.crop(h, 0, h),
            self.crop(0, h, h),
            self.crop(h, h, h),
        ]
    }

    /// Inverse of [`Tile::quadrants`].
    pub fn from_quadrants(quads: &[Tile; 4]) -> Tile {
        let h = quads[0].side;
        let mut out = Tile::filled(2 * h, [0; 3]);
        for (i, q) in quads.iter().enumerate() {
            out.paste(q, (i % 2) * h, (i / 2) * h);
        }
        out
    }
}

/// Blocks of an image in row-major raster order, top-left first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockGrid {
    pub rows: usize,
    pub cols: usize,
    pub block_size: usize,
    pub blocks: Vec<Tile>,
}

impl BlockGrid {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// Checks that both image dimensions are multiples of `m`.
pub fn check_divisible(img: &Image, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParameter("block size must be positive".into()));
    }
    if img.width() % m != 0 {
        return Err(Error::NotDivisible {
            dimension: "width",
            size: img.width(),
            block: m,
        });
    }
    if img.height() % m != 0 {
        return Err(Error::NotDivisible {
            dimension: "height",
            size: img.height(),
            block: m,
        });
    }
    Ok(())
}

pub fn split_blocks(img: &Image, m: usize) -> Result<BlockGrid> {
    check_divisible(img, m)?;
    let (rows, cols) = (img.height() / m, img.width() / m);
    let stride = img.width() * 3;
    let mut blocks = Vec::with_capacity(rows * cols);
    for br in 0..rows {
        for bc in 0..cols {
            let mut data = Vec::with_capacity(m * m * 3);
            for y in 0..m {
                let start = (br * m + y) * stride + bc * m * 3;
                data.extend_from_slice(&img.data()[start..start + m * 3]);
            }
            blocks.push(Tile { side: m, data });
        }
    }
    Ok(BlockGrid {
        rows,
        cols,
        block_size: m,
        blocks,
    })
}

pub fn merge_blocks(grid: &BlockGrid) -> Result<Image> {
    let m = grid.block_size;
    let expected = grid.rows * grid.cols;
    if grid.blocks.len() != expected {
        return Err(Error::IncompleteGrid {
            rows: grid.rows,
            cols: grid.cols,
            expected,
            actual: grid.blocks.len(),
        });
    }
    if let Some((index, t)) = grid.blocks.iter().enumerate().find(|(_, t)| t.side != m) {
        return Err(Error::TileSize {
            index,
            expected: m,
            actual: t.side,
        });
    }
    let (w, h) = (grid.cols * m, grid.rows * m);
    let stride = w * 3;
    let mut data = vec![0u8; w * h * 3];
    for (i, tile) in grid.blocks.iter().enumerate() {
        let (br, bc) = (i / grid.cols, i % grid.cols);
        for y in 0..m {
            let start = (br * m + y) * stride + bc * m * 3;
            data[start..start + m * 3].copy_from_slice(&tile.data[y * m * 3..(y + 1) * m * 3]);
        }
    }
    Image::new(w, h, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_sizes() {
        let g = split_blocks(&Image::filled(224, 224, [1, 2, 3]), 16).unwrap();
        assert_eq!((g.rows, g.cols, g.len()), (14, 14, 196));
        let g = split_blocks(&Image::filled(32, 32, [1, 2, 3]), 16).unwrap();
        assert_eq!((g.rows, g.cols, g.len()), (2, 2, 4));
    }

    #[test]
    fn indivisible_dimension_is_named() {
        let err = split_blocks(&Image::filled(224, 225, [0; 3]), 16).unwrap_err();
        assert!(matches!(err, Error::NotDivisible { dimension: "height", size: 225, .. }));
        let err = split_blocks(&Image::filled(20, 32, [0; 3]), 16).unwrap_err();
        assert!(matches!(err, Error::NotDivisible { dimension: "width", .. }));
    }

    #[test]
    fn single_tile_grid_is_the_tile() {
        let tile = Tile::new(16, (0..16 * 16 * 3).map(|v| v as u8).collect()).unwrap();
        let grid = BlockGrid {
            rows: 1,
            cols: 1,
            block_size: 16,
            blocks: vec![tile.clone()],
        };
        let img = merge_blocks(&grid).unwrap();
        assert_eq!((img.width(), img.height()), (16, 16));
        assert_eq!(img.data(), tile.data());
    }

    #[test]
    fn merge_rejects_bad_grids() {
        let mut grid = split_blocks(&Image::filled(32, 32, [9; 3]), 16).unwrap();
        grid.blocks[2] = Tile::filled(8, [0; 3]);
        assert!(matches!(merge_blocks(&grid), Err(Error::TileSize { index: 2, .. })));
        grid.blocks.pop();
        assert!(matches!(merge_blocks(&grid), Err(Error::IncompleteGrid { actual: 3, .. })));
    }

    #[test]
    fn quadrants_round_trip() {
        let tile = Tile::new(16, (0..16 * 16 * 3).map(|v| (v * 7) as u8).collect()).unwrap();
        let q = tile.quadrants();
        assert_eq!(q[1].get(0, 0, 0), tile.get(0, 8, 0));
        assert_eq!(q[2].get(0, 0, 1), tile.get(8, 0, 1));
        assert_eq!(Tile::from_quadrants(&q), tile);
    }

    proptest! {
        #[test]
        fn split_merge_round_trip(
            rows in 1usize..5,
            cols in 1usize..5,
            m in prop::sample::select(vec![2usize, 4, 6, 8, 16]),
            seed in any::<u64>(),
        ) {
            let mut s = seed | 1;
            let img = Image::from_fn(cols * m, rows * m, |_, _| {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                [s as u8, (s >> 8) as u8, (s >> 16) as u8]
            });
            let grid = split_blocks(&img, m).unwrap();
            prop_assert_eq!(grid.len(), rows * cols);
            prop_assert_eq!(merge_blocks(&grid).unwrap(), img);
        }
    }
}
