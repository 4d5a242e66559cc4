//! Placement of block identifiers on a grid, as produced by the solver.

use std::io::{Read, Write};

use crate::cipher::Orientation;
use crate::error::{Error, Result};

/// Row-major grid of block ids; every id in `0..rows*cols` appears exactly once.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assembly {
    rows: usize,
    cols: usize,
    cells: Vec<usize>,
}

impl Assembly {
    pub fn new(rows: usize, cols: usize, cells: Vec<usize>) -> Result<Self> {
        if cells.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} assembly given {} cells",
                cells.len()
            )));
        }
        if !crate::stream::is_permutation(&cells) {
            return Err(Error::InvalidParameter(
                "assembly must contain every block id exactly once".into(),
            ));
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn identity(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cells: (0..rows * cols).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn at(&self, row: usize, col: usize) -> usize {
        self.cells[row * self.cols + col]
    }

    /// `positions()[id]` is the cell index holding `id`.
    pub fn positions(&self) -> Vec<usize> {
        crate::stream::invert_permutation(&self.cells)
    }

    /// Renames every id through `map` (which must be a permutation).
    pub fn relabeled(&self, map: &[usize]) -> Result<Self> {
        Self::new(self.rows, self.cols, self.cells.iter().map(|&id| map[id]).collect())
    }

    /// The grid seen through a rotation/mirror of the whole frame.
    ///
    /// Quarter turns need a square grid.
    pub fn transformed(&self, o: Orientation) -> Result<Self> {
        if o.rotation() % 2 == 1 && self.rows != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "cannot rotate a {}x{} grid by a quarter turn",
                self.rows, self.cols
            )));
        }
        let mut cells = vec![0; self.cells.len()];
        if self.rows == self.cols {
            let n = self.rows;
            for y in 0..n {
                for x in 0..n {
                    let (sy, sx) = o.source(y, x, n);
                    cells[y * n + x] = self.cells[sy * n + sx];
                }
            }
        } else {
            // half turn and mirrors on a rectangle
            for y in 0..self.rows {
                for x in 0..self.cols {
                    let (mut sy, mut sx) = (y, x);
                    if o.rotation() == 2 {
                        sy = self.rows - 1 - sy;
                        sx = self.cols - 1 - sx;
                    }
                    if o.flipped() {
                        sx = self.cols - 1 - sx;
                    }
                    cells[y * self.cols + x] = self.cells[sy * self.cols + sx];
                }
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            cells,
        })
    }

    /// CSV grid: one line per row, ids separated by commas.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for row in self.cells.chunks(self.cols) {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(input: impl Read) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut cells = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for rec in r.records() {
            let rec = rec?;
            match cols {
                None => cols = Some(rec.len()),
                Some(c) if c != rec.len() => {
                    return Err(Error::ShapeMismatch(format!(
                        "row {rows} has {} entries, expected {c}",
                        rec.len()
                    )))
                }
                _ => {}
            }
            for field in rec.iter() {
                cells.push(field.parse::<usize>().map_err(|e| {
                    Error::InvalidParameter(format!("bad block id {field:?}: {e}"))
                })?);
            }
            rows += 1;
        }
        Self::new(rows, cols.unwrap_or(0), cells)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}
