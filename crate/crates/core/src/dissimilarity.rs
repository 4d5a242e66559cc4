//! Edge dissimilarity between two tiles placed side by side.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::Tile;

/// Where the second tile sits relative to the first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Top, Side::Bottom];

    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::Top => Side::Bottom,
            Side::Bottom => Side::Top,
        }
    }
}

/// Pixel coordinate `(y, x)` of the `i`-th sample along `side`, `depth` rows inward.
/// Samples run top-to-bottom on vertical sides and left-to-right on horizontal ones.
#[inline]
pub fn edge_coord(side: Side, n: usize, i: usize, depth: usize) -> (usize, usize) {
    match side {
        Side::Left => (i, depth),
        Side::Right => (i, n - 1 - depth),
        Side::Top => (depth, i),
        Side::Bottom => (n - 1 - depth, i),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Sum of squared differences across the shared edge.
    #[default]
    Ssd,
    /// Mahalanobis gradient compatibility: the gradient across the seam is
    /// scored against the distribution of gradients just inside each tile.
    Mgc,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Ssd => "ssd",
            Metric::Mgc => "mgc",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ssd" => Ok(Metric::Ssd),
            "mgc" => Ok(Metric::Mgc),
            other => Err(Error::InvalidParameter(format!("unknown metric {other:?}"))),
        }
    }
}

/// Raw integer SSD over the seam between `a` and `b`, with `b` on `side` of `a`.
pub fn seam_ssd(a: &Tile, b: &Tile, side: Side) -> u64 {
    let n = a.side();
    let mut total = 0u64;
    for i in 0..n {
        let (ay, ax) = edge_coord(side, n, i, 0);
        let (by, bx) = edge_coord(side.opposite(), n, i, 0);
        for c in 0..3 {
            let d = a.get(ay, ax, c) as i64 - b.get(by, bx, c) as i64;
            total += (d * d) as u64;
        }
    }
    total
}

/// One-directional MGC term: how unlikely the seam gradient is under `a`'s edge gradients.
fn mgc_one_way(a: &Tile, b: &Tile, side: Side) -> f64 {
    let n = a.side();
    let grads: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let (y0, x0) = edge_coord(side, n, i, 0);
            let (y1, x1) = edge_coord(side, n, i, 1.min(n - 1));
            std::array::from_fn(|c| a.get(y0, x0, c) as f64 - a.get(y1, x1, c) as f64)
        })
        .collect();
    let mean: [f64; 3] = std::array::from_fn(|c| grads.iter().map(|g| g[c]).sum::<f64>() / n as f64);
    let mut cov = [[0.0f64; 3]; 3];
    for g in &grads {
        for r in 0..3 {
            for c in 0..3 {
                cov[r][c] += (g[r] - mean[r]) * (g[c] - mean[c]);
            }
        }
    }
    for (r, row) in cov.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v /= (n.max(2) - 1) as f64;
        }
        // ridge keeps flat edges invertible
        row[r] += 1.0;
    }
    let inv = invert3(&cov);
    let mut total = 0.0;
    for i in 0..n {
        let (ay, ax) = edge_coord(side, n, i, 0);
        let (by, bx) = edge_coord(side.opposite(), n, i, 0);
        let d: [f64; 3] =
            std::array::from_fn(|c| b.get(by, bx, c) as f64 - a.get(ay, ax, c) as f64 - mean[c]);
        for r in 0..3 {
            for c in 0..3 {
                total += d[r] * inv[r][c] * d[c];
            }
        }
    }
    total
}

fn invert3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let inv_det = 1.0 / det;
    let mut out = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
            let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
            out[r][c] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) * inv_det;
        }
    }
    out
}

/// Un-normalised dissimilarity used to fill compatibility tables.
pub fn seam_score(a: &Tile, b: &Tile, side: Side, metric: Metric) -> f64 {
    match metric {
        Metric::Ssd => seam_ssd(a, b, side) as f64,
        Metric::Mgc => mgc_one_way(a, b, side) + mgc_one_way(b, a, side.opposite()),
    }
}

/// Per-sample SSD across the seam between `a` and its neighbour `b` on `side`,
/// divided by the edge length.
pub fn boundary_dissimilarity(a: &Tile, b: &Tile, side: Side) -> Result<f64> {
    if a.side() != b.side() {
        return Err(Error::SizeMismatch(format!(
            "edge lengths differ: {} vs {}",
            a.side(),
            b.side()
        )));
    }
    Ok(seam_ssd(a, b, side) as f64 / a.side() as f64)
}
