//! Placement metrics for an assembly against the ground-truth arrangement,
//! and the box-plot summary used to aggregate them.
//!
//! * direct comparison: share of cells holding the right block.
//! * neighbour comparison: share of adjacent pairs whose relative offset is
//!   the one they have in the truth.
//! * largest component: size of the largest group of blocks connected by
//!   correct adjacencies, over the number of blocks.

use serde::{Deserialize, Serialize};

use crate::assembly::Assembly;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dc: f64,
    pub nc: f64,
    pub lc: f64,
}

fn check(assembly: &Assembly, truth: &Assembly) -> Result<()> {
    if assembly.rows() != truth.rows() || assembly.cols() != truth.cols() {
        return Err(Error::ShapeMismatch(format!(
            "assembly {}x{} vs truth {}x{}",
            assembly.rows(),
            assembly.cols(),
            truth.rows(),
            truth.cols()
        )));
    }
    Ok(())
}

pub fn direct_comparison(assembly: &Assembly, truth: &Assembly) -> Result<f64> {
    check(assembly, truth)?;
    let hits = assembly
        .cells()
        .iter()
        .zip(truth.cells())
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / assembly.len() as f64)
}

/// Visits every horizontally and vertically adjacent pair of the assembly
/// with a flag telling whether the truth has the same pair at the same offset.
fn for_each_adjacency(assembly: &Assembly, truth: &Assembly, mut f: impl FnMut(usize, usize, bool)) {
    let pos = truth.positions();
    let (rows, cols) = (assembly.rows(), assembly.cols());
    for r in 0..rows {
        for c in 0..cols {
            let a = assembly.at(r, c);
            if c + 1 < cols {
                let b = assembly.at(r, c + 1);
                f(a, b, pos[b] == pos[a] + 1 && pos[a] % cols + 1 < cols);
            }
            if r + 1 < rows {
                let b = assembly.at(r + 1, c);
                f(a, b, pos[b] == pos[a] + cols);
            }
        }
    }
}

pub fn neighbor_comparison(assembly: &Assembly, truth: &Assembly) -> Result<f64> {
    check(assembly, truth)?;
    let (rows, cols) = (assembly.rows(), assembly.cols());
    let total = rows * (cols - 1) + cols * (rows - 1);
    if total == 0 {
        return Ok(1.0);
    }
    let mut correct = 0usize;
    for_each_adjacency(assembly, truth, |_, _, ok| correct += ok as usize);
    Ok(correct as f64 / total as f64)
}

pub fn largest_component(assembly: &Assembly, truth: &Assembly) -> Result<f64> {
    check(assembly, truth)?;
    let n = assembly.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for_each_adjacency(assembly, truth, |a, b, ok| {
        if !ok {
            return;
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            let (big, small) = if size[ra] >= size[rb] { (ra, rb) } else { (rb, ra) };
            parent[small] = big;
            size[big] += size[small];
        }
    });
    let largest = (0..n)
        .filter(|&i| parent[i] == i)
        .map(|i| size[i])
        .max()
        .unwrap_or(0);
    Ok(largest as f64 / n as f64)
}

pub fn evaluate(assembly: &Assembly, truth: &Assembly) -> Result<MetricsReport> {
    Ok(MetricsReport {
        dc: direct_comparison(assembly, truth)?,
        nc: neighbor_comparison(assembly, truth)?,
        lc: largest_component(assembly, truth)?,
    })
}

/// Box-plot statistics with Tukey fences at 1.5 IQR.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub n: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub mean: f64,
    /// Smallest observation inside the lower fence.
    pub whisker_low: f64,
    /// Largest observation inside the upper fence.
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Quantile by linear interpolation between order statistics of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<BoxplotSummary> {
    if values.is_empty() {
        return Err(Error::Empty("cannot summarise an empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = sorted.iter().copied().filter(|v| (lo_fence..=hi_fence).contains(v));
    let whisker_low = inside.clone().next().unwrap_or(q1);
    let whisker_high = inside.last().unwrap_or(q3);
    let outliers = sorted
        .iter()
        .copied()
        .filter(|v| !(lo_fence..=hi_fence).contains(v))
        .collect();
    Ok(BoxplotSummary {
        n: sorted.len(),
        q1,
        median,
        q3,
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        whisker_low,
        whisker_high,
        outliers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: usize, cols: usize, cells: &[usize]) -> Assembly {
        Assembly::new(rows, cols, cells.to_vec()).unwrap()
    }

    #[test]
    fn two_by_two_swap() {
        let truth = Assembly::identity(2, 2);
        let a = grid(2, 2, &[1, 0, 2, 3]);
        assert_eq!(direct_comparison(&a, &truth).unwrap(), 0.5);
        assert_eq!(neighbor_comparison(&a, &truth).unwrap(), 0.25);
        assert_eq!(largest_component(&a, &truth).unwrap(), 0.5);
        let id = evaluate(&truth, &truth).unwrap();
        assert_eq!((id.dc, id.nc, id.lc), (1.0, 1.0, 1.0));
    }

    #[test]
    fn reversal_has_no_fixed_points() {
        let truth = Assembly::identity(14, 14);
        let rev = grid(14, 14, &(0..196).rev().collect::<Vec<_>>());
        assert_eq!(direct_comparison(&rev, &truth).unwrap(), 0.0);
        // reversed pairs sit at the negated offset, so nothing is joined correctly
        assert_eq!(neighbor_comparison(&rev, &truth).unwrap(), 0.0);
        assert_eq!(largest_component(&rev, &truth).unwrap(), 1.0 / 196.0);
    }

    #[test]
    fn cyclic_column_shift() {
        let truth = Assembly::identity(14, 14);
        let cells: Vec<usize> = (0..196).map(|i| (i / 14) * 14 + (i % 14 + 1) % 14).collect();
        let a = grid(14, 14, &cells);
        assert_eq!(neighbor_comparison(&a, &truth).unwrap(), 350.0 / 364.0);
        assert_eq!(direct_comparison(&a, &truth).unwrap(), 0.0);
        // the wrapped column keeps its vertical joins but is cut off from the rest
        assert_eq!(largest_component(&a, &truth).unwrap(), 182.0 / 196.0);
    }

    #[test]
    fn row_wrap_is_not_an_adjacency() {
        // ids 2 and 3 are consecutive but sit on different truth rows
        let truth = Assembly::identity(2, 3);
        let a = grid(2, 3, &[4, 2, 3, 0, 1, 5]);
        let mut pairs = Vec::new();
        for_each_adjacency(&a, &truth, |x, y, ok| pairs.push((x, y, ok)));
        assert!(pairs.contains(&(2, 3, false)));
        assert!(pairs.contains(&(0, 1, true)));
    }

    #[test]
    fn shape_mismatch() {
        assert!(evaluate(&Assembly::identity(2, 3), &Assembly::identity(3, 2)).is_err());
    }

    #[test]
    fn single_block() {
        let one = Assembly::identity(1, 1);
        let r = evaluate(&one, &one).unwrap();
        assert_eq!((r.dc, r.nc, r.lc), (1.0, 1.0, 1.0));
    }

    #[test]
    fn summary_examples() {
        let s = summarize(&[0.0; 4]).unwrap();
        assert_eq!((s.q1, s.median, s.q3, s.mean), (0.0, 0.0, 0.0, 0.0));
        assert!(s.outliers.is_empty());

        // q1 = 2.25, q3 = 4.75, upper fence 8.5
        let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0, 100.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (2.25, 3.5, 4.75));
        assert_eq!(s.outliers, vec![100.0]);
        assert_eq!((s.whisker_low, s.whisker_high), (1.0, 5.0));

        let s = summarize(&[0.5]).unwrap();
        assert_eq!((s.q1, s.median, s.q3, s.mean), (0.5, 0.5, 0.5, 0.5));
        assert!(summarize(&[]).is_err());
    }
}
