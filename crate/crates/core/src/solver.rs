//! Second attack stage: reassemble shuffled blocks with a genetic algorithm
//! over complete placements, using kernel-growing crossover.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::assembly::Assembly;
use crate::dissimilarity::{seam_score, Metric, Side};
use crate::error::{Error, Result};
use crate::grid::Tile;
use crate::stream::{KeyStream, RandomStream};

/// Placement of `j` relative to `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    RightOf,
    LeftOf,
    Below,
    Above,
}

impl Relation {
    pub const ALL: [Relation; 4] = [Relation::RightOf, Relation::LeftOf, Relation::Below, Relation::Above];

    pub fn mirror(self) -> Relation {
        match self {
            Relation::RightOf => Relation::LeftOf,
            Relation::LeftOf => Relation::RightOf,
            Relation::Below => Relation::Above,
            Relation::Above => Relation::Below,
        }
    }

    /// Grid offset `(drow, dcol)` of `j` from `i`.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Relation::RightOf => (0, 1),
            Relation::LeftOf => (0, -1),
            Relation::Below => (1, 0),
            Relation::Above => (-1, 0),
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Pairwise dissimilarities for every ordered pair of distinct blocks and
/// every relation, with best-match lists.
#[derive(Clone, Debug)]
pub struct CompatibilityTable {
    n: usize,
    /// `right[i * n + j]`: cost of `j` directly right of `i`.
    right: Vec<f64>,
    /// `below[i * n + j]`: cost of `j` directly below `i`.
    below: Vec<f64>,
    /// Per relation and block: other blocks by ascending cost, ties by index.
    sorted: [Vec<Vec<u32>>; 4],
}

impl CompatibilityTable {
    /// Builds a table from explicit right-of and below costs, each `n * n`
    /// row-major. Diagonal entries are ignored.
    pub fn from_costs(n: usize, mut right: Vec<f64>, mut below: Vec<f64>) -> Result<Self> {
        if right.len() != n * n || below.len() != n * n {
            return Err(Error::SizeMismatch(format!("cost tables must hold {} entries", n * n)));
        }
        if right.iter().chain(&below).any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::InvalidParameter("costs must be non-negative numbers".into()));
        }
        for i in 0..n {
            right[i * n + i] = f64::INFINITY;
            below[i * n + i] = f64::INFINITY;
        }
        let mut table = Self {
            n,
            right,
            below,
            sorted: Default::default(),
        };
        table.sorted = Relation::ALL.map(|rel| {
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut others: Vec<u32> = (0..n as u32).filter(|&j| j as usize != i).collect();
                    others.sort_by(|&a, &b| {
                        table.score(i, a as usize, rel).total_cmp(&table.score(i, b as usize, rel)).then(a.cmp(&b))
                    });
                    others
                })
                .collect()
        });
        Ok(table)
    }

    pub fn len(&self) -> usize {
        4 * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn blocks(&self) -> usize {
        self.n
    }

    /// Cost of placing `j` in relation `rel` to `i`; infinite when `i == j`.
    pub fn score(&self, i: usize, j: usize, rel: Relation) -> f64 {
        let n = self.n;
        match rel {
            Relation::RightOf => self.right[i * n + j],
            Relation::LeftOf => self.right[j * n + i],
            Relation::Below => self.below[i * n + j],
            Relation::Above => self.below[j * n + i],
        }
    }

    /// Candidates for `rel` of `i`, best first.
    pub fn ranked(&self, i: usize, rel: Relation) -> &[u32] {
        &self.sorted[rel.index()][i]
    }

    pub fn best_match(&self, i: usize, rel: Relation) -> Option<usize> {
        self.ranked(i, rel).first().map(|&j| j as usize)
    }

    pub fn is_best_buddy(&self, i: usize, j: usize, rel: Relation) -> bool {
        self.best_match(i, rel) == Some(j) && self.best_match(j, rel.mirror()) == Some(i)
    }

    pub fn best_buddy(&self, i: usize, rel: Relation) -> Option<usize> {
        self.best_match(i, rel).filter(|&j| self.best_match(j, rel.mirror()) == Some(i))
    }
}

/// Scores every ordered block pair along the seam between them.
pub fn build_compatibility(blocks: &[Tile], metric: Metric) -> Result<CompatibilityTable> {
    if blocks.len() < 2 {
        return Err(Error::InvalidParameter("at least two blocks are needed".into()));
    }
    let side = blocks[0].side();
    if let Some((i, b)) = blocks.iter().enumerate().find(|(_, b)| b.side() != side) {
        return Err(Error::TileSize {
            index: i,
            expected: side,
            actual: b.side(),
        });
    }
    let n = blocks.len();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = vec![0.0; n];
            let mut b = vec![0.0; n];
            for j in (0..n).filter(|&j| j != i) {
                r[j] = seam_score(&blocks[i], &blocks[j], Side::Right, metric);
                b[j] = seam_score(&blocks[i], &blocks[j], Side::Bottom, metric);
            }
            (r, b)
        })
        .collect();
    let (right, below): (Vec<Vec<f64>>, Vec<Vec<f64>>) = rows.into_iter().unzip();
    CompatibilityTable::from_costs(n, right.concat(), below.concat())
}

/// Sum of costs over every horizontally and vertically adjacent pair.
pub fn fitness(assembly: &Assembly, table: &CompatibilityTable) -> f64 {
    placement_cost(assembly.cells(), assembly.rows(), assembly.cols(), table)
}

fn placement_cost(cells: &[usize], rows: usize, cols: usize, table: &CompatibilityTable) -> f64 {
    let mut total = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let a = cells[r * cols + c];
            if c + 1 < cols {
                total += table.score(a, cells[r * cols + c + 1], Relation::RightOf);
            }
            if r + 1 < rows {
                total += table.score(a, cells[(r + 1) * cols + c], Relation::Below);
            }
        }
    }
    total
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GaParams {
    pub population_size: usize,
    pub generations: usize,
    pub elite_fraction: f64,
    pub mutation_rate: f64,
    pub random_seed: u64,
    /// Stop after this much wall time and return the best so far.
    #[serde(with = "opt_secs")]
    pub time_limit: Option<Duration>,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population_size: 300,
            generations: 60,
            elite_fraction: 0.05,
            mutation_rate: 0.05,
            random_seed: 0,
            time_limit: None,
        }
    }
}

mod opt_secs {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        d.map(|d| d.as_secs_f64()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.map(Duration::from_secs_f64))
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::InvalidParameter("population must be at least 2".into()));
        }
        for (name, v) in [("elite_fraction", self.elite_fraction), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    fn elites(&self) -> usize {
        ((self.elite_fraction * self.population_size as f64).round() as usize).clamp(1, self.population_size)
    }
}

#[derive(Clone, Debug)]
pub struct GaOutcome {
    pub assembly: Assembly,
    pub fitness: f64,
    /// Best fitness after initialisation and after each generation.
    pub history: Vec<f64>,
    pub timed_out: bool,
}

/// Runs the genetic algorithm and returns the fittest placement.
pub fn ga_solve(table: &CompatibilityTable, rows: usize, cols: usize, params: &GaParams) -> Result<Assembly> {
    ga_solve_detailed(table, rows, cols, params).map(|o| o.assembly)
}

pub fn ga_solve_detailed(
    table: &CompatibilityTable,
    rows: usize,
    cols: usize,
    params: &GaParams,
) -> Result<GaOutcome> {
    params.validate()?;
    let n = table.blocks();
    if rows * cols != n {
        return Err(Error::ShapeMismatch(format!("{rows}x{cols} frame for {n} blocks")));
    }
    let start = Instant::now();
    let seed = params.random_seed;
    let evaluate = |cells: Vec<usize>| {
        let f = placement_cost(&cells, rows, cols, table);
        Individual { cells, fitness: f }
    };

    let mut population: Vec<Individual> = (0..params.population_size)
        .into_par_iter()
        .map(|idx| {
            let mut rng = RandomStream::derived(&[seed, 0, idx as u64]);
            evaluate(rng.permutation(n))
        })
        .collect();
    sort_population(&mut population);
    let mut history = vec![population[0].fitness];
    let mut timed_out = false;

    for generation in 1..=params.generations as u64 {
        if params.time_limit.is_some_and(|limit| start.elapsed() >= limit) {
            timed_out = true;
            break;
        }
        if n == 1 {
            history.push(population[0].fitness);
            continue;
        }
        let elites = params.elites();
        let neighbours: Vec<Neighbours> = population.par_iter().map(|p| Neighbours::new(&p.cells, rows, cols)).collect();
        let wheel = Roulette::new(&population);
        let children: Vec<Individual> = (elites..params.population_size)
            .into_par_iter()
            .map(|idx| {
                let mut rng = RandomStream::derived(&[seed, generation, idx as u64]);
                let a = wheel.spin(&mut rng);
                let b = wheel.spin(&mut rng);
                let child = Crossover::new(table, rows, cols, &neighbours[a], &neighbours[b], params.mutation_rate)
                    .grow(&mut rng);
                evaluate(child)
            })
            .collect();
        population.truncate(elites);
        population.extend(children);
        sort_population(&mut population);
        history.push(population[0].fitness);
    }

    let best = population.swap_remove(0);
    Ok(GaOutcome {
        assembly: Assembly::new(rows, cols, best.cells)?,
        fitness: best.fitness,
        history,
        timed_out,
    })
}

#[derive(Clone, Debug)]
struct Individual {
    cells: Vec<usize>,
    fitness: f64,
}

fn sort_population(pop: &mut [Individual]) {
    pop.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
}

struct Roulette {
    cumulative: Vec<f64>,
}

impl Roulette {
    fn new(pop: &[Individual]) -> Self {
        let mut acc = 0.0;
        let cumulative = pop
            .iter()
            .map(|p| {
                acc += 1.0 / p.fitness.max(1e-9);
                acc
            })
            .collect();
        Self { cumulative }
    }

    fn spin(&self, rng: &mut impl KeyStream) -> usize {
        let total = *self.cumulative.last().unwrap();
        let target = rng.unit() * total;
        self.cumulative.partition_point(|&c| c <= target).min(self.cumulative.len() - 1)
    }
}

const NONE: u32 = u32::MAX;

/// For every piece, the piece next to it in each relation (or `NONE`).
struct Neighbours {
    next: [Vec<u32>; 4],
}

impl Neighbours {
    fn new(cells: &[usize], rows: usize, cols: usize) -> Self {
        let n = cells.len();
        let mut next = [vec![NONE; n], vec![NONE; n], vec![NONE; n], vec![NONE; n]];
        for r in 0..rows {
            for c in 0..cols {
                let a = cells[r * cols + c];
                if c + 1 < cols {
                    let b = cells[r * cols + c + 1];
                    next[Relation::RightOf.index()][a] = b as u32;
                    next[Relation::LeftOf.index()][b] = a as u32;
                }
                if r + 1 < rows {
                    let b = cells[(r + 1) * cols + c];
                    next[Relation::Below.index()][a] = b as u32;
                    next[Relation::Above.index()][b] = a as u32;
                }
            }
        }
        Self { next }
    }

    fn get(&self, piece: usize, rel: Relation) -> Option<usize> {
        let v = self.next[rel.index()][piece];
        (v != NONE).then_some(v as usize)
    }
}

/// Grows one child on a board twice the frame size, centred on a seed piece.
struct Crossover<'a> {
    table: &'a CompatibilityTable,
    rows: usize,
    cols: usize,
    width: usize,
    a: &'a Neighbours,
    b: &'a Neighbours,
    mutation_rate: f64,
    board: Vec<u32>,
    placed_at: Vec<u32>,
    placed: usize,
    bounds: (usize, usize, usize, usize),
    cursors: Vec<u32>,
    agreed: Vec<(u32, u32)>,
    buddies: Vec<(u32, u32)>,
    open: Vec<u32>,
    is_open: Vec<bool>,
    cache: Vec<SlotBest>,
}

/// Winning proposal for an open slot, valid while the slot gains no
/// neighbour and none of the proposed pieces is placed.
#[derive(Clone, Copy)]
struct SlotBest {
    valid: bool,
    cost: f64,
    piece: u32,
    proposals: [u32; 4],
}

const STALE: SlotBest = SlotBest {
    valid: false,
    cost: 0.0,
    piece: NONE,
    proposals: [NONE; 4],
};

impl<'a> Crossover<'a> {
    fn new(
        table: &'a CompatibilityTable,
        rows: usize,
        cols: usize,
        a: &'a Neighbours,
        b: &'a Neighbours,
        mutation_rate: f64,
    ) -> Self {
        let n = table.blocks();
        let (h, w) = (2 * rows - 1, 2 * cols - 1);
        Self {
            table,
            rows,
            cols,
            width: w,
            a,
            b,
            mutation_rate,
            board: vec![NONE; h * w],
            placed_at: vec![NONE; n],
            placed: 0,
            bounds: (usize::MAX, 0, usize::MAX, 0),
            cursors: vec![0; 4 * n],
            agreed: Vec::new(),
            buddies: Vec::new(),
            open: Vec::new(),
            is_open: vec![false; h * w],
            cache: vec![STALE; h * w],
        }
    }

    fn grow(mut self, rng: &mut RandomStream) -> Vec<usize> {
        let n = self.table.blocks();
        let first = rng.below(n as u64) as usize;
        self.place(first, (self.rows - 1) * self.width + self.cols - 1);
        while self.placed < n {
            if let Some((slot, piece)) = self.take_listed(true, rng).or_else(|| self.take_listed(false, rng)) {
                self.place(piece, slot);
                continue;
            }
            let (slot, piece) = self.most_compatible();
            self.place(piece, slot);
        }
        let (r0, _, c0, _) = self.bounds;
        let mut cells = vec![0usize; n];
        for (piece, &at) in self.placed_at.iter().enumerate() {
            let (r, c) = (at as usize / self.width, at as usize % self.width);
            cells[(r - r0) * self.cols + (c - c0)] = piece;
        }
        cells
    }

    fn fits(&self, slot: usize) -> bool {
        let (r, c) = (slot / self.width, slot % self.width);
        let (r0, r1, c0, c1) = self.bounds;
        r1.max(r) - r0.min(r) < self.rows && c1.max(c) - c0.min(c) < self.cols
    }

    fn free(&self, slot: usize, piece: usize) -> bool {
        self.board[slot] == NONE && self.placed_at[piece] == NONE && self.fits(slot)
    }

    fn step(&self, slot: usize, rel: Relation) -> Option<usize> {
        let (r, c) = ((slot / self.width) as isize, (slot % self.width) as isize);
        let (dr, dc) = rel.offset();
        let (nr, nc) = (r + dr, c + dc);
        let h = (self.board.len() / self.width) as isize;
        (nr >= 0 && nc >= 0 && nr < h && nc < self.width as isize).then(|| nr as usize * self.width + nc as usize)
    }

    /// Pops a random still-valid entry from the agreement or best-buddy list.
    fn take_listed(&mut self, agreed: bool, rng: &mut RandomStream) -> Option<(usize, usize)> {
        loop {
            let list = if agreed { &mut self.agreed } else { &mut self.buddies };
            if list.is_empty() {
                return None;
            }
            let i = rng.below(list.len() as u64) as usize;
            let (slot, piece) = list.swap_remove(i);
            let (slot, piece) = (slot as usize, piece as usize);
            if !self.free(slot, piece) {
                continue;
            }
            if rng.unit() < self.mutation_rate {
                let unused: Vec<usize> = (0..self.placed_at.len()).filter(|&p| self.placed_at[p] == NONE).collect();
                return Some((slot, unused[rng.below(unused.len() as u64) as usize]));
            }
            return Some((slot, piece));
        }
    }

    fn place(&mut self, piece: usize, slot: usize) {
        self.board[slot] = piece as u32;
        self.placed_at[piece] = slot as u32;
        self.placed += 1;
        self.is_open[slot] = false;
        let (r, c) = (slot / self.width, slot % self.width);
        let b = &mut self.bounds;
        *b = (b.0.min(r), b.1.max(r), b.2.min(c), b.3.max(c));

        for rel in Relation::ALL {
            let Some(next) = self.step(slot, rel) else { continue };
            if self.board[next] != NONE {
                continue;
            }
            self.cache[next].valid = false;
            if !self.is_open[next] {
                self.is_open[next] = true;
                self.open.push(next as u32);
            }
            let pa = self.a.get(piece, rel);
            if pa.is_some() && pa == self.b.get(piece, rel) {
                self.agreed.push((next as u32, pa.unwrap() as u32));
            }
            if let Some(buddy) = self.table.best_buddy(piece, rel) {
                if self.a.get(piece, rel) == Some(buddy) || self.b.get(piece, rel) == Some(buddy) {
                    self.buddies.push((next as u32, buddy as u32));
                }
            }
        }
    }

    /// First unused piece in a neighbour's ranking.
    fn first_unused(&mut self, piece: usize, rel: Relation) -> usize {
        let key = piece * 4 + rel.index();
        let ranked = self.table.ranked(piece, rel);
        let mut k = self.cursors[key] as usize;
        while self.placed_at[ranked[k] as usize] != NONE {
            k += 1;
        }
        self.cursors[key] = k as u32;
        ranked[k] as usize
    }

    /// Best (slot, piece) over open slots: each placed neighbour proposes its
    /// best unused match; candidates are scored by mean cost to all placed
    /// neighbours of the slot. Ties go to the lower piece, then the lower slot.
    fn most_compatible(&mut self) -> (usize, usize) {
        let mut best: Option<(f64, usize, usize)> = None;
        let mut i = 0;
        while i < self.open.len() {
            let slot = self.open[i] as usize;
            if self.board[slot] != NONE || !self.fits(slot) {
                self.is_open[slot] = false;
                self.open.swap_remove(i);
                continue;
            }
            i += 1;
            let cached = self.cache[slot];
            let fresh = cached.valid
                && cached
                    .proposals
                    .iter()
                    .all(|&p| p == NONE || self.placed_at[p as usize] == NONE);
            let SlotBest { cost, piece, .. } = if fresh { cached } else { self.slot_best(slot) };
            let piece = piece as usize;
            let better = match best {
                None => true,
                Some((c, s, p)) => cost < c || (cost == c && (piece, slot) < (p, s)),
            };
            if better {
                best = Some((cost, slot, piece));
            }
        }
        let (_, slot, piece) = best.expect("an open slot always exists while pieces remain");
        (slot, piece)
    }

    fn slot_best(&mut self, slot: usize) -> SlotBest {
        let mut around = [(0usize, Relation::RightOf); 4];
        let mut count = 0;
        for rel in Relation::ALL {
            if let Some(nb) = self.step(slot, rel) {
                let p = self.board[nb];
                if p != NONE {
                    // the slot sits in relation `rel.mirror()` to that neighbour
                    around[count] = (p as usize, rel.mirror());
                    count += 1;
                }
            }
        }
        let mut out = SlotBest {
            valid: true,
            cost: f64::INFINITY,
            ..STALE
        };
        for k in 0..count {
            let (nb, rel) = around[k];
            let cand = self.first_unused(nb, rel);
            out.proposals[k] = cand as u32;
            let cost = around[..count].iter().map(|&(p, r)| self.table.score(p, cand, r)).sum::<f64>() / count as f64;
            if out.piece == NONE || cost < out.cost || (cost == out.cost && (cand as u32) < out.piece) {
                out.cost = cost;
                out.piece = cand as u32;
            }
        }
        self.cache[slot] = out;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::split_blocks;

    fn identity_table(rows: usize, cols: usize) -> CompatibilityTable {
        let n = rows * cols;
        let mut right = vec![1.0; n * n];
        let mut below = vec![1.0; n * n];
        for i in 0..n {
            if i % cols + 1 < cols {
                right[i * n + i + 1] = 0.0;
            }
            if i + cols < n {
                below[i * n + i + cols] = 0.0;
            }
        }
        CompatibilityTable::from_costs(n, right, below).unwrap()
    }

    #[test]
    fn relations_mirror() {
        for rel in Relation::ALL {
            assert_eq!(rel.mirror().mirror(), rel);
            let (a, b) = rel.offset();
            assert_eq!(rel.mirror().offset(), (-a, -b));
        }
    }

    #[test]
    fn table_size_and_mirror_symmetry() {
        let img = crate::synth::scene(64, 48, 2);
        let blocks = split_blocks(&img, 16).unwrap().blocks;
        let t = build_compatibility(&blocks, Metric::Ssd).unwrap();
        assert_eq!(t.len(), 4 * 12 * 12);
        for i in 0..12 {
            for j in (0..12).filter(|&j| j != i) {
                assert_eq!(t.score(i, j, Relation::RightOf), t.score(j, i, Relation::LeftOf));
                assert_eq!(t.score(i, j, Relation::Below), t.score(j, i, Relation::Above));
                for rel in Relation::ALL {
                    assert_eq!(t.is_best_buddy(i, j, rel), t.is_best_buddy(j, i, rel.mirror()));
                }
            }
        }
    }

    #[test]
    fn gradient_neighbour_is_best_match() {
        let img = crate::image::Image::from_fn(64, 64, |x, y| [(x * 3 + y) as u8, (y * 2) as u8, (x + 2 * y) as u8]);
        let blocks = split_blocks(&img, 16).unwrap().blocks;
        let t = build_compatibility(&blocks, Metric::Ssd).unwrap();
        for i in [5usize, 6, 9, 10] {
            assert_eq!(t.best_match(i, Relation::RightOf), Some(i + 1));
            assert_eq!(t.best_match(i, Relation::Below), Some(i + 4));
        }
    }

    #[test]
    fn constant_blocks_tie_to_lowest_index() {
        let blocks = vec![Tile::filled(4, [9, 9, 9]); 2];
        let t = build_compatibility(&blocks, Metric::Ssd).unwrap();
        assert_eq!(t.len(), 16);
        for rel in Relation::ALL {
            assert_eq!(t.score(0, 1, rel), 0.0);
            assert!(t.is_best_buddy(0, 1, rel));
        }
        let blocks = vec![Tile::filled(4, [9, 9, 9]); 3];
        let t = build_compatibility(&blocks, Metric::Ssd).unwrap();
        assert_eq!(t.best_match(2, Relation::RightOf), Some(0));
        assert!(!t.is_best_buddy(2, 0, Relation::RightOf));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_compatibility(&[Tile::filled(4, [0; 3])], Metric::Ssd).is_err());
        let mixed = vec![Tile::filled(4, [0; 3]), Tile::filled(6, [0; 3])];
        assert!(matches!(build_compatibility(&mixed, Metric::Ssd), Err(Error::TileSize { index: 1, .. })));
        let t = identity_table(2, 2);
        assert!(ga_solve(&t, 3, 2, &GaParams::default()).is_err());
        let bad = GaParams { population_size: 1, ..GaParams::default() };
        assert!(ga_solve(&t, 2, 2, &bad).is_err());
        let bad = GaParams { mutation_rate: 1.5, ..GaParams::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn identity_table_is_solved_exactly() {
        for (rows, cols) in [(2, 2), (3, 4), (4, 4), (5, 3)] {
            let t = identity_table(rows, cols);
            let params = GaParams { population_size: 60, generations: 20, ..GaParams::default() };
            let out = ga_solve_detailed(&t, rows, cols, &params).unwrap();
            assert_eq!(out.fitness, 0.0);
            assert_eq!(out.assembly, Assembly::identity(rows, cols));
        }
    }

    #[test]
    fn single_block_has_zero_fitness() {
        let t = CompatibilityTable::from_costs(1, vec![0.0], vec![0.0]).unwrap();
        assert_eq!(fitness(&Assembly::identity(1, 1), &t), 0.0);
    }

    #[test]
    fn history_is_non_increasing_and_seeded() {
        let img = crate::synth::scene(96, 96, 4);
        let blocks = split_blocks(&img, 16).unwrap().blocks;
        let t = build_compatibility(&blocks, Metric::Ssd).unwrap();
        let params = GaParams { population_size: 40, generations: 15, random_seed: 3, ..GaParams::default() };
        let a = ga_solve_detailed(&t, 6, 6, &params).unwrap();
        assert!(a.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(a.history.len(), 16);
        assert_eq!(*a.history.last().unwrap(), a.fitness);
        let b = ga_solve_detailed(&t, 6, 6, &params).unwrap();
        assert_eq!(a.assembly, b.assembly);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn crossover_children_are_bijections() {
        let img = crate::synth::scene(80, 48, 8);
        let blocks = split_blocks(&img, 16).unwrap().blocks;
        let t = build_compatibility(&blocks, Metric::Ssd).unwrap();
        let (rows, cols) = (3, 5);
        for seed in 0..50u64 {
            let mut rng = RandomStream::new(seed);
            let pa = rng.permutation(15);
            let pb = rng.permutation(15);
            let (na, nb) = (Neighbours::new(&pa, rows, cols), Neighbours::new(&pb, rows, cols));
            let child = Crossover::new(&t, rows, cols, &na, &nb, 0.3).grow(&mut rng);
            assert!(crate::stream::is_permutation(&child), "{child:?}");
        }
    }
}
