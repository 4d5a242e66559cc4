//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Images come from `BLOCKJIG_DATA_ROOT` when it is set (a directory holding
//! the unpacked CIFAR-10 and STL-10 binaries), otherwise from the small
//! surrogate corpus under `tests/data/surrogate`. Worker count follows
//! `BLOCKJIG_WORKERS`. CSVs of every sweep are kept under the cargo target
//! temp directory.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use blockjig::attack::{attack, score_attack, AttackConfig};
use blockjig::cipher::{decrypt, encrypt, encrypt_with, generate_pattern, negpos, BlockPattern, CipherConfig, Schedule};
use blockjig::datasets::{load, resize_to_working, DatasetName, DatasetSpec, ResizeKernel, Split};
use blockjig::experiment::{derive_keys, run, write_outputs, Condition, ExperimentConfig, ResultRow};
use blockjig::metrics::evaluate;
use blockjig::solver::GaParams;
use blockjig::{Assembly, Image, KeyStream, KeySet, RandomStream};

const ROUND_TRIP_IMAGES: usize = 100;
const ROUND_TRIP_KEYS: usize = 10;
const ROUND_TRIP_BUDGET: Duration = Duration::from_secs(30);
const POLARITY_DRAWS: usize = 10_000;
const POLARITY_TOLERANCE: f64 = 0.015;
const ORACLE_RANDOM_3X3: usize = 200;
const ORACLE_BUDGET: Duration = Duration::from_secs(5);
const SOLVER_IMAGES: usize = 10;
const SOLVER_MEAN_NC: f64 = 0.8;
const SOLVER_LC: f64 = 0.9;
const SOLVER_MIN_HITS: usize = 5;
const SOLVER_BUDGET_PER_IMAGE: Duration = Duration::from_secs(120);
const SWEEP_IMAGES: usize = 20;
const SWEEP_KEYS: usize = 3;
const SWEEP_BUDGET: Duration = Duration::from_secs(4 * 3600);
const SELECTION_SEED: u64 = 7;
const REDRAW_SEED: u64 = 8;
const MASTER_SEED: u64 = 2024;
const HIGH_LC: f64 = 0.9;
const PARTIAL_LC: (f64, f64) = (0.2, 0.8);
const QF_SLACK: f64 = 0.05;

struct Verdict {
    pass: bool,
    detail: String,
}

fn report(id: &str, name: &str, v: &Verdict) -> bool {
    println!("{} criterion {id}: {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    v.pass
}

fn corpus() -> (PathBuf, &'static str) {
    match std::env::var_os("BLOCKJIG_DATA_ROOT") {
        Some(root) => (PathBuf::from(root), "BLOCKJIG_DATA_ROOT"),
        None => (
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/surrogate"),
            "surrogate",
        ),
    }
}

fn noise_image(rng: &mut RandomStream, side: usize) -> Image {
    Image::new(side, side, (0..side * side * 3).map(|_| rng.below(256) as u8).collect()).unwrap()
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

// 1

fn round_trip() -> Verdict {
    let cfg = CipherConfig::default();
    let start = Instant::now();
    let mut rng = RandomStream::derived(&[0xACCE, 1]);
    let mut exact = 0;
    for i in 0..ROUND_TRIP_IMAGES {
        let img = noise_image(&mut rng, 224);
        for k in 0..ROUND_TRIP_KEYS {
            let keys = KeySet::derive(MASTER_SEED, &[b"round-trip", &[i as u8, k as u8]]);
            let enc = encrypt(&img, &keys, &cfg).unwrap();
            if decrypt(&enc, &keys, &cfg).unwrap() == img && enc != img {
                exact += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let total = ROUND_TRIP_IMAGES * ROUND_TRIP_KEYS;
    Verdict {
        pass: exact == total && elapsed < ROUND_TRIP_BUDGET,
        detail: format!("{exact}/{total} byte-identical in {:.1}s (budget {}s)", elapsed.as_secs_f64(), ROUND_TRIP_BUDGET.as_secs()),
    }
}

// 2

fn negpos_suite() -> Verdict {
    let involution = (0..=255u8).all(|p| negpos(negpos(p, true), true) == p && negpos(p, false) == p);
    let table = negpos(0, true) == 255 && negpos(200, false) == 200 && negpos(200, true) == 55;
    let cfg = CipherConfig::default();
    let mut ones = [[0usize; 3]; 4];
    for i in 0..POLARITY_DRAWS {
        let keys = KeySet::derive(MASTER_SEED, &[b"polarity", &(i as u64).to_le_bytes()]);
        let pattern: BlockPattern = generate_pattern(&keys, &cfg, 1).unwrap().patterns[0];
        for (q, t) in pattern.transforms.iter().enumerate() {
            for c in 0..3 {
                ones[q][c] += t.polarity[c] as usize;
            }
        }
    }
    let freqs: Vec<f64> = ones.iter().flatten().map(|&n| n as f64 / POLARITY_DRAWS as f64).collect();
    let worst = freqs.iter().map(|f| (f - 0.5).abs()).fold(0.0, f64::max);
    let (lo, hi) = freqs.iter().fold((1.0f64, 0.0f64), |(l, h), &f| (l.min(f), h.max(f)));
    Verdict {
        pass: involution && table && worst <= POLARITY_TOLERANCE,
        detail: format!(
            "involution {involution}, table {table}, 12 polarity bits over {POLARITY_DRAWS} key sets in [{lo:.4}, {hi:.4}] (tolerance 0.5 +/- {POLARITY_TOLERANCE})"
        ),
    }
}

// 3

/// Metrics computed directly from block coordinates.
fn oracle(assembly: &[usize], truth: &[usize], rows: usize, cols: usize) -> (f64, f64, f64) {
    let n = rows * cols;
    let at = |cells: &[usize]| {
        let mut pos = vec![(0isize, 0isize); n];
        for (i, &b) in cells.iter().enumerate() {
            pos[b] = ((i / cols) as isize, (i % cols) as isize);
        }
        pos
    };
    let (pa, pt) = (at(assembly), at(truth));
    let dc = (0..n).filter(|&b| pa[b] == pt[b]).count() as f64 / n as f64;
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let d = (pt[b].0 - pt[a].0, pt[b].1 - pt[a].1);
            if d == (0, 1) || d == (1, 0) {
                pairs.push((a, b, d));
            }
        }
    }
    let good: Vec<(usize, usize)> = pairs
        .iter()
        .filter(|&&(a, b, d)| (pa[b].0 - pa[a].0, pa[b].1 - pa[a].1) == d)
        .map(|&(a, b, _)| (a, b))
        .collect();
    let nc = good.len() as f64 / pairs.len() as f64;
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &good {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut largest = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        largest = largest.max(size);
    }
    (dc, nc, largest as f64 / n as f64)
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn metric_oracle() -> Verdict {
    let start = Instant::now();
    let mut cases: Vec<(usize, usize, Vec<usize>)> = permutations(&[0, 1, 2, 3]).into_iter().map(|p| (2, 2, p)).collect();
    let mut rng = RandomStream::derived(&[0xACCE, 3]);
    for _ in 0..ORACLE_RANDOM_3X3 {
        cases.push((3, 3, rng.permutation(9)));
    }
    let truth_perm = |rows: usize, cols: usize, rng: &mut RandomStream| rng.permutation(rows * cols);
    let mut agree = 0;
    for (rows, cols, cells) in &cases {
        // against the identity truth and against a shuffled truth
        for truth in [(0..rows * cols).collect::<Vec<_>>(), truth_perm(*rows, *cols, &mut rng)] {
            let m = evaluate(
                &Assembly::new(*rows, *cols, cells.clone()).unwrap(),
                &Assembly::new(*rows, *cols, truth.clone()).unwrap(),
            )
            .unwrap();
            if (m.dc, m.nc, m.lc) == oracle(cells, &truth, *rows, *cols) {
                agree += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let total = cases.len() * 2;
    Verdict {
        pass: agree == total && elapsed < ORACLE_BUDGET,
        detail: format!(
            "{agree}/{total} exact matches (24 2x2 + {ORACLE_RANDOM_3X3} 3x3 arrangements, two truths each) in {:.3}s",
            elapsed.as_secs_f64()
        ),
    }
}

// 4

fn solver_sanity(root: &Path) -> (Verdict, String) {
    let spec = DatasetSpec {
        name: DatasetName::Stl10,
        split: Split::Test,
        count: SOLVER_IMAGES,
        seed: SELECTION_SEED,
    };
    let records = load(&spec, root).unwrap();
    let cfg = AttackConfig {
        ga: GaParams::default(),
        skip_restoration: true,
        ..AttackConfig::default()
    };
    let mut csv = String::from("image_id,dc,nc,lc,fitness\n");
    let (mut nc_sum, mut hits, mut slowest) = (0.0, 0, Duration::ZERO);
    for r in &records {
        let img = resize_to_working(&r.image, ResizeKernel::Bilinear);
        let keys = derive_keys(MASTER_SEED, "solver-sanity", r.index, 0);
        let full = generate_pattern(&keys, &cfg.cipher, 196).unwrap();
        let schedule = Schedule {
            block_perm: full.block_perm,
            patterns: vec![BlockPattern::IDENTITY],
        };
        let shuffled = encrypt_with(&img, &schedule, &cfg.cipher).unwrap();
        let start = Instant::now();
        let out = attack(&shuffled, &cfg).unwrap();
        slowest = slowest.max(start.elapsed());
        let m = score_attack(&out, &schedule, &cfg.cipher).unwrap();
        nc_sum += m.nc;
        hits += (m.lc >= SOLVER_LC) as usize;
        csv += &format!("{},{},{},{},{}\n", r.index, m.dc, m.nc, m.lc, out.fitness);
    }
    let mean_nc = nc_sum / records.len() as f64;
    let verdict = Verdict {
        pass: mean_nc >= SOLVER_MEAN_NC && hits >= SOLVER_MIN_HITS && slowest <= SOLVER_BUDGET_PER_IMAGE,
        detail: format!(
            "mean Nc {mean_nc:.3} (>= {SOLVER_MEAN_NC}), Lc >= {SOLVER_LC} on {hits}/{} (>= {SOLVER_MIN_HITS}), slowest image {:.1}s",
            records.len(),
            slowest.as_secs_f64()
        ),
    };
    (verdict, csv)
}

// 5-7

fn sweep_config(root: &Path, seed: u64, conditions: &[&str], datasets: &[DatasetName]) -> ExperimentConfig {
    ExperimentConfig {
        datasets: datasets
            .iter()
            .map(|&name| DatasetSpec {
                name,
                split: Split::Test,
                count: SWEEP_IMAGES,
                seed,
            })
            .collect(),
        data_root: root.to_path_buf(),
        key_count: SWEEP_KEYS,
        master_seed: MASTER_SEED,
        conditions: conditions.iter().map(|c| c.parse().unwrap()).collect(),
        ..ExperimentConfig::default()
    }
}

struct Sweep {
    rows: Vec<ResultRow>,
    csv: Vec<u8>,
    errors: usize,
    elapsed: Duration,
}

fn run_sweep(cfg: &ExperimentConfig, dir: &Path) -> Sweep {
    let start = Instant::now();
    let out = run(cfg, &|_| {}).unwrap();
    let elapsed = start.elapsed();
    write_outputs(&out, dir).unwrap();
    Sweep {
        csv: fs::read(dir.join("results.csv")).unwrap(),
        errors: out.errors.len(),
        rows: out.rows,
        elapsed,
    }
}

fn lc_values(rows: &[ResultRow], dataset: DatasetName, cond: &str) -> Vec<f64> {
    let cond: Condition = cond.parse().unwrap();
    rows.iter()
        .filter(|r| r.dataset == dataset.as_str() && r.condition().unwrap() == cond)
        .map(|r| r.lc)
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn subsampling_order(rows: &[ResultRow], elapsed: Duration) -> Verdict {
    let mut pass = elapsed <= SWEEP_BUDGET;
    let mut parts = Vec::new();
    for d in DatasetName::ALL {
        let (full, sub) = (mean(&lc_values(rows, d, "70:444")), mean(&lc_values(rows, d, "70:420")));
        pass &= full > sub;
        parts.push(format!("{d} 4:4:4 {full:.3} vs 4:2:0 {sub:.3}"));
    }
    Verdict {
        pass,
        detail: format!("mean Lc at Qf 70: {}; sweep took {:.0}s", parts.join(", "), elapsed.as_secs_f64()),
    }
}

/// (high-Lc hit at 70:444, partial hit at 70:420) for one dataset.
fn existence(rows: &[ResultRow], d: DatasetName) -> (Option<f64>, Option<f64>) {
    let high = lc_values(rows, d, "70:444").into_iter().filter(|&v| v >= HIGH_LC).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    let partial = lc_values(rows, d, "70:420")
        .into_iter()
        .filter(|v| (PARTIAL_LC.0..=PARTIAL_LC.1).contains(v))
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    (high, partial)
}

fn monotone_quality(rows: &[ResultRow]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for d in DatasetName::ALL {
        let means: Vec<f64> = ["70:420", "80:420", "90:420"].iter().map(|c| mean(&lc_values(rows, d, c))).collect();
        pass &= means.windows(2).all(|w| w[1] >= w[0] - QF_SLACK);
        parts.push(format!("{d} {:.3} / {:.3} / {:.3}", means[0], means[1], means[2]));
    }
    Verdict {
        pass,
        detail: format!("mean Lc at 4:2:0 for Qf 70/80/90: {} (slack {QF_SLACK})", parts.join(", ")),
    }
}

fn main() {
    let (root, source) = corpus();
    println!("corpus: {source} ({})", root.display());
    let out_dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&out_dir).unwrap();
    println!("outputs: {}", out_dir.display());
    let mut all = true;

    all &= report("1", "cipher round trip", &round_trip());
    all &= report("2", "negative-positive transform", &negpos_suite());
    all &= report("3", "metric oracle equivalence", &metric_oracle());

    let (solver, solver_csv) = solver_sanity(&root);
    fs::write(out_dir.join("solver_sanity.csv"), &solver_csv).unwrap();
    all &= report("4", "solver sanity without cipher or JPEG", &solver);

    let conditions = ["70:444", "70:420", "80:420", "90:420"];
    let cfg = sweep_config(&root, SELECTION_SEED, &conditions, &DatasetName::ALL);
    let sweep = run_sweep(&cfg, &out_dir.join("sweep"));
    if sweep.errors > 0 {
        println!("note: {} sweep tuples failed, see errors.csv", sweep.errors);
    }
    all &= report("5", "4:4:4 beats 4:2:0 at Qf 70", &subsampling_order(&sweep.rows, sweep.elapsed));

    let mut redraws: Vec<(DatasetName, Sweep)> = Vec::new();
    let mut parts = Vec::new();
    let mut pass6 = true;
    for d in DatasetName::ALL {
        let (mut high, mut partial) = existence(&sweep.rows, d);
        let mut note = "";
        if high.is_none() || partial.is_none() {
            let cfg = sweep_config(&root, REDRAW_SEED, &["70:444", "70:420"], &[d]);
            let again = run_sweep(&cfg, &out_dir.join(format!("redraw_{d}")));
            (high, partial) = existence(&again.rows, d);
            note = " after redraw";
            redraws.push((d, again));
        }
        pass6 &= high.is_some() && partial.is_some();
        let fmt = |v: Option<f64>| v.map_or("none".to_string(), |v| format!("{v:.3}"));
        parts.push(format!("{d}{note}: best Lc >= {HIGH_LC} at 4:4:4 {}, partial Lc at 4:2:0 {}", fmt(high), fmt(partial)));
    }
    all &= report("6", "high and partial Lc exist at Qf 70", &Verdict { pass: pass6, detail: parts.join("; ") });
    all &= report("7", "Lc non-decreasing in Qf under 4:2:0", &monotone_quality(&sweep.rows));

    let (_, solver_again) = solver_sanity(&root);
    let sweep_again = run_sweep(&cfg, &out_dir.join("sweep_rerun"));
    let mut hashes = vec![
        (sha256_hex(solver_csv.as_bytes()), sha256_hex(solver_again.as_bytes())),
        (sha256_hex(&sweep.csv), sha256_hex(&sweep_again.csv)),
    ];
    for (d, first) in &redraws {
        let cfg = sweep_config(&root, REDRAW_SEED, &["70:444", "70:420"], &[*d]);
        let again = run_sweep(&cfg, &out_dir.join(format!("redraw_{d}_rerun")));
        hashes.push((sha256_hex(&first.csv), sha256_hex(&again.csv)));
    }
    let same = hashes.iter().all(|(a, b)| a == b);
    let detail = hashes
        .iter()
        .map(|(a, b)| format!("{}..{}", &a[..12], if a == b { "=" } else { "!=" }))
        .collect::<Vec<_>>()
        .join(", ");
    all &= report("8", "determinism of criteria 4-7", &Verdict { pass: same, detail: format!("{} CSVs rerun, sha256 {detail}", hashes.len()) });

    let counts: BTreeMap<&str, usize> = sweep.rows.iter().fold(BTreeMap::new(), |mut m, r| {
        *m.entry(r.dataset.as_str()).or_default() += 1;
        m
    });
    println!("sweep rows per dataset: {counts:?}");
    if !all {
        std::process::exit(1);
    }
}
