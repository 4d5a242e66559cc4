//! The evaluation sweep: every selected image is encrypted under several keys,
//! pushed through each JPEG condition, attacked and scored.
//!
//! Outputs written by [`write_outputs`]:
//!
//! * `results.csv`: one [`ResultRow`] per (dataset, image, key, condition),
//!   sorted, free of timing data so identical seeds give identical bytes.
//! * `timings.csv`: wall time per row, same key columns.
//! * `errors.csv`: tuples whose pipeline failed, with the error message.
//! * `summary.csv` and one SVG box plot per metric and subsampling ratio,
//!   from [`render_summary`].

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{attack, score_attack, AttackConfig, PUZZLE_TIMEOUT};
use crate::chroma::ChromaPrior;
use crate::cipher::{encrypt_with, generate_pattern, CipherConfig};
use crate::datasets::{load, resize_all, DatasetSpec, ResizeKernel};
use crate::dissimilarity::Metric;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::jpeg::{jpeg_cycle, JpegParams, Subsampling};
use crate::keys::KeySet;
use crate::metrics::{summarize, MetricsReport};
use crate::solver::GaParams;

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "BLOCKJIG_WORKERS";

/// What happens to the ciphertext between encryption and the attack.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Condition {
    /// Ciphertext reaches the attacker untouched.
    None,
    Jpeg { qf: u8, sr: Subsampling },
}

impl Condition {
    /// The six compressed conditions plus the uncompressed control.
    pub fn defaults() -> Vec<Condition> {
        let mut out = vec![Condition::None];
        for sr in [Subsampling::S444, Subsampling::S420] {
            for qf in [70, 80, 90] {
                out.push(Condition::Jpeg { qf, sr });
            }
        }
        out
    }

    pub fn qf_label(self) -> String {
        match self {
            Condition::None => "none".into(),
            Condition::Jpeg { qf, .. } => qf.to_string(),
        }
    }

    pub fn sr_label(self) -> &'static str {
        match self {
            Condition::None => "none",
            Condition::Jpeg { sr, .. } => sr.label(),
        }
    }

    pub fn from_labels(qf: &str, sr: &str) -> Result<Self> {
        if qf == "none" && sr == "none" {
            return Ok(Condition::None);
        }
        let q: u8 = qf
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("quality factor {qf:?}")))?;
        let params = JpegParams::new(q, sr.parse()?)?;
        Ok(Condition::Jpeg {
            qf: params.quality,
            sr: params.subsampling,
        })
    }

    pub fn apply(self, img: &Image) -> Result<Image> {
        match self {
            Condition::None => Ok(img.clone()),
            Condition::Jpeg { qf, sr } => jpeg_cycle(img, &JpegParams::new(qf, sr)?),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::None => f.write_str("none"),
            Condition::Jpeg { qf, sr } => write!(f, "{qf}:{}", sr.label()),
        }
    }
}

impl FromStr for Condition {
    type Err = Error;

    /// `none`, or `<qf>:<sr>` such as `70:420`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "none" {
            return Ok(Condition::None);
        }
        let (qf, sr) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("condition {s:?} is not `none` or `qf:sr`")))?;
        Condition::from_labels(qf, sr)
    }
}

impl TryFrom<String> for Condition {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Condition> for String {
    fn from(c: Condition) -> String {
        c.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    /// Directory holding one sub-directory per dataset.
    pub data_root: PathBuf,
    /// Where results are written.
    pub output: PathBuf,
    /// Keys per image.
    pub key_count: usize,
    pub master_seed: u64,
    pub conditions: Vec<Condition>,
    pub resize: ResizeKernel,
    pub cipher: CipherConfig,
    pub ga: GaParams,
    pub metric: Metric,
    /// Prior for rebuilding 4:2:0 ciphertexts; `None` attacks them as decoded.
    pub chroma_prior: Option<ChromaPrior>,
    /// Per-puzzle solver budget in seconds.
    pub timeout_secs: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            datasets: Vec::new(),
            data_root: PathBuf::from("data"),
            output: PathBuf::from("results"),
            key_count: 10,
            master_seed: 0,
            conditions: Condition::defaults(),
            resize: ResizeKernel::default(),
            cipher: CipherConfig::default(),
            ga: GaParams::default(),
            metric: Metric::default(),
            chroma_prior: Some(ChromaPrior::default()),
            timeout_secs: PUZZLE_TIMEOUT.as_secs(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.key_count == 0 {
            return Err(Error::Config("key_count must be at least 1".into()));
        }
        if self.conditions.is_empty() {
            return Err(Error::Config("conditions must not be empty".into()));
        }
        if self.datasets.is_empty() {
            return Err(Error::Config("no datasets selected".into()));
        }
        if self.timeout_secs == 0 {
            return Err(Error::Config("timeout_secs must be positive".into()));
        }
        for d in &self.datasets {
            d.validate()?;
        }
        self.cipher.validate()?;
        self.ga.validate()
    }

    /// Attack settings for one condition.
    pub fn attack_config(&self, condition: Condition) -> AttackConfig {
        let subsampled = matches!(condition, Condition::Jpeg { sr: Subsampling::S420, .. });
        AttackConfig {
            cipher: self.cipher,
            ga: GaParams {
                time_limit: self.ga.time_limit.or(Some(Duration::from_secs(self.timeout_secs))),
                ..self.ga.clone()
            },
            metric: self.metric,
            chroma_prior: if subsampled { self.chroma_prior } else { None },
            skip_restoration: false,
            skip_solver: false,
        }
    }
}

/// Keys for key slot `key_id` of image `image_id` in `dataset`.
pub fn derive_keys(master_seed: u64, dataset: &str, image_id: usize, key_id: usize) -> KeySet {
    KeySet::derive(
        master_seed,
        &[dataset.as_bytes(), &(image_id as u64).to_le_bytes(), &(key_id as u64).to_le_bytes()],
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    /// Record index within the dataset split.
    pub image_id: usize,
    pub key_id: usize,
    pub qf: String,
    pub subsampling: String,
    pub dc: f64,
    pub nc: f64,
    pub lc: f64,
    pub solver_fitness: f64,
    /// Metrics come from the best assembly found before the time limit.
    pub timed_out: bool,
}

impl ResultRow {
    pub fn condition(&self) -> Result<Condition> {
        Condition::from_labels(&self.qf, &self.subsampling)
    }

    fn key(&self) -> (String, usize, usize, Condition) {
        let c = self.condition().unwrap_or(Condition::None);
        (self.dataset.clone(), self.image_id, self.key_id, c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub dataset: String,
    pub image_id: usize,
    pub key_id: usize,
    pub qf: String,
    pub subsampling: String,
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub dataset: String,
    pub image_id: usize,
    pub key_id: usize,
    pub qf: String,
    pub subsampling: String,
    pub error: String,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub timings: Vec<TimingRow>,
    pub errors: Vec<ErrorRow>,
}

struct Job<'a> {
    dataset: &'static str,
    image_id: usize,
    image: &'a Image,
    key_id: usize,
    condition: Condition,
}

fn run_job(cfg: &ExperimentConfig, job: &Job<'_>) -> Result<(MetricsReport, f64, bool)> {
    let keys = derive_keys(cfg.master_seed, job.dataset, job.image_id, job.key_id);
    let n_blocks = (job.image.width() / cfg.cipher.m) * (job.image.height() / cfg.cipher.m);
    let schedule = generate_pattern(&keys, &cfg.cipher, n_blocks)?;
    let ciphertext = job.condition.apply(&encrypt_with(job.image, &schedule, &cfg.cipher)?)?;
    let acfg = cfg.attack_config(job.condition);
    let outcome = attack(&ciphertext, &acfg)?;
    let report = score_attack(&outcome, &schedule, &cfg.cipher)?;
    Ok((report, outcome.fitness, outcome.timed_out))
}

/// Worker count from [`WORKERS_ENV`], else the machine's parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs the sweep in memory. Dataset loading failures abort; failures of a
/// single tuple are recorded in `errors` and the sweep continues.
pub fn run(cfg: &ExperimentConfig, progress: &(dyn Fn(&ResultRow) + Sync)) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut images: Vec<(&'static str, usize, Image)> = Vec::new();
    for spec in &cfg.datasets {
        let records = load(spec, &cfg.data_root)?;
        let resized = resize_all(&records.iter().map(|r| r.image.clone()).collect::<Vec<_>>(), cfg.resize);
        images.extend(records.iter().zip(resized).map(|(r, img)| (spec.name.as_str(), r.index, img)));
    }
    let mut jobs = Vec::new();
    for (dataset, image_id, image) in &images {
        for key_id in 0..cfg.key_count {
            for &condition in &cfg.conditions {
                jobs.push(Job {
                    dataset,
                    image_id: *image_id,
                    image,
                    key_id,
                    condition,
                });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<_> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let start = Instant::now();
                let res = run_job(cfg, job);
                let elapsed = start.elapsed().as_secs_f64();
                if let Ok((m, fitness, timed_out)) = &res {
                    progress(&ResultRow {
                        dataset: job.dataset.into(),
                        image_id: job.image_id,
                        key_id: job.key_id,
                        qf: job.condition.qf_label(),
                        subsampling: job.condition.sr_label().into(),
                        dc: m.dc,
                        nc: m.nc,
                        lc: m.lc,
                        solver_fitness: *fitness,
                        timed_out: *timed_out,
                    });
                }
                (job, res, elapsed)
            })
            .collect()
    });

    let mut out = ExperimentOutput::default();
    for (job, res, elapsed) in results {
        let (qf, subsampling) = (job.condition.qf_label(), job.condition.sr_label().to_string());
        match res {
            Ok((m, fitness, timed_out)) => {
                out.rows.push(ResultRow {
                    dataset: job.dataset.into(),
                    image_id: job.image_id,
                    key_id: job.key_id,
                    qf: qf.clone(),
                    subsampling: subsampling.clone(),
                    dc: m.dc,
                    nc: m.nc,
                    lc: m.lc,
                    solver_fitness: fitness,
                    timed_out,
                });
                out.timings.push(TimingRow {
                    dataset: job.dataset.into(),
                    image_id: job.image_id,
                    key_id: job.key_id,
                    qf,
                    subsampling,
                    wall_time: elapsed,
                });
            }
            Err(e) => out.errors.push(ErrorRow {
                dataset: job.dataset.into(),
                image_id: job.image_id,
                key_id: job.key_id,
                qf,
                subsampling,
                error: e.to_string(),
            }),
        }
    }
    out.rows.sort_by(|a, b| a.key().cmp(&b.key()));
    Ok(out)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

const KEY_COLUMNS: [&str; 5] = ["dataset", "image_id", "key_id", "qf", "subsampling"];

/// Writes every CSV and SVG into `dir`; returns the paths written.
pub fn write_outputs(out: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let results = dir.join("results.csv");
    let timings = dir.join("timings.csv");
    let errors = dir.join("errors.csv");
    let with = |extra: &[&'static str]| [&KEY_COLUMNS[..], extra].concat();
    write_csv(
        &results,
        &out.rows,
        &with(&["dc", "nc", "lc", "solver_fitness", "timed_out"]),
    )?;
    write_csv(&timings, &out.timings, &with(&["wall_time"]))?;
    write_csv(&errors, &out.errors, &with(&["error"]))?;
    let mut written = vec![results, timings, errors];
    if !out.rows.is_empty() {
        written.extend(render_summary(&out.rows, dir)?);
    }
    Ok(written)
}

/// Loads the config, runs the sweep and writes everything to `cfg.output`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let out = run(cfg, &|_| {})?;
    write_outputs(&out, &cfg.output)?;
    Ok(out)
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub const METRIC_NAMES: [&str; 3] = ["dc", "nc", "lc"];

/// One line of `summary.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub metric: String,
    pub dataset: String,
    pub qf: String,
    pub sr: String,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub mean: f64,
    pub wlow: f64,
    pub whigh: f64,
    pub n: usize,
}

fn metric_value(row: &ResultRow, metric: &str) -> f64 {
    match metric {
        "dc" => row.dc,
        "nc" => row.nc,
        _ => row.lc,
    }
}

/// Box-plot statistics per (metric, dataset, condition), in sorted order.
pub fn summary_rows(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::Empty("no result rows to summarise"));
    }
    let mut groups: BTreeMap<(usize, String, Condition), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        for (mi, _) in METRIC_NAMES.iter().enumerate() {
            groups.entry((mi, r.dataset.clone(), r.condition()?)).or_default().push(r);
        }
    }
    groups
        .into_iter()
        .map(|((mi, dataset, cond), members)| {
            let metric = METRIC_NAMES[mi];
            let values: Vec<f64> = members.iter().map(|r| metric_value(r, metric)).collect();
            let s = summarize(&values)?;
            Ok(SummaryRow {
                metric: metric.into(),
                dataset,
                qf: cond.qf_label(),
                sr: cond.sr_label().into(),
                q1: s.q1,
                median: s.median,
                q3: s.q3,
                mean: s.mean,
                wlow: s.whisker_low,
                whigh: s.whisker_high,
                n: s.n,
            })
        })
        .collect()
}

/// Writes `summary.csv` and `{metric}_{sr}.svg` for sr in 444 and 420 into
/// `dir`. The uncompressed control, when present, is drawn in both plots.
pub fn render_summary(rows: &[ResultRow], dir: &Path) -> Result<Vec<PathBuf>> {
    let summary = summary_rows(rows)?;
    fs::create_dir_all(dir)?;
    let csv_path = dir.join("summary.csv");
    write_csv(&csv_path, &summary, &[])?;
    let mut written = vec![csv_path];
    for metric in METRIC_NAMES {
        for sr in [Subsampling::S444, Subsampling::S420] {
            let boxes: Vec<&SummaryRow> = summary
                .iter()
                .filter(|s| s.metric == metric && (s.sr == sr.label() || s.sr == "none"))
                .collect();
            let path = dir.join(format!("{metric}_{}.svg", sr.label()));
            fs::write(&path, boxplot_svg(metric, sr, &boxes))?;
            written.push(path);
        }
    }
    Ok(written)
}

const PALETTE: [&str; 4] = ["#4878a8", "#e0803a", "#5a9e5a", "#b05050"];

fn boxplot_svg(metric: &str, sr: Subsampling, boxes: &[&SummaryRow]) -> String {
    let datasets: Vec<&str> = {
        let mut d: Vec<&str> = boxes.iter().map(|b| b.dataset.as_str()).collect();
        d.sort();
        d.dedup();
        d
    };
    let qfs: Vec<String> = {
        let mut q: Vec<(u16, String)> = boxes
            .iter()
            .map(|b| (b.qf.parse::<u16>().unwrap_or(0), b.qf.clone()))
            .collect();
        q.sort();
        q.dedup();
        q.into_iter().map(|(_, s)| s).collect()
    };
    let (left, top, plot_h, group_w) = (60.0, 40.0, 300.0, 40.0 + 36.0 * datasets.len() as f64);
    let width = left + 20.0 + group_w * qfs.len().max(1) as f64;
    let height = top + plot_h + 70.0;
    let y = |v: f64| top + plot_h * (1.0 - v.clamp(0.0, 1.0));
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    s += &format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{metric} (Sr {})</text>\n",
        width / 2.0,
        sr.label()
    );
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        s += &format!(
            "<line x1=\"{left}\" x2=\"{}\" y1=\"{y0}\" y2=\"{y0}\" stroke=\"#ddd\"/><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{v:.1}</text>\n",
            width - 20.0,
            left - 6.0,
            y(v) + 4.0,
            y0 = y(v)
        );
    }
    for (gi, qf) in qfs.iter().enumerate() {
        let gx = left + group_w * gi as f64;
        s += &format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">Qf {qf}</text>\n",
            gx + group_w / 2.0,
            top + plot_h + 20.0
        );
        for (di, ds) in datasets.iter().enumerate() {
            let Some(b) = boxes.iter().find(|b| &b.qf == qf && b.dataset == *ds) else {
                continue;
            };
            let x = gx + 20.0 + 36.0 * di as f64;
            let c = PALETTE[di % PALETTE.len()];
            s += &format!(
                "<line x1=\"{xm}\" x2=\"{xm}\" y1=\"{}\" y2=\"{}\" stroke=\"{c}\"/>\n\
                 <rect x=\"{x}\" y=\"{}\" width=\"24\" height=\"{}\" fill=\"{c}\" fill-opacity=\"0.35\" stroke=\"{c}\"/>\n\
                 <line x1=\"{x}\" x2=\"{}\" y1=\"{ym}\" y2=\"{ym}\" stroke=\"{c}\" stroke-width=\"2\"/>\n\
                 <circle cx=\"{xm}\" cy=\"{}\" r=\"2.5\" fill=\"{c}\"/>\n",
                y(b.whigh),
                y(b.wlow),
                y(b.q3),
                (y(b.q1) - y(b.q3)).max(0.5),
                x + 24.0,
                y(b.mean),
                xm = x + 12.0,
                ym = y(b.median),
            );
        }
    }
    for (di, ds) in datasets.iter().enumerate() {
        let x = left + 110.0 * di as f64;
        s += &format!(
            "<rect x=\"{x}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/><text x=\"{}\" y=\"{}\">{ds}</text>\n",
            top + plot_h + 40.0,
            PALETTE[di % PALETTE.len()],
            x + 16.0,
            top + plot_h + 50.0
        );
    }
    s += "</svg>\n";
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(dataset: &str, image_id: usize, cond: Condition, lc: f64) -> ResultRow {
        ResultRow {
            dataset: dataset.into(),
            image_id,
            key_id: 0,
            qf: cond.qf_label(),
            subsampling: cond.sr_label().into(),
            dc: lc / 2.0,
            nc: lc,
            lc,
            solver_fitness: 1.0,
            timed_out: false,
        }
    }

    #[test]
    fn conditions_round_trip_through_text() {
        for c in Condition::defaults() {
            assert_eq!(c.to_string().parse::<Condition>().unwrap(), c);
            assert_eq!(Condition::from_labels(&c.qf_label(), c.sr_label()).unwrap(), c);
        }
        assert_eq!(Condition::defaults().len(), 7);
        assert!("70".parse::<Condition>().is_err());
        assert!("0:420".parse::<Condition>().is_err());
    }

    #[test]
    fn config_validation() {
        let text = r#"
            key_count = 2
            conditions = ["none", "70:444"]
            [[datasets]]
            name = "cifar10"
            count = 3
            seed = 7
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.conditions, vec![Condition::None, "70:444".parse().unwrap()]);
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
        let empty = text.replace(r#"["none", "70:444"]"#, "[]");
        assert!(matches!(ExperimentConfig::from_toml(&empty), Err(Error::Config(_))));
        let no_keys = text.replace("key_count = 2", "key_count = 0");
        assert!(ExperimentConfig::from_toml(&no_keys).is_err());
    }

    #[test]
    fn chroma_prior_only_for_subsampled_conditions() {
        let cfg = ExperimentConfig::default();
        assert!(cfg.attack_config("70:420".parse().unwrap()).chroma_prior.is_some());
        assert!(cfg.attack_config("70:444".parse().unwrap()).chroma_prior.is_none());
        assert!(cfg.attack_config(Condition::None).chroma_prior.is_none());
        assert_eq!(cfg.attack_config(Condition::None).ga.time_limit, Some(PUZZLE_TIMEOUT));
    }

    #[test]
    fn single_row_gives_degenerate_boxes() {
        let rows = vec![row("cifar10", 3, "70:420".parse().unwrap(), 0.4)];
        let s = summary_rows(&rows).unwrap();
        assert_eq!(s.len(), 3);
        for r in &s {
            let v = metric_value(&rows[0], &r.metric);
            assert_eq!([r.q1, r.median, r.q3, r.mean, r.wlow, r.whigh], [v; 6]);
            assert_eq!(r.n, 1);
        }
        assert!(summary_rows(&[]).is_err());
    }

    #[test]
    fn summary_files_and_schema() {
        let dir = tempfile::tempdir().unwrap();
        let mut rows = Vec::new();
        for (i, c) in Condition::defaults().into_iter().enumerate() {
            rows.push(row("cifar10", i, c, 0.1 * i as f64));
            rows.push(row("stl10", i, c, 0.05 * i as f64));
        }
        let files = render_summary(&rows, dir.path()).unwrap();
        assert_eq!(files.iter().filter(|p| p.extension().unwrap() == "svg").count(), 6);
        let text = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(text.lines().next().unwrap(), "metric,dataset,qf,sr,q1,median,q3,mean,wlow,whigh,n");
        assert_eq!(text.lines().count(), 1 + 3 * 2 * 7);
        let svg = fs::read_to_string(dir.path().join("lc_420.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("Qf none") && svg.contains("Qf 90"));
    }

    #[test]
    fn results_round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let out = ExperimentOutput {
            rows: vec![row("stl10", 1, Condition::None, 1.0), row("stl10", 1, "90:420".parse().unwrap(), 0.25)],
            ..Default::default()
        };
        write_outputs(&out, dir.path()).unwrap();
        assert_eq!(read_results(dir.path().join("results.csv")).unwrap(), out.rows);
        let errors = fs::read_to_string(dir.path().join("errors.csv")).unwrap();
        assert_eq!(errors.trim(), "dataset,image_id,key_id,qf,subsampling,error");
    }

    #[test]
    fn derived_keys_depend_on_every_coordinate() {
        let base = derive_keys(1, "cifar10", 4, 0);
        assert_eq!(base, derive_keys(1, "cifar10", 4, 0));
        for other in [
            derive_keys(2, "cifar10", 4, 0),
            derive_keys(1, "stl10", 4, 0),
            derive_keys(1, "cifar10", 5, 0),
            derive_keys(1, "cifar10", 4, 1),
        ] {
            assert_ne!(base, other);
        }
    }
}
