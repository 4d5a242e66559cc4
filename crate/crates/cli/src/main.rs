use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use blockjig::attack::{attack, score_attack, truth_assembly, AttackConfig};
use blockjig::chroma::ChromaPrior;
use blockjig::cipher::{decrypt_with, encrypt_with, generate_pattern, CipherConfig, Schedule};
use blockjig::datasets::{
    dataset_dir, install_archive, load, resize_to_working, DatasetName, DatasetSpec, ResizeKernel, Split,
};
use blockjig::dissimilarity::Metric;
use blockjig::experiment::{read_results, render_summary, run, write_outputs, ExperimentConfig};
use blockjig::jpeg::{decode_jpeg, jpeg_bytes, jpeg_subsampling, JpegParams, Subsampling};
use blockjig::metrics::evaluate;
use blockjig::solver::GaParams;
use blockjig::{Assembly, Image, KeySet};

#[derive(Parser)]
#[command(name = "blockjig", version, about = "Block-scrambling image cipher and jigsaw-solver attack")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a fresh key file.
    Keygen {
        #[arg(long)]
        out: PathBuf,
        /// Derive the keys from this seed instead of the clock.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Encrypt an image.
    Encrypt {
        #[command(flatten)]
        io: CipherArgs,
        /// Also write the ground-truth assembly of ciphertext block ids.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Decrypt an image.
    Decrypt {
        #[command(flatten)]
        io: CipherArgs,
    },
    /// Compress an image to a baseline JPEG file.
    Jpeg {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 70)]
        quality: u8,
        #[arg(long, default_value = "420")]
        subsampling: Subsampling,
    },
    /// Ciphertext-only attack: undo the intra-block transform, then reassemble.
    Attack(AttackArgs),
    /// Score an assembly against the truth; prints `dc,nc,lc`.
    Metrics {
        #[arg(long)]
        assembly: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    #[command(subcommand)]
    Dataset(DatasetCommand),
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Args)]
struct CipherArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    key_file: PathBuf,
    #[arg(long, default_value_t = 16)]
    m: usize,
    #[arg(long)]
    per_block_pattern: bool,
}

impl CipherArgs {
    fn setup(&self) -> Result<(Image, Schedule, CipherConfig)> {
        let cfg = CipherConfig {
            m: self.m,
            per_block_pattern: self.per_block_pattern,
            ..CipherConfig::default()
        };
        let img = read_image(&self.input)?;
        let keys = KeySet::load(&self.key_file).with_context(|| format!("reading {}", self.key_file.display()))?;
        let schedule = generate_pattern(&keys, &cfg, (img.width() / self.m) * (img.height() / self.m))?;
        Ok((img, schedule, cfg))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ChromaMode {
    /// On when the input is a 4:2:0 JPEG file.
    Auto,
    On,
    Off,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Reassembled image.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 16)]
    m: usize,
    #[arg(long)]
    skip_restoration: bool,
    #[arg(long)]
    skip_solver: bool,
    /// One-row CSV with fitness and, given `--key-file`, dc/nc/lc.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Recovered placement of ciphertext block ids.
    #[arg(long)]
    assembly: Option<PathBuf>,
    /// Keys used for encryption; only read to score the result.
    #[arg(long)]
    key_file: Option<PathBuf>,
    #[arg(long, default_value_t = 300)]
    population: usize,
    #[arg(long, default_value_t = 60)]
    generations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "ssd")]
    metric: Metric,
    #[arg(long, value_enum, default_value_t = ChromaMode::Auto)]
    chroma: ChromaMode,
    /// Solver budget in seconds.
    #[arg(long)]
    time_limit: Option<u64>,
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Download and verify a dataset archive, then unpack it under `--root`.
    Fetch {
        #[arg(long)]
        name: DatasetName,
        #[arg(long, default_value = "data")]
        root: PathBuf,
        /// Install from an already downloaded archive.
        #[arg(long)]
        archive: Option<PathBuf>,
    },
    /// Write a seeded selection of images as PNG plus `index.csv`.
    Sample {
        #[arg(long)]
        name: DatasetName,
        #[arg(long, default_value = "data")]
        root: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Resize to the 224x224 working size with this kernel.
        #[arg(long)]
        resize: Option<ResizeKernel>,
    },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Run the sweep described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the output directory of the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use 1000 images per dataset instead of the configured count.
        #[arg(long)]
        full: bool,
    },
    /// Rebuild summary.csv and the box plots from a results file.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn is_jpeg(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("jpg" | "jpeg")
    )
}

fn read_image(path: &Path) -> Result<Image> {
    let img = if is_jpeg(path) {
        decode_jpeg(&fs::read(path).with_context(|| format!("reading {}", path.display()))?)?
    } else {
        Image::load(path)?
    };
    Ok(img)
}

fn keygen(out: &Path, seed: Option<u64>) -> Result<()> {
    let seed = match seed {
        Some(s) => s,
        None => {
            let now = SystemTime::now().duration_since(UNIX_EPOCH)?;
            now.as_nanos() as u64 ^ ((std::process::id() as u64) << 32)
        }
    };
    KeySet::derive(seed, &[b"keygen"]).save(out)?;
    Ok(())
}

fn run_attack(args: &AttackArgs) -> Result<()> {
    let img = read_image(&args.input)?;
    let subsampled = is_jpeg(&args.input) && jpeg_subsampling(&fs::read(&args.input)?)? == Subsampling::S420;
    let chroma = match args.chroma {
        ChromaMode::Auto => subsampled,
        ChromaMode::On => true,
        ChromaMode::Off => false,
    };
    let cfg = AttackConfig {
        cipher: CipherConfig::with_block_size(args.m),
        ga: GaParams {
            population_size: args.population,
            generations: args.generations,
            random_seed: args.seed,
            time_limit: args.time_limit.map(std::time::Duration::from_secs),
            ..GaParams::default()
        },
        metric: args.metric,
        chroma_prior: chroma.then(ChromaPrior::default),
        skip_restoration: args.skip_restoration,
        skip_solver: args.skip_solver,
    };
    let outcome = attack(&img, &cfg)?;
    outcome.reassembled.save(&args.out)?;
    if let Some(path) = &args.assembly {
        outcome.assembly.save(path)?;
    }
    let scores = match &args.key_file {
        Some(path) => {
            let keys = KeySet::load(path)?;
            let schedule = generate_pattern(&keys, &cfg.cipher, outcome.assembly.len())?;
            Some(score_attack(&outcome, &schedule, &cfg.cipher)?)
        }
        None => None,
    };
    let mut header = vec!["blocks", "fitness", "timed_out", "restoration_score", "chroma_prior"];
    let mut row = vec![
        outcome.assembly.len().to_string(),
        outcome.fitness.to_string(),
        outcome.timed_out.to_string(),
        outcome.hypothesis.as_ref().map_or(String::new(), |h| h.score.to_string()),
        chroma.to_string(),
    ];
    if let Some(m) = scores {
        header.extend(["dc", "nc", "lc"]);
        row.extend([m.dc, m.nc, m.lc].map(|v| v.to_string()));
    }
    match &args.report {
        Some(path) => {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record(&header)?;
            w.write_record(&row)?;
            w.flush()?;
        }
        None => println!("{}\n{}", header.join(","), row.join(",")),
    }
    Ok(())
}

fn fetch(name: DatasetName, root: &Path, archive: Option<&Path>) -> Result<()> {
    let source = name.source()?;
    let archive = match archive {
        Some(p) => p.to_path_buf(),
        None => {
            fs::create_dir_all(root)?;
            let file = root.join(source.url.rsplit('/').next().unwrap_or("archive.tar.gz"));
            eprintln!("downloading {} to {}", source.url, file.display());
            let resp = ureq::get(&source.url).call().with_context(|| format!("fetching {}", source.url))?;
            let mut out = fs::File::create(&file)?;
            io::copy(&mut resp.into_reader(), &mut out)?;
            out.flush()?;
            file
        }
    };
    let dir = install_archive(&archive, &source, root)?;
    eprintln!("installed {name} in {}", dir.display());
    Ok(())
}

fn sample(spec: &DatasetSpec, root: &Path, out: &Path, resize: Option<ResizeKernel>) -> Result<()> {
    if !dataset_dir(root, spec.name).is_dir() {
        bail!("{} is not installed under {}; run `dataset fetch` first", spec.name, root.display());
    }
    let records = load(spec, root)?;
    fs::create_dir_all(out)?;
    let mut index = csv::Writer::from_path(out.join("index.csv"))?;
    index.write_record(["position", "index", "label", "file"])?;
    for (pos, r) in records.iter().enumerate() {
        let file = format!("{}_{:05}.png", spec.name, r.index);
        let img = match resize {
            Some(k) => resize_to_working(&r.image, k),
            None => r.image.clone(),
        };
        img.save(out.join(&file))?;
        index.write_record([pos.to_string(), r.index.to_string(), r.label.to_string(), file])?;
    }
    index.flush()?;
    eprintln!("wrote {} images to {}", records.len(), out.display());
    Ok(())
}

fn experiment_run(config: &Path, out: Option<PathBuf>, full: bool) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
    if let Some(dir) = out {
        cfg.output = dir;
    }
    if full {
        for d in &mut cfg.datasets {
            d.count = 1000;
        }
        cfg.validate()?;
    }
    let done = std::sync::atomic::AtomicUsize::new(0);
    let result = run(&cfg, &|row| {
        let k = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
        eprintln!(
            "[{k}] {} #{} key {} {}:{} lc {:.3}",
            row.dataset, row.image_id, row.key_id, row.qf, row.subsampling, row.lc
        );
    })?;
    let files = write_outputs(&result, &cfg.output)?;
    for e in &result.errors {
        eprintln!("error: {} #{} key {} {}:{}: {}", e.dataset, e.image_id, e.key_id, e.qf, e.subsampling, e.error);
    }
    eprintln!("{} rows, {} errors; wrote {} files to {}", result.rows.len(), result.errors.len(), files.len(), cfg.output.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Keygen { out, seed } => keygen(&out, seed)?,
        Command::Encrypt { io, truth } => {
            let (img, schedule, cfg) = io.setup()?;
            encrypt_with(&img, &schedule, &cfg)?.save(&io.out)?;
            if let Some(path) = truth {
                truth_assembly(&schedule, img.height() / io.m, img.width() / io.m)?.save(path)?;
            }
        }
        Command::Decrypt { io } => {
            let (img, schedule, cfg) = io.setup()?;
            decrypt_with(&img, &schedule, &cfg)?.save(&io.out)?;
        }
        Command::Jpeg {
            input,
            out,
            quality,
            subsampling,
        } => {
            let bytes = jpeg_bytes(&read_image(&input)?, &JpegParams::new(quality, subsampling)?)?;
            fs::write(&out, bytes).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Attack(args) => run_attack(&args)?,
        Command::Metrics { assembly, truth } => {
            let m = evaluate(&Assembly::load(&assembly)?, &Assembly::load(&truth)?)?;
            println!("dc,nc,lc\n{},{},{}", m.dc, m.nc, m.lc);
        }
        Command::Dataset(DatasetCommand::Fetch { name, root, archive }) => fetch(name, &root, archive.as_deref())?,
        Command::Dataset(DatasetCommand::Sample {
            name,
            root,
            split,
            count,
            seed,
            out,
            resize,
        }) => sample(&DatasetSpec { name, split, count, seed }, &root, &out, resize)?,
        Command::Experiment(ExperimentCommand::Run { config, out, full }) => experiment_run(&config, out, full)?,
        Command::Experiment(ExperimentCommand::Summarize { input, out }) => {
            let rows = read_results(&input).with_context(|| format!("reading {}", input.display()))?;
            let files = render_summary(&rows, &out)?;
            eprintln!("wrote {} files to {}", files.len(), out.display());
        }
    }
    Ok(())
}
