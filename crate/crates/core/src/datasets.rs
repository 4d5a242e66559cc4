//! CIFAR-10 and STL-10 in their native binary layouts, seeded subset
//! selection, and resizing to the working resolution.
//!
//! A dataset directory may carry a `CHECKSUMS` file (`<sha256>  <file>` per
//! line, as written by [`install_archive`]); every listed file that is read
//! is verified against it.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use md5::Md5;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::stream::{KeyStream, RandomStream};

/// Side of the images fed to the cipher.
pub const WORKING_SIZE: usize = 224;

const CIFAR_SIDE: usize = 32;
const CIFAR_RECORD: usize = 1 + 3 * CIFAR_SIDE * CIFAR_SIDE;
const STL_SIDE: usize = 96;
const STL_RECORD: usize = 3 * STL_SIDE * STL_SIDE;
const MANIFEST: &str = include_str!("../data/datasets.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetName {
    Cifar10,
    Stl10,
}

impl DatasetName {
    pub const ALL: [DatasetName; 2] = [DatasetName::Cifar10, DatasetName::Stl10];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetName::Cifar10 => "cifar10",
            DatasetName::Stl10 => "stl10",
        }
    }

    /// Native image side.
    pub fn side(self) -> usize {
        match self {
            DatasetName::Cifar10 => CIFAR_SIDE,
            DatasetName::Stl10 => STL_SIDE,
        }
    }

    /// Number of images in the official split.
    pub fn split_size(self, split: Split) -> usize {
        match (self, split) {
            (DatasetName::Cifar10, Split::Test) => 10_000,
            (DatasetName::Cifar10, Split::Train) => 50_000,
            (DatasetName::Stl10, Split::Test) => 8_000,
            (DatasetName::Stl10, Split::Train) => 5_000,
        }
    }

    pub fn source(self) -> Result<ArchiveSource> {
        let mut all: BTreeMap<String, ArchiveSource> =
            toml::from_str(MANIFEST).map_err(|e| Error::Config(e.to_string()))?;
        all.remove(self.as_str())
            .ok_or_else(|| Error::Config(format!("no manifest entry for {self}")))
    }
}

impl fmt::Display for DatasetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "cifar10" => Ok(DatasetName::Cifar10),
            "stl10" => Ok(DatasetName::Stl10),
            _ => Err(Error::InvalidParameter(format!("unknown dataset {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    #[default]
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(Error::InvalidParameter(format!("unknown split {s:?}"))),
        }
    }
}

/// Where an archive comes from and what it must hash to.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
pub struct ArchiveSource {
    pub url: String,
    pub md5: String,
    /// Directory the archive unpacks to.
    pub directory: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: DatasetName,
    #[serde(default)]
    pub split: Split,
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        let max = self.name.split_size(self.split);
        if self.count == 0 || self.count > max {
            return Err(Error::InvalidParameter(format!(
                "{} {:?} holds {max} images; asked for {}",
                self.name, self.split, self.count
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    /// Position in the split.
    pub index: usize,
    pub label: u8,
    pub image: Image,
}

fn split_files(name: DatasetName, split: Split) -> Vec<(String, Option<String>)> {
    match (name, split) {
        (DatasetName::Cifar10, Split::Test) => vec![("test_batch.bin".into(), None)],
        (DatasetName::Cifar10, Split::Train) => (1..=5).map(|i| (format!("data_batch_{i}.bin"), None)).collect(),
        (DatasetName::Stl10, Split::Test) => vec![("test_X.bin".into(), Some("test_y.bin".into()))],
        (DatasetName::Stl10, Split::Train) => vec![("train_X.bin".into(), Some("train_y.bin".into()))],
    }
}

/// Directory under `root` that holds `name`.
pub fn dataset_dir(root: &Path, name: DatasetName) -> PathBuf {
    root.join(match name {
        DatasetName::Cifar10 => "cifar-10-batches-bin",
        DatasetName::Stl10 => "stl10_binary",
    })
}

fn read_checked(path: &Path, checksums: &BTreeMap<String, String>) -> Result<Vec<u8>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let bytes = fs::read(path)?;
    let file = path.file_name().and_then(|f| f.to_str()).unwrap_or_default();
    if let Some(expected) = checksums.get(file) {
        let actual = hex::encode(Sha256::digest(&bytes));
        if !actual.eq_ignore_ascii_case(expected) {
            return Err(Error::Checksum {
                path: path.to_path_buf(),
                expected: expected.clone(),
                actual,
            });
        }
    }
    Ok(bytes)
}

/// Parses a `CHECKSUMS` file in `dir`, or returns an empty map if absent.
pub fn read_checksums(dir: &Path) -> Result<BTreeMap<String, String>> {
    let path = dir.join("CHECKSUMS");
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let mut out = BTreeMap::new();
    for (n, line) in fs::read_to_string(&path)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (digest, file) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::Config(format!("{}:{}: expected `<sha256>  <file>`", path.display(), n + 1)))?;
        out.insert(file.trim().to_string(), digest.to_string());
    }
    Ok(out)
}

/// Writes `CHECKSUMS` for every regular file in `dir`.
pub fn write_checksums(dir: &Path) -> Result<()> {
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n != "CHECKSUMS")
        .collect();
    names.sort();
    let mut text = String::new();
    for name in names {
        let digest = hex::encode(Sha256::digest(fs::read(dir.join(&name))?));
        text.push_str(&format!("{digest}  {name}\n"));
    }
    fs::write(dir.join("CHECKSUMS"), text)?;
    Ok(())
}

fn check_records(path: &Path, len: usize, record: usize) -> Result<usize> {
    if len % record != 0 {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            offset: (len - len % record) as u64,
            record,
        });
    }
    Ok(len / record)
}

/// Parses CIFAR-10 records: one label byte, then 1024 red, 1024 green and
/// 1024 blue bytes in row-major order.
pub fn parse_cifar(bytes: &[u8], path: &Path) -> Result<Vec<(u8, Image)>> {
    check_records(path, bytes.len(), CIFAR_RECORD)?;
    let area = CIFAR_SIDE * CIFAR_SIDE;
    bytes
        .chunks_exact(CIFAR_RECORD)
        .map(|r| {
            let planes = &r[1..];
            let data = (0..area).flat_map(|i| [planes[i], planes[area + i], planes[2 * area + i]]).collect();
            Ok((r[0], Image::new(CIFAR_SIDE, CIFAR_SIDE, data)?))
        })
        .collect()
}

/// Inverse of [`parse_cifar`].
pub fn serialize_cifar(records: &[(u8, Image)]) -> Result<Vec<u8>> {
    let area = CIFAR_SIDE * CIFAR_SIDE;
    let mut out = Vec::with_capacity(records.len() * CIFAR_RECORD);
    for (label, img) in records {
        if img.width() != CIFAR_SIDE || img.height() != CIFAR_SIDE {
            return Err(Error::SizeMismatch(format!("CIFAR-10 images are 32x32, got {}x{}", img.width(), img.height())));
        }
        out.push(*label);
        for c in 0..3 {
            out.extend((0..area).map(|i| img.data()[3 * i + c]));
        }
    }
    Ok(out)
}

/// Parses STL-10 images: three 96x96 planes per image, each column-major.
pub fn parse_stl(bytes: &[u8], path: &Path) -> Result<Vec<Image>> {
    check_records(path, bytes.len(), STL_RECORD)?;
    let area = STL_SIDE * STL_SIDE;
    bytes
        .chunks_exact(STL_RECORD)
        .map(|r| {
            Image::from_fn(STL_SIDE, STL_SIDE, |x, y| {
                let i = x * STL_SIDE + y;
                [r[i], r[area + i], r[2 * area + i]]
            })
        })
        .map(Ok)
        .collect()
}

/// Inverse of [`parse_stl`].
pub fn serialize_stl(images: &[Image]) -> Result<Vec<u8>> {
    let area = STL_SIDE * STL_SIDE;
    let mut out = vec![0u8; images.len() * STL_RECORD];
    for (img, r) in images.iter().zip(out.chunks_exact_mut(STL_RECORD)) {
        if img.width() != STL_SIDE || img.height() != STL_SIDE {
            return Err(Error::SizeMismatch(format!("STL-10 images are 96x96, got {}x{}", img.width(), img.height())));
        }
        for x in 0..STL_SIDE {
            for y in 0..STL_SIDE {
                let px = img.pixel(x, y);
                for c in 0..3 {
                    r[c * area + x * STL_SIDE + y] = px[c];
                }
            }
        }
    }
    Ok(out)
}

/// Reads every record of a split.
pub fn load_split(name: DatasetName, split: Split, root: &Path) -> Result<Vec<Record>> {
    let dir = dataset_dir(root, name);
    let checksums = read_checksums(&dir)?;
    let mut out = Vec::new();
    for (file, labels) in split_files(name, split) {
        let path = dir.join(&file);
        let bytes = read_checked(&path, &checksums)?;
        let parsed: Vec<(u8, Image)> = match name {
            DatasetName::Cifar10 => parse_cifar(&bytes, &path)?,
            DatasetName::Stl10 => {
                let images = parse_stl(&bytes, &path)?;
                let labels = match labels {
                    Some(l) => {
                        let lpath = dir.join(l);
                        if lpath.exists() {
                            read_checked(&lpath, &checksums)?
                        } else {
                            vec![0; images.len()]
                        }
                    }
                    None => vec![0; images.len()],
                };
                if labels.len() != images.len() {
                    return Err(Error::SizeMismatch(format!(
                        "{} holds {} images but {} labels",
                        path.display(),
                        images.len(),
                        labels.len()
                    )));
                }
                labels.into_iter().zip(images).collect()
            }
        };
        let base = out.len();
        out.extend(parsed.into_iter().enumerate().map(|(i, (label, image))| Record {
            index: base + i,
            label,
            image,
        }));
    }
    Ok(out)
}

/// The first `count` entries of a seeded shuffle of `0..total`.
pub fn select_indices(total: usize, count: usize, seed: u64) -> Result<Vec<usize>> {
    if count > total {
        return Err(Error::InvalidParameter(format!("cannot select {count} of {total} images")));
    }
    let mut perm = RandomStream::derived(&[0xDA7A, seed]).permutation(total);
    perm.truncate(count);
    Ok(perm)
}

/// Loads the records chosen by `spec`, in selection order.
///
/// The selection is drawn from however many records the files hold, so
/// smaller stand-in corpora in the same layout load as well.
pub fn load(spec: &DatasetSpec, root: &Path) -> Result<Vec<Record>> {
    spec.validate()?;
    let mut all: Vec<Option<Record>> = load_split(spec.name, spec.split, root)?.into_iter().map(Some).collect();
    let picks = select_indices(all.len(), spec.count, spec.seed)?;
    Ok(picks.into_iter().map(|i| all[i].take().expect("indices are distinct")).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResizeKernel {
    Nearest,
    #[default]
    Bilinear,
    Bicubic,
}

impl FromStr for ResizeKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(ResizeKernel::Nearest),
            "bilinear" => Ok(ResizeKernel::Bilinear),
            "bicubic" => Ok(ResizeKernel::Bicubic),
            _ => Err(Error::InvalidParameter(format!("unknown resize kernel {s:?}"))),
        }
    }
}

pub fn resize(img: &Image, width: usize, height: usize, kernel: ResizeKernel) -> Result<Image> {
    if img.width() == width && img.height() == height {
        return Ok(img.clone());
    }
    let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
        .expect("image buffers always match their dimensions");
    let filter = match kernel {
        ResizeKernel::Nearest => image::imageops::FilterType::Nearest,
        ResizeKernel::Bilinear => image::imageops::FilterType::Triangle,
        ResizeKernel::Bicubic => image::imageops::FilterType::CatmullRom,
    };
    let out = image::imageops::resize(&buf, width as u32, height as u32, filter);
    Image::new(width, height, out.into_raw())
}

/// Resizes to 224x224.
pub fn resize_to_working(img: &Image, kernel: ResizeKernel) -> Image {
    resize(img, WORKING_SIZE, WORKING_SIZE, kernel).expect("valid image buffer")
}

pub fn resize_all(images: &[Image], kernel: ResizeKernel) -> Vec<Image> {
    images.par_iter().map(|i| resize_to_working(i, kernel)).collect()
}

/// Verifies a downloaded `.tar.gz` against its MD5, unpacks it under
/// `root` and records SHA-256 digests of the unpacked files.
pub fn install_archive(archive: &Path, source: &ArchiveSource, root: &Path) -> Result<PathBuf> {
    let mut file = fs::File::open(archive).map_err(|_| Error::MissingFile(archive.to_path_buf()))?;
    let mut hasher = Md5::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    let actual = hex::encode(hasher.finalize());
    if !actual.eq_ignore_ascii_case(&source.md5) {
        return Err(Error::Checksum {
            path: archive.to_path_buf(),
            expected: source.md5.clone(),
            actual,
        });
    }
    fs::create_dir_all(root)?;
    let gz = flate2::read::GzDecoder::new(fs::File::open(archive)?);
    tar::Archive::new(gz).unpack(root)?;
    let dir = root.join(&source.directory);
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir));
    }
    write_checksums(&dir)?;
    Ok(dir)
}
