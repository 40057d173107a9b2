//! Directory-per-class ingestion, labeling, the CSV feature cache, and
//! stratified train/test/fold construction.
//!
//! Dataset layout is `root/<class_name>/<image files>`. A class whose name
//! starts with `AI-` (case-insensitive) carries binary label 1, everything
//! else is 0, so provenance is recoverable from the class name alone.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{self, ExtractorConfig, FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use crate::imaging;
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::Task;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// Where each sample lives and which class it belongs to. Classes and
/// files are ordered lexicographically so the same tree always scans to
/// the same manifest.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    pub class_names: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub class: usize,
}

/// True if the class name marks an AI-generated class.
pub fn is_ai_class(name: &str) -> bool {
    name.to_ascii_lowercase().starts_with("ai-")
}

/// Scans a directory tree where every immediate subdirectory is a class.
pub fn scan(root: &Path) -> Result<Manifest> {
    let read_dir = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut class_dirs: Vec<PathBuf> = Vec::new();
    for entry in read_dir {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        if entry.path().is_dir() {
            class_dirs.push(entry.path());
        }
    }
    class_dirs.sort();

    let mut class_names = Vec::new();
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for (class, dir) in class_dirs.iter().enumerate() {
        let name = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        class_names.push(name.clone());
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        let mut kept = 0;
        for file in files {
            let ext = file
                .extension()
                .map(|e| e.to_string_lossy().to_ascii_lowercase())
                .unwrap_or_default();
            if IMAGE_EXTENSIONS.contains(&ext.as_str()) {
                entries.push(ManifestEntry { path: file, class });
                kept += 1;
            } else {
                warnings.push(format!("skipping non-image file {}", file.display()));
            }
        }
        if kept == 0 {
            warnings.push(format!("class '{name}' has no images"));
        }
    }
    Ok(Manifest {
        entries,
        class_names,
        warnings,
    })
}

/// The in-memory feature table: one row per decodable image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub features: Matrix,
    pub class_labels: Vec<usize>,
    pub binary_labels: Vec<u8>,
    pub paths: Vec<String>,
    pub class_names: Vec<String>,
    pub feature_names: Vec<String>,
}

impl FeatureTable {
    pub fn n_rows(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Label vector for a task: class indices, or 0/1 provenance labels.
    pub fn labels(&self, task: Task) -> Vec<usize> {
        match task {
            Task::Binary => self.binary_labels.iter().map(|&b| b as usize).collect(),
            Task::Multiclass => self.class_labels.clone(),
        }
    }

    /// Class names as seen by a task.
    pub fn label_names(&self, task: Task) -> Vec<String> {
        match task {
            Task::Binary => vec!["human".into(), "AI".into()],
            Task::Multiclass => self.class_names.clone(),
        }
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureTable {
        FeatureTable {
            features: self.features.select_rows(indices),
            class_labels: indices.iter().map(|&i| self.class_labels[i]).collect(),
            binary_labels: indices.iter().map(|&i| self.binary_labels[i]).collect(),
            paths: indices.iter().map(|&i| self.paths[i].clone()).collect(),
            class_names: self.class_names.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Writes the feature-cache CSV: 39 canonical names + class_label +
    /// binary_label + path, UTF-8, LF line endings, full-precision floats.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        let mut header: Vec<String> = self.feature_names.clone();
        header.extend([
            "class_label".to_string(),
            "binary_label".to_string(),
            "path".to_string(),
        ]);
        writer
            .write_record(&header)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        for i in 0..self.n_rows() {
            let mut record: Vec<String> = self
                .features
                .row(i)
                .iter()
                .map(|v| format!("{v}"))
                .collect();
            record.push(self.class_names[self.class_labels[i]].clone());
            record.push(format!("{}", self.binary_labels[i]));
            record.push(self.paths[i].clone());
            writer
                .write_record(&record)
                .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Reads a feature-cache CSV, validating the exact header contract.
    pub fn read_csv(path: &Path) -> Result<FeatureTable> {
        let mut reader = csv::ReaderBuilder::new()
            .from_path(path)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        let header = reader
            .headers()
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?
            .clone();
        validate_header(&header, path)?;

        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut class_name_per_row: Vec<String> = Vec::new();
        let mut binary_labels: Vec<u8> = Vec::new();
        let mut paths: Vec<String> = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::io(path, std::io::Error::other(e)))?;
            if record.len() != FEATURE_COUNT + 3 {
                return Err(Error::InvalidInput(format!(
                    "feature cache {}: row has {} columns, expected {}",
                    path.display(),
                    record.len(),
                    FEATURE_COUNT + 3
                )));
            }
            let mut row = Vec::with_capacity(FEATURE_COUNT);
            for v in record.iter().take(FEATURE_COUNT) {
                row.push(v.parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!(
                        "feature cache {}: bad float '{v}'",
                        path.display()
                    ))
                })?);
            }
            rows.push(row);
            class_name_per_row.push(record[FEATURE_COUNT].to_string());
            binary_labels.push(record[FEATURE_COUNT + 1].parse::<u8>().map_err(|_| {
                Error::InvalidInput(format!(
                    "feature cache {}: bad binary label '{}'",
                    path.display(),
                    &record[FEATURE_COUNT + 1]
                ))
            })?);
            paths.push(record[FEATURE_COUNT + 2].to_string());
        }

        let mut class_names: Vec<String> = class_name_per_row.clone();
        class_names.sort();
        class_names.dedup();
        let class_labels = class_name_per_row
            .iter()
            .map(|n| class_names.iter().position(|c| c == n).unwrap())
            .collect();
        Ok(FeatureTable {
            features: Matrix::from_rows(&rows)?,
            class_labels,
            binary_labels,
            paths,
            class_names,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        })
    }
}

fn validate_header(header: &csv::StringRecord, path: &Path) -> Result<()> {
    let expected: Vec<&str> = FEATURE_NAMES
        .iter()
        .copied()
        .chain(["class_label", "binary_label", "path"])
        .collect();
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::InvalidInput(format!(
            "feature cache {}: header does not match the canonical column contract",
            path.display()
        )));
    }
    Ok(())
}

/// Sidecar metadata written next to the cache CSV. Records the extractor
/// configuration and per-file content hashes for cache invalidation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheMetadata {
    pub format: String,
    pub version: u32,
    pub extractor: ExtractorConfig,
    pub extractor_config_hash: String,
    pub seed: u64,
    pub class_names: Vec<String>,
    pub files: HashMap<String, String>,
}

pub fn metadata_path(csv_path: &Path) -> PathBuf {
    let mut os = csv_path.as_os_str().to_owned();
    os.push(".meta.json");
    PathBuf::from(os)
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Result of building (or refreshing) a feature cache.
#[derive(Debug)]
pub struct ExtractOutcome {
    pub table: FeatureTable,
    pub extracted: usize,
    pub cached: usize,
    pub failures: Vec<(PathBuf, String)>,
}

/// Extracts features for every manifest entry, reusing rows from an
/// existing cache whose path, content hash, and extractor configuration
/// still match. Writes the refreshed CSV and sidecar before returning.
pub fn build_feature_table(
    manifest: &Manifest,
    cfg: &ExtractorConfig,
    seed: u64,
    cache_csv: &Path,
) -> Result<ExtractOutcome> {
    // Load any previous cache that is still structurally valid.
    let meta_path = metadata_path(cache_csv);
    let mut reusable: HashMap<String, Vec<f64>> = HashMap::new();
    let mut old_hashes: HashMap<String, String> = HashMap::new();
    if cache_csv.exists() && meta_path.exists() {
        let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        if let Ok(meta) = serde_json::from_str::<CacheMetadata>(&meta_text) {
            if meta.extractor == *cfg {
                if let Ok(old) = FeatureTable::read_csv(cache_csv) {
                    for i in 0..old.n_rows() {
                        reusable.insert(old.paths[i].clone(), old.features.row(i).to_vec());
                    }
                    old_hashes = meta.files;
                }
            }
        }
    }

    struct RowOutcome {
        index: usize,
        result: std::result::Result<(Vec<f64>, String, bool), String>,
    }

    let outcomes: Vec<RowOutcome> = manifest
        .entries
        .par_iter()
        .enumerate()
        .map(|(index, entry)| {
            let key = entry.path.display().to_string();
            let bytes = match fs::read(&entry.path) {
                Ok(b) => b,
                Err(e) => {
                    return RowOutcome {
                        index,
                        result: Err(format!("read failed: {e}")),
                    }
                }
            };
            let hash = sha256_hex(&bytes);
            if let (Some(row), Some(old_hash)) = (reusable.get(&key), old_hashes.get(&key)) {
                if *old_hash == hash {
                    return RowOutcome {
                        index,
                        result: Ok((row.clone(), hash, true)),
                    };
                }
            }
            match imaging::decode(&bytes, &entry.path)
                .and_then(|img| features::extract_all(&img, cfg))
            {
                Ok(FeatureVector(v)) => RowOutcome {
                    index,
                    result: Ok((v.to_vec(), hash, false)),
                },
                Err(e) => RowOutcome {
                    index,
                    result: Err(e.to_string()),
                },
            }
        })
        .collect();

    let mut rows = Vec::new();
    let mut class_labels = Vec::new();
    let mut binary_labels = Vec::new();
    let mut paths = Vec::new();
    let mut files = HashMap::new();
    let mut extracted = 0;
    let mut cached = 0;
    let mut failures = Vec::new();
    for outcome in outcomes {
        let entry = &manifest.entries[outcome.index];
        match outcome.result {
            Ok((row, hash, was_cached)) => {
                let key = entry.path.display().to_string();
                rows.push(row);
                class_labels.push(entry.class);
                binary_labels.push(u8::from(is_ai_class(&manifest.class_names[entry.class])));
                paths.push(key.clone());
                files.insert(key, hash);
                if was_cached {
                    cached += 1;
                } else {
                    extracted += 1;
                }
            }
            Err(msg) => failures.push((entry.path.clone(), msg)),
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let table = FeatureTable {
        features: Matrix::from_rows(&rows)?,
        class_labels,
        binary_labels,
        paths,
        class_names: manifest.class_names.clone(),
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
    };
    table.write_csv(cache_csv)?;
    let meta = CacheMetadata {
        format: "artdetect-features-meta".into(),
        version: 1,
        extractor: cfg.clone(),
        extractor_config_hash: cfg.hash(),
        seed,
        class_names: manifest.class_names.clone(),
        files,
    };
    let meta_json = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::io(&meta_path, std::io::Error::other(e)))?;
    fs::write(&meta_path, meta_json).map_err(|e| Error::io(&meta_path, e))?;

    Ok(ExtractOutcome {
        table,
        extracted,
        cached,
        failures,
    })
}

/// Disjoint row-index partitions; the union covers every row exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndex {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub validation: Option<Vec<usize>>,
    pub seed: u64,
}

/// Largest-remainder apportionment of `n` samples across `ratios`.
fn apportion(n: usize, ratios: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = ratios.iter().map(|r| n as f64 * r).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for i in 0..n - assigned {
        counts[order[i % ratios.len()]] += 1;
    }
    counts
}

/// Per-class shuffled, largest-remainder stratified split. `ratios` is
/// train:test or train:test:validation and must sum to 1.
pub fn stratified_split(table: &FeatureTable, ratios: &[f64], seed: u64) -> Result<SplitIndex> {
    stratified_split_labels(&table.class_labels, &table.class_names, ratios, seed)
}

/// Label-level form of [`stratified_split`], for callers that have not
/// built a feature table (e.g. image sets feeding the CNN).
pub fn stratified_split_labels(
    class_labels: &[usize],
    class_names: &[String],
    ratios: &[f64],
    seed: u64,
) -> Result<SplitIndex> {
    if !(2..=3).contains(&ratios.len()) {
        return Err(Error::InvalidInput(
            "split ratios must have 2 or 3 entries".into(),
        ));
    }
    if (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("split ratios must sum to 1".into()));
    }
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); class_names.len()];
    for (i, &c) in class_labels.iter().enumerate() {
        per_class[c].push(i);
    }
    let mut rng = Rng::new(seed);
    let mut partitions: Vec<Vec<usize>> = vec![Vec::new(); ratios.len()];
    for (c, indices) in per_class.iter_mut().enumerate() {
        if indices.is_empty() {
            continue;
        }
        let counts = apportion(indices.len(), ratios);
        if counts.contains(&0) {
            return Err(Error::Stratification {
                class: class_names[c].clone(),
                detail: format!(
                    "{} samples cannot fill all {} partitions",
                    indices.len(),
                    ratios.len()
                ),
            });
        }
        rng.shuffle(indices);
        let mut offset = 0;
        for (p, &count) in counts.iter().enumerate() {
            partitions[p].extend(&indices[offset..offset + count]);
            offset += count;
        }
    }
    for p in &mut partitions {
        p.sort_unstable();
    }
    let validation = if ratios.len() == 3 {
        Some(partitions.pop().unwrap())
    } else {
        None
    };
    let test = partitions.pop().unwrap();
    let train = partitions.pop().unwrap();
    Ok(SplitIndex {
        train,
        test,
        validation,
        seed,
    })
}

/// Stratified k-fold: each row appears in exactly one test fold; fold i's
/// training set is the complement of its test set.
pub fn kfold(table: &FeatureTable, k: usize, seed: u64) -> Result<Vec<SplitIndex>> {
    if k < 2 {
        return Err(Error::InvalidInput("kfold requires k >= 2".into()));
    }
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); table.n_classes()];
    for (i, &c) in table.class_labels.iter().enumerate() {
        per_class[c].push(i);
    }
    for (c, indices) in per_class.iter().enumerate() {
        if !indices.is_empty() && indices.len() < k {
            return Err(Error::Stratification {
                class: table.class_names[c].clone(),
                detail: format!("{} samples < {} folds", indices.len(), k),
            });
        }
    }
    let mut rng = Rng::new(seed);
    let mut test_folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for indices in per_class.iter_mut() {
        if indices.is_empty() {
            continue;
        }
        rng.shuffle(indices);
        let base = indices.len() / k;
        let extra = indices.len() % k;
        let mut offset = 0;
        for (f, fold) in test_folds.iter_mut().enumerate() {
            let count = base + usize::from(f < extra);
            fold.extend(&indices[offset..offset + count]);
            offset += count;
        }
    }
    let n = table.n_rows();
    let mut folds = Vec::with_capacity(k);
    for test in test_folds.iter_mut() {
        test.sort_unstable();
        let in_test: Vec<bool> = {
            let mut mask = vec![false; n];
            for &i in test.iter() {
                mask[i] = true;
            }
            mask
        };
        let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
        debug_assert!(train.iter().all(|i| !test.contains(i)));
        folds.push(SplitIndex {
            train,
            test: std::mem::take(test),
            validation: None,
            seed,
        });
    }
    Ok(folds)
}
