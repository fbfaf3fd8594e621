//! Seed streams, CSV files and run manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::importance::{Label, LabeledSample};
use crate::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Random stream for item `index` of stage `tag` under `seed`. Distinct
/// `(tag, index)` pairs give unrelated streams.
pub fn stream(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    h.update(index.to_le_bytes());
    let key: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(key)
}

/// CSV text: a config-hash comment line, the header, then the rows.
pub fn csv_text(config_hash: &str, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = format!("# config_hash={config_hash}\n{}\n", header.join(","));
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

/// Parses CSV text produced by [`csv_text`]: comment lines are skipped and
/// the first remaining line is the header.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<String> =
        lines.next().ok_or_else(|| Error::Format("CSV has no header".into()))?.split(',').map(String::from).collect();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let row: Vec<String> = line.split(',').map(String::from).collect();
        if row.len() != header.len() {
            return Err(Error::Format(format!("CSV row {} has {} fields, expected {}", n + 1, row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Collected experience tagged with the episode it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSample {
    pub episode: usize,
    pub sample: LabeledSample,
}

pub fn dataset_header(context_dim: usize, action_dim: usize) -> Vec<String> {
    let mut h = vec!["episode".to_string()];
    h.extend((0..context_dim).map(|i| format!("ctx_{i}")));
    h.extend((0..action_dim).map(|i| format!("act_{i}")));
    h.push("label".into());
    h
}

/// Dataset CSV with columns `episode, ctx_*, act_*, label`.
pub fn dataset_csv(config_hash: &str, context_dim: usize, action_dim: usize, samples: &[EpisodeSample]) -> String {
    let header = dataset_header(context_dim, action_dim);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|e| {
            let mut r = vec![e.episode.to_string()];
            r.extend(e.sample.context.iter().map(f64::to_string));
            r.extend(e.sample.action.iter().map(f64::to_string));
            r.push(e.sample.label.tag().to_string());
            r
        })
        .collect();
    csv_text(config_hash, &header, &rows)
}

pub fn parse_dataset(text: &str) -> Result<Vec<EpisodeSample>> {
    let (header, rows) = parse_csv(text)?;
    if header.first().map(String::as_str) != Some("episode") || header.last().map(String::as_str) != Some("label") {
        return Err(Error::Format("dataset header must start with 'episode' and end with 'label'".into()));
    }
    let context_dim = header.iter().filter(|h| h.starts_with("ctx_")).count();
    let action_dim = header.iter().filter(|h| h.starts_with("act_")).count();
    if context_dim + action_dim + 2 != header.len() {
        return Err(Error::Format("unexpected dataset columns".into()));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Format(format!("bad number '{s}'")));
    rows.iter()
        .map(|r| {
            let episode = r[0].parse().map_err(|_| Error::Format(format!("bad episode id '{}'", r[0])))?;
            let context = r[1..1 + context_dim].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
            let action = r[1 + context_dim..1 + context_dim + action_dim].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
            let label = Label::parse(&r[header.len() - 1])?;
            Ok(EpisodeSample { episode, sample: LabeledSample::new(context, action, label) })
        })
        .collect()
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<EpisodeSample>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Runtime(format!("cannot read {}: {e}", path.display())))?;
    parse_dataset(&text)
}

/// Output directory that records the digest of every file it writes and
/// of every input file read through it.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    config_hash: String,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl RunDir {
    pub fn create(root: impl Into<PathBuf>, config_hash: &str) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root, config_hash: config_hash.to_string(), inputs: BTreeMap::new(), outputs: BTreeMap::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    /// Writes `contents` to `relative` under the run directory.
    pub fn write(&mut self, relative: &str, contents: &str) -> Result<PathBuf> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.outputs.insert(relative.to_string(), sha256_hex(contents.as_bytes()));
        Ok(path)
    }

    pub fn write_csv(&mut self, relative: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let text = csv_text(&self.config_hash, header, rows);
        self.write(relative, &text)
    }

    /// Reads an input file, recording its digest under `label`.
    pub fn read_input(&mut self, label: &str, path: &Path) -> Result<String> {
        let text = fs::read_to_string(path).map_err(|e| Error::Runtime(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.insert(label.to_string(), sha256_hex(text.as_bytes()));
        Ok(text)
    }

    /// Writes `manifest_<command>.json`; the manifest is not listed in itself.
    pub fn finish(mut self, command: &str) -> Result<PathBuf> {
        let manifest = serde_json::json!({
            "tool": "gandi",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config_hash": self.config_hash,
            "inputs": self.inputs,
            "outputs": self.outputs,
        });
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Runtime(e.to_string()))?;
        text.push('\n');
        let name = format!("manifest_{command}.json");
        let path = self.root.join(&name);
        fs::write(&path, text)?;
        self.outputs.clear();
        Ok(path)
    }
}
