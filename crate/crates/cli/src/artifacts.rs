//! Artifact output: atomic writes, content digests, matrix/table formats,
//! and the run manifest.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use flowcop_core::empirical::CopulaHistogram;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
}

/// Record of one subcommand run: config snapshot, artifact digests,
/// warnings, and (for shuffled runs) the replayable permutation.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub seed: u64,
    pub config: toml::Value,
    pub inputs: Vec<ArtifactEntry>,
    pub outputs: Vec<ArtifactEntry>,
    pub warnings: Vec<String>,
    /// Per-pair transposition flags of a shuffled-order run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<bool>>,
    pub elapsed_ms: u128,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: &impl Serialize) -> anyhow::Result<Self> {
        Ok(Self {
            command: command.to_string(),
            seed,
            config: toml::Value::try_from(config).context("serializing config snapshot")?,
            inputs: Vec::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
            permutation: None,
            elapsed_ms: 0,
        })
    }

    pub fn record_input(&mut self, path: &Path) -> anyhow::Result<()> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(ArtifactEntry {
            path: path.display().to_string(),
            sha256: hex_digest(&bytes),
        });
        Ok(())
    }

    /// Atomically write an output file and record its digest.
    pub fn emit(&mut self, path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
        write_atomic(path, bytes)?;
        self.outputs.push(ArtifactEntry {
            path: path.display().to_string(),
            sha256: hex_digest(bytes),
        });
        Ok(())
    }

    pub fn save(mut self, path: &Path, start: std::time::Instant) -> anyhow::Result<()> {
        self.elapsed_ms = start.elapsed().as_millis();
        let body = serde_json::to_vec_pretty(&self)?;
        write_atomic(path, &body)
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write via a temp file in the target directory plus rename, so readers
/// never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .context("creating temp file")?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Text matrix: one row per q1 bin (ascending down the file), columns q2
/// ascending, space separated. f64 Display is shortest-round-trip, so the
/// text is lossless.
pub fn matrix_text(values: &[f64], cols: usize) -> String {
    let mut out = String::new();
    for row in values.chunks(cols) {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> anyhow::Result<(usize, Vec<f64>)> {
    let mut values = Vec::new();
    let mut rows = 0usize;
    let mut cols = None;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("matrix line {}", i + 1))?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => anyhow::bail!("ragged matrix at line {}", i + 1),
            _ => {}
        }
        rows += 1;
        values.extend(row);
    }
    let cols = cols.context("empty matrix")?;
    if rows != cols {
        anyhow::bail!("matrix must be square, got {rows} x {cols}");
    }
    Ok((rows, values))
}

/// Sidecar metadata written next to each copula matrix.
#[derive(Debug, Serialize, Deserialize)]
pub struct CopulaMeta {
    pub bins: usize,
    pub n_samples: u64,
    pub pair_count: usize,
    pub conditioning: String,
    pub shuffled: bool,
    /// Mean pairwise correlation of normalized imbalances.
    pub c_bar: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

pub fn histogram_text(h: &CopulaHistogram) -> String {
    matrix_text(&h.density, h.bins)
}

/// CSV of per-pair corner asymmetries.
pub fn asymmetry_csv(summary: &flowcop_core::empirical::AsymmetrySummary) -> String {
    let mut out = String::from("k,l,alpha,beta,gamma\n");
    for (i, (a, b)) in summary.pairs.iter().enumerate() {
        out.push_str(&format!(
            "{a},{b},{},{},{}\n",
            summary.alpha[i], summary.beta[i], summary.gamma[i]
        ));
    }
    out
}

pub fn sweep_csv(header: &str, rows: &[(f64, f64)]) -> String {
    let mut out = format!("{header}\n");
    for (x, y) in rows {
        out.push_str(&format!("{x},{y}\n"));
    }
    out
}

pub fn manifest_path(output_dir: &Path, command: &str) -> PathBuf {
    output_dir.join(format!("manifest_{command}.json"))
}
