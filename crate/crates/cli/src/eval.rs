//! Scoring predictions against ground truth and the run record.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use lumisphere::metrics::{angle_deg, emit_results_table, rm_score, MethodRow, NormalScore, ResultsTable, RmScore, SplitScore, TableMetadata, RESULTS_SCHEMA};
use lumisphere::pfm;
use lumisphere::synth::dataset::{Split, MANIFEST_FILE};
use lumisphere::synth::Manifest;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::methods::{item_inputs, normals_path, prediction_path};
use crate::{sha256_hex, write_file, Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemScore {
    pub item: String,
    pub split: Split,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<RmScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normals: Option<NormalScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodEval {
    pub method: String,
    /// sha256 over the per-item prediction file hashes, in item order.
    pub predictions_sha256: String,
    pub items: Vec<ItemScore>,
}

/// Everything needed to reproduce and audit an evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub tool_version: String,
    pub config: Config,
    /// Input file (relative path) → sha256.
    pub asset_hashes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<MethodEval>,
    pub wall_clock_s: f64,
}

impl RunRecord {
    pub fn new(command: &str, config: &Config, asset_hashes: BTreeMap<String, String>) -> Self {
        Self {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            asset_hashes,
            methods: Vec::new(),
            wall_clock_s: 0.0,
        }
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_file(path, text.as_bytes())
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("run record {}", path.display()))
    }
}

pub struct Evaluation {
    pub table: ResultsTable,
    pub methods: Vec<MethodEval>,
    pub outcome: Outcome,
}

struct Scored {
    entry: ItemScore,
    angles: Vec<f64>,
    file_hash: String,
}

fn score_item(root: &Path, item: &lumisphere::synth::dataset::ManifestItem, method: &str, linear: bool) -> Scored {
    let pred_path = prediction_path(root, method, &item.id, linear);
    let mut file_hash = String::new();
    let mut angles = Vec::new();
    let run = |file_hash: &mut String, angles: &mut Vec<f64>| -> anyhow::Result<(RmScore, Option<NormalScore>)> {
        let bytes = std::fs::read(&pred_path).with_context(|| format!("prediction {}", pred_path.display()))?;
        *file_hash = sha256_hex(&bytes);
        let pred = pfm::read_map(&pred_path)?;
        let gt = pfm::read_map(&item_inputs(root, item, linear).0)?;
        let score = rm_score(&pred, &gt)?;
        let npath = normals_path(root, method, &item.id, linear);
        let normals = if npath.exists() {
            let est = pfm::read_normals(&npath)?;
            let gt = pfm::read_normals(&root.join(&item.files.normals))?;
            let s = lumisphere::metrics::normal_error_stats(&est, &gt)?;
            angles.extend((0..gt.len()).filter(|&k| gt.mask[k]).map(|k| angle_deg(est.normals[k], gt.normals[k])));
            Some(s)
        } else {
            None
        };
        Ok((score, normals))
    };
    let entry = match run(&mut file_hash, &mut angles) {
        Ok((score, normals)) => ItemScore { item: item.id.clone(), split: item.split, score: Some(score), normals, error: None },
        Err(e) => ItemScore { item: item.id.clone(), split: item.split, score: None, normals: None, error: Some(format!("{e:#}")) },
    };
    Scored { entry, angles, file_hash }
}

fn pooled(mut angles: Vec<f64>) -> Option<NormalScore> {
    if angles.is_empty() {
        return None;
    }
    let n = angles.len() as f64;
    let mean = angles.iter().sum::<f64>() / n;
    let rmse = (angles.iter().map(|a| a * a).sum::<f64>() / n).sqrt();
    angles.sort_by(f64::total_cmp);
    let m = angles.len();
    let median = if m % 2 == 1 { angles[m / 2] } else { 0.5 * (angles[m / 2 - 1] + angles[m / 2]) };
    Some(NormalScore { mean, median, rmse, pixels: m })
}

fn split_name(s: Split) -> &'static str {
    match s {
        Split::Train => "train",
        Split::Test => "test",
    }
}

/// Scores each method's stored predictions. Rows follow `methods` order;
/// columns are the splits present in the manifest.
pub fn evaluate(root: &Path, manifest: &Manifest, methods: &[String], linear: bool) -> anyhow::Result<Evaluation> {
    let splits: Vec<Split> = [Split::Train, Split::Test].into_iter().filter(|s| manifest.items.iter().any(|i| i.split == *s)).collect();
    let mut rows = Vec::new();
    let mut evals = Vec::new();
    let mut failures = Vec::new();
    for method in methods {
        let scored: Vec<Scored> = manifest.items.par_iter().map(|item| score_item(root, item, method, linear)).collect();
        let mut scores = Vec::new();
        for &split in &splits {
            let of_split: Vec<&Scored> = scored.iter().filter(|s| s.entry.split == split).collect();
            let ok: Vec<&RmScore> = of_split.iter().filter_map(|s| s.entry.score.as_ref()).collect();
            let failed = of_split.len() - ok.len();
            if ok.is_empty() {
                scores.push(None);
                continue;
            }
            let n = ok.len() as f64;
            let angles: Vec<f64> = of_split.iter().flat_map(|s| s.angles.iter().copied()).collect();
            scores.push(Some(SplitScore {
                mse: ok.iter().map(|s| s.mse).sum::<f64>() / n,
                dssim: ok.iter().map(|s| s.dssim).sum::<f64>() / n,
                items: ok.len(),
                failed,
                normals: pooled(angles),
            }));
        }
        rows.push(MethodRow { method: method.clone(), scores });
        let mut digest = String::new();
        for s in &scored {
            digest.push_str(&s.file_hash);
            if let Some(e) = &s.entry.error {
                failures.push((format!("{method}/{}", s.entry.item), e.clone()));
            }
        }
        evals.push(MethodEval {
            method: method.clone(),
            predictions_sha256: sha256_hex(digest.as_bytes()),
            items: scored.into_iter().map(|s| s.entry).collect(),
        });
    }
    let table = emit_results_table(splits.iter().map(|s| split_name(*s).to_string()).collect(), rows, TableMetadata::new(linear))?;
    Ok(Evaluation { table, methods: evals, outcome: Outcome { failures } })
}

/// Writes `results.json`, `results.schema.json`, `results.txt` and
/// `run.json` into `out`. The config snapshot carries the domain.
pub fn write_outputs(out: &Path, root: &Path, eval: &Evaluation, config: &Config, wall_clock_s: f64) -> anyhow::Result<RunRecord> {
    write_file(&out.join("results.json"), eval.table.to_json().as_bytes())?;
    write_file(&out.join("results.schema.json"), RESULTS_SCHEMA.as_bytes())?;
    write_file(&out.join("results.txt"), eval.table.render().as_bytes())?;
    let manifest_path = root.join(MANIFEST_FILE);
    let manifest_bytes = std::fs::read(&manifest_path).with_context(|| format!("reading {}", manifest_path.display()))?;
    let hashes = BTreeMap::from([(MANIFEST_FILE.to_string(), sha256_hex(&manifest_bytes))]);
    let record = RunRecord { methods: eval.methods.clone(), wall_clock_s, ..RunRecord::new("eval", config, hashes) };
    record.write(&out.join("run.json"))?;
    Ok(record)
}
