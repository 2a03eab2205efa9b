//! On-disk formats: dataset manifest plus delimited feature tables,
//! alignment files, evaluation reports, and serialized classifiers.
//!
//! All formats are text. Feature values are written with shortest
//! round-trip formatting, so read(write(x)) is lossless for finite values.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, RowDVector};
use serde::{Deserialize, Serialize};

use crate::cost::Classifier;
use crate::error::{Error, Result};
use crate::model::{
    AnnotationSequence, AssignmentPath, Clip, Dataset, LabelSet, PaddingMode, Segment,
};
use crate::pipeline::EvalReport;

/// Serialized description of a dataset: label names plus per-clip entries
/// pointing at feature files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    /// Action names; the background label is implied and fixed.
    pub labels: Vec<String>,
    pub clips: Vec<ClipEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClipEntry {
    pub id: String,
    /// Path to the feature table, relative to the manifest file.
    pub features_path: String,
    /// Ordered action names, without time stamps.
    pub annotations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Vec<GroundTruthEntry>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    pub label: String,
    /// First interval of the segment.
    pub start: usize,
    /// One past the last interval.
    pub end: usize,
}

/// Reads a manifest and all referenced feature files into a [`Dataset`].
pub fn read_dataset(manifest_path: &Path, padding: PaddingMode) -> Result<Dataset> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    dataset_from_manifest(&manifest, base, padding)
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.to_string()))
}

pub fn dataset_from_manifest(
    manifest: &DatasetManifest,
    base: &Path,
    padding: PaddingMode,
) -> Result<Dataset> {
    let label_set = LabelSet::from_actions(&manifest.labels)?;
    let mut clips = Vec::with_capacity(manifest.clips.len());
    for entry in &manifest.clips {
        let feat_path = base.join(&entry.features_path);
        let features = read_features(&feat_path)?;
        let annotation = AnnotationSequence::build(&entry.annotations, &label_set, padding)?;
        let ground_truth = entry
            .ground_truth
            .as_ref()
            .map(|segs| {
                segs.iter()
                    .map(|g| {
                        let label = label_set.index_of(&g.label).ok_or_else(|| {
                            Error::validation(format!(
                                "clip {:?}: unknown ground-truth label {:?}",
                                entry.id, g.label
                            ))
                        })?;
                        Ok(Segment {
                            label,
                            start: g.start,
                            end: g.end,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        clips.push(Clip {
            id: entry.id.clone(),
            features,
            annotation,
            ground_truth,
            supervised_assignment: None,
        });
    }
    let dataset = Dataset { label_set, clips };
    dataset.validate()?;
    Ok(dataset)
}

/// Writes a dataset as `manifest.json` plus one feature table per clip
/// under `dir`. Returns the manifest path.
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(dataset.clips.len());
    for clip in &dataset.clips {
        let file_name = format!("{}.features.txt", clip.id);
        write_features(&clip.features, &dir.join(&file_name))?;
        let annotations = clip
            .annotation
            .source_slots()
            .iter()
            .map(|&lab| dataset.label_set.name(lab).to_string())
            .collect();
        let ground_truth = clip.ground_truth.as_ref().map(|segs| {
            segs.iter()
                .map(|s| GroundTruthEntry {
                    label: dataset.label_set.name(s.label).to_string(),
                    start: s.start,
                    end: s.end,
                })
                .collect()
        });
        entries.push(ClipEntry {
            id: clip.id.clone(),
            features_path: file_name,
            annotations,
            ground_truth,
        });
    }
    let manifest = DatasetManifest {
        labels: dataset.label_set.action_names().map(String::from).collect(),
        clips: entries,
    };
    let path = dir.join("manifest.json");
    write_json(&manifest, &path)?;
    Ok(path)
}

/// Reads a delimited feature table: one interval per row, `d` numeric
/// columns separated by whitespace.
pub fn read_features(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    Error::malformed(
                        path,
                        format!("line {}: {tok:?} is not a number", lineno + 1),
                    )
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::malformed(
                    path,
                    format!(
                        "line {}: {} columns, expected {}",
                        lineno + 1,
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::malformed(path, "no feature rows"));
    }
    let d = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), d, |t, j| rows[t][j]))
}

pub fn write_features(features: &DMatrix<f64>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for t in 0..features.nrows() {
        for j in 0..features.ncols() {
            if j > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{}", features[(t, j)]));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Alignment file: per clip, per interval, the 1-based annotation slot and
/// its label name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlignmentFile {
    pub clips: Vec<ClipAlignment>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClipAlignment {
    pub id: String,
    pub intervals: Vec<IntervalAssignment>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalAssignment {
    pub interval: usize,
    /// 1-based annotation slot.
    pub slot: usize,
    pub label: String,
}

pub fn alignment_file(dataset: &Dataset, aligned: &[(usize, AssignmentPath)]) -> AlignmentFile {
    AlignmentFile {
        clips: aligned
            .iter()
            .map(|(idx, path)| {
                let clip = &dataset.clips[*idx];
                ClipAlignment {
                    id: clip.id.clone(),
                    intervals: path
                        .slots()
                        .iter()
                        .enumerate()
                        .map(|(t, &k)| IntervalAssignment {
                            interval: t,
                            slot: k + 1,
                            label: dataset.label_set.name(clip.annotation.label(k)).to_string(),
                        })
                        .collect(),
                }
            })
            .collect(),
    }
}

pub fn write_alignment(
    dataset: &Dataset,
    aligned: &[(usize, AssignmentPath)],
    path: &Path,
) -> Result<()> {
    write_json(&alignment_file(dataset, aligned), path)
}

/// Reads an alignment file back into per-clip paths, validated against the
/// dataset's annotations.
pub fn read_alignment(path: &Path, dataset: &Dataset) -> Result<Vec<(usize, AssignmentPath)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: AlignmentFile =
        serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.to_string()))?;
    file.clips
        .iter()
        .map(|entry| {
            let idx = dataset
                .clips
                .iter()
                .position(|c| c.id == entry.id)
                .ok_or_else(|| {
                    Error::validation(format!("alignment references unknown clip {:?}", entry.id))
                })?;
            let clip = &dataset.clips[idx];
            let mut slots = vec![0usize; entry.intervals.len()];
            for iv in &entry.intervals {
                if iv.interval >= slots.len() || iv.slot == 0 {
                    return Err(Error::malformed(
                        path,
                        format!("clip {:?}: bad interval record", entry.id),
                    ));
                }
                slots[iv.interval] = iv.slot - 1;
            }
            let path = AssignmentPath::new(slots, clip.annotation.len())?;
            Ok((idx, path))
        })
        .collect()
}

/// Evaluation report together with the configuration that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub seed: u64,
    pub config: serde_json::Value,
    pub report: EvalReport,
    /// Mean and sample standard deviation over repeats, when more than one
    /// split repeat was run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<RepeatSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepeatSummary {
    pub n: usize,
    pub mean_jaccard: f64,
    pub std_jaccard: f64,
    pub per_repeat: Vec<f64>,
}

impl RepeatSummary {
    pub fn from_scores(scores: &[f64]) -> Self {
        let n = scores.len();
        let mean = scores.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        RepeatSummary {
            n,
            mean_jaccard: mean,
            std_jaccard: var.sqrt(),
            per_repeat: scores.to_vec(),
        }
    }
}

pub fn write_report(report: &ReportFile, path: &Path) -> Result<()> {
    write_json(report, path)
}

pub fn read_report(path: &Path) -> Result<ReportFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.to_string()))
}

/// Serialized linear classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub labels: Vec<String>,
    /// Row-major `d x A` weights.
    pub weights: Vec<Vec<f64>>,
    pub intercept: Vec<f64>,
}

pub fn write_model(classifier: &Classifier, label_set: &LabelSet, path: &Path) -> Result<()> {
    let model = ModelFile {
        labels: label_set.names().to_vec(),
        weights: (0..classifier.weights.nrows())
            .map(|i| classifier.weights.row(i).iter().copied().collect())
            .collect(),
        intercept: classifier.intercept.iter().copied().collect(),
    };
    write_json(&model, path)
}

pub fn read_model(path: &Path) -> Result<(Classifier, Vec<String>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let model: ModelFile =
        serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.to_string()))?;
    let d = model.weights.len();
    let a = model.intercept.len();
    for row in &model.weights {
        if row.len() != a {
            return Err(Error::malformed(path, "weight row length mismatch"));
        }
    }
    let weights = DMatrix::from_fn(d, a, |i, j| model.weights[i][j]);
    let intercept = RowDVector::from_vec(model.intercept.clone());
    Ok((Classifier { weights, intercept }, model.labels))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)
        .map_err(|e| Error::malformed(path, e.to_string()))?;
    writer.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Serializes iteration traces as line-delimited JSON.
pub fn write_trace(records: &[crate::solver::TraceRecord], path: &Path) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(
            &serde_json::to_string(r).map_err(|e| Error::malformed(path, e.to_string()))?,
        );
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
