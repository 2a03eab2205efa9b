//! Experiment orchestration: dataset splits, weakly and semi-supervised
//! alignment runs, the supervised square-loss and normalized-cut baselines,
//! alignment evaluation, classification scoring, and grid search over the
//! validation split.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{ridge_fit, Classifier, CostOperator};
use crate::error::{Error, Result};
use crate::model::{AssignmentMatrix, AssignmentPath, Clip, Dataset, LabelSet, Segment};
use crate::oracle;
use crate::solver::{solve, SolveOptions, SolveResult};

/// Split fractions, all relative to the full dataset.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitSpec {
    pub sup_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub n_repeats: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            sup_fraction: 0.0,
            val_fraction: 0.05,
            test_fraction: 0.10,
            seed: 0,
            n_repeats: 1,
        }
    }
}

/// Clip indices of each part. Disjoint; the union of all four parts covers
/// the dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub sup: Vec<usize>,
    pub eval: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Deterministically partitions `n_clips` clip indices according to `spec`.
pub fn split_dataset(n_clips: usize, spec: &SplitSpec) -> Result<Split> {
    for f in [spec.sup_fraction, spec.val_fraction, spec.test_fraction] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::validation(format!("split fraction {f} outside [0,1]")));
        }
    }
    let n_sup = (spec.sup_fraction * n_clips as f64).round() as usize;
    let n_val = (spec.val_fraction * n_clips as f64).round() as usize;
    let n_test = (spec.test_fraction * n_clips as f64).round() as usize;
    if n_sup + n_val + n_test > n_clips {
        return Err(Error::validation(format!(
            "split sizes {n_sup}+{n_val}+{n_test} exceed {n_clips} clips"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<usize> = (0..n_clips).collect();
    order.shuffle(&mut rng);
    let take = |count: usize, order: &mut Vec<usize>| -> Vec<usize> {
        let mut part: Vec<usize> = order.drain(..count).collect();
        part.sort_unstable();
        part
    };
    let test = take(n_test, &mut order);
    let val = take(n_val, &mut order);
    let sup = take(n_sup, &mut order);
    let eval = take(order.len(), &mut order);
    Ok(Split {
        sup,
        eval,
        val,
        test,
    })
}

/// The paper-style overlap score `|I ∩ I*| / |I|` for one prediction `pred`
/// against ground truth `truth` (half-open interval ranges).
pub fn jaccard_interval(pred: &std::ops::Range<usize>, truth: &std::ops::Range<usize>) -> f64 {
    let len = pred.end.saturating_sub(pred.start);
    if len == 0 {
        return 0.0;
    }
    let lo = pred.start.max(truth.start);
    let hi = pred.end.min(truth.end);
    hi.saturating_sub(lo) as f64 / len as f64
}

/// One scored ground-truth interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalScore {
    pub clip_id: String,
    pub slot: usize,
    pub label: String,
    pub score: f64,
}

/// Alignment quality report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_interval_scores: Vec<IntervalScore>,
    pub mean_jaccard: f64,
    pub per_class_jaccard: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_class_ap: Option<BTreeMap<String, f64>>,
    /// Clips excluded because their ground truth could not be matched to
    /// the annotation slots.
    pub skipped_clips: usize,
}

/// Scores predicted alignments against time-stamped ground truth.
///
/// Non-background annotation slots are matched in order to the
/// non-background ground-truth segments in temporal order; background is
/// excluded from scoring. Clips whose slot and segment counts disagree are
/// skipped and counted.
pub fn evaluate_alignment(
    aligned: &[(usize, AssignmentPath)],
    dataset: &Dataset,
) -> Result<EvalReport> {
    let bg = dataset.label_set.background();
    let mut scores = Vec::new();
    let mut skipped = 0usize;
    for (clip_idx, path) in aligned {
        let clip = &dataset.clips[*clip_idx];
        let Some(gt) = &clip.ground_truth else {
            return Err(Error::validation(format!(
                "clip {:?} has no ground truth to evaluate against",
                clip.id
            )));
        };
        let truth: Vec<&Segment> = gt.iter().filter(|s| s.label != bg).collect();
        let slots = clip.annotation.action_slots(bg);
        if truth.len() != slots.len()
            || truth
                .iter()
                .zip(&slots)
                .any(|(seg, &k)| seg.label != clip.annotation.label(k))
        {
            skipped += 1;
            continue;
        }
        for (seg, &k) in truth.iter().zip(&slots) {
            let pred = path.slot_range(k);
            let score = jaccard_interval(&pred, &(seg.start..seg.end));
            scores.push(IntervalScore {
                clip_id: clip.id.clone(),
                slot: k,
                label: dataset.label_set.name(seg.label).to_string(),
                score,
            });
        }
    }
    Ok(report_from_scores(scores, skipped))
}

fn report_from_scores(scores: Vec<IntervalScore>, skipped: usize) -> EvalReport {
    let mean = if scores.is_empty() {
        0.0
    } else {
        scores.iter().map(|s| s.score).sum::<f64>() / scores.len() as f64
    };
    let mut per_class: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for s in &scores {
        let e = per_class.entry(s.label.clone()).or_insert((0.0, 0));
        e.0 += s.score;
        e.1 += 1;
    }
    EvalReport {
        per_interval_scores: scores,
        mean_jaccard: mean,
        per_class_jaccard: per_class
            .into_iter()
            .map(|(k, (sum, n))| (k, sum / n as f64))
            .collect(),
        per_class_ap: None,
        skipped_clips: skipped,
    }
}

/// Hyper-parameters of one alignment run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AlignConfig {
    pub lambda: f64,
    /// Linear penalty on the background column.
    pub kappa_bg: f64,
    /// Loss weight of the background class.
    pub bg_weight: f64,
    pub solve: SolveOptions,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            lambda: 1e-2,
            kappa_bg: 0.0,
            bg_weight: 1.0,
            solve: SolveOptions::default(),
        }
    }
}

impl AlignConfig {
    pub fn weights(&self, label_set: &LabelSet) -> DVector<f64> {
        let mut w = DVector::from_element(label_set.len(), 1.0);
        w[label_set.background()] = self.bg_weight;
        w
    }

    pub fn kappa(&self, label_set: &LabelSet) -> DVector<f64> {
        let mut k = DVector::from_element(label_set.len(), 0.0);
        k[label_set.background()] = self.kappa_bg;
        k
    }
}

/// Outcome of one alignment run: the solver output over the optimization
/// subset plus per-clip paths keyed by original dataset index.
pub struct AlignmentRun {
    pub result: SolveResult,
    /// Original clip index for each clip of the optimization subset.
    pub subset: Vec<usize>,
    pub report: EvalReport,
    pub classifier: Option<Classifier>,
}

impl AlignmentRun {
    /// Path for a clip given by original dataset index, if it took part.
    pub fn path_for(&self, clip_idx: usize) -> Option<&AssignmentPath> {
        self.subset
            .iter()
            .position(|&i| i == clip_idx)
            .map(|p| &self.result.paths[p])
    }
}

/// Weakly supervised run: the cost couples Sup, Eval and Val clips, every
/// clip is free (time stamps are ignored), and the report is computed on
/// the Eval part only.
pub fn run_weak(dataset: &Dataset, split: &Split, config: &AlignConfig) -> Result<AlignmentRun> {
    run_alignment(dataset, split, config, false)
}

/// Semi-supervised run: Sup clips are frozen to their time-stamped
/// assignment, everything else as in [`run_weak`].
pub fn run_semi(dataset: &Dataset, split: &Split, config: &AlignConfig) -> Result<AlignmentRun> {
    run_alignment(dataset, split, config, true)
}

fn run_alignment(
    dataset: &Dataset,
    split: &Split,
    config: &AlignConfig,
    fix_sup: bool,
) -> Result<AlignmentRun> {
    let mut subset: Vec<usize> = split
        .sup
        .iter()
        .chain(&split.eval)
        .chain(&split.val)
        .copied()
        .collect();
    subset.sort_unstable();
    if subset.is_empty() {
        return Err(Error::validation("optimization subset is empty"));
    }
    let clips: Vec<Clip> = subset
        .iter()
        .map(|&i| {
            let mut clip = dataset.clips[i].clone();
            clip.supervised_assignment = if fix_sup && split.sup.contains(&i) {
                Some(supervised_matrix(&clip, &dataset.label_set)?)
            } else {
                None
            };
            Ok(clip)
        })
        .collect::<Result<_>>()?;
    let sub_dataset = Dataset {
        label_set: dataset.label_set.clone(),
        clips,
    };
    let op = CostOperator::diffrac(
        &sub_dataset,
        config.lambda,
        Some(config.weights(&dataset.label_set)),
        Some(config.kappa(&dataset.label_set)),
    )?;
    let result = solve(&op, &sub_dataset, &config.solve)?;
    let classifier = Some(op.recover_classifier(result.relaxed.matrix())?);

    let aligned = paths_for(&result, &subset, &split.eval);
    let report = evaluate_alignment(&aligned, dataset)?;
    Ok(AlignmentRun {
        result,
        subset,
        report,
        classifier,
    })
}

fn paths_for(
    result: &SolveResult,
    subset: &[usize],
    wanted: &[usize],
) -> Vec<(usize, AssignmentPath)> {
    wanted
        .iter()
        .filter_map(|&i| {
            subset
                .iter()
                .position(|&j| j == i)
                .map(|p| (i, result.paths[p].clone()))
        })
        .collect()
}

/// Builds the frozen assignment matrix of a time-stamped clip by matching
/// ground-truth segments to annotation slots in order.
pub fn supervised_matrix(clip: &Clip, label_set: &LabelSet) -> Result<AssignmentMatrix> {
    let bg = label_set.background();
    let gt = clip.ground_truth.as_ref().ok_or_else(|| {
        Error::validation(format!(
            "clip {:?}: supervised mode needs time-stamped ground truth",
            clip.id
        ))
    })?;
    let truth: Vec<&Segment> = gt.iter().filter(|s| s.label != bg).collect();
    let slots = clip.annotation.action_slots(bg);
    if truth.len() != slots.len() {
        return Err(Error::validation(format!(
            "clip {:?}: {} ground-truth segments cannot fill {} action slots",
            clip.id,
            truth.len(),
            slots.len()
        )));
    }
    let t_len = clip.num_intervals();
    let k_len = clip.annotation.len();
    for (seg, &k) in truth.iter().zip(&slots) {
        if seg.label != clip.annotation.label(k) {
            return Err(Error::validation(format!(
                "clip {:?}: ground-truth order disagrees with the annotation",
                clip.id
            )));
        }
    }

    // The path is a concatenation of regions: the (background) slots before
    // the first action, each action slot over its segment, and the
    // background slots between/after actions over the gaps. Every slot in a
    // gap region must receive at least one interval.
    let mut out: Vec<usize> = Vec::with_capacity(t_len);
    let push_gap = |out: &mut Vec<usize>, slot_lo: usize, slot_hi: usize, len: usize| {
        let count = slot_hi - slot_lo;
        if count == 0 {
            if len != 0 {
                return Err(Error::validation(format!(
                    "clip {:?}: {len} unannotated intervals but no background slot to hold them",
                    clip.id
                )));
            }
            return Ok(());
        }
        if len < count {
            return Err(Error::validation(format!(
                "clip {:?}: {len} intervals cannot fill {count} background slots",
                clip.id
            )));
        }
        // First slot absorbs the slack, the rest get one interval each.
        out.extend(std::iter::repeat(slot_lo).take(len - (count - 1)));
        out.extend(slot_lo + 1..slot_hi);
        Ok(())
    };

    let mut prev_slot_end = 0usize; // first slot not yet emitted
    let mut prev_t = 0usize;
    for (seg, &k) in truth.iter().zip(&slots) {
        if seg.start < prev_t {
            return Err(Error::validation(format!(
                "clip {:?}: ground-truth segments overlap or are out of order",
                clip.id
            )));
        }
        push_gap(&mut out, prev_slot_end, k, seg.start - prev_t)?;
        out.extend(std::iter::repeat(k).take(seg.len()));
        prev_slot_end = k + 1;
        prev_t = seg.end;
    }
    push_gap(&mut out, prev_slot_end, k_len, t_len - prev_t)?;

    let path = AssignmentPath::new(out, k_len)
        .map_err(|e| Error::validation(format!("clip {:?}: {e}", clip.id)))?;
    Ok(path.to_matrix(&clip.annotation, label_set.len()))
}

/// Supervised square-loss baseline: ridge regression of one-hot interval
/// labels onto features over the Sup clips.
pub fn train_sl_baseline(dataset: &Dataset, sup: &[usize], lambda: f64) -> Result<Classifier> {
    if sup.is_empty() {
        return Err(Error::validation("SL baseline needs a non-empty Sup set"));
    }
    let d = dataset.feature_dim()?;
    let a = dataset.label_set.len();
    let total: usize = sup.iter().map(|&i| dataset.clips[i].num_intervals()).sum();
    let mut x = DMatrix::zeros(total, d);
    let mut y = DMatrix::zeros(total, a);
    let mut row = 0usize;
    for &i in sup {
        let clip = &dataset.clips[i];
        let labels = interval_labels(clip, dataset.label_set.background())?;
        x.rows_mut(row, clip.num_intervals()).copy_from(&clip.features);
        for (t, &lab) in labels.iter().enumerate() {
            y[(row + t, lab)] = 1.0;
        }
        row += clip.num_intervals();
    }
    ridge_fit(&x, &y, lambda)
}

/// Per-interval label of a time-stamped clip; intervals not covered by a
/// ground-truth segment count as background.
fn interval_labels(clip: &Clip, background: usize) -> Result<Vec<usize>> {
    let gt = clip.ground_truth.as_ref().ok_or_else(|| {
        Error::validation(format!("clip {:?} has no ground truth", clip.id))
    })?;
    let mut labels = vec![background; clip.num_intervals()];
    for seg in gt {
        for t in seg.start..seg.end {
            labels[t] = seg.label;
        }
    }
    Ok(labels)
}

/// Aligns clips with a fixed classifier: the per-clip cost is the negated
/// score matrix, decoded by the LMO (this is the rounding step applied to
/// the classifier output).
pub fn classifier_alignment(
    classifier: &Classifier,
    dataset: &Dataset,
    clips: &[usize],
) -> Result<Vec<(usize, AssignmentPath)>> {
    clips
        .iter()
        .map(|&i| {
            let clip = &dataset.clips[i];
            let scores = classifier.score(&clip.features);
            let path = oracle::lmo_path(&(-scores), &clip.annotation)?;
            Ok((i, path))
        })
        .collect()
}

/// Normalized-cut baseline run over the same subset as [`run_weak`].
pub fn run_ncut(
    dataset: &Dataset,
    split: &Split,
    alpha: f64,
    beta: f64,
    d_min: usize,
    solve_options: &SolveOptions,
) -> Result<AlignmentRun> {
    let mut subset: Vec<usize> = split
        .sup
        .iter()
        .chain(&split.eval)
        .chain(&split.val)
        .copied()
        .collect();
    subset.sort_unstable();
    let clips: Vec<Clip> = subset
        .iter()
        .map(|&i| {
            let mut c = dataset.clips[i].clone();
            c.supervised_assignment = None;
            // The chi-squared kernel expects histogram-like rows; shift to
            // nonnegative and l1-normalize so arbitrary real features do
            // not overflow the similarity.
            c.features = histogram_like(&c.features);
            c
        })
        .collect();
    let sub_dataset = Dataset {
        label_set: dataset.label_set.clone(),
        clips,
    };
    let op = CostOperator::ncut(&sub_dataset, alpha, beta, d_min, None, None)?;
    let result = solve(&op, &sub_dataset, solve_options)?;
    let aligned = paths_for(&result, &subset, &split.eval);
    let report = evaluate_alignment(&aligned, dataset)?;
    Ok(AlignmentRun {
        result,
        subset,
        report,
        classifier: None,
    })
}

/// Maps arbitrary real features to nonnegative l1-normalized rows so the
/// chi-squared similarity of the NCUT cost is well defined.
fn histogram_like(features: &DMatrix<f64>) -> DMatrix<f64> {
    let min = features.iter().cloned().fold(f64::INFINITY, f64::min);
    let shift = if min < 0.0 { -min } else { 0.0 };
    let mut out = features.add_scalar(shift);
    for mut row in out.row_iter_mut() {
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row /= sum;
        }
    }
    out
}

/// Equal-length slot baseline: slot boundaries placed uniformly.
pub fn uniform_alignment(dataset: &Dataset, clips: &[usize]) -> Vec<(usize, AssignmentPath)> {
    clips
        .iter()
        .map(|&i| {
            let clip = &dataset.clips[i];
            let t_len = clip.num_intervals();
            let k_len = clip.annotation.len();
            let slots: Vec<usize> = (0..t_len).map(|t| t * k_len / t_len).collect();
            (
                i,
                AssignmentPath::new(slots, k_len).expect("uniform path is admissible"),
            )
        })
        .collect()
}

/// Scores test intervals with a classifier and reports per-class average
/// precision (every-positive convention, stable descending sort).
/// Classes with no positive test interval are absent from the map.
pub fn classify_and_ap(
    classifier: &Classifier,
    dataset: &Dataset,
    test: &[usize],
) -> Result<BTreeMap<String, f64>> {
    let bg = dataset.label_set.background();
    let mut scores: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for &i in test {
        let clip = &dataset.clips[i];
        let s = classifier.score(&clip.features);
        let clip_labels = interval_labels(clip, bg)?;
        for t in 0..clip.num_intervals() {
            scores.push(s.row(t).iter().copied().collect());
            labels.push(clip_labels[t]);
        }
    }
    let mut out = BTreeMap::new();
    for a in 0..dataset.label_set.len() {
        if a == bg {
            continue;
        }
        let positives: Vec<bool> = labels.iter().map(|&l| l == a).collect();
        if !positives.iter().any(|&p| p) {
            continue;
        }
        let class_scores: Vec<f64> = scores.iter().map(|s| s[a]).collect();
        out.insert(
            dataset.label_set.name(a).to_string(),
            average_precision(&class_scores, &positives),
        );
    }
    Ok(out)
}

/// Average precision with precision evaluated at every positive.
pub fn average_precision(scores: &[f64], positives: &[bool]) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].partial_cmp(&scores[i]).unwrap());
    let mut hits = 0usize;
    let mut ap = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if positives[i] {
            hits += 1;
            ap += hits as f64 / (rank + 1) as f64;
        }
    }
    let total = positives.iter().filter(|&&p| p).count();
    if total == 0 {
        return 0.0;
    }
    ap / total as f64
}

/// One grid point of the hyper-parameter search.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridPoint {
    pub lambda: f64,
    pub kappa_bg: f64,
    pub bg_weight: f64,
}

/// Runs the alignment for every grid point and returns the index of the
/// configuration with the best mean Jaccard on the Val split (first best
/// wins on ties). Reported results must come from a fresh run on Eval.
pub fn grid_search(
    dataset: &Dataset,
    split: &Split,
    grid: &[GridPoint],
    semi: bool,
    solve_options: &SolveOptions,
) -> Result<(usize, Vec<f64>)> {
    if grid.is_empty() {
        return Err(Error::validation("hyper-parameter grid is empty"));
    }
    if split.val.is_empty() {
        return Err(Error::validation("grid search needs a non-empty Val split"));
    }
    let mut val_scores = Vec::with_capacity(grid.len());
    let mut best = 0usize;
    for (g, point) in grid.iter().enumerate() {
        let config = AlignConfig {
            lambda: point.lambda,
            kappa_bg: point.kappa_bg,
            bg_weight: point.bg_weight,
            solve: *solve_options,
        };
        let run = if semi {
            run_semi(dataset, split, &config)?
        } else {
            run_weak(dataset, split, &config)?
        };
        // Score on Val ground truth; this is the only place Val labels are
        // consulted.
        let aligned = paths_for(&run.result, &run.subset, &split.val);
        let report = evaluate_alignment(&aligned, dataset)?;
        val_scores.push(report.mean_jaccard);
        if report.mean_jaccard > val_scores[best] {
            best = g;
        }
    }
    Ok((best, val_scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AnnotationSequence, PaddingMode};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn split_sizes_match_paper_setup() {
        let spec = SplitSpec {
            sup_fraction: 0.25,
            val_fraction: 0.05,
            test_fraction: 0.10,
            seed: 17,
            n_repeats: 1,
        };
        let split = split_dataset(100, &spec).unwrap();
        assert_eq!(split.sup.len(), 25);
        assert_eq!(split.eval.len(), 60);
        assert_eq!(split.val.len(), 5);
        assert_eq!(split.test.len(), 10);
        let mut all: Vec<usize> = split
            .sup
            .iter()
            .chain(&split.eval)
            .chain(&split.val)
            .chain(&split.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn split_is_deterministic_and_seed_sensitive() {
        let spec = SplitSpec {
            sup_fraction: 0.2,
            seed: 5,
            ..SplitSpec::default()
        };
        let a = split_dataset(40, &spec).unwrap();
        let b = split_dataset(40, &spec).unwrap();
        assert_eq!(a, b);
        let c = split_dataset(
            40,
            &SplitSpec {
                seed: 6,
                ..spec
            },
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_sup_means_weak_mode() {
        let split = split_dataset(20, &SplitSpec::default()).unwrap();
        assert!(split.sup.is_empty());
    }

    #[test]
    fn impossible_fractions_rejected() {
        let spec = SplitSpec {
            sup_fraction: 0.8,
            val_fraction: 0.2,
            test_fraction: 0.2,
            seed: 0,
            n_repeats: 1,
        };
        assert!(split_dataset(10, &spec).is_err());
    }

    #[test]
    fn jaccard_properties() {
        assert_abs_diff_eq!(jaccard_interval(&(3..7), &(3..7)), 1.0);
        // Prediction twice the truth: 0.5.
        assert_abs_diff_eq!(jaccard_interval(&(0..8), &(0..4)), 0.5);
        // Disjoint: 0.
        assert_abs_diff_eq!(jaccard_interval(&(0..3), &(5..9)), 0.0);
        // Prediction inside truth: 1.
        assert_abs_diff_eq!(jaccard_interval(&(4..6), &(0..10)), 1.0);
    }

    #[test]
    fn average_precision_edge_cases() {
        // Positives ranked first.
        assert_abs_diff_eq!(
            average_precision(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]),
            1.0
        );
        // Worst case: P positives ranked last among N.
        let n = 6;
        let p = 2;
        let scores: Vec<f64> = (0..n).map(|i| (n - i) as f64).collect();
        let positives: Vec<bool> = (0..n).map(|i| i >= n - p).collect();
        let expected: f64 =
            (1..=p).map(|i| i as f64 / (n - p + i) as f64).sum::<f64>() / p as f64;
        assert_abs_diff_eq!(average_precision(&scores, &positives), expected, epsilon = 1e-12);
    }

    #[test]
    fn average_precision_random_scores_approach_positive_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 2000;
        let rate = 0.3;
        let mut acc = 0.0;
        let trials = 50;
        for _ in 0..trials {
            let scores: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let positives: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < rate).collect();
            acc += average_precision(&scores, &positives);
        }
        let mean = acc / trials as f64;
        assert!((mean - rate).abs() < 0.02, "mean AP {mean} vs rate {rate}");
    }

    #[test]
    fn supervised_matrix_round_trip() {
        let label_set =
            LabelSet::from_actions(&["A".to_string(), "B".to_string()]).unwrap();
        let bg = label_set.background();
        let annotation = AnnotationSequence::from_label_indices(
            &[0, 1],
            bg,
            PaddingMode::BetweenOnly,
        );
        let clip = Clip {
            id: "c".into(),
            features: DMatrix::zeros(10, 2),
            annotation,
            ground_truth: Some(vec![
                Segment {
                    label: 0,
                    start: 0,
                    end: 4,
                },
                Segment {
                    label: 1,
                    start: 7,
                    end: 10,
                },
            ]),
            supervised_assignment: None,
        };
        let z = supervised_matrix(&clip, &label_set).unwrap();
        let path = z.to_path(&clip.annotation).unwrap();
        assert_eq!(path.slots(), &[0, 0, 0, 0, 1, 1, 1, 2, 2, 2]);
    }

    #[test]
    fn supervised_matrix_rejects_wrong_order() {
        let label_set =
            LabelSet::from_actions(&["A".to_string(), "B".to_string()]).unwrap();
        let bg = label_set.background();
        let annotation = AnnotationSequence::from_label_indices(
            &[0, 1],
            bg,
            PaddingMode::BetweenOnly,
        );
        let clip = Clip {
            id: "c".into(),
            features: DMatrix::zeros(10, 2),
            annotation,
            ground_truth: Some(vec![
                Segment {
                    label: 1,
                    start: 0,
                    end: 4,
                },
                Segment {
                    label: 0,
                    start: 7,
                    end: 10,
                },
            ]),
            supervised_assignment: None,
        };
        assert!(supervised_matrix(&clip, &label_set).is_err());
    }

    #[test]
    fn uniform_alignment_is_admissible() {
        let label_set =
            LabelSet::from_actions(&["A".to_string(), "B".to_string()]).unwrap();
        let bg = label_set.background();
        let clip = Clip {
            id: "c".into(),
            features: DMatrix::zeros(11, 2),
            annotation: AnnotationSequence::from_label_indices(
                &[0, 1],
                bg,
                PaddingMode::BetweenOnly,
            ),
            ground_truth: None,
            supervised_assignment: None,
        };
        let dataset = Dataset {
            label_set,
            clips: vec![clip],
        };
        let aligned = uniform_alignment(&dataset, &[0]);
        assert_eq!(aligned[0].1.len(), 11);
    }
}
