//! Domain types: label sets, ordered annotation sequences, clips, and the
//! two equivalent representations of an order-respecting assignment (path
//! and indicator matrix), together with a brute-force path enumerator used
//! as a testing oracle.
//!
//! An admissible path over `T` intervals and `K` annotation slots is a
//! non-decreasing sequence `m` with `m[0] = 0`, `m[T-1] = K-1` and steps of
//! 0 or 1 (slot indices are 0-based throughout the crate). Its matrix form
//! is the `T x A` one-hot-per-row indicator obtained by mapping each slot
//! through the annotation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed display name of the background label.
pub const BACKGROUND_NAME: &str = "∅";

/// The set of action labels, including the distinguished background label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    names: Vec<String>,
    background: usize,
}

impl LabelSet {
    /// Builds a label set from explicit names and a background index.
    pub fn new(names: Vec<String>, background: usize) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::validation(
                "label set must contain at least two labels (background included)",
            ));
        }
        if background >= names.len() {
            return Err(Error::validation(format!(
                "background index {} out of range for {} labels",
                background,
                names.len()
            )));
        }
        for (i, a) in names.iter().enumerate() {
            for b in names.iter().skip(i + 1) {
                if a == b {
                    return Err(Error::validation(format!("duplicate label name {a:?}")));
                }
            }
        }
        Ok(LabelSet { names, background })
    }

    /// Builds a label set from action names, appending the background label.
    pub fn from_actions(actions: &[String]) -> Result<Self> {
        let mut names = actions.to_vec();
        names.push(BACKGROUND_NAME.to_string());
        let bg = names.len() - 1;
        LabelSet::new(names, bg)
    }

    /// Number of labels, background included.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn background(&self) -> usize {
        self.background
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Action names in order, background excluded.
    pub fn action_names(&self) -> impl Iterator<Item = &str> {
        self.names
            .iter()
            .enumerate()
            .filter(move |(i, _)| *i != self.background)
            .map(|(_, n)| n.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Where background slots get inserted around the original label list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaddingMode {
    /// One background slot between each consecutive pair of labels.
    BetweenOnly,
    /// Additionally a leading and a trailing background slot.
    BetweenAndEnds,
}

/// The ordered list of K annotation slots for one clip, after background
/// insertion, each slot holding a label index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSequence {
    slots: Vec<usize>,
    source_slots: Vec<usize>,
}

impl AnnotationSequence {
    /// Inserts background slots into an ordered label-name list.
    pub fn build(labels: &[String], label_set: &LabelSet, mode: PaddingMode) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::validation("annotation list is empty"));
        }
        let mut source = Vec::with_capacity(labels.len());
        for name in labels {
            match label_set.index_of(name) {
                Some(idx) => source.push(idx),
                None => {
                    return Err(Error::validation(format!(
                        "unknown label name {name:?} in annotation"
                    )))
                }
            }
        }
        Ok(Self::from_label_indices(&source, label_set.background(), mode))
    }

    /// Same as [`AnnotationSequence::build`] but from label indices.
    pub fn from_label_indices(source: &[usize], background: usize, mode: PaddingMode) -> Self {
        let mut slots = Vec::with_capacity(2 * source.len() + 1);
        if mode == PaddingMode::BetweenAndEnds {
            slots.push(background);
        }
        for (i, &lab) in source.iter().enumerate() {
            if i > 0 {
                slots.push(background);
            }
            slots.push(lab);
        }
        if mode == PaddingMode::BetweenAndEnds {
            slots.push(background);
        }
        AnnotationSequence {
            slots,
            source_slots: source.to_vec(),
        }
    }

    /// Builds a sequence directly from slot label indices (background slots
    /// already in place).
    pub fn from_slots(slots: Vec<usize>) -> Self {
        AnnotationSequence {
            slots,
            source_slots: Vec::new(),
        }
    }

    /// Number of slots K.
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Label index of slot `k`.
    pub fn label(&self, k: usize) -> usize {
        self.slots[k]
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    /// The original label indices before background insertion.
    pub fn source_slots(&self) -> &[usize] {
        &self.source_slots
    }

    /// Slot indices that hold a non-background label, in order.
    pub fn action_slots(&self, background: usize) -> Vec<usize> {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, &lab)| lab != background)
            .map(|(k, _)| k)
            .collect()
    }
}

/// A time-stamped ground-truth segment, `start..end` interval indices
/// (half-open).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub label: usize,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }
}

/// One clip: interval features, its ordered annotation, optional
/// time-stamped ground truth, and (in the semi-supervised setting) a fixed
/// assignment.
#[derive(Debug, Clone)]
pub struct Clip {
    pub id: String,
    pub features: DMatrix<f64>,
    pub annotation: AnnotationSequence,
    pub ground_truth: Option<Vec<Segment>>,
    pub supervised_assignment: Option<AssignmentMatrix>,
}

impl Clip {
    pub fn num_intervals(&self) -> usize {
        self.features.nrows()
    }

    pub fn validate(&self, num_labels: usize) -> Result<()> {
        let t = self.num_intervals();
        let k = self.annotation.len();
        if t < k {
            return Err(Error::validation(format!(
                "clip {:?}: T={t} < K={k}, no admissible assignment exists",
                self.id
            )));
        }
        for slot in self.annotation.slots() {
            if *slot >= num_labels {
                return Err(Error::validation(format!(
                    "clip {:?}: annotation slot label {slot} out of range",
                    self.id
                )));
            }
        }
        if let Some(gt) = &self.ground_truth {
            let mut prev_end = 0usize;
            for seg in gt {
                if seg.is_empty() || seg.end > t {
                    return Err(Error::validation(format!(
                        "clip {:?}: ground-truth segment {}..{} outside [0, {t})",
                        self.id, seg.start, seg.end
                    )));
                }
                if seg.start < prev_end {
                    return Err(Error::validation(format!(
                        "clip {:?}: overlapping ground-truth segments at interval {}",
                        self.id, seg.start
                    )));
                }
                if seg.label >= num_labels {
                    return Err(Error::validation(format!(
                        "clip {:?}: ground-truth label {} out of range",
                        self.id, seg.label
                    )));
                }
                prev_end = seg.end;
            }
        }
        if let Some(z) = &self.supervised_assignment {
            if z.matrix().nrows() != t || z.matrix().ncols() != num_labels {
                return Err(Error::validation(format!(
                    "clip {:?}: supervised assignment has shape {}x{}, expected {t}x{num_labels}",
                    self.id,
                    z.matrix().nrows(),
                    z.matrix().ncols()
                )));
            }
            // Must be a valid member of the clip's assignment set.
            z.to_path(&self.annotation)?;
        }
        Ok(())
    }
}

/// A full dataset: shared label set plus clips.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub label_set: LabelSet,
    pub clips: Vec<Clip>,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        for clip in &self.clips {
            clip.validate(self.label_set.len())?;
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> Result<usize> {
        let mut dim = None;
        for clip in &self.clips {
            let d = clip.features.ncols();
            match dim {
                None => dim = Some(d),
                Some(prev) if prev != d => {
                    return Err(Error::validation(format!(
                        "inconsistent feature dimension: clip {:?} has d={d}, expected {prev}",
                        clip.id
                    )))
                }
                _ => {}
            }
        }
        dim.ok_or_else(|| Error::validation("dataset has no clips"))
    }

    pub fn total_intervals(&self) -> usize {
        self.clips.iter().map(Clip::num_intervals).sum()
    }
}

/// The combinatorial representation: a non-decreasing slot sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentPath {
    slots: Vec<usize>,
}

impl AssignmentPath {
    /// Validates the path constraints: starts at slot 0, ends at slot K-1,
    /// advances by at most one per step.
    pub fn new(slots: Vec<usize>, num_slots: usize) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::validation("empty assignment path"));
        }
        if slots[0] != 0 {
            return Err(Error::validation(format!(
                "path must start at slot 0, got {}",
                slots[0]
            )));
        }
        if *slots.last().unwrap() != num_slots - 1 {
            return Err(Error::validation(format!(
                "path must end at slot {}, got {}",
                num_slots - 1,
                slots.last().unwrap()
            )));
        }
        for (t, w) in slots.windows(2).enumerate() {
            if w[1] != w[0] && w[1] != w[0] + 1 {
                return Err(Error::validation(format!(
                    "path step at interval {t}: {} -> {} is not a stay or unit advance",
                    w[0], w[1]
                )));
            }
        }
        Ok(AssignmentPath { slots })
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// The indicator matrix obtained by mapping slots through the annotation.
    pub fn to_matrix(&self, annotation: &AnnotationSequence, num_labels: usize) -> AssignmentMatrix {
        let t = self.slots.len();
        let mut z = DMatrix::zeros(t, num_labels);
        for (row, &k) in self.slots.iter().enumerate() {
            z[(row, annotation.label(k))] = 1.0;
        }
        AssignmentMatrix { z }
    }

    /// Intervals assigned to slot `k` as a half-open range.
    pub fn slot_range(&self, k: usize) -> std::ops::Range<usize> {
        let start = self.slots.iter().position(|&s| s == k);
        match start {
            Some(s) => {
                let end = s + self.slots[s..].iter().take_while(|&&x| x == k).count();
                s..end
            }
            None => 0..0,
        }
    }
}

/// The T x A one-hot-per-row indicator form of an admissible assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix {
    z: DMatrix<f64>,
}

impl AssignmentMatrix {
    /// Wraps a matrix after checking every row is one-hot.
    pub fn new(z: DMatrix<f64>) -> Result<Self> {
        for t in 0..z.nrows() {
            let row = z.row(t);
            let ones = row.iter().filter(|&&v| v == 1.0).count();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || ones + zeros != z.ncols() {
                return Err(Error::validation(format!(
                    "row {t} of assignment matrix is not one-hot"
                )));
            }
        }
        Ok(AssignmentMatrix { z })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.z
    }

    pub fn num_intervals(&self) -> usize {
        self.z.nrows()
    }

    /// The label index assigned to interval `t`.
    pub fn label_of(&self, t: usize) -> usize {
        self.z.row(t).iter().position(|&v| v == 1.0).unwrap()
    }

    /// Recovers the unique admissible path that generates this matrix under
    /// `annotation`, or reports the first offending row.
    pub fn to_path(&self, annotation: &AnnotationSequence) -> Result<AssignmentPath> {
        let t_len = self.z.nrows();
        let k_len = annotation.len();
        let mut slots = Vec::with_capacity(t_len);
        let mut k = 0usize;
        for t in 0..t_len {
            let label = self.z.row(t).iter().position(|&v| v == 1.0).ok_or_else(|| {
                Error::validation(format!("row {t} of assignment matrix is not one-hot"))
            })?;
            if t == 0 {
                if label != annotation.label(0) {
                    return Err(Error::validation(format!(
                        "row 0 assigns label {label} but slot 0 carries label {}",
                        annotation.label(0)
                    )));
                }
            } else if label != annotation.label(k) {
                // Row changed: the path must advance by exactly one slot.
                if k + 1 < k_len && label == annotation.label(k + 1) {
                    k += 1;
                } else {
                    return Err(Error::validation(format!(
                        "row {t} assigns label {label}, not reachable from slot {k}"
                    )));
                }
            }
            slots.push(k);
        }
        if k != k_len - 1 {
            return Err(Error::validation(format!(
                "assignment matrix ends in slot {k}, expected {}",
                k_len - 1
            )));
        }
        AssignmentPath::new(slots, k_len)
    }
}

/// A point of the convex hull of the assignment matrices: rows sum to one,
/// entries in the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedAssignment {
    z: DMatrix<f64>,
}

impl RelaxedAssignment {
    pub const TOL: f64 = 1e-9;

    pub fn new(z: DMatrix<f64>) -> Result<Self> {
        for t in 0..z.nrows() {
            let mut sum = 0.0;
            for v in z.row(t).iter() {
                if !(-Self::TOL..=1.0 + Self::TOL).contains(v) {
                    return Err(Error::validation(format!(
                        "relaxed assignment entry {v} at row {t} outside [0,1]"
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > Self::TOL {
                return Err(Error::validation(format!(
                    "relaxed assignment row {t} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(RelaxedAssignment { z })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.z
    }
}

/// Enumerates every admissible path for `T` intervals and `K` slots.
///
/// Intended as a testing oracle; `cap` bounds the number of paths produced
/// (the count is `binomial(T-1, K-1)`).
pub fn enumerate_paths(t_len: usize, k_len: usize, cap: usize) -> Result<Vec<AssignmentPath>> {
    if k_len == 0 || t_len == 0 || k_len > t_len {
        return Ok(Vec::new());
    }
    let expected = binomial(t_len - 1, k_len - 1);
    if expected > cap as u128 {
        return Err(Error::validation(format!(
            "path enumeration for T={t_len}, K={k_len} would produce {expected} paths (cap {cap})"
        )));
    }
    let mut out = Vec::with_capacity(expected as usize);
    let mut prefix = vec![0usize];
    enumerate_rec(t_len, k_len, &mut prefix, &mut out);
    Ok(out)
}

fn enumerate_rec(t_len: usize, k_len: usize, prefix: &mut Vec<usize>, out: &mut Vec<AssignmentPath>) {
    let t = prefix.len();
    let k = *prefix.last().unwrap();
    if t == t_len {
        if k == k_len - 1 {
            out.push(AssignmentPath {
                slots: prefix.clone(),
            });
        }
        return;
    }
    // Stay, if the remaining intervals can still reach the last slot.
    if k_len - 1 - k <= t_len - t - 1 {
        prefix.push(k);
        enumerate_rec(t_len, k_len, prefix, out);
        prefix.pop();
    }
    if k + 1 < k_len {
        prefix.push(k + 1);
        enumerate_rec(t_len, k_len, prefix, out);
        prefix.pop();
    }
}

/// Binomial coefficient, saturating at u128 scale.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_labels() -> LabelSet {
        LabelSet::from_actions(&[
            "Walk".to_string(),
            "SitDown".to_string(),
            "Eat".to_string(),
        ])
        .unwrap()
    }

    #[test]
    fn background_inserted_between_labels() {
        let ls = toy_labels();
        let ann = AnnotationSequence::build(
            &["Walk".into(), "SitDown".into()],
            &ls,
            PaddingMode::BetweenOnly,
        )
        .unwrap();
        assert_eq!(ann.len(), 3);
        assert_eq!(ann.label(0), ls.index_of("Walk").unwrap());
        assert_eq!(ann.label(1), ls.background());
        assert_eq!(ann.label(2), ls.index_of("SitDown").unwrap());
    }

    #[test]
    fn single_label_no_insertion() {
        let ls = toy_labels();
        let ann =
            AnnotationSequence::build(&["Walk".into()], &ls, PaddingMode::BetweenOnly).unwrap();
        assert_eq!(ann.len(), 1);
    }

    #[test]
    fn between_and_ends_padding() {
        let ls = toy_labels();
        let ann = AnnotationSequence::build(
            &["Walk".into(), "Eat".into()],
            &ls,
            PaddingMode::BetweenAndEnds,
        )
        .unwrap();
        let bg = ls.background();
        assert_eq!(ann.len(), 5);
        let labels: Vec<usize> = ann.slots().to_vec();
        assert_eq!(
            labels,
            vec![
                bg,
                ls.index_of("Walk").unwrap(),
                bg,
                ls.index_of("Eat").unwrap(),
                bg
            ]
        );
    }

    #[test]
    fn unknown_label_is_an_error() {
        let ls = toy_labels();
        let err =
            AnnotationSequence::build(&["Fly".into()], &ls, PaddingMode::BetweenOnly).unwrap_err();
        assert!(err.to_string().contains("Fly"));
    }

    #[test]
    fn path_to_matrix_identity_assignment() {
        let ann = AnnotationSequence {
            slots: vec![0, 1],
            source_slots: vec![0, 1],
        };
        let m = AssignmentPath::new(vec![0, 1], 2).unwrap();
        let z = m.to_matrix(&ann, 2);
        assert_eq!(z.matrix(), &DMatrix::from_row_slice(2, 2, &[1., 0., 0., 1.]));
    }

    #[test]
    fn path_to_matrix_with_background() {
        // a = (L0, bg at column 1), m = (0,0,1)
        let ann = AnnotationSequence {
            slots: vec![0, 1],
            source_slots: vec![0],
        };
        let m = AssignmentPath::new(vec![0, 0, 1], 2).unwrap();
        let z = m.to_matrix(&ann, 2);
        assert_eq!(
            z.matrix(),
            &DMatrix::from_row_slice(3, 2, &[1., 0., 1., 0., 0., 1.])
        );
    }

    #[test]
    fn repeated_label_maps_to_same_column() {
        // a = (L0, bg, L0): slots 0 and 2 share the column of L0.
        let ann = AnnotationSequence {
            slots: vec![0, 1, 0],
            source_slots: vec![0, 0],
        };
        let m = AssignmentPath::new(vec![0, 1, 2], 3).unwrap();
        let z = m.to_matrix(&ann, 2);
        let col0: Vec<f64> = (0..3).map(|t| z.matrix()[(t, 0)]).collect();
        assert_eq!(col0, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn matrix_to_path_round_trip() {
        let ann = AnnotationSequence {
            slots: vec![0, 1],
            source_slots: vec![0],
        };
        let z = AssignmentMatrix::new(DMatrix::from_row_slice(3, 2, &[1., 0., 1., 0., 0., 1.]))
            .unwrap();
        let m = z.to_path(&ann).unwrap();
        assert_eq!(m.slots(), &[0, 0, 1]);
    }

    #[test]
    fn matrix_to_path_boundary_violation() {
        let ann = AnnotationSequence {
            slots: vec![0, 1],
            source_slots: vec![0, 1],
        };
        let z = AssignmentMatrix::new(DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.])).unwrap();
        let err = z.to_path(&ann).unwrap_err();
        assert!(err.to_string().contains("row 0"));
    }

    #[test]
    fn enumerate_counts_match_binomial() {
        assert_eq!(enumerate_paths(5, 3, 1_000_000).unwrap().len(), 6);
        assert_eq!(enumerate_paths(4, 1, 1_000_000).unwrap().len(), 1);
        assert_eq!(enumerate_paths(4, 4, 1_000_000).unwrap().len(), 1);
        for t in 1..=12usize {
            for k in 1..=t.min(6) {
                let n = enumerate_paths(t, k, 1_000_000).unwrap().len() as u128;
                assert_eq!(n, binomial(t - 1, k - 1), "T={t} K={k}");
            }
        }
    }

    #[test]
    fn enumerate_infeasible_is_empty() {
        assert!(enumerate_paths(3, 5, 100).unwrap().is_empty());
    }

    #[test]
    fn bijection_round_trip_small() {
        // Annotation with a repeated label to stress the inverse map.
        for (t_len, slots) in [
            (6, vec![0usize, 2, 1]),
            (7, vec![1, 2, 1, 0]),
            (5, vec![0, 1]),
        ] {
            let ann = AnnotationSequence {
                slots: slots.clone(),
                source_slots: vec![],
            };
            let a = 3;
            for m in enumerate_paths(t_len, slots.len(), 10_000).unwrap() {
                let z = m.to_matrix(&ann, a);
                let back = z.to_path(&ann).unwrap();
                let z2 = back.to_matrix(&ann, a);
                assert_eq!(z, z2, "matrix round-trip failed for {:?}", m.slots());
            }
        }
    }

    #[test]
    fn slot_range_extraction() {
        let m = AssignmentPath::new(vec![0, 0, 1, 2, 2], 3).unwrap();
        assert_eq!(m.slot_range(0), 0..2);
        assert_eq!(m.slot_range(1), 2..3);
        assert_eq!(m.slot_range(2), 3..5);
    }
}
