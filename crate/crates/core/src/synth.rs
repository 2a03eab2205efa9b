//! Synthetic benchmark generator: desk-scale feature sequences with known
//! segment structure, ordered annotations, and exact ground truth.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnnotationSequence, Clip, Dataset, LabelSet, PaddingMode, Segment};

/// Configuration of the generator.
///
/// `num_labels` counts the background class; action classes are
/// `num_labels - 1`. Class means are pairwise separated by
/// `class_mean_separation * noise_sigma`, so separation is expressed in
/// units of the noise scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_clips: usize,
    pub num_labels: usize,
    pub feature_dim: usize,
    pub seed: u64,
    pub intervals_per_segment: (usize, usize),
    pub segments_per_clip: (usize, usize),
    pub class_mean_separation: f64,
    pub background_fraction: f64,
    pub noise_sigma: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_clips: 30,
            num_labels: 5,
            feature_dim: 20,
            seed: 0,
            intervals_per_segment: (1, 6),
            segments_per_clip: (3, 6),
            class_mean_separation: 5.0,
            background_fraction: 0.3,
            noise_sigma: 1.0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_clips == 0 {
            return Err(Error::validation("n_clips must be positive"));
        }
        if self.num_labels < 2 {
            return Err(Error::validation(
                "need at least one action class plus background",
            ));
        }
        if self.num_labels > self.feature_dim {
            return Err(Error::validation(
                "feature_dim must be at least num_labels for separated class means",
            ));
        }
        if self.class_mean_separation < 0.0 {
            return Err(Error::validation("class separation must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.background_fraction) {
            return Err(Error::validation("background_fraction must be in [0,1]"));
        }
        if self.noise_sigma <= 0.0 {
            return Err(Error::validation("noise_sigma must be positive"));
        }
        let (lo, hi) = self.intervals_per_segment;
        if lo == 0 || hi < lo {
            return Err(Error::validation("intervals_per_segment range is empty"));
        }
        let (slo, shi) = self.segments_per_clip;
        if slo == 0 || shi < slo {
            return Err(Error::validation("segments_per_clip range is empty"));
        }
        Ok(())
    }
}

/// Generates a dataset in memory. Deterministic for a fixed config.
///
/// Clips start and end with an action segment; background fills the gaps
/// between consecutive actions, sized to approximate
/// `background_fraction` of the clip.
pub fn generate(config: &SyntheticConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let action_names: Vec<String> = (0..config.num_labels - 1)
        .map(|a| format!("action{a:02}"))
        .collect();
    let label_set = LabelSet::from_actions(&action_names)?;
    let bg = label_set.background();

    // Orthogonal class means scaled so any two are at the requested
    // separation: means s/sqrt(2) * e_a are pairwise sqrt(2) * s/sqrt(2)
    // = s apart.
    let scale = config.class_mean_separation * config.noise_sigma / 2f64.sqrt();
    let mean_of = |label: usize, j: usize| if j == label { scale } else { 0.0 };

    let noise = Normal::new(0.0, config.noise_sigma)
        .map_err(|e| Error::validation(format!("bad noise sigma: {e}")))?;

    let mut clips = Vec::with_capacity(config.n_clips);
    for c in 0..config.n_clips {
        let n_segments = rng.gen_range(config.segments_per_clip.0..=config.segments_per_clip.1);
        let action_labels: Vec<usize> = (0..n_segments)
            .map(|_| rng.gen_range(0..config.num_labels - 1))
            .collect();
        let action_lengths: Vec<usize> = (0..n_segments)
            .map(|_| {
                rng.gen_range(config.intervals_per_segment.0..=config.intervals_per_segment.1)
            })
            .collect();

        // Background gap lengths between consecutive actions, at least one
        // interval each so that the inserted background slot is non-empty.
        let action_total: usize = action_lengths.iter().sum();
        let f = config.background_fraction;
        let bg_total = if n_segments > 1 && f > 0.0 {
            ((action_total as f64 * f / (1.0 - f)).round() as usize).max(n_segments - 1)
        } else {
            0
        };
        let gaps = n_segments.saturating_sub(1);
        let mut gap_lengths = vec![0usize; gaps];
        if gaps > 0 {
            let base = bg_total / gaps;
            let extra = bg_total % gaps;
            for (i, g) in gap_lengths.iter_mut().enumerate() {
                *g = base + usize::from(i < extra);
            }
        }

        // Interval-level label timeline and ground-truth segments.
        let mut timeline: Vec<usize> = Vec::new();
        let mut ground_truth: Vec<Segment> = Vec::new();
        for (i, (&label, &len)) in action_labels.iter().zip(&action_lengths).enumerate() {
            if i > 0 {
                timeline.extend(std::iter::repeat(bg).take(gap_lengths[i - 1]));
            }
            let start = timeline.len();
            timeline.extend(std::iter::repeat(label).take(len));
            ground_truth.push(Segment {
                label,
                start,
                end: timeline.len(),
            });
        }

        let t_len = timeline.len();
        let mut features = DMatrix::zeros(t_len, config.feature_dim);
        for (t, &label) in timeline.iter().enumerate() {
            for j in 0..config.feature_dim {
                features[(t, j)] = mean_of(label, j) + noise.sample(&mut rng);
            }
        }

        let names: Vec<String> = action_labels
            .iter()
            .map(|&a| label_set.name(a).to_string())
            .collect();
        let annotation = AnnotationSequence::build(&names, &label_set, PaddingMode::BetweenOnly)?;
        clips.push(Clip {
            id: format!("clip{c:03}"),
            features,
            annotation,
            ground_truth: Some(ground_truth),
            supervised_assignment: None,
        });
    }

    let dataset = Dataset { label_set, clips };
    dataset.validate()?;
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let config = SyntheticConfig::default();
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a.clips.len(), b.clips.len());
        for (x, y) in a.clips.iter().zip(&b.clips) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.features, y.features);
            assert_eq!(x.annotation, y.annotation);
            assert_eq!(x.ground_truth, y.ground_truth);
        }
    }

    #[test]
    fn seeds_change_the_data() {
        let a = generate(&SyntheticConfig::default()).unwrap();
        let b = generate(&SyntheticConfig {
            seed: 1,
            ..SyntheticConfig::default()
        })
        .unwrap();
        assert_ne!(a.clips[0].features, b.clips[0].features);
    }

    #[test]
    fn ground_truth_matches_annotation_order() {
        let dataset = generate(&SyntheticConfig::default()).unwrap();
        let bg = dataset.label_set.background();
        for clip in &dataset.clips {
            let gt = clip.ground_truth.as_ref().unwrap();
            let slots = clip.annotation.action_slots(bg);
            assert_eq!(gt.len(), slots.len());
            for (seg, &k) in gt.iter().zip(&slots) {
                assert_eq!(seg.label, clip.annotation.label(k));
            }
            // Clips start and end with an action segment.
            assert_eq!(gt.first().unwrap().start, 0);
            assert_eq!(gt.last().unwrap().end, clip.num_intervals());
        }
    }

    #[test]
    fn background_share_is_near_target() {
        let dataset = generate(&SyntheticConfig {
            n_clips: 50,
            ..SyntheticConfig::default()
        })
        .unwrap();
        let total: usize = dataset.clips.iter().map(Clip::num_intervals).sum();
        let action: usize = dataset
            .clips
            .iter()
            .flat_map(|c| c.ground_truth.as_ref().unwrap())
            .map(Segment::len)
            .sum();
        let share = 1.0 - action as f64 / total as f64;
        assert!((share - 0.3).abs() < 0.1, "background share {share}");
    }

    #[test]
    fn zero_separation_keeps_structure() {
        let dataset = generate(&SyntheticConfig {
            class_mean_separation: 0.0,
            ..SyntheticConfig::default()
        })
        .unwrap();
        dataset.validate().unwrap();
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(generate(&SyntheticConfig {
            num_labels: 25,
            feature_dim: 4,
            ..SyntheticConfig::default()
        })
        .is_err());
        assert!(generate(&SyntheticConfig {
            background_fraction: 1.5,
            ..SyntheticConfig::default()
        })
        .is_err());
    }
}
