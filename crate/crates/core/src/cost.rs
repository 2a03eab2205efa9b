//! The implicit quadratic cost driving the alignment: a factored
//! representation of the PSD matrix B obtained by eliminating the ridge
//! classifier in closed form, the normalized-cut baseline cost, the
//! Hellinger feature map, and closed-form classifier recovery.
//!
//! The diffrac operator never materializes the `T_tot x T_tot` matrix B.
//! With `Xc` the column-centered feature stack and
//! `M = Xc^T Xc + T_tot * lambda * I`, the product is
//!
//! ```text
//! B z = (1/T_tot) * (Pi z - Xc M^{-1} Xc^T Pi z)
//! ```
//!
//! which costs `O(T_tot * d)` per column instead of `O(T_tot^2)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, RowDVector};

use crate::error::{Error, Result};
use crate::model::Dataset;

/// Which quadratic cost the operator represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    Diffrac,
    Ncut,
}

enum Factors {
    Diffrac {
        /// Column-centered feature stack, `T_tot x d`.
        centered: DMatrix<f64>,
        /// Column means of the raw feature stack, `1 x d`.
        feature_mean: RowDVector<f64>,
        /// Cholesky factor of `Xc^T Xc + T_tot * lambda * I`.
        solve: Cholesky<f64, Dyn>,
    },
    Ncut {
        /// Dense block-diagonal normalized Laplacian.
        b: DMatrix<f64>,
    },
}

/// Factored quadratic cost `Tr(D Z^T B Z D) + Tr(kappa 1^T Z)`, where `D`
/// is the diagonal of per-class weights.
pub struct CostOperator {
    factors: Factors,
    lambda: f64,
    kappa: DVector<f64>,
    class_weights: DVector<f64>,
    clip_offsets: Vec<std::ops::Range<usize>>,
    t_tot: usize,
    num_labels: usize,
}

/// Linear classifier `f(x) = x^T W + b` recovered from a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    /// `d x A` weights.
    pub weights: DMatrix<f64>,
    /// `1 x A` intercept.
    pub intercept: RowDVector<f64>,
}

impl Classifier {
    /// Scores for each row of `x`: `x W + 1 b`, a `T x A` matrix.
    pub fn score(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut s = x * &self.weights;
        for t in 0..s.nrows() {
            for a in 0..s.ncols() {
                s[(t, a)] += self.intercept[a];
            }
        }
        s
    }
}

impl CostOperator {
    /// Builds the discriminative-clustering cost over the stacked features
    /// of all clips in `dataset`.
    ///
    /// `class_weights` and `kappa` are indexed by label; `None` means
    /// uniform weights / zero penalty.
    pub fn diffrac(
        dataset: &Dataset,
        lambda: f64,
        class_weights: Option<DVector<f64>>,
        kappa: Option<DVector<f64>>,
    ) -> Result<Self> {
        if lambda <= 0.0 {
            return Err(Error::validation(format!(
                "ridge strength must be positive, got {lambda}"
            )));
        }
        let d = dataset.feature_dim()?;
        let t_tot = dataset.total_intervals();
        let num_labels = dataset.label_set.len();
        let (kappa, class_weights) = check_penalties(kappa, class_weights, num_labels)?;

        let mut stack = DMatrix::zeros(t_tot, d);
        let mut clip_offsets = Vec::with_capacity(dataset.clips.len());
        let mut row = 0usize;
        for clip in &dataset.clips {
            let t = clip.num_intervals();
            stack.rows_mut(row, t).copy_from(&clip.features);
            clip_offsets.push(row..row + t);
            row += t;
        }

        let feature_mean = column_means(&stack);
        let mut centered = stack;
        for t in 0..t_tot {
            for j in 0..d {
                centered[(t, j)] -= feature_mean[j];
            }
        }
        let mut m = centered.transpose() * &centered;
        for j in 0..d {
            m[(j, j)] += t_tot as f64 * lambda;
        }
        // Always SPD for lambda > 0.
        let solve = Cholesky::new(m)
            .expect("ridge-regularized Gram matrix must be positive definite");

        Ok(CostOperator {
            factors: Factors::Diffrac {
                centered,
                feature_mean,
                solve,
            },
            lambda,
            kappa,
            class_weights,
            clip_offsets,
            t_tot,
            num_labels,
        })
    }

    /// Builds the normalized-cut baseline cost, block-diagonal over clips.
    ///
    /// Per clip, the similarity is
    /// `E_ij = exp(-alpha |i-j| - beta chi2(x_i, x_j))` for `|i-j| < d_min`
    /// and the cost is the symmetric normalized Laplacian `I - D^-1/2 E D^-1/2`.
    pub fn ncut(
        dataset: &Dataset,
        alpha: f64,
        beta: f64,
        d_min: usize,
        class_weights: Option<DVector<f64>>,
        kappa: Option<DVector<f64>>,
    ) -> Result<Self> {
        if alpha < 0.0 || beta < 0.0 {
            return Err(Error::validation("similarity decay rates must be nonnegative"));
        }
        if d_min < 1 {
            return Err(Error::validation("d_min must be at least 1"));
        }
        let t_tot = dataset.total_intervals();
        let num_labels = dataset.label_set.len();
        let (kappa, class_weights) = check_penalties(kappa, class_weights, num_labels)?;

        let mut b = DMatrix::zeros(t_tot, t_tot);
        let mut clip_offsets = Vec::with_capacity(dataset.clips.len());
        let mut row = 0usize;
        for clip in &dataset.clips {
            let t = clip.num_intervals();
            let mut e = DMatrix::zeros(t, t);
            for i in 0..t {
                for j in 0..t {
                    let gap = i.abs_diff(j);
                    if gap < d_min {
                        let dist = chi_squared(&clip.features, i, j);
                        e[(i, j)] = (-alpha * gap as f64 - beta * dist).exp();
                    }
                }
            }
            let degree: Vec<f64> = (0..t).map(|i| e.row(i).sum()).collect();
            // E_ii = 1 whenever d_min >= 1, so degrees are strictly positive.
            assert!(degree.iter().all(|&d| d > 0.0));
            for i in 0..t {
                for j in 0..t {
                    let val = e[(i, j)] / (degree[i] * degree[j]).sqrt();
                    b[(row + i, row + j)] = if i == j { 1.0 - val } else { -val };
                }
            }
            clip_offsets.push(row..row + t);
            row += t;
        }

        Ok(CostOperator {
            factors: Factors::Ncut { b },
            lambda: 0.0,
            kappa,
            class_weights,
            clip_offsets,
            t_tot,
            num_labels,
        })
    }

    pub fn kind(&self) -> CostKind {
        match self.factors {
            Factors::Diffrac { .. } => CostKind::Diffrac,
            Factors::Ncut { .. } => CostKind::Ncut,
        }
    }

    pub fn total_intervals(&self) -> usize {
        self.t_tot
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kappa(&self) -> &DVector<f64> {
        &self.kappa
    }

    pub fn class_weights(&self) -> &DVector<f64> {
        &self.class_weights
    }

    /// Row range of clip `i` inside the stacked representation.
    pub fn clip_range(&self, i: usize) -> std::ops::Range<usize> {
        self.clip_offsets[i].clone()
    }

    pub fn num_clips(&self) -> usize {
        self.clip_offsets.len()
    }

    /// Matrix-free product `B Z`.
    pub fn apply_b(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if z.nrows() != self.t_tot {
            return Err(Error::validation(format!(
                "apply_b: Z has {} rows, operator expects {}",
                z.nrows(),
                self.t_tot
            )));
        }
        match &self.factors {
            Factors::Diffrac {
                centered, solve, ..
            } => {
                let mut zc = z.clone();
                center_columns(&mut zc);
                let projected = centered * solve.solve(&(centered.transpose() * &zc));
                let mut out = zc - projected;
                // The leading projection through Pi also centers the output;
                // centering zc already makes `out` column-centered up to the
                // solve, so re-center to keep B exactly symmetric in floats.
                center_columns(&mut out);
                out /= self.t_tot as f64;
                Ok(out)
            }
            Factors::Ncut { b } => Ok(b * z),
        }
    }

    /// `Tr(D Z^T B Z D) + Tr(kappa 1^T Z)`.
    pub fn objective(&self, z: &DMatrix<f64>) -> Result<f64> {
        let bz = self.apply_b(z)?;
        let mut value = 0.0;
        for a in 0..self.num_labels {
            let w2 = self.class_weights[a] * self.class_weights[a];
            value += w2 * z.column(a).dot(&bz.column(a));
            value += self.kappa[a] * z.column(a).sum();
        }
        Ok(value)
    }

    /// Gradient of [`CostOperator::objective`]: `2 B Z D^2 + 1 kappa^T`.
    pub fn gradient(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut g = self.apply_b(z)?;
        for a in 0..self.num_labels {
            let w2 = self.class_weights[a] * self.class_weights[a];
            for t in 0..self.t_tot {
                g[(t, a)] = 2.0 * w2 * g[(t, a)] + self.kappa[a];
            }
        }
        Ok(g)
    }

    /// Curvature term `<S, B S D^2>` of the univariate line-search quadratic.
    pub fn direction_curvature(&self, s: &DMatrix<f64>) -> Result<f64> {
        let bs = self.apply_b(s)?;
        let mut value = 0.0;
        for a in 0..self.num_labels {
            let w2 = self.class_weights[a] * self.class_weights[a];
            value += w2 * s.column(a).dot(&bs.column(a));
        }
        Ok(value)
    }

    /// Closed-form ridge classifier at the given solution.
    ///
    /// Minimizes `(1/T_tot) ||(Z - X W - 1 b) D||_F^2 + lambda ||W D||_F^2`;
    /// the class weights factor out per column, so `(W, b)` does not depend
    /// on them.
    pub fn recover_classifier(&self, z: &DMatrix<f64>) -> Result<Classifier> {
        let Factors::Diffrac {
            centered,
            feature_mean,
            solve,
        } = &self.factors
        else {
            return Err(Error::validation(
                "classifier recovery is only defined for the diffrac cost",
            ));
        };
        if z.nrows() != self.t_tot {
            return Err(Error::validation("recover_classifier: row count mismatch"));
        }
        let mut zc = z.clone();
        center_columns(&mut zc);
        let weights = solve.solve(&(centered.transpose() * zc));
        let z_mean = column_means(z);
        let intercept = z_mean - feature_mean * &weights;
        Ok(Classifier { weights, intercept })
    }

    /// Dense `T_tot x T_tot` matrix B. Quadratic in memory; only meant for
    /// small instances (verification and tests).
    pub fn materialize_b(&self) -> DMatrix<f64> {
        match &self.factors {
            Factors::Ncut { b } => b.clone(),
            Factors::Diffrac { .. } => {
                let n = self.t_tot;
                let eye = DMatrix::identity(n, n);
                self.apply_b(&eye).expect("shape is consistent")
            }
        }
    }
}

fn check_penalties(
    kappa: Option<DVector<f64>>,
    class_weights: Option<DVector<f64>>,
    num_labels: usize,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let kappa = kappa.unwrap_or_else(|| DVector::zeros(num_labels));
    let class_weights = class_weights.unwrap_or_else(|| DVector::from_element(num_labels, 1.0));
    if kappa.len() != num_labels || class_weights.len() != num_labels {
        return Err(Error::validation(format!(
            "penalty vectors must have length {num_labels}"
        )));
    }
    if class_weights.iter().any(|&w| w <= 0.0 || !w.is_finite()) {
        return Err(Error::validation("class weights must be positive and finite"));
    }
    Ok((kappa, class_weights))
}

/// Ridge regression of `y` onto `x` with intercept: minimizes
/// `(1/n) ||Y - X W - 1 b||_F^2 + lambda ||W||_F^2` by the centered normal
/// equations.
pub fn ridge_fit(x: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> Result<Classifier> {
    if x.nrows() != y.nrows() {
        return Err(Error::validation("ridge_fit: row count mismatch"));
    }
    if x.nrows() == 0 {
        return Err(Error::validation("ridge_fit: empty design matrix"));
    }
    if lambda <= 0.0 {
        return Err(Error::validation("ridge_fit: lambda must be positive"));
    }
    let n = x.nrows();
    let x_mean = column_means(x);
    let y_mean = column_means(y);
    let mut xc = x.clone();
    center_columns(&mut xc);
    let mut yc = y.clone();
    center_columns(&mut yc);
    let mut m = xc.transpose() * &xc;
    for j in 0..x.ncols() {
        m[(j, j)] += n as f64 * lambda;
    }
    let chol = Cholesky::new(m)
        .ok_or_else(|| Error::numerical("ridge system is not positive definite"))?;
    let weights = chol.solve(&(xc.transpose() * yc));
    let intercept = y_mean - &x_mean * &weights;
    Ok(Classifier { weights, intercept })
}

/// Hellinger feature map: square root of the l1-normalized histogram.
/// The output always has unit l2 norm.
pub fn hellinger_map(histogram: &[f64]) -> Result<Vec<f64>> {
    if histogram.iter().any(|&h| h < 0.0) {
        return Err(Error::validation("histogram has negative entries"));
    }
    let total: f64 = histogram.iter().sum();
    if total <= 0.0 {
        return Err(Error::validation("histogram sums to zero"));
    }
    Ok(histogram.iter().map(|&h| (h / total).sqrt()).collect())
}

/// Applies [`hellinger_map`] to every row of a feature matrix.
pub fn hellinger_rows(features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = features.clone();
    for t in 0..features.nrows() {
        let row: Vec<f64> = features.row(t).iter().copied().collect();
        let mapped = hellinger_map(&row)
            .map_err(|e| Error::validation(format!("row {t}: {e}")))?;
        for (j, v) in mapped.into_iter().enumerate() {
            out[(t, j)] = v;
        }
    }
    Ok(out)
}

/// Chi-squared distance between feature rows `i` and `j`.
fn chi_squared(x: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    const EPS: f64 = 1e-10;
    let mut acc = 0.0;
    for c in 0..x.ncols() {
        let (a, b) = (x[(i, c)], x[(j, c)]);
        let denom = a + b + EPS;
        acc += (a - b) * (a - b) / denom;
    }
    0.5 * acc
}

fn column_means(m: &DMatrix<f64>) -> RowDVector<f64> {
    let n = m.nrows() as f64;
    RowDVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

fn center_columns(m: &mut DMatrix<f64>) {
    let n = m.nrows() as f64;
    for j in 0..m.ncols() {
        let mean = m.column(j).sum() / n;
        for t in 0..m.nrows() {
            m[(t, j)] -= mean;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AnnotationSequence, Clip, LabelSet, PaddingMode};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy_dataset(rng: &mut ChaCha8Rng, clips: &[(usize, usize)], d: usize) -> Dataset {
        let label_set = LabelSet::from_actions(&[
            "A".to_string(),
            "B".to_string(),
            "C".to_string(),
        ])
        .unwrap();
        let clips = clips
            .iter()
            .enumerate()
            .map(|(i, &(t, _k))| Clip {
                id: format!("clip{i}"),
                features: DMatrix::from_fn(t, d, |_, _| rng.gen_range(-1.0..1.0)),
                annotation: AnnotationSequence::from_label_indices(
                    &[0, 1],
                    label_set.background(),
                    PaddingMode::BetweenOnly,
                ),
                ground_truth: None,
                supervised_assignment: None,
            })
            .collect();
        Dataset { label_set, clips }
    }

    fn zero_feature_dataset(t: usize, d: usize) -> Dataset {
        let label_set =
            LabelSet::from_actions(&["A".to_string(), "B".to_string()]).unwrap();
        let clips = vec![Clip {
            id: "z".into(),
            features: DMatrix::zeros(t, d),
            annotation: AnnotationSequence::from_label_indices(
                &[0, 1],
                label_set.background(),
                PaddingMode::BetweenOnly,
            ),
            ground_truth: None,
            supervised_assignment: None,
        }];
        Dataset { label_set, clips }
    }

    #[test]
    fn hellinger_examples() {
        let x = hellinger_map(&[1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(x[0], 0.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 0.5f64.sqrt(), epsilon = 1e-12);
        assert_eq!(&x[2..], &[0.0, 0.0]);
        assert_eq!(hellinger_map(&[4.0]).unwrap(), vec![1.0]);
        assert_eq!(
            hellinger_map(&[2.0, 2.0, 2.0, 2.0]).unwrap(),
            vec![0.5, 0.5, 0.5, 0.5]
        );
        let norm: f64 = hellinger_map(&[0.3, 1.7, 2.2]).unwrap().iter().map(|v| v * v).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        assert!(hellinger_map(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn zero_features_reduce_to_scaled_centering() {
        let dataset = zero_feature_dataset(8, 3);
        let op = CostOperator::diffrac(&dataset, 0.1, None, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = DMatrix::from_fn(8, 3, |_, _| rng.gen_range(-1.0..1.0));
        let bz = op.apply_b(&z).unwrap();
        let mut expected = z.clone();
        center_columns(&mut expected);
        expected /= 8.0;
        assert_abs_diff_eq!((bz - expected).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_columns_are_annihilated() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dataset = toy_dataset(&mut rng, &[(10, 3), (8, 3)], 4);
        let op = CostOperator::diffrac(&dataset, 0.05, None, None).unwrap();
        let z = DMatrix::from_fn(18, 4, |_, a| (a as f64) + 1.0);
        let bz = op.apply_b(&z).unwrap();
        assert!(bz.norm() < 1e-10);
        assert_abs_diff_eq!(op.objective(&z).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn apply_b_matches_materialized_product_and_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dataset = toy_dataset(&mut rng, &[(12, 3), (9, 3)], 5);
        let op = CostOperator::diffrac(&dataset, 0.1, None, None).unwrap();
        let b = op.materialize_b();
        let z1 = DMatrix::from_fn(21, 4, |_, _| rng.gen_range(-1.0..1.0));
        let z2 = DMatrix::from_fn(21, 4, |_, _| rng.gen_range(-1.0..1.0));
        let via_op = op.apply_b(&z1).unwrap();
        let dense = &b * &z1;
        assert!((via_op - dense).amax() <= 1e-8);
        let lhs = op.apply_b(&(&z1 + &z2)).unwrap();
        let rhs = op.apply_b(&z1).unwrap() + op.apply_b(&z2).unwrap();
        assert!((lhs - rhs).amax() <= 1e-10);
    }

    #[test]
    fn materialized_b_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dataset = toy_dataset(&mut rng, &[(30, 3)], 5);
        let op = CostOperator::diffrac(&dataset, 0.1, None, None).unwrap();
        let b = op.materialize_b();
        let sym = (&b + b.transpose()) * 0.5;
        let eig = sym.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e >= -1e-10), "min eig {:?}", eig.min());
    }

    #[test]
    fn objective_matches_dense_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dataset = toy_dataset(&mut rng, &[(7, 3), (6, 3)], 4);
        let w = DVector::from_vec(vec![1.0, 0.5, 2.0, 0.8]);
        let kappa = DVector::from_vec(vec![0.0, 0.1, 0.0, -0.2]);
        let op =
            CostOperator::diffrac(&dataset, 0.2, Some(w.clone()), Some(kappa.clone())).unwrap();
        let b = op.materialize_b();
        let z = DMatrix::from_fn(13, 4, |_, _| rng.gen_range(-1.0..1.0));
        let dw = DMatrix::from_diagonal(&w);
        let dense = (&dw * z.transpose() * &b * &z * &dw).trace()
            + (0..4).map(|a| kappa[a] * z.column(a).sum()).sum::<f64>();
        assert_abs_diff_eq!(op.objective(&z).unwrap(), dense, epsilon = 1e-8);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let dataset = toy_dataset(&mut rng, &[(6, 3), (5, 3)], 3);
        let w = DVector::from_vec(vec![1.0, 0.3, 1.5, 0.9]);
        let kappa = DVector::from_vec(vec![0.05, 0.0, -0.1, 0.2]);
        let op = CostOperator::diffrac(&dataset, 0.15, Some(w), Some(kappa)).unwrap();
        let z = DMatrix::from_fn(11, 4, |_, _| rng.gen_range(-1.0..1.0));
        let g = op.gradient(&z).unwrap();
        let h = 1e-6;
        for _ in 0..10 {
            let t = rng.gen_range(0..11);
            let a = rng.gen_range(0..4);
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[(t, a)] += h;
            zm[(t, a)] -= h;
            let fd = (op.objective(&zp).unwrap() - op.objective(&zm).unwrap()) / (2.0 * h);
            let denom = fd.abs().max(1e-3);
            assert!(
                (g[(t, a)] - fd).abs() / denom < 1e-5,
                "grad {} fd {}",
                g[(t, a)],
                fd
            );
        }
    }

    #[test]
    fn gradient_at_zero_is_kappa_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dataset = toy_dataset(&mut rng, &[(6, 3)], 3);
        let kappa = DVector::from_vec(vec![0.5, -0.25, 0.0, 1.0]);
        let op = CostOperator::diffrac(&dataset, 0.1, None, Some(kappa.clone())).unwrap();
        let g = op.gradient(&DMatrix::zeros(6, 4)).unwrap();
        for t in 0..6 {
            for a in 0..4 {
                assert_abs_diff_eq!(g[(t, a)], kappa[a], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn class_weights_leave_b_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let dataset = toy_dataset(&mut rng, &[(9, 3)], 4);
        let op_plain = CostOperator::diffrac(&dataset, 0.1, None, None).unwrap();
        let w = DVector::from_vec(vec![2.0, 0.5, 1.0, 3.0]);
        let op_weighted = CostOperator::diffrac(&dataset, 0.1, Some(w), None).unwrap();
        let z = DMatrix::from_fn(9, 4, |_, _| rng.gen_range(-1.0..1.0));
        let lhs = op_plain.apply_b(&z).unwrap();
        let rhs = op_weighted.apply_b(&z).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn recovered_classifier_plugs_back_into_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dataset = toy_dataset(&mut rng, &[(10, 3), (8, 3)], 4);
        let w = DVector::from_vec(vec![1.0, 0.7, 1.3, 0.4]);
        let lambda = 0.2;
        let op = CostOperator::diffrac(&dataset, lambda, Some(w.clone()), None).unwrap();
        let t_tot = 18;
        let z = DMatrix::from_fn(t_tot, 4, |_, _| rng.gen_range(0.0..1.0));
        let clf = op.recover_classifier(&z).unwrap();

        // Ridge cost at the recovered classifier.
        let mut x = DMatrix::zeros(t_tot, 4);
        let mut row = 0usize;
        for clip in &dataset.clips {
            x.rows_mut(row, clip.num_intervals())
                .copy_from(&clip.features);
            row += clip.num_intervals();
        }
        let resid = &z - clf.score(&x);
        let mut cost = 0.0;
        for a in 0..4 {
            let w2 = w[a] * w[a];
            cost += w2 * resid.column(a).norm_squared() / t_tot as f64;
            cost += lambda * w2 * clf.weights.column(a).norm_squared();
        }
        let obj = op.objective(&z).unwrap();
        assert!(
            (cost - obj).abs() / obj.abs().max(1e-12) < 1e-6,
            "ridge {cost} vs objective {obj}"
        );
    }

    #[test]
    fn recovered_classifier_matches_independent_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let dataset = toy_dataset(&mut rng, &[(12, 3)], 3);
        let lambda = 0.1;
        let op = CostOperator::diffrac(&dataset, lambda, None, None).unwrap();
        let z = DMatrix::from_fn(12, 4, |_, _| rng.gen_range(0.0..1.0));
        let clf = op.recover_classifier(&z).unwrap();

        // Independent dense normal equations on the centered system.
        let x = dataset.clips[0].features.clone();
        let mut xc = x.clone();
        center_columns(&mut xc);
        let mut zc = z.clone();
        center_columns(&mut zc);
        let m = xc.transpose() * &xc + DMatrix::identity(3, 3) * (12.0 * lambda);
        let w_ref = m.clone().lu().solve(&(xc.transpose() * zc)).unwrap();
        assert!((&clf.weights - &w_ref).amax() < 1e-8);
    }

    #[test]
    fn intercept_only_fit_for_zero_features() {
        let dataset = zero_feature_dataset(6, 2);
        let op = CostOperator::diffrac(&dataset, 0.1, None, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z = DMatrix::from_fn(6, 3, |_, _| rng.gen_range(0.0..1.0));
        let clf = op.recover_classifier(&z).unwrap();
        assert!(clf.weights.amax() < 1e-12);
        for a in 0..3 {
            assert_abs_diff_eq!(clf.intercept[a], z.column(a).sum() / 6.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ncut_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let dataset = toy_dataset(&mut rng, &[(6, 3)], 3);
        // d_min > T and no decay: E all ones, B is the centering matrix.
        let op = CostOperator::ncut(&dataset, 0.0, 0.0, 100, None, None).unwrap();
        let b = op.materialize_b();
        let pi = DMatrix::identity(6, 6) - DMatrix::from_element(6, 6, 1.0 / 6.0);
        assert!((b - pi).amax() < 1e-12);
        // d_min = 1 and no appearance term: E = I, B = 0.
        let op = CostOperator::ncut(&dataset, 0.0, 0.0, 1, None, None).unwrap();
        assert!(op.materialize_b().amax() < 1e-12);
    }

    #[test]
    fn ncut_spectrum_in_laplacian_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let label_set = LabelSet::from_actions(&["A".to_string()]).unwrap();
        let clips = vec![Clip {
            id: "c".into(),
            features: DMatrix::from_fn(20, 4, |_, _| rng.gen_range(0.0..1.0)),
            annotation: AnnotationSequence::from_label_indices(
                &[0],
                label_set.background(),
                PaddingMode::BetweenOnly,
            ),
            ground_truth: None,
            supervised_assignment: None,
        }];
        let dataset = Dataset { label_set, clips };
        let op = CostOperator::ncut(&dataset, 0.2, 1.0, 5, None, None).unwrap();
        let b = op.materialize_b();
        let sym = (&b + b.transpose()) * 0.5;
        let eig = sym.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e >= -1e-10 && e <= 2.0 + 1e-10));
    }

    #[test]
    fn recover_classifier_rejected_for_ncut() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let dataset = toy_dataset(&mut rng, &[(5, 3)], 3);
        let op = CostOperator::ncut(&dataset, 0.1, 0.1, 3, None, None).unwrap();
        assert!(op.recover_classifier(&DMatrix::zeros(5, 4)).is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let dataset = toy_dataset(&mut rng, &[(5, 3)], 3);
        assert!(CostOperator::diffrac(&dataset, 0.0, None, None).is_err());
        assert!(CostOperator::diffrac(&dataset, -1.0, None, None).is_err());
        let bad_w = DVector::from_vec(vec![1.0, -1.0, 1.0, 1.0]);
        assert!(CostOperator::diffrac(&dataset, 0.1, Some(bad_w), None).is_err());
    }
}
