//! Conditional-gradient (Frank-Wolfe) solver over the product of per-clip
//! assignment polytopes, with exact line search, duality-gap stopping, and
//! frozen blocks for clips carrying time-stamped supervision.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cost::CostOperator;
use crate::error::{Error, Result};
use crate::model::{AssignmentMatrix, AssignmentPath, Dataset, RelaxedAssignment};
use crate::oracle;

/// Step-size rule for the convex-combination update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Minimize the univariate quadratic along the direction, clamped to [0,1].
    ExactLineSearch,
    /// The agnostic 2/(p+1) schedule.
    Universal,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveOptions {
    pub gap_tol: f64,
    pub max_iter: usize,
    pub step_rule: StepRule,
    pub record_history: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            gap_tol: 1e-4,
            max_iter: 500,
            step_rule: StepRule::ExactLineSearch,
            record_history: true,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.gap_tol <= 0.0 {
            return Err(Error::validation("gap tolerance must be positive"));
        }
        if self.max_iter < 1 {
            return Err(Error::validation("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// One iteration of the optimization trace.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub gap: f64,
    pub gamma: f64,
}

/// Output of [`solve`].
pub struct SolveResult {
    /// Stacked relaxed solution over all clips.
    pub relaxed: RelaxedAssignment,
    /// Per-clip rounded vertex.
    pub rounded: Vec<AssignmentMatrix>,
    /// Per-clip rounded path.
    pub paths: Vec<AssignmentPath>,
    pub final_gap: f64,
    pub objective_history: Vec<f64>,
    pub gap_history: Vec<f64>,
    pub trace: Vec<TraceRecord>,
    pub iterations: usize,
}

/// Linearization gap `<grad, Z - Zvertex>`; a certified upper bound on
/// suboptimality when `Zvertex` minimizes the linearization.
pub fn duality_gap(grad: &DMatrix<f64>, z: &DMatrix<f64>, zvertex: &DMatrix<f64>) -> f64 {
    grad.dot(z) - grad.dot(zvertex)
}

/// Exact line search for the quadratic objective along `S = Zvertex - Z`.
///
/// Returns the minimizer of `g(gamma) = f(Z + gamma S)` over [0,1]. With a
/// degenerate (flat) direction, jumps to the vertex when the slope is
/// negative and stays otherwise.
pub fn exact_line_search(
    op: &CostOperator,
    grad: &DMatrix<f64>,
    z: &DMatrix<f64>,
    zvertex: &DMatrix<f64>,
) -> Result<f64> {
    let s = zvertex - z;
    let slope = grad.dot(&s);
    let curvature = op.direction_curvature(&s)?;
    if curvature <= 1e-15 {
        return Ok(if slope < 0.0 { 1.0 } else { 0.0 });
    }
    Ok((-slope / (2.0 * curvature)).clamp(0.0, 1.0))
}

/// Runs Frank-Wolfe over the stacked polytope defined by `dataset`.
///
/// Clips with a `supervised_assignment` are frozen: their rows of the
/// iterate never change and they are excluded from the per-clip LMO. The
/// quadratic cost still couples them to the free clips through `op`.
pub fn solve(op: &CostOperator, dataset: &Dataset, options: &SolveOptions) -> Result<SolveResult> {
    options.validate()?;
    if op.num_clips() != dataset.clips.len() {
        return Err(Error::validation(
            "cost operator was built for a different number of clips",
        ));
    }
    let t_tot = op.total_intervals();
    let num_labels = op.num_labels();

    // Initial iterate: the supervised assignment on fixed clips, the
    // deterministic stays-first vertex on free clips.
    let mut z = DMatrix::zeros(t_tot, num_labels);
    let mut free = Vec::new();
    for (i, clip) in dataset.clips.iter().enumerate() {
        let range = op.clip_range(i);
        let t = clip.num_intervals();
        let k = clip.annotation.len();
        match &clip.supervised_assignment {
            Some(fixed) => {
                if fixed.matrix().nrows() != t || fixed.matrix().ncols() != num_labels {
                    return Err(Error::validation(format!(
                        "clip {:?}: supervised assignment shape mismatch",
                        clip.id
                    )));
                }
                z.rows_mut(range.start, t).copy_from(fixed.matrix());
            }
            None => {
                if t < k {
                    return Err(Error::validation(format!(
                        "clip {:?}: T={t} < K={k}, infeasible",
                        clip.id
                    )));
                }
                let vertex = stays_first_path(t, k).to_matrix(&clip.annotation, num_labels);
                z.rows_mut(range.start, t).copy_from(vertex.matrix());
                free.push(i);
            }
        }
    }

    let mut objective_history = Vec::new();
    let mut gap_history = Vec::new();
    let mut trace = Vec::new();
    let mut final_gap = f64::INFINITY;
    let mut iterations = 0;

    for iter in 0..options.max_iter {
        let objective = op.objective(&z)?;
        if !objective.is_finite() {
            return Err(Error::numerical(format!(
                "objective became non-finite at iteration {iter}"
            )));
        }
        let grad = op.gradient(&z)?;

        // Per-clip LMO on the gradient blocks of the free clips; the fixed
        // blocks keep the current iterate, i.e. a zero direction.
        let mut zvertex = z.clone();
        for &i in &free {
            let range = op.clip_range(i);
            let block = grad.rows(range.start, range.len()).into_owned();
            let (v, _) = oracle::lmo(&block, &dataset.clips[i].annotation)?;
            zvertex.rows_mut(range.start, range.len()).copy_from(v.matrix());
        }

        let gap = duality_gap(&grad, &z, &zvertex);
        final_gap = gap;
        iterations = iter;
        if options.record_history {
            objective_history.push(objective);
            gap_history.push(gap);
        }
        if gap < options.gap_tol {
            if options.record_history {
                trace.push(TraceRecord {
                    iteration: iter,
                    objective,
                    gap,
                    gamma: 0.0,
                });
            }
            break;
        }

        let gamma = match options.step_rule {
            StepRule::ExactLineSearch => exact_line_search(op, &grad, &z, &zvertex)?,
            StepRule::Universal => 2.0 / (iter as f64 + 2.0),
        };
        if options.record_history {
            trace.push(TraceRecord {
                iteration: iter,
                objective,
                gap,
                gamma,
            });
        }

        // Convex-combination update; fixed rows are untouched bit-for-bit.
        for &i in &free {
            let range = op.clip_range(i);
            for t in range.clone() {
                for a in 0..num_labels {
                    z[(t, a)] += gamma * (zvertex[(t, a)] - z[(t, a)]);
                }
            }
        }
        iterations = iter + 1;
    }

    let relaxed = RelaxedAssignment::new(z)?;
    let mut rounded = Vec::with_capacity(dataset.clips.len());
    let mut paths = Vec::with_capacity(dataset.clips.len());
    for (i, clip) in dataset.clips.iter().enumerate() {
        let range = op.clip_range(i);
        match &clip.supervised_assignment {
            Some(fixed) => {
                paths.push(fixed.to_path(&clip.annotation)?);
                rounded.push(fixed.clone());
            }
            None => {
                let block = relaxed.matrix().rows(range.start, range.len()).into_owned();
                let zbar = RelaxedAssignment::new(block)?;
                let z = oracle::round(&zbar, &clip.annotation)?;
                paths.push(z.to_path(&clip.annotation)?);
                rounded.push(z);
            }
        }
    }

    Ok(SolveResult {
        relaxed,
        rounded,
        paths,
        final_gap,
        objective_history,
        gap_history,
        trace,
        iterations,
    })
}

/// The deterministic tie-break vertex: stay in slot 0 as long as
/// feasibility allows, then advance once per interval.
pub fn stays_first_path(t_len: usize, k_len: usize) -> AssignmentPath {
    let slots: Vec<usize> = (0..t_len)
        .map(|t| (t + k_len).saturating_sub(t_len).min(k_len - 1))
        .collect();
    AssignmentPath::new(slots, k_len).expect("stays-first path is admissible")
}
