//! Linear minimization over the set of order-respecting assignment
//! matrices, solved by dynamic programming over monotone paths, plus a
//! brute-force reference oracle and Frobenius rounding of relaxed points.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{
    binomial, enumerate_paths, AnnotationSequence, AssignmentMatrix, AssignmentPath,
    RelaxedAssignment,
};

/// Finds the assignment matrix minimizing `Tr(C^T Z)` over all admissible
/// assignments for `annotation`, in O(TK) time.
///
/// Ties are broken deterministically towards paths that take all stays
/// first (the path stays in a slot as long as feasibility permits).
pub fn lmo(c: &DMatrix<f64>, annotation: &AnnotationSequence) -> Result<(AssignmentMatrix, f64)> {
    let path = lmo_path(c, annotation)?;
    let cost = path_cost(c, annotation, &path);
    let z = path.to_matrix(annotation, c.ncols());
    Ok((z, cost))
}

/// Same as [`lmo`] but returns the path representation.
pub fn lmo_path(c: &DMatrix<f64>, annotation: &AnnotationSequence) -> Result<AssignmentPath> {
    let t_len = c.nrows();
    let k_len = annotation.len();
    if t_len < k_len {
        return Err(Error::validation(format!(
            "infeasible: T={t_len} < K={k_len}"
        )));
    }
    if c.iter().any(|v| v.is_nan()) {
        return Err(Error::validation("cost matrix contains NaN"));
    }

    // D[t][k] = C[t, a(k)], the per-cell cost in slot coordinates.
    let d = |t: usize, k: usize| c[(t, annotation.label(k))];

    // P[t][k] = optimal prefix cost ending at (t, k); infeasible cells stay
    // at +inf. advance[t][k] records whether the optimal step into (t, k)
    // came from slot k-1.
    let mut prev = vec![f64::INFINITY; k_len];
    let mut curr = vec![f64::INFINITY; k_len];
    let mut advance = vec![false; t_len * k_len];
    prev[0] = d(0, 0);
    for t in 1..t_len {
        for cell in curr.iter_mut() {
            *cell = f64::INFINITY;
        }
        // Feasible slots at time t: k <= t and K-1-k <= T-1-t.
        let k_lo = k_len.saturating_sub(t_len - t);
        let k_hi = t.min(k_len - 1);
        for k in k_lo..=k_hi {
            let stay = prev[k];
            let adv = if k > 0 { prev[k - 1] } else { f64::INFINITY };
            // Tie goes to the advance predecessor, which yields stays-first
            // paths after backtracking.
            let (best, from_advance) = if adv <= stay { (adv, true) } else { (stay, false) };
            if best.is_finite() {
                curr[k] = d(t, k) + best;
                advance[t * k_len + k] = from_advance;
            }
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    let total = prev[k_len - 1];
    if !total.is_finite() {
        return Err(Error::numerical(format!(
            "DP produced non-finite optimum for T={t_len}, K={k_len}"
        )));
    }

    let mut slots = vec![0usize; t_len];
    let mut k = k_len - 1;
    slots[t_len - 1] = k;
    for t in (1..t_len).rev() {
        if advance[t * k_len + k] {
            k -= 1;
        }
        slots[t - 1] = k;
    }
    AssignmentPath::new(slots, k_len)
}

/// Exhaustive minimization over all admissible paths; testing oracle for
/// [`lmo`]. Refuses instances with more than `cap` vertices.
pub fn brute_force_lmo(
    c: &DMatrix<f64>,
    annotation: &AnnotationSequence,
    cap: usize,
) -> Result<(AssignmentMatrix, f64)> {
    let t_len = c.nrows();
    let k_len = annotation.len();
    if t_len >= 1 && k_len >= 1 && binomial(t_len - 1, k_len - 1) > cap as u128 {
        return Err(Error::validation(format!(
            "brute-force oracle refused: {} vertices exceed cap {cap}",
            binomial(t_len - 1, k_len - 1)
        )));
    }
    let paths = enumerate_paths(t_len, k_len, cap)?;
    if paths.is_empty() {
        return Err(Error::validation(format!(
            "infeasible: T={t_len} < K={k_len}"
        )));
    }
    let mut best: Option<(AssignmentPath, f64)> = None;
    for path in paths {
        let cost = path_cost(c, annotation, &path);
        match &best {
            Some((_, bc)) if *bc <= cost => {}
            _ => best = Some((path, cost)),
        }
    }
    let (path, cost) = best.unwrap();
    Ok((path.to_matrix(annotation, c.ncols()), cost))
}

/// Rounds a relaxed assignment to the nearest vertex in Frobenius
/// distance. Reduces to one LMO call with cost `-Zbar`.
pub fn round(zbar: &RelaxedAssignment, annotation: &AnnotationSequence) -> Result<AssignmentMatrix> {
    let c = -zbar.matrix();
    let (z, _) = lmo(&c, annotation)?;
    Ok(z)
}

fn path_cost(c: &DMatrix<f64>, annotation: &AnnotationSequence, path: &AssignmentPath) -> f64 {
    path.slots()
        .iter()
        .enumerate()
        .map(|(t, &k)| c[(t, annotation.label(k))])
        .sum()
}
