//! Loss and overlap metrics used by the experiment runners.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Frobenius loss `sqrt(Tr((S - S_hat)(S - S_hat)^T))`.
pub fn frobenius_loss(s: &DMatrix<f64>, s_hat: &DMatrix<f64>) -> Result<f64> {
    if s.shape() != s_hat.shape() {
        return Err(Error::dimension(format!(
            "cannot compare {}x{} against {}x{}",
            s.nrows(),
            s.ncols(),
            s_hat.nrows(),
            s_hat.ncols()
        )));
    }
    Ok((s - s_hat).norm())
}

/// Relative improvement in average loss:
/// `1 - mean(candidate) / mean(baseline)`.
pub fn rial(losses_candidate: &[f64], losses_baseline: &[f64]) -> Result<f64> {
    if losses_candidate.is_empty() || losses_baseline.is_empty() {
        return Err(Error::degenerate("loss samples must be nonempty".to_string()));
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let base = mean(losses_baseline);
    if base == 0.0 {
        return Err(Error::degenerate(
            "baseline mean loss is zero; relative improvement is undefined".to_string(),
        ));
    }
    Ok(1.0 - mean(losses_candidate) / base)
}

/// Projections of true singular vectors onto the span of a subset of
/// observed ones.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapStats {
    /// `<u_i, P_l u_j>` where `P_l` projects onto the selected observed
    /// left vectors; `r x r`, bitwise symmetric.
    pub u_projection: DMatrix<f64>,
    /// `<v_i, P_r v_j>` for the right side.
    pub v_projection: DMatrix<f64>,
    /// Per-pair squared overlaps `<u_i, u~_k>^2`, `r x |A|` with columns
    /// ordered as the index subset.
    pub u_squared: DMatrix<f64>,
    pub v_squared: DMatrix<f64>,
}

fn side_overlaps(
    truth: &DMatrix<f64>,
    observed: &DMatrix<f64>,
    subset: &[usize],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if truth.nrows() != observed.nrows() {
        return Err(Error::dimension(format!(
            "true vectors live in dimension {}, observed in {}",
            truth.nrows(),
            observed.nrows()
        )));
    }
    for &k in subset {
        if k >= observed.ncols() {
            return Err(Error::domain(format!(
                "index {k} exceeds the {} observed vectors",
                observed.ncols()
            )));
        }
    }
    let r = truth.ncols();
    // Cache <t_i, o_k> once so the projection matrix comes out bitwise
    // symmetric.
    let mut dots = DMatrix::zeros(r, subset.len());
    for i in 0..r {
        for (col, &k) in subset.iter().enumerate() {
            dots[(i, col)] = truth.column(i).dot(&observed.column(k));
        }
    }
    let squared = dots.map(|x| x * x);
    let mut projection = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in i..r {
            let val = (0..subset.len()).map(|k| dots[(i, k)] * dots[(j, k)]).sum();
            projection[(i, j)] = val;
            projection[(j, i)] = val;
        }
    }
    Ok((projection, squared))
}

/// Computes both-sided overlap statistics for an index subset `A` of the
/// observed singular vector pairs.
pub fn overlap_stats(
    u_true: &DMatrix<f64>,
    v_true: &DMatrix<f64>,
    u_observed: &DMatrix<f64>,
    v_observed: &DMatrix<f64>,
    subset: &[usize],
) -> Result<OverlapStats> {
    if u_true.ncols() != v_true.ncols() {
        return Err(Error::dimension(format!(
            "{} left vectors against {} right vectors",
            u_true.ncols(),
            v_true.ncols()
        )));
    }
    let mut seen = vec![false; u_observed.ncols().max(v_observed.ncols())];
    for &k in subset {
        if k < seen.len() {
            if seen[k] {
                return Err(Error::domain(format!("duplicate index {k} in subset")));
            }
            seen[k] = true;
        }
    }
    let (u_projection, u_squared) = side_overlaps(u_true, u_observed, subset)?;
    let (v_projection, v_squared) = side_overlaps(v_true, v_observed, subset)?;
    Ok(OverlapStats {
        u_projection,
        v_projection,
        u_squared,
        v_squared,
    })
}

/// Fraction of true support indices present in the estimated supports,
/// with both sets taken as unions across components. An empty true union
/// scores 1 by convention.
pub fn support_recovery_fraction(
    true_supports: &[Vec<usize>],
    estimated_supports: &[Vec<usize>],
) -> f64 {
    let mut truth: Vec<usize> = true_supports.iter().flatten().copied().collect();
    truth.sort_unstable();
    truth.dedup();
    if truth.is_empty() {
        return 1.0;
    }
    let mut estimated: Vec<usize> = estimated_supports.iter().flatten().copied().collect();
    estimated.sort_unstable();
    estimated.dedup();
    let hit = truth
        .iter()
        .filter(|i| estimated.binary_search(i).is_ok())
        .count();
    hit as f64 / truth.len() as f64
}
