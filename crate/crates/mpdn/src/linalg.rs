//! Deterministic numerical kernels shared by the estimators: full SVD with
//! fixed ordering and sign conventions, exact one-dimensional 2-means, and
//! support embedding.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Thin SVD `A = U diag(s) V^T` with `K = min(M, N)` columns.
///
/// Singular values are descending; ties and zero values keep the order the
/// backend produced, permuted stably. In every pair of singular vectors the
/// left vector's largest-magnitude entry is nonnegative (first such entry
/// on magnitude ties), which pins an otherwise arbitrary sign and makes
/// deflation and overlap statistics reproducible.
#[derive(Clone, Debug)]
pub struct SvdFactorization {
    pub singular_values: DVector<f64>,
    /// `M x K`, orthonormal columns.
    pub left: DMatrix<f64>,
    /// `N x K`, orthonormal columns.
    pub right: DMatrix<f64>,
}

impl SvdFactorization {
    pub fn k(&self) -> usize {
        self.singular_values.len()
    }

    /// `U diag(s) V^T` over all `K` components.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.reconstruct_rank(self.k())
    }

    /// Sum of the first `rank` components.
    pub fn reconstruct_rank(&self, rank: usize) -> DMatrix<f64> {
        let rank = rank.min(self.k());
        let mut out = DMatrix::zeros(self.left.nrows(), self.right.nrows());
        for k in 0..rank {
            out.ger(
                self.singular_values[k],
                &self.left.column(k),
                &self.right.column(k),
                1.0,
            );
        }
        out
    }

    /// Squared singular values, the eigenvalue scale the detection theory
    /// is phrased in.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.singular_values.iter().map(|&s| s * s).collect()
    }
}

fn sign_normalize(left: &mut DMatrix<f64>, right: &mut DMatrix<f64>) {
    for k in 0..left.ncols() {
        let mut arg = 0;
        let mut best = -1.0;
        for i in 0..left.nrows() {
            let mag = left[(i, k)].abs();
            if mag > best {
                best = mag;
                arg = i;
            }
        }
        if left[(arg, k)] < 0.0 {
            left.column_mut(k).neg_mut();
            right.column_mut(k).neg_mut();
        }
    }
}

/// `x * 2^e` computed in two exact steps so `e` may exceed the exponent
/// range of a single finite power of two.
fn scale_pow2(x: f64, e: f64) -> f64 {
    let e1 = e.clamp(-1000.0, 1000.0);
    x * f64::exp2(e1) * f64::exp2(e - e1)
}

/// Implicit-shift SVD attempt. Returns descending-unsorted factors only when
/// the iteration converged to finite values; the backend is known to emit
/// NaN on some exactly rank-deficient inputs instead of failing cleanly.
fn implicit_shift_svd(a: DMatrix<f64>) -> Option<(DVector<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let iter_cap = 75 * a.nrows().max(a.ncols());
    let svd = nalgebra::linalg::SVD::try_new_unordered(a, true, true, f64::EPSILON, iter_cap)?;
    let u = svd.u.expect("left vectors requested");
    let v = svd.v_t.expect("right vectors requested").transpose();
    let s = svd.singular_values;
    let finite = s.iter().all(|x| x.is_finite())
        && u.iter().all(|x| x.is_finite())
        && v.iter().all(|x| x.is_finite());
    finite.then_some((s, u, v))
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Unconditionally
/// convergent, so it serves as the fallback when the implicit-shift
/// iteration fails. Returns eigenvalues in descending order with matching
/// orthonormal columns.
fn jacobi_symmetric_eigen(mut g: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = g.nrows();
    let mut vecs = DMatrix::identity(n, n);
    let scale = g.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let tol = scale * f64::EPSILON;
    if scale > 0.0 {
        for _sweep in 0..60 {
            let mut max_off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    max_off = max_off.max(g[(p, q)].abs());
                }
            }
            if max_off <= tol {
                break;
            }
            for p in 0..n.saturating_sub(1) {
                for q in (p + 1)..n {
                    let apq = g[(p, q)];
                    if apq.abs() <= tol {
                        continue;
                    }
                    let theta = (g[(q, q)] - g[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                    let c = 1.0 / t.hypot(1.0);
                    let s = t * c;
                    for i in 0..n {
                        let gip = g[(i, p)];
                        let giq = g[(i, q)];
                        g[(i, p)] = c * gip - s * giq;
                        g[(i, q)] = s * gip + c * giq;
                    }
                    for j in 0..n {
                        let gpj = g[(p, j)];
                        let gqj = g[(q, j)];
                        g[(p, j)] = c * gpj - s * gqj;
                        g[(q, j)] = s * gpj + c * gqj;
                    }
                    g[(p, q)] = 0.0;
                    g[(q, p)] = 0.0;
                    for i in 0..n {
                        let vip = vecs[(i, p)];
                        let viq = vecs[(i, q)];
                        vecs[(i, p)] = c * vip - s * viq;
                        vecs[(i, q)] = s * vip + c * viq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| g[(j, j)].partial_cmp(&g[(i, i)]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| g[(i, i)]).collect();
    let mut sorted = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        sorted.column_mut(dst).copy_from(&vecs.column(src));
    }
    (values, sorted)
}

/// Appends `col` to the orthonormal set in `out[..filled]`, re-orthogonalizing
/// twice. Falls back to canonical basis vectors when the candidate lies in
/// the span of the existing columns. `basis_cursor` remembers which basis
/// vectors were already consumed.
fn push_orthonormal(
    out: &mut DMatrix<f64>,
    filled: usize,
    col: Option<DVector<f64>>,
    basis_cursor: &mut usize,
) {
    let dim = out.nrows();
    let mut candidate = col;
    loop {
        let mut w = candidate.take().unwrap_or_else(|| {
            let mut e = DVector::zeros(dim);
            e[*basis_cursor] = 1.0;
            *basis_cursor += 1;
            e
        });
        for _pass in 0..2 {
            for j in 0..filled {
                let proj = out.column(j).dot(&w);
                w.axpy(-proj, &out.column(j).into_owned(), 1.0);
            }
        }
        let norm = w.norm();
        if norm > 1e-6 {
            out.column_mut(filled).copy_from(&(w / norm));
            return;
        }
    }
}

/// Accepts implicit-shift factors outright when the spectrum is safely full
/// rank. On (near-)rank-deficient inputs the backend has been observed to
/// return finite but inconsistent factors, so those are accepted only after
/// checking the reconstruction and the orthonormality of both sides.
fn factors_usable(a: &DMatrix<f64>, s: &DVector<f64>, u: &DMatrix<f64>, v: &DMatrix<f64>) -> bool {
    let k = s.len() as f64;
    let smax = s.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let smin = s.iter().fold(f64::INFINITY, |acc, &x| acc.min(x.abs()));
    if smin > smax * f64::EPSILON * k {
        return true;
    }
    let mut scaled_u = u.clone();
    for (j, mut col) in scaled_u.column_iter_mut().enumerate() {
        col *= s[j];
    }
    let recon_err = (a - scaled_u * v.transpose()).norm();
    if recon_err > 1e-10 * k * smax.max(f64::MIN_POSITIVE) {
        return false;
    }
    let eye_u = DMatrix::identity(u.ncols(), u.ncols());
    let eye_v = DMatrix::identity(v.ncols(), v.ncols());
    (u.transpose() * u - eye_u).norm() <= 1e-10 * k && (v.transpose() * v - eye_v).norm() <= 1e-10 * k
}

/// SVD through a Jacobi eigendecomposition of the smaller Gram matrix.
/// Exact zero and repeated singular values pose no difficulty here, at the
/// cost of squaring the condition number, which is acceptable for the
/// degenerate matrices that reach this path.
fn gram_jacobi_svd(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    let wide = m <= n;
    let gram = if wide {
        a * a.transpose()
    } else {
        a.transpose() * a
    };
    let (eigs, w) = jacobi_symmetric_eigen(gram);
    let k = eigs.len();
    let s = DVector::from_iterator(k, eigs.iter().map(|&e| e.max(0.0).sqrt()));
    let cutoff = s[0] * 1e-10;
    let other_dim = if wide { n } else { m };
    let mut other = DMatrix::zeros(other_dim, k);
    let mut basis_cursor = 0usize;
    for i in 0..k {
        let col = (s[i] > cutoff).then(|| {
            let mapped = if wide {
                a.transpose() * w.column(i)
            } else {
                a * w.column(i)
            };
            mapped / s[i]
        });
        push_orthonormal(&mut other, i, col, &mut basis_cursor);
    }
    if wide {
        (s, w, other)
    } else {
        (s, other, w)
    }
}

/// Full SVD with the conventions of [`SvdFactorization`].
///
/// The implicit-shift backend runs on a power-of-two rescaling of the input
/// (exactly equivalent in floating point, but immune to underflow on
/// near-zero matrices). Factors of rank-deficient inputs are verified
/// against the input before being accepted; on failure the transposed
/// problem is tried, then the Jacobi Gram route, so every finite matrix
/// factors successfully.
pub fn full_svd(a: &DMatrix<f64>) -> Result<SvdFactorization> {
    if a.is_empty() {
        return Err(Error::dimension("cannot factor an empty matrix".to_string()));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain(
            "matrix contains non-finite entries".to_string(),
        ));
    }
    let amax = a.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let exp = if amax > 0.0 { amax.log2().ceil() } else { 0.0 };
    let scaled = a.map(|x| scale_pow2(x, -exp));
    let (s_raw, u, v) = implicit_shift_svd(scaled.clone())
        .filter(|(s, u, v)| factors_usable(&scaled, s, u, v))
        .or_else(|| {
            implicit_shift_svd(scaled.transpose())
                .map(|(s, ut, vt)| (s, vt, ut))
                .filter(|(s, u, v)| factors_usable(&scaled, s, u, v))
        })
        .unwrap_or_else(|| gram_jacobi_svd(&scaled));
    let s = s_raw.map(|x| scale_pow2(x, exp));
    let k = s.len();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).expect("finite singular values"));

    let mut singular_values = DVector::zeros(k);
    let mut left = DMatrix::zeros(a.nrows(), k);
    let mut right = DMatrix::zeros(a.ncols(), k);
    for (dst, &src) in order.iter().enumerate() {
        singular_values[dst] = s[src];
        left.column_mut(dst).copy_from(&u.column(src));
        right.column_mut(dst).copy_from(&v.column(src));
    }
    sign_normalize(&mut left, &mut right);
    Ok(SvdFactorization {
        singular_values,
        left,
        right,
    })
}

/// Exact 2-cluster split of one-dimensional values.
///
/// `upper_indices` and `lower_indices` partition the input positions, all
/// upper values exceed all lower values, and `threshold` lies strictly
/// between the clusters. `separation_score` is the smallest upper value
/// relative to the natural delocalized magnitude `1 / sqrt(n)`; callers use
/// it to decide whether the split is trustworthy.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoMeansSplit {
    pub upper_indices: Vec<usize>,
    pub lower_indices: Vec<usize>,
    pub threshold: f64,
    pub separation_score: f64,
    /// Within-cluster sum of squares achieved by the split.
    pub sse: f64,
}

/// Optimal 2-cluster within-cluster sum of squares on a line, by sorting
/// and scanning every split point. Exact and deterministic; SSE ties are
/// broken toward the smaller upper cluster.
pub fn two_means_1d(values: &[f64]) -> Result<TwoMeansSplit> {
    let n = values.len();
    if n < 2 {
        return Err(Error::degenerate(format!(
            "need at least two values to split, got {n}"
        )));
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("values contain non-finite entries".to_string()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    if sorted[0] == sorted[n - 1] {
        return Err(Error::degenerate(
            "all values are equal; no two-cluster split exists".to_string(),
        ));
    }

    let mut prefix_sum = vec![0.0; n + 1];
    let mut prefix_sq = vec![0.0; n + 1];
    for (i, &v) in sorted.iter().enumerate() {
        prefix_sum[i + 1] = prefix_sum[i] + v;
        prefix_sq[i + 1] = prefix_sq[i] + v * v;
    }
    let cluster_sse = |lo: usize, hi: usize| -> f64 {
        let count = (hi - lo) as f64;
        let sum = prefix_sum[hi] - prefix_sum[lo];
        let sq = prefix_sq[hi] - prefix_sq[lo];
        (sq - sum * sum / count).max(0.0)
    };

    let mut best_split = 1;
    let mut best_sse = f64::INFINITY;
    for s in 1..n {
        let sse = cluster_sse(0, s) + cluster_sse(s, n);
        // `<=` prefers the largest split index on ties, i.e. the smaller
        // upper cluster.
        if sse <= best_sse {
            best_sse = sse;
            best_split = s;
        }
    }

    let mut lower_indices: Vec<usize> = order[..best_split].to_vec();
    let mut upper_indices: Vec<usize> = order[best_split..].to_vec();
    lower_indices.sort_unstable();
    upper_indices.sort_unstable();
    let max_lower = sorted[best_split - 1];
    let min_upper = sorted[best_split];
    Ok(TwoMeansSplit {
        upper_indices,
        lower_indices,
        threshold: 0.5 * (max_lower + min_upper),
        separation_score: min_upper * (n as f64).sqrt(),
        sse: best_sse,
    })
}

/// Places `sub` at `support` positions of a length-`n` zero vector.
pub fn embed_by_support(sub: &DVector<f64>, support: &[usize], n: usize) -> Result<DVector<f64>> {
    if sub.len() != support.len() {
        return Err(Error::dimension(format!(
            "sub-vector length {} does not match support size {}",
            sub.len(),
            support.len()
        )));
    }
    if support.len() > n {
        return Err(Error::dimension(format!(
            "support of size {} cannot fit in dimension {n}",
            support.len()
        )));
    }
    let mut seen = vec![false; n];
    let mut out = DVector::zeros(n);
    for (pos, &idx) in support.iter().enumerate() {
        if idx >= n {
            return Err(Error::domain(format!(
                "support index {idx} out of range for dimension {n}"
            )));
        }
        if seen[idx] {
            return Err(Error::domain(format!("support index {idx} repeats")));
        }
        seen[idx] = true;
        out[idx] = sub[pos];
    }
    Ok(out)
}
