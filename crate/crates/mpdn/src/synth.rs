//! Seeded generation of ground-truth signals, noise matrices, and
//! observations `S~ = X + U D V^T`.
//!
//! All sampling is driven by [`ChaCha8Rng`] streams derived from a base
//! seed with a counter, so instances are bit-reproducible and independent
//! streams can be consumed in any order (or concurrently, one stream per
//! task).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `index` from a base seed. The derivation
/// is a counter mix, not sequential state, so streams for different
/// indices can be created in any order.
pub fn stream_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

/// ChaCha stream for sub-stream `index` of `base`.
pub fn stream_rng(base: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(base, index))
}

/// Entry distribution used for dense singular vectors before
/// orthonormalization. Sparse vectors always use Gaussian nonzeros.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryLaw {
    #[default]
    Gaussian,
    /// Unit-rate exponential entries; all-positive before
    /// orthonormalization, which reproduces the figure configurations of
    /// non-symmetric vector models.
    Exponential,
}

/// Shape of the singular vectors: exactly sparse with a fixed nonzero
/// count per side, or dense orthonormal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorFamily {
    /// Each left vector has `k_left` nonzeros, each right vector `k_right`.
    /// The counts differ so a common sparsity ratio can be applied to both
    /// sides of a rectangular matrix.
    Sparse { k_left: usize, k_right: usize },
    DenseOrthonormal,
}

impl VectorFamily {
    /// Sparse family where both sides have the same ratio of nonzero
    /// entries, rounded to at least one.
    pub fn sparse_from_ratio(ratio: f64, m: usize, n: usize) -> Result<Self> {
        if !ratio.is_finite() || ratio <= 0.0 || ratio > 1.0 {
            return Err(Error::domain(format!(
                "sparsity ratio must lie in (0, 1], got {ratio}"
            )));
        }
        let count = |len: usize| ((ratio * len as f64).round() as usize).clamp(1, len);
        Ok(VectorFamily::Sparse {
            k_left: count(m),
            k_right: count(n),
        })
    }
}

/// Base law of the noise entries; all three have mean zero and unit
/// variance, so the entries `sigma * q / sqrt(N)` share second-order
/// statistics across the enum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDistribution {
    #[default]
    Gaussian,
    Rademacher,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(default)]
    pub distribution: NoiseDistribution,
    /// Entry standard deviation before the `1/sqrt(N)` scaling; zero is
    /// allowed and yields an exact zero matrix.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_sigma() -> f64 {
    1.0
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            distribution: NoiseDistribution::Gaussian,
            sigma: 1.0,
        }
    }
}

impl NoiseSpec {
    fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::domain(format!(
                "noise level must be a nonnegative finite number, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Ground-truth signal description. The rank is the length of `d_values`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub m: usize,
    pub n: usize,
    /// Strictly descending positive signal values `d_1 > ... > d_r > 0`.
    pub d_values: Vec<f64>,
    pub vector_family: VectorFamily,
    #[serde(default)]
    pub entry_law: EntryLaw,
    pub seed: u64,
}

impl SignalSpec {
    pub fn r(&self) -> usize {
        self.d_values.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::domain(format!(
                "matrix dimensions must be positive, got {} x {}",
                self.m, self.n
            )));
        }
        let r = self.r();
        if r == 0 {
            return Err(Error::domain(
                "signal spectrum must contain at least one value".to_string(),
            ));
        }
        if r > self.m.min(self.n) {
            return Err(Error::domain(format!(
                "rank {r} exceeds min dimension {}",
                self.m.min(self.n)
            )));
        }
        if self.d_values.iter().any(|&d| !d.is_finite() || d <= 0.0) {
            return Err(Error::domain(
                "signal values must be positive finite numbers".to_string(),
            ));
        }
        for pair in self.d_values.windows(2) {
            if !(pair[1] < pair[0]) {
                return Err(Error::domain(format!(
                    "signal values must be strictly descending, got {} before {}",
                    pair[0], pair[1]
                )));
            }
        }
        if let VectorFamily::Sparse { k_left, k_right } = self.vector_family {
            if k_left == 0 || k_left > self.m {
                return Err(Error::domain(format!(
                    "left nonzero count {k_left} out of range 1..={}",
                    self.m
                )));
            }
            if k_right == 0 || k_right > self.n {
                return Err(Error::domain(format!(
                    "right nonzero count {k_right} out of range 1..={}",
                    self.n
                )));
            }
        }
        Ok(())
    }
}

/// A fully materialized draw of the observation model.
#[derive(Clone, Debug)]
pub struct SyntheticInstance {
    /// `M x r` orthonormal left vectors.
    pub u: DMatrix<f64>,
    pub d: Vec<f64>,
    /// `N x r` orthonormal right vectors.
    pub v: DMatrix<f64>,
    /// Signal `U D V^T`.
    pub signal: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    /// `signal + noise`, stored exactly as summed.
    pub observation: DMatrix<f64>,
    /// Sorted nonzero index sets per left vector, when the family is
    /// sparse. Supports may exceed the sampled nonzero count when
    /// overlapping vectors are orthonormalized against each other.
    pub u_supports: Option<Vec<Vec<usize>>>,
    pub v_supports: Option<Vec<Vec<usize>>>,
}

/// Unit vector of length `n` with exactly `k` nonzero entries. Support
/// indices are drawn uniformly without replacement, nonzero values are
/// standard normal, and the vector is scaled to unit norm. Returns the
/// sorted support alongside the vector.
pub fn gen_sparse_vector(
    n: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(DVector<f64>, Vec<usize>)> {
    if k == 0 || k > n {
        return Err(Error::domain(format!(
            "nonzero count {k} out of range 1..={n}"
        )));
    }
    let mut support = rand::seq::index::sample(rng, n, k).into_vec();
    support.sort_unstable();
    let mut v = DVector::zeros(n);
    loop {
        for &idx in &support {
            v[idx] = StandardNormal.sample(rng);
        }
        let norm = v.norm();
        if norm > 0.0 {
            v /= norm;
            return Ok((v, support));
        }
    }
}

fn sample_entry(law: EntryLaw, rng: &mut ChaCha8Rng) -> f64 {
    match law {
        EntryLaw::Gaussian => StandardNormal.sample(rng),
        // Inverse-CDF exponential with unit rate.
        EntryLaw::Exponential => -(1.0 - rng.random::<f64>()).ln(),
    }
}

/// `n x r` matrix with orthonormal columns. Dense columns draw i.i.d.
/// entries from `law` and are orthonormalized; sparse columns are drawn by
/// [`gen_sparse_vector`] and orthonormalized by sequential projection,
/// which only touches entries on the union of the supports involved, so
/// disjoint supports stay untouched and exactly orthogonal. Returns the
/// realized supports in the sparse case.
pub fn gen_orthonormal_set(
    n: usize,
    r: usize,
    law: EntryLaw,
    sparse_k: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<(DMatrix<f64>, Option<Vec<Vec<usize>>>)> {
    if r == 0 || r > n {
        return Err(Error::domain(format!(
            "cannot fit {r} orthonormal vectors in dimension {n}"
        )));
    }
    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(r);
    for _ in 0..r {
        loop {
            let mut w = match sparse_k {
                Some(k) => gen_sparse_vector(n, k, rng)?.0,
                None => DVector::from_fn(n, |_, _| sample_entry(law, rng)),
            };
            // Two projection passes keep the set orthonormal to working
            // precision even for nearly dependent draws.
            for _ in 0..2 {
                for prev in &columns {
                    let coef = prev.dot(&w);
                    w.axpy(-coef, prev, 1.0);
                }
            }
            let norm = w.norm();
            if norm > 1e-8 {
                w /= norm;
                columns.push(w);
                break;
            }
        }
    }
    let matrix = DMatrix::from_columns(&columns);
    let supports = sparse_k.map(|_| {
        columns
            .iter()
            .map(|col| {
                (0..n)
                    .filter(|&i| col[i] != 0.0)
                    .collect::<Vec<usize>>()
            })
            .collect()
    });
    Ok((matrix, supports))
}

/// `m x n` noise matrix with entries `sigma * q / sqrt(n)` where `q` is a
/// mean-zero unit-variance draw from the configured law. Entries are
/// filled column by column, which pins the stream-to-entry mapping.
pub fn gen_noise(m: usize, n: usize, spec: &NoiseSpec, rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    if m == 0 || n == 0 {
        return Err(Error::domain(format!(
            "matrix dimensions must be positive, got {m} x {n}"
        )));
    }
    spec.validate()?;
    let scale = spec.sigma / (n as f64).sqrt();
    let mut x = DMatrix::zeros(m, n);
    for j in 0..n {
        for i in 0..m {
            let q: f64 = match spec.distribution {
                NoiseDistribution::Gaussian => StandardNormal.sample(rng),
                NoiseDistribution::Rademacher => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
                NoiseDistribution::Uniform => (2.0 * rng.random::<f64>() - 1.0) * SQRT_3,
            };
            x[(i, j)] = scale * q;
        }
    }
    Ok(x)
}

/// Draws a full instance. Left vectors, right vectors, and noise use three
/// separate sub-streams of `signal.seed`, so each component is stable under
/// changes to the others' sampling logic.
pub fn assemble(signal: &SignalSpec, noise: &NoiseSpec) -> Result<SyntheticInstance> {
    signal.validate()?;
    noise.validate()?;
    let r = signal.r();
    let (k_left, k_right) = match signal.vector_family {
        VectorFamily::Sparse { k_left, k_right } => (Some(k_left), Some(k_right)),
        VectorFamily::DenseOrthonormal => (None, None),
    };
    let mut rng_u = stream_rng(signal.seed, 0);
    let mut rng_v = stream_rng(signal.seed, 1);
    let mut rng_x = stream_rng(signal.seed, 2);
    let (u, u_supports) = gen_orthonormal_set(signal.m, r, signal.entry_law, k_left, &mut rng_u)?;
    let (v, v_supports) = gen_orthonormal_set(signal.n, r, signal.entry_law, k_right, &mut rng_v)?;
    let noise_matrix = gen_noise(signal.m, signal.n, noise, &mut rng_x)?;
    let mut signal_matrix = DMatrix::zeros(signal.m, signal.n);
    for (i, &d) in signal.d_values.iter().enumerate() {
        signal_matrix.ger(d, &u.column(i), &v.column(i), 1.0);
    }
    let observation = &signal_matrix + &noise_matrix;
    Ok(SyntheticInstance {
        u,
        d: signal.d_values.clone(),
        v,
        signal: signal_matrix,
        noise: noise_matrix,
        observation,
        u_supports,
        v_supports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_seeds_are_order_free_and_distinct() {
        let a = stream_seed(7, 0);
        let b = stream_seed(7, 1);
        assert_ne!(a, b);
        assert_eq!(stream_seed(7, 1), b);
        assert_ne!(stream_seed(8, 0), a);
    }

    #[test]
    fn sparse_vector_contract() {
        let mut rng = stream_rng(11, 0);
        let (v, support) = gen_sparse_vector(600, 30, &mut rng).unwrap();
        assert_eq!(support.len(), 30);
        assert_eq!(v.iter().filter(|&&x| x != 0.0).count(), 30);
        assert!((v.norm() - 1.0).abs() < 1e-14);
        assert!(support.windows(2).all(|w| w[0] < w[1]));
        for (i, &x) in v.iter().enumerate() {
            assert_eq!(x != 0.0, support.binary_search(&i).is_ok());
        }
        assert!(gen_sparse_vector(10, 0, &mut rng).is_err());
        assert!(gen_sparse_vector(10, 11, &mut rng).is_err());
        // Full support is the dense degenerate case.
        let (w, s) = gen_sparse_vector(10, 10, &mut rng).unwrap();
        assert_eq!(s.len(), 10);
        assert!((w.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sparsity_ratio_maps_to_per_side_counts() {
        let fam = VectorFamily::sparse_from_ratio(0.05, 300, 600).unwrap();
        assert_eq!(
            fam,
            VectorFamily::Sparse {
                k_left: 15,
                k_right: 30
            }
        );
        assert!(VectorFamily::sparse_from_ratio(0.0, 300, 600).is_err());
        assert!(VectorFamily::sparse_from_ratio(1.5, 300, 600).is_err());
        // Tiny ratios still produce at least one nonzero.
        let tiny = VectorFamily::sparse_from_ratio(1e-6, 300, 600).unwrap();
        assert_eq!(
            tiny,
            VectorFamily::Sparse {
                k_left: 1,
                k_right: 1
            }
        );
    }

    #[test]
    fn orthonormal_set_is_orthonormal() {
        let mut rng = stream_rng(3, 5);
        let (q, supports) =
            gen_orthonormal_set(600, 2, EntryLaw::Gaussian, None, &mut rng).unwrap();
        assert!(supports.is_none());
        let gram = q.transpose() * &q;
        assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-12);
        assert!(gen_orthonormal_set(3, 4, EntryLaw::Gaussian, None, &mut rng).is_err());
    }

    #[test]
    fn exponential_entries_are_positive_before_orthonormalization() {
        let mut rng = stream_rng(3, 6);
        let (q, _) = gen_orthonormal_set(50, 1, EntryLaw::Exponential, None, &mut rng).unwrap();
        // A single exponential column is normalized but not recentered, so
        // every entry keeps its positive sign.
        assert!(q.iter().all(|&x| x > 0.0));
        assert!((q.column(0).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn disjoint_sparse_supports_are_exactly_orthogonal() {
        // Scan a few seeds for a draw with disjoint supports, then check
        // exact orthogonality on that draw.
        for seed in 0..20 {
            let mut rng = stream_rng(seed, 0);
            let (q, supports) =
                gen_orthonormal_set(200, 2, EntryLaw::Gaussian, Some(5), &mut rng).unwrap();
            let supports = supports.unwrap();
            let disjoint = supports[0].iter().all(|i| !supports[1].contains(i));
            if disjoint {
                assert_eq!(q.column(0).dot(&q.column(1)), 0.0);
                assert_eq!(supports[0].len(), 5);
                assert_eq!(supports[1].len(), 5);
                return;
            }
        }
        panic!("no disjoint draw among 20 seeds; supports of size 5 in 200 should collide rarely");
    }

    #[test]
    fn noise_respects_sigma_and_law() {
        let spec = NoiseSpec {
            distribution: NoiseDistribution::Rademacher,
            sigma: 0.5,
        };
        let mut rng = stream_rng(9, 2);
        let x = gen_noise(40, 90, &spec, &mut rng).unwrap();
        let scale = 0.5 / 90f64.sqrt();
        assert!(x.iter().all(|&e| (e.abs() - scale).abs() < 1e-15));

        let zero = gen_noise(
            4,
            5,
            &NoiseSpec {
                sigma: 0.0,
                ..NoiseSpec::default()
            },
            &mut rng,
        )
        .unwrap();
        assert!(zero.iter().all(|&e| e == 0.0));

        let bad = NoiseSpec {
            sigma: -1.0,
            ..NoiseSpec::default()
        };
        assert!(gen_noise(4, 5, &bad, &mut rng).is_err());
    }

    #[test]
    fn uniform_noise_has_unit_variance_base() {
        let spec = NoiseSpec {
            distribution: NoiseDistribution::Uniform,
            sigma: 1.0,
        };
        let mut rng = stream_rng(10, 0);
        let n = 400;
        let x = gen_noise(200, n, &spec, &mut rng).unwrap();
        let scaled: Vec<f64> = x.iter().map(|&e| e * (n as f64).sqrt()).collect();
        let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
        let var = scaled.iter().map(|&e| (e - mean) * (e - mean)).sum::<f64>()
            / (scaled.len() - 1) as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
        let bound = SQRT_3 / (n as f64).sqrt();
        assert!(scaled.iter().all(|&e| e.abs() <= bound * (n as f64).sqrt() + 1e-12));
    }

    #[test]
    fn assemble_is_reproducible_and_exact() {
        let signal = SignalSpec {
            m: 30,
            n: 60,
            d_values: vec![4.0, 3.0],
            vector_family: VectorFamily::DenseOrthonormal,
            entry_law: EntryLaw::Gaussian,
            seed: 42,
        };
        let noise = NoiseSpec::default();
        let a = assemble(&signal, &noise).unwrap();
        let b = assemble(&signal, &noise).unwrap();
        assert_eq!(a.observation, b.observation);
        assert_eq!(a.u, b.u);
        assert_eq!(a.noise, b.noise);
        // The observation is stored exactly as the sum of its parts.
        assert_eq!(a.observation, &a.signal + &a.noise);
        let gram_u = a.u.transpose() * &a.u;
        let gram_v = a.v.transpose() * &a.v;
        assert!((gram_u - DMatrix::identity(2, 2)).norm() < 1e-12);
        assert!((gram_v - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn assemble_with_zero_noise_returns_pure_signal() {
        let signal = SignalSpec {
            m: 20,
            n: 40,
            d_values: vec![2.0],
            vector_family: VectorFamily::Sparse {
                k_left: 4,
                k_right: 8,
            },
            entry_law: EntryLaw::Gaussian,
            seed: 5,
        };
        let inst = assemble(
            &signal,
            &NoiseSpec {
                sigma: 0.0,
                ..NoiseSpec::default()
            },
        )
        .unwrap();
        assert_eq!(inst.observation, inst.signal);
        let supports = inst.u_supports.as_ref().unwrap();
        assert_eq!(supports[0].len(), 4);
    }

    #[test]
    fn signal_spec_validation_rejects_bad_spectra() {
        let base = SignalSpec {
            m: 10,
            n: 20,
            d_values: vec![3.0, 1.0],
            vector_family: VectorFamily::DenseOrthonormal,
            entry_law: EntryLaw::Gaussian,
            seed: 0,
        };
        assert!(base.validate().is_ok());
        let mut bad = base.clone();
        bad.d_values = vec![];
        assert!(bad.validate().is_err());
        bad = base.clone();
        bad.d_values = vec![1.0, 3.0];
        assert!(bad.validate().is_err());
        bad = base.clone();
        bad.d_values = vec![3.0, 3.0];
        assert!(bad.validate().is_err());
        bad = base.clone();
        bad.d_values = vec![3.0, -1.0];
        assert!(bad.validate().is_err());
        bad = base.clone();
        bad.d_values = (0..11).map(|i| 20.0 - i as f64).collect();
        assert!(bad.validate().is_err());
        bad = base.clone();
        bad.vector_family = VectorFamily::Sparse {
            k_left: 11,
            k_right: 5,
        };
        assert!(bad.validate().is_err());
        bad = base;
        bad.vector_family = VectorFamily::Sparse {
            k_left: 0,
            k_right: 5,
        };
        assert!(bad.validate().is_err());
    }
}
