//! Denoising of low-rank signal matrices observed through additive
//! rectangular noise.
//!
//! The observation model is `S~ = X + U D V^T` where `X` has i.i.d. entries
//! of variance `sigma^2 / N` and `U D V^T` is a fixed-rank signal. The
//! surrounding theory lives in [`spectral`]: Marchenko-Pastur densities,
//! Stieltjes transforms, the outlier location map `p(d)` and its inverse,
//! and the asymptotic singular-vector overlaps. [`denoise`] builds three
//! estimators on top of it (stepwise sparse SVD, a rotation invariant
//! shrinker, and truncated SVD baselines), [`synth`] generates seeded
//! instances of the model, and [`experiment`] runs the Monte Carlo studies
//! that check the finite-size behavior against the limits.
//!
//! All randomness flows through explicit seeds and counter-derived ChaCha
//! streams, so every result in the crate is reproducible bit for bit,
//! including across the serial and `parallel` execution paths.

pub mod denoise;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
