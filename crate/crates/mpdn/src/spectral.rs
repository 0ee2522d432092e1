//! Limiting spectral theory for the observation model `S~ = X + U D V^T`
//! at unit noise level.
//!
//! Throughout, `M x N` matrices are parametrized by the aspect ratio
//! `c = N / M`, and the noise entries have variance `1 / N`. The squared
//! singular values of the pure-noise matrix then fill the interval between
//! the spectral edges `(1 -+ c^{-1/2})^2`, a signal value `d` detaches an
//! eigenvalue from the bulk exactly when `d > c^{-1/4}`, and a detached
//! eigenvalue lands at `p(d) = (d^2 + 1)(d^2 + c^{-1}) / d^2`. The squared
//! overlaps between true and observed singular vectors converge to `a1(d)`
//! on the left and `a2(d)` on the right.
//!
//! Everything here is deterministic closed-form evaluation; the sampling
//! side lives in [`crate::synth`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Aspect ratio `c = N / M` of an `M x N` observation, kept strictly
/// positive and finite by construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AspectRatio {
    c: f64,
}

impl AspectRatio {
    pub fn new(c: f64) -> Result<Self> {
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::domain(format!(
                "aspect ratio must be a positive finite number, got {c}"
            )));
        }
        Ok(AspectRatio { c })
    }

    /// Ratio `N / M` for a concrete `M x N` shape.
    pub fn from_dims(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::domain(format!(
                "matrix dimensions must be positive, got {m} x {n}"
            )));
        }
        AspectRatio::new(n as f64 / m as f64)
    }

    pub fn value(self) -> f64 {
        self.c
    }

    /// Reciprocal `c^{-1}`, the combination most formulas are written in.
    pub fn inv(self) -> f64 {
        1.0 / self.c
    }

    /// Detection threshold `c^{-1/4}`: signal values at or below it do not
    /// produce an eigenvalue outside the bulk.
    pub fn critical_d(self) -> f64 {
        self.c.powf(-0.25)
    }
}

impl TryFrom<f64> for AspectRatio {
    type Error = Error;

    fn try_from(c: f64) -> Result<Self> {
        AspectRatio::new(c)
    }
}

impl From<AspectRatio> for f64 {
    fn from(c: AspectRatio) -> f64 {
        c.c
    }
}

/// Endpoints `(1 -+ c^{-1/2})^2` of the bulk of squared singular values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEdges {
    pub lower: f64,
    pub upper: f64,
}

/// A spectral argument `E + i eta` kept strictly off the real axis, where
/// the Stieltjes transforms are well defined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlanePoint {
    z: Complex64,
}

impl HalfPlanePoint {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() || im <= 0.0 {
            return Err(Error::domain(format!(
                "spectral argument must have a positive finite imaginary part, got {re} + {im}i"
            )));
        }
        Ok(HalfPlanePoint {
            z: Complex64::new(re, im),
        })
    }

    pub fn value(self) -> Complex64 {
        self.z
    }
}

/// Bulk endpoints for aspect ratio `c`.
pub fn edges(c: AspectRatio) -> SpectralEdges {
    let s = c.inv().sqrt();
    SpectralEdges {
        lower: (1.0 - s) * (1.0 - s),
        upper: (1.0 + s) * (1.0 + s),
    }
}

/// Density of the limiting eigenvalue distribution of the `M x M` Gram
/// matrix `S~ S~^T` at unit noise: `(c / 2 pi) sqrt((E+ - x)(x - E-)) / x`
/// inside the bulk and zero outside. The distribution also carries an atom
/// of mass `max(0, 1 - c)` at zero, which a density cannot represent; the
/// continuous part integrates to `min(1, c)`.
pub fn mp_density_1(x: f64, c: AspectRatio) -> f64 {
    let e = edges(c);
    if !(x > e.lower && x < e.upper) || x <= 0.0 {
        return 0.0;
    }
    c.value() / (2.0 * std::f64::consts::PI) * ((e.upper - x) * (x - e.lower)).sqrt() / x
}

/// Density of the limiting eigenvalue distribution of the `N x N` Gram
/// matrix `S~^T S~`. Identical to [`mp_density_1`] without the factor `c`;
/// the continuous part integrates to `min(1, 1/c)` and the atom at zero has
/// mass `max(0, 1 - 1/c)`.
pub fn mp_density_2(x: f64, c: AspectRatio) -> f64 {
    mp_density_1(x, c) / c.value()
}

fn edge_sqrt(z: Complex64, c: AspectRatio) -> Complex64 {
    let e = edges(c);
    ((e.upper - z) * (z - e.lower)).sqrt()
}

/// Stieltjes transform of the distribution described by [`mp_density_1`]
/// (continuous part plus atom), evaluated off the real axis.
pub fn m1c(z: HalfPlanePoint, c: AspectRatio) -> Complex64 {
    let z = z.value();
    let num = 1.0 - c.inv() - z + Complex64::i() * edge_sqrt(z, c);
    num / (2.0 * z * c.inv())
}

/// Stieltjes transform of the distribution described by [`mp_density_2`].
pub fn m2c(z: HalfPlanePoint, c: AspectRatio) -> Complex64 {
    let z = z.value();
    let num = c.inv() - 1.0 - z + Complex64::i() * edge_sqrt(z, c);
    num / (2.0 * z)
}

/// The product `x m1c(x) m2c(x)` continued to the real axis right of the
/// bulk, where both transforms are real. It decreases strictly from
/// `sqrt(c)` at the upper edge to zero at infinity, which makes it the
/// natural detection statistic: `t_real(p(d)) = d^{-2}`.
pub fn t_real(x: f64, c: AspectRatio) -> Result<f64> {
    let e = edges(c);
    if !x.is_finite() || x <= e.upper {
        return Err(Error::domain(format!(
            "detection statistic is defined right of the bulk edge {}, got {x}",
            e.upper
        )));
    }
    // Conjugate form of (x - (1 + 1/c) - root) / (2/c): the direct
    // difference cancels catastrophically for large x, this one does not.
    // The factored discriminant stays nonnegative in floating point for
    // any x >= E+.
    let root = ((x - e.upper) * (x - e.lower)).sqrt();
    Ok(2.0 / (x - (1.0 + c.inv()) + root))
}

/// Product `prod_i (t_real(x) - d_i^{-2})` over a signal spectrum. Its sign
/// changes exactly at the outlier locations `p(d_i)`, which is how the
/// detached eigenvalues are characterized.
pub fn t_product(x: f64, d_values: &[f64], c: AspectRatio) -> Result<f64> {
    if d_values.is_empty() {
        return Err(Error::degenerate("signal spectrum is empty".to_string()));
    }
    for pair in d_values.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::domain(format!(
                "signal values must be strictly descending, got {} before {}",
                pair[0], pair[1]
            )));
        }
    }
    if d_values.iter().any(|&d| !d.is_finite() || d <= 0.0) {
        return Err(Error::domain(
            "signal values must be positive finite numbers".to_string(),
        ));
    }
    let t = t_real(x, c)?;
    Ok(d_values.iter().map(|&d| t - 1.0 / (d * d)).product())
}

/// Location `(d^2 + 1)(d^2 + c^{-1}) / d^2` of the eigenvalue detached by a
/// signal value `d`. The formula is valid as a spectral location only for
/// `d` above [`AspectRatio::critical_d`]; at the threshold it equals the
/// upper edge.
pub fn p_of_d(d: f64, c: AspectRatio) -> Result<f64> {
    if !d.is_finite() || d <= 0.0 {
        return Err(Error::domain(format!(
            "signal value must be a positive finite number, got {d}"
        )));
    }
    let t = d * d;
    Ok((t + 1.0) * (t + c.inv()) / t)
}

/// Inverse of [`p_of_d`] on the detectable branch: given an eigenvalue
/// `mu >= E+`, returns the unique `d >= c^{-1/4}` with `p(d) = mu`. `d^2`
/// is the larger root of `t^2 + (1 + c^{-1} - mu) t + c^{-1} = 0`.
pub fn p_inverse(mu: f64, c: AspectRatio) -> Result<f64> {
    let e = edges(c);
    if !mu.is_finite() || mu < e.upper {
        return Err(Error::domain(format!(
            "eigenvalue {mu} is below the bulk edge {}, no detached signal value exists",
            e.upper
        )));
    }
    // Discriminant in the factored form (mu - E+)(mu - E-), nonnegative in
    // floating point on the whole domain; clamp guards the mu == E+ case.
    let disc = ((mu - e.upper) * (mu - e.lower)).max(0.0);
    let t = ((mu - 1.0 - c.inv()) + disc.sqrt()) / 2.0;
    Ok(t.sqrt())
}

fn overlap_domain(d: f64, c: AspectRatio) -> Result<f64> {
    if !d.is_finite() || d < c.critical_d() {
        return Err(Error::domain(format!(
            "overlap limits require a detectable signal value, got {d} below {}",
            c.critical_d()
        )));
    }
    // d^4 - 1/c vanishes at the threshold; rounding may leave a tiny
    // negative remainder there.
    Ok((d * d * d * d - c.inv()).max(0.0))
}

/// Limiting squared overlap `(d^4 - c^{-1}) / (d^2 (d^2 + c^{-1}))` between
/// the true and observed left singular vectors of a detectable signal value.
pub fn a1(d: f64, c: AspectRatio) -> Result<f64> {
    let num = overlap_domain(d, c)?;
    Ok(num / (d * d * (d * d + c.inv())))
}

/// Limiting squared overlap `(d^4 - c^{-1}) / (d^2 (d^2 + 1))` between the
/// true and observed right singular vectors of a detectable signal value.
pub fn a2(d: f64, c: AspectRatio) -> Result<f64> {
    let num = overlap_domain(d, c)?;
    Ok(num / (d * d * (d * d + 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c2() -> AspectRatio {
        AspectRatio::new(2.0).unwrap()
    }

    #[test]
    fn aspect_ratio_rejects_bad_values() {
        assert!(AspectRatio::new(0.0).is_err());
        assert!(AspectRatio::new(-1.0).is_err());
        assert!(AspectRatio::new(f64::NAN).is_err());
        assert!(AspectRatio::new(f64::INFINITY).is_err());
        assert!(AspectRatio::from_dims(0, 10).is_err());
        assert!(AspectRatio::from_dims(10, 0).is_err());
        assert_eq!(AspectRatio::from_dims(100, 200).unwrap().value(), 2.0);
    }

    #[test]
    fn half_plane_point_requires_positive_imaginary_part() {
        assert!(HalfPlanePoint::new(1.0, 0.0).is_err());
        assert!(HalfPlanePoint::new(1.0, -0.1).is_err());
        assert!(HalfPlanePoint::new(f64::NAN, 0.1).is_err());
        assert!(HalfPlanePoint::new(1.0, 0.1).is_ok());
    }

    #[test]
    fn edges_match_closed_form() {
        let e = edges(c2());
        assert!((e.upper - 2.914213562373095).abs() < 1e-15);
        assert!((e.lower - 0.08578643762690495).abs() < 1e-15);

        // Square case: bulk starts at zero and ends at four.
        let e1 = edges(AspectRatio::new(1.0).unwrap());
        assert_eq!(e1.lower, 0.0);
        assert_eq!(e1.upper, 4.0);
    }

    #[test]
    fn density_vanishes_outside_bulk() {
        let c = c2();
        let e = edges(c);
        assert_eq!(mp_density_1(e.lower - 0.01, c), 0.0);
        assert_eq!(mp_density_1(e.upper + 0.01, c), 0.0);
        assert_eq!(mp_density_1(e.lower, c), 0.0);
        assert_eq!(mp_density_1(e.upper, c), 0.0);
        assert!(mp_density_1(1.0, c) > 0.0);
    }

    #[test]
    fn density_peak_value_square_case() {
        // At c = 1 the density is sqrt((4 - x) x) / (2 pi x); at x = 2 both
        // factors are 2, giving 1 / (2 pi).
        let c = AspectRatio::new(1.0).unwrap();
        let expected = 1.0 / (2.0 * std::f64::consts::PI);
        assert!((mp_density_1(2.0, c) - expected).abs() < 1e-15);
        assert!((mp_density_2(2.0, c) - expected).abs() < 1e-15);
    }

    #[test]
    fn detection_statistic_limits() {
        let c = c2();
        let e = edges(c);
        // sqrt(c) at the edge, decreasing toward zero far away.
        let near_edge = t_real(e.upper + 1e-12, c).unwrap();
        assert!((near_edge - 2f64.sqrt()).abs() < 1e-5);
        let far = t_real(1e9, c).unwrap();
        assert!(far > 0.0 && far < 1e-8);
        assert!(t_real(e.upper, c).is_err());
        assert!(t_real(1.0, c).is_err());
    }

    #[test]
    fn outlier_location_frozen_values() {
        let c = c2();
        // (9 + 1)(9 + 1/2) / 9 = 95 / 9 and (16 + 1)(16 + 1/2) / 16.
        assert!((p_of_d(3.0, c).unwrap() - 95.0 / 9.0).abs() < 1e-13);
        assert!((p_of_d(4.0, c).unwrap() - 17.53125).abs() < 1e-13);
        assert!(p_of_d(0.0, c).is_err());
        assert!(p_of_d(-2.0, c).is_err());
    }

    #[test]
    fn inverse_recovers_threshold_at_edge() {
        let c = c2();
        let e = edges(c);
        let d = p_inverse(e.upper, c).unwrap();
        assert!((d - c.critical_d()).abs() < 1e-12);
        assert!(p_inverse(e.upper - 1e-9, c).is_err());
    }

    #[test]
    fn overlap_frozen_values() {
        let c = c2();
        assert!((a1(3.0, c).unwrap() - 80.5 / 85.5).abs() < 1e-15);
        assert!((a2(3.0, c).unwrap() - 80.5 / 90.0).abs() < 1e-15);
        // Exactly at the detection threshold both overlaps vanish.
        let crit = c.critical_d();
        assert!(a1(crit, c).unwrap().abs() < 1e-15);
        assert!(a2(crit, c).unwrap().abs() < 1e-15);
        assert!(a1(crit - 1e-6, c).is_err());
        // Far above the threshold both overlaps approach one.
        assert!(a1(1e3, c).unwrap() > 0.9999);
        assert!(a2(1e3, c).unwrap() > 0.9999);
    }

    #[test]
    fn product_statistic_requires_descending_spectrum() {
        let c = c2();
        assert!(t_product(20.0, &[], c).is_err());
        assert!(t_product(20.0, &[3.0, 4.0], c).is_err());
        assert!(t_product(20.0, &[3.0, 3.0], c).is_err());
        assert!(t_product(20.0, &[4.0, -1.0], c).is_err());
        assert!(t_product(20.0, &[4.0, 3.0], c).is_ok());
    }
}
