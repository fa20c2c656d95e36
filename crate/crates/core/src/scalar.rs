//! Scalar abstraction over the numeric backends.
//!
//! The whole model is generic over [`SimScalar`]: `f64` (and `f32`) for
//! production runs, [`BigRational`] for exact runs where tests assert
//! equality instead of approximation. Configuration values arrive as `f64`;
//! [`SimScalar::from_config`] converts them at the boundary. For rationals
//! that conversion is exact — every finite float is a dyadic rational — so an
//! exact run reproduces the configured constants with no rounding at all.

use std::fmt::{Debug, Display};

use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

/// Numeric backend for simulation state.
pub trait SimScalar:
    Num + NumAssign + Signed + PartialOrd + Clone + Debug + Display + Send + Sync + 'static
{
    /// True when arithmetic is exact (no rounding); audits then assert
    /// residuals are identically zero.
    const EXACT: bool;

    /// Convert a configuration/sampler value into this backend.
    ///
    /// Panics on non-finite input; configs are validated before this runs.
    fn from_config(value: f64) -> Self;

    /// Lossy view for reporting and file output.
    fn approx_f64(&self) -> f64;

    /// True unless the backend admits non-finite values and this is one.
    fn is_finite_scalar(&self) -> bool {
        true
    }

    /// Resolution (in bits) of unit-interval draws fed to this backend.
    ///
    /// Floats take the full 53 bits. The exact backend takes 16: each
    /// applied transaction multiplies state denominators by the mixing
    /// value's denominator, so coarser draws keep long exact runs tractable
    /// without affecting any exactness guarantee.
    fn unit_draw_bits() -> u32 {
        53
    }
}

impl SimScalar for f64 {
    const EXACT: bool = false;

    fn from_config(value: f64) -> Self {
        debug_assert!(value.is_finite(), "non-finite config value {value}");
        value
    }

    fn approx_f64(&self) -> f64 {
        *self
    }

    fn is_finite_scalar(&self) -> bool {
        self.is_finite()
    }
}

impl SimScalar for f32 {
    const EXACT: bool = false;

    fn from_config(value: f64) -> Self {
        debug_assert!(value.is_finite(), "non-finite config value {value}");
        value as f32
    }

    fn approx_f64(&self) -> f64 {
        f64::from(*self)
    }

    fn is_finite_scalar(&self) -> bool {
        self.is_finite()
    }

    fn unit_draw_bits() -> u32 {
        24
    }
}

impl SimScalar for BigRational {
    const EXACT: bool = true;

    fn from_config(value: f64) -> Self {
        BigRational::from_f64(value).unwrap_or_else(|| panic!("non-finite config value {value}"))
    }

    fn approx_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn unit_draw_bits() -> u32 {
        16
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_traits::One;

    #[test]
    fn rational_from_config_is_exact() {
        // 0.1 is not 1/10 as a float; the conversion must reproduce the
        // float's dyadic value, not the decimal literal.
        let r = BigRational::from_config(0.1);
        assert_eq!(r.approx_f64(), 0.1);
        // Power of two: dyadic rational.
        let d: BigInt = r.denom().clone();
        let mask: BigInt = &d - BigInt::one();
        assert_eq!(&d & &mask, BigInt::from(0));
        assert_ne!(r, BigRational::new(1.into(), 10.into()));
    }

    #[test]
    fn round_trips_integers() {
        assert_eq!(f64::from_config(3.0), 3.0);
        assert_eq!(BigRational::from_config(-2.0).approx_f64(), -2.0);
        assert_eq!(f32::from_config(0.5), 0.5f32);
    }

    #[test]
    fn finiteness_checks() {
        assert!(1.0f64.is_finite_scalar());
        assert!(!f64::INFINITY.is_finite_scalar());
        assert!(BigRational::from_config(1e300).is_finite_scalar());
    }
}
