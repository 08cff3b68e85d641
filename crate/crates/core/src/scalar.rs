use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the geometry and measure code is written against.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Absolute slack added to every geometric comparison in the conservative
    /// direction. Never smaller than `1e-12`.
    fn geo_slack() -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("integer representable in scalar type")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::one() / Self::two()
    }

    #[inline]
    fn pi() -> Self {
        Self::lit(std::f64::consts::PI)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    #[inline]
    fn geo_slack() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    #[inline]
    fn geo_slack() -> Self {
        // 64 ulps at 1.0
        64.0 * f32::EPSILON
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_floor() {
        assert_eq!(<f64 as Scalar>::geo_slack(), 1e-12);
        assert!(<f32 as Scalar>::geo_slack() > 1e-6);
    }

    #[test]
    fn literals() {
        assert_eq!(<f32 as Scalar>::lit(0.5), 0.5f32);
        assert_eq!(<f64 as Scalar>::two(), 2.0);
        assert_eq!(<f64 as Scalar>::half(), 0.5);
    }
}
