use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point element type used by the learner, post-processing and metrics.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Copy + Default + Debug + Display + Send + Sync + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal fits scalar")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Logistic function, evaluated in the numerically stable branch for each sign.
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_symmetric_and_half_at_zero() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert_eq!(sigmoid(0.0f32), 0.5);
        for &x in &[0.1, 1.0, 7.5, 40.0] {
            let s: f64 = sigmoid(x) + sigmoid(-x);
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert!(sigmoid(-800.0f64).is_finite());
        assert!(sigmoid(800.0f64) <= 1.0);
    }
}
