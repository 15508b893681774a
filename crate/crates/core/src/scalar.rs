//! Value types the game-tree search can run over.

use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{FromPrimitive, Num};

/// A field-like number: `f32`/`f64` for speed, `Ratio<i64>` for exact
/// values.
pub trait Scalar: Num + Neg<Output = Self> + FromPrimitive + Clone + PartialOrd + Debug + Send + Sync {
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("small count is representable")
    }

    /// Arithmetic mean of a non-empty list.
    fn mean(values: impl IntoIterator<Item = Self>) -> Self {
        let mut n = 0usize;
        let sum = values.into_iter().fold(Self::zero(), |acc, v| {
            n += 1;
            acc + v
        });
        sum / Self::from_count(n)
    }
}

impl<T> Scalar for T where T: Num + Neg<Output = T> + FromPrimitive + Clone + PartialOrd + Debug + Send + Sync {}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn mean_is_exact_for_rationals() {
        let m = Ratio::<i64>::mean([Ratio::new(1, 3), Ratio::new(1, 6), Ratio::from_integer(0)]);
        assert_eq!(m, Ratio::new(1, 6));
        assert!((f64::mean([1.0, 2.0]) - 1.5).abs() < 1e-12);
    }
}
