//! Posting-hour histogram view.

use crate::corpus::UserDocument;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureView};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub const HOURS: usize = 24;
pub const VIEW_NAME: &str = "timestamp";

/// l2-normalized count of tweets per UTC hour; no tweets gives zeros.
pub fn timestamp_feature<T: Scalar>(hours: &[u8]) -> Result<[T; HOURS]> {
    let mut counts = [0u64; HOURS];
    for &h in hours {
        *counts.get_mut(h as usize).ok_or(Error::HourOutOfRange(h))? += 1;
    }
    let norm = (counts.iter().map(|&c| (c * c) as f64).sum::<f64>()).sqrt();
    let mut out = [T::zero(); HOURS];
    if norm > 0.0 {
        for (o, &c) in out.iter_mut().zip(&counts) {
            *o = T::lit(c as f64 / norm);
        }
    }
    Ok(out)
}

pub fn timestamp_view<T: Scalar>(docs: &[UserDocument]) -> Result<FeatureView<T>> {
    let mut m = Matrix::zeros(docs.len(), HOURS);
    for (i, d) in docs.iter().enumerate() {
        m.row_mut(i).copy_from_slice(&timestamp_feature::<T>(&d.hours)?);
    }
    Ok(FeatureView {
        name: VIEW_NAME.into(),
        matrix: FeatureMatrix::Dense(m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_hour() {
        let v = timestamp_feature::<f64>(&[13, 13, 13, 13]).unwrap();
        for (i, &x) in v.iter().enumerate() {
            assert_eq!(x, if i == 13 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn two_hours() {
        let v = timestamp_feature::<f64>(&[0, 12]).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((v[0] - r).abs() < 1e-15 && (v[12] - r).abs() < 1e-15);
        assert_eq!(v.iter().filter(|&&x| x != 0.0).count(), 2);
    }

    #[test]
    fn empty_and_invalid() {
        assert_eq!(timestamp_feature::<f32>(&[]).unwrap(), [0.0; 24]);
        assert!(matches!(timestamp_feature::<f32>(&[3, 24]), Err(Error::HourOutOfRange(24))));
    }

    proptest! {
        #[test]
        fn norm_is_zero_or_one(hours in proptest::collection::vec(0u8..24, 0..60)) {
            let v = timestamp_feature::<f64>(&hours).unwrap();
            let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let ok = if hours.is_empty() { n == 0.0 } else { (n - 1.0).abs() < 1e-12 };
            prop_assert!(ok);
            prop_assert!(v.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn order_and_scale_invariant(hours in proptest::collection::vec(0u8..24, 1..40), c in 1usize..5, seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let base = timestamp_feature::<f64>(&hours).unwrap();
            let mut shuffled = hours.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(timestamp_feature::<f64>(&shuffled).unwrap(), base);
            let scaled: Vec<u8> = hours.iter().flat_map(|&h| std::iter::repeat_n(h, c)).collect();
            let s = timestamp_feature::<f64>(&scaled).unwrap();
            for (a, b) in s.iter().zip(&base) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
