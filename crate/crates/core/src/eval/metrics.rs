use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mask::ForegroundMask;

/// Pixel counts of a prediction against ground truth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn precision(&self) -> f64 {
        precision(self)
    }

    pub fn recall(&self) -> f64 {
        recall(self)
    }

    pub fn f1(&self) -> f64 {
        f1(self)
    }
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self::new(self.tp + o.tp, self.fp + o.fp, self.tn + o.tn, self.fn_ + o.fn_)
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

pub fn confusion_counts(pred: &ForegroundMask, gt: &ForegroundMask) -> Result<ConfusionCounts> {
    let (w, h) = gt.dims();
    pred.check_dims(w, h)?;
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.bits().iter().zip(gt.bits()) {
        match (p, g) {
            (1, 1) => c.tp += 1,
            (1, _) => c.fp += 1,
            (_, 1) => c.fn_ += 1,
            _ => c.tn += 1,
        }
    }
    Ok(c)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// TP / (TP + FP), or 0 when nothing was predicted.
pub fn precision(c: &ConfusionCounts) -> f64 {
    ratio(c.tp, c.tp + c.fp)
}

/// TP / (TP + FN), or 0 when there is no foreground.
pub fn recall(c: &ConfusionCounts) -> f64 {
    ratio(c.tp, c.tp + c.fn_)
}

/// Harmonic mean of precision and recall, or 0 when both are 0.
///
/// Evaluated as 2TP / (2TP + FP + FN), which is the same quantity with a
/// single rounding.
pub fn f1(c: &ConfusionCounts) -> f64 {
    ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_pixel_case() {
        let pred = ForegroundMask::from_bits(2, 2, vec![1, 1, 0, 0]).unwrap();
        let gt = ForegroundMask::from_bits(2, 2, vec![1, 0, 1, 0]).unwrap();
        assert_eq!(confusion_counts(&pred, &gt).unwrap(), ConfusionCounts::new(1, 1, 1, 1));
    }

    #[test]
    fn extremes() {
        let all = ForegroundMask::from_bits(3, 1, vec![1; 3]).unwrap();
        let none = ForegroundMask::from_bits(3, 1, vec![0; 3]).unwrap();
        assert_eq!(confusion_counts(&all, &none).unwrap(), ConfusionCounts::new(0, 3, 0, 0));
        let c = ConfusionCounts::default();
        assert_eq!((c.precision(), c.recall(), c.f1()), (0.0, 0.0, 0.0));
        assert!(confusion_counts(&all, &ForegroundMask::new(1, 3)).is_err());
    }

    #[test]
    fn eight_two_two() {
        let c = ConfusionCounts::new(8, 2, 0, 2);
        assert_eq!(c.precision(), 0.8);
        assert_eq!(c.recall(), 0.8);
        assert_eq!(c.f1(), 0.8);
    }

    proptest! {
        #[test]
        fn f1_is_harmonic_mean(tp in 0u64..1000, fp in 0u64..1000, fn_ in 0u64..1000) {
            let c = ConfusionCounts::new(tp, fp, 0, fn_);
            let (p, r) = (c.precision(), c.recall());
            let h = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            prop_assert!((c.f1() - h).abs() < 1e-12);
        }

        #[test]
        fn f1_bounded_and_one_only_when_exact(tp in 0u64..1000, fp in 0u64..1000, fn_ in 0u64..1000) {
            let c = ConfusionCounts::new(tp, fp, 0, fn_);
            let f = c.f1();
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert_eq!(f == 1.0, fp == 0 && fn_ == 0 && tp > 0);
        }

        #[test]
        fn self_comparison_is_exact(bits in proptest::collection::vec(0u8..2, 1..64)) {
            let n = bits.len();
            let m = ForegroundMask::from_bits(n, 1, bits).unwrap();
            let c = confusion_counts(&m, &m).unwrap();
            prop_assert_eq!((c.fp, c.fn_), (0, 0));
            prop_assert_eq!(c.total(), n as u64);
        }
    }
}
