//! Binary classification metrics and inverse-frequency class weights.

use crate::error::{MaskError, Result};
use crate::scalar::Scalar;

/// Confusion-matrix counts for a binary task (positive = class 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ConfusionCounts { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Ground-truth positives (`tp + fn`).
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    /// Ground-truth negatives (`tn + fp`).
    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    pub fn scaled(&self, k: u64) -> Self {
        ConfusionCounts::new(self.tp * k, self.fp * k, self.tn * k, self.fn_ * k)
    }
}

fn parse_label(raw: &str) -> Result<bool> {
    match raw.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(MaskError::UnknownLabel(other.to_string())),
    }
}

/// Tally paired labels, `true` meaning positive.
pub fn confusion_from_pairs(truth: &[bool], pred: &[bool]) -> Result<ConfusionCounts> {
    if truth.len() != pred.len() {
        return Err(MaskError::LengthMismatch(truth.len(), pred.len()));
    }
    let mut c = ConfusionCounts::default();
    for (&t, &p) in truth.iter().zip(pred) {
        match (t, p) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Like [`confusion_from_pairs`] for textual `0`/`1` labels.
pub fn confusion_from_labels<S: AsRef<str>>(truth: &[S], pred: &[S]) -> Result<ConfusionCounts> {
    if truth.len() != pred.len() {
        return Err(MaskError::LengthMismatch(truth.len(), pred.len()));
    }
    let t = truth
        .iter()
        .map(|s| parse_label(s.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let p = pred
        .iter()
        .map(|s| parse_label(s.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    confusion_from_pairs(&t, &p)
}

/// Accuracy, precision, recall and F1; `None` where a denominator vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport<T> {
    pub accuracy: Option<T>,
    pub precision: Option<T>,
    pub recall: Option<T>,
    pub f1: Option<T>,
}

fn ratio_or_none<T: Scalar>(num: u64, den: u64) -> Option<T> {
    (den > 0).then(|| T::ratio(num, den))
}

pub fn metrics<T: Scalar>(c: &ConfusionCounts) -> MetricsReport<T> {
    let precision = ratio_or_none::<T>(c.tp, c.tp + c.fp);
    let recall = ratio_or_none::<T>(c.tp, c.tp + c.fn_);
    let f1 = match (&precision, &recall) {
        (Some(p), Some(r)) => {
            let sum = p.clone() + r.clone();
            if sum.is_zero() {
                None
            } else {
                Some(T::from_count(2) * p.clone() * r.clone() / sum)
            }
        }
        _ => None,
    };
    MetricsReport {
        accuracy: ratio_or_none(c.tp + c.tn, c.total()),
        precision,
        recall,
        f1,
    }
}

/// Percentage with one decimal, rounded half-up (`0.87719...` → `"87.7"`).
pub fn format_percent<T: Scalar>(value: &T) -> String {
    let tenths = (value.clone() * T::from_count(1000)).round_half_up();
    format!("{}.{}", tenths / 10, tenths % 10)
}

/// Percentage string, or `undefined`.
pub fn format_metric<T: Scalar>(value: &Option<T>) -> String {
    value.as_ref().map_or_else(|| "undefined".to_string(), format_percent)
}

impl<T: Scalar> MetricsReport<T> {
    /// `accuracy,precision,recall,f1` as one-decimal percentages.
    pub fn table_row(&self) -> String {
        [&self.accuracy, &self.precision, &self.recall, &self.f1]
            .iter()
            .map(|v| format_metric(v))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Loss weights `w0 = (n0 + n1) / n0`, `w1 = (n0 + n1) / n1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights<T> {
    pub n0: u64,
    pub n1: u64,
    pub w0: T,
    pub w1: T,
}

pub fn class_weights<T: Scalar>(n0: u64, n1: u64) -> Result<ClassWeights<T>> {
    if n0 == 0 || n1 == 0 {
        return Err(MaskError::ZeroCount);
    }
    Ok(ClassWeights {
        n0,
        n1,
        w0: T::ratio(n0 + n1, n0),
        w1: T::ratio(n0 + n1, n1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn confusion_examples() {
        let neg = vec![false; 5];
        assert_eq!(
            confusion_from_pairs(&neg, &neg).unwrap(),
            ConfusionCounts::new(0, 0, 5, 0)
        );
        assert_eq!(
            confusion_from_pairs(&[true, false], &[false, true]).unwrap(),
            ConfusionCounts::new(0, 1, 0, 1)
        );
        assert_eq!(confusion_from_pairs(&[true], &[]), Err(MaskError::LengthMismatch(1, 0)));
        assert_eq!(
            confusion_from_labels(&["1", "2"], &["0", "1"]),
            Err(MaskError::UnknownLabel("2".into()))
        );
    }

    #[test]
    fn fixture_split_composition() {
        let mut truth = Vec::new();
        let mut pred = Vec::new();
        for (t, p, n) in [
            (true, true, 25),
            (false, true, 6),
            (false, false, 146),
            (true, false, 1),
        ] {
            truth.extend(std::iter::repeat_n(t, n));
            pred.extend(std::iter::repeat_n(p, n));
        }
        let c = confusion_from_pairs(&truth, &pred).unwrap();
        assert_eq!(c, ConfusionCounts::new(25, 6, 146, 1));
        assert_eq!((c.total(), c.positives(), c.negatives()), (178, 26, 152));
    }

    #[test]
    fn fixture_metrics() {
        let c = ConfusionCounts::new(25, 6, 146, 1);
        let exact: MetricsReport<BigRational> = metrics(&c);
        assert_eq!(exact.precision, Some(q(25, 31)));
        assert_eq!(exact.recall, Some(q(25, 26)));
        assert_eq!(exact.f1, Some(q(50, 57)));
        assert_eq!(exact.accuracy, Some(q(171, 178)));
        assert_eq!(exact.table_row(), "96.1,80.6,96.2,87.7");
        assert_eq!(metrics::<f64>(&c).table_row(), "96.1,80.6,96.2,87.7");
    }

    #[test]
    fn degenerate_metrics() {
        let r: MetricsReport<f64> = metrics(&ConfusionCounts::new(0, 0, 0, 3));
        assert_eq!(r.recall, Some(0.0));
        assert_eq!(r.precision, None);
        assert_eq!(r.f1, None);
        assert_eq!(r.table_row(), "0.0,undefined,0.0,undefined");
        let zero: MetricsReport<f64> = metrics(&ConfusionCounts::default());
        assert_eq!(zero.accuracy, None);
        let both_zero: MetricsReport<f64> = metrics(&ConfusionCounts::new(0, 2, 1, 3));
        assert_eq!(
            (both_zero.precision, both_zero.recall, both_zero.f1),
            (Some(0.0), Some(0.0), None)
        );
    }

    #[test]
    fn f1_fixed_point() {
        let r: MetricsReport<BigRational> = metrics(&ConfusionCounts::new(6, 2, 10, 2));
        assert_eq!(r.precision, r.recall);
        assert_eq!(r.f1, r.precision);
    }

    #[test]
    fn percent_formatting() {
        assert_eq!(format_percent(&q(1, 1)), "100.0");
        assert_eq!(format_percent(&q(0, 1)), "0.0");
        assert_eq!(format_percent(&q(1, 2000)), "0.1");
        assert_eq!(format_percent(&0.0004_f64), "0.0");
    }

    #[test]
    fn weights_examples() {
        let w: ClassWeights<BigRational> = class_weights(1258, 166).unwrap();
        assert_eq!((w.w0.clone(), w.w1.clone()), (q(1424, 1258), q(1424, 166)));
        let f: ClassWeights<f64> = class_weights(1258, 166).unwrap();
        assert!((f.w0 - 1.1320).abs() < 1e-4 && (f.w1 - 8.5783).abs() < 1e-4);
        let b: ClassWeights<BigRational> = class_weights(7, 7).unwrap();
        assert_eq!((b.w0, b.w1), (q(2, 1), q(2, 1)));
        let x: ClassWeights<BigRational> = class_weights(1, 1423).unwrap();
        assert_eq!(x.w0, q(1424, 1));
        assert_eq!(x.w0.clone() * q(1, 1), x.w1.clone() * q(1423, 1));
        assert_eq!(class_weights::<f64>(0, 3), Err(MaskError::ZeroCount));
    }

    proptest! {
        #[test]
        fn f1_is_harmonic_mean(tp in 0u64..500, fp in 0u64..500, tn in 0u64..500, fn_ in 0u64..500) {
            let r: MetricsReport<BigRational> = metrics(&ConfusionCounts::new(tp, fp, tn, fn_));
            if let (Some(p), Some(rc)) = (r.precision.clone(), r.recall.clone()) {
                if tp > 0 {
                    let two = q(2, 1);
                    let harmonic = two.clone() / (q(1, 1) / p + q(1, 1) / rc);
                    prop_assert_eq!(r.f1.clone().unwrap(), harmonic);
                }
            }
        }

        #[test]
        fn metrics_scale_free(tp in 0u64..200, fp in 0u64..200, tn in 0u64..200, fn_ in 0u64..200, k in 1u64..20) {
            let c = ConfusionCounts::new(tp, fp, tn, fn_);
            prop_assert_eq!(metrics::<BigRational>(&c), metrics::<BigRational>(&c.scaled(k)));
        }

        #[test]
        fn weight_balance(n0 in 1u64..100_000, n1 in 1u64..100_000) {
            let w: ClassWeights<BigRational> = class_weights(n0, n1).unwrap();
            let lhs = w.w0 * BigRational::from_integer(n0.into());
            let rhs = w.w1 * BigRational::from_integer(n1.into());
            prop_assert_eq!(lhs.clone(), rhs);
            prop_assert_eq!(lhs, BigRational::from_integer((n0 + n1).into()));
        }

        #[test]
        fn pairs_round_trip(tp in 0usize..40, fp in 0usize..40, tn in 0usize..40, fn_ in 0usize..40, seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut pairs: Vec<(bool, bool)> = std::iter::repeat_n((true, true), tp)
                .chain(std::iter::repeat_n((false, true), fp))
                .chain(std::iter::repeat_n((false, false), tn))
                .chain(std::iter::repeat_n((true, false), fn_))
                .collect();
            pairs.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (t, p): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
            prop_assert_eq!(
                confusion_from_pairs(&t, &p).unwrap(),
                ConfusionCounts::new(tp as u64, fp as u64, tn as u64, fn_ as u64)
            );
        }
    }
}
