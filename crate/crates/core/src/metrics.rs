//! Classification metrics: confusion matrix, per-class precision, recall,
//! F1 and support, plus macro and support-weighted averages.

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("no predictions to score")]
    EmptySet,

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
}

/// `2PR / (P + R)`, defined as 0 when both precision and recall are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Per-class and aggregate scores over a labeled evaluation.
///
/// Confusion rows are true classes, columns predicted classes. Zero
/// denominators follow the usual convention: a class never predicted has
/// precision 0, a class never seen has recall 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub class_names: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
}

impl MetricsReport {
    /// Scores `(true label, predicted label)` pairs.
    pub fn from_pairs(
        pairs: &[(usize, usize)],
        class_names: Vec<String>,
    ) -> Result<Self, MetricsError> {
        let classes = class_names.len();
        if pairs.is_empty() || classes == 0 {
            return Err(MetricsError::EmptySet);
        }
        let mut confusion = vec![vec![0usize; classes]; classes];
        for &(truth, pred) in pairs {
            for label in [truth, pred] {
                if label >= classes {
                    return Err(MetricsError::LabelOutOfRange { label, classes });
                }
            }
            confusion[truth][pred] += 1;
        }
        Self::from_confusion(confusion, class_names)
    }

    /// Scores an already-accumulated confusion matrix.
    pub fn from_confusion(
        confusion: Vec<Vec<usize>>,
        class_names: Vec<String>,
    ) -> Result<Self, MetricsError> {
        let classes = class_names.len();
        if classes == 0 || confusion.len() != classes || confusion.iter().any(|r| r.len() != classes)
        {
            return Err(MetricsError::EmptySet);
        }
        let total: usize = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(MetricsError::EmptySet);
        }

        let mut per_class = Vec::with_capacity(classes);
        for c in 0..classes {
            let tp = confusion[c][c];
            let support: usize = confusion[c].iter().sum();
            let predicted: usize = confusion.iter().map(|row| row[c]).sum();
            let precision = if predicted == 0 {
                0.0
            } else {
                tp as f64 / predicted as f64
            };
            let recall = if support == 0 {
                0.0
            } else {
                tp as f64 / support as f64
            };
            per_class.push(ClassMetrics {
                precision,
                recall,
                f1: f1_score(precision, recall),
                support,
            });
        }

        let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
        let macro_f1 = per_class.iter().map(|m| m.f1).sum::<f64>() / classes as f64;
        let weighted_f1 = per_class
            .iter()
            .map(|m| m.f1 * m.support as f64)
            .sum::<f64>()
            / total as f64;

        Ok(Self {
            class_names,
            confusion,
            per_class,
            accuracy: correct as f64 / total as f64,
            macro_f1,
            weighted_f1,
        })
    }

    /// Plain-text table: one row per class with precision, recall,
    /// F1_score, and support, then the macro and weighted averages.
    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        let name_width = self
            .class_names
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(4)
            .max(4);
        out.push_str(&format!(
            "{:>4} {:<name_width$} {:>9} {:>7} {:>8} {:>8}\n",
            "", "name", "Precision", "Recall", "F1_score", "Support"
        ));
        for (i, (name, m)) in self.class_names.iter().zip(&self.per_class).enumerate() {
            out.push_str(&format!(
                "{:>4} {:<name_width$} {:>9.2} {:>7.2} {:>8.2} {:>8}\n",
                i, name, m.precision, m.recall, m.f1, m.support
            ));
        }
        let support: usize = self.per_class.iter().map(|m| m.support).sum();
        out.push_str(&format!(
            "\naccuracy    {:>7.4}\nmacro F1    {:>7.4}\nweighted F1 {:>7.4}  (support {})\n",
            self.accuracy, self.macro_f1, self.weighted_f1, support
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    fn round2(v: f64) -> f64 {
        (v * 100.0).round() / 100.0
    }

    #[test]
    fn f1_from_printed_precision_recall() {
        // 2 * 0.90 * 1.00 / 1.90 = 0.947..., i.e. 0.95 at two decimals.
        assert_eq!(round2(f1_score(0.90, 1.00)), 0.95);
        // 2 * 0.54 * 0.64 / 1.18 = 0.5857...
        assert!((f1_score(0.54, 0.64) - 0.586).abs() < 5e-4);
    }

    #[test]
    fn perfect_predictions_score_one_everywhere() {
        let pairs: Vec<(usize, usize)> = (0..3).flat_map(|c| vec![(c, c); 4]).collect();
        let report = MetricsReport::from_pairs(&pairs, names(3)).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.macro_f1, 1.0);
        assert_eq!(report.weighted_f1, 1.0);
        for (c, m) in report.per_class.iter().enumerate() {
            assert_eq!((m.precision, m.recall, m.f1, m.support), (1.0, 1.0, 1.0, 4));
            for (other, &count) in report.confusion[c].iter().enumerate() {
                assert_eq!(count, if other == c { 4 } else { 0 });
            }
        }
    }

    #[test]
    fn zero_division_conventions() {
        // Class 2 never appears and is never predicted: precision, recall,
        // and f1 are all zero rather than NaN.
        let pairs = [(0, 0), (0, 1), (1, 1)];
        let report = MetricsReport::from_pairs(&pairs, names(3)).unwrap();
        let m = &report.per_class[2];
        assert_eq!((m.precision, m.recall, m.f1, m.support), (0.0, 0.0, 0.0, 0));
        // Class 0 is never predicted... precision for a never-predicted class
        let pairs = [(0, 1), (1, 1)];
        let report = MetricsReport::from_pairs(&pairs, names(2)).unwrap();
        assert_eq!(report.per_class[0].precision, 0.0);
        assert_eq!(report.per_class[0].recall, 0.0);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(
            MetricsReport::from_pairs(&[], names(2)),
            Err(MetricsError::EmptySet)
        ));
        assert!(matches!(
            MetricsReport::from_pairs(&[(0, 5)], names(2)),
            Err(MetricsError::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn confusion_row_sums_equal_support() {
        let pairs = [(0, 1), (0, 0), (1, 1), (2, 0), (2, 2), (2, 2)];
        let report = MetricsReport::from_pairs(&pairs, names(3)).unwrap();
        for (row, m) in report.confusion.iter().zip(&report.per_class) {
            assert_eq!(row.iter().sum::<usize>(), m.support);
        }
    }

    #[test]
    fn text_table_lists_every_class_and_averages() {
        let pairs = [(0, 0), (1, 0), (1, 1)];
        let report = MetricsReport::from_pairs(&pairs, names(2)).unwrap();
        let table = report.to_text_table();
        assert!(table.contains("Precision"));
        assert!(table.contains("Support"));
        assert!(table.contains("macro F1"));
        assert!(table.contains("weighted F1"));
        assert_eq!(table.lines().filter(|l| l.starts_with("   ")).count() >= 2, true);
    }

    proptest! {
        /// Confusion-matrix metrics agree with a brute-force recount from
        /// the raw pairs.
        #[test]
        fn metrics_match_brute_force_recount(
            raw in proptest::collection::vec((0usize..5, 0usize..5), 1..60)
        ) {
            let report = MetricsReport::from_pairs(&raw, names(5)).unwrap();
            for c in 0..5 {
                let tp = raw.iter().filter(|&&(t, p)| t == c && p == c).count();
                let fp = raw.iter().filter(|&&(t, p)| t != c && p == c).count();
                let fn_ = raw.iter().filter(|&&(t, p)| t == c && p != c).count();
                let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
                let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
                let m = &report.per_class[c];
                prop_assert!((m.precision - precision).abs() < 1e-12);
                prop_assert!((m.recall - recall).abs() < 1e-12);
                prop_assert!((m.f1 - f1_score(precision, recall)).abs() < 1e-12);
                prop_assert_eq!(m.support, tp + fn_);
            }
            let macro_f1 = report.per_class.iter().map(|m| m.f1).sum::<f64>() / 5.0;
            prop_assert!((report.macro_f1 - macro_f1).abs() < 1e-12);
        }
    }
}
