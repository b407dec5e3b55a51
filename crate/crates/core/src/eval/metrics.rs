use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Multiclass classification report.
///
/// `confusion[t][p]` counts nodes of true class `t` predicted as `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: Vec<Vec<usize>>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricReport {
    pub fn compute(pred: &[usize], truth: &[usize], k: usize) -> Result<Self> {
        if pred.is_empty() {
            return Err(Error::data("metrics over an empty input"));
        }
        if pred.len() != truth.len() {
            return Err(Error::data(format!(
                "prediction length {} differs from label length {}",
                pred.len(),
                truth.len()
            )));
        }
        let mut confusion = vec![vec![0usize; k]; k];
        for (&p, &t) in pred.iter().zip(truth) {
            if p >= k || t >= k {
                return Err(Error::Shape {
                    op: "metrics (class id vs class count)",
                    left: (p, t),
                    right: (k, k),
                });
            }
            confusion[t][p] += 1;
        }
        let per_class: Vec<ClassMetrics> = (0..k)
            .map(|c| {
                let tp = confusion[c][c];
                let support: usize = confusion[c].iter().sum();
                let predicted: usize = confusion.iter().map(|row| row[c]).sum();
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                let f1 = if precision + recall > 0.0 {
                    2.0 * precision * recall / (precision + recall)
                } else {
                    0.0
                };
                ClassMetrics {
                    precision,
                    recall,
                    f1,
                    support,
                }
            })
            .collect();
        let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / k as f64;
        let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
        let micro_f1 = ratio(correct, pred.len());
        Ok(MetricReport {
            macro_f1,
            micro_f1,
            per_class,
            confusion,
        })
    }
}

/// Unweighted mean of per-class F1 over all `k` classes. A class that is
/// neither predicted nor present scores 0.
pub fn macro_f1(pred: &[usize], truth: &[usize], k: usize) -> Result<f64> {
    Ok(MetricReport::compute(pred, truth, k)?.macro_f1)
}

/// Micro-averaged F1, which equals accuracy for single-label multiclass data.
pub fn micro_f1(pred: &[usize], truth: &[usize], k: usize) -> Result<f64> {
    Ok(MetricReport::compute(pred, truth, k)?.micro_f1)
}

/// Pairwise ROC AUC: the fraction of (positive, negative) pairs ranked
/// correctly, ties counting one half. Brute-force pair counting.
pub fn auc_binary(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::data("scores and labels differ in length"));
    }
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| !l).map(|(&s, _)| s).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::data("AUC needs both positive and negative samples"));
    }
    // Counted in half-units to stay exact.
    let mut halves: u64 = 0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                halves += 2;
            } else if p == n {
                halves += 1;
            }
        }
    }
    Ok(halves as f64 / (2 * pos.len() * neg.len()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        assert_eq!(macro_f1(&[0, 1, 2], &[0, 1, 2], 3).unwrap(), 1.0);
    }

    #[test]
    fn half_right() {
        let v = macro_f1(&[0, 1, 0, 1], &[0, 0, 1, 1], 2).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_class_predicted() {
        let v = macro_f1(&[0, 0, 0, 0], &[0, 0, 1, 1], 2).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn absent_class_scores_zero() {
        let v = macro_f1(&[0, 1], &[0, 1], 3).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn confusion_rows_are_supports() {
        let r = MetricReport::compute(&[0, 2, 1, 1, 0], &[0, 1, 1, 2, 2], 3).unwrap();
        for (c, row) in r.confusion.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), r.per_class[c].support);
        }
        assert!((r.micro_f1 - 0.4).abs() < 1e-15);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(macro_f1(&[], &[], 2).is_err());
    }

    #[test]
    fn auc_cases() {
        assert_eq!(auc_binary(&[0.9, 0.8, 0.1, 0.2], &[true, true, false, false]).unwrap(), 1.0);
        assert_eq!(auc_binary(&[0.3; 4], &[true, false, true, false]).unwrap(), 0.5);
        assert!(auc_binary(&[0.1, 0.2], &[true, true]).is_err());
    }
}
