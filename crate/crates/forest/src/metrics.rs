use serde::{Deserialize, Serialize};

/// Area under the ROC curve as the tie-aware rank statistic: the share of
/// (positive, negative) pairs ordered correctly, ties counting one half.
/// `None` unless both classes are present.
pub fn auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the Mann-Whitney U, kept integral.
    let mut u2: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut p, mut q) = (0u64, 0u64);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1 {
                p += 1;
            } else {
                q += 1;
            }
            j += 1;
        }
        u2 += p * (2 * neg_below + q);
        neg_below += q;
        i = j;
    }
    Some(u2 as f64 / (2 * n_pos * n_neg) as f64)
}

/// `[[tn, fp], [fn, tp]]` for predictions `score >= threshold`.
pub fn confusion(scores: &[f64], labels: &[u8], threshold: f64) -> [[u64; 2]; 2] {
    let mut c = [[0u64; 2]; 2];
    for (&s, &l) in scores.iter().zip(labels) {
        let pred = usize::from(s >= threshold);
        c[l as usize][pred] += 1;
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub threshold: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Absent for single-class test sets.
    pub auc: Option<f64>,
    pub confusion: [[u64; 2]; 2],
    pub per_feature_importance: Vec<f64>,
}

impl EvalReport {
    pub fn from_scores(scores: &[f64], labels: &[u8], threshold: f64, importance: Vec<f64>) -> Self {
        let c = confusion(scores, labels, threshold);
        let (tn, fp, fneg, tp) = (c[0][0] as f64, c[0][1] as f64, c[1][0] as f64, c[1][1] as f64);
        let n = scores.len();
        let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fneg);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        EvalReport {
            n,
            threshold,
            accuracy: ratio(tp + tn, n as f64),
            precision,
            recall,
            f1,
            auc: auc(scores, labels),
            confusion: c,
            per_feature_importance: importance,
        }
    }

    /// Feature names paired with importance, largest first.
    pub fn top_features<'a>(&self, schema: &'a [String], k: usize) -> Vec<(&'a str, f64)> {
        let mut v: Vec<(&str, f64)> = schema.iter().map(String::as_str).zip(self.per_feature_importance.iter().copied()).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1));
        v.truncate(k);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]), Some(1.0));
        assert_eq!(auc(&[0.5; 4], &[0, 1, 0, 1]), Some(0.5));
        assert_eq!(auc(&[0.9, 0.4, 0.6, 0.1], &[1, 1, 0, 0]), Some(0.75));
        assert_eq!(auc(&[0.9, 0.4], &[1, 1]), None);
    }

    #[test]
    fn report_arithmetic() {
        let r = EvalReport::from_scores(&[0.9, 0.8, 0.3, 0.6, 0.1], &[1, 1, 1, 0, 0], 0.5, vec![]);
        assert_eq!(r.confusion, [[1, 1], [1, 2]]);
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.accuracy, 0.6);
        let none = EvalReport::from_scores(&[0.1, 0.2], &[1, 0], 0.5, vec![]);
        assert_eq!((none.precision, none.recall, none.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn oracle_scores_are_perfect() {
        let y = [1u8, 0, 0, 1, 1, 0];
        let s: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let r = EvalReport::from_scores(&s, &y, 0.5, vec![]);
        assert_eq!((r.accuracy, r.auc, r.f1), (1.0, Some(1.0), 1.0));
    }
}
