use serde::{Deserialize, Serialize};

use super::sequences::{FeatureMask, FeatureSequence};
use crate::error::{Error, Result};

/// Outcome of per-class correlation pruning. Matrices are indexed like
/// `names`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub names: Vec<String>,
    pub kept: Vec<String>,
    pub removed: Vec<String>,
    pub corr_pos: Vec<Vec<f64>>,
    pub corr_neg: Vec<Vec<f64>>,
    pub threshold: f64,
}

impl PruneReport {
    pub fn kept_mask(&self) -> Result<FeatureMask> {
        FeatureMask::from_names(&self.kept)
    }
}

/// Pearson correlation matrix of the given columns. Zero-variance columns
/// correlate 0 with everything else; the diagonal is 1.
pub fn pearson_matrix(columns: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = columns.len();
    let centered: Vec<Option<Vec<f64>>> = columns
        .iter()
        .map(|c| {
            if c.is_empty() || c.iter().all(|v| *v == c[0]) {
                return None;
            }
            let m = c.iter().sum::<f64>() / c.len() as f64;
            Some(c.iter().map(|v| v - m).collect())
        })
        .collect();
    let norms: Vec<f64> = centered.iter().map(|c| c.as_ref().map_or(0.0, |c| c.iter().map(|v| v * v).sum::<f64>().sqrt())).collect();
    let mut r = vec![vec![0.0; d]; d];
    for i in 0..d {
        r[i][i] = 1.0;
        let Some(ci) = &centered[i] else { continue };
        for j in 0..i {
            let Some(cj) = &centered[j] else { continue };
            if norms[i] == 0.0 || norms[j] == 0.0 {
                continue;
            }
            let dot: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
            let v = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            r[i][j] = v;
            r[j][i] = v;
        }
    }
    r
}

fn columns(seqs: &[FeatureSequence], mask: &FeatureMask) -> Vec<Vec<f64>> {
    let mut cols = vec![Vec::new(); mask.len()];
    for s in seqs {
        for row in s.steps().iter().filter(|r| r.valid) {
            for (c, &i) in cols.iter_mut().zip(mask.indices()) {
                c.push(row.values[i]);
            }
        }
    }
    cols
}

/// Drops a feature when some earlier kept feature correlates with it above
/// `threshold` in absolute value in both classes. Features are scanned in
/// mask order.
pub fn prune_by_class_correlation(
    pos: &[FeatureSequence],
    neg: &[FeatureSequence],
    threshold: f64,
    mask: &FeatureMask,
) -> Result<PruneReport> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::validation(format!("threshold {threshold} outside (0, 1]")));
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::validation("both classes need at least one sequence"));
    }
    let corr_pos = pearson_matrix(&columns(pos, mask));
    let corr_neg = pearson_matrix(&columns(neg, mask));
    Ok(prune_with_matrices(mask.names(), corr_pos, corr_neg, threshold))
}

pub(crate) fn prune_with_matrices(names: Vec<String>, corr_pos: Vec<Vec<f64>>, corr_neg: Vec<Vec<f64>>, threshold: f64) -> PruneReport {
    let mut kept_idx: Vec<usize> = Vec::new();
    let mut removed = Vec::new();
    for f in 0..names.len() {
        let redundant = kept_idx.iter().any(|&g| corr_pos[f][g].abs() > threshold && corr_neg[f][g].abs() > threshold);
        if redundant {
            removed.push(names[f].clone());
        } else {
            kept_idx.push(f);
        }
    }
    let kept = kept_idx.iter().map(|&i| names[i].clone()).collect();
    PruneReport { names, kept, removed, corr_pos, corr_neg, threshold }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_known_values() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        let b = vec![2.0, 4.0, 6.0, 8.0];
        let c = vec![4.0, 3.0, 2.0, 1.0];
        let k = vec![5.0; 4];
        let r = pearson_matrix(&[a, b, c, k]);
        assert!((r[0][1] - 1.0).abs() < 1e-12);
        assert!((r[0][2] + 1.0).abs() < 1e-12);
        assert_eq!(r[0][3], 0.0);
        assert_eq!(r[3][3], 1.0);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(r[i][j], r[j][i]);
            }
        }
    }

    #[test]
    fn conjunction_rule() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let pos = vec![vec![1.0, 0.9, 0.95], vec![0.9, 1.0, 0.0], vec![0.95, 0.0, 1.0]];
        let neg = vec![vec![1.0, 0.1, 0.85], vec![0.1, 1.0, 0.0], vec![0.85, 0.0, 1.0]];
        let rep = prune_with_matrices(names, pos, neg, 0.8);
        assert_eq!(rep.kept, vec!["a", "b"]);
        assert_eq!(rep.removed, vec!["c"]);
    }
}
