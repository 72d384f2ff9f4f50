use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use agitrack_core::labels::LabelClass;
use agitrack_core::wrist::FeatureMatrix;

use crate::error::{Error, Result};

/// How pre-agitation windows enter a binary dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreAgitationLabel {
    #[default]
    Exclude,
    Negative,
    Positive,
}

impl std::str::FromStr for PreAgitationLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exclude" => Ok(PreAgitationLabel::Exclude),
            "negative" => Ok(PreAgitationLabel::Negative),
            "positive" => Ok(PreAgitationLabel::Positive),
            other => Err(Error::Validation(format!("unknown pre-agitation label {other:?}"))),
        }
    }
}

/// Dense row-major design matrix with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Vec<String>,
    /// `n × d`, row-major.
    pub x: Vec<f64>,
    pub y: Vec<u8>,
    pub groups: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(schema: Vec<String>, rows: Vec<Vec<f64>>, y: Vec<u8>) -> Result<Self> {
        let d = schema.len();
        if rows.len() != y.len() {
            return Err(Error::validation(format!("{} rows but {} labels", rows.len(), y.len())));
        }
        let mut x = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::LengthMismatch { expected: d, got: r.len() });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("row {i} has a non-finite value")));
            }
            x.extend_from_slice(r);
        }
        if y.iter().any(|&v| v > 1) {
            return Err(Error::validation("labels must be 0 or 1"));
        }
        Ok(Dataset { schema, x, y, groups: None })
    }

    pub fn with_groups(mut self, groups: Vec<String>) -> Result<Self> {
        if groups.len() != self.len() {
            return Err(Error::validation("one group id per row required"));
        }
        self.groups = Some(groups);
        Ok(self)
    }

    /// Binary dataset from labeled, usable feature-matrix rows. Normal is 0
    /// and agitation 1; pre-agitation rows follow `pre`.
    pub fn from_feature_matrix(m: &FeatureMatrix, pre: PreAgitationLabel, group: Option<&str>) -> Result<Self> {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for r in &m.rows {
            if r.valid_fraction < agitrack_core::wrist::MIN_VALID_FRACTION {
                continue;
            }
            let label = match r.label {
                Some(LabelClass::Normal) => 0,
                Some(LabelClass::Agitation) => 1,
                Some(LabelClass::PreAgitation) => match pre {
                    PreAgitationLabel::Exclude => continue,
                    PreAgitationLabel::Negative => 0,
                    PreAgitationLabel::Positive => 1,
                },
                _ => continue,
            };
            rows.push(r.values.clone());
            y.push(label);
        }
        let n = rows.len();
        let ds = Dataset::new(m.names.clone(), rows, y)?;
        match group {
            Some(g) => ds.with_groups(vec![g.to_string(); n]),
            None => Ok(ds),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.schema.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.x[i * d..(i + 1) * d]
    }

    pub fn positives(&self) -> usize {
        self.y.iter().filter(|&&v| v == 1).count()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(idx.len() * self.dim());
        for &i in idx {
            x.extend_from_slice(self.row(i));
        }
        Dataset {
            schema: self.schema.clone(),
            x,
            y: idx.iter().map(|&i| self.y[i]).collect(),
            groups: self.groups.as_ref().map(|g| idx.iter().map(|&i| g[i].clone()).collect()),
        }
    }

    /// Rows of `other` appended; schemas must agree.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.schema != other.schema {
            return Err(Error::Schema("datasets have different feature schemas".into()));
        }
        let groups = match (&self.groups, &other.groups) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
            (None, None) => None,
            _ => return Err(Error::validation("cannot mix grouped and ungrouped datasets")),
        };
        Ok(Dataset {
            schema: self.schema.clone(),
            x: self.x.iter().chain(&other.x).copied().collect(),
            y: self.y.iter().chain(&other.y).copied().collect(),
            groups,
        })
    }

    /// Distinct group ids in first-seen order.
    pub fn group_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for g in self.groups.iter().flatten() {
            if !ids.contains(g) {
                ids.push(g.clone());
            }
        }
        ids
    }

    pub fn group(&self, id: &str) -> Dataset {
        let idx: Vec<usize> = match &self.groups {
            Some(g) => (0..self.len()).filter(|&i| g[i] == id).collect(),
            None => Vec::new(),
        };
        self.subset(&idx)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::validation("dataset has no rows"));
        }
        if self.dim() == 0 {
            return Err(Error::validation("dataset has no features"));
        }
        if self.x.len() != self.len() * self.dim() {
            return Err(Error::validation("matrix size does not match n × d"));
        }
        Ok(())
    }
}

/// Seeded uniform permutation; the first `floor(n · train_fraction)` rows
/// train, the rest test. Both halves keep at least one row.
pub fn split_train_test(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::validation(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let n = ds.len();
    if n < 2 {
        return Err(Error::validation("need at least two rows to split"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = ((n as f64 * train_fraction).floor() as usize).clamp(1, n - 1);
    Ok((ds.subset(&idx[..k]), ds.subset(&idx[k..])))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitProtocol {
    /// Pool all groups, then split.
    #[default]
    AfterPooling,
    /// Split each group, then pool the halves.
    BeforePooling,
}

pub fn split_pooled(ds: &Dataset, train_fraction: f64, seed: u64, protocol: SplitProtocol) -> Result<(Dataset, Dataset)> {
    match protocol {
        SplitProtocol::AfterPooling => split_train_test(ds, train_fraction, seed),
        SplitProtocol::BeforePooling => {
            let ids = ds.group_ids();
            if ids.is_empty() {
                return split_train_test(ds, train_fraction, seed);
            }
            let mut halves: Option<(Dataset, Dataset)> = None;
            for id in ids {
                let (tr, te) = split_train_test(&ds.group(&id), train_fraction, seed)?;
                halves = Some(match halves {
                    None => (tr, te),
                    Some((a, b)) => (a.concat(&tr)?, b.concat(&te)?),
                });
            }
            Ok(halves.expect("at least one group"))
        }
    }
}

/// Duplicates random minority rows (with replacement) until both classes
/// have equal counts.
pub fn oversample_minority(ds: &Dataset, seed: u64) -> Result<Dataset> {
    let pos: Vec<usize> = (0..ds.len()).filter(|&i| ds.y[i] == 1).collect();
    let neg: Vec<usize> = (0..ds.len()).filter(|&i| ds.y[i] == 0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::validation("oversampling needs both classes"));
    }
    let (minority, deficit) = if pos.len() < neg.len() { (&pos, neg.len() - pos.len()) } else { (&neg, pos.len() - neg.len()) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.extend((0..deficit).map(|_| minority[rng.random_range(0..minority.len())]));
    Ok(ds.subset(&idx))
}
