use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(self, 0)
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { value } => Some(*value),
            _ => None,
        })
    }

    pub fn split_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SplitMode {
    /// One uniform threshold per candidate feature.
    Random,
    /// Best midpoint threshold per candidate feature.
    Exhaustive,
}

/// Count-weighted Gini impurity `n · gini`.
fn weighted_gini(n: usize, pos: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (n, p) = (n as f64, pos as f64);
    2.0 * p * (n - p) / n
}

pub(crate) struct ClassifierBuilder<'a, R: Rng> {
    pub ds: &'a Dataset,
    pub mode: SplitMode,
    pub max_features: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub rng: &'a mut R,
    pub importance: Vec<f64>,
    nodes: Vec<Node>,
}

impl<'a, R: Rng> ClassifierBuilder<'a, R> {
    pub fn new(ds: &'a Dataset, mode: SplitMode, max_features: usize, max_depth: Option<usize>, min_samples_split: usize, rng: &'a mut R) -> Self {
        ClassifierBuilder { ds, mode, max_features, max_depth, min_samples_split, rng, importance: vec![0.0; ds.dim()], nodes: Vec::new() }
    }

    /// Grows a tree over `idx` (repeats allowed, as in bootstrap samples).
    pub fn build(mut self, idx: Vec<usize>) -> (Tree, Vec<f64>) {
        self.grow(idx, 0);
        (Tree { nodes: self.nodes }, self.importance)
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let ds = self.ds;
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| ds.y[i] == 1).count();
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { value: pos as f64 / n.max(1) as f64 });
        let stop = pos == 0 || pos == n || n < self.min_samples_split || self.max_depth.is_some_and(|m| depth >= m);
        if stop {
            return me;
        }
        let Some((feature, threshold, gain)) = self.choose_split(&idx, pos) else {
            return me;
        };
        self.importance[feature] += gain;
        let (left, right): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| ds.row(i)[feature] <= threshold);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[me] = Node::Split { feature, threshold, left: l, right: r };
        me
    }

    fn choose_split(&mut self, idx: &[usize], pos: usize) -> Option<(usize, f64, f64)> {
        let ds = self.ds;
        let d = ds.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for &i in idx {
            for (f, &v) in ds.row(i).iter().enumerate() {
                lo[f] = lo[f].min(v);
                hi[f] = hi[f].max(v);
            }
        }
        let usable: Vec<usize> = (0..d).filter(|&f| hi[f] > lo[f]).collect();
        if usable.is_empty() {
            return None;
        }
        let k = self.max_features.clamp(1, usable.len());
        let picks: Vec<usize> = sample(self.rng, usable.len(), k).into_iter().map(|j| usable[j]).collect();
        let parent = weighted_gini(idx.len(), pos);
        let mut best: Option<(usize, f64, f64)> = None;
        for f in picks {
            let candidate = match self.mode {
                SplitMode::Random => {
                    let mut t = self.rng.random_range(lo[f]..hi[f]);
                    if t >= hi[f] {
                        t = lo[f];
                    }
                    let (mut nl, mut pl) = (0, 0);
                    for &i in idx {
                        if ds.row(i)[f] <= t {
                            nl += 1;
                            pl += ds.y[i] as usize;
                        }
                    }
                    let gain = parent - weighted_gini(nl, pl) - weighted_gini(idx.len() - nl, pos - pl);
                    Some((t, gain))
                }
                SplitMode::Exhaustive => best_threshold(ds, idx, f, pos, parent),
            };
            if let Some((t, gain)) = candidate {
                if best.is_none_or(|b| gain > b.2) {
                    best = Some((f, t, gain));
                }
            }
        }
        best
    }
}

fn sorted_by_feature(ds: &Dataset, idx: &[usize], f: usize) -> Vec<(f64, usize)> {
    let mut v: Vec<(f64, usize)> = idx.iter().map(|&i| (ds.row(i)[f], i)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

/// Best Gini split of feature `f`, scanning midpoints between distinct values.
fn best_threshold(ds: &Dataset, idx: &[usize], f: usize, pos: usize, parent: f64) -> Option<(f64, f64)> {
    let v = sorted_by_feature(ds, idx, f);
    let n = v.len();
    let (mut nl, mut pl) = (0usize, 0usize);
    let mut best: Option<(f64, f64)> = None;
    for k in 0..n - 1 {
        nl += 1;
        pl += ds.y[v[k].1] as usize;
        if v[k].0 == v[k + 1].0 {
            continue;
        }
        let gain = parent - weighted_gini(nl, pl) - weighted_gini(n - nl, pos - pl);
        if best.is_none_or(|b| gain > b.1) {
            best = Some((midpoint(v[k].0, v[k + 1].0), gain));
        }
    }
    best
}

/// Second-order regression tree for boosting on logistic loss. Leaves hold
/// `shrinkage · G / (H + l2)`.
pub(crate) struct BoostBuilder<'a> {
    pub ds: &'a Dataset,
    pub grad: &'a [f64],
    pub hess: &'a [f64],
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub l2: f64,
    pub shrinkage: f64,
    pub importance: Vec<f64>,
    nodes: Vec<Node>,
}

impl<'a> BoostBuilder<'a> {
    pub fn new(ds: &'a Dataset, grad: &'a [f64], hess: &'a [f64], max_depth: usize, min_samples_split: usize, l2: f64, shrinkage: f64) -> Self {
        BoostBuilder { ds, grad, hess, max_depth, min_samples_split, l2, shrinkage, importance: vec![0.0; ds.dim()], nodes: Vec::new() }
    }

    pub fn build(mut self, idx: Vec<usize>) -> (Tree, Vec<f64>) {
        self.grow(idx, 0);
        (Tree { nodes: self.nodes }, self.importance)
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.l2)
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let g: f64 = idx.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = idx.iter().map(|&i| self.hess[i]).sum();
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { value: self.shrinkage * g / (h + self.l2) });
        if depth >= self.max_depth || idx.len() < self.min_samples_split {
            return me;
        }
        let parent = self.score(g, h);
        let mut best: Option<(usize, f64, f64)> = None;
        for f in 0..self.ds.dim() {
            let v = sorted_by_feature(self.ds, &idx, f);
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..v.len() - 1 {
                gl += self.grad[v[k].1];
                hl += self.hess[v[k].1];
                if v[k].0 == v[k + 1].0 {
                    continue;
                }
                let gain = self.score(gl, hl) + self.score(g - gl, h - hl) - parent;
                if gain > 1e-12 && best.is_none_or(|b| gain > b.2) {
                    best = Some((f, midpoint(v[k].0, v[k + 1].0), gain));
                }
            }
        }
        let Some((feature, threshold, gain)) = best else {
            return me;
        };
        self.importance[feature] += gain / 2.0;
        let ds = self.ds;
        let (left, right): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| ds.row(i)[feature] <= threshold);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[me] = Node::Split { feature, threshold, left: l, right: r };
        me
    }
}
