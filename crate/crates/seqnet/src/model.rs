use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cell::{self, Workspace};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CellKind {
    Lstm,
    Gru,
}

impl CellKind {
    /// Gate blocks stacked in W, U and b. LSTM order is i, f, g, o; GRU is r, z, n.
    pub fn gates(self) -> usize {
        match self {
            CellKind::Lstm => 4,
            CellKind::Gru => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        }
    }
}

impl std::fmt::Display for CellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CellKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lstm" => Ok(CellKind::Lstm),
            "gru" => Ok(CellKind::Gru),
            other => Err(Error::validation(format!("unknown cell kind {other:?}"))),
        }
    }
}

/// Per-feature affine normalization fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    pub fn identity(d: usize) -> Self {
        Normalization { mean: vec![0.0; d], std: vec![1.0; d] }
    }

    /// Fit over every time step of every sequence. Sequences are row-major L×d.
    pub fn fit<'a>(d: usize, seqs: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut n = 0usize;
        let mut sum = vec![0.0; d];
        let mut all: Vec<&[f64]> = Vec::new();
        for s in seqs {
            for row in s.chunks_exact(d) {
                for (acc, v) in sum.iter_mut().zip(row) {
                    *acc += v;
                }
                n += 1;
            }
            all.push(s);
        }
        if n == 0 {
            return Normalization::identity(d);
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let mut ss = vec![0.0; d];
        for s in &all {
            for row in s.chunks_exact(d) {
                for k in 0..d {
                    let e = row[k] - mean[k];
                    ss[k] += e * e;
                }
            }
        }
        let std = ss
            .iter()
            .map(|v| {
                let sd = (v / n as f64).sqrt();
                if sd > 1e-12 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Normalization { mean, std }
    }

    pub fn apply(&self, seq: &[f64], out: &mut Vec<f64>) {
        let d = self.mean.len();
        out.clear();
        out.reserve(seq.len());
        for row in seq.chunks_exact(d) {
            for k in 0..d {
                out.push((row[k] - self.mean[k]) / self.std[k]);
            }
        }
    }
}

/// Single recurrent cell plus a sigmoid readout of the final hidden state.
///
/// All trainable values live in one flat vector laid out as
/// `[W (G·h × d) | U (G·h × h) | b (G·h) | w_out (h) | b_out]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentModel {
    pub kind: CellKind,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub params: Vec<f64>,
    pub norm: Normalization,
    pub seed: u64,
    pub feature_names: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub d: usize,
    pub h: usize,
    pub g: usize,
}

impl Layout {
    pub fn w(&self) -> std::ops::Range<usize> {
        0..self.g * self.h * self.d
    }
    pub fn u(&self) -> std::ops::Range<usize> {
        let s = self.w().end;
        s..s + self.g * self.h * self.h
    }
    pub fn b(&self) -> std::ops::Range<usize> {
        let s = self.u().end;
        s..s + self.g * self.h
    }
    pub fn w_out(&self) -> std::ops::Range<usize> {
        let s = self.b().end;
        s..s + self.h
    }
    pub fn b_out(&self) -> usize {
        self.w_out().end
    }
    pub fn total(&self) -> usize {
        self.b_out() + 1
    }
}

impl RecurrentModel {
    /// Fresh model: gate weights uniform in ±√(6/(d+h)), biases zero except
    /// the LSTM forget gate at +1, output weights uniform in ±√(6/(h+1)).
    pub fn init(kind: CellKind, input_dim: usize, hidden_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(Error::validation("input_dim and hidden_dim must be positive"));
        }
        let lay = Layout { d: input_dim, h: hidden_dim, g: kind.gates() };
        let mut params = vec![0.0; lay.total()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        for p in &mut params[lay.w().start..lay.u().end] {
            *p = rng.random_range(-a..a);
        }
        if kind == CellKind::Lstm {
            let b = lay.b();
            for p in &mut params[b.start + hidden_dim..b.start + 2 * hidden_dim] {
                *p = 1.0;
            }
        }
        let ao = (6.0 / (hidden_dim + 1) as f64).sqrt();
        for p in &mut params[lay.w_out()] {
            *p = rng.random_range(-ao..ao);
        }
        Ok(RecurrentModel {
            kind,
            input_dim,
            hidden_dim,
            params,
            norm: Normalization::identity(input_dim),
            seed,
            feature_names: Vec::new(),
        })
    }

    pub(crate) fn layout(&self) -> Layout {
        Layout { d: self.input_dim, h: self.hidden_dim, g: self.kind.gates() }
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn w_out_mut(&mut self) -> &mut [f64] {
        let r = self.layout().w_out();
        &mut self.params[r]
    }

    pub fn b_out_mut(&mut self) -> &mut f64 {
        let i = self.layout().b_out();
        &mut self.params[i]
    }

    pub fn zero_output_layer(&mut self) {
        self.w_out_mut().iter_mut().for_each(|w| *w = 0.0);
        *self.b_out_mut() = 0.0;
    }

    fn check_seq(&self, seq: &[f64]) -> Result<()> {
        if seq.len() % self.input_dim != 0 {
            return Err(Error::DimMismatch {
                expected: self.input_dim,
                got: seq.len() % self.input_dim,
            });
        }
        if seq.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("sequence contains non-finite values"));
        }
        Ok(())
    }

    /// Probability of the positive class for a row-major L×d sequence.
    pub fn forward(&self, seq: &[f64]) -> Result<f64> {
        let mut ws = Workspace::default();
        self.forward_with(seq, &mut ws)
    }

    /// Same as [`forward`](Self::forward) with a caller-owned scratch buffer.
    pub fn forward_with(&self, seq: &[f64], ws: &mut Workspace) -> Result<f64> {
        self.check_seq(seq)?;
        let mut x = std::mem::take(&mut ws.norm_buf);
        self.norm.apply(seq, &mut x);
        let p = cell::forward_normalized(self, &x, ws);
        ws.norm_buf = x;
        Ok(p)
    }

    /// Sequence given as one slice per time step.
    pub fn forward_rows(&self, rows: &[Vec<f64>]) -> Result<f64> {
        for r in rows {
            if r.len() != self.input_dim {
                return Err(Error::DimMismatch { expected: self.input_dim, got: r.len() });
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        self.forward(&flat)
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.len() != self.layout().total() {
            return Err(Error::validation(format!(
                "parameter vector has {} values, dims require {}",
                self.params.len(),
                self.layout().total()
            )));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::validation("non-finite parameter"));
        }
        if self.norm.mean.len() != self.input_dim || self.norm.std.len() != self.input_dim {
            return Err(Error::validation("normalization length does not match input_dim"));
        }
        if self.norm.std.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::validation("normalization std must be positive"));
        }
        if !self.feature_names.is_empty() && self.feature_names.len() != self.input_dim {
            return Err(Error::validation("feature_names length does not match input_dim"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let lay = self.layout();
        let r9 = |s: &[f64]| s.iter().map(|v| round_sig9(*v)).collect::<Vec<_>>();
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            kind: self.kind,
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
            seed: self.seed,
            feature_names: self.feature_names.clone(),
            norm_mean: r9(&self.norm.mean),
            norm_std: r9(&self.norm.std),
            w: r9(&self.params[lay.w()]),
            u: r9(&self.params[lay.u()]),
            b: r9(&self.params[lay.b()]),
            w_out: r9(&self.params[lay.w_out()]),
            b_out: round_sig9(self.params[lay.b_out()]),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text)?;
        if f.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::validation(format!(
                "unsupported model format version {}",
                f.format_version
            )));
        }
        let mut params = f.w;
        params.extend(f.u);
        params.extend(f.b);
        params.extend(f.w_out);
        params.push(f.b_out);
        let m = RecurrentModel {
            kind: f.kind,
            input_dim: f.input_dim,
            hidden_dim: f.hidden_dim,
            params,
            norm: Normalization { mean: f.norm_mean, std: f.norm_std },
            seed: f.seed,
            feature_names: f.feature_names,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    kind: CellKind,
    input_dim: usize,
    hidden_dim: usize,
    seed: u64,
    #[serde(default)]
    feature_names: Vec<String>,
    norm_mean: Vec<f64>,
    norm_std: Vec<f64>,
    w: Vec<f64>,
    u: Vec<f64>,
    b: Vec<f64>,
    w_out: Vec<f64>,
    b_out: f64,
}

fn round_sig9(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.8e}").parse().unwrap_or(v)
}
