use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cell::{accumulate_grad, loss_only, Workspace};
use crate::model::{CellKind, RecurrentModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GradCheckDims {
    pub d: usize,
    pub h: usize,
    pub l: usize,
}

impl Default for GradCheckDims {
    fn default() -> Self {
        GradCheckDims { d: 3, h: 4, l: 5 }
    }
}

const EPS: f64 = 1e-5;

/// Largest relative error between the analytic gradient and central finite
/// differences over every parameter, for a random model and two random
/// sequences (one per label). Error is |a − n| / max(|a|, |n|, 1e-6).
pub fn grad_check(kind: CellKind, dims: GradCheckDims, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = RecurrentModel::init(kind, dims.d.max(1), dims.h.max(1), seed)
        .expect("positive dims");
    // randomize everything, biases included, so no gradient is trivially zero
    for p in &mut model.params {
        *p = rng.random_range(-1.0..1.0);
    }
    let seqs: Vec<(Vec<f64>, f64)> = (0..2)
        .map(|k| {
            let x = (0..dims.l * model.input_dim).map(|_| rng.random_range(-1.5..1.5)).collect();
            (x, k as f64)
        })
        .collect();

    let mut ws = Workspace::default();
    let mut grad = vec![0.0; model.params.len()];
    for (x, y) in &seqs {
        accumulate_grad(&model, x, *y, &mut ws, &mut grad);
    }
    let total = |m: &RecurrentModel, ws: &mut Workspace| -> f64 {
        seqs.iter().map(|(x, y)| loss_only(m, x, *y, ws)).sum()
    };

    let mut worst = 0.0f64;
    for i in 0..model.params.len() {
        let orig = model.params[i];
        model.params[i] = orig + EPS;
        let up = total(&model, &mut ws);
        model.params[i] = orig - EPS;
        let down = total(&model, &mut ws);
        model.params[i] = orig;
        let numeric = (up - down) / (2.0 * EPS);
        let a = grad[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}
