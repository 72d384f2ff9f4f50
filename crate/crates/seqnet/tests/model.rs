mod common;

use agitrack_seqnet::{CellKind, Normalization, RecurrentModel};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_seq(rng: &mut ChaCha8Rng, l: usize, d: usize) -> Vec<f64> {
    (0..l * d).map(|_| rng.random_range(-3.0..3.0)).collect()
}

#[test]
fn zero_output_layer_gives_half() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for kind in [CellKind::Lstm, CellKind::Gru] {
        let mut m = RecurrentModel::init(kind, 4, 6, 2).unwrap();
        m.zero_output_layer();
        for l in [0, 1, 7, 40] {
            assert_eq!(m.forward(&random_seq(&mut rng, l, 4)).unwrap(), 0.5);
        }
    }
}

#[test]
fn empty_sequence_is_sigmoid_of_bias() {
    for kind in [CellKind::Lstm, CellKind::Gru] {
        let mut m = RecurrentModel::init(kind, 2, 3, 0).unwrap();
        *m.b_out_mut() = -1.3;
        let want = 1.0 / (1.0 + 1.3f64.exp());
        assert!((m.forward(&[]).unwrap() - want).abs() < 1e-15);
    }
}

/// Permuting input features and the matching columns of W leaves the output unchanged.
#[test]
fn feature_permutation_with_weight_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kind in [CellKind::Lstm, CellKind::Gru] {
        let (d, h) = (5, 4);
        let m = RecurrentModel::init(kind, d, h, 8).unwrap();
        let perm = [3, 0, 4, 1, 2];
        let mut pm = m.clone();
        let rows = kind.gates() * h;
        for r in 0..rows {
            for (new_col, &old_col) in perm.iter().enumerate() {
                pm.params[r * d + new_col] = m.params[r * d + old_col];
            }
        }
        for _ in 0..10 {
            let seq = random_seq(&mut rng, 9, d);
            let permuted: Vec<f64> = seq.chunks(d).flat_map(|row| perm.iter().map(|&j| row[j]).collect::<Vec<_>>()).collect();
            let a = m.forward(&seq).unwrap();
            let b = pm.forward(&permuted).unwrap();
            assert!((a - b).abs() < 1e-14, "{kind}: {a} vs {b}");
        }
    }
}

#[test]
fn forward_is_deterministic_and_checks_dims() {
    let m = RecurrentModel::init(CellKind::Gru, 3, 4, 1).unwrap();
    let seq = vec![0.1; 12];
    assert_eq!(m.forward(&seq).unwrap().to_bits(), m.forward(&seq).unwrap().to_bits());
    assert!(m.forward(&vec![0.1; 13]).is_err());
    assert!(m.forward_rows(&[vec![1.0, 2.0]]).is_err());
    assert_eq!(m.forward_rows(&vec![vec![0.1; 3]; 4]).unwrap(), m.forward(&seq).unwrap());
}

#[test]
fn json_round_trip_keeps_nine_digits() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for kind in [CellKind::Lstm, CellKind::Gru] {
        let mut m = RecurrentModel::init(kind, 3, 5, 6).unwrap();
        m.norm = Normalization { mean: vec![1.5, -2.0, 0.25], std: vec![0.5, 3.0, 1.0] };
        m.feature_names = vec!["a".into(), "b".into(), "c".into()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        m.save(&path).unwrap();
        let back = RecurrentModel::load(&path).unwrap();
        assert_eq!(back.kind, kind);
        assert_eq!(back.feature_names, m.feature_names);
        for (a, b) in m.params.iter().zip(&back.params) {
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-300), "{a} vs {b}");
        }
        let seq = random_seq(&mut rng, 6, 3);
        assert!((m.forward(&seq).unwrap() - back.forward(&seq).unwrap()).abs() < 1e-7);
        // saving the reloaded model is a fixed point
        assert_eq!(back.to_json().unwrap(), RecurrentModel::from_json(&back.to_json().unwrap()).unwrap().to_json().unwrap());
    }
}

#[test]
fn corrupted_model_file_is_rejected() {
    let m = RecurrentModel::init(CellKind::Lstm, 2, 2, 0).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
    v["w"].as_array_mut().unwrap().pop();
    assert!(RecurrentModel::from_json(&v.to_string()).is_err());
    let mut v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
    v["norm_std"][0] = serde_json::json!(0.0);
    assert!(RecurrentModel::from_json(&v.to_string()).is_err());
    let mut v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
    v["format_version"] = serde_json::json!(99);
    assert!(RecurrentModel::from_json(&v.to_string()).is_err());
}

proptest! {
    #[test]
    fn output_strictly_inside_unit_interval(
        seed in 0u64..1000,
        scale in 0.1f64..20.0,
        l in 0usize..30,
        gru in any::<bool>(),
    ) {
        let kind = if gru { CellKind::Gru } else { CellKind::Lstm };
        let mut m = RecurrentModel::init(kind, 3, 4, seed).unwrap();
        m.params.iter_mut().for_each(|p| *p *= scale);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 77);
        let p = m.forward(&random_seq(&mut rng, l, 3)).unwrap();
        prop_assert!(p > 0.0 && p < 1.0, "p = {}", p);
    }
}
