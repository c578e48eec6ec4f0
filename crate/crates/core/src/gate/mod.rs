//! Geometry gate: structural features, a 133-parameter MLP choosing between the hyperbolic and
//! Euclidean scores, the blended score and classifier diagnostics.

mod diagnostics;
mod features;
mod mlp;

pub use diagnostics::{blend, gate_diagnostics, Confusion, EntropyBands, GateDiagnostics};
pub use features::{
    curvature_norm, extract_features, FeatureMask, FeatureVector, CURVATURE_MAX, CURVATURE_MIN, FEATURE_COUNT,
    FEATURE_NAMES,
};
pub use mlp::{
    gate_forward, loss_and_gradient, train_gate, GateExample, GateModel, TrainConfig, TrainingMetadata, DIMS, HIDDEN,
    PARAMETER_COUNT,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, GraphSnapshot, NodeAttrs, Route};
    use crate::rng;
    use crate::score::RouteScore;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn tree_chain_features() {
        let g = GraphSnapshot::new(
            0.0,
            (0..4).map(|i| NodeAttrs::new(i, 0.1, 1.0)).collect(),
            vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0), Edge::new(2, 3, 1.0)],
        )
        .unwrap();
        let r = Route::from_ids(0, &[0, 1, 2, 3]).unwrap();
        let f = extract_features(&g, &r, 1.0).unwrap();
        assert_eq!(f.values[0], 0.0);
        assert_eq!(f.values[3], 0.0);
        assert_eq!(f.values[5], 1.0);
        assert_eq!(f.values[7], 0.0);
    }

    #[test]
    fn curvature_endpoints() {
        assert_eq!(curvature_norm(0.10), 0.0);
        assert_eq!(curvature_norm(4.50), 1.0);
        let g = GraphSnapshot::new(0.0, vec![NodeAttrs::new(0, 0.0, 1.0)], vec![]).unwrap();
        let r = Route::from_ids(0, &[0]).unwrap();
        assert_eq!(extract_features(&g, &r, 0.10).unwrap().values[8], 0.0);
        assert_eq!(extract_features(&g, &r, 4.50).unwrap().values[8], 1.0);
        let over = extract_features(&g, &r, 9.0).unwrap();
        assert_eq!(over.values[8], 1.0);
        assert_ne!(over.clamped & (1 << 8), 0);
    }

    #[test]
    fn directed_triangle_features() {
        let g = GraphSnapshot::new(
            0.0,
            vec![NodeAttrs::new(0, 0.2, 1.0), NodeAttrs::new(1, 0.4, 1.0), NodeAttrs::new(2, 0.6, 1.0)],
            vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0), Edge::new(2, 0, 1.0)],
        )
        .unwrap();
        let r = Route::from_ids(0, &[0, 1, 2]).unwrap();
        let f = extract_features(&g, &r, 1.0).unwrap();
        assert_eq!(f.values[1], 0.0);
        assert_eq!(f.values[2], 1.0);
        assert!((f.values[3] - 1.0 / 3.0).abs() < 1e-15);
        assert!((f.values[4] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn forward_limits() {
        let mut m = GateModel::default();
        assert_eq!(m.forward(&FeatureVector::default()).unwrap(), 0.5);
        m.b2 = 20.0;
        assert!(m.forward(&FeatureVector::new([0.3; 9])).unwrap() > 0.999);
        m.b1[3] = f64::NAN;
        assert_eq!(m.forward(&FeatureVector::default()), Err(crate::Error::CorruptModel));
    }

    #[test]
    fn forward_matches_hand_computation() {
        let mut m = GateModel::default();
        m.w1[0] = [0.5, -0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        m.w1[1] = [-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        m.b1[0] = 0.125;
        m.b1[1] = 0.25;
        m.w2[0] = 2.0;
        m.w2[1] = -4.0;
        m.b2 = -0.5;
        let x = [0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.25];
        // h0 = relu(0.25 - 0.125 + 0.25 + 0.125) = 0.5, h1 = relu(-0.5 + 0.25) = 0
        let z: f64 = 2.0 * 0.5 - 0.5;
        let want = 1.0 / (1.0 + libm::exp(-z));
        let got = m.forward(&FeatureVector::new(x)).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn parameter_count_and_flat_roundtrip() {
        let m = GateModel::he_init(3);
        assert_eq!(m.parameter_count(), 133);
        assert_eq!(PARAMETER_COUNT, 133);
        assert_eq!(DIMS, [9, 12, 1]);
        let mut back = GateModel::default();
        back.set_flat(&m.to_flat()).unwrap();
        assert_eq!(back.to_flat(), m.to_flat());
        assert!(back.set_flat(&[0.0; 5]).is_err());
    }

    fn random_rows(seed: u64, n: usize) -> Vec<([f64; 9], f64)> {
        let mut r = rng::rng(seed);
        (0..n)
            .map(|_| {
                let mut x = [0.0; 9];
                x.iter_mut().for_each(|v| *v = r.random::<f64>());
                (x, if r.random_bool(0.5) { 1.0 } else { 0.0 })
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut m = GateModel::he_init(11);
        m.b1.iter_mut().enumerate().for_each(|(i, b)| *b = 0.05 * i as f64);
        m.b2 = 0.1;
        let rows = random_rows(5, 10);
        let (_, grad) = loss_and_gradient(&m, &rows);
        let base = m.to_flat();
        let mut worst: f64 = 0.0;
        for k in 0..PARAMETER_COUNT {
            let h = 1e-6;
            let mut p = base.clone();
            p[k] += h;
            let mut mp = m.clone();
            mp.set_flat(&p).unwrap();
            p[k] -= 2.0 * h;
            let mut mm = m.clone();
            mm.set_flat(&p).unwrap();
            let fd = (loss_and_gradient(&mp, &rows).0 - loss_and_gradient(&mm, &rows).0) / (2.0 * h);
            let rel = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-8);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    fn clusters(seed: u64, n: usize) -> Vec<GateExample> {
        let mut r = rng::rng(seed);
        (0..n)
            .map(|i| {
                let c = if i % 2 == 0 { 0.2 } else { 0.8 };
                let mut x = [0.0; 9];
                x.iter_mut().for_each(|v| *v = c + r.random_range(-0.1..0.1));
                let (mh, me) = if i % 2 == 0 { (0.0, 1.0) } else { (1.0, 0.0) };
                GateExample::from_margins(FeatureVector::new(x), mh, me)
            })
            .collect()
    }

    #[test]
    fn separable_clusters_are_learned() {
        let data = clusters(1, 200);
        let m = train_gate(&data, &TrainConfig { epochs: 200, ..Default::default() }).unwrap();
        let preds: Vec<(f64, bool)> = data.iter().map(|e| (m.forward(&e.features).unwrap(), e.label)).collect();
        let d = gate_diagnostics(&preds);
        assert!(d.accuracy >= 0.95, "accuracy {}", d.accuracy);
        let curve = &m.metadata.loss_curve;
        assert_eq!(curve.len(), 201);
        assert!(curve.iter().copied().fold(f64::INFINITY, f64::min) <= curve[0]);
        assert!(!m.metadata.single_class);
    }

    #[test]
    fn training_is_reproducible_and_flags_single_class() {
        let data = clusters(2, 40);
        let cfg = TrainConfig { epochs: 20, seed: 9, ..Default::default() };
        assert_eq!(train_gate(&data, &cfg).unwrap(), train_gate(&data, &cfg).unwrap());
        let ones: Vec<GateExample> = data.iter().filter(|e| e.label).copied().collect();
        assert!(train_gate(&ones, &cfg).unwrap().metadata.single_class);
        assert!(train_gate(&[], &cfg).is_err());
    }

    #[test]
    fn label_rule_includes_ties() {
        let f = FeatureVector::default();
        assert!(GateExample::from_margins(f, 0.3, 0.3).label);
        assert!(GateExample::from_margins(f, 0.4, 0.3).label);
        assert!(!GateExample::from_margins(f, 0.2, 0.3).label);
    }

    #[test]
    fn blend_examples() {
        let h = RouteScore::new(0.4);
        let e = RouteScore::new(-0.2);
        assert_eq!(blend(1.0, &h, &e).value, 0.4);
        assert_eq!(blend(0.0, &h, &e).value, -0.2);
        assert!((blend(0.5, &h, &e).value - 0.1).abs() < 1e-15);
        assert_eq!(blend(0.5, &h, &e).term("pi"), Some(0.5));
    }

    #[test]
    fn diagnostics_examples() {
        let perfect = [(0.9, true), (0.8, true), (0.2, false), (0.1, false)];
        let d = gate_diagnostics(&perfect);
        assert_eq!(d.auc, Some(1.0));
        assert!(d.ece >= 0.0);

        let flat = [(0.5, true), (0.5, false), (0.5, true), (0.5, false)];
        let d = gate_diagnostics(&flat);
        assert_eq!(d.accuracy, 0.5);
        assert_eq!(d.auc, Some(0.5));
        assert_eq!(d.confusion, Confusion { tp: 2, tn: 0, fp: 2, fn_: 0 });
        assert_eq!(d.entropy_bands.high, 1.0);

        let c = Confusion { tp: 182, tn: 34, fp: 30, fn_: 4 };
        assert_eq!(c.total(), 250);
        assert!((c.accuracy() - 0.864).abs() < 1e-15);

        assert_eq!(gate_diagnostics(&[(0.7, true), (0.6, true)]).auc, None);
    }

    #[test]
    fn ece_closed_form() {
        // all predictions at 0.95 in the top bin; 3 of 4 correct → |0.95 − 0.75|
        let d = gate_diagnostics(&[(0.95, true), (0.95, true), (0.95, true), (0.95, false)]);
        assert!((d.ece - 0.2).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn blend_monotone_in_pi(h in -3.0..3.0f64, e in -3.0..3.0f64, a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let rh = RouteScore::new(h);
            let re = RouteScore::new(e);
            let (vlo, vhi) = (blend(lo, &rh, &re).value, blend(hi, &rh, &re).value);
            if h > e {
                prop_assert!(vhi >= vlo - 1e-12);
            } else if h < e {
                prop_assert!(vhi <= vlo + 1e-12);
            } else {
                prop_assert!((vhi - vlo).abs() < 1e-12);
            }
        }

        #[test]
        fn masked_input_equals_zeroed_column(seed in 0u64..1000, col in 0usize..9, x in prop::array::uniform9(0.0..=1.0f64)) {
            let m = GateModel::he_init(seed);
            let mask = FeatureMask::ALL.without(col);
            let masked = m.forward(&FeatureVector::new(x).masked(mask)).unwrap();
            let mut zeroed = m.clone();
            zeroed.w1.iter_mut().for_each(|row| row[col] = 0.0);
            let direct = zeroed.forward(&FeatureVector::new(x)).unwrap();
            prop_assert_eq!(masked.to_bits(), direct.to_bits());
        }
    }
}
