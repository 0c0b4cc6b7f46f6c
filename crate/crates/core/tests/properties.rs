use proptest::prelude::*;

use switchcode_core::dataset::gen_gaussian;
use switchcode_core::encoders::{
    active_set, loss_active, soft_threshold_encode, triangle_kmeans_encode, Activation, Layer, Model,
};
use switchcode_core::idx;
use switchcode_core::preprocess::{whiten_fit, WhitenMode};
use switchcode_core::viz::{hyperplanes, rescale_to_bytes, response_grid, GridMode};
use switchcode_core::{Dataset, Matrix};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0f64..2.0, rows * cols)
        .prop_map(move |v| Matrix::from_vec(rows, cols, v).unwrap())
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

/// (W, b, x) for a tied single-layer model of random width.
fn tied_instance() -> impl Strategy<Value = (Matrix, Vec<f64>, Vec<f64>)> {
    (1usize..6, 1usize..9).prop_flat_map(|(n, k)| (matrix(k, n), vector(k), vector(n)))
}

proptest! {
    #[test]
    fn active_set_identity((w, b, x) in tied_instance()) {
        let model = Model::tied_relu(w, b).unwrap();
        let restricted = loss_active(&model, &x).unwrap();
        let full = model.reconstruction_loss(&x).unwrap();
        prop_assert!((restricted - full).abs() < 1e-12);
    }

    #[test]
    fn active_set_matches_positive_code((w, b, x) in tied_instance()) {
        let model = Model::tied_relu(w, b).unwrap();
        let e = model.encode(&x).unwrap();
        let positive: Vec<usize> = e.h.iter().enumerate().filter(|(_, v)| **v > 0.0).map(|(j, _)| j).collect();
        prop_assert_eq!(&e.active_set, &positive);
        prop_assert_eq!(active_set(&model.layers()[0], &x).unwrap(), positive);
        prop_assert!(e.h.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn soft_threshold_is_shared_bias_relu((w, _b, x) in tied_instance(), lambda in 0.0f64..2.0) {
        let d = w.transpose();
        let k = w.rows();
        let model = Model::tied_relu(w, vec![-lambda; k]).unwrap();
        let soft = soft_threshold_encode(&d, lambda, &x).unwrap();
        let relu = model.encode(&x).unwrap().h;
        prop_assert_eq!(soft.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        relu.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn triangle_sign_rule((c, _b, x) in tied_instance()) {
        let h = triangle_kmeans_encode(&c, &x).unwrap();
        let d: Vec<f64> = c.row_iter().map(|r| r.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()).collect();
        let k = d.len() as f64;
        let mu = d[0] + d.iter().map(|v| v - d[0]).sum::<f64>() / k;
        for (hi, di) in h.iter().zip(&d) {
            prop_assert_eq!(*hi > 0.0, *di < mu);
            prop_assert!(*hi >= 0.0);
        }
    }

    #[test]
    fn relu_positive_homogeneity((w, _b, x) in tied_instance(), alpha in 0.01f64..50.0) {
        let k = w.rows();
        let model = Model::tied_relu(w, vec![0.0; k]).unwrap();
        let h = model.encode(&x).unwrap().h;
        let xs: Vec<f64> = x.iter().map(|v| alpha * v).collect();
        let hs = model.encode(&xs).unwrap().h;
        for (a, b) in h.iter().zip(&hs) {
            prop_assert!((alpha * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn sigmoid_codes_in_unit_interval((w, b, x) in tied_instance()) {
        let model = Model::tied(vec![Layer::new(w, b, Activation::Sigmoid).unwrap()]).unwrap();
        prop_assert!(model.encode(&x).unwrap().h.iter().all(|v| *v > 0.0 && *v < 1.0));
    }

    #[test]
    fn plane_anchor_lies_on_plane((w, b, _x) in tied_instance()) {
        let model = Model::tied_relu(w, b).unwrap();
        for plane in hyperplanes(&model).unwrap().planes {
            let p = plane.anchor();
            prop_assert!(plane.signed_value(&p).abs() < 1e-9);
        }
    }

    #[test]
    fn tile_rescale_scale_invariant(v in vector(12), e in -4i32..8) {
        let s = 2f64.powi(e);
        let scaled: Vec<f64> = v.iter().map(|x| s * x).collect();
        prop_assert_eq!(rescale_to_bytes(&v), rescale_to_bytes(&scaled));
    }

    #[test]
    fn grid_matches_direct_encoding(w in matrix(4, 2), b in vector(4)) {
        let model = Model::tied_relu(w, b).unwrap();
        let bounds = [(-2.0, 3.0), (-1.0, 1.5)];
        let sum = response_grid(&model, bounds, [9, 7], GridMode::Sum).unwrap();
        let per: Vec<_> = (0..4)
            .map(|j| response_grid(&model, bounds, [9, 7], GridMode::PerFeature(j)).unwrap())
            .collect();
        for iy in 0..7 {
            for ix in 0..9 {
                let direct: f64 = model.encode(&sum.point(ix, iy)).unwrap().h.iter().sum();
                prop_assert_eq!(sum.value(ix, iy).to_bits(), direct.to_bits());
                let from_parts: f64 = per.iter().map(|g| g.value(ix, iy)).sum();
                prop_assert_eq!(sum.value(ix, iy).to_bits(), from_parts.to_bits());
            }
        }
    }

    #[test]
    fn idx_u8_round_trip(pixels in prop::collection::vec(any::<u8>(), 1..5usize).prop_flat_map(|row| {
        let n = row.len();
        prop::collection::vec(prop::collection::vec(any::<u8>(), n), 1..4)
    })) {
        let n = pixels[0].len();
        let rows: Vec<Vec<f64>> = pixels.iter().map(|r| r.iter().map(|&p| f64::from(p) / 255.0).collect()).collect();
        let data = Dataset::new(Matrix::from_rows(&rows).unwrap(), switchcode_core::Source::Mnist, None).unwrap();
        let bytes = idx::encode_images(&data, 1, n).unwrap();
        prop_assert_eq!(idx::decode_images(&bytes).unwrap(), data);
    }

    #[test]
    fn whitening_inverts_under_both_modes(seed in any::<u64>(), zca in any::<bool>()) {
        let cov = Matrix::from_rows(&[[2.0, 0.6, 0.1], [0.6, 1.0, -0.3], [0.1, -0.3, 0.5]]).unwrap();
        let data = gen_gaussian(200, &[1.0, -2.0, 0.5], &cov, seed).unwrap();
        let mode = if zca { WhitenMode::Zca } else { WhitenMode::Pca };
        let t = whiten_fit(&data, 0.0, mode).unwrap();
        prop_assert!(t.rotation.orthonormality_error() < 1e-10);
        let back = t.invert(&t.apply(&data).unwrap()).unwrap();
        for (a, b) in back.samples().as_slice().iter().zip(data.samples().as_slice()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn generators_are_bit_deterministic() {
    let cov = Matrix::from_rows(&[[1.0, 0.2], [0.2, 0.5]]).unwrap();
    let a = gen_gaussian(500, &[0.0, 1.0], &cov, 77).unwrap();
    let b = gen_gaussian(500, &[0.0, 1.0], &cov, 77).unwrap();
    assert_eq!(a, b);
    let c = gen_gaussian(500, &[0.0, 1.0], &cov, 78).unwrap();
    assert_ne!(a, c);
}
