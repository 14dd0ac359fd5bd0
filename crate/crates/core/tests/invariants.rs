use approx::assert_abs_diff_eq;
use multihntf::tensor::{cp_reconstruct, khatri_rao_except};
use multihntf::{DenseTensor, FactorSet};
use ndarray::{concatenate, Array2, Axis};
use proptest::prelude::*;

fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..5, 2..5)
}

fn tensor_strategy() -> impl Strategy<Value = DenseTensor> {
    shape_strategy().prop_flat_map(|shape| {
        let n: usize = shape.iter().product();
        prop::collection::vec(0.0f64..10.0, n)
            .prop_map(move |v| DenseTensor::new(shape.clone(), v).unwrap())
    })
}

fn factors_strategy(rank: std::ops::Range<usize>) -> impl Strategy<Value = FactorSet> {
    (shape_strategy(), rank).prop_flat_map(|(shape, r)| {
        shape
            .iter()
            .map(|&n| {
                prop::collection::vec(0.0f64..2.0, n * r)
                    .prop_map(move |v| Array2::from_shape_vec((n, r), v).unwrap())
            })
            .collect::<Vec<_>>()
            .prop_map(|fs| FactorSet::new(fs).unwrap())
    })
}

proptest! {
    #[test]
    fn unfold_fold_round_trip(t in tensor_strategy()) {
        for mode in 0..t.order() {
            let m = t.unfold(mode).unwrap();
            prop_assert_eq!(m.nrows(), t.shape()[mode]);
            prop_assert_eq!(m.len(), t.len());
            prop_assert_eq!(&DenseTensor::fold(&m, mode, t.shape()).unwrap(), &t);
        }
    }

    #[test]
    fn cp_unfolding_matches_khatri_rao(f in factors_strategy(1..4)) {
        let t = cp_reconstruct(&f);
        for mode in 0..f.order() {
            let lhs = t.unfold(mode).unwrap();
            let rhs = f.factor(mode).dot(&khatri_rao_except(f.factors(), mode).unwrap().t());
            prop_assert_eq!(lhs.dim(), rhs.dim());
            for (x, y) in lhs.iter().zip(&rhs) {
                assert_abs_diff_eq!(*x, *y, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn cp_is_additive_over_components(
        f in factors_strategy(1..4),
        seed in prop::collection::vec(0.0f64..2.0, 16),
    ) {
        // append one extra column per mode and compare against the sum of the parts
        let extra: Vec<Array2<f64>> = f
            .factors()
            .iter()
            .map(|x| Array2::from_shape_fn((x.nrows(), 1), |(i, _)| seed[i % seed.len()]))
            .collect();
        let joined: Vec<Array2<f64>> = f
            .factors()
            .iter()
            .zip(&extra)
            .map(|(x, e)| concatenate(Axis(1), &[x.view(), e.view()]).unwrap())
            .collect();
        let whole = cp_reconstruct(&FactorSet::new(joined).unwrap());
        let a = cp_reconstruct(&f);
        let b = cp_reconstruct(&FactorSet::new(extra).unwrap());
        for ((w, x), y) in whole.values().iter().zip(a.values()).zip(b.values()) {
            assert_abs_diff_eq!(*w, x + y, epsilon = 1e-10);
        }
    }

    #[test]
    fn cp_scales_linearly_in_each_factor(f in factors_strategy(1..4), c in 0.0f64..3.0, mode in 0usize..4) {
        let mode = mode % f.order();
        let mut scaled = f.factors().to_vec();
        scaled[mode] *= c;
        let lhs = cp_reconstruct(&FactorSet::new(scaled).unwrap());
        let rhs = cp_reconstruct(&f);
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            assert_abs_diff_eq!(*x, c * y, epsilon = 1e-10);
        }
    }
}
