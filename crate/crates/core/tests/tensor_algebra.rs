use nnta::{DenseTensor, Error, Matrix};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_tensor(shape: &[usize], rng: &mut StdRng) -> DenseTensor {
    DenseTensor::from_fn(shape, |_| rng.random_range(-1.0..1.0)).unwrap()
}

fn random_matrix(rows: usize, cols: usize, rng: &mut StdRng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Every 1-based multi-index of `shape` in row-major order.
fn indices(shape: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &n in shape {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (1..=n).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect();
    }
    out
}

/// Row-major linear index (0-based) of a 1-based index over `shape`.
fn linear(index: &[usize], shape: &[usize]) -> usize {
    index.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + (i - 1))
}

/// Mode-k unfolding straight from the permute-then-reshape definition.
fn unfold_oracle(x: &DenseTensor, k: usize) -> Matrix {
    let shape = x.shape();
    let rest: Vec<usize> = (0..shape.len()).filter(|&j| j != k - 1).collect();
    let rest_shape: Vec<usize> = rest.iter().map(|&j| shape[j]).collect();
    let cols: usize = rest_shape.iter().product();
    let mut m = Matrix::zeros(shape[k - 1], cols);
    for idx in indices(shape) {
        let rest_idx: Vec<usize> = rest.iter().map(|&j| idx[j]).collect();
        m.set(idx[k - 1] - 1, linear(&rest_idx, &rest_shape), x.element(&idx).unwrap());
    }
    m
}

fn index_encoded(shape: &[usize]) -> DenseTensor {
    DenseTensor::from_fn(shape, |idx| idx.iter().fold(0.0, |acc, &i| acc * 10.0 + i as f64)).unwrap()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

#[test]
fn unfold_matches_definition_on_index_encoded_cube() {
    let x = index_encoded(&[3, 4, 5]);
    let m = x.unfold(2).unwrap();
    assert_eq!(m.shape(), (4, 15));
    assert_eq!(m, unfold_oracle(&x, 2));
    // Row j holds X(·, j, ·) with the last mode running fastest.
    assert_eq!(m.row(1)[..6], [121., 122., 123., 124., 125., 221.]);
}

#[test]
fn unfold_of_matrix_shaped_tensors() {
    let x = DenseTensor::new(vec![2, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap();
    assert_eq!(x.unfold(1).unwrap().data(), x.data());
    let t = x.unfold(2).unwrap();
    assert_eq!(t.shape(), (3, 2));
    assert_eq!(t.data(), &[1., 4., 2., 5., 3., 6.]);
    let back = DenseTensor::fold(&Matrix::new(2, 3, x.data().to_vec()).unwrap(), 1, &[2, 3]).unwrap();
    assert_eq!(back, x);
}

#[test]
fn unfold_matches_definition_for_every_mode_up_to_four_modes() {
    let mut rng = StdRng::seed_from_u64(11);
    for shape in [vec![5], vec![2, 3], vec![3, 1, 4], vec![2, 3, 4, 5], vec![4, 4, 4, 4]] {
        let x = random_tensor(&shape, &mut rng);
        for k in 1..=shape.len() {
            assert_eq!(x.unfold(k).unwrap(), unfold_oracle(&x, k), "shape {shape:?}, mode {k}");
        }
    }
}

#[test]
fn fold_unfold_roundtrip_is_exact_for_all_shapes_up_to_four_fours() {
    let mut rng = StdRng::seed_from_u64(5);
    for d in 1..=4usize {
        for code in 0..4usize.pow(d as u32) {
            let shape: Vec<usize> = (0..d).map(|j| code / 4usize.pow(j as u32) % 4 + 1).collect();
            let x = random_tensor(&shape, &mut rng);
            for k in 1..=d {
                let back = DenseTensor::fold(&x.unfold(k).unwrap(), k, &shape).unwrap();
                assert_eq!(back, x, "shape {shape:?}, mode {k}");
            }
        }
    }
}

#[test]
fn unfold_and_fold_reject_bad_arguments() {
    let x = index_encoded(&[2, 3, 4]);
    assert!(matches!(x.unfold(0), Err(Error::ModeOutOfRange { mode: 0, order: 3 })));
    assert!(matches!(x.unfold(4), Err(Error::ModeOutOfRange { .. })));
    let m = x.unfold(2).unwrap();
    assert!(DenseTensor::fold(&m, 1, &[2, 3, 4]).is_err());
    assert!(DenseTensor::fold(&m, 2, &[2, 3, 5]).is_err());
}

#[test]
fn matricize_is_a_reshape() {
    let x = index_encoded(&[2, 3, 4]);
    let m1 = x.matricize(1).unwrap();
    assert_eq!(m1.shape(), (2, 12));
    assert_eq!(m1.data(), x.data());
    let m2 = x.matricize(2).unwrap();
    assert_eq!(m2.shape(), (6, 4));
    assert_eq!(m2.row(4), &[221., 222., 223., 224.]);
    assert_eq!(m2.row(5), &[231., 232., 233., 234.]);
    assert!(x.matricize(3).is_err());
}

#[test]
fn matricizations_of_rank_one_tensor_have_rank_one() {
    let x = DenseTensor::from_fn(&[3, 4, 5, 2], |i| {
        (1.0 + i[0] as f64) * (2.0 - 0.3 * i[1] as f64) * (0.5 + i[2] as f64).sqrt() * (i[3] as f64)
    })
    .unwrap();
    for k in 1..4 {
        let m = x.matricize(k).unwrap();
        let s = nalgebra::DMatrix::from_row_slice(m.rows(), m.cols(), m.data()).singular_values();
        let mut s: Vec<f64> = s.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        assert!(s[1] <= 1e-12 * s[0], "split {k}: {s:?}");
    }
}

/// `Σ_j U(i, j) X(…, j, …)` by direct summation.
fn mode_product_oracle(x: &DenseTensor, u: &Matrix, k: usize) -> DenseTensor {
    let mut shape = x.shape().to_vec();
    shape[k - 1] = u.rows();
    DenseTensor::from_fn(&shape, |idx| {
        (1..=x.shape()[k - 1])
            .map(|j| {
                let mut src = idx.to_vec();
                src[k - 1] = j;
                u.get(idx[k - 1] - 1, j - 1) * x.element(&src).unwrap()
            })
            .sum()
    })
    .unwrap()
}

#[test]
fn mode_product_matches_summation_oracle() {
    let mut rng = StdRng::seed_from_u64(3);
    let x = random_tensor(&[3, 4, 5], &mut rng);
    for k in 1..=3 {
        let u = random_matrix(2, x.shape()[k - 1], &mut rng);
        let got = x.mode_product(&u, k).unwrap();
        let want = mode_product_oracle(&x, &u, k);
        assert_eq!(got.shape(), want.shape());
        assert!(rel_diff(got.data(), want.data()) < 1e-14, "mode {k}");
    }
}

#[test]
fn mode_product_trivial_cases() {
    let mut rng = StdRng::seed_from_u64(4);
    let x = random_tensor(&[3, 4, 5], &mut rng);
    assert_eq!(x.mode_product(&Matrix::identity(4), 2).unwrap(), x);
    let z = x.mode_product(&Matrix::zeros(2, 4), 2).unwrap();
    assert_eq!(z.shape(), &[3, 2, 5]);
    assert!(z.data().iter().all(|&v| v == 0.0));
    assert!(matches!(
        x.mode_product(&Matrix::zeros(2, 3), 2),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn norms_of_simple_tensors() {
    let ones = DenseTensor::from_fn(&[2, 2, 2], |_| 1.0).unwrap();
    assert!((ones.frobenius_norm() - 8f64.sqrt()).abs() < 1e-15);
    assert_eq!(ones.chebyshev_norm(), 1.0);
    let zero = DenseTensor::zeros(&[3, 2]).unwrap();
    assert_eq!((zero.frobenius_norm(), zero.chebyshev_norm()), (0.0, 0.0));
    assert!(ones.frobenius_inner(&zero).is_err());
}

#[test]
fn negativity_stats_of_small_vector() {
    let x = DenseTensor::new(vec![2], vec![-1.0, 2.0]).unwrap();
    let s = x.negativity_stats();
    assert_eq!((s.frobenius, s.chebyshev, s.fraction), (1.0, 1.0, 0.5));
    assert_eq!(x.nonneg_project().data(), &[0.0, 2.0]);
}

#[test]
fn constructors_reject_invalid_data() {
    assert!(matches!(DenseTensor::new(vec![2, 0], vec![]), Err(Error::InvalidShape { .. })));
    assert!(DenseTensor::new(vec![], vec![]).is_err());
    assert!(DenseTensor::new(vec![2, 2], vec![0.0; 3]).is_err());
    assert!(matches!(DenseTensor::new(vec![2], vec![1.0, f64::NAN]), Err(Error::NonFinite)));
    assert!(matches!(
        index_encoded(&[2, 2]).element(&[3, 1]),
        Err(Error::IndexOutOfBounds { .. })
    ));
}

fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..5, 1..5)
}

fn tensor_strategy() -> impl Strategy<Value = DenseTensor> {
    shape_strategy().prop_flat_map(|shape| {
        let len = shape.iter().product::<usize>();
        prop::collection::vec(-10.0f64..10.0, len).prop_map(move |data| DenseTensor::new(shape.clone(), data).unwrap())
    })
}

fn tensor_pair_strategy() -> impl Strategy<Value = (DenseTensor, DenseTensor)> {
    shape_strategy().prop_flat_map(|shape| {
        let len = shape.iter().product::<usize>();
        (prop::collection::vec(-10.0f64..10.0, len), prop::collection::vec(-10.0f64..10.0, len)).prop_map(
            move |(a, b)| {
                (
                    DenseTensor::new(shape.clone(), a).unwrap(),
                    DenseTensor::new(shape.clone(), b).unwrap(),
                )
            },
        )
    })
}

proptest! {
    #[test]
    fn fold_inverts_unfold(x in tensor_strategy(), k in 1usize..5) {
        let k = (k - 1) % x.order() + 1;
        let back = DenseTensor::fold(&x.unfold(k).unwrap(), k, x.shape()).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn norm_equivalence(x in tensor_strategy()) {
        let (f, c) = (x.frobenius_norm(), x.chebyshev_norm());
        prop_assert!(c <= f * (1.0 + 1e-15));
        prop_assert!(f <= (x.len() as f64).sqrt() * c * (1.0 + 1e-15));
        prop_assert!((x.frobenius_inner(&x).unwrap().sqrt() - f).abs() <= 1e-12 * f.max(1.0));
    }

    #[test]
    fn nonneg_projection_is_idempotent_and_clears_negativity(x in tensor_strategy()) {
        let p = x.nonneg_project();
        prop_assert_eq!(p.nonneg_project(), p.clone());
        let s = p.negativity_stats();
        prop_assert_eq!((s.frobenius, s.chebyshev, s.fraction), (0.0, 0.0, 0.0));
        let dist = x.sub(&p).unwrap().frobenius_norm();
        prop_assert!((dist - x.negativity_stats().frobenius).abs() <= 1e-12 * dist.max(1.0));
    }

    #[test]
    fn nonneg_projection_is_nonexpansive((x, y) in tensor_pair_strategy()) {
        let lhs = x.nonneg_project().sub(&y.nonneg_project()).unwrap().frobenius_norm();
        let rhs = x.sub(&y).unwrap().frobenius_norm();
        prop_assert!(lhs <= rhs * (1.0 + 1e-15));
    }

    #[test]
    fn negativity_stats_are_consistent(x in tensor_strategy()) {
        let s = x.negativity_stats();
        prop_assert!(s.chebyshev <= s.frobenius);
        prop_assert_eq!(s.fraction == 0.0, s.frobenius == 0.0);
        prop_assert!((0.0..=1.0).contains(&s.fraction));
    }

    #[test]
    fn mode_product_unfolds_to_matrix_product(x in tensor_strategy(), k in 1usize..5, rows in 1usize..4, seed in any::<u64>()) {
        let k = (k - 1) % x.order() + 1;
        let mut rng = StdRng::seed_from_u64(seed);
        let u = random_matrix(rows, x.shape()[k - 1], &mut rng);
        let lhs = x.mode_product(&u, k).unwrap().unfold(k).unwrap();
        let rhs = u.matmul(&x.unfold(k).unwrap()).unwrap();
        prop_assert!(rel_diff(lhs.data(), rhs.data()) <= 1e-13 || rhs.frobenius_norm() == 0.0);
    }

    #[test]
    fn mode_products_on_distinct_modes_commute(seed in any::<u64>(), a in 1usize..4, b in 1usize..4) {
        let mut rng = StdRng::seed_from_u64(seed);
        let x = random_tensor(&[3, 4, 2], &mut rng);
        let u = random_matrix(a, 3, &mut rng);
        let v = random_matrix(b, 2, &mut rng);
        let uv = x.mode_product(&u, 1).unwrap().mode_product(&v, 3).unwrap();
        let vu = x.mode_product(&v, 3).unwrap().mode_product(&u, 1).unwrap();
        prop_assert!(rel_diff(uv.data(), vu.data()) <= 1e-13);
    }
}
