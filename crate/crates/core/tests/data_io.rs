use nalgebra::DMatrix;
use nnta::data::{
    decode_tensor, encode_tensor, gaussian_mixture_tensor, hilbert_tensor, import_cube, load_matrix, load_raw_f64,
    load_tensor, read_sidecar, save_matrix, save_tensor, GaussianComponent, GaussianMixtureSpec,
};
use nnta::{DenseTensor, Error, FormatError, Matrix};
use proptest::prelude::*;

/// Inverse of a 4×4 matrix by cofactor expansion.
fn inverse4(a: &[f64]) -> [f64; 16] {
    let m = |r: usize, c: usize| a[r * 4 + c];
    let minor = |r: usize, c: usize| {
        let rows: Vec<usize> = (0..4).filter(|&i| i != r).collect();
        let cols: Vec<usize> = (0..4).filter(|&j| j != c).collect();
        let e = |i: usize, j: usize| m(rows[i], cols[j]);
        e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
            + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
    };
    let sign = |r: usize, c: usize| if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
    let det: f64 = (0..4).map(|c| m(0, c) * sign(0, c) * minor(0, c)).sum();
    let mut inv = [0.0; 16];
    for r in 0..4 {
        for c in 0..4 {
            inv[c * 4 + r] = sign(r, c) * minor(r, c) / det;
        }
    }
    inv
}

fn mixture_oracle(spec: &GaussianMixtureSpec, idx: &[usize]) -> f64 {
    let h = 2.0 * spec.half_width / (spec.n - 1) as f64;
    let x: Vec<f64> = idx.iter().map(|&i| -spec.half_width + (i - 1) as f64 * h).collect();
    spec.components
        .iter()
        .map(|c| {
            let inv = inverse4(&c.covariance);
            let dx: Vec<f64> = x.iter().zip(&c.mean).map(|(a, b)| a - b).collect();
            let mut q = 0.0;
            for r in 0..4 {
                for s in 0..4 {
                    q += dx[r] * inv[r * 4 + s] * dx[s];
                }
            }
            c.weight * (-0.5 * q).exp()
        })
        .sum()
}

#[test]
fn hilbert_small_entries() {
    let h = hilbert_tensor(&[2, 3, 4]).unwrap();
    assert_eq!(h.element(&[1, 1, 1]).unwrap(), 1.0);
    assert_eq!(h.element(&[2, 3, 4]).unwrap(), 1.0 / 7.0);
    let m = hilbert_tensor(&[3, 3]).unwrap();
    assert_eq!(m.element(&[2, 2]).unwrap(), 1.0 / 3.0);
    assert_eq!(m.element(&[3, 1]).unwrap(), 1.0 / 3.0);
}

#[test]
fn hilbert_unfolding_spectrum_decays_fast() {
    let x = hilbert_tensor(&[32, 32, 32]).unwrap();
    let unf = x.unfold(1).unwrap();
    let mut s: Vec<f64> = DMatrix::from_row_slice(unf.rows(), unf.cols(), unf.data())
        .singular_values()
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    // The fifth singular value sits at 1.57e-3 relative, the sixth below 1e-3.
    assert!(s[4] / s[0] <= 2e-3, "{}", s[4] / s[0]);
    assert!(s[5] / s[0] <= 1e-3, "{}", s[5] / s[0]);
    assert!(s.windows(2).take(8).all(|w| w[1] < 0.5 * w[0]));
}

#[test]
fn gaussian_mixture_matches_scalar_oracle() {
    let spec = GaussianMixtureSpec::balanced_pair(8);
    let x = gaussian_mixture_tensor(&spec).unwrap();
    assert_eq!(x.shape(), &[8, 8, 8, 8]);
    let mut worst = 0.0f64;
    for i in 1..=8 {
        for j in 1..=8 {
            for k in 1..=8 {
                for l in 1..=8 {
                    let idx = [i, j, k, l];
                    let want = mixture_oracle(&spec, &idx);
                    let got = x.element(&idx).unwrap();
                    worst = worst.max((got - want).abs() / want);
                }
            }
        }
    }
    assert!(worst <= 1e-12, "{worst}");
    assert!(x.data().iter().all(|&v| v > 0.0));
}

fn isotropic(n: usize, dim: usize) -> GaussianMixtureSpec {
    GaussianMixtureSpec {
        dim,
        n,
        half_width: 2.0,
        components: vec![GaussianComponent {
            weight: 1.0,
            mean: vec![0.0; dim],
            covariance: Matrix::identity(dim).data().iter().map(|v| 0.3 * v).collect(),
        }],
    }
}

#[test]
fn single_centered_gaussian_is_reflection_symmetric() {
    let spec = isotropic(7, 3);
    let x = gaussian_mixture_tensor(&spec).unwrap();
    for (t, _) in x.data().iter().enumerate() {
        let idx = [t / 49 + 1, (t / 7) % 7 + 1, t % 7 + 1];
        let mirrored: Vec<usize> = idx.iter().map(|&i| 8 - i).collect();
        let (a, b) = (x.element(&idx).unwrap(), x.element(&mirrored).unwrap());
        assert!((a - b).abs() <= 1e-14 * a, "{idx:?}");
    }
    // Odd n puts a grid point on the mean, where the entry is the weight.
    assert_eq!(x.element(&[4, 4, 4]).unwrap(), 1.0);
    assert_eq!(x.data().iter().copied().fold(0.0, f64::max), 1.0);
}

#[test]
fn mixture_spec_validation() {
    let mut spec = isotropic(5, 2);
    spec.components[0].covariance = vec![1.0, 2.0, 2.0, 1.0];
    assert!(matches!(gaussian_mixture_tensor(&spec), Err(Error::SingularCovariance(1))));
    spec.components[0].covariance = vec![1.0, 0.5, 0.4, 1.0];
    assert!(matches!(gaussian_mixture_tensor(&spec), Err(Error::SingularCovariance(1))));
    let mut spec = isotropic(1, 2);
    assert!(matches!(gaussian_mixture_tensor(&spec), Err(Error::InvalidMixture(_))));
    spec.n = 4;
    spec.components[0].mean = vec![0.0];
    assert!(matches!(gaussian_mixture_tensor(&spec), Err(Error::InvalidMixture(_))));
    spec.components.clear();
    assert!(matches!(gaussian_mixture_tensor(&spec), Err(Error::InvalidMixture(_))));
}

#[test]
fn dten_layout_is_little_endian() {
    let x = DenseTensor::new(vec![2, 1], vec![1.5, -2.0]).unwrap();
    let bytes = encode_tensor(&x);
    let mut want = b"DTEN".to_vec();
    want.extend_from_slice(&[1, 0, 0, 0, 2, 0, 0, 0]);
    want.extend_from_slice(&[2, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0]);
    want.extend_from_slice(&[0, 0, 0, 0, 0, 0, 0xf8, 0x3f]);
    want.extend_from_slice(&[0, 0, 0, 0, 0, 0, 0, 0xc0]);
    assert_eq!(bytes, want);
}

#[test]
fn dten_errors_are_distinct() {
    let x = hilbert_tensor(&[3, 4, 5]).unwrap();
    let good = encode_tensor(&x);

    let mut bad = good.clone();
    bad[0] = b'X';
    assert!(matches!(decode_tensor(&bad), Err(Error::Format(FormatError::BadMagic(_)))));

    let mut bad = good.clone();
    bad[4] = 2;
    assert!(matches!(decode_tensor(&bad), Err(Error::Format(FormatError::UnsupportedVersion(2)))));

    let mut bad = good.clone();
    bad[12..20].copy_from_slice(&u64::MAX.to_le_bytes());
    assert!(matches!(decode_tensor(&bad), Err(Error::Format(FormatError::DimensionOverflow(_)))));

    assert!(matches!(
        decode_tensor(&good[..good.len() - 3]),
        Err(Error::Format(FormatError::Truncated { .. }))
    ));
    assert!(matches!(decode_tensor(&good[..10]), Err(Error::Format(FormatError::Truncated { .. }))));

    let mut bad = good.clone();
    bad.push(0);
    assert!(matches!(decode_tensor(&bad), Err(Error::Format(FormatError::TrailingBytes(1)))));

    let mut bad = good;
    bad[100..108].copy_from_slice(&f64::NAN.to_le_bytes());
    assert!(matches!(decode_tensor(&bad), Err(Error::NonFinite)));
}

#[test]
fn files_and_sidecars_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let x = hilbert_tensor(&[3, 4, 5]).unwrap();
    let path = dir.path().join("h.dten");
    save_tensor(&x, &path).unwrap();
    assert_eq!(load_tensor(&path).unwrap(), x);
    assert_eq!(read_sidecar(&path).unwrap(), None);
    assert!(matches!(load_tensor(dir.path().join("missing.dten")), Err(Error::Io { .. })));

    let m = Matrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64);
    save_matrix(&m, dir.path().join("m.dten")).unwrap();
    assert_eq!(load_matrix(dir.path().join("m.dten")).unwrap(), m);
    assert!(load_matrix(&path).is_err());

    let raw = dir.path().join("cube.raw");
    let bytes: Vec<u8> = x.data().iter().flat_map(|v| (v * 40.0 + 3.0).to_le_bytes()).collect();
    std::fs::write(&raw, bytes).unwrap();
    let cube = load_raw_f64(&raw, &[3, 4, 5]).unwrap();
    let out = dir.path().join("cube.dten");
    let scaled = import_cube(&cube, "cube.raw", &out).unwrap();
    assert_eq!(load_tensor(&out).unwrap(), scaled);
    let lo = scaled.data().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scaled.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!((lo, hi), (0.0, 1.0));
    let meta = read_sidecar(&out).unwrap().unwrap();
    assert_eq!(meta["source"], "cube.raw");
    assert_eq!(meta["rescale_max"], 43.0);
    assert!(load_raw_f64(&raw, &[3, 4, 4]).is_err());
}

#[test]
fn hyperspectral_sized_fixture_loads() {
    let dir = tempfile::tempdir().unwrap();
    let shape = [307usize, 307, 191];
    let len: usize = shape.iter().product();
    let x = DenseTensor::new(shape.to_vec(), (0..len).map(|t| (t % 1009) as f64 / 1008.0).collect()).unwrap();
    let path = dir.path().join("cube.dten");
    save_tensor(&x, &path).unwrap();
    let y = load_tensor(&path).unwrap();
    assert_eq!(y.shape(), &shape);
    assert_eq!(y.len(), 307 * 307 * 191);
    assert_eq!(y, x);
}

proptest! {
    #[test]
    fn dten_roundtrip_is_bit_exact(
        shape in prop::collection::vec(1usize..5, 1..5),
        seed in any::<u64>(),
    ) {
        let mut s = seed;
        let x = DenseTensor::from_fn(&shape, |_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let v = f64::from_bits(s >> 2);
            if v.is_finite() { v } else { -0.0 }
        }).unwrap();
        let y = decode_tensor(&encode_tensor(&x)).unwrap();
        prop_assert_eq!(y.shape(), x.shape());
        prop_assert!(x.data().iter().zip(y.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
