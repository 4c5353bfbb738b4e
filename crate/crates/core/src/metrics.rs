//! Approximation-quality measures: relative errors, the coefficient of
//! determination, and band-wise mean SSIM for 3-D cubes whose last mode
//! holds spectral bands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, NegativityStats};

/// `(‖X−Y‖_F / ‖X‖_F, ‖X−Y‖_C / ‖X‖_C)` with `X` the reference.
pub fn relative_errors(reference: &DenseTensor, approx: &DenseTensor) -> Result<(f64, f64)> {
    reference.check_same_shape(approx)?;
    let fro = reference.frobenius_norm();
    let cheb = reference.chebyshev_norm();
    if fro == 0.0 {
        return Err(Error::ZeroNorm("Frobenius"));
    }
    let mut sq = 0.0;
    let mut worst = 0.0f64;
    for (a, b) in reference.data().iter().zip(approx.data()) {
        let d = a - b;
        sq += d * d;
        worst = worst.max(d.abs());
    }
    Ok((sq.sqrt() / fro, worst / cheb))
}

/// `R² = 1 − ‖X−Y‖²_F / ‖X−ᾱ‖²_F` with `ᾱ` the mean entry of `X`.
pub fn r_squared(reference: &DenseTensor, approx: &DenseTensor) -> Result<f64> {
    reference.check_same_shape(approx)?;
    let mean = reference.data().iter().sum::<f64>() / reference.len() as f64;
    let total: f64 = reference.data().iter().map(|v| (v - mean).powi(2)).sum();
    if total == 0.0 {
        return Err(Error::ConstantReference);
    }
    let residual: f64 = reference
        .data()
        .iter()
        .zip(approx.data())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(1.0 - residual / total)
}

/// Single-scale SSIM settings. The defaults are the usual 11×11 Gaussian
/// window with σ = 1.5, `K₁ = 0.01`, `K₂ = 0.03`, and a dynamic range of 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub data_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            data_range: 1.0,
        }
    }
}

impl SsimParams {
    fn kernel(&self) -> Vec<f64> {
        let half = (self.window / 2) as f64;
        let w: Vec<f64> = (0..self.window)
            .map(|i| (-(i as f64 - half).powi(2) / (2.0 * self.sigma * self.sigma)).exp())
            .collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect()
    }
}

/// Half-sample symmetric reflection: `… c b a | a b c …`.
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut j = i.rem_euclid(period);
    if j >= n {
        j = period - 1 - j;
    }
    j as usize
}

/// Separable correlation of an `h × w` image with `kernel` along both axes,
/// symmetric padding, output the same size as the input.
fn gaussian_filter(img: &[f64], h: usize, w: usize, kernel: &[f64]) -> Vec<f64> {
    let half = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; h * w];
    for i in 0..h {
        let row = &img[i * w..(i + 1) * w];
        for j in 0..w {
            tmp[i * w + j] = kernel
                .iter()
                .enumerate()
                .map(|(t, k)| k * row[reflect(j as isize + t as isize - half, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for i in 0..h {
        for (t, k) in kernel.iter().enumerate() {
            let src = reflect(i as isize + t as isize - half, h);
            let src_row = &tmp[src * w..(src + 1) * w];
            out[i * w..(i + 1) * w]
                .iter_mut()
                .zip(src_row)
                .for_each(|(o, v)| *o += k * v);
        }
    }
    out
}

/// Mean SSIM of two `h × w` row-major images.
pub fn ssim_2d(x: &[f64], y: &[f64], h: usize, w: usize, params: &SsimParams) -> f64 {
    assert_eq!(x.len(), h * w);
    assert_eq!(y.len(), h * w);
    let kernel = params.kernel();
    let c1 = (params.k1 * params.data_range).powi(2);
    let c2 = (params.k2 * params.data_range).powi(2);
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let mx = gaussian_filter(x, h, w, &kernel);
    let my = gaussian_filter(y, h, w, &kernel);
    let mxx = gaussian_filter(&xx, h, w, &kernel);
    let myy = gaussian_filter(&yy, h, w, &kernel);
    let mxy = gaussian_filter(&xy, h, w, &kernel);
    let total: f64 = (0..h * w)
        .map(|p| {
            let (ux, uy) = (mx[p], my[p]);
            let vx = mxx[p] - ux * ux;
            let vy = myy[p] - uy * uy;
            let cxy = mxy[p] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
        })
        .sum();
    total / (h * w) as f64
}

fn band(x: &DenseTensor, b: usize) -> Vec<f64> {
    let bands = x.shape()[2];
    x.data().iter().skip(b).step_by(bands).copied().collect()
}

/// Mean over bands (last mode) of the per-band SSIM.
pub fn ssim_bandwise_mean_with(reference: &DenseTensor, approx: &DenseTensor, params: &SsimParams) -> Result<f64> {
    if reference.order() != 3 {
        return Err(Error::NotThreeDimensional(reference.order()));
    }
    reference.check_same_shape(approx)?;
    let (h, w, bands) = (reference.shape()[0], reference.shape()[1], reference.shape()[2]);
    let total: f64 = (0..bands)
        .map(|b| ssim_2d(&band(reference, b), &band(approx, b), h, w, params))
        .sum();
    Ok(total / bands as f64)
}

pub fn ssim_bandwise_mean(reference: &DenseTensor, approx: &DenseTensor) -> Result<f64> {
    ssim_bandwise_mean_with(reference, approx, &SsimParams::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub rel_err_frobenius: f64,
    pub rel_err_chebyshev: f64,
    pub r_squared: f64,
    /// Only for 3-D inputs.
    pub ssim_bandwise_mean: Option<f64>,
    pub negativity: NegativityStats,
}

impl QualityReport {
    pub fn evaluate(reference: &DenseTensor, approx: &DenseTensor) -> Result<Self> {
        let (fro, cheb) = relative_errors(reference, approx)?;
        let ssim = if reference.order() == 3 {
            Some(ssim_bandwise_mean(reference, approx)?)
        } else {
            None
        };
        Ok(Self {
            rel_err_frobenius: fro,
            rel_err_chebyshev: cheb,
            r_squared: r_squared(reference, approx)?,
            ssim_bandwise_mean: ssim,
            negativity: approx.negativity_stats(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(shape: &[usize]) -> DenseTensor {
        let mut k = 0.0;
        DenseTensor::from_fn(shape, |_| {
            k += 1.0;
            (k * 0.37f64).sin().abs()
        })
        .unwrap()
    }

    #[test]
    fn relative_errors_basic() {
        let x = ramp(&[3, 4]);
        assert_eq!(relative_errors(&x, &x).unwrap(), (0.0, 0.0));
        let z = DenseTensor::zeros(&[3, 4]).unwrap();
        let (f, c) = relative_errors(&x, &z).unwrap();
        assert!((f - 1.0).abs() < 1e-15 && (c - 1.0).abs() < 1e-15);
        assert!(matches!(relative_errors(&z, &x), Err(Error::ZeroNorm(_))));
    }

    #[test]
    fn r_squared_basic() {
        let x = ramp(&[5, 4]);
        assert_eq!(r_squared(&x, &x).unwrap(), 1.0);
        let mean = x.data().iter().sum::<f64>() / x.len() as f64;
        let m = DenseTensor::from_fn(&[5, 4], |_| mean).unwrap();
        assert!(r_squared(&x, &m).unwrap().abs() < 1e-12);
        let c = DenseTensor::from_fn(&[2, 2], |_| 3.0).unwrap();
        assert!(matches!(r_squared(&c, &c), Err(Error::ConstantReference)));
    }

    #[test]
    fn ssim_of_identical_cubes_is_one() {
        let x = ramp(&[12, 9, 3]);
        assert!((ssim_bandwise_mean(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            ssim_bandwise_mean(&ramp(&[4, 4]), &ramp(&[4, 4])),
            Err(Error::NotThreeDimensional(2))
        ));
    }

    #[test]
    fn reflection_is_half_sample_symmetric() {
        let idx: Vec<usize> = (-3..7).map(|i| reflect(i, 4)).collect();
        assert_eq!(idx, vec![2, 1, 0, 0, 1, 2, 3, 3, 2, 1]);
        assert_eq!(reflect(-1, 1), 0);
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = SsimParams::default().kernel();
        assert_eq!(k.len(), 11);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(k[0], k[10]);
        assert!(k[5] > k[4]);
    }

    #[test]
    fn quality_report_for_cube() {
        let x = ramp(&[11, 11, 2]);
        let r = QualityReport::evaluate(&x, &x).unwrap();
        assert_eq!(r.rel_err_frobenius, 0.0);
        assert_eq!(r.r_squared, 1.0);
        assert!((r.ssim_bandwise_mean.unwrap() - 1.0).abs() < 1e-12);
        let r4 = QualityReport::evaluate(&ramp(&[2, 2, 2, 2]), &ramp(&[2, 2, 2, 2])).unwrap();
        assert!(r4.ssim_bandwise_mean.is_none());
    }
}
