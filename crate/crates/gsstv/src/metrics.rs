//! Band-averaged quality metrics.
//!
//! PSNR uses a fixed peak of 1 (data is normalized reflectance):
//! `psnr = 10 log10(n1*n2 / |u_k - ref_k|_2^2)` per band. SSIM uses the
//! canonical windowed form: 11x11 Gaussian window with standard deviation
//! 1.5, stability constants `C1 = 0.01^2` and `C2 = 0.03^2` for dynamic
//! range 1, and symmetric (mirror) boundary handling, evaluated at every
//! pixel and averaged.

use crate::cube::HsiCube;
use crate::error::{Error, Result};

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

/// PSNR of one band in dB; `f64::INFINITY` when the error is zero.
pub fn psnr_band(band: &[f64], reference: &[f64], n1: usize, n2: usize) -> f64 {
    assert_eq!(band.len(), n1 * n2, "band length mismatch");
    assert_eq!(band.len(), reference.len(), "reference length mismatch");
    let err_sq: f64 = band
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if err_sq == 0.0 {
        return f64::INFINITY;
    }
    10.0 * ((n1 * n2) as f64 / err_sq).log10()
}

/// Mean PSNR over bands. Bands with exactly zero error cannot be averaged
/// and are excluded with a warning; if every band is exact the result is
/// `f64::INFINITY`.
pub fn mpsnr(u: &HsiCube, reference: &HsiCube) -> Result<f64> {
    check_same_dims(u, reference)?;
    let dims = u.dims();
    let mut total = 0.0;
    let mut counted = 0;
    for k in 0..dims.n3 {
        let p = psnr_band(u.band(k), reference.band(k), dims.n1, dims.n2);
        if p.is_infinite() {
            log::warn!("band {k} has zero error; excluded from MPSNR average");
            continue;
        }
        total += p;
        counted += 1;
    }
    if counted == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(total / counted as f64)
}

/// Mean SSIM over bands.
pub fn mssim(u: &HsiCube, reference: &HsiCube) -> Result<f64> {
    check_same_dims(u, reference)?;
    let dims = u.dims();
    let mut total = 0.0;
    for k in 0..dims.n3 {
        total += ssim_band(u.band(k), reference.band(k), dims.n1, dims.n2);
    }
    Ok(total / dims.n3 as f64)
}

fn check_same_dims(a: &HsiCube, b: &HsiCube) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimMismatch {
            what: "metric cube dims",
            expected: a.dims().len(),
            actual: b.dims().len(),
        });
    }
    Ok(())
}

/// SSIM between two bands (column-major `n1 x n2` images), averaged over the
/// full SSIM map.
pub fn ssim_band(x: &[f64], y: &[f64], n1: usize, n2: usize) -> f64 {
    assert_eq!(x.len(), n1 * n2, "band length mismatch");
    assert_eq!(x.len(), y.len(), "band length mismatch");
    let kernel = gaussian_kernel();

    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let xx: Vec<f64> = x.iter().map(|a| a * a).collect();
    let yy: Vec<f64> = y.iter().map(|b| b * b).collect();

    let mu_x = filter_symmetric(x, n1, n2, &kernel);
    let mu_y = filter_symmetric(y, n1, n2, &kernel);
    let e_xx = filter_symmetric(&xx, n1, n2, &kernel);
    let e_yy = filter_symmetric(&yy, n1, n2, &kernel);
    let e_xy = filter_symmetric(&xy, n1, n2, &kernel);

    let mut total = 0.0;
    for idx in 0..x.len() {
        let (mx, my) = (mu_x[idx], mu_y[idx]);
        let var_x = e_xx[idx] - mx * mx;
        let var_y = e_yy[idx] - my * my;
        let cov = e_xy[idx] - mx * my;
        let num = (2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2);
        let den = (mx * mx + my * my + SSIM_C1) * (var_x + var_y + SSIM_C2);
        total += num / den;
    }
    total / x.len() as f64
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let radius = (SSIM_WINDOW / 2) as isize;
    let mut kernel = [0.0; SSIM_WINDOW];
    let mut sum = 0.0;
    for (slot, offset) in kernel.iter_mut().zip(-radius..=radius) {
        let v = (-((offset * offset) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        *slot = v;
        sum += v;
    }
    for slot in &mut kernel {
        *slot /= sum;
    }
    kernel
}

/// Mirror index into `[0, n)` with edge duplication: -1 -> 0, n -> n-1.
fn reflect(mut t: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if t < 0 {
            t = -t - 1;
        } else if t >= n {
            t = 2 * n - 1 - t;
        } else {
            return t as usize;
        }
    }
}

/// Separable windowed filtering with symmetric boundary handling.
fn filter_symmetric(img: &[f64], n1: usize, n2: usize, kernel: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let radius = (SSIM_WINDOW / 2) as isize;
    // along rows (i)
    let mut pass1 = vec![0.0; img.len()];
    for j in 0..n2 {
        for i in 0..n1 {
            let mut acc = 0.0;
            for (tap, &w) in (-radius..=radius).zip(kernel.iter()) {
                let ii = reflect(i as isize + tap, n1);
                acc += w * img[j * n1 + ii];
            }
            pass1[j * n1 + i] = acc;
        }
    }
    // along columns (j)
    let mut pass2 = vec![0.0; img.len()];
    for j in 0..n2 {
        for i in 0..n1 {
            let mut acc = 0.0;
            for (tap, &w) in (-radius..=radius).zip(kernel.iter()) {
                let jj = reflect(j as isize + tap, n2);
                acc += w * pass1[jj * n1 + i];
            }
            pass2[j * n1 + i] = acc;
        }
    }
    pass2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::HsiCube;
    use crate::noise::{corrupt, NoiseSpec};

    #[test]
    fn psnr_closed_forms() {
        let n = 16 * 16;
        let reference = vec![0.5; n];
        // uniform error of 0.1 -> 20 dB
        let shifted: Vec<f64> = reference.iter().map(|v| v + 0.1).collect();
        let p = psnr_band(&shifted, &reference, 16, 16);
        assert!((p - 20.0).abs() < 1e-9, "{p}");
        // error magnitude 1 everywhere -> 0 dB
        let far: Vec<f64> = reference.iter().map(|v| v + 1.0).collect();
        let p = psnr_band(&far, &reference, 16, 16);
        assert!(p.abs() < 1e-9, "{p}");
        // identical -> infinity
        assert!(psnr_band(&reference, &reference, 16, 16).is_infinite());
    }

    #[test]
    fn mpsnr_uniform_offset() {
        let base = HsiCube::from_fn(8, 8, 4, |i, j, _| ((i + j) % 2) as f64 * 0.25).unwrap();
        let shifted = HsiCube::from_fn(8, 8, 4, |i, j, k| base.get(i, j, k) + 0.1).unwrap();
        let p = mpsnr(&shifted, &base).unwrap();
        assert!((p - 20.0).abs() < 1e-9, "{p}");
    }

    #[test]
    fn mssim_identical_is_exactly_one() {
        let cube = HsiCube::from_fn(16, 16, 3, |i, j, k| {
            0.1 + 0.8 * (((i * 5 + j * 3 + k * 7) % 13) as f64 / 13.0)
        })
        .unwrap();
        assert_eq!(mssim(&cube, &cube).unwrap(), 1.0);
    }

    #[test]
    fn ssim_is_symmetric() {
        let a = HsiCube::from_fn(12, 14, 2, |i, j, k| {
            0.5 + 0.5 * ((i as f64 * 0.7).sin() * (j as f64 * 0.3).cos()) * (k + 1) as f64 / 4.0
        })
        .unwrap();
        let b = HsiCube::from_fn(12, 14, 2, |i, j, _| ((i * j) % 7) as f64 / 7.0).unwrap();
        let ab = mssim(&a, &b).unwrap();
        let ba = mssim(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn mpsnr_decreases_with_noise() {
        let clean = HsiCube::from_fn(16, 16, 4, |i, _, k| {
            if i < 8 {
                0.2 + 0.05 * k as f64
            } else {
                0.7
            }
        })
        .unwrap();
        let mut last = f64::INFINITY;
        for (sigma, seed) in [(0.02, 1), (0.05, 1), (0.1, 1)] {
            let spec = NoiseSpec::new(sigma, 0.0, seed).unwrap();
            let (v, ..) = corrupt(&clean, &spec).unwrap();
            let p = mpsnr(&v, &clean).unwrap();
            assert!(p < last, "sigma {sigma}: {p} !< {last}");
            last = p;
        }
    }

    #[test]
    fn dim_mismatch_is_an_error() {
        let a = HsiCube::constant(4, 4, 2, 0.5).unwrap();
        let b = HsiCube::constant(4, 4, 3, 0.5).unwrap();
        assert!(mpsnr(&a, &b).is_err());
        assert!(mssim(&a, &b).is_err());
    }

    #[test]
    fn reflect_handles_tiny_axes() {
        assert_eq!(reflect(-1, 1), 0);
        assert_eq!(reflect(3, 1), 0);
        assert_eq!(reflect(-2, 3), 1);
        assert_eq!(reflect(4, 3), 1);
        assert_eq!(reflect(2, 3), 2);
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = gaussian_kernel();
        let sum: f64 = k.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for t in 0..SSIM_WINDOW / 2 {
            assert_eq!(k[t], k[SSIM_WINDOW - 1 - t]);
        }
        assert!(k[SSIM_WINDOW / 2] > k[0]);
    }
}
