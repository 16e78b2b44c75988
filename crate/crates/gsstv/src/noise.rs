//! Mixed-noise simulation and oracle constraint radii.
//!
//! The observation model is `v = clean + s_bar + n` where `s_bar` is sparse
//! salt-and-pepper noise and `n` is dense Gaussian noise. Both components are
//! returned so the oracle radii `epsilon = |n|_2` and `eta = |s_bar|_1` can
//! be computed from the actually injected noise.
//!
//! Everything is generated from one [`SplitMix64`](crate::rng::SplitMix64)
//! stream in a fixed order (selection of corrupted entries, then a salt/pepper
//! bit per corrupted entry, then the Gaussian field), so a seed pins the
//! output bit-exactly.

use crate::cube::HsiCube;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Mixed-noise parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation of the dense Gaussian component.
    pub gaussian_sigma: f64,
    /// Fraction of entries forced to 0 or 1, in `[0, 1)`.
    pub sp_rate: f64,
    /// Stream seed.
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(gaussian_sigma: f64, sp_rate: f64, seed: u64) -> Result<Self> {
        if !(gaussian_sigma.is_finite() && gaussian_sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gaussian_sigma must be >= 0, got {gaussian_sigma}"
            )));
        }
        if !(0.0..1.0).contains(&sp_rate) {
            return Err(Error::InvalidArgument(format!(
                "sp_rate must be in [0, 1), got {sp_rate}"
            )));
        }
        Ok(Self {
            gaussian_sigma,
            sp_rate,
            seed,
        })
    }
}

/// Corrupts `clean` with salt-and-pepper plus Gaussian noise.
///
/// Exactly `floor(sp_rate * N)` entries, chosen uniformly without
/// replacement, are forced to 0 or 1 (equal probability); `s_bar` records
/// `forced - clean` there and 0 elsewhere. `n` is i.i.d. `N(0, sigma^2)`
/// over all entries — corrupted entries receive Gaussian noise too, since
/// the observation model is purely additive. Returns `(v, n, s_bar)` with
/// `v = clean + s_bar + n` summed in that fixed order.
pub fn corrupt(clean: &HsiCube, spec: &NoiseSpec) -> Result<(HsiCube, HsiCube, HsiCube)> {
    let spec = NoiseSpec::new(spec.gaussian_sigma, spec.sp_rate, spec.seed)?;
    if let Some(bad) = clean.data().iter().position(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidArgument(format!(
            "clean cube must lie in [0, 1]; entry {bad} is {}",
            clean.data()[bad]
        )));
    }
    let dims = clean.dims();
    let n_total = dims.len();
    let mut rng = SplitMix64::new(spec.seed);

    let count = (spec.sp_rate * n_total as f64).floor() as usize;
    let mut s_bar = vec![0.0; n_total];
    let targets = rng.choose_without_replacement(n_total, count);
    for &t in &targets {
        let forced = if rng.next_u64() >> 63 == 0 { 0.0 } else { 1.0 };
        s_bar[t] = forced - clean.data()[t];
    }

    let mut gauss = vec![0.0; n_total];
    rng.fill_gaussian(spec.gaussian_sigma, &mut gauss);

    let mut v = vec![0.0; n_total];
    for idx in 0..n_total {
        v[idx] = clean.data()[idx] + s_bar[idx] + gauss[idx];
    }

    let (n1, n2, n3) = (dims.n1, dims.n2, dims.n3);
    Ok((
        HsiCube::new(n1, n2, n3, v)?,
        HsiCube::new(n1, n2, n3, gauss)?,
        HsiCube::new(n1, n2, n3, s_bar)?,
    ))
}

/// Oracle constraint radii from the injected noise: `(|n|_2, |s_bar|_1)`.
pub fn oracle_radii(n: &HsiCube, s_bar: &HsiCube) -> (f64, f64) {
    assert_eq!(n.dims(), s_bar.dims(), "noise cubes must share dims");
    let epsilon = n.data().iter().map(|v| v * v).sum::<f64>().sqrt();
    let eta = s_bar.data().iter().map(|v| v.abs()).sum::<f64>();
    (epsilon, eta)
}
