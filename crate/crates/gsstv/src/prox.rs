//! Proximity operators and metric projections.
//!
//! These are the four maps the primal-dual iteration needs: the box clamp,
//! the `l2`-ball projection, the `l1`-ball projection, and soft-thresholding,
//! plus the Moreau identity for evaluating a conjugate prox through the
//! original one.

use crate::error::{Error, Result};

/// Componentwise bounds `mu_lo <= z_i <= mu_hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxBounds {
    mu_lo: f64,
    mu_hi: f64,
}

impl BoxBounds {
    pub fn new(mu_lo: f64, mu_hi: f64) -> Result<Self> {
        if !(mu_lo.is_finite() && mu_hi.is_finite() && mu_lo < mu_hi) {
            return Err(Error::InvalidArgument(format!(
                "box bounds require mu_lo < mu_hi, got [{mu_lo}, {mu_hi}]"
            )));
        }
        Ok(Self { mu_lo, mu_hi })
    }

    pub fn unit() -> Self {
        Self {
            mu_lo: 0.0,
            mu_hi: 1.0,
        }
    }

    pub fn lo(&self) -> f64 {
        self.mu_lo
    }

    pub fn hi(&self) -> f64 {
        self.mu_hi
    }

    pub fn contains(&self, v: f64) -> bool {
        self.mu_lo <= v && v <= self.mu_hi
    }
}

/// Componentwise clamp onto the box.
pub fn project_box(z: &[f64], bounds: &BoxBounds) -> Vec<f64> {
    z.iter()
        .map(|&v| v.clamp(bounds.lo(), bounds.hi()))
        .collect()
}

pub fn project_box_in_place(z: &mut [f64], bounds: &BoxBounds) {
    for v in z {
        *v = v.clamp(bounds.lo(), bounds.hi());
    }
}

/// Projection onto the `l2` ball of radius `epsilon` centered at `center`:
/// the input when inside, otherwise `center + epsilon * (z - center) / |z - center|`.
///
/// Boundary points (including `epsilon = 0` with `z = center`) return the
/// input unchanged.
pub fn project_l2_ball(z: &[f64], center: &[f64], epsilon: f64) -> Vec<f64> {
    assert_eq!(z.len(), center.len(), "l2 projection length mismatch");
    let dist = z
        .iter()
        .zip(center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if dist <= epsilon {
        return z.to_vec();
    }
    let scale = epsilon / dist;
    z.iter()
        .zip(center)
        .map(|(a, b)| b + scale * (a - b))
        .collect()
}

/// Euclidean projection onto `{ x : |x|_1 <= eta }` by the descending-sort
/// threshold method, `O(n log n)`.
///
/// When the input is outside the ball, the result is the soft-thresholding of
/// `z` by the unique `theta > 0` with `sum_i max(|z_i| - theta, 0) = eta`;
/// `theta` is recovered as `(prefix_sum - eta) / rho` in the sorted frame and
/// clamped at 0 for near-boundary inputs.
pub fn project_l1_ball(z: &[f64], eta: f64) -> Result<Vec<f64>> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "l1 ball radius must be positive and finite, got {eta}"
        )));
    }
    let l1: f64 = z.iter().map(|v| v.abs()).sum();
    if l1 <= eta {
        return Ok(z.to_vec());
    }
    let mut mags: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut theta = 0.0;
    for (idx, &m) in mags.iter().enumerate() {
        prefix += m;
        let candidate = (prefix - eta) / (idx + 1) as f64;
        if candidate >= m {
            // entries from here on are fully shrunk; the previous candidate
            // is the threshold
            break;
        }
        theta = candidate;
    }
    let theta = theta.max(0.0);
    Ok(z.iter()
        .map(|&v| v.signum() * (v.abs() - theta).max(0.0))
        .collect())
}

/// Componentwise shrinkage `sgn(z_i) * max(|z_i| - gamma, 0)`.
pub fn soft_threshold(z: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "soft threshold requires gamma >= 0, got {gamma}"
        )));
    }
    Ok(z.iter()
        .map(|&v| v.signum() * (v.abs() - gamma).max(0.0))
        .collect())
}

/// Evaluates `prox_{gamma f*}` through the Moreau identity
/// `prox_{gamma f*}(z) = z - gamma * prox_{f / gamma}(z / gamma)`,
/// where `prox_f(w, alpha)` must evaluate `prox_{alpha f}(w)`.
pub fn prox_conjugate(
    prox_f: impl Fn(&[f64], f64) -> Vec<f64>,
    gamma: f64,
    z: &[f64],
) -> Result<Vec<f64>> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "prox_conjugate requires gamma > 0, got {gamma}"
        )));
    }
    let scaled: Vec<f64> = z.iter().map(|v| v / gamma).collect();
    let inner = prox_f(&scaled, 1.0 / gamma);
    assert_eq!(inner.len(), z.len(), "prox output length mismatch");
    Ok(z.iter().zip(&inner).map(|(a, b)| a - gamma * b).collect())
}
