//! Seeded synthetic test cubes.
//!
//! Three families: `blocks` (piecewise-constant regions with smooth spectra,
//! edge-rich), `gradient` (spatially smooth ramp), and `circles` (small disc
//! structures on a flat background). All values land in `[0, 1]` and a seed
//! pins the output exactly.

use crate::cube::HsiCube;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthKind {
    Blocks,
    Gradient,
    Circles,
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blocks" => Ok(SynthKind::Blocks),
            "gradient" => Ok(SynthKind::Gradient),
            "circles" => Ok(SynthKind::Circles),
            other => Err(Error::InvalidArgument(format!(
                "unknown synthetic kind '{other}' (expected blocks|gradient|circles)"
            ))),
        }
    }
}

/// Generates a synthetic cube of the requested kind.
pub fn synth_cube(kind: SynthKind, n1: usize, n2: usize, n3: usize, seed: u64) -> Result<HsiCube> {
    match kind {
        SynthKind::Blocks => blocks(n1, n2, n3, seed),
        SynthKind::Gradient => gradient(n1, n2, n3),
        SynthKind::Circles => circles(n1, n2, n3, seed),
    }
}

/// A smooth per-region spectrum inside [0.1, 0.9]: an offset sinusoid with a
/// seeded base level, amplitude, frequency, and phase.
fn spectrum(rng: &mut SplitMix64, n3: usize) -> Vec<f64> {
    let base = 0.25 + 0.5 * rng.next_f64();
    let amp = 0.05 + 0.10 * rng.next_f64();
    let freq = 0.5 + 1.5 * rng.next_f64();
    let phase = 2.0 * std::f64::consts::PI * rng.next_f64();
    (0..n3)
        .map(|k| {
            let t = k as f64 / n3 as f64;
            base + amp * (2.0 * std::f64::consts::PI * freq * t + phase).sin()
        })
        .collect()
}

fn require_min_dims(n1: usize, n2: usize, n3: usize, kind: &str) -> Result<()> {
    if n1 < 2 || n2 < 2 || n3 < 2 {
        return Err(Error::InvalidArgument(format!(
            "{kind} needs every dimension >= 2, got {n1}x{n2}x{n3}"
        )));
    }
    Ok(())
}

fn blocks(n1: usize, n2: usize, n3: usize, seed: u64) -> Result<HsiCube> {
    require_min_dims(n1, n2, n3, "blocks")?;
    let mut rng = SplitMix64::new(seed);

    // 2-4 cuts per axis at distinct interior positions
    let cuts = |n: usize, rng: &mut SplitMix64| -> Vec<usize> {
        let wanted = 2 + rng.next_below(3) as usize;
        let mut cs: Vec<usize> = (0..wanted)
            .map(|_| 1 + rng.next_below((n - 1) as u64) as usize)
            .collect();
        cs.sort_unstable();
        cs.dedup();
        cs.push(n);
        cs
    };
    let row_cuts = cuts(n1, &mut rng);
    let col_cuts = cuts(n2, &mut rng);

    let region_of = |pos: usize, cs: &[usize]| cs.iter().position(|&c| pos < c).unwrap();
    let regions = row_cuts.len() * col_cuts.len();
    let spectra: Vec<Vec<f64>> = (0..regions).map(|_| spectrum(&mut rng, n3)).collect();

    HsiCube::from_fn(n1, n2, n3, |i, j, k| {
        let r = region_of(i, &row_cuts) * col_cuts.len() + region_of(j, &col_cuts);
        spectra[r][k]
    })
}

fn gradient(n1: usize, n2: usize, n3: usize) -> Result<HsiCube> {
    if n1 == 0 || n2 == 0 || n3 == 0 {
        return Err(Error::InvalidArgument("dims must be positive".into()));
    }
    let di = (n1 - 1).max(1) as f64;
    let dj = (n2 - 1).max(1) as f64;
    let dk = (n3 - 1).max(1) as f64;
    HsiCube::from_fn(n1, n2, n3, |i, j, k| {
        let spatial = 0.5 * (i as f64 / di + j as f64 / dj);
        let spectral = 0.6 + 0.4 * (std::f64::consts::PI * k as f64 / dk).cos();
        0.1 + 0.8 * spatial * 0.5 * spectral
    })
}

fn circles(n1: usize, n2: usize, n3: usize, seed: u64) -> Result<HsiCube> {
    require_min_dims(n1, n2, n3, "circles")?;
    let mut rng = SplitMix64::new(seed);
    let background = spectrum(&mut rng, n3);

    let count = ((n1 * n2) / 96).clamp(3, 24);
    let max_radius = (n1.min(n2) as f64 / 4.0).max(1.5);
    struct Disc {
        ci: f64,
        cj: f64,
        r2: f64,
        spectrum: Vec<f64>,
    }
    let discs: Vec<Disc> = (0..count)
        .map(|_| {
            let ci = rng.next_f64() * (n1 as f64 - 1.0);
            let cj = rng.next_f64() * (n2 as f64 - 1.0);
            let r = 1.5 + rng.next_f64() * (max_radius - 1.5).max(0.0);
            Disc {
                ci,
                cj,
                r2: r * r,
                spectrum: spectrum(&mut rng, n3),
            }
        })
        .collect();

    HsiCube::from_fn(n1, n2, n3, |i, j, k| {
        for disc in &discs {
            let di = i as f64 - disc.ci;
            let dj = j as f64 - disc.cj;
            if di * di + dj * dj <= disc.r2 {
                return disc.spectrum[k];
            }
        }
        background[k]
    })
}
