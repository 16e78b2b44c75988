//! Browser demo: synthesize a cube, corrupt it, watch the solver restore it,
//! and inspect the spatial graph's edge weights, all client-side.
//!
//! The exported surface is a single [`Demo`] object; rendering hands RGBA
//! buffers to JavaScript, which draws them with `putImageData`.

use wasm_bindgen::prelude::*;

use gsstv::cube::{band_mean, HsiCube};
use gsstv::graph::{build_graph, GraphParams};
use gsstv::metrics::{mpsnr, mssim};
use gsstv::noise::{corrupt, oracle_radii, NoiseSpec};
use gsstv::prox::BoxBounds;
use gsstv::solver::{Gamma2Mode, PdsSolver, ProblemSpec, Regularizer, SolverConfig};
use gsstv::synth::{synth_cube, SynthKind};

fn to_js(err: gsstv::Error) -> JsError {
    JsError::new(&err.to_string())
}

/// Grayscale RGBA buffer for one band, canvas row-major.
fn band_rgba(cube: &HsiCube, band: usize) -> Vec<u8> {
    let dims = cube.dims();
    let data = cube.band(band);
    let mut rgba = vec![0u8; 4 * dims.n1 * dims.n2];
    for i in 0..dims.n1 {
        for j in 0..dims.n2 {
            let v = data[j * dims.n1 + i].clamp(0.0, 1.0);
            let g = (v * 255.0).round() as u8;
            let at = 4 * (i * dims.n2 + j);
            rgba[at] = g;
            rgba[at + 1] = g;
            rgba[at + 2] = g;
            rgba[at + 3] = 255;
        }
    }
    rgba
}

/// Three-stop color ramp (dark blue, teal, yellow) for weight maps.
fn ramp(t: f64) -> [u8; 3] {
    let stops = [(68.0, 1.0, 84.0), (38.0, 140.0, 140.0), (253.0, 231.0, 37.0)];
    let t = t.clamp(0.0, 1.0) * 2.0;
    let (lo, hi, f) = if t <= 1.0 {
        (stops[0], stops[1], t)
    } else {
        (stops[1], stops[2], t - 1.0)
    };
    [
        (lo.0 + (hi.0 - lo.0) * f).round() as u8,
        (lo.1 + (hi.1 - lo.1) * f).round() as u8,
        (lo.2 + (hi.2 - lo.2) * f).round() as u8,
    ]
}

#[wasm_bindgen]
pub struct Demo {
    clean: HsiCube,
    noisy: Option<HsiCube>,
    epsilon: f64,
    eta: f64,
    solver: Option<PdsSolver>,
    last_rel_change: f64,
}

#[wasm_bindgen]
impl Demo {
    /// Generates a synthetic clean cube (`blocks`, `gradient`, or `circles`).
    #[wasm_bindgen(constructor)]
    pub fn new(kind: &str, n1: u32, n2: u32, n3: u32, seed: u32) -> Result<Demo, JsError> {
        let kind: SynthKind = kind.parse().map_err(to_js)?;
        let clean = synth_cube(kind, n1 as usize, n2 as usize, n3 as usize, seed as u64)
            .map_err(to_js)?;
        Ok(Demo {
            clean,
            noisy: None,
            epsilon: 0.0,
            eta: 0.0,
            solver: None,
            last_rel_change: f64::INFINITY,
        })
    }

    /// Corrupts the clean cube with mixed noise and records the oracle
    /// constraint radii from the injected components.
    pub fn add_noise(&mut self, sigma: f64, sp_rate: f64, seed: u32) -> Result<(), JsError> {
        let spec = NoiseSpec::new(sigma, sp_rate, seed as u64).map_err(to_js)?;
        let (noisy, n, s_bar) = corrupt(&self.clean, &spec).map_err(to_js)?;
        let (epsilon, eta) = oracle_radii(&n, &s_bar);
        self.noisy = Some(noisy);
        self.epsilon = epsilon;
        self.eta = eta;
        self.solver = None;
        self.last_rel_change = f64::INFINITY;
        Ok(())
    }

    /// Assembles a solver for the current noisy cube.
    pub fn begin_denoise(
        &mut self,
        regularizer: &str,
        sigma_l: f64,
        sigma_x: f64,
    ) -> Result<(), JsError> {
        let noisy = self
            .noisy
            .as_ref()
            .ok_or_else(|| JsError::new("add noise before denoising"))?;
        let regularizer = match regularizer {
            "gsstv" => Regularizer::Gsstv,
            "sstv" => Regularizer::Sstv,
            "gtv" => Regularizer::Gtv,
            other => return Err(JsError::new(&format!("unknown regularizer '{other}'"))),
        };
        let spec = ProblemSpec {
            observation: noisy.clone(),
            epsilon: self.epsilon,
            eta: self.eta,
            bounds: BoxBounds::unit(),
            regularizer,
            graph_params: GraphParams::new(sigma_l, sigma_x).map_err(to_js)?,
        };
        let config = SolverConfig {
            gamma2_mode: Gamma2Mode::AutoPowerIteration,
            ..SolverConfig::default()
        };
        self.solver = Some(PdsSolver::new(&spec, &config).map_err(to_js)?);
        self.last_rel_change = f64::INFINITY;
        Ok(())
    }

    /// Runs a batch of iterations; returns the latest relative change so the
    /// caller can animate progress and decide when to stop.
    pub fn advance(&mut self, steps: u32) -> Result<f64, JsError> {
        let solver = self
            .solver
            .as_mut()
            .ok_or_else(|| JsError::new("call begin_denoise first"))?;
        for _ in 0..steps {
            self.last_rel_change = solver.step().map_err(to_js)?;
        }
        Ok(self.last_rel_change)
    }

    pub fn iterations(&self) -> u32 {
        self.solver.as_ref().map_or(0, |s| s.state().iter as u32)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Canvas width (grid columns).
    pub fn width(&self) -> u32 {
        self.clean.dims().n2 as u32
    }

    /// Canvas height (grid rows).
    pub fn height(&self) -> u32 {
        self.clean.dims().n1 as u32
    }

    pub fn bands(&self) -> u32 {
        self.clean.dims().n3 as u32
    }

    /// RGBA grayscale of one band of `clean`, `noisy`, or `restored`.
    pub fn render_band(&self, which: &str, band: u32) -> Result<Vec<u8>, JsError> {
        let band = band as usize;
        if band >= self.clean.dims().n3 {
            return Err(JsError::new("band out of range"));
        }
        match which {
            "clean" => Ok(band_rgba(&self.clean, band)),
            "noisy" => self
                .noisy
                .as_ref()
                .map(|c| band_rgba(c, band))
                .ok_or_else(|| JsError::new("no noisy cube yet")),
            "restored" => self
                .solver
                .as_ref()
                .map(|s| band_rgba(&s.solution().0, band))
                .ok_or_else(|| JsError::new("no solve in progress")),
            other => Err(JsError::new(&format!("unknown source '{other}'"))),
        }
    }

    /// `[mpsnr_db, mssim]` of the noisy or restored cube against the clean
    /// one.
    pub fn metrics_against_clean(&self, which: &str) -> Result<Vec<f64>, JsError> {
        let cube = match which {
            "noisy" => self
                .noisy
                .clone()
                .ok_or_else(|| JsError::new("no noisy cube yet"))?,
            "restored" => self
                .solver
                .as_ref()
                .map(|s| s.solution().0)
                .ok_or_else(|| JsError::new("no solve in progress"))?,
            other => return Err(JsError::new(&format!("unknown source '{other}'"))),
        };
        Ok(vec![
            mpsnr(&cube, &self.clean).map_err(to_js)?,
            mssim(&cube, &self.clean).map_err(to_js)?,
        ])
    }

    /// RGBA map of the mean incident edge weight per pixel for the graph
    /// built from the current guide image (noisy if present, else clean).
    pub fn weight_map(&self, sigma_l: f64, sigma_x: f64) -> Result<Vec<u8>, JsError> {
        let source = self.noisy.as_ref().unwrap_or(&self.clean);
        let guide = band_mean(source);
        let params = GraphParams::new(sigma_l, sigma_x).map_err(to_js)?;
        let graph = build_graph(&guide, &params).map_err(to_js)?;
        let (n1, n2) = (guide.n1(), guide.n2());
        let mut sums = vec![0.0f64; n1 * n2];
        let mut counts = vec![0u32; n1 * n2];
        for (&(p, q), &w) in graph.edges().iter().zip(graph.weights()) {
            sums[p] += w;
            sums[q] += w;
            counts[p] += 1;
            counts[q] += 1;
        }
        let mut rgba = vec![0u8; 4 * n1 * n2];
        for i in 0..n1 {
            for j in 0..n2 {
                let p = j * n1 + i;
                let mean = if counts[p] > 0 {
                    sums[p] / counts[p] as f64
                } else {
                    0.0
                };
                let [r, g, b] = ramp(mean);
                let at = 4 * (i * n2 + j);
                rgba[at] = r;
                rgba[at + 1] = g;
                rgba[at + 2] = b;
                rgba[at + 3] = 255;
            }
        }
        Ok(rgba)
    }
}
