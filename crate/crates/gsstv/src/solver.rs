//! Primal-dual splitting solver for the constrained denoising problem.
//!
//! The problem minimizes the `l1` norm of a regularizer output over cubes
//! `u` subject to three constraints: `u + s` stays inside an `l2` ball of
//! radius `epsilon` around the observation, the sparse component `s` stays
//! inside an `l1` ball of radius `eta`, and `u` stays inside a box. The
//! iteration alternates projections on the primal pair `(u, s)` with
//! conjugate proximal steps on the dual pair `(y1, y2)`, using over-relaxed
//! primal points for the dual ascent. No matrix is inverted anywhere.

use std::io::Write;

use crate::cube::{band_mean, CubeDims, HsiCube};
use crate::error::{Error, Result};
use crate::graph::{build_graph, GraphParams};
use crate::linops::{
    gsstv_operator, gtv_operator, operator_norm_sq_estimate, problem_norm_sq_from_reg,
    sstv_operator, stacked_problem_operator, LinearOperator, ProblemOperator, NORM_EST_ITERS,
    NORM_EST_TOL,
};
use crate::prox::{
    project_box_in_place, project_l1_ball, project_l2_ball, prox_conjugate, soft_threshold,
    BoxBounds,
};

/// Which difference operator drives the regularization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regularizer {
    /// Graph-weighted spatial difference of the spectral difference.
    Gsstv,
    /// Axis-aligned spatial differences of the spectral difference.
    Sstv,
    /// Graph-weighted spatial difference per band, no spectral coupling.
    Gtv,
}

impl Regularizer {
    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::Gsstv => "gsstv",
            Regularizer::Sstv => "sstv",
            Regularizer::Gtv => "gtv",
        }
    }
}

/// The constrained denoising problem: observation, constraint radii, box
/// bounds, and the regularizer choice.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub observation: HsiCube,
    /// Data-fidelity `l2` ball radius; 0 means exact fit.
    pub epsilon: f64,
    /// Sparse-noise `l1` ball radius; 0 pins `s` to zero.
    pub eta: f64,
    pub bounds: BoxBounds,
    pub regularizer: Regularizer,
    /// Graph weight scales; ignored by the Sstv regularizer.
    pub graph_params: GraphParams,
}

impl ProblemSpec {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eta must be >= 0, got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// How the second step size is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gamma2Mode {
    /// `gamma2 = 1 / (1800 * gamma1)`, valid for any instance because the
    /// operator norm is bounded well below 1800.
    PaperConstant,
    /// `gamma2 = 0.99 / (gamma1 * lambda_estimate)` from power iteration.
    AutoPowerIteration,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub gamma1: f64,
    pub gamma2_mode: Gamma2Mode,
    pub max_iter: usize,
    /// Relative-change stopping threshold on `u`.
    pub tol: f64,
    /// Seed for the power-iteration start vector.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma1: 0.1,
            gamma2_mode: Gamma2Mode::AutoPowerIteration,
            max_iter: 20_000,
            tol: 1e-4,
            seed: 0,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.gamma1.is_finite() && self.gamma1 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma1 must be positive, got {}",
                self.gamma1
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Primal and dual iterates plus the relative-change history.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub u: Vec<f64>,
    pub s: Vec<f64>,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    pub iter: usize,
    pub rel_change_history: Vec<f64>,
}

/// Outcome summary of a solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub final_rel_change: f64,
    /// `l1` norm of the regularizer output at the final `u`.
    pub objective: f64,
    /// `|u + s - v|_2`, to compare against `epsilon`.
    pub fidelity_residual: f64,
    /// `|s|_1`, to compare against `eta`.
    pub sparsity_residual: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Safety-factored power-iteration estimate of the operator norm squared.
    pub lambda_estimate: f64,
}

/// The four proximal maps of the splitting, wired to the problem data.
pub struct ProxBundle {
    bounds: BoxBounds,
    eta: f64,
    epsilon: f64,
    v: Vec<f64>,
}

impl ProxBundle {
    /// Box projection for the `u` block.
    pub fn primal_u(&self, z: &mut [f64]) {
        project_box_in_place(z, &self.bounds);
    }

    /// `l1`-ball projection for the `s` block; radius 0 pins `s` to zero.
    pub fn primal_s(&self, z: &[f64]) -> Vec<f64> {
        if self.eta == 0.0 {
            vec![0.0; z.len()]
        } else {
            project_l1_ball(z, self.eta).expect("eta validated positive")
        }
    }

    /// Conjugate prox of the `l1` norm for the `y1` block (Moreau identity
    /// around soft-thresholding).
    pub fn dual_y1(&self, z: &[f64], gamma2: f64) -> Vec<f64> {
        prox_conjugate(
            |w, alpha| soft_threshold(w, alpha).expect("alpha positive"),
            gamma2,
            z,
        )
        .expect("gamma2 validated positive")
    }

    /// Conjugate prox of the `l2`-ball indicator for the `y2` block.
    pub fn dual_y2(&self, z: &[f64], gamma2: f64) -> Vec<f64> {
        prox_conjugate(
            |w, _| project_l2_ball(w, &self.v, self.epsilon),
            gamma2,
            z,
        )
        .expect("gamma2 validated positive")
    }

    // In-place variants of the conjugate steps for the solver's hot loop;
    // operation order matches the allocating versions bit for bit.

    fn dual_y1_in_place(&self, z: &mut [f64], gamma2: f64) {
        let alpha = 1.0 / gamma2;
        for v in z {
            let w = *v / gamma2;
            let shrunk = w.signum() * (w.abs() - alpha).max(0.0);
            *v -= gamma2 * shrunk;
        }
    }

    fn dual_y2_in_place(&self, z: &mut [f64], gamma2: f64) {
        let dist = z
            .iter()
            .zip(&self.v)
            .map(|(&zi, &vi)| {
                let d = zi / gamma2 - vi;
                d * d
            })
            .sum::<f64>()
            .sqrt();
        if dist <= self.epsilon {
            for zi in z.iter_mut() {
                let inner = *zi / gamma2;
                *zi -= gamma2 * inner;
            }
        } else {
            let scale = self.epsilon / dist;
            for (zi, &vi) in z.iter_mut().zip(&self.v) {
                let inner = vi + scale * (*zi / gamma2 - vi);
                *zi -= gamma2 * inner;
            }
        }
    }

    pub fn observation(&self) -> &[f64] {
        &self.v
    }
}

/// Builds the stacked problem operator and the proximal maps for a problem.
///
/// For the graph-based regularizers the spatial graph is built from the
/// band mean of the observation and frozen for the whole solve.
pub fn assemble(spec: &ProblemSpec) -> Result<(ProblemOperator, ProxBundle)> {
    spec.validate()?;
    let dims = spec.observation.dims();
    let reg: Box<dyn LinearOperator> = match spec.regularizer {
        Regularizer::Gsstv => {
            let guide = band_mean(&spec.observation);
            let graph = build_graph(&guide, &spec.graph_params)?;
            Box::new(gsstv_operator(graph, dims)?)
        }
        Regularizer::Sstv => Box::new(sstv_operator(dims)),
        Regularizer::Gtv => {
            let guide = band_mean(&spec.observation);
            let graph = build_graph(&guide, &spec.graph_params)?;
            Box::new(gtv_operator(graph, dims)?)
        }
    };
    let op = stacked_problem_operator(reg);
    let bundle = ProxBundle {
        bounds: spec.bounds,
        eta: spec.eta,
        epsilon: spec.epsilon,
        v: spec.observation.data().to_vec(),
    };
    Ok((op, bundle))
}

/// Primal-dual splitting engine over an assembled problem.
pub struct PdsSolver {
    op: ProblemOperator,
    proxes: ProxBundle,
    dims: CubeDims,
    gamma1: f64,
    gamma2: f64,
    lambda_estimate: f64,
    tol: f64,
    max_iter: usize,
    state: SolverState,
    scratch: StepScratch,
}

/// Reusable per-iteration buffers; the iteration allocates nothing except
/// inside the sort-based `l1` projection.
struct StepScratch {
    grad_u: Vec<f64>,
    u_new: Vec<f64>,
    s_shift: Vec<f64>,
    u_bar: Vec<f64>,
    reg_out: Vec<f64>,
    y1_shift: Vec<f64>,
    y2_shift: Vec<f64>,
}

impl StepScratch {
    fn for_dims(n: usize, reg_out_len: usize) -> Self {
        Self {
            grad_u: vec![0.0; n],
            u_new: vec![0.0; n],
            s_shift: vec![0.0; n],
            u_bar: vec![0.0; n],
            reg_out: vec![0.0; reg_out_len],
            y1_shift: vec![0.0; reg_out_len],
            y2_shift: vec![0.0; n],
        }
    }
}

impl PdsSolver {
    /// Assembles the problem, estimates the operator norm, fixes the step
    /// sizes, and initializes `u = v`, `s = 0`, `y = 0`.
    pub fn new(spec: &ProblemSpec, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let (op, proxes) = assemble(spec)?;
        let lambda = protected_norm_estimate(&op, config.seed);
        let gamma2 = gamma2_for(config, lambda);
        Self::with_step_sizes(op, proxes, spec, config, gamma2, lambda)
    }

    fn with_step_sizes(
        op: ProblemOperator,
        proxes: ProxBundle,
        spec: &ProblemSpec,
        config: &SolverConfig,
        gamma2: f64,
        lambda_estimate: f64,
    ) -> Result<Self> {
        let product = config.gamma1 * gamma2 * lambda_estimate;
        if product >= 1.0 {
            return Err(Error::StepSize { product });
        }
        let n = op.primal_len();
        let state = SolverState {
            u: spec.observation.data().to_vec(),
            s: vec![0.0; n],
            y1: vec![0.0; op.reg_out_len()],
            y2: vec![0.0; n],
            iter: 0,
            rel_change_history: Vec::new(),
        };
        let scratch = StepScratch::for_dims(n, op.reg_out_len());
        Ok(Self {
            op,
            proxes,
            dims: spec.observation.dims(),
            gamma1: config.gamma1,
            gamma2,
            lambda_estimate,
            tol: config.tol,
            max_iter: config.max_iter,
            state,
            scratch,
        })
    }

    /// Re-assembles the problem (new radii, weights, or observation of the
    /// same shape) while keeping the current primal and dual iterates, so a
    /// parameter sweep can restart from the previous solution.
    pub fn warm_restart(&mut self, spec: &ProblemSpec, config: &SolverConfig) -> Result<()> {
        config.validate()?;
        let (op, proxes) = assemble(spec)?;
        if op.primal_len() != self.op.primal_len() || op.reg_out_len() != self.op.reg_out_len() {
            return Err(Error::DimMismatch {
                what: "warm restart problem shape",
                expected: self.op.primal_len() + self.op.reg_out_len(),
                actual: op.primal_len() + op.reg_out_len(),
            });
        }
        let lambda = protected_norm_estimate(&op, config.seed);
        let gamma2 = gamma2_for(config, lambda);
        let product = config.gamma1 * gamma2 * lambda;
        if product >= 1.0 {
            return Err(Error::StepSize { product });
        }
        self.op = op;
        self.proxes = proxes;
        self.gamma1 = config.gamma1;
        self.gamma2 = gamma2;
        self.lambda_estimate = lambda;
        self.tol = config.tol;
        self.max_iter = config.max_iter;
        self.state.iter = 0;
        self.state.rel_change_history.clear();
        Ok(())
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn lambda_estimate(&self) -> f64 {
        self.lambda_estimate
    }

    /// One full primal-dual iteration. Returns the relative change of `u`.
    pub fn step(&mut self) -> Result<f64> {
        Ok(self.step_detailed()?.0)
    }

    /// One iteration, returning `(relative change of u, relative change of
    /// the stacked dual pair)`.
    pub fn step_detailed(&mut self) -> Result<(f64, f64)> {
        let gamma1 = self.gamma1;
        let gamma2 = self.gamma2;
        let state = &mut self.state;
        let scratch = &mut self.scratch;

        // u update: box projection of u - gamma1 (R^T y1 + y2)
        self.op.reg().adjoint_into(&state.y1, &mut scratch.grad_u);
        for ((out, (&u, &g)), &y) in scratch
            .u_new
            .iter_mut()
            .zip(state.u.iter().zip(&scratch.grad_u))
            .zip(&state.y2)
        {
            *out = u - gamma1 * (g + y);
        }
        self.proxes.primal_u(&mut scratch.u_new);

        // s update: l1-ball projection of s - gamma1 y2
        for (out, (&s, &y)) in scratch
            .s_shift
            .iter_mut()
            .zip(state.s.iter().zip(&state.y2))
        {
            *out = s - gamma1 * y;
        }
        let s_new = self.proxes.primal_s(&scratch.s_shift);

        if scratch.u_new.iter().chain(&s_new).any(|v| v.is_nan()) {
            return Err(Error::NumericalFailure {
                iteration: state.iter + 1,
            });
        }

        // dual ascent at the over-relaxed points 2u+ - u, 2s+ - s
        for (out, (&new, &old)) in scratch
            .u_bar
            .iter_mut()
            .zip(scratch.u_new.iter().zip(&state.u))
        {
            *out = 2.0 * new - old;
        }
        self.op.reg().apply_into(&scratch.u_bar, &mut scratch.reg_out);
        for (out, (&y, &r)) in scratch
            .y1_shift
            .iter_mut()
            .zip(state.y1.iter().zip(&scratch.reg_out))
        {
            *out = y + gamma2 * r;
        }
        for (idx, out) in scratch.y2_shift.iter_mut().enumerate() {
            let s_bar = 2.0 * s_new[idx] - state.s[idx];
            *out = state.y2[idx] + gamma2 * (scratch.u_bar[idx] + s_bar);
        }

        // conjugate prox steps (Moreau identity around soft-thresholding and
        // the l2-ball projection)
        self.proxes.dual_y1_in_place(&mut scratch.y1_shift, gamma2);
        self.proxes.dual_y2_in_place(&mut scratch.y2_shift, gamma2);

        if scratch
            .y1_shift
            .iter()
            .chain(&scratch.y2_shift)
            .any(|v| v.is_nan())
        {
            return Err(Error::NumericalFailure {
                iteration: state.iter + 1,
            });
        }

        let diff = norm2_diff(&scratch.u_new, &state.u);
        let denom = norm2(&state.u);
        let rel = if denom < 1e-15 { diff } else { diff / denom };

        let dual_diff_sq = norm2_diff(&scratch.y1_shift, &state.y1).powi(2)
            + norm2_diff(&scratch.y2_shift, &state.y2).powi(2);
        let dual_norm_sq = norm2(&scratch.y1_shift).powi(2) + norm2(&scratch.y2_shift).powi(2);
        let dual_diff = dual_diff_sq.sqrt();
        let dual_denom = dual_norm_sq.sqrt();
        let rel_dual = if dual_denom < 1e-15 {
            dual_diff
        } else {
            dual_diff / dual_denom
        };

        std::mem::swap(&mut state.u, &mut scratch.u_new);
        state.s = s_new;
        std::mem::swap(&mut state.y1, &mut scratch.y1_shift);
        std::mem::swap(&mut state.y2, &mut scratch.y2_shift);
        state.iter += 1;
        state.rel_change_history.push(rel);
        Ok((rel, rel_dual))
    }

    /// Iterates until the stopping test passes or `max_iter` is reached.
    /// Non-convergence is reported in the result, not an error.
    ///
    /// The stopping test requires the relative changes of `u` *and* of the
    /// dual pair below `tol`, plus the fidelity residual inside the epsilon
    /// band `epsilon * (1 + tol)`. The box and `l1` constraints hold at
    /// every iteration by construction, but the fidelity constraint is only
    /// enforced through the dual variable, and a primal-only change test can
    /// fire while the duals are still ramping up (immediately so with very
    /// asymmetric step sizes). For `epsilon = 0` the band degenerates to
    /// `tol * |v|`.
    pub fn run(&mut self) -> Result<SolveReport> {
        self.run_internal(None)
    }

    /// Like [`run`](Self::run), writing one structured record per iteration.
    pub fn run_logged(&mut self, sink: &mut dyn Write) -> Result<SolveReport> {
        self.run_internal(Some(sink))
    }

    fn fidelity_bound(&self) -> f64 {
        if self.proxes.epsilon > 0.0 {
            self.proxes.epsilon * (1.0 + self.tol)
        } else {
            self.tol * norm2(self.proxes.observation())
        }
    }

    fn fidelity_residual(&self) -> f64 {
        self.state
            .u
            .iter()
            .zip(&self.state.s)
            .zip(self.proxes.observation())
            .map(|((&u, &s), &v)| {
                let d = u + s - v;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    fn run_internal(&mut self, mut sink: Option<&mut dyn Write>) -> Result<SolveReport> {
        let feasibility_bound = self.fidelity_bound();
        let mut converged = false;
        let mut rel = f64::INFINITY;
        while self.state.iter < self.max_iter {
            let (rel_u, rel_dual) = self.step_detailed()?;
            rel = rel_u;
            if let Some(out) = sink.as_deref_mut() {
                let partial = self.report_core(rel, converged);
                writeln!(
                    out,
                    "iter={} objective={:.6e} rel_change={:.6e} dual_change={:.6e} fidelity={:.6e} sparsity={:.6e}",
                    self.state.iter,
                    partial.objective,
                    rel,
                    rel_dual,
                    partial.fidelity_residual,
                    partial.sparsity_residual
                )?;
            }
            if rel < self.tol
                && rel_dual < self.tol
                && self.fidelity_residual() <= feasibility_bound
            {
                converged = true;
                break;
            }
        }
        Ok(self.report_core(rel, converged))
    }

    fn report_core(&self, rel: f64, converged: bool) -> SolveReport {
        let reg_out = self.op.reg().apply(&self.state.u);
        let objective: f64 = reg_out.iter().map(|v| v.abs()).sum();
        let fidelity = self.fidelity_residual();
        let sparsity: f64 = self.state.s.iter().map(|v| v.abs()).sum();
        SolveReport {
            iterations: self.state.iter,
            converged,
            final_rel_change: rel,
            objective,
            fidelity_residual: fidelity,
            sparsity_residual: sparsity,
            epsilon: self.proxes.epsilon,
            eta: self.proxes.eta,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            lambda_estimate: self.lambda_estimate,
        }
    }

    /// The current `(u, s)` pair as cubes.
    pub fn solution(&self) -> (HsiCube, HsiCube) {
        let d = self.dims;
        let u = HsiCube::new(d.n1, d.n2, d.n3, self.state.u.clone())
            .expect("iterates stay finite");
        let s = HsiCube::new(d.n1, d.n2, d.n3, self.state.s.clone())
            .expect("iterates stay finite");
        (u, s)
    }
}

/// Cold-start convenience: assemble, run, and return `(u_hat, s_hat, report)`.
pub fn solve(spec: &ProblemSpec, config: &SolverConfig) -> Result<(HsiCube, HsiCube, SolveReport)> {
    let mut solver = PdsSolver::new(spec, config)?;
    let report = solver.run()?;
    let (u, s) = solver.solution();
    Ok((u, s, report))
}

/// Norm estimate for the step-size rule: power iteration on the full problem
/// operator, cross-checked against the closed-form map of the regularizer
/// block's own estimate. Taking the max guards against either estimate
/// stalling low.
fn protected_norm_estimate(op: &ProblemOperator, seed: u64) -> f64 {
    let direct = operator_norm_sq_estimate(op, NORM_EST_ITERS, NORM_EST_TOL, seed);
    let mu = operator_norm_sq_estimate(op.reg(), NORM_EST_ITERS, NORM_EST_TOL, seed);
    direct.max(problem_norm_sq_from_reg(mu))
}

fn gamma2_for(config: &SolverConfig, lambda: f64) -> f64 {
    match config.gamma2_mode {
        Gamma2Mode::PaperConstant => 1.0 / (1800.0 * config.gamma1),
        Gamma2Mode::AutoPowerIteration => 0.99 / (config.gamma1 * lambda.max(f64::EPSILON)),
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn norm2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
