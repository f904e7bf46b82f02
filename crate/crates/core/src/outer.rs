//! Inexact augmented Lagrangian outer loop and the `λ` homotopy.

use alloc::vec::Vec;

use crate::error::Error;
use crate::geometry::{nearest_vertex, snap_to_qce};
use crate::inner::{bsum_solve, residuals, BsumOptions, SolverState, SpectralBound, StepRecord};
use crate::linalg::norm_sq;
use crate::metrics::{beampattern, beampattern_mse, check_feasibility, FeasibilityReport};
use crate::model::{Instance, RealWaveform};

/// Weight `κ` applied to the quartic beampattern objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveScale {
    /// `κ = 1/(QT²)`: the objective equals the beampattern MSE at the optimal scaling.
    Mse,
    /// `κ = 1`.
    Raw,
    /// Explicit `κ > 0`.
    Custom(f64),
}

impl ObjectiveScale {
    /// Resolved weight for `inst`.
    pub fn value(&self, inst: &Instance) -> f64 {
        match *self {
            Self::Mse => {
                let t = inst.block_len() as f64;
                1.0 / (inst.n_angles() as f64 * t * t)
            }
            Self::Raw => 1.0,
            Self::Custom(k) => k,
        }
    }
}

/// Outer-loop parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmParams {
    /// Initial CI penalty is `rho_scale·√λ`.
    pub rho_scale: f64,
    /// Beam penalty as a fraction of the CI penalty.
    pub rho_ratio: f64,
    /// Box `[-mu_bound, mu_bound]` for the CI multipliers.
    pub mu_bound: f64,
    /// Box `[-nu_bound, nu_bound]` for the beam multipliers.
    pub nu_bound: f64,
    /// Penalty growth factor.
    pub tau: f64,
    /// Required contraction of the scaled violation before penalties stay put.
    pub delta: f64,
    /// Inner tolerance at outer iteration `m` (from 1) is `eps_scale/m`.
    pub eps_scale: f64,
    /// Outer iteration cap.
    pub max_outer: usize,
    /// Stopping tolerance; `None` means `1e-3·√T`.
    pub stop_tol: Option<f64>,
    /// Sweep cap per subproblem.
    pub inner_max_iter: usize,
    /// Weight on the beampattern objective.
    pub objective_scale: ObjectiveScale,
    /// Keep per-sweep records in the reports.
    pub record_trace: bool,
}

impl Default for AlmParams {
    fn default() -> Self {
        Self {
            rho_scale: 0.1,
            rho_ratio: 1.0 / 3.0,
            mu_bound: 1e3,
            nu_bound: 1e3,
            tau: 1.01,
            delta: 0.95,
            eps_scale: 1.0,
            max_outer: 500,
            stop_tol: None,
            inner_max_iter: 50,
            objective_scale: ObjectiveScale::Mse,
            record_trace: false,
        }
    }
}

impl AlmParams {
    /// Checks every parameter range.
    pub fn validate(&self) -> crate::Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.rho_scale) || !positive(self.rho_ratio) {
            return Err(Error::Config("penalty scale and ratio must be positive"));
        }
        if !positive(self.mu_bound) || !positive(self.nu_bound) {
            return Err(Error::Config("multiplier bounds must be positive"));
        }
        if !(self.tau > 1.0) || !self.tau.is_finite() {
            return Err(Error::Config("penalty growth tau must exceed 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config("delta must lie in (0, 1)"));
        }
        if !positive(self.eps_scale) {
            return Err(Error::Config("inner tolerance scale must be positive"));
        }
        if self.max_outer == 0 || self.inner_max_iter == 0 {
            return Err(Error::Config("iteration caps must be positive"));
        }
        if self.stop_tol.is_some_and(|t| !(t >= 0.0)) {
            return Err(Error::Config("stopping tolerance must be nonnegative"));
        }
        if let ObjectiveScale::Custom(k) = self.objective_scale {
            if !positive(k) {
                return Err(Error::Config("objective scale must be positive"));
            }
        }
        Ok(())
    }

    /// Resolved stopping tolerance for a block of length `block_len`.
    pub fn tolerance(&self, block_len: usize) -> f64 {
        self.stop_tol
            .unwrap_or_else(|| 1e-3 * libm::sqrt(block_len as f64))
    }
}

/// Homotopy parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyParams {
    /// First penalty weight.
    pub lambda0: f64,
    /// Multiplicative increase between stages.
    pub growth: f64,
    /// Stop once every sample is within `vertex_tol·η` of a vertex.
    pub vertex_tol: f64,
    /// Stage cap.
    pub max_stages: usize,
}

impl HomotopyParams {
    /// Checks the parameter ranges for an alphabet of `levels` phases.
    pub fn validate(&self, levels: usize) -> crate::Result<()> {
        if !(self.lambda0 > 0.0) || !self.lambda0.is_finite() {
            return Err(Error::Config("lambda0 must be positive"));
        }
        if !(self.growth > 1.0) || !self.growth.is_finite() {
            return Err(Error::Config("homotopy growth must exceed 1"));
        }
        let cap = libm::sin(core::f64::consts::PI / levels.max(2) as f64);
        if !(self.vertex_tol > 0.0 && self.vertex_tol < cap) {
            return Err(Error::Config("vertex tolerance must lie in (0, sin(pi/L))"));
        }
        if self.max_stages == 0 {
            return Err(Error::Config("at least one homotopy stage is required"));
        }
        Ok(())
    }
}

impl Default for HomotopyParams {
    fn default() -> Self {
        Self {
            lambda0: 1e-2,
            growth: 30.0,
            vertex_tol: 1e-3,
            max_stages: 12,
        }
    }
}

/// Squared residual norms `‖r_C‖²`, `‖r_A‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    /// `‖Cx - z - b‖²`.
    pub ci_sq: f64,
    /// `‖Ax - w‖²`.
    pub beam_sq: f64,
}

impl Violation {
    /// Residual norms at `state`.
    pub fn at(state: &SolverState, inst: &Instance) -> Self {
        let (rc, ra) = residuals(state, inst);
        Self {
            ci_sq: norm_sq(&rc),
            beam_sq: norm_sq(&ra),
        }
    }

    /// `sqrt(ρ_μ‖r_C‖² + ρ_ν‖r_A‖²)`.
    pub fn scaled(&self, rho_mu: f64, rho_nu: f64) -> f64 {
        libm::sqrt(rho_mu * self.ci_sq + rho_nu * self.beam_sq)
    }
}

/// First-order multiplier step `μ += ρ_μ r_C`, `ν += ρ_ν r_A`, clamped to the boxes.
pub fn update_multipliers(state: &mut SolverState, rc: &[f64], ra: &[f64], params: &AlmParams) {
    for (m, r) in state.mu.iter_mut().zip(rc) {
        *m = (*m + state.rho_mu * r).clamp(-params.mu_bound, params.mu_bound);
    }
    for (n, r) in state.nu.iter_mut().zip(ra) {
        *n = (*n + state.rho_nu * r).clamp(-params.nu_bound, params.nu_bound);
    }
}

/// Multiplies both penalties by `τ` unless the scaled violation shrank by
/// at least the factor `δ`. Both violations are scaled with the current
/// penalties. Returns whether the penalties grew.
pub fn update_penalties(state: &mut SolverState, current: Violation, previous: Violation, tau: f64, delta: f64) -> bool {
    let now = current.scaled(state.rho_mu, state.rho_nu);
    let before = previous.scaled(state.rho_mu, state.rho_nu);
    if now >= delta * before {
        state.rho_mu *= tau;
        state.rho_nu *= tau;
        true
    } else {
        false
    }
}

/// One row of the convergence history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterRecord {
    /// Outer iteration index within its stage, from 1.
    pub m: usize,
    /// Augmented Lagrangian value after the subproblem solve.
    pub objective: f64,
    /// `‖r_C‖`.
    pub viol_ci: f64,
    /// `‖r_A‖`.
    pub viol_beam: f64,
    /// Final subproblem certificate `‖e_x‖ + ‖e_w‖`.
    pub cert_norm: f64,
    /// CI penalty used for the subproblem.
    pub rho: f64,
    /// Sweeps spent on the subproblem.
    pub inner_iters: usize,
    /// Whether the subproblem reached its tolerance.
    pub certified: bool,
    /// Penalty weight `λ` of the stage.
    pub lambda: f64,
}

/// Outcome of one ALM run.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmReport {
    /// Per-iteration history.
    pub rows: Vec<OuterRecord>,
    /// Whether the stopping rule fired before the iteration cap.
    pub converged: bool,
    /// Stopping measure `max{e, ‖r_C‖, ‖r_A‖}` of the returned iterate.
    pub stop_measure: f64,
    /// Sweeps where `L_m` rose beyond the monotonicity slack.
    pub monotonicity_violations: usize,
    /// Sweeps whose decrease fell short of the majorizer guarantee.
    pub decrease_violations: usize,
    /// Every sweep, when `record_trace` is set.
    pub trace: Vec<StepRecord>,
}

/// Initial penalties `(ρ_μ, ρ_ν)` for weight `lambda`.
pub fn initial_penalties(lambda: f64, params: &AlmParams) -> (f64, f64) {
    let rho = params.rho_scale * libm::sqrt(lambda.max(0.0));
    (rho, params.rho_ratio * rho)
}

/// Runs the ALM on `state` with the penalties and multipliers it holds.
///
/// Returns the iterate with the smallest stopping measure; when the cap is
/// hit it is flagged unconverged.
pub fn alm_solve(state: &mut SolverState, inst: &Instance, params: &AlmParams, bound: &SpectralBound) -> AlmReport {
    let tol = params.tolerance(inst.block_len());
    state.gamma = bound.gamma(state.rho_mu);
    let mut previous = Violation::at(state, inst);
    let mut report = AlmReport {
        rows: Vec::new(),
        converged: false,
        stop_measure: f64::INFINITY,
        monotonicity_violations: 0,
        decrease_violations: 0,
        trace: Vec::new(),
    };
    let mut best = state.clone();
    for m in 1..=params.max_outer {
        let opts = BsumOptions {
            eps: params.eps_scale / m as f64,
            max_iter: params.inner_max_iter,
            record_trace: params.record_trace,
        };
        let rho_used = state.rho_mu;
        let mut inner = bsum_solve(state, inst, &opts);
        report.monotonicity_violations += inner.monotonicity_violations;
        report.decrease_violations += inner.decrease_violations;
        report.trace.append(&mut inner.trace);
        let (rc, ra) = residuals(state, inst);
        let current = Violation {
            ci_sq: norm_sq(&rc),
            beam_sq: norm_sq(&ra),
        };
        let (vc, va) = (libm::sqrt(current.ci_sq), libm::sqrt(current.beam_sq));
        report.rows.push(OuterRecord {
            m,
            objective: inner.value,
            viol_ci: vc,
            viol_beam: va,
            cert_norm: inner.cert_split,
            rho: rho_used,
            inner_iters: inner.iterations,
            certified: inner.certified,
            lambda: state.lambda,
        });
        let measure = inner.cert_split.max(vc).max(va);
        if measure < report.stop_measure {
            report.stop_measure = measure;
            best.clone_from(state);
        }
        if measure <= tol {
            report.converged = true;
            return report;
        }
        update_multipliers(state, &rc, &ra, params);
        update_penalties(state, current, previous, params.tau, params.delta);
        state.gamma = bound.gamma(state.rho_mu);
        previous = current;
    }
    *state = best;
    report
}

/// Per-stage summary of the homotopy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageRecord {
    /// Penalty weight.
    pub lambda: f64,
    /// Outer iterations spent.
    pub outer_iters: usize,
    /// Whether the ALM stopping rule fired.
    pub converged: bool,
    /// Largest distance of a sample to its nearest vertex after the stage.
    pub max_vertex_distance: f64,
}

/// Full result of [`homotopy_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Concatenated outer-loop history of all stages.
    pub rows: Vec<OuterRecord>,
    /// Per-stage summaries.
    pub stages: Vec<StageRecord>,
    /// Continuous iterate of the last stage.
    pub relaxed: RealWaveform,
    /// Waveform after snapping every sample to its nearest vertex.
    pub waveform: RealWaveform,
    /// Whether the relaxed iterate reached the vertex tolerance.
    pub vertex_converged: bool,
    /// Whether every stage met the ALM stopping rule.
    pub all_stages_converged: bool,
    /// CI feasibility of the snapped waveform.
    pub feasibility: FeasibilityReport,
    /// Optimal scaling `α*` of the snapped waveform's beampattern.
    pub alpha: f64,
    /// Beampattern MSE of the snapped waveform.
    pub mse: f64,
    /// Sweeps where `L_m` rose beyond the monotonicity slack.
    pub monotonicity_violations: usize,
    /// Sweeps whose decrease fell short of the majorizer guarantee.
    pub decrease_violations: usize,
    /// Every sweep of every stage, when `record_trace` is set.
    pub trace: Vec<StepRecord>,
}

/// Largest distance from a sample of `x` to its nearest alphabet vertex.
pub fn max_vertex_distance(x: &[f64], inst: &Instance) -> f64 {
    let n = inst.n_antennas();
    let qce = inst.qce();
    let mut worst: f64 = 0.0;
    for block in x.chunks_exact(2 * n) {
        for i in 0..n {
            let p = [block[i], block[n + i]];
            let v = qce.vertices()[nearest_vertex(p, qce)];
            worst = worst.max(libm::hypot(p[0] - v[0], p[1] - v[1]));
        }
    }
    worst
}

/// Snaps every sample of `x` to its nearest vertex.
pub fn snap_waveform(x: &[f64], inst: &Instance) -> RealWaveform {
    let n = inst.n_antennas();
    let mut out = x.to_vec();
    for block in out.chunks_exact_mut(2 * n) {
        for i in 0..n {
            let v = snap_to_qce([block[i], block[n + i]], inst.qce());
            block[i] = v[0];
            block[n + i] = v[1];
        }
    }
    RealWaveform::new(n, inst.block_len(), out).expect("length preserved")
}

/// Solves the penalized problem for `λ = λ0, λ0·growth, ...`, warm-starting
/// primal and dual variables across stages and resetting the penalties at
/// every stage, then snaps the result onto the alphabet.
pub fn homotopy_solve(inst: &Instance, hp: &HomotopyParams, ap: &AlmParams) -> crate::Result<SolveReport> {
    ap.validate()?;
    hp.validate(inst.qce().levels())?;
    let bound = SpectralBound::new(inst, ap.rho_ratio);
    let mut state = SolverState::zeros(inst, hp.lambda0, 0.0, 0.0, 0.0);
    state.objective_scale = ap.objective_scale.value(inst);
    let mut rows = Vec::new();
    let mut stages = Vec::new();
    let mut monotonicity_violations = 0;
    let mut decrease_violations = 0;
    let mut trace = Vec::new();
    let tol = hp.vertex_tol * inst.qce().eta();
    let mut vertex_converged = false;
    let mut lambda = hp.lambda0;
    for _ in 0..hp.max_stages {
        state.lambda = lambda;
        let (rm, rn) = initial_penalties(lambda, ap);
        state.rho_mu = rm;
        state.rho_nu = rn;
        let mut rep = alm_solve(&mut state, inst, ap, &bound);
        monotonicity_violations += rep.monotonicity_violations;
        decrease_violations += rep.decrease_violations;
        trace.append(&mut rep.trace);
        let dist = max_vertex_distance(&state.x, inst);
        stages.push(StageRecord {
            lambda,
            outer_iters: rep.rows.len(),
            converged: rep.converged,
            max_vertex_distance: dist,
        });
        rows.extend(rep.rows);
        if dist <= tol {
            vertex_converged = true;
            break;
        }
        lambda *= hp.growth;
    }
    let relaxed = RealWaveform::new(inst.n_antennas(), inst.block_len(), state.x.clone())?;
    let waveform = snap_waveform(&state.x, inst);
    let feasibility = check_feasibility(&waveform, inst);
    let power = beampattern(&waveform, inst);
    let (alpha, mse) = beampattern_mse(inst.desired(), &power)?;
    Ok(SolveReport {
        rows,
        all_stages_converged: stages.iter().all(|s| s.converged),
        stages,
        relaxed,
        waveform,
        vertex_converged,
        feasibility,
        alpha,
        mse,
        monotonicity_violations,
        decrease_violations,
        trace,
    })
}
