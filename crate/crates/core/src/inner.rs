//! Block successive upper-bound minimization (BSUM) for one augmented
//! Lagrangian subproblem.
//!
//! Variables are `x` (stacked transmit block, `2NT`), `w = A x` surrogates
//! (`2QT`, block `w_{t,q}` at offset `2(tQ + q)`) and CI slacks `z ≥ 0`
//! (`2KT`). Each sweep updates `x` by a projected gradient step on a
//! quadratic majorizer, `w` in closed form through a scalar cubic, and `z` by
//! a nonnegative clamp.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{positive_cubic_root, HullGeometry};
use crate::linalg::{dist_sq, dot, norm, norm_sq, psd_spectral_norm};
use crate::model::Instance;

/// Primal iterates, multipliers and penalty parameters of one ALM solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    /// Stacked transmit block, every antenna sample inside the alphabet hull.
    pub x: Vec<f64>,
    /// Beam-response surrogates for `A x`.
    pub w: Vec<f64>,
    /// Nonnegative slacks for `C x - b`.
    pub z: Vec<f64>,
    /// Multipliers of `C x - z - b = 0`.
    pub mu: Vec<f64>,
    /// Multipliers of `A x - w = 0`.
    pub nu: Vec<f64>,
    /// Penalty on the CI residual.
    pub rho_mu: f64,
    /// Penalty on the beam residual.
    pub rho_nu: f64,
    /// Weight of the negative-square quantization penalty `-λ‖x‖²`.
    pub lambda: f64,
    /// Majorization constant `‖ρ_μ CᵀC + ρ_ν AᵀA‖`.
    pub gamma: f64,
    /// Weight `κ` on the beampattern objective, `κ(f + g)`.
    pub objective_scale: f64,
}

impl SolverState {
    /// All-zero primal and dual variables with the given parameters.
    pub fn zeros(inst: &Instance, lambda: f64, rho_mu: f64, rho_nu: f64, gamma: f64) -> Self {
        Self {
            x: vec![0.0; inst.x_len()],
            w: vec![0.0; inst.w_len()],
            z: vec![0.0; inst.z_len()],
            mu: vec![0.0; inst.z_len()],
            nu: vec![0.0; inst.w_len()],
            rho_mu,
            rho_nu,
            lambda,
            gamma,
            objective_scale: 1.0,
        }
    }
}

/// Residuals `C x - z - b` and `A x - w`.
pub fn residuals(state: &SolverState, inst: &Instance) -> (Vec<f64>, Vec<f64>) {
    let mut rc = vec![0.0; inst.z_len()];
    inst.apply_ci(&state.x, &mut rc);
    for ((r, z), b) in rc.iter_mut().zip(&state.z).zip(inst.thresholds()) {
        *r -= z + b;
    }
    let mut ra = vec![0.0; inst.w_len()];
    inst.apply_steering(&state.x, &mut ra);
    for (r, w) in ra.iter_mut().zip(&state.w) {
        *r -= w;
    }
    (rc, ra)
}

/// Per-angle energies `B_q = Σ_t ‖w_{t,q}‖²`.
pub fn angle_energies(w: &[f64], n_angles: usize) -> Vec<f64> {
    let mut e = vec![0.0; n_angles];
    for (i, pair) in w.chunks_exact(2).enumerate() {
        e[i % n_angles] += pair[0] * pair[0] + pair[1] * pair[1];
    }
    e
}

/// `f(w) = Σ_q B_q²`.
pub fn quartic_f(w: &[f64], n_angles: usize) -> f64 {
    angle_energies(w, n_angles).iter().map(|b| b * b).sum()
}

/// `g(w) = -(Σ_q c_q B_q)²`.
pub fn quartic_g(w: &[f64], weights: &[f64]) -> f64 {
    let s = dot(&angle_energies(w, weights.len()), weights);
    -s * s
}

/// `∇f(w)_{t,q} = 4 B_q w_{t,q}`.
pub fn grad_f(w: &[f64], n_angles: usize) -> Vec<f64> {
    let e = angle_energies(w, n_angles);
    let mut g = vec![0.0; w.len()];
    for (i, (gp, wp)) in g.chunks_exact_mut(2).zip(w.chunks_exact(2)).enumerate() {
        let s = 4.0 * e[i % n_angles];
        gp[0] = s * wp[0];
        gp[1] = s * wp[1];
    }
    g
}

/// `∇g(w)_{t,q} = -4 (Σ_{q'} c_{q'} B_{q'}) c_q w_{t,q}`.
pub fn grad_g(w: &[f64], weights: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; w.len()];
    grad_g_into(w, weights, &mut g);
    g
}

fn grad_g_into(w: &[f64], weights: &[f64], out: &mut [f64]) {
    let qn = weights.len();
    let s = dot(&angle_energies(w, qn), weights);
    for (i, (gp, wp)) in out.chunks_exact_mut(2).zip(w.chunks_exact(2)).enumerate() {
        let k = -4.0 * s * weights[i % qn];
        gp[0] = k * wp[0];
        gp[1] = k * wp[1];
    }
}

/// Augmented Lagrangian
/// `κ(f(w) + g(w)) - λ‖x‖² + μᵀr_C + νᵀr_A + ρ_μ/2‖r_C‖² + ρ_ν/2‖r_A‖²`
/// with `r_C = Cx - z - b`, `r_A = Ax - w`.
pub fn eval_augmented_lagrangian(state: &SolverState, inst: &Instance) -> f64 {
    let (rc, ra) = residuals(state, inst);
    lagrangian_from_residuals(state, inst, &rc, &ra)
}

fn lagrangian_from_residuals(state: &SolverState, inst: &Instance, rc: &[f64], ra: &[f64]) -> f64 {
    let e = angle_energies(&state.w, inst.n_angles());
    let f: f64 = e.iter().map(|b| b * b).sum();
    let s = dot(&e, inst.weights());
    state.objective_scale * (f - s * s) - state.lambda * norm_sq(&state.x)
        + dot(&state.mu, rc)
        + dot(&state.nu, ra)
        + 0.5 * state.rho_mu * norm_sq(rc)
        + 0.5 * state.rho_nu * norm_sq(ra)
}

/// `∇_x L = -2λx + Cᵀ(μ + ρ_μ r_C) + Aᵀ(ν + ρ_ν r_A)`.
pub fn grad_x_lagrangian(state: &SolverState, inst: &Instance) -> Vec<f64> {
    let (rc, ra) = residuals(state, inst);
    let mut g = vec![0.0; inst.x_len()];
    grad_x_from_residuals(state, inst, &rc, &ra, &mut g);
    g
}

fn grad_x_from_residuals(state: &SolverState, inst: &Instance, rc: &[f64], ra: &[f64], out: &mut [f64]) {
    for (o, x) in out.iter_mut().zip(&state.x) {
        *o = -2.0 * state.lambda * x;
    }
    let yc: Vec<f64> = state
        .mu
        .iter()
        .zip(rc)
        .map(|(m, r)| m + state.rho_mu * r)
        .collect();
    inst.apply_ci_transpose_add(&yc, out);
    let ya: Vec<f64> = state
        .nu
        .iter()
        .zip(ra)
        .map(|(n, r)| n + state.rho_nu * r)
        .collect();
    inst.apply_steering_transpose_add(&ya, out);
}

/// `max_t ‖C_tᵀC_t + ratio·ÃᵀÃ‖`, the majorization constant for `ρ_μ = 1`,
/// `ρ_ν = ratio`. Scaling both penalties by `ρ` scales it by `ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBound {
    ratio: f64,
    unit: f64,
}

impl SpectralBound {
    /// Power iteration tolerance (relative change of the Rayleigh quotient).
    pub const TOL: f64 = 1e-10;
    /// Power iteration cap.
    pub const MAX_ITER: usize = 10_000;

    /// Computes the bound for penalty ratio `ρ_ν/ρ_μ`.
    pub fn new(inst: &Instance, ratio: f64) -> Self {
        let d = 2 * inst.n_antennas();
        let gram = inst.steering().gram();
        let rows = 2 * inst.n_users();
        let mut unit: f64 = 0.0;
        let mut m = vec![0.0; d * d];
        for t in 0..inst.block_len() {
            let ct = inst.ci_block(t);
            for (mij, gij) in m.iter_mut().zip(&gram) {
                *mij = ratio * gij;
            }
            for r in 0..rows {
                let row = &ct[r * d..(r + 1) * d];
                for i in 0..d {
                    let ri = row[i];
                    if ri == 0.0 {
                        continue;
                    }
                    for (mij, rj) in m[i * d..(i + 1) * d].iter_mut().zip(row) {
                        *mij += ri * rj;
                    }
                }
            }
            unit = unit.max(psd_spectral_norm(&m, d, Self::TOL, Self::MAX_ITER));
        }
        Self { ratio, unit }
    }

    /// Penalty ratio `ρ_ν/ρ_μ` this bound was computed for.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// `‖CᵀC + ratio·AᵀA‖`.
    pub fn unit(&self) -> f64 {
        self.unit
    }

    /// `γ` for `ρ_μ = rho_mu`, `ρ_ν = ratio·rho_mu`.
    pub fn gamma(&self, rho_mu: f64) -> f64 {
        rho_mu * self.unit
    }
}

/// `γ = ‖ρ_μ CᵀC + ρ_ν AᵀA‖` via per-slot power iteration.
pub fn compute_gamma(rho_mu: f64, rho_nu: f64, inst: &Instance) -> f64 {
    SpectralBound::new(inst, rho_nu / rho_mu).gamma(rho_mu)
}

/// Constructive first-order residual certificate of one BSUM sweep.
///
/// `(e_x, e_w, 0)` lies in `∇L_m(new) + ∂I_𝒳(x_new) + ∂I_𝒵(z_new)`, so
/// `norm` bounds the distance of the new iterate from stationarity.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// `∇_xL(new) - ∇_xL(old) - γ(x_new - x_old)`.
    pub e_x: Vec<f64>,
    /// `κ(∇g(w_new) - ∇g(w_old))`.
    pub e_w: Vec<f64>,
    /// `‖(e_x, e_w)‖`.
    pub norm: f64,
}

impl Certificate {
    /// `‖e_x‖ + ‖e_w‖`, the residual used by the outer stopping rule.
    pub fn split_sum(&self) -> f64 {
        norm(&self.e_x) + norm(&self.e_w)
    }
}

/// Builds the certificate for the sweep `prev → next`.
pub fn stationarity_certificate(prev: &SolverState, next: &SolverState, gamma: f64, inst: &Instance) -> Certificate {
    let g_new = grad_x_lagrangian(next, inst);
    let g_old = grad_x_lagrangian(prev, inst);
    let e_x: Vec<f64> = g_new
        .iter()
        .zip(&g_old)
        .zip(next.x.iter().zip(&prev.x))
        .map(|((gn, go), (xn, xo))| gn - go - gamma * (xn - xo))
        .collect();
    let wn = grad_g(&next.w, inst.weights());
    let wo = grad_g(&prev.w, inst.weights());
    let k = next.objective_scale;
    let e_w: Vec<f64> = wn.iter().zip(&wo).map(|(a, b)| k * (a - b)).collect();
    let norm = libm::sqrt(norm_sq(&e_x) + norm_sq(&e_w));
    Certificate { e_x, e_w, norm }
}

/// Per-sweep diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// `L_m` before the sweep.
    pub value_before: f64,
    /// `L_m` after the sweep.
    pub value_after: f64,
    /// `‖Δx‖²`.
    pub dx_sq: f64,
    /// `‖Δw‖²`.
    pub dw_sq: f64,
    /// `‖Δz‖²`.
    pub dz_sq: f64,
    /// Certificate norm `‖(e_x, e_w)‖`.
    pub cert_norm: f64,
    /// `‖e_x‖ + ‖e_w‖`.
    pub cert_split: f64,
    /// `γ` used for the x block.
    pub gamma: f64,
    /// CI penalty during the sweep.
    pub rho_mu: f64,
    /// Beam penalty during the sweep.
    pub rho_nu: f64,
}

impl StepRecord {
    /// Decrease guaranteed by the three strongly convex block majorizers,
    /// `γ/2‖Δx‖² + ρ_ν/2‖Δw‖² + ρ_μ/2‖Δz‖²`.
    pub fn guaranteed_decrease(&self) -> f64 {
        0.5 * (self.gamma * self.dx_sq + self.rho_nu * self.dw_sq + self.rho_mu * self.dz_sq)
    }
}

/// Values cached at the current iterate so a sweep costs one `A` and one `Aᵀ` pass.
#[derive(Debug, Clone)]
struct Cache {
    ax: Vec<f64>,
    rc: Vec<f64>,
    ra: Vec<f64>,
    grad_x: Vec<f64>,
    grad_g: Vec<f64>,
    value: f64,
}

impl Cache {
    fn new(state: &SolverState, inst: &Instance) -> Self {
        let mut ax = vec![0.0; inst.w_len()];
        inst.apply_steering(&state.x, &mut ax);
        let mut rc = vec![0.0; inst.z_len()];
        inst.apply_ci(&state.x, &mut rc);
        for ((r, z), b) in rc.iter_mut().zip(&state.z).zip(inst.thresholds()) {
            *r -= z + b;
        }
        let ra: Vec<f64> = ax.iter().zip(&state.w).map(|(a, w)| a - w).collect();
        let mut grad_x = vec![0.0; inst.x_len()];
        grad_x_from_residuals(state, inst, &rc, &ra, &mut grad_x);
        let mut grad_g = grad_g(&state.w, inst.weights());
        grad_g.iter_mut().for_each(|g| *g *= state.objective_scale);
        let value = lagrangian_from_residuals(state, inst, &rc, &ra);
        Self {
            ax,
            rc,
            ra,
            grad_x,
            grad_g,
            value,
        }
    }
}

fn sweep(state: &mut SolverState, inst: &Instance, hull: &HullGeometry, cache: &mut Cache) -> StepRecord {
    let value_before = cache.value;
    let n = inst.n_antennas();
    let qn = inst.n_angles();
    let gamma = state.gamma;

    // x: projected gradient step on the separable quadratic majorizer
    let x_old = state.x.clone();
    let step = 1.0 / gamma;
    for (t_block, g_block) in state
        .x
        .chunks_exact_mut(2 * n)
        .zip(cache.grad_x.chunks_exact(2 * n))
    {
        for i in 0..n {
            let p = [t_block[i] - step * g_block[i], t_block[n + i] - step * g_block[n + i]];
            let v = hull.project(p);
            t_block[i] = v[0];
            t_block[n + i] = v[1];
        }
    }
    inst.apply_steering(&state.x, &mut cache.ax);

    // w: per angle, w_(q) = -β ξ_q/‖ξ_q‖ with 4κβ³ + ρ_ν β = ‖ξ_q‖
    let w_old = state.w.clone();
    let mut xi = vec![0.0; state.w.len()];
    let mut xi_norm_sq = vec![0.0; qn];
    for (i, ((xv, gg), (nu, ax))) in xi
        .iter_mut()
        .zip(&cache.grad_g)
        .zip(state.nu.iter().zip(&cache.ax))
        .enumerate()
    {
        *xv = gg - nu - state.rho_nu * ax;
        xi_norm_sq[(i / 2) % qn] += *xv * *xv;
    }
    let kappa = state.objective_scale;
    let scale: Vec<f64> = xi_norm_sq
        .iter()
        .map(|&s| {
            let r = libm::sqrt(s);
            if r > 0.0 {
                -positive_cubic_root(state.rho_nu / kappa, r / kappa) / r
            } else {
                0.0
            }
        })
        .collect();
    for (i, (w, xv)) in state.w.iter_mut().zip(&xi).enumerate() {
        *w = scale[(i / 2) % qn] * xv;
    }

    // z: clamp of C x - b + μ/ρ_μ
    let z_old = state.z.clone();
    inst.apply_ci(&state.x, &mut cache.rc);
    for (((z, cx), b), mu) in state
        .z
        .iter_mut()
        .zip(cache.rc.iter())
        .zip(inst.thresholds())
        .zip(&state.mu)
    {
        let v = cx - b + mu / state.rho_mu;
        *z = if v > 0.0 { v } else { 0.0 };
    }
    for ((r, z), b) in cache.rc.iter_mut().zip(&state.z).zip(inst.thresholds()) {
        *r -= z + b;
    }
    for ((r, a), w) in cache.ra.iter_mut().zip(&cache.ax).zip(&state.w) {
        *r = a - w;
    }

    let grad_x_old = core::mem::take(&mut cache.grad_x);
    let grad_g_old = core::mem::take(&mut cache.grad_g);
    let mut grad_x_new = vec![0.0; inst.x_len()];
    grad_x_from_residuals(state, inst, &cache.rc, &cache.ra, &mut grad_x_new);
    let mut grad_g_new = vec![0.0; state.w.len()];
    grad_g_into(&state.w, inst.weights(), &mut grad_g_new);
    grad_g_new.iter_mut().for_each(|g| *g *= state.objective_scale);

    let mut ex_sq = 0.0;
    for ((gn, go), (xn, xo)) in grad_x_new
        .iter()
        .zip(&grad_x_old)
        .zip(state.x.iter().zip(&x_old))
    {
        let e = gn - go - gamma * (xn - xo);
        ex_sq += e * e;
    }
    let ew_sq = dist_sq(&grad_g_new, &grad_g_old);

    cache.grad_x = grad_x_new;
    cache.grad_g = grad_g_new;
    cache.value = lagrangian_from_residuals(state, inst, &cache.rc, &cache.ra);

    StepRecord {
        value_before,
        value_after: cache.value,
        dx_sq: dist_sq(&state.x, &x_old),
        dw_sq: dist_sq(&state.w, &w_old),
        dz_sq: dist_sq(&state.z, &z_old),
        cert_norm: libm::sqrt(ex_sq + ew_sq),
        cert_split: libm::sqrt(ex_sq) + libm::sqrt(ew_sq),
        gamma,
        rho_mu: state.rho_mu,
        rho_nu: state.rho_nu,
    }
}

/// One BSUM sweep (x, then w, then z). `state.gamma` must match the current penalties.
pub fn bsum_step(state: &SolverState, inst: &Instance) -> SolverState {
    let mut next = state.clone();
    let hull = HullGeometry::new(inst.qce());
    let mut cache = Cache::new(&next, inst);
    sweep(&mut next, inst, &hull, &mut cache);
    next
}

/// Stopping controls for [`bsum_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsumOptions {
    /// Target certificate norm `ε`.
    pub eps: f64,
    /// Sweep cap.
    pub max_iter: usize,
    /// Keep every [`StepRecord`].
    pub record_trace: bool,
}

/// Result of one subproblem solve.
#[derive(Debug, Clone, PartialEq)]
pub struct BsumOutcome {
    /// Sweeps performed.
    pub iterations: usize,
    /// Whether the final certificate norm is at most `ε`.
    pub certified: bool,
    /// Final certificate norm.
    pub cert_norm: f64,
    /// Final `‖e_x‖ + ‖e_w‖`.
    pub cert_split: f64,
    /// `L_m` at the returned iterate.
    pub value: f64,
    /// Sweeps where `L_m` rose by more than `1e-10·(1 + |L_m|)`.
    pub monotonicity_violations: usize,
    /// Sweeps where the decrease fell short of the block-majorizer guarantee
    /// by more than the same slack.
    pub decrease_violations: usize,
    /// Per-sweep records when requested.
    pub trace: Vec<StepRecord>,
}

/// Relative slack used for the monotonicity and sufficient-decrease checks.
pub const DECREASE_SLACK: f64 = 1e-10;

/// Runs sweeps from the warm start `state` until the certificate norm drops
/// to `opts.eps` or `opts.max_iter` sweeps are done. At least one sweep is
/// always performed.
pub fn bsum_solve(state: &mut SolverState, inst: &Instance, opts: &BsumOptions) -> BsumOutcome {
    let hull = HullGeometry::new(inst.qce());
    let mut cache = Cache::new(state, inst);
    let mut out = BsumOutcome {
        iterations: 0,
        certified: false,
        cert_norm: f64::INFINITY,
        cert_split: f64::INFINITY,
        value: cache.value,
        monotonicity_violations: 0,
        decrease_violations: 0,
        trace: Vec::new(),
    };
    let max_iter = opts.max_iter.max(1);
    while out.iterations < max_iter {
        let rec = sweep(state, inst, &hull, &mut cache);
        out.iterations += 1;
        let slack = DECREASE_SLACK * (1.0 + rec.value_before.abs());
        if rec.value_after > rec.value_before + slack {
            out.monotonicity_violations += 1;
        }
        if rec.value_before - rec.value_after < rec.guaranteed_decrease() - slack {
            out.decrease_violations += 1;
        }
        out.cert_norm = rec.cert_norm;
        out.cert_split = rec.cert_split;
        out.value = rec.value_after;
        if opts.record_trace {
            out.trace.push(rec);
        }
        if rec.cert_norm <= opts.eps {
            out.certified = true;
            break;
        }
    }
    out
}
