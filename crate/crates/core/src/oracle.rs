//! Brute-force references for small instances.
//!
//! Everything here is computed from complex arithmetic on the channel,
//! symbols and steering phases, without the real block matrices used by
//! the solver.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::metrics::FEASIBILITY_TOL;
use crate::model::{Instance, RealWaveform};
use crate::qce::QceSet;
use crate::Complex;

/// Maximum number of candidates an exhaustive search may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationBudget(pub u128);

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self(1_000_000)
    }
}

/// Best quantized waveform found by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// Optimal waveform.
    pub waveform: RealWaveform,
    /// Its objective `Σ_q B_q² - (Σ_q c_q B_q)²`.
    pub objective: f64,
    /// Its beampattern MSE.
    pub mse: f64,
    /// Number of CI-feasible candidates.
    pub feasible_count: u128,
}

/// Number of candidates `L^{NT}`, or `None` on overflow.
pub fn candidate_count(inst: &Instance) -> Option<u128> {
    let l = inst.qce().levels() as u128;
    let e = u32::try_from(inst.n_antennas() * inst.block_len()).ok()?;
    l.checked_pow(e)
}

/// Objective `Σ_q B_q² - (Σ_q c_q B_q)²` with `B_q = Σ_t |a(θ_q)^H x_t|²`.
pub fn objective(x: &[Complex], inst: &Instance) -> f64 {
    let (b, _) = energies(x, inst);
    let f: f64 = b.iter().map(|v| v * v).sum();
    let s: f64 = b.iter().zip(inst.weights()).map(|(v, c)| v * c).sum();
    f - s * s
}

/// Beampattern MSE with optimal scaling, from complex samples `x[t·N + n]`.
pub fn mse(x: &[Complex], inst: &Instance) -> f64 {
    let (b, t) = energies(x, inst);
    let d = inst.desired();
    let dd: f64 = d.iter().map(|v| v * v).sum();
    let p: Vec<f64> = b.iter().map(|v| v / t as f64).collect();
    let alpha = d.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() / dd;
    d.iter().zip(&p).map(|(a, b)| (alpha * a - b) * (alpha * a - b)).sum::<f64>() / d.len() as f64
}

fn energies(x: &[Complex], inst: &Instance) -> (Vec<f64>, usize) {
    let n = inst.n_antennas();
    let t = inst.block_len();
    let b = inst
        .grid()
        .iter()
        .map(|&theta| {
            let s = libm::sin(theta * PI / 180.0);
            let mut acc = 0.0;
            for slot in 0..t {
                let mut y = Complex::new(0.0, 0.0);
                for (i, xv) in x[slot * n..(slot + 1) * n].iter().enumerate() {
                    y += Complex::from_polar(1.0, -PI * i as f64 * s) * xv;
                }
                acc += y.norm_sqr();
            }
            acc
        })
        .collect();
    (b, t)
}

/// Whether every user's received symbol keeps margin `b` from both
/// boundaries of its decision sector.
pub fn is_feasible(x: &[Complex], inst: &Instance) -> bool {
    let n = inst.n_antennas();
    let half = PI / inst.psk_order() as f64;
    let b = inst.thresholds();
    let k_users = inst.n_users();
    for t in 0..inst.block_len() {
        for k in 0..k_users {
            let y: Complex = inst
                .channel_row(k)
                .iter()
                .zip(&x[t * n..(t + 1) * n])
                .map(|(h, v)| h * v)
                .sum();
            let s = inst.symbol(t, k);
            // signed distances to the boundaries at arg s ± π/M
            let upper = (Complex::from_polar(1.0, half) * s * y.conj()).im;
            let lower = (y * (Complex::from_polar(1.0, -half) * s).conj()).im;
            let row = t * 2 * k_users + 2 * k;
            if upper < b[row] - FEASIBILITY_TOL || lower < b[row + 1] - FEASIBILITY_TOL {
                return false;
            }
        }
    }
    true
}

/// Enumerates all `L^{NT}` quantized waveforms and returns the feasible one
/// with the smallest objective (first in enumeration order on ties), or
/// `None` when no candidate is feasible. Refuses instances above `budget`.
pub fn exhaustive_solve(inst: &Instance, budget: EnumerationBudget) -> Result<Option<OracleSolution>> {
    let count = candidate_count(inst).unwrap_or(u128::MAX);
    if count > budget.0 {
        return Err(Error::BudgetExceeded {
            candidates: count,
            budget: budget.0,
        });
    }
    let l = inst.qce().levels();
    let eta = inst.qce().eta();
    let alphabet: Vec<Complex> = (0..l)
        .map(|i| Complex::from_polar(eta, (2 * i + 1) as f64 * PI / l as f64))
        .collect();
    let len = inst.n_antennas() * inst.block_len();
    let mut digits = vec![0usize; len];
    let mut x = vec![alphabet[0]; len];
    let mut best: Option<(f64, Vec<Complex>)> = None;
    let mut feasible_count = 0u128;
    loop {
        if is_feasible(&x, inst) {
            feasible_count += 1;
            let obj = objective(&x, inst);
            if best.as_ref().map_or(true, |(b, _)| obj < *b) {
                best = Some((obj, x.clone()));
            }
        }
        // mixed-radix increment
        let mut i = 0;
        loop {
            if i == len {
                return Ok(best.map(|(obj, xb)| finish(obj, xb, inst, feasible_count)));
            }
            digits[i] += 1;
            if digits[i] == l {
                digits[i] = 0;
                x[i] = alphabet[0];
                i += 1;
            } else {
                x[i] = alphabet[digits[i]];
                break;
            }
        }
    }
}

fn finish(objective: f64, x: Vec<Complex>, inst: &Instance, feasible_count: u128) -> OracleSolution {
    let n = inst.n_antennas();
    let t = inst.block_len();
    let mut w = RealWaveform::zeros(n, t);
    for slot in 0..t {
        for i in 0..n {
            let v = x[slot * n + i];
            w.set_element(slot, i, [v.re, v.im]);
        }
    }
    OracleSolution {
        waveform: w,
        objective,
        mse: mse(&x, inst),
        feasible_count,
    }
}

/// Complex samples of a real waveform, laid out `t·N + n`.
pub fn to_complex(x: &RealWaveform) -> Vec<Complex> {
    let mut out = Vec::with_capacity(x.n_antennas() * x.block_len());
    for t in 0..x.block_len() {
        for n in 0..x.n_antennas() {
            out.push(x.complex(t, n));
        }
    }
    out
}

/// Euclidean projection onto the alphabet hull by exhaustive edge search:
/// `p` itself when inside, otherwise the closest point over all edges.
pub fn projection_oracle(p: [f64; 2], qce: &QceSet) -> [f64; 2] {
    let v = qce.vertices();
    let l = v.len();
    let edges: Vec<([f64; 2], [f64; 2])> = if l == 2 {
        vec![(v[0], v[1])]
    } else {
        (0..l).map(|i| (v[i], v[(i + 1) % l])).collect()
    };
    if l > 2 {
        // counter-clockwise vertices: inside iff left of every edge
        let inside = edges
            .iter()
            .all(|(a, b)| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0);
        if inside {
            return p;
        }
    }
    let mut best = [0.0; 2];
    let mut best_d = f64::INFINITY;
    for (a, b) in edges {
        let e = [b[0] - a[0], b[1] - a[1]];
        let t = ((p[0] - a[0]) * e[0] + (p[1] - a[1]) * e[1]) / (e[0] * e[0] + e[1] * e[1]);
        let t = t.clamp(0.0, 1.0);
        let c = [a[0] + t * e[0], a[1] + t * e[1]];
        let d = (p[0] - c[0]) * (p[0] - c[0]) + (p[1] - c[1]) * (p[1] - c[1]);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}
