//! Beampattern, CI feasibility and symbol-error metrics.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{Instance, RealWaveform};
use crate::Complex;

/// Average transmit power `(1/T) Σ_t |a(θ_q)^H x_t|²` at every grid angle.
pub fn beampattern(x: &RealWaveform, inst: &Instance) -> Vec<f64> {
    let st = inst.steering();
    let mut p = vec![0.0; st.len()];
    for t in 0..x.block_len() {
        let xt = x.slot(t);
        for (q, pq) in p.iter_mut().enumerate() {
            let v = st.apply(q, xt);
            *pq += v[0] * v[0] + v[1] * v[1];
        }
    }
    let inv = 1.0 / x.block_len() as f64;
    p.iter_mut().for_each(|v| *v *= inv);
    p
}

/// Least-squares scale `α* = Σ d_q P_q / Σ d_q²`.
pub fn optimal_alpha(desired: &[f64], power: &[f64]) -> Result<f64> {
    let dd: f64 = desired.iter().map(|d| d * d).sum();
    if !(dd > 0.0) {
        return Err(Error::DegeneratePattern);
    }
    let dp: f64 = desired.iter().zip(power).map(|(d, p)| d * p).sum();
    Ok(dp / dd)
}

/// `(α*, (1/Q) Σ_q (α* d_q - P_q)²)`.
pub fn beampattern_mse(desired: &[f64], power: &[f64]) -> Result<(f64, f64)> {
    if desired.len() != power.len() {
        return Err(Error::Dimension {
            what: "beampattern",
            expected: desired.len(),
            got: power.len(),
        });
    }
    let alpha = optimal_alpha(desired, power)?;
    let sum: f64 = desired
        .iter()
        .zip(power)
        .map(|(d, p)| {
            let e = alpha * d - p;
            e * e
        })
        .sum();
    Ok((alpha, sum / desired.len() as f64))
}

/// Noise-free received samples `y_{k,t} = h_kᵀ x_t`, indexed `t·K + k`.
pub fn received(x: &RealWaveform, inst: &Instance) -> Vec<Complex> {
    let (k, t) = (inst.n_users(), inst.block_len());
    let mut y = Vec::with_capacity(k * t);
    for slot in 0..t {
        for user in 0..k {
            let h = inst.channel_row(user);
            let acc = h
                .iter()
                .enumerate()
                .fold(Complex::new(0.0, 0.0), |a, (n, hn)| a + hn * x.complex(slot, n));
            y.push(acc);
        }
    }
    y
}

/// CI row values `C x` (both rows per user and slot, `t·2K + 2k + r`).
pub fn ci_values(x: &RealWaveform, inst: &Instance) -> Vec<f64> {
    let mut out = vec![0.0; inst.z_len()];
    inst.apply_ci(x.as_slice(), &mut out);
    out
}

/// Safety margin of every user and slot (`t·K + k`): the distance of the
/// noise-free received sample to the nearer boundary of its decision sector,
/// negative when it lies outside.
pub fn safety_margins(x: &RealWaveform, inst: &Instance) -> Vec<f64> {
    ci_values(x, inst)
        .chunks_exact(2)
        .map(|r| r[0].min(r[1]))
        .collect()
}

/// Per-row CI slack `C x - b` of a waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// `Cx - b` per CI row.
    pub slacks: Vec<f64>,
    /// Smallest row value of `C x`, i.e. the smallest safety margin.
    pub min_margin: f64,
    /// Rows with slack below `-FEASIBILITY_TOL`.
    pub violated: usize,
    /// Largest shortfall `max(0, b - Cx)`.
    pub max_violation: f64,
    /// True when no row is violated.
    pub feasible: bool,
}

/// Absolute tolerance on CI row slacks.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// Evaluates every CI constraint of `x`.
pub fn check_feasibility(x: &RealWaveform, inst: &Instance) -> FeasibilityReport {
    let cx = ci_values(x, inst);
    let slacks: Vec<f64> = cx.iter().zip(inst.thresholds()).map(|(c, b)| c - b).collect();
    let violated = slacks.iter().filter(|&&s| s < -FEASIBILITY_TOL).count();
    let max_violation = slacks.iter().fold(0.0f64, |a, &s| a.max(-s));
    FeasibilityReport {
        min_margin: cx.iter().copied().fold(f64::INFINITY, f64::min),
        slacks,
        violated,
        max_violation,
        feasible: violated == 0,
    }
}

/// Gaussian tail `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
}

/// Lower and union upper bound on the symbol error probability of a sample
/// whose distance to the nearer and farther decision boundary is at least
/// `d` under `CN(0, σ²)` noise: `(Q(√2d/σ), min(1, 2Q(√2d/σ)))`.
pub fn sep_bounds(d: f64, sigma: f64) -> (f64, f64) {
    let q = q_function(core::f64::consts::SQRT_2 * d / sigma);
    (q, (2.0 * q).min(1.0))
}

/// PSK decision: index `i` of the sector `[2πi/M, 2π(i+1)/M)` containing `arg y`.
pub fn detect_psk(y: Complex, psk_order: usize) -> usize {
    let mut a = libm::atan2(y.im, y.re);
    if a < 0.0 {
        a += 2.0 * PI;
    }
    let i = libm::floor(a * psk_order as f64 / (2.0 * PI)) as usize;
    i.min(psk_order - 1)
}

/// Monte-Carlo symbol error count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerEstimate {
    /// Erroneous detections.
    pub errors: u64,
    /// Detections performed (`trials·K·T`).
    pub symbols: u64,
}

impl SerEstimate {
    /// Empirical symbol error rate.
    pub fn rate(&self) -> f64 {
        if self.symbols == 0 {
            0.0
        } else {
            self.errors as f64 / self.symbols as f64
        }
    }

    /// Binomial standard deviation of the rate for true error probability `p`.
    pub fn binomial_std(&self, p: f64) -> f64 {
        if self.symbols == 0 {
            0.0
        } else {
            libm::sqrt(p * (1.0 - p) / self.symbols as f64)
        }
    }
}

/// Counts detection errors over `trials` noise draws of `CN(0, σ²)` added to
/// every received sample. Trial `i` draws from stream `i` of a ChaCha
/// generator seeded with `seed`, so results do not depend on how trials are
/// partitioned.
pub fn simulate_ser(x: &RealWaveform, inst: &Instance, sigma: f64, trials: u64, seed: u64) -> SerEstimate {
    simulate_ser_range(x, inst, sigma, 0..trials, seed)
}

/// [`simulate_ser`] restricted to the trial indices in `range`.
pub fn simulate_ser_range(
    x: &RealWaveform,
    inst: &Instance,
    sigma: f64,
    range: core::ops::Range<u64>,
    seed: u64,
) -> SerEstimate {
    let y = received(x, inst);
    let k = inst.n_users();
    let m = inst.psk_order();
    let truth: Vec<usize> = (0..y.len())
        .map(|i| detect_psk(inst.symbol(i / k, i % k), m))
        .collect();
    let scale = sigma * core::f64::consts::FRAC_1_SQRT_2;
    let mut errors = 0u64;
    let mut symbols = 0u64;
    for trial in range {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        for (yi, &ti) in y.iter().zip(&truth) {
            let nr: f64 = StandardNormal.sample(&mut rng);
            let ni: f64 = StandardNormal.sample(&mut rng);
            let r = *yi + Complex::new(scale * nr, scale * ni);
            if detect_psk(r, m) != ti {
                errors += 1;
            }
            symbols += 1;
        }
    }
    SerEstimate { errors, symbols }
}
