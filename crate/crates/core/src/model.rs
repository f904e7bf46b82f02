//! Problem data: scenario configuration, steering geometry, desired pattern,
//! constructive-interference constraint rows and the assembled [`Instance`].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::qce::QceSet;
use crate::Complex;

/// Scalar description of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Transmit antennas `N`.
    pub n_antennas: usize,
    /// Single-antenna users `K`.
    pub n_users: usize,
    /// Block length `T` (time slots).
    pub block_len: usize,
    /// PSK order `M`.
    pub psk_order: usize,
    /// Quantization levels `L`.
    pub quant_levels: usize,
    /// Total transmit power per slot `P`.
    pub power: f64,
    /// Communication SNR in dB, `SNR = 1/σ²`.
    pub snr_db: f64,
    /// Uniform safety-margin threshold `b`.
    pub margin_threshold: f64,
    /// Target directions in degrees.
    pub target_angles: Vec<f64>,
    /// Width of each desired mainlobe in degrees.
    pub beam_width: f64,
    /// Angle grid in degrees, strictly increasing.
    pub grid: Vec<f64>,
    /// Seed for channel and symbol generation.
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_antennas: 64,
            n_users: 4,
            block_len: 50,
            psk_order: 4,
            quant_levels: 4,
            power: 1.0,
            snr_db: 10.0,
            margin_threshold: 0.6,
            target_angles: vec![-40.0, 0.0, 40.0],
            beam_width: 10.0,
            grid: uniform_grid(-90.0, 90.0, 1.0),
            rng_seed: 0,
        }
    }
}

impl SystemConfig {
    /// Checks every scalar invariant.
    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 || self.n_users == 0 || self.block_len == 0 {
            return Err(Error::Config("N, K and T must be positive"));
        }
        if self.psk_order < 2 || !self.psk_order.is_power_of_two() {
            return Err(Error::Config("PSK order must be a power of two and at least 2"));
        }
        if self.quant_levels < 2 {
            return Err(Error::Config("quantization levels must be at least 2"));
        }
        if !(self.power > 0.0) || !self.power.is_finite() {
            return Err(Error::Config("power must be positive"));
        }
        if !(self.margin_threshold >= 0.0) || !self.margin_threshold.is_finite() {
            return Err(Error::Config("margin threshold must be nonnegative"));
        }
        if !(self.beam_width > 0.0) {
            return Err(Error::Config("beam width must be positive"));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config("SNR must be finite"));
        }
        if self.grid.is_empty() {
            return Err(Error::Config("angle grid must be nonempty"));
        }
        if self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("angle grid must be strictly increasing"));
        }
        if self.grid.iter().any(|&g| !(-90.0..=90.0).contains(&g)) {
            return Err(Error::Config("grid angles must lie in [-90, 90] degrees"));
        }
        Ok(())
    }

    /// Noise standard deviation `σ` implied by `snr_db` (`SNR = 1/σ²`).
    pub fn noise_std(&self) -> f64 {
        noise_std_from_snr_db(self.snr_db)
    }
}

/// `σ = 10^{-snr_db/20}`, i.e. the noise level with `SNR = 1/σ²`.
pub fn noise_std_from_snr_db(snr_db: f64) -> f64 {
    libm::pow(10.0, -snr_db / 20.0)
}

/// Grid from `start` to `end` inclusive with spacing `step` (degrees).
pub fn uniform_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let count = libm::floor((end - start) / step + 1e-9) as usize + 1;
    (0..count).map(|i| start + i as f64 * step).collect()
}

/// Half-wavelength ULA response: entry `n` equals `e^{jπ n sin θ}`.
pub fn steering_vector(theta_deg: f64, n_antennas: usize) -> Vec<Complex> {
    let s = libm::sin(theta_deg.to_radians());
    (0..n_antennas)
        .map(|n| {
            let phase = PI * n as f64 * s;
            Complex::new(libm::cos(phase), libm::sin(phase))
        })
        .collect()
}

/// Real steering blocks `A_q = [[ℜaᵀ, ℑaᵀ], [-ℑaᵀ, ℜaᵀ]]` for every grid angle.
///
/// `A_q x_t` is `[ℜ(a^H x_t), ℑ(a^H x_t)]`, so `‖A_q x_t‖² = |a(θ_q)^H x_t|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringBlocks {
    n: usize,
    q: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Builds `A_q` for each angle of `grid_deg`.
pub fn build_steering_blocks(grid_deg: &[f64], n_antennas: usize) -> SteeringBlocks {
    let mut re = Vec::with_capacity(grid_deg.len() * n_antennas);
    let mut im = Vec::with_capacity(grid_deg.len() * n_antennas);
    for &theta in grid_deg {
        for a in steering_vector(theta, n_antennas) {
            re.push(a.re);
            im.push(a.im);
        }
    }
    SteeringBlocks {
        n: n_antennas,
        q: grid_deg.len(),
        re,
        im,
    }
}

impl SteeringBlocks {
    /// Number of blocks `Q`.
    pub fn len(&self) -> usize {
        self.q
    }

    /// True when there are no grid angles.
    pub fn is_empty(&self) -> bool {
        self.q == 0
    }

    /// Antennas `N`.
    pub fn n_antennas(&self) -> usize {
        self.n
    }

    /// Dense `2 × 2N` block for angle `q`, as two rows.
    pub fn block(&self, q: usize) -> [Vec<f64>; 2] {
        let (re, im) = self.rows(q);
        let mut r0 = Vec::with_capacity(2 * self.n);
        r0.extend_from_slice(re);
        r0.extend_from_slice(im);
        let mut r1 = Vec::with_capacity(2 * self.n);
        r1.extend(im.iter().map(|v| -v));
        r1.extend_from_slice(re);
        [r0, r1]
    }

    fn rows(&self, q: usize) -> (&[f64], &[f64]) {
        let span = q * self.n..(q + 1) * self.n;
        (&self.re[span.clone()], &self.im[span])
    }

    /// `A_q x_t` for one slot vector `x_t = [ℜx; ℑx]` of length `2N`.
    pub fn apply(&self, q: usize, x_t: &[f64]) -> [f64; 2] {
        let (xr, xi) = x_t.split_at(self.n);
        let (ar, ai) = self.rows(q);
        // four independent partial sums per output so the loop vectorizes
        let mut re = [0.0f64; 4];
        let mut im = [0.0f64; 4];
        let split = self.n - self.n % 4;
        for ((a, b), (c, d)) in ar[..split]
            .chunks_exact(4)
            .zip(ai[..split].chunks_exact(4))
            .zip(xr[..split].chunks_exact(4).zip(xi[..split].chunks_exact(4)))
        {
            for j in 0..4 {
                re[j] += a[j] * c[j] + b[j] * d[j];
                im[j] += a[j] * d[j] - b[j] * c[j];
            }
        }
        for j in split..self.n {
            re[0] += ar[j] * xr[j] + ai[j] * xi[j];
            im[0] += ar[j] * xi[j] - ai[j] * xr[j];
        }
        [(re[0] + re[1]) + (re[2] + re[3]), (im[0] + im[1]) + (im[2] + im[3])]
    }

    /// `out_t += A_qᵀ y` for a 2-vector `y`.
    pub fn apply_transpose_add(&self, q: usize, y: [f64; 2], out_t: &mut [f64]) {
        let (ar, ai) = self.rows(q);
        let (or, oi) = out_t.split_at_mut(self.n);
        for n in 0..self.n {
            or[n] += ar[n] * y[0] - ai[n] * y[1];
            oi[n] += ai[n] * y[0] + ar[n] * y[1];
        }
    }

    /// Dense `ÃᵀÃ = Σ_q A_qᵀ A_q` (row-major, `2N × 2N`).
    pub fn gram(&self) -> Vec<f64> {
        let d = 2 * self.n;
        let mut g = vec![0.0; d * d];
        for q in 0..self.q {
            let rows = self.block(q);
            for row in &rows {
                for i in 0..d {
                    let ri = row[i];
                    if ri == 0.0 {
                        continue;
                    }
                    let gi = &mut g[i * d..(i + 1) * d];
                    for (gij, rj) in gi.iter_mut().zip(row) {
                        *gij += ri * rj;
                    }
                }
            }
        }
        g
    }
}

/// Indicator of the desired beampattern: 1 inside any closed mainlobe
/// `[θ̄_i - Δθ/2, θ̄_i + Δθ/2]`, 0 elsewhere.
pub fn desired_pattern(theta_deg: f64, targets: &[f64], width_deg: f64) -> f64 {
    let half = width_deg / 2.0;
    let hit = targets
        .iter()
        .any(|&c| theta_deg >= c - half && theta_deg <= c + half);
    if hit {
        1.0
    } else {
        0.0
    }
}

/// Normalized pattern weights `c_q = d_q / sqrt(Σ d²)`.
pub fn pattern_weights(samples: &[f64]) -> Result<Vec<f64>> {
    let energy: f64 = samples.iter().map(|d| d * d).sum();
    if !(energy > 0.0) {
        return Err(Error::DegeneratePattern);
    }
    let scale = 1.0 / libm::sqrt(energy);
    Ok(samples.iter().map(|d| d * scale).collect())
}

/// The two constructive-interference rows for user channel `h` and symbol `s`.
///
/// Row 0 evaluates the signed distance of `hᵀx` from the boundary through
/// `s e^{jπ/M}`, row 1 from the boundary through `s e^{-jπ/M}`; both are
/// positive inside the decision region of `s`. Each row has length `2N`
/// and acts on `[ℜx; ℑx]`.
pub fn ci_rows(h: &[Complex], s: Complex, psk_order: usize) -> [Vec<f64>; 2] {
    let half = PI / psk_order as f64;
    let s_a = s * Complex::new(libm::cos(half), -libm::sin(half));
    let s_b = s * Complex::new(libm::cos(half), libm::sin(half));
    let n = h.len();
    let mut r0 = vec![0.0; 2 * n];
    let mut r1 = vec![0.0; 2 * n];
    // [ℜy; ℑy] = [[ℜhᵀ, -ℑhᵀ], [ℑhᵀ, ℜhᵀ]] [ℜx; ℑx]
    for (i, hn) in h.iter().enumerate() {
        let (hr, hi) = (hn.re, hn.im);
        r0[i] = s_b.im * hr - s_b.re * hi;
        r0[n + i] = -s_b.im * hi - s_b.re * hr;
        r1[i] = -s_a.im * hr + s_a.re * hi;
        r1[n + i] = s_a.im * hi + s_a.re * hr;
    }
    [r0, r1]
}

/// Draws a `K × N` channel (row-major) with i.i.d. `CN(0, 1)` entries.
pub fn generate_channel<R: Rng + ?Sized>(rng: &mut R, n_users: usize, n_antennas: usize) -> Vec<Complex> {
    let scale = core::f64::consts::FRAC_1_SQRT_2;
    (0..n_users * n_antennas)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(re * scale, im * scale)
        })
        .collect()
}

/// The `i`-th symbol `e^{j(2i+1)π/M}` of the PSK constellation.
pub fn psk_symbol(index: usize, psk_order: usize) -> Complex {
    let phi = (2 * index + 1) as f64 * PI / psk_order as f64;
    Complex::new(libm::cos(phi), libm::sin(phi))
}

/// Draws a `K × T` symbol matrix (row-major) uniformly from the `M`-PSK constellation.
pub fn generate_symbols<R: Rng + ?Sized>(
    rng: &mut R,
    n_users: usize,
    block_len: usize,
    psk_order: usize,
) -> Vec<Complex> {
    (0..n_users * block_len)
        .map(|_| psk_symbol(rng.random_range(0..psk_order), psk_order))
        .collect()
}

/// Transmit block in stacked real form: slot `t` occupies `x[2Nt..2N(t+1)]`
/// as `[ℜx_t; ℑx_t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealWaveform {
    n: usize,
    t: usize,
    x: Vec<f64>,
}

impl RealWaveform {
    /// Wraps a stacked vector; its length must be `2NT`.
    pub fn new(n_antennas: usize, block_len: usize, x: Vec<f64>) -> Result<Self> {
        let expected = 2 * n_antennas * block_len;
        if x.len() != expected {
            return Err(Error::Dimension {
                what: "waveform",
                expected,
                got: x.len(),
            });
        }
        Ok(Self {
            n: n_antennas,
            t: block_len,
            x,
        })
    }

    /// All-zero waveform.
    pub fn zeros(n_antennas: usize, block_len: usize) -> Self {
        Self {
            n: n_antennas,
            t: block_len,
            x: vec![0.0; 2 * n_antennas * block_len],
        }
    }

    /// Antennas `N`.
    pub fn n_antennas(&self) -> usize {
        self.n
    }

    /// Block length `T`.
    pub fn block_len(&self) -> usize {
        self.t
    }

    /// The stacked vector.
    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    /// Consumes the waveform, returning the stacked vector.
    pub fn into_vec(self) -> Vec<f64> {
        self.x
    }

    /// Slot vector `x_t^ℛ` (length `2N`).
    pub fn slot(&self, t: usize) -> &[f64] {
        &self.x[2 * self.n * t..2 * self.n * (t + 1)]
    }

    /// Per-antenna 2-vector `[ℜx_{t,n}, ℑx_{t,n}]`.
    pub fn element(&self, t: usize, n: usize) -> [f64; 2] {
        let base = 2 * self.n * t;
        [self.x[base + n], self.x[base + self.n + n]]
    }

    /// Overwrites one antenna sample.
    pub fn set_element(&mut self, t: usize, n: usize, v: [f64; 2]) {
        let base = 2 * self.n * t;
        self.x[base + n] = v[0];
        self.x[base + self.n + n] = v[1];
    }

    /// Complex sample `x_{t,n}`.
    pub fn complex(&self, t: usize, n: usize) -> Complex {
        let [re, im] = self.element(t, n);
        Complex::new(re, im)
    }

    /// True when every sample equals (bitwise) one of the alphabet's vertices.
    pub fn is_quantized(&self, qce: &QceSet) -> bool {
        (0..self.t).all(|t| {
            (0..self.n).all(|n| {
                let e = self.element(t, n);
                qce.vertices().iter().any(|v| v[0] == e[0] && v[1] == e[1])
            })
        })
    }
}

/// One concrete design problem.
#[derive(Debug, Clone)]
pub struct Instance {
    n: usize,
    k: usize,
    t: usize,
    psk_order: usize,
    channel: Vec<Complex>,
    symbols: Vec<Complex>,
    ci: Vec<f64>,
    b: Vec<f64>,
    steering: SteeringBlocks,
    grid: Vec<f64>,
    desired: Vec<f64>,
    weights: Vec<f64>,
    qce: QceSet,
}

impl Instance {
    /// Assembles an instance from a configuration, a `K × N` channel and a
    /// `K × T` symbol matrix (both row-major).
    pub fn assemble(cfg: &SystemConfig, channel: Vec<Complex>, symbols: Vec<Complex>) -> Result<Self> {
        cfg.validate()?;
        let (n, k, t) = (cfg.n_antennas, cfg.n_users, cfg.block_len);
        if channel.len() != k * n {
            return Err(Error::Dimension {
                what: "channel",
                expected: k * n,
                got: channel.len(),
            });
        }
        if symbols.len() != k * t {
            return Err(Error::Dimension {
                what: "symbols",
                expected: k * t,
                got: symbols.len(),
            });
        }
        let mut ci = Vec::with_capacity(t * 2 * k * 2 * n);
        for slot in 0..t {
            for user in 0..k {
                let h = &channel[user * n..(user + 1) * n];
                let [r0, r1] = ci_rows(h, symbols[user * t + slot], cfg.psk_order);
                ci.extend_from_slice(&r0);
                ci.extend_from_slice(&r1);
            }
        }
        let desired: Vec<f64> = cfg
            .grid
            .iter()
            .map(|&g| desired_pattern(g, &cfg.target_angles, cfg.beam_width))
            .collect();
        let weights = pattern_weights(&desired)?;
        let qce = QceSet::new(cfg.quant_levels, cfg.power, n)?;
        Ok(Self {
            n,
            k,
            t,
            psk_order: cfg.psk_order,
            channel,
            symbols,
            ci,
            b: vec![cfg.margin_threshold; 2 * k * t],
            steering: build_steering_blocks(&cfg.grid, n),
            grid: cfg.grid.clone(),
            desired,
            weights,
            qce,
        })
    }

    /// Draws channel then symbols from a ChaCha stream seeded with `cfg.rng_seed`.
    pub fn random(cfg: &SystemConfig) -> Result<Self> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let h = generate_channel(&mut rng, cfg.n_users, cfg.n_antennas);
        let s = generate_symbols(&mut rng, cfg.n_users, cfg.block_len, cfg.psk_order);
        Self::assemble(cfg, h, s)
    }

    /// Replaces the threshold vector (length `2KT`, one entry per CI row).
    pub fn with_thresholds(mut self, b: Vec<f64>) -> Result<Self> {
        if b.len() != 2 * self.k * self.t {
            return Err(Error::Dimension {
                what: "thresholds",
                expected: 2 * self.k * self.t,
                got: b.len(),
            });
        }
        self.b = b;
        Ok(self)
    }

    /// Antennas `N`.
    pub fn n_antennas(&self) -> usize {
        self.n
    }
    /// Users `K`.
    pub fn n_users(&self) -> usize {
        self.k
    }
    /// Block length `T`.
    pub fn block_len(&self) -> usize {
        self.t
    }
    /// Grid size `Q`.
    pub fn n_angles(&self) -> usize {
        self.grid.len()
    }
    /// PSK order `M`.
    pub fn psk_order(&self) -> usize {
        self.psk_order
    }
    /// Channel (row-major `K × N`).
    pub fn channel(&self) -> &[Complex] {
        &self.channel
    }
    /// Row `h_kᵀ` of the channel.
    pub fn channel_row(&self, k: usize) -> &[Complex] {
        &self.channel[k * self.n..(k + 1) * self.n]
    }
    /// Symbols (row-major `K × T`).
    pub fn symbols(&self) -> &[Complex] {
        &self.symbols
    }
    /// Symbol `s_{t,k}`.
    pub fn symbol(&self, t: usize, k: usize) -> Complex {
        self.symbols[k * self.t + t]
    }
    /// Dense `C_t` (row-major, `2K × 2N`).
    pub fn ci_block(&self, t: usize) -> &[f64] {
        let size = 4 * self.k * self.n;
        &self.ci[t * size..(t + 1) * size]
    }
    /// Threshold vector `b` (length `2KT`).
    pub fn thresholds(&self) -> &[f64] {
        &self.b
    }
    /// Steering blocks `A_q`.
    pub fn steering(&self) -> &SteeringBlocks {
        &self.steering
    }
    /// Grid angles in degrees.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    /// Desired pattern samples `d_q`.
    pub fn desired(&self) -> &[f64] {
        &self.desired
    }
    /// Normalized weights `c_q`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    /// The alphabet.
    pub fn qce(&self) -> &QceSet {
        &self.qce
    }
    /// Length of the stacked primal vector `x` (`2NT`).
    pub fn x_len(&self) -> usize {
        2 * self.n * self.t
    }
    /// Length of `w` (`2QT`).
    pub fn w_len(&self) -> usize {
        2 * self.n_angles() * self.t
    }
    /// Length of `z` and `b` (`2KT`).
    pub fn z_len(&self) -> usize {
        2 * self.k * self.t
    }

    /// `out = C x` (block-diagonal over slots).
    pub fn apply_ci(&self, x: &[f64], out: &mut [f64]) {
        let d = 2 * self.n;
        let rows = 2 * self.k;
        for t in 0..self.t {
            let xt = &x[t * d..(t + 1) * d];
            let ct = self.ci_block(t);
            for r in 0..rows {
                out[t * rows + r] = dot(&ct[r * d..(r + 1) * d], xt);
            }
        }
    }

    /// `out += Cᵀ y`.
    pub fn apply_ci_transpose_add(&self, y: &[f64], out: &mut [f64]) {
        let d = 2 * self.n;
        let rows = 2 * self.k;
        for t in 0..self.t {
            let ot = &mut out[t * d..(t + 1) * d];
            let ct = self.ci_block(t);
            for r in 0..rows {
                let yr = y[t * rows + r];
                if yr == 0.0 {
                    continue;
                }
                for (o, c) in ot.iter_mut().zip(&ct[r * d..(r + 1) * d]) {
                    *o += c * yr;
                }
            }
        }
    }

    /// `out = A x` with `A = I_T ⊗ Ã`; `out[2Qt + 2q..]` holds `w_{t,q}`.
    pub fn apply_steering(&self, x: &[f64], out: &mut [f64]) {
        let d = 2 * self.n;
        let qn = self.n_angles();
        for t in 0..self.t {
            let xt = &x[t * d..(t + 1) * d];
            for q in 0..qn {
                let v = self.steering.apply(q, xt);
                out[2 * (t * qn + q)] = v[0];
                out[2 * (t * qn + q) + 1] = v[1];
            }
        }
    }

    /// `out += Aᵀ y`.
    pub fn apply_steering_transpose_add(&self, y: &[f64], out: &mut [f64]) {
        let d = 2 * self.n;
        let qn = self.n_angles();
        for t in 0..self.t {
            let ot = &mut out[t * d..(t + 1) * d];
            for q in 0..qn {
                let i = 2 * (t * qn + q);
                self.steering.apply_transpose_add(q, [y[i], y[i + 1]], ot);
            }
        }
    }
}
