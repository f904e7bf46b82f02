//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use qce_core::metrics::{beampattern, sep_bounds, simulate_ser_range, SerEstimate};
use qce_core::model::noise_std_from_snr_db;
use qce_core::oracle::{self, EnumerationBudget};
use qce_core::outer::homotopy_solve;
use qce_core::{Instance, RealWaveform, SolveReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{num, read_waveform, write_csv, write_json, write_waveform};

/// Noise trials handed to one worker; results do not depend on it.
const SER_CHUNK: u64 = 512;

/// Seed of the noise generator for a design seed. Kept apart from the
/// channel/symbol stream, which is seeded with the design seed itself.
pub fn noise_seed(seed: u64) -> u64 {
    seed ^ 0x5eed_0f_0a15e_u64
}

/// One solved design point.
#[derive(Debug, Clone)]
pub struct SolvedPoint {
    pub seed: u64,
    pub margin_threshold: f64,
    pub levels: usize,
    pub instance: Instance,
    pub report: SolveReport,
    pub elapsed_s: f64,
}

impl SolvedPoint {
    /// Every stage met the outer stopping rule and the iterate reached the vertices.
    pub fn converged(&self) -> bool {
        self.report.all_stages_converged && self.report.vertex_converged
    }
}

pub fn solve_point(cfg: &RunConfig, seed: u64, margin_threshold: f64, levels: usize) -> Result<SolvedPoint> {
    let mut sys = cfg.system_config(seed);
    sys.margin_threshold = margin_threshold;
    sys.quant_levels = levels;
    let instance = Instance::random(&sys)?;
    let hp = cfg.homotopy_params();
    hp.validate(levels)?;
    let start = Instant::now();
    let report = homotopy_solve(&instance, &hp, &cfg.alm_params()?)?;
    Ok(SolvedPoint {
        seed,
        margin_threshold,
        levels,
        instance,
        report,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

/// Monte-Carlo SER with trials spread over the rayon pool.
pub fn simulate_ser_parallel(x: &RealWaveform, inst: &Instance, sigma: f64, trials: u64, seed: u64) -> SerEstimate {
    let chunks: Vec<u64> = (0..trials.div_ceil(SER_CHUNK)).collect();
    chunks
        .par_iter()
        .map(|&c| {
            let lo = c * SER_CHUNK;
            simulate_ser_range(x, inst, sigma, lo..(lo + SER_CHUNK).min(trials), seed)
        })
        .reduce(
            || SerEstimate { errors: 0, symbols: 0 },
            |a, b| SerEstimate {
                errors: a.errors + b.errors,
                symbols: a.symbols + b.symbols,
            },
        )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SerSummary {
    pub snr_db: f64,
    pub sigma: f64,
    pub trials: u64,
    pub errors: u64,
    pub symbols: u64,
    pub ser: f64,
    pub min_margin: f64,
    pub sep_lower_at_min_margin: f64,
    pub sep_upper_at_min_margin: f64,
    pub sep_upper_at_b: f64,
}

pub fn ser_summary(x: &RealWaveform, inst: &Instance, snr_db: f64, trials: u64, seed: u64) -> SerSummary {
    let sigma = noise_std_from_snr_db(snr_db);
    let est = simulate_ser_parallel(x, inst, sigma, trials, noise_seed(seed));
    let fr = qce_core::metrics::check_feasibility(x, inst);
    let (lo, hi) = sep_bounds(fr.min_margin.max(0.0), sigma);
    let b = inst.thresholds().iter().copied().fold(f64::INFINITY, f64::min);
    SerSummary {
        snr_db,
        sigma,
        trials,
        errors: est.errors,
        symbols: est.symbols,
        ser: est.rate(),
        min_margin: fr.min_margin,
        sep_lower_at_min_margin: lo,
        sep_upper_at_min_margin: hi,
        sep_upper_at_b: sep_bounds(b.max(0.0), sigma).1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSummary {
    pub lambda: f64,
    pub outer_iters: usize,
    pub converged: bool,
    pub max_vertex_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub seed: u64,
    pub n_antennas: usize,
    pub n_users: usize,
    pub block_len: usize,
    pub quant_levels: usize,
    pub margin_threshold: f64,
    pub mse: f64,
    pub alpha: f64,
    pub min_margin: f64,
    pub ci_violations: usize,
    pub max_ci_violation: f64,
    pub infeasible: bool,
    pub vertex_converged: bool,
    pub all_stages_converged: bool,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub median_certified_inner: Option<usize>,
    pub stages: Vec<StageSummary>,
    pub ser: Option<SerSummary>,
    pub solve_seconds: f64,
    pub ser_seconds: f64,
}

/// Median inner sweep count over certified subproblem solves.
pub fn median_certified_inner(report: &SolveReport) -> Option<usize> {
    let mut v: Vec<usize> = report.rows.iter().filter(|r| r.certified).map(|r| r.inner_iters).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    Some(v[v.len() / 2])
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_beampattern(path: &Path, p: &SolvedPoint) -> Result<()> {
    let inst = &p.instance;
    let power = beampattern(&p.report.waveform, inst);
    let alpha = p.report.alpha;
    let rows = inst.grid().iter().zip(&power).zip(inst.desired()).map(|((th, pw), d)| {
        vec![num(*th), num(*pw), num(10.0 * pw.log10()), num(*d), num(alpha * d)]
    });
    write_csv(
        path,
        &[
            "theta_deg: degrees; power: linear, (1/T) sum_t |a(theta)^H x_t|^2; power_db: 10 log10(power)",
            "desired: 0/1 mask; desired_scaled: alpha* times mask (linear)",
        ],
        &["theta_deg", "power", "power_db", "desired", "desired_scaled"],
        rows,
    )
}

fn write_convergence(path: &Path, report: &SolveReport) -> Result<()> {
    let rows = report.rows.iter().map(|r| {
        vec![
            r.m.to_string(),
            num(r.objective),
            num(r.viol_ci),
            num(r.viol_beam),
            num(r.cert_norm),
            num(r.rho),
            r.inner_iters.to_string(),
            u8::from(r.certified).to_string(),
            num(r.lambda),
        ]
    });
    write_csv(
        path,
        &[
            "m: outer iteration within stage (from 1); objective: augmented Lagrangian after the subproblem (dimensionless)",
            "viol_c: ||Cx - z - b||; viol_a: ||Ax - w||; cert_norm: ||e_x|| + ||e_w||; rho: CI penalty",
            "inner_iters: BSUM sweeps; certified: 1 if the sweep tolerance was met; lambda_stage: quantization penalty weight",
        ],
        &[
            "m",
            "objective",
            "viol_c",
            "viol_a",
            "cert_norm",
            "rho",
            "inner_iters",
            "certified",
            "lambda_stage",
        ],
        rows,
    )
}

/// `solve`: one homotopy run at `system.seed`.
pub fn run_solve(cfg: &RunConfig) -> Result<SolveSummary> {
    let s = &cfg.system;
    let point = solve_point(cfg, s.seed, s.margin_threshold, s.quant_levels)?;
    let dir = cfg.out_dir.as_path();
    ensure_dir(dir)?;
    write_beampattern(&dir.join("beampattern.csv"), &point)?;
    write_convergence(&dir.join("convergence.csv"), &point.report)?;
    write_waveform(&dir.join("waveform.csv"), &point.report.waveform)?;
    let ser_start = Instant::now();
    let ser = cfg
        .ser
        .enabled
        .then(|| ser_summary(&point.report.waveform, &point.instance, s.snr_db, cfg.ser.trials, s.seed));
    let ser_seconds = ser_start.elapsed().as_secs_f64();
    let r = &point.report;
    let summary = SolveSummary {
        seed: s.seed,
        n_antennas: s.n_antennas,
        n_users: s.n_users,
        block_len: s.block_len,
        quant_levels: s.quant_levels,
        margin_threshold: s.margin_threshold,
        mse: r.mse,
        alpha: r.alpha,
        min_margin: r.feasibility.min_margin,
        ci_violations: r.feasibility.violated,
        max_ci_violation: r.feasibility.max_violation,
        infeasible: !r.feasibility.feasible,
        vertex_converged: r.vertex_converged,
        all_stages_converged: r.all_stages_converged,
        outer_iterations: r.rows.len(),
        inner_iterations: r.rows.iter().map(|x| x.inner_iters).sum(),
        median_certified_inner: median_certified_inner(r),
        stages: r
            .stages
            .iter()
            .map(|st| StageSummary {
                lambda: st.lambda,
                outer_iters: st.outer_iters,
                converged: st.converged,
                max_vertex_distance: st.max_vertex_distance,
            })
            .collect(),
        ser,
        solve_seconds: point.elapsed_s,
        ser_seconds,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub b: f64,
    pub levels: usize,
    pub snr_db: f64,
    pub seed: u64,
    pub mse: f64,
    pub ser: f64,
    pub min_margin: f64,
    pub converged: bool,
    pub feasible: bool,
}

fn axis<T: Clone>(name: &str, v: &Option<Vec<T>>, fallback: T) -> Result<Vec<T>> {
    match v {
        None => Ok(vec![fallback]),
        Some(list) if list.is_empty() => Err(CliError::Config(format!("sweep.{name} is empty"))),
        Some(list) => Ok(list.clone()),
    }
}

/// `sweep`: solves every `(b, L, seed)` point, evaluates SER at every SNR,
/// writes `tradeoff.csv` (one row per point) and `tradeoff_mean.csv`
/// (seed averages).
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let sw = &cfg.sweep;
    if sw.b.is_none() && sw.levels.is_none() && sw.snr_db.is_none() {
        return Err(CliError::Config("sweep needs at least one of sweep.b, sweep.levels, sweep.snr_db".into()));
    }
    let s = &cfg.system;
    let bs = axis("b", &sw.b, s.margin_threshold)?;
    let ls = axis("levels", &sw.levels, s.quant_levels)?;
    let snrs = axis("snr_db", &sw.snr_db, s.snr_db)?;
    let seeds = axis("seeds", &sw.seeds, s.seed)?;
    if bs.iter().any(|b| !(*b >= 0.0)) {
        return Err(CliError::Config("sweep.b entries must be nonnegative".into()));
    }
    let mut points = Vec::new();
    for &b in &bs {
        for &l in &ls {
            for &seed in &seeds {
                points.push((b, l, seed));
            }
        }
    }
    let solved: Vec<SolvedPoint> = points
        .par_iter()
        .map(|&(b, l, seed)| solve_point(cfg, seed, b, l))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(solved.len() * snrs.len());
    for p in &solved {
        for &snr in &snrs {
            let ser = ser_summary(&p.report.waveform, &p.instance, snr, cfg.ser.trials, p.seed);
            rows.push(SweepRow {
                b: p.margin_threshold,
                levels: p.levels,
                snr_db: snr,
                seed: p.seed,
                mse: p.report.mse,
                ser: ser.ser,
                min_margin: p.report.feasibility.min_margin,
                converged: p.converged(),
                feasible: p.report.feasibility.feasible,
            });
        }
    }
    let dir = cfg.out_dir.as_path();
    ensure_dir(dir)?;
    write_csv(
        &dir.join("tradeoff.csv"),
        &[
            "b: safety margin threshold (linear amplitude); levels: phases L; snr_db: dB; seed: design seed",
            "mse: beampattern MSE (linear power squared); ser: symbol error rate (fraction); min_margin: linear amplitude",
            "converged, feasible: 0/1",
        ],
        &["b", "levels", "snr_db", "seed", "mse", "ser", "min_margin", "converged", "feasible"],
        rows.iter().map(|r| {
            vec![
                num(r.b),
                r.levels.to_string(),
                num(r.snr_db),
                r.seed.to_string(),
                num(r.mse),
                num(r.ser),
                num(r.min_margin),
                u8::from(r.converged).to_string(),
                u8::from(r.feasible).to_string(),
            ]
        }),
    )?;
    let means = aggregate(&rows);
    write_csv(
        &dir.join("tradeoff_mean.csv"),
        &[
            "b: linear amplitude; levels: phases L; snr_db: dB; seeds: number of seeds averaged",
            "mean_mse: linear power squared; mean_ser: fraction; mean_min_margin: linear amplitude",
            "converged_fraction, feasible_fraction: fractions of seeds",
        ],
        &[
            "b",
            "levels",
            "snr_db",
            "seeds",
            "mean_mse",
            "mean_ser",
            "mean_min_margin",
            "converged_fraction",
            "feasible_fraction",
        ],
        means.iter().map(|m| {
            vec![
                num(m.b),
                m.levels.to_string(),
                num(m.snr_db),
                m.seeds.to_string(),
                num(m.mean_mse),
                num(m.mean_ser),
                num(m.mean_min_margin),
                num(m.converged_fraction),
                num(m.feasible_fraction),
            ]
        }),
    )?;
    Ok(rows)
}

/// Seed average of sweep rows sharing `(b, L, snr)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMean {
    pub b: f64,
    pub levels: usize,
    pub snr_db: f64,
    pub seeds: usize,
    pub mean_mse: f64,
    pub mean_ser: f64,
    pub mean_min_margin: f64,
    pub converged_fraction: f64,
    pub feasible_fraction: f64,
}

/// Groups rows by `(b, L, snr)` in first-appearance order.
pub fn aggregate(rows: &[SweepRow]) -> Vec<SweepMean> {
    let mut order: Vec<(u64, usize, u64)> = Vec::new();
    let mut groups: BTreeMap<(u64, usize, u64), Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        let key = (r.b.to_bits(), r.levels, r.snr_db.to_bits());
        if !groups.contains_key(&key) {
            order.push(key);
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .iter()
        .map(|key| {
            let g = &groups[key];
            let n = g.len() as f64;
            let mean = |f: &dyn Fn(&SweepRow) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / n;
            SweepMean {
                b: g[0].b,
                levels: g[0].levels,
                snr_db: g[0].snr_db,
                seeds: g.len(),
                mean_mse: mean(&|r| r.mse),
                mean_ser: mean(&|r| r.ser),
                mean_min_margin: mean(&|r| r.min_margin),
                converged_fraction: mean(&|r| f64::from(u8::from(r.converged))),
                feasible_fraction: mean(&|r| f64::from(u8::from(r.feasible))),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub seed: u64,
    pub oracle_feasible: bool,
    pub oracle_objective: Option<f64>,
    pub feasible_candidates: u128,
    pub homotopy_objective: f64,
    pub homotopy_feasible: bool,
    pub relative_gap: Option<f64>,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub seeds: usize,
    pub oracle_feasible: usize,
    pub agreeing: usize,
    pub agreement_fraction: f64,
    pub gap_tol: f64,
    pub pass_fraction: f64,
    pub sound: bool,
    pub pass: bool,
    pub rows: Vec<OracleRow>,
}

/// Slack below the exhaustive optimum tolerated before an output counts as
/// beating it.
pub const SOUNDNESS_SLACK: f64 = 1e-9;

/// Compares one homotopy run against exhaustive enumeration.
pub fn oracle_row(cfg: &RunConfig, seed: u64) -> Result<OracleRow> {
    let s = &cfg.system;
    let point = solve_point(cfg, seed, s.margin_threshold, s.quant_levels)?;
    let inst = &point.instance;
    let best = oracle::exhaustive_solve(inst, EnumerationBudget(u128::from(cfg.oracle.budget)))?;
    let xh = oracle::to_complex(&point.report.waveform);
    let hv = oracle::objective(&xh, inst);
    let hfeas = oracle::is_feasible(&xh, inst);
    let (oracle_objective, feasible_candidates, relative_gap) = match &best {
        Some(b) => (Some(b.objective), b.feasible_count, Some((hv - b.objective) / b.objective.abs().max(1e-300))),
        None => (None, 0, None),
    };
    let agrees = hfeas && relative_gap.is_some_and(|g| g <= cfg.oracle.gap_tol);
    Ok(OracleRow {
        seed,
        oracle_feasible: best.is_some(),
        oracle_objective,
        feasible_candidates,
        homotopy_objective: hv,
        homotopy_feasible: hfeas,
        relative_gap,
        agrees,
    })
}

/// `oracle-check`: per-seed comparison table plus pass/fail summary.
///
/// A CI-feasible homotopy output whose objective lies below the exhaustive
/// optimum is an oracle soundness failure and aborts the run after the
/// files are written.
pub fn run_oracle_check(cfg: &RunConfig) -> Result<OracleSummary> {
    let seeds: Vec<u64> = (0..cfg.oracle.n_seeds).map(|i| cfg.system.seed + i).collect();
    let rows: Vec<OracleRow> = seeds.par_iter().map(|&seed| oracle_row(cfg, seed)).collect::<Result<_>>()?;
    let oracle_feasible = rows.iter().filter(|r| r.oracle_feasible).count();
    let agreeing = rows.iter().filter(|r| r.oracle_feasible && r.agrees).count();
    let unsound: Vec<u64> = rows
        .iter()
        .filter(|r| {
            r.homotopy_feasible && r.oracle_objective.is_some_and(|o| r.homotopy_objective < o - SOUNDNESS_SLACK)
        })
        .map(|r| r.seed)
        .collect();
    let agreement_fraction = if oracle_feasible == 0 {
        0.0
    } else {
        agreeing as f64 / oracle_feasible as f64
    };
    let sound = unsound.is_empty();
    let summary = OracleSummary {
        seeds: rows.len(),
        oracle_feasible,
        agreeing,
        agreement_fraction,
        gap_tol: cfg.oracle.gap_tol,
        pass_fraction: cfg.oracle.pass_fraction,
        sound,
        pass: sound && oracle_feasible > 0 && agreement_fraction >= cfg.oracle.pass_fraction,
        rows,
    };
    let dir = cfg.out_dir.as_path();
    ensure_dir(dir)?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, num);
    write_csv(
        &dir.join("oracle.csv"),
        &[
            "seed: design seed; oracle_feasible, homotopy_feasible, agrees: 0/1",
            "oracle_objective, homotopy_objective: sum_q B_q^2 - (sum_q c_q B_q)^2 (linear power squared); empty when infeasible",
            "feasible_candidates: count; relative_gap: (homotopy - oracle) / |oracle|",
        ],
        &[
            "seed",
            "oracle_feasible",
            "oracle_objective",
            "feasible_candidates",
            "homotopy_objective",
            "homotopy_feasible",
            "relative_gap",
            "agrees",
        ],
        summary.rows.iter().map(|r| {
            vec![
                r.seed.to_string(),
                u8::from(r.oracle_feasible).to_string(),
                opt(r.oracle_objective),
                r.feasible_candidates.to_string(),
                num(r.homotopy_objective),
                u8::from(r.homotopy_feasible).to_string(),
                opt(r.relative_gap),
                u8::from(r.agrees).to_string(),
            ]
        }),
    )?;
    write_json(&dir.join("oracle_summary.json"), &summary)?;
    if !sound {
        return Err(CliError::Soundness(format!("homotopy beat the exhaustive optimum on seeds {unsound:?}")));
    }
    Ok(summary)
}

/// `ser`: SER of a stored waveform for the configured channel, at
/// `sweep.snr_db` if given, else at `system.snr_db`.
pub fn run_ser(cfg: &RunConfig, waveform: &Path) -> Result<Vec<SerSummary>> {
    let s = &cfg.system;
    let inst = Instance::random(&cfg.system_config(s.seed))?;
    let x = read_waveform(waveform, s.n_antennas, s.block_len, inst.qce())?;
    let snrs = axis("snr_db", &cfg.sweep.snr_db, s.snr_db)?;
    let out: Vec<SerSummary> = snrs
        .iter()
        .map(|&snr| ser_summary(&x, &inst, snr, cfg.ser.trials, s.seed))
        .collect();
    let dir = cfg.out_dir.as_path();
    ensure_dir(dir)?;
    write_csv(
        &dir.join("ser.csv"),
        &[
            "snr_db: dB (SNR = 1/sigma^2); sigma: noise standard deviation (linear); trials: noise draws per symbol",
            "errors, symbols: counts; ser: fraction; min_margin: linear amplitude",
            "sep_*: symbol error probability bounds Q(sqrt(2) d / sigma) and 2 Q(sqrt(2) d / sigma) (fractions)",
        ],
        &[
            "snr_db",
            "sigma",
            "trials",
            "errors",
            "symbols",
            "ser",
            "min_margin",
            "sep_lower_at_min_margin",
            "sep_upper_at_min_margin",
            "sep_upper_at_b",
        ],
        out.iter().map(|r| {
            vec![
                num(r.snr_db),
                num(r.sigma),
                r.trials.to_string(),
                r.errors.to_string(),
                r.symbols.to_string(),
                num(r.ser),
                num(r.min_margin),
                num(r.sep_lower_at_min_margin),
                num(r.sep_upper_at_min_margin),
                num(r.sep_upper_at_b),
            ]
        }),
    )?;
    Ok(out)
}
