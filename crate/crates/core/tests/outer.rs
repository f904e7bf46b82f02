use proptest::prelude::*;
use qce_core::inner::{residuals, SpectralBound};
use qce_core::model::uniform_grid;
use qce_core::outer::{
    alm_solve, homotopy_solve, initial_penalties, update_multipliers, update_penalties, Violation,
};
use qce_core::{AlmParams, HomotopyParams, Instance, SolverState, SystemConfig};

fn instance(n: usize, k: usize, t: usize, b: f64, seed: u64) -> Instance {
    let cfg = SystemConfig {
        n_antennas: n,
        n_users: k,
        block_len: t,
        margin_threshold: b,
        grid: uniform_grid(-90.0, 90.0, 2.0),
        rng_seed: seed,
        ..SystemConfig::default()
    };
    Instance::random(&cfg).unwrap()
}

#[test]
fn multiplier_examples() {
    let inst = instance(3, 1, 1, 0.2, 0);
    let mut st = SolverState::zeros(&inst, 1.0, 2.0, 1.0, 1.0);
    st.mu = vec![999.0, -5.0];
    let before = st.clone();
    let p = AlmParams::default();
    update_multipliers(&mut st, &[0.0; 2], &vec![0.0; inst.w_len()], &p);
    assert_eq!(st, before);
    update_multipliers(&mut st, &[300.0, 1.0], &vec![0.0; inst.w_len()], &p);
    assert_eq!(st.mu, vec![1000.0, -3.0]);
}

#[test]
fn penalty_examples() {
    let inst = instance(3, 1, 1, 0.2, 0);
    let mut st = SolverState::zeros(&inst, 1.0, 0.3, 0.1, 1.0);
    let v = Violation { ci_sq: 2.0, beam_sq: 1.0 };
    assert!(update_penalties(&mut st, v, v, 1.01, 0.95));
    assert!((st.rho_mu - 0.303).abs() < 1e-15);
    let zero = Violation { ci_sq: 0.0, beam_sq: 0.0 };
    assert!(!update_penalties(&mut st, zero, v, 1.01, 0.95));
    assert!((st.rho_mu - 0.303).abs() < 1e-15);
}

#[test]
fn infinite_tolerance_stops_after_one_iteration() {
    let inst = instance(4, 2, 3, 0.3, 1);
    let ap = AlmParams { stop_tol: Some(f64::INFINITY), ..AlmParams::default() };
    let bound = SpectralBound::new(&inst, ap.rho_ratio);
    let (rm, rn) = initial_penalties(1.0, &ap);
    let mut st = SolverState::zeros(&inst, 1.0, rm, rn, 0.0);
    let rep = alm_solve(&mut st, &inst, &ap, &bound);
    assert_eq!(rep.rows.len(), 1);
    assert!(rep.converged);
}

#[test]
fn iteration_cap_returns_best_iterate() {
    let inst = instance(6, 2, 4, 0.5, 2);
    let ap = AlmParams { stop_tol: Some(0.0), max_outer: 7, ..AlmParams::default() };
    let bound = SpectralBound::new(&inst, ap.rho_ratio);
    let (rm, rn) = initial_penalties(0.1, &ap);
    let mut st = SolverState::zeros(&inst, 0.1, rm, rn, 0.0);
    st.objective_scale = ap.objective_scale.value(&inst);
    let rep = alm_solve(&mut st, &inst, &ap, &bound);
    assert!(!rep.converged);
    assert_eq!(rep.rows.len(), 7);
    let best = rep
        .rows
        .iter()
        .map(|r| r.cert_norm.max(r.viol_ci).max(r.viol_beam))
        .fold(f64::INFINITY, f64::min);
    assert_eq!(rep.stop_measure, best);
    let (rc, ra) = residuals(&st, &inst);
    let vc = rc.iter().map(|v| v * v).sum::<f64>().sqrt();
    let va = ra.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(vc <= best * (1.0 + 1e-12) && va <= best * (1.0 + 1e-12));
}

#[test]
fn homotopy_report_contract() {
    let inst = instance(6, 2, 4, 0.3, 3);
    let hp = HomotopyParams::default();
    let ap = AlmParams::default();
    let rep = homotopy_solve(&inst, &hp, &ap).unwrap();
    assert!(rep.waveform.is_quantized(inst.qce()));
    assert!(rep.rows.len() <= ap.max_outer * hp.max_stages);
    assert!(rep.stages.windows(2).all(|w| w[1].lambda > w[0].lambda));
    let tol = ap.tolerance(inst.block_len());
    let mut start = 0;
    for stage in &rep.stages {
        let rows = &rep.rows[start..start + stage.outer_iters];
        assert!(rows.iter().all(|r| r.lambda == stage.lambda));
        assert!(rows.iter().enumerate().all(|(i, r)| r.m == i + 1));
        if stage.converged {
            let last = rows.last().unwrap();
            assert!(last.viol_ci <= tol && last.viol_beam <= tol && last.cert_norm <= tol);
        }
        start += stage.outer_iters;
    }
    assert_eq!(start, rep.rows.len());
    let power = qce_core::metrics::beampattern(&rep.waveform, &inst);
    let (alpha, mse) = qce_core::metrics::beampattern_mse(inst.desired(), &power).unwrap();
    assert_eq!((alpha, mse), (rep.alpha, rep.mse));
    assert_eq!(rep.feasibility, qce_core::metrics::check_feasibility(&rep.waveform, &inst));
}

#[test]
fn homotopy_is_deterministic() {
    let inst = instance(4, 1, 3, 0.3, 4);
    let a = homotopy_solve(&inst, &HomotopyParams::default(), &AlmParams::default()).unwrap();
    let b = homotopy_solve(&inst, &HomotopyParams::default(), &AlmParams::default()).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multipliers_stay_boxed_and_match_formula(
        mu in prop::collection::vec(-1e3f64..1e3, 2),
        rc in prop::collection::vec(-1e3f64..1e3, 2),
        rho in 1e-3f64..1e2,
    ) {
        let inst = instance(2, 1, 1, 0.1, 0);
        let mut st = SolverState::zeros(&inst, 1.0, rho, rho / 3.0, 1.0);
        st.mu = mu.clone();
        let ra = vec![0.0; inst.w_len()];
        let p = AlmParams::default();
        update_multipliers(&mut st, &rc, &ra, &p);
        for i in 0..2 {
            prop_assert!(st.mu[i].abs() <= p.mu_bound);
            let raw = mu[i] + rho * rc[i];
            if raw.abs() <= p.mu_bound {
                prop_assert_eq!(st.mu[i], raw);
            }
        }
    }

    #[test]
    fn penalty_ratio_is_invariant(steps in prop::collection::vec((0.0f64..2.0, 0.0f64..2.0), 1..60)) {
        let inst = instance(2, 1, 1, 0.1, 0);
        let (r0, r1) = initial_penalties(2.0, &AlmParams::default());
        let mut st = SolverState::zeros(&inst, 2.0, r0, r1, 1.0);
        let ratio = r1 / r0;
        let mut prev = Violation { ci_sq: 1.0, beam_sq: 1.0 };
        for (a, b) in steps {
            let cur = Violation { ci_sq: a, beam_sq: b };
            let (m, n) = (st.rho_mu, st.rho_nu);
            let shrank = cur.scaled(m, n) < 0.95 * prev.scaled(m, n);
            let grew = update_penalties(&mut st, cur, prev, 1.01, 0.95);
            prop_assert_eq!(grew, !shrank);
            prop_assert_eq!(st.rho_mu, if grew { m * 1.01 } else { m });
            prev = cur;
        }
        prop_assert!((st.rho_nu / st.rho_mu - ratio).abs() <= 1e-12 * ratio);
    }
}
