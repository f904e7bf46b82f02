use std::f64::consts::{FRAC_1_SQRT_2, PI};

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use qce_core::model::{
    build_steering_blocks, ci_rows, desired_pattern, generate_channel, generate_symbols, pattern_weights, psk_symbol,
    steering_vector, uniform_grid,
};
use qce_core::{Complex, Error, Instance, QceSet, RealWaveform, SystemConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn real_stack(x: &[Complex]) -> Vec<f64> {
    x.iter().map(|v| v.re).chain(x.iter().map(|v| v.im)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Signed distances of `y` to the two boundaries of the decision sector
/// centred on `arg s`, positive on the inner side.
fn boundary_distances(y: Complex, s: Complex, m: usize) -> (f64, f64) {
    let r = y * s.conj();
    let (sn, cs) = (PI / m as f64).sin_cos();
    let upper = r.re * sn - r.im * cs;
    let lower = r.re * sn + r.im * cs;
    (upper, lower)
}

fn complex_vec(v: &[(f64, f64)]) -> Vec<Complex> {
    v.iter().map(|&(a, b)| Complex::new(a, b)).collect()
}

#[test]
fn alphabet_examples() {
    let q = QceSet::new(4, 1.0, 1).unwrap();
    assert_abs_diff_eq!(q.eta(), 1.0);
    let angles: Vec<f64> = q.vertices().iter().map(|v| v[1].atan2(v[0]).to_degrees()).collect();
    for (a, e) in angles.iter().zip([45.0, 135.0, -135.0, -45.0]) {
        assert_abs_diff_eq!(*a, e, epsilon = 1e-12);
    }
    assert_abs_diff_eq!(QceSet::new(4, 1.0, 64).unwrap().eta(), 0.125);
    let q2 = QceSet::new(2, 1.0, 1).unwrap();
    assert_abs_diff_eq!(q2.vertices()[0][0], 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(q2.vertices()[0][1], 1.0);
    assert_abs_diff_eq!(q2.vertices()[1][1], -1.0);
    assert!(QceSet::new(1, 1.0, 1).is_err());
    assert!(QceSet::new(4, 0.0, 1).is_err());
    assert!(QceSet::new(4, 1.0, 0).is_err());
}

#[test]
fn vertices_on_circle() {
    for l in [2, 3, 4, 8, 16, 64] {
        let q = QceSet::new(l, 1.0, 7).unwrap();
        for v in q.vertices() {
            assert!((v[0].hypot(v[1]) - q.eta()).abs() <= 1e-15);
        }
        if l >= 3 {
            let c: f64 = q.vertices().iter().map(|v| v[0]).sum::<f64>().abs()
                + q.vertices().iter().map(|v| v[1]).sum::<f64>().abs();
            assert!(c < 1e-12);
        }
    }
}

#[test]
fn steering_examples() {
    let a = steering_vector(0.0, 4);
    assert!(a.iter().all(|v| (v - Complex::new(1.0, 0.0)).norm() < 1e-15));
    let a = steering_vector(90.0, 2);
    assert!((a[1] - Complex::new(-1.0, 0.0)).norm() < 1e-15);
    let b = build_steering_blocks(&[0.0], 1);
    assert_eq!(b.block(0), [vec![1.0, 0.0], vec![0.0, 1.0]]);
}

#[test]
fn steering_rows_orthogonal() {
    let n = 9;
    let grid = uniform_grid(-90.0, 90.0, 7.0);
    let blocks = build_steering_blocks(&grid, n);
    for q in 0..grid.len() {
        let [r0, r1] = blocks.block(q);
        assert_abs_diff_eq!(dot(&r0, &r0), n as f64, epsilon = 1e-12);
        assert_abs_diff_eq!(dot(&r1, &r1), n as f64, epsilon = 1e-12);
        assert_abs_diff_eq!(dot(&r0, &r1), 0.0, epsilon = 1e-12);
    }
}

#[test]
fn desired_pattern_examples() {
    let targets = [-40.0, 0.0, 40.0];
    assert_eq!(desired_pattern(0.0, &targets, 10.0), 1.0);
    assert_eq!(desired_pattern(45.0, &targets, 10.0), 1.0);
    assert_eq!(desired_pattern(50.0, &targets, 10.0), 0.0);
}

#[test]
fn pattern_weight_examples() {
    let c = pattern_weights(&[1.0, 0.0, 0.0, 1.0]).unwrap();
    for (a, e) in c.iter().zip([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]) {
        assert_abs_diff_eq!(*a, e, epsilon = 1e-15);
    }
    assert!(matches!(pattern_weights(&[0.0; 5]), Err(Error::DegeneratePattern)));

    let grid = uniform_grid(-90.0, 90.0, 1.0);
    assert_eq!(grid.len(), 181);
    let d: Vec<f64> = grid.iter().map(|&g| desired_pattern(g, &[-40.0, 0.0, 40.0], 10.0)).collect();
    let c = pattern_weights(&d).unwrap();
    let nz: Vec<f64> = c.into_iter().filter(|&v| v != 0.0).collect();
    assert_eq!(nz.len(), 33);
    for v in nz {
        assert_abs_diff_eq!(v, 1.0 / 33f64.sqrt(), epsilon = 1e-15);
    }
}

#[test]
fn ci_row_examples() {
    let s = Complex::from_polar(1.0, PI / 4.0);
    let [a, b] = ci_rows(&[Complex::new(1.0, 0.0)], s, 4);
    for (r, e) in [(a, [1.0, 0.0]), (b, [0.0, 1.0])] {
        assert_abs_diff_eq!(r[0], e[0], epsilon = 1e-15);
        assert_abs_diff_eq!(r[1], e[1], epsilon = 1e-15);
    }
    let [a, b] = ci_rows(&[Complex::new(0.0, 1.0)], s, 4);
    for (r, e) in [(a, [0.0, -1.0]), (b, [1.0, 0.0])] {
        assert_abs_diff_eq!(r[0], e[0], epsilon = 1e-15);
        assert_abs_diff_eq!(r[1], e[1], epsilon = 1e-15);
    }
    let [a, b] = ci_rows(&[Complex::new(0.0, 0.0); 3], psk_symbol(2, 8), 8);
    assert!(a.iter().chain(&b).all(|&v| v == 0.0));
}

#[test]
fn ci_rows_match_boundary_distances_for_exact_symbols() {
    // y = c·s sits on the bisector: both distances equal c·sin(π/M)
    for m in [2usize, 4, 8, 16] {
        for i in 0..m {
            let s = psk_symbol(i, m);
            let rows = ci_rows(&[Complex::new(1.0, 0.0)], s, m);
            let x = real_stack(&[s * 0.7]);
            let expect = 0.7 * (PI / m as f64).sin();
            assert_abs_diff_eq!(dot(&rows[0], &x), expect, epsilon = 1e-14);
            assert_abs_diff_eq!(dot(&rows[1], &x), expect, epsilon = 1e-14);
        }
    }
}

#[test]
fn symbol_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = generate_symbols(&mut rng, 3, 40, 4);
    assert_eq!(s.len(), 120);
    let allowed = [PI / 4.0, 3.0 * PI / 4.0, -PI / 4.0, -3.0 * PI / 4.0];
    for v in &s {
        assert!((v.norm() - 1.0).abs() < 1e-15);
        assert!(allowed.iter().any(|a| (v.arg() - a).abs() < 1e-12));
    }
    let mut again = ChaCha8Rng::seed_from_u64(5);
    assert_eq!(generate_symbols(&mut again, 3, 40, 4), s);
}

#[test]
fn channel_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = generate_channel(&mut rng, 100, 1000);
    assert_eq!(h.len(), 100_000);
    let p = h.iter().map(|v| v.norm_sqr()).sum::<f64>() / h.len() as f64;
    assert!((0.98..=1.02).contains(&p), "mean power {p}");
    let re = h.iter().map(|v| v.re * v.re).sum::<f64>() / h.len() as f64;
    assert!((re - 0.5).abs() < 0.02);
    let mut again = ChaCha8Rng::seed_from_u64(11);
    assert_eq!(generate_channel(&mut again, 100, 1000), h);
}

#[test]
fn instance_shapes() {
    let cfg = SystemConfig {
        n_antennas: 3,
        n_users: 1,
        block_len: 1,
        margin_threshold: 0.0,
        ..SystemConfig::default()
    };
    let inst = Instance::random(&cfg).unwrap();
    assert_eq!(inst.ci_block(0).len(), 2 * 2 * 3);
    assert_eq!(inst.thresholds(), &[0.0, 0.0]);
    assert_eq!(inst.n_angles(), 181);
    let s: f64 = inst.weights().iter().map(|c| c * c).sum();
    assert!((s - 1.0).abs() < 1e-12);

    let bad = Instance::assemble(&cfg, vec![Complex::new(1.0, 0.0); 2], vec![Complex::new(1.0, 0.0)]);
    assert!(matches!(bad, Err(Error::Dimension { .. })));
    assert!(RealWaveform::new(3, 2, vec![0.0; 11]).is_err());
}

#[test]
fn config_validation() {
    let ok = SystemConfig::default();
    assert!(ok.validate().is_ok());
    for bad in [
        SystemConfig { n_antennas: 0, ..ok.clone() },
        SystemConfig { psk_order: 3, ..ok.clone() },
        SystemConfig { quant_levels: 1, ..ok.clone() },
        SystemConfig { power: -1.0, ..ok.clone() },
        SystemConfig { margin_threshold: -0.1, ..ok.clone() },
        SystemConfig { grid: vec![], ..ok.clone() },
        SystemConfig { grid: vec![0.0, 0.0], ..ok.clone() },
        SystemConfig { target_angles: vec![120.0], grid: vec![-10.0, 0.0], ..ok.clone() },
    ] {
        assert!(bad.validate().is_err() || Instance::random(&bad).is_err());
    }
}

fn cvec(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n)
}

proptest! {
    #[test]
    fn steering_block_matches_complex(n in 1usize..12, theta in -90.0f64..90.0, x in cvec(12)) {
        let x = complex_vec(&x[..n]);
        let a = steering_vector(theta, n);
        let ahx: Complex = a.iter().zip(&x).map(|(ai, xi)| ai.conj() * xi).sum();
        let blocks = build_steering_blocks(&[theta], n);
        let v = blocks.apply(0, &real_stack(&x));
        prop_assert!((v[0] * v[0] + v[1] * v[1] - ahx.norm_sqr()).abs() <= 1e-12 * (1.0 + ahx.norm_sqr()));
        prop_assert!((v[0] - ahx.re).abs() <= 1e-12 && (v[1] - ahx.im).abs() <= 1e-12);
        let nrm: f64 = a.iter().map(|v| v.norm_sqr()).sum();
        prop_assert!((nrm - n as f64).abs() <= 1e-12);
    }

    #[test]
    fn ci_rows_are_boundary_distances(n in 1usize..8, h in cvec(8), x in cvec(8), mi in 0usize..3, si in 0usize..16) {
        let m = [4usize, 8, 16][mi];
        let h = complex_vec(&h[..n]);
        let x = complex_vec(&x[..n]);
        let s = psk_symbol(si % m, m);
        let y: Complex = h.iter().zip(&x).map(|(a, b)| a * b).sum();
        let (upper, lower) = boundary_distances(y, s, m);
        let [r0, r1] = ci_rows(&h, s, m);
        let xr = real_stack(&x);
        prop_assert!((dot(&r0, &xr) - upper).abs() <= 1e-9);
        prop_assert!((dot(&r1, &xr) - lower).abs() <= 1e-9);
        prop_assert!((dot(&r0, &xr).min(dot(&r1, &xr)) - upper.min(lower)).abs() <= 1e-9);
    }

    #[test]
    fn weights_normalized(d in prop::collection::vec(0.0f64..3.0, 1..50)) {
        prop_assume!(d.iter().any(|&v| v > 1e-6));
        let c = pattern_weights(&d).unwrap();
        prop_assert!((c.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() <= 1e-12);
        let i = d.iter().position(|&v| v > 1e-6).unwrap();
        for (cj, dj) in c.iter().zip(&d) {
            prop_assert!((cj * d[i] - c[i] * dj).abs() <= 1e-12);
        }
    }
}
