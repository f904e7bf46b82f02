//! Small dense kernels. Summation orders are fixed so results do not depend
//! on how callers partition work.

use alloc::vec;

/// Inner product with four interleaved accumulators.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(norm_sq(a))
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Largest eigenvalue of a symmetric positive semidefinite `d × d` matrix by
/// power iteration. Stops when the Rayleigh quotient changes by less than
/// `tol` relative, or after `max_iter` iterations.
pub(crate) fn psd_spectral_norm(m: &[f64], d: usize, tol: f64, max_iter: usize) -> f64 {
    debug_assert_eq!(m.len(), d * d);
    // deterministic start with nonzero overlap on generic eigenvectors
    let mut v: alloc::vec::Vec<f64> = (0..d)
        .map(|i| 1.0 + 0.37 * libm::sin(1.0 + 1.7 * i as f64))
        .collect();
    let mut mv = vec![0.0; d];
    let mut estimate = 0.0;
    let n0 = norm(&v);
    v.iter_mut().for_each(|x| *x /= n0);
    for _ in 0..max_iter {
        for (i, out) in mv.iter_mut().enumerate() {
            *out = dot(&m[i * d..(i + 1) * d], &v);
        }
        let rq = dot(&v, &mv);
        let nrm = norm(&mv);
        if nrm == 0.0 {
            return 0.0;
        }
        for (vi, mi) in v.iter_mut().zip(&mv) {
            *vi = mi / nrm;
        }
        if (rq - estimate).abs() <= tol * rq.abs() {
            return rq.max(estimate);
        }
        estimate = rq;
    }
    estimate
}
