//! Closed-form geometric kernels for the block updates.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::qce::QceSet;

/// Convex hull of the alphabet: a regular `L`-gon of circumradius `η` for
/// `L ≥ 3`, a vertical segment for `L = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HullGeometry {
    levels: usize,
    eta: f64,
    half_angle: f64,
    inradius: f64,
    half_edge: f64,
    /// `(cos, sin)` of the outward normal of edge `k`, which joins vertices `k-1` and `k`
    /// (indices mod `L`) and points at angle `2πk/L`.
    normals: Vec<[f64; 2]>,
}

impl HullGeometry {
    /// Derives the hull of `qce`.
    pub fn new(qce: &QceSet) -> Self {
        let levels = qce.levels();
        let eta = qce.eta();
        let half_angle = PI / levels as f64;
        let normals = (0..levels)
            .map(|k| {
                let psi = 2.0 * PI * k as f64 / levels as f64;
                [libm::cos(psi), libm::sin(psi)]
            })
            .collect();
        Self {
            levels,
            eta,
            half_angle,
            inradius: eta * libm::cos(half_angle),
            half_edge: eta * libm::sin(half_angle),
            normals,
        }
    }

    /// Sector half-angle `π/L`.
    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    /// Distance from the origin to every edge, `η cos(π/L)`.
    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    /// Outward unit normals of the edges; edge `k` has offset [`inradius`](Self::inradius).
    pub fn normals(&self) -> &[[f64; 2]] {
        &self.normals
    }

    /// True when `p` satisfies every half-plane of the hull within `tol`.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        if self.levels == 2 {
            return p[0].abs() <= tol && p[1].abs() <= self.eta + tol;
        }
        self.normals
            .iter()
            .all(|nrm| nrm[0] * p[0] + nrm[1] * p[1] <= self.inradius + tol)
    }

    /// Euclidean projection of `p` onto the hull.
    pub fn project(&self, p: [f64; 2]) -> [f64; 2] {
        if self.levels == 2 {
            // segment between (0, η) and (0, -η)
            return [0.0, p[1].clamp(-self.eta, self.eta)];
        }
        let sector = 2.0 * self.half_angle;
        let angle = libm::atan2(p[1], p[0]);
        let k = libm::floor((angle + self.half_angle) / sector) as i64;
        let k = k.rem_euclid(self.levels as i64) as usize;
        let [c, s] = self.normals[k];
        // rotate into the frame where edge k is the vertical chord x = inradius
        let u = c * p[0] + s * p[1];
        if u <= self.inradius {
            return p;
        }
        let v = -s * p[0] + c * p[1];
        let u = self.inradius;
        let v = v.clamp(-self.half_edge, self.half_edge);
        [c * u - s * v, s * u + c * v]
    }
}

/// Projection of `p` onto `conv(𝒳_L)`.
pub fn project_conv_qce(p: [f64; 2], geom: &HullGeometry) -> [f64; 2] {
    geom.project(p)
}

/// Componentwise `max(v, 0)`, in place.
pub fn project_nonneg(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// The unique nonnegative root of `4β³ + ρβ − ξ = 0` for `ρ > 0`, `ξ ≥ 0`.
///
/// Cardano's formula in the cancellation-free form `u − ρ/(12u)`, followed by
/// Newton polishing.
pub fn positive_cubic_root(rho: f64, xi: f64) -> f64 {
    debug_assert!(rho > 0.0 && xi >= 0.0);
    if xi <= 0.0 {
        return 0.0;
    }
    let p = rho / 12.0;
    let q = xi / 8.0;
    let disc = libm::sqrt(q * q + p * p * p);
    let u = libm::cbrt(q + disc);
    let mut beta = if u > 0.0 && disc.is_finite() {
        u - p / u
    } else {
        xi / rho
    };
    if !(beta > 0.0) || !beta.is_finite() {
        // ρ dominates: β ≈ ξ/ρ
        beta = xi / (rho + 4.0 * (xi / rho) * (xi / rho));
    }
    for _ in 0..3 {
        let f = 4.0 * beta * beta * beta + rho * beta - xi;
        let df = 12.0 * beta * beta + rho;
        let next = beta - f / df;
        if !(next > 0.0) {
            break;
        }
        if next == beta {
            break;
        }
        beta = next;
    }
    beta
}

/// Index of the alphabet vertex closest to `p`; ties go to the smallest index.
pub fn nearest_vertex(p: [f64; 2], qce: &QceSet) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, v) in qce.vertices().iter().enumerate() {
        let d = (p[0] - v[0]) * (p[0] - v[0]) + (p[1] - v[1]) * (p[1] - v[1]);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// The alphabet vertex closest to `p` (smallest index on ties).
pub fn snap_to_qce(p: [f64; 2], qce: &QceSet) -> [f64; 2] {
    qce.vertices()[nearest_vertex(p, qce)]
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: f64 = core::f64::consts::FRAC_1_SQRT_2;

    fn close(a: [f64; 2], b: [f64; 2], tol: f64) -> bool {
        (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol
    }

    #[test]
    fn square_projection_cases() {
        let g = HullGeometry::new(&QceSet::with_amplitude(4, 1.0));
        assert!(close(g.project([2.0, 0.0]), [H, 0.0], 1e-15));
        assert!(close(g.project([1.0, 1.0]), [H, H], 1e-15));
        assert_eq!(g.project([0.1, -0.2]), [0.1, -0.2]);
        assert!(close(g.project([-3.0, 0.2]), [-H, 0.2], 1e-14));
        assert!(close(g.project([0.3, -9.0]), [0.3, -H], 1e-14));
    }

    #[test]
    fn two_level_segment() {
        let g = HullGeometry::new(&QceSet::with_amplitude(2, 1.0));
        assert_eq!(g.project([0.5, 2.0]), [0.0, 1.0]);
        assert_eq!(g.project([-0.5, 0.25]), [0.0, 0.25]);
    }

    #[test]
    fn nonneg_projection() {
        let mut v = [-1.0, 2.0];
        project_nonneg(&mut v);
        assert_eq!(v, [0.0, 2.0]);
        let mut v = [-1.0, -0.5];
        project_nonneg(&mut v);
        assert_eq!(v, [0.0, 0.0]);
        let mut v = [0.0, 3.0, 1.5];
        project_nonneg(&mut v);
        assert_eq!(v, [0.0, 3.0, 1.5]);
    }

    #[test]
    fn cubic_root_exact_cases() {
        assert!((positive_cubic_root(4.0, 8.0) - 1.0).abs() < 1e-15);
        assert_eq!(positive_cubic_root(3.3, 0.0), 0.0);
        assert!((positive_cubic_root(1.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cubic_root_extreme_ratios() {
        for &(rho, xi) in &[(1e8, 1e-6), (1e-8, 1e6), (1e3, 1e-12), (1e-3, 1e-12), (5e5, 3e2)] {
            let b = positive_cubic_root(rho, xi);
            let r = 4.0 * b * b * b + rho * b - xi;
            assert!(r.abs() <= 1e-10 * xi.max(1.0), "rho={rho} xi={xi} r={r}");
            assert!(b > 0.0);
        }
    }

    #[test]
    fn snapping() {
        let q = QceSet::with_amplitude(4, 1.0);
        assert_eq!(nearest_vertex([1.0, 0.1], &q), 0);
        for (i, v) in q.vertices().iter().enumerate() {
            assert_eq!(nearest_vertex(*v, &q), i);
        }
        // (1, 0) is equidistant from vertices 0 (45°) and 3 (315°)
        assert_eq!(nearest_vertex([1.0, 0.0], &q), 0);
        assert_eq!(nearest_vertex([0.0, 0.0], &q), 0);
    }
}
