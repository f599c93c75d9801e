//! Tensor-product quadrature on the unit disc and on a truncated plane, in
//! polar coordinates with `s = r²`.
//!
//! Area integrals are written as `∫ F dA = ½ ∫ ds ∫ dθ F`. The angular grid is
//! the uniform `M`-point trapezoid rule, exact for `e^{ikθ}` with `|k| < M`.
//! Radially:
//! - on the disc, Gauss–Jacobi in `s` with weight `(1 − s)^a`, so boundary
//!   factors `(1 − |z|²)^a` are integrated exactly instead of being sampled;
//! - on the plane, composite Gauss–Legendre in `s` on `[0, S]`, with panels
//!   narrow enough to resolve `e^{-α s}`.
//!
//! Weights for large boundary exponents span hundreds of orders of
//! magnitude, so rings carry log-weights and callers that can supply
//! `ln ρ` should use [`QuadratureRule::integrate_weighted`].

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::jets::C64;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::InvalidQuadrature("order must be at least 1".into()));
    }
    let mut out = vec![(0.0, 0.0); n];
    for i in 0..(n + 1) / 2 {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, pm1) = legendre(n, t);
            dp = n as f64 * (t * p - pm1) / (t * t - 1.0);
            let dt = p / dp;
            t -= dt;
            if dt.abs() <= 1e-16 * t.abs().max(1.0) {
                break;
            }
        }
        let (p, pm1) = legendre(n, t);
        if dp == 0.0 || !p.is_finite() {
            return Err(Error::InvalidQuadrature("Legendre iteration failed".into()));
        }
        dp = n as f64 * (t * p - pm1) / (t * t - 1.0);
        let w = 2.0 / ((1.0 - t * t) * dp * dp);
        out[i] = (-t, w);
        out[n - 1 - i] = (t, w);
    }
    Ok(out)
}

fn legendre(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// `(P_n, P_{n-1})` of the Jacobi polynomials `P^{(a,b)}` at `t`.
fn jacobi(n: usize, a: f64, b: f64, t: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = 0.5 * ((a - b) + (a + b + 2.0) * t);
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + a + b;
        let a1 = 2.0 * k * (k + a + b) * (c - 2.0);
        let a2 = (c - 1.0) * (a * a - b * b);
        let a3 = (c - 2.0) * (c - 1.0) * c;
        let a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c;
        let p2 = ((a2 + a3 * t) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

fn jacobi_derivative(n: usize, a: f64, b: f64, t: f64, p: f64, pm1: f64) -> f64 {
    let nf = n as f64;
    let c = 2.0 * nf + a + b;
    (nf * ((a - b) - c * t) * p + 2.0 * (nf + a) * (nf + b) * pm1) / (c * (1.0 - t * t))
}

/// Gauss–Jacobi rule for `∫₀¹ (1 − s)^a F(s) ds`, as `(s_i, ln W_i)`.
///
/// Nodes come from the Golub–Welsch eigenproblem and are refined by Newton
/// steps on `P_n^{(a,0)}`; weights use the closed form in terms of `P_n'`,
/// evaluated in log space so that they keep full relative accuracy.
pub fn gauss_jacobi_log(n: usize, a: f64) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::InvalidQuadrature("order must be at least 1".into()));
    }
    if !(a > -1.0 && a.is_finite()) {
        return Err(Error::InvalidQuadrature(format!(
            "boundary exponent must exceed -1, got {a}"
        )));
    }
    let b = 0.0;
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        jm[(k, k)] = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            let c = 2.0 * kf + a + b;
            (b * b - a * a) / (c * (c + 2.0))
        };
        if k + 1 < n {
            let j = kf + 1.0;
            let c = 2.0 * j + a + b;
            let beta = 4.0 * j * (j + a) * (j + b) * (j + a + b) / (c * c * (c + 1.0) * (c - 1.0));
            jm[(k, k + 1)] = beta.sqrt();
            jm[(k + 1, k)] = beta.sqrt();
        }
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jm).eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    let nf = n as f64;
    let log_const =
        libm::lgamma(nf + a + 1.0) + libm::lgamma(nf + b + 1.0) - libm::lgamma(nf + a + b + 1.0) - libm::lgamma(nf + 1.0);
    let mut out = Vec::with_capacity(n);
    for t0 in nodes {
        let mut t = t0;
        for _ in 0..8 {
            let (p, pm1) = jacobi(n, a, b, t);
            let dp = jacobi_derivative(n, a, b, t, p, pm1);
            let step = p / dp;
            if !step.is_finite() {
                break;
            }
            let next = t - step;
            if (next - t0).abs() > 1e-3 || !(next > -1.0 && next < 1.0) {
                break;
            }
            t = next;
            if step.abs() <= 4.0 * f64::EPSILON * t.abs().max(1e-3) {
                break;
            }
        }
        let (p, pm1) = jacobi(n, a, b, t);
        let dp = jacobi_derivative(n, a, b, t, p, pm1);
        // W on [0,1] = 2^{-(a+b+1)} × weight on [-1,1]
        let log_w = log_const - (1.0 - t * t).ln() - 2.0 * dp.abs().ln();
        if !log_w.is_finite() {
            return Err(Error::InvalidQuadrature("Jacobi weights overflowed".into()));
        }
        out.push((0.5 * (1.0 + t), log_w));
    }
    Ok(out)
}

/// Gauss–Jacobi rule for `∫₀¹ (1 − s)^a F(s) ds`, as `(s_i, W_i)`.
pub fn gauss_jacobi(n: usize, a: f64) -> Result<Vec<(f64, f64)>> {
    Ok(gauss_jacobi_log(n, a)?
        .into_iter()
        .map(|(s, lw)| (s, lw.exp()))
        .collect())
}

/// Integration domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureDomain {
    UnitDisc,
    /// The disc `|z| ≤ cutoff_radius` standing in for the whole plane.
    Plane { cutoff_radius: f64 },
}

/// One circle of nodes `|z|² = s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ring {
    pub s: f64,
    pub radius: f64,
    /// `ln` of the area weight of each node on the ring; for the disc this
    /// already divides out the boundary factor `(1 − s)^a`.
    pub log_weight: f64,
}

/// Polar tensor-product rule.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub domain: QuadratureDomain,
    pub radial_order: usize,
    pub angular_order: usize,
    /// Boundary exponent `a` (disc) or decay rate used for panelling (plane).
    pub weight_exponent_hint: f64,
    rings: Vec<Ring>,
    angles: Vec<f64>,
}

/// Builds a rule.
///
/// - Disc: `radial_order` Gauss–Jacobi nodes for `(1 − s)^hint`.
/// - Plane: `radial_order` Gauss–Legendre nodes per panel on `[0, S]`,
///   `S = cutoff_radius²`, with panel width at most `4 / hint` (a single
///   panel if `hint ≤ 0`).
///
/// The angular grid has `angular_order + 1` equispaced points.
pub fn build_quadrature(
    domain: QuadratureDomain,
    radial_order: usize,
    angular_order: usize,
    weight_exponent_hint: f64,
) -> Result<QuadratureRule> {
    if radial_order == 0 || angular_order == 0 {
        return Err(Error::InvalidQuadrature("orders must be at least 1".into()));
    }
    let m = angular_order + 1;
    let log_ang = (PI / m as f64).ln();
    let rings = match domain {
        QuadratureDomain::UnitDisc => {
            let a = weight_exponent_hint;
            gauss_jacobi_log(radial_order, a)?
                .into_iter()
                .map(|(s, lw)| Ring {
                    s,
                    radius: s.sqrt(),
                    log_weight: lw + log_ang - a * (-s).ln_1p(),
                })
                .collect()
        }
        QuadratureDomain::Plane { cutoff_radius } => {
            if !(cutoff_radius.is_finite() && cutoff_radius > 0.0) {
                return Err(Error::InvalidQuadrature(format!(
                    "plane cutoff radius must be positive, got {cutoff_radius}"
                )));
            }
            let total = cutoff_radius * cutoff_radius;
            let panels = if weight_exponent_hint > 0.0 {
                ((weight_exponent_hint * total / 4.0).ceil() as usize).max(1)
            } else {
                1
            };
            let h = total / panels as f64;
            let gl = gauss_legendre(radial_order)?;
            let mut rings = Vec::with_capacity(panels * radial_order);
            for p in 0..panels {
                let lo = p as f64 * h;
                for &(t, w) in &gl {
                    let s = lo + 0.5 * h * (t + 1.0);
                    rings.push(Ring {
                        s,
                        radius: s.sqrt(),
                        log_weight: (0.5 * h * w).ln() + log_ang,
                    });
                }
            }
            rings
        }
    };
    let angles = (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect();
    Ok(QuadratureRule {
        domain,
        radial_order,
        angular_order,
        weight_exponent_hint,
        rings,
        angles,
    })
}

impl QuadratureRule {
    pub fn rings(&self) -> &[Ring] {
        &self.rings
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.rings.len() * self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All nodes with plain (positive) area weights. Weights may overflow
    /// to infinity for extreme boundary exponents; prefer
    /// [`QuadratureRule::integrate_weighted`] there.
    pub fn nodes(&self) -> Vec<(C64, f64)> {
        let mut out = Vec::with_capacity(self.len());
        for ring in &self.rings {
            let w = ring.log_weight.exp();
            for &th in &self.angles {
                out.push((C64::from_polar(ring.radius, th), w));
            }
        }
        out
    }

    /// `∫ f dA`.
    pub fn integrate<F: Fn(C64) -> C64>(&self, f: F) -> C64 {
        self.integrate_weighted(|_| 0.0, f)
    }

    /// `∫ e^{ln_w(z)} f(z) dA`, combining `ln_w` with the node log-weights
    /// before exponentiating.
    pub fn integrate_weighted<L, F>(&self, ln_w: L, f: F) -> C64
    where
        L: Fn(C64) -> f64,
        F: Fn(C64) -> C64,
    {
        let mut acc = C64::new(0.0, 0.0);
        for ring in &self.rings {
            for &th in &self.angles {
                let z = C64::from_polar(ring.radius, th);
                let w = (ring.log_weight + ln_w(z)).exp();
                if w != 0.0 {
                    acc += f(z) * w;
                }
            }
        }
        acc
    }
}
