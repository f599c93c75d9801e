//! Numerical weighted Bergman kernel in one complex dimension.
//!
//! The kernel of the space of holomorphic polynomials of degree `≤ d` in
//! `L²(ρ dA)` is `K_d(x, ȳ) = Σ_{m,n} x^m [G⁻¹]_{mn} ȳ^n` with the Gram matrix
//! `G_{mn} = ∫ z^n z̄^m ρ dA`. As `d` grows, `K_d` increases to the Bergman
//! kernel on the diagonal.
//!
//! The entries of `G` span hundreds of orders of magnitude, so the matrix
//! is assembled directly in equilibrated form `Ĝ = D^{-1/2} G D^{-1/2}` with
//! `D = diag(G)` carried as logarithms. Kernel values come from the Cholesky
//! factor of `Ĝ`; on the diagonal the partial sums over the factor's rows
//! give `K_{d'}` for every `d' ≤ d` at once.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::WeightSpec;
use crate::jets::{Jet, Layout, C64};
use crate::quadrature::{QuadratureDomain, QuadratureRule};

/// Default bound on the condition estimate of the equilibrated Gram matrix.
pub const MAX_CONDITION: f64 = 1e12;
/// Default bound on the relative mass ignored by the plane cutoff.
pub const TAIL_LIMIT: f64 = 1e-12;
/// Default radius inside which disc symbols are extracted.
pub const DISC_INTERIOR_RADIUS: f64 = 0.8;

fn check_one_dimensional(w: &WeightSpec) -> Result<()> {
    if w.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: w.dim(),
        });
    }
    Ok(())
}

/// `ln ρ(z)` for a one-dimensional weight, using a single jet evaluation of
/// the potential for both `φ` and `∂∂̄φ`.
pub fn log_weight(w: &WeightSpec, z: C64) -> Result<f64> {
    let layout = Layout::get(2, 2);
    let x = Jet::variable(&layout, 0, z)?;
    let y = Jet::variable(&layout, 1, z.conj())?;
    let phi = w.phi.eval_jet(&[x], &[y])?;
    let g = phi.partial(&[1, 1])?;
    let mu = w.mu.eval(&[z], &[z.conj()])?;
    if mu.norm() == 0.0 {
        return Err(Error::MuZero);
    }
    if g.norm() == 0.0 {
        return Err(Error::SingularMetric);
    }
    Ok(-w.alpha * phi.value().re + mu.norm().ln() + g.norm().ln())
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.filter(|x| *x > f64::NEG_INFINITY).collect();
    let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// Radial profile `ln(s^d max_θ ρ)` used to place and audit the plane cutoff.
fn radial_log_profile(w: &WeightSpec, degree: usize, s: f64) -> Result<f64> {
    let r = s.sqrt();
    let mut best = f64::NEG_INFINITY;
    for k in 0..8 {
        let z = C64::from_polar(r, PI * k as f64 / 4.0);
        best = best.max(log_weight(w, z)?);
    }
    Ok(degree as f64 * s.ln() + best)
}

/// Plane cutoff and the relative tail mass it ignores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneCutoff {
    pub radius: f64,
    pub tail: f64,
}

fn profile_scan(w: &WeightSpec, degree: usize, stop: impl Fn(f64, f64, f64) -> bool) -> Result<(Vec<(f64, f64)>, f64)> {
    let ds = 0.05 / w.alpha.max(1e-3);
    let mut pts = Vec::new();
    let mut peak = f64::NEG_INFINITY;
    let mut s = 0.5 * ds;
    for _ in 0..2_000_000 {
        let lf = radial_log_profile(w, degree, s)?;
        peak = peak.max(lf);
        pts.push((s, lf));
        if stop(s, lf, peak) {
            let mass = log_sum_exp(pts.iter().map(|p| p.1)) + ds.ln() + PI.ln();
            return Ok((pts, mass));
        }
        s += ds;
    }
    Err(Error::InvalidQuadrature("weight does not decay; no plane cutoff found".into()))
}

fn tail_at(pts: &[(f64, f64)], log_mass: f64) -> f64 {
    let n = pts.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let (s1, l1) = pts[n - 1];
    let (s0, l0) = pts[n - 2];
    let slope = (l1 - l0) / (s1 - s0);
    if slope >= 0.0 {
        return f64::INFINITY;
    }
    // ∫_S^∞ f ds ≈ f(S) / |d ln f/ds|, angular factor π as in the mass.
    (l1 - (-slope).ln() + PI.ln() - log_mass).exp()
}

/// Smallest cutoff (on a fine grid) whose ignored mass of `|z|^{2d} ρ` is
/// below `tail_limit`, relative to the total.
pub fn plane_cutoff(w: &WeightSpec, degree: usize, tail_limit: f64) -> Result<PlaneCutoff> {
    check_one_dimensional(w)?;
    let target = tail_limit.ln() - 6.0;
    let (pts, log_mass) = profile_scan(w, degree, |_, lf, peak| lf < peak + target)?;
    let tail = tail_at(&pts, log_mass);
    Ok(PlaneCutoff {
        radius: pts.last().unwrap().0.sqrt(),
        tail,
    })
}

/// Relative mass of `|z|^{2d} ρ` outside `|z| ≤ radius`.
pub fn plane_tail_estimate(w: &WeightSpec, degree: usize, radius: f64) -> Result<f64> {
    check_one_dimensional(w)?;
    let s_cut = radius * radius;
    // total mass from a scan well past the peak
    let (_, log_mass) = profile_scan(w, degree, |_, lf, peak| lf < peak - 60.0)?;
    let (pts, _) = profile_scan(w, degree, |s, _, _| s >= s_cut)?;
    Ok(tail_at(&pts, log_mass))
}

/// Equilibrated Gram matrix of the monomials `1, z, …, z^d` and its factor.
#[derive(Debug, Clone)]
pub struct GramData {
    pub degree: usize,
    pub alpha: f64,
    pub domain: QuadratureDomain,
    /// `Ĝ_{mn} = G_{mn} e^{-σ_m - σ_n}`.
    pub scaled: DMatrix<C64>,
    /// `σ_n = ½ ln G_{nn}`.
    pub log_scale: Vec<f64>,
    /// Lower Cholesky factor of `Ĝ`.
    pub factor: DMatrix<C64>,
    /// `λ_max / λ_min` of `Ĝ`.
    pub condition_estimate: f64,
    /// Ignored relative mass for plane rules.
    pub tail_estimate: Option<f64>,
}

/// Options for [`gram_matrix_with`].
#[derive(Debug, Clone, Copy)]
pub struct GramOptions {
    pub max_condition: f64,
    pub tail_limit: f64,
}

impl Default for GramOptions {
    fn default() -> Self {
        GramOptions {
            max_condition: MAX_CONDITION,
            tail_limit: TAIL_LIMIT,
        }
    }
}

pub fn gram_matrix(w: &WeightSpec, degree: usize, rule: &QuadratureRule) -> Result<GramData> {
    gram_matrix_with(w, degree, rule, &GramOptions::default())
}

/// Per-ring angular transform `A_k = Σ_j e^{ln T_j - c} e^{ikθ_j}`, `k = -d..=d`.
struct RingTransform {
    ln_r: f64,
    c: f64,
    a: Vec<C64>,
}

pub fn gram_matrix_with(w: &WeightSpec, degree: usize, rule: &QuadratureRule, opts: &GramOptions) -> Result<GramData> {
    check_one_dimensional(w)?;
    let tail_estimate = match rule.domain {
        QuadratureDomain::Plane { cutoff_radius } => {
            let tail = plane_tail_estimate(w, degree, cutoff_radius)?;
            if !(tail <= opts.tail_limit) {
                return Err(Error::CutoffTooSmall {
                    tail,
                    limit: opts.tail_limit,
                });
            }
            Some(tail)
        }
        QuadratureDomain::UnitDisc => None,
    };
    let d = degree;
    let angles = rule.angles();
    let m = angles.len();
    let twiddle: Vec<C64> = (0..m).map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)).collect();

    let transforms: Vec<RingTransform> = rule
        .rings()
        .par_iter()
        .map(|ring| {
            let ln_t: Vec<f64> = angles
                .iter()
                .map(|&th| Ok(ring.log_weight + log_weight(w, C64::from_polar(ring.radius, th))?))
                .collect::<Result<_>>()?;
            if ln_t.iter().any(|v| v.is_nan()) {
                return Err(Error::InvalidQuadrature("weight evaluated to NaN".into()));
            }
            let c = ln_t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let t: Vec<f64> = ln_t.iter().map(|v| (v - c).exp()).collect();
            let a = (0..=2 * d)
                .map(|idx| {
                    let k = idx as i64 - d as i64;
                    let mut acc = C64::new(0.0, 0.0);
                    for (j, tj) in t.iter().enumerate() {
                        let pos = (k * j as i64).rem_euclid(m as i64) as usize;
                        acc += twiddle[pos] * *tj;
                    }
                    acc
                })
                .collect();
            Ok(RingTransform {
                ln_r: ring.radius.ln(),
                c,
                a,
            })
        })
        .collect::<Result<_>>()?;

    let log_scale: Vec<f64> = (0..=d)
        .map(|n| {
            let v = 0.5
                * log_sum_exp(
                    transforms
                        .iter()
                        .map(|t| t.c + t.a[d].re.ln() + 2.0 * n as f64 * t.ln_r),
                );
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidQuadrature(format!("Gram diagonal entry {n} is not finite")))
            }
        })
        .collect::<Result<_>>()?;

    let scaled = transforms
        .par_iter()
        .fold(
            || DMatrix::<C64>::zeros(d + 1, d + 1),
            |mut acc, t| {
                for mm in 0..=d {
                    for nn in 0..=d {
                        let e = t.c + (mm + nn) as f64 * t.ln_r - log_scale[mm] - log_scale[nn];
                        let k = nn as i64 - mm as i64 + d as i64;
                        acc[(mm, nn)] += t.a[k as usize] * e.exp();
                    }
                }
                acc
            },
        )
        .reduce(|| DMatrix::<C64>::zeros(d + 1, d + 1), |a, b| a + b);
    let scaled = (&scaled + scaled.adjoint()) * C64::new(0.5, 0.0);

    let eig = SymmetricEigen::new(scaled.clone()).eigenvalues;
    let lmin = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let lmax = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let condition_estimate = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if !(condition_estimate <= opts.max_condition) {
        return Err(Error::IllConditioned {
            estimate: condition_estimate,
            limit: opts.max_condition,
        });
    }
    let factor = cholesky_lower(&scaled)?;
    Ok(GramData {
        degree,
        alpha: w.alpha,
        domain: rule.domain,
        scaled,
        log_scale,
        factor,
        condition_estimate,
        tail_estimate,
    })
}

fn cholesky_lower(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = a.nrows();
    let mut l = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)].re;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if !(diag > 0.0) {
            return Err(Error::Factorization(format!(
                "Gram matrix not positive definite at pivot {j}"
            )));
        }
        let djj = diag.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / djj;
        }
    }
    Ok(l)
}

impl GramData {
    /// Unscaled entry `G_{mn} = ∫ z^n z̄^m ρ`.
    pub fn entry(&self, m: usize, n: usize) -> C64 {
        self.scaled[(m, n)] * (self.log_scale[m] + self.log_scale[n]).exp()
    }

    /// Unscaled Gram matrix (entries may overflow for extreme weights).
    pub fn gram(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.degree + 1, self.degree + 1, |m, n| self.entry(m, n))
    }

    fn check_point(&self, z: C64) -> Result<()> {
        let limit = match self.domain {
            QuadratureDomain::UnitDisc => 1.0,
            QuadratureDomain::Plane { cutoff_radius } => cutoff_radius,
        };
        if !(z.norm() < limit) {
            return Err(Error::OutsideDomain(format!("|{z}| is not below {limit}")));
        }
        Ok(())
    }

    /// `(z^n e^{-σ_n})_n`.
    fn scaled_powers(&self, z: C64) -> Vec<C64> {
        let (r, th) = z.to_polar();
        (0..=self.degree)
            .map(|n| {
                if n == 0 {
                    C64::new((-self.log_scale[0]).exp(), 0.0)
                } else if r == 0.0 {
                    C64::new(0.0, 0.0)
                } else {
                    C64::from_polar((n as f64 * r.ln() - self.log_scale[n]).exp(), n as f64 * th)
                }
            })
            .collect()
    }

    fn forward_solve(&self, b: &[C64]) -> Vec<C64> {
        let n = b.len();
        let mut q = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut v = b[i];
            for k in 0..i {
                v -= self.factor[(i, k)] * q[k];
            }
            q[i] = v / self.factor[(i, i)];
        }
        q
    }

    /// `K_0, K_1, …, K_d` at `(x, ȳ)`: kernels of the nested polynomial spaces.
    pub fn kernel_partial_sums(&self, x: C64, ybar: C64) -> Result<Vec<C64>> {
        self.check_point(x)?;
        self.check_point(ybar)?;
        let a: Vec<C64> = self.scaled_powers(x).iter().map(|v| v.conj()).collect();
        let b = self.scaled_powers(ybar);
        let p = self.forward_solve(&a);
        let q = self.forward_solve(&b);
        let mut acc = C64::new(0.0, 0.0);
        Ok(p
            .iter()
            .zip(&q)
            .map(|(pk, qk)| {
                acc += pk.conj() * qk;
                acc
            })
            .collect())
    }

    /// Relative size of the last three increments of `K_d(x, x̄)`; a small
    /// value indicates the truncation has converged at `x`.
    pub fn diagonal_tail(&self, x: C64) -> Result<f64> {
        self.check_point(x)?;
        let b = self.scaled_powers(x.conj());
        let q = self.forward_solve(&b);
        // increments are |q_k|² ≥ 0; summing them avoids cancellation
        let total: f64 = q.iter().map(|v| v.norm_sqr()).sum();
        let tail: f64 = q.iter().rev().take(3).map(|v| v.norm_sqr()).sum();
        Ok(tail / total)
    }
}

/// `K_d(x, ȳ)`.
pub fn bergman_kernel_numeric(gd: &GramData, x: C64, ybar: C64) -> Result<C64> {
    Ok(*gd.kernel_partial_sums(x, ybar)?.last().unwrap())
}

/// `∫ K_d(x, z̄) z^j ρ(z) dA`, which reproduces `x^j` for `j ≤ d`.
pub fn reproduce_monomial(gd: &GramData, w: &WeightSpec, rule: &QuadratureRule, x: C64, j: usize) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for ring in rule.rings() {
        for &th in rule.angles() {
            let z = C64::from_polar(ring.radius, th);
            let lw = ring.log_weight + log_weight(w, z)?;
            let k = bergman_kernel_numeric(gd, x, z.conj())?;
            acc += k * z.powu(j as u32) * lw.exp();
        }
    }
    Ok(acc)
}

/// Diagonal symbol `k = (π/α) μ e^{-αφ} K_d` at `x`, for disc points with
/// `|x| ≤ DISC_INTERIOR_RADIUS`.
pub fn extract_symbol_numeric(w: &WeightSpec, gd: &GramData, x: C64) -> Result<f64> {
    extract_symbol_numeric_with(w, gd, x, DISC_INTERIOR_RADIUS)
}

pub fn extract_symbol_numeric_with(w: &WeightSpec, gd: &GramData, x: C64, interior_radius: f64) -> Result<f64> {
    check_one_dimensional(w)?;
    if matches!(gd.domain, QuadratureDomain::UnitDisc) && x.norm() > interior_radius {
        return Err(Error::OutsideDomain(format!(
            "|x| = {} exceeds the interior radius {interior_radius}",
            x.norm()
        )));
    }
    let xb = [x.conj()];
    let phi = w.phi.eval(&[x], &xb)?;
    let mu = w.mu.eval(&[x], &xb)?;
    let k = bergman_kernel_numeric(gd, x, x.conj())?;
    let pref = C64::from_polar(
        ((PI / w.alpha).ln() + mu.norm().ln() - w.alpha * phi.re).exp(),
        mu.arg() - w.alpha * phi.im,
    );
    let v = pref * k;
    if v.im.abs() > 1e-10 * v.re.abs().max(1.0) {
        return Err(Error::NotReal { real: v.re, imag: v.im });
    }
    Ok(v.re)
}

/// Numerical settings for a kernel computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSettings {
    pub degree: usize,
    pub radial_order: usize,
    pub angular_order: usize,
    /// Plane cutoff radius; chosen from the tail bound when `None`.
    pub cutoff_radius: Option<f64>,
}

impl KernelSettings {
    /// Defaults that integrate the Gram entries of all shipped models exactly
    /// or to rounding: `d + 16` radial nodes (per panel on the plane: 24),
    /// `2d + 8` angular order.
    pub fn for_degree(degree: usize, domain_is_disc: bool) -> KernelSettings {
        KernelSettings {
            degree,
            radial_order: if domain_is_disc { degree + 16 } else { 24 },
            angular_order: 2 * degree + 8,
            cutoff_radius: None,
        }
    }
}

/// `1/α`-expansion fitted by least squares.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaFit {
    /// `c_0, c_1, …` in `k ≈ Σ c_j α^{-j}`.
    pub coeffs: Vec<f64>,
    pub max_residual: f64,
}

/// Least-squares fit of `k(α) ≈ Σ_{j ≤ max_order} c_j α^{-j}`. Needs at least
/// `max_order + 2` distinct α so that the residual is informative.
pub fn fit_alpha_expansion(samples: &[(f64, f64)], max_order: usize) -> Result<AlphaFit> {
    let mut alphas: Vec<f64> = samples.iter().map(|s| s.0).collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let needed = max_order + 2;
    if alphas.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: alphas.len(),
        });
    }
    if samples.iter().any(|s| !(s.0 > 0.0 && s.0.is_finite() && s.1.is_finite())) {
        return Err(Error::InvalidParameter("samples must have positive α and finite values".into()));
    }
    let cols = max_order + 1;
    let a = DMatrix::<f64>::from_fn(samples.len(), cols, |i, j| samples[i].0.powi(-(j as i32)));
    let y = nalgebra::DVector::<f64>::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-13 * smax) {
        return Err(Error::RankDeficient);
    }
    let c = svd
        .solve(&y, 1e-13 * smax)
        .map_err(|e| Error::Factorization(e.to_string()))?;
    let r = &a * &c - &y;
    Ok(AlphaFit {
        coeffs: c.iter().copied().collect(),
        max_residual: r.amax(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{antiholomorphic, from_fn, holomorphic, one, product, Polarized};
    use crate::quadrature::build_quadrature;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sb(alpha: f64) -> WeightSpec {
        WeightSpec::new(product(&holomorphic(1, 0), &antiholomorphic(1, 0)), one(1), alpha).unwrap()
    }

    fn disc_mu_sq(alpha: f64) -> WeightSpec {
        let phi: Polarized = from_fn(1, "disc", |x, y| {
            Ok(-((&x[0] * &y[0]).scale(c(-1.0, 0.0)).add_constant(c(1.0, 0.0))).ln()?)
        });
        let mu: Polarized = from_fn(1, "mu", |x, y| (&x[0] * &y[0]).scale(c(-1.0, 0.0)).add_constant(c(1.0, 0.0)).powi(2));
        WeightSpec::new(phi, mu, alpha).unwrap()
    }

    fn plane_rule(w: &WeightSpec, d: usize) -> QuadratureRule {
        let cut = plane_cutoff(w, d, TAIL_LIMIT).unwrap();
        build_quadrature(QuadratureDomain::Plane { cutoff_radius: cut.radius }, 24, 2 * d + 8, w.alpha).unwrap()
    }

    #[test]
    fn segal_bargmann_gram_diagonal() {
        let w = sb(1.0);
        let d = 10;
        let gd = gram_matrix(&w, d, &plane_rule(&w, d)).unwrap();
        let mut fact = 1.0;
        for n in 0..=d {
            if n > 0 {
                fact *= n as f64;
            }
            assert_relative_eq!(gd.entry(n, n).re, PI * fact, max_relative = 1e-10);
            for m in 0..=d {
                if m != n {
                    assert!(gd.scaled[(m, n)].norm() < 1e-10);
                }
            }
        }
        assert!(gd.tail_estimate.unwrap() < TAIL_LIMIT);
    }

    #[test]
    fn disc_gram_first_entry() {
        let w = disc_mu_sq(2.0);
        let rule = build_quadrature(QuadratureDomain::UnitDisc, 20, 16, 2.0).unwrap();
        let gd = gram_matrix(&w, 4, &rule).unwrap();
        assert_relative_eq!(gd.entry(0, 0).re, PI / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn kernel_examples() {
        let w = sb(2.0);
        let gd = gram_matrix(&w, 20, &plane_rule(&w, 20)).unwrap();
        let k = bergman_kernel_numeric(&gd, c(0.5, 0.0), c(0.3, 0.0)).unwrap();
        let exact = 2.0 / PI * (2.0f64 * 0.15).exp();
        assert_relative_eq!(k.re, exact, max_relative = 1e-10);
        assert!(k.im.abs() < 1e-12);

        let w = disc_mu_sq(3.0);
        let rule = build_quadrature(QuadratureDomain::UnitDisc, 30, 40, 3.0).unwrap();
        let gd = gram_matrix(&w, 16, &rule).unwrap();
        let k = bergman_kernel_numeric(&gd, c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_relative_eq!(k.re, 4.0 / PI, max_relative = 1e-12);
        assert_relative_eq!(k.re, 1.0 / gd.entry(0, 0).re, max_relative = 1e-12);
    }

    #[test]
    fn non_radial_weight_has_off_diagonal_gram() {
        let beta = 0.7;
        let mu: Polarized = from_fn(1, "exp(beta Re z)", move |x, y| Ok((&x[0] + &y[0]).scale(c(0.5 * beta, 0.0)).exp()));
        let w = WeightSpec::new(disc_mu_sq(2.0).phi, mu, 2.0).unwrap();
        let rule = build_quadrature(QuadratureDomain::UnitDisc, 30, 40, 0.0).unwrap();
        let gd = gram_matrix(&w, 6, &rule).unwrap();
        let g = gd.gram();
        assert!(g[(0, 1)].norm() > 1e-3);
        assert!((&g - g.adjoint()).norm() < 1e-12 * g.norm());
    }

    #[test]
    fn symbols_and_monotonicity() {
        let w = disc_mu_sq(8.0);
        let rule = build_quadrature(QuadratureDomain::UnitDisc, 80, 136, 8.0).unwrap();
        let gd = gram_matrix(&w, 64, &rule).unwrap();
        let x = c(0.3, 0.2);
        assert_relative_eq!(extract_symbol_numeric(&w, &gd, x).unwrap(), 1.125, max_relative = 1e-10);
        let sums = gd.kernel_partial_sums(x, x.conj()).unwrap();
        assert!(sums.windows(2).all(|p| p[1].re >= p[0].re));
        assert!(gd.diagonal_tail(x).unwrap() < 1e-14);
        assert!(matches!(
            extract_symbol_numeric(&w, &gd, c(0.85, 0.0)),
            Err(Error::OutsideDomain(_))
        ));
    }

    #[test]
    fn reproducing_property() {
        let w = disc_mu_sq(3.0);
        let rule = build_quadrature(QuadratureDomain::UnitDisc, 20, 30, 3.0).unwrap();
        let gd = gram_matrix(&w, 10, &rule).unwrap();
        let x = c(0.4, -0.3);
        for j in [0usize, 3, 10] {
            let v = reproduce_monomial(&gd, &w, &rule, x, j).unwrap();
            assert!((v - x.powu(j as u32)).norm() < 1e-8);
        }
    }

    #[test]
    fn fit_examples() {
        let samples: Vec<(f64, f64)> = [8.0, 16.0, 32.0, 64.0].iter().map(|&a| (a, (a + 1.0) / a)).collect();
        let fit = fit_alpha_expansion(&samples, 2).unwrap();
        assert_relative_eq!(fit.coeffs[0], 1.0, max_relative = 1e-10);
        assert_relative_eq!(fit.coeffs[1], 1.0, max_relative = 1e-9);
        assert!(fit.max_residual < 1e-12);
        assert_eq!(
            fit_alpha_expansion(&samples[..3], 2).unwrap_err(),
            Error::TooFewSamples { needed: 4, got: 3 }
        );
        let dup = vec![(8.0, 1.0), (8.0, 1.0), (8.0, 1.0), (16.0, 1.0)];
        assert!(fit_alpha_expansion(&dup, 2).is_err());
    }

    #[test]
    fn cutoff_too_small_is_reported() {
        let w = sb(2.0);
        let rule = build_quadrature(QuadratureDomain::Plane { cutoff_radius: 1.0 }, 24, 48, 2.0).unwrap();
        assert!(matches!(gram_matrix(&w, 20, &rule), Err(Error::CutoffTooSmall { .. })));
    }
}
