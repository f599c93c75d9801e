//! Kähler data derived from a potential: metric, inverse, determinant,
//! Laplacian, scalar curvature, the first-order coefficient `c`, and the
//! diastasis functions.
//!
//! Conventions:
//! - `metric[i][j] = g_{i j̄} = ∂_{x_i} ∂_{ȳ_j} φ`.
//! - `inverse[i][j] = g^{i j̄}`, so that `Σ_j g^{i j̄} g_{k j̄} = δ_{ik}` and
//!   `Δf = Σ_{i,j} g^{i j̄} ∂_i ∂_j̄ f`.
//! - `R = g^{j̄ i} ∂_i ∂_j̄ ln det g`. This is the negative of the usual
//!   differential-geometric scalar curvature; the first-order formulas are
//!   written for this sign (the unit disc has `R = 2`).
//!
//! All quantities are available at jet-valued points, which is how the
//! expansion operators differentiate them again.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::functions::{check_dims, Polarized, PolarizedFunction};
use crate::jets::{Jet, Layout, C64};

/// Weight `ρ = e^{-αφ} μ det(g)` on the diagonal.
#[derive(Debug, Clone)]
pub struct WeightSpec {
    pub phi: Polarized,
    pub mu: Polarized,
    pub alpha: f64,
}

impl WeightSpec {
    pub fn new(phi: Polarized, mu: Polarized, alpha: f64) -> Result<WeightSpec> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if phi.dim() != mu.dim() {
            return Err(Error::DimensionMismatch {
                expected: phi.dim(),
                got: mu.dim(),
            });
        }
        Ok(WeightSpec { phi, mu, alpha })
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<WeightSpec> {
        WeightSpec::new(Arc::clone(&self.phi), Arc::clone(&self.mu), alpha)
    }

    /// Checks μ > 0 and a positive-definite metric at the diagonal point `(x, x̄)`.
    pub fn validate_at(&self, x: &[C64]) -> Result<()> {
        let xb: Vec<C64> = x.iter().map(|v| v.conj()).collect();
        let mu = self.mu.eval(x, &xb)?;
        if !(mu.re > 0.0) || mu.im.abs() > 1e-10 * mu.re.abs().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "mu must be real positive on the diagonal, got {mu}"
            )));
        }
        kahler_data(self.phi.as_ref(), x, &xb).map(|_| ())
    }

    /// `ln ρ(x, x̄) = -α φ + ln μ + ln det g` (real part).
    pub fn log_density(&self, x: &[C64]) -> Result<f64> {
        let xb: Vec<C64> = x.iter().map(|v| v.conj()).collect();
        let phi = self.phi.eval(x, &xb)?;
        let mu = self.mu.eval(x, &xb)?;
        if mu.norm() == 0.0 {
            return Err(Error::MuZero);
        }
        let layout = Layout::get(0, 0);
        let (xs, ys) = constants(&layout, x, &xb);
        let metric = metric_jets(self.phi.as_ref(), &xs, &ys)?;
        let (_, det) = invert(&metric)?;
        Ok(-self.alpha * phi.re + mu.norm().ln() + det.value().norm().ln())
    }
}

/// Pointwise Kähler data.
#[derive(Debug, Clone)]
pub struct KahlerData {
    pub x: Vec<C64>,
    pub ybar: Vec<C64>,
    pub metric: DMatrix<C64>,
    pub inverse: DMatrix<C64>,
    pub det: C64,
    pub scalar_curvature: C64,
}

/// Tolerances used by [`kahler_data_with`].
#[derive(Debug, Clone, Copy)]
pub struct GeometryTolerances {
    pub diagonal: f64,
    pub linear_algebra: f64,
    pub realness: f64,
}

impl Default for GeometryTolerances {
    fn default() -> Self {
        GeometryTolerances {
            diagonal: 1e-12,
            linear_algebra: 1e-12,
            realness: 1e-10,
        }
    }
}

pub(crate) fn constants(layout: &Arc<Layout>, x: &[C64], ybar: &[C64]) -> (Vec<Jet>, Vec<Jet>) {
    (
        x.iter().map(|&v| Jet::constant(layout, v)).collect(),
        ybar.iter().map(|&v| Jet::constant(layout, v)).collect(),
    )
}

/// `ȳ == conj(x)` componentwise, within `tol`.
pub fn is_diagonal(x: &[C64], ybar: &[C64], tol: f64) -> bool {
    x.len() == ybar.len()
        && x
            .iter()
            .zip(ybar)
            .all(|(a, b)| (a.conj() - b).norm() <= tol * (1.0 + a.norm()))
}

/// A jet point `(x, z̄)` re-expressed with N extra shift variables per slot.
pub(crate) struct Extension {
    pub base: Arc<Layout>,
    pub offset: usize,
    pub dim: usize,
    /// `x`, `z̄` embedded in the extended layout without shift.
    pub x: Vec<Jet>,
    pub zbar: Vec<Jet>,
    /// `x + e_i`, `z̄ + e'_j`.
    pub x_shifted: Vec<Jet>,
    pub zbar_shifted: Vec<Jet>,
}

impl Extension {
    pub fn new(x: &[Jet], zbar: &[Jet], extra_order: usize) -> Result<Extension> {
        let dim = x.len();
        let base = x
            .first()
            .or(zbar.first())
            .map(|j| Arc::clone(j.layout()))
            .unwrap_or_else(|| Layout::get(0, 0));
        let offset = base.vars();
        let layout = Layout::get(offset + 2 * dim, base.order() + extra_order);
        let xe: Vec<Jet> = x.iter().map(|j| j.convert(&layout)).collect();
        let ze: Vec<Jet> = zbar.iter().map(|j| j.convert(&layout)).collect();
        let mut xs = Vec::with_capacity(dim);
        let mut zs = Vec::with_capacity(dim);
        for i in 0..dim {
            xs.push(&xe[i] + &Jet::variable(&layout, offset + i, C64::new(0.0, 0.0))?);
            zs.push(&ze[i] + &Jet::variable(&layout, offset + dim + i, C64::new(0.0, 0.0))?);
        }
        Ok(Extension {
            base,
            offset,
            dim,
            x: xe,
            zbar: ze,
            x_shifted: xs,
            zbar_shifted: zs,
        })
    }

    /// `∂_{e_i} ∂_{e'_j}` of an extended jet, restricted back to the base layout.
    pub fn mixed(&self, f: &Jet, i: usize, j: usize) -> Result<Jet> {
        Ok(f
            .derivative(self.offset + i)?
            .derivative(self.offset + self.dim + j)?
            .convert(&self.base))
    }

    pub fn first_holomorphic(&self, f: &Jet, i: usize) -> Result<Jet> {
        Ok(f.derivative(self.offset + i)?.convert(&self.base))
    }

    pub fn first_antiholomorphic(&self, f: &Jet, j: usize) -> Result<Jet> {
        Ok(f.derivative(self.offset + self.dim + j)?.convert(&self.base))
    }

    pub fn restrict(&self, f: &Jet) -> Jet {
        f.convert(&self.base)
    }
}

/// Gauss–Jordan inverse with partial pivoting on the value slot; returns `(M⁻¹, det M)`.
pub fn invert(m: &[Vec<Jet>]) -> Result<(Vec<Vec<Jet>>, Jet)> {
    let n = m.len();
    if n == 0 {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    let layout = Arc::clone(m[0][0].layout());
    let mut a: Vec<Vec<Jet>> = m.to_vec();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let v = if i == j { 1.0 } else { 0.0 };
                    Jet::constant(&layout, C64::new(v, 0.0))
                })
                .collect()
        })
        .collect();
    let mut det = Jet::constant(&layout, C64::new(1.0, 0.0));
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| {
                a[r][col]
                    .value()
                    .norm()
                    .total_cmp(&a[s][col].value().norm())
            })
            .unwrap();
        if a[pivot][col].value().norm() == 0.0 {
            return Err(Error::SingularMetric);
        }
        if pivot != col {
            a.swap(pivot, col);
            inv.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det = &det * &p;
        let pinv = p.recip()?;
        for k in 0..n {
            a[col][k] = &a[col][k] * &pinv;
            inv[col][k] = &inv[col][k] * &pinv;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r][col].clone();
            for k in 0..n {
                a[r][k] = &a[r][k] - &(&factor * &a[col][k]);
                inv[r][k] = &inv[r][k] - &(&factor * &inv[col][k]);
            }
        }
    }
    Ok((inv, det))
}

/// Metric, inverse metric, determinant and (optionally) curvature at a jet point.
#[derive(Debug, Clone)]
pub struct GeometryJets {
    pub metric: Vec<Vec<Jet>>,
    pub inverse: Vec<Vec<Jet>>,
    pub det: Jet,
    pub curvature: Option<Jet>,
}

impl GeometryJets {
    /// `Σ g^{ij̄} h[i][j]`.
    pub fn contract(&self, h: &[Vec<Jet>]) -> Jet {
        let layout = Arc::clone(self.det.layout());
        let mut acc = Jet::zero(&layout);
        for (gi, hi) in self.inverse.iter().zip(h) {
            for (g, hij) in gi.iter().zip(hi) {
                acc = &acc + &(g * hij);
            }
        }
        acc
    }
}

pub fn metric_jets(phi: &dyn PolarizedFunction, x: &[Jet], zbar: &[Jet]) -> Result<Vec<Vec<Jet>>> {
    check_dims(phi.dim(), x, zbar)?;
    let ext = Extension::new(x, zbar, 2)?;
    let f = phi.eval_jet(&ext.x_shifted, &ext.zbar_shifted)?;
    (0..ext.dim)
        .map(|i| (0..ext.dim).map(|j| ext.mixed(&f, i, j)).collect())
        .collect()
}

fn inverse_from_metric(metric: &[Vec<Jet>]) -> Result<(Vec<Vec<Jet>>, Jet)> {
    let (minv, det) = invert(metric)?;
    let n = metric.len();
    // g^{i j̄} = (M⁻¹)[j][i]
    let inverse = (0..n)
        .map(|i| (0..n).map(|j| minv[j][i].clone()).collect())
        .collect();
    Ok((inverse, det))
}

pub fn geometry_jets(
    phi: &dyn PolarizedFunction,
    x: &[Jet],
    zbar: &[Jet],
    with_curvature: bool,
) -> Result<GeometryJets> {
    check_dims(phi.dim(), x, zbar)?;
    if !with_curvature {
        let metric = metric_jets(phi, x, zbar)?;
        let (inverse, det) = inverse_from_metric(&metric)?;
        return Ok(GeometryJets {
            metric,
            inverse,
            det,
            curvature: None,
        });
    }
    // φ to order K+4 so that ln det g is known to order K+2.
    let outer = Extension::new(x, zbar, 4)?;
    let f = phi.eval_jet(&outer.x_shifted, &outer.zbar_shifted)?;
    let n = outer.dim;
    let metric_ext: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    Ok(f.derivative(outer.offset + i)?
                        .derivative(outer.offset + n + j)?)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let (_, det_ext) = invert(&metric_ext)?;
    // ln det g uses the principal branch, restricted to Re det g > 0.
    if !(det_ext.value().re > 0.0) {
        return Err(Error::NotPlurisubharmonic(format!(
            "det g = {} is outside the right half-plane",
            det_ext.value()
        )));
    }
    let log_det = det_ext.ln().map_err(|_| Error::SingularMetric)?;
    let hess: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| outer.mixed(&log_det, i, j)).collect())
        .collect::<Result<_>>()?;
    let metric: Vec<Vec<Jet>> = metric_ext
        .iter()
        .map(|row| row.iter().map(|g| outer.restrict(g)).collect())
        .collect();
    let (inverse, det) = inverse_from_metric(&metric)?;
    let mut geo = GeometryJets {
        metric,
        inverse,
        det,
        curvature: None,
    };
    geo.curvature = Some(geo.contract(&hess));
    Ok(geo)
}

/// `[∂_i ∂_j̄ f]` at a jet point.
pub fn mixed_hessian_jets(f: &dyn PolarizedFunction, x: &[Jet], zbar: &[Jet]) -> Result<Vec<Vec<Jet>>> {
    let ext = Extension::new(x, zbar, 2)?;
    let v = f.eval_jet(&ext.x_shifted, &ext.zbar_shifted)?;
    (0..ext.dim)
        .map(|i| (0..ext.dim).map(|j| ext.mixed(&v, i, j)).collect())
        .collect()
}

pub fn laplacian_jet(
    f: &dyn PolarizedFunction,
    phi: &dyn PolarizedFunction,
    x: &[Jet],
    zbar: &[Jet],
) -> Result<Jet> {
    let geo = geometry_jets(phi, x, zbar, false)?;
    Ok(geo.contract(&mixed_hessian_jets(f, x, zbar)?))
}

/// `Δ ln μ` at a jet point.
pub fn laplacian_log_jet(
    mu: &dyn PolarizedFunction,
    geo: &GeometryJets,
    x: &[Jet],
    zbar: &[Jet],
) -> Result<Jet> {
    let ext = Extension::new(x, zbar, 2)?;
    let m = mu.eval_jet(&ext.x_shifted, &ext.zbar_shifted)?;
    let log_mu = m.ln().map_err(|_| Error::MuZero)?;
    let hess: Vec<Vec<Jet>> = (0..ext.dim)
        .map(|i| (0..ext.dim).map(|j| ext.mixed(&log_mu, i, j)).collect())
        .collect::<Result<_>>()?;
    Ok(geo.contract(&hess))
}

/// `c = Δ ln μ + ½R` at a jet point.
pub fn c_coefficient_jet(w: &WeightSpec, x: &[Jet], zbar: &[Jet]) -> Result<Jet> {
    let geo = geometry_jets(w.phi.as_ref(), x, zbar, true)?;
    let lap = laplacian_log_jet(w.mu.as_ref(), &geo, x, zbar)?;
    let r = geo.curvature.as_ref().expect("curvature requested");
    Ok(&lap + &r.scale(C64::new(0.5, 0.0)))
}

pub fn kahler_data(phi: &dyn PolarizedFunction, x: &[C64], ybar: &[C64]) -> Result<KahlerData> {
    kahler_data_with(phi, x, ybar, &GeometryTolerances::default())
}

pub fn kahler_data_with(
    phi: &dyn PolarizedFunction,
    x: &[C64],
    ybar: &[C64],
    tol: &GeometryTolerances,
) -> Result<KahlerData> {
    let n = phi.dim();
    if x.len() != n || ybar.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len().min(ybar.len()),
        });
    }
    let layout = Layout::get(0, 0);
    let (xs, ys) = constants(&layout, x, ybar);
    let geo = geometry_jets(phi, &xs, &ys, true)?;
    let metric = DMatrix::from_fn(n, n, |i, j| geo.metric[i][j].value());
    let inverse = DMatrix::from_fn(n, n, |i, j| geo.inverse[i][j].value());
    if is_diagonal(x, ybar, tol.diagonal) {
        let herm = (&metric + metric.adjoint()) * C64::new(0.5, 0.0);
        let asym = (&metric - metric.adjoint()).norm();
        let min_eig = SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if asym > 1e-8 * (1.0 + metric.norm()) || !(min_eig > 0.0) {
            return Err(Error::NotPlurisubharmonic(format!(
                "metric at x = {x:?} is not Hermitian positive definite"
            )));
        }
    }
    Ok(KahlerData {
        x: x.to_vec(),
        ybar: ybar.to_vec(),
        metric,
        inverse,
        det: geo.det.value(),
        scalar_curvature: geo.curvature.unwrap().value(),
    })
}

/// `Δf = g^{ij̄} ∂_i ∂_j̄ f` at `(x, ȳ)`.
pub fn laplacian(
    f: &dyn PolarizedFunction,
    phi: &dyn PolarizedFunction,
    x: &[C64],
    ybar: &[C64],
) -> Result<C64> {
    let layout = Layout::get(0, 0);
    let (xs, ys) = constants(&layout, x, ybar);
    Ok(laplacian_jet(f, phi, &xs, &ys)?.value())
}

/// `c = Δ ln μ + ½R`; the first-order kernel coefficient is `k₁ = -c`.
pub fn c_coefficient(w: &WeightSpec, x: &[C64], ybar: &[C64]) -> Result<C64> {
    let layout = Layout::get(0, 0);
    let (xs, ys) = constants(&layout, x, ybar);
    Ok(c_coefficient_jet(w, &xs, &ys)?.value())
}

/// `R` as a polarized function of `(x, ȳ)`.
#[derive(Debug, Clone)]
pub struct ScalarCurvature(pub Polarized);

impl PolarizedFunction for ScalarCurvature {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval_jet(&self, x: &[Jet], ybar: &[Jet]) -> Result<Jet> {
        Ok(geometry_jets(self.0.as_ref(), x, ybar, true)?
            .curvature
            .unwrap())
    }
}

/// `Δf` as a polarized function.
#[derive(Debug, Clone)]
pub struct Laplacian {
    pub f: Polarized,
    pub phi: Polarized,
}

impl PolarizedFunction for Laplacian {
    fn dim(&self) -> usize {
        self.phi.dim()
    }
    fn eval_jet(&self, x: &[Jet], ybar: &[Jet]) -> Result<Jet> {
        laplacian_jet(self.f.as_ref(), self.phi.as_ref(), x, ybar)
    }
}

/// `c = Δ ln μ + ½R` as a polarized function.
#[derive(Debug, Clone)]
pub struct CCoefficient(pub WeightSpec);

impl PolarizedFunction for CCoefficient {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval_jet(&self, x: &[Jet], ybar: &[Jet]) -> Result<Jet> {
        c_coefficient_jet(&self.0, x, ybar)
    }
}

fn diastasis_phi_jets(phi: &dyn PolarizedFunction, x: &[Jet], zb: &[Jet], y: &[Jet], yb: &[Jet]) -> Result<Jet> {
    let a = phi.eval_jet(x, zb)?;
    let b = phi.eval_jet(y, yb)?;
    let c = phi.eval_jet(x, yb)?;
    let d = phi.eval_jet(y, zb)?;
    Ok(&(&a + &b) - &(&c + &d))
}

pub(crate) fn diastasis_mu_jets(mu: &dyn PolarizedFunction, x: &[Jet], zb: &[Jet], y: &[Jet], yb: &[Jet]) -> Result<Jet> {
    let num = &mu.eval_jet(x, zb)? * &mu.eval_jet(y, yb)?;
    let den = &mu.eval_jet(x, yb)? * &mu.eval_jet(y, zb)?;
    num.try_div(&den).map_err(|_| Error::MuZero)
}

fn plain4(
    x: &[C64],
    zb: &[C64],
    y: &[C64],
    yb: &[C64],
) -> [Vec<Jet>; 4] {
    let layout = Layout::get(0, 0);
    let lift = |v: &[C64]| v.iter().map(|&c| Jet::constant(&layout, c)).collect::<Vec<_>>();
    [lift(x), lift(zb), lift(y), lift(yb)]
}

/// `φ̃ = φ(x,z̄) + φ(y,ȳ) − φ(x,ȳ) − φ(y,z̄)`.
pub fn diastasis_phi(
    phi: &dyn PolarizedFunction,
    x: &[C64],
    zbar: &[C64],
    y: &[C64],
    ybar: &[C64],
) -> Result<C64> {
    let [a, b, c, d] = plain4(x, zbar, y, ybar);
    Ok(diastasis_phi_jets(phi, &a, &b, &c, &d)?.value())
}

/// `μ̃ = μ(x,z̄) μ(y,ȳ) / (μ(x,ȳ) μ(y,z̄))`.
pub fn diastasis_mu(
    mu: &dyn PolarizedFunction,
    x: &[C64],
    zbar: &[C64],
    y: &[C64],
    ybar: &[C64],
) -> Result<C64> {
    let [a, b, c, d] = plain4(x, zbar, y, ybar);
    Ok(diastasis_mu_jets(mu, &a, &b, &c, &d)?.value())
}

/// Outcome of the stationary-phase checks on the six-point phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCheck {
    pub value_zero: bool,
    pub gradient_zero: bool,
    pub hessian_pd: bool,
    pub value: f64,
    pub gradient_max: f64,
    pub min_eigenvalue: f64,
}

const PHASE_TOL: f64 = 1e-9;

/// Checks that `φ̌(y,ȳ,w,w̄) = φ̃(x,z̄,y,ȳ) + φ̃(y,z̄,w,w̄)` vanishes with zero
/// gradient at `(y,ȳ,w,w̄) = (x,z̄,x,z̄)` and that its Hessian is positive
/// definite. Positivity is tested on the real quadratic form
/// `Re(δᵀ H δ)` over directions with `δȳ = conj(δy)`, `δw̄ = conj(δw)`, i.e.
/// a `4N × 4N` real symmetric matrix.
pub fn diastasis_hessian_check(phi: &dyn PolarizedFunction, x: &[C64], zbar: &[C64]) -> Result<PhaseCheck> {
    let n = phi.dim();
    if x.len() != n || zbar.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len().min(zbar.len()),
        });
    }
    let layout = Layout::get(4 * n, 2);
    let xs: Vec<Jet> = x.iter().map(|&v| Jet::constant(&layout, v)).collect();
    let zs: Vec<Jet> = zbar.iter().map(|&v| Jet::constant(&layout, v)).collect();
    let var = |k: usize, base: C64| Jet::variable(&layout, k, base);
    let y = (0..n).map(|i| var(i, x[i])).collect::<Result<Vec<_>>>()?;
    let yb = (0..n).map(|i| var(n + i, zbar[i])).collect::<Result<Vec<_>>>()?;
    let w = (0..n).map(|i| var(2 * n + i, x[i])).collect::<Result<Vec<_>>>()?;
    let wb = (0..n).map(|i| var(3 * n + i, zbar[i])).collect::<Result<Vec<_>>>()?;
    let check = &diastasis_phi_jets(phi, &xs, &zs, &y, &yb)? + &diastasis_phi_jets(phi, &y, &zs, &w, &wb)?;

    let m = 4 * n;
    let mut gradient_max: f64 = 0.0;
    let mut hess = DMatrix::<C64>::zeros(m, m);
    for a in 0..m {
        let mut idx = vec![0usize; m];
        idx[a] = 1;
        gradient_max = gradient_max.max(check.partial(&idx)?.norm());
        for b in 0..m {
            let mut idx = vec![0usize; m];
            idx[a] += 1;
            idx[b] += 1;
            hess[(a, b)] = check.partial(&idx)?;
        }
    }
    // Real coordinates (Re δy, Im δy, Re δw, Im δw) mapped to complex directions.
    let directions: Vec<Vec<C64>> = (0..m)
        .map(|k| {
            let mut d = vec![C64::new(0.0, 0.0); m];
            let block = k / n; // 0: Re y, 1: Im y, 2: Re w, 3: Im w
            let i = k % n;
            let (hol, anti) = if block < 2 { (i, n + i) } else { (2 * n + i, 3 * n + i) };
            if block % 2 == 0 {
                d[hol] = C64::new(1.0, 0.0);
                d[anti] = C64::new(1.0, 0.0);
            } else {
                d[hol] = C64::new(0.0, 1.0);
                d[anti] = C64::new(0.0, -1.0);
            }
            d
        })
        .collect();
    let q = DMatrix::<f64>::from_fn(m, m, |k, l| {
        let mut s = C64::new(0.0, 0.0);
        for a in 0..m {
            for b in 0..m {
                s += directions[k][a] * hess[(a, b)] * directions[l][b];
            }
        }
        s.re
    });
    let q = (&q + q.transpose()) * 0.5;
    let min_eigenvalue = SymmetricEigen::new(q)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let value = check.value().norm();
    Ok(PhaseCheck {
        value_zero: value <= PHASE_TOL,
        gradient_zero: gradient_max <= PHASE_TOL,
        hessian_pd: min_eigenvalue > 0.0,
        value,
        gradient_max,
        min_eigenvalue,
    })
}
