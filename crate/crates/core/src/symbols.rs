//! Formal symbols in ħ, the expansion operators `R_n`, the triple symbol and
//! the star products built on it.
//!
//! Every coefficient of every symbol is a [`PolarizedFunction`], so results can
//! be fed back into further products or differentiated again. Nothing is
//! simplified symbolically; evaluation happens pointwise on jets.
//!
//! Only `R_0` and `R_1` are built in. Higher operators can be registered in an
//! [`RnRegistry`]; every operation that needs `R_n` for `n` beyond what is
//! registered fails with [`Error::OrderTooHigh`].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::functions::{self, check_dims, Polarized, PolarizedFunction};
use crate::geometry::{constants, diastasis_mu_jets, geometry_jets, Extension, WeightSpec};
use crate::jets::{Jet, Layout, C64};

fn zero_c() -> C64 {
    C64::new(0.0, 0.0)
}

/// A truncated power series `f = Σ_{m ≤ M} ħ^m f_m`. Coefficients past the
/// listed ones are zero.
#[derive(Clone)]
pub struct FormalSymbol {
    coeffs: Vec<Polarized>,
}

impl fmt::Debug for FormalSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormalSymbol")
            .field("order", &self.order())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl FormalSymbol {
    pub fn new(coeffs: Vec<Polarized>) -> Result<FormalSymbol> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::InvalidParameter("a symbol needs at least one coefficient".into()))?;
        let dim = first.dim();
        if let Some(bad) = coeffs.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        Ok(FormalSymbol { coeffs })
    }

    /// The order-0 symbol `f`.
    pub fn classical(f: Polarized) -> FormalSymbol {
        FormalSymbol { coeffs: vec![f] }
    }

    pub fn constant(dim: usize, value: C64) -> FormalSymbol {
        FormalSymbol::classical(functions::constant(dim, value))
    }

    pub fn one(dim: usize) -> FormalSymbol {
        FormalSymbol::classical(functions::one(dim))
    }

    /// Truncation order `M` (number of coefficients minus one).
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].dim()
    }

    pub fn coeffs(&self) -> &[Polarized] {
        &self.coeffs
    }

    /// Coefficient of `ħ^n`, or `None` if it is zero by truncation.
    pub fn coeff(&self, n: usize) -> Option<&Polarized> {
        self.coeffs.get(n)
    }

    pub fn truncate(&self, order: usize) -> FormalSymbol {
        FormalSymbol {
            coeffs: self.coeffs.iter().take(order + 1).cloned().collect(),
        }
    }

    pub fn add(&self, other: &FormalSymbol) -> Result<FormalSymbol> {
        self.check_dim(other)?;
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| match (self.coeff(i), other.coeff(i)) {
                (Some(a), Some(b)) => functions::sum(a, b),
                (Some(a), None) => Arc::clone(a),
                (None, Some(b)) => Arc::clone(b),
                (None, None) => unreachable!(),
            })
            .collect();
        Ok(FormalSymbol { coeffs })
    }

    pub fn sub(&self, other: &FormalSymbol) -> Result<FormalSymbol> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> FormalSymbol {
        FormalSymbol {
            coeffs: self.coeffs.iter().map(|f| functions::scaled(c, f)).collect(),
        }
    }

    /// Cauchy product in ħ, truncated at `order`.
    pub fn mul(&self, other: &FormalSymbol, order: usize) -> Result<FormalSymbol> {
        self.check_dim(other)?;
        let top = order.min(self.order() + other.order());
        let coeffs = (0..=top)
            .map(|n| {
                let terms: Vec<Polarized> = (0..=n)
                    .filter_map(|m| {
                        let a = self.coeff(m)?;
                        let b = other.coeff(n - m)?;
                        Some(functions::product(a, b))
                    })
                    .collect();
                match terms.len() {
                    0 => functions::constant(self.dim(), zero_c()),
                    1 => terms.into_iter().next().unwrap(),
                    _ => Arc::new(functions::Sum(terms)) as Polarized,
                }
            })
            .collect();
        Ok(FormalSymbol { coeffs })
    }

    /// Multiplicative inverse to `order`; requires `f_0` nonvanishing where evaluated.
    pub fn recip(&self, order: usize) -> FormalSymbol {
        let dim = self.dim();
        let inv0 = functions::quotient(&functions::one(dim), &self.coeffs[0]);
        let mut r: Vec<Polarized> = vec![Arc::clone(&inv0)];
        for n in 1..=order {
            let terms: Vec<Polarized> = (1..=n)
                .filter_map(|m| self.coeff(m).map(|a| functions::product(a, &r[n - m])))
                .collect();
            let rn = if terms.is_empty() {
                functions::constant(dim, zero_c())
            } else {
                let s: Polarized = Arc::new(functions::Sum(terms));
                functions::scaled(C64::new(-1.0, 0.0), &functions::product(&inv0, &s))
            };
            r.push(rn);
        }
        FormalSymbol { coeffs: r }
    }

    /// Coefficient values `f_0(x,ȳ), …, f_M(x,ȳ)`.
    pub fn eval(&self, x: &[C64], ybar: &[C64]) -> Result<Vec<C64>> {
        self.coeffs.iter().map(|f| f.eval(x, ybar)).collect()
    }

    /// `Σ ħ^m f_m(x,ȳ)` at a numeric ħ.
    pub fn eval_at(&self, x: &[C64], ybar: &[C64], hbar: f64) -> Result<C64> {
        let vals = self.eval(x, ybar)?;
        Ok(vals
            .iter()
            .rev()
            .fold(zero_c(), |acc, v| acc * hbar + v))
    }

    fn check_dim(&self, other: &FormalSymbol) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }
}

impl From<Polarized> for FormalSymbol {
    fn from(f: Polarized) -> Self {
        FormalSymbol::classical(f)
    }
}

/// A function `F(x, z̄, y, ȳ)` evaluable on jets.
pub trait FourPointFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn eval_jet(&self, x: &[Jet], zbar: &[Jet], y: &[Jet], ybar: &[Jet]) -> Result<Jet>;

    fn eval(&self, x: &[C64], zbar: &[C64], y: &[C64], ybar: &[C64]) -> Result<C64> {
        let layout = Layout::get(0, 0);
        let (a, b) = constants(&layout, x, zbar);
        let (c, d) = constants(&layout, y, ybar);
        Ok(self.eval_jet(&a, &b, &c, &d)?.value())
    }
}

/// `Σ_t f1_t(x,ȳ) f2_t(y,ȳ) f3_t(y,z̄) · μ̃(x,z̄,y,ȳ)`.
#[derive(Debug, Clone)]
pub struct TripleIntegrand {
    pub terms: Vec<(Polarized, Polarized, Polarized)>,
    pub mu: Polarized,
}

impl FourPointFunction for TripleIntegrand {
    fn dim(&self) -> usize {
        self.mu.dim()
    }

    fn eval_jet(&self, x: &[Jet], zbar: &[Jet], y: &[Jet], ybar: &[Jet]) -> Result<Jet> {
        let layout = Arc::clone(x[0].layout());
        let mut acc = Jet::zero(&layout);
        for (f1, f2, f3) in &self.terms {
            let a = f1.eval_jet(x, ybar)?;
            let b = f2.eval_jet(y, ybar)?;
            let c = f3.eval_jet(y, zbar)?;
            acc = &acc + &(&(&a * &b) * &c);
        }
        let mt = diastasis_mu_jets(self.mu.as_ref(), x, zbar, y, ybar)?;
        Ok(&acc * &mt)
    }
}

/// `φ̃(x,z̄,y,ȳ)` as a four-point function.
#[derive(Debug, Clone)]
pub struct DiastasisPhi(pub Polarized);

impl FourPointFunction for DiastasisPhi {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval_jet(&self, x: &[Jet], zbar: &[Jet], y: &[Jet], ybar: &[Jet]) -> Result<Jet> {
        let f = &self.0;
        let s = &f.eval_jet(x, zbar)? + &f.eval_jet(y, ybar)?;
        Ok(&s - &(&f.eval_jet(x, ybar)? + &f.eval_jet(y, zbar)?))
    }
}

/// `μ̃(x,z̄,y,ȳ)` as a four-point function.
#[derive(Debug, Clone)]
pub struct DiastasisMu(pub Polarized);

impl FourPointFunction for DiastasisMu {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval_jet(&self, x: &[Jet], zbar: &[Jet], y: &[Jet], ybar: &[Jet]) -> Result<Jet> {
        diastasis_mu_jets(self.0.as_ref(), x, zbar, y, ybar)
    }
}

type FourPointClosure = dyn Fn(&[Jet], &[Jet], &[Jet], &[Jet]) -> Result<Jet> + Send + Sync;

/// A four-point function given by a closure over jets.
pub struct FourPointFn {
    pub dim: usize,
    pub name: String,
    f: Box<FourPointClosure>,
}

impl FourPointFn {
    pub fn new<F>(dim: usize, name: &str, f: F) -> FourPointFn
    where
        F: Fn(&[Jet], &[Jet], &[Jet], &[Jet]) -> Result<Jet> + Send + Sync + 'static,
    {
        FourPointFn {
            dim,
            name: name.to_string(),
            f: Box::new(f),
        }
    }
}

impl fmt::Debug for FourPointFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FourPointFn({})", self.name)
    }
}

impl FourPointFunction for FourPointFn {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_jet(&self, x: &[Jet], zbar: &[Jet], y: &[Jet], ybar: &[Jet]) -> Result<Jet> {
        (self.f)(x, zbar, y, ybar)
    }
}

/// The operator `R_n` of the stationary-phase expansion, mapping a
/// four-point function to a function of `(x, z̄)`.
pub trait RnOperator: Send + Sync + fmt::Debug {
    fn index(&self) -> usize;
    fn apply_jet(
        &self,
        f: &dyn FourPointFunction,
        weight: &WeightSpec,
        x: &[Jet],
        zbar: &[Jet],
    ) -> Result<Jet>;
}

/// `R_0 F = F(x, z̄, x, z̄)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct R0;

impl RnOperator for R0 {
    fn index(&self) -> usize {
        0
    }
    fn apply_jet(&self, f: &dyn FourPointFunction, _: &WeightSpec, x: &[Jet], zbar: &[Jet]) -> Result<Jet> {
        f.eval_jet(x, zbar, x, zbar)
    }
}

/// `R_1 F = [g^{ij̄} ∂_{y_i} ∂_{ȳ_j} F + ½ R F]` at `y = x, ȳ = z̄`.
#[derive(Debug, Clone, Copy, Default)]
pub struct R1;

impl R1 {
    fn apply_with_phi(
        f: &dyn FourPointFunction,
        phi: &dyn PolarizedFunction,
        x: &[Jet],
        zbar: &[Jet],
    ) -> Result<Jet> {
        check_dims(phi.dim(), x, zbar)?;
        let ext = Extension::new(x, zbar, 2)?;
        let fe = f.eval_jet(&ext.x, &ext.zbar, &ext.x_shifted, &ext.zbar_shifted)?;
        let hess: Vec<Vec<Jet>> = (0..ext.dim)
            .map(|i| (0..ext.dim).map(|j| ext.mixed(&fe, i, j)).collect())
            .collect::<Result<_>>()?;
        let geo = geometry_jets(phi, x, zbar, true)?;
        let r = geo.curvature.as_ref().expect("curvature requested");
        let collapsed = ext.restrict(&fe);
        Ok(&geo.contract(&hess) + &(r * &collapsed).scale(C64::new(0.5, 0.0)))
    }
}

impl RnOperator for R1 {
    fn index(&self) -> usize {
        1
    }
    fn apply_jet(&self, f: &dyn FourPointFunction, w: &WeightSpec, x: &[Jet], zbar: &[Jet]) -> Result<Jet> {
        R1::apply_with_phi(f, w.phi.as_ref(), x, zbar)
    }
}

/// `R_0 F` at a numeric point.
pub fn r0_apply(f: &dyn FourPointFunction, x: &[C64], zbar: &[C64]) -> Result<C64> {
    f.eval(x, zbar, x, zbar)
}

/// `R_1 F` at a numeric point, with the geometry of `phi`.
pub fn r1_apply(f: &dyn FourPointFunction, phi: &dyn PolarizedFunction, x: &[C64], zbar: &[C64]) -> Result<C64> {
    let layout = Layout::get(0, 0);
    let (xs, zs) = constants(&layout, x, zbar);
    Ok(R1::apply_with_phi(f, phi, &xs, &zs)?.value())
}

/// The operators `R_0, R_1, …` available to the symbol calculus.
#[derive(Debug, Clone)]
pub struct RnRegistry {
    ops: Vec<Arc<dyn RnOperator>>,
}

impl Default for RnRegistry {
    fn default() -> Self {
        RnRegistry {
            ops: vec![Arc::new(R0), Arc::new(R1)],
        }
    }
}

impl RnRegistry {
    /// Adds `R_n` with `n` equal to the next free index, or replaces an
    /// existing operator with the same index.
    pub fn register(&mut self, op: Arc<dyn RnOperator>) -> Result<()> {
        let n = op.index();
        match n.cmp(&self.ops.len()) {
            std::cmp::Ordering::Less => self.ops[n] = op,
            std::cmp::Ordering::Equal => self.ops.push(op),
            std::cmp::Ordering::Greater => {
                return Err(Error::InvalidParameter(format!(
                    "cannot register R_{n} before R_{}",
                    self.ops.len()
                )))
            }
        }
        Ok(())
    }

    /// Highest registered index.
    pub fn max_order(&self) -> usize {
        self.ops.len() - 1
    }

    pub fn get(&self, n: usize) -> Result<&Arc<dyn RnOperator>> {
        self.ops.get(n).ok_or(Error::OrderTooHigh {
            requested: n,
            available: self.max_order(),
        })
    }
}

/// Shared context of the symbol calculus: the weight and the expansion operators.
#[derive(Debug, Clone)]
struct Context {
    weight: WeightSpec,
    registry: RnRegistry,
}

/// Coefficient `n` of the triple symbol `S(f1, f2, f3)`.
#[derive(Debug, Clone)]
struct TripleCoefficient {
    n: usize,
    f: [FormalSymbol; 3],
    ctx: Arc<Context>,
}

impl TripleCoefficient {
    fn integrand(&self, total: usize) -> TripleIntegrand {
        let mut terms = Vec::new();
        for m in 0..=total {
            for p in 0..=total - m {
                let q = total - m - p;
                if let (Some(a), Some(b), Some(c)) = (self.f[0].coeff(m), self.f[1].coeff(p), self.f[2].coeff(q)) {
                    terms.push((Arc::clone(a), Arc::clone(b), Arc::clone(c)));
                }
            }
        }
        TripleIntegrand {
            terms,
            mu: Arc::clone(&self.ctx.weight.mu),
        }
    }
}

impl PolarizedFunction for TripleCoefficient {
    fn dim(&self) -> usize {
        self.ctx.weight.dim()
    }

    fn eval_jet(&self, x: &[Jet], zbar: &[Jet]) -> Result<Jet> {
        check_dims(self.dim(), x, zbar)?;
        let layout = Arc::clone(x[0].layout());
        let mut acc = Jet::zero(&layout);
        for l in 0..=self.n {
            let integrand = self.integrand(self.n - l);
            if integrand.terms.is_empty() {
                continue;
            }
            let op = self.ctx.registry.get(l)?;
            acc = &acc + &op.apply_jet(&integrand, &self.ctx.weight, x, zbar)?;
        }
        Ok(acc)
    }
}

/// `k_n` via the linear recurrence `k_n = -Σ_{m=1}^n R_m(k_{n-m}(x,ȳ) μ̃)`.
#[derive(Debug, Clone)]
struct KernelLinear {
    previous: Vec<Polarized>,
    ctx: Arc<Context>,
}

impl PolarizedFunction for KernelLinear {
    fn dim(&self) -> usize {
        self.ctx.weight.dim()
    }

    fn eval_jet(&self, x: &[Jet], zbar: &[Jet]) -> Result<Jet> {
        check_dims(self.dim(), x, zbar)?;
        let n = self.previous.len();
        let one = functions::one(self.dim());
        let layout = Arc::clone(x[0].layout());
        let mut acc = Jet::zero(&layout);
        for m in 1..=n {
            let integrand = TripleIntegrand {
                terms: vec![(Arc::clone(&self.previous[n - m]), Arc::clone(&one), Arc::clone(&one))],
                mu: Arc::clone(&self.ctx.weight.mu),
            };
            let op = self.ctx.registry.get(m)?;
            acc = &acc + &op.apply_jet(&integrand, &self.ctx.weight, x, zbar)?;
        }
        Ok(-acc)
    }
}

/// `k_n` via the quadratic recurrence
/// `k_n = -Σ_{p=1}^{n-1} k_p k_{n-p} - Σ_{l=1}^n R_l(Σ_{p=0}^{n-l} k_p(x,ȳ) k_{n-l-p}(y,z̄) μ̃)`.
#[derive(Debug, Clone)]
struct KernelQuadratic {
    previous: Vec<Polarized>,
    ctx: Arc<Context>,
}

impl PolarizedFunction for KernelQuadratic {
    fn dim(&self) -> usize {
        self.ctx.weight.dim()
    }

    fn eval_jet(&self, x: &[Jet], zbar: &[Jet]) -> Result<Jet> {
        check_dims(self.dim(), x, zbar)?;
        let n = self.previous.len();
        let k = &self.previous;
        let one = functions::one(self.dim());
        let layout = Arc::clone(x[0].layout());
        let mut acc = Jet::zero(&layout);
        for p in 1..n {
            acc = &acc + &(&k[p].eval_jet(x, zbar)? * &k[n - p].eval_jet(x, zbar)?);
        }
        for l in 1..=n {
            let integrand = TripleIntegrand {
                terms: (0..=n - l)
                    .map(|p| (Arc::clone(&k[p]), Arc::clone(&one), Arc::clone(&k[n - l - p])))
                    .collect(),
                mu: Arc::clone(&self.ctx.weight.mu),
            };
            let op = self.ctx.registry.get(l)?;
            acc = &acc + &op.apply_jet(&integrand, &self.ctx.weight, x, zbar)?;
        }
        Ok(-acc)
    }
}

/// `{f, h} = g^{ij̄}(∂_j̄ f ∂_i h − ∂_i f ∂_j̄ h)` as a polarized function.
#[derive(Debug, Clone)]
pub struct PoissonBracketFn {
    pub f: Polarized,
    pub h: Polarized,
    pub phi: Polarized,
}

impl PolarizedFunction for PoissonBracketFn {
    fn dim(&self) -> usize {
        self.phi.dim()
    }

    fn eval_jet(&self, x: &[Jet], zbar: &[Jet]) -> Result<Jet> {
        check_dims(self.dim(), x, zbar)?;
        let ext = Extension::new(x, zbar, 1)?;
        let fe = self.f.eval_jet(&ext.x_shifted, &ext.zbar_shifted)?;
        let he = self.h.eval_jet(&ext.x_shifted, &ext.zbar_shifted)?;
        let n = ext.dim;
        let fi: Vec<Jet> = (0..n).map(|i| ext.first_holomorphic(&fe, i)).collect::<Result<_>>()?;
        let fj: Vec<Jet> = (0..n).map(|j| ext.first_antiholomorphic(&fe, j)).collect::<Result<_>>()?;
        let hi: Vec<Jet> = (0..n).map(|i| ext.first_holomorphic(&he, i)).collect::<Result<_>>()?;
        let hj: Vec<Jet> = (0..n).map(|j| ext.first_antiholomorphic(&he, j)).collect::<Result<_>>()?;
        let geo = geometry_jets(self.phi.as_ref(), x, zbar, false)?;
        let terms: Vec<Vec<Jet>> = (0..n)
            .map(|i| (0..n).map(|j| &(&fj[j] * &hi[i]) - &(&fi[i] * &hj[j])).collect())
            .collect();
        Ok(geo.contract(&terms))
    }
}

/// `{f, h}(x, ȳ)` for the Kähler form of `phi`.
pub fn poisson_bracket(
    f: &Polarized,
    h: &Polarized,
    phi: &Polarized,
    x: &[C64],
    ybar: &[C64],
) -> Result<C64> {
    PoissonBracketFn {
        f: Arc::clone(f),
        h: Arc::clone(h),
        phi: Arc::clone(phi),
    }
    .eval(x, ybar)
}

/// Symbol calculus for a fixed weight, truncated at a fixed order in ħ.
#[derive(Debug, Clone)]
pub struct StarAlgebra {
    ctx: Arc<Context>,
    order: usize,
}

impl StarAlgebra {
    /// First-order calculus with the built-in `R_0`, `R_1`.
    pub fn new(weight: WeightSpec) -> StarAlgebra {
        StarAlgebra {
            ctx: Arc::new(Context {
                weight,
                registry: RnRegistry::default(),
            }),
            order: 1,
        }
    }

    /// Calculus truncated at `order`; fails if `R_order` is not registered.
    pub fn with_registry(weight: WeightSpec, registry: RnRegistry, order: usize) -> Result<StarAlgebra> {
        if order > registry.max_order() {
            return Err(Error::OrderTooHigh {
                requested: order,
                available: registry.max_order(),
            });
        }
        Ok(StarAlgebra {
            ctx: Arc::new(Context { weight, registry }),
            order,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn weight(&self) -> &WeightSpec {
        &self.ctx.weight
    }

    pub fn registry(&self) -> &RnRegistry {
        &self.ctx.registry
    }

    fn check_order(&self, order: usize) -> Result<()> {
        let available = self.ctx.registry.max_order();
        if order > available {
            return Err(Error::OrderTooHigh {
                requested: order,
                available,
            });
        }
        Ok(())
    }

    fn check_symbol(&self, f: &FormalSymbol) -> Result<()> {
        if f.dim() != self.ctx.weight.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ctx.weight.dim(),
                got: f.dim(),
            });
        }
        Ok(())
    }

    /// `S(f1, f2, f3)` truncated at `order`.
    pub fn triple_symbol_to(
        &self,
        f1: &FormalSymbol,
        f2: &FormalSymbol,
        f3: &FormalSymbol,
        order: usize,
    ) -> Result<FormalSymbol> {
        self.check_order(order)?;
        for f in [f1, f2, f3] {
            self.check_symbol(f)?;
        }
        let coeffs = (0..=order)
            .map(|n| {
                Arc::new(TripleCoefficient {
                    n,
                    f: [f1.clone(), f2.clone(), f3.clone()],
                    ctx: Arc::clone(&self.ctx),
                }) as Polarized
            })
            .collect();
        FormalSymbol::new(coeffs)
    }

    /// `S(f1, f2, f3)` at the algebra's order.
    pub fn triple_symbol(&self, f1: &FormalSymbol, f2: &FormalSymbol, f3: &FormalSymbol) -> Result<FormalSymbol> {
        self.triple_symbol_to(f1, f2, f3, self.order)
    }

    fn one(&self) -> FormalSymbol {
        FormalSymbol::one(self.ctx.weight.dim())
    }

    /// Berezin–Töplitz product `f ⋆ h = S(f, 1, h)`.
    pub fn bt_star(&self, f: &FormalSymbol, h: &FormalSymbol) -> Result<FormalSymbol> {
        self.triple_symbol(f, &self.one(), h)
    }

    /// Kernel symbol from the linear recurrence.
    pub fn kernel_symbol_linear_to(&self, order: usize) -> Result<FormalSymbol> {
        self.check_order(order)?;
        let mut k: Vec<Polarized> = vec![functions::one(self.ctx.weight.dim())];
        for _ in 1..=order {
            let next = Arc::new(KernelLinear {
                previous: k.clone(),
                ctx: Arc::clone(&self.ctx),
            });
            k.push(next);
        }
        FormalSymbol::new(k)
    }

    /// Kernel symbol from the quadratic recurrence.
    pub fn kernel_symbol_quadratic_to(&self, order: usize) -> Result<FormalSymbol> {
        self.check_order(order)?;
        let mut k: Vec<Polarized> = vec![functions::one(self.ctx.weight.dim())];
        for _ in 1..=order {
            let next = Arc::new(KernelQuadratic {
                previous: k.clone(),
                ctx: Arc::clone(&self.ctx),
            });
            k.push(next);
        }
        FormalSymbol::new(k)
    }

    pub fn kernel_symbol_linear(&self) -> Result<FormalSymbol> {
        self.kernel_symbol_linear_to(self.order)
    }

    pub fn kernel_symbol_quadratic(&self) -> Result<FormalSymbol> {
        self.kernel_symbol_quadratic_to(self.order)
    }

    /// The kernel symbol `k` (linear recurrence).
    pub fn kernel_symbol(&self) -> Result<FormalSymbol> {
        self.kernel_symbol_linear()
    }

    /// `ψ(f) = S(k, f, k)`.
    pub fn berezin_transform(&self, f: &FormalSymbol) -> Result<FormalSymbol> {
        let k = self.kernel_symbol()?;
        self.triple_symbol(&k, f, &k)
    }

    /// `ψ⁻¹(f)`, solved order by order: `g_n = f_n - [S(k, g_0 + … + ħ^{n-1} g_{n-1}, k)]_n`.
    pub fn berezin_inverse(&self, f: &FormalSymbol) -> Result<FormalSymbol> {
        self.check_symbol(f)?;
        let k = self.kernel_symbol()?;
        let dim = f.dim();
        let mut g: Vec<Polarized> = vec![Arc::clone(&f.coeffs[0])];
        for n in 1..=self.order {
            let partial = FormalSymbol::new(g.clone())?;
            let s = self.triple_symbol_to(&k, &partial, &k, n)?;
            let correction = Arc::clone(&s.coeffs[n]);
            let gn = match f.coeff(n) {
                Some(fnc) => functions::difference(fnc, &correction),
                None => functions::scaled(C64::new(-1.0, 0.0), &correction),
            };
            debug_assert_eq!(gn.dim(), dim);
            g.push(gn);
        }
        FormalSymbol::new(g)
    }

    /// `f ⋆_con h = ψ⁻¹(ψ(f) ⋆ ψ(h))`.
    pub fn contravariant_star(&self, f: &FormalSymbol, h: &FormalSymbol) -> Result<FormalSymbol> {
        let pf = self.berezin_transform(f)?;
        let ph = self.berezin_transform(h)?;
        self.berezin_inverse(&self.bt_star(&pf, &ph)?)
    }

    /// `f ⋆_cov h = k⁻¹ ((k f) ⋆ (k h))`.
    pub fn covariant_star(&self, f: &FormalSymbol, h: &FormalSymbol) -> Result<FormalSymbol> {
        let k = self.kernel_symbol()?;
        let kf = k.mul(f, self.order)?;
        let kh = k.mul(h, self.order)?;
        let prod = self.bt_star(&kf, &kh)?;
        k.recip(self.order).mul(&prod, self.order)
    }

    /// `{f, h}` for this weight's potential.
    pub fn poisson_bracket(&self, f: &Polarized, h: &Polarized, x: &[C64], ybar: &[C64]) -> Result<C64> {
        poisson_bracket(f, h, &self.ctx.weight.phi, x, ybar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{antiholomorphic, from_fn, holomorphic, one, product, Polynomial};
    use crate::geometry::c_coefficient;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sb_phi() -> Polarized {
        product(&holomorphic(1, 0), &antiholomorphic(1, 0))
    }

    fn disc_phi() -> Polarized {
        from_fn(1, "-log(1 - x yb)", |x, y| {
            let t = &x[0] * &y[0];
            Ok(-(t.scale(c(-1.0, 0.0)).add_constant(c(1.0, 0.0))).ln()?)
        })
    }

    fn disc_mu() -> Polarized {
        from_fn(1, "(1 - x yb)^2", |x, y| {
            let t = &x[0] * &y[0];
            t.scale(c(-1.0, 0.0)).add_constant(c(1.0, 0.0)).powi(2)
        })
    }

    fn sb_exp_mu(beta: f64) -> Polarized {
        from_fn(1, "exp(beta x yb)", move |x, y| Ok((&x[0] * &y[0]).scale(c(beta, 0.0)).exp()))
    }

    fn sb() -> StarAlgebra {
        StarAlgebra::new(WeightSpec::new(sb_phi(), one(1), 4.0).unwrap())
    }

    fn disc() -> StarAlgebra {
        StarAlgebra::new(WeightSpec::new(disc_phi(), disc_mu(), 4.0).unwrap())
    }

    fn x_sym() -> FormalSymbol {
        FormalSymbol::classical(holomorphic(1, 0))
    }

    fn xb_sym() -> FormalSymbol {
        FormalSymbol::classical(antiholomorphic(1, 0))
    }

    fn assert_coeffs(s: &FormalSymbol, x: C64, expected: &[C64], tol: f64) {
        let v = s.eval(&[x], &[x.conj()]).unwrap();
        for (n, e) in expected.iter().enumerate() {
            let got = v.get(n).copied().unwrap_or(c(0.0, 0.0));
            assert!((got - e).norm() <= tol, "coefficient {n}: got {got}, expected {e}");
        }
    }

    #[test]
    fn r0_and_r1_examples() {
        let x = [c(0.3, 0.2)];
        let zb = [c(-0.1, 0.4)];
        let f = FourPointFn::new(1, "1", |x, _, _, _| Ok(Jet::constant(x[0].layout(), c(1.0, 0.0))));
        assert_eq!(r0_apply(&f, &x, &zb).unwrap(), c(1.0, 0.0));
        assert!(r0_apply(&DiastasisPhi(disc_phi()), &x, &zb).unwrap().norm() < 1e-15);
        assert!(r1_apply(&f, sb_phi().as_ref(), &x, &zb).unwrap().norm() < 1e-15);
        let yy = FourPointFn::new(1, "y yb", |_, _, y, yb| Ok(&y[0] * &yb[0]));
        assert_relative_eq!(r1_apply(&yy, sb_phi().as_ref(), &[c(0.0, 0.0)], &[c(0.0, 0.0)]).unwrap().re, 1.0);
        let xd = c(0.4, -0.3);
        let v = r1_apply(&DiastasisMu(disc_mu()), disc_phi().as_ref(), &[xd], &[xd.conj()]).unwrap();
        assert_relative_eq!(v.re, -1.0, max_relative = 1e-12);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn triple_symbol_examples() {
        let x = c(0.35, -0.2);
        let one = FormalSymbol::one(1);
        let s = sb().triple_symbol(&one, &one, &one).unwrap();
        assert_coeffs(&s, x, &[c(1.0, 0.0), c(0.0, 0.0)], 1e-14);
        let s = sb().triple_symbol(&xb_sym(), &one, &x_sym()).unwrap();
        assert_coeffs(&s, x, &[x.conj() * x, c(1.0, 0.0)], 1e-14);
        let s = disc().triple_symbol(&one, &one, &one).unwrap();
        assert_coeffs(&s, x, &[c(1.0, 0.0), c(-1.0, 0.0)], 1e-12);
    }

    #[test]
    fn bt_star_examples() {
        let x = c(-0.25, 0.45);
        let a = sb().bt_star(&xb_sym(), &x_sym()).unwrap();
        assert_coeffs(&a, x, &[x.conj() * x, c(1.0, 0.0)], 1e-14);
        let b = sb().bt_star(&x_sym(), &xb_sym()).unwrap();
        assert_coeffs(&b, x, &[x * x.conj(), c(0.0, 0.0)], 1e-14);
        let one = FormalSymbol::one(1);
        let d = disc().bt_star(&one, &one).unwrap();
        assert_coeffs(&d, x, &[c(1.0, 0.0), c(-1.0, 0.0)], 1e-12);
    }

    #[test]
    fn kernel_symbol_examples() {
        let x = c(0.2, 0.3);
        for alg in [sb(), disc()] {
            let lin = alg.kernel_symbol_linear().unwrap();
            let quad = alg.kernel_symbol_quadratic().unwrap();
            let a = lin.eval(&[x], &[x.conj()]).unwrap();
            let b = quad.eval(&[x], &[x.conj()]).unwrap();
            assert!((a[1] - b[1]).norm() < 1e-12);
            let cval = c_coefficient(alg.weight(), &[x], &[x.conj()]).unwrap();
            assert!((a[1] + cval).norm() < 1e-12);
        }
        assert_coeffs(&sb().kernel_symbol().unwrap(), x, &[c(1.0, 0.0), c(0.0, 0.0)], 1e-14);
        assert_coeffs(&disc().kernel_symbol().unwrap(), x, &[c(1.0, 0.0), c(1.0, 0.0)], 1e-12);
        let alg = StarAlgebra::new(WeightSpec::new(sb_phi(), sb_exp_mu(0.25), 3.0).unwrap());
        for x in [c(0.0, 0.0), c(0.7, -0.4), c(-1.2, 0.3)] {
            assert_coeffs(&alg.kernel_symbol().unwrap(), x, &[c(1.0, 0.0), c(-0.25, 0.0)], 1e-12);
        }
    }

    #[test]
    fn order_beyond_registry_is_rejected() {
        let w = WeightSpec::new(sb_phi(), one(1), 1.0).unwrap();
        let err = StarAlgebra::with_registry(w.clone(), RnRegistry::default(), 2).unwrap_err();
        assert_eq!(err, Error::OrderTooHigh { requested: 2, available: 1 });
        assert!(sb().kernel_symbol_linear_to(3).is_err());
        let one = FormalSymbol::one(1);
        assert!(matches!(
            sb().triple_symbol_to(&one, &one, &one, 2),
            Err(Error::OrderTooHigh { .. })
        ));
    }

    #[test]
    fn berezin_examples() {
        let x = c(0.15, -0.35);
        let one = FormalSymbol::one(1);
        let p = disc().berezin_transform(&one).unwrap();
        assert_coeffs(&p, x, &[c(1.0, 0.0), c(1.0, 0.0)], 1e-12);
        let xxb = FormalSymbol::classical(sb_phi());
        let p = sb().berezin_transform(&xxb).unwrap();
        assert_coeffs(&p, x, &[x * x.conj(), c(1.0, 0.0)], 1e-13);
        let back = sb().berezin_inverse(&p).unwrap();
        assert_coeffs(&back, x, &[x * x.conj(), c(0.0, 0.0)], 1e-13);
    }

    #[test]
    fn contravariant_and_covariant_examples() {
        let x = c(0.3, 0.25);
        let f = FormalSymbol::classical(Arc::new(Polynomial {
            dim: 1,
            terms: vec![(vec![2, 1], c(0.5, -0.25)), (vec![0, 1], c(1.0, 0.0))],
        }));
        let one = FormalSymbol::one(1);
        for alg in [sb(), disc()] {
            let fv = f.eval(&[x], &[x.conj()]).unwrap()[0];
            assert_coeffs(&alg.contravariant_star(&one, &f).unwrap(), x, &[fv, c(0.0, 0.0)], 1e-11);
            assert_coeffs(&alg.covariant_star(&one, &f).unwrap(), x, &[fv, c(0.0, 0.0)], 1e-11);
        }
        let con = sb().contravariant_star(&x_sym(), &xb_sym()).unwrap();
        assert_coeffs(&con, x, &[x * x.conj(), c(-1.0, 0.0)], 1e-12);
        let cov = sb().covariant_star(&xb_sym(), &x_sym()).unwrap();
        assert_coeffs(&cov, x, &[x * x.conj(), c(1.0, 0.0)], 1e-12);
        // μ-independence
        let other = StarAlgebra::new(WeightSpec::new(sb_phi(), sb_exp_mu(0.25), 4.0).unwrap());
        let a = sb().contravariant_star(&f, &x_sym()).unwrap().eval(&[x], &[x.conj()]).unwrap();
        let b = other.contravariant_star(&f, &x_sym()).unwrap().eval(&[x], &[x.conj()]).unwrap();
        assert!((a[1] - b[1]).norm() < 1e-12);
        let a = sb().covariant_star(&f, &x_sym()).unwrap().eval(&[x], &[x.conj()]).unwrap();
        let b = other.covariant_star(&f, &x_sym()).unwrap().eval(&[x], &[x.conj()]).unwrap();
        assert!((a[1] - b[1]).norm() < 1e-12);
    }

    #[test]
    fn poisson_examples() {
        let xb = antiholomorphic(1, 0);
        let x = holomorphic(1, 0);
        let p = [c(0.1, 0.2)];
        let pb = [c(0.1, -0.2)];
        assert_relative_eq!(poisson_bracket(&xb, &x, &sb_phi(), &p, &pb).unwrap().re, 1.0);
        assert_eq!(poisson_bracket(&x, &x, &sb_phi(), &p, &pb).unwrap(), c(0.0, 0.0));
        let z = [c(0.0, 0.0)];
        assert_relative_eq!(poisson_bracket(&xb, &x, &disc_phi(), &z, &z).unwrap().re, 1.0);
        let s = 0.5f64.sqrt();
        let v = poisson_bracket(&xb, &x, &disc_phi(), &[c(s, 0.0)], &[c(s, 0.0)]).unwrap();
        assert_relative_eq!(v.re, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn symbol_arithmetic() {
        let x = [c(0.5, 0.1)];
        let xb = [c(0.5, -0.1)];
        let a = FormalSymbol::new(vec![holomorphic(1, 0), one(1)]).unwrap();
        let b = FormalSymbol::new(vec![antiholomorphic(1, 0), holomorphic(1, 0)]).unwrap();
        let p = a.mul(&b, 1).unwrap().eval(&x, &xb).unwrap();
        assert!((p[0] - x[0] * xb[0]).norm() < 1e-15);
        assert!((p[1] - (x[0] * x[0] + xb[0])).norm() < 1e-15);
        let r = a.recip(2).mul(&a, 2).unwrap().eval(&x, &xb).unwrap();
        assert!((r[0] - c(1.0, 0.0)).norm() < 1e-15 && r[1].norm() < 1e-15 && r[2].norm() < 1e-15);
        let s = a.add(&b).unwrap().sub(&b).unwrap().eval(&x, &xb).unwrap();
        assert!((s[0] - x[0]).norm() < 1e-15 && (s[1] - c(1.0, 0.0)).norm() < 1e-15);
        assert_relative_eq!(a.eval_at(&x, &xb, 0.5).unwrap().re, 1.0);
        assert_eq!(a.truncate(0).order(), 0);
    }
}
