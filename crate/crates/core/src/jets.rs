//! Truncated multivariate Taylor series ("jets") over complex scalars.
//!
//! A [`Jet`] holds the Taylor coefficients of a function of `vars` complex
//! variables about a base point, up to total degree `order`. Coefficients are
//! stored densely in graded order (all degree-0 monomials, then degree 1, ...),
//! and arithmetic is exact below the cutoff. Polarized functions are
//! differentiated by treating the holomorphic slot `x` and the antiholomorphic
//! slot `ȳ` as independent jet variables; no conjugation happens inside a jet.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Monomial bookkeeping shared by every jet with the same `(vars, order)`.
pub struct Layout {
    vars: usize,
    order: usize,
    monomials: Vec<Box<[u8]>>,
    degrees: Vec<usize>,
    // degree_end[d] = number of monomials with total degree <= d
    degree_end: Vec<usize>,
    positions: HashMap<Box<[u8]>, usize>,
    products: OnceLock<Vec<Vec<(u32, u32)>>>,
}

type LayoutCache = RwLock<HashMap<(usize, usize), Arc<Layout>>>;

fn layout_cache() -> &'static LayoutCache {
    static CACHE: OnceLock<LayoutCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn monomials_of_degree(vars: usize, degree: usize) -> Vec<Vec<u8>> {
    if vars == 0 {
        return if degree == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for rest in monomials_of_degree(vars - 1, degree - first) {
            let mut m = Vec::with_capacity(vars);
            m.push(first as u8);
            m.extend(rest);
            out.push(m);
        }
    }
    out
}

impl Layout {
    /// Shared layout for `vars` variables truncated at total degree `order`.
    pub fn get(vars: usize, order: usize) -> Arc<Layout> {
        assert!(order < 256, "jet order must fit in a u8 exponent");
        if let Some(l) = layout_cache().read().unwrap().get(&(vars, order)) {
            return Arc::clone(l);
        }
        let built = Arc::new(Layout::build(vars, order));
        let mut cache = layout_cache().write().unwrap();
        Arc::clone(cache.entry((vars, order)).or_insert(built))
    }

    fn build(vars: usize, order: usize) -> Layout {
        let mut monomials = Vec::new();
        let mut degrees = Vec::new();
        let mut degree_end = Vec::with_capacity(order + 1);
        for d in 0..=order {
            for m in monomials_of_degree(vars, d) {
                monomials.push(m.into_boxed_slice());
                degrees.push(d);
            }
            degree_end.push(monomials.len());
        }
        let positions = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        Layout {
            vars,
            order,
            monomials,
            degrees,
            degree_end,
            positions,
            products: OnceLock::new(),
        }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomial(&self, i: usize) -> &[u8] {
        &self.monomials[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn position(&self, exponents: &[u8]) -> Option<usize> {
        self.positions.get(exponents).copied()
    }

    // For each monomial i: every (j, k) with m_i * m_j = m_k inside the truncation.
    fn products(&self) -> &[Vec<(u32, u32)>] {
        self.products.get_or_init(|| {
            let mut table = Vec::with_capacity(self.len());
            let mut scratch = vec![0u8; self.vars];
            for i in 0..self.len() {
                let room = self.order - self.degrees[i];
                let limit = self.degree_end[room];
                let mut row = Vec::with_capacity(limit);
                for j in 0..limit {
                    for v in 0..self.vars {
                        scratch[v] = self.monomials[i][v] + self.monomials[j][v];
                    }
                    let k = self.positions[scratch.as_slice()];
                    row.push((j as u32, k as u32));
                }
                table.push(row);
            }
            table
        })
    }

    fn same_shape(&self, other: &Layout) -> bool {
        self.vars == other.vars && self.order == other.order
    }
}

impl fmt::Debug for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Layout")
            .field("vars", &self.vars)
            .field("order", &self.order)
            .finish()
    }
}

/// How a value enters a computation when lifted to a jet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Constant,
    Variable(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JetFunc {
    Exp,
    Log,
    Pow(i32),
}

/// Truncated Taylor expansion of a function of several complex variables.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<C64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_map();
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c != C64::new(0.0, 0.0) {
                s.entry(&self.layout.monomial(i), c);
            }
        }
        s.finish()
    }
}

/// Lift a complex value to a jet in `vars` variables truncated at `order`.
pub fn lift(value: C64, role: Role, vars: usize, order: usize) -> Result<Jet> {
    let layout = Layout::get(vars, order);
    match role {
        Role::Constant => Ok(Jet::constant(&layout, value)),
        Role::Variable(index) => Jet::variable(&layout, index, value),
    }
}

/// Binary jet arithmetic; `Div` fails on a divisor with zero value.
pub fn jet_arith(a: &Jet, b: &Jet, op: ArithOp) -> Result<Jet> {
    match op {
        ArithOp::Add => Ok(a + b),
        ArithOp::Sub => Ok(a - b),
        ArithOp::Mul => Ok(a * b),
        ArithOp::Div => a.try_div(b),
    }
}

pub fn jet_func(a: &Jet, f: JetFunc) -> Result<Jet> {
    match f {
        JetFunc::Exp => Ok(a.exp()),
        JetFunc::Log => a.ln(),
        JetFunc::Pow(n) => a.powi(n),
    }
}

/// Raw partial derivative `idx! * coefficient` of a jet.
pub fn extract_partial(j: &Jet, idx: &[usize]) -> Result<C64> {
    j.partial(idx)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Jet {
    pub fn constant(layout: &Arc<Layout>, value: C64) -> Jet {
        let mut coeffs = vec![C64::new(0.0, 0.0); layout.len()];
        coeffs[0] = value;
        Jet {
            layout: Arc::clone(layout),
            coeffs,
        }
    }

    pub fn zero(layout: &Arc<Layout>) -> Jet {
        Jet::constant(layout, C64::new(0.0, 0.0))
    }

    /// The coordinate function `u_index` expanded about `value`.
    pub fn variable(layout: &Arc<Layout>, index: usize, value: C64) -> Result<Jet> {
        if index >= layout.vars() {
            return Err(Error::VariableOutOfRange {
                index,
                vars: layout.vars(),
            });
        }
        let mut j = Jet::constant(layout, value);
        if layout.order() >= 1 {
            // degree-1 monomials follow the constant, in variable order
            j.coeffs[1 + index] = C64::new(1.0, 0.0);
        }
        Ok(j)
    }

    pub fn from_coeffs(layout: &Arc<Layout>, coeffs: Vec<C64>) -> Jet {
        assert_eq!(coeffs.len(), layout.len(), "coefficient count mismatch");
        Jet {
            layout: Arc::clone(layout),
            coeffs,
        }
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn vars(&self) -> usize {
        self.layout.vars()
    }

    pub fn order(&self) -> usize {
        self.layout.order()
    }

    /// Value at the base point.
    pub fn value(&self) -> C64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    fn check_index(&self, idx: &[usize]) -> Result<Vec<u8>> {
        if idx.len() != self.vars() {
            return Err(Error::IndexLength {
                got: idx.len(),
                vars: self.vars(),
            });
        }
        let degree: usize = idx.iter().sum();
        if degree > self.order() {
            return Err(Error::OrderExceeded {
                degree,
                order: self.order(),
            });
        }
        Ok(idx.iter().map(|&e| e as u8).collect())
    }

    /// Taylor coefficient of the monomial with exponents `idx`.
    pub fn coefficient(&self, idx: &[usize]) -> Result<C64> {
        let key = self.check_index(idx)?;
        Ok(self.coeffs[self.layout.position(&key).unwrap()])
    }

    /// Partial derivative `∂^idx` at the base point.
    pub fn partial(&self, idx: &[usize]) -> Result<C64> {
        let c = self.coefficient(idx)?;
        let scale: f64 = idx.iter().map(|&e| factorial(e)).product();
        Ok(c * scale)
    }

    fn assert_compatible(&self, other: &Jet) {
        assert!(
            self.layout.same_shape(&other.layout),
            "jet layouts differ: {:?} vs {:?}",
            self.layout,
            other.layout
        );
    }

    pub fn scale(&self, c: C64) -> Jet {
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn add_constant(&self, c: C64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    fn mul_jet(&self, other: &Jet) -> Jet {
        self.assert_compatible(other);
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len()];
        let zero = C64::new(0.0, 0.0);
        for (i, row) in self.layout.products().iter().enumerate() {
            let a = self.coeffs[i];
            if a == zero {
                continue;
            }
            for &(j, k) in row {
                out[k as usize] += a * other.coeffs[j as usize];
            }
        }
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs: out,
        }
    }

    // Evaluates sum_k c[k] * (self - value)^k with Horner's rule; exact at the truncation.
    fn compose_series(&self, c: &[C64]) -> Jet {
        let mut delta = self.clone();
        delta.coeffs[0] = C64::new(0.0, 0.0);
        let top = c.len() - 1;
        let mut acc = Jet::constant(&self.layout, c[top]);
        for k in (0..top).rev() {
            acc = acc.mul_jet(&delta).add_constant(c[k]);
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let c: Vec<C64> = (0..=self.order())
            .map(|k| e / factorial(k))
            .collect();
        self.compose_series(&c)
    }

    /// Principal-branch logarithm; the higher coefficients do not depend on the branch.
    pub fn ln(&self) -> Result<Jet> {
        let a = self.value();
        if a == C64::new(0.0, 0.0) {
            return Err(Error::LogOfZero);
        }
        let mut c = Vec::with_capacity(self.order() + 1);
        c.push(a.ln());
        let inv = a.inv();
        let mut p = C64::new(1.0, 0.0);
        for k in 1..=self.order() {
            p *= inv;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            c.push(p * (sign / k as f64));
        }
        Ok(self.compose_series(&c))
    }

    pub fn recip(&self) -> Result<Jet> {
        let a = self.value();
        if a == C64::new(0.0, 0.0) {
            return Err(Error::DivisionByZero);
        }
        let inv = a.inv();
        let mut c = Vec::with_capacity(self.order() + 1);
        let mut p = inv;
        for _ in 0..=self.order() {
            c.push(p);
            p = -p * inv;
        }
        Ok(self.compose_series(&c))
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet> {
        self.assert_compatible(other);
        Ok(self.mul_jet(&other.recip()?))
    }

    /// Integer power; negative exponents need a nonzero value.
    pub fn powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut result = Jet::constant(&self.layout, C64::new(1.0, 0.0));
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        Ok(result)
    }

    /// Real power on the principal branch.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        let a = self.value();
        if a == C64::new(0.0, 0.0) {
            return Err(Error::DivisionByZero);
        }
        let inv = a.inv();
        let mut c = Vec::with_capacity(self.order() + 1);
        let mut term = a.powf(p);
        for k in 0..=self.order() {
            c.push(term);
            term = term * inv * ((p - k as f64) / (k as f64 + 1.0));
        }
        Ok(self.compose_series(&c))
    }

    /// Derivative with respect to variable `var`, one order lower.
    pub fn derivative(&self, var: usize) -> Result<Jet> {
        let vars = self.vars();
        if var >= vars {
            return Err(Error::VariableOutOfRange { index: var, vars });
        }
        if self.order() == 0 {
            return Ok(Jet::zero(&self.layout));
        }
        let target = Layout::get(vars, self.order() - 1);
        let mut coeffs = vec![C64::new(0.0, 0.0); target.len()];
        let mut key = vec![0u8; vars];
        for (i, c) in coeffs.iter_mut().enumerate() {
            key.copy_from_slice(target.monomial(i));
            key[var] += 1;
            let src = self.layout.position(&key).unwrap();
            *c = self.coeffs[src] * f64::from(key[var]);
        }
        Ok(Jet {
            layout: target,
            coeffs,
        })
    }

    /// Re-express in another layout: variables beyond the target's are set to zero,
    /// missing variables are padded, and terms above the target order are dropped.
    pub fn convert(&self, target: &Arc<Layout>) -> Jet {
        if self.layout.same_shape(target) {
            return self.clone();
        }
        let mut coeffs = vec![C64::new(0.0, 0.0); target.len()];
        let tv = target.vars();
        let mut key = vec![0u8; tv];
        for (i, c) in self.coeffs.iter().enumerate() {
            if self.layout.degree(i) > target.order() {
                break;
            }
            let m = self.layout.monomial(i);
            if m.iter().skip(tv).any(|&e| e != 0) {
                continue;
            }
            key.iter_mut().for_each(|k| *k = 0);
            let shared = tv.min(m.len());
            key[..shared].copy_from_slice(&m[..shared]);
            coeffs[target.position(&key).unwrap()] = *c;
        }
        Jet {
            layout: Arc::clone(target),
            coeffs,
        }
    }

    pub fn max_abs_diff(&self, other: &Jet) -> f64 {
        self.assert_compatible(other);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &'a Jet) -> Jet {
        self.assert_compatible(rhs);
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &'a Jet) -> Jet {
        self.assert_compatible(rhs);
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &'a Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(C64::new(-1.0, 0.0))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &'a Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<Jet> for &'a Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn lift_constant_has_no_derivatives() {
        let j = lift(c(3.0), Role::Constant, 2, 2).unwrap();
        assert_eq!(j.value(), c(3.0));
        assert!(j.coeffs()[1..].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn lift_variable_has_unit_slope() {
        let j = lift(c(0.0), Role::Variable(0), 2, 2).unwrap();
        assert_eq!(j.coefficient(&[1, 0]).unwrap(), c(1.0));
        assert_eq!(j.coefficient(&[0, 1]).unwrap(), c(0.0));
        let k = lift(c(0.5), Role::Variable(1), 2, 4).unwrap();
        assert_eq!(k.value(), c(0.5));
        assert_eq!(k.coefficient(&[0, 1]).unwrap(), c(1.0));
        assert_eq!(k.coefficient(&[1, 0]).unwrap(), c(0.0));
    }

    #[test]
    fn lift_rejects_bad_index() {
        assert_eq!(
            lift(c(0.0), Role::Variable(2), 2, 2).unwrap_err(),
            Error::VariableOutOfRange { index: 2, vars: 2 }
        );
    }

    #[test]
    fn product_rule() {
        let x = lift(c(0.0), Role::Variable(0), 2, 2).unwrap();
        let sq = jet_arith(&x, &x, ArithOp::Mul).unwrap();
        assert_eq!(sq.coefficient(&[2, 0]).unwrap(), c(1.0));
        assert_eq!(extract_partial(&sq, &[2, 0]).unwrap(), c(2.0));
    }

    #[test]
    fn exp_of_product_mixed_partial() {
        let x = lift(c(0.0), Role::Variable(0), 2, 2).unwrap();
        let y = lift(c(0.0), Role::Variable(1), 2, 2).unwrap();
        let e = jet_func(&(&x * &y), JetFunc::Exp).unwrap();
        assert_relative_eq!(e.partial(&[1, 1]).unwrap().re, 1.0);
    }

    #[test]
    fn log_mixed_partial_matches_closed_form() {
        // d_x d_yb of -log(1 - x yb) = 1 / (1 - x yb)^2 = 16/9 at x = yb = 0.5
        let x = lift(c(0.5), Role::Variable(0), 2, 2).unwrap();
        let y = lift(c(0.5), Role::Variable(1), 2, 2).unwrap();
        let one = Jet::constant(x.layout(), c(1.0));
        let l = jet_func(&(&one - &(&x * &y)), JetFunc::Log).unwrap();
        let d = -l.partial(&[1, 1]).unwrap();
        assert_relative_eq!(d.re, 16.0 / 9.0, max_relative = 1e-14);
        assert_relative_eq!(d.im, 0.0);
    }

    #[test]
    fn exp_xy_partial_at_offset_point() {
        let x = lift(c(1.0), Role::Variable(0), 2, 3).unwrap();
        let y = lift(c(0.5), Role::Variable(1), 2, 3).unwrap();
        let e = (&x * &y).exp();
        let expected = 1.5 * 0.5f64.exp();
        assert_relative_eq!(e.partial(&[1, 1]).unwrap().re, expected, max_relative = 1e-14);
        assert_relative_eq!(expected, 2.47308, max_relative = 1e-5);
    }

    #[test]
    fn partial_of_square_and_constant() {
        let x = lift(c(0.3), Role::Variable(0), 2, 3).unwrap();
        let sq = &x * &x;
        assert_relative_eq!(sq.partial(&[2, 0]).unwrap().re, 2.0);
        let k = Jet::constant(x.layout(), c(7.0));
        assert_eq!(k.partial(&[1, 2]).unwrap(), c(0.0));
    }

    #[test]
    fn partial_rejects_degree_above_order() {
        let x = lift(c(0.0), Role::Variable(0), 2, 2).unwrap();
        assert_eq!(
            x.partial(&[2, 1]).unwrap_err(),
            Error::OrderExceeded { degree: 3, order: 2 }
        );
    }

    #[test]
    fn division_and_log_of_zero_fail() {
        let x = lift(c(0.0), Role::Variable(0), 1, 3).unwrap();
        let one = Jet::constant(x.layout(), c(1.0));
        assert_eq!(one.try_div(&x).unwrap_err(), Error::DivisionByZero);
        assert_eq!(x.ln().unwrap_err(), Error::LogOfZero);
        assert_eq!(jet_arith(&one, &x, ArithOp::Div).unwrap_err(), Error::DivisionByZero);
    }

    #[test]
    fn derivative_lowers_order() {
        let x = lift(c(0.2), Role::Variable(0), 2, 4).unwrap();
        let y = lift(c(-0.1), Role::Variable(1), 2, 4).unwrap();
        let f = (&x * &y).exp();
        let d = f.derivative(0).unwrap().derivative(1).unwrap();
        assert_eq!(d.order(), 2);
        for idx in [[0, 0], [1, 0], [0, 1], [1, 1], [2, 0]] {
            let lifted = [idx[0] + 1, idx[1] + 1];
            assert_relative_eq!(
                d.partial(&idx).unwrap().re,
                f.partial(&lifted).unwrap().re,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn convert_restricts_and_pads() {
        let big = Layout::get(3, 3);
        let x = Jet::variable(&big, 0, c(0.5)).unwrap();
        let z = Jet::variable(&big, 2, c(0.0)).unwrap();
        let f = (&x * &z).add_constant(c(1.0)) + &x * &x;
        let small = Layout::get(2, 2);
        let g = f.convert(&small);
        assert_eq!(g.coefficient(&[2, 0]).unwrap(), c(1.0));
        assert_relative_eq!(g.value().re, 1.25);
        let back = g.convert(&big);
        assert_eq!(back.coefficient(&[1, 0, 1]).unwrap(), c(0.0));
        assert_eq!(back.coefficient(&[2, 0, 0]).unwrap(), c(1.0));
    }

    #[test]
    fn negative_powers_and_powf() {
        let x = lift(c(2.0), Role::Variable(0), 1, 4).unwrap();
        let p = x.powi(-2).unwrap();
        // d^2/dx^2 x^-2 = 6 x^-4
        assert_relative_eq!(p.partial(&[2]).unwrap().re, 6.0 / 16.0, max_relative = 1e-14);
        let q = x.powf(-2.0).unwrap();
        assert!(p.max_abs_diff(&q) < 1e-14);
        let r = x.powf(0.5).unwrap();
        assert_relative_eq!(r.partial(&[1]).unwrap().re, 0.5 / 2f64.sqrt(), max_relative = 1e-14);
    }
}
