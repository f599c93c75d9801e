//! Independent reference values for the derivative engine.
//!
//! Each built-in model function is re-implemented here in double-double
//! complex arithmetic (about 32 significant digits), without jets, and
//! differentiated by central finite differences. At step `h = 1e-4` a
//! fourth-order difference loses `~h⁻⁴ = 1e16` in relative accuracy, which
//! plain `f64` cannot absorb but double-double can; the remaining `O(h²)`
//! truncation error is around `1e-8`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::jets::C64;
use crate::models::{ModelKind, ModelSpec};

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DoubleDouble = DoubleDouble { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> DoubleDouble {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> DoubleDouble {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble::new(x)
    }
}

impl Add for DoubleDouble {
    type Output = DoubleDouble;
    fn add(self, o: DoubleDouble) -> DoubleDouble {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = DoubleDouble;
    fn neg(self) -> DoubleDouble {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = DoubleDouble;
    fn sub(self, o: DoubleDouble) -> DoubleDouble {
        self + (-o)
    }
}

impl Mul for DoubleDouble {
    type Output = DoubleDouble;
    fn mul(self, o: DoubleDouble) -> DoubleDouble {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = DoubleDouble;
    fn div(self, o: DoubleDouble) -> DoubleDouble {
        let q1 = self.hi / o.hi;
        let r = self - o * DoubleDouble::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * DoubleDouble::new(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo } + DoubleDouble::new(q3)
    }
}

/// Complex number with double-double parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexDD {
    pub re: DoubleDouble,
    pub im: DoubleDouble,
}

impl ComplexDD {
    pub const ZERO: ComplexDD = ComplexDD {
        re: DoubleDouble::ZERO,
        im: DoubleDouble::ZERO,
    };
    pub const ONE: ComplexDD = ComplexDD {
        re: DoubleDouble::ONE,
        im: DoubleDouble::ZERO,
    };

    pub fn new(re: DoubleDouble, im: DoubleDouble) -> ComplexDD {
        ComplexDD { re, im }
    }

    pub fn to_c64(self) -> C64 {
        C64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn scale(self, s: DoubleDouble) -> ComplexDD {
        ComplexDD::new(self.re * s, self.im * s)
    }

    /// Magnitude bound `|re| + |im|` in `f64`.
    pub fn l1(self) -> f64 {
        self.re.to_f64().abs() + self.im.to_f64().abs()
    }

    /// `e^z` by scaling and squaring with a Taylor series.
    pub fn exp(self) -> ComplexDD {
        let mut k = 0;
        let mut w = self;
        while w.l1() > 1e-3 {
            w = w.scale(DoubleDouble::new(0.5));
            k += 1;
        }
        let mut term = ComplexDD::ONE;
        let mut sum = ComplexDD::ONE;
        for n in 1..30 {
            term = (term * w).scale(DoubleDouble::ONE / DoubleDouble::new(n as f64));
            sum = sum + term;
            if term.l1() < 1e-36 * sum.l1() {
                break;
            }
        }
        for _ in 0..k {
            sum = sum * sum;
        }
        sum
    }

    /// `ln(1 − t) = −2 atanh(t / (2 − t))`, for `|t / (2 − t)| < 1`.
    pub fn ln_one_minus(t: ComplexDD) -> Result<ComplexDD> {
        let two = ComplexDD::from(C64::new(2.0, 0.0));
        let u = t / (two - t);
        if u.to_c64().norm() >= 0.95 {
            return Err(Error::OutsideDomain("series for ln(1 - t) does not converge here".into()));
        }
        let u2 = u * u;
        let mut pow = u;
        let mut sum = ComplexDD::ZERO;
        for k in 0..2000 {
            let term = pow.scale(DoubleDouble::ONE / DoubleDouble::new((2 * k + 1) as f64));
            sum = sum + term;
            if term.l1() < 1e-36 * sum.l1().max(1e-300) {
                break;
            }
            pow = pow * u2;
        }
        Ok(sum.scale(DoubleDouble::new(-2.0)))
    }
}

impl From<C64> for ComplexDD {
    fn from(z: C64) -> Self {
        ComplexDD::new(DoubleDouble::new(z.re), DoubleDouble::new(z.im))
    }
}

impl Add for ComplexDD {
    type Output = ComplexDD;
    fn add(self, o: ComplexDD) -> ComplexDD {
        ComplexDD::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for ComplexDD {
    type Output = ComplexDD;
    fn sub(self, o: ComplexDD) -> ComplexDD {
        ComplexDD::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for ComplexDD {
    type Output = ComplexDD;
    fn mul(self, o: ComplexDD) -> ComplexDD {
        ComplexDD::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

impl Div for ComplexDD {
    type Output = ComplexDD;
    fn div(self, o: ComplexDD) -> ComplexDD {
        let den = o.re * o.re + o.im * o.im;
        let num = ComplexDD::new(self.re * o.re + self.im * o.im, self.im * o.re - self.re * o.im);
        ComplexDD::new(num.re / den, num.im / den)
    }
}

/// Which model function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFunctionKind {
    Phi,
    Mu,
}

/// Closed-form evaluation of a model's `φ` or `μ` in double-double.
pub fn model_function_dd(kind: &ModelKind, which: ModelFunctionKind, x: &[ComplexDD], ybar: &[ComplexDD]) -> Result<ComplexDD> {
    let t = x.iter().zip(ybar).fold(ComplexDD::ZERO, |acc, (a, b)| acc + *a * *b);
    let one = ComplexDD::ONE;
    Ok(match (kind, which) {
        (ModelKind::SegalBargmann { .. }, ModelFunctionKind::Phi) => t,
        (ModelKind::SegalBargmann { .. }, ModelFunctionKind::Mu) => one,
        (ModelKind::SbMuExp { .. }, ModelFunctionKind::Phi) => t,
        (ModelKind::SbMuExp { beta }, ModelFunctionKind::Mu) => t.scale(DoubleDouble::new(*beta)).exp(),
        (ModelKind::DiscHyperbolic | ModelKind::DiscMuSq, ModelFunctionKind::Phi) => {
            let l = ComplexDD::ln_one_minus(t)?;
            ComplexDD::ZERO - l
        }
        (ModelKind::DiscHyperbolic, ModelFunctionKind::Mu) => one,
        (ModelKind::DiscMuSq, ModelFunctionKind::Mu) => {
            let u = one - t;
            u * u
        }
        (ModelKind::PlaneQuartic { epsilon }, ModelFunctionKind::Phi) => t + (t * t).scale(DoubleDouble::new(*epsilon)),
        (ModelKind::PlaneQuartic { .. }, ModelFunctionKind::Mu) => one,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Default finite-difference step.
pub const FD_STEP: f64 = 1e-4;

/// `∂^idx f` at `(x, ȳ)` by tensor-product central differences with step
/// `h`, over the slot variables `(x_1..x_N, ȳ_1..ȳ_N)`.
pub fn fd_partial(
    kind: &ModelKind,
    which: ModelFunctionKind,
    x: &[C64],
    ybar: &[C64],
    idx: &[usize],
    h: f64,
) -> Result<C64> {
    let n = x.len();
    if ybar.len() != n || idx.len() != 2 * n {
        return Err(Error::IndexLength {
            got: idx.len(),
            vars: 2 * n,
        });
    }
    let base: Vec<ComplexDD> = x.iter().chain(ybar).map(|&z| ComplexDD::from(z)).collect();
    let hd = DoubleDouble::new(h);
    // offsets (k/2 − j)·h and weights (−1)^j C(k, j) per variable
    let stencils: Vec<Vec<(DoubleDouble, f64)>> = idx
        .iter()
        .map(|&k| {
            (0..=k)
                .map(|j| {
                    let off = DoubleDouble::new(k as f64 / 2.0 - j as f64) * hd;
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    (off, sign * binomial(k, j))
                })
                .collect()
        })
        .collect();
    let mut counter = vec![0usize; 2 * n];
    let mut acc = ComplexDD::ZERO;
    loop {
        let mut point = base.clone();
        let mut weight = 1.0;
        for (v, &c) in counter.iter().enumerate() {
            let (off, w) = stencils[v][c];
            point[v] = ComplexDD::new(point[v].re + off, point[v].im);
            weight *= w;
        }
        let val = model_function_dd(kind, which, &point[..n], &point[n..])?;
        acc = acc + val.scale(DoubleDouble::new(weight));
        // advance the mixed-radix counter
        let mut v = 0;
        loop {
            if v == counter.len() {
                let total: usize = idx.iter().sum();
                let mut denom = DoubleDouble::ONE;
                for _ in 0..total {
                    denom = denom * hd;
                }
                return Ok(ComplexDD::new(acc.re / denom, acc.im / denom).to_c64());
            }
            counter[v] += 1;
            if counter[v] <= idx[v] {
                break;
            }
            counter[v] = 0;
            v += 1;
        }
    }
}

/// All multi-indices over `vars` variables with total degree `1..=order`.
pub fn multi_indices(vars: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(vars: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == vars {
            if cur.iter().sum::<usize>() > 0 {
                out.push(cur.clone());
            }
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(vars, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(vars, order, &mut Vec::new(), &mut out);
    out
}

/// One jet-vs-difference comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialCheck {
    pub which: ModelFunctionKind,
    pub index: Vec<usize>,
    pub jet: C64,
    pub finite_difference: C64,
    /// `|jet − fd| / max(1, |fd|)`.
    pub error: f64,
}

/// Compares every partial of `φ` and `μ` up to `order` from jets against
/// finite differences of the double-double closed forms.
pub fn check_model_partials(model: &ModelSpec, x: &[C64], ybar: &[C64], order: usize, h: f64) -> Result<Vec<PartialCheck>> {
    let mut out = Vec::new();
    for (which, f) in [(ModelFunctionKind::Phi, &model.phi), (ModelFunctionKind::Mu, &model.mu)] {
        let jet = f.taylor(x, ybar, order)?;
        for index in multi_indices(2 * model.dim, order) {
            let jv = jet.partial(&index)?;
            let fd = fd_partial(&model.kind, which, x, ybar, &index, h)?;
            out.push(PartialCheck {
                which,
                error: (jv - fd).norm() / fd.norm().max(1.0),
                index,
                jet: jv,
                finite_difference: fd,
            });
        }
    }
    Ok(out)
}

/// Plain value of a model function through the double-double path.
pub fn model_value(model: &ModelSpec, which: ModelFunctionKind, x: &[C64], ybar: &[C64]) -> Result<C64> {
    let xs: Vec<ComplexDD> = x.iter().map(|&z| z.into()).collect();
    let ys: Vec<ComplexDD> = ybar.iter().map(|&z| z.into()).collect();
    Ok(model_function_dd(&model.kind, which, &xs, &ys)?.to_c64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::parse_model;

    #[test]
    fn double_double_arithmetic() {
        let third = DoubleDouble::ONE / DoubleDouble::new(3.0);
        let back = third * DoubleDouble::new(3.0) - DoubleDouble::ONE;
        assert!(back.to_f64().abs() < 1e-31);
        let e = ComplexDD::ONE.exp();
        // e = 2.718281828459045 + 1.4456468917292502e-16
        assert_eq!(e.re.hi, std::f64::consts::E);
        let diff = (e.re.lo - 1.445_646_891_729_250_2e-16).abs();
        eprintln!("exp(1) lo diff {diff:e}");
        assert!(diff < 1e-28);
        let z = ComplexDD::from(C64::new(0.3, -0.4));
        let l = ComplexDD::ln_one_minus(z).unwrap().to_c64();
        let exact = (C64::new(1.0, 0.0) - C64::new(0.3, -0.4)).ln();
        assert!((l - exact).norm() < 1e-15);
    }

    #[test]
    fn oracle_matches_model_values() {
        for m in ModelSpec::catalog() {
            for x in m.sample_points(4) {
                let xb: Vec<C64> = x.iter().map(|v| v.conj() + C64::new(0.01, -0.02)).collect();
                for (which, f) in [(ModelFunctionKind::Phi, &m.phi), (ModelFunctionKind::Mu, &m.mu)] {
                    let a = model_value(&m, which, &x, &xb).unwrap();
                    let b = f.eval(&x, &xb).unwrap();
                    assert!((a - b).norm() < 1e-14 * a.norm().max(1.0), "{}", m.name);
                }
            }
        }
    }

    #[test]
    fn fourth_order_differences_match_jets() {
        let m = parse_model("disc-mu-sq").unwrap();
        let x = [C64::new(0.3, 0.2)];
        let xb = [C64::new(0.31, -0.18)];
        let checks = check_model_partials(&m, &x, &xb, 4, FD_STEP).unwrap();
        assert_eq!(checks.len(), 2 * 14);
        for c in &checks {
            assert!(c.error < 1e-6, "{c:?}");
        }
    }

    #[test]
    fn multi_index_count() {
        assert_eq!(multi_indices(2, 4).len(), 14);
        assert_eq!(multi_indices(4, 4).len(), 69);
    }
}
