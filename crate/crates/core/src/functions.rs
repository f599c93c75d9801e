//! Polarized functions `(x, ȳ) ↦ f(x, ȳ)`, holomorphic in each slot.
//!
//! Every function is evaluated on jets: both slots receive jets that share one
//! layout, and the result is the composed Taylor expansion. Plain evaluation is
//! the zero-variable, zero-order special case.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::jets::{Jet, Layout, C64};

pub trait PolarizedFunction: Send + Sync + fmt::Debug {
    /// Complex dimension N of each slot.
    fn dim(&self) -> usize;

    /// Evaluate with jet-valued slots; `x.len() == ybar.len() == dim()`.
    fn eval_jet(&self, x: &[Jet], ybar: &[Jet]) -> Result<Jet>;

    fn eval(&self, x: &[C64], ybar: &[C64]) -> Result<C64> {
        let layout = Layout::get(0, 0);
        let xs: Vec<Jet> = x.iter().map(|&v| Jet::constant(&layout, v)).collect();
        let ys: Vec<Jet> = ybar.iter().map(|&v| Jet::constant(&layout, v)).collect();
        Ok(self.eval_jet(&xs, &ys)?.value())
    }

    /// Taylor jet at `(x, ȳ)` in the 2N slot variables `(x_1..x_N, ȳ_1..ȳ_N)`.
    fn taylor(&self, x: &[C64], ybar: &[C64], order: usize) -> Result<Jet> {
        let n = self.dim();
        let layout = Layout::get(2 * n, order);
        let (xs, ys) = slot_variables(&layout, x, ybar, 0)?;
        self.eval_jet(&xs, &ys)
    }
}

pub type Polarized = Arc<dyn PolarizedFunction>;

/// Lift `(x, ȳ)` to jet variables `offset..offset+N` and `offset+N..offset+2N`.
pub fn slot_variables(
    layout: &Arc<Layout>,
    x: &[C64],
    ybar: &[C64],
    offset: usize,
) -> Result<(Vec<Jet>, Vec<Jet>)> {
    if x.len() != ybar.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: ybar.len(),
        });
    }
    let n = x.len();
    let xs = x
        .iter()
        .enumerate()
        .map(|(i, &v)| Jet::variable(layout, offset + i, v))
        .collect::<Result<Vec<_>>>()?;
    let ys = ybar
        .iter()
        .enumerate()
        .map(|(i, &v)| Jet::variable(layout, offset + n + i, v))
        .collect::<Result<Vec<_>>>()?;
    Ok((xs, ys))
}

pub(crate) fn check_dims(dim: usize, x: &[Jet], ybar: &[Jet]) -> Result<()> {
    for len in [x.len(), ybar.len()] {
        if len != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: len });
        }
    }
    Ok(())
}

fn layout_of(x: &[Jet], ybar: &[Jet]) -> Arc<Layout> {
    x.first()
        .or(ybar.first())
        .map(|j| Arc::clone(j.layout()))
        .unwrap_or_else(|| Layout::get(0, 0))
}

#[derive(Debug, Clone)]
pub struct Constant {
    pub dim: usize,
    pub value: C64,
}

impl PolarizedFunction for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_jet(&self, x: &[Jet], ybar: &[Jet]) -> Result<Jet> {
        check_dims(self.dim, x, ybar)?;
        Ok(Jet::constant(&layout_of(x, ybar), self.value))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Holomorphic,
    AntiHolomorphic,
}

/// `x_i` or `ȳ_i`.
#[derive(Debug, Clone)]
pub struct Coordinate {
    pub dim: usize,
    pub slot: Slot,
    pub index: usize,
}

impl PolarizedFunction for Coordinate {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_jet(&self, x: &[Jet], ybar: &[Jet]) -> Result<Jet> {
        check_dims(self.dim, x, ybar)?;
        let src = match self.slot {
            Slot::Holomorphic => x,
            Slot::AntiHolomorphic => ybar,
        };
        src.get(self.index).cloned().ok_or(Error::VariableOutOfRange {
            index: self.index,
            vars: self.dim,
        })
    }
}

/// Polynomial in the 2N slot variables; exponents list x-slot powers then ȳ-slot powers.
#[derive(Debug, Clone)]
pub struct Polynomial {
    pub dim: usize,
    pub terms: Vec<(Vec<u32>, C64)>,
}

impl Polynomial {
    /// Coefficients drawn uniformly from [-1,1]² for every monomial of total degree ≤ `degree`.
    pub fn random<R: Rng>(dim: usize, degree: usize, rng: &mut R) -> Polynomial {
        let layout = Layout::get(2 * dim, degree);
        let terms = (0..layout.len())
            .map(|i| {
                let exps = layout.monomial(i).iter().map(|&e| u32::from(e)).collect();
                let c = C64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
                (exps, c)
            })
            .collect();
        Polynomial { dim, terms }
    }
}

impl PolarizedFunction for Polynomial {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_jet(&self, x: &[Jet], ybar: &[Jet]) -> Result<Jet> {
        check_dims(self.dim, x, ybar)?;
        let layout = layout_of(x, ybar);
        let vars: Vec<&Jet> = x.iter().chain(ybar.iter()).collect();
        let max_exp = self
            .terms
            .iter()
            .flat_map(|(e, _)| e.iter().copied())
            .max()
            .unwrap_or(0) as usize;
        // powers[v][k] = vars[v]^k
        let mut powers: Vec<Vec<Jet>> = Vec::with_capacity(vars.len());
        for v in &vars {
            let mut row = vec![Jet::constant(&layout, C64::new(1.0, 0.0))];
            for k in 1..=max_exp {
                let next = &row[k - 1] * *v;
                row.push(next);
            }
            powers.push(row);
        }
        let mut acc = Jet::zero(&layout);
        for (exps, c) in &self.terms {
            let mut term = Jet::constant(&layout, *c);
            for (v, &e) in exps.iter().enumerate() {
                if e > 0 {
                    term = &term * &powers[v][e as usize];
                }
            }
            acc = &acc + &term;
        }
        Ok(acc)
    }
}

type JetFn = dyn Fn(&[Jet], &[Jet]) -> Result<Jet> + Send + Sync;

/// Closure-backed polarized function.
#[derive(Clone)]
pub struct FnPolarized {
    dim: usize,
    name: String,
    f: Arc<JetFn>,
}

impl fmt::Debug for FnPolarized {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnPolarized({})", self.name)
    }
}

impl PolarizedFunction for FnPolarized {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_jet(&self, x: &[Jet], ybar: &[Jet]) -> Result<Jet> {
        check_dims(self.dim, x, ybar)?;
        (self.f)(x, ybar)
    }
}

#[derive(Debug, Clone)]
pub struct Sum(pub Vec<Polarized>);

#[derive(Debug, Clone)]
pub struct Product(pub Vec<Polarized>);

#[derive(Debug, Clone)]
pub struct Scaled(pub C64, pub Polarized);

#[derive(Debug, Clone)]
pub struct Quotient(pub Polarized, pub Polarized);

fn first_dim(items: &[Polarized]) -> usize {
    items.first().map(|f| f.dim()).unwrap_or(0)
}

impl PolarizedFunction for Sum {
    fn dim(&self) -> usize {
        first_dim(&self.0)
    }
    fn eval_jet(&self, x: &[Jet], ybar: &[Jet]) -> Result<Jet> {
        let mut acc = Jet::zero(&layout_of(x, ybar));
        for f in &self.0 {
            acc = &acc + &f.eval_jet(x, ybar)?;
        }
        Ok(acc)
    }
}

impl PolarizedFunction for Product {
    fn dim(&self) -> usize {
        first_dim(&self.0)
    }
    fn eval_jet(&self, x: &[Jet], ybar: &[Jet]) -> Result<Jet> {
        let mut acc = Jet::constant(&layout_of(x, ybar), C64::new(1.0, 0.0));
        for f in &self.0 {
            acc = &acc * &f.eval_jet(x, ybar)?;
        }
        Ok(acc)
    }
}

impl PolarizedFunction for Scaled {
    fn dim(&self) -> usize {
        self.1.dim()
    }
    fn eval_jet(&self, x: &[Jet], ybar: &[Jet]) -> Result<Jet> {
        Ok(self.1.eval_jet(x, ybar)?.scale(self.0))
    }
}

impl PolarizedFunction for Quotient {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval_jet(&self, x: &[Jet], ybar: &[Jet]) -> Result<Jet> {
        self.0.eval_jet(x, ybar)?.try_div(&self.1.eval_jet(x, ybar)?)
    }
}

pub fn constant(dim: usize, value: C64) -> Polarized {
    Arc::new(Constant { dim, value })
}

pub fn one(dim: usize) -> Polarized {
    constant(dim, C64::new(1.0, 0.0))
}

/// The holomorphic coordinate `x_index`.
pub fn holomorphic(dim: usize, index: usize) -> Polarized {
    Arc::new(Coordinate {
        dim,
        slot: Slot::Holomorphic,
        index,
    })
}

/// The antiholomorphic coordinate `ȳ_index`.
pub fn antiholomorphic(dim: usize, index: usize) -> Polarized {
    Arc::new(Coordinate {
        dim,
        slot: Slot::AntiHolomorphic,
        index,
    })
}

pub fn from_fn<F>(dim: usize, name: &str, f: F) -> Polarized
where
    F: Fn(&[Jet], &[Jet]) -> Result<Jet> + Send + Sync + 'static,
{
    Arc::new(FnPolarized {
        dim,
        name: name.to_string(),
        f: Arc::new(f),
    })
}

pub fn sum(a: &Polarized, b: &Polarized) -> Polarized {
    Arc::new(Sum(vec![Arc::clone(a), Arc::clone(b)]))
}

pub fn difference(a: &Polarized, b: &Polarized) -> Polarized {
    Arc::new(Sum(vec![
        Arc::clone(a),
        Arc::new(Scaled(C64::new(-1.0, 0.0), Arc::clone(b))),
    ]))
}

pub fn product(a: &Polarized, b: &Polarized) -> Polarized {
    Arc::new(Product(vec![Arc::clone(a), Arc::clone(b)]))
}

pub fn scaled(c: C64, f: &Polarized) -> Polarized {
    Arc::new(Scaled(c, Arc::clone(f)))
}

pub fn quotient(a: &Polarized, b: &Polarized) -> Polarized {
    Arc::new(Quotient(Arc::clone(a), Arc::clone(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn coordinates_and_products() {
        let f = product(&holomorphic(1, 0), &antiholomorphic(1, 0));
        let v = f.eval(&[c(0.5, 0.1)], &[c(0.3, -0.2)]).unwrap();
        assert!((v - c(0.5, 0.1) * c(0.3, -0.2)).norm() < 1e-15);
        let t = f.taylor(&[c(0.0, 0.0)], &[c(0.0, 0.0)], 2).unwrap();
        assert_eq!(t.partial(&[1, 1]).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn random_polynomial_is_seeded_and_cubic() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let p = Polynomial::random(1, 3, &mut a);
        let q = Polynomial::random(1, 3, &mut b);
        assert_eq!(p.terms.len(), 10);
        let x = [c(0.2, 0.1)];
        let y = [c(-0.4, 0.3)];
        assert_eq!(p.eval(&x, &y).unwrap(), q.eval(&x, &y).unwrap());
        let t = p.taylor(&x, &y, 5).unwrap();
        assert!(t.partial(&[4, 0]).unwrap().norm() < 1e-14);
    }

    #[test]
    fn jet_value_matches_plain_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p: Polarized = Arc::new(Polynomial::random(2, 3, &mut rng));
        let q = quotient(&p, &sum(&one(2), &product(&holomorphic(2, 1), &antiholomorphic(2, 0))));
        let x = [c(0.1, 0.2), c(-0.3, 0.05)];
        let y = [c(0.2, -0.1), c(0.4, 0.0)];
        let plain = q.eval(&x, &y).unwrap();
        let jet = q.taylor(&x, &y, 3).unwrap();
        assert!((plain - jet.value()).norm() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = holomorphic(2, 0);
        assert!(matches!(
            f.eval(&[c(0.0, 0.0)], &[c(0.0, 0.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
