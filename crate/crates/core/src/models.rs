//! Built-in weights `(φ, μ)` with closed-form jet evaluation and, where
//! known, exact reference kernels.
//!
//! | name              | φ                  | μ            | domain | exact kernel                          |
//! |-------------------|--------------------|--------------|--------|---------------------------------------|
//! | `segal-bargmann`  | `Σ x_i ȳ_i`        | 1            | plane  | `(α/π)^N e^{α x·ȳ}`                   |
//! | `sb-mu-exp(β)`    | `x ȳ`              | `e^{β x ȳ}`  | plane  | `((α−β)/π) e^{(α−β) x ȳ}`             |
//! | `disc-hyperbolic` | `−ln(1 − x ȳ)`     | 1            | disc   | —                                     |
//! | `disc-mu-sq`      | `−ln(1 − x ȳ)`     | `(1 − x ȳ)²` | disc   | `((α+1)/π) (1 − x ȳ)^{−α−2}`           |
//! | `plane-quartic(ε)`| `x ȳ + ε (x ȳ)²`   | 1            | plane  | —                                     |
//!
//! Kernels are those of `L²_hol(ρ dA)` with `ρ = e^{−αφ} μ det(∂∂̄φ)` and no
//! further normalization; symbols are `k = (π/α)^N μ e^{−αφ} K` on the diagonal.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::functions::{check_dims, Polarized, PolarizedFunction};
use crate::geometry::{c_coefficient, WeightSpec};
use crate::jets::{Jet, C64};
use crate::quadrature::QuadratureDomain;

/// Which built-in family, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    SegalBargmann { dim: usize },
    SbMuExp { beta: f64 },
    DiscHyperbolic,
    DiscMuSq,
    PlaneQuartic { epsilon: f64 },
}

/// Where the weight lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Disc,
    Plane,
}

/// Optional parameters accepted by [`make_model`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModelParams {
    pub dim: Option<usize>,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
}

/// Names accepted by [`make_model`].
pub const MODEL_NAMES: [&str; 5] = ["segal-bargmann", "sb-mu-exp", "disc-hyperbolic", "disc-mu-sq", "plane-quartic"];

/// `t = Σ x_i ȳ_i`.
fn pairing(x: &[Jet], ybar: &[Jet]) -> Jet {
    let mut t = &x[0] * &ybar[0];
    for (a, b) in x.iter().zip(ybar).skip(1) {
        t = &t + &(a * b);
    }
    t
}

fn one_minus(t: &Jet) -> Jet {
    t.scale(C64::new(-1.0, 0.0)).add_constant(C64::new(1.0, 0.0))
}

/// Closed-form model functions of `t = x·ȳ`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Expr {
    /// `t`
    Pairing,
    /// `1`
    One,
    /// `e^{β t}`
    ExpPairing(f64),
    /// `−ln(1 − t)`
    NegLogOneMinus,
    /// `(1 − t)²`
    OneMinusSquared,
    /// `t + ε t²`
    Quartic(f64),
}

#[derive(Clone, Copy, PartialEq)]
struct ModelFunction {
    dim: usize,
    expr: Expr,
}

impl fmt::Debug for ModelFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr {
            Expr::Pairing => write!(f, "x·ȳ"),
            Expr::One => write!(f, "1"),
            Expr::ExpPairing(b) => write!(f, "exp({b} x·ȳ)"),
            Expr::NegLogOneMinus => write!(f, "-ln(1 - x·ȳ)"),
            Expr::OneMinusSquared => write!(f, "(1 - x·ȳ)^2"),
            Expr::Quartic(e) => write!(f, "x·ȳ + {e} (x·ȳ)^2"),
        }
    }
}

impl PolarizedFunction for ModelFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_jet(&self, x: &[Jet], ybar: &[Jet]) -> Result<Jet> {
        check_dims(self.dim, x, ybar)?;
        let t = pairing(x, ybar);
        Ok(match self.expr {
            Expr::Pairing => t,
            Expr::One => Jet::constant(t.layout(), C64::new(1.0, 0.0)),
            Expr::ExpPairing(b) => t.scale(C64::new(b, 0.0)).exp(),
            Expr::NegLogOneMinus => -one_minus(&t).ln()?,
            Expr::OneMinusSquared => {
                let u = one_minus(&t);
                &u * &u
            }
            Expr::Quartic(e) => &t + &(&t * &t).scale(C64::new(e, 0.0)),
        })
    }
}

/// A fully wired built-in model.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub name: String,
    pub kind: ModelKind,
    pub dim: usize,
    pub phi: Polarized,
    pub mu: Polarized,
    pub domain: Domain,
}

/// Resolves a model by name. Parameters not used by the model are ignored;
/// missing ones default to `dim = 1`, `β = 0.25`, `ε = 0.1`.
pub fn make_model(name: &str, params: &ModelParams) -> Result<ModelSpec> {
    let kind = match name {
        "segal-bargmann" => {
            let dim = params.dim.unwrap_or(1);
            if dim == 0 {
                return Err(Error::InvalidParameter("dimension must be at least 1".into()));
            }
            ModelKind::SegalBargmann { dim }
        }
        "sb-mu-exp" => {
            let beta = params.beta.unwrap_or(0.25);
            if !beta.is_finite() {
                return Err(Error::InvalidParameter(format!("beta must be finite, got {beta}")));
            }
            ModelKind::SbMuExp { beta }
        }
        "disc-hyperbolic" => ModelKind::DiscHyperbolic,
        "disc-mu-sq" => ModelKind::DiscMuSq,
        "plane-quartic" => {
            let epsilon = params.epsilon.unwrap_or(0.1);
            if !(epsilon.is_finite() && epsilon >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "epsilon must be nonnegative for a positive metric, got {epsilon}"
                )));
            }
            ModelKind::PlaneQuartic { epsilon }
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    Ok(ModelSpec::from_kind(kind))
}

/// Parses `name` or `name(p)` where `p` is `β`, `ε` or the dimension.
pub fn parse_model(spec: &str) -> Result<ModelSpec> {
    let spec = spec.trim();
    let (name, arg) = match spec.find('(') {
        Some(i) if spec.ends_with(')') => (&spec[..i], Some(spec[i + 1..spec.len() - 1].trim())),
        _ => (spec, None),
    };
    let mut params = ModelParams::default();
    if let Some(arg) = arg {
        let bad = || Error::InvalidParameter(format!("cannot parse parameter '{arg}' of {name}"));
        match name {
            "segal-bargmann" => params.dim = Some(arg.parse().map_err(|_| bad())?),
            "sb-mu-exp" => params.beta = Some(arg.parse().map_err(|_| bad())?),
            "plane-quartic" => params.epsilon = Some(arg.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        }
    }
    make_model(name, &params)
}

impl ModelSpec {
    pub fn from_kind(kind: ModelKind) -> ModelSpec {
        let f = |dim, expr| Arc::new(ModelFunction { dim, expr }) as Polarized;
        let (name, dim, phi, mu, domain) = match kind {
            ModelKind::SegalBargmann { dim } => (
                if dim == 1 { "segal-bargmann".to_string() } else { format!("segal-bargmann({dim})") },
                dim,
                f(dim, Expr::Pairing),
                f(dim, Expr::One),
                Domain::Plane,
            ),
            ModelKind::SbMuExp { beta } => (
                format!("sb-mu-exp({beta})"),
                1,
                f(1, Expr::Pairing),
                f(1, Expr::ExpPairing(beta)),
                Domain::Plane,
            ),
            ModelKind::DiscHyperbolic => (
                "disc-hyperbolic".to_string(),
                1,
                f(1, Expr::NegLogOneMinus),
                f(1, Expr::One),
                Domain::Disc,
            ),
            ModelKind::DiscMuSq => (
                "disc-mu-sq".to_string(),
                1,
                f(1, Expr::NegLogOneMinus),
                f(1, Expr::OneMinusSquared),
                Domain::Disc,
            ),
            ModelKind::PlaneQuartic { epsilon } => (
                format!("plane-quartic({epsilon})"),
                1,
                f(1, Expr::Quartic(epsilon)),
                f(1, Expr::One),
                Domain::Plane,
            ),
        };
        ModelSpec {
            name,
            kind,
            dim,
            phi,
            mu,
            domain,
        }
    }

    /// All shipped models with default parameters (one-dimensional).
    pub fn catalog() -> Vec<ModelSpec> {
        MODEL_NAMES
            .iter()
            .map(|n| make_model(n, &ModelParams::default()).expect("built-in model"))
            .collect()
    }

    /// Smallest admissible α (exclusive) for an integrable weight.
    pub fn min_alpha(&self) -> f64 {
        match self.kind {
            ModelKind::SbMuExp { beta } => beta.max(0.0),
            ModelKind::DiscHyperbolic => 1.0,
            _ => 0.0,
        }
    }

    pub fn weight(&self, alpha: f64) -> Result<WeightSpec> {
        if !(alpha > self.min_alpha()) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {alpha} must exceed {} for {}",
                self.min_alpha(),
                self.name
            )));
        }
        WeightSpec::new(Arc::clone(&self.phi), Arc::clone(&self.mu), alpha)
    }

    /// Quadrature hint: boundary exponent of `ρ` on the disc, decay rate of
    /// `ρ` in `|z|²` on the plane.
    pub fn weight_exponent_hint(&self, alpha: f64) -> f64 {
        match self.kind {
            ModelKind::DiscMuSq => alpha,
            ModelKind::DiscHyperbolic => alpha - 2.0,
            ModelKind::SbMuExp { beta } => alpha - beta,
            ModelKind::SegalBargmann { .. } | ModelKind::PlaneQuartic { .. } => alpha,
        }
    }

    /// The quadrature domain, with a plane cutoff radius when needed.
    pub fn quadrature_domain(&self, cutoff_radius: Option<f64>) -> Result<QuadratureDomain> {
        match (self.domain, cutoff_radius) {
            (Domain::Disc, _) => Ok(QuadratureDomain::UnitDisc),
            (Domain::Plane, Some(r)) => Ok(QuadratureDomain::Plane { cutoff_radius: r }),
            (Domain::Plane, None) => Err(Error::InvalidQuadrature(format!(
                "{} lives on the plane and needs a cutoff radius",
                self.name
            ))),
        }
    }

    pub fn has_reference_kernel(&self) -> bool {
        matches!(
            self.kind,
            ModelKind::SegalBargmann { .. } | ModelKind::SbMuExp { .. } | ModelKind::DiscMuSq
        )
    }

    /// Exact Bergman kernel `K(x, ȳ)` where known.
    pub fn reference_kernel(&self, alpha: f64, x: &[C64], ybar: &[C64]) -> Option<C64> {
        if x.len() != self.dim || ybar.len() != self.dim {
            return None;
        }
        let t: C64 = x.iter().zip(ybar).map(|(a, b)| a * b).sum();
        match self.kind {
            ModelKind::SegalBargmann { dim } => Some((alpha / PI).powi(dim as i32) * (t * alpha).exp()),
            ModelKind::SbMuExp { beta } => {
                let a = alpha - beta;
                Some(a / PI * (t * a).exp())
            }
            ModelKind::DiscMuSq => Some((alpha + 1.0) / PI * (C64::new(1.0, 0.0) - t).powf(-alpha - 2.0)),
            _ => None,
        }
    }

    /// Exact symbol coefficients `[k_0, k_1]` in powers of `1/α` where known.
    pub fn reference_symbol(&self) -> Option<[f64; 2]> {
        match self.kind {
            ModelKind::SegalBargmann { .. } => Some([1.0, 0.0]),
            ModelKind::SbMuExp { beta } => Some([1.0, -beta]),
            ModelKind::DiscMuSq => Some([1.0, 1.0]),
            _ => None,
        }
    }

    /// `k_1 = −(Δ ln μ + ½R)` at the diagonal point `x`.
    pub fn predicted_k1(&self, x: &[C64]) -> Result<f64> {
        let w = self.weight(self.min_alpha() + 1.0)?;
        let xb: Vec<C64> = x.iter().map(|v| v.conj()).collect();
        let c = c_coefficient(&w, x, &xb)?;
        if c.im.abs() > 1e-10 * c.re.abs().max(1.0) {
            return Err(Error::NotReal { real: c.re, imag: c.im });
        }
        Ok(-c.re)
    }

    /// Domain membership, `μ(x, x̄) > 0` and a positive metric at `x`.
    pub fn validate_at(&self, x: &[C64]) -> Result<()> {
        if self.domain == Domain::Disc && x.iter().map(|v| v.norm_sqr()).sum::<f64>() >= 1.0 {
            return Err(Error::OutsideDomain(format!("{x:?} is not inside the unit disc")));
        }
        self.weight(self.min_alpha() + 1.0)?.validate_at(x)
    }

    /// Deterministic interior sample points: radii up to 0.5 (disc) or 0.7
    /// (plane), spread in angle.
    pub fn sample_points(&self, count: usize) -> Vec<Vec<C64>> {
        let rmax = match self.domain {
            Domain::Disc => 0.5,
            Domain::Plane => 0.7,
        };
        (0..count)
            .map(|k| {
                let r = rmax * (k as f64 + 1.0) / count as f64;
                let th = 2.0 * PI * (k as f64) * 0.381_966_011_250_105_1;
                (0..self.dim)
                    .map(|i| C64::from_polar(r / (self.dim as f64).sqrt(), th + i as f64))
                    .collect()
            })
            .collect()
    }
}
