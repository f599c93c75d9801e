//! The invariant suite: each function runs one family of checks and returns
//! one [`Record`] per check and model, holding the worst residual seen.
//!
//! Groups:
//! - `jets`: model φ and μ derivatives against double-double finite differences;
//! - `diastasis`: critical point and positive Hessian of the six-point phase;
//! - `kernel`: exact Bergman kernels against the Gram-matrix kernel;
//! - `recurrence`: linear and quadratic kernel recurrences against `−(Δ ln μ + ½R)`;
//! - `transform`: Berezin transform inverse and intertwining of the products;
//! - `associativity`: generalized associativity of the triple symbol;
//! - `star`: unit property, first-order associativity, commutators, μ-independence;
//! - `poisson`: antisymmetry, Leibniz, Jacobi and coordinate brackets.

use std::f64::consts::PI;
use std::sync::Arc;

use bergman_core::functions::{antiholomorphic, from_fn, holomorphic, one, product, Polarized, Polynomial};
use bergman_core::geometry::{c_coefficient, diastasis_hessian_check, WeightSpec};
use bergman_core::kernel::{
    bergman_kernel_numeric, gram_matrix, plane_cutoff, KernelSettings, TAIL_LIMIT,
};
use bergman_core::models::{parse_model, Domain, ModelKind, ModelSpec};
use bergman_core::oracle::{check_model_partials, ModelFunctionKind, FD_STEP};
use bergman_core::quadrature::build_quadrature;
use bergman_core::symbols::{poisson_bracket, FormalSymbol, PoissonBracketFn, StarAlgebra};
use bergman_core::{Result, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::Tolerances;
use crate::report::{Comparison, Record};

/// Names of all check groups, in run order.
pub const GROUPS: [&str; 8] = [
    "jets",
    "diastasis",
    "kernel",
    "recurrence",
    "transform",
    "associativity",
    "star",
    "poisson",
];

/// Worst residual per check name, in first-seen order.
#[derive(Debug, Default, Clone)]
struct Worst {
    entries: Vec<(String, &'static str, f64, f64)>,
}

impl Worst {
    fn push(&mut self, name: &str, group: &'static str, value: f64, tol: f64) {
        match self.entries.iter_mut().find(|e| e.0 == name) {
            // NaN must stick so that it fails the record
            Some(e) => {
                if value.is_nan() || value > e.2 {
                    e.2 = value;
                }
            }
            None => self.entries.push((name.to_string(), group, value, tol)),
        }
    }

    fn merge(mut self, other: Worst) -> Worst {
        for (name, group, v, tol) in other.entries {
            self.push(&name, group, v, tol);
        }
        self
    }

    fn records(self, model: &str) -> Vec<Record> {
        self.entries
            .into_iter()
            .map(|(name, group, v, tol)| Record::residual(group, format!("{model}/{name}"), v, tol))
            .collect()
    }
}

fn conj(x: &[C64]) -> Vec<C64> {
    x.iter().map(|v| v.conj()).collect()
}

/// Coefficients `ħ⁰, ħ¹` at the diagonal point `(x, x̄)`.
fn coeffs(s: &FormalSymbol, x: &[C64]) -> Result<[C64; 2]> {
    let v = s.eval(x, &conj(x))?;
    Ok([
        v.first().copied().unwrap_or_default(),
        v.get(1).copied().unwrap_or_default(),
    ])
}

fn diff2(a: [C64; 2], b: [C64; 2]) -> [f64; 2] {
    [(a[0] - b[0]).norm(), (a[1] - b[1]).norm()]
}

fn max2(a: [f64; 2]) -> f64 {
    if a[0].is_nan() || a[1].is_nan() {
        f64::NAN
    } else {
        a[0].max(a[1])
    }
}

/// `exp(β x·ȳ)` as a polarized function.
pub fn exp_pairing(dim: usize, beta: f64) -> Polarized {
    from_fn(dim, "exp(beta x.yb)", move |x, y| {
        let mut t = &x[0] * &y[0];
        for i in 1..x.len() {
            t = &t + &(&x[i] * &y[i]);
        }
        Ok(t.scale(C64::new(beta, 0.0)).exp())
    })
}

/// Settings for the random-symbol checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolCheckOptions {
    /// Number of random draws; each draw uses five polynomials.
    pub trials: usize,
    /// Total degree of the random polynomials.
    pub degree: usize,
    pub seed: u64,
}

impl Default for SymbolCheckOptions {
    fn default() -> Self {
        SymbolCheckOptions {
            trials: 20,
            degree: 3,
            seed: crate::config::DEFAULT_SEED,
        }
    }
}

/// Five random polynomials for trial `t`, independent of thread count.
pub fn random_polynomials(dim: usize, degree: usize, seed: u64, trial: usize) -> Vec<Polarized> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    (0..5)
        .map(|_| Arc::new(Polynomial::random(dim, degree, &mut rng)) as Polarized)
        .collect()
}

/// Random-symbol checks of the requested groups for one model at the given
/// diagonal points.
pub fn symbol_checks(
    model: &ModelSpec,
    points: &[Vec<C64>],
    opts: &SymbolCheckOptions,
    tol: &Tolerances,
    wants: &(dyn Fn(&str) -> bool + Sync),
) -> Result<Vec<Record>> {
    let alpha = model.min_alpha() + 1.0;
    let alg = StarAlgebra::new(model.weight(alpha)?);
    let flat = StarAlgebra::new(WeightSpec::new(Arc::clone(&model.phi), one(model.dim), alpha)?);
    let tilted = StarAlgebra::new(WeightSpec::new(
        Arc::clone(&model.phi),
        exp_pairing(model.dim, 0.25),
        alpha + 0.25,
    )?);
    let k = alg.kernel_symbol()?;
    let phi = &model.phi;

    let mut fixed = Worst::default();
    if wants("recurrence") {
        let lin = alg.kernel_symbol_linear()?;
        let quad = alg.kernel_symbol_quadratic()?;
        for x in points {
            let a = coeffs(&lin, x)?;
            let b = coeffs(&quad, x)?;
            let c = c_coefficient(alg.weight(), x, &conj(x))?;
            fixed.push("linear-vs-quadratic", "recurrence", max2(diff2(a, b)), tol.symbol);
            fixed.push("k1-vs-curvature", "recurrence", (a[1] + c).norm(), tol.symbol);
            fixed.push("k0-is-one", "recurrence", (a[0] - 1.0).norm(), tol.symbol);
        }
    }
    if wants("poisson") && model.dim == 1 {
        let expected: Option<Box<dyn Fn(C64) -> f64>> = match model.kind {
            ModelKind::SegalBargmann { .. } | ModelKind::SbMuExp { .. } => Some(Box::new(|_| 1.0)),
            ModelKind::DiscHyperbolic | ModelKind::DiscMuSq => Some(Box::new(|x: C64| (1.0 - x.norm_sqr()).powi(2))),
            ModelKind::PlaneQuartic { .. } => None,
        };
        if let Some(expected) = expected {
            let (xb, xh) = (antiholomorphic(1, 0), holomorphic(1, 0));
            for x in points {
                let v = poisson_bracket(&xb, &xh, phi, x, &conj(x))?;
                fixed.push("coordinate-bracket", "poisson", (v - expected(x[0])).norm(), tol.symbol);
            }
        }
    }

    let per_trial = |t: usize| -> Result<Worst> {
        let mut w = Worst::default();
        let p = random_polynomials(model.dim, opts.degree, opts.seed, t);
        let s: Vec<FormalSymbol> = p.iter().map(|f| FormalSymbol::classical(Arc::clone(f))).collect();
        let (f, h, l) = (&s[0], &s[1], &s[2]);

        let star = if wants("star") {
            Some((
                alg.bt_star(&k, f)?,
                alg.bt_star(f, &k)?,
                alg.bt_star(&alg.bt_star(f, h)?, l)?,
                alg.bt_star(f, &alg.bt_star(h, l)?)?,
                [
                    ("bt", alg.bt_star(f, h)?, alg.bt_star(h, f)?),
                    ("contravariant", alg.contravariant_star(f, h)?, alg.contravariant_star(h, f)?),
                    ("covariant", alg.covariant_star(f, h)?, alg.covariant_star(h, f)?),
                ],
                [
                    (flat.contravariant_star(f, h)?, tilted.contravariant_star(f, h)?),
                    (flat.covariant_star(f, h)?, tilted.covariant_star(f, h)?),
                ],
            ))
        } else {
            None
        };
        let generalized = if wants("associativity") {
            Some((
                alg.triple_symbol(&s[0], &s[1], &alg.triple_symbol(&s[2], &s[3], &s[4])?)?,
                alg.triple_symbol(&alg.triple_symbol(&s[0], &s[1], &s[2])?, &s[3], &s[4])?,
            ))
        } else {
            None
        };
        let transform = if wants("transform") {
            let pf = alg.berezin_transform(f)?;
            let ph = alg.berezin_transform(h)?;
            Some((
                alg.berezin_inverse(&pf)?,
                alg.berezin_transform(&alg.contravariant_star(f, h)?)?,
                alg.bt_star(&pf, &ph)?,
            ))
        } else {
            None
        };
        let bracket = |a: &Polarized, b: &Polarized| -> Polarized {
            Arc::new(PoissonBracketFn {
                f: Arc::clone(a),
                h: Arc::clone(b),
                phi: Arc::clone(phi),
            })
        };

        for x in points {
            let xb = conj(x);
            let fv = coeffs(f, x)?;
            let pb = poisson_bracket(&p[0], &p[1], phi, x, &xb)?;
            if let Some((kf, fk, left, right, commutators, mu_pairs)) = &star {
                w.push("unit.left", "star", max2(diff2(coeffs(kf, x)?, fv)), tol.symbol);
                w.push("unit.right", "star", max2(diff2(coeffs(fk, x)?, fv)), tol.symbol);
                w.push(
                    "associativity.order1",
                    "star",
                    max2(diff2(coeffs(left, x)?, coeffs(right, x)?)),
                    tol.symbol,
                );
                for (name, fh, hf) in commutators {
                    let a = coeffs(fh, x)?;
                    let b = coeffs(hf, x)?;
                    let r = max2([(a[0] - b[0]).norm(), (a[1] - b[1] - pb).norm()]);
                    w.push(&format!("commutator.{name}"), "star", r, tol.symbol);
                }
                for ((a, b), name) in mu_pairs.iter().zip(["contravariant", "covariant"]) {
                    let r = max2(diff2(coeffs(a, x)?, coeffs(b, x)?));
                    w.push(&format!("mu-independence.{name}"), "star", r, tol.mu_independence);
                }
            }
            if let Some((a, b)) = &generalized {
                w.push("generalized", "associativity", max2(diff2(coeffs(a, x)?, coeffs(b, x)?)), tol.symbol);
            }
            if let Some((back, lhs, rhs)) = &transform {
                w.push("inverse", "transform", max2(diff2(coeffs(back, x)?, fv)), tol.symbol);
                let r = (coeffs(lhs, x)?[1] - coeffs(rhs, x)?[1]).norm();
                w.push("contravariant-intertwining", "transform", r, tol.symbol);
            }
            if wants("poisson") {
                let hp = poisson_bracket(&p[1], &p[0], phi, x, &xb)?;
                w.push("antisymmetry", "poisson", (pb + hp).norm(), tol.symbol);
                let hl = product(&p[1], &p[2]);
                let lhs = poisson_bracket(&p[0], &hl, phi, x, &xb)?;
                let hv = p[1].eval(x, &xb)?;
                let lv = p[2].eval(x, &xb)?;
                let rhs = hv * poisson_bracket(&p[0], &p[2], phi, x, &xb)? + pb * lv;
                w.push("leibniz", "poisson", (lhs - rhs).norm(), tol.symbol);
                let jac = bracket(&p[0], &bracket(&p[1], &p[2])).eval(x, &xb)?
                    + bracket(&p[1], &bracket(&p[2], &p[0])).eval(x, &xb)?
                    + bracket(&p[2], &bracket(&p[0], &p[1])).eval(x, &xb)?;
                w.push("jacobi", "poisson", jac.norm(), tol.jacobi);
            }
        }
        Ok(w)
    };

    let trials: Vec<Worst> = (0..opts.trials).into_par_iter().map(per_trial).collect::<Result<_>>()?;
    let worst = trials.into_iter().fold(fixed, Worst::merge);
    Ok(worst.records(&model.name))
}

/// Models covered by the selftest: the catalog plus a two-dimensional
/// Segal–Bargmann space.
pub fn selftest_models() -> Vec<ModelSpec> {
    let mut models = ModelSpec::catalog();
    models.push(parse_model("segal-bargmann(2)").expect("built-in model"));
    models
}

/// Jets of every model function against finite differences, all mixed
/// partials up to total order 4, at three near-diagonal points per model.
pub fn jet_checks(models: &[ModelSpec], tol: &Tolerances) -> Result<Vec<Record>> {
    let per_model = |m: &ModelSpec| -> Result<Vec<Record>> {
        let mut w = Worst::default();
        for (j, x) in m.sample_points(3).iter().enumerate() {
            let shift = C64::from_polar(0.02, 1.0 + j as f64);
            let yb: Vec<C64> = x.iter().map(|v| v.conj() + shift).collect();
            for c in check_model_partials(m, x, &yb, 4, FD_STEP)? {
                let name = match c.which {
                    ModelFunctionKind::Phi => "phi.order4",
                    ModelFunctionKind::Mu => "mu.order4",
                };
                w.push(name, "jets", c.error, tol.jets);
            }
        }
        Ok(w.records(&m.name))
    };
    let out: Vec<Vec<Record>> = models.par_iter().map(per_model).collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}

/// Six-point phase checks at ten near-diagonal points per model.
pub fn diastasis_checks(models: &[ModelSpec], tol: &Tolerances) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for m in models {
        let mut value: f64 = 0.0;
        let mut gradient: f64 = 0.0;
        let mut min_eig = f64::INFINITY;
        for (j, x) in m.sample_points(10).iter().enumerate() {
            let shift = C64::from_polar(0.01, 0.7 * j as f64);
            let zb: Vec<C64> = x.iter().map(|v| v.conj() + shift).collect();
            let pc = diastasis_hessian_check(m.phi.as_ref(), x, &zb)?;
            value = value.max(pc.value);
            gradient = gradient.max(pc.gradient_max);
            min_eig = min_eig.min(pc.min_eigenvalue);
        }
        out.push(Record::residual("diastasis", format!("{}/value", m.name), value, tol.phase));
        out.push(Record::residual("diastasis", format!("{}/gradient", m.name), gradient, tol.phase));
        out.push(Record::new(
            "diastasis",
            format!("{}/hessian-min-eigenvalue", m.name),
            0.0,
            min_eig,
            0.0,
            Comparison::Greater,
        ));
    }
    Ok(out)
}

/// Pairs `(x, ȳ)` for the exact-kernel comparison: `n` points with
/// `|x| ≤ rx` and `|y| ≤ ry`.
pub fn kernel_test_pairs(n: usize, rx: f64, ry: f64) -> Vec<(C64, C64)> {
    (0..n)
        .map(|k| {
            let t = (k as f64 + 1.0) / n as f64;
            let x = C64::from_polar(rx * t, 2.0 * PI * 0.381_966 * k as f64);
            let y = C64::from_polar(ry * (0.5 + 0.5 * t), 1.3 + 2.0 * PI * 0.618_034 * k as f64);
            (x, y.conj())
        })
        .collect()
}

/// Largest relative deviation of the numeric kernel of `model` at degree
/// `d` from its closed form over the given pairs.
pub fn kernel_reproduction_error(model: &ModelSpec, alpha: f64, degree: usize, pairs: &[(C64, C64)]) -> Result<f64> {
    let w = model.weight(alpha)?;
    let disc = model.domain == Domain::Disc;
    let settings = KernelSettings::for_degree(degree, disc);
    let cutoff = if disc {
        None
    } else {
        Some(plane_cutoff(&w, degree, TAIL_LIMIT)?.radius)
    };
    let rule = build_quadrature(
        model.quadrature_domain(cutoff)?,
        settings.radial_order,
        settings.angular_order,
        model.weight_exponent_hint(alpha),
    )?;
    let gd = gram_matrix(&w, degree, &rule)?;
    let mut worst: f64 = 0.0;
    for &(x, yb) in pairs {
        let num = bergman_kernel_numeric(&gd, x, yb)?;
        let exact = model
            .reference_kernel(alpha, &[x], &[yb])
            .ok_or_else(|| bergman_core::Error::InvalidParameter(format!("{} has no closed-form kernel", model.name)))?;
        let e = (num - exact).norm() / exact.norm();
        worst = if e.is_nan() { f64::NAN } else { worst.max(e) };
    }
    Ok(worst)
}

/// Segal–Bargmann at `α = 2, d = 20` over ten pairs in the closed unit
/// bidisc; disc-mu-sq at `α = 3, d = 16` with `|x| ≤ 0.7`, `|y| ≤ 0.35`.
pub fn kernel_checks(tol: &Tolerances) -> Result<Vec<Record>> {
    let sb = parse_model("segal-bargmann")?;
    let disc = parse_model("disc-mu-sq")?;
    let e1 = kernel_reproduction_error(&sb, 2.0, 20, &kernel_test_pairs(10, 1.0, 1.0))?;
    let e2 = kernel_reproduction_error(&disc, 3.0, 16, &kernel_test_pairs(10, 0.7, 0.35))?;
    Ok(vec![
        Record::residual("kernel", "segal-bargmann/alpha2-degree20", e1, tol.kernel),
        Record::residual("kernel", "disc-mu-sq/alpha3-degree16", e2, tol.kernel_disc),
    ])
}
