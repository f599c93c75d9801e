//! Experiment configuration read from TOML.
//!
//! Every section except `[model]` is optional. Unknown keys are rejected so
//! that typos surface as configuration errors rather than silent defaults.

use std::path::{Path, PathBuf};

use bergman_core::models::{make_model, ModelParams, ModelSpec};
use bergman_core::C64;
use serde::Deserialize;

use crate::error::CliError;
use crate::report::Format;

/// Seed used when neither the config nor the command line gives one.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub model: ModelSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub points: PointsSection,
    #[serde(default)]
    pub star: StarSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// `[model]`: a catalog name plus the parameters it uses.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    pub dim: Option<usize>,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
}

/// `[kernel]`: α grid, basis degree range, quadrature and fit settings.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    pub alphas: Vec<f64>,
    /// Starting polynomial degree; raised ×1.5 until converged.
    pub degree: usize,
    pub max_degree: usize,
    pub convergence_tol: f64,
    pub radial_order: Option<usize>,
    pub angular_order: Option<usize>,
    pub cutoff_radius: Option<f64>,
    /// Highest power of `1/α` in the fitted expansion.
    pub fit_order: usize,
    /// Disc points beyond this radius are rejected for symbol extraction.
    pub interior_radius: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection {
            alphas: vec![8.0, 16.0, 32.0, 64.0],
            degree: 24,
            max_degree: 400,
            convergence_tol: 1e-14,
            radial_order: None,
            angular_order: None,
            cutoff_radius: None,
            fit_order: 2,
            interior_radius: bergman_core::kernel::DISC_INTERIOR_RADIUS,
        }
    }
}

/// `[points]`: either `count` catalog sample points or an explicit `list`,
/// each entry `[re_1, im_1, …, re_N, im_N]`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PointsSection {
    pub count: usize,
    pub list: Option<Vec<Vec<f64>>>,
}

impl Default for PointsSection {
    fn default() -> Self {
        PointsSection { count: 5, list: None }
    }
}

/// `[star]`: random polynomial symbols for the ⋆-product table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StarSection {
    pub polynomials: usize,
    pub degree: usize,
}

impl Default for StarSection {
    fn default() -> Self {
        StarSection {
            polynomials: 20,
            degree: 3,
        }
    }
}

/// `[tolerances]`: all must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative tolerance of the fitted first-order symbol coefficient.
    pub k1_relative: f64,
    /// Symbol-calculus residuals (unit, associativity, commutators, …).
    pub symbol: f64,
    pub jacobi: f64,
    pub mu_independence: f64,
    /// Jets against finite differences, `|a − b| ≤ tol · max(1, |b|)`.
    pub jets: f64,
    /// Diastasis value and gradient at the critical point.
    pub phase: f64,
    /// Exact-kernel reproduction on the plane, relative.
    pub kernel: f64,
    /// Exact-kernel reproduction on the disc, relative.
    pub kernel_disc: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            k1_relative: 0.02,
            symbol: 1e-10,
            jacobi: 1e-8,
            mu_independence: 1e-12,
            jets: 1e-6,
            phase: 1e-9,
            kernel: 1e-8,
            kernel_disc: 1e-6,
        }
    }
}

impl Tolerances {
    /// Every tolerance multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Tolerances {
        Tolerances {
            k1_relative: self.k1_relative * s,
            symbol: self.symbol * s,
            jacobi: self.jacobi * s,
            mu_independence: self.mu_independence * s,
            jets: self.jets * s,
            phase: self.phase * s,
            kernel: self.kernel * s,
            kernel_disc: self.kernel_disc * s,
        }
    }

    fn named(&self) -> [(&'static str, f64); 8] {
        [
            ("k1_relative", self.k1_relative),
            ("symbol", self.symbol),
            ("jacobi", self.jacobi),
            ("mu_independence", self.mu_independence),
            ("jets", self.jets),
            ("phase", self.phase),
            ("kernel", self.kernel),
            ("kernel_disc", self.kernel_disc),
        ]
    }
}

/// `[output]`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Format,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            path: None,
            format: Format::Json,
        }
    }
}

impl ExperimentConfig {
    /// Defaults for the named model.
    pub fn for_model(name: &str) -> ExperimentConfig {
        ExperimentConfig {
            seed: DEFAULT_SEED,
            model: ModelSection {
                name: name.to_string(),
                dim: None,
                beta: None,
                epsilon: None,
            },
            kernel: KernelSection::default(),
            points: PointsSection::default(),
            star: StarSection::default(),
            tolerances: Tolerances::default(),
            output: OutputSection::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<ExperimentConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        ExperimentConfig::from_toml_str(&text)
    }

    pub fn model_spec(&self) -> Result<ModelSpec, CliError> {
        let params = ModelParams {
            dim: self.model.dim,
            beta: self.model.beta,
            epsilon: self.model.epsilon,
        };
        make_model(&self.model.name, &params).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Sample points: the explicit list if given, else catalog points.
    pub fn sample_points(&self, model: &ModelSpec) -> Vec<Vec<C64>> {
        match &self.points.list {
            Some(list) => list
                .iter()
                .map(|p| p.chunks(2).map(|c| C64::new(c[0], c[1])).collect())
                .collect(),
            None => model.sample_points(self.points.count),
        }
    }

    /// Checks the invariants not expressible in the schema.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let model = self.model_spec()?;
        for (name, t) in self.tolerances.named() {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("tolerance {name} must be positive, got {t}"));
            }
        }
        let k = &self.kernel;
        if k.alphas.is_empty() {
            return bad("kernel.alphas must not be empty".into());
        }
        for (i, &a) in k.alphas.iter().enumerate() {
            if !(a > 0.0 && a.is_finite()) {
                return bad(format!("kernel.alphas must be positive, got {a}"));
            }
            if k.alphas[..i].contains(&a) {
                return bad(format!("kernel.alphas must be distinct, {a} repeats"));
            }
            if a <= model.min_alpha() {
                return bad(format!("alpha {a} must exceed {} for {}", model.min_alpha(), model.name));
            }
        }
        if k.degree == 0 || k.max_degree < k.degree {
            return bad(format!("need 1 <= kernel.degree <= kernel.max_degree, got {} and {}", k.degree, k.max_degree));
        }
        if !(k.convergence_tol > 0.0) {
            return bad("kernel.convergence_tol must be positive".into());
        }
        if k.radial_order == Some(0) || k.angular_order == Some(0) {
            return bad("quadrature orders must be positive".into());
        }
        if let Some(r) = k.cutoff_radius {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("kernel.cutoff_radius must be positive, got {r}"));
            }
        }
        if !(k.interior_radius > 0.0 && k.interior_radius < 1.0) {
            return bad(format!("kernel.interior_radius must lie in (0, 1), got {}", k.interior_radius));
        }
        match &self.points.list {
            Some(list) => {
                if list.is_empty() {
                    return bad("points.list must not be empty".into());
                }
                for p in list {
                    if p.len() != 2 * model.dim || p.iter().any(|v| !v.is_finite()) {
                        return bad(format!(
                            "each point needs {} finite numbers (re, im per coordinate), got {p:?}",
                            2 * model.dim
                        ));
                    }
                }
            }
            None if self.points.count == 0 => return bad("points.count must be positive".into()),
            None => {}
        }
        for x in self.sample_points(&model) {
            model
                .validate_at(&x)
                .map_err(|e| CliError::Config(format!("sample point {x:?}: {e}")))?;
        }
        if self.star.polynomials == 0 {
            return bad("star.polynomials must be positive".into());
        }
        Ok(())
    }

    /// Checks that the α grid supports the requested fit.
    pub fn validate_fit(&self) -> Result<(), CliError> {
        let needed = self.kernel.fit_order + 2;
        if self.kernel.alphas.len() < needed {
            return Err(CliError::Config(format!(
                "fit_order {} needs at least {needed} alphas, got {}",
                self.kernel.fit_order,
                self.kernel.alphas.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_toml_str("[model]\nname = \"disc-mu-sq\"\n").unwrap();
        assert_eq!(cfg.kernel.alphas, vec![8.0, 16.0, 32.0, 64.0]);
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.output.format, Format::Json);
    }

    #[test]
    fn full_config_parses() {
        let text = r#"
seed = 3
[model]
name = "plane-quartic"
epsilon = 0.2
[kernel]
alphas = [8.0, 16.0, 32.0]
degree = 30
max_degree = 60
fit_order = 1
[points]
list = [[0.2, 0.0], [0.1, -0.3]]
[star]
polynomials = 4
degree = 2
[tolerances]
symbol = 1e-9
[output]
path = "out.csv"
format = "csv"
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.model.epsilon, Some(0.2));
        assert_eq!(cfg.tolerances.symbol, 1e-9);
        assert_eq!(cfg.tolerances.jacobi, 1e-8);
        assert_eq!(cfg.output.format, Format::Csv);
        let m = cfg.model_spec().unwrap();
        assert_eq!(cfg.sample_points(&m)[1], vec![C64::new(0.1, -0.3)]);
        cfg.validate_fit().unwrap();
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let cases = [
            "[model]\nname = \"disc-mu-sq\"\ntypo = 1\n",
            "[model]\nname = \"nope\"\n",
            "[model]\nname = \"disc-mu-sq\"\n[kernel]\nalphas = [8.0, 8.0]\n",
            "[model]\nname = \"disc-mu-sq\"\n[kernel]\nalphas = [-1.0]\n",
            "[model]\nname = \"disc-mu-sq\"\n[tolerances]\nsymbol = 0.0\n",
            "[model]\nname = \"disc-mu-sq\"\n[points]\nlist = [[1.5, 0.0]]\n",
            "[model]\nname = \"disc-mu-sq\"\n[points]\nlist = [[0.1]]\n",
            "[model]\nname = \"sb-mu-exp\"\nbeta = 0.5\n[kernel]\nalphas = [0.25]\n",
            "[kernel]\nalphas = [8.0]\n",
        ];
        for text in cases {
            let err = ExperimentConfig::from_toml_str(text).expect_err(text);
            assert!(matches!(err, CliError::Config(_)), "{text}");
            assert_eq!(err.exit_code(), 2);
        }
        let cfg = ExperimentConfig::from_toml_str("[model]\nname = \"disc-mu-sq\"\n[kernel]\nalphas = [8.0, 16.0]\n").unwrap();
        assert!(cfg.validate_fit().is_err());
    }
}
