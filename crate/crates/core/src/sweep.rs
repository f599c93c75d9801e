//! Numerical symbol extraction for a built-in model at one α, with the
//! polynomial degree raised until the diagonal kernel has converged at every
//! requested point.

use crate::error::{Error, Result};
use crate::jets::C64;
use crate::kernel::{
    extract_symbol_numeric_with, gram_matrix_with, plane_cutoff, GramOptions, KernelSettings, DISC_INTERIOR_RADIUS,
};
use crate::models::{Domain, ModelSpec};
use crate::quadrature::build_quadrature;

/// Controls for [`numeric_symbols`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub initial_degree: usize,
    /// Degree is multiplied by 3/2 until converged or above this bound.
    pub max_degree: usize,
    /// Required relative size of the last increments of `K_d(x, x̄)`.
    pub convergence_tol: f64,
    /// Fixed radial order; `None` uses [`KernelSettings::for_degree`].
    pub radial_order: Option<usize>,
    pub angular_order: Option<usize>,
    pub cutoff_radius: Option<f64>,
    pub max_condition: f64,
    pub tail_limit: f64,
    pub interior_radius: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        let g = GramOptions::default();
        SweepOptions {
            initial_degree: 24,
            max_degree: 400,
            convergence_tol: 1e-14,
            radial_order: None,
            angular_order: None,
            cutoff_radius: None,
            max_condition: g.max_condition,
            tail_limit: g.tail_limit,
            interior_radius: DISC_INTERIOR_RADIUS,
        }
    }
}

/// Outcome of one α.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaRun {
    pub alpha: f64,
    pub degree: usize,
    pub radial_order: usize,
    pub angular_order: usize,
    pub cutoff_radius: Option<f64>,
    /// Ignored relative mass beyond the plane cutoff.
    pub tail_estimate: Option<f64>,
    pub condition_estimate: f64,
    /// Per point: relative size of the last kernel increments.
    pub convergence: Vec<f64>,
    pub converged: bool,
    /// Per point: `k = (π/α) μ e^{−αφ} K_d`.
    pub symbols: Vec<f64>,
}

/// Computes the diagonal symbol of `model` at `alpha` at each point.
pub fn numeric_symbols(model: &ModelSpec, alpha: f64, points: &[C64], opts: &SweepOptions) -> Result<AlphaRun> {
    if model.dim != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: model.dim,
        });
    }
    if opts.initial_degree == 0 || opts.max_degree < opts.initial_degree {
        return Err(Error::InvalidParameter(format!(
            "degree range {}..={} is empty",
            opts.initial_degree, opts.max_degree
        )));
    }
    let w = model.weight(alpha)?;
    for &x in points {
        model.validate_at(&[x])?;
    }
    let gram_opts = GramOptions {
        max_condition: opts.max_condition,
        tail_limit: opts.tail_limit,
    };
    let disc = model.domain == Domain::Disc;
    let mut degree = opts.initial_degree;
    loop {
        let defaults = KernelSettings::for_degree(degree, disc);
        let radial_order = opts.radial_order.unwrap_or(defaults.radial_order);
        let angular_order = opts.angular_order.unwrap_or(defaults.angular_order);
        let cutoff_radius = match (model.domain, opts.cutoff_radius) {
            (Domain::Disc, _) => None,
            (Domain::Plane, Some(r)) => Some(r),
            (Domain::Plane, None) => Some(plane_cutoff(&w, degree, opts.tail_limit)?.radius),
        };
        let rule = build_quadrature(
            model.quadrature_domain(cutoff_radius)?,
            radial_order,
            angular_order,
            model.weight_exponent_hint(alpha),
        )?;
        let gd = gram_matrix_with(&w, degree, &rule, &gram_opts)?;
        let convergence: Vec<f64> = points.iter().map(|&x| gd.diagonal_tail(x)).collect::<Result<_>>()?;
        let converged = convergence.iter().all(|&t| t <= opts.convergence_tol);
        let next = (degree * 3).div_ceil(2);
        if converged || next > opts.max_degree {
            let symbols = points
                .iter()
                .map(|&x| extract_symbol_numeric_with(&w, &gd, x, opts.interior_radius))
                .collect::<Result<_>>()?;
            return Ok(AlphaRun {
                alpha,
                degree,
                radial_order,
                angular_order,
                cutoff_radius,
                tail_estimate: gd.tail_estimate,
                condition_estimate: gd.condition_estimate,
                convergence,
                converged,
                symbols,
            });
        }
        degree = next;
    }
}
