//! Neumann-series and direct solvers for the correlation equations.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lattice::Window;
use crate::tef::checks::{check_environment_condition, SamplePlan};
use crate::tef::{field_bounds, FieldBounds, OnePointField};

use super::convergence::error_bounds;
use super::domain::{bstar_norm_of, Domain, SupportedFunction};
use super::operator::CorrelationOperator;
use super::KernelTruncation;

/// Default stopping tolerance on the update norm.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Default stopping tolerance on the residual norm.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;
/// Default largest support kept by window solves of the infinite-volume equation.
pub const DEFAULT_INFINITE_KMAX: usize = 4;
/// Iteration cap when no contraction bound below one is available.
pub const UNCERTIFIED_MAX_ITERS: usize = 10_000;
/// Largest system handed to the dense direct solver.
pub const DIRECT_MAX_UNKNOWNS: usize = 1 << 14;
/// Update norms below this are rounding noise and do not enter the rate estimate.
pub const RATE_FLOOR: f64 = 1e-11;
/// Values at depth `d` are trusted once `ε(d)` falls below this.
pub const TRUST_LEVEL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    /// `φ⁽⁰⁾ = ψ_Λ δ`
    Delta,
    /// `φ⁽⁰⁾ = 0`
    Zero,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    pub residual_tol: f64,
    pub truncation: KernelTruncation,
    /// Iterate even when the contraction bound is not below one.
    pub override_gate: bool,
    pub init: Init,
    /// Largest support kept; defaults to the window size for finite-volume
    /// solves and to [`DEFAULT_INFINITE_KMAX`] for infinite-volume ones.
    pub k_max: Option<usize>,
    pub max_iters: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: DEFAULT_TOL,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            truncation: KernelTruncation::exact(),
            override_gate: false,
            init: Init::Delta,
            k_max: None,
            max_iters: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub iterations: usize,
    pub max_iters: usize,
    pub final_update_norm: f64,
    /// `‖φ - ψ_Λδ - ψ_Λ𝒦φ‖`
    pub residual_norm: f64,
    /// Certified bound on `‖𝒦‖` (conservative constant).
    pub operator_norm_bound: f64,
    pub gate_passed: bool,
    /// Largest ratio of successive update norms above [`RATE_FLOOR`].
    pub empirical_contraction_rate: f64,
    pub update_norms: Vec<f64>,
    /// Row bound of the coefficients discarded by the kernel truncation.
    pub truncation_tail: f64,
    pub unknowns: usize,
    /// For window solves of the infinite-volume equation: supports at least
    /// this far from the window complement carry the certified accuracy
    /// [`TRUST_LEVEL`].
    pub trusted_depth: Option<u32>,
    pub caveat: Option<String>,
}

/// Certified bound on `‖𝒦‖` and, when a solve is supplied, the observed rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormCertificate {
    pub bound: f64,
    pub passes: bool,
    pub empirical: Option<f64>,
}

/// `‖𝒦‖ ≤ C_1 (1 + C_2)` with the conservative `C_1`.
pub fn operator_norm_certificate(
    field: &dyn OnePointField,
    report: Option<&SolveReport>,
) -> Result<NormCertificate> {
    let b = field_bounds(field)?;
    Ok(NormCertificate {
        bound: b.contraction_lhs,
        passes: b.passes(),
        empirical: report.map(|r| r.empirical_contraction_rate),
    })
}

fn max_iters_for(bounds: &FieldBounds, tol: f64) -> usize {
    let k = bounds.contraction_lhs;
    if k <= 0.0 {
        return 10;
    }
    if k < 1.0 {
        (10.0 * (tol.ln() / k.ln()).ceil()).max(10.0) as usize
    } else {
        UNCERTIFIED_MAX_ITERS
    }
}

fn preconditions(
    field: &dyn OnePointField,
    window: &Window,
    options: &SolveOptions,
) -> Result<FieldBounds> {
    if window.dim() != field.dimension() {
        return Err(Error::model("window and field disagree on the dimension"));
    }
    let plan = if (2..=crate::tef::checks::EXHAUSTIVE_MAX_SITES).contains(&window.len()) {
        SamplePlan::exhaustive(window.clone())
    } else {
        SamplePlan::random(0, 2_000, window.clone())
    };
    let env = check_environment_condition(field, &plan)?;
    if !env.passed() {
        let r = &env.identities[0];
        return Err(Error::Precondition(format!(
            "environment condition violated (residual {:.3e}) at {}",
            r.max_residual,
            r.witness.as_deref().unwrap_or("?")
        )));
    }
    let bounds = field_bounds(field)?;
    if !bounds.passes() && !options.override_gate {
        return Err(Error::NotCertified {
            lhs: bounds.contraction_lhs,
        });
    }
    Ok(bounds)
}

fn norm_of_difference(domain: &Domain, a: &[f64], b: &[f64], scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    scratch.extend(a.iter().zip(b).map(|(x, y)| x - y));
    bstar_norm_of(domain, scratch)
}

/// `‖φ - δ - Aφ‖`.
fn residual(op: &CorrelationOperator, phi: &[f64]) -> f64 {
    let mut k = vec![0.0; phi.len()];
    op.apply_into(phi, &mut k);
    let r: Vec<f64> = phi
        .iter()
        .zip(&k)
        .zip(op.delta_values())
        .map(|((p, k), d)| p - d - k)
        .collect();
    bstar_norm_of(op.domain(), &r)
}

fn iterate(
    op: &CorrelationOperator,
    bounds: &FieldBounds,
    options: &SolveOptions,
) -> Result<(SupportedFunction, SolveReport)> {
    let domain = op.domain().clone();
    let n = op.len();
    let max_iters = options
        .max_iters
        .unwrap_or_else(|| max_iters_for(bounds, options.tol));
    let mut phi = match options.init {
        Init::Delta => op.delta_values().to_vec(),
        Init::Zero => vec![0.0; n],
    };
    let mut next = vec![0.0; n];
    let mut scratch = Vec::with_capacity(n);
    let mut update_norms = Vec::new();
    let mut rate = 0.0f64;
    let mut first_update = None;
    let mut iterations = 0;
    let mut final_residual;
    loop {
        if iterations >= max_iters {
            return Err(Error::Divergence {
                iterations,
                last_update: update_norms.last().copied().unwrap_or(f64::NAN),
                rate: recent_rate(&update_norms),
            });
        }
        op.apply_into(&phi, &mut next);
        for (x, d) in next.iter_mut().zip(op.delta_values()) {
            *x += d;
        }
        iterations += 1;
        let u = norm_of_difference(&domain, &next, &phi, &mut scratch);
        if let Some(prev) = update_norms.last().copied() {
            if prev > RATE_FLOOR && u > RATE_FLOOR {
                rate = rate.max(u / prev);
            }
        }
        update_norms.push(u);
        std::mem::swap(&mut phi, &mut next);
        let first = *first_update.get_or_insert(u.max(f64::MIN_POSITIVE));
        if !u.is_finite() || u > 1e8 * first.max(1.0) {
            return Err(Error::Divergence {
                iterations,
                last_update: u,
                rate: recent_rate(&update_norms),
            });
        }
        if u <= options.tol {
            final_residual = residual(op, &phi);
            if final_residual <= options.residual_tol.max(options.tol) {
                break;
            }
        }
    }
    let report = SolveReport {
        iterations,
        max_iters,
        final_update_norm: update_norms.last().copied().unwrap_or(0.0),
        residual_norm: final_residual,
        operator_norm_bound: bounds.contraction_lhs,
        gate_passed: bounds.passes(),
        empirical_contraction_rate: rate,
        update_norms,
        truncation_tail: op.truncation_tail(),
        unknowns: n,
        trusted_depth: None,
        caveat: None,
    };
    Ok((
        SupportedFunction::from_values(domain, phi)?.with_empty_value(1.0),
        report,
    ))
}

/// Geometric mean of the last few update ratios.
fn recent_rate(norms: &[f64]) -> f64 {
    let tail: Vec<f64> = norms.iter().rev().take(6).copied().collect();
    if tail.len() < 2 || tail[tail.len() - 1] <= 0.0 {
        return f64::NAN;
    }
    (tail[0] / tail[tail.len() - 1]).powf(1.0 / (tail.len() - 1) as f64)
}

/// Solves `ρ_Λ = ψ_Λ δ + ψ_Λ 𝒦 ρ_Λ` by iteration from `ψ_Λ δ` (or zero).
///
/// Requires the environment condition and, unless overridden, the
/// contraction bound `C_1(1 + C_2) < 1`.
pub fn solve_finite_volume(
    field: &dyn OnePointField,
    window: &Window,
    options: &SolveOptions,
) -> Result<(SupportedFunction, SolveReport)> {
    let bounds = preconditions(field, window, options)?;
    let k_max = options.k_max.unwrap_or(window.len());
    let domain = Arc::new(Domain::new(window, field.spins(), k_max)?);
    let op = CorrelationOperator::assemble(field, domain, options.truncation)?;
    iterate(&op, &bounds, options)
}

/// Solves `(1 - ψ_Λ𝒦) ρ_Λ = ψ_Λ δ` by dense LU factorisation.
pub fn solve_finite_volume_direct(
    field: &dyn OnePointField,
    window: &Window,
    options: &SolveOptions,
) -> Result<(SupportedFunction, SolveReport)> {
    let bounds = preconditions(field, window, options)?;
    let k_max = options.k_max.unwrap_or(window.len());
    let domain = Arc::new(Domain::new(window, field.spins(), k_max)?);
    if domain.len() > DIRECT_MAX_UNKNOWNS {
        return Err(Error::Budget {
            required: domain.len() as u128,
            budget: DIRECT_MAX_UNKNOWNS as u128,
        });
    }
    let op = CorrelationOperator::assemble(field, domain.clone(), options.truncation)?;
    let n = op.len();
    let mut m = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for (j, v) in op.row(i) {
            m[(i, j)] -= v;
        }
    }
    let b = DVector::from_column_slice(op.delta_values());
    let x = m
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Precondition("the system 1 - ψ𝒦 is singular".into()))?;
    let values: Vec<f64> = x.iter().copied().collect();
    let res = residual(&op, &values);
    let report = SolveReport {
        iterations: 0,
        max_iters: 0,
        final_update_norm: 0.0,
        residual_norm: res,
        operator_norm_bound: bounds.contraction_lhs,
        gate_passed: bounds.passes(),
        empirical_contraction_rate: 0.0,
        update_norms: Vec::new(),
        truncation_tail: op.truncation_tail(),
        unknowns: n,
        trusted_depth: None,
        caveat: None,
    };
    Ok((
        SupportedFunction::from_values(domain, values)?.with_empty_value(1.0),
        report,
    ))
}

/// Iterates `ρ = δ + 𝒦ρ` with `ρ` restricted to configurations in `Λ_0` of at
/// most `k_max` sites (reads outside are zero).
///
/// Only supports deep inside the window approximate the infinite-volume
/// solution; the report gives the depth at which the certified error bound
/// drops below [`TRUST_LEVEL`], when the field is certified.
pub fn solve_infinite_volume(
    field: &dyn OnePointField,
    window: &Window,
    options: &SolveOptions,
) -> Result<(SupportedFunction, SolveReport)> {
    let bounds = preconditions(field, window, options)?;
    let k_max = options.k_max.unwrap_or(DEFAULT_INFINITE_KMAX);
    let domain = Arc::new(Domain::new(window, field.spins(), k_max)?);
    let op = CorrelationOperator::assemble(field, domain.clone(), options.truncation)?;
    let (phi, mut report) = iterate(&op, &bounds, options)?;
    let truncated_support = domain.k_max() < window.len();
    let mut caveat = String::from(
        "window solve: values near the window boundary are not infinite-volume values",
    );
    if truncated_support {
        caveat.push_str(&format!(
            "; supports larger than {} sites were dropped",
            domain.k_max()
        ));
    }
    if bounds.passes() {
        let eb = error_bounds(field)?;
        report.trusted_depth = (1..=10_000).find(|d| eb.epsilon(*d) <= TRUST_LEVEL);
        caveat.push_str(&format!(
            "; trusted depth (ε(d) ≤ {TRUST_LEVEL:e}, bound derived from the proof chain): {}",
            report
                .trusted_depth
                .map_or("none".to_string(), |d| d.to_string())
        ));
    } else {
        caveat.push_str("; contraction not certified, no trusted depth");
    }
    report.caveat = Some(caveat);
    Ok((phi, report))
}
