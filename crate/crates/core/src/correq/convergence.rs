//! Finite-volume to infinite-volume error bounds and convergence studies.
//!
//! `f` and `ε` are reconstructed from the proof chain of the convergence
//! theorem, not displayed formulas: every report labels them as derived.

use crate::error::{Error, Result};
use crate::exact::rho_exact;
use crate::lattice::{Configuration, Window};
use crate::tef::{field_bounds, tail_sigma, FieldBounds, OnePointField};

use super::solve::{solve_finite_volume, solve_infinite_volume, SolveOptions};
use super::{site_weights, SupportedFunction};

/// Label attached to every reported `f` or `ε` value.
pub const BOUND_LABEL: &str = "derived from proof chain";

/// `‖δ‖ = sup_t Σ_{α∈X_*} e_α / Σ_{α∈X} e_α` with `e_α = e^{Δ_t(α,θ_t)}`.
pub fn norm_delta(field: &dyn OnePointField) -> Result<f64> {
    let mut best = 0.0f64;
    for t in field.scan_sites() {
        let e = site_weights(field, &t, &Configuration::empty());
        let total: f64 = e.iter().sum();
        best = best.max((total - e[0]) / total);
    }
    Ok(best)
}

/// Precomputed ingredients of `f` and `ε` for one field.
#[derive(Clone, Debug)]
pub struct ErrorBounds {
    pub field: FieldBounds,
    pub norm_delta: f64,
    /// `f(r)` for `r = 0..=R+1`; zero beyond.
    f: Vec<f64>,
}

impl ErrorBounds {
    /// `f(r) = 4 C_1 e^{‖Δ_1‖} (exp{e^{σ_r} - 1} - 1)`, `σ_r` the shift tail
    /// at distance at least `r`.
    pub fn f(&self, r: u32) -> f64 {
        self.f.get(r as usize).copied().unwrap_or(0.0)
    }

    /// `ε(d) = ‖δ‖ min_{n r ≤ d} [2k^{n+1}/(1-k) + 2f(r)/(1-k)^2]` with
    /// `k = ‖𝒦‖`; `n = 0` stands for the plain bound `2k/(1-k)`.
    pub fn epsilon(&self, d: u32) -> f64 {
        let k = self.field.contraction_lhs;
        let mut best = 2.0 * k / (1.0 - k);
        let r_top = d.min(self.f.len() as u32);
        for r in 1..=r_top {
            let n = (d / r) as i32;
            let v = 2.0 * k.powi(n + 1) / (1.0 - k) + 2.0 * self.f(r) / ((1.0 - k) * (1.0 - k));
            best = best.min(v);
        }
        self.norm_delta * best
    }
}

/// Computes `‖δ‖` and the table of `f`; fails unless the contraction bound
/// holds.
pub fn error_bounds(field: &dyn OnePointField) -> Result<ErrorBounds> {
    let fb = field_bounds(field)?;
    if !fb.passes() {
        return Err(Error::NotCertified {
            lhs: fb.contraction_lhs,
        });
    }
    let range = field
        .range()
        .ok_or_else(|| Error::model("error bounds need a finite interaction range"))?;
    let scale = 4.0 * fb.c1_conservative() * fb.norm_delta1.exp();
    let f = (0..=range + 1)
        .map(|r| Ok(scale * tail_sigma(field, r)?.exp_m1().exp_m1()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ErrorBounds {
        field: fb,
        norm_delta: norm_delta(field)?,
        f,
    })
}

pub fn tail_f_bound(field: &dyn OnePointField, r: u32) -> Result<f64> {
    let fb = field_bounds(field)?;
    let sigma = tail_sigma(field, r)?;
    Ok(4.0 * fb.c1_conservative() * fb.norm_delta1.exp() * sigma.exp_m1().exp_m1())
}

pub fn epsilon_bound(field: &dyn OnePointField, d: u32) -> Result<f64> {
    Ok(error_bounds(field)?.epsilon(d))
}

/// Where the reference correlation function comes from.
#[derive(Clone, Debug)]
pub enum Reference {
    /// Exact enumeration on a window containing every studied window.
    Exact { window: Window },
    /// Window solve of the infinite-volume equation.
    Infinite { window: Window, k_max: usize },
}

/// How the finite-volume correlation functions are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiniteRoute {
    Solve,
    Exact,
}

#[derive(Clone, Debug)]
pub struct ProfileOptions {
    pub finite: FiniteRoute,
    pub solve: SolveOptions,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            finite: FiniteRoute::Solve,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileRow {
    pub window_len: usize,
    /// `min_x d(I, Λᶜ)` over the probes.
    pub d: u32,
    pub max_abs_deviation: f64,
    /// `ε(d)`, absent when the contraction bound fails.
    pub epsilon_bound: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct ConvergenceProfile {
    pub rows: Vec<ProfileRow>,
    pub gate_passed: bool,
    pub reference_note: String,
}

impl ConvergenceProfile {
    pub fn deviations(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.max_abs_deviation).collect()
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].max_abs_deviation <= w[0].max_abs_deviation)
    }

    /// Whether every row lies below its bound; false when no bound exists.
    pub fn within_bounds(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.epsilon_bound.is_some_and(|e| r.max_abs_deviation <= e))
    }
}

enum RefValues {
    Table(crate::exact::CorrelationTable),
    Function(SupportedFunction),
}

impl RefValues {
    fn get(&self, x: &Configuration) -> f64 {
        match self {
            RefValues::Table(t) => t.get(x),
            RefValues::Function(f) => f.get(x),
        }
    }
}

/// For each window, the largest deviation `|ρ_Λ(x) - ρ_ref(x)|` over the
/// probes, keyed by `d(I, Λᶜ)`.
pub fn convergence_profile(
    field: &dyn OnePointField,
    windows: &[Window],
    probes: &[Configuration],
    reference: &Reference,
    options: &ProfileOptions,
) -> Result<ConvergenceProfile> {
    if windows.len() < 2 {
        return Err(Error::domain(
            "a convergence profile needs at least two windows",
        ));
    }
    if probes.is_empty() {
        return Err(Error::domain("no probes given"));
    }
    for pair in windows.windows(2) {
        if !pair[0].is_subset_of(&pair[1]) || pair[0].len() >= pair[1].len() {
            return Err(Error::domain("windows must be strictly increasing"));
        }
    }
    for x in probes {
        if x.is_empty() || !x.is_supported_in(&windows[0]) {
            return Err(Error::domain(format!(
                "probe {} is not supported in the smallest window",
                x.describe(field.spins())
            )));
        }
    }
    let (ref_values, reference_note) = match reference {
        Reference::Exact { window } => {
            check_contains(window, windows.last().unwrap())?;
            (
                RefValues::Table(rho_exact(field, window)?),
                format!("exact enumeration on {} sites", window.len()),
            )
        }
        Reference::Infinite { window, k_max } => {
            check_contains(window, windows.last().unwrap())?;
            let opts = SolveOptions {
                k_max: Some(*k_max),
                ..options.solve.clone()
            };
            let (phi, _) = solve_infinite_volume(field, window, &opts)?;
            (
                RefValues::Function(phi),
                format!(
                    "infinite-volume window solve on {} sites, k_max {}",
                    window.len(),
                    k_max
                ),
            )
        }
    };
    let bounds = match error_bounds(field) {
        Ok(b) => Some(b),
        Err(Error::NotCertified { .. }) => None,
        Err(e) => return Err(e),
    };
    let mut rows = Vec::with_capacity(windows.len());
    for w in windows {
        let mut d = u32::MAX;
        for x in probes {
            d = d.min(w.set_distance_to_complement(&x.support())?);
        }
        let (deviation, iterations, residual) = match options.finite {
            FiniteRoute::Solve => {
                let (phi, report) = solve_finite_volume(field, w, &options.solve)?;
                (
                    max_deviation(probes, |x| phi.get(x), &ref_values),
                    report.iterations,
                    report.residual_norm,
                )
            }
            FiniteRoute::Exact => {
                let table = rho_exact(field, w)?;
                (max_deviation(probes, |x| table.get(x), &ref_values), 0, 0.0)
            }
        };
        rows.push(ProfileRow {
            window_len: w.len(),
            d,
            max_abs_deviation: deviation,
            epsilon_bound: bounds.as_ref().map(|b| b.epsilon(d)),
            iterations,
            residual,
        });
    }
    Ok(ConvergenceProfile {
        rows,
        gate_passed: bounds.is_some(),
        reference_note,
    })
}

fn check_contains(outer: &Window, inner: &Window) -> Result<()> {
    if inner.is_subset_of(outer) {
        Ok(())
    } else {
        Err(Error::domain(
            "the reference window must contain every studied window",
        ))
    }
}

fn max_deviation(
    probes: &[Configuration],
    value: impl Fn(&Configuration) -> f64,
    reference: &RefValues,
) -> f64 {
    probes
        .iter()
        .map(|x| (value(x) - reference.get(x)).abs())
        .fold(0.0, f64::max)
}
