//! The correlation operator `𝒦 = γ(S + T)`, the free term `δ`, and solvers
//! for the correlation equations `ρ = δ + 𝒦ρ` (on a window) and
//! `ρ_Λ = ψ_Λ δ + ψ_Λ 𝒦 ρ_Λ`.

pub mod convergence;
pub mod domain;
pub mod operator;
pub mod solve;

use crate::error::{Error, Result};
use crate::lattice::{Configuration, Site, Spin};
use crate::tef::OnePointField;

pub use convergence::{
    convergence_profile, epsilon_bound, error_bounds, norm_delta, tail_f_bound, ConvergenceProfile,
    ErrorBounds, FiniteRoute, ProfileOptions, ProfileRow, Reference,
};
pub use domain::{Domain, SupportedFunction};
pub use operator::{apply_g, apply_k, CorrelationOperator};
pub use solve::{
    operator_norm_certificate, solve_finite_volume, solve_finite_volume_direct,
    solve_infinite_volume, Init, NormCertificate, SolveOptions, SolveReport,
};

/// How much of the `J`-sums of `G` is evaluated.
///
/// The default is exact for finite-range fields: `J` runs over every subset
/// of the interaction ball inside the window. Restricting the radius or
/// `|J|`, or dropping coefficients below `term_floor`, turns the operator into
/// an approximation whose discarded mass is reported as a tail bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelTruncation {
    /// Kernel sites farther than this from `t` are dropped.
    pub interaction_radius: Option<u32>,
    pub j_max: Option<usize>,
    pub term_floor: f64,
}

impl KernelTruncation {
    pub fn exact() -> Self {
        KernelTruncation {
            interaction_radius: None,
            j_max: None,
            term_floor: 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.interaction_radius.is_none() && self.j_max.is_none() && self.term_floor == 0.0
    }
}

impl Default for KernelTruncation {
    fn default() -> Self {
        KernelTruncation::exact()
    }
}

/// `e^{Δ_t^{x'}(α, θ_t)}` for every `α ∈ X` (index 0 is the vacuum, weight 1).
pub(crate) fn site_weights(field: &dyn OnePointField, t: &Site, rest: &Configuration) -> Vec<f64> {
    field
        .spins()
        .all()
        .map(|a| field.eval(t, rest, a, Spin::VACUUM).exp())
        .collect()
}

/// `γ(x) = e^{Δ_t^{x'}(x_t,θ_t)} / Σ_{α∈X} e^{Δ_t^{x'}(α,θ_t)}` with `t` the
/// smallest site of the support.
pub fn gamma(field: &dyn OnePointField, x: &Configuration) -> Result<f64> {
    let (t, xt, rest) = x.split_min()?;
    let e = site_weights(field, &t, &rest);
    Ok(e[xt.index()] / e.iter().sum::<f64>())
}

/// `δ(x) = γ(x)` on singletons, zero on larger supports.
pub fn delta_fn(field: &dyn OnePointField, x: &Configuration) -> Result<f64> {
    match x.len() {
        0 => Err(Error::domain("δ is defined on nonempty configurations")),
        1 => gamma(field, x),
        _ => Ok(0.0),
    }
}

/// `e^{Δ_s^{β_t}(y,θ_s) - Δ_s(y,θ_s)} - 1`, the kernel factor of site `s`.
pub(crate) fn kernel_factor(
    field: &dyn OnePointField,
    t: &Site,
    beta: Spin,
    s: &Site,
    y: Spin,
) -> f64 {
    if beta.is_vacuum() || y.is_vacuum() {
        return 0.0;
    }
    let at_t = Configuration::singleton(t.clone(), beta).expect("non-vacuum spin");
    (field.eval(s, &at_t, y, Spin::VACUUM)
        - field.eval(s, &Configuration::empty(), y, Spin::VACUUM))
    .exp_m1()
}

/// `K_{t∪J}(x_t y) = Π_{s∈J} (e^{Δ_s^{x_t}(y_s,θ_s) - Δ_s(y_s,θ_s)} - 1)`.
pub fn kernel(field: &dyn OnePointField, t: &Site, xt: Spin, y: &Configuration) -> Result<f64> {
    if y.contains_site(t) {
        return Err(Error::domain(format!(
            "kernel configuration contains the base site {t}"
        )));
    }
    if xt.is_vacuum() {
        return Ok(0.0);
    }
    Ok(y.entries()
        .iter()
        .map(|(s, v)| kernel_factor(field, t, xt, s, *v))
        .product())
}
