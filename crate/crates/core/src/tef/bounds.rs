//! Scalar bounds of a one-point field: `‖Δ_1‖`, the decay constant `D`,
//! the tails `σ`, and the contraction constants `C_1`, `C_2`.

use crate::error::{Error, Result};
use crate::lattice::{ball, enumerate_configs, Configuration, Site, Spin, Window};

use super::OnePointField;

fn require_range(field: &(impl OnePointField + ?Sized)) -> Result<u32> {
    field.range().ok_or_else(|| {
        Error::model("field has unbounded boundary dependence and no decay certificate")
    })
}

/// `‖Δ_1‖` by exhaustive scan of every boundary on the dependence ball of each
/// scan site.
pub fn norm_delta1_scan(field: &(impl OnePointField + ?Sized), budget: u128) -> Result<f64> {
    let r = require_range(field)?;
    let spins = field.spins();
    let mut best = 0.0f64;
    for t in field.scan_sites() {
        let around: Vec<Site> = ball(&t, r)?.into_iter().filter(|s| *s != t).collect();
        let boundaries: Vec<Configuration> = if around.is_empty() {
            vec![Configuration::empty()]
        } else {
            enumerate_configs(&Window::new(around)?, spins, false, budget)?.collect()
        };
        for z in &boundaries {
            for x in spins.all() {
                for u in spins.all() {
                    best = best.max(field.eval(&t, z, x, u).abs());
                }
            }
        }
    }
    Ok(best)
}

/// `sup_{α, y} |Δ_s^{α_t}(y, θ_s) - Δ_s(y, θ_s)|`, the largest shift of the
/// single-site energy at `s` caused by a spin at `t`. `alphas` restricts α.
fn shift_at(
    field: &(impl OnePointField + ?Sized),
    t: &Site,
    s: &Site,
    alphas: impl Iterator<Item = Spin>,
) -> Result<f64> {
    let spins = field.spins();
    let empty = Configuration::empty();
    let mut best = 0.0f64;
    for a in alphas {
        let with_t = if a.is_vacuum() {
            empty.clone()
        } else {
            Configuration::singleton(t.clone(), a)?
        };
        for y in spins.all() {
            let d =
                field.eval(s, &with_t, y, Spin::VACUUM) - field.eval(s, &empty, y, Spin::VACUUM);
            best = best.max(d.abs());
        }
    }
    Ok(best)
}

/// `D = sup_t sup_x Σ_{s≠t} sup_y |Δ_s^x(y, θ_s) - Δ_s(y, θ_s)|`.
pub fn decay_constant(field: &(impl OnePointField + ?Sized)) -> Result<f64> {
    let r = require_range(field)?;
    let spins = field.spins();
    let mut best = 0.0f64;
    for t in field.scan_sites() {
        let around: Vec<Site> = ball(&t, r)?.into_iter().filter(|s| *s != t).collect();
        for x in spins.non_vacuum() {
            let mut sum = 0.0;
            for s in &around {
                sum += shift_at(field, &t, s, std::iter::once(x))?;
            }
            best = best.max(sum);
        }
    }
    Ok(best)
}

/// `σ(Λ)` relative to the reference site `t`: the summed shifts from sites
/// outside `Λ`. Vanishes once `Λ` covers the interaction ball of `t`.
pub fn sigma(field: &(impl OnePointField + ?Sized), window: &Window, t: &Site) -> Result<f64> {
    let r = require_range(field)?;
    let mut sum = 0.0;
    for s in ball(t, r)? {
        if s == *t || window.contains(&s) {
            continue;
        }
        sum += shift_at(field, t, &s, field.spins().all())?;
    }
    Ok(sum)
}

/// Tail of the shift series at distance at least `r`, maximised over the scan
/// sites: `sup_t Σ_{s : |s-t| >= r} sup_{α,y} |Δ_s^α(y,θ_s) - Δ_s(y,θ_s)|`.
/// `r = 0` (and `r = 1`) sum over every `s ≠ t`.
pub fn tail_sigma(field: &(impl OnePointField + ?Sized), r: u32) -> Result<f64> {
    let range = require_range(field)?;
    if r > range {
        return Ok(0.0);
    }
    let mut best = 0.0f64;
    for t in field.scan_sites() {
        let mut sum = 0.0;
        for s in ball(&t, range)? {
            let d = crate::lattice::chebyshev_distance(&s, &t)?;
            if d == 0 || d < r {
                continue;
            }
            sum += shift_at(field, &t, &s, field.spins().all())?;
        }
        best = best.max(sum);
    }
    Ok(best)
}

/// Constants controlling the correlation operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldBounds {
    pub norm_delta1: f64,
    pub d: f64,
    pub n_x: usize,
    /// `C_1 = e^a N_X / (1 + e^a N_X)` as displayed with the constants.
    pub c1: f64,
    /// `C_1' = e^a N_X / (1 + e^{-a} N_X)`, the per-configuration bound on `N_X γ`.
    pub c1_prime: f64,
    pub c2: f64,
    /// `C_1 (1 + C_2)` with the displayed `C_1`.
    pub displayed_lhs: f64,
    /// `max(C_1, C_1') (1 + C_2)`: the certified bound on `‖K‖` used by the gate.
    pub contraction_lhs: f64,
}

impl FieldBounds {
    pub fn from_constants(norm_delta1: f64, d: f64, n_x: usize) -> Self {
        let n = n_x as f64;
        let ea = norm_delta1.exp();
        let c1 = ea * n / (1.0 + ea * n);
        let c1_prime = ea * n / (1.0 + n / ea);
        let c2 = 2.0 * (1.0 + 2.0 * ea * n) * d.exp_m1().exp_m1();
        FieldBounds {
            norm_delta1,
            d,
            n_x,
            c1,
            c1_prime,
            c2,
            displayed_lhs: c1 * (1.0 + c2),
            contraction_lhs: c1.max(c1_prime) * (1.0 + c2),
        }
    }

    /// The conservative `C_1` actually used downstream.
    pub fn c1_conservative(&self) -> f64 {
        self.c1.max(self.c1_prime)
    }

    /// Whether `C_1 (1 + C_2) < 1` holds with the displayed constant.
    pub fn passes_displayed(&self) -> bool {
        self.displayed_lhs < 1.0
    }

    /// Solver gate: the conservative contraction bound is below one.
    pub fn passes(&self) -> bool {
        self.contraction_lhs < 1.0
    }
}

pub fn field_bounds(field: &(impl OnePointField + ?Sized)) -> Result<FieldBounds> {
    let norm = field.norm_delta1()?;
    let d = decay_constant(field)?;
    Ok(FieldBounds::from_constants(norm, d, field.spins().n_x()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Remark1Check {
    pub lhs: f64,
    pub pass: bool,
}

/// Sufficient condition for vacuum pair potentials, using `‖Δ_1‖ <= 2‖Φ‖`
/// and `D <= ‖Φ‖`:
/// `e^{2p} N/(1 + e^{-2p} N) · (1 + 2(1 + 2e^{2p} N)(exp{e^p - 1} - 1)) < 1`.
pub fn remark1_sufficiency(phi_norm: f64, n_x: usize) -> Remark1Check {
    let n = n_x as f64;
    let e2 = (2.0 * phi_norm).exp();
    let lhs =
        e2 * n / (1.0 + n / e2) * (1.0 + 2.0 * (1.0 + 2.0 * e2 * n) * phi_norm.exp_m1().exp_m1());
    Remark1Check {
        lhs,
        pass: lhs < 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SpinSpace;
    use crate::tef::PairField;

    #[test]
    fn zero_field_constants() {
        let f = PairField::zero(SpinSpace::numeric(2).unwrap(), 1).unwrap();
        let b = field_bounds(&f).unwrap();
        assert_eq!(b.norm_delta1, 0.0);
        assert_eq!(b.d, 0.0);
        assert_eq!(b.c1, 0.5);
        assert_eq!(b.c1_prime, 0.5);
        assert_eq!(b.c2, 0.0);
        assert_eq!(b.contraction_lhs, 0.5);
        assert!(b.passes());
        let w = Window::interval(0, 0).unwrap();
        assert_eq!(sigma(&f, &w, &Site::origin(1)).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_constants() {
        // C1' = e^0.1/(1+e^-0.1), C2 = 2(1+2e^0.1)(exp(e^0.05-1)-1)
        let b = FieldBounds::from_constants(0.1, 0.05, 1);
        assert!(
            (b.c1_prime - 0.580_191_730_6).abs() < 1e-9,
            "{}",
            b.c1_prime
        );
        assert!((b.c2 - 0.337_780_693_5).abs() < 1e-9, "{}", b.c2);
        assert!(
            (b.contraction_lhs - 0.776_169_295_7).abs() < 1e-9,
            "{}",
            b.contraction_lhs
        );
        assert!(b.passes());
        assert!(b.c1 < b.c1_prime);

        let strong = FieldBounds::from_constants(2.0, 2.0, 2);
        assert!(strong.contraction_lhs > 1.0);
        assert!(!strong.passes());
        assert!(strong.c1 < 1.0);
    }

    #[test]
    fn pair_sufficiency_examples() {
        let zero = remark1_sufficiency(0.0, 1);
        assert_eq!(zero.lhs, 0.5);
        assert!(zero.pass);
        let weak = remark1_sufficiency(0.05, 1);
        assert!((weak.lhs - 0.776_169_295_7).abs() < 1e-9, "{}", weak.lhs);
        assert!(weak.pass);
        assert!(!remark1_sufficiency(1.0, 1).pass);
    }

    #[test]
    fn chain_decay_constant_and_sigma() {
        let j = 0.2;
        let f = PairField::nearest_neighbour(SpinSpace::numeric(2).unwrap(), 1, j).unwrap();
        assert!((decay_constant(&f).unwrap() - 2.0 * j).abs() < 1e-15);
        let t = Site::origin(1);
        let covering = Window::interval(-1, 1).unwrap();
        assert_eq!(sigma(&f, &covering, &t).unwrap(), 0.0);
        let half = Window::interval(-1, 0).unwrap();
        assert!((sigma(&f, &half, &t).unwrap() - j).abs() < 1e-15);
        assert!((tail_sigma(&f, 0).unwrap() - 2.0 * j).abs() < 1e-15);
        assert_eq!(tail_sigma(&f, 2).unwrap(), 0.0);
    }

    #[test]
    fn unbounded_fields_are_rejected() {
        struct Unbounded(SpinSpace);
        impl OnePointField for Unbounded {
            fn spins(&self) -> &SpinSpace {
                &self.0
            }
            fn dimension(&self) -> usize {
                1
            }
            fn eval(&self, _: &Site, _: &dyn crate::lattice::Boundary, _: Spin, _: Spin) -> f64 {
                0.0
            }
            fn range(&self) -> Option<u32> {
                None
            }
            fn scan_sites(&self) -> Vec<Site> {
                vec![Site::origin(1)]
            }
        }
        let f = Unbounded(SpinSpace::numeric(2).unwrap());
        assert!(matches!(f.norm_delta1(), Err(Error::ModelDefinition(_))));
        assert!(matches!(decay_constant(&f), Err(Error::ModelDefinition(_))));
    }
}
