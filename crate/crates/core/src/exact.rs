//! Exact finite-volume Gibbs distributions and correlation functions by full
//! enumeration of `X^Λ`.
//!
//! Configurations on a window are encoded as base-`|X|` integers: digit `p`
//! is the spin code at the `p`-th site of the (sorted) window, so digit 0 is
//! the vacuum. A correlation table uses the same encoding with digit 0
//! meaning "site not in the support".

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{
    Boundary, Configuration, IndexedWindow, Site, Spin, SpinSpace, Window,
    DEFAULT_ENUMERATION_BUDGET,
};
use crate::tef::checks::{check_environment_condition, SamplePlan};
use crate::tef::OnePointField;

/// Energies above this magnitude would overflow `exp` in double precision.
pub const MAX_ENERGY: f64 = 700.0;

/// Tolerance of the correlation-equation check.
pub const EQUATION_TOLERANCE: f64 = 1e-9;

/// Windows whose direct two-path self-check costs more than this many terms
/// skip it.
const SELF_CHECK_LIMIT: u128 = 1 << 22;

/// Pairwise (tree) summation, split at fixed points so the result does not
/// depend on the number of threads.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    const PAR: usize = 1 << 14;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    if values.len() >= PAR {
        let (x, y) = rayon::join(|| pairwise_sum(a), || pairwise_sum(b));
        x + y
    } else {
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Window plus the base-`q` code arithmetic shared by all tables.
#[derive(Clone, Debug)]
struct Coding {
    iw: IndexedWindow,
    q: usize,
    count: usize,
}

impl Coding {
    fn new(window: &Window, spins: &SpinSpace, budget: u128) -> Result<Self> {
        let q = spins.size();
        let required = (q as u128)
            .checked_pow(window.len() as u32)
            .ok_or(Error::Budget {
                required: u128::MAX,
                budget,
            })?;
        if required > budget {
            return Err(Error::Budget { required, budget });
        }
        Ok(Coding {
            iw: IndexedWindow::new(window.clone()),
            q,
            count: required as usize,
        })
    }

    fn n(&self) -> usize {
        self.iw.len()
    }

    fn digits(&self, mut code: usize, out: &mut [u8]) {
        for d in out.iter_mut() {
            *d = (code % self.q) as u8;
            code /= self.q;
        }
    }

    fn weight(&self, p: usize) -> usize {
        self.q.pow(p as u32)
    }

    fn encode(&self, x: &Configuration) -> Option<usize> {
        let mut code = 0;
        for (s, v) in x.entries() {
            let p = self.iw.position(s)?;
            code += v.index() * self.weight(p);
        }
        Some(code)
    }

    fn decode(&self, code: usize) -> Configuration {
        let mut digits = vec![0u8; self.n()];
        self.digits(code, &mut digits);
        Configuration::from_full(
            digits
                .iter()
                .enumerate()
                .map(|(p, d)| (self.iw.site(p).clone(), Spin(*d))),
        )
        .expect("window sites are distinct")
    }
}

/// Boundary seen at step `step` of the sorted telescoping sum: `x` on later
/// window sites, `r` on earlier ones, vacuum off the window.
struct Telescope<'a> {
    iw: &'a IndexedWindow,
    x: &'a [u8],
    r: &'a [u8],
    step: usize,
}

impl Boundary for Telescope<'_> {
    #[inline]
    fn spin_at(&self, s: &Site) -> Spin {
        match self.iw.position(s) {
            Some(p) if p > self.step => Spin(self.x[p]),
            Some(p) if p < self.step => Spin(self.r[p]),
            _ => Spin::VACUUM,
        }
    }
}

/// `Δ_Λ(x, r)` with vacuum outside the window, by telescoping in site order.
fn volume_energy(field: &dyn OnePointField, iw: &IndexedWindow, x: &[u8], r: &[u8]) -> f64 {
    let mut total = 0.0;
    for p in 0..x.len() {
        let view = Telescope { iw, x, r, step: p };
        total += field.eval(iw.site(p), &view, Spin(x[p]), Spin(r[p]));
    }
    total
}

/// `exp Δ_Λ(x, reference)` for every `x ∈ X^Λ`, in code order.
fn boltzmann_weights(
    field: &dyn OnePointField,
    coding: &Coding,
    reference: &Configuration,
) -> Result<Vec<f64>> {
    let n = coding.n();
    let rcode = coding
        .encode(reference)
        .ok_or_else(|| Error::domain("reference configuration is not supported in the window"))?;
    let mut r = vec![0u8; n];
    coding.digits(rcode, &mut r);
    let energies: Vec<f64> = (0..coding.count)
        .into_par_iter()
        .map_init(
            || vec![0u8; n],
            |digits, code| {
                coding.digits(code, digits);
                volume_energy(field, &coding.iw, digits, &r)
            },
        )
        .collect();
    if let Some((code, e)) = energies
        .iter()
        .enumerate()
        .find(|(_, e)| e.is_nan() || e.abs() > MAX_ENERGY)
    {
        return Err(Error::domain(format!(
            "volume energy {e} of configuration [{}] exceeds ±{MAX_ENERGY}; exact enumeration would overflow",
            coding.decode(code).describe(field.spins())
        )));
    }
    Ok(energies.into_par_iter().map(f64::exp).collect())
}

fn check_field(field: &dyn OnePointField, window: &Window) -> Result<()> {
    if window.dim() != field.dimension() {
        return Err(Error::model(format!(
            "window has dimension {} but the field has dimension {}",
            window.dim(),
            field.dimension()
        )));
    }
    Ok(())
}

/// `Z_Λ = Σ_{x ∈ X^Λ} exp Δ_Λ(x, θ_Λ)` with vacuum boundary.
pub fn partition_function(field: &dyn OnePointField, window: &Window) -> Result<f64> {
    check_field(field, window)?;
    let coding = Coding::new(window, field.spins(), DEFAULT_ENUMERATION_BUDGET)?;
    Ok(pairwise_sum(&boltzmann_weights(
        field,
        &coding,
        &Configuration::empty(),
    )?))
}

/// Finite-volume Gibbs distribution `P_Λ` on `X^Λ`.
#[derive(Clone, Debug)]
pub struct GibbsTable {
    coding: Coding,
    spins: SpinSpace,
    probabilities: Vec<f64>,
}

impl GibbsTable {
    pub fn window(&self) -> &Window {
        self.coding.iw.window()
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `P_Λ(x)` for the full configuration whose non-vacuum part is `x`;
    /// zero when `x` leaves the window.
    pub fn probability(&self, x: &Configuration) -> f64 {
        self.coding
            .encode(x)
            .map(|c| self.probabilities[c])
            .unwrap_or(0.0)
    }

    /// Probabilities in code order.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn iter(&self) -> impl Iterator<Item = (Configuration, f64)> + '_ {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(c, p)| (self.coding.decode(c), *p))
    }

    pub fn spins(&self) -> &SpinSpace {
        &self.spins
    }
}

/// `P_Λ(x) = e^{Δ_Λ(x,θ_Λ)} / Σ_z e^{Δ_Λ(z,θ_Λ)}`.
pub fn gibbs_distribution(field: &dyn OnePointField, window: &Window) -> Result<GibbsTable> {
    gibbs_distribution_relative_to(field, window, &Configuration::empty())
}

/// `P_Λ(x) = e^{Δ_Λ(x,u)} / Σ_z e^{Δ_Λ(z,u)}` for a reference `u` on `Λ`.
/// The result does not depend on `u` for a consistent field.
pub fn gibbs_distribution_relative_to(
    field: &dyn OnePointField,
    window: &Window,
    reference: &Configuration,
) -> Result<GibbsTable> {
    check_field(field, window)?;
    let coding = Coding::new(window, field.spins(), DEFAULT_ENUMERATION_BUDGET)?;
    let mut w = boltzmann_weights(field, &coding, reference)?;
    let z = pairwise_sum(&w);
    w.par_iter_mut().for_each(|v| *v /= z);
    Ok(GibbsTable {
        coding,
        spins: field.spins().clone(),
        probabilities: w,
    })
}

/// Exact correlation function `ρ_Λ` on `{𝜱} ∪ L_*^Λ`.
#[derive(Clone, Debug)]
pub struct CorrelationTable {
    coding: Coding,
    spins: SpinSpace,
    values: Vec<f64>,
    partition_function: f64,
    self_check: Option<f64>,
}

impl CorrelationTable {
    pub fn window(&self) -> &Window {
        self.coding.iw.window()
    }

    pub fn spins(&self) -> &SpinSpace {
        &self.spins
    }

    /// `ρ_Λ(x)`: one for the empty configuration, zero when the support of `x`
    /// leaves `Λ`.
    pub fn get(&self, x: &Configuration) -> f64 {
        self.coding.encode(x).map(|c| self.values[c]).unwrap_or(0.0)
    }

    /// Number of stored entries, `(1 + N_X)^|Λ|` including `𝜱`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All entries ordered by support size, then by configuration.
    pub fn entries(&self) -> Vec<(Configuration, f64)> {
        let mut out: Vec<(Configuration, f64)> = self
            .values
            .iter()
            .enumerate()
            .map(|(c, v)| (self.coding.decode(c), *v))
            .collect();
        out.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
        out
    }

    pub fn partition_function(&self) -> f64 {
        self.partition_function
    }

    /// Largest difference between the partition-function route and the direct
    /// marginal sums of `P_Λ`, when the window was small enough to run both.
    pub fn self_check_deviation(&self) -> Option<f64> {
        self.self_check
    }

    fn value_at(&self, code: usize) -> f64 {
        self.values[code]
    }
}

/// Sums the digit-`p` slices: afterwards digit 0 at `p` means "any spin".
fn marginalise(values: &mut [f64], q: usize, n: usize) {
    for p in 0..n {
        let stride = q.pow(p as u32);
        values.par_chunks_mut(stride * q).for_each(|block| {
            let (head, tail) = block.split_at_mut(stride);
            for (i, h) in head.iter_mut().enumerate() {
                let mut acc = *h;
                for a in 1..q {
                    acc += tail[(a - 1) * stride + i];
                }
                *h = acc;
            }
        });
    }
}

/// `ρ_Λ(x) = Σ_{y} P_Λ(xy)`, summing the Gibbs table over all extensions of
/// `x` directly.
pub fn rho_from_gibbs(gibbs: &GibbsTable) -> CorrelationTable {
    let coding = gibbs.coding.clone();
    let (q, n) = (coding.q, coding.n());
    let values: Vec<f64> = (0..coding.count)
        .into_par_iter()
        .map(|code| {
            let mut digits = vec![0u8; n];
            coding.digits(code, &mut digits);
            let free: Vec<usize> = (0..n).filter(|p| digits[*p] == 0).collect();
            let mut terms = Vec::with_capacity(q.pow(free.len() as u32));
            for k in 0..q.pow(free.len() as u32) {
                let mut c = code;
                let mut rest = k;
                for p in &free {
                    c += (rest % q) * coding.weight(*p);
                    rest /= q;
                }
                terms.push(gibbs.probabilities[c]);
            }
            pairwise_sum(&terms)
        })
        .collect();
    CorrelationTable {
        coding,
        spins: gibbs.spins.clone(),
        values,
        partition_function: f64::NAN,
        self_check: None,
    }
}

/// `ρ_Λ(x) = Z_Λ^{-1} Σ_{y ∈ X^{Λ∖I}} exp Δ_Λ(xy, θ_Λ)`.
///
/// When the window is small the table is recomputed from the marginals of
/// [`gibbs_distribution`] and the largest discrepancy is recorded.
pub fn rho_exact(field: &dyn OnePointField, window: &Window) -> Result<CorrelationTable> {
    check_field(field, window)?;
    let coding = Coding::new(window, field.spins(), DEFAULT_ENUMERATION_BUDGET)?;
    let mut values = boltzmann_weights(field, &coding, &Configuration::empty())?;
    let z = pairwise_sum(&values);
    let probabilities: Vec<f64> = values.iter().map(|w| w / z).collect();
    marginalise(&mut values, coding.q, coding.n());
    values.par_iter_mut().for_each(|v| *v /= z);
    values[0] = 1.0;

    let direct_terms = (2 * coding.q as u128 - 1).checked_pow(coding.n() as u32);
    let self_check = match direct_terms {
        Some(t) if t <= SELF_CHECK_LIMIT => {
            let gibbs = GibbsTable {
                coding: coding.clone(),
                spins: field.spins().clone(),
                probabilities,
            };
            let direct = rho_from_gibbs(&gibbs);
            Some(
                values
                    .iter()
                    .zip(&direct.values)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            )
        }
        _ => None,
    };
    Ok(CorrelationTable {
        coding,
        spins: field.spins().clone(),
        values,
        partition_function: z,
        self_check,
    })
}

/// Residual of the finite-volume correlation equation over every `x ∈ L_*^Λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquationReport {
    pub max_residual: f64,
    /// Configuration attaining the maximum.
    pub witness: Option<Configuration>,
    pub checked: usize,
    pub tolerance: f64,
}

impl EquationReport {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

/// Per-site kernel factors `e^{Δ_s^{β}(y,θ) - Δ_s(y,θ)} - 1` for a spin `β` at `t`.
fn kernel_factors(
    field: &dyn OnePointField,
    t: &Site,
    beta: Spin,
    sites: &[Site],
) -> Result<Vec<Vec<f64>>> {
    let spins = field.spins();
    let at_t = Configuration::singleton(t.clone(), beta)?;
    let empty = Configuration::empty();
    Ok(sites
        .iter()
        .map(|s| {
            spins
                .all()
                .map(|y| {
                    if y.is_vacuum() {
                        0.0
                    } else {
                        (field.eval(s, &at_t, y, Spin::VACUUM)
                            - field.eval(s, &empty, y, Spin::VACUUM))
                        .exp_m1()
                    }
                })
                .collect()
        })
        .collect())
}

/// Window-local data for evaluating `G_Λ` at configurations with a fixed `u`.
struct GContext<'a> {
    table: &'a CorrelationTable,
    /// positions of `Λ ∖ I` and the kernel factor rows for them
    free: Vec<usize>,
    t_weight: usize,
}

impl GContext<'_> {
    /// `Σ_{J≠∅} Σ_{y ∈ X_*^J} Π_s k_s(y_s) (ρ(uy) - Σ_α ρ(αuy))` by depth-first
    /// search over the free positions, skipping zero products.
    fn sum(&self, u_code: usize, factors: &[Vec<f64>]) -> f64 {
        let q = self.table.coding.q;
        let mut total = 0.0;
        let mut stack: Vec<(usize, usize, f64, bool)> = vec![(0, u_code, 1.0, false)];
        while let Some((k, code, prod, nonempty)) = stack.pop() {
            if k == self.free.len() {
                if nonempty {
                    let mut inner = self.table.value_at(code);
                    for a in 1..q {
                        inner -= self.table.value_at(code + a * self.t_weight);
                    }
                    total += prod * inner;
                }
                continue;
            }
            let w = self.table.coding.weight(self.free[k]);
            for a in (1..q).rev() {
                let f = factors[k][a];
                if f != 0.0 {
                    stack.push((k + 1, code + a * w, prod * f, true));
                }
            }
            stack.push((k + 1, code, prod, nonempty));
        }
        total
    }
}

/// `G_Λ(x)` for `x ∈ L_*^Λ`, evaluated from the table (the `G_Λ` of the
/// correlation equation, with `t` the smallest site of the support).
pub fn g_lambda(
    field: &dyn OnePointField,
    table: &CorrelationTable,
    x: &Configuration,
) -> Result<f64> {
    let (t, xt, u) = x.split_min()?;
    let coding = &table.coding;
    let u_code = coding
        .encode(&u)
        .ok_or_else(|| Error::domain("configuration is not supported in the window"))?;
    let t_pos = coding
        .iw
        .position(&t)
        .ok_or_else(|| Error::domain("configuration is not supported in the window"))?;
    let free: Vec<usize> = (0..coding.n())
        .filter(|p| *p != t_pos && !u.contains_site(coding.iw.site(*p)))
        .collect();
    let sites: Vec<Site> = free.iter().map(|p| coding.iw.site(*p).clone()).collect();
    let ctx = GContext {
        table,
        free,
        t_weight: coding.weight(t_pos),
    };
    Ok(ctx.sum(u_code, &kernel_factors(field, &t, xt, &sites)?))
}

/// Checks `ρ_Λ(xu) = γ (ρ_Λ(u) + Σ_{α∈X} e^{Δ_t^u(α,θ)} (G_Λ(xu) - G_Λ(αu)))`
/// with `γ = e^{Δ_t^u(x,θ)} / Σ_{α∈X} e^{Δ_t^u(α,θ)}` for every nonempty
/// `xu ∈ L_*^Λ`, `t` the smallest site of the support.
///
/// The environment condition is checked first; the equation is only claimed
/// for fields satisfying it.
pub fn verify_correlation_equation(
    field: &dyn OnePointField,
    window: &Window,
    table: &CorrelationTable,
) -> Result<EquationReport> {
    check_field(field, window)?;
    if table.window() != window {
        return Err(Error::domain(
            "correlation table belongs to a different window",
        ));
    }
    let plan = if window.len() <= crate::tef::checks::EXHAUSTIVE_MAX_SITES && window.len() >= 2 {
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

    let coding = &table.coding;
    let (q, n) = (coding.q, coding.n());
    // group by (t, u): the codes with lowest nonzero digit at t_pos
    let groups: Vec<(usize, usize)> = (1..table.len())
        .filter_map(|code| {
            let t_pos = (0..n).find(|p| !(code / coding.weight(*p)).is_multiple_of(q))?;
            let low = (code / coding.weight(t_pos)) % q;
            (low == 1).then_some((t_pos, code - coding.weight(t_pos)))
        })
        .collect();

    let per_group = |&(t_pos, u_code): &(usize, usize)| -> Result<Vec<(f64, usize)>> {
        let t = coding.iw.site(t_pos).clone();
        let u = coding.decode(u_code);
        let free: Vec<usize> = (0..n)
            .filter(|p| *p != t_pos && (u_code / coding.weight(*p)).is_multiple_of(q))
            .collect();
        let sites: Vec<Site> = free.iter().map(|p| coding.iw.site(*p).clone()).collect();
        let ctx = GContext {
            table,
            free,
            t_weight: coding.weight(t_pos),
        };
        let spins = field.spins();
        let e: Vec<f64> = spins
            .all()
            .map(|a| field.eval(&t, &u, a, Spin::VACUUM).exp())
            .collect();
        let denom: f64 = e.iter().sum();
        let mut g = vec![0.0; q];
        for beta in spins.non_vacuum() {
            g[beta.index()] = ctx.sum(u_code, &kernel_factors(field, &t, beta, &sites)?);
        }
        let rho_u = table.value_at(u_code);
        Ok(spins
            .non_vacuum()
            .map(|x| {
                let xi = x.index();
                let mut bracket = rho_u;
                for a in 0..q {
                    bracket += e[a] * (g[xi] - g[a]);
                }
                let rhs = e[xi] / denom * bracket;
                let code = u_code + xi * ctx.t_weight;
                ((table.value_at(code) - rhs).abs(), code)
            })
            .collect())
    };

    let results: Vec<Vec<(f64, usize)>> =
        groups.par_iter().map(per_group).collect::<Result<_>>()?;
    let mut worst = (0.0f64, None);
    let mut checked = 0;
    for (r, code) in results.into_iter().flatten() {
        checked += 1;
        let r = if r.is_nan() { f64::INFINITY } else { r };
        if r > worst.0 {
            worst = (r, Some(code));
        }
    }
    Ok(EquationReport {
        max_residual: worst.0,
        witness: worst.1.map(|c| coding.decode(c)),
        checked,
        tolerance: EQUATION_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tef::test_fields::ThreeBody;
    use crate::tef::{delta_volume, PairField};

    fn s1(c: i32) -> Site {
        Site::new(&[c]).unwrap()
    }

    fn two_site_ln2() -> (PairField, Window) {
        let f = PairField::nearest_neighbour(SpinSpace::numeric(2).unwrap(), 1, 2f64.ln()).unwrap();
        (f, Window::interval(0, 1).unwrap())
    }

    #[test]
    fn zero_field_partition_function() {
        let f = PairField::zero(SpinSpace::numeric(2).unwrap(), 1).unwrap();
        assert_eq!(
            partition_function(&f, &Window::interval(0, 2).unwrap()).unwrap(),
            8.0
        );
        let g = PairField::zero(SpinSpace::numeric(3).unwrap(), 2).unwrap();
        let w = Window::box_between(&Site::new(&[0, 0]).unwrap(), &Site::new(&[1, 1]).unwrap())
            .unwrap();
        assert_eq!(partition_function(&g, &w).unwrap(), 81.0);
    }

    #[test]
    fn two_site_hand_values() {
        let (f, w) = two_site_ln2();
        let z = partition_function(&f, &w).unwrap();
        assert!((z - 3.5).abs() < 1e-12);
        let pair = Configuration::from_entries([(s1(0), Spin(1)), (s1(1), Spin(1))]).unwrap();
        let p = gibbs_distribution(&f, &w).unwrap();
        assert!((p.probability(&pair) - 1.0 / 7.0).abs() < 1e-12);
        let rho = rho_exact(&f, &w).unwrap();
        assert!(
            (rho.get(&Configuration::singleton(s1(0), Spin(1)).unwrap()) - 3.0 / 7.0).abs() < 1e-12
        );
        assert!((rho.get(&pair) - 1.0 / 7.0).abs() < 1e-12);
        assert_eq!(rho.get(&Configuration::empty()), 1.0);
        assert_eq!(
            rho.get(&Configuration::singleton(s1(5), Spin(1)).unwrap()),
            0.0
        );
        assert!(rho.self_check_deviation().unwrap() < 1e-12);
        let report = verify_correlation_equation(&f, &w, &rho).unwrap();
        assert!(report.max_residual < 1e-12, "{report:?}");
        assert_eq!(report.checked, 3);
    }

    #[test]
    fn zero_field_uniform_marginals() {
        let f = PairField::zero(SpinSpace::numeric(3).unwrap(), 1).unwrap();
        let w = Window::interval(0, 3).unwrap();
        let rho = rho_exact(&f, &w).unwrap();
        for (x, v) in rho.entries() {
            assert_eq!(v, 3f64.powi(-(x.len() as i32)), "{x:?}");
        }
        let p = gibbs_distribution(&f, &w).unwrap();
        assert!(p
            .probabilities()
            .iter()
            .all(|v| (*v - 1.0 / 81.0).abs() < 1e-15));
        assert_eq!(
            verify_correlation_equation(&f, &w, &rho)
                .unwrap()
                .max_residual,
            0.0
        );
    }

    #[test]
    fn fast_energies_match_telescoping() {
        let mut f = PairField::nearest_neighbour(SpinSpace::numeric(3).unwrap(), 1, 0.3).unwrap();
        f.set_one_body(Spin(2), 0.15);
        let w = Window::interval(-1, 2).unwrap();
        let coding = Coding::new(&w, f.spins(), 1 << 20).unwrap();
        let weights = boltzmann_weights(&f, &coding, &Configuration::empty()).unwrap();
        let reversed: Vec<Site> = w.sites().iter().rev().cloned().collect();
        for (code, wt) in weights.iter().enumerate() {
            let x = coding.decode(code);
            let e = delta_volume(
                &f,
                &w,
                &Configuration::empty(),
                &x,
                &Configuration::empty(),
                &reversed,
            )
            .unwrap();
            assert!((wt.ln() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn gibbs_table_ignores_the_reference() {
        let f = PairField::nearest_neighbour(SpinSpace::numeric(2).unwrap(), 2, -0.25).unwrap();
        let w = Window::box_between(&Site::new(&[0, 0]).unwrap(), &Site::new(&[1, 2]).unwrap())
            .unwrap();
        let a = gibbs_distribution(&f, &w).unwrap();
        let u = Configuration::from_entries([
            (Site::new(&[0, 1]).unwrap(), Spin(1)),
            (Site::new(&[1, 2]).unwrap(), Spin(1)),
        ])
        .unwrap();
        let b = gibbs_distribution_relative_to(&f, &w, &u).unwrap();
        let diff = a
            .probabilities()
            .iter()
            .zip(b.probabilities())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
        assert!((pairwise_sum(a.probabilities()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chain_of_eight_satisfies_the_equation() {
        let f = PairField::nearest_neighbour(SpinSpace::numeric(2).unwrap(), 1, 0.2).unwrap();
        let w = Window::interval(0, 7).unwrap();
        let rho = rho_exact(&f, &w).unwrap();
        assert!(rho.self_check_deviation().unwrap() < 1e-12);
        let report = verify_correlation_equation(&f, &w, &rho).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.checked, 255);
    }

    #[test]
    fn monotone_under_extension() {
        let mut f = PairField::nearest_neighbour(SpinSpace::numeric(3).unwrap(), 1, 0.4).unwrap();
        f.set_one_body(Spin(1), -0.3);
        let w = Window::interval(0, 4).unwrap();
        let rho = rho_exact(&f, &w).unwrap();
        for (u, v) in rho.entries() {
            for s in w.sites().iter().filter(|s| !u.contains_site(s)) {
                let mut over_site = 0.0;
                for a in f.spins().non_vacuum() {
                    let xu = u.with(s, a);
                    assert!(rho.get(&xu) <= v + 1e-15);
                    over_site += rho.get(&xu);
                }
                assert!(over_site <= v + 1e-15);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let f = PairField::zero(SpinSpace::numeric(2).unwrap(), 1).unwrap();
        let w = Window::interval(0, 29).unwrap();
        assert!(matches!(rho_exact(&f, &w), Err(Error::Budget { .. })));
    }

    #[test]
    fn large_energies_are_refused() {
        let f = PairField::nearest_neighbour(SpinSpace::numeric(2).unwrap(), 1, 400.0).unwrap();
        assert!(matches!(
            rho_exact(&f, &Window::interval(0, 2).unwrap()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn environment_violation_is_a_precondition_error() {
        let f = ThreeBody {
            spins: SpinSpace::numeric(2).unwrap(),
            w: 0.3,
        };
        let w = Window::interval(0, 3).unwrap();
        let rho = rho_exact(&f, &w).unwrap();
        assert!(matches!(
            verify_correlation_equation(&f, &w, &rho),
            Err(Error::Precondition(_))
        ));
    }
}
