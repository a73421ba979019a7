//! One-point transition energy fields and the volume energies they generate.
//!
//! A one-point field assigns to every site `t`, boundary `z` (finite support,
//! vacuum elsewhere) and pair of spins `x, u` the energy of the transition
//! `x -> u` at `t`. Volume energies follow by telescoping over an
//! enumeration of the volume ([`delta_volume`]).

pub mod bounds;
pub mod checks;

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::lattice::{ball, Boundary, Configuration, Site, Spin, SpinSpace, Window};

pub use bounds::{
    decay_constant, field_bounds, norm_delta1_scan, remark1_sufficiency, sigma, tail_sigma,
    FieldBounds, Remark1Check,
};

/// Evaluator contract for a one-point transition energy field `Δ_t^z(x, u)`.
pub trait OnePointField: Send + Sync {
    fn spins(&self) -> &SpinSpace;

    fn dimension(&self) -> usize;

    /// `Δ_t^z(x, u)` where `z` is read from `boundary` on `t^c`.
    fn eval(&self, t: &Site, boundary: &dyn Boundary, x: Spin, u: Spin) -> f64;

    /// Chebyshev radius beyond which boundary spins never affect `eval`.
    /// `None` means the dependence is unbounded.
    fn range(&self) -> Option<u32>;

    /// Sites whose local environments exhaust every environment of the
    /// lattice: a single reference site for translation-invariant fields.
    fn scan_sites(&self) -> Vec<Site>;

    /// `‖Δ_1‖`. The default scans all boundaries on the dependence ball.
    fn norm_delta1(&self) -> Result<f64> {
        norm_delta1_scan(self, crate::lattice::DEFAULT_ENUMERATION_BUDGET)
    }
}

/// Pair interaction `Φ_{ts}(a, b)` stored by offset `s - t`, translation invariant.
#[derive(Clone, Debug)]
pub struct PairPotential {
    spins: SpinSpace,
    dim: usize,
    /// offset -> q*q table, entry `a*q + b` is `Φ_{t,t+offset}(a, b)`.
    couplings: BTreeMap<Site, Vec<f64>>,
}

impl PairPotential {
    /// The zero potential.
    pub fn zero(spins: SpinSpace, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::model("dimension must be at least 1"));
        }
        Ok(PairPotential {
            spins,
            dim,
            couplings: BTreeMap::new(),
        })
    }

    /// Sets `Φ_{t,t+offset}(a, b)` and its mirror `Φ_{t,t-offset}(b, a)`.
    pub fn set(&mut self, offset: &Site, a: Spin, b: Spin, value: f64) -> Result<()> {
        self.set_raw(offset, a, b, value)?;
        let mirror = offset.negated()?;
        self.set_raw(&mirror, b, a, value)
    }

    /// Sets a single table entry without touching its mirror. Used to build
    /// raw (possibly inconsistent) tables for the verification suite.
    pub fn set_raw(&mut self, offset: &Site, a: Spin, b: Spin, value: f64) -> Result<()> {
        if offset.dim() != self.dim {
            return Err(Error::model(format!(
                "offset {offset} has the wrong dimension (d={})",
                self.dim
            )));
        }
        if offset.norm() == 0 {
            return Err(Error::model("pair couplings need a nonzero offset"));
        }
        if !value.is_finite() {
            return Err(Error::model(format!(
                "coupling at offset {offset} is not finite"
            )));
        }
        let q = self.spins.size();
        if a.index() >= q || b.index() >= q {
            return Err(Error::model("spin out of range"));
        }
        let table = self
            .couplings
            .entry(offset.clone())
            .or_insert_with(|| vec![0.0; q * q]);
        table[a.index() * q + b.index()] = value;
        Ok(())
    }

    pub fn get(&self, offset: &Site, a: Spin, b: Spin) -> f64 {
        let q = self.spins.size();
        self.couplings
            .get(offset)
            .map(|t| t[a.index() * q + b.index()])
            .unwrap_or(0.0)
    }

    pub fn spins(&self) -> &SpinSpace {
        &self.spins
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Offsets with at least one nonzero entry.
    pub fn offsets(&self) -> impl Iterator<Item = (&Site, &[f64])> {
        self.couplings
            .iter()
            .filter(|(_, t)| t.iter().any(|v| *v != 0.0))
            .map(|(o, t)| (o, t.as_slice()))
    }

    /// Largest Chebyshev norm of an offset carrying a nonzero coupling.
    pub fn range(&self) -> u32 {
        self.offsets().map(|(o, _)| o.norm()).max().unwrap_or(0)
    }

    /// True when `Φ_{ts}(ab) = Φ_{st}(ba)` for every entry.
    pub fn is_symmetric(&self) -> bool {
        let q = self.spins.size();
        self.couplings.iter().all(|(o, table)| {
            let Ok(m) = o.negated() else { return false };
            (0..q).all(|a| {
                (0..q).all(|b| table[a * q + b] == self.get(&m, Spin(b as u8), Spin(a as u8)))
            })
        })
    }

    /// True when every coupling with a vacuum argument vanishes.
    pub fn is_vacuum_potential(&self) -> bool {
        let q = self.spins.size();
        self.couplings
            .values()
            .all(|t| (0..q).all(|a| t[a * q] == 0.0 && t[a] == 0.0))
    }

    /// `‖Φ‖ = sup_t sup_{x∈X_*} Σ_s sup_{y∈X_*} |Φ_{ts}(xy)|`.
    pub fn phi_norm(&self) -> f64 {
        let q = self.spins.size();
        self.spins
            .non_vacuum()
            .map(|x| {
                self.couplings
                    .values()
                    .map(|t| {
                        (1..q)
                            .map(|y| t[x.index() * q + y].abs())
                            .fold(0.0, f64::max)
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// One-point field built from a pair potential plus optional one-body energies:
/// `Δ_t^z(x,u) = h_t(u) - h_t(x) + Σ_{s≠t} (Φ_{ts}(u z_s) - Φ_{ts}(x z_s))`.
#[derive(Clone, Debug)]
pub struct PairField {
    potential: PairPotential,
    /// homogeneous one-body energy per spin code
    one_body: Vec<f64>,
    site_one_body: BTreeMap<Site, Vec<f64>>,
    scan_window: Option<Window>,
    /// offsets with their tables, flattened for the hot loop
    stencil: Vec<(Site, Vec<f64>)>,
}

impl PairField {
    pub fn new(potential: PairPotential) -> Self {
        let q = potential.spins().size();
        let stencil = potential
            .offsets()
            .map(|(o, t)| (o.clone(), t.to_vec()))
            .collect();
        PairField {
            potential,
            one_body: vec![0.0; q],
            site_one_body: BTreeMap::new(),
            scan_window: None,
            stencil,
        }
    }

    /// The zero field on `X`.
    pub fn zero(spins: SpinSpace, dim: usize) -> Result<Self> {
        Ok(PairField::new(PairPotential::zero(spins, dim)?))
    }

    /// Nearest-neighbour (Chebyshev radius one, diagonals included) vacuum
    /// potential with `Φ(a, b) = coupling` for every non-vacuum pair.
    pub fn nearest_neighbour(spins: SpinSpace, dim: usize, coupling: f64) -> Result<Self> {
        let mut pot = PairPotential::zero(spins.clone(), dim)?;
        for o in ball(&Site::origin(dim), 1)? {
            if o.norm() == 0 || o < Site::origin(dim) {
                continue;
            }
            for a in spins.non_vacuum() {
                for b in spins.non_vacuum() {
                    pot.set(&o, a, b, coupling)?;
                }
            }
        }
        Ok(PairField::new(pot))
    }

    /// Sets the homogeneous one-body energy of spin `x`.
    pub fn set_one_body(&mut self, x: Spin, energy: f64) {
        self.one_body[x.index()] = energy;
    }

    /// Sets a site-specific one-body energy. Such fields are inhomogeneous and
    /// need a scan window containing every site with its own term.
    pub fn set_site_one_body(&mut self, site: Site, x: Spin, energy: f64) {
        let base = self.one_body.clone();
        self.site_one_body.entry(site).or_insert(base)[x.index()] = energy;
    }

    pub fn set_scan_window(&mut self, w: Window) {
        self.scan_window = Some(w);
    }

    pub fn potential(&self) -> &PairPotential {
        &self.potential
    }

    pub fn is_homogeneous(&self) -> bool {
        self.site_one_body.is_empty()
    }

    /// Validates the inhomogeneity declaration.
    pub fn check_scan_window(&self) -> Result<()> {
        if self.site_one_body.is_empty() {
            return Ok(());
        }
        let Some(w) = &self.scan_window else {
            return Err(Error::model("inhomogeneous field without a scan window"));
        };
        if let Some(s) = self.site_one_body.keys().find(|s| !w.contains(s)) {
            return Err(Error::model(format!(
                "site {s} has its own one-body term but lies outside the scan window"
            )));
        }
        Ok(())
    }

    #[inline]
    fn one_body_at(&self, t: &Site) -> &[f64] {
        if self.site_one_body.is_empty() {
            return &self.one_body;
        }
        self.site_one_body
            .get(t)
            .map(|v| v.as_slice())
            .unwrap_or(&self.one_body)
    }
}

impl OnePointField for PairField {
    fn spins(&self) -> &SpinSpace {
        self.potential.spins()
    }

    fn dimension(&self) -> usize {
        self.potential.dim()
    }

    fn eval(&self, t: &Site, boundary: &dyn Boundary, x: Spin, u: Spin) -> f64 {
        if x == u {
            return 0.0;
        }
        let q = self.potential.spins().size();
        let h = self.one_body_at(t);
        let mut total = h[u.index()] - h[x.index()];
        for (offset, table) in &self.stencil {
            // offsets are validated against overflow when the window is built
            let Ok(s) = t.shifted(offset) else { continue };
            let z = boundary.spin_at(&s).index();
            total += table[u.index() * q + z] - table[x.index() * q + z];
        }
        total
    }

    fn range(&self) -> Option<u32> {
        Some(self.potential.range())
    }

    fn scan_sites(&self) -> Vec<Site> {
        let origin = Site::origin(self.dimension());
        if self.site_one_body.is_empty() {
            return vec![origin];
        }
        let mut sites: Vec<Site> = match &self.scan_window {
            Some(w) => w.sites().to_vec(),
            None => self.site_one_body.keys().cloned().collect(),
        };
        // one site carrying the bulk one-body term
        let mut far = origin;
        while self.site_one_body.contains_key(&far) || sites.contains(&far) {
            far = far
                .shifted(&Site::new(&vec![1; self.dimension()]).expect("nonempty"))
                .expect("small shift");
        }
        sites.push(far);
        sites
    }

    /// The pair sum is separable in the boundary spins, so the supremum over
    /// boundaries is attained coordinate-wise and needs no enumeration.
    fn norm_delta1(&self) -> Result<f64> {
        let q = self.potential.spins().size();
        let mut best = 0.0f64;
        for t in self.scan_sites() {
            let h = self.one_body_at(&t);
            for x in 0..q {
                for u in 0..q {
                    let mut hi = h[u] - h[x];
                    let mut lo = hi;
                    for (_, table) in &self.stencil {
                        let terms = (0..q).map(|z| table[u * q + z] - table[x * q + z]);
                        hi += terms.clone().fold(f64::NEG_INFINITY, f64::max);
                        lo += terms.fold(f64::INFINITY, f64::min);
                    }
                    best = best.max(hi.abs()).max(lo.abs());
                }
            }
        }
        Ok(best)
    }
}

/// Composite boundary seen by the `j`-th step of the telescoping sum:
/// `u` on sites enumerated before step `j`, `x` on sites after it, and the
/// outer boundary off the volume.
struct TelescopeView<'a> {
    outer: &'a dyn Boundary,
    x: &'a Configuration,
    u: &'a Configuration,
    order: &'a HashMap<Site, usize>,
    step: usize,
}

impl Boundary for TelescopeView<'_> {
    fn spin_at(&self, s: &Site) -> Spin {
        match self.order.get(s) {
            Some(k) if *k < self.step => self.u.get(s),
            Some(k) if *k > self.step => self.x.get(s),
            Some(_) => Spin::VACUUM,
            None => self.outer.spin_at(s),
        }
    }
}

/// `Δ_Λ^{x̄}(x, u)` by telescoping over `enumeration`:
/// `Σ_j Δ_{t_j}^{x̄ u_{t_1..t_{j-1}} x_{t_{j+1}..t_n}}(x_{t_j}, u_{t_j})`.
///
/// `x` and `u` give the non-vacuum parts of two configurations on `Λ`;
/// `boundary` must not carry values inside `Λ`.
pub fn delta_volume(
    field: &dyn OnePointField,
    window: &Window,
    boundary: &Configuration,
    x: &Configuration,
    u: &Configuration,
    enumeration: &[Site],
) -> Result<f64> {
    let mut sorted = enumeration.to_vec();
    sorted.sort();
    if sorted.as_slice() != window.sites() {
        return Err(Error::domain(
            "enumeration is not a permutation of the volume",
        ));
    }
    if !x.is_supported_in(window) || !u.is_supported_in(window) {
        return Err(Error::domain(
            "configurations must be supported in the volume",
        ));
    }
    if boundary.entries().iter().any(|(s, _)| window.contains(s)) {
        return Err(Error::domain("boundary condition overlaps the volume"));
    }
    let order = crate::lattice::position_map(enumeration);
    let mut total = 0.0;
    for (j, t) in enumeration.iter().enumerate() {
        let view = TelescopeView {
            outer: boundary,
            x,
            u,
            order: &order,
            step: j,
        };
        total += field.eval(t, &view, x.get(t), u.get(t));
    }
    Ok(total)
}
