//! The operator `𝒦`, both as a direct formula ([`apply_g`], [`apply_k`]) and
//! assembled into a sparse matrix on a [`Domain`] ([`CorrelationOperator`]).

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{chebyshev_distance, subsets_up_to, Configuration, Site, Spin, Window};
use crate::tef::OnePointField;

use super::domain::{Domain, SupportedFunction};
use super::{delta_fn, kernel, kernel_factor, site_weights, KernelTruncation};

fn field_range(field: &dyn OnePointField) -> Result<u32> {
    field
        .range()
        .ok_or_else(|| Error::model("the correlation operator needs a finite-range field"))
}

/// Window sites other than those of `support` within `radius` of `t`.
fn kernel_sites(window: &Window, t: &Site, radius: u32, support: &Configuration) -> Vec<Site> {
    window
        .sites_near(t, radius)
        .into_iter()
        .filter(|s| s != t && !support.contains_site(s))
        .collect()
}

/// `(Gφ)(x) = Σ_{J≠∅} Σ_{y∈X_*^J} K_{t∪J}(x_t y) (φ(x'y) - Σ_{α∈X_*} φ(αx'y))`,
/// with `J` ranging over subsets of the window of `φ` near `t`.
///
/// `truncation.interaction_radius` and `j_max` restrict `J`; `term_floor` is
/// ignored here.
pub fn apply_g(
    field: &dyn OnePointField,
    phi: &SupportedFunction,
    x: &Configuration,
    truncation: &KernelTruncation,
) -> Result<f64> {
    let (t, xt, rest) = x.split_min()?;
    let range = field_range(field)?;
    let radius = truncation
        .interaction_radius
        .map_or(range, |r| r.min(range));
    let sites = kernel_sites(phi.domain().window(), &t, radius, x);
    let j_max = truncation.j_max.unwrap_or(sites.len());
    let spins = field.spins();
    let nx = spins.n_x();
    let mut total = 0.0;
    for j in subsets_up_to(&sites, j_max) {
        let mut digits = vec![1u8; j.len()];
        loop {
            let y = Configuration::from_entries(
                j.iter().cloned().zip(digits.iter().map(|d| Spin(*d))),
            )?;
            let k = kernel(field, &t, xt, &y)?;
            if k != 0.0 {
                let ry = rest.concat(&y)?;
                let mut inner = phi.get(&ry);
                for a in spins.non_vacuum() {
                    inner -= phi.get(&ry.with(&t, a));
                }
                total += k * inner;
            }
            let mut p = 0;
            while p < digits.len() && digits[p] as usize == nx {
                digits[p] = 1;
                p += 1;
            }
            if p == digits.len() {
                break;
            }
            digits[p] += 1;
        }
    }
    Ok(total)
}

/// `(𝒦φ)(x) = γ(x)((Sφ)(x) + (Tφ)(x))` on the domain of `φ`, with
/// `(Tφ)(x) = (Gφ)(x) + Σ_{α∈X_*} e^{Δ_t^{x'}(α,θ_t)} ((Gφ)(x) - (Gφ)(αx'))`.
/// With `projection = Some(Λ)` the result is `ψ_Λ 𝒦 φ`.
pub fn apply_k(
    field: &dyn OnePointField,
    phi: &SupportedFunction,
    truncation: &KernelTruncation,
    projection: Option<&Window>,
) -> Result<SupportedFunction> {
    let values: Vec<f64> = phi
        .domain()
        .configs()
        .par_iter()
        .map(|x| -> Result<f64> {
            if projection.is_some_and(|w| !x.is_supported_in(w)) {
                return Ok(0.0);
            }
            let (t, xt, rest) = x.split_min()?;
            let e = site_weights(field, &t, &rest);
            let denom: f64 = e.iter().sum();
            let s_term = if rest.is_empty() { 0.0 } else { phi.get(&rest) };
            let g_x = apply_g(field, phi, x, truncation)?;
            let mut t_term = g_x;
            for a in field.spins().non_vacuum() {
                let g_a = if a == xt {
                    g_x
                } else {
                    apply_g(field, phi, &rest.with(&t, a), truncation)?
                };
                t_term += e[a.index()] * (g_x - g_a);
            }
            Ok(e[xt.index()] / denom * (s_term + t_term))
        })
        .collect::<Result<_>>()?;
    SupportedFunction::from_values(phi.domain().clone(), values)
}

/// Sparse coefficients of one row, the dropped kernel mass and `δ(x)`.
type Row = (Vec<(u32, f64)>, f64, f64);

/// `𝒦` assembled on a domain as a sparse matrix, together with `δ`.
///
/// Rows are built independently and stored in a fixed order, so applying the
/// operator gives the same bits on any number of threads.
#[derive(Clone, Debug)]
pub struct CorrelationOperator {
    domain: Arc<Domain>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    delta: Vec<f64>,
    truncation: KernelTruncation,
    tail: f64,
}

struct RowBuilder<'a> {
    domain: &'a Domain,
    /// kernel factors: site -> β -> y (both non-vacuum, zero-based)
    factors: Vec<Vec<Vec<f64>>>,
    positions: Vec<usize>,
    kept: Vec<bool>,
    /// coefficient of `K(β, y)` in the row: γ((1+E)[β = x_t] - e_β)
    weights: Vec<f64>,
    rest_code: u128,
    rest_len: usize,
    t_weight: u128,
    nx: usize,
    j_max: usize,
    floor: f64,
    entries: Vec<(u32, f64)>,
    tail: f64,
}

impl RowBuilder<'_> {
    fn visit(&mut self, k: usize, code: u128, prods: &[f64], j: usize, truncated: bool) {
        if self.rest_len + j > self.domain.k_max() {
            return;
        }
        if k == self.factors.len() {
            if j == 0 {
                return;
            }
            let coef: f64 = self.weights.iter().zip(prods).map(|(w, p)| w * p).sum();
            if coef == 0.0 {
                return;
            }
            let targets = std::iter::once((code, coef))
                .chain((1..=self.nx).map(|a| (code + a as u128 * self.t_weight, -coef)))
                .filter_map(|(c, v)| self.domain.index_of_code(c).map(|i| (i as u32, v)));
            if truncated || coef.abs() < self.floor {
                self.tail += targets.map(|(_, v)| v.abs()).sum::<f64>();
            } else {
                self.entries.extend(targets);
            }
            return;
        }
        if j > 0 && prods.iter().all(|p| *p == 0.0) {
            return;
        }
        self.visit(k + 1, code, prods, j, truncated);
        let w = self.domain.weight(self.positions[k]);
        let mut next = vec![0.0; prods.len()];
        for y in 0..self.nx {
            for (b, p) in prods.iter().enumerate() {
                next[b] = p * self.factors[k][b][y];
            }
            let cut = truncated || !self.kept[k] || j + 1 > self.j_max;
            self.visit(k + 1, code + (y as u128 + 1) * w, &next, j + 1, cut);
        }
    }
}

impl CorrelationOperator {
    /// Assembles `𝒦` restricted to `domain`: each row `x` collects the
    /// coefficients of `φ(x')` and of every `φ(x'y)`, `φ(αx'y)` inside the domain.
    pub fn assemble(
        field: &dyn OnePointField,
        domain: Arc<Domain>,
        truncation: KernelTruncation,
    ) -> Result<Self> {
        if domain.window().dim() != field.dimension() || domain.spins() != field.spins() {
            return Err(Error::model(
                "domain and field disagree on dimension or spin space",
            ));
        }
        let range = field_range(field)?;
        let radius = truncation.interaction_radius.unwrap_or(range);
        let nx = field.spins().n_x();
        let rows: Vec<Row> = domain
            .configs()
            .par_iter()
            .map(|x| -> Result<Row> {
                let (t, xt, rest) = x.split_min()?;
                let e = site_weights(field, &t, &rest);
                let denom: f64 = e.iter().sum();
                let gamma = e[xt.index()] / denom;
                let mut entries = Vec::new();
                if !rest.is_empty() {
                    let i = domain
                        .index_of(&rest)
                        .expect("restrictions stay in the domain");
                    entries.push((i as u32, gamma));
                }
                let mut sites = Vec::new();
                let mut factors = Vec::new();
                let mut kept = Vec::new();
                for s in kernel_sites(domain.window(), &t, range, x) {
                    let table: Vec<Vec<f64>> = (1..=nx)
                        .map(|b| {
                            (1..=nx)
                                .map(|y| kernel_factor(field, &t, Spin(b as u8), &s, Spin(y as u8)))
                                .collect()
                        })
                        .collect();
                    if table.iter().flatten().any(|v| *v != 0.0) {
                        kept.push(chebyshev_distance(&s, &t)? <= radius);
                        sites.push(s);
                        factors.push(table);
                    }
                }
                let positions = sites
                    .iter()
                    .map(|s| domain.indexed_window().position(s).expect("window site"))
                    .collect();
                let weights = (1..=nx)
                    .map(|b| gamma * (if b == xt.index() { denom } else { 0.0 } - e[b]))
                    .collect();
                let t_pos = domain.indexed_window().position(&t).expect("window site");
                let mut builder = RowBuilder {
                    domain: &domain,
                    factors,
                    positions,
                    kept,
                    weights,
                    rest_code: domain.code(&rest).expect("window configuration"),
                    rest_len: rest.len(),
                    t_weight: domain.weight(t_pos),
                    nx,
                    j_max: truncation.j_max.unwrap_or(usize::MAX),
                    floor: truncation.term_floor,
                    entries,
                    tail: 0.0,
                };
                let code = builder.rest_code;
                builder.visit(0, code, &vec![1.0; nx], 0, false);
                let mut entries = builder.entries;
                entries.sort_by_key(|(c, _)| *c);
                let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
                for (c, v) in entries {
                    match merged.last_mut() {
                        Some((lc, lv)) if *lc == c => *lv += v,
                        _ => merged.push((c, v)),
                    }
                }
                merged.retain(|(_, v)| *v != 0.0);
                let delta = if x.len() == 1 { gamma } else { 0.0 };
                Ok((merged, builder.tail, delta))
            })
            .collect::<Result<_>>()?;

        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(|r| r.0.len()).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        let mut delta = Vec::with_capacity(rows.len());
        let mut tail = 0.0f64;
        for (entries, row_tail, d) in rows {
            for (c, v) in entries {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
            delta.push(d);
            tail = tail.max(row_tail);
        }
        Ok(CorrelationOperator {
            domain,
            row_ptr,
            cols,
            vals,
            delta,
            truncation,
            tail,
        })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn truncation(&self) -> &KernelTruncation {
        &self.truncation
    }

    /// Largest row sum of the absolute coefficients discarded by the truncation.
    pub fn truncation_tail(&self) -> f64 {
        self.tail
    }

    /// `δ` on the domain.
    pub fn delta(&self) -> SupportedFunction {
        SupportedFunction::from_values(self.domain.clone(), self.delta.clone())
            .expect("sized by the domain")
    }

    pub(crate) fn delta_values(&self) -> &[f64] {
        &self.delta
    }

    /// Row `i` as `(column, coefficient)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .map(|c| *c as usize)
            .zip(self.vals[r].iter().copied())
    }

    /// `out = 𝒦 φ` on raw value vectors.
    pub fn apply_into(&self, phi: &[f64], out: &mut [f64]) {
        out.par_iter_mut()
            .enumerate()
            .with_min_len(256)
            .for_each(|(i, o)| {
                let mut acc = 0.0;
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.vals[k] * phi[self.cols[k] as usize];
                }
                *o = acc;
            });
    }

    pub fn apply(&self, phi: &SupportedFunction) -> Result<SupportedFunction> {
        if !Arc::ptr_eq(phi.domain(), &self.domain) {
            return Err(Error::domain("function lives on a different domain"));
        }
        let mut out = vec![0.0; self.len()];
        self.apply_into(phi.values(), &mut out);
        SupportedFunction::from_values(self.domain.clone(), out)
    }
}

/// `δ` tabulated on a domain by the direct formula.
pub fn delta_on(field: &dyn OnePointField, domain: Arc<Domain>) -> Result<SupportedFunction> {
    let values = domain
        .configs()
        .iter()
        .map(|x| delta_fn(field, x))
        .collect::<Result<Vec<_>>>()?;
    SupportedFunction::from_values(domain, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{g_lambda, rho_exact};
    use crate::lattice::SpinSpace;
    use crate::tef::PairField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s1(c: i32) -> Site {
        Site::new(&[c]).unwrap()
    }

    fn random_function(domain: &Arc<Domain>, seed: u64) -> SupportedFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..domain.len())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        SupportedFunction::from_values(domain.clone(), values).unwrap()
    }

    #[test]
    fn zero_field_is_pure_shift() {
        let f = PairField::zero(SpinSpace::numeric(2).unwrap(), 1).unwrap();
        let d = Arc::new(Domain::new(&Window::interval(0, 3).unwrap(), f.spins(), 4).unwrap());
        let phi = SupportedFunction::from_fn(d.clone(), |x| if x.len() == 1 { 0.5 } else { 0.0 });
        let k = apply_k(&f, &phi, &KernelTruncation::exact(), None).unwrap();
        let pair = Configuration::from_entries([(s1(0), Spin(1)), (s1(2), Spin(1))]).unwrap();
        assert_eq!(k.get(&pair), 0.25);
        assert_eq!(
            k.get(&Configuration::singleton(s1(1), Spin(1)).unwrap()),
            0.0
        );
        let zero = apply_k(
            &f,
            &SupportedFunction::zeros(d),
            &KernelTruncation::exact(),
            None,
        )
        .unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn assembled_operator_matches_direct_formula() {
        let mut f = PairField::nearest_neighbour(SpinSpace::numeric(3).unwrap(), 1, 0.3).unwrap();
        f.set_one_body(Spin(1), 0.2);
        for (n, k) in [(5, 5), (6, 3)] {
            let d =
                Arc::new(Domain::new(&Window::interval(0, n - 1).unwrap(), f.spins(), k).unwrap());
            let op =
                CorrelationOperator::assemble(&f, d.clone(), KernelTruncation::exact()).unwrap();
            assert_eq!(op.truncation_tail(), 0.0);
            let phi = random_function(&d, 3);
            let a = op.apply(&phi).unwrap();
            let b = apply_k(&f, &phi, &KernelTruncation::exact(), None).unwrap();
            assert!(a.max_abs_difference(&b) < 1e-13);
            let delta = delta_on(&f, d.clone()).unwrap();
            assert_eq!(delta.values(), op.delta().values());
        }
    }

    #[test]
    fn apply_g_matches_the_oracle() {
        let f = PairField::nearest_neighbour(SpinSpace::numeric(2).unwrap(), 1, 0.2).unwrap();
        let w = Window::interval(0, 5).unwrap();
        let table = rho_exact(&f, &w).unwrap();
        let d = Arc::new(Domain::new(&w, f.spins(), 6).unwrap());
        let rho = SupportedFunction::from_fn(d.clone(), |x| table.get(x)).with_empty_value(1.0);
        for x in d.configs() {
            let a = apply_g(&f, &rho, x, &KernelTruncation::exact()).unwrap();
            let b = g_lambda(&f, &table, x).unwrap();
            assert!((a - b).abs() < 1e-10, "{x:?}: {a} vs {b}");
        }
    }

    #[test]
    fn linearity() {
        let f = PairField::nearest_neighbour(SpinSpace::numeric(2).unwrap(), 2, -0.15).unwrap();
        let w = Window::box_between(&Site::new(&[0, 0]).unwrap(), &Site::new(&[1, 2]).unwrap())
            .unwrap();
        let d = Arc::new(Domain::new(&w, f.spins(), 6).unwrap());
        let (phi, psi) = (random_function(&d, 1), random_function(&d, 2));
        let tr = KernelTruncation::exact();
        let combo = SupportedFunction::linear_combination(0.7, &phi, -1.3, &psi).unwrap();
        let lhs = apply_k(&f, &combo, &tr, None).unwrap();
        let rhs = SupportedFunction::linear_combination(
            0.7,
            &apply_k(&f, &phi, &tr, None).unwrap(),
            -1.3,
            &apply_k(&f, &psi, &tr, None).unwrap(),
        )
        .unwrap();
        assert!(lhs.max_abs_difference(&rhs) < 1e-12);
    }

    #[test]
    fn projection_after_operator() {
        let f = PairField::nearest_neighbour(SpinSpace::numeric(2).unwrap(), 1, 0.1).unwrap();
        let d = Arc::new(Domain::new(&Window::interval(0, 5).unwrap(), f.spins(), 3).unwrap());
        let phi = random_function(&d, 9);
        let v = Window::interval(1, 3).unwrap();
        let projected = apply_k(&f, &phi, &KernelTruncation::exact(), Some(&v)).unwrap();
        let full = apply_k(&f, &phi, &KernelTruncation::exact(), None)
            .unwrap()
            .project(&v);
        assert_eq!(projected.values(), full.values());
    }

    #[test]
    fn truncation_reports_discarded_mass() {
        let f = PairField::nearest_neighbour(SpinSpace::numeric(2).unwrap(), 1, 0.3).unwrap();
        let d = Arc::new(Domain::new(&Window::interval(0, 5).unwrap(), f.spins(), 6).unwrap());
        let exact =
            CorrelationOperator::assemble(&f, d.clone(), KernelTruncation::exact()).unwrap();
        let cut = KernelTruncation {
            interaction_radius: None,
            j_max: Some(1),
            term_floor: 0.0,
        };
        let truncated = CorrelationOperator::assemble(&f, d.clone(), cut).unwrap();
        assert!(truncated.truncation_tail() > 0.0);
        assert!(truncated.nnz() < exact.nnz());
        let phi = random_function(&d, 4);
        let a = exact.apply(&phi).unwrap();
        let b = truncated.apply(&phi).unwrap();
        let direct = apply_k(&f, &phi, &cut, None).unwrap();
        assert!(b.max_abs_difference(&direct) < 1e-13);
        let sup = phi.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(a.max_abs_difference(&b) <= truncated.truncation_tail() * sup + 1e-12);
    }
}
