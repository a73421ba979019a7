//! Finite tables of functions on `L_*`: every configuration supported in a
//! window with at most `k_max` sites.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{Configuration, IndexedWindow, Spin, SpinSpace, Window};

/// Largest number of entries a domain may hold.
pub const MAX_DOMAIN_SIZE: usize = 1 << 24;

/// The configurations a [`SupportedFunction`] stores, ordered by support size,
/// then support (lexicographically), then spins.
#[derive(Debug)]
pub struct Domain {
    iw: IndexedWindow,
    spins: SpinSpace,
    k_max: usize,
    configs: Vec<Configuration>,
    index: HashMap<u128, usize>,
    /// entries sharing one support
    groups: Vec<Range<usize>>,
}

impl Domain {
    pub fn new(window: &Window, spins: &SpinSpace, k_max: usize) -> Result<Self> {
        let n = window.len();
        let q = spins.size() as u128;
        if q.checked_pow(n as u32).is_none_or(|v| v >= 1u128 << 127) {
            return Err(Error::domain(format!(
                "window of {n} sites is too large to encode"
            )));
        }
        if k_max == 0 {
            return Err(Error::domain("k_max must be positive"));
        }
        let k_max = k_max.min(n);
        let nx = spins.n_x() as u128;
        let mut required: u128 = 0;
        let mut binom: u128 = 1;
        for k in 1..=k_max as u128 {
            binom = binom * (n as u128 - k + 1) / k;
            required = required.saturating_add(binom.saturating_mul(nx.saturating_pow(k as u32)));
        }
        if required > MAX_DOMAIN_SIZE as u128 {
            return Err(Error::Budget {
                required,
                budget: MAX_DOMAIN_SIZE as u128,
            });
        }

        let iw = IndexedWindow::new(window.clone());
        let mut configs = Vec::with_capacity(required as usize);
        let mut groups = Vec::new();
        let mut support: Vec<usize> = Vec::new();
        for k in 1..=k_max {
            support.clear();
            support.extend(0..k);
            loop {
                let start = configs.len();
                let mut digits = vec![1u8; k];
                loop {
                    configs.push(
                        Configuration::from_entries(
                            support
                                .iter()
                                .zip(&digits)
                                .map(|(p, d)| (iw.site(*p).clone(), Spin(*d))),
                        )
                        .expect("distinct window sites"),
                    );
                    // odometer with the last site varying fastest
                    let mut j = k;
                    while j > 0 && digits[j - 1] as usize == spins.n_x() {
                        digits[j - 1] = 1;
                        j -= 1;
                    }
                    if j == 0 {
                        break;
                    }
                    digits[j - 1] += 1;
                }
                groups.push(start..configs.len());
                // next k-subset of positions in lexicographic order
                let mut i = k;
                while i > 0 && support[i - 1] == n - k + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                support[i - 1] += 1;
                for j in i..k {
                    support[j] = support[j - 1] + 1;
                }
            }
        }
        let mut domain = Domain {
            iw,
            spins: spins.clone(),
            k_max,
            configs,
            index: HashMap::new(),
            groups,
        };
        let index = domain
            .configs
            .iter()
            .enumerate()
            .map(|(i, c)| (domain.code(c).expect("supported in window"), i))
            .collect();
        domain.index = index;
        Ok(domain)
    }

    /// Base-`|X|` code of `x`: digit `p` holds the spin at the `p`-th window site.
    pub(crate) fn code(&self, x: &Configuration) -> Option<u128> {
        let mut code = 0u128;
        for (s, v) in x.entries() {
            code += v.index() as u128 * self.weight(self.iw.position(s)?);
        }
        Some(code)
    }

    pub(crate) fn weight(&self, position: usize) -> u128 {
        (self.spins.size() as u128).pow(position as u32)
    }

    pub(crate) fn index_of_code(&self, code: u128) -> Option<usize> {
        self.index.get(&code).copied()
    }

    /// Position of `x` in the domain, `None` for `𝜱` and for configurations
    /// outside it.
    pub fn index_of(&self, x: &Configuration) -> Option<usize> {
        if x.is_empty() || x.len() > self.k_max {
            return None;
        }
        self.index.get(&self.code(x)?).copied()
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn window(&self) -> &Window {
        self.iw.window()
    }

    pub fn indexed_window(&self) -> &IndexedWindow {
        &self.iw
    }

    pub fn spins(&self) -> &SpinSpace {
        &self.spins
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Ranges of entries sharing one support.
    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }
}

/// A function on `L_*` stored on a [`Domain`]; it reads zero elsewhere,
/// except at `𝜱` where it reads `empty_value`.
#[derive(Clone, Debug)]
pub struct SupportedFunction {
    domain: Arc<Domain>,
    values: Vec<f64>,
    empty_value: f64,
}

impl SupportedFunction {
    pub fn zeros(domain: Arc<Domain>) -> Self {
        let n = domain.len();
        SupportedFunction {
            domain,
            values: vec![0.0; n],
            empty_value: 0.0,
        }
    }

    pub fn from_fn(domain: Arc<Domain>, f: impl Fn(&Configuration) -> f64) -> Self {
        let values = domain.configs().iter().map(f).collect();
        SupportedFunction {
            domain,
            values,
            empty_value: 0.0,
        }
    }

    pub fn from_values(domain: Arc<Domain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::domain(format!(
                "expected {} values, got {}",
                domain.len(),
                values.len()
            )));
        }
        Ok(SupportedFunction {
            domain,
            values,
            empty_value: 0.0,
        })
    }

    pub fn with_empty_value(mut self, v: f64) -> Self {
        self.empty_value = v;
        self
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn empty_value(&self) -> f64 {
        self.empty_value
    }

    pub fn get(&self, x: &Configuration) -> f64 {
        if x.is_empty() {
            return self.empty_value;
        }
        self.domain
            .index_of(x)
            .map(|i| self.values[i])
            .unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Configuration, f64)> {
        self.domain
            .configs()
            .iter()
            .zip(self.values.iter().copied())
    }

    /// `‖φ‖ = sup_Λ Σ_{x∈X_*^Λ} |φ(x)|`, the largest per-support sum.
    pub fn bstar_norm(&self) -> f64 {
        bstar_norm_of(&self.domain, &self.values)
    }

    /// `ψ_V φ`: entries supported outside `V` are set to zero.
    pub fn project(&self, v: &Window) -> SupportedFunction {
        let values = self
            .iter()
            .map(|(x, val)| if x.is_supported_in(v) { val } else { 0.0 })
            .collect();
        SupportedFunction {
            domain: self.domain.clone(),
            values,
            empty_value: self.empty_value,
        }
    }

    /// `a φ + b ψ` on a shared domain.
    pub fn linear_combination(
        a: f64,
        phi: &SupportedFunction,
        b: f64,
        psi: &SupportedFunction,
    ) -> Result<Self> {
        if !Arc::ptr_eq(&phi.domain, &psi.domain) {
            return Err(Error::domain("functions live on different domains"));
        }
        let values = phi
            .values
            .iter()
            .zip(&psi.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(SupportedFunction {
            domain: phi.domain.clone(),
            values,
            empty_value: a * phi.empty_value + b * psi.empty_value,
        })
    }

    /// Largest absolute entrywise difference, over the union of both domains.
    pub fn max_abs_difference(&self, other: &SupportedFunction) -> f64 {
        let a = self
            .iter()
            .map(|(x, v)| (v - other.get(x)).abs())
            .fold(0.0, f64::max);
        let b = other
            .iter()
            .map(|(x, v)| (v - self.get(x)).abs())
            .fold(0.0, f64::max);
        a.max(b)
    }
}

pub(crate) fn bstar_norm_of(domain: &Domain, values: &[f64]) -> f64 {
    domain
        .groups()
        .iter()
        .map(|g| values[g.clone()].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Site;

    fn domain(n: i32, q: usize, k: usize) -> Arc<Domain> {
        Arc::new(
            Domain::new(
                &Window::interval(0, n - 1).unwrap(),
                &SpinSpace::numeric(q).unwrap(),
                k,
            )
            .unwrap(),
        )
    }

    #[test]
    fn sizes_and_order() {
        let d = domain(4, 3, 4);
        assert_eq!(d.len(), 3usize.pow(4) - 1);
        let d2 = domain(5, 2, 2);
        assert_eq!(d2.len(), 5 + 10);
        assert_eq!(d2.groups().len(), 15);
        let lens: Vec<usize> = d2.configs().iter().map(|c| c.len()).collect();
        assert!(lens.windows(2).all(|w| w[0] <= w[1]));
        for (i, c) in d.configs().iter().enumerate() {
            assert_eq!(d.index_of(c), Some(i));
        }
        assert_eq!(d.index_of(&Configuration::empty()), None);
        let outside = Configuration::singleton(Site::new(&[9]).unwrap(), Spin(1)).unwrap();
        assert_eq!(d.index_of(&outside), None);
    }

    #[test]
    fn norms() {
        let d = domain(3, 2, 3);
        let delta = SupportedFunction::from_fn(d.clone(), |x| if x.len() == 1 { 0.5 } else { 0.0 });
        assert_eq!(delta.bstar_norm(), 0.5);
        let mut single = SupportedFunction::zeros(d.clone());
        single.values_mut()[4] = -0.7;
        assert_eq!(single.bstar_norm(), 0.7);
        let d3 = domain(3, 3, 3);
        let rho = SupportedFunction::from_fn(d3, |x| 3f64.powi(-(x.len() as i32)));
        // per-support sum (2/3)^|I|, largest for singletons
        assert!((rho.bstar_norm() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn projection_algebra() {
        let d = domain(5, 2, 5);
        let phi = SupportedFunction::from_fn(d, |x| {
            x.len() as f64 - 0.5 * x.entries()[0].0.coords()[0] as f64
        });
        let big = Window::interval(0, 3).unwrap();
        let small = Window::interval(1, 2).unwrap();
        let a = phi.project(&big).project(&small);
        let b = phi.project(&small);
        assert_eq!(a.values(), b.values());
        assert!(phi.project(&big).bstar_norm() <= phi.bstar_norm());
    }

    #[test]
    fn oversized_domains_are_refused() {
        let w = Window::interval(0, 39).unwrap();
        assert!(matches!(
            Domain::new(&w, &SpinSpace::numeric(2).unwrap(), 40),
            Err(Error::Budget { .. })
        ));
        assert!(Domain::new(&w, &SpinSpace::numeric(2).unwrap(), 3).is_ok());
    }
}
