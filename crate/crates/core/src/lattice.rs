//! Lattice geometry, spin alphabets and finite-support configurations.
//!
//! Sites are points of the integer lattice `Z^d` compared lexicographically.
//! A [`Configuration`] stores only its non-vacuum values; every site absent
//! from it carries the vacuum spin.

use std::collections::HashMap;
use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};

pub type Coord = i32;

/// Default cap on the number of states an exhaustive enumeration may visit.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 1 << 24;

/// A point of `Z^d`.
///
/// The derived ordering is lexicographic on the coordinate tuple, which is
/// the site order used to pick the distinguished point of a support.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site(SmallVec<[Coord; 4]>);

impl Site {
    pub fn new(coords: &[Coord]) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::model("sites need at least one coordinate"));
        }
        Ok(Site(SmallVec::from_slice(coords)))
    }

    /// The origin of `Z^d`.
    pub fn origin(dim: usize) -> Self {
        Site(SmallVec::from_elem(0, dim.max(1)))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Coord] {
        &self.0
    }

    /// `self + offset`, failing on coordinate overflow.
    pub fn shifted(&self, offset: &Site) -> Result<Site> {
        same_dim(self, offset)?;
        let mut out = SmallVec::with_capacity(self.dim());
        for (a, b) in self.0.iter().zip(offset.0.iter()) {
            out.push(a.checked_add(*b).ok_or_else(|| {
                Error::model(format!("coordinate overflow shifting {self} by {offset}"))
            })?);
        }
        Ok(Site(out))
    }

    /// `self - other`, failing on coordinate overflow.
    pub fn offset_from(&self, other: &Site) -> Result<Site> {
        same_dim(self, other)?;
        let mut out = SmallVec::with_capacity(self.dim());
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            out.push(
                a.checked_sub(*b).ok_or_else(|| {
                    Error::model(format!("coordinate overflow in {self} - {other}"))
                })?,
            );
        }
        Ok(Site(out))
    }

    pub fn negated(&self) -> Result<Site> {
        let mut out = SmallVec::with_capacity(self.dim());
        for a in &self.0 {
            out.push(
                a.checked_neg()
                    .ok_or_else(|| Error::model(format!("cannot negate {self}")))?,
            );
        }
        Ok(Site(out))
    }

    /// Chebyshev norm `max_j |t_j|`.
    pub fn norm(&self) -> u32 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn same_dim(t: &Site, s: &Site) -> Result<()> {
    if t.dim() != s.dim() {
        return Err(Error::model(format!(
            "dimension mismatch: {t} has d={}, {s} has d={}",
            t.dim(),
            s.dim()
        )));
    }
    Ok(())
}

/// `|t - s| = max_j |t_j - s_j|`.
pub fn chebyshev_distance(t: &Site, s: &Site) -> Result<u32> {
    same_dim(t, s)?;
    Ok(t.0
        .iter()
        .zip(s.0.iter())
        .map(|(a, b)| (i64::from(*a) - i64::from(*b)).unsigned_abs() as u32)
        .max()
        .unwrap_or(0))
}

/// Chebyshev distance between two site sets, `min_{t in T, s in S} |t - s|`.
pub fn set_distance(ts: &[Site], ss: &[Site]) -> Result<u32> {
    if ts.is_empty() || ss.is_empty() {
        return Err(Error::domain("set distance needs two nonempty site sets"));
    }
    let mut best = u32::MAX;
    for t in ts {
        for s in ss {
            best = best.min(chebyshev_distance(t, s)?);
        }
    }
    Ok(best)
}

/// All sites `s` with `|s - t| <= r`, in lexicographic order.
pub fn ball(t: &Site, r: u32) -> Result<Vec<Site>> {
    let r = r as i64;
    let dim = t.dim();
    let side = (2 * r + 1) as usize;
    let count = side
        .checked_pow(dim as u32)
        .ok_or_else(|| Error::model("ball too large"))?;
    let mut out = Vec::with_capacity(count);
    let mut offs = vec![-r; dim];
    loop {
        let mut coords = SmallVec::<[Coord; 4]>::with_capacity(dim);
        for (c, o) in t.0.iter().zip(offs.iter()) {
            let v = i64::from(*c) + o;
            coords.push(
                Coord::try_from(v)
                    .map_err(|_| Error::model(format!("coordinate overflow near {t}")))?,
            );
        }
        out.push(Site(coords));
        // odometer, last coordinate fastest keeps lexicographic order
        let mut k = dim;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            if offs[k] < r {
                offs[k] += 1;
                for o in offs.iter_mut().skip(k + 1) {
                    *o = -r;
                }
                break;
            }
        }
    }
}

/// A finite nonempty set of sites of one dimension, kept sorted.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Window {
    sites: Vec<Site>,
}

impl Window {
    pub fn new(sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let mut sites: Vec<Site> = sites.into_iter().collect();
        if sites.is_empty() {
            return Err(Error::domain("a window must contain at least one site"));
        }
        let dim = sites[0].dim();
        if let Some(bad) = sites.iter().find(|s| s.dim() != dim) {
            return Err(Error::model(format!(
                "site {bad} does not have dimension {dim}"
            )));
        }
        sites.sort();
        sites.dedup();
        Ok(Window { sites })
    }

    /// The box `lo <= s <= hi` (coordinate-wise, inclusive).
    pub fn box_between(lo: &Site, hi: &Site) -> Result<Self> {
        same_dim(lo, hi)?;
        let dim = lo.dim();
        let mut ranges = Vec::with_capacity(dim);
        for (a, b) in lo.0.iter().zip(hi.0.iter()) {
            if a > b {
                return Err(Error::domain(format!("empty box: {lo} .. {hi}")));
            }
            ranges.push(*a..=*b);
        }
        let mut sites = vec![SmallVec::<[Coord; 4]>::new()];
        for range in ranges {
            let mut next =
                Vec::with_capacity(sites.len() * (range.end() - range.start() + 1) as usize);
            for prefix in &sites {
                for c in range.clone() {
                    let mut p = prefix.clone();
                    p.push(c);
                    next.push(p);
                }
            }
            sites = next;
        }
        Window::new(sites.into_iter().map(Site))
    }

    /// The one-dimensional interval `lo..=hi`.
    pub fn interval(lo: Coord, hi: Coord) -> Result<Self> {
        Window::box_between(&Site::new(&[lo])?, &Site::new(&[hi])?)
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.sites[0].dim()
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.sites.binary_search(s).is_ok()
    }

    pub fn position(&self, s: &Site) -> Option<usize> {
        self.sites.binary_search(s).ok()
    }

    pub fn is_subset_of(&self, other: &Window) -> bool {
        self.sites.iter().all(|s| other.contains(s))
    }

    /// `d(s, Λ^c)`: the smallest radius at which the ball around `s` leaves the window.
    pub fn distance_to_complement(&self, s: &Site) -> Result<u32> {
        same_dim(s, &self.sites[0])?;
        if !self.contains(s) {
            return Ok(0);
        }
        let mut r = 1u32;
        loop {
            // only the shell at radius r can contain new sites
            for b in ball(s, r)? {
                if chebyshev_distance(&b, s)? == r && !self.contains(&b) {
                    return Ok(r);
                }
            }
            r += 1;
        }
    }

    /// `d(I, Λ^c)` for a set of sites, the minimum over its members.
    pub fn set_distance_to_complement(&self, sites: &[Site]) -> Result<u32> {
        let mut best = u32::MAX;
        for s in sites {
            best = best.min(self.distance_to_complement(s)?);
        }
        if sites.is_empty() {
            return Err(Error::domain("distance of an empty site set"));
        }
        Ok(best)
    }

    /// `Λ(r) = {s ∈ Λ : d(s, Λ^c) > r}`.
    pub fn interior(&self, r: u32) -> Result<Vec<Site>> {
        let mut out = Vec::new();
        for s in &self.sites {
            if self.distance_to_complement(s)? > r {
                out.push(s.clone());
            }
        }
        Ok(out)
    }

    /// Sites of the window within Chebyshev distance `r` of `t`.
    pub fn sites_near(&self, t: &Site, r: u32) -> Vec<Site> {
        self.sites
            .iter()
            .filter(|s| chebyshev_distance(s, t).map(|d| d <= r).unwrap_or(false))
            .cloned()
            .collect()
    }

    /// Lexicographically middle site; the center of a box window.
    pub fn center(&self) -> Site {
        self.sites[self.sites.len() / 2].clone()
    }
}

impl fmt::Debug for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.sites.iter()).finish()
    }
}

/// Window with O(d) site-to-position lookup through its bounding box.
#[derive(Clone, Debug)]
pub struct IndexedWindow {
    window: Window,
    lo: Vec<i64>,
    extent: Vec<i64>,
    dense: Option<Vec<u32>>,
}

impl IndexedWindow {
    const NONE: u32 = u32::MAX;

    pub fn new(window: Window) -> Self {
        let dim = window.dim();
        let mut lo = vec![i64::MAX; dim];
        let mut hi = vec![i64::MIN; dim];
        for s in window.sites() {
            for (j, c) in s.coords().iter().enumerate() {
                lo[j] = lo[j].min(i64::from(*c));
                hi[j] = hi[j].max(i64::from(*c));
            }
        }
        let extent: Vec<i64> = lo.iter().zip(hi.iter()).map(|(a, b)| b - a + 1).collect();
        let volume = extent.iter().try_fold(1i64, |acc, e| acc.checked_mul(*e));
        let dense = match volume {
            Some(v) if v as u128 <= 16 * window.len() as u128 + 4096 => {
                let mut table = vec![Self::NONE; v as usize];
                for (p, s) in window.sites().iter().enumerate() {
                    let mut idx = 0i64;
                    for (j, c) in s.coords().iter().enumerate() {
                        idx = idx * extent[j] + (i64::from(*c) - lo[j]);
                    }
                    table[idx as usize] = p as u32;
                }
                Some(table)
            }
            _ => None,
        };
        IndexedWindow {
            window,
            lo,
            extent,
            dense,
        }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn site(&self, p: usize) -> &Site {
        &self.window.sites[p]
    }

    #[inline]
    pub fn position(&self, s: &Site) -> Option<usize> {
        match &self.dense {
            Some(table) => {
                if s.dim() != self.lo.len() {
                    return None;
                }
                let mut idx = 0i64;
                for (j, c) in s.coords().iter().enumerate() {
                    let off = i64::from(*c) - self.lo[j];
                    if off < 0 || off >= self.extent[j] {
                        return None;
                    }
                    idx = idx * self.extent[j] + off;
                }
                match table[idx as usize] {
                    Self::NONE => None,
                    p => Some(p as usize),
                }
            }
            None => self.window.position(s),
        }
    }
}

/// Index of a spin symbol. `Spin(0)` is always the vacuum; the non-vacuum
/// symbols are `Spin(1) ..= Spin(N_X)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Spin(pub u8);

impl Spin {
    pub const VACUUM: Spin = Spin(0);

    pub fn is_vacuum(self) -> bool {
        self.0 == 0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Finite spin alphabet `X` with a distinguished vacuum symbol.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SpinSpace {
    symbols: Vec<String>,
    vacuum_index: usize,
    /// `order[code]` is the position in `symbols` of the spin with that code.
    order: Vec<usize>,
}

impl SpinSpace {
    pub fn new(symbols: Vec<String>, vacuum_index: usize) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(Error::model("a spin space needs at least two symbols"));
        }
        if symbols.len() > u8::MAX as usize {
            return Err(Error::model("at most 255 spin symbols are supported"));
        }
        if vacuum_index >= symbols.len() {
            return Err(Error::model(format!(
                "vacuum index {vacuum_index} out of range"
            )));
        }
        for (i, a) in symbols.iter().enumerate() {
            if symbols[..i].contains(a) {
                return Err(Error::model(format!("duplicate spin symbol {a:?}")));
            }
            if a.is_empty() || a.chars().any(|c| c.is_whitespace() || ";=,".contains(c)) {
                return Err(Error::model(format!(
                    "spin symbol {a:?} must be nonempty without whitespace or ;=,"
                )));
            }
        }
        let mut order = vec![vacuum_index];
        order.extend((0..symbols.len()).filter(|i| *i != vacuum_index));
        Ok(SpinSpace {
            symbols,
            vacuum_index,
            order,
        })
    }

    /// Symbols `"0", "1", ..., "q-1"` with vacuum `"0"`.
    pub fn numeric(q: usize) -> Result<Self> {
        SpinSpace::new((0..q).map(|i| i.to_string()).collect(), 0)
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    /// `N_X = |X| - 1`.
    pub fn n_x(&self) -> usize {
        self.symbols.len() - 1
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn vacuum_index(&self) -> usize {
        self.vacuum_index
    }

    pub fn label(&self, s: Spin) -> &str {
        &self.symbols[self.order[s.index()]]
    }

    pub fn spin(&self, label: &str) -> Option<Spin> {
        let pos = self.symbols.iter().position(|s| s == label)?;
        let code = self.order.iter().position(|p| *p == pos)?;
        Some(Spin(code as u8))
    }

    /// All spins, vacuum first.
    pub fn all(&self) -> impl Iterator<Item = Spin> + Clone {
        (0..self.symbols.len()).map(|i| Spin(i as u8))
    }

    /// Non-vacuum spins `X_*`.
    pub fn non_vacuum(&self) -> impl Iterator<Item = Spin> + Clone {
        (1..self.symbols.len()).map(|i| Spin(i as u8))
    }
}

/// Read access to a boundary condition: the spin at any site, vacuum by default.
pub trait Boundary {
    fn spin_at(&self, s: &Site) -> Spin;
}

/// The all-vacuum boundary.
pub struct Vacuum;

impl Boundary for Vacuum {
    fn spin_at(&self, _s: &Site) -> Spin {
        Spin::VACUUM
    }
}

/// A finite configuration without vacuum, i.e. an element of `L_*` or the
/// empty configuration. Entries are kept sorted by site.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Configuration {
    entries: Vec<(Site, Spin)>,
}

impl Configuration {
    pub fn empty() -> Self {
        Configuration {
            entries: Vec::new(),
        }
    }

    pub fn singleton(site: Site, spin: Spin) -> Result<Self> {
        Configuration::from_entries([(site, spin)])
    }

    /// Builds a configuration from `(site, spin)` pairs. Vacuum values and
    /// repeated sites are rejected.
    pub fn from_entries(entries: impl IntoIterator<Item = (Site, Spin)>) -> Result<Self> {
        let mut entries: Vec<(Site, Spin)> = entries.into_iter().collect();
        if let Some((s, _)) = entries.iter().find(|(_, v)| v.is_vacuum()) {
            return Err(Error::domain(format!(
                "vacuum value at {s}: configurations store non-vacuum spins only"
            )));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::domain(format!("site {} assigned twice", w[0].0)));
            }
            if w[0].0.dim() != w[1].0.dim() {
                return Err(Error::model("configuration mixes dimensions"));
            }
        }
        Ok(Configuration { entries })
    }

    /// Like [`Configuration::from_entries`] but silently drops vacuum values,
    /// so a full configuration `x θ_{S∖I}` maps to its finite part `x`.
    pub fn from_full(entries: impl IntoIterator<Item = (Site, Spin)>) -> Result<Self> {
        Configuration::from_entries(entries.into_iter().filter(|(_, v)| !v.is_vacuum()))
    }

    pub fn entries(&self) -> &[(Site, Spin)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support(&self) -> Vec<Site> {
        self.entries.iter().map(|(s, _)| s.clone()).collect()
    }

    pub fn get(&self, s: &Site) -> Spin {
        match self.entries.binary_search_by(|(k, _)| k.cmp(s)) {
            Ok(i) => self.entries[i].1,
            Err(_) => Spin::VACUUM,
        }
    }

    pub fn contains_site(&self, s: &Site) -> bool {
        self.entries.binary_search_by(|(k, _)| k.cmp(s)).is_ok()
    }

    /// Copy with `s` set to `v`; a vacuum value removes the site.
    pub fn with(&self, s: &Site, v: Spin) -> Configuration {
        let mut entries = self.entries.clone();
        match entries.binary_search_by(|(k, _)| k.cmp(s)) {
            Ok(i) => {
                if v.is_vacuum() {
                    entries.remove(i);
                } else {
                    entries[i].1 = v;
                }
            }
            Err(i) => {
                if !v.is_vacuum() {
                    entries.insert(i, (s.clone(), v));
                }
            }
        }
        Configuration { entries }
    }

    /// Concatenation `xy` of configurations with disjoint supports.
    pub fn concat(&self, other: &Configuration) -> Result<Configuration> {
        let mut entries = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            match self.entries[i].0.cmp(&other.entries[j].0) {
                std::cmp::Ordering::Less => {
                    entries.push(self.entries[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    entries.push(other.entries[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    return Err(Error::domain(format!(
                        "cannot concatenate: both configurations contain {}",
                        self.entries[i].0
                    )))
                }
            }
        }
        entries.extend_from_slice(&self.entries[i..]);
        entries.extend_from_slice(&other.entries[j..]);
        Ok(Configuration { entries })
    }

    /// Restriction `x_T` to the sites of `T` (sites of `T` outside the support are ignored).
    pub fn restrict(&self, sites: &[Site]) -> Configuration {
        Configuration {
            entries: self
                .entries
                .iter()
                .filter(|(s, _)| sites.contains(s))
                .cloned()
                .collect(),
        }
    }

    /// Removes the sites of `T`.
    pub fn without(&self, sites: &[Site]) -> Configuration {
        Configuration {
            entries: self
                .entries
                .iter()
                .filter(|(s, _)| !sites.contains(s))
                .cloned()
                .collect(),
        }
    }

    /// Splits off the ⪯-smallest site: returns `(t, x_t, x')` with `x' = x_{I∖t}`.
    pub fn split_min(&self) -> Result<(Site, Spin, Configuration)> {
        let (first, rest) = self
            .entries
            .split_first()
            .ok_or_else(|| Error::domain("split of the empty configuration"))?;
        Ok((
            first.0.clone(),
            first.1,
            Configuration {
                entries: rest.to_vec(),
            },
        ))
    }

    pub fn is_supported_in(&self, w: &Window) -> bool {
        self.entries.iter().all(|(s, _)| w.contains(s))
    }

    /// Human-readable `site=label` list.
    pub fn describe(&self, spins: &SpinSpace) -> String {
        if self.entries.is_empty() {
            return "∅".to_string();
        }
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|(s, v)| format!("{s}={}", spins.label(*v)))
            .collect();
        parts.join(" ")
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.entries.iter().map(|(s, v)| (s, v.0)))
            .finish()
    }
}

impl Boundary for Configuration {
    fn spin_at(&self, s: &Site) -> Spin {
        self.get(s)
    }
}

/// Iterator over configurations on subsets of a window, see [`enumerate_configs`].
pub struct ConfigIter {
    sites: Vec<Site>,
    digits: Vec<u8>,
    q: u8,
    low: u8,
    done: bool,
}

impl Iterator for ConfigIter {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        if self.done {
            return None;
        }
        let cfg = Configuration {
            entries: self
                .sites
                .iter()
                .zip(self.digits.iter())
                .filter(|(_, d)| **d != 0)
                .map(|(s, d)| (s.clone(), Spin(*d)))
                .collect(),
        };
        // advance the odometer; the first site varies fastest
        let mut k = 0;
        loop {
            if k == self.digits.len() {
                self.done = true;
                break;
            }
            if self.digits[k] + 1 < self.q {
                self.digits[k] += 1;
                break;
            }
            self.digits[k] = self.low;
            k += 1;
        }
        Some(cfg)
    }
}

/// Enumerates configurations on `Λ`.
///
/// With `star_only` the stream is `{𝜱} ∪ L_*^Λ`, all non-vacuum configurations on
/// subsets of `Λ`; there are `(1 + N_X)^|Λ|` of them. Without it the stream
/// is `X^Λ` (each element given by its non-vacuum part), `|X|^|Λ|` elements.
/// The two counts coincide: every full configuration has exactly one
/// non-vacuum part. The flag exists for callers that reason about either set.
pub fn enumerate_configs(
    window: &Window,
    spins: &SpinSpace,
    star_only: bool,
    budget: u128,
) -> Result<ConfigIter> {
    let q = spins.size() as u128;
    let base = if star_only {
        1 + spins.n_x() as u128
    } else {
        q
    };
    let required = base.checked_pow(window.len() as u32).ok_or(Error::Budget {
        required: u128::MAX,
        budget,
    })?;
    if required > budget {
        return Err(Error::Budget { required, budget });
    }
    Ok(ConfigIter {
        sites: window.sites().to_vec(),
        digits: vec![0; window.len()],
        q: spins.size() as u8,
        low: 0,
        done: false,
    })
}

/// Sorted list of all subsets of `items` with at most `k_max` elements.
pub(crate) fn subsets_up_to<T: Clone>(items: &[T], k_max: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec<T: Clone>(
        items: &[T],
        start: usize,
        k_max: usize,
        current: &mut Vec<T>,
        out: &mut Vec<Vec<T>>,
    ) {
        if !current.is_empty() {
            out.push(current.clone());
        }
        if current.len() == k_max {
            return;
        }
        for i in start..items.len() {
            current.push(items[i].clone());
            rec(items, i + 1, k_max, current, out);
            current.pop();
        }
    }
    rec(items, 0, k_max, &mut current, &mut out);
    out
}

/// Map from site to position for a list of sites.
pub(crate) fn position_map(sites: &[Site]) -> HashMap<Site, usize> {
    sites
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn site(c: &[Coord]) -> Site {
        Site::new(c).unwrap()
    }

    fn cfg(entries: &[(&[Coord], u8)]) -> Configuration {
        Configuration::from_entries(entries.iter().map(|(c, v)| (site(c), Spin(*v)))).unwrap()
    }

    #[test]
    fn chebyshev_examples() {
        assert_eq!(
            chebyshev_distance(&site(&[0, 0]), &site(&[0, 0])).unwrap(),
            0
        );
        assert_eq!(
            chebyshev_distance(&site(&[0, 0]), &site(&[2, -3])).unwrap(),
            3
        );
        assert_eq!(chebyshev_distance(&site(&[5]), &site(&[1])).unwrap(), 4);
        assert!(matches!(
            chebyshev_distance(&site(&[0]), &site(&[0, 0])),
            Err(Error::ModelDefinition(_))
        ));
    }

    #[test]
    fn set_distance_examples() {
        let o = site(&[0, 0]);
        assert_eq!(
            set_distance(std::slice::from_ref(&o), &[o.clone(), site(&[9, 9])]).unwrap(),
            0
        );
        assert_eq!(
            set_distance(std::slice::from_ref(&o), &[site(&[3, 1])]).unwrap(),
            3
        );
        assert_eq!(
            set_distance(&[o.clone(), site(&[1, 0])], &[site(&[4, 0])]).unwrap(),
            3
        );
        assert!(matches!(set_distance(&[], &[o]), Err(Error::Domain(_))));
    }

    #[test]
    fn interior_follows_distance_to_complement() {
        let big = Window::box_between(&site(&[0, 0]), &site(&[4, 4])).unwrap();
        // every site of a window is at distance >= 1 from the complement
        assert_eq!(big.interior(0).unwrap().len(), 25);
        let inner = Window::box_between(&site(&[1, 1]), &site(&[3, 3])).unwrap();
        assert_eq!(big.interior(1).unwrap(), inner.sites().to_vec());
        assert_eq!(big.interior(2).unwrap(), vec![site(&[2, 2])]);
        assert!(big.interior(3).unwrap().is_empty());
        let small = Window::box_between(&site(&[0, 0]), &site(&[2, 2])).unwrap();
        assert!(small.interior(2).unwrap().is_empty());
    }

    #[test]
    fn distance_to_complement_in_a_chain() {
        let w = Window::interval(-3, 3).unwrap();
        assert_eq!(w.distance_to_complement(&site(&[0])).unwrap(), 4);
        assert_eq!(w.distance_to_complement(&site(&[3])).unwrap(), 1);
        assert_eq!(w.distance_to_complement(&site(&[7])).unwrap(), 0);
    }

    #[test]
    fn concat_examples() {
        let x = cfg(&[(&[0], 1)]);
        assert_eq!(x.concat(&Configuration::empty()).unwrap(), x);
        let y = cfg(&[(&[3], 1)]);
        let xy = x.concat(&y).unwrap();
        assert_eq!(xy.support(), vec![site(&[0]), site(&[3])]);
        assert!(matches!(
            x.concat(&cfg(&[(&[0], 2)])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn split_min_examples() {
        let (t, v, rest) = cfg(&[(&[0, 0], 1)]).split_min().unwrap();
        assert_eq!(
            (t, v, rest),
            (site(&[0, 0]), Spin(1), Configuration::empty())
        );
        let (t, _, _) = cfg(&[(&[1, 0], 1), (&[0, 1], 1)]).split_min().unwrap();
        assert_eq!(t, site(&[0, 1]));
        let (t, _, rest) = cfg(&[(&[5], 1), (&[2], 1), (&[7], 1)]).split_min().unwrap();
        assert_eq!(t, site(&[2]));
        assert_eq!(rest, cfg(&[(&[5], 1), (&[7], 1)]));
        assert!(Configuration::empty().split_min().is_err());
    }

    #[test]
    fn enumerate_counts() {
        let two = Window::interval(0, 1).unwrap();
        let three = Window::interval(0, 2).unwrap();
        let x2 = SpinSpace::numeric(2).unwrap();
        let x3 = SpinSpace::numeric(3).unwrap();
        let all: Vec<_> = enumerate_configs(&two, &x2, true, DEFAULT_ENUMERATION_BUDGET)
            .unwrap()
            .collect();
        assert_eq!(all.len(), 4);
        assert_eq!(all.iter().filter(|c| c.len() == 1).count(), 2);
        assert_eq!(
            enumerate_configs(&three, &x3, true, DEFAULT_ENUMERATION_BUDGET)
                .unwrap()
                .count(),
            27
        );
        assert_eq!(
            enumerate_configs(&two, &x2, false, DEFAULT_ENUMERATION_BUDGET)
                .unwrap()
                .count(),
            4
        );
        let big = Window::interval(0, 29).unwrap();
        match enumerate_configs(&big, &x2, false, DEFAULT_ENUMERATION_BUDGET) {
            Err(Error::Budget { required, .. }) => assert_eq!(required, 1 << 30),
            _ => panic!("expected a budget error"),
        }
    }

    #[test]
    fn vacuum_is_absence() {
        assert!(Configuration::from_entries([(site(&[0]), Spin::VACUUM)]).is_err());
        let c =
            Configuration::from_full([(site(&[0]), Spin::VACUUM), (site(&[1]), Spin(1))]).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.get(&site(&[0])), Spin::VACUUM);
        assert!(c.with(&site(&[1]), Spin::VACUUM).is_empty());
    }

    #[test]
    fn spin_space_codes_put_vacuum_first() {
        let x = SpinSpace::new(vec!["up".into(), "empty".into(), "down".into()], 1).unwrap();
        assert_eq!(x.label(Spin::VACUUM), "empty");
        assert_eq!(x.spin("up"), Some(Spin(1)));
        assert_eq!(x.spin("down"), Some(Spin(2)));
        assert_eq!(x.n_x(), 2);
        assert!(SpinSpace::new(vec!["a".into()], 0).is_err());
        assert!(SpinSpace::new(vec!["a".into(), "a".into()], 0).is_err());
    }

    #[test]
    fn overflow_is_reported() {
        let far = site(&[Coord::MAX]);
        assert!(matches!(
            far.shifted(&site(&[1])),
            Err(Error::ModelDefinition(_))
        ));
    }

    #[test]
    fn indexed_window_matches_binary_search() {
        let w = Window::box_between(&site(&[-1, 2]), &site(&[2, 4])).unwrap();
        let iw = IndexedWindow::new(w.clone());
        for s in ball(&site(&[0, 3]), 3).unwrap() {
            assert_eq!(iw.position(&s), w.position(&s));
        }
    }
}
