//! Residual checks for the consistency conditions of one-point fields, the
//! volume energies they generate, and the environment condition.
//!
//! Every check runs a list of instances, either drawn at random (one ChaCha
//! stream per instance, so results do not depend on scheduling) or
//! enumerated exhaustively over a small region, and reports the largest
//! residual of each identity together with the instance that attains it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{ball, enumerate_configs, Configuration, Site, Spin, SpinSpace, Window};

use super::{delta_volume, OnePointField};

/// Absolute tolerance for all identity checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Largest region accepted by exhaustive mode.
pub const EXHAUSTIVE_MAX_SITES: usize = 4;

/// Which instances a check visits.
#[derive(Clone, Debug)]
pub struct SamplePlan {
    pub seed: u64,
    /// Number of random instances (ignored in exhaustive mode).
    pub instances: usize,
    /// Sites the tested volumes are drawn from.
    pub region: Window,
    pub exhaustive: bool,
}

impl SamplePlan {
    pub fn random(seed: u64, instances: usize, region: Window) -> Self {
        SamplePlan {
            seed,
            instances,
            region,
            exhaustive: false,
        }
    }

    pub fn exhaustive(region: Window) -> Self {
        SamplePlan {
            seed: 0,
            instances: 0,
            region,
            exhaustive: true,
        }
    }

    fn rng(&self, i: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        rng
    }

    fn validate(&self, field: &dyn OnePointField) -> Result<()> {
        if self.region.dim() != field.dimension() {
            return Err(Error::model(format!(
                "region has dimension {} but the field has dimension {}",
                self.region.dim(),
                field.dimension()
            )));
        }
        if self.exhaustive && self.region.len() > EXHAUSTIVE_MAX_SITES {
            return Err(Error::domain(format!(
                "exhaustive mode needs a region of at most {EXHAUSTIVE_MAX_SITES} sites, got {}",
                self.region.len()
            )));
        }
        Ok(())
    }
}

/// Largest residual of one identity.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityResidual {
    pub name: &'static str,
    pub max_residual: f64,
    /// The instance attaining `max_residual`, if it is nonzero.
    pub witness: Option<String>,
    pub checked: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub identities: Vec<IdentityResidual>,
    pub tolerance: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.identities
            .iter()
            .all(|r| r.max_residual <= self.tolerance)
    }

    pub fn max_residual(&self) -> f64 {
        self.identities
            .iter()
            .map(|r| r.max_residual)
            .fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&IdentityResidual> {
        self.identities.iter().find(|r| r.name == name)
    }

    pub fn merge(mut self, other: CheckReport) -> CheckReport {
        self.identities.extend(other.identities);
        self.tolerance = self.tolerance.min(other.tolerance);
        self
    }
}

fn clean(r: f64) -> f64 {
    if r.is_nan() {
        f64::INFINITY
    } else {
        r.abs()
    }
}

/// Runs `n` instances in parallel. `eval(i, false)` returns the residuals of
/// instance `i`; `eval(i, true)` additionally describes it. Ties go to the
/// lowest index, so the report is independent of the thread count.
fn run_instances<F>(names: &[&'static str], n: usize, eval: F) -> CheckReport
where
    F: Fn(usize, bool) -> (Vec<f64>, String) + Sync,
{
    let k = names.len();
    let worst = (0..n)
        .into_par_iter()
        .map(|i| {
            let (res, _) = eval(i, false);
            res.into_iter().map(|r| (clean(r), i)).collect::<Vec<_>>()
        })
        .reduce(
            || vec![(0.0, usize::MAX); k],
            |a, b| {
                a.into_iter()
                    .zip(b)
                    .map(|(x, y)| {
                        if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
                            y
                        } else {
                            x
                        }
                    })
                    .collect()
            },
        );
    let identities = names
        .iter()
        .zip(worst)
        .map(|(name, (r, i))| IdentityResidual {
            name,
            max_residual: r,
            witness: (r > 0.0).then(|| eval(i, true).1),
            checked: n,
        })
        .collect();
    CheckReport {
        identities,
        tolerance: DEFAULT_TOLERANCE,
    }
}

fn random_spin(rng: &mut impl Rng, spins: &SpinSpace) -> Spin {
    Spin(rng.random_range(0..spins.size()) as u8)
}

fn random_config(rng: &mut impl Rng, spins: &SpinSpace, sites: &[Site]) -> Configuration {
    Configuration::from_full(sites.iter().map(|s| (s.clone(), random_spin(rng, spins))))
        .expect("distinct sites")
}

/// Sites within distance `r` of `sites`, excluding `sites` themselves.
fn neighbourhood(sites: &[Site], r: u32) -> Result<Vec<Site>> {
    let mut out = Vec::new();
    for t in sites {
        out.extend(ball(t, r)?);
    }
    out.sort();
    out.dedup();
    out.retain(|s| !sites.contains(s));
    Ok(out)
}

fn all_configs(sites: &[Site], spins: &SpinSpace) -> Result<Vec<Configuration>> {
    if sites.is_empty() {
        return Ok(vec![Configuration::empty()]);
    }
    Ok(enumerate_configs(
        &Window::new(sites.to_vec())?,
        spins,
        false,
        crate::lattice::DEFAULT_ENUMERATION_BUDGET,
    )?
    .collect())
}

fn dependence_radius(field: &dyn OnePointField) -> Result<u32> {
    let r = field
        .range()
        .ok_or_else(|| Error::model("field has unbounded boundary dependence"))?;
    Ok(r.max(1))
}

/// Pick `t` in the region and `s ≠ t` within the dependence radius of `t`.
fn random_pair(rng: &mut impl Rng, region: &Window, radius: u32) -> Result<(Site, Site)> {
    let t = region.sites()[rng.random_range(0..region.len())].clone();
    let near: Vec<Site> = ball(&t, radius)?.into_iter().filter(|s| *s != t).collect();
    let s = near[rng.random_range(0..near.len())].clone();
    Ok((t, s))
}

fn label(spins: &SpinSpace, s: Spin) -> &str {
    spins.label(s)
}

struct OnePointInstance {
    t: Site,
    s: Site,
    z: Configuration,
    x: Spin,
    y: Spin,
    u: Spin,
    v: Spin,
}

/// Cocycle, antisymmetry and two-site exchange identities of the one-point
/// field:
///
/// * `Δ_t^z(x,u) = Δ_t^z(x,y) + Δ_t^z(y,u)`
/// * `Δ_t^z(x,u) = -Δ_t^z(u,x)`
/// * `Δ_t^{zy}(x,u) + Δ_s^{zu}(y,v) = Δ_s^{zx}(y,v) + Δ_t^{zv}(x,u)`
pub fn check_one_point_consistency(
    field: &dyn OnePointField,
    plan: &SamplePlan,
) -> Result<CheckReport> {
    plan.validate(field)?;
    let radius = dependence_radius(field)?;
    let spins = field.spins();

    let listed: Vec<OnePointInstance> = if plan.exhaustive {
        let mut list = Vec::new();
        let region = plan.region.sites();
        for t in region {
            for s in region.iter().filter(|s| *s != t) {
                let rest: Vec<Site> = region
                    .iter()
                    .filter(|r| *r != t && *r != s)
                    .cloned()
                    .collect();
                for z in all_configs(&rest, spins)? {
                    for x in spins.all() {
                        for y in spins.all() {
                            for u in spins.all() {
                                for v in spins.all() {
                                    list.push(OnePointInstance {
                                        t: t.clone(),
                                        s: s.clone(),
                                        z: z.clone(),
                                        x,
                                        y,
                                        u,
                                        v,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        list
    } else {
        Vec::new()
    };
    let n = if plan.exhaustive {
        listed.len()
    } else {
        plan.instances
    };

    let make = |i: usize| -> Result<OnePointInstance> {
        if plan.exhaustive {
            let l = &listed[i];
            return Ok(OnePointInstance {
                t: l.t.clone(),
                s: l.s.clone(),
                z: l.z.clone(),
                ..*l
            });
        }
        let mut rng = plan.rng(i);
        let (t, s) = random_pair(&mut rng, &plan.region, radius)?;
        let around = neighbourhood(&[t.clone(), s.clone()], radius)?;
        let z = random_config(&mut rng, spins, &around);
        let [x, y, u, v] = std::array::from_fn(|_| random_spin(&mut rng, spins));
        Ok(OnePointInstance {
            t,
            s,
            z,
            x,
            y,
            u,
            v,
        })
    };

    let eval = |i: usize, describe: bool| -> (Vec<f64>, String) {
        let Ok(OnePointInstance {
            t,
            s,
            z,
            x,
            y,
            u,
            v,
        }) = make(i)
        else {
            return (
                vec![f64::INFINITY; 3],
                format!("instance {i}: site arithmetic overflow"),
            );
        };
        let cocycle =
            field.eval(&t, &z, x, u) - field.eval(&t, &z, x, y) - field.eval(&t, &z, y, u);
        let antisymmetry = field.eval(&t, &z, x, u) + field.eval(&t, &z, u, x);
        let exchange = field.eval(&t, &z.with(&s, y), x, u) + field.eval(&s, &z.with(&t, u), y, v)
            - field.eval(&s, &z.with(&t, x), y, v)
            - field.eval(&t, &z.with(&s, v), x, u);
        let text = if describe {
            format!(
                "t={t} s={s} z=[{}] x={} y={} u={} v={}",
                z.describe(spins),
                label(spins, x),
                label(spins, y),
                label(spins, u),
                label(spins, v)
            )
        } else {
            String::new()
        };
        (vec![cocycle, antisymmetry, exchange], text)
    };
    Ok(run_instances(
        &["cocycle", "antisymmetry", "exchange"],
        n,
        eval,
    ))
}

struct VolumeInstance {
    lambda: Window,
    v: Window,
    boundary: Configuration,
    x: Configuration,
    u: Configuration,
    y: Configuration,
    w: Configuration,
    order_lv: Vec<Site>,
    order_l: Vec<Site>,
    order_v: Vec<Site>,
}

fn shuffled(rng: &mut impl Rng, sites: &[Site]) -> Vec<Site> {
    let mut out = sites.to_vec();
    out.shuffle(rng);
    out
}

/// Consistency of the volume energies built by [`delta_volume`]:
///
/// * cocycle `Δ_{Λ∪V}(a,c) = Δ_{Λ∪V}(a,b) + Δ_{Λ∪V}(b,c)`
/// * antisymmetry `Δ_{Λ∪V}(a,c) = -Δ_{Λ∪V}(c,a)`
/// * split `Δ_{Λ∪V}^{x̄}(xy,uw) = Δ_Λ^{x̄y}(x,u) + Δ_V^{x̄u}(y,w)`
///
/// Random instances draw `|Λ|, |V| ≤ 3` from the region with random
/// enumerations; exhaustive mode visits every disjoint pair `Λ, V` in the
/// region, every boundary on the remaining region sites and all spins.
pub fn check_field_consistency(
    field: &dyn OnePointField,
    plan: &SamplePlan,
) -> Result<CheckReport> {
    plan.validate(field)?;
    let radius = dependence_radius(field)?;
    let spins = field.spins();
    if plan.region.len() < 2 {
        return Err(Error::domain(
            "field consistency needs a region with at least two sites",
        ));
    }

    let listed: Vec<VolumeInstance> = if plan.exhaustive {
        let region = plan.region.sites();
        let n = region.len();
        let mut list = Vec::new();
        // each site goes to Λ (1), V (2), or the boundary region (0)
        for code in 0..3usize.pow(n as u32) {
            let mut parts = [Vec::new(), Vec::new(), Vec::new()];
            let mut c = code;
            for s in region {
                parts[c % 3].push(s.clone());
                c /= 3;
            }
            let [rest, l, v] = parts;
            if l.is_empty() || v.is_empty() {
                continue;
            }
            let lambda = Window::new(l.clone())?;
            let vw = Window::new(v.clone())?;
            let lv: Vec<Site> = lambda.sites().iter().chain(vw.sites()).cloned().collect();
            for b in all_configs(&rest, spins)? {
                for x in all_configs(&l, spins)? {
                    for u in all_configs(&l, spins)? {
                        for y in all_configs(&v, spins)? {
                            for w in all_configs(&v, spins)? {
                                list.push(VolumeInstance {
                                    lambda: lambda.clone(),
                                    v: vw.clone(),
                                    boundary: b.clone(),
                                    x: x.clone(),
                                    u: u.clone(),
                                    y: y.clone(),
                                    w,
                                    order_lv: lv.clone(),
                                    order_l: lambda.sites().to_vec(),
                                    order_v: vw.sites().to_vec(),
                                });
                            }
                        }
                    }
                }
            }
        }
        list
    } else {
        Vec::new()
    };
    let n = if plan.exhaustive {
        listed.len()
    } else {
        plan.instances
    };

    let make = |i: usize| -> Result<VolumeInstance> {
        if plan.exhaustive {
            let l = &listed[i];
            return Ok(VolumeInstance {
                lambda: l.lambda.clone(),
                v: l.v.clone(),
                boundary: l.boundary.clone(),
                x: l.x.clone(),
                u: l.u.clone(),
                y: l.y.clone(),
                w: l.w.clone(),
                order_lv: l.order_lv.clone(),
                order_l: l.order_l.clone(),
                order_v: l.order_v.clone(),
            });
        }
        let mut rng = plan.rng(i);
        let mut pool = plan.region.sites().to_vec();
        pool.shuffle(&mut rng);
        let max_total = pool.len().min(6);
        let nl = rng.random_range(1..=(max_total - 1).min(3));
        let nv = rng.random_range(1..=(max_total - nl).min(3));
        let lambda = Window::new(pool[..nl].to_vec())?;
        let vw = Window::new(pool[nl..nl + nv].to_vec())?;
        let lv: Vec<Site> = pool[..nl + nv].to_vec();
        let around = neighbourhood(&lv, radius)?;
        let boundary = random_config(&mut rng, spins, &around);
        let x = random_config(&mut rng, spins, lambda.sites());
        let u = random_config(&mut rng, spins, lambda.sites());
        let y = random_config(&mut rng, spins, vw.sites());
        let w = random_config(&mut rng, spins, vw.sites());
        let order_lv = shuffled(&mut rng, &lv);
        let order_l = shuffled(&mut rng, lambda.sites());
        let order_v = shuffled(&mut rng, vw.sites());
        Ok(VolumeInstance {
            lambda,
            v: vw,
            boundary,
            x,
            u,
            y,
            w,
            order_lv,
            order_l,
            order_v,
        })
    };

    let eval = |i: usize, describe: bool| -> (Vec<f64>, String) {
        let residuals = (|| -> Result<(Vec<f64>, VolumeInstance)> {
            let inst = make(i)?;
            let VolumeInstance {
                lambda,
                v,
                boundary,
                x,
                u,
                y,
                w,
                order_lv,
                order_l,
                order_v,
            } = &inst;
            let union = Window::new(order_lv.clone())?;
            let xy = x.concat(y)?;
            let uw = u.concat(w)?;
            let xw = x.concat(w)?;
            let whole = |a: &Configuration, b: &Configuration| {
                delta_volume(field, &union, boundary, a, b, order_lv)
            };
            let lhs = whole(&xy, &uw)?;
            let split = delta_volume(field, lambda, &boundary.concat(y)?, x, u, order_l)?
                + delta_volume(field, v, &boundary.concat(u)?, y, w, order_v)?;
            let cocycle = lhs - whole(&xy, &xw)? - whole(&xw, &uw)?;
            let antisymmetry = lhs + whole(&uw, &xy)?;
            Ok((vec![cocycle, antisymmetry, lhs - split], inst))
        })();
        match residuals {
            Ok((res, inst)) => {
                let text = if describe {
                    format!(
                        "Λ={:?} V={:?} boundary=[{}] x=[{}] u=[{}] y=[{}] w=[{}]",
                        inst.lambda,
                        inst.v,
                        inst.boundary.describe(spins),
                        inst.x.describe(spins),
                        inst.u.describe(spins),
                        inst.y.describe(spins),
                        inst.w.describe(spins)
                    )
                } else {
                    String::new()
                };
                (res, text)
            }
            Err(e) => (vec![f64::INFINITY; 3], format!("instance {i}: {e}")),
        }
    };
    Ok(run_instances(
        &["volume cocycle", "volume antisymmetry", "split"],
        n,
        eval,
    ))
}

struct EnvironmentInstance {
    t: Site,
    s: Site,
    z: Configuration,
    x: Spin,
    y: Spin,
    v: Spin,
}

/// The environment condition
/// `Δ_t^{zy}(x,θ_t) - Δ_t^{zv}(x,θ_t) = Δ_t^{y}(x,θ_t) - Δ_t^{v}(x,θ_t)`
/// for `y, v` at a site `s ≠ t` and `z` on sites other than `t, s`.
pub fn check_environment_condition(
    field: &dyn OnePointField,
    plan: &SamplePlan,
) -> Result<CheckReport> {
    plan.validate(field)?;
    let radius = dependence_radius(field)?;
    let spins = field.spins();

    let listed: Vec<EnvironmentInstance> = if plan.exhaustive {
        let region = plan.region.sites();
        let mut list = Vec::new();
        for t in region {
            for s in region.iter().filter(|s| *s != t) {
                let rest: Vec<Site> = region
                    .iter()
                    .filter(|r| *r != t && *r != s)
                    .cloned()
                    .collect();
                for z in all_configs(&rest, spins)? {
                    for x in spins.all() {
                        for y in spins.all() {
                            for v in spins.all() {
                                list.push(EnvironmentInstance {
                                    t: t.clone(),
                                    s: s.clone(),
                                    z: z.clone(),
                                    x,
                                    y,
                                    v,
                                });
                            }
                        }
                    }
                }
            }
        }
        list
    } else {
        Vec::new()
    };
    let n = if plan.exhaustive {
        listed.len()
    } else {
        plan.instances
    };

    let make = |i: usize| -> Result<EnvironmentInstance> {
        if plan.exhaustive {
            let l = &listed[i];
            return Ok(EnvironmentInstance {
                t: l.t.clone(),
                s: l.s.clone(),
                z: l.z.clone(),
                ..*l
            });
        }
        let mut rng = plan.rng(i);
        let (t, s) = random_pair(&mut rng, &plan.region, radius)?;
        let around = neighbourhood(&[t.clone(), s.clone()], radius)?;
        let z = random_config(&mut rng, spins, &around);
        let [x, y, v] = std::array::from_fn(|_| random_spin(&mut rng, spins));
        Ok(EnvironmentInstance { t, s, z, x, y, v })
    };

    let eval = |i: usize, describe: bool| -> (Vec<f64>, String) {
        let Ok(EnvironmentInstance { t, s, z, x, y, v }) = make(i) else {
            return (
                vec![f64::INFINITY],
                format!("instance {i}: site arithmetic overflow"),
            );
        };
        let th = Spin::VACUUM;
        let lone_y = Configuration::empty().with(&s, y);
        let lone_v = Configuration::empty().with(&s, v);
        let lhs = field.eval(&t, &z.with(&s, y), x, th) - field.eval(&t, &z.with(&s, v), x, th);
        let rhs = field.eval(&t, &lone_y, x, th) - field.eval(&t, &lone_v, x, th);
        let text = if describe {
            format!(
                "t={t} s={s} z=[{}] x={} y={} v={}",
                z.describe(spins),
                label(spins, x),
                label(spins, y),
                label(spins, v)
            )
        } else {
            String::new()
        };
        (vec![lhs - rhs], text)
    };
    Ok(run_instances(&["environment"], n, eval))
}

/// Enumeration invariance of [`delta_volume`]: for random volumes of at most
/// `max_volume` region sites, the spread of `Δ_Λ^{x̄}(x,u)` over
/// `permutations` random enumerations (plus the sorted one).
pub fn check_enumeration_invariance(
    field: &dyn OnePointField,
    plan: &SamplePlan,
    permutations: usize,
    max_volume: usize,
) -> Result<CheckReport> {
    plan.validate(field)?;
    if plan.exhaustive {
        return Err(Error::domain(
            "enumeration invariance is a randomized check",
        ));
    }
    let radius = dependence_radius(field)?;
    let spins = field.spins();
    let max_volume = max_volume.clamp(1, plan.region.len());

    let eval = |i: usize, describe: bool| -> (Vec<f64>, String) {
        let run = || -> Result<(f64, String)> {
            let mut rng = plan.rng(i);
            let mut pool = plan.region.sites().to_vec();
            pool.shuffle(&mut rng);
            let n = rng.random_range(1..=max_volume);
            let lambda = Window::new(pool[..n].to_vec())?;
            let around = neighbourhood(lambda.sites(), radius)?;
            let boundary = random_config(&mut rng, spins, &around);
            let x = random_config(&mut rng, spins, lambda.sites());
            let u = random_config(&mut rng, spins, lambda.sites());
            let base = delta_volume(field, &lambda, &boundary, &x, &u, lambda.sites())?;
            let mut spread = 0.0f64;
            for _ in 0..permutations {
                let order = shuffled(&mut rng, lambda.sites());
                let d = delta_volume(field, &lambda, &boundary, &x, &u, &order)?;
                spread = spread.max(clean(d - base));
            }
            let text = if describe {
                format!(
                    "Λ={lambda:?} boundary=[{}] x=[{}] u=[{}]",
                    boundary.describe(spins),
                    x.describe(spins),
                    u.describe(spins)
                )
            } else {
                String::new()
            };
            Ok((spread, text))
        };
        match run() {
            Ok((r, text)) => (vec![r], text),
            Err(e) => (vec![f64::INFINITY], format!("instance {i}: {e}")),
        }
    };
    Ok(run_instances(
        &["enumeration invariance"],
        plan.instances,
        eval,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tef::test_fields::ThreeBody;
    use crate::tef::{PairField, PairPotential};

    fn s1(c: i32) -> Site {
        Site::new(&[c]).unwrap()
    }

    fn region1(n: i32) -> Window {
        Window::interval(0, n - 1).unwrap()
    }

    #[test]
    fn zero_field_has_zero_residuals() {
        let f = PairField::zero(SpinSpace::numeric(3).unwrap(), 1).unwrap();
        let plan = SamplePlan::random(1, 200, region1(5));
        for report in [
            check_one_point_consistency(&f, &plan).unwrap(),
            check_field_consistency(&f, &plan).unwrap(),
            check_environment_condition(&f, &plan).unwrap(),
            check_enumeration_invariance(&f, &plan, 10, 6).unwrap(),
        ] {
            assert_eq!(report.max_residual(), 0.0);
            assert!(report.identities.iter().all(|r| r.witness.is_none()));
        }
    }

    #[test]
    fn pair_fields_pass_exhaustively() {
        let mut f = PairField::nearest_neighbour(SpinSpace::numeric(2).unwrap(), 1, 0.37).unwrap();
        f.set_one_body(Spin(1), -0.2);
        let plan = SamplePlan::exhaustive(region1(4));
        let op = check_one_point_consistency(&f, &plan).unwrap();
        assert!(op.passed(), "{op:?}");
        assert_eq!(op.identities[0].checked, 4 * 3 * 4 * 16);
        let fc = check_field_consistency(&f, &plan).unwrap();
        assert!(fc.passed(), "{fc:?}");
        assert!(check_environment_condition(&f, &plan).unwrap().passed());
    }

    #[test]
    fn corrupted_table_is_detected() {
        let spins = SpinSpace::numeric(2).unwrap();
        let mut pot = PairPotential::zero(spins, 1).unwrap();
        pot.set(&s1(1), Spin(1), Spin(1), 0.25).unwrap();
        pot.set_raw(&s1(1), Spin(1), Spin(1), 0.35).unwrap();
        let f = PairField::new(pot);
        let report =
            check_one_point_consistency(&f, &SamplePlan::random(7, 2000, region1(4))).unwrap();
        let ex = report.get("exchange").unwrap();
        assert!(ex.max_residual >= 0.1 - 1e-12, "{ex:?}");
        assert!(ex.witness.is_some());
        assert!(!report.passed());
        assert!(report.get("cocycle").unwrap().max_residual <= DEFAULT_TOLERANCE);
    }

    #[test]
    fn three_body_term_breaks_the_environment_condition() {
        let f = ThreeBody {
            spins: SpinSpace::numeric(2).unwrap(),
            w: 0.3,
        };
        let plan = SamplePlan::exhaustive(region1(3));
        let env = check_environment_condition(&f, &plan).unwrap();
        assert!((env.max_residual() - 0.3).abs() < 1e-12, "{env:?}");
        assert!(env.identities[0].witness.as_deref().unwrap().contains("t="));
        // still a consistent field
        assert!(check_one_point_consistency(&f, &plan).unwrap().passed());
    }

    #[test]
    fn reports_do_not_depend_on_thread_count() {
        let f = PairField::nearest_neighbour(SpinSpace::numeric(3).unwrap(), 2, 0.1).unwrap();
        let region = Window::box_between(&Site::origin(2), &Site::new(&[2, 2]).unwrap()).unwrap();
        let plan = SamplePlan::random(11, 500, region);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| check_field_consistency(&f, &plan).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn exhaustive_mode_is_limited_to_small_regions() {
        let f = PairField::zero(SpinSpace::numeric(2).unwrap(), 1).unwrap();
        let plan = SamplePlan::exhaustive(region1(5));
        assert!(matches!(
            check_environment_condition(&f, &plan),
            Err(Error::Domain(_))
        ));
    }
}
