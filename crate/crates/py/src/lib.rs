use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use engine::correq::{
    epsilon_bound, solve_finite_volume, solve_finite_volume_direct, solve_infinite_volume,
    SolveOptions, SolveReport, SupportedFunction,
};
use engine::error::Error;
use engine::exact::{rho_exact, verify_correlation_equation};
use engine::io::{parse_configuration, parse_window};
use engine::lattice::{Site, Window};
use engine::model;
use engine::tef::checks::{
    check_environment_condition, check_field_consistency, check_one_point_consistency, SamplePlan,
};
use engine::tef::{field_bounds, OnePointField, PairField};

create_exception!(tefcorr, TefcorrError, PyException);
create_exception!(tefcorr, NotCertifiedError, TefcorrError);
create_exception!(tefcorr, DivergenceError, TefcorrError);
create_exception!(tefcorr, BudgetError, TefcorrError);

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::NotCertified { .. } => NotCertifiedError::new_err(msg),
        Error::Divergence { .. } => DivergenceError::new_err(msg),
        Error::Budget { .. } => BudgetError::new_err(msg),
        _ => TefcorrError::new_err(msg),
    }
}

/// A pair-potential model loaded from its TOML description.
#[pyclass(frozen)]
struct Model {
    inner: model::Model,
}

impl Model {
    fn field(&self) -> &PairField {
        &self.inner.field
    }

    fn window(&self, spec: &str) -> PyResult<Window> {
        let w = parse_window(spec).map_err(to_py)?;
        if w.dim() != self.field().dimension() {
            return Err(TefcorrError::new_err(format!(
                "window {spec} has dimension {}, the model has {}",
                w.dim(),
                self.field().dimension()
            )));
        }
        Ok(w)
    }

    fn table<'py>(&self, py: Python<'py>, phi: &SupportedFunction) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (x, v) in phi.iter() {
            d.set_item(x.describe(self.field().spins()), v)?;
        }
        Ok(d)
    }
}

fn report_dict<'py>(py: Python<'py>, r: &SolveReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("iterations", r.iterations)?;
    d.set_item("max_iters", r.max_iters)?;
    d.set_item("final_update_norm", r.final_update_norm)?;
    d.set_item("residual_norm", r.residual_norm)?;
    d.set_item("operator_norm_bound", r.operator_norm_bound)?;
    d.set_item("gate_passed", r.gate_passed)?;
    d.set_item("empirical_contraction_rate", r.empirical_contraction_rate)?;
    d.set_item("update_norms", r.update_norms.clone())?;
    d.set_item("unknowns", r.unknowns)?;
    d.set_item("trusted_depth", r.trusted_depth)?;
    d.set_item("caveat", r.caveat.clone())?;
    Ok(d)
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Model {
            inner: model::Model::from_path(path).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Model {
            inner: model::Model::from_str(text).map_err(to_py)?,
        })
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.field().dimension()
    }

    #[getter]
    fn spins(&self) -> Vec<String> {
        self.field().spins().symbols().to_vec()
    }

    #[getter]
    fn digest(&self) -> &str {
        &self.inner.digest
    }

    #[getter]
    fn phi_norm(&self) -> f64 {
        self.field().potential().phi_norm()
    }

    /// Contraction constants of the field.
    fn bounds<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let b = field_bounds(self.field()).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("norm_delta1", b.norm_delta1)?;
        d.set_item("d", b.d)?;
        d.set_item("n_x", b.n_x)?;
        d.set_item("c1", b.c1)?;
        d.set_item("c1_prime", b.c1_prime)?;
        d.set_item("c2", b.c2)?;
        d.set_item("displayed_lhs", b.displayed_lhs)?;
        d.set_item("contraction_lhs", b.contraction_lhs)?;
        d.set_item("passes", b.passes())?;
        Ok(d)
    }

    /// `ε(d)`, the certified distance-`d` error bound.
    fn epsilon(&self, d: u32) -> PyResult<f64> {
        epsilon_bound(self.field(), d).map_err(to_py)
    }

    /// Exact correlations `ρ_Λ` keyed by configuration, e.g. `"(0)=1 (1)=1"`.
    fn rho_exact<'py>(&self, py: Python<'py>, window: &str) -> PyResult<Bound<'py, PyDict>> {
        let w = self.window(window)?;
        let table = rho_exact(self.field(), &w).map_err(to_py)?;
        let d = PyDict::new(py);
        for (x, v) in table.entries() {
            d.set_item(x.describe(self.field().spins()), v)?;
        }
        Ok(d)
    }

    /// Largest residual of the correlation equation on the exact table.
    fn equation_residual(&self, window: &str) -> PyResult<f64> {
        let w = self.window(window)?;
        let table = rho_exact(self.field(), &w).map_err(to_py)?;
        Ok(verify_correlation_equation(self.field(), &w, &table)
            .map_err(to_py)?
            .max_residual)
    }

    /// Solves the correlation equation; returns `(values, report)`.
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (window, tol=1e-12, override_gate=false, direct=false, infinite=false, k_max=None))]
    fn solve<'py>(
        &self,
        py: Python<'py>,
        window: &str,
        tol: f64,
        override_gate: bool,
        direct: bool,
        infinite: bool,
        k_max: Option<usize>,
    ) -> PyResult<(Bound<'py, PyDict>, Bound<'py, PyDict>)> {
        let w = self.window(window)?;
        let options = SolveOptions {
            tol,
            override_gate,
            k_max,
            ..SolveOptions::default()
        };
        let run = match (direct, infinite) {
            (true, true) => return Err(TefcorrError::new_err("direct and infinite are exclusive")),
            (true, false) => solve_finite_volume_direct,
            (false, true) => solve_infinite_volume,
            (false, false) => solve_finite_volume,
        };
        let (phi, report) = run(self.field(), &w, &options).map_err(to_py)?;
        Ok((self.table(py, &phi)?, report_dict(py, &report)?))
    }

    /// Value of a single correlation, e.g. `model.correlation("-2:2", "(0)=1")`.
    #[pyo3(signature = (window, configuration, override_gate=false))]
    fn correlation(&self, window: &str, configuration: &str, override_gate: bool) -> PyResult<f64> {
        let w = self.window(window)?;
        let x = parse_configuration(configuration, self.field().spins()).map_err(to_py)?;
        let options = SolveOptions {
            override_gate,
            ..SolveOptions::default()
        };
        let (phi, _) = solve_finite_volume(self.field(), &w, &options).map_err(to_py)?;
        Ok(phi.get(&x))
    }

    /// Residuals of the field identities on random instances: name -> (max residual, passed).
    #[pyo3(signature = (instances=10000, seed=0, radius=2, tol=1e-10))]
    fn verify(
        &self,
        instances: usize,
        seed: u64,
        radius: i32,
        tol: f64,
    ) -> PyResult<Vec<(String, f64, bool)>> {
        let dim = self.field().dimension();
        let region = Window::box_between(
            &Site::new(&vec![-radius; dim]).map_err(to_py)?,
            &Site::new(&vec![radius; dim]).map_err(to_py)?,
        )
        .map_err(to_py)?;
        let plan = SamplePlan::random(seed, instances, region);
        let field = self.field();
        let report = check_one_point_consistency(field, &plan)
            .and_then(|r| Ok(r.merge(check_field_consistency(field, &plan)?)))
            .and_then(|r| Ok(r.merge(check_environment_condition(field, &plan)?)))
            .map_err(to_py)?;
        Ok(report
            .identities
            .iter()
            .map(|r| (r.name.to_string(), r.max_residual, r.max_residual <= tol))
            .collect())
    }
}

/// Sufficient contraction check for vacuum pair potentials: `(lhs, passes)`.
#[pyfunction]
#[pyo3(signature = (phi_norm, n_x=1))]
fn remark1_sufficiency(phi_norm: f64, n_x: usize) -> (f64, bool) {
    let r = engine::tef::remark1_sufficiency(phi_norm, n_x);
    (r.lhs, r.pass)
}

#[pymodule]
fn tefcorr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(remark1_sufficiency, m)?)?;
    m.add("TefcorrError", py.get_type::<TefcorrError>())?;
    m.add("NotCertifiedError", py.get_type::<NotCertifiedError>())?;
    m.add("DivergenceError", py.get_type::<DivergenceError>())?;
    m.add("BudgetError", py.get_type::<BudgetError>())?;
    m.add("__version__", engine::io::VERSION)?;
    Ok(())
}
