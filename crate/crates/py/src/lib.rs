//! Python bindings. Tuples are lists of floats; generators are `r x r`
//! nested lists with an ignored diagonal.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sharplll_core::gen::{generate_instance, Family, GenSpec};
use sharplll_core::geometry::{self as geo, GeometryError, Generator, Tuple};
use sharplll_core::lll::{
    self, assignment_from_json, assignment_to_json, format_rational, forward_order, instance_from_json,
    instance_to_json, reversed_order, FixOptions, FixStep, LllError, LllInstance,
};
use sharplll_core::sim;

pyo3::create_exception!(sharplll, TheoremViolation, PyRuntimeError);

fn geo_err(e: GeometryError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn lll_err(e: LllError) -> PyErr {
    match e {
        LllError::TheoremViolation(_) => TheoremViolation::new_err(e.to_string()),
        LllError::PStarViolated { .. } | LllError::IsolationViolation(_) | LllError::InvariantCorruption(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn tuple(coords: Vec<f64>) -> PyResult<Tuple> {
    Tuple::new(coords).map_err(geo_err)
}

fn generator(rows: Vec<Vec<f64>>) -> PyResult<Generator> {
    let r = rows.len();
    if rows.iter().any(|row| row.len() != r) {
        return Err(PyValueError::new_err("generator must be a square matrix"));
    }
    Generator::from_matrix(r, rows.concat()).map_err(geo_err)
}

fn matrix(g: &Generator) -> Vec<Vec<f64>> {
    let r = g.rank();
    (0..r).map(|i| (0..r).map(|j| if i == j { 0.0 } else { g.a(i, j) }).collect()).collect()
}

fn resolve_tol(t: &[f64], tol: Option<f64>) -> f64 {
    tol.unwrap_or_else(|| geo::default_tol(t.len()))
}

/// Membership test. Returns a dict with `member`, `margin`, `witness`
/// (matrix or None), `generated` (the witness tuple or None), `iterations`
/// and `log_margin_bounds`.
#[pyfunction]
#[pyo3(signature = (t, tol=None))]
fn is_representable<'py>(py: Python<'py>, t: Vec<f64>, tol: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
    let tol = resolve_tol(&t, tol);
    let res = geo::is_representable(&tuple(t)?, tol).map_err(geo_err)?;
    let d = PyDict::new(py);
    d.set_item("member", res.member)?;
    d.set_item("margin", res.margin)?;
    d.set_item("witness", res.witness.as_ref().map(matrix))?;
    d.set_item("generated", res.witness.as_ref().map(|g| g.generate().coords().to_vec()))?;
    d.set_item("iterations", res.iterations)?;
    d.set_item("log_margin_bounds", res.log_margin_bounds)?;
    Ok(d)
}

/// Largest `t_k` such that `prefix` with `t_k` inserted at position `k` is
/// representable.
#[pyfunction]
#[pyo3(signature = (prefix, k, tol=None))]
fn maximize_coordinate(prefix: Vec<f64>, k: usize, tol: Option<f64>) -> PyResult<f64> {
    let tol = tol.unwrap_or_else(|| geo::default_tol(prefix.len() + 1));
    geo::maximize_coordinate(&prefix, k, tol).map_err(geo_err)
}

#[pyfunction]
#[pyo3(signature = (t, tol=None))]
fn is_maximal(t: Vec<f64>, tol: Option<f64>) -> PyResult<bool> {
    let tol = resolve_tol(&t, tol);
    geo::is_maximal(&tuple(t)?, tol).map_err(geo_err)
}

/// Closed-form height of the rank-3 boundary above `(a, b)`.
#[pyfunction]
fn boundary_height_r3(a: f64, b: f64) -> PyResult<f64> {
    geo::boundary_height_r3(a, b).map_err(geo_err)
}

/// Lowers coordinate `k` of the tuple generated by `g` and raises the
/// others by moving `delta` of weight off row `k`.
#[pyfunction]
fn trade_epsilon(t: Vec<f64>, g: Vec<Vec<f64>>, k: usize, delta: f64) -> PyResult<Vec<f64>> {
    let out = geo::trade_epsilon(&tuple(t)?, &generator(g)?, k, delta).map_err(geo_err)?;
    Ok(out.coords().to_vec())
}

/// Normal `h` and offset `b` of the hyperplane supporting the region at the
/// maximal tuple `t` generated by `g`.
#[pyfunction]
#[pyo3(signature = (t, g, tol=geo::ORTHOGONALITY_TOL))]
fn supporting_hyperplane(t: Vec<f64>, g: Vec<Vec<f64>>, tol: f64) -> PyResult<(Vec<f64>, f64)> {
    let plane = geo::supporting_hyperplane(&tuple(t)?, &generator(g)?, tol).map_err(geo_err)?;
    Ok((plane.h, plane.b))
}

/// Generated tuple of a generator matrix.
#[pyfunction]
fn generate(g: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    Ok(generator(g)?.generate().coords().to_vec())
}

/// Summary of a convexity probe: `violations`, `worst_margin`,
/// `closed_form_disagreements` and `tol`.
#[pyfunction]
#[pyo3(signature = (r, samples, seed=0, tol=None))]
fn convexity_probe<'py>(
    py: Python<'py>,
    r: usize,
    samples: usize,
    seed: u64,
    tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = geo::ProbeConfig::new(r, samples, seed);
    if let Some(t) = tol {
        cfg.tol = t;
    }
    let rep = geo::convexity_probe_with(&cfg).map_err(geo_err)?;
    let d = PyDict::new(py);
    d.set_item("r", rep.r)?;
    d.set_item("samples", rep.samples)?;
    d.set_item("violations", rep.violations)?;
    d.set_item("worst_margin", rep.worst_margin)?;
    d.set_item("closed_form_disagreements", rep.closed_form_disagreements)?;
    d.set_item("tol", rep.tol)?;
    Ok(d)
}

/// A validated LLL instance.
#[pyclass(frozen, module = "sharplll")]
struct Instance {
    inner: LllInstance,
}

fn run_dict<'py>(
    py: Python<'py>,
    inst: &LllInstance,
    assignment: &[usize],
    steps: &[FixStep],
    min_slack: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let total: Vec<_> = assignment.iter().map(|&s| Some(s)).collect();
    let occurring = inst.verify_assignment(&total).map_err(lll_err)?;
    let d = PyDict::new(py);
    d.set_item("assignment", assignment_to_json(inst, assignment))?;
    d.set_item("symbols", assignment.to_vec())?;
    d.set_item("occurring_events", occurring)?;
    d.set_item("fix_steps", steps.len())?;
    d.set_item("relaxed_witnesses", steps.iter().filter(|s| s.relaxed).count())?;
    d.set_item("identity_holds", steps.iter().all(FixStep::identity_holds))?;
    d.set_item("min_pstar_slack", min_slack)?;
    Ok(d)
}

#[pymethods]
impl Instance {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: instance_from_json(text).map_err(lll_err)? })
    }

    /// Random instance of `family` ("shared-variable-random", "k-sat-like"
    /// or "star-hyperedge") meeting `p * 2^d < 1`.
    #[staticmethod]
    #[pyo3(signature = (family, n, seed=0, max_rank=3, max_domain=4, target_d=4, random_ids=false))]
    fn generate(
        family: &str,
        n: usize,
        seed: u64,
        max_rank: usize,
        max_domain: usize,
        target_d: usize,
        random_ids: bool,
    ) -> PyResult<Self> {
        let family: Family = family.parse().map_err(PyValueError::new_err)?;
        let spec = GenSpec { family, n, max_rank, max_domain, target_d, seed, random_ids };
        Ok(Self { inner: generate_instance(&spec).map_err(lll_err)? })
    }

    fn to_json(&self) -> String {
        instance_to_json(&self.inner)
    }

    #[getter]
    fn num_events(&self) -> usize {
        self.inner.events.len()
    }

    #[getter]
    fn num_variables(&self) -> usize {
        self.inner.variables.len()
    }

    /// `(p, d, p * 2^d, passes)` with rationals as "n/d" strings.
    fn check_criterion(&self) -> (String, usize, String, bool) {
        let c = self.inner.check_criterion();
        (format_rational(&c.p), c.d, format_rational(&c.value), c.pass)
    }

    /// Fixes variables in `order` ("forward", "reversed" or an explicit list
    /// of variable indices).
    #[pyo3(signature = (order=None, tol=None))]
    fn run_sequential<'py>(
        &self,
        py: Python<'py>,
        order: Option<&Bound<'py, PyAny>>,
        tol: Option<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let order = match order {
            None => forward_order(&self.inner),
            Some(o) => match o.extract::<String>() {
                Ok(name) if name == "forward" => forward_order(&self.inner),
                Ok(name) if name == "reversed" => reversed_order(&self.inner),
                Ok(name) => return Err(PyValueError::new_err(format!("unknown order {name:?}"))),
                Err(_) => o.extract::<Vec<usize>>()?,
            },
        };
        let opts = FixOptions { tol, check_each_step: true };
        let run = lll::run_sequential(&self.inner, &order, &opts).map_err(lll_err)?;
        run_dict(py, &self.inner, &run.assignment, &run.steps, run.min_pstar_slack)
    }

    /// Simulated LOCAL run. `ids` defaults to the identifiers in the file.
    /// The result also carries `colors_used`, `coloring_rounds` and
    /// `fixing_rounds`.
    #[pyo3(signature = (ids=None, tol=None))]
    fn run_local<'py>(&self, py: Python<'py>, ids: Option<Vec<u64>>, tol: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
        let ids = ids.unwrap_or_else(|| self.inner.ids());
        let opts = FixOptions { tol, check_each_step: true };
        let run = sim::run_local(&self.inner, &ids, &opts).map_err(lll_err)?;
        let d = run_dict(py, &self.inner, &run.assignment, &run.steps, run.min_pstar_slack)?;
        d.set_item("colors_used", run.log.colors_used)?;
        d.set_item("coloring_rounds", run.log.coloring_rounds)?;
        d.set_item("fixing_rounds", run.log.fixing_rounds)?;
        Ok(d)
    }

    /// Ids of the events occurring under an assignment in file format.
    fn verify(&self, assignment_json: &str) -> PyResult<Vec<u64>> {
        let values = assignment_from_json(&self.inner, assignment_json).map_err(lll_err)?;
        self.inner.verify_assignment(&values).map_err(lll_err)
    }

    fn __repr__(&self) -> String {
        format!("Instance(events={}, variables={})", self.inner.events.len(), self.inner.variables.len())
    }
}

#[pymodule]
fn sharplll(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add("TheoremViolation", m.py().get_type::<TheoremViolation>())?;
    m.add_function(wrap_pyfunction!(is_representable, m)?)?;
    m.add_function(wrap_pyfunction!(maximize_coordinate, m)?)?;
    m.add_function(wrap_pyfunction!(is_maximal, m)?)?;
    m.add_function(wrap_pyfunction!(boundary_height_r3, m)?)?;
    m.add_function(wrap_pyfunction!(trade_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(supporting_hyperplane, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(convexity_probe, m)?)?;
    Ok(())
}
