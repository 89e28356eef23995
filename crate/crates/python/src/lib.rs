//! Python bindings for the interval bound tightener.
//!
//! Usage from Python:
//!
//! ```python
//! import egraph_bounds_py as eb
//! report = eb.analyze("(/ x (+ x y))", {"x": (1, 2), "y": (1, 2)})
//! print(report.initial, report.improved, report.width_change)
//! ```

use std::collections::BTreeMap;
use std::time::Duration;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use egraph_bounds::cli::{report_to_json, Outcome};
use egraph_bounds::dot::to_dot;
use egraph_bounds::expr::parse_rational;
use egraph_bounds::{
    extract_witness, meet, parse_manifest, round_outward, rule_set, saturate, ClassId, DomainEnv,
    EGraph, Error, Expr, Interval, Rational, Report, RunConfig, Side,
};

create_exception!(egraph_bounds_py, EmptyMeetError, PyValueError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::EmptyMeet { .. } => EmptyMeetError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Closed interval with outward-rounded float endpoints.
#[pyclass(name = "Interval", module = "egraph_bounds_py", frozen, eq, skip_from_py_object)]
#[derive(Clone, Copy, PartialEq)]
struct PyInterval(Interval);

#[pymethods]
impl PyInterval {
    #[new]
    fn new(lo: f64, hi: f64) -> PyResult<Self> {
        Interval::new(lo, hi).map(PyInterval).map_err(to_py)
    }

    #[getter]
    fn lo(&self) -> f64 {
        self.0.lo()
    }

    #[getter]
    fn hi(&self) -> f64 {
        self.0.hi()
    }

    fn width(&self) -> f64 {
        self.0.width()
    }

    fn contains(&self, x: f64) -> bool {
        self.0.contains(x)
    }

    fn is_subset(&self, other: &PyInterval) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Intersection; raises EmptyMeetError when the intervals are disjoint.
    fn meet(&self, other: &PyInterval) -> PyResult<PyInterval> {
        meet(&self.0, &other.0).map(PyInterval).map_err(to_py)
    }

    fn hull(&self, other: &PyInterval) -> PyInterval {
        PyInterval(self.0.hull(&other.0))
    }

    fn __repr__(&self) -> String {
        format!("Interval({}, {})", self.0.lo(), self.0.hi())
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

/// Parsed expression.
#[pyclass(name = "Expr", module = "egraph_bounds_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyExpr(Expr);

#[pymethods]
impl PyExpr {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<PyExpr> {
        egraph_bounds::parse(text).map(PyExpr).map_err(to_py)
    }

    fn size(&self) -> usize {
        self.0.size()
    }

    fn depth(&self) -> usize {
        self.0.depth()
    }

    fn vars(&self) -> Vec<String> {
        self.0.vars().iter().map(|s| s.to_string()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Expr({:?})", self.0.to_string())
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __eq__(&self, other: &PyExpr) -> bool {
        self.0 == other.0
    }
}

fn expr_arg(obj: &Bound<'_, PyAny>) -> PyResult<Expr> {
    if let Ok(e) = obj.extract::<PyRef<'_, PyExpr>>() {
        return Ok(e.0.clone());
    }
    let text: String = obj.extract()?;
    egraph_bounds::parse(&text).map_err(to_py)
}

fn endpoint(obj: &Bound<'_, PyAny>) -> PyResult<Rational> {
    if let Ok(text) = obj.extract::<String>() {
        return match parse_rational(&text) {
            Some(r) => r.map_err(to_py),
            None => Err(PyValueError::new_err(format!("`{text}` is not a rational number"))),
        };
    }
    let x: f64 = obj.extract()?;
    Rational::from_float(x).ok_or_else(|| PyValueError::new_err(format!("{x} is not finite")))
}

/// Domains as a mapping from names to `(lo, hi)`; endpoints may be numbers
/// or rational strings such as "1/3".
fn domain_arg(domains: &BTreeMap<String, (Bound<'_, PyAny>, Bound<'_, PyAny>)>) -> PyResult<DomainEnv> {
    let mut env = DomainEnv::new();
    for (name, (lo, hi)) in domains {
        let (lo, hi) = (endpoint(lo)?, endpoint(hi)?);
        if lo > hi {
            return Err(PyValueError::new_err(format!("empty domain for {name}")));
        }
        env.insert(name, round_outward(&lo, &hi));
    }
    Ok(env)
}

fn config(
    max_iters: usize,
    max_nodes: usize,
    timeout: f64,
    rules: Option<&str>,
) -> PyResult<RunConfig> {
    if max_nodes == 0 || !(timeout.is_finite() && timeout > 0.0) {
        return Err(PyValueError::new_err("limits must be positive"));
    }
    let rules = match rules {
        Some(text) => parse_manifest(text).map_err(to_py)?,
        None => rule_set(),
    };
    Ok(RunConfig {
        max_iterations: max_iters,
        max_nodes,
        time_limit: Duration::from_secs_f64(timeout),
        ..RunConfig::default()
    }
    .with_rules(rules))
}

/// Analysis result.
#[pyclass(name = "Report", module = "egraph_bounds_py", frozen)]
struct PyReport {
    env: DomainEnv,
    report: Report,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn expr(&self) -> String {
        self.report.expr.to_string()
    }

    #[getter]
    fn initial(&self) -> PyInterval {
        PyInterval(self.report.initial)
    }

    #[getter]
    fn improved(&self) -> PyInterval {
        PyInterval(self.report.improved)
    }

    /// Relative width change as a fraction, or None when undefined.
    #[getter]
    fn width_change(&self) -> Option<f64> {
        self.report.width_change
    }

    /// `(expression, attained)` for the lower bound.
    #[getter]
    fn witness_lo(&self) -> (String, bool) {
        let w = &self.report.witness_lo;
        (w.expr.to_string(), w.attained)
    }

    #[getter]
    fn witness_hi(&self) -> (String, bool) {
        let w = &self.report.witness_hi;
        (w.expr.to_string(), w.attained)
    }

    #[getter]
    fn stop_reason(&self) -> &'static str {
        self.report.stop_reason.name()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.report.stats.iterations
    }

    #[getter]
    fn classes(&self) -> usize {
        self.report.stats.classes
    }

    #[getter]
    fn nodes(&self) -> usize {
        self.report.stats.nodes
    }

    fn to_json(&self) -> String {
        report_to_json(&Outcome {
            env: self.env.clone(),
            report: self.report.clone(),
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Report(expr={:?}, initial={}, improved={})",
            self.report.expr.to_string(),
            self.report.initial,
            self.report.improved
        )
    }
}

/// Saturates `expr` over `domains` and reports initial and improved bounds.
#[pyfunction]
#[pyo3(signature = (expr, domains, max_iters=30, max_nodes=50_000, timeout=10.0, rules=None))]
fn analyze(
    py: Python<'_>,
    expr: &Bound<'_, PyAny>,
    domains: BTreeMap<String, (Bound<'_, PyAny>, Bound<'_, PyAny>)>,
    max_iters: usize,
    max_nodes: usize,
    timeout: f64,
    rules: Option<&str>,
) -> PyResult<PyReport> {
    let e = expr_arg(expr)?;
    let env = domain_arg(&domains)?;
    let cfg = config(max_iters, max_nodes, timeout, rules)?;
    let report = py
        .detach(|| egraph_bounds::analyze(&e, &env, &cfg))
        .map_err(to_py)?;
    Ok(PyReport { env, report })
}

#[pyfunction]
fn parse(text: &str) -> PyResult<PyExpr> {
    PyExpr::parse(text)
}

#[pyfunction]
fn natural_extension(
    expr: &Bound<'_, PyAny>,
    domains: BTreeMap<String, (Bound<'_, PyAny>, Bound<'_, PyAny>)>,
) -> PyResult<PyInterval> {
    let e = expr_arg(expr)?;
    let env = domain_arg(&domains)?;
    egraph_bounds::natural_extension(&e, &env)
        .map(PyInterval)
        .map_err(to_py)
}

/// Grid plus random sampling estimate of the true range.
#[pyfunction]
#[pyo3(signature = (expr, domains, n=100))]
fn sample_range(
    expr: &Bound<'_, PyAny>,
    domains: BTreeMap<String, (Bound<'_, PyAny>, Bound<'_, PyAny>)>,
    n: usize,
) -> PyResult<PyInterval> {
    let e = expr_arg(expr)?;
    let env = domain_arg(&domains)?;
    egraph_bounds::sample_range(&e, &env, n)
        .map(PyInterval)
        .map_err(to_py)
}

#[pyfunction]
fn rule_names() -> Vec<String> {
    rule_set().into_iter().map(|r| r.name).collect()
}

#[pyfunction]
fn default_manifest() -> &'static str {
    egraph_bounds::rules::DEFAULT_MANIFEST
}

/// E-graph with the interval analysis. Class ids are plain integers.
#[pyclass(name = "EGraph", module = "egraph_bounds_py")]
struct PyEGraph(EGraph);

impl PyEGraph {
    fn id(&self, c: usize) -> PyResult<ClassId> {
        if c < self.0.id_bound() {
            Ok(ClassId::from_index(c))
        } else {
            Err(PyValueError::new_err(format!("no class {c}")))
        }
    }
}

#[pymethods]
impl PyEGraph {
    #[new]
    fn new(domains: BTreeMap<String, (Bound<'_, PyAny>, Bound<'_, PyAny>)>) -> PyResult<Self> {
        Ok(PyEGraph(EGraph::new(domain_arg(&domains)?)))
    }

    /// Adds every subterm of `expr`; returns the root class id.
    fn add(&mut self, expr: &Bound<'_, PyAny>) -> PyResult<usize> {
        let e = expr_arg(expr)?;
        self.0.add_expr(&e).map(ClassId::index).map_err(to_py)
    }

    fn union(&mut self, a: usize, b: usize) -> PyResult<usize> {
        let (a, b) = (self.id(a)?, self.id(b)?);
        self.0.union(a, b).map(ClassId::index).map_err(to_py)
    }

    fn rebuild(&mut self) -> PyResult<usize> {
        self.0.rebuild().map_err(to_py)
    }

    fn find(&self, c: usize) -> PyResult<usize> {
        Ok(self.0.find(self.id(c)?).index())
    }

    fn data(&self, c: usize) -> PyResult<PyInterval> {
        Ok(PyInterval(self.0.data(self.id(c)?)))
    }

    fn number_of_classes(&self) -> usize {
        self.0.number_of_classes()
    }

    fn total_number_of_nodes(&self) -> usize {
        self.0.total_number_of_nodes()
    }

    /// Runs equality saturation; returns `(stop_reason, iterations)`.
    #[pyo3(signature = (max_iters=30, max_nodes=50_000, timeout=10.0, rules=None))]
    fn saturate(
        &mut self,
        max_iters: usize,
        max_nodes: usize,
        timeout: f64,
        rules: Option<&str>,
    ) -> PyResult<(&'static str, usize)> {
        let cfg = config(max_iters, max_nodes, timeout, rules)?;
        let (reason, stats) = saturate(&mut self.0, &cfg).map_err(to_py)?;
        Ok((reason.name(), stats.iterations))
    }

    /// `(expression, attained)` for the given side, "lower" or "upper".
    #[pyo3(signature = (c, side="lower"))]
    fn extract_witness(&self, c: usize, side: &str) -> PyResult<(String, bool)> {
        let side = match side {
            "lower" => Side::Lower,
            "upper" => Side::Upper,
            other => return Err(PyValueError::new_err(format!("unknown side `{other}`"))),
        };
        let w = extract_witness(&self.0, self.id(c)?, side);
        Ok((w.expr.to_string(), w.attained))
    }

    #[pyo3(signature = (root=None))]
    fn to_dot(&self, root: Option<usize>) -> PyResult<String> {
        let root = root.map(|r| self.id(r)).transpose()?;
        Ok(to_dot(&self.0, root))
    }
}

#[pymodule]
fn egraph_bounds_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInterval>()?;
    m.add_class::<PyExpr>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyEGraph>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(natural_extension, m)?)?;
    m.add_function(wrap_pyfunction!(sample_range, m)?)?;
    m.add_function(wrap_pyfunction!(rule_names, m)?)?;
    m.add_function(wrap_pyfunction!(default_manifest, m)?)?;
    m.add("EmptyMeetError", m.py().get_type::<EmptyMeetError>())?;
    Ok(())
}
