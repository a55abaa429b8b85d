//! Python bindings: simulate panels, run the estimation pipeline and call
//! the estimators directly.

use nalgebra::DMatrix;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyTuple};
use serde_json::{json, Value};

use peerfx_core::design::{describe_exposure, Behavior, DesignOptions, DrawPolicy, Scheme};
use peerfx_core::estimator::{ols as core_ols, tsls as core_tsls, FitOptions, VcovMode};
use peerfx_core::linalg::RowMatrix;
use peerfx_core::panel::{load_match_rows, write_match_rows, ColumnSchema};
use peerfx_core::pipeline::{estimate as core_estimate, EstimateOptions};
use peerfx_core::simulator::{self, SimConfig, SimMode};
use peerfx_core::within::Outcome;
use peerfx_core::{Error, ErrorClass, MatchPanel};

fn to_py_err(e: Error) -> PyErr {
    match e.class() {
        ErrorClass::Numerical => PyArithmeticError::new_err(e.to_string()),
        ErrorClass::Io => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (value.to_string(),))
}

fn py_to_json(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn serialize<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(v).map_err(|e| to_py_err(e.into()))?;
    json_to_py(py, &value)
}

fn rows_to_matrix(rows: Option<Vec<Vec<f64>>>, n: usize, what: &str) -> PyResult<RowMatrix> {
    let Some(rows) = rows else { return Ok(RowMatrix::zeros(n, 0)) };
    if rows.len() != n {
        return Err(PyValueError::new_err(format!("{what} has {} rows, expected {n}", rows.len())));
    }
    if rows.is_empty() {
        return Ok(RowMatrix::zeros(0, 0));
    }
    let k = rows[0].len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(PyValueError::new_err(format!("{what} rows have unequal lengths")));
    }
    Ok(RowMatrix::from_rows(&rows))
}

fn default_names(names: Option<Vec<String>>, prefix: &str, k: usize) -> Vec<String> {
    names.unwrap_or_else(|| (0..k).map(|i| format!("{prefix}{i}")).collect())
}

/// A validated match panel.
#[pyclass(name = "Panel", module = "peerfx", frozen)]
struct PyPanel {
    inner: MatchPanel,
}

#[pymethods]
impl PyPanel {
    /// Loads a panel CSV with the default column names.
    #[staticmethod]
    fn read_csv(path: &str) -> PyResult<Self> {
        let file = std::fs::File::open(path).map_err(|e| to_py_err(e.into()))?;
        let inner = load_match_rows(std::io::BufReader::new(file), &ColumnSchema::default()).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        let file = std::fs::File::create(path).map_err(|e| to_py_err(e.into()))?;
        write_match_rows(&self.inner, std::io::BufWriter::new(file), &ColumnSchema::default()).map_err(to_py_err)
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn n_players(&self) -> usize {
        self.inner.n_players()
    }

    #[getter]
    fn n_matches(&self) -> usize {
        self.inner.n_matches()
    }

    #[getter]
    fn has_party_column(&self) -> bool {
        self.inner.has_party_column()
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!(
            "Panel(rows={}, players={}, matches={})",
            self.inner.n_rows(),
            self.inner.n_players(),
            self.inner.n_matches()
        )
    }

    /// Exposure probabilities by context and result.
    #[pyo3(signature = (scheme = "opp_team", draws = "exclude"))]
    fn describe<'py>(&self, py: Python<'py>, scheme: &str, draws: &str) -> PyResult<Bound<'py, PyAny>> {
        let scheme = Scheme::parse(scheme).map_err(to_py_err)?;
        let draws = DrawPolicy::parse(draws).map_err(to_py_err)?;
        let table = describe_exposure(&self.inner, scheme, None, draws).map_err(to_py_err)?;
        serialize(py, &table)
    }

    /// Full pipeline: instruments, restrictions, demeaning, 2SLS and OLS.
    #[pyo3(signature = (
        scheme = "opp_team",
        vcov = "hc1",
        outcomes = vec!["engagement".to_string(), "propagation".to_string()],
        interactions = true,
        behavior = "binary",
        draws = "exclude",
        ols_baseline = true,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn estimate<'py>(
        &self,
        py: Python<'py>,
        scheme: &str,
        vcov: &str,
        outcomes: Vec<String>,
        interactions: bool,
        behavior: &str,
        draws: &str,
        ols_baseline: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mut design = DesignOptions::new(Scheme::parse(scheme).map_err(to_py_err)?);
        design.interactions = interactions;
        design.behavior = Behavior::parse(behavior).map_err(to_py_err)?;
        design.draw_policy = DrawPolicy::parse(draws).map_err(to_py_err)?;
        let mut opts = EstimateOptions::new(design);
        opts.vcov = VcovMode::parse(vcov).map_err(to_py_err)?;
        opts.ols_baseline = ols_baseline;
        let outcomes = outcomes
            .iter()
            .map(|o| Outcome::parse(o))
            .collect::<Result<Vec<_>, _>>()
            .map_err(to_py_err)?;
        let report = py.detach(|| core_estimate(&self.inner, &opts, &outcomes)).map_err(to_py_err)?;
        serialize(py, &report)
    }
}

/// Simulates a panel; returns `(Panel, truth)`.
///
/// Keyword arguments are simulator parameters; `beta` may be a number or a
/// dict of `[loss, win]` pairs per context.
#[pyfunction]
#[pyo3(signature = (**kwargs))]
fn simulate<'py>(py: Python<'py>, kwargs: Option<&Bound<'py, PyDict>>) -> PyResult<Bound<'py, PyTuple>> {
    let given = match kwargs {
        Some(k) => py_to_json(k.as_any())?,
        None => json!({}),
    };
    let Value::Object(given) = given else { unreachable!("kwargs is a dict") };
    let mode = match given.get("mode") {
        Some(Value::String(m)) => SimMode::parse(m).map_err(to_py_err)?,
        Some(other) => return Err(PyValueError::new_err(format!("mode must be a string, got {other}"))),
        None => SimMode::default(),
    };
    let mut cfg = serde_json::to_value(SimConfig::for_mode(mode)).map_err(|e| to_py_err(e.into()))?;
    for (k, v) in given {
        let v = match (k.as_str(), v) {
            ("mode", _) => Value::String(mode.as_str().into()),
            ("beta", Value::Number(n)) => {
                let b = n.as_f64().unwrap_or(f64::NAN);
                json!({"opponents": [b, b], "diff_party": [b, b], "same_party": [b, b]})
            }
            (_, v) => v,
        };
        cfg[k] = v;
    }
    let cfg: SimConfig = serde_json::from_value(cfg)
        .map_err(|e| PyValueError::new_err(format!("invalid simulator configuration: {e}")))?;
    let (panel, truth) = py.detach(|| simulator::simulate(&cfg)).map_err(to_py_err)?;
    let truth = json_to_py(py, &truth.sidecar())?;
    let panel = Bound::new(py, PyPanel { inner: panel })?;
    PyTuple::new(py, [panel.into_any(), truth])
}

/// OLS with classical, HC1 or player-clustered errors; `x` is a list of rows.
#[pyfunction]
#[pyo3(signature = (y, x, names = None, vcov = "hc1", groups = None))]
fn ols<'py>(
    py: Python<'py>,
    y: Vec<f64>,
    x: Vec<Vec<f64>>,
    names: Option<Vec<String>>,
    vcov: &str,
    groups: Option<Vec<u32>>,
) -> PyResult<Bound<'py, PyAny>> {
    let x = rows_to_matrix(Some(x), y.len(), "x")?;
    let names = default_names(names, "x", x.ncols());
    let opts = FitOptions { vcov: VcovMode::parse(vcov).map_err(to_py_err)?, groups: groups.as_deref(), ..FitOptions::default() };
    let fit = core_ols(&y, &x, &names, &opts).map_err(to_py_err)?;
    serialize(py, &fit)
}

/// Two-stage least squares of `y` on endogenous `x` and exogenous `w`,
/// instrumenting `x` with `z`; matrices are lists of rows.
#[pyfunction]
#[pyo3(signature = (y, x, z, w = None, vcov = "hc1", groups = None))]
#[allow(clippy::too_many_arguments)]
fn tsls<'py>(
    py: Python<'py>,
    y: Vec<f64>,
    x: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    w: Option<Vec<Vec<f64>>>,
    vcov: &str,
    groups: Option<Vec<u32>>,
) -> PyResult<Bound<'py, PyAny>> {
    let n = y.len();
    let x = rows_to_matrix(Some(x), n, "x")?;
    let z = rows_to_matrix(Some(z), n, "z")?;
    let w = rows_to_matrix(w, n, "w")?;
    let opts = FitOptions { vcov: VcovMode::parse(vcov).map_err(to_py_err)?, groups: groups.as_deref(), ..FitOptions::default() };
    let fit = core_tsls(
        &y,
        &x,
        &w,
        &z,
        &default_names(None, "x", x.ncols()),
        &default_names(None, "w", w.ncols()),
        &default_names(None, "z", z.ncols()),
        &opts,
    )
    .map_err(to_py_err)?;
    serialize(py, &fit)
}

/// Probability limit of the naive OLS slope in the two-player reflection design.
#[pyfunction]
#[pyo3(signature = (beta, var_alpha = 1.0, var_eps = 1.0))]
fn ols_plim_reflection(beta: f64, var_alpha: f64, var_eps: f64) -> PyResult<f64> {
    simulator::ols_plim_reflection(beta, var_alpha, var_eps).map_err(to_py_err)
}

/// Solves `t = a + beta·B·t + e` for one match.
#[pyfunction]
fn equilibrium_solve(a: Vec<f64>, e: Vec<f64>, beta: f64, b: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let n = a.len();
    if e.len() != n || b.len() != n || b.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err(format!("a, e and b must be {n}, {n} and {n}×{n}")));
    }
    let m = DMatrix::from_fn(n, n, |i, j| b[i][j]);
    simulator::equilibrium_solve(&a, &e, beta, &m).map_err(to_py_err)
}

#[pymodule]
fn peerfx(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPanel>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(ols, m)?)?;
    m.add_function(wrap_pyfunction!(tsls, m)?)?;
    m.add_function(wrap_pyfunction!(ols_plim_reflection, m)?)?;
    m.add_function(wrap_pyfunction!(equilibrium_solve, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
