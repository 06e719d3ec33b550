//! Python bindings for `grover_portfolio`.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;

use grover_portfolio::comparator::{compare_on, ComparatorLayout, Comparison};
use grover_portfolio::oracle::{
    direct_marking_oracle, single_list_oracle, two_list_oracle, ValueTable,
};
use grover_portfolio::portfolio::{self, FrontierTable, PortfolioRecord};
use grover_portfolio::qsim::{apply, StateVector};
use grover_portfolio::search::{self, Backend, EnumerateConfig, GroverRunner, QesConfig};
use grover_portfolio::Error;
use pyo3::exceptions::{PyMemoryError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(m) => PyOSError::new_err(m),
        Error::Capacity { .. } => PyMemoryError::new_err(e.to_string()),
        Error::Internal(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn backend(name: &str) -> PyResult<Backend> {
    name.parse().map_err(py_err)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Efficient-frontier table quantized to the resolution's bit width.
#[pyclass(name = "Frontier", frozen)]
struct PyFrontier {
    inner: FrontierTable,
}

#[pymethods]
impl PyFrontier {
    /// Build from `(id, expected_return, std_dev)` tuples.
    #[new]
    #[pyo3(signature = (rows, resolution = 0.01))]
    fn new(rows: Vec<(u64, f64, f64)>, resolution: f64) -> PyResult<Self> {
        let t = search::t_for_resolution(resolution).map_err(py_err)?.max(1);
        let records = rows
            .into_iter()
            .map(|(id, r, s)| PortfolioRecord::new(id, r, s))
            .collect::<grover_portfolio::Result<Vec<_>>>()
            .map_err(py_err)?;
        let inner = FrontierTable::from_records(records, t).map_err(py_err)?;
        Ok(PyFrontier { inner })
    }

    /// Load an `id,expected_return,std_dev` CSV file.
    #[staticmethod]
    #[pyo3(signature = (path, resolution = 0.01))]
    fn from_csv(path: &str, resolution: f64) -> PyResult<Self> {
        let t = search::t_for_resolution(resolution).map_err(py_err)?.max(1);
        let file = File::open(path).map_err(|e| PyOSError::new_err(format!("{path}: {e}")))?;
        let inner = portfolio::load_frontier(BufReader::new(file), t).map_err(py_err)?;
        Ok(PyFrontier { inner })
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.t()
    }

    #[getter]
    fn padded_n(&self) -> usize {
        self.inner.padded_n()
    }

    #[getter]
    fn ids(&self) -> Vec<u64> {
        self.inner.records().iter().map(|r| r.id).collect()
    }

    #[getter]
    fn quantized_returns(&self) -> Vec<u64> {
        self.inner.returns().values().to_vec()
    }

    #[getter]
    fn quantized_sigmas(&self) -> Vec<u64> {
        self.inner.sigmas().values().to_vec()
    }

    /// Quantized Sharpe values, padding rows included.
    #[pyo3(signature = (rf = 0.0))]
    fn sharpe_values(&self, rf: f64) -> PyResult<Vec<u64>> {
        let s = portfolio::sharpe_values(&self.inner, rf).map_err(py_err)?;
        Ok(s.table.values().to_vec())
    }

    /// Classical reference for `slice`.
    fn classical_filter(&self, return_min: f64, risk_max: f64) -> PyResult<Vec<u64>> {
        let t = self.inner.t();
        let s1 = portfolio::quantize(return_min, t).map_err(py_err)?;
        let s2 = portfolio::quantize(risk_max, t).map_err(py_err)?;
        Ok(self.inner.classical_filter(s1, s2))
    }

    /// Ids with return above `return_min` and risk below `risk_max`.
    #[pyo3(signature = (return_min, risk_max, seed = 0, backend = "effective"))]
    fn slice(
        &self,
        return_min: f64,
        risk_max: f64,
        seed: u64,
        backend: &str,
    ) -> PyResult<Vec<u64>> {
        let config = EnumerateConfig {
            backend: self::backend(backend)?,
            ..EnumerateConfig::default()
        };
        let out =
            portfolio::slice_portfolios(&self.inner, return_min, risk_max, &mut rng(seed), config)
                .map_err(py_err)?;
        Ok(out.ids)
    }

    /// `(id, raw_sharpe, oracle_calls)` of the maximum-Sharpe portfolio.
    #[pyo3(signature = (rf = 0.0, seed = 0, repetitions = 3, backend = "effective"))]
    fn max_sharpe(
        &self,
        rf: f64,
        seed: u64,
        repetitions: usize,
        backend: &str,
    ) -> PyResult<(u64, f64, usize)> {
        let out = portfolio::max_sharpe(
            &self.inner,
            rf,
            &mut rng(seed),
            repetitions,
            self::backend(backend)?,
        )
        .map_err(py_err)?;
        Ok((out.id, out.sharpe_raw, out.outcome.oracle_calls_total()))
    }

    fn __len__(&self) -> usize {
        self.inner.records().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Frontier(rows={}, t={}, padded_n={})",
            self.inner.records().len(),
            self.inner.t(),
            self.inner.padded_n()
        )
    }
}

#[pyfunction]
fn quantize(value: f64, t: usize) -> PyResult<u64> {
    portfolio::quantize(value, t).map_err(py_err)
}

#[pyfunction]
fn t_for_resolution(d: f64) -> PyResult<usize> {
    search::t_for_resolution(d).map_err(py_err)
}

#[pyfunction]
fn iteration_count(n_items: usize, n_solutions: usize) -> PyResult<usize> {
    search::iteration_count(n_items, n_solutions).map_err(py_err)
}

#[pyfunction]
fn grover_angle(n_items: usize, n_solutions: usize) -> PyResult<f64> {
    search::grover_angle(n_items, n_solutions).map_err(py_err)
}

#[pyfunction]
fn m_exact(n_items: usize) -> PyResult<usize> {
    search::m_exact(n_items).map_err(py_err)
}

#[pyfunction]
fn m_detect(n_items: usize) -> PyResult<usize> {
    search::m_detect(n_items).map_err(py_err)
}

#[pyfunction]
fn delta_m_bound(n_items: usize, n_solutions: f64, m: usize) -> f64 {
    search::delta_m_bound(n_items, n_solutions, m)
}

#[pyfunction]
fn gas_budget(n_items: usize) -> f64 {
    search::gas_budget(n_items)
}

/// Qubits of the single-list and two-list oracles for `n` index bits and
/// `t`-bit values.
#[pyfunction]
fn oracle_qubits(n: usize, t: usize) -> PyResult<(usize, usize)> {
    let table = ValueTable::new(t, vec![0; 1 << n]).map_err(py_err)?;
    let single = single_list_oracle(&table, 0).map_err(py_err)?.num_qubits();
    let two = two_list_oracle(&table, &table, 0, 0)
        .map_err(py_err)?
        .num_qubits();
    Ok((single, two))
}

/// `(gt, lt, eq)` outcome bits of the comparator circuits on `a`, `b`.
#[pyfunction]
fn compare(bits: usize, a: u64, b: u64) -> PyResult<(bool, bool, bool)> {
    let l = ComparatorLayout::new(bits).map_err(py_err)?;
    if bits >= 64 || a >> bits != 0 || b >> bits != 0 {
        return Err(PyValueError::new_err(format!(
            "operands must fit in {bits} bits"
        )));
    }
    let run = |cmp| -> PyResult<bool> {
        let c = compare_on(cmp, l.num_qubits(), &l.a(), &l.b(), l.outcome()).map_err(py_err)?;
        let s =
            StateVector::new_basis_state(l.num_qubits(), l.encode(a, b, false)).map_err(py_err)?;
        let out = apply(&s, &c).map_err(py_err)?;
        Ok(out.probability(l.encode(a, b, true)) > 0.5)
    };
    Ok((
        run(Comparison::Greater)?,
        run(Comparison::Less)?,
        run(Comparison::Equal)?,
    ))
}

/// Index distribution after `iterations` Grover steps with the given
/// indices marked.
#[pyfunction]
#[pyo3(signature = (n, marked, iterations, backend = "effective"))]
fn grover_distribution(
    n: usize,
    marked: BTreeSet<usize>,
    iterations: usize,
    backend: &str,
) -> PyResult<Vec<f64>> {
    let oracle = direct_marking_oracle(n, &marked).map_err(py_err)?;
    GroverRunner::new(&oracle, self::backend(backend)?)
        .and_then(|r| r.index_distribution(iterations))
        .map_err(py_err)
}

/// Exact counting-register distribution for `m` counting qubits.
#[pyfunction]
#[pyo3(signature = (n, marked, m, backend = "effective"))]
fn counting_distribution(
    n: usize,
    marked: BTreeSet<usize>,
    m: usize,
    backend: &str,
) -> PyResult<Vec<f64>> {
    let oracle = direct_marking_oracle(n, &marked).map_err(py_err)?;
    search::counting_distribution(&oracle, m, self::backend(backend)?).map_err(py_err)
}

/// Exponential search over marked indices: `(found_index or None, calls)`.
#[pyfunction]
#[pyo3(signature = (n, marked, seed = 0, budget = None))]
fn exponential_search(
    n: usize,
    marked: BTreeSet<usize>,
    seed: u64,
    budget: Option<usize>,
) -> PyResult<(Option<usize>, usize)> {
    let oracle = direct_marking_oracle(n, &marked).map_err(py_err)?;
    let mut config = QesConfig::for_size(oracle.search_size(), Backend::Effective);
    if let Some(b) = budget {
        config.budget = b;
    }
    let out = search::qes(&oracle, &mut rng(seed), config).map_err(py_err)?;
    Ok((out.found_index, out.oracle_calls))
}

/// Run the command-line interface in-process: `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("grover-portfolio".to_string()).chain(args);
    let code = grover_portfolio::cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8_lossy(&out).into_owned(),
        String::from_utf8_lossy(&err).into_owned(),
    )
}

#[pymodule]
fn grover_portfolio_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFrontier>()?;
    m.add_function(wrap_pyfunction!(quantize, m)?)?;
    m.add_function(wrap_pyfunction!(t_for_resolution, m)?)?;
    m.add_function(wrap_pyfunction!(iteration_count, m)?)?;
    m.add_function(wrap_pyfunction!(grover_angle, m)?)?;
    m.add_function(wrap_pyfunction!(m_exact, m)?)?;
    m.add_function(wrap_pyfunction!(m_detect, m)?)?;
    m.add_function(wrap_pyfunction!(delta_m_bound, m)?)?;
    m.add_function(wrap_pyfunction!(gas_budget, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_qubits, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(grover_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(counting_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(exponential_search, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
