//! Python bindings: shifts, potentials and the diagnostics built on them.
//!
//! States are passed as their labels (`"r"`, `"v(3,1,2)"`, `"2"`), words as
//! lists of labels, and composite results as dicts.

use num_bigint::BigUint;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cms_core::families::{self, Preset};
use cms_core::infinity::{self, CountMethod, InfinityProfile};
use cms_core::spec::{parse_potential, parse_shift};
use cms_core::thermo::{self, Condition, ReturnData, SeriesValue};
use cms_core::{numeric, CmsError, ReturnLaw, StateId, SumMode, Word};

create_exception!(cms_shift, RefusedError, PyRuntimeError, "An unbounded or oversized computation was refused.");

fn py_err(e: CmsError) -> PyErr {
    if e.is_refusal() {
        RefusedError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn state(label: &str) -> PyResult<StateId> {
    label.parse().map_err(py_err)
}

fn word(labels: Vec<String>) -> PyResult<Word> {
    labels.iter().map(|s| state(s)).collect::<PyResult<Vec<_>>>().map(Word)
}

fn labels(w: &Word) -> Vec<String> {
    w.states().iter().map(ToString::to_string).collect()
}

/// Loop-count sequence `a(n)` of a bouquet.
#[pyclass(frozen, name = "LoopCounts", module = "cms_shift")]
struct PyLoopCounts(cms_core::LoopCounts);

#[pymethods]
impl PyLoopCounts {
    #[staticmethod]
    fn ones() -> Self {
        PyLoopCounts(cms_core::LoopCounts::ones())
    }

    #[staticmethod]
    fn geometric(r: u64) -> Self {
        PyLoopCounts(cms_core::LoopCounts::geometric(r))
    }

    #[staticmethod]
    fn list(values: Vec<u64>) -> Self {
        PyLoopCounts(cms_core::LoopCounts::list(values))
    }

    #[staticmethod]
    fn double_exponential() -> Self {
        PyLoopCounts(cms_core::LoopCounts::double_exponential())
    }

    /// The same counts with `a(1)` replaced in the graph.
    fn with_first(&self, a1: u64) -> Self {
        PyLoopCounts(self.0.clone().with_first(a1))
    }

    fn count(&self, n: usize) -> BigUint {
        self.0.count(n)
    }

    /// Topological entropy of the bouquet.
    #[pyo3(signature = (tol=1e-12))]
    fn htop(&self, tol: f64) -> PyResult<f64> {
        families::htop_solve(&self.0, tol).map_err(py_err)
    }

    /// `limsup (1/n) log a(n)`.
    fn hinf_oracle(&self) -> f64 {
        infinity::bouquet_hinf_oracle(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("LoopCounts({:?})", self.0.form())
    }
}

/// A transition system: a finite 0/1 matrix or a bouquet.
#[pyclass(frozen, name = "Shift", module = "cms_shift")]
struct PyShift(cms_core::TransitionSystem);

#[pymethods]
impl PyShift {
    #[staticmethod]
    fn finite(matrix: Vec<Vec<u8>>) -> PyResult<Self> {
        cms_core::TransitionSystem::finite(matrix).map(PyShift).map_err(py_err)
    }

    #[staticmethod]
    fn full(k: usize) -> Self {
        PyShift(cms_core::TransitionSystem::full_shift(k))
    }

    #[staticmethod]
    #[pyo3(signature = (loops, truncate=None))]
    fn bouquet(loops: &PyLoopCounts, truncate: Option<usize>) -> PyResult<Self> {
        match truncate {
            Some(l) => cms_core::TransitionSystem::truncated_bouquet(loops.0.clone(), l),
            None => cms_core::TransitionSystem::bouquet(loops.0.clone()),
        }
        .map(PyShift)
        .map_err(py_err)
    }

    /// Builds a shift from its JSON spec.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        parse_shift(text).and_then(|s| s.build()).map(PyShift).map_err(py_err)
    }

    fn is_bouquet(&self) -> bool {
        self.0.is_bouquet()
    }

    fn states_up_to(&self, q: u128) -> PyResult<Vec<String>> {
        let states = self.0.states_up_to(q).map_err(py_err)?;
        Ok(states.iter().map(ToString::to_string).collect())
    }

    fn has_edge(&self, x: &str, y: &str) -> PyResult<bool> {
        Ok(self.0.has_edge(&state(x)?, &state(y)?))
    }

    fn is_admissible(&self, w: Vec<String>) -> PyResult<bool> {
        cms_core::is_admissible(&self.0, &word(w)?).map_err(py_err)
    }

    /// Period-`n` points in the cylinder `[a]`, as period words.
    fn periodic_points(&self, n: usize, a: &str) -> PyResult<Vec<Vec<String>>> {
        let it = cms_core::periodic_points(&self.0, n, state(a)?).map_err(py_err)?;
        Ok(it.map(|w| labels(&w)).collect())
    }

    fn shortest_connector(&self, a: &str, b: &str) -> PyResult<Vec<String>> {
        let w = cms_core::shortest_connector(&self.0, state(a)?, state(b)?).map_err(py_err)?;
        Ok(labels(&w))
    }

    /// Words of `length` symbols with both ends of order `<= q`; `None`
    /// above `bound`.
    #[pyo3(signature = (q, length, bound=None))]
    fn f_property_count(&self, q: u128, length: usize, bound: Option<BigUint>) -> Option<BigUint> {
        let bound = bound.unwrap_or_else(|| BigUint::from(u128::MAX));
        cms_core::f_property_count(&self.0, q, length, &bound).exact().cloned()
    }
}

/// A potential depending on the first `memory` coordinates.
#[pyclass(frozen, name = "Potential", module = "cms_shift")]
struct PyPotential(cms_core::Potential);

#[pymethods]
impl PyPotential {
    #[staticmethod]
    fn zero() -> Self {
        PyPotential(cms_core::Potential::zero())
    }

    #[staticmethod]
    fn constant(c: f64) -> Self {
        PyPotential(cms_core::Potential::constant(c))
    }

    /// Table potential: `entries` maps words of `memory` labels to values.
    #[staticmethod]
    fn from_table(memory: usize, default: f64, entries: Vec<(Vec<String>, f64)>) -> PyResult<Self> {
        let entries = entries
            .into_iter()
            .map(|(w, v)| word(w).map(|w| (w.0, v)))
            .collect::<PyResult<Vec<_>>>()?;
        cms_core::Potential::from_table(memory, default, entries).map(PyPotential).map_err(py_err)
    }

    /// Builds a potential from its JSON spec on the shift described by
    /// `shift_json`.
    #[staticmethod]
    fn from_json(text: &str, shift_json: &str) -> PyResult<Self> {
        let shift = parse_shift(shift_json).map_err(py_err)?;
        let (phi, _) = parse_potential(text).and_then(|p| p.build(&shift)).map_err(py_err)?;
        Ok(PyPotential(phi))
    }

    fn memory(&self) -> usize {
        self.0.memory()
    }

    fn value(&self, window: Vec<String>) -> PyResult<f64> {
        Ok(self.0.value(&word(window)?.0))
    }

    /// `S_n phi` along `w`: at the periodic point `(w w ...)` when
    /// `periodic`, otherwise over the cylinder (midpoint of its range when
    /// the cylinder does not determine it).
    #[pyo3(signature = (shift, w, periodic=false))]
    fn birkhoff_sum(&self, shift: &PyShift, w: Vec<String>, periodic: bool) -> PyResult<f64> {
        let mode = if periodic { SumMode::PeriodicWrap } else { SumMode::OpenCylinder };
        self.0.birkhoff_sum(&shift.0, &word(w)?, mode).map(|b| b.value()).map_err(py_err)
    }
}

/// The graph, potential and return law of a named preset. Abstract presets
/// return `None` for the shift and potential.
#[pyfunction]
#[pyo3(signature = (name, truncate=None))]
fn preset<'py>(
    py: Python<'py>,
    name: &str,
    truncate: Option<usize>,
) -> PyResult<(Option<PyShift>, Option<PyPotential>, Bound<'py, PyDict>)> {
    let p = families::preset(name, truncate).map_err(py_err)?;
    let law = law_dict(py, p.law())?;
    Ok(match p {
        Preset::Graph(b) => (Some(PyShift(b.system)), Some(PyPotential(b.potential)), law),
        Preset::Abstract { .. } => (None, None, law),
    })
}

#[pyfunction]
fn presets() -> Vec<(&'static str, &'static str)> {
    families::PRESETS.to_vec()
}

fn law_dict<'py>(py: Python<'py>, law: &ReturnLaw) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    match law {
        ReturnLaw::PowerLaw { log_c, rate, beta } => {
            d.set_item("log_c", log_c)?;
            d.set_item("rate", rate)?;
            d.set_item("beta", beta)?;
        }
        ReturnLaw::Table(v) => d.set_item("log_weights", v.clone())?,
    }
    Ok(d)
}

fn law_from(log_weights: Option<Vec<f64>>, power: Option<(f64, f64, f64)>) -> PyResult<ReturnData> {
    match (log_weights, power) {
        (Some(v), None) => Ok(ReturnData::Numeric(v)),
        (None, Some((log_c, rate, beta))) => Ok(ReturnData::Law(ReturnLaw::PowerLaw { log_c, rate, beta })),
        _ => Err(PyValueError::new_err("give exactly one of log_weights or power_law=(log_c, rate, beta)")),
    }
}

fn series(v: SeriesValue) -> Option<f64> {
    v.as_f64()
}

/// `log Z_n` and `log Z*_n` at the state of order one.
#[pyfunction]
#[pyo3(signature = (shift, phi, horizon, brute_force=false))]
fn partition_sums<'py>(
    py: Python<'py>,
    shift: &PyShift,
    phi: &PyPotential,
    horizon: usize,
    brute_force: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let sums = if brute_force {
        let base = shift.0.state_at(1).ok_or_else(|| PyValueError::new_err("empty shift"))?;
        thermo::partition_sums_bruteforce(&shift.0, &phi.0, base, horizon)
    } else {
        thermo::partition_sums(&shift.0, &phi.0, horizon)
    }
    .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("base", sums.base.to_string())?;
    d.set_item("log_z", sums.log_z.clone())?;
    d.set_item("log_zstar", sums.log_zstar.clone())?;
    d.set_item("renewal_defect", sums.renewal_defect())?;
    Ok(d)
}

/// Partition sums from return weights `log Z*_n` by the renewal recursion.
#[pyfunction]
fn renewal_sums(log_wstar: Vec<f64>) -> PyResult<Vec<f64>> {
    let n = log_wstar.len();
    thermo::partition_sums_renewal(&log_wstar, n).map(|s| s.log_z).map_err(py_err)
}

/// Tail-fit pressure estimate from `log Z_n`.
#[pyfunction]
fn pressure(log_z: Vec<f64>) -> PyResult<f64> {
    thermo::pressure_from_logs(&log_z).map(|p| p.value).map_err(py_err)
}

#[pyfunction]
fn chi_per(shift: &PyShift, phi: &PyPotential, horizon: usize) -> PyResult<f64> {
    thermo::chi_per(&shift.0, &phi.0, horizon).map_err(py_err)
}

/// SPR verdict from `log Z*_n` and a pressure.
#[pyfunction]
#[pyo3(signature = (log_zstar, pressure, tol=thermo::TOL_FIT))]
fn spr_check<'py>(py: Python<'py>, log_zstar: Vec<f64>, pressure: f64, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let c = thermo::spr_check(&log_zstar, pressure, tol).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("verdict", c.verdict.as_str())?;
    d.set_item("slope", c.slope)?;
    d.set_item("stderr", c.stderr)?;
    Ok(d)
}

/// `log sum_k e^{kp} Z*_k` for a numeric list or a power law.
#[pyfunction]
#[pyo3(signature = (p, log_weights=None, power_law=None))]
fn induced_pressure(p: f64, log_weights: Option<Vec<f64>>, power_law: Option<(f64, f64, f64)>) -> PyResult<Option<f64>> {
    let data = law_from(log_weights, power_law)?;
    thermo::induced_pressure(&data, p).map(series).map_err(py_err)
}

/// `(p*, Delta)` where the induced series stops converging.
#[pyfunction]
#[pyo3(signature = (log_weights=None, power_law=None))]
fn induced_threshold(log_weights: Option<Vec<f64>>, power_law: Option<(f64, f64, f64)>) -> PyResult<(f64, Option<f64>)> {
    let data = law_from(log_weights, power_law)?;
    let t = thermo::induced_threshold(&data).map_err(py_err)?;
    Ok((t.p_star, series(t.delta)))
}

/// Recurrence class and pressure of a return law.
#[pyfunction]
#[pyo3(signature = (log_weights=None, power_law=None, pressure=None, tol=thermo::TOL_FIT))]
fn recurrence_classify(
    log_weights: Option<Vec<f64>>,
    power_law: Option<(f64, f64, f64)>,
    pressure: Option<f64>,
    tol: f64,
) -> PyResult<(&'static str, f64)> {
    let data = law_from(log_weights, power_law)?;
    let r = thermo::recurrence_classify(&data, pressure, tol).map_err(py_err)?;
    Ok((r.class.as_str(), r.pressure))
}

/// `(lambda_q, C_q, s(n))` of the affine majorant on `[<= q]` returns.
#[pyfunction]
fn crc_profile(shift: &PyShift, phi: &PyPotential, q: u128, horizon: usize) -> PyResult<(f64, f64, Vec<f64>)> {
    let c = thermo::crc_profile(&shift.0, &phi.0, q, horizon).map_err(py_err)?;
    Ok((c.lambda, c.c_q, c.s))
}

/// Shortest walk violating `S_n phi <= C - n eps` under condition
/// `"A"`, `"B"` or `"C"`, as `(word, n, sum)`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn condition_witness(
    shift: &PyShift,
    phi: &PyPotential,
    condition: &str,
    q: u128,
    c: f64,
    eps: f64,
    horizon: usize,
) -> PyResult<Option<(Vec<String>, usize, f64)>> {
    let cond = match condition {
        "A" => Condition::A,
        "B" => Condition::B,
        "C" => Condition::C,
        _ => return Err(PyValueError::new_err("condition must be \"A\", \"B\" or \"C\"")),
    };
    let w = thermo::condition_witness_search(&shift.0, &phi.0, cond, q, c, eps, horizon).map_err(py_err)?;
    Ok(w.map(|w| (labels(&w.word), w.steps, w.sum)))
}

/// `z_n(M, q)`, the number of `(n+1)`-words in `B(n, M, q)`, and the best
/// Birkhoff average over them when `phi` is given.
#[pyfunction]
#[pyo3(signature = (shift, n, m, q, phi=None, brute_force=false))]
fn count_b(
    shift: &PyShift,
    n: usize,
    m: u64,
    q: u128,
    phi: Option<&PyPotential>,
    brute_force: bool,
) -> PyResult<(BigUint, Option<f64>)> {
    let method = if brute_force { CountMethod::BruteForce } else { CountMethod::Dp };
    let b = infinity::count_b(&shift.0, phi.map(|p| &p.0), n, m, q, method).map_err(py_err)?;
    Ok((b.count, b.z_phi))
}

fn profile_dict<'py>(py: Python<'py>, p: &InfinityProfile) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("estimate", p.estimate)?;
    d.set_item("stderr", p.stderr)?;
    let slopes: Vec<(u64, u128, f64)> = p.fits.iter().map(|f| (f.m, f.q, f.slope)).collect();
    d.set_item("slopes", slopes)?;
    let cells: Vec<(usize, u64, u128, f64, Option<f64>)> =
        p.cells.iter().map(|c| (c.n, c.m, c.q, c.log_z, c.z_phi)).collect();
    d.set_item("cells", cells)?;
    d.set_item("monotone_in_m", p.monotone_in_m)?;
    d.set_item("slopes_monotone_in_m", p.slopes_monotone_in_m)?;
    Ok(d)
}

#[pyfunction]
fn hinf_profile<'py>(
    py: Python<'py>,
    shift: &PyShift,
    q: Vec<u128>,
    m: Vec<u64>,
    horizon: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let p = infinity::hinf_profile(&shift.0, &q, &m, horizon).map_err(py_err)?;
    profile_dict(py, &p)
}

/// Contraction-at-infinity profile with its verdict against `pressure`.
#[pyfunction]
fn delta_profile<'py>(
    py: Python<'py>,
    shift: &PyShift,
    phi: &PyPotential,
    q: Vec<u128>,
    m: Vec<u64>,
    horizon: usize,
    pressure: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = infinity::delta_profile(&shift.0, &phi.0, &q, &m, horizon, pressure).map_err(py_err)?;
    let d = profile_dict(py, &p.profile)?;
    d.set_item("band", p.band)?;
    d.set_item("verdict", p.verdict.as_str())?;
    Ok(d)
}

/// `1 / zeta(beta)`, with its error bound.
#[pyfunction]
fn normalizing_c(beta: f64) -> PyResult<(f64, f64)> {
    families::normalizing_c(beta).map(|b| (b.value, b.error)).map_err(py_err)
}

/// `zeta(s)` for `s > 1`, with its error bound.
#[pyfunction]
#[pyo3(signature = (s, tol=1e-12))]
fn zeta(s: f64, tol: f64) -> PyResult<(f64, f64)> {
    numeric::zeta(s, tol).map(|b| (b.value, b.error)).map_err(py_err)
}

#[pymodule]
pub fn cms_shift(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RefusedError", m.py().get_type::<RefusedError>())?;
    m.add("TOL_FIT", thermo::TOL_FIT)?;
    m.add_class::<PyLoopCounts>()?;
    m.add_class::<PyShift>()?;
    m.add_class::<PyPotential>()?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(partition_sums, m)?)?;
    m.add_function(wrap_pyfunction!(renewal_sums, m)?)?;
    m.add_function(wrap_pyfunction!(pressure, m)?)?;
    m.add_function(wrap_pyfunction!(chi_per, m)?)?;
    m.add_function(wrap_pyfunction!(spr_check, m)?)?;
    m.add_function(wrap_pyfunction!(induced_pressure, m)?)?;
    m.add_function(wrap_pyfunction!(induced_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(recurrence_classify, m)?)?;
    m.add_function(wrap_pyfunction!(crc_profile, m)?)?;
    m.add_function(wrap_pyfunction!(condition_witness, m)?)?;
    m.add_function(wrap_pyfunction!(count_b, m)?)?;
    m.add_function(wrap_pyfunction!(hinf_profile, m)?)?;
    m.add_function(wrap_pyfunction!(delta_profile, m)?)?;
    m.add_function(wrap_pyfunction!(normalizing_c, m)?)?;
    m.add_function(wrap_pyfunction!(zeta, m)?)?;
    Ok(())
}
