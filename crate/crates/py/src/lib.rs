use blockpole::document::{parse_form, parse_side};
use blockpole::error::Error;
use blockpole::linalg::{self, Mat, C64};
use blockpole::matpoly::Tolerances;
use blockpole::missile::{self, CaseStudyOptions, GainSource};
use blockpole::robustness::{self, FrequencySearch};
use blockpole::simulate::{self, SpecOptions};
use blockpole::statespace::StateSpace;
use blockpole::synthesis::{self, TwoDofGains};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Rows = Vec<Vec<f64>>;
type Tracking = (Vec<f64>, Vec<f64>, Vec<f64>, f64);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Dimension(_) | Error::InvalidInput(_) => PyValueError::new_err(e.to_string()),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

fn matrix(rows: &Rows) -> PyResult<Mat> {
    linalg::try_from_rows(rows).map_err(to_py)
}

fn system(a: &Rows, b: &Rows, c: &Rows) -> PyResult<StateSpace> {
    StateSpace::strictly_proper(matrix(a)?, matrix(b)?, matrix(c)?).map_err(to_py)
}

fn gains(sys: &StateSpace, k_fb: &Rows, k_ff: Option<&Rows>) -> PyResult<TwoDofGains> {
    let k_ff = k_ff.map(matrix).transpose()?;
    TwoDofGains::from_matrices(sys, matrix(k_fb)?, k_ff).map_err(to_py)
}

/// Block pole placement with a two-degree-of-freedom law `u = K_FF r - K_FB x`.
///
/// Returns a dict with `K_FB`, `K_FF`, `achieved` and `exact_tracking`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (a, b, c, spectrum, partition=None, form="diagonal", side="right"))]
fn design<'py>(
    py: Python<'py>,
    a: Rows,
    b: Rows,
    c: Rows,
    spectrum: Vec<C64>,
    partition: Option<Vec<Vec<usize>>>,
    form: &str,
    side: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let sys = system(&a, &b, &c)?;
    let partition = partition.unwrap_or_else(|| synthesis::default_partition(sys.n(), sys.m()));
    let g = synthesis::design_2dof(
        &sys,
        &spectrum,
        &partition,
        parse_form(form).map_err(to_py)?,
        parse_side(side).map_err(to_py)?,
        &Tolerances::default(),
    )
    .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("K_FB", linalg::to_rows(&g.feedback))?;
    out.set_item("K_FF", linalg::to_rows(&g.feedforward))?;
    out.set_item("achieved", g.achieved)?;
    out.set_item("exact_tracking", g.exact_tracking)?;
    out.set_item("vandermonde_condition", g.provenance.vandermonde_condition)?;
    Ok(out)
}

/// `(per-eigenvalue [(λ, s(λ))], κ(V))` for a diagonalizable matrix.
#[pyfunction]
fn eigen_sensitivities(a: Rows) -> PyResult<(Vec<(C64, f64)>, f64)> {
    let r = robustness::eigen_sensitivities(&matrix(&a)?).map_err(to_py)?;
    Ok((r.per_eigenvalue, r.global))
}

/// `(m1, m2, m3)` for a Hurwitz matrix.
#[pyfunction]
fn stability_measures(a: Rows) -> PyResult<(f64, f64, f64)> {
    let m = robustness::stability_measures(&matrix(&a)?, &FrequencySearch::default()).map_err(to_py)?;
    Ok((m.m1, m.m2, m.m3))
}

/// `(one, two, inf, frobenius)` norms.
#[pyfunction]
fn matrix_norms(m: Rows) -> PyResult<(f64, f64, f64, f64)> {
    let n = robustness::matrix_norms(&matrix(&m)?);
    Ok((n.one_norm, n.two_norm, n.inf_norm, n.frobenius))
}

/// Steady-state tracking error `(exact, first_order, pseudo_inverse, bound)` under `A + ΔA`.
#[pyfunction]
#[pyo3(signature = (a, b, c, k_fb, delta_a, reference, k_ff=None))]
fn tracking_error(
    a: Rows,
    b: Rows,
    c: Rows,
    k_fb: Rows,
    delta_a: Rows,
    reference: Vec<f64>,
    k_ff: Option<Rows>,
) -> PyResult<Tracking> {
    let sys = system(&a, &b, &c)?;
    let g = gains(&sys, &k_fb, k_ff.as_ref())?;
    let t = robustness::tracking_error(&sys, &g, &matrix(&delta_a)?, &reference).map_err(to_py)?;
    Ok((t.exact, t.first_order, t.pseudo_inverse, t.bound))
}

/// Closed-loop step response. Returns a dict with `times`, `states`,
/// `outputs`, `inputs` and per-output `specs`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (a, b, c, k_fb, reference, k_ff=None, horizon=simulate::DEFAULT_HORIZON, dt=simulate::DEFAULT_DT))]
fn step_response<'py>(
    py: Python<'py>,
    a: Rows,
    b: Rows,
    c: Rows,
    k_fb: Rows,
    reference: Vec<f64>,
    k_ff: Option<Rows>,
    horizon: f64,
    dt: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let sys = system(&a, &b, &c)?;
    let g = gains(&sys, &k_fb, k_ff.as_ref())?;
    let traj = simulate::step_response(&sys, &g, &reference, horizon, dt).map_err(to_py)?;
    let specs = PyDict::new(py);
    for ch in 0..sys.p() {
        let s = simulate::time_specs(&traj, ch, &SpecOptions::default()).map_err(to_py)?;
        let entry = PyDict::new(py);
        entry.set_item("percent_overshoot", s.percent_overshoot)?;
        entry.set_item("percent_undershoot", s.percent_undershoot)?;
        entry.set_item("settling_time", s.settling_time)?;
        entry.set_item("rise_time", s.rise_time)?;
        entry.set_item("final_value", s.final_value)?;
        specs.set_item(ch, entry)?;
    }
    let out = PyDict::new(py);
    out.set_item("times", &traj.times)?;
    out.set_item("states", &traj.states)?;
    out.set_item("outputs", &traj.outputs)?;
    out.set_item("inputs", &traj.inputs)?;
    out.set_item("diverged", traj.diverged)?;
    out.set_item("specs", specs)?;
    Ok(out)
}

/// Built-in missile autopilot: `(A, B, C, spectrum)`.
#[pyfunction]
fn missile_model() -> (Rows, Rows, Rows, Vec<C64>) {
    let sys = missile::builtin_linear_model();
    (linalg::to_rows(sys.a()), linalg::to_rows(sys.b()), linalg::to_rows(sys.c()), missile::desired_spectrum())
}

/// Summary of the missile case study for one solvent form.
#[pyfunction]
#[pyo3(signature = (form="diagonal", replay=false))]
fn case_study<'py>(py: Python<'py>, form: &str, replay: bool) -> PyResult<Bound<'py, PyDict>> {
    let mut opts = CaseStudyOptions::new(parse_form(form).map_err(to_py)?);
    if replay {
        opts.gains = GainSource::Replay;
    }
    let r = missile::case_study(&opts).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("K_FB", linalg::to_rows(&r.gains.feedback))?;
    out.set_item("K_FF", linalg::to_rows(&r.gains.feedforward))?;
    out.set_item("k_fb_two_norm", r.feedback_norms.two_norm)?;
    out.set_item("eigenvalues", r.closed_loop_eigenvalues)?;
    out.set_item("global_sensitivity", r.sensitivities.global)?;
    out.set_item("m1", r.measures.m1)?;
    out.set_item("m2", r.measures.m2)?;
    out.set_item("m3", r.measures.m3)?;
    if let Some(p) = r.perturbation {
        out.set_item("destabilized", p.destabilized)?;
        out.set_item("tracking_error", p.tracking.map(|t| t.exact))?;
    }
    Ok(out)
}

#[pymodule]
fn blockpole_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(design, m)?)?;
    m.add_function(wrap_pyfunction!(eigen_sensitivities, m)?)?;
    m.add_function(wrap_pyfunction!(stability_measures, m)?)?;
    m.add_function(wrap_pyfunction!(matrix_norms, m)?)?;
    m.add_function(wrap_pyfunction!(tracking_error, m)?)?;
    m.add_function(wrap_pyfunction!(step_response, m)?)?;
    m.add_function(wrap_pyfunction!(missile_model, m)?)?;
    m.add_function(wrap_pyfunction!(case_study, m)?)?;
    Ok(())
}
