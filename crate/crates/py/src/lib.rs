//! Python bindings: scenario files, simulated events and reconstruction.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lightray_core::group::enumerate_ball;
use lightray_core::io::{read_events, write_events, Scenario};
use lightray_core::lightpath::{self, ObserverWorldline, RelativeParams};
use lightray_core::minkowski::{HyperbolicPoint, LorentzTransform, MinkowskiVector, PoincareElement};
use lightray_core::reconstruct::{self, invariant_compare, Measurement, Mode, Reconstruction};
use lightray_core::{Error, Tolerances};

create_exception!(lightray, LightrayError, PyException);

fn err(e: Error) -> PyErr {
    LightrayError::new_err(e.to_string())
}

fn params_dict<'py>(py: Python<'py>, p: &RelativeParams) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("rho", p.rho)?;
    d.set_item("sigma", p.sigma)?;
    d.set_item("tau", p.tau)?;
    d.set_item("nu", p.nu)?;
    Ok(d)
}

fn parse_mode(mode: Option<&str>, times: usize) -> PyResult<Mode> {
    match mode {
        Some(m) => m.parse().map_err(err),
        None if times >= 2 => Ok(Mode::Evolving),
        None => Ok(Mode::Static),
    }
}

/// A validated spacetime scenario: holonomy, observer, word-ball radius and
/// emission times.
#[pyclass(module = "lightray", frozen)]
struct Spacetime {
    scenario: Scenario,
    holonomy: lightray_core::holonomy::HolonomyMap,
    observer: ObserverWorldline,
}

impl Spacetime {
    fn events(&self) -> PyResult<Vec<lightpath::ReturnEvent>> {
        let sc = &self.scenario;
        lightpath::simulate_scan(&self.observer, &self.holonomy, sc.ball_radius, &sc.emission_times).map_err(err)
    }
}

#[pymethods]
impl Spacetime {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let scenario = Scenario::from_toml_str(text).map_err(err)?;
        scenario.validate_times().map_err(err)?;
        let holonomy = scenario.holonomy().map_err(err)?;
        let observer = scenario.observer().map_err(err)?;
        Ok(Self {
            scenario,
            holonomy,
            observer,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| err(Error::Io(e)))?;
        Self::from_toml(&text)
    }

    fn to_toml(&self) -> String {
        self.scenario.to_toml_string()
    }

    #[getter]
    fn genus(&self) -> usize {
        self.holonomy.genus()
    }

    #[getter]
    fn ball_radius(&self) -> usize {
        self.scenario.ball_radius
    }

    #[getter]
    fn emission_times(&self) -> Vec<f64> {
        self.scenario.emission_times.clone()
    }

    /// (ρ, σ, τ, ν) of the observer relative to its image under `word`.
    fn relative_params<'py>(&self, py: Python<'py>, word: &str) -> PyResult<Bound<'py, PyDict>> {
        let w = word.parse().map_err(err)?;
        let h = self.holonomy.evaluate_word(&w).map_err(err)?;
        params_dict(py, &lightpath::relative_params(&self.observer, &h).map_err(err)?)
    }

    /// One dict per returning lightray, sorted by emission time and delay.
    fn simulate<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.events()?
            .iter()
            .map(|e| {
                let d = PyDict::new(py);
                d.set_item("word", e.word.to_string())?;
                d.set_item("t_e", e.t_e)?;
                d.set_item("dt", e.dt)?;
                d.set_item("phi_e", e.phi_e)?;
                d.set_item("phi_r", e.phi_r)?;
                d.set_item("p_e", e.p_e.to_array())?;
                d.set_item("p_r", e.p_r.to_array())?;
                d.set_item("freq_ratio", e.freq_ratio)?;
                d.set_item("params", params_dict(py, &e.params)?)?;
                Ok(d)
            })
            .collect()
    }

    /// Simulated events in the CSV event-file format.
    fn events_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        write_events(&mut buf, &self.events()?).map_err(err)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }

    /// Simulates, reconstructs from the CSV round trip and returns the
    /// largest deviation of (ρ, σ, τ, ν) over the word ball.
    #[pyo3(signature = (mode=None))]
    fn roundtrip(&self, mode: Option<&str>) -> PyResult<f64> {
        let sc = &self.scenario;
        let data = read_events(self.events_csv()?.as_bytes()).map_err(err)?;
        let mode = parse_mode(mode, sc.emission_times.len())?;
        let rec = reconstruct::reconstruct(&data, mode, &sc.tolerance).map_err(err)?;
        let words: Vec<_> = enumerate_ball(&self.holonomy.lorentz_generators(), sc.ball_radius)
            .non_identity()
            .map(|e| e.word.clone())
            .collect();
        let hr = &rec.holonomy;
        invariant_compare(&self.holonomy, &self.observer, &hr.map, &hr.observer, &words).map_err(err)
    }
}

fn reconstruction_dict<'py>(py: Python<'py>, rec: &Reconstruction) -> PyResult<Bound<'py, PyDict>> {
    let hr = &rec.holonomy;
    let p = hr.map.presentation();
    let d = PyDict::new(py);
    d.set_item("mode", format!("{:?}", rec.mode).to_lowercase())?;
    d.set_item("genus", p.genus())?;
    d.set_item("sides", rec.domain.sides.iter().map(|s| s.word.to_string()).collect::<Vec<_>>())?;
    d.set_item("certified", rec.domain.certified)?;
    d.set_item("circumradius", rec.domain.circumradius)?;
    let gens = PyDict::new(py);
    for (k, g) in hr.map.generators().iter().enumerate() {
        let e = PyDict::new(py);
        e.set_item("matrix", g.lorentz.rows())?;
        e.set_item("translation", g.translation.to_array())?;
        gens.set_item(p.label(k), e)?;
    }
    d.set_item("generators", gens)?;
    let params = PyDict::new(py);
    for (w, q) in &hr.generator_params {
        params.set_item(w.to_string(), params_dict(py, q)?)?;
    }
    d.set_item("generator_params", params)?;
    d.set_item("translation_residual", hr.translation_residual)?;
    d.set_item(
        "relator_residual",
        hr.validation.lorentz_residual.max(hr.validation.poincare_residual),
    )?;
    d.set_item("image_spread", rec.image_spread)?;
    Ok(d)
}

/// Reconstructs the holonomy from an event CSV given as text.
#[pyfunction]
#[pyo3(signature = (csv_text, mode=None))]
fn reconstruct_csv<'py>(py: Python<'py>, csv_text: &str, mode: Option<&str>) -> PyResult<Bound<'py, PyDict>> {
    let data: Vec<Measurement> = read_events(csv_text.as_bytes()).map_err(err)?;
    let mut times: Vec<f64> = data.iter().map(|m| m.t_e).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mode = parse_mode(mode, times.len())?;
    let rec = reconstruct::reconstruct(&data, mode, &Tolerances::default()).map_err(err)?;
    reconstruction_dict(py, &rec)
}

/// (ρ, σ, τ, ν) for an observer with unit velocity `velocity` through
/// `position` and the Poincaré element (matrix, translation).
#[pyfunction]
fn relative_params<'py>(
    py: Python<'py>,
    velocity: [f64; 3],
    position: [f64; 3],
    matrix: [[f64; 3]; 3],
    translation: [f64; 3],
) -> PyResult<Bound<'py, PyDict>> {
    let eps = Tolerances::default().eps;
    let x = HyperbolicPoint::new(MinkowskiVector::from(velocity), eps).map_err(err)?;
    let obs = ObserverWorldline::new(x, MinkowskiVector::from(position));
    let v = LorentzTransform::from_rows(matrix, eps.max(1e-12)).map_err(err)?;
    let h = PoincareElement::new(v, MinkowskiVector::from(translation));
    params_dict(py, &lightpath::relative_params(&obs, &h).map_err(err)?)
}

#[pymodule]
pub fn lightray(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LightrayError", m.py().get_type::<LightrayError>())?;
    m.add_class::<Spacetime>()?;
    m.add_function(wrap_pyfunction!(reconstruct_csv, m)?)?;
    m.add_function(wrap_pyfunction!(relative_params, m)?)?;
    Ok(())
}
