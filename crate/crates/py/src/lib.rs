//! Python module `extruplan`. Structured values cross the boundary as JSON
//! strings in the same shapes the CLI reads and writes.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use extruplan::codec::OutputVector;
use extruplan::estimator as est;
use extruplan::library::{build_dataset, synthetic_library, to_samples};
use extruplan::nn::{self, TrainReport};
use extruplan::planner::{self, Planner};
use extruplan::{fixtures, DieDesign, EncodingConfig, EstimatorConfig, KnowledgeBase, Library, Mlp, ProcessPlan, ProfileSpec, TrainConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(format!("invalid {what} JSON: {e}")))
}

fn dump<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

#[pyclass(name = "Codec", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCodec(EncodingConfig);

#[pymethods]
impl PyCodec {
    /// The shipped layout, or one parsed from `config_json`.
    #[new]
    #[pyo3(signature = (config_json=None))]
    fn new(config_json: Option<&str>) -> PyResult<Self> {
        match config_json {
            None => Ok(Self(EncodingConfig::shipped())),
            Some(text) => EncodingConfig::from_json(text).map(Self).map_err(value_err),
        }
    }

    #[getter]
    fn version(&self) -> String {
        self.0.codec_version.clone()
    }

    fn encode_profile(&self, profile_json: &str) -> PyResult<Vec<u8>> {
        let spec: ProfileSpec = parse(profile_json, "profile")?;
        extruplan::encode_profile(&spec, &self.0).map(|v| v.as_slice().to_vec()).map_err(value_err)
    }

    fn encode_design(&self, design_json: &str) -> PyResult<Vec<u8>> {
        let design: DieDesign = parse(design_json, "design")?;
        extruplan::encode_design(&design, &self.0).map(|v| v.as_slice().to_vec()).map_err(value_err)
    }

    fn decode_output(&self, bits: Vec<u8>) -> PyResult<String> {
        let vec = OutputVector::try_from(bits).map_err(value_err)?;
        extruplan::decode_output(&vec, &self.0).map(|d| dump(&d)).map_err(value_err)
    }
}

#[pyclass(name = "KnowledgeBase", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyKnowledgeBase(KnowledgeBase);

#[pymethods]
impl PyKnowledgeBase {
    #[new]
    #[pyo3(signature = (kb_json=None))]
    fn new(kb_json: Option<&str>) -> PyResult<Self> {
        match kb_json {
            None => Ok(Self(KnowledgeBase::shipped())),
            Some(text) => KnowledgeBase::from_json(text).map(Self).map_err(value_err),
        }
    }

    #[getter]
    fn fingerprint(&self) -> String {
        self.0.fingerprint().to_string()
    }

    fn classify_die_type(&self, profile_json: &str) -> PyResult<String> {
        let spec: ProfileSpec = parse(profile_json, "profile")?;
        Ok(self.0.classify_die_type(&spec).to_string())
    }

    fn build_design(&self, profile_json: &str) -> PyResult<String> {
        let spec: ProfileSpec = parse(profile_json, "profile")?;
        Ok(dump(&self.0.build_design(&spec)))
    }

    fn derive_plan(&self, design_json: &str) -> PyResult<String> {
        let design: DieDesign = parse(design_json, "design")?;
        self.0.derive_plan(&design).map(|p| dump(&p)).map_err(value_err)
    }
}

#[pyclass(name = "Estimator", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEstimator(EstimatorConfig);

#[pymethods]
impl PyEstimator {
    #[new]
    #[pyo3(signature = (config_json=None))]
    fn new(config_json: Option<&str>) -> PyResult<Self> {
        match config_json {
            None => Ok(Self(EstimatorConfig::shipped())),
            Some(text) => EstimatorConfig::from_json(text).map(Self).map_err(value_err),
        }
    }

    /// Fills in times and costs of a process plan.
    fn estimate(&self, plan_json: &str) -> PyResult<String> {
        let plan: ProcessPlan = parse(plan_json, "plan")?;
        extruplan::estimate_plan(&plan, &self.0).map(|p| dump(&p)).map_err(value_err)
    }
}

#[pyclass(name = "Library", frozen, skip_from_py_object)]
struct PyLibrary(Library);

#[pymethods]
impl PyLibrary {
    /// A reproducible synthetic corpus of `n` cases.
    #[staticmethod]
    #[pyo3(signature = (n, seed=0, jitter=0.0, codec=None, kb=None))]
    fn generate(n: usize, seed: u64, jitter: f64, codec: Option<&PyCodec>, kb: Option<&PyKnowledgeBase>) -> PyResult<Self> {
        let codec = codec.map_or_else(EncodingConfig::shipped, |c| c.0.clone());
        let kb = kb.map_or_else(KnowledgeBase::shipped, |k| k.0.clone());
        synthetic_library(n, seed, &codec, &kb, jitter).map(Self).map_err(value_err)
    }

    #[staticmethod]
    #[pyo3(signature = (text, codec=None))]
    fn from_json(text: &str, codec: Option<&PyCodec>) -> PyResult<Self> {
        let codec = codec.map_or_else(EncodingConfig::shipped, |c| c.0.clone());
        Library::from_json(text, &codec).map(Self).map_err(value_err)
    }

    #[staticmethod]
    #[pyo3(signature = (path, codec=None))]
    fn load(path: &str, codec: Option<&PyCodec>) -> PyResult<Self> {
        let codec = codec.map_or_else(EncodingConfig::shipped, |c| c.0.clone());
        extruplan::load_library(path, &codec).map(Self).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn save(&self, path: &str) -> PyResult<()> {
        extruplan::save_library(&self.0, path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn case_ids(&self) -> Vec<String> {
        self.0.cases().iter().map(|c| c.case_id.clone()).collect()
    }

    fn case(&self, case_id: &str) -> Option<String> {
        self.0.get(case_id).map(dump)
    }

    /// `(case_id, hamming distance)` pairs closest to the profile.
    #[pyo3(signature = (profile_json, k=1, codec=None))]
    fn nearest(&self, profile_json: &str, k: usize, codec: Option<&PyCodec>) -> PyResult<Vec<(String, usize)>> {
        let codec = codec.map_or_else(EncodingConfig::shipped, |c| c.0.clone());
        let spec: ProfileSpec = parse(profile_json, "profile")?;
        let query = extruplan::encode_profile(&spec, &codec).map_err(value_err)?;
        let hits = extruplan::nearest_neighbors(&query, &self.0, k, &codec).map_err(value_err)?;
        Ok(hits.into_iter().map(|n| (n.case_id, n.distance)).collect())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "Model", frozen, skip_from_py_object)]
struct PyModel {
    mlp: Mlp,
    history: Vec<f64>,
}

impl PyModel {
    fn wrap(mlp: Mlp) -> Self {
        Self { mlp, history: Vec::new() }
    }
}

#[pymethods]
impl PyModel {
    /// Trains a fresh network on the library's encoded cases.
    #[staticmethod]
    #[pyo3(signature = (library, hidden=5, epochs=1000, lr=0.1, momentum=0.7, seed=0, shuffle=false, codec=None))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        py: Python<'_>,
        library: &PyLibrary,
        hidden: usize,
        epochs: usize,
        lr: f64,
        momentum: f64,
        seed: u64,
        shuffle: bool,
        codec: Option<&PyCodec>,
    ) -> PyResult<Self> {
        let codec = codec.map_or_else(EncodingConfig::shipped, |c| c.0.clone());
        let samples = to_samples(&build_dataset(&library.0, &codec).map_err(value_err)?);
        let cfg = TrainConfig { learning_rate: lr, momentum, hidden_size: hidden, epochs, seed, shuffle, ..TrainConfig::default() };
        let (mlp, report): (Mlp, TrainReport) = py.detach(|| nn::fit(&samples, &cfg)).map_err(value_err)?;
        Ok(Self { mlp, history: report.mse_history })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Mlp::from_json(text).map(Self::wrap).map_err(value_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Mlp::load(path).map(Self::wrap).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.mlp.save(path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn to_json(&self) -> String {
        self.mlp.to_json()
    }

    #[getter]
    fn layer_sizes(&self) -> (usize, usize, usize) {
        let [i, h, o] = self.mlp.layer_sizes();
        (i, h, o)
    }

    /// Per-epoch mean squared error from `fit`; empty for loaded models.
    #[getter]
    fn mse_history(&self) -> Vec<f64> {
        self.history.clone()
    }

    fn forward(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.mlp.forward(&x).map_err(value_err)
    }

    /// Raw activations, thresholded bits and per-segment confidence.
    #[pyo3(signature = (profile_json, threshold=0.5, codec=None))]
    fn predict(&self, profile_json: &str, threshold: f64, codec: Option<&PyCodec>) -> PyResult<String> {
        let codec = codec.map_or_else(EncodingConfig::shipped, |c| c.0.clone());
        let spec: ProfileSpec = parse(profile_json, "profile")?;
        planner::predict(&self.mlp, &spec, &codec, threshold).map(|p| dump(&p)).map_err(value_err)
    }
}

/// Plans a profile. Without a model or library the design comes from the rules.
#[pyfunction]
#[pyo3(signature = (profile_json, model=None, library=None, threshold=0.5, codec=None, kb=None, estimator=None))]
fn plan(
    profile_json: &str,
    model: Option<&PyModel>,
    library: Option<&PyLibrary>,
    threshold: f64,
    codec: Option<&PyCodec>,
    kb: Option<&PyKnowledgeBase>,
    estimator: Option<&PyEstimator>,
) -> PyResult<String> {
    let codec = codec.map_or_else(EncodingConfig::shipped, |c| c.0.clone());
    let kb = kb.map_or_else(KnowledgeBase::shipped, |k| k.0.clone());
    let estimator = estimator.map_or_else(EstimatorConfig::shipped, |e| e.0.clone());
    let spec: ProfileSpec = parse(profile_json, "profile")?;
    let planner = Planner { codec: &codec, kb: &kb, library: library.map(|l| &l.0), estimator: &estimator, threshold };
    planner.plan(&spec, model.map(|m| &m.mlp)).map(|d| dump(&d)).map_err(value_err)
}

/// Accuracy and plan agreement of a model over a library.
#[pyfunction]
#[pyo3(signature = (model, library, threshold=0.5))]
fn evaluate(model: &PyModel, library: &PyLibrary, threshold: f64) -> PyResult<String> {
    let (codec, kb, estimator) = (EncodingConfig::shipped(), KnowledgeBase::shipped(), EstimatorConfig::shipped());
    let planner = Planner { codec: &codec, kb: &kb, library: Some(&library.0), estimator: &estimator, threshold };
    extruplan::evaluate(&model.mlp, &library.0, &planner).map(|r| dump(&r)).map_err(value_err)
}

#[pyfunction]
fn case_study_profile() -> String {
    dump(&fixtures::case_study_profile())
}

/// πDdfN in in³/min.
#[pyfunction]
fn mrr_turning(diameter: f64, depth: f64, feed: f64, spindle: f64) -> PyResult<f64> {
    est::mrr_turning(diameter, depth, feed, spindle).map(|r| r.value).map_err(value_err)
}

/// 12dfV in in³/min.
#[pyfunction]
fn mrr_turning_v(depth: f64, feed: f64, cutting_speed: f64) -> PyResult<f64> {
    est::mrr_turning_v(depth, feed, cutting_speed).map(|r| r.value).map_err(value_err)
}

#[pyfunction]
fn spindle_speed(cutting_speed: f64, diameter: f64) -> PyResult<f64> {
    est::spindle_speed(cutting_speed, diameter).map_err(value_err)
}

#[pyfunction]
fn mrr_straight_turning(outer: f64, inner: f64, feed: f64, spindle: f64) -> PyResult<f64> {
    est::mrr_straight_turning(outer, inner, feed, spindle).map(|r| r.value).map_err(value_err)
}

#[pyfunction]
fn milling_cutting_speed(diameter: f64, spindle: f64) -> PyResult<f64> {
    est::milling_cutting_speed(diameter, spindle).map_err(value_err)
}

#[pyfunction]
fn feed_per_tooth(feed_rate: f64, spindle: f64, teeth: u32) -> PyResult<f64> {
    est::feed_per_tooth(feed_rate, spindle, teeth).map_err(value_err)
}

/// wdv in mm³/min.
#[pyfunction]
fn mrr_milling(width: f64, depth: f64, feed_rate: f64) -> PyResult<f64> {
    est::mrr_milling(width, depth, feed_rate).map(|r| r.value).map_err(value_err)
}

#[pyfunction]
fn mrr_grinding(depth: f64, width: f64, feed_rate: f64) -> PyResult<f64> {
    est::mrr_grinding(depth, width, feed_rate).map(|r| r.value).map_err(value_err)
}

#[pyfunction]
fn mrr_drilling(diameter: f64, feed: f64, spindle: f64) -> PyResult<f64> {
    est::mrr_drilling(diameter, feed, spindle).map(|r| r.value).map_err(value_err)
}

/// mm/min from an area rate in mm²/hr and a thickness in mm.
#[pyfunction]
fn wire_edm_linear_speed(area_rate: f64, thickness: f64) -> PyResult<f64> {
    est::wire_edm_linear_speed(area_rate, thickness).map_err(value_err)
}

#[pymodule(name = "extruplan")]
fn extruplan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCodec>()?;
    m.add_class::<PyKnowledgeBase>()?;
    m.add_class::<PyEstimator>()?;
    m.add_class::<PyLibrary>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(case_study_profile, m)?)?;
    m.add_function(wrap_pyfunction!(mrr_turning, m)?)?;
    m.add_function(wrap_pyfunction!(mrr_turning_v, m)?)?;
    m.add_function(wrap_pyfunction!(spindle_speed, m)?)?;
    m.add_function(wrap_pyfunction!(mrr_straight_turning, m)?)?;
    m.add_function(wrap_pyfunction!(milling_cutting_speed, m)?)?;
    m.add_function(wrap_pyfunction!(feed_per_tooth, m)?)?;
    m.add_function(wrap_pyfunction!(mrr_milling, m)?)?;
    m.add_function(wrap_pyfunction!(mrr_grinding, m)?)?;
    m.add_function(wrap_pyfunction!(mrr_drilling, m)?)?;
    m.add_function(wrap_pyfunction!(wire_edm_linear_speed, m)?)?;
    Ok(())
}
