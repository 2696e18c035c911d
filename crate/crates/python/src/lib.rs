//! Python access to the captioner for in-memory joint arrays.

use numpy::{PyReadonlyArray3, PyUntypedArrayMethods};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use motionscript::skeleton::JOINT_COUNT;
use motionscript::noise::derive_caption_seed;
use motionscript::{Captioner, Error, MotionSequence, PipelineConfig};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A validated pipeline configuration.
#[pyclass(name = "Config", module = "motionscript_py", frozen)]
#[derive(Clone)]
struct PyConfig {
    inner: PipelineConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    fn new() -> Self {
        PyConfig {
            inner: PipelineConfig::default(),
        }
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyConfig {
            inner: PipelineConfig::load(&path).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(PyConfig {
            inner: PipelineConfig::from_toml(text).map_err(to_py)?,
        })
    }

    /// A copy with `{"section.key": value}` overrides applied.
    fn with_overrides(&self, py: Python<'_>, overrides: &Bound<'_, PyDict>) -> PyResult<Self> {
        let json = py.import("json")?;
        let mut pairs = Vec::new();
        for (k, v) in overrides.iter() {
            let key: String = k.extract()?;
            let text: String = json.call_method1("dumps", (v,))?.extract()?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
            let value = toml::Value::try_from(value)
                .map_err(|e| PyValueError::new_err(format!("override {key:?}: {e}")))?;
            pairs.push((key, value));
        }
        let inner = self
            .inner
            .with_overrides(pairs.iter().map(|(k, v)| (k.as_str(), v.clone())))
            .map_err(to_py)?;
        Ok(PyConfig { inner })
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn captions_per_motion(&self) -> usize {
        self.inner.captions_per_motion
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(seed={}, noise={}, p_rule={})",
            self.inner.seed, self.inner.noise.enabled, self.inner.aggregation.p_rule
        )
    }
}

/// Reads a TOML configuration file.
#[pyfunction]
fn load_config(path: std::path::PathBuf) -> PyResult<PyConfig> {
    PyConfig::load(path)
}

fn frames_from(py: Python<'_>, frames: &Bound<'_, PyAny>) -> PyResult<(Vec<f64>, usize)> {
    let array: PyReadonlyArray3<'_, f64> = match frames.extract() {
        Ok(a) => a,
        Err(_) => py
            .import("numpy")?
            .call_method1("ascontiguousarray", (frames, "float64"))?
            .extract()
            .map_err(|_| PyValueError::new_err("frames must be a 3-dimensional array of shape (F, 22, 3)"))?,
    };
    let shape = array.shape();
    if shape[1] != JOINT_COUNT || shape[2] != 3 {
        return Err(PyValueError::new_err(format!(
            "frames must have shape (F, {JOINT_COUNT}, 3), got ({}, {}, {})",
            shape[0], shape[1], shape[2]
        )));
    }
    let data = match array.as_slice() {
        Ok(s) => s.to_vec(),
        Err(_) => array.as_array().iter().copied().collect(),
    };
    Ok((data, shape[0]))
}

/// Captions one motion given as an `(F, 22, 3)` array of joint positions in
/// meters. The caption seed is derived from `(seed, input_index,
/// caption_index)` exactly as the command line does, so caption `k` of the
/// `i`-th file matches `input_index=i, caption_index=k`. `seed` defaults to
/// the config's. Returns `(text, dump)` where `dump` is a JSON string when
/// `intermediate` is true and `None` otherwise.
#[pyfunction]
#[pyo3(signature = (frames, fps = 20.0, seed = None, config = None, input_index = 0, caption_index = 0, intermediate = false))]
#[allow(clippy::too_many_arguments)]
fn caption_array(
    py: Python<'_>,
    frames: &Bound<'_, PyAny>,
    fps: f64,
    seed: Option<u64>,
    config: Option<PyConfig>,
    input_index: u64,
    caption_index: u64,
    intermediate: bool,
) -> PyResult<(String, Option<String>)> {
    let (data, count) = frames_from(py, frames)?;
    let mut config = config.map(|c| c.inner).unwrap_or_default();
    config.emit_intermediate = intermediate;
    let base = seed.unwrap_or(config.seed);
    py.detach(move || {
        let seq = MotionSequence::from_flat(fps, &data, count)?;
        let captioner = Captioner::new(config)?;
        let doc = captioner.caption(&seq, derive_caption_seed(base, input_index, caption_index));
        let dump = intermediate.then(|| serde_json::to_string_pretty(&doc).expect("document serializes"));
        Ok((doc.text, dump))
    })
    .map_err(to_py)
}

#[pymodule]
fn motionscript_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(load_config, m)?)?;
    m.add_function(wrap_pyfunction!(caption_array, m)?)?;
    Ok(())
}
