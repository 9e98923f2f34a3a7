//! Python module `dsab`: ground motions, the coupled building model, single
//! evaluations, exhaustive fronts and evolutionary runs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use dsab_core::enumeration::{self, count_configurations};
use dsab_core::ground_motion::{parse_record, GroundMotionRecord, RecordFormat, SyntheticMotion};
use dsab_core::metrics::{AccelerationKind, Evaluator, ObjectiveSet};
use dsab_core::model::{BuildingParams, DamperConfiguration, DamperParams, ModelOptions, Projection, StructureModel};
use dsab_core::moea::{self, Algorithm, Decoded, MoeaConfig, PlacementProblem};
use dsab_core::solver::NewmarkParams;

fn err(e: dsab_core::Error) -> PyErr {
    match e {
        dsab_core::Error::Io(e) => PyIOError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = dsab_core::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

fn config(positions: Vec<usize>) -> PyResult<DamperConfiguration> {
    DamperConfiguration::from_unordered(positions).map_err(err)
}

/// Uniformly sampled ground acceleration in m/s².
#[pyclass(name = "GroundMotion", module = "dsab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGroundMotion(GroundMotionRecord);

#[pymethods]
impl PyGroundMotion {
    #[new]
    fn new(dt: f64, accel: Vec<f64>, name: &str) -> PyResult<Self> {
        GroundMotionRecord::new(name, dt, accel).map(Self).map_err(err)
    }

    /// Kanai-Tajimi synthetic record; defaults give 31.18 s at 0.02 s.
    #[staticmethod]
    #[pyo3(signature = (seed = 1940, peak_accel = 3.13, duration = 31.18, dt = 0.02))]
    fn synthetic(seed: u64, peak_accel: f64, duration: f64, dt: f64) -> PyResult<Self> {
        SyntheticMotion {
            seed,
            peak_accel,
            duration,
            dt,
            ..SyntheticMotion::default()
        }
        .generate()
        .map(Self)
        .map_err(err)
    }

    /// Reads a two-column CSV (`"csv"`) or PEER AT2 (`"at2"`) file.
    #[staticmethod]
    #[pyo3(signature = (path, format = "csv"))]
    fn from_file(path: &str, format: &str) -> PyResult<Self> {
        let format: RecordFormat = parse(format)?;
        let file = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        parse_record(BufReader::new(file), format, path).map(Self).map_err(err)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.0.dt()
    }

    #[getter]
    fn accel(&self) -> Vec<f64> {
        self.0.accel().to_vec()
    }

    fn peak_abs(&self) -> f64 {
        self.0.peak_abs()
    }

    fn scaled(&self, factor: f64) -> PyResult<Self> {
        self.0.scaled(factor).map(Self).map_err(err)
    }

    fn resample(&self, dt: f64) -> PyResult<Self> {
        self.0.resample(dt).map(Self).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Two identical shear buildings with their candidate damper links.
#[pyclass(name = "Model", module = "dsab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModel(StructureModel);

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (n_floors = 6, storey_mass = 64_719.0, storey_stiffness = 3.7774e8, damping_ratio = 0.05,
                        k_d = 1e6, c_d = 1e8, dampers_per_link = 2, projection = "axial"))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n_floors: usize,
        storey_mass: f64,
        storey_stiffness: f64,
        damping_ratio: f64,
        k_d: f64,
        c_d: f64,
        dampers_per_link: u32,
        projection: &str,
    ) -> PyResult<Self> {
        let projection = match projection {
            "axial" => Projection::Axial,
            "unit" => Projection::Unit,
            other => return Err(PyValueError::new_err(format!("unknown projection '{other}'"))),
        };
        let building = BuildingParams {
            n_floors,
            storey_mass,
            storey_stiffness,
            damping_ratio,
            ..BuildingParams::default()
        };
        let damper = DamperParams {
            k_d,
            c_d,
            dampers_per_link,
        };
        let options = ModelOptions {
            projection,
            ..ModelOptions::default()
        };
        StructureModel::new(building, damper, options).map(Self).map_err(err)
    }

    #[getter]
    fn n_floors(&self) -> usize {
        self.0.building().n_floors
    }

    #[getter]
    fn n_positions(&self) -> usize {
        self.0.n_positions()
    }

    /// Natural frequencies of one building, rad/s.
    fn frequencies(&self) -> Vec<f64> {
        self.0.single_building().frequencies.clone()
    }

    /// `(index, kind, left_floor, right_floor)` for every link.
    fn links(&self) -> Vec<(usize, String, usize, usize)> {
        self.0
            .links()
            .iter()
            .map(|l| (l.index, format!("{:?}", l.kind), l.left_floor, l.right_floor))
            .collect()
    }
}

/// Model plus excitation; evaluates damper configurations (memoized).
#[pyclass(name = "Evaluator", module = "dsab", frozen)]
struct PyEvaluator(Evaluator);

#[pymethods]
impl PyEvaluator {
    #[new]
    #[pyo3(signature = (model, record, beta = 0.25, gamma = 0.5, acceleration = "absolute"))]
    fn new(model: &PyModel, record: &PyGroundMotion, beta: f64, gamma: f64, acceleration: &str) -> PyResult<Self> {
        let accel = match acceleration {
            "absolute" => AccelerationKind::Absolute,
            "relative" => AccelerationKind::Relative,
            other => return Err(PyValueError::new_err(format!("unknown acceleration kind '{other}'"))),
        };
        Evaluator::new(model.0.clone(), record.0.clone(), NewmarkParams { beta, gamma }, accel)
            .map(Self)
            .map_err(err)
    }

    /// Objective pair for `set` (`"lr-disp"`, `"drift-acc"`, `"disp-shear"`).
    fn objectives(&self, py: Python<'_>, positions: Vec<usize>, set: &str) -> PyResult<(f64, f64)> {
        let set: ObjectiveSet = parse(set)?;
        let c = config(positions)?;
        py.detach(|| self.0.evaluate_objectives(&c, set))
            .map(|o| o.pair())
            .map_err(err)
    }

    /// Every peak quantity as a dict.
    fn summary(&self, py: Python<'_>, positions: Vec<usize>) -> PyResult<BTreeMap<&'static str, f64>> {
        let c = config(positions)?;
        let s = py.detach(|| self.0.summary(&c)).map_err(err)?;
        Ok(BTreeMap::from([
            ("top_left", s.top_left),
            ("top_right", s.top_right),
            ("max_drift", s.max_drift),
            ("max_abs_acc", s.max_abs_acc),
            ("max_rel_acc", s.max_rel_acc),
            ("max_base_shear", s.max_base_shear),
        ]))
    }

    /// Top-floor displacement histories `(left, right)`.
    fn top_floor_history(&self, py: Python<'_>, positions: Vec<usize>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let c = config(positions)?;
        let n = self.0.n_floors();
        let h = py.detach(|| self.0.history(&c)).map_err(err)?;
        Ok((
            h.rel_disp.column(n - 1).iter().copied().collect(),
            h.rel_disp.column(2 * n - 1).iter().copied().collect(),
        ))
    }

    /// Exact front as `[(f1, f2, [configurations])]`, ascending in `f1`.
    fn exhaustive_front(&self, py: Python<'_>, n_dampers: usize, set: &str) -> PyResult<Vec<(f64, f64, Vec<Vec<usize>>)>> {
        let set: ObjectiveSet = parse(set)?;
        let (_, front, _) = py
            .detach(|| enumeration::exhaustive_front(&self.0, set, n_dampers))
            .map_err(err)?;
        Ok(front
            .points
            .iter()
            .map(|p| {
                let configs = p.payloads.iter().map(|c| c.positions().to_vec()).collect();
                (p.objectives.f1, p.objectives.f2, configs)
            })
            .collect())
    }

    /// One seeded evolutionary run; returns the result as JSON text.
    #[pyo3(signature = (algorithm, n_dampers, set, population = 40, iterations = 200, seed = 1, p_mut = None))]
    #[allow(clippy::too_many_arguments)]
    fn optimize(
        &self,
        py: Python<'_>,
        algorithm: &str,
        n_dampers: usize,
        set: &str,
        population: usize,
        iterations: usize,
        seed: u64,
        p_mut: Option<f64>,
    ) -> PyResult<String> {
        let algorithm: Algorithm = parse(algorithm)?;
        let set: ObjectiveSet = parse(set)?;
        let cfg = MoeaConfig {
            algorithm,
            population,
            iterations,
            seed,
            p_mut,
            ..MoeaConfig::default()
        };
        let problem = PlacementProblem {
            evaluator: &self.0,
            set,
            n_dampers,
        };
        py.detach(|| moea::run(&cfg, &problem))
            .and_then(|r| r.to_json())
            .map_err(err)
    }
}

/// Number of ways to place `n_dampers` on `n_positions` links.
#[pyfunction]
fn count(n_positions: usize, n_dampers: usize) -> PyResult<u64> {
    count_configurations(n_positions, n_dampers).map_err(err)
}

/// Box for gene `k` (1-based).
#[pyfunction]
fn bounds(n_positions: usize, n_dampers: usize, k: usize) -> PyResult<(f64, f64)> {
    if k == 0 || k > n_dampers || n_dampers > n_positions {
        return Err(PyValueError::new_err("need 1 <= k <= n_dampers <= n_positions"));
    }
    Ok(moea::bounds(n_positions, n_dampers, k))
}

/// Integer positions for a gene vector, or `None` for a penalized one.
#[pyfunction]
fn decode(genes: Vec<f64>, n_positions: usize) -> Option<Vec<usize>> {
    match moea::decode(&genes, n_positions) {
        Decoded::Config(c) => Some(c.positions().to_vec()),
        Decoded::Penalty => None,
    }
}

#[pymodule]
fn dsab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGroundMotion>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyEvaluator>()?;
    m.add_function(wrap_pyfunction!(count, m)?)?;
    m.add_function(wrap_pyfunction!(bounds, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    Ok(())
}
