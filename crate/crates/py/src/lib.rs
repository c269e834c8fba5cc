//! Python bindings: scenes, ray tracing, coverage datasets, the navigation
//! environment and DQN training/inference.

use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use raydar::bundled;
use raydar::dataset::{generate_dataset, write_csv, DatasetMode, DatasetRow};
use raydar::dqn::{self, DqnConfig, DqnError, Endpoints};
use raydar::geometry::Vec3;
use raydar::raytrace::{self, PropagationPath, TraceError};
use raydar::rlenv::{self, Action, Cell, EnvError};
use raydar::scene::{self, SceneError};

fn scene_err(e: SceneError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn trace_err(e: TraceError) -> PyErr {
    match e {
        TraceError::UnknownTransmitter(_) => PyKeyError::new_err(e.to_string()),
        TraceError::Scene(e) => scene_err(e),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn env_err(e: EnvError) -> PyErr {
    match e {
        EnvError::OutOfGrid(..) | EnvError::Blocked(..) | EnvError::StepAfterDone => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn dqn_err(e: DqnError) -> PyErr {
    match e {
        DqnError::Env(e) => env_err(e),
        DqnError::Config(_) | DqnError::Checkpoint(_) | DqnError::Architecture { .. } | DqnError::Dimension { .. } => {
            PyValueError::new_err(e.to_string())
        }
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A validated digital-twin scene.
#[pyclass(module = "raydar", frozen)]
#[derive(Clone)]
struct Scene {
    inner: scene::Scene,
}

#[pymethods]
impl Scene {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        scene::parse_scene(text).map(|inner| Scene { inner }).map_err(scene_err)
    }

    /// One of the scenes shipped with the library: cubicle, meeting, dallas, houston.
    #[staticmethod]
    fn bundled(name: &str) -> PyResult<Self> {
        let text = bundled::scene_text(name).ok_or_else(|| PyKeyError::new_err(name.to_string()))?;
        Self::from_json(text)
    }

    /// Apply an overlay given as JSON text, or `None` for the bundled one.
    #[pyo3(signature = (overlay=None))]
    fn with_overlay(&self, overlay: Option<&str>) -> PyResult<Self> {
        let parsed = match overlay {
            Some(text) => scene::parse_overlay(text).map_err(scene_err)?,
            None => bundled::overlay(&self.inner.name)
                .ok_or_else(|| PyKeyError::new_err(format!("no bundled overlay for {}", self.inner.name)))?,
        };
        scene::apply_overlay(&self.inner, &parsed)
            .map(|inner| Scene { inner })
            .map_err(scene_err)
    }

    /// Copy with a different reflection depth.
    fn with_max_reflections(&self, depth: u32) -> PyResult<Self> {
        let mut inner = self.inner.clone();
        inner.max_reflections = depth;
        inner.validate().map_err(scene_err)?;
        Ok(Scene { inner })
    }

    /// The four single-transmitter quadrant scenes, numbered 1-4 in order.
    fn quadrants(&self) -> PyResult<Vec<Scene>> {
        let qs = scene::split_quadrants_by_id(&self.inner).map_err(scene_err)?;
        Ok(qs.into_iter().map(|inner| Scene { inner }).collect())
    }

    fn to_json(&self) -> String {
        scene::serialize_scene(&self.inner)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn max_reflections(&self) -> u32 {
        self.inner.max_reflections
    }

    /// `(nx, ny)`.
    #[getter]
    fn grid_shape(&self) -> (usize, usize) {
        (self.inner.grid.nx, self.inner.grid.ny)
    }

    #[getter]
    fn transmitter_ids(&self) -> Vec<String> {
        self.inner.transmitters.iter().map(|t| t.id.clone()).collect()
    }

    #[getter]
    fn object_ids(&self) -> Vec<String> {
        self.inner.objects.iter().map(|o| o.id.clone()).collect()
    }

    fn cell_center(&self, i: usize, j: usize) -> PyResult<(f64, f64)> {
        let g = &self.inner.grid;
        if i >= g.nx || j >= g.ny {
            return Err(PyValueError::new_err(format!("cell ({i}, {j}) is outside the grid")));
        }
        let [x, y] = g.cell_center(i, j);
        Ok((x, y))
    }

    /// Grid cell containing `(x, y)`, or `None` outside the grid.
    fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        self.inner.grid.cell_of(x, y)
    }

    /// Cells whose center lies under an obstacle footprint.
    fn blocked_cells(&self) -> Vec<(usize, usize)> {
        let occ = scene::to_occupancy(&self.inner);
        self.inner.grid.cells().filter(|&(i, j)| occ.is_blocked(i, j)).collect()
    }

    fn __repr__(&self) -> String {
        let g = &self.inner.grid;
        format!(
            "Scene(name={:?}, objects={}, transmitters={}, grid={}x{})",
            self.inner.name,
            self.inner.objects.len(),
            self.inner.transmitters.len(),
            g.nx,
            g.ny
        )
    }
}

fn default_tx(scene: &scene::Scene, tx: Option<&str>) -> PyResult<String> {
    match tx {
        Some(id) => Ok(id.to_string()),
        None => scene
            .transmitters
            .first()
            .map(|t| t.id.clone())
            .ok_or_else(|| PyValueError::new_err("scene has no transmitter")),
    }
}

/// One propagation path from transmitter to receiver.
#[pyclass(module = "raydar", frozen, get_all)]
struct Path {
    /// `(x, y, z)` of transmitter, each interaction point, and receiver.
    vertices: Vec<(f64, f64, f64)>,
    facets: Vec<usize>,
    theta_re: f64,
    theta_im: f64,
    phase: f64,
    delay: f64,
    zen_aod: f64,
    azi_aod: f64,
    zen_aoa: f64,
    azi_aoa: f64,
    length: f64,
}

impl From<&PropagationPath> for Path {
    fn from(p: &PropagationPath) -> Self {
        Path {
            vertices: p.vertices.iter().map(|v| (v.x, v.y, v.z)).collect(),
            facets: p.facets.clone(),
            theta_re: p.theta.re,
            theta_im: p.theta.im,
            phase: p.phase,
            delay: p.delay,
            zen_aod: p.zen_aod,
            azi_aod: p.azi_aod,
            zen_aoa: p.zen_aoa,
            azi_aoa: p.azi_aoa,
            length: p.length(),
        }
    }
}

#[pymethods]
impl Path {
    #[getter]
    fn n_reflections(&self) -> usize {
        self.facets.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Path(reflections={}, length={:.4}, theta={:.4e}{:+.4e}j)",
            self.facets.len(),
            self.length,
            self.theta_re,
            self.theta_im
        )
    }
}

/// Ray tracer bound to one transmitter; the receiver can be moved cheaply.
#[pyclass(module = "raydar", frozen)]
struct Tracer {
    inner: raytrace::Tracer,
}

#[pymethods]
impl Tracer {
    #[new]
    #[pyo3(signature = (scene, tx=None))]
    fn new(scene: &Scene, tx: Option<&str>) -> PyResult<Self> {
        let id = default_tx(&scene.inner, tx)?;
        raytrace::Tracer::new(&scene.inner, &id)
            .map(|inner| Tracer { inner })
            .map_err(trace_err)
    }

    #[getter]
    fn wavelength(&self) -> f64 {
        self.inner.wavelength()
    }

    /// Paths to a receiver at `(x, y, z)`, shortest first.
    fn paths(&self, x: f64, y: f64, z: f64) -> PyResult<Vec<Path>> {
        let paths = self.inner.move_receiver(Vec3::new(x, y, z)).map_err(trace_err)?;
        Ok(paths.iter().map(Path::from).collect())
    }
}

fn parse_mode(mode: &str) -> PyResult<DatasetMode> {
    match mode {
        "per-cell" => Ok(DatasetMode::PerCell),
        "per-path" => Ok(DatasetMode::PerPath),
        m => Err(PyValueError::new_err(format!("unknown dataset mode {m:?}"))),
    }
}

/// Paths from one transmitter to every grid cell.
#[pyclass(module = "raydar", frozen)]
struct CoverageMap {
    inner: raytrace::CoverageMap,
}

#[pymethods]
impl CoverageMap {
    #[getter]
    fn transmitter_id(&self) -> &str {
        &self.inner.transmitter_id
    }

    #[getter]
    fn dead_count(&self) -> usize {
        self.inner.dead_count()
    }

    #[getter]
    fn dead_fraction(&self) -> f64 {
        self.inner.dead_fraction()
    }

    fn received_power_dbm(&self, i: usize, j: usize) -> PyResult<Option<f64>> {
        let g = &self.inner.grid;
        if i >= g.nx || j >= g.ny {
            return Err(PyValueError::new_err(format!("cell ({i}, {j}) is outside the grid")));
        }
        Ok(self.inner.received_power_dbm(i, j))
    }

    fn paths(&self, i: usize, j: usize) -> PyResult<Vec<Path>> {
        let g = &self.inner.grid;
        if i >= g.nx || j >= g.ny {
            return Err(PyValueError::new_err(format!("cell ({i}, {j}) is outside the grid")));
        }
        Ok(self.inner.cell(i, j).paths.iter().map(Path::from).collect())
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner
            .write_csv(&mut buf)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(String::from_utf8(buf).expect("csv is ascii"))
    }

    /// Ten features per row: x, y, four angles, Θ real and imaginary,
    /// phase, delay.
    #[pyo3(signature = (mode="per-cell"))]
    fn dataset(&self, mode: &str) -> PyResult<Vec<[f64; 10]>> {
        let rows = generate_dataset(&self.inner, parse_mode(mode)?);
        Ok(rows.iter().map(DatasetRow::to_array).collect())
    }

    #[pyo3(signature = (mode="per-cell"))]
    fn dataset_csv(&self, mode: &str) -> PyResult<String> {
        let rows = generate_dataset(&self.inner, parse_mode(mode)?);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(String::from_utf8(buf).expect("csv is ascii"))
    }
}

/// Trace every grid cell. `workers` defaults to the `RAYDAR_THREADS`
/// environment variable, then to all cores.
#[pyfunction]
#[pyo3(signature = (scene, tx=None, workers=None))]
fn coverage(py: Python<'_>, scene: &Scene, tx: Option<&str>, workers: Option<usize>) -> PyResult<CoverageMap> {
    let id = default_tx(&scene.inner, tx)?;
    let s = &scene.inner;
    let map = py.detach(|| match workers.or_else(raytrace::env_worker_count) {
        Some(n) => raytrace::coverage_map_with_workers(s, &id, n),
        None => raytrace::coverage_map(s, &id),
    });
    map.map(|inner| CoverageMap { inner }).map_err(trace_err)
}

fn parse_action(action: &Bound<'_, PyAny>) -> PyResult<Action> {
    if let Ok(k) = action.extract::<usize>() {
        return Action::from_index(k).ok_or_else(|| PyValueError::new_err(format!("action index {k} out of range")));
    }
    let s: String = action.extract()?;
    s.parse().map_err(|_| PyValueError::new_err(format!("unknown action {s:?}")))
}

/// Grid navigation environment over a scene's coverage map.
#[pyclass(module = "raydar")]
struct NavEnv {
    inner: rlenv::NavEnv,
}

#[pymethods]
impl NavEnv {
    #[new]
    fn new(scene: &Scene, coverage: &CoverageMap) -> PyResult<Self> {
        rlenv::NavEnv::from_coverage(&scene.inner, &coverage.inner)
            .map(|inner| NavEnv { inner })
            .map_err(env_err)
    }

    /// Start an episode; returns the raw state at `start`.
    fn reset(&mut self, start: Cell, target: Cell) -> PyResult<[f64; 10]> {
        self.inner.reset(start, target).map_err(env_err)
    }

    /// `action` is an index 0-3 or one of "x-", "x+", "y-", "y+". Returns
    /// `(state, reward, done, collided)`.
    fn step(&mut self, action: &Bound<'_, PyAny>) -> PyResult<([f64; 10], f64, bool, bool)> {
        let out = self.inner.step(parse_action(action)?).map_err(env_err)?;
        Ok((out.next_state, out.reward, out.done, out.collided))
    }

    fn cell_at(&self, x: f64, y: f64) -> PyResult<Cell> {
        self.inner.cell_at(x, y).map_err(env_err)
    }

    /// Fewest moves between two free cells, or `None` if unreachable.
    fn shortest_path(&self, start: Cell, target: Cell) -> Option<usize> {
        rlenv::bfs_shortest(self.inner.occupancy(), start, target)
    }

    #[getter]
    fn position(&self) -> Cell {
        self.inner.position()
    }

    #[getter]
    fn target(&self) -> Cell {
        self.inner.target()
    }

    #[getter]
    fn step_count(&self) -> usize {
        self.inner.step_count()
    }

    #[getter]
    fn done(&self) -> bool {
        self.inner.is_done()
    }

    #[getter]
    fn max_steps(&self) -> usize {
        self.inner.max_steps
    }

    #[setter]
    fn set_max_steps(&mut self, n: usize) {
        self.inner.max_steps = n;
    }
}

/// A rollout: visited cells, actions taken, per-step rewards.
#[pyclass(module = "raydar", frozen, get_all)]
struct Trajectory {
    cells: Vec<Cell>,
    actions: Vec<String>,
    rewards: Vec<f64>,
    collided: Vec<bool>,
    reached: bool,
}

#[pymethods]
impl Trajectory {
    #[getter]
    fn steps(&self) -> usize {
        self.actions.len()
    }

    #[getter]
    fn collisions(&self) -> usize {
        self.collided.iter().filter(|&&c| c).count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(steps={}, collisions={}, reached={})",
            self.actions.len(),
            self.collisions(),
            self.reached
        )
    }
}

impl From<rlenv::Trajectory> for Trajectory {
    fn from(t: rlenv::Trajectory) -> Self {
        Trajectory {
            cells: t.cells,
            actions: t.actions.iter().map(|a| a.as_str().to_string()).collect(),
            rewards: t.rewards,
            collided: t.collided,
            reached: t.reached,
        }
    }
}

/// A trained Q-network with the normalization it was trained under.
#[pyclass(module = "raydar", frozen)]
struct Policy {
    checkpoint: dqn::Checkpoint,
    network: dqn::QNetwork,
    /// `(episode, steps, total_reward, collisions, reached)` per training
    /// episode; empty for a loaded checkpoint.
    episodes: Vec<(usize, usize, f64, usize, bool)>,
}

impl Policy {
    fn from_checkpoint(checkpoint: dqn::Checkpoint) -> PyResult<Self> {
        let network = checkpoint.network().map_err(dqn_err)?;
        Ok(Policy {
            checkpoint,
            network,
            episodes: Vec::new(),
        })
    }
}

#[pymethods]
impl Policy {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Self::from_checkpoint(dqn::Checkpoint::from_json(text).map_err(dqn_err)?)
    }

    fn to_json(&self) -> String {
        self.checkpoint.to_json()
    }

    #[getter]
    fn episodes(&self) -> Vec<(usize, usize, f64, usize, bool)> {
        self.episodes.clone()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.checkpoint.config.seed
    }

    /// Q-values of the four actions for a raw state vector.
    fn q_values(&self, state: [f64; 10]) -> PyResult<Vec<f64>> {
        let x = self.checkpoint.normalization.apply(&state);
        self.network.forward(&x).map_err(dqn_err)
    }

    /// Greedy rollout from `start` to `target`.
    #[pyo3(signature = (env, start, target, max_steps=None))]
    fn infer(&self, env: &mut NavEnv, start: Cell, target: Cell, max_steps: Option<usize>) -> PyResult<Trajectory> {
        let limit = max_steps.unwrap_or(env.inner.max_steps);
        dqn::infer_path(&self.network, &self.checkpoint.normalization, &mut env.inner, start, target, limit)
            .map(Trajectory::from)
            .map_err(dqn_err)
    }
}

/// Train a policy on `env`. Endpoints are fixed when both `start` and
/// `target` are given and random per episode otherwise. `config` is a JSON
/// object of training settings; keyword arguments override it.
#[pyfunction]
#[pyo3(signature = (env, start=None, target=None, episodes=None, seed=None, config=None))]
fn train(
    py: Python<'_>,
    env: &mut NavEnv,
    start: Option<Cell>,
    target: Option<Cell>,
    episodes: Option<usize>,
    seed: Option<u64>,
    config: Option<&str>,
) -> PyResult<Policy> {
    let mut cfg = match config {
        Some(text) => serde_json::from_str::<DqnConfig>(text).map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => DqnConfig::default(),
    };
    cfg.episodes = episodes.unwrap_or(cfg.episodes);
    cfg.seed = seed.unwrap_or(cfg.seed);
    let endpoints = match (start, target) {
        (Some(start), Some(target)) => Endpoints::Fixed { start, target },
        (None, None) => Endpoints::Random,
        _ => return Err(PyValueError::new_err("give both start and target, or neither")),
    };
    let inner = &mut env.inner;
    let outcome = py.detach(|| dqn::train(inner, &cfg, endpoints)).map_err(dqn_err)?;
    let mut policy = Policy::from_checkpoint(dqn::Checkpoint::new(&outcome.network, outcome.normalization, &cfg))?;
    policy.episodes = outcome
        .report
        .episodes
        .iter()
        .map(|r| (r.episode, r.steps, r.total_reward, r.collisions, r.reached))
        .collect();
    Ok(policy)
}

/// Reward for standing on `pos` with goal `target`.
#[pyfunction]
#[pyo3(signature = (pos, target, collided=false))]
fn reward(pos: Cell, target: Cell, collided: bool) -> f64 {
    rlenv::reward(pos, target, collided)
}

#[pymodule]
#[pyo3(name = "raydar")]
fn raydar_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Scene>()?;
    m.add_class::<Path>()?;
    m.add_class::<Tracer>()?;
    m.add_class::<CoverageMap>()?;
    m.add_class::<NavEnv>()?;
    m.add_class::<Trajectory>()?;
    m.add_class::<Policy>()?;
    m.add_function(wrap_pyfunction!(coverage, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(reward, m)?)?;
    Ok(())
}
