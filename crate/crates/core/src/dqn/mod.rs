//! Deep Q-learning on a [`NavEnv`]: behavior and target networks, ε-greedy
//! rollouts, uniform experience replay and greedy inference.

mod network;

use std::collections::VecDeque;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetRow, N_FEATURES};
use crate::rlenv::{bfs_shortest, Action, Cell, EnvError, EpisodeRecord, NavEnv, StateVector, Trajectory};
use crate::scene::GridSpec;

pub use network::{huber, Adam, Gradients, QNetwork, Sample};

pub const HIDDEN_LAYERS: usize = 5;
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DqnError {
    #[error("expected input of length {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("network layers {found:?} do not match {expected:?}")]
    Architecture { expected: Vec<usize>, found: Vec<usize> },
    #[error("non-finite loss in episode {episode} at step {step}")]
    Diverged { episode: usize, step: usize },
    #[error("target ({}, {}) cannot be reached from ({}, {})", .1.0, .1.1, .0.0, .0.1)]
    Unreachable(Cell, Cell),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnConfig {
    pub gamma: f64,
    pub epsilon: f64,
    pub episodes: usize,
    pub hidden: usize,
    pub learning_rate: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Gradient steps between target network copies.
    pub target_sync: usize,
    pub seed: u64,
    /// Per-episode step cap; `None` uses the environment's.
    pub max_steps: Option<usize>,
    /// Rewards are multiplied by this before entering the Bellman targets
    /// so that Q-values stay near unit scale.
    pub reward_scale: f64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            gamma: 0.9,
            epsilon: 0.1,
            episodes: 500,
            hidden: 128,
            learning_rate: 1e-3,
            replay_capacity: 50_000,
            batch_size: 64,
            target_sync: 500,
            seed: 7,
            max_steps: None,
            reward_scale: 1.0 / 5000.0,
        }
    }
}

impl DqnConfig {
    /// Defaults with the outdoor episode count.
    pub fn outdoor() -> Self {
        DqnConfig {
            episodes: 80,
            ..Self::default()
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![N_FEATURES];
        d.extend(std::iter::repeat_n(self.hidden, HIDDEN_LAYERS));
        d.push(Action::ALL.len());
        d
    }

    pub fn validate(&self) -> Result<(), DqnError> {
        let bad = |m: &str| Err(DqnError::Config(m.into()));
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if self.hidden == 0 || self.batch_size == 0 || self.target_sync == 0 {
            return bad("hidden width, batch size and sync interval must be positive");
        }
        if self.replay_capacity < self.batch_size {
            return bad("replay capacity is smaller than the batch");
        }
        if !(self.learning_rate > 0.0 && self.reward_scale > 0.0) {
            return bad("learning rate and reward scale must be positive");
        }
        if self.max_steps == Some(0) {
            return bad("max_steps must be positive");
        }
        Ok(())
    }
}

/// Maps raw state vectors to network inputs of order one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub x_center: f64,
    pub x_half: f64,
    pub y_center: f64,
    pub y_half: f64,
    pub theta_scale: f64,
    pub delay_scale: f64,
}

impl Normalization {
    /// Coordinates map to `[−1, 1]` over the grid's cell centers; Re/Im Θ
    /// and delay are divided by their largest magnitude in `rows`.
    pub fn from_rows(grid: &GridSpec, rows: &[DatasetRow]) -> Self {
        let [x0, y0] = grid.cell_center(0, 0);
        let [x1, y1] = grid.cell_center(grid.nx.saturating_sub(1), grid.ny.saturating_sub(1));
        let positive = |v: f64| if v > 0.0 { v } else { 1.0 };
        let theta = rows
            .iter()
            .fold(0.0f64, |m, r| m.max(r.theta_re.abs()).max(r.theta_im.abs()));
        let delay = rows.iter().fold(0.0f64, |m, r| m.max(r.delay.abs()));
        Normalization {
            x_center: 0.5 * (x0 + x1),
            x_half: positive(0.5 * (x1 - x0)),
            y_center: 0.5 * (y0 + y1),
            y_half: positive(0.5 * (y1 - y0)),
            theta_scale: positive(theta),
            delay_scale: positive(delay),
        }
    }

    pub fn apply(&self, s: &StateVector) -> StateVector {
        use std::f64::consts::PI;
        [
            (s[0] - self.x_center) / self.x_half,
            (s[1] - self.y_center) / self.y_half,
            s[2] / PI,
            s[3] / PI,
            s[4] / PI,
            s[5] / PI,
            s[6] / self.theta_scale,
            s[7] / self.theta_scale,
            s[8] / PI,
            s[9] / self.delay_scale,
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    /// Normalized.
    pub state: StateVector,
    pub action: usize,
    pub reward: f64,
    pub next_state: StateVector,
    pub done: bool,
}

/// Fixed-capacity FIFO of transitions.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, k: usize) -> Option<&Transition> {
        self.items.get(k)
    }

    /// `n` draws with replacement.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<&Transition> {
        (0..n).map(|_| &self.items[rng.gen_range(0..self.items.len())]).collect()
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = k;
        }
    }
    best
}

/// ε-greedy over `q`.
pub fn select_action<R: Rng>(q: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..q.len())
    } else {
        argmax(q)
    }
}

pub fn bellman_target(t: &Transition, target: &QNetwork, gamma: f64) -> Result<f64, DqnError> {
    if t.done {
        return Ok(t.reward);
    }
    let q = target.forward(&t.next_state)?;
    Ok(t.reward + gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// One Adam step on the mean Huber loss of `batch`; returns the loss.
pub fn train_step(
    behavior: &mut QNetwork,
    target: &QNetwork,
    optimizer: &mut Adam,
    batch: &[&Transition],
    gamma: f64,
) -> Result<f64, DqnError> {
    if batch.is_empty() {
        return Err(DqnError::Config("empty batch".into()));
    }
    let mut next = Array2::zeros((batch.len(), N_FEATURES));
    for (k, t) in batch.iter().enumerate() {
        next.row_mut(k).assign(&ndarray::ArrayView1::from(&t.next_state));
    }
    let next_q = target.forward_batch(next.view());
    let samples: Vec<Sample> = batch
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let y = if t.done {
                t.reward
            } else {
                let m = next_q.row(k).iter().copied().fold(f64::NEG_INFINITY, f64::max);
                t.reward + gamma * m
            };
            Sample {
                input: &t.state,
                action: t.action,
                target: y,
            }
        })
        .collect();
    let (loss, grads) = behavior.loss_gradients(&samples);
    if !loss.is_finite() {
        return Ok(loss);
    }
    optimizer.step(behavior, &grads);
    Ok(loss)
}

/// Where episodes start and end.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endpoints {
    Fixed { start: Cell, target: Cell },
    /// Fresh reachable pair each episode.
    Random,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub episodes: Vec<EpisodeRecord>,
    /// Fewest steps among episodes that reached the target, and the first
    /// episode achieving it.
    pub best: Option<(usize, usize)>,
    /// Fewest steps of a collision-free greedy rollout after an episode,
    /// and that episode. Fixed endpoints only.
    pub greedy_best: Option<(usize, usize)>,
    pub gradient_steps: usize,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// The network after the `greedy_best` episode, or the final one.
    pub network: QNetwork,
    pub final_network: QNetwork,
    pub normalization: Normalization,
    pub report: TrainReport,
}

pub fn train(env: &mut NavEnv, config: &DqnConfig, endpoints: Endpoints) -> Result<TrainOutcome, DqnError> {
    train_with(env, config, endpoints, |_| {})
}

/// [`train`] with a callback after every episode.
pub fn train_with(
    env: &mut NavEnv,
    config: &DqnConfig,
    endpoints: Endpoints,
    mut on_episode: impl FnMut(&EpisodeRecord),
) -> Result<TrainOutcome, DqnError> {
    config.validate()?;
    if let Endpoints::Fixed { start, target } = endpoints {
        // surfaces blocked or out-of-grid endpoints as environment errors
        env.reset(start, target)?;
        if bfs_shortest(env.occupancy(), start, target).is_none() {
            return Err(DqnError::Unreachable(start, target));
        }
    }
    if let Some(m) = config.max_steps {
        env.max_steps = m;
    }
    let norm = Normalization::from_rows(env.grid(), env.features());
    let dims = config.dims();
    let mut behavior = QNetwork::init(&dims, config.seed);
    let mut target = behavior.clone();
    let mut optimizer = Adam::new(&behavior, config.learning_rate);
    let mut replay = ReplayBuffer::new(config.replay_capacity);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0fd0);
    let mut report = TrainReport::default();
    let mut selected: Option<QNetwork> = None;

    for episode in 0..config.episodes {
        let (start, goal) = match endpoints {
            Endpoints::Fixed { start, target } => (start, target),
            Endpoints::Random => env.random_endpoints(&mut rng)?,
        };
        let mut state = norm.apply(&env.reset(start, goal)?);
        let mut record = EpisodeRecord {
            episode,
            steps: 0,
            total_reward: 0.0,
            collisions: 0,
            reached: start == goal,
        };
        while !env.is_done() {
            let q = behavior.forward(&state)?;
            let action = select_action(&q, config.epsilon, &mut rng);
            let out = env.step(Action::ALL[action])?;
            let next = norm.apply(&out.next_state);
            record.steps += 1;
            record.total_reward += out.reward;
            record.collisions += out.collided as usize;
            record.reached = out.reached;
            // running out of steps is not a terminal state of the task
            replay.push(Transition {
                state,
                action,
                reward: out.reward * config.reward_scale,
                next_state: next,
                done: out.reached,
            });
            state = next;
            if replay.len() >= config.batch_size {
                let batch = replay.sample(config.batch_size, &mut rng);
                let loss = train_step(&mut behavior, &target, &mut optimizer, &batch, config.gamma)?;
                if !loss.is_finite() {
                    return Err(DqnError::Diverged {
                        episode,
                        step: record.steps,
                    });
                }
                report.gradient_steps += 1;
                if report.gradient_steps % config.target_sync == 0 {
                    target.copy_from(&behavior)?;
                }
            }
        }
        if record.reached && report.best.is_none_or(|(s, _)| record.steps < s) {
            report.best = Some((record.steps, episode));
        }
        if let Endpoints::Fixed { start, target: goal } = endpoints {
            let mut probe = env.clone();
            let tr = infer_path(&behavior, &norm, &mut probe, start, goal, env.max_steps)?;
            if tr.reached
                && tr.collisions() == 0
                && report.greedy_best.is_none_or(|(s, _)| tr.steps() < s)
            {
                report.greedy_best = Some((tr.steps(), episode));
                selected = Some(behavior.clone());
            }
        }
        on_episode(&record);
        report.episodes.push(record);
    }
    Ok(TrainOutcome {
        network: selected.unwrap_or_else(|| behavior.clone()),
        final_network: behavior,
        normalization: norm,
        report,
    })
}

/// Greedy rollout from `start` toward `target` for at most `max_steps`.
pub fn infer_path(
    net: &QNetwork,
    norm: &Normalization,
    env: &mut NavEnv,
    start: Cell,
    target: Cell,
    max_steps: usize,
) -> Result<Trajectory, DqnError> {
    env.max_steps = max_steps;
    let mut state = env.reset(start, target)?;
    let mut tr = Trajectory {
        cells: vec![start],
        reached: start == target,
        ..Default::default()
    };
    while !env.is_done() {
        let action = Action::ALL[argmax(&net.forward(&norm.apply(&state))?)];
        let out = env.step(action)?;
        tr.cells.push(env.position());
        tr.actions.push(action);
        tr.rewards.push(out.reward);
        tr.collided.push(out.collided);
        tr.reached = out.reached;
        state = out.next_state;
    }
    Ok(tr)
}

/// On-disk form of a trained policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub dims: Vec<usize>,
    /// Row-major per layer.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub normalization: Normalization,
    pub config: DqnConfig,
}

impl Checkpoint {
    pub fn new(net: &QNetwork, normalization: Normalization, config: &DqnConfig) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            dims: net.dims.clone(),
            weights: net.weights.iter().map(|w| w.iter().copied().collect()).collect(),
            biases: net.biases.iter().map(|b| b.to_vec()).collect(),
            normalization,
            config: config.clone(),
        }
    }

    pub fn network(&self) -> Result<QNetwork, DqnError> {
        let bad = |m: String| DqnError::Checkpoint(m);
        if self.version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported version {}", self.version)));
        }
        let layers = self.dims.len().saturating_sub(1);
        if layers == 0 || self.weights.len() != layers || self.biases.len() != layers {
            return Err(bad("layer count does not match dims".into()));
        }
        let mut net = QNetwork::zeros(&self.dims);
        for l in 0..layers {
            let shape = (self.dims[l + 1], self.dims[l]);
            net.weights[l] = Array2::from_shape_vec(shape, self.weights[l].clone())
                .map_err(|_| bad(format!("layer {l}: weight count does not match dims")))?;
            if self.biases[l].len() != self.dims[l + 1] {
                return Err(bad(format!("layer {l}: bias count does not match dims")));
            }
            net.biases[l] = self.biases[l].clone().into();
        }
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoints contain only finite numbers")
    }

    pub fn from_json(text: &str) -> Result<Self, DqnError> {
        serde_json::from_str(text).map_err(|e| DqnError::Checkpoint(e.to_string()))
    }
}
