//! Grid navigation environment over a scene's occupancy grid, with the
//! traced per-cell features as observations.

use std::collections::VecDeque;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::dataset::{generate_dataset, DatasetMode, DatasetRow, N_FEATURES};
use crate::raytrace::CoverageMap;
use crate::scene::{to_occupancy, GridSpec, OccupancyGrid, Scene};

pub const ARRIVAL_REWARD: f64 = 5000.0;
pub const COLLISION_PENALTY: f64 = -5000.0;

pub type StateVector = [f64; N_FEATURES];
pub type Cell = (usize, usize);

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("cell ({0}, {1}) is outside the grid")]
    OutOfGrid(i64, i64),
    #[error("cell ({0}, {1}) is blocked")]
    Blocked(usize, usize),
    #[error("episode is over")]
    StepAfterDone,
    #[error("{found} feature rows for a grid of {expected} cells")]
    FeatureCount { expected: usize, found: usize },
    #[error("no free path between ({}, {}) and ({}, {})", .0.0, .0.1, .1.0, .1.1)]
    Unreachable(Cell, Cell),
    #[error("fewer than two free cells")]
    TooFewFreeCells,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    XMinus,
    XPlus,
    YMinus,
    YPlus,
}

impl Action {
    /// Network output order.
    pub const ALL: [Action; 4] = [Action::XMinus, Action::XPlus, Action::YMinus, Action::YPlus];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(k: usize) -> Option<Action> {
        Self::ALL.get(k).copied()
    }

    pub fn delta(self) -> (i64, i64) {
        match self {
            Action::XMinus => (-1, 0),
            Action::XPlus => (1, 0),
            Action::YMinus => (0, -1),
            Action::YPlus => (0, 1),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::XMinus => "x-",
            Action::XPlus => "x+",
            Action::YMinus => "y-",
            Action::YPlus => "y+",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown action \"{s}\""))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub next_state: StateVector,
    pub reward: f64,
    pub done: bool,
    pub collided: bool,
    pub reached: bool,
}

/// Distance term in cells, plus the arrival bonus and collision penalty.
pub fn reward(pos: Cell, target: Cell, collided: bool) -> f64 {
    let dx = pos.0 as f64 - target.0 as f64;
    let dy = pos.1 as f64 - target.1 as f64;
    let mut r = -(dx * dx + dy * dy);
    if pos == target {
        r += ARRIVAL_REWARD;
    }
    if collided {
        r += COLLISION_PENALTY;
    }
    r
}

/// Minimum number of 4-neighbor moves over free cells, or `None`.
pub fn bfs_shortest(occupancy: &OccupancyGrid, start: Cell, target: Cell) -> Option<usize> {
    let (nx, ny) = (occupancy.nx, occupancy.ny);
    if start.0 >= nx || start.1 >= ny || target.0 >= nx || target.1 >= ny {
        return None;
    }
    if occupancy.is_blocked(start.0, start.1) || occupancy.is_blocked(target.0, target.1) {
        return None;
    }
    let mut dist = vec![usize::MAX; nx * ny];
    let mut queue = VecDeque::new();
    dist[start.1 * nx + start.0] = 0;
    queue.push_back(start);
    while let Some((i, j)) = queue.pop_front() {
        let d = dist[j * nx + i];
        if (i, j) == target {
            return Some(d);
        }
        for a in Action::ALL {
            let (di, dj) = a.delta();
            let (ni, nj) = (i as i64 + di, j as i64 + dj);
            if !occupancy.is_free(ni, nj) {
                continue;
            }
            let k = nj as usize * nx + ni as usize;
            if dist[k] == usize::MAX {
                dist[k] = d + 1;
                queue.push_back((ni as usize, nj as usize));
            }
        }
    }
    None
}

/// One agent on the grid. Observations are the raw per-cell dataset rows.
#[derive(Clone, Debug)]
pub struct NavEnv {
    grid: GridSpec,
    occupancy: OccupancyGrid,
    features: Vec<DatasetRow>,
    position: Cell,
    target: Cell,
    step_count: usize,
    pub max_steps: usize,
    done: bool,
}

impl NavEnv {
    /// `features` is a per-cell dataset of `grid`, `j` outer.
    pub fn new(grid: GridSpec, occupancy: OccupancyGrid, features: Vec<DatasetRow>) -> Result<Self, EnvError> {
        if features.len() != grid.len() || occupancy.nx != grid.nx || occupancy.ny != grid.ny {
            return Err(EnvError::FeatureCount {
                expected: grid.len(),
                found: features.len(),
            });
        }
        Ok(NavEnv {
            grid,
            occupancy,
            features,
            position: (0, 0),
            target: (0, 0),
            step_count: 0,
            max_steps: 20 * (grid.nx + grid.ny),
            done: true,
        })
    }

    pub fn from_coverage(scene: &Scene, map: &CoverageMap) -> Result<Self, EnvError> {
        Self::new(map.grid, to_occupancy(scene), generate_dataset(map, DatasetMode::PerCell))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn occupancy(&self) -> &OccupancyGrid {
        &self.occupancy
    }

    pub fn features(&self) -> &[DatasetRow] {
        &self.features
    }

    pub fn position(&self) -> Cell {
        self.position
    }

    pub fn target(&self) -> Cell {
        self.target
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Cell containing the point `(x, y)` in meters.
    pub fn cell_at(&self, x: f64, y: f64) -> Result<Cell, EnvError> {
        self.grid
            .cell_of(x, y)
            .ok_or(EnvError::OutOfGrid(x.floor() as i64, y.floor() as i64))
    }

    pub fn extract_state(&self, cell: Cell) -> Result<StateVector, EnvError> {
        if cell.0 >= self.grid.nx || cell.1 >= self.grid.ny {
            return Err(EnvError::OutOfGrid(cell.0 as i64, cell.1 as i64));
        }
        Ok(self.features[self.grid.index(cell.0, cell.1)].to_array())
    }

    fn check_free(&self, c: Cell) -> Result<(), EnvError> {
        if c.0 >= self.grid.nx || c.1 >= self.grid.ny {
            return Err(EnvError::OutOfGrid(c.0 as i64, c.1 as i64));
        }
        if self.occupancy.is_blocked(c.0, c.1) {
            return Err(EnvError::Blocked(c.0, c.1));
        }
        Ok(())
    }

    /// Starts an episode. `start == target` is allowed and yields an episode
    /// that is already over.
    pub fn reset(&mut self, start: Cell, target: Cell) -> Result<StateVector, EnvError> {
        self.check_free(start)?;
        self.check_free(target)?;
        self.position = start;
        self.target = target;
        self.step_count = 0;
        self.done = start == target;
        self.extract_state(start)
    }

    /// Uniformly drawn distinct free start and target cells connected by a
    /// free path.
    pub fn random_endpoints<R: Rng>(&self, rng: &mut R) -> Result<(Cell, Cell), EnvError> {
        let free: Vec<Cell> = self.grid.cells().filter(|&(i, j)| !self.occupancy.is_blocked(i, j)).collect();
        if free.len() < 2 {
            return Err(EnvError::TooFewFreeCells);
        }
        for _ in 0..1000 {
            let a = free[rng.gen_range(0..free.len())];
            let b = free[rng.gen_range(0..free.len())];
            if a != b && bfs_shortest(&self.occupancy, a, b).is_some() {
                return Ok((a, b));
            }
        }
        Err(EnvError::TooFewFreeCells)
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterDone);
        }
        let (di, dj) = action.delta();
        let (ni, nj) = (self.position.0 as i64 + di, self.position.1 as i64 + dj);
        let collided = !self.occupancy.is_free(ni, nj);
        if !collided {
            self.position = (ni as usize, nj as usize);
        }
        self.step_count += 1;
        let reached = self.position == self.target;
        self.done = reached || self.step_count >= self.max_steps;
        Ok(StepOutcome {
            next_state: self.extract_state(self.position)?,
            reward: reward(self.position, self.target, collided),
            done: self.done,
            collided,
            reached,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub steps: usize,
    pub total_reward: f64,
    pub collisions: usize,
    pub reached: bool,
}

pub const EPISODE_HEADER: &str = "episode,steps,total_reward,collisions,reached";
pub const TRAJECTORY_HEADER: &str = "t,x,y,action,reward,collided";

fn seed_line<W: Write>(w: &mut W, seed: Option<u64>) -> io::Result<()> {
    match seed {
        Some(s) => writeln!(w, "# raydar seed={s}"),
        None => Ok(()),
    }
}

pub fn write_episode_log<W: Write>(records: &[EpisodeRecord], seed: Option<u64>, mut w: W) -> io::Result<()> {
    seed_line(&mut w, seed)?;
    writeln!(w, "{EPISODE_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.episode, r.steps, r.total_reward, r.collisions, r.reached as u8
        )?;
    }
    Ok(())
}

pub fn read_episode_log<R: BufRead>(r: R) -> Result<Vec<EpisodeRecord>, EnvError> {
    let mut out = Vec::new();
    let mut header = false;
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = k + 1;
        let bad = |message: String| EnvError::Malformed { line: line_no, message };
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header {
            if line.trim_end() != EPISODE_HEADER {
                return Err(bad("expected episode log header".into()));
            }
            header = true;
            continue;
        }
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 5 {
            return Err(bad(format!("expected 5 columns, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("\"{s}\": {e}")));
        let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("\"{s}\": {e}")));
        out.push(EpisodeRecord {
            episode: int(f[0])?,
            steps: int(f[1])?,
            total_reward: num(f[2])?,
            collisions: int(f[3])?,
            reached: match f[4] {
                "1" | "true" => true,
                "0" | "false" => false,
                s => return Err(bad(format!("\"{s}\": not a flag"))),
            },
        });
    }
    if !header {
        return Err(EnvError::Malformed {
            line: 1,
            message: "missing episode log header".into(),
        });
    }
    Ok(out)
}

/// One greedy or exploratory rollout. `cells[0]` is the start; `actions[k]`
/// leads from `cells[k]` to `cells[k + 1]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub cells: Vec<Cell>,
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    pub collided: Vec<bool>,
    pub reached: bool,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.actions.len()
    }

    pub fn collisions(&self) -> usize {
        self.collided.iter().filter(|&&c| c).count()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Every move changes one coordinate by one onto a free cell, or is a
    /// collision that leaves the position unchanged.
    pub fn is_legal(&self, occupancy: &OccupancyGrid) -> bool {
        let n = self.actions.len();
        if self.cells.len() != n + 1 || self.collided.len() != n || self.rewards.len() != n {
            return false;
        }
        if !self.cells.iter().all(|&(i, j)| occupancy.is_free(i as i64, j as i64)) {
            return false;
        }
        (0..n).all(|k| {
            let (a, b) = (self.cells[k], self.cells[k + 1]);
            if self.collided[k] {
                return a == b;
            }
            let (di, dj) = self.actions[k].delta();
            (a.0 as i64 + di, a.1 as i64 + dj) == (b.0 as i64, b.1 as i64)
        })
    }

    /// Row 0 is the start with an empty action.
    pub fn write_csv<W: Write>(&self, grid: &GridSpec, seed: Option<u64>, mut w: W) -> io::Result<()> {
        seed_line(&mut w, seed)?;
        writeln!(w, "{TRAJECTORY_HEADER}")?;
        for (t, &(i, j)) in self.cells.iter().enumerate() {
            let [x, y] = grid.cell_center(i, j);
            if t == 0 {
                writeln!(w, "0,{x},{y},,0,0")?;
            } else {
                let k = t - 1;
                writeln!(
                    w,
                    "{t},{x},{y},{},{},{}",
                    self.actions[k], self.rewards[k], self.collided[k] as u8
                )?;
            }
        }
        Ok(())
    }
}
