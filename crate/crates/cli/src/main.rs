//! `raydar`: validate scenes, trace coverage and datasets, train and run the
//! navigation policy, and plot training curves.

use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use raydar::bundled;
use raydar::dataset::{generate_dataset, stats, write_csv, DatasetMode};
use raydar::dqn::{infer_path, train_with, Checkpoint, DqnConfig, DqnError, Endpoints};
use raydar::raytrace::{coverage_map, coverage_map_with_workers, env_worker_count, CoverageMap, TraceError};
use raydar::rlenv::{bfs_shortest, read_episode_log, write_episode_log, Cell, EnvError, NavEnv};
use raydar::scene::{apply_overlay, parse_overlay, parse_scene, split_quadrants_by_id, to_occupancy, Scene, SceneError};
use raydar::svg;

#[derive(Parser)]
#[command(name = "raydar", version, about = "Digital-twin ray tracing and DQN navigation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Scene file, or the name of a bundled scene (cubicle, meeting, dallas, houston).
    #[arg(long, global = true)]
    scene: Option<String>,
    /// Overlay file, or `<scene>-dynamic` for a bundled one.
    #[arg(long, global = true)]
    overlay: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Overrides the scene's reflection depth.
    #[arg(long, global = true)]
    max_depth: Option<u32>,
    /// Transmitter id; defaults to the scene's first.
    #[arg(long, global = true)]
    tx: Option<String>,
    /// Restrict to one quadrant (1-4) of a four-transmitter scene.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=4))]
    quadrant: Option<u8>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scene's invariants.
    Validate,
    /// Trace the receiver grid and write coverage.csv.
    Coverage {
        /// Also write coverage.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Write the ray-tracing dataset to dataset.csv.
    Trace {
        #[arg(long, value_enum, default_value_t = Mode::PerCell)]
        mode: Mode,
    },
    /// Train a policy; writes checkpoint.json and episodes.csv.
    Train(TrainArgs),
    /// Greedy rollout of a trained policy; writes trajectory.csv.
    Infer {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Start cell center in meters, `x,y`.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        start: [f64; 2],
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        target: [f64; 2],
        #[arg(long)]
        max_steps: Option<usize>,
        /// Also write trajectory.svg over the coverage heatmap.
        #[arg(long)]
        svg: bool,
    },
    /// Draw reward, steps and collisions per episode from an episode log.
    Plot {
        #[arg(long)]
        log: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// JSON file with training settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Fixed start, `x,y` in meters; random per episode when omitted.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, requires = "target")]
    start: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, requires = "start")]
    target: Option<[f64; 2]>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    PerCell,
    PerPath,
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("\"{v}\": {e}"));
    Ok([p(x)?, p(y)?])
}

/// Exit status 1: usage, 2: invalid input, 3: runtime failure.
enum Failure {
    Usage(String),
    Invalid(Vec<String>),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => write!(f, "error: {m}"),
            Failure::Invalid(lines) => {
                for (k, l) in lines.iter().enumerate() {
                    if k > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{l}")?;
                }
                Ok(())
            }
        }
    }
}

impl From<SceneError> for Failure {
    fn from(e: SceneError) -> Self {
        match e {
            SceneError::Invalid(v) => Failure::Invalid(v.iter().map(ToString::to_string).collect()),
            e => Failure::Invalid(vec![e.to_string()]),
        }
    }
}

impl From<TraceError> for Failure {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::Scene(e) => e.into(),
            TraceError::UnknownTransmitter(_) => Failure::Invalid(vec![e.to_string()]),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<EnvError> for Failure {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::OutOfGrid(..) | EnvError::Blocked(..) | EnvError::Malformed { .. } => Failure::Invalid(vec![e.to_string()]),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<DqnError> for Failure {
    fn from(e: DqnError) -> Self {
        match e {
            DqnError::Env(e) => e.into(),
            DqnError::Config(_) | DqnError::Checkpoint(_) | DqnError::Architecture { .. } => {
                Failure::Invalid(vec![e.to_string()])
            }
            e => Failure::Runtime(e.to_string()),
        }
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_output(path: &Path, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    let runtime = |e: io::Error| Failure::Runtime(format!("{}: {e}", path.display()));
    let file = fs::File::create(path).map_err(runtime)?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(runtime)?;
    w.flush().map_err(runtime)
}

impl Global {
    fn load_scene(&self) -> Result<Scene, Failure> {
        let name = self
            .scene
            .as_deref()
            .ok_or_else(|| Failure::Usage("--scene is required".into()))?;
        let text = if Path::new(name).exists() {
            read_input(Path::new(name))?
        } else if let Some(t) = bundled::scene_text(name) {
            t.to_string()
        } else {
            return Err(Failure::Usage(format!("{name}: no such file or bundled scene")));
        };
        let mut scene = parse_scene(&text)?;
        if let Some(o) = &self.overlay {
            let text = if Path::new(o).exists() {
                read_input(Path::new(o))?
            } else if let Some(t) = o.strip_suffix("-dynamic").and_then(bundled::overlay_text) {
                t.to_string()
            } else {
                return Err(Failure::Usage(format!("{o}: no such file or bundled overlay")));
            };
            scene = apply_overlay(&scene, &parse_overlay(&text)?)?;
        }
        if let Some(d) = self.max_depth {
            scene.max_reflections = d;
            scene.validate()?;
        }
        if let Some(q) = self.quadrant {
            let [a, b, c, d] = split_quadrants_by_id(&scene)?;
            scene = [a, b, c, d].into_iter().nth(q as usize - 1).expect("range checked");
        }
        Ok(scene)
    }

    fn tx_id(&self, scene: &Scene) -> Result<String, Failure> {
        match &self.tx {
            Some(id) => Ok(id.clone()),
            None => scene
                .transmitters
                .first()
                .map(|t| t.id.clone())
                .ok_or_else(|| Failure::Invalid(vec!["scene has no transmitter".into()])),
        }
    }

    fn out_dir(&self) -> Result<&Path, Failure> {
        fs::create_dir_all(&self.out).map_err(|e| Failure::Runtime(format!("{}: {e}", self.out.display())))?;
        Ok(&self.out)
    }

    fn coverage(&self, scene: &Scene) -> Result<CoverageMap, Failure> {
        let tx = self.tx_id(scene)?;
        Ok(match env_worker_count() {
            Some(n) => coverage_map_with_workers(scene, &tx, n)?,
            None => coverage_map(scene, &tx)?,
        })
    }

    fn cell(&self, scene: &Scene, p: [f64; 2]) -> Result<Cell, Failure> {
        scene
            .grid
            .cell_of(p[0], p[1])
            .ok_or_else(|| Failure::Invalid(vec![format!("point ({}, {}) is outside the grid", p[0], p[1])]))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    let seed = Some(g.seed);
    match cli.command {
        Command::Validate => {
            g.load_scene()?;
            println!("OK");
        }
        Command::Coverage { svg } => {
            let scene = g.load_scene()?;
            let map = g.coverage(&scene)?;
            let dir = g.out_dir()?;
            write_output(&dir.join("coverage.csv"), |w| {
                writeln!(w, "# raydar seed={}", g.seed)?;
                map.write_csv(w)
            })?;
            if svg {
                let occ = to_occupancy(&scene);
                let body = svg::heatmap(&map, Some(&occ), None, seed);
                write_output(&dir.join("coverage.svg"), |w| w.write_all(body.as_bytes()))?;
            }
            println!(
                "cells {}, dead {} ({:.4})",
                map.cells.len(),
                map.dead_count(),
                map.dead_fraction()
            );
        }
        Command::Trace { mode } => {
            let scene = g.load_scene()?;
            let map = g.coverage(&scene)?;
            let mode = match mode {
                Mode::PerCell => DatasetMode::PerCell,
                Mode::PerPath => DatasetMode::PerPath,
            };
            let rows = generate_dataset(&map, mode);
            // the dataset file is header plus rows only, so its line count
            // stays fixed for a given grid
            write_output(&g.out_dir()?.join("dataset.csv"), |w| write_csv(&rows, w))?;
            println!("{}", stats(&rows, &map.grid));
        }
        Command::Train(args) => train(g, args)?,
        Command::Infer {
            checkpoint,
            start,
            target,
            max_steps,
            svg,
        } => {
            let ck = Checkpoint::from_json(&read_input(&checkpoint)?)?;
            let net = ck.network()?;
            let scene = g.load_scene()?;
            let map = g.coverage(&scene)?;
            let mut env = NavEnv::from_coverage(&scene, &map)?;
            let (s, t) = (g.cell(&scene, start)?, g.cell(&scene, target)?);
            let limit = max_steps.unwrap_or(env.max_steps);
            let tr = infer_path(&net, &ck.normalization, &mut env, s, t, limit)?;
            let dir = g.out_dir()?;
            write_output(&dir.join("trajectory.csv"), |w| tr.write_csv(&scene.grid, Some(ck.config.seed), w))?;
            if svg {
                let body = svg::heatmap(&map, Some(env.occupancy()), Some(&tr.cells), seed);
                write_output(&dir.join("trajectory.svg"), |w| w.write_all(body.as_bytes()))?;
            }
            let shortest = bfs_shortest(env.occupancy(), s, t);
            println!(
                "reached {}, steps {}, collisions {}, shortest {}",
                tr.reached,
                tr.steps(),
                tr.collisions(),
                shortest.map_or("unreachable".to_string(), |n| n.to_string())
            );
        }
        Command::Plot { log } => {
            let text = read_input(&log)?;
            let records = read_episode_log(text.as_bytes())?;
            if records.is_empty() {
                return Err(Failure::Invalid(vec![format!("{}: no episodes", log.display())]));
            }
            let dir = g.out_dir()?;
            let series: [(&str, &str, Vec<f64>); 3] = [
                ("reward", "total reward", records.iter().map(|r| r.total_reward).collect()),
                ("steps", "steps", records.iter().map(|r| r.steps as f64).collect()),
                ("collisions", "collisions", records.iter().map(|r| r.collisions as f64).collect()),
            ];
            for (name, label, ys) in series {
                let body = svg::line_chart(&format!("{label} per episode"), "episode", label, &ys, seed);
                write_output(&dir.join(format!("{name}.svg")), |w| w.write_all(body.as_bytes()))?;
            }
            println!("plotted {} episodes", records.len());
        }
    }
    Ok(())
}

fn train(g: &Global, args: TrainArgs) -> Result<(), Failure> {
    let mut config = match &args.config {
        Some(p) => serde_json::from_str::<DqnConfig>(&read_input(p)?)
            .map_err(|e| Failure::Invalid(vec![format!("{}: {e}", p.display())]))?,
        None => DqnConfig::default(),
    };
    config.seed = g.seed;
    config.episodes = args.episodes.unwrap_or(config.episodes);
    config.epsilon = args.epsilon.unwrap_or(config.epsilon);
    config.gamma = args.gamma.unwrap_or(config.gamma);
    config.hidden = args.hidden.unwrap_or(config.hidden);
    config.max_steps = args.max_steps.or(config.max_steps);
    config.validate()?;

    let scene = g.load_scene()?;
    let endpoints = match (args.start, args.target) {
        (Some(s), Some(t)) => {
            let (s, t) = (g.cell(&scene, s)?, g.cell(&scene, t)?);
            let occ = to_occupancy(&scene);
            for c in [s, t] {
                if occ.is_blocked(c.0, c.1) {
                    return Err(EnvError::Blocked(c.0, c.1).into());
                }
            }
            if bfs_shortest(&occ, s, t).is_none() {
                return Err(DqnError::Unreachable(s, t).into());
            }
            Endpoints::Fixed { start: s, target: t }
        }
        _ => Endpoints::Random,
    };
    let map = g.coverage(&scene)?;
    let mut env = NavEnv::from_coverage(&scene, &map)?;
    let outcome = train_with(&mut env, &config, endpoints, |r| {
        eprintln!(
            "episode {:>4}  steps {:>5}  reward {:>12.1}  collisions {:>4}  reached {}",
            r.episode, r.steps, r.total_reward, r.collisions, r.reached
        );
    })?;
    let dir = g.out_dir()?;
    let ck = Checkpoint::new(&outcome.network, outcome.normalization, &config);
    write_output(&dir.join("checkpoint.json"), |w| w.write_all(ck.to_json().as_bytes()))?;
    write_output(&dir.join("episodes.csv"), |w| {
        write_episode_log(&outcome.report.episodes, Some(g.seed), w)
    })?;
    match outcome.report.best {
        Some((steps, episode)) => println!("minimum steps: {steps} in {episode} Episode"),
        None => println!("minimum steps: target never reached"),
    }
    if let Endpoints::Fixed { start, target } = endpoints {
        if let Some(n) = bfs_shortest(env.occupancy(), start, target) {
            println!("shortest path: {n}");
        }
        if let Some((steps, episode)) = outcome.report.greedy_best {
            println!("greedy policy: {steps} steps after episode {episode}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
