//! Trials, experiments and batches, plus the metrics and CSV files they produce.
//!
//! Explore and exploit trials alternate, starting with explore. Performance
//! is the sliding mean of steps over the most recent exploit trials.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::env::{Maze, UnitCell};
use crate::learner::{Learner, LearnerError, LearnerParams, Mode};
use crate::som::CellCoord;
use crate::Vec2;

/// Points sampled per unit cell when building behavior and fitness maps.
pub const MAP_SAMPLES: usize = 100;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub maze: Maze,
    pub params: LearnerParams,
    pub som_rows: usize,
    pub som_cols: usize,
    pub trials: usize,
    pub max_trial_steps: usize,
    pub repetitions: usize,
    pub base_seed: u64,
    pub metric_window: usize,
    /// Environment steps between population snapshots.
    pub census_interval: u64,
}

impl ExperimentConfig {
    /// Default parameter set on `maze`.
    pub fn paper(maze: Maze) -> Self {
        Self {
            maze,
            params: LearnerParams::default(),
            som_rows: 10,
            som_cols: 10,
            trials: 10_000,
            max_trial_steps: 500,
            repetitions: 20,
            base_seed: 0,
            metric_window: 100,
            census_interval: 100,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.params.validate()?;
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.som_rows == 0 || self.som_cols == 0 {
            return bad("SOM dimensions must be positive");
        }
        if self.max_trial_steps == 0 {
            return bad("max_trial_steps must be at least 1");
        }
        if self.metric_window == 0 {
            return bad("metric_window must be at least 1");
        }
        if self.trials < self.metric_window {
            return bad("trials must be at least metric_window");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.census_interval == 0 {
            return bad("census_interval must be at least 1");
        }
        Ok(())
    }

    /// Upper bound on the population, `cells * (beta + nu)`.
    pub fn max_population(&self) -> u64 {
        (self.som_rows * self.som_cols * self.params.cell_size()) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub steps: usize,
    pub reached_goal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub index: usize,
    pub mode: Mode,
    pub steps: usize,
    pub reached_goal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CensusPoint {
    pub step: u64,
    pub micro_count: u64,
    pub macro_count: usize,
}

/// Row-major grid over the maze's unit cells, indexed by `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMap<T> {
    pub width: usize,
    pub height: usize,
    pub values: Vec<T>,
}

impl<T: Copy> CellMap<T> {
    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[y * self.width + x]
    }

    pub fn iter(&self) -> impl Iterator<Item = (UnitCell, T)> + '_ {
        self.values.iter().enumerate().map(move |(i, &v)| {
            (
                UnitCell {
                    x: i % self.width,
                    y: i / self.width,
                },
                v,
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub seed: u64,
    pub trials: Vec<TrialRecord>,
    /// Sliding mean of steps, one entry per exploit trial.
    pub performance: Vec<f64>,
    pub census: Vec<CensusPoint>,
    pub behavior: CellMap<Vec2>,
    pub fitness: CellMap<f64>,
    pub som_weights: Vec<(CellCoord, Vec2)>,
    pub total_steps: u64,
}

impl Trace {
    pub fn final_performance(&self) -> Option<f64> {
        self.performance.last().copied()
    }
}

/// Mean over a batch of traces.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub performance: Vec<f64>,
    /// `(step, mean micro_count, mean macro_count)` over checkpoints all runs reached.
    pub census: Vec<(u64, f64, f64)>,
    pub behavior: CellMap<Vec2>,
    pub fitness: CellMap<f64>,
    /// Map weights of the first repetition.
    pub som_weights: Vec<(CellCoord, Vec2)>,
    pub runs: Vec<Trace>,
}

impl Aggregate {
    pub fn final_performance(&self) -> Option<f64> {
        self.performance.last().copied()
    }
}

/// Independent random streams for one repetition.
struct Streams {
    env: ChaCha8Rng,
    eval: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        let mut env = ChaCha8Rng::seed_from_u64(seed);
        env.set_stream(1);
        let mut eval = ChaCha8Rng::seed_from_u64(seed);
        eval.set_stream(2);
        Self { env, eval }
    }
}

/// Runs one trial from a random start. `on_step` sees the learner after every
/// environment step.
pub fn run_trial<R, F>(
    learner: &mut Learner,
    maze: &Maze,
    mode: Mode,
    rng: &mut R,
    max_steps: usize,
    mut on_step: F,
) -> Result<TrialOutcome, LearnerError>
where
    R: Rng + ?Sized,
    F: FnMut(&Learner),
{
    learner.begin_trial();
    let mut state = maze.reset(rng);
    let mut reward = None;
    for step in 1..=max_steps {
        let action = learner
            .step(state.position, reward, false, mode)?
            .expect("non-terminal step yields an action");
        let t = maze.step(state, action);
        state = t.state;
        on_step(learner);
        if t.terminal {
            learner.step(state.position, Some(t.reward), true, mode)?;
            return Ok(TrialOutcome {
                steps: step,
                reached_goal: true,
            });
        }
        reward = Some(t.reward);
    }
    learner.finish_truncated(state.position, reward.expect("at least one step"))?;
    Ok(TrialOutcome {
        steps: max_steps,
        reached_goal: false,
    })
}

/// Sliding mean over the last `window` values, one output per input.
pub fn sliding_mean(values: &[usize], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0usize;
    for (k, &v) in values.iter().enumerate() {
        sum += v;
        if k >= window {
            sum -= values[k - window];
        }
        out.push(sum as f64 / (k + 1).min(window) as f64);
    }
    out
}

fn sample_map<T, R, F>(maze: &Maze, rng: &mut R, mut sample: F) -> CellMap<T>
where
    T: Copy + Default + std::ops::AddAssign + std::ops::Div<f64, Output = T>,
    R: Rng + ?Sized,
    F: FnMut(Vec2, &mut R) -> T,
{
    let mut values = Vec::with_capacity(maze.width() * maze.height());
    for y in 0..maze.height() {
        for x in 0..maze.width() {
            let mut acc = T::default();
            for _ in 0..MAP_SAMPLES {
                let p = [x as f64 + rng.gen::<f64>(), y as f64 + rng.gen::<f64>()];
                acc += sample(p, rng);
            }
            values.push(acc / MAP_SAMPLES as f64);
        }
    }
    CellMap {
        width: maze.width(),
        height: maze.height(),
        values,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Acc2(Vec2);

impl std::ops::AddAssign for Acc2 {
    fn add_assign(&mut self, rhs: Self) {
        self.0[0] += rhs.0[0];
        self.0[1] += rhs.0[1];
    }
}

impl std::ops::Div<f64> for Acc2 {
    type Output = Acc2;
    fn div(self, rhs: f64) -> Acc2 {
        Acc2([self.0[0] / rhs, self.0[1] / rhs])
    }
}

/// Mean exploit action per unit cell of the maze. The learner is not
/// modified; a cell whose winner was never initialized contributes `(0, 0)`.
pub fn behavior_map<R: Rng + ?Sized>(learner: &Learner, maze: &Maze, rng: &mut R) -> CellMap<Vec2> {
    let m = sample_map(maze, rng, |p, rng| {
        Acc2(learner.greedy_action(p, rng).unwrap_or([0.0, 0.0]))
    });
    CellMap {
        width: m.width,
        height: m.height,
        values: m.values.into_iter().map(|a| a.0).collect(),
    }
}

/// Mean of the winning cell's maximum fitness per unit cell of the maze.
/// Uninitialized winners count as the initial fitness.
pub fn fitness_map<R: Rng + ?Sized>(learner: &Learner, maze: &Maze, rng: &mut R) -> CellMap<f64> {
    let initial = learner.params().initial_fitness;
    sample_map(maze, rng, |p, _| {
        learner.winner_max_fitness(p).unwrap_or(initial)
    })
}

/// One full experiment with the given seed.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<Trace, HarnessError> {
    config.validate()?;
    let mut learner = Learner::new(
        config.params.clone(),
        config.som_rows,
        config.som_cols,
        seed,
    )?;
    let mut streams = Streams::new(seed);
    let mut trials = Vec::with_capacity(config.trials);
    let mut census = Vec::new();
    let mut total_steps = 0u64;
    let interval = config.census_interval;

    for index in 0..config.trials {
        let mode = if index % 2 == 0 {
            Mode::Explore
        } else {
            Mode::Exploit
        };
        let outcome = run_trial(
            &mut learner,
            &config.maze,
            mode,
            &mut streams.env,
            config.max_trial_steps,
            |l| {
                total_steps += 1;
                if total_steps.is_multiple_of(interval) {
                    let (macro_count, micro_count) = l.census();
                    census.push(CensusPoint {
                        step: total_steps,
                        micro_count,
                        macro_count,
                    });
                }
            },
        )?;
        trials.push(TrialRecord {
            index,
            mode,
            steps: outcome.steps,
            reached_goal: outcome.reached_goal,
        });
    }

    let exploit_steps: Vec<usize> = trials
        .iter()
        .filter(|t| t.mode == Mode::Exploit)
        .map(|t| t.steps)
        .collect();
    let performance = sliding_mean(&exploit_steps, config.metric_window);
    let behavior = behavior_map(&learner, &config.maze, &mut streams.eval);
    let fitness = fitness_map(&learner, &config.maze, &mut streams.eval);
    let som = learner.som();
    let som_weights = (0..som.len())
        .map(|i| (som.coord(i), som.weights()[i]))
        .collect();

    Ok(Trace {
        seed,
        trials,
        performance,
        census,
        behavior,
        fitness,
        som_weights,
        total_steps,
    })
}

/// Element-wise mean of traces. Census checkpoints are kept up to the
/// shortest run.
pub fn aggregate(runs: Vec<Trace>) -> Aggregate {
    assert!(!runs.is_empty(), "aggregate needs at least one trace");
    let n = runs.len() as f64;
    let first = &runs[0];

    let perf_len = runs.iter().map(|r| r.performance.len()).min().unwrap_or(0);
    let performance = (0..perf_len)
        .map(|i| runs.iter().map(|r| r.performance[i]).sum::<f64>() / n)
        .collect();

    let census_len = runs.iter().map(|r| r.census.len()).min().unwrap_or(0);
    let census = (0..census_len)
        .map(|i| {
            let micro = runs
                .iter()
                .map(|r| r.census[i].micro_count as f64)
                .sum::<f64>()
                / n;
            let macros = runs
                .iter()
                .map(|r| r.census[i].macro_count as f64)
                .sum::<f64>()
                / n;
            (first.census[i].step, micro, macros)
        })
        .collect();

    let cells = first.behavior.values.len();
    let behavior = CellMap {
        width: first.behavior.width,
        height: first.behavior.height,
        values: (0..cells)
            .map(|i| {
                let sx = runs.iter().map(|r| r.behavior.values[i][0]).sum::<f64>();
                let sy = runs.iter().map(|r| r.behavior.values[i][1]).sum::<f64>();
                [sx / n, sy / n]
            })
            .collect(),
    };
    let fitness = CellMap {
        width: first.fitness.width,
        height: first.fitness.height,
        values: (0..cells)
            .map(|i| runs.iter().map(|r| r.fitness.values[i]).sum::<f64>() / n)
            .collect(),
    };
    let som_weights = first.som_weights.clone();
    Aggregate {
        performance,
        census,
        behavior,
        fitness,
        som_weights,
        runs,
    }
}

/// Runs `config.repetitions` experiments with seeds `base_seed..` on `jobs`
/// threads and averages them in seed order.
pub fn run_batch(config: &ExperimentConfig, jobs: usize) -> Result<Aggregate, HarnessError> {
    config.validate()?;
    let seeds: Vec<u64> = (0..config.repetitions as u64)
        .map(|k| config.base_seed.wrapping_add(k))
        .collect();
    let runs: Result<Vec<Trace>, HarnessError> = if jobs <= 1 {
        seeds.iter().map(|&s| run_experiment(config, s)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        pool.install(|| {
            seeds
                .par_iter()
                .map(|&s| run_experiment(config, s))
                .collect()
        })
    };
    Ok(aggregate(runs?))
}

pub fn write_performance<W: Write>(w: &mut W, performance: &[f64]) -> io::Result<()> {
    writeln!(w, "exploit_trial_index,mean_steps_last_100")?;
    for (i, p) in performance.iter().enumerate() {
        writeln!(w, "{i},{p}")?;
    }
    Ok(())
}

pub fn write_population<W: Write>(w: &mut W, census: &[(u64, f64, f64)]) -> io::Result<()> {
    writeln!(w, "step,micro_count,macro_count")?;
    for (step, micro, macros) in census {
        writeln!(w, "{step},{micro},{macros}")?;
    }
    Ok(())
}

pub fn write_behavior_map<W: Write>(w: &mut W, map: &CellMap<Vec2>) -> io::Result<()> {
    writeln!(w, "cell_x,cell_y,mean_dx,mean_dy")?;
    for (c, v) in map.iter() {
        writeln!(w, "{},{},{},{}", c.x, c.y, v[0], v[1])?;
    }
    Ok(())
}

pub fn write_fitness_map<W: Write>(w: &mut W, map: &CellMap<f64>) -> io::Result<()> {
    writeln!(w, "cell_x,cell_y,mean_max_fitness")?;
    for (c, v) in map.iter() {
        writeln!(w, "{},{},{}", c.x, c.y, v)?;
    }
    Ok(())
}

pub fn write_som_weights<W: Write>(w: &mut W, weights: &[(CellCoord, Vec2)]) -> io::Result<()> {
    writeln!(w, "row,col,w0,w1")?;
    for (c, v) in weights {
        writeln!(w, "{},{},{},{}", c.row, c.col, v[0], v[1])?;
    }
    Ok(())
}

pub const PERFORMANCE_CSV: &str = "performance.csv";
pub const POPULATION_CSV: &str = "population.csv";
pub const BEHAVIOR_CSV: &str = "behavior_map.csv";
pub const FITNESS_CSV: &str = "fitness_map.csv";
pub const SOM_WEIGHTS_CSV: &str = "som_weights.csv";

fn write_file<F>(dir: &Path, name: &str, body: F) -> Result<PathBuf, HarnessError>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let path = dir.join(name);
    let wrap = |source| HarnessError::Io {
        path: path.clone(),
        source,
    };
    let mut w = BufWriter::new(File::create(&path).map_err(wrap)?);
    body(&mut w).and_then(|_| w.flush()).map_err(wrap)?;
    Ok(path)
}

/// Writes the map files only.
pub fn write_map_csvs(dir: &Path, agg: &Aggregate) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(vec![
        write_file(dir, BEHAVIOR_CSV, |w| write_behavior_map(w, &agg.behavior))?,
        write_file(dir, FITNESS_CSV, |w| write_fitness_map(w, &agg.fitness))?,
        write_file(dir, SOM_WEIGHTS_CSV, |w| {
            write_som_weights(w, &agg.som_weights)
        })?,
    ])
}

/// Writes all five CSV files into `dir`, creating it if needed.
pub fn write_csvs(dir: &Path, agg: &Aggregate) -> Result<Vec<PathBuf>, HarnessError> {
    let mut paths = write_map_csvs(dir, agg)?;
    paths.insert(
        0,
        write_file(dir, PERFORMANCE_CSV, |w| {
            write_performance(w, &agg.performance)
        })?,
    );
    paths.insert(
        1,
        write_file(dir, POPULATION_CSV, |w| write_population(w, &agg.census))?,
    );
    Ok(paths)
}
