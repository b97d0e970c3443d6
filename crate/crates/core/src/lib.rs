//! Self organizing classifiers.
//!
//! A self-organizing map partitions the observation space into cells; each
//! cell holds its own small population of action-only classifiers whose
//! fitness is meaningful only inside that cell. Fitness is learned with a
//! Q-learning style bootstrap and each cell evolves locally with differential
//! evolution drawing donors from the whole population.
//!
//! Modules:
//! - [`pool`]: shared macroclassifiers and numerosity bookkeeping
//! - [`som`]: the map, its winner search and update schedule
//! - [`learner`]: cell subpopulations, reinforcement and local evolution
//! - [`env`]: continuous grid mazes
//! - [`harness`]: trials, experiments, metrics and CSV output
//! - [`config`]: key=value configuration and presets
//! - [`cli`]: the `soc` command line

pub mod cli;
pub mod config;
pub mod env;
pub mod harness;
pub mod learner;
pub mod pool;
pub mod som;

/// A point or displacement in the plane.
pub type Vec2 = [f64; 2];

pub use env::{Maze, MazeError};
pub use harness::{ExperimentConfig, Trace};
pub use learner::{Learner, LearnerParams, Mode};
pub use pool::{MacroId, Pool};
pub use som::{CellCoord, SomGrid};
