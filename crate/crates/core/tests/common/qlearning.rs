//! Tabular Q-learning reference agent.
//!
//! States are the maze's unit cells and actions are the eight king moves of
//! length one per axis. It shares nothing with the classifier system except
//! the environment, so its step counts bound what a good policy can reach.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use soc::env::{Maze, UnitCell};

pub const ACTIONS: [[f64; 2]; 8] = [
    [1.0, 0.0],
    [1.0, 1.0],
    [0.0, 1.0],
    [-1.0, 1.0],
    [-1.0, 0.0],
    [-1.0, -1.0],
    [0.0, -1.0],
    [1.0, -1.0],
];

pub struct QTable {
    width: usize,
    height: usize,
    q: Vec<[f64; 8]>,
}

impl QTable {
    fn state(&self, c: UnitCell) -> usize {
        c.y * self.width + c.x
    }

    /// Moves that keep the agent inside the grid. Moves into the border
    /// would be clamped, which shifts the position inside its cell and breaks
    /// the cell-level Markov property.
    pub fn allowed(&self, c: UnitCell) -> Vec<usize> {
        (0..8)
            .filter(|&a| {
                let x = c.x as i64 + ACTIONS[a][0] as i64;
                let y = c.y as i64 + ACTIONS[a][1] as i64;
                x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64
            })
            .collect()
    }

    pub fn greedy(&self, c: UnitCell) -> usize {
        let row = &self.q[self.state(c)];
        let allowed = self.allowed(c);
        let mut best = allowed[0];
        for &a in &allowed[1..] {
            if row[a] > row[best] {
                best = a;
            }
        }
        best
    }
}

pub struct Settings {
    pub episodes: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub max_steps: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            episodes: 40_000,
            alpha: 0.5,
            gamma: 0.9,
            epsilon: 0.3,
            max_steps: 500,
        }
    }
}

pub fn train(maze: &Maze, settings: &Settings, seed: u64) -> QTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = QTable {
        width: maze.width(),
        height: maze.height(),
        q: vec![[0.0; 8]; maze.width() * maze.height()],
    };
    for _ in 0..settings.episodes {
        let mut state = maze.reset(&mut rng);
        for _ in 0..settings.max_steps {
            let s = table.state(maze.cell_of(state.position));
            let a = if rng.gen::<f64>() < settings.epsilon {
                let allowed = table.allowed(maze.cell_of(state.position));
                allowed[rng.gen_range(0..allowed.len())]
            } else {
                table.greedy(maze.cell_of(state.position))
            };
            let t = maze.step(state, ACTIONS[a]);
            let target = if t.terminal {
                t.reward
            } else {
                let next = table.state(maze.cell_of(t.state.position));
                let next_cell = maze.cell_of(t.state.position);
                let best = table
                    .allowed(next_cell)
                    .into_iter()
                    .map(|b| table.q[next][b])
                    .fold(f64::NEG_INFINITY, f64::max);
                t.reward + settings.gamma * best
            };
            let q = &mut table.q[s][a];
            *q += settings.alpha * (target - *q);
            state = t.state;
            if t.terminal {
                break;
            }
        }
    }
    table
}

/// Steps the greedy policy needs from `start`, or `None` past `cap`.
pub fn greedy_steps(maze: &Maze, table: &QTable, start: [f64; 2], cap: usize) -> Option<usize> {
    let mut state = soc::env::AgentState { position: start };
    for step in 1..=cap {
        let a = table.greedy(maze.cell_of(state.position));
        let t = maze.step(state, ACTIONS[a]);
        if t.terminal {
            return Some(step);
        }
        state = t.state;
    }
    None
}

/// Mean greedy steps over uniform random starts; capped trials count as `cap`.
pub fn mean_steps(maze: &Maze, table: &QTable, starts: usize, cap: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: usize = (0..starts)
        .map(|_| {
            let s = maze.reset(&mut rng);
            greedy_steps(maze, table, s.position, cap).unwrap_or(cap)
        })
        .sum();
    total as f64 / starts as f64
}
