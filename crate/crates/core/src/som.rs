//! Self-organizing map over the observation space.
//!
//! Winner search uses Euclidean distance in input space; neighborhoods use
//! Chebyshev distance on grid coordinates. A cell is moved only when the
//! product of learning restraint and neighborhood exceeds the update threshold.

use rand::Rng;

use crate::Vec2;

pub const INITIAL_RESTRAINT: f64 = 0.1;
pub const RESTRAINT_DECAY: f64 = 0.999_999;
pub const UPDATE_THRESHOLD: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellCoord {
    pub row: usize,
    pub col: usize,
}

impl CellCoord {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn chebyshev(self, other: CellCoord) -> usize {
        self.row
            .abs_diff(other.row)
            .max(self.col.abs_diff(other.col))
    }
}

/// Learning-rate schedule `0.1 * 0.999999^it`.
pub fn learning_restraint(it: u64) -> f64 {
    INITIAL_RESTRAINT * RESTRAINT_DECAY.powf(it as f64)
}

/// `exp(-d^2)` for a Chebyshev grid distance `d`.
pub fn neighborhood(d: usize) -> f64 {
    let d = d as f64;
    (-d * d).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SomGrid {
    rows: usize,
    cols: usize,
    weights: Vec<Vec2>,
    iteration: u64,
}

impl SomGrid {
    /// Grid with every weight component drawn uniformly from `[0, 1)`.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        assert!(rows > 0 && cols > 0, "SOM grid must be non-empty");
        let weights = (0..rows * cols)
            .map(|_| [rng.gen::<f64>(), rng.gen::<f64>()])
            .collect();
        Self {
            rows,
            cols,
            weights,
            iteration: 0,
        }
    }

    pub fn from_weights(rows: usize, cols: usize, weights: Vec<Vec2>) -> Self {
        assert_eq!(weights.len(), rows * cols, "weights must cover the grid");
        Self {
            rows,
            cols,
            weights,
            iteration: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn set_iteration(&mut self, it: u64) {
        self.iteration = it;
    }

    pub fn index(&self, c: CellCoord) -> usize {
        c.row * self.cols + c.col
    }

    pub fn coord(&self, index: usize) -> CellCoord {
        CellCoord::new(index / self.cols, index % self.cols)
    }

    pub fn weight(&self, c: CellCoord) -> Vec2 {
        self.weights[self.index(c)]
    }

    pub fn weights(&self) -> &[Vec2] {
        &self.weights
    }

    /// Cell closest to `input`; ties go to the lexicographically smallest coordinate.
    pub fn winner(&self, input: Vec2) -> CellCoord {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, w) in self.weights.iter().enumerate() {
            let dx = w[0] - input[0];
            let dy = w[1] - input[1];
            let dist = dx * dx + dy * dy;
            if dist < best_dist {
                best_dist = dist;
                best = i;
            }
        }
        self.coord(best)
    }

    /// Moves every cell whose gain exceeds the threshold toward `input`, then
    /// advances the iteration counter. Returns the cells that moved.
    pub fn update(&mut self, input: Vec2, winner: CellCoord) -> Vec<CellCoord> {
        let restraint = learning_restraint(self.iteration);
        let mut updated = Vec::new();
        for i in 0..self.weights.len() {
            let c = self.coord(i);
            let gain = restraint * neighborhood(c.chebyshev(winner));
            if gain > UPDATE_THRESHOLD {
                let w = &mut self.weights[i];
                w[0] += gain * (input[0] - w[0]);
                w[1] += gain * (input[1] - w[1]);
                updated.push(c);
            }
        }
        self.iteration += 1;
        updated
    }

    /// Largest Chebyshev radius updated at iteration `it`, or `None` if even the
    /// winner falls below the threshold.
    pub fn update_radius(it: u64) -> Option<usize> {
        let restraint = learning_restraint(it);
        if restraint <= UPDATE_THRESHOLD {
            return None;
        }
        let mut d = 0;
        while restraint * neighborhood(d + 1) > UPDATE_THRESHOLD {
            d += 1;
        }
        Some(d)
    }
}
