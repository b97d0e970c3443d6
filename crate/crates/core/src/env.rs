//! Continuous 2D mazes built from unit grid cells.
//!
//! The observation is the agent position. Moves are capped at 1.0 per axis,
//! clamped to the outer border (so the agent can slide along it), and
//! rejected outright when the endpoint lands inside a wall.

use rand::Rng;
use std::fmt;
use thiserror::Error;

use crate::Vec2;

pub const EMPTY_ROOM: &str = include_str!("../mazes/empty-room.txt");
pub const ONE_WALL: &str = include_str!("../mazes/one-wall.txt");

pub const MAX_STEP: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rewards {
    pub goal: f64,
    pub obstacle: f64,
    pub step: f64,
}

impl Default for Rewards {
    fn default() -> Self {
        Self {
            goal: 1000.0,
            obstacle: -20.0,
            step: -10.0,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MazeError {
    #[error("maze is empty")]
    Empty,
    #[error("line {line}: expected {expected} columns, found {found}")]
    Ragged {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: unknown character {ch:?}")]
    UnknownChar {
        line: usize,
        column: usize,
        ch: char,
    },
    #[error("no goal cell 'G'")]
    NoGoal,
    #[error("multiple goal cells at lines {lines:?}")]
    MultipleGoals { lines: Vec<usize> },
    #[error("maze has no free cell to start from")]
    NoFreeCell,
    #[error("unknown maze preset {0:?}")]
    UnknownPreset(String),
}

/// Unit cell coordinates in environment space: `x` grows right, `y` grows up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnitCell {
    pub x: usize,
    pub y: usize,
}

impl UnitCell {
    pub fn chebyshev(self, other: UnitCell) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maze {
    width: usize,
    height: usize,
    // indexed by y * width + x
    walls: Vec<bool>,
    goal: UnitCell,
    pub rewards: Rewards,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub position: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: AgentState,
    pub reward: f64,
    pub terminal: bool,
}

impl Maze {
    /// Parses a grid of `.` (free), `#` (wall) and exactly one `G` (goal).
    /// The first text line is the top row of the maze.
    pub fn parse(text: &str) -> Result<Maze, MazeError> {
        let lines: Vec<&str> = text
            .lines()
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
            .collect();
        let lines: &[&str] = match lines.iter().rposition(|l| !l.is_empty()) {
            Some(last) => &lines[..=last],
            None => return Err(MazeError::Empty),
        };
        let height = lines.len();
        let width = lines[0].chars().count();
        if width == 0 {
            return Err(MazeError::Ragged {
                line: 1,
                expected: 1,
                found: 0,
            });
        }
        let mut walls = vec![false; width * height];
        let mut goals = Vec::new();
        for (i, line) in lines.iter().enumerate() {
            let found = line.chars().count();
            if found != width {
                return Err(MazeError::Ragged {
                    line: i + 1,
                    expected: width,
                    found,
                });
            }
            let y = height - 1 - i;
            for (x, ch) in line.chars().enumerate() {
                match ch {
                    '.' => {}
                    '#' => walls[y * width + x] = true,
                    'G' => goals.push((i + 1, UnitCell { x, y })),
                    _ => {
                        return Err(MazeError::UnknownChar {
                            line: i + 1,
                            column: x + 1,
                            ch,
                        })
                    }
                }
            }
        }
        let goal = match goals.as_slice() {
            [] => return Err(MazeError::NoGoal),
            [(_, g)] => *g,
            _ => {
                return Err(MazeError::MultipleGoals {
                    lines: goals.iter().map(|(l, _)| *l).collect(),
                })
            }
        };
        let maze = Maze {
            width,
            height,
            walls,
            goal,
            rewards: Rewards::default(),
        };
        if maze.free_cells().next().is_none() {
            return Err(MazeError::NoFreeCell);
        }
        Ok(maze)
    }

    pub fn preset(name: &str) -> Result<Maze, MazeError> {
        match name {
            "empty-room" => Maze::parse(EMPTY_ROOM),
            "one-wall" => Maze::parse(ONE_WALL),
            other => Err(MazeError::UnknownPreset(other.to_string())),
        }
    }

    pub fn empty_room() -> Maze {
        Maze::parse(EMPTY_ROOM).expect("bundled maze")
    }

    pub fn one_wall() -> Maze {
        Maze::parse(ONE_WALL).expect("bundled maze")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn goal(&self) -> UnitCell {
        self.goal
    }

    pub fn is_wall(&self, c: UnitCell) -> bool {
        self.walls[c.y * self.width + c.x]
    }

    pub fn walls(&self) -> impl Iterator<Item = UnitCell> + '_ {
        self.cells().filter(|&c| self.is_wall(c))
    }

    pub fn cells(&self) -> impl Iterator<Item = UnitCell> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| UnitCell { x, y }))
    }

    /// Cells that are neither wall nor goal.
    pub fn free_cells(&self) -> impl Iterator<Item = UnitCell> + '_ {
        self.cells()
            .filter(move |&c| !self.is_wall(c) && c != self.goal)
    }

    /// Unit cell containing `p`. Cells are half-open; the outer border is closed.
    pub fn cell_of(&self, p: Vec2) -> UnitCell {
        let x = (p[0].max(0.0).floor() as usize).min(self.width - 1);
        let y = (p[1].max(0.0).floor() as usize).min(self.height - 1);
        UnitCell { x, y }
    }

    pub fn in_wall(&self, p: Vec2) -> bool {
        self.is_wall(self.cell_of(p))
    }

    pub fn in_goal(&self, p: Vec2) -> bool {
        self.cell_of(p) == self.goal
    }

    /// Uniform start position over the free area.
    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> AgentState {
        loop {
            let p = [
                rng.gen::<f64>() * self.width as f64,
                rng.gen::<f64>() * self.height as f64,
            ];
            if !self.in_wall(p) && !self.in_goal(p) {
                return AgentState { position: p };
            }
        }
    }

    pub fn step(&self, state: AgentState, action: Vec2) -> Transition {
        let mut candidate = state.position;
        let bounds = [self.width as f64, self.height as f64];
        for axis in 0..2 {
            let delta = action[axis].clamp(-MAX_STEP, MAX_STEP);
            candidate[axis] = (candidate[axis] + delta).clamp(0.0, bounds[axis]);
        }
        if self.in_wall(candidate) {
            Transition {
                state,
                reward: self.rewards.obstacle,
                terminal: false,
            }
        } else if self.in_goal(candidate) {
            Transition {
                state: AgentState {
                    position: candidate,
                },
                reward: self.rewards.goal,
                terminal: true,
            }
        } else {
            Transition {
                state: AgentState {
                    position: candidate,
                },
                reward: self.rewards.step,
                terminal: false,
            }
        }
    }
}

impl fmt::Display for Maze {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                let c = UnitCell { x, y };
                let ch = if c == self.goal {
                    'G'
                } else if self.is_wall(c) {
                    '#'
                } else {
                    '.'
                };
                write!(f, "{ch}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
