//! The classifier system proper.
//!
//! Each SOM cell owns a subpopulation split into a best group (exploit-time
//! actors, survivors of the last local EA) and a novel group (explore-time
//! actors, regenerated by every local EA). Fitness is niched: it lives on the
//! member entry, so one shared action vector carries an independent fitness in
//! every cell that indexes it, and fitness values are only ever compared
//! within a single cell.

use rand::distributions::Open01;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pool::{Group, MacroId, MemberEntry, Pool, PoolError};
use crate::som::{CellCoord, SomGrid};
use crate::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerParams {
    /// Widrow-Hoff learning rate.
    pub eta: f64,
    /// Discount factor.
    pub gamma: f64,
    /// Size of the best group.
    pub beta: usize,
    /// Size of the novel group.
    pub nu: usize,
    /// Experience per individual required before the local EA fires.
    pub iota: u64,
    pub initial_fitness: f64,
    /// DE crossover rate.
    pub de_cr: f64,
    /// Chebyshev radius searched for a donor cell when seeding a new cell.
    pub neighbor_seed_radius: usize,
    /// Seeded best entries copy the donor's fitness instead of `initial_fitness`.
    pub inherit_seed_fitness: bool,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self {
            eta: 0.2,
            gamma: 0.9,
            beta: 5,
            nu: 10,
            iota: 20,
            initial_fitness: 0.0,
            de_cr: 0.2,
            neighbor_seed_radius: 4,
            inherit_seed_fitness: false,
        }
    }
}

impl LearnerParams {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |m: &str| Err(LearnerError::InvalidParams(m.to_string()));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta must lie in (0, 1]");
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in [0, 1)");
        }
        if self.beta == 0 || self.nu == 0 || self.iota == 0 {
            return bad("beta, nu and iota must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.de_cr) {
            return bad("de_cr must lie in [0, 1]");
        }
        if !self.initial_fitness.is_finite() {
            return bad("initial_fitness must be finite");
        }
        Ok(())
    }

    /// Subpopulation size `beta + nu`.
    pub fn cell_size(&self) -> usize {
        self.beta + self.nu
    }

    /// Experience above which the local EA runs.
    pub fn evolve_threshold(&self) -> u64 {
        self.iota * self.cell_size() as u64
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("cell ({}, {}) has not been initialized", .0.row, .0.col)]
    Uninitialized(CellCoord),
    #[error("a pending update exists but no reward was supplied")]
    MissingReward,
    #[error(transparent)]
    Pool(#[from] PoolError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Explore,
    Exploit,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellState {
    pub best: Vec<MemberEntry>,
    pub novel: Vec<MemberEntry>,
    pub experience: u64,
    pub initialized: bool,
}

impl CellState {
    pub fn entries(&self) -> impl Iterator<Item = &MemberEntry> {
        self.best.iter().chain(self.novel.iter())
    }

    pub fn max_fitness(&self) -> Option<f64> {
        self.entries().map(|e| e.fitness).reduce(f64::max)
    }

    pub fn len(&self) -> usize {
        self.best.len() + self.novel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.best.is_empty() && self.novel.is_empty()
    }
}

/// Locates the member entry that acted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActorRef {
    pub cell: CellCoord,
    pub group: Group,
    pub slot: usize,
}

/// How a novel entry came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Indexed,
    Reproduced,
}

/// Bootstrapped fitness target: `reward` alone on a terminal step, otherwise
/// `reward + gamma * max_next`.
pub fn fitness_target(reward: f64, gamma: f64, max_next: f64, terminal: bool) -> f64 {
    if terminal {
        reward
    } else {
        reward + gamma * max_next
    }
}

/// Widrow-Hoff rule `F + eta * (target - F)`.
pub fn widrow_hoff(fitness: f64, target: f64, eta: f64) -> f64 {
    fitness + eta * (target - fitness)
}

/// DE/rand/1 mutant `x1 + s * (x2 - x3)`.
pub fn de_mutant(x1: Vec2, x2: Vec2, x3: Vec2, scale: f64) -> Vec2 {
    [
        x1[0] + scale * (x2[0] - x3[0]),
        x1[1] + scale * (x2[1] - x3[1]),
    ]
}

/// Binomial crossover mask: `true` where the gene comes from the mutant.
/// Gene `jrand` always does.
pub fn crossover_mask<R: Rng + ?Sized>(cr: f64, rng: &mut R) -> [bool; 2] {
    let jrand = rng.gen_range(0..2);
    let mut mask = [false; 2];
    for (j, m) in mask.iter_mut().enumerate() {
        *m = rng.gen::<f64>() < cr || j == jrand;
    }
    mask
}

/// Applies a crossover mask and clamps the child into `[-1, 1]^2`.
pub fn crossover(target: Vec2, mutant: Vec2, mask: [bool; 2]) -> Vec2 {
    let mut child = [0.0; 2];
    for j in 0..2 {
        let gene = if mask[j] { mutant[j] } else { target[j] };
        child[j] = gene.clamp(-1.0, 1.0);
    }
    child
}

/// DE/rand/1/bin child of `target`. Donors are three distinct live
/// macroclassifiers, each counted once regardless of numerosity; the scale
/// factor is redrawn from (0, 1) per call. With fewer than three donors the
/// child is a fresh random vector.
pub fn de_reproduce<R: Rng + ?Sized>(
    pool: &Pool,
    target: Vec2,
    cr: f64,
    rng: &mut R,
) -> Result<Vec2, LearnerError> {
    let Some(donors) = pool.sample_distinct(rng, 3) else {
        return Ok(random_action(rng));
    };
    let x1 = pool.action(donors[0])?;
    let x2 = pool.action(donors[1])?;
    let x3 = pool.action(donors[2])?;
    let scale: f64 = rng.sample(Open01);
    let mutant = de_mutant(x1, x2, x3, scale);
    let mask = crossover_mask(cr, rng);
    Ok(crossover(target, mutant, mask))
}

fn random_action<R: Rng + ?Sized>(rng: &mut R) -> Vec2 {
    [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    params: LearnerParams,
    som: SomGrid,
    pool: Pool,
    cells: Vec<CellState>,
    pending: Option<ActorRef>,
    rng: ChaCha8Rng,
}

impl Learner {
    pub fn new(
        params: LearnerParams,
        rows: usize,
        cols: usize,
        seed: u64,
    ) -> Result<Self, LearnerError> {
        params.validate()?;
        if rows == 0 || cols == 0 {
            return Err(LearnerError::InvalidParams(
                "SOM dimensions must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let som = SomGrid::random(rows, cols, &mut rng);
        Ok(Self::with_som(params, som, rng))
    }

    /// Learner over a caller-supplied map.
    pub fn with_som(params: LearnerParams, som: SomGrid, rng: ChaCha8Rng) -> Self {
        let cells = vec![CellState::default(); som.len()];
        Self {
            params,
            som,
            pool: Pool::new(),
            cells,
            pending: None,
            rng,
        }
    }

    pub fn params(&self) -> &LearnerParams {
        &self.params
    }

    pub fn som(&self) -> &SomGrid {
        &self.som
    }

    pub fn pool(&self) -> &Pool {
        &self.pool
    }

    pub fn cell(&self, c: CellCoord) -> &CellState {
        &self.cells[self.som.index(c)]
    }

    pub fn cells(&self) -> impl Iterator<Item = (CellCoord, &CellState)> {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, s)| (self.som.coord(i), s))
    }

    pub fn pending(&self) -> Option<ActorRef> {
        self.pending
    }

    /// `(macro_count, micro_count)`.
    pub fn census(&self) -> (usize, u64) {
        self.pool.census()
    }

    pub fn max_population(&self) -> u64 {
        (self.cells.len() * self.params.cell_size()) as u64
    }

    /// Full numerosity audit against every member entry of every cell.
    pub fn audit(&self) -> Result<(), PoolError> {
        self.pool.audit(self.cells.iter().flat_map(|c| c.entries()))
    }

    pub fn entry(&self, actor: ActorRef) -> &MemberEntry {
        let cell = self.cell(actor.cell);
        match actor.group {
            Group::Best => &cell.best[actor.slot],
            Group::Novel => &cell.novel[actor.slot],
        }
    }

    fn entry_mut(&mut self, actor: ActorRef) -> &mut MemberEntry {
        let idx = self.som.index(actor.cell);
        let cell = &mut self.cells[idx];
        match actor.group {
            Group::Best => &mut cell.best[actor.slot],
            Group::Novel => &mut cell.novel[actor.slot],
        }
    }

    fn fresh_entry(&mut self, group: Group) -> Result<MemberEntry, LearnerError> {
        let action = random_action(&mut self.rng);
        let macro_id = self.pool.create_macro(action)?;
        self.pool.acquire_index(macro_id)?;
        Ok(MemberEntry {
            macro_id,
            fitness: self.params.initial_fitness,
            group,
        })
    }

    fn indexed_entry(
        &mut self,
        macro_id: MacroId,
        fitness: f64,
        group: Group,
    ) -> Result<MemberEntry, LearnerError> {
        self.pool.acquire_index(macro_id)?;
        Ok(MemberEntry {
            macro_id,
            fitness,
            group,
        })
    }

    /// Initialized cell within the seeding radius that maximizes
    /// `experience / d^2`; ties go to the smaller coordinate.
    pub fn seed_donor(&self, c: CellCoord) -> Option<CellCoord> {
        let mut best: Option<(f64, CellCoord)> = None;
        for (i, state) in self.cells.iter().enumerate() {
            let other = self.som.coord(i);
            let d = other.chebyshev(c);
            if d == 0 || d > self.params.neighbor_seed_radius {
                continue;
            }
            if !state.initialized || state.experience == 0 {
                continue;
            }
            let score = state.experience as f64 / (d * d) as f64;
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, other));
            }
        }
        best.map(|(_, coord)| coord)
    }

    /// Creates the subpopulation of a cell on its first win. Novel entries are
    /// random; best entries index a donor's best group when one exists.
    pub fn ensure_cell(&mut self, c: CellCoord) -> Result<(), LearnerError> {
        let idx = self.som.index(c);
        if self.cells[idx].initialized {
            return Ok(());
        }
        let mut novel = Vec::with_capacity(self.params.nu);
        for _ in 0..self.params.nu {
            novel.push(self.fresh_entry(Group::Novel)?);
        }
        let mut best = Vec::with_capacity(self.params.beta);
        if let Some(donor) = self.seed_donor(c) {
            let donor_best = self.cell(donor).best.clone();
            for e in donor_best.iter().take(self.params.beta) {
                let fitness = if self.params.inherit_seed_fitness {
                    e.fitness
                } else {
                    self.params.initial_fitness
                };
                best.push(self.indexed_entry(e.macro_id, fitness, Group::Best)?);
            }
        }
        while best.len() < self.params.beta {
            best.push(self.fresh_entry(Group::Best)?);
        }
        let cell = &mut self.cells[idx];
        cell.best = best;
        cell.novel = novel;
        cell.experience = 0;
        cell.initialized = true;
        Ok(())
    }

    /// Picks a uniform random member of the novel (explore) or best (exploit)
    /// group and charges one unit of experience to the cell.
    pub fn select_actor(&mut self, c: CellCoord, mode: Mode) -> Result<ActorRef, LearnerError> {
        let idx = self.som.index(c);
        let cell = &self.cells[idx];
        if !cell.initialized {
            return Err(LearnerError::Uninitialized(c));
        }
        let (group, len) = match mode {
            Mode::Explore => (Group::Novel, cell.novel.len()),
            Mode::Exploit => (Group::Best, cell.best.len()),
        };
        let slot = self.rng.gen_range(0..len);
        self.cells[idx].experience += 1;
        Ok(ActorRef {
            cell: c,
            group,
            slot,
        })
    }

    /// Widrow-Hoff update of the entry that acted at `t-1`, bootstrapped from
    /// the best fitness anywhere in the cell activated at `t`.
    pub fn reinforce(
        &mut self,
        actor: ActorRef,
        reward: f64,
        current: CellCoord,
        terminal: bool,
    ) -> Result<f64, LearnerError> {
        let max_next = if terminal {
            0.0
        } else {
            self.cell(current)
                .max_fitness()
                .ok_or(LearnerError::Uninitialized(current))?
        };
        let target = fitness_target(reward, self.params.gamma, max_next, terminal);
        let eta = self.params.eta;
        let entry = self.entry_mut(actor);
        entry.fitness = widrow_hoff(entry.fitness, target, eta);
        Ok(entry.fitness)
    }

    /// Runs the local EA when the cell's experience exceeds `iota * (beta + nu)`.
    pub fn maybe_evolve(&mut self, c: CellCoord) -> Result<bool, LearnerError> {
        let idx = self.som.index(c);
        if !self.cells[idx].initialized {
            return Err(LearnerError::Uninitialized(c));
        }
        if self.cells[idx].experience <= self.params.evolve_threshold() {
            return Ok(false);
        }
        let cell = &mut self.cells[idx];
        let mut all: Vec<MemberEntry> = cell.best.drain(..).chain(cell.novel.drain(..)).collect();
        // stable: on ties the older best entries stay ahead
        all.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
        let beta = self.params.beta.min(all.len());
        let discarded = all.split_off(beta);
        for mut e in all {
            e.group = Group::Best;
            cell.best.push(e);
        }
        cell.experience = 0;
        for e in discarded {
            self.pool.release_index(e.macro_id)?;
        }
        for _ in 0..self.params.nu {
            let (entry, _) = self.reproduce_novel(c)?;
            self.cells[idx].novel.push(entry);
        }
        Ok(true)
    }

    /// Produces one novel entry for cell `c`, either by indexing a random
    /// macroclassifier of the whole pool or by DE reproduction, with equal
    /// probability. The entry is not inserted into the cell.
    pub fn reproduce_novel(&mut self, c: CellCoord) -> Result<(MemberEntry, Origin), LearnerError> {
        let initial = self.params.initial_fitness;
        if self.rng.gen_bool(0.5) {
            if let Some(id) = self.pool.sample(&mut self.rng) {
                let entry = self.indexed_entry(id, initial, Group::Novel)?;
                return Ok((entry, Origin::Indexed));
            }
        }
        let best_len = self.cell(c).best.len();
        let target = if best_len == 0 {
            random_action(&mut self.rng)
        } else {
            let slot = self.rng.gen_range(0..best_len);
            let pick = self.cell(c).best[slot].macro_id;
            self.pool.action(pick)?
        };
        let child = self.de_reproduce(target)?;
        let macro_id = self.pool.create_macro(child)?;
        let entry = self.indexed_entry(macro_id, initial, Group::Novel)?;
        Ok((entry, Origin::Reproduced))
    }

    /// DE/rand/1/bin child of `target` drawn from this learner's pool.
    pub fn de_reproduce(&mut self, target: Vec2) -> Result<Vec2, LearnerError> {
        de_reproduce(&self.pool, target, self.params.de_cr, &mut self.rng)
    }

    /// Overwrites the fitness of one member entry.
    pub fn set_fitness(&mut self, actor: ActorRef, fitness: f64) {
        self.entry_mut(actor).fitness = fitness;
    }

    /// Starts a new trial: any pending update is dropped.
    pub fn begin_trial(&mut self) {
        self.pending = None;
    }

    fn sense_and_learn(
        &mut self,
        observation: Vec2,
        reward_from_prev: Option<f64>,
        terminal: bool,
    ) -> Result<CellCoord, LearnerError> {
        let winner = self.som.winner(observation);
        self.som.update(observation, winner);
        self.ensure_cell(winner)?;
        if let Some(actor) = self.pending.take() {
            let reward = reward_from_prev.ok_or(LearnerError::MissingReward)?;
            self.reinforce(actor, reward, winner, terminal)?;
        }
        self.maybe_evolve(winner)?;
        Ok(winner)
    }

    /// One sense-learn-act cycle. `reward_from_prev` is the reward returned by
    /// the environment for the previous action of this trial. On a terminal
    /// observation the last actor is credited with the reward alone and no
    /// action is returned.
    pub fn step(
        &mut self,
        observation: Vec2,
        reward_from_prev: Option<f64>,
        terminal: bool,
        mode: Mode,
    ) -> Result<Option<Vec2>, LearnerError> {
        let winner = self.sense_and_learn(observation, reward_from_prev, terminal)?;
        if terminal {
            self.pending = None;
            return Ok(None);
        }
        let actor = self.select_actor(winner, mode)?;
        self.pending = Some(actor);
        let id = self.entry(actor).macro_id;
        Ok(Some(self.pool.action(id)?))
    }

    /// Ends a trial cut off by the step cap: the last actor receives the normal
    /// bootstrapped update from `observation`, then the pending update is dropped.
    pub fn finish_truncated(&mut self, observation: Vec2, reward: f64) -> Result<(), LearnerError> {
        self.sense_and_learn(observation, Some(reward), false)?;
        self.pending = None;
        Ok(())
    }

    /// Exploit-mode action at `observation` without touching learner state.
    /// `None` when the winning cell has never been initialized.
    pub fn greedy_action<R: Rng + ?Sized>(&self, observation: Vec2, rng: &mut R) -> Option<Vec2> {
        let cell = self.cell(self.som.winner(observation));
        if !cell.initialized || cell.best.is_empty() {
            return None;
        }
        let e = &cell.best[rng.gen_range(0..cell.best.len())];
        self.pool.action(e.macro_id).ok()
    }

    /// Max fitness in the winning cell for `observation`, or `None` if uninitialized.
    pub fn winner_max_fitness(&self, observation: Vec2) -> Option<f64> {
        let cell = self.cell(self.som.winner(observation));
        if cell.initialized {
            cell.max_fitness()
        } else {
            None
        }
    }
}
