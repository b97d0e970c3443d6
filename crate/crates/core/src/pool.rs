//! Global store of macroclassifiers.
//!
//! A macroclassifier is a bare action vector. Cells never own action vectors
//! directly; they hold member entries that index into this pool, and the
//! numerosity of a macroclassifier is the number of such entries alive.

use rand::Rng;
use std::collections::HashMap;
use thiserror::Error;

use crate::Vec2;

/// Opaque handle to a macroclassifier. Handles are never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MacroId(u64);

impl MacroId {
    pub fn raw(self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroClassifier {
    pub id: MacroId,
    pub action: Vec2,
    pub numerosity: u32,
}

#[derive(Debug, Error, PartialEq)]
pub enum PoolError {
    #[error("action component {value} at index {index} is outside [-1, 1]")]
    ActionOutOfRange { index: usize, value: f64 },
    #[error("macroclassifier {0:?} is not live")]
    DeadId(MacroId),
    #[error("numerosity of {0:?} is already zero")]
    Underflow(MacroId),
    #[error("audit mismatch for {id:?}: numerosity {numerosity}, referenced {referenced}")]
    AuditMismatch {
        id: MacroId,
        numerosity: u32,
        referenced: u32,
    },
}

/// Group a member entry belongs to inside its cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    Best,
    Novel,
}

/// One cell-membership of a macroclassifier, carrying the niched fitness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemberEntry {
    pub macro_id: MacroId,
    pub fitness: f64,
    pub group: Group,
}

/// Macroclassifiers plus a dense list of live ids for uniform sampling.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Pool {
    macros: HashMap<MacroId, MacroClassifier>,
    // live ids in a swap-remove vector; `slot` maps id -> position
    live: Vec<MacroId>,
    slot: HashMap<MacroId, usize>,
    next_id: u64,
}

impl Pool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create_macro(&mut self, action: Vec2) -> Result<MacroId, PoolError> {
        for (index, &value) in action.iter().enumerate() {
            if !(-1.0..=1.0).contains(&value) {
                return Err(PoolError::ActionOutOfRange { index, value });
            }
        }
        let id = MacroId(self.next_id);
        self.next_id += 1;
        self.macros.insert(
            id,
            MacroClassifier {
                id,
                action,
                numerosity: 0,
            },
        );
        self.slot.insert(id, self.live.len());
        self.live.push(id);
        Ok(id)
    }

    pub fn acquire_index(&mut self, id: MacroId) -> Result<(), PoolError> {
        let m = self.macros.get_mut(&id).ok_or(PoolError::DeadId(id))?;
        m.numerosity += 1;
        Ok(())
    }

    /// Drops one membership; a macroclassifier whose numerosity reaches zero is deleted.
    pub fn release_index(&mut self, id: MacroId) -> Result<(), PoolError> {
        let m = self.macros.get_mut(&id).ok_or(PoolError::DeadId(id))?;
        if m.numerosity == 0 {
            return Err(PoolError::Underflow(id));
        }
        m.numerosity -= 1;
        if m.numerosity == 0 {
            self.remove(id);
        }
        Ok(())
    }

    fn remove(&mut self, id: MacroId) {
        self.macros.remove(&id);
        if let Some(pos) = self.slot.remove(&id) {
            self.live.swap_remove(pos);
            if let Some(&moved) = self.live.get(pos) {
                self.slot.insert(moved, pos);
            }
        }
    }

    /// `(macro_count, micro_count)`.
    pub fn census(&self) -> (usize, u64) {
        let micro = self.macros.values().map(|m| u64::from(m.numerosity)).sum();
        (self.macros.len(), micro)
    }

    pub fn get(&self, id: MacroId) -> Option<&MacroClassifier> {
        self.macros.get(&id)
    }

    pub fn action(&self, id: MacroId) -> Result<Vec2, PoolError> {
        self.macros
            .get(&id)
            .map(|m| m.action)
            .ok_or(PoolError::DeadId(id))
    }

    pub fn is_live(&self, id: MacroId) -> bool {
        self.macros.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    /// Live ids in sampling order.
    pub fn live_ids(&self) -> &[MacroId] {
        &self.live
    }

    /// Uniform draw over live macroclassifiers, each counted once.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<MacroId> {
        if self.live.is_empty() {
            None
        } else {
            Some(self.live[rng.gen_range(0..self.live.len())])
        }
    }

    /// Draws `k` pairwise distinct live macroclassifiers, or `None` if fewer exist.
    pub fn sample_distinct<R: Rng + ?Sized>(&self, rng: &mut R, k: usize) -> Option<Vec<MacroId>> {
        if self.live.len() < k {
            return None;
        }
        let picks = rand::seq::index::sample(rng, self.live.len(), k);
        Some(picks.into_iter().map(|i| self.live[i]).collect())
    }

    /// Checks numerosities against the references held by all cells.
    ///
    /// Fails on the first macroclassifier whose numerosity disagrees with the
    /// number of entries referencing it, on a reference to a dead id, or on a
    /// live macroclassifier nobody references.
    pub fn audit<'a, I>(&self, entries: I) -> Result<(), PoolError>
    where
        I: IntoIterator<Item = &'a MemberEntry>,
    {
        let mut referenced: HashMap<MacroId, u32> = HashMap::new();
        for e in entries {
            if !self.is_live(e.macro_id) {
                return Err(PoolError::DeadId(e.macro_id));
            }
            *referenced.entry(e.macro_id).or_default() += 1;
        }
        let mut ids: Vec<_> = self.macros.keys().copied().collect();
        ids.sort();
        for id in ids {
            let numerosity = self.macros[&id].numerosity;
            let count = referenced.get(&id).copied().unwrap_or(0);
            if numerosity != count {
                return Err(PoolError::AuditMismatch {
                    id,
                    numerosity,
                    referenced: count,
                });
            }
        }
        debug_assert_eq!(self.live.len(), self.macros.len());
        Ok(())
    }
}
