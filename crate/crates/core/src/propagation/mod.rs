//! Unit propagation with a per-constraint choice of engine.
//!
//! A [`Propagator`] owns the constraint database and both engine states.
//! Each constraint is attached to exactly one engine when it is registered
//! and stays there. Assignments are processed in trail order; a literal
//! counts as processed once both engines have seen it.

mod counting;
mod watched;

use alloc::vec::Vec;
use core::fmt;

pub use counting::CountingState;
pub use watched::WatchedState;

use crate::heuristics::EngineKind;
use crate::model::{unit_literals, ConstraintId, Literal, PBConstraint, Slack};
use crate::trail::Trail;

/// Instrumentation counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PropStats {
    pub counting_constraints: u64,
    pub watched_constraints: u64,
    /// Slack decrements performed by the counting engine.
    pub slack_updates: u64,
    /// Constraint visits caused by a falsified watched literal.
    pub watch_visits: u64,
    /// Literals added to a watch set while repairing it.
    pub watch_replacements: u64,
    pub propagations: u64,
}

impl PropStats {
    pub fn constraint_visits(&self) -> u64 {
        self.slack_updates + self.watch_visits
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropResult {
    NoOp,
    Propagations(Vec<(Literal, ConstraintId)>),
    Conflict(ConstraintId),
}

impl PropResult {
    pub fn is_conflict(&self) -> bool {
        matches!(self, PropResult::Conflict(_))
    }
}

/// A violated engine invariant found by [`Propagator::audit`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AuditError {
    CachedSlack {
        cid: ConstraintId,
        cached: Slack,
        actual: Slack,
    },
    WatchInvariant(ConstraintId),
    WatchListMismatch(ConstraintId),
    NotAtFixpoint(ConstraintId),
}

impl fmt::Display for AuditError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuditError::CachedSlack { cid, cached, actual } => {
                write!(f, "constraint {cid}: cached slack {cached} but actual slack {actual}")
            }
            AuditError::WatchInvariant(cid) => write!(
                f,
                "constraint {cid}: watched coefficients below b + a1 with unwatched free literals"
            ),
            AuditError::WatchListMismatch(cid) => {
                write!(f, "constraint {cid}: watch flags and watch lists disagree")
            }
            AuditError::NotAtFixpoint(cid) => {
                write!(f, "constraint {cid}: unit or conflicting at fixpoint")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Propagator {
    constraints: Vec<PBConstraint>,
    engines: Vec<EngineKind>,
    deleted: Vec<bool>,
    counting: CountingState,
    watched: WatchedState,
    /// Trail position of the next literal to process.
    head: usize,
    pub stats: PropStats,
}

impl Propagator {
    pub fn new(num_vars: u32) -> Propagator {
        Propagator {
            constraints: Vec::new(),
            engines: Vec::new(),
            deleted: Vec::new(),
            counting: CountingState::new(num_vars),
            watched: WatchedState::new(num_vars),
            head: 0,
            stats: PropStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn constraint(&self, cid: ConstraintId) -> &PBConstraint {
        &self.constraints[cid.index()]
    }

    pub fn engine(&self, cid: ConstraintId) -> EngineKind {
        self.engines[cid.index()]
    }

    pub fn is_deleted(&self, cid: ConstraintId) -> bool {
        self.deleted[cid.index()]
    }

    pub fn head(&self) -> usize {
        self.head
    }

    pub fn counting_state(&self) -> &CountingState {
        &self.counting
    }

    pub fn watched_state(&self) -> &WatchedState {
        &self.watched
    }

    /// Adds `c` under the current assignment, which must be fully processed.
    /// Units already implied by `c` are put on the trail with `c` as reason.
    pub fn register(
        &mut self,
        mut c: PBConstraint,
        engine: EngineKind,
        trail: &mut Trail,
    ) -> (ConstraintId, PropResult) {
        assert_eq!(self.head, trail.len(), "register needs a fully propagated trail");
        let cid = ConstraintId(self.constraints.len() as u32);
        c.id = cid;
        let exhausted = match engine {
            EngineKind::Counting => {
                self.stats.counting_constraints += 1;
                Some(self.counting.attach(&c, trail))
            }
            EngineKind::Watched => {
                self.stats.watched_constraints += 1;
                self.watched.attach(&c, trail)
            }
        };
        self.constraints.push(c);
        self.engines.push(engine);
        self.deleted.push(false);
        let Some(slack) = exhausted else {
            return (cid, PropResult::NoOp);
        };
        if slack < 0 {
            return (cid, PropResult::Conflict(cid));
        }
        let mut units = Vec::new();
        let c = &self.constraints[cid.index()];
        for t in c.terms().iter().take_while(|t| t.coeff as Slack > slack) {
            if !trail.is_assigned(t.lit.var()) {
                trail.assign(t.lit, Some(cid));
                self.stats.propagations += 1;
                units.push((t.lit, cid));
            }
        }
        if units.is_empty() {
            (cid, PropResult::NoOp)
        } else {
            (cid, PropResult::Propagations(units))
        }
    }

    /// Processes the next unprocessed trail literal in both engines.
    /// Returns `None` when the trail is fully processed.
    pub fn on_assign(&mut self, trail: &mut Trail) -> Option<PropResult> {
        let lit = *trail.literals().get(self.head)?;
        self.head += 1;
        let before = trail.len();
        let conflict = self
            .counting
            .on_assign(lit, &self.constraints, trail, &mut self.stats)
            .or_else(|| self.watched.on_assign(lit, &self.constraints, trail, &mut self.stats));
        Some(match conflict {
            Some(cid) => PropResult::Conflict(cid),
            None if trail.len() == before => PropResult::NoOp,
            None => PropResult::Propagations(
                trail.literals()[before..]
                    .iter()
                    .map(|&l| (l, trail.reason(l.var()).expect("propagated")))
                    .collect(),
            ),
        })
    }

    /// Runs both engines to a fixpoint. Returns the conflicting constraint,
    /// if any.
    pub fn propagate(&mut self, trail: &mut Trail) -> Result<(), ConstraintId> {
        while let Some(&lit) = trail.literals().get(self.head) {
            self.head += 1;
            if let Some(cid) = self.counting.on_assign(lit, &self.constraints, trail, &mut self.stats) {
                return Err(cid);
            }
            if let Some(cid) = self.watched.on_assign(lit, &self.constraints, trail, &mut self.stats) {
                return Err(cid);
            }
        }
        Ok(())
    }

    /// Undoes every assignment above `level`. Counting slacks are restored
    /// only for literals the engines had already processed; the watched
    /// engine needs no work.
    pub fn backtrack(&mut self, trail: &mut Trail, level: u32) {
        let head = self.head;
        let counting = &mut self.counting;
        trail.backtrack_to(level, |lit, pos| {
            if pos < head {
                counting.on_unassign(lit);
            }
        });
        self.head = self.head.min(trail.len());
    }

    /// Drops constraints for good. Only allowed at decision level 0, and
    /// none of them may be the reason of a current assignment.
    pub fn delete(&mut self, ids: &[ConstraintId], trail: &Trail) {
        assert_eq!(trail.decision_level(), 0);
        let mut any = false;
        for &cid in ids {
            if !self.deleted[cid.index()] {
                self.deleted[cid.index()] = true;
                any = true;
                match self.engines[cid.index()] {
                    EngineKind::Counting => self.stats.counting_constraints -= 1,
                    EngineKind::Watched => self.stats.watched_constraints -= 1,
                }
            }
        }
        if any {
            self.counting.purge(&self.deleted);
            self.watched.purge(&self.deleted);
        }
    }

    /// Checks the engine invariants at a conflict-free fixpoint: cached
    /// slacks equal the definitional slack, every watched constraint either
    /// covers `b + a_1` with non-falsified watches or watches all of its
    /// non-falsified literals, watch flags match the watch lists, and no
    /// constraint is unit or conflicting.
    pub fn audit(&self, trail: &Trail) -> Result<(), AuditError> {
        assert_eq!(self.head, trail.len(), "audit needs a fixpoint");
        let mut listed: Vec<usize> = alloc::vec![0; self.constraints.len()];
        for (i, c) in self.constraints.iter().enumerate() {
            if self.deleted[i] {
                continue;
            }
            let cid = c.id;
            match self.engines[i] {
                EngineKind::Counting => {
                    let actual = crate::model::slack(c, trail);
                    let cached = self.counting.cached_slack(cid);
                    if cached != actual {
                        return Err(AuditError::CachedSlack { cid, cached, actual });
                    }
                }
                EngineKind::Watched => {
                    let flags = self.watched.watch_set(cid);
                    let target = c.degree() as Slack + c.max_coeff() as Slack;
                    let mut live: Slack = 0;
                    let mut unwatched_free = false;
                    for (t, &w) in c.terms().iter().zip(flags) {
                        if trail.is_false(t.lit) {
                            continue;
                        }
                        if w {
                            live += t.coeff as Slack;
                        } else {
                            unwatched_free = true;
                        }
                    }
                    if live < target && unwatched_free {
                        return Err(AuditError::WatchInvariant(cid));
                    }
                    listed[i] = flags.iter().filter(|&&w| w).count();
                }
            }
            if !unit_literals(c, trail).is_ok_and(|u| u.is_empty()) {
                return Err(AuditError::NotAtFixpoint(cid));
            }
        }
        let mut found: Vec<usize> = alloc::vec![0; self.constraints.len()];
        self.watched.for_each_watch(|cid, lit| {
            if self.constraints[cid.index()].terms().iter().any(|t| t.lit == lit) {
                found[cid.index()] += 1;
            }
        });
        for (i, (&l, &f)) in listed.iter().zip(&found).enumerate() {
            if !self.deleted[i] && self.engines[i] == EngineKind::Watched && l != f {
                return Err(AuditError::WatchListMismatch(ConstraintId(i as u32)));
            }
        }
        Ok(())
    }
}
