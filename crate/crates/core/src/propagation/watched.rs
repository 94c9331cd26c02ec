//! Watched-literal propagation for general PB constraints.
//!
//! Each constraint keeps a watch set `W` whose non-falsified coefficients
//! should add up to at least `b + a_1`; then no literal can be unit. Only a
//! falsified watched literal triggers work. When the watch set cannot be
//! repaired, every non-falsified literal is watched, together with the most
//! recently falsified literals until the watched coefficients reach `b + a_1`,
//! and the exact slack decides propagation. Nothing happens on unassignment:
//! backtracking frees the latest assignments first, so by the time an
//! unwatched literal becomes free again the watch set covers the target.

use alloc::vec::Vec;

use crate::model::{ConstraintId, Literal, PBConstraint, Slack};
use crate::trail::{Trail, Value};

use super::PropStats;

#[derive(Clone, Copy, Debug)]
struct Watch {
    cid: ConstraintId,
    term: u32,
}

#[derive(Clone, Debug, Default)]
pub struct WatchedState {
    /// Per constraint id, one flag per term.
    watched: Vec<Vec<bool>>,
    /// `watches[l]`: watched occurrences of literal `l`.
    watches: Vec<Vec<Watch>>,
}

/// What a watch-set repair ended with.
enum Repair {
    /// The watch invariant holds again; the falsified watch can go.
    Restored,
    /// Every non-falsified literal is watched; carries the exact slack.
    Exhausted(Slack),
}

impl WatchedState {
    pub fn new(num_vars: u32) -> WatchedState {
        WatchedState {
            watched: Vec::new(),
            watches: alloc::vec![Vec::new(); 2 * (num_vars as usize + 1)],
        }
    }

    /// Watch flags of a constraint, empty for non-watched constraints.
    pub fn watch_set(&self, cid: ConstraintId) -> &[bool] {
        self.watched.get(cid.index()).map_or(&[], |w| w.as_slice())
    }

    pub fn watch_list_len(&self, lit: Literal) -> usize {
        self.watches[lit.index()].len()
    }

    /// Calls `f` with the constraint and the literal of every watch-list entry.
    pub fn for_each_watch(&self, mut f: impl FnMut(ConstraintId, Literal)) {
        for (idx, list) in self.watches.iter().enumerate() {
            if idx < 2 {
                continue;
            }
            let lit = Literal::new((idx >> 1) as u32, idx & 1 == 1);
            for w in list {
                f(w.cid, lit);
            }
        }
    }

    fn ensure(&mut self, cid: ConstraintId) {
        if self.watched.len() <= cid.index() {
            self.watched.resize(cid.index() + 1, Vec::new());
        }
    }

    fn watch(&mut self, c: &PBConstraint, term: usize) {
        self.watched[c.id.index()][term] = true;
        self.watches[c.terms()[term].lit.index()].push(Watch {
            cid: c.id,
            term: term as u32,
        });
    }

    /// Picks the initial watch set greedily from the largest non-falsified
    /// coefficients. Returns the exact slack when the watch invariant cannot be met.
    pub fn attach(&mut self, c: &PBConstraint, trail: &Trail) -> Option<Slack> {
        self.ensure(c.id);
        self.watched[c.id.index()] = alloc::vec![false; c.len()];
        let target = c.degree() as Slack + c.max_coeff() as Slack;
        let mut sum: Slack = 0;
        for (i, t) in c.terms().iter().enumerate() {
            if sum >= target {
                break;
            }
            if !trail.is_false(t.lit) {
                self.watch(c, i);
                sum += t.coeff as Slack;
            }
        }
        if sum >= target {
            return None;
        }
        self.watch_latest_falsified(c, sum, trail);
        Some(sum - c.degree() as Slack)
    }

    /// Adds falsified literals, latest trail position first, until the
    /// watched coefficients reach `b + a_1`. `sum` is the current total over
    /// all watched terms.
    fn watch_latest_falsified(&mut self, c: &PBConstraint, mut sum: Slack, trail: &Trail) {
        let target = c.degree() as Slack + c.max_coeff() as Slack;
        let flags = &self.watched[c.id.index()];
        let mut falsified: Vec<usize> = (0..c.len())
            .filter(|&i| !flags[i] && trail.is_false(c.terms()[i].lit))
            .collect();
        falsified.sort_unstable_by_key(|&i| core::cmp::Reverse(trail.position(c.terms()[i].lit.var())));
        for i in falsified {
            if sum >= target {
                break;
            }
            self.watch(c, i);
            sum += c.terms()[i].coeff as Slack;
        }
    }

    pub fn purge(&mut self, dead: &[bool]) {
        for list in &mut self.watches {
            list.retain(|w| !dead[w.cid.index()]);
        }
        for (i, w) in self.watched.iter_mut().enumerate() {
            if dead.get(i).copied().unwrap_or(false) {
                *w = Vec::new();
            }
        }
    }

    /// Extends the watch set of `c` after its watched term `falsified` became
    /// false.
    fn repair(&mut self, c: &PBConstraint, falsified: usize, trail: &Trail, stats: &mut PropStats) -> Repair {
        let target = c.degree() as Slack + c.max_coeff() as Slack;
        let flags = &self.watched[c.id.index()];
        let mut sum: Slack = c
            .terms()
            .iter()
            .zip(flags)
            .enumerate()
            .filter(|&(i, (t, &w))| w && i != falsified && !trail.is_false(t.lit))
            .map(|(_, (t, _))| t.coeff as Slack)
            .sum();
        let mut next = 0;
        while sum < target && next < c.len() {
            let t = c.terms()[next];
            if !self.watched[c.id.index()][next] && !trail.is_false(t.lit) {
                self.watch(c, next);
                stats.watch_replacements += 1;
                sum += t.coeff as Slack;
            }
            next += 1;
        }
        if sum >= target {
            return Repair::Restored;
        }
        let watched_total = c
            .terms()
            .iter()
            .zip(&self.watched[c.id.index()])
            .filter(|(_, &w)| w)
            .map(|(t, _)| t.coeff as Slack)
            .sum();
        self.watch_latest_falsified(c, watched_total, trail);
        Repair::Exhausted(sum - c.degree() as Slack)
    }

    /// `lit` became true: visit the constraints watching `~lit`.
    pub fn on_assign(
        &mut self,
        lit: Literal,
        constraints: &[PBConstraint],
        trail: &mut Trail,
        stats: &mut PropStats,
    ) -> Option<ConstraintId> {
        let falsified = !lit;
        let mut list = core::mem::take(&mut self.watches[falsified.index()]);
        let mut kept = 0;
        let mut conflict = None;
        let mut i = 0;
        while i < list.len() {
            let w = list[i];
            i += 1;
            let c = &constraints[w.cid.index()];
            stats.watch_visits += 1;
            debug_assert!(self.watched[w.cid.index()][w.term as usize]);
            debug_assert_eq!(c.terms()[w.term as usize].lit, falsified);
            match self.repair(c, w.term as usize, trail, stats) {
                Repair::Restored => {
                    self.watched[w.cid.index()][w.term as usize] = false;
                }
                Repair::Exhausted(slack) => {
                    list[kept] = w;
                    kept += 1;
                    debug_assert_eq!(slack, crate::model::slack(c, trail));
                    if slack < 0 {
                        conflict = Some(w.cid);
                        break;
                    }
                    for t in c.terms().iter().take_while(|t| t.coeff as Slack > slack) {
                        if trail.lit_value(t.lit) == Value::Unassigned {
                            trail.assign(t.lit, Some(w.cid));
                            stats.propagations += 1;
                        }
                    }
                }
            }
        }
        // Entries after a conflict are kept untouched.
        while i < list.len() {
            list[kept] = list[i];
            kept += 1;
            i += 1;
        }
        list.truncate(kept);
        // Every constraint visited here already watches `falsified`, so no
        // repair added to its list in the meantime.
        debug_assert!(self.watches[falsified.index()].is_empty());
        self.watches[falsified.index()] = list;
        conflict
    }
}
