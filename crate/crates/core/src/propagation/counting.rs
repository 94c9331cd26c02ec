//! Counting propagation: every constraint keeps its slack up to date on each
//! assignment and unassignment of a literal it contains.

use alloc::vec::Vec;

use crate::model::{ConstraintId, Literal, PBConstraint, Slack};
use crate::trail::{Trail, Value};

use super::PropStats;

#[derive(Clone, Copy, Debug)]
struct Occurrence {
    cid: ConstraintId,
    coeff: Slack,
}

#[derive(Clone, Debug, Default)]
pub struct CountingState {
    /// Slack per constraint id, only meaningful for counting constraints.
    slack: Vec<Slack>,
    /// `occurs[l]`: counting constraints containing `~l`, so that making `l`
    /// true lowers their slack.
    occurs: Vec<Vec<Occurrence>>,
}

impl CountingState {
    pub fn new(num_vars: u32) -> CountingState {
        CountingState {
            slack: Vec::new(),
            occurs: alloc::vec![Vec::new(); 2 * (num_vars as usize + 1)],
        }
    }

    pub fn cached_slack(&self, cid: ConstraintId) -> Slack {
        self.slack[cid.index()]
    }

    fn ensure(&mut self, cid: ConstraintId) {
        if self.slack.len() <= cid.index() {
            self.slack.resize(cid.index() + 1, 0);
        }
    }

    /// Attaches `c` with its slack under the (fully processed) trail.
    pub fn attach(&mut self, c: &PBConstraint, trail: &Trail) -> Slack {
        self.ensure(c.id);
        for t in c.terms() {
            self.occurs[(!t.lit).index()].push(Occurrence {
                cid: c.id,
                coeff: t.coeff as Slack,
            });
        }
        let s = crate::model::slack(c, trail);
        self.slack[c.id.index()] = s;
        s
    }

    /// Removes every occurrence of the constraints flagged in `dead`.
    pub fn purge(&mut self, dead: &[bool]) {
        for list in &mut self.occurs {
            list.retain(|o| !dead[o.cid.index()]);
        }
    }

    /// `lit` became true: lower the slack of every constraint containing
    /// `~lit`, then propagate or report the first conflict. All slacks are
    /// updated even after a conflict so that unassignment stays symmetric.
    pub fn on_assign(
        &mut self,
        lit: Literal,
        constraints: &[PBConstraint],
        trail: &mut Trail,
        stats: &mut PropStats,
    ) -> Option<ConstraintId> {
        let mut conflict = None;
        let CountingState { slack, occurs } = self;
        for occ in &occurs[lit.index()] {
            let s = &mut slack[occ.cid.index()];
            *s -= occ.coeff;
            stats.slack_updates += 1;
            if conflict.is_some() {
                continue;
            }
            if *s < 0 {
                conflict = Some(occ.cid);
                continue;
            }
            let s = *s;
            let c = &constraints[occ.cid.index()];
            if (c.max_coeff() as Slack) <= s {
                continue;
            }
            for t in c.terms().iter().take_while(|t| t.coeff as Slack > s) {
                if trail.lit_value(t.lit) == Value::Unassigned {
                    trail.assign(t.lit, Some(occ.cid));
                    stats.propagations += 1;
                }
            }
        }
        conflict
    }

    /// `lit` was popped from the trail after having been processed.
    pub fn on_unassign(&mut self, lit: Literal) {
        let CountingState { slack, occurs } = self;
        for occ in &occurs[lit.index()] {
            slack[occ.cid.index()] += occ.coeff;
        }
    }
}
