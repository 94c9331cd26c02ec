//! First-UIP conflict analysis over clausal weakenings of PB constraints.
//!
//! A conflicting constraint is weakened to the clause of its falsified
//! literals, a reason constraint to the propagated literal plus the literals
//! that were already false when it fired. For reasons, falsified literals
//! with small coefficients are dropped as long as the rest still forces the
//! propagated literal.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{ConstraintId, Literal, PBConstraint, Slack};
use crate::propagation::Propagator;
use crate::trail::Trail;

use super::order::VarOrder;

/// Without `implied`: every falsified literal of the conflicting `c`. With
/// `implied`: falsified literals of `c` that were false before `implied`
/// and suffice to force it. Literals fixed at level 0 are left out.
pub fn explain(c: &PBConstraint, trail: &Trail, implied: Option<Literal>, out: &mut Vec<Literal>) {
    out.clear();
    let (limit, threshold) = match implied {
        Some(p) => {
            let coeff = c
                .terms()
                .iter()
                .find(|t| t.lit == p)
                .expect("reason contains the implied literal")
                .coeff;
            (trail.position(p.var()), coeff as Slack)
        }
        None => (usize::MAX, 0),
    };
    let falsified = |lit: Literal| trail.is_false(lit) && trail.position(lit.var()) < limit;
    let mut slack: Slack = -(c.degree() as Slack);
    for t in c.terms() {
        if !falsified(t.lit) {
            slack += t.coeff as Slack;
        }
    }
    debug_assert!(slack < threshold, "{c} does not explain {implied:?}");
    for t in c.terms().iter().rev() {
        if !falsified(t.lit) || trail.level(t.lit.var()) == 0 {
            continue;
        }
        if implied.is_some() && slack + (t.coeff as Slack) < threshold {
            slack += t.coeff as Slack;
        } else {
            out.push(t.lit);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Analysis {
    /// Learned clause; the first literal is the asserting one.
    pub clause: Vec<Literal>,
    pub backjump: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnalyzeError {
    /// The conflict holds at level 0: the formula is unsatisfiable.
    RootConflict,
    /// The weakened conflict has no literal from the current level.
    NoCurrentLevelLiteral,
}

#[derive(Clone, Debug, Default)]
pub struct Analyzer {
    seen: Vec<bool>,
    buf: Vec<Literal>,
    /// Constraints used as reasons during the last analysis.
    pub used: Vec<ConstraintId>,
}

impl Analyzer {
    pub fn new(num_vars: u32) -> Analyzer {
        Analyzer {
            seen: vec![false; num_vars as usize + 1],
            buf: Vec::new(),
            used: Vec::new(),
        }
    }

    pub fn analyze(
        &mut self,
        conflict: ConstraintId,
        prop: &Propagator,
        trail: &Trail,
        order: &mut VarOrder,
    ) -> Result<Analysis, AnalyzeError> {
        let level = trail.decision_level();
        if level == 0 {
            return Err(AnalyzeError::RootConflict);
        }
        self.used.clear();
        self.used.push(conflict);
        explain(prop.constraint(conflict), trail, None, &mut self.buf);

        let mut clause = vec![Literal::positive(1)];
        let mut pending = 0usize;
        let mut index = trail.len();
        let mut seen_vars = Vec::new();
        let uip = loop {
            for &u in &self.buf {
                let v = u.var();
                if self.seen[v as usize] || trail.level(v) == 0 {
                    continue;
                }
                self.seen[v as usize] = true;
                seen_vars.push(v);
                order.bump(v);
                if trail.level(v) == level {
                    pending += 1;
                } else {
                    clause.push(u);
                }
            }
            if pending == 0 {
                for v in seen_vars {
                    self.seen[v as usize] = false;
                }
                return Err(AnalyzeError::NoCurrentLevelLiteral);
            }
            let p = loop {
                index -= 1;
                let p = trail.literals()[index];
                if self.seen[p.var() as usize] {
                    break p;
                }
            };
            self.seen[p.var() as usize] = false;
            pending -= 1;
            if pending == 0 {
                break p;
            }
            let reason = trail
                .reason(p.var())
                .expect("only the decision lacks a reason and it is the last UIP candidate");
            self.used.push(reason);
            explain(prop.constraint(reason), trail, Some(p), &mut self.buf);
        };
        for v in seen_vars {
            self.seen[v as usize] = false;
        }
        clause[0] = !uip;

        let mut backjump = 0;
        if clause.len() > 1 {
            let (best, _) = clause
                .iter()
                .enumerate()
                .skip(1)
                .max_by_key(|&(i, l)| (trail.level(l.var()), core::cmp::Reverse(i)))
                .expect("non-empty tail");
            clause.swap(1, best);
            backjump = trail.level(clause[1].var());
        }
        Ok(Analysis { clause, backjump })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristics::EngineKind;
    use crate::model::Term;

    fn x(v: u32) -> Literal {
        Literal::positive(v)
    }
    fn nx(v: u32) -> Literal {
        Literal::negative(v)
    }

    fn running_example() -> PBConstraint {
        PBConstraint::new(vec![Term::new(3, x(1)), Term::new(2, x(2)), Term::new(1, x(3))], 3).unwrap()
    }

    #[test]
    fn conflict_keeps_all_falsified() {
        let mut t = Trail::new(3);
        t.new_decision_level();
        t.assign(nx(1), None);
        t.assign(nx(3), None);
        let mut out = Vec::new();
        explain(&running_example(), &t, None, &mut out);
        assert_eq!(out, vec![x(3), x(1)]);
    }

    #[test]
    fn reason_uses_literals_false_before_propagation() {
        let mut t = Trail::new(3);
        t.new_decision_level();
        t.assign(nx(1), None);
        t.assign(x(2), Some(ConstraintId(0)));
        t.assign(nx(3), None);
        let mut out = Vec::new();
        explain(&running_example(), &t, Some(x(2)), &mut out);
        assert_eq!(out, vec![x(1)]);
    }

    #[test]
    fn reason_drops_irrelevant_literals() {
        // 5x1 + 5x2 + x3 + x4 >= 5: with x3, x4, x1 false, slack 0 < 5 forces
        // x2, and x1 alone already gives slack 2 < 5.
        let c = PBConstraint::new(
            vec![
                Term::new(5, x(1)),
                Term::new(5, x(2)),
                Term::new(1, x(3)),
                Term::new(1, x(4)),
            ],
            5,
        )
        .unwrap();
        let mut t = Trail::new(4);
        t.new_decision_level();
        for l in [nx(3), nx(4), nx(1)] {
            t.assign(l, None);
        }
        t.assign(x(2), Some(ConstraintId(0)));
        let mut out = Vec::new();
        explain(&c, &t, Some(x(2)), &mut out);
        assert_eq!(out, vec![x(1)]);
    }

    /// Conflict on x1 + x2 >= 2 after deciding ~x1 at level 1 and ~x2 at
    /// level 2: learn (x2 v x1), back-jump to level 1, assert x2.
    #[test]
    fn two_decision_conflict() {
        let c = PBConstraint::new(vec![Term::new(1, x(1)), Term::new(1, x(2))], 2).unwrap();
        let mut prop = Propagator::new(2);
        let (cid, _) = prop.register(c, EngineKind::Counting, &mut Trail::new(2));
        let mut trail = Trail::new(2);
        trail.new_decision_level();
        trail.assign(nx(1), None);
        trail.new_decision_level();
        trail.assign(nx(2), None);
        let res = Analyzer::new(2)
            .analyze(cid, &prop, &trail, &mut VarOrder::new(2, 0.95))
            .unwrap();
        assert_eq!(res.clause, vec![x(2), x(1)]);
        assert_eq!(res.backjump, 1);
    }

    #[test]
    fn root_conflict() {
        let trail = Trail::new(1);
        let mut p = Propagator::new(1);
        let mut t = Trail::new(1);
        let (cid, _) = p.register(PBConstraint::clause(&[x(1)]).unwrap(), EngineKind::Watched, &mut t);
        let mut a = Analyzer::new(1);
        let mut order = VarOrder::new(1, 0.95);
        assert_eq!(a.analyze(cid, &p, &trail, &mut order), Err(AnalyzeError::RootConflict));
    }
}
