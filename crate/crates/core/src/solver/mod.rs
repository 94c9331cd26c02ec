//! CDCL search over normalized PB constraints.
//!
//! Every constraint, input or learned, is dispatched once to the counting or
//! the watched engine by the configured heuristic. Conflicts are analyzed on
//! clausal weakenings (first UIP), restarts follow the Luby sequence, and
//! optimization is a solution-improving linear search on the objective.

pub mod analyze;
pub mod order;

use alloc::vec::Vec;
use core::fmt;

use crate::heuristics::{dispatch, ConfigError, HeuristicConfig, SMALL_COEFFICIENT_BOUND};
use crate::model::{normalize, ConstraintId, Instance, Literal, ModelError, Normalized, PBConstraint, Slack};
use crate::propagation::{AuditError, PropResult, PropStats, Propagator};
use crate::trail::Trail;

use analyze::{AnalyzeError, Analyzer};
use order::VarOrder;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub heuristic: HeuristicConfig,
    /// Conflicts per Luby unit.
    pub restart_base: u64,
    /// Learned clauses kept before half of them are deleted.
    pub max_learned: usize,
    pub var_decay: f64,
    /// Check engine invariants at every propagation fixpoint.
    pub audit: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            heuristic: HeuristicConfig::default(),
            restart_base: 100,
            max_learned: 100_000,
            var_decay: 0.95,
            audit: cfg!(debug_assertions),
        }
    }
}

impl SolverConfig {
    pub fn new(heuristic: HeuristicConfig) -> SolverConfig {
        SolverConfig {
            heuristic,
            ..SolverConfig::default()
        }
    }
}

/// Search limits and hooks.
#[derive(Default)]
pub struct Budget<'a> {
    pub max_conflicts: Option<u64>,
    /// Polled after every propagation fixpoint; `true` stops the search.
    pub stop: Option<&'a mut dyn FnMut() -> bool>,
    /// Called with each improving objective value.
    pub on_solution: Option<&'a mut dyn FnMut(Slack)>,
}

impl<'a> Budget<'a> {
    pub fn unlimited() -> Budget<'a> {
        Budget::default()
    }

    pub fn conflicts(max: u64) -> Budget<'a> {
        Budget {
            max_conflicts: Some(max),
            ..Budget::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Sat,
    Unsat,
    Optimum(Slack),
    Timeout,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub conflicts: u64,
    pub decisions: u64,
    pub restarts: u64,
    pub learned: u64,
    pub deleted: u64,
    pub audits: u64,
    pub prop: PropStats,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub status: Status,
    /// Assignment indexed by variable (index 0 unused).
    pub model: Option<Vec<bool>>,
    /// Objective value of `model`, for optimization runs.
    pub objective: Option<Slack>,
    pub stats: SolveStats,
}

impl SolveResult {
    /// Literals of the model, one per variable.
    pub fn model_literals(&self) -> Vec<Literal> {
        self.model
            .as_ref()
            .map(|m| (1..m.len() as u32).map(|v| Literal::new(v, !m[v as usize])).collect())
            .unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverError {
    Config(ConfigError),
    Model(ModelError),
    Audit(AuditError),
    /// A model failed re-evaluation against the input constraints.
    ModelCheckFailed,
    /// Conflict analysis found no literal from the conflict level.
    Analysis,
    /// The objective bound does not fit the coefficient range.
    ObjectiveOverflow,
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::Config(e) => write!(f, "invalid configuration: {e}"),
            SolverError::Model(e) => write!(f, "invalid constraint: {e}"),
            SolverError::Audit(e) => write!(f, "engine audit failed: {e}"),
            SolverError::ModelCheckFailed => f.write_str("internal error: model violates the instance"),
            SolverError::Analysis => f.write_str("internal error: conflict without current-level literal"),
            SolverError::ObjectiveOverflow => f.write_str("objective value out of coefficient range"),
        }
    }
}

impl From<AuditError> for SolverError {
    fn from(e: AuditError) -> Self {
        SolverError::Audit(e)
    }
}

/// The reluctant doubling sequence 1, 1, 2, 1, 1, 2, 4, ...
pub fn luby(mut i: u64) -> u64 {
    let mut size = 1;
    let mut seq = 0;
    while size < i + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != i {
        size = (size - 1) >> 1;
        seq -= 1;
        i %= size;
    }
    1 << seq
}

enum Search {
    Sat,
    Unsat,
    Stopped,
}

pub struct Solver<'i> {
    instance: &'i Instance,
    cfg: SolverConfig,
    small: bool,
    trail: Trail,
    prop: Propagator,
    order: VarOrder,
    phase: Vec<bool>,
    analyzer: Analyzer,
    learned: Vec<ConstraintId>,
    activity: Vec<f64>,
    clause_inc: f64,
    stats: SolveStats,
    restart_count: u64,
    conflicts_until_restart: u64,
    /// Set once a level-0 conflict is found.
    root_unsat: bool,
}

impl<'i> Solver<'i> {
    /// Loads the instance and propagates its root-level units.
    pub fn new(instance: &'i Instance, cfg: SolverConfig) -> Result<Solver<'i>, SolverError> {
        cfg.heuristic.validate().map_err(SolverError::Config)?;
        let n = instance.num_vars;
        let mut solver = Solver {
            instance,
            small: instance.max_input_coeff < SMALL_COEFFICIENT_BOUND,
            trail: Trail::new(n),
            prop: Propagator::new(n),
            order: VarOrder::new(n, cfg.var_decay),
            phase: alloc::vec![false; n as usize + 1],
            analyzer: Analyzer::new(n),
            learned: Vec::new(),
            activity: Vec::new(),
            clause_inc: 1.0,
            stats: SolveStats::default(),
            restart_count: 0,
            conflicts_until_restart: cfg.restart_base * luby(0),
            root_unsat: instance.trivially_unsat,
            cfg,
        };
        if !solver.root_unsat {
            for c in &instance.constraints {
                if !solver.add_root_constraint(c.clone()) {
                    break;
                }
            }
        }
        Ok(solver)
    }

    pub fn stats(&self) -> SolveStats {
        let mut s = self.stats;
        s.prop = self.prop.stats;
        s
    }

    pub fn propagator(&self) -> &Propagator {
        &self.prop
    }

    pub fn trail(&self) -> &Trail {
        &self.trail
    }

    /// Registers a constraint at level 0 and propagates. Returns `false`
    /// once the formula is known to be unsatisfiable.
    fn add_root_constraint(&mut self, c: PBConstraint) -> bool {
        debug_assert_eq!(self.trail.decision_level(), 0);
        let engine = dispatch(&c, &self.cfg.heuristic, self.small).engine();
        self.activity.push(0.0);
        let (_, r) = self.prop.register(c, engine, &mut self.trail);
        if r.is_conflict() || self.prop.propagate(&mut self.trail).is_err() {
            self.root_unsat = true;
        }
        !self.root_unsat
    }

    fn backtrack(&mut self, level: u32) {
        if level >= self.trail.decision_level() {
            return;
        }
        let start = self.trail.level_start(level + 1);
        for &l in &self.trail.literals()[start..] {
            self.phase[l.var() as usize] = !l.is_negated();
            self.order.insert(l.var());
        }
        self.prop.backtrack(&mut self.trail, level);
    }

    /// Picks the unassigned variable of highest activity with its saved phase.
    pub fn decide(&mut self) -> Option<Literal> {
        while let Some(v) = self.order.pop() {
            if !self.trail.is_assigned(v) {
                return Some(Literal::new(v, !self.phase[v as usize]));
            }
        }
        None
    }

    fn bump_constraint(&mut self, cid: ConstraintId) {
        let a = &mut self.activity[cid.index()];
        *a += self.clause_inc;
        if *a > 1e20 {
            for a in self.activity.iter_mut() {
                *a *= 1e-20;
            }
            self.clause_inc *= 1e-20;
        }
    }

    fn learn(&mut self, clause: &[Literal]) -> Result<Option<ConstraintId>, SolverError> {
        let c = PBConstraint::clause(clause).map_err(SolverError::Model)?;
        let engine = dispatch(&c, &self.cfg.heuristic, self.small).engine();
        self.activity.push(0.0);
        let (cid, r) = self.prop.register(c, engine, &mut self.trail);
        self.learned.push(cid);
        self.stats.learned += 1;
        self.bump_constraint(cid);
        Ok(match r {
            PropResult::Conflict(cid) => Some(cid),
            _ => None,
        })
    }

    /// Halves the learned clauses by activity; runs at level 0.
    fn reduce_db(&mut self) {
        let live: Vec<ConstraintId> = self
            .learned
            .iter()
            .copied()
            .filter(|&c| !self.prop.is_deleted(c))
            .collect();
        if live.len() <= self.cfg.max_learned {
            self.learned = live;
            return;
        }
        let mut locked = alloc::vec![false; self.prop.len()];
        for l in self.trail.literals() {
            if let Some(r) = self.trail.reason(l.var()) {
                locked[r.index()] = true;
            }
        }
        let mut by_activity = live.clone();
        by_activity.sort_by(|a, b| {
            self.activity[a.index()]
                .partial_cmp(&self.activity[b.index()])
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.cmp(b))
        });
        let doomed: Vec<ConstraintId> = by_activity
            .into_iter()
            .filter(|c| !locked[c.index()])
            .take(live.len() / 2)
            .collect();
        self.stats.deleted += doomed.len() as u64;
        self.prop.delete(&doomed, &self.trail);
        self.learned = live.into_iter().filter(|c| !self.prop.is_deleted(*c)).collect();
    }

    fn restart(&mut self) {
        self.backtrack(0);
        self.stats.restarts += 1;
        self.restart_count += 1;
        self.conflicts_until_restart = self.cfg.restart_base * luby(self.restart_count);
        self.reduce_db();
    }

    fn check_model(&self) -> Result<Vec<bool>, SolverError> {
        let model = self.trail.model();
        if self.instance.is_satisfied_by(|v| model[v as usize]) {
            Ok(model)
        } else {
            Err(SolverError::ModelCheckFailed)
        }
    }

    fn search(&mut self, budget: &mut Budget<'_>) -> Result<Search, SolverError> {
        if self.root_unsat {
            return Ok(Search::Unsat);
        }
        let mut pending: Option<ConstraintId> = None;
        loop {
            let conflict = match pending.take() {
                Some(c) => Err(c),
                None => self.prop.propagate(&mut self.trail),
            };
            match conflict {
                Err(confl) => {
                    self.stats.conflicts += 1;
                    let analysis = match self.analyzer.analyze(confl, &self.prop, &self.trail, &mut self.order) {
                        Ok(a) => a,
                        Err(AnalyzeError::RootConflict) => {
                            self.root_unsat = true;
                            return Ok(Search::Unsat);
                        }
                        Err(AnalyzeError::NoCurrentLevelLiteral) => return Err(SolverError::Analysis),
                    };
                    let used = core::mem::take(&mut self.analyzer.used);
                    for &cid in &used {
                        self.bump_constraint(cid);
                    }
                    self.analyzer.used = used;
                    self.order.decay();
                    self.clause_inc /= 0.999;
                    self.backtrack(analysis.backjump);
                    pending = self.learn(&analysis.clause)?;
                    if budget.max_conflicts.is_some_and(|m| self.stats.conflicts >= m) {
                        return Ok(Search::Stopped);
                    }
                    self.conflicts_until_restart = self.conflicts_until_restart.saturating_sub(1);
                }
                Ok(()) => {
                    if self.cfg.audit {
                        self.stats.audits += 1;
                        self.prop.audit(&self.trail)?;
                    }
                    if let Some(stop) = budget.stop.as_mut() {
                        if stop() {
                            return Ok(Search::Stopped);
                        }
                    }
                    if self.conflicts_until_restart == 0 {
                        self.restart();
                        continue;
                    }
                    match self.decide() {
                        None => return Ok(Search::Sat),
                        Some(lit) => {
                            self.stats.decisions += 1;
                            self.trail.new_decision_level();
                            self.trail.assign(lit, None);
                        }
                    }
                }
            }
        }
    }

    fn result(&self, status: Status, model: Option<Vec<bool>>, objective: Option<Slack>) -> SolveResult {
        SolveResult {
            status,
            model,
            objective,
            stats: self.stats(),
        }
    }

    /// Decides satisfiability, ignoring any objective.
    pub fn solve(&mut self, budget: &mut Budget<'_>) -> Result<SolveResult, SolverError> {
        Ok(match self.search(budget)? {
            Search::Sat => {
                let model = self.check_model()?;
                self.result(Status::Sat, Some(model), None)
            }
            Search::Unsat => self.result(Status::Unsat, None, None),
            Search::Stopped => self.result(Status::Timeout, None, None),
        })
    }

    /// Linear search: after each model of value `v`, require `objective <= v - 1`.
    pub fn optimize(&mut self, budget: &mut Budget<'_>) -> Result<SolveResult, SolverError> {
        let Some(objective) = self.instance.objective.as_ref() else {
            return self.solve(budget);
        };
        let mut best: Option<(Slack, Vec<bool>)> = None;
        loop {
            match self.search(budget)? {
                Search::Sat => {
                    let model = self.check_model()?;
                    let value = objective.evaluate(|v| model[v as usize]);
                    if let Some(cb) = budget.on_solution.as_mut() {
                        cb(value);
                    }
                    best = Some((value, model));
                    let bound = i64::try_from(value - 1).map_err(|_| SolverError::ObjectiveOverflow)?;
                    self.backtrack(0);
                    match normalize(&objective.upper_bound(bound), self.instance.normalize)
                        .map_err(SolverError::Model)?
                    {
                        Normalized::TriviallyFalse => self.root_unsat = true,
                        Normalized::TriviallyTrue => {}
                        Normalized::Constraints(cs) => {
                            for c in cs {
                                if !self.add_root_constraint(c) {
                                    break;
                                }
                            }
                        }
                    }
                }
                Search::Unsat => {
                    return Ok(match best {
                        Some((v, m)) => self.result(Status::Optimum(v), Some(m), Some(v)),
                        None => self.result(Status::Unsat, None, None),
                    })
                }
                Search::Stopped => {
                    let (v, m) = best.map_or((None, None), |(v, m)| (Some(v), Some(m)));
                    return Ok(self.result(Status::Timeout, m, v));
                }
            }
        }
    }
}

/// Decides satisfiability of `instance`.
pub fn solve(instance: &Instance, cfg: SolverConfig, budget: &mut Budget<'_>) -> Result<SolveResult, SolverError> {
    Solver::new(instance, cfg)?.solve(budget)
}

/// Minimizes the objective of `instance` (plain satisfiability without one).
pub fn optimize(instance: &Instance, cfg: SolverConfig, budget: &mut Budget<'_>) -> Result<SolveResult, SolverError> {
    Solver::new(instance, cfg)?.optimize(budget)
}

#[cfg(test)]
mod tests;
