//! The partial assignment: a stack of literals with decision levels and reasons.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{ConstraintId, Literal};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Value {
    True,
    False,
    Unassigned,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct VarInfo {
    /// Truth value of the positive literal.
    value: Value,
    level: u32,
    position: u32,
    reason: Option<ConstraintId>,
}

const FREE: VarInfo = VarInfo {
    value: Value::Unassigned,
    level: 0,
    position: 0,
    reason: None,
};

#[derive(Clone, Debug)]
pub struct Trail {
    vars: Vec<VarInfo>,
    stack: Vec<Literal>,
    /// Stack position where each decision level (>= 1) starts.
    level_starts: Vec<usize>,
}

impl Trail {
    pub fn new(num_vars: u32) -> Trail {
        Trail {
            vars: vec![FREE; num_vars as usize + 1],
            stack: Vec::with_capacity(num_vars as usize),
            level_starts: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> u32 {
        (self.vars.len() - 1) as u32
    }

    pub fn decision_level(&self) -> u32 {
        self.level_starts.len() as u32
    }

    pub fn len(&self) -> usize {
        self.stack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stack.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.stack.len() + 1 == self.vars.len()
    }

    pub fn literals(&self) -> &[Literal] {
        &self.stack
    }

    pub fn lit_value(&self, lit: Literal) -> Value {
        match (self.vars[lit.var() as usize].value, lit.is_negated()) {
            (Value::Unassigned, _) => Value::Unassigned,
            (v, false) => v,
            (Value::True, true) => Value::False,
            (Value::False, true) => Value::True,
        }
    }

    pub fn is_true(&self, lit: Literal) -> bool {
        self.lit_value(lit) == Value::True
    }

    pub fn is_false(&self, lit: Literal) -> bool {
        self.lit_value(lit) == Value::False
    }

    pub fn is_assigned(&self, var: u32) -> bool {
        self.vars[var as usize].value != Value::Unassigned
    }

    /// Level of an assigned variable.
    pub fn level(&self, var: u32) -> u32 {
        self.vars[var as usize].level
    }

    /// Stack position of an assigned variable.
    pub fn position(&self, var: u32) -> usize {
        self.vars[var as usize].position as usize
    }

    pub fn reason(&self, var: u32) -> Option<ConstraintId> {
        self.vars[var as usize].reason
    }

    pub fn new_decision_level(&mut self) {
        self.level_starts.push(self.stack.len());
    }

    /// First stack position belonging to `level`.
    pub fn level_start(&self, level: u32) -> usize {
        match level {
            0 => 0,
            l => self.level_starts[l as usize - 1],
        }
    }

    /// Makes `lit` true at the current level.
    ///
    /// Panics if the variable already has a value.
    pub fn assign(&mut self, lit: Literal, reason: Option<ConstraintId>) {
        let info = &mut self.vars[lit.var() as usize];
        assert_eq!(info.value, Value::Unassigned, "{lit} assigned twice");
        *info = VarInfo {
            value: if lit.is_negated() { Value::False } else { Value::True },
            level: self.level_starts.len() as u32,
            position: self.stack.len() as u32,
            reason,
        };
        self.stack.push(lit);
    }

    /// Undoes every assignment above `level`, most recent first, handing
    /// each popped literal and its stack position to `on_pop`.
    pub fn backtrack_to(&mut self, level: u32, mut on_pop: impl FnMut(Literal, usize)) {
        if level >= self.decision_level() {
            return;
        }
        let start = self.level_starts[level as usize];
        while self.stack.len() > start {
            let lit = self.stack.pop().expect("non-empty");
            self.vars[lit.var() as usize] = FREE;
            on_pop(lit, self.stack.len());
        }
        self.level_starts.truncate(level as usize);
    }

    /// Value of `var` under the assignment, unassigned variables read as false.
    pub fn model_value(&self, var: u32) -> bool {
        self.vars[var as usize].value == Value::True
    }

    /// Current assignment as a vector indexed by variable (index 0 unused).
    pub fn model(&self) -> Vec<bool> {
        self.vars.iter().map(|v| v.value == Value::True).collect()
    }
}
