//! Variables, literals, normalized pseudo-boolean constraints and instances.
//!
//! A normalized constraint is `sum(a_i * l_i) >= b` with strictly positive
//! integer coefficients sorted in descending order, no repeated variable and
//! (unless disabled) every coefficient saturated at the degree `b`.
//!
//! [`slack`] and [`unit_literals`] are the definitional versions of the two
//! quantities every propagation engine maintains incrementally; the engines
//! are tested against them.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Not;

use crate::trail::{Trail, Value};

/// Stored coefficient / degree type.
pub type Coeff = i64;

/// Wide accumulator for sums of coefficients.
pub type Slack = i128;

/// A literal `x_v` or its complement `~x_v` (`1 - x_v`). Variables are 1-based.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal(u32);

impl Literal {
    pub fn new(var: u32, negated: bool) -> Literal {
        assert!(var >= 1, "variable indices start at 1");
        assert!(var < u32::MAX >> 1, "variable index out of range");
        Literal((var << 1) | negated as u32)
    }

    pub fn positive(var: u32) -> Literal {
        Literal::new(var, false)
    }

    pub fn negative(var: u32) -> Literal {
        Literal::new(var, true)
    }

    /// Parses a DIMACS-style signed integer (`-3` is `~x3`).
    pub fn from_dimacs(lit: i32) -> Literal {
        Literal::new(lit.unsigned_abs(), lit < 0)
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn complement(self) -> Literal {
        Literal(self.0 ^ 1)
    }

    /// Dense index suitable for per-literal tables of size `2 * (num_vars + 1)`.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn to_dimacs(self) -> i64 {
        if self.is_negated() {
            -(self.var() as i64)
        } else {
            self.var() as i64
        }
    }
}

impl Not for Literal {
    type Output = Literal;
    fn not(self) -> Literal {
        self.complement()
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_negated() {
            write!(f, "~x{}", self.var())
        } else {
            write!(f, "x{}", self.var())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Term {
    pub coeff: Coeff,
    pub lit: Literal,
}

impl Term {
    pub fn new(coeff: Coeff, lit: Literal) -> Term {
        Term { coeff, lit }
    }
}

/// Index of a constraint inside an instance or a solver database.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ConstraintId(pub u32);

impl ConstraintId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelError {
    /// A normalized form would need a coefficient or degree wider than the
    /// configured bit width.
    CoefficientOverflow {
        bits: u32,
    },
    /// The constraint violates normal form.
    NotNormalized(&'static str),
    VariableOutOfRange {
        var: u32,
        num_vars: u32,
    },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::CoefficientOverflow { bits } => {
                write!(f, "coefficient does not fit in {bits} bits")
            }
            ModelError::NotNormalized(why) => write!(f, "constraint not in normal form: {why}"),
            ModelError::VariableOutOfRange { var, num_vars } => {
                write!(f, "variable x{var} out of range (instance has {num_vars} variables)")
            }
        }
    }
}

/// A normalized pseudo-boolean constraint `sum(a_i * l_i) >= b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PBConstraint {
    terms: Vec<Term>,
    degree: Coeff,
    pub id: ConstraintId,
}

impl PBConstraint {
    /// Builds a constraint from terms that are already in normal form
    /// (saturation is not required).
    pub fn new(terms: Vec<Term>, degree: Coeff) -> Result<PBConstraint, ModelError> {
        if degree <= 0 {
            return Err(ModelError::NotNormalized("degree must be positive"));
        }
        if terms.is_empty() {
            return Err(ModelError::NotNormalized("no terms"));
        }
        if terms.iter().any(|t| t.coeff <= 0) {
            return Err(ModelError::NotNormalized("non-positive coefficient"));
        }
        if terms.windows(2).any(|w| w[0].coeff < w[1].coeff) {
            return Err(ModelError::NotNormalized("coefficients not descending"));
        }
        let mut vars: Vec<u32> = terms.iter().map(|t| t.lit.var()).collect();
        vars.sort_unstable();
        if vars.windows(2).any(|w| w[0] == w[1]) {
            return Err(ModelError::NotNormalized("repeated variable"));
        }
        Ok(PBConstraint {
            terms,
            degree,
            id: ConstraintId::default(),
        })
    }

    /// Clause `l_1 + ... + l_k >= 1`.
    pub fn clause(lits: &[Literal]) -> Result<PBConstraint, ModelError> {
        PBConstraint::new(lits.iter().map(|&l| Term::new(1, l)).collect(), 1)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn degree(&self) -> Coeff {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest coefficient `a_1`.
    pub fn max_coeff(&self) -> Coeff {
        self.terms[0].coeff
    }

    /// Second largest coefficient `a_2`, if the constraint has two terms.
    pub fn second_coeff(&self) -> Option<Coeff> {
        self.terms.get(1).map(|t| t.coeff)
    }

    pub fn coeff_sum(&self) -> Slack {
        self.terms.iter().map(|t| t.coeff as Slack).sum()
    }

    pub fn is_clause(&self) -> bool {
        self.degree == 1 && self.terms.iter().all(|t| t.coeff == 1)
    }

    pub fn is_saturated(&self) -> bool {
        self.terms.iter().all(|t| t.coeff <= self.degree)
    }

    /// Evaluates the constraint under a total assignment given as a value
    /// lookup for each variable.
    pub fn is_satisfied_by(&self, mut value: impl FnMut(u32) -> bool) -> bool {
        let lhs: Slack = self
            .terms
            .iter()
            .filter(|t| value(t.lit.var()) != t.lit.is_negated())
            .map(|t| t.coeff as Slack)
            .sum();
        lhs >= self.degree as Slack
    }
}

impl fmt::Display for PBConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "+{} {}", t.coeff, t.lit)?;
        }
        write!(f, " >= {}", self.degree)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Le,
    Eq,
}

/// A constraint as written in an input file: signed coefficients over
/// arbitrary literals and any of the three relations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawConstraint {
    pub terms: Vec<(Coeff, Literal)>,
    pub relation: Relation,
    pub rhs: Coeff,
}

impl RawConstraint {
    pub fn new(terms: Vec<(Coeff, Literal)>, relation: Relation, rhs: Coeff) -> RawConstraint {
        RawConstraint { terms, relation, rhs }
    }

    /// Largest absolute coefficient, zero for an empty left-hand side.
    pub fn max_abs_coeff(&self) -> u64 {
        self.terms.iter().map(|(c, _)| c.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn is_satisfied_by(&self, mut value: impl FnMut(u32) -> bool) -> bool {
        let lhs: Slack = self
            .terms
            .iter()
            .filter(|(_, l)| value(l.var()) != l.is_negated())
            .map(|&(c, _)| c as Slack)
            .sum();
        let rhs = self.rhs as Slack;
        match self.relation {
            Relation::Ge => lhs >= rhs,
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NormalizeOptions {
    /// Cap every coefficient at the degree.
    pub saturate: bool,
    /// Largest accepted magnitude is `2^max_bits - 1` (at most 63).
    pub max_bits: u32,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions {
            saturate: true,
            max_bits: 63,
        }
    }
}

impl NormalizeOptions {
    fn limit(&self) -> Slack {
        (1 << self.max_bits.min(63)) - 1
    }
}

/// Outcome of [`normalize`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Normalized {
    /// Satisfied by every assignment; callers drop it.
    TriviallyTrue,
    /// Satisfied by no assignment.
    TriviallyFalse,
    /// One constraint for `>=`/`<=`, up to two for `=`.
    Constraints(Vec<PBConstraint>),
}

/// Brings a raw constraint into normal form. Equalities are split into two
/// `>=` constraints; a side that is a tautology is dropped.
pub fn normalize(raw: &RawConstraint, opts: NormalizeOptions) -> Result<Normalized, ModelError> {
    // Merge into one signed coefficient per positive variable, moving the
    // constants produced by `a * ~x = a - a * x` to the right-hand side.
    let mut merged: BTreeMap<u32, Slack> = BTreeMap::new();
    let mut rhs = raw.rhs as Slack;
    for &(coeff, lit) in &raw.terms {
        let c = coeff as Slack;
        let e = merged.entry(lit.var()).or_insert(0);
        if lit.is_negated() {
            *e -= c;
            rhs -= c;
        } else {
            *e += c;
        }
    }
    let lhs: Vec<(u32, Slack)> = merged.into_iter().filter(|&(_, c)| c != 0).collect();

    let sides: &[bool] = match raw.relation {
        Relation::Ge => &[false],
        Relation::Le => &[true],
        Relation::Eq => &[false, true],
    };
    let mut out = Vec::with_capacity(sides.len());
    for &flip in sides {
        match normalize_ge(&lhs, rhs, flip, opts)? {
            Normalized::TriviallyFalse => return Ok(Normalized::TriviallyFalse),
            Normalized::TriviallyTrue => {}
            Normalized::Constraints(mut cs) => out.append(&mut cs),
        }
    }
    if out.is_empty() {
        Ok(Normalized::TriviallyTrue)
    } else {
        Ok(Normalized::Constraints(out))
    }
}

/// `sum(c_v * x_v) >= rhs` (or `<=` when `flip`) over positive variables.
fn normalize_ge(
    lhs: &[(u32, Slack)],
    rhs: Slack,
    flip: bool,
    opts: NormalizeOptions,
) -> Result<Normalized, ModelError> {
    let sign: Slack = if flip { -1 } else { 1 };
    let mut degree = rhs * sign;
    let mut terms: Vec<(Slack, Literal)> = Vec::with_capacity(lhs.len());
    for &(var, c) in lhs {
        let c = c * sign;
        if c > 0 {
            terms.push((c, Literal::positive(var)));
        } else {
            // c * x = c + |c| * ~x
            degree -= c;
            terms.push((-c, Literal::negative(var)));
        }
    }
    if degree <= 0 {
        return Ok(Normalized::TriviallyTrue);
    }
    if terms.is_empty() {
        return Ok(Normalized::TriviallyFalse);
    }
    if opts.saturate {
        for t in terms.iter_mut() {
            t.0 = t.0.min(degree);
        }
    }
    let limit = opts.limit();
    if degree > limit || terms.iter().any(|t| t.0 > limit) {
        return Err(ModelError::CoefficientOverflow {
            bits: opts.max_bits.min(63),
        });
    }
    // Descending coefficients; ties by variable index so the order is canonical.
    terms.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.var().cmp(&b.1.var())));
    let terms = terms.into_iter().map(|(c, l)| Term::new(c as Coeff, l)).collect();
    let c = PBConstraint::new(terms, degree as Coeff)?;
    Ok(Normalized::Constraints(alloc::vec![c]))
}

/// `-b + sum of a_i over terms whose literal is not falsified`.
pub fn slack(c: &PBConstraint, trail: &Trail) -> Slack {
    let free: Slack = c
        .terms()
        .iter()
        .filter(|t| trail.lit_value(t.lit) != Value::False)
        .map(|t| t.coeff as Slack)
        .sum();
    free - c.degree() as Slack
}

/// Error from [`unit_literals`] when the constraint is already violated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conflicting {
    pub slack: Slack,
}

/// Every unassigned literal whose coefficient exceeds the slack.
pub fn unit_literals(c: &PBConstraint, trail: &Trail) -> Result<Vec<Literal>, Conflicting> {
    let s = slack(c, trail);
    if s < 0 {
        return Err(Conflicting { slack: s });
    }
    Ok(c.terms()
        .iter()
        .take_while(|t| t.coeff as Slack > s)
        .filter(|t| trail.lit_value(t.lit) == Value::Unassigned)
        .map(|t| t.lit)
        .collect())
}

/// Linear objective to minimize, kept exactly as written in the input.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Objective {
    pub terms: Vec<(Coeff, Literal)>,
}

impl Objective {
    pub fn evaluate(&self, mut value: impl FnMut(u32) -> bool) -> Slack {
        self.terms
            .iter()
            .filter(|(_, l)| value(l.var()) != l.is_negated())
            .map(|&(c, _)| c as Slack)
            .sum()
    }

    /// The constraint `objective <= bound`.
    pub fn upper_bound(&self, bound: Coeff) -> RawConstraint {
        RawConstraint::new(self.terms.clone(), Relation::Le, bound)
    }
}

/// A normalized problem: constraints plus an optional minimization objective.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Instance {
    pub num_vars: u32,
    pub constraints: Vec<PBConstraint>,
    pub objective: Option<Objective>,
    /// Largest absolute coefficient over the raw input constraints, before
    /// complementation and saturation. The objective does not count.
    pub max_input_coeff: u64,
    /// Set when some input constraint normalized to `0 >= b` with `b > 0`.
    pub trivially_unsat: bool,
    pub normalize: NormalizeOptions,
}

impl Instance {
    pub fn new(num_vars: u32) -> Instance {
        Instance {
            num_vars,
            ..Instance::default()
        }
    }

    pub fn with_options(num_vars: u32, normalize: NormalizeOptions) -> Instance {
        Instance {
            num_vars,
            normalize,
            ..Instance::default()
        }
    }

    fn check_var(&self, lit: Literal) -> Result<(), ModelError> {
        if lit.var() > self.num_vars {
            return Err(ModelError::VariableOutOfRange {
                var: lit.var(),
                num_vars: self.num_vars,
            });
        }
        Ok(())
    }

    /// Normalizes and adds an input constraint.
    pub fn add_raw(&mut self, raw: &RawConstraint) -> Result<(), ModelError> {
        for &(_, l) in &raw.terms {
            self.check_var(l)?;
        }
        self.max_input_coeff = self.max_input_coeff.max(raw.max_abs_coeff());
        match normalize(raw, self.normalize)? {
            Normalized::TriviallyTrue => {}
            Normalized::TriviallyFalse => self.trivially_unsat = true,
            Normalized::Constraints(cs) => {
                for c in cs {
                    self.push(c);
                }
            }
        }
        Ok(())
    }

    /// Adds a constraint already in normal form; its raw coefficients count
    /// as input coefficients.
    pub fn add_normalized(&mut self, c: PBConstraint) -> Result<(), ModelError> {
        for t in c.terms() {
            self.check_var(t.lit)?;
        }
        self.max_input_coeff = self.max_input_coeff.max(c.max_coeff() as u64);
        self.push(c);
        Ok(())
    }

    fn push(&mut self, mut c: PBConstraint) {
        c.id = ConstraintId(self.constraints.len() as u32);
        self.constraints.push(c);
    }

    pub fn set_objective(&mut self, objective: Objective) -> Result<(), ModelError> {
        for &(_, l) in &objective.terms {
            self.check_var(l)?;
        }
        self.objective = Some(objective);
        Ok(())
    }

    /// True when every input constraint is satisfied by the assignment.
    pub fn is_satisfied_by(&self, mut value: impl FnMut(u32) -> bool) -> bool {
        !self.trivially_unsat && self.constraints.iter().all(|c| c.is_satisfied_by(&mut value))
    }
}
