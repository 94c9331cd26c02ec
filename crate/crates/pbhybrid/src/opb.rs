//! Reader and writer for the linear OPB format of the Pseudo-Boolean
//! Competition.
//!
//! ```text
//! * #variable= 3 #constraint= 2
//! min: +1 x1 -2 x3 ;
//! +2 x1 +1 ~x2 >= 2 ;
//! +1 x2 +1 x3 = 1 ;
//! ```
//!
//! Every statement sits on its own line and ends with `;`. `<=` is accepted
//! besides `>=` and `=`. Parsing keeps the constraints as written; turning
//! them into an [`Instance`] normalizes them.

use std::fmt::{self, Write as _};

use pbhybrid_core::model::{Coeff, Objective, RawConstraint, Relation};
use pbhybrid_core::{Instance, Literal, NormalizeOptions};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ErrorKind {
    #[error("statement does not end with `;`")]
    MissingSemicolon,
    #[error("more than one `;` on a line")]
    ExtraSemicolon,
    #[error("malformed coefficient `{0}`")]
    BadCoefficient(String),
    #[error("coefficient is zero")]
    ZeroCoefficient,
    #[error("variable `{0}` has no coefficient")]
    MissingCoefficient(String),
    #[error("coefficient `{0}` has no variable")]
    MissingVariable(String),
    #[error("malformed variable `{0}`")]
    BadVariable(String),
    #[error("product terms are not supported (linear format only)")]
    ProductTerm,
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("constraint has no relation")]
    MissingRelation,
    #[error("constraint has more than one relation")]
    ExtraRelation,
    #[error("malformed right-hand side")]
    BadRhs,
    #[error("objective after the first constraint or given twice")]
    MisplacedObjective,
    #[error("unsupported objective `{0}` (only `min:`)")]
    UnsupportedObjective(String),
    #[error("variable x{var} exceeds the declared {declared} variables")]
    VariableOutOfRange { var: u32, declared: u32 },
    #[error("malformed header")]
    BadHeader,
    #[error("{0}")]
    Model(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct OpbError {
    pub line: usize,
    pub kind: ErrorKind,
}

/// An OPB file with constraints kept exactly as written.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpbDocument {
    pub num_vars: u32,
    pub declared_vars: Option<u32>,
    pub declared_constraints: Option<usize>,
    pub objective: Option<Objective>,
    pub constraints: Vec<RawConstraint>,
    /// Source line of each constraint, 0 for generated documents.
    pub lines: Vec<usize>,
    pub warnings: Vec<String>,
}

impl OpbDocument {
    pub fn new(num_vars: u32) -> OpbDocument {
        OpbDocument {
            num_vars,
            ..OpbDocument::default()
        }
    }

    pub fn push(&mut self, c: RawConstraint) {
        self.constraints.push(c);
        self.lines.push(0);
    }

    /// Largest absolute coefficient over the constraints; the objective does
    /// not count.
    pub fn max_input_coefficient(&self) -> u64 {
        self.constraints
            .iter()
            .map(RawConstraint::max_abs_coeff)
            .max()
            .unwrap_or(0)
    }

    pub fn to_instance(&self, opts: NormalizeOptions) -> Result<Instance, OpbError> {
        let mut inst = Instance::with_options(self.num_vars, opts);
        for (c, &line) in self.constraints.iter().zip(&self.lines) {
            inst.add_raw(c).map_err(|e| OpbError {
                line,
                kind: ErrorKind::Model(e.to_string()),
            })?;
        }
        if let Some(obj) = &self.objective {
            inst.set_objective(obj.clone()).map_err(|e| OpbError {
                line: 0,
                kind: ErrorKind::Model(e.to_string()),
            })?;
        }
        Ok(inst)
    }

    /// Writes the document in its original (non-normalized) form.
    pub fn to_opb(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "* #variable= {} #constraint= {}",
            self.num_vars,
            self.constraints.len()
        )
        .unwrap();
        if let Some(obj) = &self.objective {
            write_objective(&mut out, obj);
        }
        for c in &self.constraints {
            write_terms(&mut out, c.terms.iter().copied());
            let rel = match c.relation {
                Relation::Ge => ">=",
                Relation::Le => "<=",
                Relation::Eq => "=",
            };
            writeln!(out, "{rel} {} ;", c.rhs).unwrap();
        }
        out
    }
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (Coeff, Literal)>) {
    for (a, l) in terms {
        write!(out, "{a:+} {l} ").unwrap();
    }
}

fn write_objective(out: &mut String, obj: &Objective) {
    out.push_str("min: ");
    write_terms(out, obj.terms.iter().copied());
    out.push_str(";\n");
}

/// Writes an instance in its stored, normalized form. A trivially
/// unsatisfiable instance gets the line `>= 1 ;`.
pub fn write_opb(inst: &Instance) -> String {
    let mut out = String::new();
    let count = inst.constraints.len() + usize::from(inst.trivially_unsat);
    writeln!(out, "* #variable= {} #constraint= {count}", inst.num_vars).unwrap();
    if let Some(obj) = &inst.objective {
        write_objective(&mut out, obj);
    }
    for c in &inst.constraints {
        writeln!(out, "{c} ;").unwrap();
    }
    if inst.trivially_unsat {
        out.push_str(">= 1 ;\n");
    }
    out
}

/// Largest absolute raw coefficient over the input constraints of `inst`.
pub fn max_input_coefficient(inst: &Instance) -> u64 {
    inst.max_input_coeff
}

/// Parses and normalizes in one step.
pub fn read_instance(text: &str, opts: NormalizeOptions) -> Result<Instance, OpbError> {
    parse_opb(text)?.to_instance(opts)
}

fn parse_header(line: &str) -> Result<Option<(u32, usize)>, ErrorKind> {
    if !line.contains("#variable=") {
        return Ok(None);
    }
    let mut vars = None;
    let mut cons = None;
    let mut tokens = line.trim_start_matches('*').split_whitespace();
    while let Some(tok) = tokens.next() {
        match tok {
            "#variable=" => vars = tokens.next().and_then(|v| v.parse().ok()),
            "#constraint=" => cons = tokens.next().and_then(|v| v.parse().ok()),
            _ => {}
        }
    }
    match (vars, cons) {
        (Some(v), Some(c)) => Ok(Some((v, c))),
        _ => Err(ErrorKind::BadHeader),
    }
}

fn parse_coeff(tok: &str) -> Result<Coeff, ErrorKind> {
    let digits = tok.strip_prefix(['+', '-']).unwrap_or(tok);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ErrorKind::BadCoefficient(tok.into()));
    }
    tok.parse().map_err(|_| ErrorKind::BadCoefficient(tok.into()))
}

fn parse_literal(tok: &str) -> Option<Result<Literal, ErrorKind>> {
    let (negated, body) = match tok.strip_prefix('~') {
        Some(rest) => (true, rest),
        None => (false, tok),
    };
    let digits = body.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Some(Err(ErrorKind::BadVariable(tok.into())));
    }
    Some(match digits.parse::<u32>() {
        Ok(v) if (1..u32::MAX >> 1).contains(&v) => Ok(Literal::new(v, negated)),
        _ => Err(ErrorKind::BadVariable(tok.into())),
    })
}

fn is_relation_like(tok: &str) -> bool {
    !tok.is_empty() && tok.bytes().all(|b| matches!(b, b'<' | b'>' | b'=' | b'!'))
}

fn parse_terms(tokens: &[&str]) -> Result<Vec<(Coeff, Literal)>, ErrorKind> {
    let mut terms = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let tok = tokens[i];
        if parse_literal(tok).is_some() {
            return Err(ErrorKind::MissingCoefficient(tok.into()));
        }
        let a = parse_coeff(tok)?;
        if a == 0 {
            return Err(ErrorKind::ZeroCoefficient);
        }
        let lit = match tokens.get(i + 1).map(|t| parse_literal(t)) {
            Some(Some(l)) => l?,
            _ => return Err(ErrorKind::MissingVariable(tok.into())),
        };
        if let Some(Some(_)) = tokens.get(i + 2).map(|t| parse_literal(t)) {
            return Err(ErrorKind::ProductTerm);
        }
        terms.push((a, lit));
        i += 2;
    }
    Ok(terms)
}

fn parse_constraint(tokens: &[&str]) -> Result<RawConstraint, ErrorKind> {
    let mut rel_at = None;
    for (i, &tok) in tokens.iter().enumerate() {
        if is_relation_like(tok) {
            if rel_at.is_some() {
                return Err(ErrorKind::ExtraRelation);
            }
            rel_at = Some(i);
        }
    }
    let at = rel_at.ok_or(ErrorKind::MissingRelation)?;
    let relation = match tokens[at] {
        ">=" => Relation::Ge,
        "<=" => Relation::Le,
        "=" => Relation::Eq,
        other => return Err(ErrorKind::UnknownRelation(other.into())),
    };
    let rhs = match &tokens[at + 1..] {
        [r] => parse_coeff(r).map_err(|_| ErrorKind::BadRhs)?,
        _ => return Err(ErrorKind::BadRhs),
    };
    Ok(RawConstraint::new(parse_terms(&tokens[..at])?, relation, rhs))
}

/// Parses OPB text. Without a header the variable count is the largest
/// index used.
pub fn parse_opb(text: &str) -> Result<OpbDocument, OpbError> {
    let mut doc = OpbDocument::default();
    let mut max_var = 0;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |kind| OpbError { line: line_no, kind };
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('*') {
            if doc.declared_vars.is_none() && doc.constraints.is_empty() && doc.objective.is_none() {
                if let Some((v, c)) = parse_header(line).map_err(err)? {
                    doc.declared_vars = Some(v);
                    doc.declared_constraints = Some(c);
                }
            }
            continue;
        }
        let body = line.strip_suffix(';').ok_or_else(|| err(ErrorKind::MissingSemicolon))?;
        if body.contains(';') {
            return Err(err(ErrorKind::ExtraSemicolon));
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let vars: Vec<Literal>;
        if let Some(first) = tokens.first().filter(|t| t.ends_with(':')) {
            if *first != "min:" {
                return Err(err(ErrorKind::UnsupportedObjective(first.to_string())));
            }
            if doc.objective.is_some() || !doc.constraints.is_empty() {
                return Err(err(ErrorKind::MisplacedObjective));
            }
            let terms = parse_terms(&tokens[1..]).map_err(err)?;
            vars = terms.iter().map(|t| t.1).collect();
            doc.objective = Some(Objective { terms });
        } else {
            let c = parse_constraint(&tokens).map_err(err)?;
            vars = c.terms.iter().map(|t| t.1).collect();
            doc.constraints.push(c);
            doc.lines.push(line_no);
        }
        for l in vars {
            if let Some(declared) = doc.declared_vars.filter(|&d| l.var() > d) {
                return Err(err(ErrorKind::VariableOutOfRange { var: l.var(), declared }));
            }
            max_var = max_var.max(l.var());
        }
    }
    doc.num_vars = doc.declared_vars.unwrap_or(max_var);
    match doc.declared_constraints {
        Some(n) if n != doc.constraints.len() => doc.warnings.push(format!(
            "header declares {n} constraints, found {}",
            doc.constraints.len()
        )),
        None => doc
            .warnings
            .push("missing `* #variable= N #constraint= M` header".into()),
        _ => {}
    }
    Ok(doc)
}

impl fmt::Display for OpbDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_opb())
    }
}
