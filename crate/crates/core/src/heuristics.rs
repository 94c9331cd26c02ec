//! Per-constraint choice between the counting and the watched engine.
//!
//! The decision is made once, when a constraint enters the solver (input or
//! learned). Every rule here is a pure function of the stored, normalized
//! constraint. All parameter comparisons use exact rationals.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use num_rational::Ratio;
use num_traits::One;

use crate::model::PBConstraint;

/// Exact non-negative rational used for `p` and `c`.
pub type Rational = Ratio<u64>;

/// Instances whose raw input coefficients are all below this bound are small.
pub const SMALL_COEFFICIENT_BOUND: u64 = 100;

pub fn default_p() -> Rational {
    Ratio::new(7, 10)
}

pub fn default_cutoff() -> Rational {
    Ratio::from_integer(500)
}

/// Engine a constraint is attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EngineKind {
    Counting,
    Watched,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    PureCounting,
    PureWatched,
    DefaultHybrid,
    Absolute,
    Additive,
    Multiplicative,
    MaxGap,
    /// Default hybrid on small instances, `auto_inner` on the rest.
    Auto,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::PureCounting,
        Mode::PureWatched,
        Mode::DefaultHybrid,
        Mode::Absolute,
        Mode::Additive,
        Mode::Multiplicative,
        Mode::MaxGap,
        Mode::Auto,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::PureCounting => "counting",
            Mode::PureWatched => "watched",
            Mode::DefaultHybrid => "hybrid",
            Mode::Absolute => "abs",
            Mode::Additive => "add",
            Mode::Multiplicative => "mul",
            Mode::MaxGap => "maxgap",
            Mode::Auto => "auto",
        }
    }

    fn from_name(name: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Whether the inline `:value` of the mode string sets `c` (as opposed to `p`).
    fn takes_cutoff(self) -> bool {
        matches!(
            self,
            Mode::Absolute | Mode::Additive | Mode::Multiplicative | Mode::MaxGap
        )
    }

    fn integral_cutoff(self) -> bool {
        matches!(self, Mode::Absolute | Mode::Additive | Mode::MaxGap)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConfigError {
    POutOfRange,
    NonIntegralCutoff(Mode),
    NestedAuto,
    UnknownMode(String),
    BadNumber(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::POutOfRange => f.write_str("prop-counting must lie in [0, 1]"),
            ConfigError::NonIntegralCutoff(m) => {
                write!(f, "mode `{}` needs an integer cut-off", m.name())
            }
            ConfigError::NestedAuto => f.write_str("auto mode cannot nest auto"),
            ConfigError::UnknownMode(s) => write!(f, "unknown propagation mode `{s}`"),
            ConfigError::BadNumber(s) => write!(f, "`{s}` is not a non-negative decimal or fraction"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeuristicConfig {
    pub mode: Mode,
    /// prop-counting parameter of the default hybrid rule.
    pub p: Rational,
    /// Cut-off for the absolute, additive, multiplicative and max-gap rules.
    pub c: Rational,
    /// Rule used by [`Mode::Auto`] on instances that are not small.
    pub auto_inner: Mode,
    /// Select counting when the max-gap predicate is false instead of true.
    pub invert_max_gap: bool,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            mode: Mode::DefaultHybrid,
            p: default_p(),
            c: default_cutoff(),
            auto_inner: Mode::Additive,
            invert_max_gap: false,
        }
    }
}

impl HeuristicConfig {
    pub fn new(mode: Mode) -> HeuristicConfig {
        HeuristicConfig {
            mode,
            ..HeuristicConfig::default()
        }
    }

    pub fn with_p(mut self, p: Rational) -> Self {
        self.p = p;
        self
    }

    pub fn with_cutoff(mut self, c: u64) -> Self {
        self.c = Ratio::from_integer(c);
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.p > Rational::one() {
            return Err(ConfigError::POutOfRange);
        }
        if self.auto_inner == Mode::Auto {
            return Err(ConfigError::NestedAuto);
        }
        for m in [self.mode, self.auto_inner] {
            let uses_c = self.mode == m || self.mode == Mode::Auto;
            if uses_c && m.integral_cutoff() && !self.c.is_integer() {
                return Err(ConfigError::NonIntegralCutoff(m));
            }
        }
        Ok(())
    }

    /// Parses a mode string `name[:value]`, taking unspecified parameters
    /// from `self`. `value` is `p` for `hybrid` and `c` for the cut-off rules;
    /// `auto` accepts `auto[:inner[:c]]`.
    pub fn parse_mode(&self, s: &str) -> Result<HeuristicConfig, ConfigError> {
        let mut cfg = self.clone();
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or_default();
        let mode = Mode::from_name(name).ok_or_else(|| ConfigError::UnknownMode(s.into()))?;
        cfg.mode = mode;
        let mut value_for = |m: Mode, v: Option<&str>| -> Result<(), ConfigError> {
            let Some(v) = v else { return Ok(()) };
            let r = parse_rational(v)?;
            match m {
                Mode::DefaultHybrid => cfg.p = r,
                m if m.takes_cutoff() => cfg.c = r,
                _ => return Err(ConfigError::UnknownMode(s.into())),
            }
            Ok(())
        };
        match mode {
            Mode::Auto => {
                if let Some(inner) = parts.next() {
                    let inner = Mode::from_name(inner).ok_or_else(|| ConfigError::UnknownMode(s.into()))?;
                    if !inner.takes_cutoff() {
                        return Err(ConfigError::UnknownMode(s.into()));
                    }
                    value_for(inner, parts.next())?;
                    cfg.auto_inner = inner;
                }
            }
            m => value_for(m, parts.next())?,
        }
        if parts.next().is_some() {
            return Err(ConfigError::UnknownMode(s.into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical mode string; [`HeuristicConfig::parse_mode`] maps it back to
    /// the same dispatch behavior.
    pub fn label(&self) -> String {
        use alloc::format;
        match self.mode {
            Mode::PureCounting | Mode::PureWatched => self.mode.name().into(),
            Mode::DefaultHybrid => format!("hybrid:{}", DisplayRational(self.p)),
            Mode::Auto => format!("auto:{}:{}", self.auto_inner.name(), DisplayRational(self.c)),
            m => format!("{}:{}", m.name(), DisplayRational(self.c)),
        }
    }
}

/// Parses `0.7`, `500`, `1.0` or `3/2`.
pub fn parse_rational(s: &str) -> Result<Rational, ConfigError> {
    let bad = || ConfigError::BadNumber(s.into());
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: u64 = n.parse().map_err(|_| bad())?;
        let d: u64 = d.parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(n, d));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || !digits(frac) || frac.len() > 18 {
        return Err(bad());
    }
    let int: u64 = if int.is_empty() {
        0
    } else {
        int.parse().map_err(|_| bad())?
    };
    let den = 10u64.pow(frac.len() as u32);
    let frac: u64 = if frac.is_empty() {
        0
    } else {
        frac.parse().map_err(|_| bad())?
    };
    let num = int.checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
    Ok(Ratio::new(num, den))
}

/// Writes a rational as a terminating decimal when possible, `n/d` otherwise.
pub struct DisplayRational(pub Rational);

impl fmt::Display for DisplayRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (*self.0.numer(), *self.0.denom());
        let Some(digits) = (0..=18u32).find(|&k| 10u64.pow(k) % d == 0) else {
            return write!(f, "{n}/{d}");
        };
        if digits == 0 {
            return write!(f, "{}", n / d);
        }
        let frac = (n % d) * (10u64.pow(digits) / d);
        let frac = alloc::format!("{:0width$}", frac, width = digits as usize);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            write!(f, "{}", n / d)
        } else {
            write!(f, "{}.{frac}", n / d)
        }
    }
}

impl FromStr for HeuristicConfig {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HeuristicConfig::default().parse_mode(s)
    }
}

/// Outcome of a dispatch rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DispatchDecision {
    pub use_counting: bool,
    /// Minimal watch count, only computed by the default hybrid rule.
    pub m: Option<usize>,
}

impl DispatchDecision {
    fn flag(use_counting: bool) -> DispatchDecision {
        DispatchDecision { use_counting, m: None }
    }

    pub fn engine(self) -> EngineKind {
        if self.use_counting {
            EngineKind::Counting
        } else {
            EngineKind::Watched
        }
    }
}

fn coeff(c: &PBConstraint, i: usize) -> u64 {
    c.terms()[i].coeff as u64
}

/// Number of leading literals needed so that the watched coefficients cover
/// `b + a_1`, counted the way the prop-counting rule counts them.
pub fn minimal_watch_count(c: &PBConstraint) -> usize {
    let n = c.len();
    let mut sum = -(c.degree() as i128);
    let mut m = 1;
    while m < n && sum < 0 {
        sum += coeff(c, m) as i128;
        m += 1;
    }
    m
}

/// RoundingSAT's prop-counting rule: count when `p = 1` or `p > 1 - m/n`.
pub fn default_hybrid(c: &PBConstraint, p: Rational) -> DispatchDecision {
    let n = c.len();
    let m = minimal_watch_count(c);
    let use_counting = p.is_one() || p > Ratio::new((n - m) as u64, n as u64);
    DispatchDecision {
        use_counting,
        m: Some(m),
    }
}

/// Count when `a_1 > c`.
pub fn absolute(c: &PBConstraint, cutoff: Rational) -> DispatchDecision {
    DispatchDecision::flag(Ratio::from_integer(coeff(c, 0)) > cutoff)
}

/// Count when `a_1 > c + a_2` (`a_2 = 0` for single-term constraints).
pub fn additive(c: &PBConstraint, cutoff: Rational) -> DispatchDecision {
    let a2 = c.second_coeff().unwrap_or(0) as u64;
    DispatchDecision::flag(Ratio::from_integer(coeff(c, 0) - a2) > cutoff)
}

/// Count when `a_1 > c * a_2` (`a_2 = 1` for single-term constraints).
pub fn multiplicative(c: &PBConstraint, cutoff: Rational) -> DispatchDecision {
    let a2 = c.second_coeff().unwrap_or(1) as u64;
    DispatchDecision::flag(Ratio::new(coeff(c, 0), a2) > cutoff)
}

/// Largest difference between consecutive coefficients (0 for one term).
pub fn max_gap(c: &PBConstraint) -> u64 {
    c.terms()
        .windows(2)
        .map(|w| (w[0].coeff - w[1].coeff) as u64)
        .max()
        .unwrap_or(0)
}

/// Count when `c > max(a_i - a_{i+1})`, or the opposite when `invert`.
pub fn max_gap_rule(c: &PBConstraint, cutoff: Rational, invert: bool) -> DispatchDecision {
    DispatchDecision::flag((cutoff > Ratio::from_integer(max_gap(c))) != invert)
}

/// Applies the configured rule to one constraint.
pub fn dispatch(c: &PBConstraint, cfg: &HeuristicConfig, instance_is_small: bool) -> DispatchDecision {
    match cfg.mode {
        Mode::Auto if instance_is_small => default_hybrid(c, cfg.p),
        Mode::Auto => apply(c, cfg, cfg.auto_inner),
        m => apply(c, cfg, m),
    }
}

fn apply(c: &PBConstraint, cfg: &HeuristicConfig, mode: Mode) -> DispatchDecision {
    match mode {
        Mode::PureCounting => DispatchDecision::flag(true),
        Mode::PureWatched => DispatchDecision::flag(false),
        Mode::DefaultHybrid | Mode::Auto => default_hybrid(c, cfg.p),
        Mode::Absolute => absolute(c, cfg.c),
        Mode::Additive => additive(c, cfg.c),
        Mode::Multiplicative => multiplicative(c, cfg.c),
        Mode::MaxGap => max_gap_rule(c, cfg.c, cfg.invert_max_gap),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Literal, Term};
    use alloc::vec::Vec;
    use num_traits::Zero;

    fn constraint(coeffs: &[i64], degree: i64) -> PBConstraint {
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(i, &a)| Term::new(a, Literal::positive(i as u32 + 1)))
            .collect();
        PBConstraint::new(terms, degree).unwrap()
    }

    fn clause(n: usize) -> PBConstraint {
        constraint(&alloc::vec![1; n], 1)
    }

    fn r(n: u64, d: u64) -> Rational {
        Ratio::new(n, d)
    }

    #[test]
    fn hybrid_clause_of_three_counts() {
        let d = default_hybrid(&clause(3), default_p());
        assert_eq!(d.m, Some(2));
        assert!(d.use_counting);
    }

    #[test]
    fn hybrid_clause_of_ten_watches() {
        let d = default_hybrid(&clause(10), default_p());
        assert_eq!(d.m, Some(2));
        assert!(!d.use_counting);
    }

    #[test]
    fn hybrid_p_one_always_counts() {
        for c in [clause(40), constraint(&[9, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1], 1)] {
            assert!(default_hybrid(&c, Rational::one()).use_counting);
        }
        // m = 2 of 40: counting needs p > 38/40.
        assert!(default_hybrid(&clause(40), r(96, 100)).use_counting);
        assert!(!default_hybrid(&clause(40), r(95, 100)).use_counting);
    }

    #[test]
    fn hybrid_single_term() {
        let d = default_hybrid(&constraint(&[3], 3), default_p());
        assert_eq!(d.m, Some(1));
        // 1 - 1/1 = 0 < 0.7
        assert!(d.use_counting);
        assert!(!default_hybrid(&constraint(&[3], 3), Rational::zero()).use_counting);
    }

    #[test]
    fn absolute_boundaries() {
        assert!(absolute(&constraint(&[600, 1], 600), r(500, 1)).use_counting);
        assert!(!absolute(&constraint(&[500, 1], 500), r(500, 1)).use_counting);
        assert!(!absolute(&clause(4), r(500, 1)).use_counting);
    }

    #[test]
    fn additive_boundaries() {
        assert!(additive(&constraint(&[1600, 1000], 1600), r(500, 1)).use_counting);
        assert!(!additive(&constraint(&[1_000_000, 1_000_000], 1_000_000), r(500, 1)).use_counting);
        assert!(additive(&constraint(&[700], 700), r(500, 1)).use_counting);
        assert!(!additive(&constraint(&[1500, 1000], 1500), r(500, 1)).use_counting);
    }

    #[test]
    fn multiplicative_boundaries() {
        assert!(multiplicative(&constraint(&[9, 2], 9), r(4, 1)).use_counting);
        assert!(!multiplicative(&constraint(&[8, 2], 8), r(4, 1)).use_counting);
        assert!(!multiplicative(&clause(5), r(1, 1)).use_counting);
        assert!(multiplicative(&constraint(&[3, 2], 3), r(3, 2) - r(1, 100)).use_counting);
    }

    #[test]
    fn max_gap_boundaries() {
        let c = constraint(&[10, 7, 7, 1], 10);
        assert_eq!(max_gap(&c), 6);
        assert!(!max_gap_rule(&c, r(5, 1), false).use_counting);
        assert!(max_gap_rule(&c, r(5, 1), true).use_counting);
        assert!(max_gap_rule(&constraint(&[4, 4, 4], 5), r(1, 1), false).use_counting);
        assert!(max_gap_rule(&constraint(&[100, 1], 100), r(500, 1), false).use_counting);
        assert_eq!(max_gap(&constraint(&[5], 5)), 0);
    }

    #[test]
    fn dispatch_modes() {
        let auto = HeuristicConfig::new(Mode::Auto);
        assert!(dispatch(&clause(3), &auto, true).use_counting);
        assert!(!dispatch(&clause(3), &auto, false).use_counting);
        let watched = HeuristicConfig::new(Mode::PureWatched);
        assert!(!dispatch(&constraint(&[9000, 1], 9000), &watched, false).use_counting);
        let counting = HeuristicConfig::new(Mode::PureCounting);
        assert!(dispatch(&clause(30), &counting, true).use_counting);
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("0.7").unwrap(), r(7, 10));
        assert_eq!(parse_rational("1.0").unwrap(), r(1, 1));
        assert_eq!(parse_rational("500").unwrap(), r(500, 1));
        assert_eq!(parse_rational(".25").unwrap(), r(1, 4));
        assert_eq!(parse_rational("3/2").unwrap(), r(3, 2));
        for bad in ["", ".", "-1", "0.7.1", "1/0", "x", "1e3"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn rational_display() {
        let shown: Vec<String> = [r(7, 10), r(500, 1), r(1, 4), r(1, 3), r(1, 1), r(0, 1)]
            .into_iter()
            .map(|x| alloc::format!("{}", DisplayRational(x)))
            .collect();
        assert_eq!(shown, ["0.7", "500", "0.25", "1/3", "1", "0"]);
    }

    #[test]
    fn mode_strings() {
        let base = HeuristicConfig::default();
        let cfg = base.parse_mode("add:1000").unwrap();
        assert_eq!((cfg.mode, cfg.c), (Mode::Additive, r(1000, 1)));
        let cfg = base.parse_mode("hybrid:0.8").unwrap();
        assert_eq!((cfg.mode, cfg.p), (Mode::DefaultHybrid, r(4, 5)));
        let cfg = base.parse_mode("auto:abs:1000").unwrap();
        assert_eq!((cfg.auto_inner, cfg.c), (Mode::Absolute, r(1000, 1)));
        assert_eq!(base.parse_mode("abs").unwrap().c, default_cutoff());
        assert_eq!(cfg.label(), "auto:abs:1000");
        assert_eq!(base.parse_mode("hybrid").unwrap().label(), "hybrid:0.7");
        assert_eq!(base.parse_mode("mul:1.5").unwrap().label(), "mul:1.5");
        for bad in [
            "nope",
            "add:x",
            "hybrid:1.5",
            "abs:2.5",
            "counting:3",
            "auto:auto",
            "add:1:2",
        ] {
            assert!(base.parse_mode(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn labels_round_trip() {
        let base = HeuristicConfig::default();
        for s in [
            "counting",
            "watched",
            "hybrid:0.7",
            "hybrid:1",
            "abs:500",
            "add:1000",
            "mul:4",
            "maxgap:100",
            "auto:add:500",
            "auto:mul:3/7",
        ] {
            let cfg = base.parse_mode(s).unwrap();
            assert_eq!(cfg.label(), s);
            assert_eq!(base.parse_mode(&cfg.label()).unwrap(), cfg);
        }
    }
}
