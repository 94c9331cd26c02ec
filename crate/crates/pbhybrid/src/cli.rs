//! The `pbhybrid` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use pbhybrid_core::heuristics::{dispatch, parse_rational, ConfigError};
use pbhybrid_core::{
    Budget, EngineKind, HeuristicConfig, Instance, NormalizeOptions, SolveResult, Solver, SolverConfig, Status,
};

use crate::bench::{self, KnapsackParams, MatrixSpec, RandomParams};
use crate::opb;

pub const EXIT_SAT: i32 = 10;
pub const EXIT_UNSAT: i32 = 20;
pub const EXIT_OPTIMUM: i32 = 30;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "pbhybrid",
    version,
    about = "Pseudo-boolean solver with hybrid propagation dispatch"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Solve one OPB instance.
    Solve(SolveArgs),
    /// Print `small` or `large` for each instance.
    Classify {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Write a random knapsack instance in OPB format.
    GenKnapsack {
        #[arg(long, default_value_t = 20)]
        items: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        min_weight: i64,
        #[arg(long, default_value_t = 10_000)]
        max_weight: i64,
        /// Output file (stdout when absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a random mixed-sign PB instance in OPB format.
    GenRandom {
        #[arg(long, default_value_t = 12)]
        vars: u32,
        #[arg(long, default_value_t = 10)]
        constraints: u32,
        #[arg(long, default_value_t = 5)]
        max_coeff: i64,
        #[arg(long)]
        objective: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run every mode on every instance of a corpus and write cactus data.
    Bench(BenchArgs),
    /// Regenerate `.dat` files and the summary from a journal.
    Cactus {
        #[arg(long)]
        journal: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub file: PathBuf,
    /// counting, watched, hybrid[:p], abs|add|mul|maxgap[:c], auto[:rule[:c]].
    #[arg(long, default_value = "hybrid")]
    pub prop_mode: String,
    /// p of the default hybrid rule.
    #[arg(long, default_value = "0.7")]
    pub prop_counting: String,
    /// c of the cut-off rules.
    #[arg(long, default_value = "500")]
    pub prop_cutoff: String,
    /// Select counting when the max-gap predicate is false.
    #[arg(long)]
    pub invert_max_gap: bool,
    /// Wall-clock limit in seconds.
    #[arg(long, env = "PBHYBRID_TIMEOUT")]
    pub timeout: Option<f64>,
    #[arg(long)]
    pub max_conflicts: Option<u64>,
    /// Keep coefficients above the degree.
    #[arg(long)]
    pub no_saturation: bool,
    /// Check engine invariants at every propagation fixpoint.
    #[arg(long)]
    pub audit: bool,
    /// Omit the `c time` line.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory of `.opb` files.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "watched,counting,hybrid,add:500,add:1000,abs:500,abs:1000"
    )]
    pub modes: Vec<String>,
    /// Per-run wall-clock limit in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory for the journal, `.dat` files and summary.
    #[arg(long, default_value = "bench-out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4096)]
    pub memory_mb: u64,
    /// Solver binary (this executable by default).
    #[arg(long)]
    pub solver: Option<PathBuf>,
}

/// Builds the heuristic configuration; flags set defaults that an inline
/// `:value` in the mode string overrides.
pub fn heuristic_config(mode: &str, p: &str, c: &str, invert_max_gap: bool) -> Result<HeuristicConfig, ConfigError> {
    let base = HeuristicConfig {
        p: parse_rational(p)?,
        c: parse_rational(c)?,
        invert_max_gap,
        ..HeuristicConfig::default()
    };
    base.parse_mode(mode)
}

fn usage_error(err: &mut dyn Write, msg: impl std::fmt::Display) -> i32 {
    let _ = writeln!(err, "error: {msg}\n\nFor more information, try '--help'.");
    EXIT_USAGE
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    match cli.command {
        Cmd::Solve(args) => solve(&args, out, err),
        Cmd::Classify { files } => classify(&files, out, err),
        Cmd::GenKnapsack {
            items,
            seed,
            min_weight,
            max_weight,
            output,
        } => {
            let params = KnapsackParams {
                items,
                min_weight,
                max_weight,
                seed,
            };
            match bench::gen_knapsack(&params) {
                Ok(doc) => emit(&doc, output.as_deref(), out, err),
                Err(e) => usage_error(err, e),
            }
        }
        Cmd::GenRandom {
            vars,
            constraints,
            max_coeff,
            objective,
            seed,
            output,
        } => {
            let params = RandomParams {
                vars,
                constraints,
                max_coeff,
                objective,
                seed,
            };
            match bench::gen_random(&params) {
                Ok(doc) => emit(&doc, output.as_deref(), out, err),
                Err(e) => usage_error(err, e),
            }
        }
        Cmd::Bench(args) => run_bench(&args, out, err),
        Cmd::Cactus { journal, out: dir } => {
            match bench::read_journal(&journal).and_then(|records| bench::emit_cactus(&records, &[], &dir)) {
                Ok(series) => {
                    let _ = write!(out, "{}", bench::summary(&series));
                    0
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_FAILURE
                }
            }
        }
    }
}

fn emit(doc: &opb::OpbDocument, path: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match path {
        Some(p) => match bench::write_document(doc, p) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_FAILURE
            }
        },
        None => {
            let _ = out.write_all(doc.to_opb().as_bytes());
            0
        }
    }
}

fn read_document(path: &Path, err: &mut dyn Write) -> Result<opb::OpbDocument, i32> {
    let text = fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
        EXIT_FAILURE
    })?;
    opb::parse_opb(&text).map_err(|e| {
        let _ = writeln!(err, "error: {}: {e}", path.display());
        EXIT_FAILURE
    })
}

fn classify(files: &[PathBuf], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut code = 0;
    for f in files {
        match read_document(f, err) {
            Ok(doc) => {
                let _ = writeln!(out, "{} {}", f.display(), bench::classify(&doc).as_str());
            }
            Err(c) => code = c,
        }
    }
    code
}

fn value_line(res: &SolveResult) -> String {
    let mut line = String::from("v");
    for l in res.model_literals() {
        if l.is_negated() {
            line.push_str(&format!(" -x{}", l.var()));
        } else {
            line.push_str(&format!(" x{}", l.var()));
        }
    }
    line
}

fn input_dispatch_counts(inst: &Instance, cfg: &HeuristicConfig) -> (usize, usize) {
    let small = inst.max_input_coeff < pbhybrid_core::heuristics::SMALL_COEFFICIENT_BOUND;
    let counting = inst
        .constraints
        .iter()
        .filter(|c| dispatch(c, cfg, small).engine() == EngineKind::Counting)
        .count();
    (counting, inst.constraints.len() - counting)
}

fn solve(args: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let heuristic = match heuristic_config(
        &args.prop_mode,
        &args.prop_counting,
        &args.prop_cutoff,
        args.invert_max_gap,
    ) {
        Ok(h) => h,
        Err(e) => return usage_error(err, e),
    };
    if args.timeout.is_some_and(|t| !t.is_finite() || t <= 0.0) {
        return usage_error(err, "--timeout must be a positive number of seconds");
    }
    let start = Instant::now();
    let doc = match read_document(&args.file, err) {
        Ok(d) => d,
        Err(code) => return code,
    };
    for w in &doc.warnings {
        let _ = writeln!(out, "c warning: {w}");
    }
    let opts = NormalizeOptions {
        saturate: !args.no_saturation,
        ..NormalizeOptions::default()
    };
    let inst = match doc.to_instance(opts) {
        Ok(i) => i,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", args.file.display());
            return EXIT_FAILURE;
        }
    };
    let (counting, watched) = input_dispatch_counts(&inst, &heuristic);
    let _ = writeln!(out, "c mode {}", heuristic.label());
    let _ = writeln!(
        out,
        "c class {}",
        bench::classify_coefficient(inst.max_input_coeff).as_str()
    );
    let _ = writeln!(
        out,
        "c input-constraints {} counting {counting} watched {watched}",
        inst.constraints.len()
    );

    let cfg = SolverConfig {
        heuristic,
        audit: args.audit,
        ..SolverConfig::default()
    };
    let deadline = args.timeout.map(|t| start + Duration::from_secs_f64(t));
    let mut stop = || deadline.is_some_and(|d| Instant::now() >= d);
    let mut solution_lines: Vec<String> = Vec::new();
    let mut on_solution = |v: i128| solution_lines.push(format!("o {v}"));
    let result = {
        let mut budget = Budget {
            max_conflicts: args.max_conflicts,
            stop: Some(&mut stop),
            on_solution: Some(&mut on_solution),
        };
        Solver::new(&inst, cfg).and_then(|mut s| s.optimize(&mut budget))
    };
    for l in &solution_lines {
        let _ = writeln!(out, "{l}");
    }
    let res = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(out, "s UNKNOWN");
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let st = res.stats;
    let _ = writeln!(out, "c conflicts {}", st.conflicts);
    let _ = writeln!(out, "c decisions {}", st.decisions);
    let _ = writeln!(out, "c restarts {}", st.restarts);
    let _ = writeln!(out, "c learned {} deleted {}", st.learned, st.deleted);
    let _ = writeln!(out, "c propagations {}", st.prop.propagations);
    let _ = writeln!(out, "c slack-updates {}", st.prop.slack_updates);
    let _ = writeln!(out, "c watch-visits {}", st.prop.watch_visits);
    let _ = writeln!(out, "c watch-replacements {}", st.prop.watch_replacements);
    let _ = writeln!(
        out,
        "c live-constraints counting {} watched {}",
        st.prop.counting_constraints, st.prop.watched_constraints
    );
    if args.audit {
        let _ = writeln!(out, "c audits {}", st.audits);
    }
    if !args.no_timing {
        let _ = writeln!(out, "c time {:.3}", start.elapsed().as_secs_f64());
    }
    let code = match res.status {
        Status::Sat => {
            let _ = writeln!(out, "s SATISFIABLE");
            EXIT_SAT
        }
        Status::Unsat => {
            let _ = writeln!(out, "s UNSATISFIABLE");
            EXIT_UNSAT
        }
        Status::Optimum(_) => {
            let _ = writeln!(out, "s OPTIMUM FOUND");
            EXIT_OPTIMUM
        }
        Status::Timeout if res.model.is_some() => {
            let _ = writeln!(out, "s SATISFIABLE");
            EXIT_SAT
        }
        Status::Timeout => {
            let _ = writeln!(out, "s UNKNOWN");
            0
        }
    };
    if res.model.is_some() {
        let _ = writeln!(out, "{}", value_line(&res));
    }
    code
}

fn run_bench(args: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    for m in &args.modes {
        if let Err(e) = m.parse::<HeuristicConfig>() {
            return usage_error(err, e);
        }
    }
    if !(args.timeout.is_finite() && args.timeout > 0.0) {
        return usage_error(err, "--timeout must be a positive number of seconds");
    }
    let solver = match args.solver.clone().map(Ok).unwrap_or_else(std::env::current_exe) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: cannot locate the solver binary: {e}");
            return EXIT_FAILURE;
        }
    };
    let instances = match bench::corpus_files(&args.corpus) {
        Ok(f) => f,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let spec = MatrixSpec {
        solver,
        instances,
        modes: args.modes.clone(),
        timeout: Duration::from_secs_f64(args.timeout),
        jobs: args.jobs,
        journal: args.out.join("journal.csv"),
        memory_mb: Some(args.memory_mb),
    };
    let records =
        match bench::run_matrix(&spec).and_then(|r| bench::emit_cactus(&r, &args.modes, &args.out).map(|s| (r, s))) {
            Ok(r) => r,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_FAILURE;
            }
        };
    let (records, series) = records;
    let _ = write!(out, "{}", bench::summary(&series));
    let disagreements = bench::check_agreement(&records);
    for d in &disagreements {
        let _ = writeln!(
            err,
            "disagreement on {}: {} says {:?} {:?}, {} says {:?} {:?}",
            d.instance, d.first.0, d.first.1, d.first.2, d.second.0, d.second.1, d.second.2
        );
    }
    if disagreements.is_empty() {
        0
    } else {
        EXIT_FAILURE
    }
}
