//! Desk-scale benchmark harness: instance generators, the small/large
//! classifier, a process-isolated run matrix with a CSV journal, and cactus
//! data files.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::{mpsc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use pbhybrid_core::heuristics::SMALL_COEFFICIENT_BOUND;
use pbhybrid_core::model::{Coeff, Objective, RawConstraint, Relation};
use pbhybrid_core::Literal;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::opb::OpbDocument;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Class {
    Small,
    Large,
}

impl Class {
    pub fn as_str(self) -> &'static str {
        match self {
            Class::Small => "small",
            Class::Large => "large",
        }
    }
}

/// Small when every raw input coefficient is below 100.
pub fn classify_coefficient(max_input_coeff: u64) -> Class {
    if max_input_coeff < SMALL_COEFFICIENT_BOUND {
        Class::Small
    } else {
        Class::Large
    }
}

pub fn classify(doc: &OpbDocument) -> Class {
    classify_coefficient(doc.max_input_coefficient())
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid generator parameters: {0}")]
    Params(&'static str),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("journal {path}: {source}")]
    Journal { path: PathBuf, source: csv::Error },
    #[error("empty corpus")]
    EmptyCorpus,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KnapsackParams {
    pub items: u32,
    pub min_weight: Coeff,
    pub max_weight: Coeff,
    pub seed: u64,
}

impl Default for KnapsackParams {
    fn default() -> Self {
        KnapsackParams {
            items: 20,
            min_weight: 1,
            max_weight: 10_000,
            seed: 0,
        }
    }
}

/// One capacity constraint `sum w_i x_i <= floor(sum w_i / 2)` and the
/// objective `min: sum -v_i x_i`, with each value within 10% above its weight.
pub fn gen_knapsack(p: &KnapsackParams) -> Result<OpbDocument, BenchError> {
    if p.items == 0 {
        return Err(BenchError::Params("need at least one item"));
    }
    if p.min_weight < 1 || p.min_weight > p.max_weight || p.max_weight > 1 << 40 {
        return Err(BenchError::Params("weight range must satisfy 1 <= min <= max <= 2^40"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut weights = Vec::new();
    let mut values = Vec::new();
    for _ in 0..p.items {
        let w = rng.gen_range(p.min_weight..=p.max_weight);
        weights.push(w);
        values.push(w + rng.gen_range(0..=w / 10));
    }
    let cap = weights.iter().sum::<Coeff>() / 2;
    let lits: Vec<Literal> = (1..=p.items).map(Literal::positive).collect();
    let mut doc = OpbDocument::new(p.items);
    doc.objective = Some(Objective {
        terms: values.iter().map(|&v| -v).zip(lits.iter().copied()).collect(),
    });
    doc.push(RawConstraint::new(
        weights.into_iter().zip(lits).collect(),
        Relation::Le,
        cap,
    ));
    Ok(doc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomParams {
    pub vars: u32,
    pub constraints: u32,
    pub max_coeff: Coeff,
    /// Emit a random objective as well.
    pub objective: bool,
    pub seed: u64,
}

/// Random mixed-sign constraints over `vars` variables with all three
/// relations. The right-hand side is drawn so that both satisfiable and
/// unsatisfiable instances come up.
pub fn gen_random(p: &RandomParams) -> Result<OpbDocument, BenchError> {
    if p.vars == 0 || p.max_coeff < 1 || p.max_coeff > 1 << 40 {
        return Err(BenchError::Params("need vars >= 1 and 1 <= max_coeff <= 2^40"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut doc = OpbDocument::new(p.vars);
    for _ in 0..p.constraints {
        let len = rng.gen_range(1..=p.vars.min(8));
        let mut vars: Vec<u32> = (1..=p.vars).collect();
        let mut terms = Vec::new();
        for i in 0..len as usize {
            let j = rng.gen_range(i..vars.len());
            vars.swap(i, j);
            let a = rng.gen_range(1..=p.max_coeff);
            let a = if rng.gen_bool(0.25) { -a } else { a };
            terms.push((a, Literal::new(vars[i], rng.gen_bool(0.3))));
        }
        let total: Coeff = terms.iter().map(|t: &(Coeff, Literal)| t.0.abs()).sum();
        let relation = match rng.gen_range(0..8) {
            0 | 1 => Relation::Le,
            2 => Relation::Eq,
            _ => Relation::Ge,
        };
        let rhs = rng.gen_range(-(total / 4)..=total * 2 / 3);
        doc.push(RawConstraint::new(terms, relation, rhs));
    }
    if p.objective {
        let mut terms = Vec::new();
        for v in 1..=p.vars {
            if rng.gen_bool(0.6) {
                let a = rng.gen_range(-p.max_coeff..=p.max_coeff);
                if a != 0 {
                    terms.push((a, Literal::new(v, rng.gen_bool(0.2))));
                }
            }
        }
        doc.objective = Some(Objective { terms });
    }
    Ok(doc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RunStatus {
    Sat,
    Unsat,
    Optimum,
    Timeout,
    Error,
}

impl RunStatus {
    pub fn solved(self) -> bool {
        matches!(self, RunStatus::Sat | RunStatus::Unsat | RunStatus::Optimum)
    }
}

/// One journal row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance: String,
    pub mode: String,
    pub status: RunStatus,
    pub seconds: f64,
    pub objective: Option<i128>,
    pub conflicts: Option<u64>,
    pub propagations: Option<u64>,
    pub watch_replacements: Option<u64>,
    pub slack_updates: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct MatrixSpec {
    /// Solver binary; invoked as `solver solve FILE --prop-mode MODE --no-timing`.
    pub solver: PathBuf,
    pub instances: Vec<PathBuf>,
    pub modes: Vec<String>,
    pub timeout: Duration,
    pub jobs: usize,
    pub journal: PathBuf,
    /// Address-space cap per solver process.
    pub memory_mb: Option<u64>,
}

/// Reads the rows of an existing journal; a missing file is an empty journal.
pub fn read_journal(path: &Path) -> Result<Vec<BenchRecord>, BenchError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let journal_err = |source| BenchError::Journal {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(journal_err)?;
    rdr.deserialize().map(|r| r.map_err(journal_err)).collect()
}

fn set_memory_limit(cmd: &mut Command, mb: u64) {
    use std::os::unix::process::CommandExt;
    let bytes = mb.saturating_mul(1 << 20);
    // SAFETY: setrlimit is async-signal-safe and touches no shared state.
    unsafe {
        cmd.pre_exec(move || {
            let lim = libc::rlimit {
                rlim_cur: bytes as libc::rlim_t,
                rlim_max: bytes as libc::rlim_t,
            };
            if libc::setrlimit(libc::RLIMIT_AS, &lim) != 0 {
                return Err(io::Error::last_os_error());
            }
            Ok(())
        });
    }
}

fn drain(mut pipe: impl Read + Send + 'static) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut s = String::new();
        let _ = pipe.read_to_string(&mut s);
        s
    })
}

fn wait_with_deadline(child: &mut Child, timeout: Duration) -> io::Result<Option<std::process::ExitStatus>> {
    let start = Instant::now();
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok(Some(status));
        }
        if start.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(None);
        }
        thread::sleep(Duration::from_millis(5));
    }
}

fn parse_counter(stdout: &str, name: &str) -> Option<u64> {
    stdout.lines().find_map(|l| {
        let rest = l.strip_prefix("c ")?.strip_prefix(name)?;
        rest.trim().parse().ok()
    })
}

/// Runs one solver process and turns its output into a record.
pub fn run_one(spec: &MatrixSpec, instance: &Path, mode: &str) -> BenchRecord {
    let mut record = BenchRecord {
        instance: instance.display().to_string(),
        mode: mode.to_string(),
        status: RunStatus::Error,
        seconds: 0.0,
        objective: None,
        conflicts: None,
        propagations: None,
        watch_replacements: None,
        slack_updates: None,
    };
    let mut cmd = Command::new(&spec.solver);
    cmd.arg("solve")
        .arg(instance)
        .arg("--prop-mode")
        .arg(mode)
        .arg("--no-timing")
        .env_remove("PBHYBRID_TIMEOUT")
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null());
    if let Some(mb) = spec.memory_mb {
        set_memory_limit(&mut cmd, mb);
    }
    let start = Instant::now();
    let Ok(mut child) = cmd.spawn() else {
        return record;
    };
    let out = drain(child.stdout.take().expect("piped"));
    let status = wait_with_deadline(&mut child, spec.timeout);
    let elapsed = start.elapsed();
    let stdout = out.join().unwrap_or_default();
    record.seconds = elapsed.as_secs_f64();
    let exit = match status {
        Ok(Some(s)) => s,
        Ok(None) => {
            record.status = RunStatus::Timeout;
            record.seconds = record.seconds.max(spec.timeout.as_secs_f64());
            return record;
        }
        Err(_) => return record,
    };
    if elapsed >= spec.timeout {
        record.status = RunStatus::Timeout;
        return record;
    }
    let status_line = stdout.lines().find_map(|l| l.strip_prefix("s "));
    record.status = match (exit.code(), status_line) {
        (Some(10), Some("SATISFIABLE")) => RunStatus::Sat,
        (Some(20), Some("UNSATISFIABLE")) => RunStatus::Unsat,
        (Some(30), Some("OPTIMUM FOUND")) => RunStatus::Optimum,
        _ => RunStatus::Error,
    };
    record.objective = stdout
        .lines()
        .rev()
        .find_map(|l| l.strip_prefix("o ")?.trim().parse().ok());
    record.conflicts = parse_counter(&stdout, "conflicts");
    record.propagations = parse_counter(&stdout, "propagations");
    record.watch_replacements = parse_counter(&stdout, "watch-replacements");
    record.slack_updates = parse_counter(&stdout, "slack-updates");
    record
}

/// Runs every (instance, mode) pair not yet in the journal, appending each
/// record as soon as it is known. Returns the full journal afterwards.
pub fn run_matrix(spec: &MatrixSpec) -> Result<Vec<BenchRecord>, BenchError> {
    if spec.instances.is_empty() {
        return Err(BenchError::EmptyCorpus);
    }
    let done: HashSet<(String, String)> = read_journal(&spec.journal)?
        .into_iter()
        .map(|r| (r.instance, r.mode))
        .collect();
    let mut queue = VecDeque::new();
    for inst in &spec.instances {
        for mode in &spec.modes {
            if !done.contains(&(inst.display().to_string(), mode.clone())) {
                queue.push_back((inst.clone(), mode.clone()));
            }
        }
    }
    if let Some(dir) = spec.journal.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let fresh = !spec.journal.exists() || fs::metadata(&spec.journal).map_or(true, |m| m.len() == 0);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&spec.journal)
        .map_err(io_err(&spec.journal))?;
    let mut writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    let journal_err = |source| BenchError::Journal {
        path: spec.journal.clone(),
        source,
    };

    let queue = Mutex::new(queue);
    let (tx, rx) = mpsc::channel::<BenchRecord>();
    let jobs = spec.jobs.max(1);
    thread::scope(|s| -> Result<(), BenchError> {
        for _ in 0..jobs {
            let tx = tx.clone();
            let queue = &queue;
            s.spawn(move || loop {
                let Some((inst, mode)) = queue.lock().expect("queue lock").pop_front() else {
                    break;
                };
                if tx.send(run_one(spec, &inst, &mode)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for record in rx {
            writer.serialize(&record).map_err(journal_err)?;
            writer.flush().map_err(io_err(&spec.journal))?;
        }
        Ok(())
    })?;
    read_journal(&spec.journal)
}

/// Solved runtimes of one mode, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct CactusSeries {
    pub mode: String,
    pub runtimes: Vec<f64>,
    pub total: usize,
}

impl CactusSeries {
    pub fn solved(&self) -> usize {
        self.runtimes.len()
    }

    /// Lines `k seconds` for k = 1..=solved.
    pub fn to_dat(&self) -> String {
        let mut out = String::new();
        for (k, t) in self.runtimes.iter().enumerate() {
            out.push_str(&format!("{} {}\n", k + 1, format_seconds(*t)));
        }
        out
    }
}

fn format_seconds(t: f64) -> String {
    let ms = (t * 1000.0).round() / 1000.0;
    format!("{ms}")
}

/// File name of a mode's data file: `runtime-add-500.dat` for `add:500`.
pub fn dat_file_name(mode: &str) -> String {
    format!("runtime-{}.dat", mode.replace([':', '/'], "-"))
}

/// Groups records by mode into cactus series: modes listed in `order`
/// first, then the rest in first-seen order.
pub fn cactus_series(records: &[BenchRecord], order: &[String]) -> Vec<CactusSeries> {
    let mut order: Vec<String> = order
        .iter()
        .filter(|m| records.iter().any(|r| &r.mode == *m))
        .cloned()
        .collect();
    let mut by_mode: BTreeMap<String, Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        if !order.contains(&r.mode) {
            order.push(r.mode.clone());
        }
        by_mode.entry(r.mode.clone()).or_default().push(r);
    }
    order
        .into_iter()
        .map(|mode| {
            let rs = &by_mode[&mode];
            let mut runtimes: Vec<f64> = rs.iter().filter(|r| r.status.solved()).map(|r| r.seconds).collect();
            runtimes.sort_by(f64::total_cmp);
            CactusSeries {
                mode,
                runtimes,
                total: rs.len(),
            }
        })
        .collect()
}

/// `mode solved/total` per line, modes in series order.
pub fn summary(series: &[CactusSeries]) -> String {
    let width = series.iter().map(|s| s.mode.len()).max().unwrap_or(4).max(4);
    let mut out = format!("{:width$}  solved\n", "mode");
    for s in series {
        out.push_str(&format!("{:width$}  {}/{}\n", s.mode, s.solved(), s.total));
    }
    out
}

/// Writes one `.dat` file per mode and `summary.txt` into `dir`.
pub fn emit_cactus(records: &[BenchRecord], order: &[String], dir: &Path) -> Result<Vec<CactusSeries>, BenchError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let series = cactus_series(records, order);
    for s in &series {
        let path = dir.join(dat_file_name(&s.mode));
        fs::write(&path, s.to_dat()).map_err(io_err(&path))?;
    }
    let path = dir.join("summary.txt");
    fs::write(&path, summary(&series)).map_err(io_err(&path))?;
    Ok(series)
}

/// Two modes that solved the same instance with different answers.
#[derive(Clone, Debug, PartialEq)]
pub struct Disagreement {
    pub instance: String,
    pub first: (String, RunStatus, Option<i128>),
    pub second: (String, RunStatus, Option<i128>),
}

/// Checks that all solved runs of an instance report the same status and,
/// for optimization, the same value.
pub fn check_agreement(records: &[BenchRecord]) -> Vec<Disagreement> {
    let mut first: BTreeMap<&str, &BenchRecord> = BTreeMap::new();
    let mut out = Vec::new();
    for r in records.iter().filter(|r| r.status.solved()) {
        let key = |r: &BenchRecord| {
            (
                r.status,
                if r.status == RunStatus::Optimum {
                    r.objective
                } else {
                    None
                },
            )
        };
        match first.get(r.instance.as_str()) {
            None => {
                first.insert(&r.instance, r);
            }
            Some(f) if key(f) != key(r) => out.push(Disagreement {
                instance: r.instance.clone(),
                first: (f.mode.clone(), f.status, f.objective),
                second: (r.mode.clone(), r.status, r.objective),
            }),
            Some(_) => {}
        }
    }
    out
}

/// `.opb` files of a directory, sorted by name.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().is_some_and(|e| e == "opb") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Writes `doc` to `path`, creating parent directories.
pub fn write_document(doc: &OpbDocument, path: &Path) -> Result<(), BenchError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(doc.to_opb().as_bytes()).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(instance: &str, mode: &str, status: RunStatus, seconds: f64, objective: Option<i128>) -> BenchRecord {
        BenchRecord {
            instance: instance.into(),
            mode: mode.into(),
            status,
            seconds,
            objective,
            conflicts: None,
            propagations: None,
            watch_replacements: None,
            slack_updates: None,
        }
    }

    #[test]
    fn classification_boundary() {
        assert_eq!(classify_coefficient(1), Class::Small);
        assert_eq!(classify_coefficient(99), Class::Small);
        assert_eq!(classify_coefficient(100), Class::Large);
    }

    #[test]
    fn knapsack_is_deterministic_and_large() {
        let p = KnapsackParams {
            items: 10,
            min_weight: 1,
            max_weight: 1000,
            seed: 7,
        };
        let a = gen_knapsack(&p).unwrap().to_opb();
        assert_eq!(a, gen_knapsack(&p).unwrap().to_opb());
        let doc = gen_knapsack(&p).unwrap();
        let c = &doc.constraints[0];
        assert_eq!(c.rhs, c.terms.iter().map(|t| t.0).sum::<Coeff>() / 2);
        let light = KnapsackParams { max_weight: 99, ..p };
        assert_eq!(classify(&gen_knapsack(&light).unwrap()), Class::Small);
    }

    #[test]
    fn knapsack_rejects_bad_range() {
        let p = KnapsackParams {
            min_weight: 10,
            max_weight: 5,
            ..KnapsackParams::default()
        };
        assert!(gen_knapsack(&p).is_err());
    }

    #[test]
    fn cactus_lines() {
        let records = vec![
            rec("a", "m", RunStatus::Sat, 9.0, None),
            rec("b", "m", RunStatus::Sat, 2.0, None),
            rec("c", "m", RunStatus::Timeout, 60.0, None),
            rec("d", "m", RunStatus::Unsat, 5.0, None),
            rec("e", "m", RunStatus::Error, 0.1, None),
            rec("a", "none", RunStatus::Timeout, 60.0, None),
        ];
        let series = cactus_series(&records, &[]);
        assert_eq!(series[0].to_dat(), "1 2\n2 5\n3 9\n");
        assert_eq!(series[1].to_dat(), "");
        assert_eq!(series[1].solved(), 0);
        assert!(summary(&series).contains("m     3/5"));
    }

    #[test]
    fn dat_names() {
        assert_eq!(dat_file_name("add:500"), "runtime-add-500.dat");
        assert_eq!(dat_file_name("auto:add:500"), "runtime-auto-add-500.dat");
    }

    #[test]
    fn agreement() {
        let ok = vec![
            rec("a", "x", RunStatus::Optimum, 1.0, Some(-5)),
            rec("a", "y", RunStatus::Optimum, 1.0, Some(-5)),
            rec("a", "z", RunStatus::Timeout, 1.0, Some(-3)),
        ];
        assert!(check_agreement(&ok).is_empty());
        let bad = vec![
            rec("a", "x", RunStatus::Optimum, 1.0, Some(-5)),
            rec("a", "y", RunStatus::Optimum, 1.0, Some(-4)),
        ];
        assert_eq!(check_agreement(&bad).len(), 1);
    }
}
