use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pbhybrid::bench;

const SAT: &str = "* #variable= 3 #constraint= 2\n+1 x1 +1 x2 >= 1 ;\n+1 ~x1 +1 x3 >= 1 ;\n";
const UNSAT: &str = "* #variable= 1 #constraint= 2\n+1 x1 >= 1 ;\n+1 ~x1 >= 1 ;\n";
const OPT: &str = "* #variable= 2 #constraint= 1\nmin: +1 x1 +2 x2 ;\n+1 x1 +1 x2 >= 1 ;\n";

fn pbhybrid() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pbhybrid"));
    cmd.env_remove("PBHYBRID_TIMEOUT");
    cmd
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn solve(file: &Path, args: &[&str]) -> Output {
    pbhybrid()
        .arg("solve")
        .arg(file)
        .args(args)
        .arg("--no-timing")
        .output()
        .unwrap()
}

/// Pigeons into holes, one fewer hole than pigeons.
fn pigeonhole(holes: u32) -> String {
    let pigeons = holes + 1;
    let var = |p: u32, h: u32| p * holes + h + 1;
    let mut s = format!("* #variable= {} #constraint= {}\n", pigeons * holes, pigeons + holes);
    for p in 0..pigeons {
        for h in 0..holes {
            write!(s, "+1 x{} ", var(p, h)).unwrap();
        }
        s.push_str(">= 1 ;\n");
    }
    for h in 0..holes {
        for p in 0..pigeons {
            write!(s, "+1 x{} ", var(p, h)).unwrap();
        }
        s.push_str("<= 1 ;\n");
    }
    s
}

#[test]
fn exit_codes_follow_the_status() {
    let dir = tempfile::tempdir().unwrap();
    let sat = solve(&write(dir.path(), "s.opb", SAT), &[]);
    assert_eq!(sat.status.code(), Some(10));
    assert!(stdout(&sat).contains("s SATISFIABLE\n"));
    assert!(stdout(&sat).lines().any(|l| l.starts_with("v ")));

    let unsat = solve(&write(dir.path(), "u.opb", UNSAT), &[]);
    assert_eq!(unsat.status.code(), Some(20));
    assert!(stdout(&unsat).contains("s UNSATISFIABLE\n"));

    let opt = solve(&write(dir.path(), "o.opb", OPT), &[]);
    assert_eq!(opt.status.code(), Some(30));
    let text = stdout(&opt);
    assert!(text.contains("s OPTIMUM FOUND\n"));
    assert!(text.contains("v x1 -x2\n"));
    let bounds: Vec<&str> = text.lines().filter(|l| l.starts_with("o ")).collect();
    assert_eq!(bounds.last(), Some(&"o 1"));
}

#[test]
fn usage_and_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let sat = write(dir.path(), "s.opb", SAT);
    assert_eq!(solve(&sat, &["--prop-mode", "bogus"]).status.code(), Some(2));
    assert_eq!(solve(&sat, &["--prop-counting", "1.5"]).status.code(), Some(2));
    assert_eq!(solve(&sat, &["--timeout", "0"]).status.code(), Some(2));
    assert_eq!(pbhybrid().arg("frobnicate").output().unwrap().status.code(), Some(2));
    assert_eq!(solve(&dir.path().join("missing.opb"), &[]).status.code(), Some(1));
    let bad = solve(&write(dir.path(), "bad.opb", "+1 x1 >= 1\n"), &[]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 1"));
}

#[test]
fn prop_counting_one_puts_everything_in_counting() {
    let dir = tempfile::tempdir().unwrap();
    let php = write(dir.path(), "php.opb", &pigeonhole(4));
    let o = solve(&php, &["--prop-mode=hybrid", "--prop-counting=1.0"]);
    assert_eq!(o.status.code(), Some(20));
    assert!(
        stdout(&o).contains("c input-constraints 9 counting 9 watched 0\n"),
        "{}",
        stdout(&o)
    );
    let w = solve(&php, &["--prop-mode=watched"]);
    assert!(stdout(&w).contains("c input-constraints 9 counting 0 watched 9\n"));
}

#[test]
fn every_mode_label_is_accepted_and_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let php = write(dir.path(), "php.opb", &pigeonhole(3));
    for mode in [
        "counting",
        "watched",
        "hybrid",
        "hybrid:0.8",
        "abs:500",
        "add:1000",
        "mul:100",
        "maxgap:500",
        "auto",
        "auto:mul:100",
    ] {
        let o = solve(&php, &["--prop-mode", mode, "--audit"]);
        assert_eq!(o.status.code(), Some(20), "{mode}");
        let label = stdout(&o)
            .lines()
            .find_map(|l| l.strip_prefix("c mode ").map(str::to_string))
            .unwrap();
        let again = solve(&php, &["--prop-mode", &label]);
        assert_eq!(again.status.code(), Some(20), "{label}");
        assert!(stdout(&again).contains(&format!("c mode {label}\n")), "{label}");
    }
}

#[test]
fn output_without_timing_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let doc = bench::gen_knapsack(&bench::KnapsackParams {
        items: 14,
        min_weight: 1,
        max_weight: 10_000,
        seed: 3,
    })
    .unwrap();
    let path = dir.path().join("k.opb");
    bench::write_document(&doc, &path).unwrap();
    let a = solve(&path, &["--prop-mode", "add:500"]);
    let b = solve(&path, &["--prop-mode", "add:500"]);
    assert_eq!(a.status.code(), Some(30));
    assert_eq!(a.stdout, b.stdout);
    assert!(!stdout(&a).contains("c time"));
}

#[test]
fn budgets_end_in_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let php = write(dir.path(), "php.opb", &pigeonhole(8));
    let o = solve(&php, &["--max-conflicts", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("s UNKNOWN\n"));
    assert!(stdout(&o).contains("c conflicts 5\n"));

    let env = pbhybrid()
        .env("PBHYBRID_TIMEOUT", "0.000001")
        .arg("solve")
        .arg(&php)
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(0));
    assert!(stdout(&env).contains("s UNKNOWN\n"));
    let bad_env = pbhybrid()
        .env("PBHYBRID_TIMEOUT", "-1")
        .arg("solve")
        .arg(&php)
        .output()
        .unwrap();
    assert_eq!(bad_env.status.code(), Some(2));
}

#[test]
fn classify_reports_one_line_per_file() {
    let dir = tempfile::tempdir().unwrap();
    let small = write(dir.path(), "small.opb", "+99 x1 +1 x2 >= 1 ;\n");
    let large = write(dir.path(), "large.opb", "+100 x1 +1 x2 >= 1 ;\n");
    let o = pbhybrid().arg("classify").arg(&small).arg(&large).output().unwrap();
    assert!(o.status.success());
    let text = stdout(&o);
    let classes: Vec<&str> = text.lines().map(|l| l.rsplit(' ').next().unwrap()).collect();
    assert_eq!(classes, ["small", "large"]);
}

#[test]
fn generators_are_deterministic() {
    let run = |args: &[&str]| pbhybrid().args(args).output().unwrap().stdout;
    let k = ["gen-knapsack", "--items", "12", "--seed", "7"];
    assert_eq!(run(&k), run(&k));
    assert_ne!(run(&k), run(&["gen-knapsack", "--items", "12", "--seed", "8"]));
    let r = ["gen-random", "--vars", "6", "--constraints", "4", "--seed", "2"];
    let text = run(&r);
    assert_eq!(text, run(&r));
    pbhybrid::opb::parse_opb(&String::from_utf8(text).unwrap()).unwrap();
}

#[test]
fn bench_resumes_without_duplicates_and_cactus_regenerates() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    write(&corpus, "s.opb", SAT);
    write(&corpus, "u.opb", UNSAT);
    write(&corpus, "o.opb", OPT);
    let out = dir.path().join("out");
    let bench_run = |modes: &str| {
        let o = pbhybrid()
            .args(["bench", "--modes", modes, "--timeout", "10", "--corpus"])
            .arg(&corpus)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    bench_run("counting,watched");
    let summary = bench_run("counting,watched,abs:500");
    let records = bench::read_journal(&out.join("journal.csv")).unwrap();
    assert_eq!(records.len(), 9);
    assert!(summary.lines().any(|l| l.split_whitespace().eq(["abs:500", "3/3"])));
    assert!(bench::check_agreement(&records).is_empty());

    std::fs::remove_file(out.join(bench::dat_file_name("abs:500"))).unwrap();
    let cactus_dir = dir.path().join("cactus");
    let o = pbhybrid()
        .arg("cactus")
        .arg("--journal")
        .arg(out.join("journal.csv"))
        .arg("--out")
        .arg(&cactus_dir)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dat = std::fs::read_to_string(cactus_dir.join(bench::dat_file_name("abs:500"))).unwrap();
    assert_eq!(dat.lines().count(), 3);
}
