use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SUM_MAX: &str = r#"{"receptive_field": 3, "layers": [
    {"kind": "conv", "size": 2, "out": 1, "weights": [1, 1]},
    {"kind": "pool-max", "size": 2}]}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_densescan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Fixture {
            dir: tempfile::tempdir().expect("temp dir"),
        };
        f.write("sum_max.json", SUM_MAX);
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> String {
        let p = self.path(name);
        std::fs::write(&p, text).expect("write");
        p.to_str().expect("utf8 path").to_owned()
    }

    fn signal(&self, name: &str, values: &[i64]) -> String {
        let mut text = format!("nsf 1 {} 1\n", values.len());
        for v in values {
            text.push_str(&format!("{v}\n"));
        }
        self.write(name, &text)
    }

    fn chain(&self) -> String {
        self.path("sum_max.json").to_str().unwrap().to_owned()
    }
}

fn scan(f: &Fixture, input: &str, mode: &str) -> Output {
    run(&["scan", "--chain", &f.chain(), "--input", input, "--mode", mode])
}

#[test]
fn exact_on_length_b_gives_one_sample() {
    let f = Fixture::new();
    let input = f.signal("x.nsf", &[1, 4, 2]);
    let o = scan(&f, &input, "exact");
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "nsf 1 1 1\n6\n");
}

#[test]
fn sum_max_dense_scan() {
    let f = Fixture::new();
    let input = f.signal("x.nsf", &[1, 4, 2, 0, 5, 3]);
    let o = scan(&f, &input, "exact");
    assert_eq!(stdout(&o), "nsf 1 4 1\n6\n6\n5\n8\n");
    let slide = scan(&f, &input, "slide");
    assert!(slide.status.success(), "{}", stderr(&slide));
    // Output i sits in row div(i - 1, 2) + 1 and column rem(i - 1, 2) + 1.
    assert_eq!(stdout(&slide), "nsf 2 2 2 1\n# fragments=2\n6\n6\n5\n8\n");
}

#[test]
fn slide_divisibility_is_exit_3() {
    let f = Fixture::new();
    let input = f.signal("x.nsf", &[1, 4, 2, 0, 5, 3, 1]);
    let o = scan(&f, &input, "slide");
    assert_eq!(o.status.code(), Some(3));
    let msg = stderr(&o);
    assert!(msg.contains("k*_L = 2") && msg.contains("D - B + 1 = 5"), "{msg}");
}

#[test]
fn short_input_is_exit_3() {
    let f = Fixture::new();
    let input = f.signal("x.nsf", &[1, 2]);
    assert_eq!(scan(&f, &input, "exact").status.code(), Some(3));
}

#[test]
fn parse_errors_are_exit_2() {
    let f = Fixture::new();
    let good = f.signal("x.nsf", &[1, 2, 3]);
    let bad_signal = f.write("bad.nsf", "nsf 1 2 1\n1\nfoo\n");
    assert_eq!(scan(&f, &bad_signal, "exact").status.code(), Some(2));
    assert_eq!(scan(&f, &good, "sideways").status.code(), Some(2));
    let bad_chain = f.write("bad.json", r#"{"layers": [{"kind": "conv", "size": 2}]}"#);
    let o = run(&["scan", "--chain", &bad_chain, "--input", &good, "--mode", "exact"]);
    assert_eq!(o.status.code(), Some(2));
    let wrong_b = f.write(
        "wrong_b.json",
        &SUM_MAX.replace("\"receptive_field\": 3", "\"receptive_field\": 4"),
    );
    let o = run(&["scan", "--chain", &wrong_b, "--input", &good, "--mode", "exact"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(run(&["scan", "--chain"]).status.code(), Some(2));
}

#[test]
fn missing_files_are_exit_4() {
    let f = Fixture::new();
    let missing = f.path("nope.nsf");
    let o = scan(&f, missing.to_str().unwrap(), "exact");
    assert_eq!(o.status.code(), Some(4));
    let input = f.signal("x.nsf", &[1, 2, 3]);
    let into_dir = f.dir.path().join("no/such/dir/out.nsf");
    let o = run(&[
        "scan",
        "--chain",
        &f.chain(),
        "--input",
        &input,
        "--mode",
        "exact",
        "--output",
        into_dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn mixed_level_checks() {
    let f = Fixture::new();
    let input = f.signal("x.nsf", &[1, 2, 3, 4]);
    // A depth-one chain has no intermediate level.
    assert_eq!(scan(&f, &input, "mixed:1").status.code(), Some(3));
    let o = run(&["scan", "--chain", &f.chain(), "--input", &input, "--mode", "mixed"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn filter_bank_file_reference() {
    let f = Fixture::new();
    f.write("bank.nsf", "nsf 3 2 1 1 1\n1\n1\n");
    let cfg = f.write(
        "file_chain.json",
        r#"{"layers": [{"kind": "conv", "file": "bank.nsf"}, {"kind": "pool-max", "size": 2}]}"#,
    );
    let input = f.signal("x.nsf", &[1, 4, 2, 0, 5, 3]);
    let by_file = run(&["scan", "--chain", &cfg, "--input", &input, "--mode", "exact"]);
    assert!(by_file.status.success(), "{}", stderr(&by_file));
    assert_eq!(by_file.stdout, scan(&f, &input, "exact").stdout);
}

#[test]
fn count_anchor_row() {
    let f = Fixture::new();
    let o = run(&["count", "--chain", &f.chain(), "--d-from", "6", "--d-to", "6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("D,layer,regime,f_measured,f_predicted,g_measured,g_predicted,S_f_num,S_f_den,S_g_num,S_g_den,limit_f,limit_g")
    );
    assert!(text.lines().any(|l| l == "6,1,stride,8,8,4,4,8,5,1,1,2,1"), "{text}");
    let below = run(&["count", "--chain", &f.chain(), "--d-from", "1", "--d-to", "2"]);
    assert_eq!(below.status.code(), Some(3));
}

#[test]
fn count_is_monotone_in_d() {
    let f = Fixture::new();
    let o = run(&[
        "count",
        "--chain",
        &f.chain(),
        "--d-from",
        "4",
        "--d-to",
        "40",
        "--d-step",
        "2",
    ]);
    let text = stdout(&o);
    let ratios: Vec<(i64, i64)> = text
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(2) == Some("stride"))
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (cols[7].parse().unwrap(), cols[8].parse().unwrap())
        })
        .collect();
    assert!(ratios.len() > 10);
    assert!(ratios.windows(2).all(|w| w[0].0 * w[1].1 <= w[1].0 * w[0].1));
}

#[test]
fn dims_table() {
    let f = Fixture::new();
    let o = run(&["dims", "--chain", &f.chain(), "--d-from", "6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("u_j        3 1"), "{text}");
    assert!(text.contains("slide      6x1 2x2"), "{text}");
    assert!(text.contains("dilate     6 4"), "{text}");
    assert!(
        text.contains("relax      n/a (k*_L = 2 does not divide D - B = 3)"),
        "{text}"
    );
    let o = run(&["dims", "--chain", &f.chain(), "--d-from", "7"]);
    let text = stdout(&o);
    assert!(
        text.contains("slide      n/a (k*_L = 2 does not divide D - B + 1 = 5)"),
        "{text}"
    );
    assert!(text.contains("relax      7 3"), "{text}");
    let o = run(&["dims", "--chain", &f.chain(), "--d-from", "2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_is_reproducible_and_writes_report() {
    let f = Fixture::new();
    let out = f.path("report.txt");
    let args = ["verify", "--seed", "5", "--trials", "8", "--max-d", "24"];
    let a = run(&args);
    assert!(a.status.success(), "{}", stdout(&a));
    let mut with_file = args.to_vec();
    with_file.extend(["--output", out.to_str().unwrap()]);
    let b = run(&with_file);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(std::fs::read(&out).unwrap(), a.stdout);
    assert!(stdout(&a).contains("result: pass"));
    let other = run(&["verify", "--seed", "6", "--trials", "8", "--max-d", "24"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn verify_with_tiny_cap_is_vacuous() {
    let o = run(&["verify", "--trials", "4", "--max-d", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0/0 trials"));
    assert!(stderr(&o).contains("ran 0 trials"));
}

#[test]
fn output_file_matches_stdout() {
    let f = Fixture::new();
    let input = f.signal("x.nsf", &[3, 1, 4, 1, 5, 9, 2, 6]);
    let out = f.path("out.nsf");
    let o = run(&[
        "scan",
        "--chain",
        &f.chain(),
        "--input",
        &input,
        "--mode",
        "stitch",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(
        std::fs::read(Path::new(&out)).unwrap(),
        scan(&f, &input, "slide").stdout
    );
}
