//! End-to-end tests for the `skipq` binary: spawn the real executable,
//! feed it config files, and check exit codes, CSV shapes, and the
//! stdout/stderr split documented in the CLI module docs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// A scratch directory that cleans up after itself.
struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Scratch {
        let dir = std::env::temp_dir().join(format!("skipq-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).expect("create scratch dir");
        Scratch(dir)
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.0.join(name);
        std::fs::write(&path, contents).expect("write scratch file");
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn skipq(args: &[&str]) -> (Output, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_skipq"))
        .args(args)
        .output()
        .expect("spawn skipq");
    let stdout = String::from_utf8(out.stdout.clone()).expect("utf8 stdout");
    let stderr = String::from_utf8(out.stderr.clone()).expect("utf8 stderr");
    (out, stdout, stderr)
}

fn arg(path: &Path) -> &str {
    path.to_str().expect("utf8 path")
}

/// Split a CSV body into rows of cells.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const EXPERIMENT_HEADER: &str = "policy,n,k,d,epsilon,avg_queue,avg_queue_ci,cross_stdev,\
temporal_stdev,perp_sq,msg_per_job,msg_per_slot_2n,msg_per_slot_n,eps_x_avgq,lower_rhs,upper_rhs";

/// A small, stable four-server system: Σμ = 8, skip-1 boundary also 8.
const SMALL_STABLE: &str = "\
n = 4
policy = slq
k = 1
d = 1
arrival_mean = 7.0
arrival_var = 2.0
a_max = 3
mu = 2
sigma_mu_sq = 0.5
s_max = 3
horizon_slots = 3000
replications = 2
seed = 11
";

#[test]
fn simulate_emits_one_experiment_row() {
    let tmp = Scratch::new("simulate");
    let cfg = tmp.file("sys.conf", SMALL_STABLE);
    let (out, stdout, stderr) = skipq(&["simulate", arg(&cfg)]);
    assert!(out.status.success(), "stderr: {stderr}");

    let table = rows(&stdout);
    assert_eq!(table.len(), 2, "header + one row:\n{stdout}");
    assert_eq!(table[0].join(","), EXPERIMENT_HEADER);
    let row = &table[1];
    assert_eq!(row.len(), 16);
    assert_eq!(&row[..4], ["slq", "4", "1", "1"]);
    let epsilon: f64 = row[4].parse().expect("epsilon cell");
    assert!((epsilon - 1.0).abs() < 1e-12, "Σμ − E[A(1)] = 8 − 7");
    let avg_queue: f64 = row[5].parse().expect("avg_queue cell");
    assert!(avg_queue > 0.0 && avg_queue.is_finite());
    // 2n messages per k(n−d)-slot cycle → exactly 8/3 per slot.
    let msg: f64 = row[11].parse().expect("msg_per_slot_2n cell");
    assert!((msg - 8.0 / 3.0).abs() < 1e-12, "got {msg}");
}

#[test]
fn simulate_refuses_loads_outside_the_stability_region() {
    let tmp = Scratch::new("refuse");
    let cfg = tmp.file("sys.conf", &SMALL_STABLE.replace("arrival_mean = 7.0", "arrival_mean = 8.5"));
    let (out, stdout, stderr) = skipq(&["simulate", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(2), "config refusal exit code");
    assert!(stdout.is_empty(), "no CSV on refusal:\n{stdout}");
    assert!(
        stderr.contains("theorem1_bound"),
        "refusal names the boundary:\n{stderr}"
    );

    // The same load is accepted once the caller opts in, with a warning.
    let (out, stdout, stderr) =
        skipq(&["simulate", arg(&cfg), "--allow-unstable", "--replications", "1"]);
    assert!(out.status.success(), "stderr: {stderr}");
    assert!(stderr.contains("outside the stability region"), "{stderr}");
    assert_eq!(rows(&stdout).len(), 2);
}

#[test]
fn unknown_config_key_is_a_refusal_and_missing_file_is_not() {
    let tmp = Scratch::new("badcfg");
    let cfg = tmp.file("sys.conf", &format!("{SMALL_STABLE}bogus = 3\n"));
    let (out, _, stderr) = skipq(&["simulate", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr.contains("unknown key `bogus`"), "{stderr}");

    let (out, _, stderr) = skipq(&["simulate", arg(&tmp.path("absent.conf"))]);
    assert_eq!(out.status.code(), Some(1), "I/O failure is not a refusal");
    assert!(stderr.contains("error:"), "{stderr}");
}

#[test]
fn stability_reports_the_closed_form_facts() {
    let tmp = Scratch::new("stability");
    let cfg = tmp.file(
        "sys.conf",
        "\
n = 4
policy = slq
k = 1
d = 1
arrival_mean = 4.2
a_max = 3
mu = 3, 1, 1, 1
sigma_mu_sq = 0.5
s_max = 4
",
    );
    let (out, stdout, stderr) = skipq(&["stability", arg(&cfg)]);
    assert!(out.status.success(), "stderr: {stderr}");
    let table = rows(&stdout);
    assert_eq!(
        table[0].join(","),
        "theorem1_bound,capacity_sum,argmin_size,stable,throughput_optimal,min_skips,epsilon"
    );
    // Skipping one queue caps throughput at 3·(1+1+1)/2 = 4.5 < Σμ = 6,
    // binding on the three slow servers; two skips would restore capacity.
    assert_eq!(&table[1][..6], ["4.5", "6", "3", "true", "false", "2"]);
}

#[test]
fn bounds_reports_the_chain_of_constants() {
    let tmp = Scratch::new("bounds");
    let cfg = tmp.file(
        "sys.conf",
        "\
n = 10
policy = slq
k = 1
d = 1
arrival_mean = 19.99
arrival_var = 25
a_max = 3
mu = 2
sigma_mu_sq = 1
s_max = 3
",
    );
    let (out, stdout, stderr) = skipq(&["bounds", arg(&cfg)]);
    assert!(out.status.success(), "stderr: {stderr}");
    let table = rows(&stdout);
    assert_eq!(
        table[0].join(","),
        "delta,z,c1_prime,c2,eta,rho,a,n2,ssc_eps_threshold,upper_rhs,lower_rhs"
    );
    let row = &table[1];
    assert_eq!(row[1], "1080", "z = 2k(n−d)n(Amax + Smax)");
    assert_eq!(row[3], "14580", "c2 = 2k²(n−d)²nS²max");
    let lower: f64 = row[10].parse().expect("lower_rhs cell");
    assert!((lower - 1.748_505).abs() < 1e-9, "got {lower}");
    let upper: f64 = row[9].parse().expect("upper_rhs cell");
    assert!(upper.is_finite() && upper > lower);

    // Policies that never poll have no skip margin to bound.
    let rr = tmp.file(
        "rr.conf",
        &SMALL_STABLE
            .replace("policy = slq\nk = 1\nd = 1\n", "policy = round-robin\n"),
    );
    let (out, _, stderr) = skipq(&["bounds", arg(&rr)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr.contains("polling policy"), "{stderr}");
}

#[test]
fn sweep_follows_the_slack_ladder_and_writes_the_csv_file() {
    let tmp = Scratch::new("sweep");
    let cfg = tmp.file(
        "sys.conf",
        "\
n = 4
policy = slq
k = 1
d = 2
arrival_mean = 7.0   # overridden per sweep point
arrival_var = 2.0
a_max = 3
mu = 2
sigma_mu_sq = 0.5
s_max = 3
horizon_slots = 6000
replications = 2
seed = 9
",
    );
    let out_path = tmp.path("sweep.csv");
    let (out, stdout, stderr) = skipq(&[
        "sweep",
        arg(&cfg),
        "--eps",
        "0.5,0.25",
        "--out",
        arg(&out_path),
    ]);
    assert!(out.status.success(), "stderr: {stderr}");
    assert!(!stderr.contains("warning"), "drift margin covers both slacks:\n{stderr}");

    let table = rows(&stdout);
    assert_eq!(table.len(), 3, "header + two rows:\n{stdout}");
    for (row, want_eps) in table[1..].iter().zip([0.5, 0.25]) {
        let eps: f64 = row[4].parse().expect("epsilon cell");
        assert!((eps - want_eps).abs() < 1e-12);
        assert!(!row[15].is_empty(), "upper bound evaluated: {row:?}");
    }
    let written = std::fs::read_to_string(&out_path).expect("--out file");
    assert_eq!(written, stdout, "file mirrors stdout");
}

#[test]
fn table1_preset_emits_the_seven_comparison_rows() {
    let (out, stdout, stderr) = skipq(&["table1", "--scale", "0.001"]);
    assert!(out.status.success(), "stderr: {stderr}");
    let table = rows(&stdout);
    assert_eq!(table.len(), 8, "header + seven rows:\n{stdout}");
    let shape: Vec<(&str, &str)> = table[1..]
        .iter()
        .map(|r| (r[0].as_str(), r[1].as_str()))
        .collect();
    assert_eq!(
        shape,
        [
            ("round-robin", "10"),
            ("slq", "10"),
            ("repeated-jsq", "10"),
            ("slq", "20"),
            ("repeated-jsq", "20"),
            ("slq", "50"),
            ("repeated-jsq", "50"),
        ]
    );
    // Message accounting is part of the row: none for round-robin, and
    // 2n per k(n−1)-slot cycle — 20/9 per slot — for the n = 10 sampler.
    let rr_msg: f64 = table[1][11].parse().expect("msg cell");
    assert_eq!(rr_msg, 0.0);
    let slq_msg: f64 = table[2][11].parse().expect("msg cell");
    assert!((slq_msg - 20.0 / 9.0).abs() < 1e-12, "got {slq_msg}");
}

#[test]
fn unstable_demo_measures_positive_drift_past_the_boundary() {
    let tmp = Scratch::new("drift");
    let cfg = tmp.file(
        "sys.conf",
        "\
n = 4
policy = slq
k = 1
d = 1
arrival_mean = 5.0   # past the skip-1 boundary of 4.5, below Σμ = 6
arrival_var = 0.5
a_max = 2
mu = 3, 1, 1, 1
sigma_mu_sq = 0, 0, 0, 0
s_max = 4
horizon_slots = 20000
replications = 2
seed = 5
",
    );
    // No --allow-unstable: measuring drift at unstable loads is the
    // subcommand's purpose, so it has no stability gate.
    let (out, stdout, stderr) = skipq(&["unstable-demo", arg(&cfg)]);
    assert!(out.status.success(), "stderr: {stderr}");
    let table = rows(&stdout);
    assert_eq!(
        table[0].join(","),
        "slope,half_width_95,horizon_slots,replications,ci_excludes_zero"
    );
    let slope: f64 = table[1][0].parse().expect("slope cell");
    assert!(slope > 0.0, "total queue should grow, got {slope}");
    assert_eq!(table[1][3], "2");
    assert!(stderr.contains("replication 0: slope"), "{stderr}");
}

#[test]
fn sweep_requires_the_eps_flag() {
    let tmp = Scratch::new("noeps");
    let cfg = tmp.file("sys.conf", SMALL_STABLE);
    let (out, _, stderr) = skipq(&["sweep", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(2), "usage error");
    assert!(stderr.contains("--eps"), "{stderr}");
}
