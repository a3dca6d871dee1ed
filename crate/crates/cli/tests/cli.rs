//! End-to-end checks of the `ldp-freq` binary: output schemas, determinism
//! and exit codes.

use std::process::{Command, Output};

fn ldp_freq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldp-freq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf8 output")
}

/// Rows without the timing columns, which legitimately vary between runs.
fn stable_columns(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|line| line.split(',').take(3).collect::<Vec<_>>().join(","))
        .collect()
}

#[test]
fn run_emits_csv_with_exact_header() {
    let out = ldp_freq(&[
        "run",
        "--mechanism",
        "pg",
        "--epsilon",
        "0.6931471805599453",
        "--k",
        "7",
        "--n",
        "100",
        "--trials",
        "5",
        "--dist",
        "spike",
        "--seed",
        "42",
        "--q",
        "2",
        "--t",
        "3",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("trial,mse,linf,encode_ns,decode_ns"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn identical_seeds_give_identical_metrics() {
    let args = [
        "run",
        "--mechanism",
        "ss",
        "--epsilon",
        "1.0",
        "--k",
        "12",
        "--n",
        "200",
        "--trials",
        "4",
        "--dist",
        "zipf:1.5",
        "--seed",
        "7",
    ];
    let a = ldp_freq(&args);
    let b = ldp_freq(&args);
    assert!(a.status.success() && b.status.success());
    assert_eq!(stable_columns(&stdout(&a)), stable_columns(&stdout(&b)));
}

#[test]
fn json_format_is_an_array_of_objects() {
    let out = ldp_freq(&[
        "run",
        "--mechanism",
        "rr",
        "--epsilon",
        "1.0",
        "--k",
        "5",
        "--n",
        "50",
        "--trials",
        "2",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.trim_start().starts_with('['));
    assert!(text.contains("\"mse\""));
    assert!(text.contains("\"trial\""));
}

#[test]
fn public_coin_flag_switches_variant() {
    let out = ldp_freq(&[
        "run",
        "--mechanism",
        "pg",
        "--public-coin",
        "--epsilon",
        "0.6931471805599453",
        "--k",
        "4",
        "--n",
        "60",
        "--trials",
        "2",
        "--q",
        "2",
        "--t",
        "3",
        "--public-seed",
        "99",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_emits_one_row_per_epsilon() {
    let out = ldp_freq(&[
        "sweep",
        "--mechanism",
        "pg",
        "--epsilons",
        "1,2,3",
        "--k",
        "20",
        "--n",
        "200",
        "--trials",
        "3",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("epsilon,mean_mse"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn bench_lists_the_four_decoders() {
    let out = ldp_freq(&[
        "bench",
        "--epsilon",
        "1.6094379124341003",
        "--k",
        "40",
        "--n",
        "300",
        "--hpg-q",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("decoder,median_ns"));
    let decoders: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(decoders, ["pg-dp", "pg-naive", "hpg", "pirappor-dp"]);
}

#[test]
fn invalid_config_exits_2() {
    let out = ldp_freq(&[
        "run",
        "--mechanism",
        "nope",
        "--epsilon",
        "1.0",
        "--k",
        "5",
        "--n",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = ldp_freq(&[
        "run",
        "--mechanism",
        "pg",
        "--epsilon",
        "-1",
        "--k",
        "5",
        "--n",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown flags are also configuration errors (clap's own exit code).
    let out = ldp_freq(&["run", "--mechanismo", "pg"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn derivation_failure_exits_3() {
    // k larger than the pinned geometry can address.
    let out = ldp_freq(&[
        "run",
        "--mechanism",
        "pg",
        "--epsilon",
        "1.0",
        "--k",
        "100",
        "--n",
        "10",
        "--q",
        "2",
        "--t",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(3));

    // Composite q cannot seed the hybrid search.
    let out = ldp_freq(&[
        "run",
        "--mechanism",
        "hpg",
        "--epsilon",
        "1.0",
        "--k",
        "50",
        "--n",
        "10",
        "--q",
        "6",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join("ldp-freq-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("results.csv");
    let out = ldp_freq(&[
        "run",
        "--mechanism",
        "pg",
        "--epsilon",
        "1.0",
        "--k",
        "8",
        "--n",
        "50",
        "--trials",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let contents = std::fs::read_to_string(&path).unwrap();
    assert!(contents.starts_with("trial,mse,linf,encode_ns,decode_ns\n"));
    std::fs::remove_file(&path).ok();
}
