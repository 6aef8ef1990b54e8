use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfm-pyramid"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const LOG: &str = "customer_id,date,amount\n\
c1,2015-01-30,800000000\n\
c2,2014-12-01,1000\n\
c2,2014-12-20,2000\n\
c3,2014-06-01,60000000\n\
c4,2015-01-10,300000000\n\
c5,2015-01-25,600000000\n";

#[test]
fn ingest_then_score_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tx.csv"), LOG).unwrap();
    let out = run(
        dir.path(),
        &[
            "ingest",
            "--transactions",
            "tx.csv",
            "--analysis-date",
            "2015-01-31",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rfm = fs::read_to_string(dir.path().join("o/rfm.csv")).unwrap();
    assert!(rfm.contains("c2,42,2,3000"), "{rfm}");
    let report = json(dir.path().join("o/ingest.json"));
    assert_eq!(report["events"], 6);
    assert_eq!(report["customers"], 5);

    let out = run(dir.path(), &["score", "--rfm", "o/rfm.csv", "--out", "s"]);
    assert_eq!(code(&out), 0);
    let scored = fs::read_to_string(dir.path().join("s/scored.csv")).unwrap();
    assert!(scored.starts_with("customer_id,r_code,f_code,m_code,combined\n"));
    assert!(scored.contains("c1,5,1,5,11"), "{scored}");
    assert!(dir.path().join("s/rules.json").exists());
}

#[test]
fn ingest_checks_sample_size() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tx.csv"), LOG).unwrap();
    fs::write(
        dir.path().join("s.csv"),
        "respondent_id,q1,q2,q3,q4,q5\nr1,4,4,5,3,4\nr2,2,3,3,2,2\n",
    )
    .unwrap();
    let out = run(
        dir.path(),
        &[
            "ingest",
            "--transactions",
            "tx.csv",
            "--survey",
            "s.csv",
            "--population",
            "235",
            "--analysis-date",
            "2015-01-31",
        ],
    );
    assert_eq!(code(&out), 0);
    let report = json(dir.path().join("ingest.json"));
    assert_eq!(report["required_sample"], 146);
    assert_eq!(report["sample_adequate"], false);
}

#[test]
fn bad_rows_are_skipped_unless_strict() {
    let dir = tempfile::tempdir().unwrap();
    let bad = format!("{LOG}c6,not-a-date,5\n");
    fs::write(dir.path().join("tx.csv"), bad).unwrap();
    let base = [
        "ingest",
        "--transactions",
        "tx.csv",
        "--analysis-date",
        "2015-01-31",
    ];
    let out = run(dir.path(), &base);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 8"));
    let report = json(dir.path().join("ingest.json"));
    assert_eq!(report["row_errors"].as_array().unwrap().len(), 1);

    let mut strict = base.to_vec();
    strict.push("--strict");
    let out = run(dir.path(), &strict);
    assert_eq!(code(&out), 1);
}

#[test]
fn validation_and_analysis_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Missing analysis date.
    fs::write(dir.path().join("tx.csv"), LOG).unwrap();
    assert_eq!(
        code(&run(dir.path(), &["ingest", "--transactions", "tx.csv"])),
        1
    );
    // Purchase after the analysis date.
    let out = run(
        dir.path(),
        &[
            "ingest",
            "--transactions",
            "tx.csv",
            "--analysis-date",
            "2015-01-01",
        ],
    );
    assert_eq!(code(&out), 1);
    // Empty cohort.
    fs::write(
        dir.path().join("empty.csv"),
        "customer_id,recency_days,frequency,monetary\n",
    )
    .unwrap();
    let out = run(dir.path(), &["pyramid", "--rfm", "empty.csv"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no records"));
    // Fewer distinct customers than pyramid classes is an analysis failure.
    fs::write(
        dir.path().join("few.csv"),
        "customer_id,recency_days,frequency,monetary\na,1,60,800000000\nb,1,60,800000000\nc,100,1,10\n",
    )
    .unwrap();
    assert_eq!(code(&run(dir.path(), &["pyramid", "--rfm", "few.csv"])), 2);
    // Hypothesis requested without its inputs.
    let out = run(dir.path(), &["compare", "--hypotheses", "h1"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn compare_reads_pyramid_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        code(&run(d, &["synth", "--kind", "planted", "--out", "a"])),
        0
    );
    assert_eq!(
        code(&run(
            d,
            &[
                "synth",
                "--kind",
                "planted",
                "--preset",
                "automotive",
                "--out",
                "b"
            ]
        )),
        0
    );
    assert_eq!(
        code(&run(
            d,
            &[
                "pyramid",
                "--scored",
                "a/scored.csv",
                "--cohort",
                "computer",
                "--out",
                "a"
            ]
        )),
        0
    );
    assert_eq!(
        code(&run(
            d,
            &[
                "pyramid",
                "--scored",
                "b/scored.csv",
                "--cohort",
                "auto",
                "--out",
                "b"
            ]
        )),
        0
    );
    let p = json(d.join("a/pyramid.json"));
    assert_eq!(p["n"], 1600);
    assert_eq!(p["classes"][0]["class"], "Platinum");
    assert_eq!(p["provenance"]["seed"], 20150131);

    let out = run(
        d,
        &[
            "compare",
            "--a-pyramid",
            "a/pyramid.json",
            "--b-pyramid",
            "b/pyramid.json",
            "--a-scored",
            "a/scored.csv",
            "--b-scored",
            "b/scored.csv",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let c = json(d.join("comparison.json"));
    assert_eq!(c["cohort_a"], "computer");
    assert_eq!(c["cohort_b"], "auto");
    assert!(c.get("h1").is_none());
    assert_eq!(c["h3"]["decision"], "accepted");
    assert_eq!(c["h2"]["test"], "student_t_independent");
    assert_eq!(c["provenance"]["inputs"].as_array().unwrap().len(), 4);

    let assignments = fs::read_to_string(d.join("a/assignments.csv")).unwrap();
    assert_eq!(assignments.lines().count(), 1601);
}

#[test]
fn validity_report_records_degenerate_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("respondent_id,q1,q2,q3,q4,q5\n");
    for i in 0..16 {
        csv.push_str(&format!("e{i},5,5,5,5,5\n"));
    }
    fs::write(dir.path().join("experts.csv"), csv).unwrap();
    let out = run(dir.path(), &["validate-survey", "--experts", "experts.csv"]);
    assert_eq!(code(&out), 0);
    let v = json(dir.path().join("validity.json"));
    assert_eq!(v["all_confirmed"], true);
    assert_eq!(v["alpha"], Value::Null);
    assert!(v["alpha_error"].is_string());
    assert_eq!(v["reliable"], false);
    let p = v["items"][0]["exact_p_two_tailed"].as_f64().unwrap();
    assert!((p - 2.0 / 65536.0).abs() < 1e-15);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::create_dir(d.join("cfg")).unwrap();
    fs::write(
        d.join("cfg/run.json"),
        r#"{"seed": 5, "out": "results", "significance": 0.01}"#,
    )
    .unwrap();
    assert_eq!(
        code(&run(d, &["synth", "--kind", "planted", "--out", "in"])),
        0
    );
    let out = run(
        d,
        &[
            "--config",
            "cfg/run.json",
            "pyramid",
            "--scored",
            "in/scored.csv",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(d.join("cfg/results/pyramid.json"))["seed"], 5);

    let out = run(
        d,
        &[
            "--config",
            "cfg/run.json",
            "--seed",
            "6",
            "--out",
            "o",
            "pyramid",
            "--scored",
            "in/scored.csv",
        ],
    );
    assert_eq!(code(&out), 0);
    assert_eq!(json(d.join("o/pyramid.json"))["seed"], 6);

    fs::write(d.join("cfg/bad.json"), r#"{"seeds": 5}"#).unwrap();
    assert_eq!(
        code(&run(
            d,
            &["--config", "cfg/bad.json", "synth", "--kind", "survey"]
        )),
        1
    );
}

#[test]
fn synth_transactions_aggregate_back() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(
        d,
        &[
            "synth",
            "--kind",
            "planted",
            "--transactions",
            "--analysis-date",
            "2015-01-31",
            "--out",
            "g",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(
        d,
        &[
            "score",
            "--transactions",
            "g/transactions.csv",
            "--analysis-date",
            "2015-01-31",
            "--out",
            "s",
        ],
    );
    assert_eq!(code(&out), 0);
    let mut a: Vec<String> = fs::read_to_string(d.join("g/scored.csv"))
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    let mut b: Vec<String> = fs::read_to_string(d.join("s/scored.csv"))
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    a.sort();
    b.sort();
    assert_eq!(a, b);
}

#[test]
fn quintile_scoring_balances_buckets() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("customer_id,recency_days,frequency,monetary\n");
    for i in 0..20 {
        csv.push_str(&format!("c{i:02},{},{},{}\n", i + 1, i + 1, (i + 1) * 1000));
    }
    fs::write(dir.path().join("r.csv"), csv).unwrap();
    let out = run(dir.path(), &["score", "--rfm", "r.csv", "--quintiles"]);
    assert_eq!(code(&out), 0);
    let scored = fs::read_to_string(dir.path().join("scored.csv")).unwrap();
    let mut per_code = [0; 6];
    for line in scored.lines().skip(1) {
        let m: usize = line.split(',').nth(3).unwrap().parse().unwrap();
        per_code[m] += 1;
    }
    assert_eq!(&per_code[1..], &[4, 4, 4, 4, 4]);
}
