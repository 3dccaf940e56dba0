mod common;

use std::path::{Path, PathBuf};

use curriculum::formats;
use curriculum::pacing::PacingConfig;
use curriculum::scheduler::{build_schedule, ScheduleConfig};
use curriculum::scoring::{score_dataset, ScorerKind, ScoringResources};
use tempfile::TempDir;

use common::{cli_ok, run_cli, separable_dataset, write_dataset};

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new(n: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&separable_dataset(n, 4), &dir.path().join("d.jsonl"));
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }
}

fn code(args: &[&str]) -> Option<i32> {
    run_cli(args).status.code()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["--version"]), Some(0));
    assert_eq!(code(&["analyze", "--help"]), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let f = Fixture::new(5);
    let out = run_cli(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert_eq!(
        code(&["score", "--scorer", "nope", "--data", &f.arg("d.jsonl")]),
        Some(1)
    );
    assert_eq!(
        code(&["score", "--scorer", "sigma_sm", "--data", &f.arg("d.jsonl")]),
        Some(1)
    );
    assert_eq!(
        code(&["score", "--scorer", "model_pred", "--data", "missing.jsonl"]),
        Some(1)
    );
    assert_eq!(
        code(&[
            "schedule", "--scores", "x.tsv", "--pacing", "step", "--steps", "10", "--batch", "2",
            "--delta", "0"
        ]),
        Some(1)
    );
    assert_eq!(
        code(&[
            "analyze",
            "buckets",
            "--data",
            "d",
            "--run",
            "r",
            "--by",
            "difficulty"
        ]),
        Some(1)
    );
}

#[test]
fn data_errors_exit_two() {
    let f = Fixture::new(5);
    assert_eq!(code(&["stats", "--data", &f.arg("absent.jsonl")]), Some(2));
    std::fs::write(f.path("bad.jsonl"), "{not json\n").unwrap();
    let out = run_cli(&["stats", "--data", &f.arg("bad.jsonl")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    std::fs::write(f.path("s.tsv"), "q0000\t1.0\nunknown\t2.0\n").unwrap();
    let run = f.arg("run.tsv");
    std::fs::write(&run, "").unwrap();
    assert_eq!(
        code(&["evaluate", "--data", &f.arg("d.jsonl"), "--run", &run]),
        Some(2)
    );
}

#[test]
fn score_output_is_sorted_tsv() {
    let f = Fixture::new(30);
    cli_ok(&[
        "score",
        "--scorer",
        "n_turns",
        "--data",
        &f.arg("d.jsonl"),
        "--out",
        &f.arg("s.tsv"),
    ])
    .unwrap();
    let text = std::fs::read_to_string(f.path("s.tsv")).unwrap();
    let rows: Vec<(String, f64)> = text
        .lines()
        .map(|l| {
            let (id, v) = l.split_once('\t').unwrap();
            (id.to_string(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 30);
    assert!(rows
        .windows(2)
        .all(|w| (w[0].1, &w[0].0) <= (w[1].1, &w[1].0)));
}

#[test]
fn schedule_has_one_line_per_step() {
    let f = Fixture::new(50);
    cli_ok(&[
        "score",
        "--scorer",
        "avg_r_words",
        "--data",
        &f.arg("d.jsonl"),
        "--out",
        &f.arg("s.tsv"),
    ])
    .unwrap();
    let out = cli_ok(&[
        "schedule",
        "--scores",
        &f.arg("s.tsv"),
        "--pacing",
        "root_n",
        "--n",
        "2",
        "--delta",
        "0.33",
        "--steps",
        "1000",
        "--batch",
        "8",
    ])
    .unwrap();
    assert_eq!(out.lines().count(), 1000);
    let first: serde_json::Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(first["step"], 0);
    assert_eq!(first["ids"].as_array().unwrap().len(), 8);
}

#[test]
fn score_file_round_trip_matches_in_process_pipeline() {
    let f = Fixture::new(40);
    let d = separable_dataset(40, 4);
    cli_ok(&[
        "--seed",
        "9",
        "score",
        "--scorer",
        "random",
        "--data",
        &f.arg("d.jsonl"),
        "--out",
        &f.arg("s.tsv"),
    ])
    .unwrap();
    let cli_sched = cli_ok(&[
        "--seed",
        "9",
        "schedule",
        "--scores",
        &f.arg("s.tsv"),
        "--pacing",
        "geom_progression",
        "--steps",
        "120",
        "--batch",
        "4",
    ])
    .unwrap();

    let scored = score_dataset(
        &d,
        ScorerKind::Random,
        &ScoringResources::<f64>::default().with_seed(9),
    )
    .unwrap();
    assert_eq!(
        std::fs::read_to_string(f.path("s.tsv")).unwrap(),
        formats::scores_to_tsv(&scored)
    );
    let t = PacingConfig::<f64>::cl_steps_for(120, 0.9);
    let pacing =
        PacingConfig::new(curriculum::pacing::PacingKind::GeomProgression, 0.33, t).unwrap();
    let sched = build_schedule(&scored, &ScheduleConfig::new(4, 120, 9, pacing).unwrap()).unwrap();
    assert_eq!(
        cli_sched,
        formats::schedule_to_jsonl(&sched.batches).unwrap()
    );
}

fn pipeline(f: &Fixture, seed: &str, tag: &str) -> Vec<String> {
    let file = |n: &str| f.arg(&format!("{tag}-{n}"));
    let mut outputs = Vec::new();
    cli_ok(&[
        "--seed",
        seed,
        "score",
        "--scorer",
        "random",
        "--data",
        &f.arg("d.jsonl"),
        "--out",
        &file("s.tsv"),
    ])
    .unwrap();
    cli_ok(&[
        "--seed",
        seed,
        "schedule",
        "--scores",
        &file("s.tsv"),
        "--pacing",
        "step",
        "--steps",
        "60",
        "--batch",
        "4",
        "--out",
        &file("sched.jsonl"),
    ])
    .unwrap();
    outputs.push(
        cli_ok(&[
            "--seed",
            seed,
            "simulate",
            "--data",
            &f.arg("d.jsonl"),
            "--schedule",
            &file("sched.jsonl"),
            "--pair-mode",
            "balanced_pairs",
            "--eval-every",
            "20",
            "--run-out",
            &file("run.tsv"),
        ])
        .unwrap(),
    );
    for name in ["s.tsv", "sched.jsonl", "run.tsv"] {
        outputs.push(std::fs::read_to_string(Path::new(&file(name))).unwrap());
    }
    outputs
}

#[test]
fn commands_are_deterministic_under_a_seed() {
    let f = Fixture::new(30);
    let a = pipeline(&f, "5", "a");
    let b = pipeline(&f, "5", "b");
    let c = pipeline(&f, "6", "c");
    assert_eq!(a, b);
    assert_ne!(a[1], c[1]);
}

#[test]
fn evaluate_reports_map_and_comparison() {
    let f = Fixture::new(20);
    // a run scoring the relevant candidate highest, and one that ignores it
    let d = separable_dataset(20, 4);
    let mut good = String::new();
    let mut bad = String::new();
    for inst in &d.instances {
        for (j, c) in inst.candidates.iter().enumerate() {
            good.push_str(&format!("{}\t{j}\t{}\n", inst.id, c.label));
            bad.push_str(&format!("{}\t{j}\t{}\n", inst.id, 10 - j));
        }
    }
    std::fs::write(f.path("good.tsv"), good).unwrap();
    std::fs::write(f.path("bad.tsv"), bad).unwrap();
    let report = cli_ok(&[
        "evaluate",
        "--data",
        &f.arg("d.jsonl"),
        "--run",
        &f.arg("good.tsv"),
    ])
    .unwrap();
    let json: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(json["map"], 1.0);
    assert_eq!(json["count"], 20);

    let cmp = cli_ok(&[
        "evaluate",
        "--data",
        &f.arg("d.jsonl"),
        "--run",
        &f.arg("good.tsv"),
        "--baseline",
        &f.arg("bad.tsv"),
    ])
    .unwrap();
    let json: serde_json::Value = serde_json::from_str(&cmp).unwrap();
    assert!(json["t_stat"].as_f64().unwrap() > 0.0);
    assert!(json["p_value"].as_f64().unwrap() < 0.01);

    let table = cli_ok(&[
        "evaluate",
        "--text",
        "--data",
        &f.arg("d.jsonl"),
        "--run",
        &f.arg("good.tsv"),
    ])
    .unwrap();
    assert!(
        table.contains("1.0000") || table.contains("1.000"),
        "{table}"
    );
}

#[test]
fn analyze_subcommands() {
    let f = Fixture::new(24);
    let d = separable_dataset(24, 4);
    let mut run = String::new();
    for inst in &d.instances {
        for (j, c) in inst.candidates.iter().enumerate() {
            run.push_str(&format!(
                "{}\t{j}\t{}\n",
                inst.id,
                c.label as f64 + j as f64 * 0.1
            ));
        }
    }
    std::fs::write(f.path("run.tsv"), run).unwrap();
    for scorer in ["n_turns", "avg_u_words", "avg_r_words"] {
        cli_ok(&[
            "score",
            "--scorer",
            scorer,
            "--data",
            &f.arg("d.jsonl"),
            "--out",
            &f.arg(&format!("{scorer}.tsv")),
        ])
        .unwrap();
    }
    let buckets = cli_ok(&[
        "analyze",
        "buckets",
        "--data",
        &f.arg("d.jsonl"),
        "--run",
        &f.arg("run.tsv"),
        "--by",
        "difficulty",
        "--scores",
        &f.arg("n_turns.tsv"),
    ])
    .unwrap();
    let json: serde_json::Value = serde_json::from_str(&buckets).unwrap();
    for b in ["0-33%", "33-66%", "66-100%"] {
        assert_eq!(json["per_bucket"][b]["count"], 8, "{buckets}");
    }

    let csv = cli_ok(&[
        "analyze",
        "correlation",
        "--scores",
        &f.arg("n_turns.tsv"),
        &f.arg("avg_u_words.tsv"),
        &f.arg("avg_r_words.tsv"),
        "--method",
        "pearson",
    ])
    .unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scorer,n_turns,avg_u_words,avg_r_words"
    );
    assert_eq!(lines.count(), 3);

    let noisy = cli_ok(&[
        "analyze",
        "noisy",
        "--data",
        &f.arg("d.jsonl"),
        "--scores",
        &f.arg("n_turns.tsv"),
        "--fraction",
        "1",
    ])
    .unwrap();
    assert_eq!(noisy.trim().parse::<f64>().unwrap(), 0.0, "{noisy}");
}

#[test]
fn stats_and_validate() {
    let f = Fixture::new(10);
    let stats = cli_ok(&["stats", "--data", &f.arg("d.jsonl")]).unwrap();
    let json: serde_json::Value = serde_json::from_str(&stats).unwrap();
    assert_eq!(json["num_instances"], 10);
    assert_eq!(json["num_pairs"], 40);

    std::fs::write(
        f.path("v.tsv"),
        "1\thello\thi\n1\thello\tyo\n0\tagain\tnope\n0\tagain\tno\n",
    )
    .unwrap();
    let out = cli_ok(&["validate", "--data", &f.arg("v.tsv")]).unwrap();
    let mut rows: Vec<&str> = out.lines().collect();
    rows.sort();
    assert_eq!(rows, ["line-1\tmultiple positives", "line-3\tno positive"]);
}
