//! The `greenreq` binary: subcommands, output and exit codes.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::Fixture;
use greenreq_workbench::error::exit;

fn greenreq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_greenreq"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn steps_out_of_order_exit_with_stage_order() {
    let f = Fixture::batch();
    let o = greenreq(f.dir.path(), &["classify"]);
    assert_eq!(code(&o), exit::STAGE_ORDER);
    assert_eq!(code(&greenreq(f.dir.path(), &["init"])), exit::OK);
    assert_eq!(
        code(&greenreq(f.dir.path(), &["relate"])),
        exit::STAGE_ORDER
    );
}

#[test]
fn batch_run_reaches_complete() {
    let f = Fixture::batch();
    let o = greenreq(f.dir.path(), &["run"]);
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
    let status = stdout(&greenreq(f.dir.path(), &["status"]));
    assert!(status.contains("stage: Complete"), "{status}");
    assert!(status.contains("pending reviews: 0"));
    let again = greenreq(f.dir.path(), &["run"]);
    assert_eq!(code(&again), exit::OK);
    assert!(stdout(&again).contains("up to date"));
}

#[test]
fn audits_print_summaries() {
    let f = Fixture::batch();
    assert_eq!(code(&greenreq(f.dir.path(), &["run"])), exit::OK);
    let trust = stdout(&greenreq(f.dir.path(), &["audit", "trust"]));
    assert_eq!(trust.trim(), "catalog-referred: 3 (75%), own-reasoning: 1");
    let consistency = stdout(&greenreq(f.dir.path(), &["audit", "consistency"]));
    assert_eq!(consistency.trim(), "runs: 3, pairs: 4, agreement: 4 (100%)");
    let check = greenreq(f.dir.path(), &["check"]);
    assert!(stdout(&check).contains("satisfied: 2, unsatisfied: 2 (incomplete)"));
    let report = greenreq(f.dir.path(), &["report"]);
    assert_eq!(code(&report), exit::OK);
    assert!(f.artifacts().join("report.md").is_file());
}

#[test]
fn undecided_run_waits_then_decide_resumes() {
    let f = Fixture::undecided();
    let o = greenreq(f.dir.path(), &["run"]);
    assert_eq!(code(&o), exit::AWAITING_REVIEW);
    assert!(stdout(&o).contains("mini-home.sr.r1"));

    let listed = stdout(&greenreq(f.dir.path(), &["reviews"]));
    assert!(
        listed.starts_with("mini-home.sr.r1  SRApproval"),
        "{listed}"
    );

    let missing = greenreq(
        f.dir.path(),
        &["decide", "mini-home.sr.r1", "--action", "request-changes"],
    );
    assert_eq!(code(&missing), exit::DECISION);

    let o = greenreq(
        f.dir.path(),
        &[
            "decide",
            "mini-home.sr.r1",
            "--action",
            "approve",
            "--reviewer",
            "ana",
        ],
    );
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("recorded mini-home.sr.r1.d1"));

    let again = greenreq(
        f.dir.path(),
        &["decide", "mini-home.sr.r1", "--action", "approve"],
    );
    assert_eq!(code(&again), exit::DECISION);

    let o = greenreq(f.dir.path(), &["run"]);
    assert_eq!(code(&o), exit::AWAITING_REVIEW);
    assert!(stdout(&o).contains("mini-home.rev.FR2~SR2.r1"));
}

#[test]
fn bad_config_exits_with_config() {
    let f = Fixture::batch();
    f.edit_config(|_| "project_id = [".into());
    assert_eq!(code(&greenreq(f.dir.path(), &["status"])), exit::CONFIG);
    let o = greenreq(f.dir.path(), &["--config", "nowhere.toml", "status"]);
    assert_eq!(code(&o), exit::CONFIG);
    f.edit_config(|_| String::new());
    assert_eq!(code(&greenreq(f.dir.path(), &["status"])), exit::CONFIG);
}

#[test]
fn unknown_flags_are_usage_errors() {
    let f = Fixture::batch();
    assert_eq!(
        code(&greenreq(f.dir.path(), &["run", "--bogus"])),
        exit::USAGE
    );
    assert_eq!(code(&greenreq(f.dir.path(), &["frobnicate"])), exit::USAGE);
}

#[test]
fn calibrate_prints_sweep_and_selection() {
    let f = Fixture::batch();
    assert_eq!(code(&greenreq(f.dir.path(), &["run"])), exit::OK);
    std::fs::write(
        f.dir.path().join("pairs.csv"),
        "text_a,text_b,label\n\
         Record video clips when motion is detected,Keep recorded video only as long as needed,1\n\
         The hub shall pair with new sensors,Residents adjust the thermostat by voice,0\n",
    )
    .unwrap();
    let o = greenreq(f.dir.path(), &["calibrate", "--pairs", "pairs.csv"]);
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("0.")).count(), 9);
    assert!(out.contains("selected: "));
}
