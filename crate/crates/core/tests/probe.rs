// Scratch probe for pipeline bring-up; superseded by the acceptance suite.

use prolong_core::problem::load_bundled;
use prolong_core::runner::{run, Command, RunOptions};

#[test]
fn probe_pullback() {
    let def = load_bundled("ishimori-compact").expect("load");
    let out = run(&def, Command::PullbackEquivalence, &RunOptions::default()).expect("run");
    println!("{}", out.report.human_summary());
    assert!(out.report.all_passed(), "pullback equivalence failed");
}

#[test]
fn probe_extract() {
    let def = load_bundled("ishimori-compact").expect("load");
    let out = run(&def, Command::Extract, &RunOptions::default()).expect("run");
    for r in &out.report.records {
        println!("{}", serde_json::to_string(r).unwrap());
    }
    assert!(out.report.all_passed(), "extract failed");
}

#[test]
fn probe_lemma() {
    let def = load_bundled("ishimori-compact").expect("load");
    let out = run(&def, Command::VerifyLemma, &RunOptions::default()).expect("run");
    println!("{}", out.report.human_summary());
    assert!(out.report.all_passed(), "verify-lemma failed");
}

#[test]
fn probe_relations() {
    let def = load_bundled("ishimori-compact").expect("load");
    let out = run(&def, Command::CollectRelations, &RunOptions::default()).expect("run");
    for r in &out.report.records {
        println!("{}", serde_json::to_string(r).unwrap());
    }
    assert!(out.report.all_passed(), "collect-relations failed");
}

#[test]
fn probe_realizations() {
    let def = load_bundled("ishimori-compact").expect("load");
    for cmd in [Command::VerifyRealizationSl2, Command::VerifyRealizationLoop] {
        let out = run(&def, cmd, &RunOptions::default()).expect("run");
        println!("{}", out.report.human_summary());
        assert!(out.report.all_passed(), "{:?} failed", cmd);
    }
}

#[test]
fn probe_closure_toy() {
    let def = load_bundled("toy-closed").expect("load");
    let out = run(&def, Command::ClosureCheck, &RunOptions::default()).expect("run");
    assert!(out.report.all_passed());
    let def = load_bundled("toy-nonclosed").expect("load");
    let out = run(&def, Command::ClosureCheck, &RunOptions::default()).expect("run");
    println!("{}", out.report.human_summary());
    assert!(!out.report.all_passed(), "toy-nonclosed must fail");
}

#[test]
fn probe_closure_ishimori() {
    let def = load_bundled("ishimori-compact").expect("load");
    let t = std::time::Instant::now();
    let out = run(&def, Command::ClosureCheck, &RunOptions::default()).expect("run");
    println!("elapsed: {:?}", t.elapsed());
    println!("{}", out.report.human_summary());
    assert!(out.report.all_passed(), "closure check failed");
}
