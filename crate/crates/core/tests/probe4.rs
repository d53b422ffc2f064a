use prolong_core::problem::load_bundled;
use prolong_core::runner::{run, Command, RunOptions};

#[test]
fn full_compact() {
    let def = load_bundled("ishimori-compact").expect("load");
    let t = std::time::Instant::now();
    let out = run(&def, Command::All, &RunOptions { points: 20, ..Default::default() }).expect("run");
    println!("elapsed {:?}", t.elapsed());
    let s = out.report.human_summary();
    let fails: Vec<&str> = s.lines().filter(|l| !l.contains("pass")).collect();
    println!("non-pass lines:\n{}", fails.join("\n"));
    assert!(out.report.all_passed());
}

#[test]
fn full_noncompact() {
    let def = load_bundled("ishimori-noncompact").expect("load");
    let t = std::time::Instant::now();
    let out = run(&def, Command::All, &RunOptions { points: 20, ..Default::default() }).expect("run");
    println!("elapsed {:?}", t.elapsed());
    let s = out.report.human_summary();
    let fails: Vec<&str> = s.lines().filter(|l| !l.contains("pass")).collect();
    println!("non-pass lines:\n{}", fails.join("\n"));
    assert!(out.report.all_passed());
}

#[test]
fn full_symbolic() {
    let def = load_bundled("ishimori-symbolic").expect("load");
    let t = std::time::Instant::now();
    let out = run(&def, Command::All, &RunOptions { points: 20, ..Default::default() }).expect("run");
    println!("elapsed {:?}", t.elapsed());
    let s = out.report.human_summary();
    let fails: Vec<&str> = s.lines().filter(|l| !l.contains("pass")).collect();
    println!("non-pass lines:\n{}", fails.join("\n"));
    assert!(out.report.all_passed());
}
