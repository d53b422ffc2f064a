//! Machine-readable run reports: line-delimited JSON records plus a human
//! summary. Re-running with identical inputs and seed yields byte-identical
//! records except the `timing` record.

use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
pub enum Record {
    Header {
        command: String,
        problem: String,
        engine_version: String,
        seed: u64,
    },
    Check {
        name: String,
        verdict: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        detail: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        certificate: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        witness: Option<String>,
    },
    Note {
        name: String,
        text: String,
    },
    Summary {
        passed: usize,
        failed: usize,
        inconclusive: usize,
        verdict: String,
    },
    Timing {
        elapsed_ms: u128,
    },
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub records: Vec<Record>,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
}

impl Report {
    pub fn header(&mut self, command: &str, problem: &str, seed: u64) {
        self.records.push(Record::Header {
            command: command.into(),
            problem: problem.into(),
            engine_version: env!("CARGO_PKG_VERSION").into(),
            seed,
        });
    }

    pub fn check(&mut self, name: &str, ok: bool, detail: Option<String>) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        self.records.push(Record::Check {
            name: name.into(),
            verdict: if ok { "pass".into() } else { "fail".into() },
            detail,
            certificate: None,
            witness: None,
        });
    }

    pub fn check_full(
        &mut self,
        name: &str,
        verdict: &str,
        detail: Option<String>,
        certificate: Option<String>,
        witness: Option<String>,
    ) {
        match verdict {
            "pass" => self.passed += 1,
            "inconclusive" => self.inconclusive += 1,
            _ => self.failed += 1,
        }
        self.records.push(Record::Check {
            name: name.into(),
            verdict: verdict.into(),
            detail,
            certificate,
            witness,
        });
    }

    pub fn note(&mut self, name: &str, text: &str) {
        self.records.push(Record::Note {
            name: name.into(),
            text: text.into(),
        });
    }

    pub fn finish(&mut self) {
        self.records.push(Record::Summary {
            passed: self.passed,
            failed: self.failed,
            inconclusive: self.inconclusive,
            verdict: if self.all_passed() { "pass" } else { "fail" }.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    /// Serialized records, one JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serialization"));
            out.push('\n');
        }
        out
    }

    /// Same, with timing records stripped (the determinism contract).
    pub fn to_jsonl_stable(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            if matches!(r, Record::Timing { .. }) {
                continue;
            }
            out.push_str(&serde_json::to_string(r).expect("record serialization"));
            out.push('\n');
        }
        out
    }

    pub fn human_summary(&self) -> String {
        let mut lines = Vec::new();
        for r in &self.records {
            match r {
                Record::Check {
                    name,
                    verdict,
                    detail,
                    ..
                } => {
                    let extra = detail
                        .as_ref()
                        .map(|d| format!(" ({d})"))
                        .unwrap_or_default();
                    lines.push(format!("[{verdict:>12}] {name}{extra}"));
                }
                Record::Summary {
                    passed,
                    failed,
                    inconclusive,
                    verdict,
                } => {
                    lines.push(format!(
                        "{passed} passed, {failed} failed, {inconclusive} inconclusive -> {verdict}"
                    ));
                }
                _ => {}
            }
        }
        lines.join("\n")
    }
}
