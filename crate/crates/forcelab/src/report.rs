//! The JSON report.

use serde::Serialize;

pub const SCHEMA: &str = "forcelab-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    SkippedBudget,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Row {
    pub claim: String,
    pub anchor: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<u8>,
    pub status: Status,
    pub checked: u64,
    pub counterexample: Option<String>,
    /// Wall-clock time; left out unless asked for, so reports stay byte-identical.
    pub runtime_ms: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub skipped_budget: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub suite: String,
    pub config: serde_json::Value,
    pub notes: Vec<String>,
    pub rows: Vec<Row>,
    pub summary: Summary,
}

impl Report {
    pub fn new(suite: impl Into<String>, config: serde_json::Value, notes: Vec<String>, rows: Vec<Row>) -> Report {
        let mut summary = Summary::default();
        for r in &rows {
            match r.status {
                Status::Pass => summary.pass += 1,
                Status::Fail => summary.fail += 1,
                Status::SkippedBudget => summary.skipped_budget += 1,
            }
        }
        Report {
            schema: SCHEMA,
            suite: suite.into(),
            config,
            notes,
            rows,
            summary,
        }
    }

    pub fn ok(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}
