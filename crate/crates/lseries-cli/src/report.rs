//! Report types for the verification campaign and their JSON/table
//! rendering.  Field order is fixed by the struct declarations, so the
//! serialized form is stable.

use serde::Serialize;

use crate::SCHEMA;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseStatus {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "skipped-precondition")]
    SkippedPrecondition,
}

/// One executed check.  `measured_error <= tolerance` if and only if the
/// status is `pass`; skipped cases carry no measurement.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyCase {
    pub module: &'static str,
    pub case: String,
    pub params: serde_json::Value,
    pub expected: &'static str,
    pub tolerance: f64,
    pub status: CaseStatus,
    pub measured_error: Option<f64>,
}

impl VerifyCase {
    /// Resolve the status from a measurement, keeping the invariant tying
    /// `pass` to `measured_error <= tolerance`.
    pub fn graded(
        module: &'static str,
        case: String,
        params: serde_json::Value,
        expected: &'static str,
        tolerance: f64,
        measured: f64,
    ) -> Self {
        let status = if measured <= tolerance { CaseStatus::Pass } else { CaseStatus::Fail };
        VerifyCase {
            module,
            case,
            params,
            expected,
            tolerance,
            status,
            measured_error: Some(measured),
        }
    }

    pub fn skipped(
        module: &'static str,
        case: String,
        params: serde_json::Value,
        expected: &'static str,
        tolerance: f64,
    ) -> Self {
        VerifyCase {
            module,
            case,
            params,
            expected,
            tolerance,
            status: CaseStatus::SkippedPrecondition,
            measured_error: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Campaign {
    pub schema: u32,
    pub seed: u64,
    /// Configured worker degree (0 = library default); recorded as
    /// configured so the report bytes do not depend on the machine.
    pub parallelism: usize,
    pub summary: Summary,
    pub cases: Vec<VerifyCase>,
}

impl Campaign {
    pub fn assemble(seed: u64, parallelism: usize, cases: Vec<VerifyCase>) -> Campaign {
        let mut summary = Summary { total: cases.len(), pass: 0, fail: 0, skipped: 0 };
        for c in &cases {
            match c.status {
                CaseStatus::Pass => summary.pass += 1,
                CaseStatus::Fail => summary.fail += 1,
                CaseStatus::SkippedPrecondition => summary.skipped += 1,
            }
        }
        Campaign { schema: SCHEMA, seed, parallelism, summary, cases }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.fail == 0
    }

    /// Fixed-width human-readable table, one row per case.
    pub fn table(&self) -> String {
        let mut width = "case".len();
        for c in &self.cases {
            width = width.max(c.module.len() + 1 + c.case.len());
        }
        let mut out = String::new();
        out.push_str(&format!(
            "{:<width$}  {:<7}  {:>9}  {:>12}\n",
            "case", "status", "tol", "error"
        ));
        for c in &self.cases {
            let status = match c.status {
                CaseStatus::Pass => "pass",
                CaseStatus::Fail => "FAIL",
                CaseStatus::SkippedPrecondition => "skip",
            };
            let measured = match c.measured_error {
                Some(e) => format!("{e:.3e}"),
                None => "-".to_string(),
            };
            out.push_str(&format!(
                "{:<width$}  {:<7}  {:>9}  {:>12}\n",
                format!("{}.{}", c.module, c.case),
                status,
                format!("{:.1e}", c.tolerance),
                measured,
            ));
        }
        out.push_str(&format!(
            "{} cases: {} pass, {} fail, {} skipped\n",
            self.summary.total, self.summary.pass, self.summary.fail, self.summary.skipped
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grading_matches_the_invariant() {
        let pass = VerifyCase::graded("m", "c".into(), serde_json::json!({}), "x", 1e-6, 1e-9);
        assert_eq!(pass.status, CaseStatus::Pass);
        let fail = VerifyCase::graded("m", "c".into(), serde_json::json!({}), "x", 1e-6, 1e-3);
        assert_eq!(fail.status, CaseStatus::Fail);
        // exact cases: zero tolerance passes only a zero defect
        let exact = VerifyCase::graded("m", "c".into(), serde_json::json!({}), "x", 0.0, 0.0);
        assert_eq!(exact.status, CaseStatus::Pass);

        let report = Campaign::assemble(3, 0, vec![pass, fail, exact]);
        assert_eq!(report.summary.pass, 2);
        assert_eq!(report.summary.fail, 1);
        assert!(!report.all_pass());
        assert!(report.table().contains("FAIL"));
    }
}
