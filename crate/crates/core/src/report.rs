//! Machine-readable analysis report.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::program::CpProgram;
use crate::rational::{serde_rational_opt, Rational};
use crate::reduction::RdwMap;
use crate::runtime::roots::RootSummary;
use crate::runtime::{Analysis, CharPoly, ClosedForm, StageTiming};
use crate::termination::{RuntimeBounds, Verdict, VerdictKind};

/// SHA-256 of the canonical program text, hex encoded.
pub fn program_digest(prog: &CpProgram) -> String {
    format!("{:x}", Sha256::digest(prog.to_string().as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub program_digest: String,
    pub verdict: Verdict,
    /// Drift of the reduced walk; absent for trivial programs.
    #[serde(with = "serde_rational_opt")]
    pub drift: Option<Rational>,
    pub bounds: Option<RuntimeBounds>,
    pub closed_form: Option<ClosedForm>,
    pub rdw_map: RdwMap,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub random_walk: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub characteristic_polynomial: Option<CharPoly>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub roots: Option<Vec<RootSummary>>,
    pub precision_digits: u32,
    /// Wall-clock stage times; only on request, since they differ run to run.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings: Option<Vec<StageTiming>>,
}

impl AnalysisReport {
    pub fn new(prog: &CpProgram, analysis: &Analysis, emit_rdw: bool, timings: bool) -> Self {
        let trivial = analysis.verdict.kind == VerdictKind::Trivial;
        let solution = analysis.solution.as_ref();
        AnalysisReport {
            program_digest: program_digest(prog),
            verdict: analysis.verdict.clone(),
            drift: (!trivial).then(|| analysis.drift.clone()),
            bounds: analysis.bounds.clone(),
            closed_form: analysis.closed_form().cloned(),
            rdw_map: analysis.rdw.clone(),
            random_walk: emit_rdw.then(|| analysis.random_walk.to_string()),
            characteristic_polynomial: solution.map(|s| s.charpoly.clone()),
            roots: solution.map(|s| s.roots.roots.iter().map(RootSummary::from).collect()),
            precision_digits: analysis.precision.digits(),
            timings: timings.then(|| analysis.timings.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mp::Precision;
    use crate::parser::parse_program;
    use crate::runtime::analyze_cp;

    #[test]
    fn digest_ignores_formatting() {
        let a = parse_program("vars x\nwhile x > 0 { inc (-1) [1]; }").unwrap();
        let b = parse_program("# comment\nvars x\nwhile (1*x > 0) {\n  x += (-1) [1];\n}\n").unwrap();
        assert_eq!(program_digest(&a), program_digest(&b));
        assert_eq!(program_digest(&a).len(), 64);
    }

    #[test]
    fn report_round_trips() {
        let p = parse_program("vars x\nwhile x > 0 { inc (1) [1/4]; inc (-1) [3/4]; }").unwrap();
        let a = analyze_cp(&p, Precision::new(30)).unwrap();
        let r = AnalysisReport::new(&p, &a, true, false);
        let json = serde_json::to_string(&r).unwrap();
        assert!(!json.contains("timings"));
        let back: AnalysisReport = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
        assert_eq!(back.drift, Some(crate::rational::rat(-1, 2)));
    }

    #[test]
    fn closed_form_iff_past() {
        for (src, past) in [
            ("vars x\nwhile x > 0 { inc (1) [1/2]; inc (-1) [1/2]; }", false),
            ("vars x\nwhile x > 0 { inc (0) [1]; }", false),
            ("vars x\nwhile x > 0 { inc (-1) [1]; }", true),
        ] {
            let p = parse_program(src).unwrap();
            let r = AnalysisReport::new(&p, &analyze_cp(&p, Precision::new(30)).unwrap(), false, false);
            assert_eq!(r.closed_form.is_some(), past);
            assert_eq!(r.verdict.is_past(), past);
        }
    }
}
