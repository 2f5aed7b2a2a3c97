//! Machine-readable invariant reports.
//!
//! Every residual the library can measure ends up in an [`InvariantReport`]:
//! a two-level map from section name to check name to a
//! [`CheckEntry`] holding the measured residual, the tolerance it was held
//! to (absent for report-only measurements), the verdict, and a note
//! explaining what was measured. Sections and checks live in sorted maps
//! and serialize through [`serde_json`] with sorted keys, so two runs with
//! the same configuration and seed produce byte-identical JSON — the
//! serialized `checks` subtree is itself a determinism check.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Version string stamped into every report so downstream readers can
/// detect incompatible layouts.
pub const FORMAT_VERSION: &str = "1";

/// One measured check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    /// The measured value (a residual, a ratio, or a count cast to float).
    pub residual: f64,
    /// The threshold the value was held to; `None` marks a report-only
    /// measurement that cannot fail.
    pub tolerance: Option<f64>,
    /// Whether the check passed. Report-only and structural entries are
    /// always true; thresholded entries require a finite residual within
    /// tolerance.
    pub pass: bool,
    /// What was measured and why the tolerance is what it is.
    pub notes: String,
}

impl CheckEntry {
    /// A thresholded check: passes iff the residual is finite and at most
    /// the tolerance.
    pub fn thresholded(residual: f64, tolerance: f64, notes: impl Into<String>) -> Self {
        CheckEntry {
            residual,
            tolerance: Some(tolerance),
            pass: residual.is_finite() && residual <= tolerance,
            notes: notes.into(),
        }
    }

    /// A report-only measurement: recorded, never failing.
    pub fn reported(residual: f64, notes: impl Into<String>) -> Self {
        CheckEntry {
            residual,
            tolerance: None,
            pass: true,
            notes: notes.into(),
        }
    }

    /// A structural fact that holds by construction; carries a zero
    /// residual and an explanatory note.
    pub fn structural(notes: impl Into<String>) -> Self {
        CheckEntry {
            residual: 0.0,
            tolerance: None,
            pass: true,
            notes: notes.into(),
        }
    }
}

/// Report provenance: enough to reproduce the run exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    /// Hash of the canonical serialized configuration.
    pub config_hash: String,
    /// Spectral truncation.
    pub n: usize,
    /// Grid interval count.
    pub m: usize,
    /// Time horizon.
    pub t_end: f64,
    /// Probe / sampling seed.
    pub seed: u64,
    /// Report layout version.
    pub format_version: String,
}

/// A full report: metadata plus sections of named checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub meta: ReportMeta,
    /// section name → check name → entry, both levels sorted.
    pub checks: BTreeMap<String, BTreeMap<String, CheckEntry>>,
}

impl InvariantReport {
    /// An empty report for the given provenance.
    pub fn new(meta: ReportMeta) -> Self {
        InvariantReport {
            meta,
            checks: BTreeMap::new(),
        }
    }

    /// Insert a check, creating its section as needed. Re-inserting a name
    /// replaces the entry.
    pub fn insert(&mut self, section: &str, name: &str, entry: CheckEntry) {
        self.checks
            .entry(section.to_string())
            .or_default()
            .insert(name.to_string(), entry);
    }

    /// Whether every entry passes.
    pub fn all_pass(&self) -> bool {
        self.checks
            .values()
            .all(|section| section.values().all(|e| e.pass))
    }

    /// The (section, name) pairs of failing checks, in sorted order.
    pub fn failures(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (section, entries) in &self.checks {
            for (name, e) in entries {
                if !e.pass {
                    out.push((section.clone(), name.clone()));
                }
            }
        }
        out
    }

    /// Total number of checks.
    pub fn len(&self) -> usize {
        self.checks.values().map(|s| s.len()).sum()
    }

    /// Whether the report holds no checks.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The full report as pretty-printed JSON. Key order and float
    /// formatting are deterministic.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Only the `checks` subtree as compact JSON — the byte string two
    /// deterministic runs must agree on.
    pub fn checks_json(&self) -> String {
        serde_json::to_string(&self.checks).expect("report serialization cannot fail")
    }
}

// ═══════════════════════════════════════════════════════════════════════════

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> ReportMeta {
        ReportMeta {
            config_hash: "abc".to_string(),
            n: 4,
            m: 100,
            t_end: 1.0,
            seed: 0xE70F,
            format_version: FORMAT_VERSION.to_string(),
        }
    }

    #[test]
    fn test_report_entry_pass_semantics() {
        assert!(CheckEntry::thresholded(1e-5, 1e-4, "").pass);
        assert!(!CheckEntry::thresholded(1e-3, 1e-4, "").pass);
        assert!(!CheckEntry::thresholded(f64::NAN, 1e-4, "").pass);
        assert!(CheckEntry::reported(42.0, "just recorded").pass);
        let s = CheckEntry::structural("holds by construction");
        assert!(s.pass && s.residual == 0.0 && s.tolerance.is_none());
    }

    #[test]
    fn test_report_failures_and_all_pass() {
        let mut r = InvariantReport::new(meta());
        r.insert("a", "good", CheckEntry::thresholded(0.0, 1.0, ""));
        assert!(r.all_pass());
        r.insert("a", "bad", CheckEntry::thresholded(2.0, 1.0, ""));
        r.insert("b", "worse", CheckEntry::thresholded(3.0, 1.0, ""));
        assert!(!r.all_pass());
        assert_eq!(
            r.failures(),
            vec![
                ("a".to_string(), "bad".to_string()),
                ("b".to_string(), "worse".to_string())
            ]
        );
        assert_eq!(r.len(), 3);
    }

    #[test]
    fn test_report_json_round_trip_and_determinism() {
        let mut r = InvariantReport::new(meta());
        r.insert("zeta", "z", CheckEntry::reported(0.25, "note"));
        r.insert("alpha", "a", CheckEntry::thresholded(1e-9, 1e-6, "tight"));
        let json = r.to_json();
        let back: InvariantReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        // sorted sections: "alpha" serializes before "zeta"
        assert!(json.find("alpha").unwrap() < json.find("zeta").unwrap());
        // identical content → identical bytes
        assert_eq!(r.checks_json(), back.checks_json());
    }
}
