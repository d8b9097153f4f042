//! Markdown rendering of stored result records.

use crate::runner::ResultRecord;
use std::fmt::Write as _;

/// One-line statement of what each experiment provides evidence for.
fn claim(experiment: &str) -> &'static str {
    match experiment {
        "short_time" => {
            "Short-horizon diffusive limit: rescaled pinned polymer paths \
             approach the Brownian bridge."
        }
        "long_time" => "Long-horizon transversal spread grows with exponent near 2/3.",
        "p2l" => "Free-endpoint rescaled endpoint position approaches a standard normal.",
        "tails" => {
            "Centered, normalized log partition values keep a controlled \
             upper-tail exponent."
        }
        "stationarity" => "Parabola-corrected sheet values are invariant under spatial shifts.",
        "moc" => {
            "Rescaled paths obey a uniform modulus-of-continuity bound across \
             horizon scales."
        }
        "brownian_relation" => {
            "Partition-weighted quenched path functionals average to \
             Brownian-bridge expectations."
        }
        "gibbs" => {
            "Line-ensemble resampling preserves stochastic ordering under \
             floors and reproduces the free-bridge law without one."
        }
        "f_process" => {
            "The multi-segment free-energy process stays finite and tight \
             under long-horizon scaling."
        }
        _ => "Unrecognized experiment.",
    }
}

fn escape_cell(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', " ")
}

/// Render a markdown report over a set of result records.
pub fn emit_report(records: &[ResultRecord]) -> String {
    let mut out = String::new();
    out.push_str("# Directed-polymer lab report\n\n");
    let _ = writeln!(
        out,
        "{} result record{} found.\n",
        records.len(),
        if records.len() == 1 { "" } else { "s" }
    );

    out.push_str("| experiment | run id | checks | status |\n");
    out.push_str("|---|---|---|---|\n");
    for r in records {
        let passed = r.checks.iter().filter(|c| c.passed).count();
        let status = if r.all_checks_passed() { "pass" } else { "FAIL" };
        let _ = writeln!(
            out,
            "| {} | `{}` | {}/{} | {} |",
            r.experiment,
            r.config_hash,
            passed,
            r.checks.len(),
            status
        );
    }
    out.push('\n');

    for r in records {
        let _ = writeln!(out, "## {} — run `{}`\n", r.experiment, r.config_hash);
        let _ = writeln!(out, "{}\n", claim(&r.experiment));
        let _ = writeln!(
            out,
            "Master seed {}, {} worker{}, {:.1} s runtime.\n",
            r.metadata.master_seed,
            r.metadata.worker_count,
            if r.metadata.worker_count == 1 { "" } else { "s" },
            r.metadata.runtime_seconds
        );

        if r.checks.is_empty() {
            out.push_str("No built-in checks for this run.\n\n");
        } else {
            out.push_str("| check | verdict | observed | requirement |\n");
            out.push_str("|---|---|---|---|\n");
            for c in &r.checks {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} |",
                    escape_cell(&c.name),
                    if c.passed { "PASS" } else { "FAIL" },
                    escape_cell(&c.observed),
                    escape_cell(&c.requirement)
                );
            }
            out.push('\n');
        }

        if !r.metadata.warnings.is_empty() {
            out.push_str("Warnings:\n\n");
            for w in &r.metadata.warnings {
                let _ = writeln!(out, "- {w}");
            }
            out.push('\n');
        }

        if !r.outputs.is_empty() {
            out.push_str("Data files:\n\n");
            for f in &r.outputs {
                let _ = writeln!(out, "- `{f}`");
            }
            out.push('\n');
        }

        let aggregate = serde_json::to_string_pretty(&r.aggregate)
            .unwrap_or_else(|_| "<unserializable>".to_string());
        out.push_str("Aggregate statistics:\n\n```json\n");
        out.push_str(&aggregate);
        out.push_str("\n```\n\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::{Check, ResultRecord, RunMetadata};

    fn record(experiment: &str, passed: bool) -> ResultRecord {
        ResultRecord {
            config_hash: "deadbeefdeadbeef".to_string(),
            experiment: experiment.to_string(),
            aggregate: serde_json::json!({"mean": 0.5}),
            checks: vec![Check::new("demo", passed, "x = 1", "x <= 2")],
            metadata: RunMetadata {
                master_seed: 7,
                worker_count: 2,
                warnings: vec!["narrow grid".to_string()],
                runtime_seconds: 1.25,
                timestamp_unix: 0,
            },
            outputs: vec!["short_time-deadbeefdeadbeef-samples.csv".to_string()],
        }
    }

    #[test]
    fn report_contains_claims_verdicts_and_warnings() {
        let text = emit_report(&[record("short_time", true), record("gibbs", false)]);
        assert!(text.contains("Brownian bridge"));
        assert!(text.contains("stochastic ordering"));
        assert!(text.contains("| demo | PASS |"));
        assert!(text.contains("| demo | FAIL |"));
        assert!(text.contains("narrow grid"));
        assert!(text.contains("2 result records"));
        assert!(text.contains("`deadbeefdeadbeef`"));
    }

    #[test]
    fn every_known_experiment_has_a_claim() {
        for name in [
            "short_time",
            "long_time",
            "p2l",
            "tails",
            "stationarity",
            "moc",
            "brownian_relation",
            "gibbs",
            "f_process",
        ] {
            assert!(!claim(name).contains("Unrecognized"), "{name}");
        }
    }
}
