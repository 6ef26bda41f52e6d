use std::fmt::Write;

use crate::checker::{Report, StateSummary, Status, Verdict};

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

/// A failure anywhere wins over an inconclusive verdict.
pub fn exit_status(verdicts: &[Verdict]) -> i32 {
    if verdicts.iter().any(|v| v.status == Status::Fails) {
        EXIT_FAILS
    } else if verdicts.iter().any(|v| v.status == Status::Inconclusive) {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_HOLDS
    }
}

pub fn structured(r: &Report) -> String {
    serde_json::to_string_pretty(r).expect("report serializes") + "\n"
}

pub fn human(r: &Report, elapsed_ms: u128) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", r.program);
    let _ = writeln!(
        out,
        "{} states, {} transitions, depth {}, {} ms{}",
        r.states,
        r.transitions,
        r.depth,
        elapsed_ms,
        if r.partial {
            " (partial: a limit was reached)"
        } else {
            ""
        }
    );
    let width = r
        .verdicts
        .iter()
        .map(|v| v.property.len())
        .max()
        .unwrap_or(0);
    for v in &r.verdicts {
        let _ = writeln!(out, "  {:width$}  {}", v.property, v.status);
        if let Some(cx) = &v.counterexample {
            let _ = writeln!(out, "    trace ({} steps):", cx.trace.len());
            for (i, e) in cx.trace.iter().enumerate() {
                let _ = writeln!(out, "      {:>4}  {e}", i + 1);
            }
            out.push_str(&state_text(&cx.final_state, "    "));
        }
    }
    out
}

pub fn state_text(s: &StateSummary, indent: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{indent}final state:");
    for c in &s.components {
        let store = if c.store.is_empty() {
            String::new()
        } else {
            let fields: Vec<String> = c.store.iter().map(|(k, v)| format!("{k}={v}")).collect();
            format!("  [{}]", fields.join(", "))
        };
        let _ = writeln!(out, "{indent}  {}: {}{store}", c.id, c.position);
    }
    for m in &s.monitors {
        let queue = |q: &std::collections::BTreeMap<u8, Vec<String>>| {
            q.iter()
                .rev()
                .map(|(p, ts)| format!("{p}:{}", ts.join(" ")))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(
            out,
            "{indent}  monitor {}: holder {} depth {}, entry [{}], waiting [{}]",
            m.object,
            m.holder.as_deref().unwrap_or("none"),
            m.depth,
            queue(&m.entry_queue),
            queue(&m.wait_set)
        );
    }
    out
}
