//! Text formats for an explored graph and for the channel table.
//!
//! Graph file:
//!
//! ```text
//! graph states <n> transitions <m> partial <bool>
//! node <id> depth <d> [terminated] [divergent] [unexpanded]
//!   <component>: <position> [<var>=<value>, ...]
//! edge <source> <target> <event>
//! ```
//!
//! Nodes come first, in id order, then edges grouped by source. Component
//! lines show only components whose local state differs from the parent's.

use std::fmt::Write;

use crate::checker::{StateGraph, StateSummary};
use crate::kernel::Composition;

pub fn graph_text(comp: &Composition, g: &StateGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "graph states {} transitions {} partial {}",
        g.state_count(),
        g.edge_count(),
        g.partial
    );
    for s in 0..g.state_count() as u32 {
        let info = &g.info[s as usize];
        let mut flags = String::new();
        if info.terminated {
            flags.push_str(" terminated");
        }
        if info.divergent {
            flags.push_str(" divergent");
        }
        if !info.expanded {
            flags.push_str(" unexpanded");
        }
        let _ = writeln!(out, "node {s} depth {}{flags}", info.depth);
        let summary = StateSummary::of(comp, &g.state(s));
        let parent = info
            .parent
            .map(|(p, _)| StateSummary::of(comp, &g.state(p)));
        for (i, c) in summary.components.iter().enumerate() {
            if parent.as_ref().is_some_and(|p| p.components[i] == *c) {
                continue;
            }
            let store: Vec<String> = c.store.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let store = if store.is_empty() {
                String::new()
            } else {
                format!(" [{}]", store.join(", "))
            };
            let _ = writeln!(out, "  {}: {}{store}", c.id, c.position);
        }
    }
    for s in 0..g.state_count() as u32 {
        for &(l, t) in g.successors(s) {
            let _ = writeln!(out, "edge {s} {t} {}", g.label(l));
        }
    }
    out
}

/// One line per channel: `name(field: domain, ...)` and the components that
/// synchronise on it, or `solo` for channels performed alone.
pub fn channel_text(comp: &Composition) -> String {
    let mut out = String::new();
    let sync = comp.sync_map();
    for decl in comp.channels.iter() {
        let fields: Vec<String> = decl
            .fields
            .iter()
            .map(|(n, d)| format!("{n}: {}", d.describe()))
            .collect();
        let users = if comp.interleaved.contains(&decl.name) {
            "solo".to_string()
        } else {
            sync.get(&decl.name)
                .map(|v| v.join(" "))
                .unwrap_or_default()
        };
        let _ = writeln!(out, "{}({}) : {users}", decl.name, fields.join(", "));
    }
    out
}
