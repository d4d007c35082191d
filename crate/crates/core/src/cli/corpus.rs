//! The embedded golden corpus: model files and their expected full reports.

use std::thread;

use serde_json::{json, Value};

use super::model_file::{escape, load_model};
use super::report;
use crate::potential::PairSpec;

pub struct CorpusEntry {
    pub name: &'static str,
    pub model: &'static str,
    pub expected: &'static str,
}

macro_rules! entry {
    ($name:literal) => {
        CorpusEntry {
            name: $name,
            model: include_str!(concat!("../../corpus/", $name, ".json")),
            expected: include_str!(concat!("../../corpus/expected/", $name, ".json")),
        }
    };
}

pub const CORPUS: &[CorpusEntry] = &[
    entry!("improvebp"),
    entry!("improvebp_2_4"),
    entry!("improvebp_3_5"),
    entry!("hirzebruch_1"),
    entry!("hirzebruch_2"),
    entry!("hirzebruch_3"),
    entry!("hirzebruch_5"),
    entry!("cubic_12_points"),
    entry!("klt_weak_del_pezzo"),
    entry!("lc_ruled_1_3"),
];

/// Decomposition of `-K` on every level plus the full report of the pair.
pub fn entry_report(entry: &CorpusEntry) -> Result<Value, String> {
    let loaded = load_model(entry.model).map_err(|e| e.to_string())?;
    let (level, delta) = loaded.pair_parts(None).map_err(|e| e.to_string())?;
    let pair = PairSpec::new(loaded.model.clone(), level, delta).map_err(|e| e.to_string())?;
    let classify = report::classify(&pair, &[]).map_err(|e| e.to_string())?;
    Ok(json!({
        "name": entry.name,
        "anticanonical_by_level": report::anticanonical_by_level(&loaded.model),
        "classify": classify,
    }))
}

/// Paths where `actual` departs from `expected`.
pub fn diff_json(expected: &Value, actual: &Value, path: &str, out: &mut Vec<String>) {
    match (expected, actual) {
        (Value::Object(e), Value::Object(a)) => {
            for (k, ev) in e {
                let p = format!("{path}/{}", escape(k));
                match a.get(k) {
                    Some(av) => diff_json(ev, av, &p, out),
                    None => out.push(format!("{p}: missing")),
                }
            }
            for k in a.keys().filter(|k| !e.contains_key(*k)) {
                out.push(format!("{path}/{}: unexpected", escape(k)));
            }
        }
        (Value::Array(e), Value::Array(a)) if e.len() == a.len() => {
            for (i, (ev, av)) in e.iter().zip(a).enumerate() {
                diff_json(ev, av, &format!("{path}/{i}"), out);
            }
        }
        _ if expected == actual => {}
        _ => out.push(format!("{path}: expected {expected}, got {actual}")),
    }
}

/// Evaluates every entry concurrently; results keep corpus order.
pub fn run_examples() -> (Value, bool) {
    let reports: Vec<Result<Value, String>> = thread::scope(|s| {
        let handles: Vec<_> = CORPUS.iter().map(|e| s.spawn(move || entry_report(e))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err("panicked".into()))).collect()
    });
    let mut entries = Vec::new();
    let mut failed = 0;
    for (entry, result) in CORPUS.iter().zip(reports) {
        let mut diffs = Vec::new();
        match (serde_json::from_str::<Value>(entry.expected), result) {
            (Ok(expected), Ok(actual)) => diff_json(&expected, &actual, "", &mut diffs),
            (Err(e), _) => diffs.push(format!("expected report unreadable: {e}")),
            (_, Err(e)) => diffs.push(format!("evaluation failed: {e}")),
        }
        if !diffs.is_empty() {
            failed += 1;
        }
        let status = if diffs.is_empty() { "ok" } else { "mismatch" };
        entries.push(json!({"name": entry.name, "status": status, "diffs": diffs}));
    }
    let out = json!({
        "command": "examples",
        "entries": entries,
        "passed": CORPUS.len() - failed,
        "failed": failed,
    });
    (out, failed == 0)
}
