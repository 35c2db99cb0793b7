// SPDX-License-Identifier: Apache-2.0

// The committed micro-corpus fixtures must be exactly what the scripted
// recorder produces today. Set TBGEN_REGENERATE_FIXTURES=1 to rewrite them
// after a prompt change.

mod common;

use std::collections::BTreeMap;
use std::path::Path;

fn snapshot(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    if let Ok(rd) = std::fs::read_dir(dir) {
        for e in rd.flatten() {
            out.insert(e.file_name().to_string_lossy().into_owned(), std::fs::read_to_string(e.path()).unwrap());
        }
    }
    out
}

#[test]
fn recorded_fixtures_match_committed() {
    if common::verilator().is_none() {
        eprintln!("skipping: fixtures cannot be re-recorded without verilator");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let (llm, rt) = (tmp.path().join("llm"), tmp.path().join("runtime"));
    let verdicts = common::record_micro_corpus(&llm, &rt, &tmp.path().join("ws")).unwrap();
    for ((pid, design), v) in &verdicts {
        eprintln!("{pid}/{design}: {}", v.verdict_line());
    }

    let fixtures = common::data_dir().join("fixtures");
    let regenerate = std::env::var("TBGEN_REGENERATE_FIXTURES").is_ok_and(|v| v == "1");
    let mut stale = Vec::new();
    for (name, fresh) in [("llm", &llm), ("runtime", &rt)] {
        let committed = fixtures.join(name);
        if regenerate {
            let _ = std::fs::remove_dir_all(&committed);
            std::fs::create_dir_all(&committed).unwrap();
            for (f, body) in snapshot(fresh) {
                std::fs::write(committed.join(f), body).unwrap();
            }
        } else if snapshot(fresh) != snapshot(&committed) {
            stale.push(committed.display().to_string());
        }
    }
    for pid in common::PROBLEMS {
        let path = common::corpus_dir().join(pid).join("golden_tb.cpp");
        let fresh = common::golden_testbench(pid);
        if regenerate {
            std::fs::write(&path, fresh).unwrap();
        } else if std::fs::read_to_string(&path).ok().as_deref() != Some(fresh.as_str()) {
            stale.push(path.display().to_string());
        }
    }
    assert!(stale.is_empty(), "stale fixtures {stale:?}; rerun with TBGEN_REGENERATE_FIXTURES=1");
}
