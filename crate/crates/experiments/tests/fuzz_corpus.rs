//! Replays the checked-in fuzz seeds through the parsers they target.

use std::fs;
use std::path::PathBuf;

use noma_experiments::config::Scenario;
use noma_experiments::table::CsvHeader;
use noma_secrecy::persist::Model;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn scenario_seeds() {
    let s = seeds("scenario_parse");
    assert!(s.len() >= 4);
    for (name, text) in &s {
        let parsed = Scenario::parse(text);
        assert_eq!(parsed.is_ok(), !name.starts_with("invalid"), "{name}: {parsed:?}");
        if let Ok(sc) = parsed {
            sc.validate().unwrap();
            assert_eq!(Scenario::parse(&sc.to_toml()).unwrap(), sc, "{name}");
        }
    }
}

#[test]
fn model_seeds() {
    for (name, text) in seeds("model_decode") {
        match Model::decode(&text) {
            Ok(m) => assert_eq!(m.encode(), text, "{name}"),
            Err(e) => assert!(name.starts_with("bad"), "{name}: {e}"),
        }
    }
}

#[test]
fn csv_header_seeds() {
    for (name, text) in seeds("csv_header") {
        let h = CsvHeader::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!h.columns.is_empty(), "{name}");
        Scenario::parse(&h.config).unwrap();
    }
}
