#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub const QUERY1: &str = r#"(*, "United States") AND (trade country, *) AND (percentage, *)"#;
pub const IMPORT_TC: &str = "/country/economy/import_partners/item/trade_country";
pub const IMPORT_PCT: &str = "/country/economy/import_partners/item/percentage";
pub const OWN: [&str; 3] = [
    "country ↓economy ↓import_partners ↓item ↓trade_country",
    "percentage ↑item ↓trade_country",
    "country ↓economy ↓import_partners ↓item ↓percentage",
];

pub struct Cli {
    pub store: PathBuf,
}

impl Cli {
    pub fn new(store: &Path) -> Cli {
        Cli { store: store.to_path_buf() }
    }

    pub fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_xcube"))
            .env("XCUBE_STORE", &self.store)
            .env_remove("RUST_LOG")
            .args(args)
            .output()
            .expect("spawn xcube")
    }

    /// Run and require success.
    pub fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "xcube {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    pub fn json(&self, args: &[&str]) -> Value {
        let mut a = vec!["--json"];
        a.extend_from_slice(args);
        serde_json::from_str(&self.ok(&a)).unwrap()
    }
}

/// Write a sample corpus into `work` and build the store.
pub fn prepared(work: &Path, fixture: &str) -> Cli {
    let cli = Cli::new(&work.join("store"));
    let data = work.join("data");
    let d = data.to_str().unwrap();
    cli.ok(&["sample", d, "--fixture", fixture]);
    cli.ok(&["ingest", d]);
    cli.ok(&["index"]);
    cli.ok(&["guides", "--threshold", "0.4"]);
    cli
}

/// Query 1 refined to import contexts, with the in-document connections chosen.
pub fn query1_to_connections(cli: &Cli) -> Vec<String> {
    cli.ok(&["query", QUERY1, "--k", "10"]);
    let refined = cli.json(&[
        "contexts",
        "--select",
        "1=/country",
        "--select",
        &format!("2={IMPORT_TC}"),
        "--select",
        &format!("3={IMPORT_PCT}"),
    ]);
    let entries = refined["connections"]["entries"].as_object().unwrap();
    let ids: Vec<String> = entries
        .iter()
        .filter(|(_, e)| OWN.contains(&e["rendering"].as_str().unwrap()))
        .map(|(id, _)| id.clone())
        .collect();
    assert_eq!(ids.len(), 3, "{entries:?}");
    let mut args = vec!["connections"];
    for id in &ids {
        args.push("--choose");
        args.push(id);
    }
    cli.ok(&args);
    ids
}
