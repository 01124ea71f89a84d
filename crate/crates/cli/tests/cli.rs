// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

fn eco(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eco-trojan"))
        .args(args)
        .current_dir(cwd)
        .env_remove("ECO_TROJAN_LIBRARY")
        .env_remove("ECO_TROJAN_OUTPUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn fixture_lists_and_writes() {
    let dir = tempfile::tempdir().unwrap();
    let o = eco(&["fixture"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l == "control_fsm"));
    let o = eco(&["fixture", "control_fsm", "-o", "t"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["control_fsm.v", "control_fsm.place", "cells.lib"] {
        assert!(dir.path().join("t").join(f).is_file(), "{f}");
    }
    assert!(!eco(&["fixture", "nope"], dir.path()).status.success());
}

#[test]
fn run_from_files_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(eco(&["fixture", "control_fsm", "-o", "t"], p).status.success());
    std::fs::write(p.join("ht.cfg"), "name = ht\ntrigger = comb n=2 v=0x3\npayload = modify n=1 v=0x1\nssf.trigger = T\nssf.payload_ft = T\nseed = 4\n").unwrap();
    let o = eco(&["generate", "ht.cfg", "-o", "ht.v"], p);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(p.join("ht.v")).unwrap().contains("module"));

    let o = eco(
        &[
            "run", "--netlist", "t/control_fsm.v", "--library", "t/cells.lib", "--placement", "t/control_fsm.place",
            "--trojan", "ht.cfg", "--grid-cols", "4", "--grid-rows", "4", "--equivalence-cycles", "200",
            "--cover-runs", "128", "--cover-cycles", "200", "-o", "out",
        ],
        p,
    );
    assert!(o.status.success(), "{}\n{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    let table = stdout(&o);
    assert!(table.contains("Seq.#") && table.contains("inserted"), "{table}");
    let out = p.join("out");
    assert!(out.join("report.json").is_file() && out.join("summary.txt").is_file());

    let o = eco(&["replay", "out/original.v", "out/ht/ht.tco", "--library", "t/cells.lib", "-o", "re.v"], p);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read_to_string(p.join("re.v")).unwrap(),
        std::fs::read_to_string(out.join("ht/tampered.v")).unwrap()
    );

    let o = eco(&["analyze", "--netlist", "fixture:control_fsm"], p);
    assert!(o.status.success());
    assert!(stdout(&o).contains("registers"));
}

#[test]
fn no_inserted_variant_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let o = eco(&["run", "--netlist", "fixture:control_fsm", "-o", "out"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("no variant was inserted"));
    assert!(dir.path().join("out/report.json").is_file());
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "name = x\ntrigger = comb n=2 v=0x9\npayload = fault n=1\n").unwrap();
    let o = eco(&["run", "--netlist", "fixture:control_fsm", "--trojan", "bad.cfg"], dir.path());
    assert!(!o.status.success());
    let o = eco(&["run", "--netlist", "fixture:missing"], dir.path());
    assert!(!o.status.success());
}
