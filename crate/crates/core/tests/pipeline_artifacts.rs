// SPDX-License-Identifier: Apache-2.0

mod common;

use eco_trojan::pipeline::{parse_report, run_pipeline, CapacityBudget, PipelineConfig, ValidationBudget};
use std::path::Path;

const MATRIX: &str = r#"
seed = 9
triggers = ["comb n=2 v=0x2", "counter n=2 v=4 mode=any"]
payloads = ["modify n=1 v=0x1", "shiftburn n=3", "leak n=4 code=fsk c=1"]
[[ssf]]
trigger = "T"
payload_in = "T"
payload_out = "T"
payload_ft = "T"
"#;

fn config(dir: &Path, netlist: &str) -> PipelineConfig {
    std::fs::write(dir.join("matrix.toml"), MATRIX).unwrap();
    PipelineConfig {
        netlist: netlist.into(),
        matrix: Some(dir.join("matrix.toml")),
        output: dir.join("out"),
        seed: 21,
        capacity: CapacityBudget { cols: 4, rows: 4, ..Default::default() },
        validation: ValidationBudget { equivalence_cycles: 1000, cover_runs: 256, cover_cycles: 500, ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn written_artifacts_revalidate() {
    for target in ["fixture:toy_aes", "fixture:control_fsm"] {
        let dir = tempfile::tempdir().unwrap();
        let r = run_pipeline(&config(dir.path(), target)).unwrap();
        assert_eq!(r.variants.len(), 6);
        let out = dir.path().join("out");
        let stored = parse_report(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        assert_eq!(stored, r);
        let checked = common::revalidate(&out, &r).unwrap_or_else(|e| panic!("{target}: {e}"));
        assert_eq!(checked, r.inserted());
        assert!(checked > 0, "{target}: nothing inserted");
    }
}

#[test]
fn stage_times_cover_the_total() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_pipeline(&config(dir.path(), "fixture:control_fsm")).unwrap();
    let sum: f64 = r.stages.iter().map(|s| s.seconds).sum();
    assert!(sum >= 0.95 * r.total_seconds, "{sum} of {}", r.total_seconds);
    for stage in ["parse", "analysis", "generation", "selection", "insertion", "validation", "write"] {
        assert!(r.stages.iter().any(|s| s.stage == stage), "missing {stage}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_pipeline(&config(a.path(), "fixture:control_fsm")).unwrap();
    let mut cb = config(b.path(), "fixture:control_fsm");
    cb.workers = 1;
    let rb = run_pipeline(&cb).unwrap();
    assert_eq!(ra.without_timings(), rb.without_timings());
    for v in &ra.variants {
        let x = &v.artifacts;
        for rel in [&x.tampered, &x.placement, &x.tco, &x.trojan, &x.testbench].into_iter().flatten() {
            let fa = std::fs::read(a.path().join("out").join(rel)).unwrap();
            let fb = std::fs::read(b.path().join("out").join(rel)).unwrap();
            assert_eq!(fa, fb, "{rel}");
        }
    }
}
