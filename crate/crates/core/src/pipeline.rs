// SPDX-License-Identifier: Apache-2.0

//! End-to-end attack runs: parse, analyze, then for every trojan variant
//! generate, select hooks, emit a change order, trial it, commit it and
//! validate the result.
//!
//! Variant results are gathered in index order and written by one thread.
//! Output layout:
//!
//! ```text
//! <out>/original.v  original.place
//! <out>/<variant>/tampered.v  tampered.place  <variant>.tco  <variant>.v  testbench.stim
//! <out>/report.json  summary.txt
//! ```

use crate::analysis::{compute_metrics, AnalysisError, AnalysisOptions, MetricsStore};
use crate::fixtures;
use crate::insertion::{commit_apply, emit_tco, trial_apply, CapacityModel, CapacityOptions};
use crate::library::{parse_cell_library, CellLibrary, LibraryError};
use crate::netlist::{
    build_signal_dag, identify_globals, parse_netlist, write_netlist, GlobalSignals, NetId, Netlist, NetlistError, SignalDag,
};
use crate::placement::{parse_placement, write_placement, Placement, PlacementError};
use crate::select::{select_hooks, HookAssignment, HookTarget, PortRole, SelectError};
use crate::trojan::{
    generate_config_matrix, generate_trojan, parse_matrix, parse_trojan_config, variant_seed, ConfigError, CountMode,
    TriggerSpec, TrojanConfig, TrojanNetlist,
};
use crate::validation::{
    check_untriggered_equivalence, find_trigger_activation, sample_activation, CoverBudget, CoverResult,
    EquivalenceOptions, Simulator,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

/// Density used to lay out a netlist that comes without a placement.
pub const DEFAULT_DENSITY: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Trojan(#[from] ConfigError),
}

fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisBudget {
    pub iterations: usize,
    pub relic_depth: usize,
    pub cluster_limit: Option<f64>,
}

impl Default for AnalysisBudget {
    fn default() -> Self {
        let d = AnalysisOptions::default();
        AnalysisBudget { iterations: d.iterations, relic_depth: d.relic_depth, cluster_limit: d.cluster_limit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityBudget {
    pub cols: usize,
    pub rows: usize,
    pub wiring_factor: f64,
    pub spill_radius: usize,
}

impl Default for CapacityBudget {
    fn default() -> Self {
        let d = CapacityOptions::default();
        CapacityBudget { cols: d.cols, rows: d.rows, wiring_factor: d.wiring_factor, spill_radius: d.spill_radius }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationBudget {
    /// Random clock cycles per equivalence check, each on 64 lanes.
    pub equivalence_cycles: u64,
    /// Random stimulus sequences tried by the activation search.
    pub cover_runs: usize,
    /// Cycles per activation sequence.
    pub cover_cycles: usize,
    pub exhaustive_limit: usize,
    pub reset_cycles: usize,
}

impl Default for ValidationBudget {
    fn default() -> Self {
        ValidationBudget {
            equivalence_cycles: 10_000,
            cover_runs: 2_048,
            cover_cycles: 2_000,
            exhaustive_limit: 16,
            reset_cycles: 1,
        }
    }
}

/// Everything a run needs. Relative paths resolve against `base_dir`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Verilog file, or `fixture:<name>` for a bundled target.
    pub netlist: String,
    pub library: Option<PathBuf>,
    pub placement: Option<PathBuf>,
    /// Secret-carrying nets; bundled targets supply their own by default.
    pub taint_seeds: Option<Vec<String>>,
    /// Trojan configuration files.
    pub trojans: Vec<PathBuf>,
    /// Configuration matrix; its variants come after `trojans`.
    pub matrix: Option<PathBuf>,
    pub seed: u64,
    pub output: PathBuf,
    /// Parallel variants; 0 uses every core.
    pub workers: usize,
    pub analysis: AnalysisBudget,
    pub capacity: CapacityBudget,
    pub validation: ValidationBudget,
    #[serde(skip)]
    pub base_dir: PathBuf,
    /// Variants supplied directly, run after the file-based ones.
    #[serde(skip)]
    pub variants: Vec<TrojanConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            netlist: String::new(),
            library: None,
            placement: None,
            taint_seeds: None,
            trojans: Vec::new(),
            matrix: None,
            seed: 0,
            output: PathBuf::from("out"),
            workers: 0,
            analysis: AnalysisBudget::default(),
            capacity: CapacityBudget::default(),
            validation: ValidationBudget::default(),
            base_dir: PathBuf::new(),
            variants: Vec::new(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<PipelineConfig, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Reads a TOML configuration; its relative paths are taken from the
    /// file's directory.
    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let mut c = PipelineConfig::from_toml(&read(path)?)?;
        c.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(c)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn analysis_options(&self) -> AnalysisOptions {
        AnalysisOptions {
            iterations: self.analysis.iterations,
            relic_depth: self.analysis.relic_depth,
            cluster_limit: self.analysis.cluster_limit,
        }
    }

    fn capacity_options(&self) -> CapacityOptions {
        CapacityOptions {
            cols: self.capacity.cols,
            rows: self.capacity.rows,
            wiring_factor: self.capacity.wiring_factor,
            spill_radius: self.capacity.spill_radius,
        }
    }
}

/// A parsed target.
#[derive(Debug, Clone)]
pub struct Target {
    pub name: String,
    pub netlist: Netlist,
    pub placement: Placement,
    pub taint_seeds: Vec<String>,
}

/// Loads the netlist, library and placement named by `cfg`.
pub fn load_target(cfg: &PipelineConfig) -> Result<Target, PipelineError> {
    if let Some(name) = cfg.netlist.strip_prefix("fixture:") {
        let f = fixtures::by_name(name).ok_or_else(|| {
            PipelineError::Config(format!("unknown fixture '{name}' (known: {})", fixtures::names().join(", ")))
        })?;
        return Ok(Target {
            name: f.name,
            netlist: f.netlist,
            placement: f.placement,
            taint_seeds: cfg.taint_seeds.clone().unwrap_or(f.taint_seeds),
        });
    }
    if cfg.netlist.is_empty() {
        return Err(PipelineError::Config("no netlist given".into()));
    }
    let library: Arc<CellLibrary> = match &cfg.library {
        Some(p) => Arc::new(parse_cell_library(&read(&cfg.resolve(p))?)?),
        None => fixtures::library(),
    };
    let netlist = parse_netlist(&read(&cfg.resolve(Path::new(&cfg.netlist)))?, library)?;
    let placement = match &cfg.placement {
        Some(p) => parse_placement(&read(&cfg.resolve(p))?, &netlist)?,
        None => {
            log::warn!("no placement given; laying cells out on a grid at density {DEFAULT_DENSITY}");
            fixtures::place_grid(&netlist, DEFAULT_DENSITY)
        }
    };
    Ok(Target {
        name: netlist.module().to_string(),
        taint_seeds: cfg.taint_seeds.clone().unwrap_or_default(),
        netlist,
        placement,
    })
}

/// Variants in run order: configuration files, matrix entries whose target
/// is unset or equals `target`, then `cfg.variants`. Matrix seeds are
/// replaced by the global seed.
pub fn collect_variants(cfg: &PipelineConfig, target: &str) -> Result<Vec<TrojanConfig>, PipelineError> {
    let mut out = Vec::new();
    for p in &cfg.trojans {
        out.push(parse_trojan_config(&read(&cfg.resolve(p))?)?);
    }
    if let Some(p) = &cfg.matrix {
        let mut m = parse_matrix(&read(&cfg.resolve(p))?)?;
        m.seed = cfg.seed;
        out.extend(
            generate_config_matrix(&m)?
                .into_iter()
                .filter(|c| c.target.as_deref().is_none_or(|t| t == target)),
        );
    }
    out.extend(cfg.variants.iter().cloned());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Inserted,
    Unfit,
    NoFeasibleAssignment,
    UnreachedTrigger,
    /// Generation, replay or equivalence failed.
    Failed,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Inserted => "inserted",
            Outcome::Unfit => "unfit",
            Outcome::NoFeasibleAssignment => "no-feasible-assignment",
            Outcome::UnreachedTrigger => "unreached-trigger",
            Outcome::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub cells: usize,
    pub nets: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub registers: usize,
    pub mean_transition: f64,
    pub min_transition: f64,
    pub tainted_nets: Option<usize>,
    pub clusters: usize,
    pub dependency_edges: usize,
    pub fsm_registers: Vec<String>,
    pub max_z: f64,
}

impl MetricSummary {
    pub fn new(n: &Netlist, m: &MetricsStore) -> MetricSummary {
        let pt = &m.p_t;
        let mean = if pt.is_empty() { 0.0 } else { pt.iter().sum::<f64>() / pt.len() as f64 };
        MetricSummary {
            cells: n.cells().len(),
            nets: n.nets().len(),
            inputs: n.inputs().len(),
            outputs: n.outputs().len(),
            registers: m.registers.len(),
            mean_transition: mean,
            min_transition: pt.iter().copied().fold(f64::INFINITY, f64::min).min(1.0),
            tainted_nets: m.tainted.as_ref().map(|t| t.count_ones(..)),
            clusters: m.cluster_centroids.len(),
            dependency_edges: m.dependency_edges,
            fsm_registers: m.fsm_registers().iter().map(|&i| n.cell(m.registers[i]).name.clone()).collect(),
            max_z: m.z_score.iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceSummary {
    pub compared: u64,
    pub fired: u64,
    pub excluded: u64,
    pub mismatches: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverSummary {
    pub covered: bool,
    /// Cycle at which the testbench fires the trigger.
    pub cycle: Option<usize>,
    pub vectors: u64,
    pub cycles: u64,
}

/// Files written for a variant, relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub tampered: Option<String>,
    pub placement: Option<String>,
    pub tco: Option<String>,
    pub trojan: Option<String>,
    pub testbench: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub name: String,
    pub seed: u64,
    pub trigger: String,
    pub payload: String,
    pub ssf: Vec<(String, String)>,
    pub outcome: Outcome,
    pub message: Option<String>,
    pub reseeded: bool,
    pub seq_count: usize,
    pub comb_count: usize,
    pub connections: usize,
    pub hooks: Vec<String>,
    pub trigger_net: Option<String>,
    pub violations: Vec<String>,
    pub cells_added: usize,
    pub equivalence: Option<EquivalenceSummary>,
    /// Primary inputs feeding the trigger hooks; absent when a hook
    /// depends on register state.
    pub trigger_support: Option<usize>,
    /// Cycles to activation under uniform random inputs from signal
    /// probabilities, assuming independent cycles; absent when unbounded.
    pub expected_activation: Option<f64>,
    /// Cycles to activation measured by sampling the target; absent when
    /// no sampled lane fired.
    pub sampled_activation: Option<f64>,
    /// Whether the activation search is expected to succeed in budget.
    pub activation_expected: bool,
    pub cover: Option<CoverSummary>,
    pub artifacts: Artifacts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub target: String,
    pub seed: u64,
    pub stages: Vec<StageTime>,
    pub total_seconds: f64,
    pub metrics: MetricSummary,
    pub original: Option<String>,
    pub variants: Vec<VariantReport>,
}

impl AttackReport {
    pub fn inserted(&self) -> usize {
        self.variants.iter().filter(|v| v.outcome == Outcome::Inserted).count()
    }

    pub fn stage_seconds(&self, stage: &str) -> f64 {
        self.stages.iter().filter(|s| s.stage == stage).map(|s| s.seconds).sum()
    }

    /// Copy with every duration zeroed, for comparing runs.
    pub fn without_timings(&self) -> AttackReport {
        let mut r = self.clone();
        r.total_seconds = 0.0;
        for s in &mut r.stages {
            s.seconds = 0.0;
        }
        r
    }
}

/// Structured report text (JSON) and a human-readable summary.
pub fn emit_report(r: &AttackReport) -> (String, String) {
    let json = serde_json::to_string_pretty(r).expect("report is always serializable");
    (json + "\n", summary_table(r))
}

pub fn parse_report(text: &str) -> Result<AttackReport, serde_json::Error> {
    serde_json::from_str(text)
}

fn summary_table(r: &AttackReport) -> String {
    let mut out = String::new();
    let m = &r.metrics;
    let _ = writeln!(out, "target {} seed {}", r.target, r.seed);
    let _ = writeln!(
        out,
        "{} cells, {} nets, {} registers, mean p_t {:.4}, FSM registers {}",
        m.cells,
        m.nets,
        m.registers,
        m.mean_transition,
        m.fsm_registers.len()
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<8} {:<32} {:<24} {:>5} {:>6} {:>6} {:>6}  Outcome",
        "Variant", "Trigger", "Payload", "Seq.#", "Comb.#", "Conn.#", "Viol.#"
    );
    for v in &r.variants {
        let _ = writeln!(
            out,
            "{:<8} {:<32} {:<24} {:>5} {:>6} {:>6} {:>6}  {}",
            v.name,
            v.trigger,
            v.payload,
            v.seq_count,
            v.comb_count,
            v.connections,
            v.violations.len(),
            v.outcome.as_str()
        );
        for viol in &v.violations {
            let _ = writeln!(out, "         {viol}");
        }
        if let Some(msg) = &v.message {
            let _ = writeln!(out, "         {msg}");
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{} of {} variants inserted", r.inserted(), r.variants.len());
    let _ = writeln!(out);
    let total = r.total_seconds.max(f64::MIN_POSITIVE);
    for s in &r.stages {
        let _ = writeln!(out, "{:<11} {:>10.3} s {:>6.1}%", s.stage, s.seconds, 100.0 * s.seconds / total);
    }
    let _ = writeln!(out, "{:<11} {:>10.3} s", "total", r.total_seconds);
    out
}

/// Estimated clock cycles until the trigger fires under uniform random
/// inputs, from the signal probabilities of its hook nets. Trigger bit `i`
/// reads the `i`-th trigger hook.
pub fn expected_activation(
    trigger: &TriggerSpec,
    hooks: &HookAssignment,
    n: &Netlist,
    m: &MetricsStore,
) -> Option<f64> {
    let ps: Vec<f64> = hooks
        .hooks
        .iter()
        .filter(|h| h.role == PortRole::Trigger)
        .map(|h| match &h.target {
            HookTarget::Net(net) => n.find_net(net).map_or(0.5, |id| m.p_s[id.index()]),
            _ => 0.0,
        })
        .collect();
    let bit_match = |v: u64, mask: u64| -> f64 {
        ps.iter()
            .enumerate()
            .filter(|(j, _)| *j >= 64 || mask >> j & 1 == 1)
            .map(|(j, &p)| if j < 64 && v >> j & 1 == 1 { p } else { 1.0 - p })
            .product()
    };
    let e = match trigger {
        TriggerSpec::Combinational { v, .. } => 1.0 / bit_match(*v, u64::MAX),
        TriggerSpec::Counter { v, mode: CountMode::Any, .. } => {
            let pt = ps.iter().map(|p| 2.0 * p * (1.0 - p));
            *v as f64 / (1.0 - pt.map(|t| 1.0 - t).product::<f64>())
        }
        TriggerSpec::Counter { v, mode: CountMode::PerBit, .. } => {
            *v as f64 / ps.iter().map(|p| 2.0 * p * (1.0 - p)).sum::<f64>()
        }
        TriggerSpec::Fsm { values, masks, .. } => {
            let mut prefix = 1.0;
            let mut total = 0.0;
            for (&v, &mask) in values.iter().zip(masks) {
                prefix *= bit_match(v, mask);
                total += 1.0 / prefix;
            }
            total
        }
    };
    e.is_finite().then_some(e)
}

/// Primary inputs in the single-cycle fan-in of `nets`, or `None` when
/// that fan-in reaches a register output.
fn pi_support(n: &Netlist, dag: &SignalDag, globals: Option<&GlobalSignals>, nets: &[NetId]) -> Option<usize> {
    let mut anc = fixedbitset::FixedBitSet::with_capacity(n.nets().len());
    for &x in nets {
        anc.union_with(dag.ancestors(x));
    }
    if n.registers().iter().any(|&r| anc.contains(n.register_q(r).index())) {
        return None;
    }
    Some(Simulator::new(n, globals).inputs().iter().filter(|i| anc.contains(i.index())).count())
}

fn hook_text(h: &crate::select::PortHook) -> String {
    let port = match &h.class {
        crate::trojan::PortClass::InputOnly { net } | crate::trojan::PortClass::OutputOnly { net, .. } => net.clone(),
        crate::trojan::PortClass::Feedthrough { input, output } => format!("{input}/{output}"),
    };
    let target = match &h.target {
        HookTarget::Net(net) => net.clone(),
        HookTarget::Splice { net, cell, pin } => format!("{net} -> {cell}.{pin}"),
        HookTarget::Unbound => "-".to_string(),
    };
    format!("{} {port} {target}", h.role.key())
}

/// Shared, read-only state of a run.
struct Context<'a> {
    cfg: &'a PipelineConfig,
    target: &'a Target,
    metrics: &'a MetricsStore,
    dag: &'a SignalDag,
    globals: Option<&'a GlobalSignals>,
    model: &'a CapacityModel,
}

#[derive(Default)]
struct Timings {
    generation: Duration,
    selection: Duration,
    insertion: Duration,
    validation: Duration,
}

/// Text artifacts of one variant, written later by the aggregator.
#[derive(Default)]
struct Files {
    tampered: Option<String>,
    placement: Option<String>,
    tco: Option<String>,
    trojan: Option<String>,
    testbench: Option<String>,
}

fn timed<T>(slot: &mut Duration, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *slot += t.elapsed();
    out
}

fn blank_row(c: &TrojanConfig) -> VariantReport {
    VariantReport {
        name: c.name.clone(),
        seed: c.seed,
        trigger: c.trigger.to_string(),
        payload: c.payload.to_string(),
        ssf: PortRole::ALL.iter().map(|r| (r.key().to_string(), c.ssf.get(*r).to_string())).collect(),
        outcome: Outcome::Failed,
        message: None,
        reseeded: false,
        seq_count: 0,
        comb_count: 0,
        connections: 0,
        hooks: Vec::new(),
        trigger_net: None,
        violations: Vec::new(),
        cells_added: 0,
        equivalence: None,
        trigger_support: None,
        expected_activation: None,
        sampled_activation: None,
        activation_expected: false,
        cover: None,
        artifacts: Artifacts::default(),
    }
}

fn run_variant(ctx: &Context<'_>, c: &TrojanConfig) -> (VariantReport, Files, Timings) {
    let mut t = Timings::default();
    let mut row = blank_row(c);
    let lib = ctx.target.netlist.library().clone();
    let reset = ctx.globals.and_then(|g| g.reset.map(|(_, p)| p));
    let trojan = match timed(&mut t.generation, || generate_trojan(&c.trigger, &c.payload, lib, &c.name, reset)) {
        Ok(tr) => tr,
        Err(e) => {
            row.message = Some(e.to_string());
            return (row, Files::default(), t);
        }
    };
    row.seq_count = trojan.seq_count;
    row.comb_count = trojan.comb_count;
    row.trigger_net = Some(trojan.trigger_net.clone());

    let (first, files) = attempt(ctx, c, &trojan, c.seed, row.clone(), &mut t);
    let (row, mut files) = match first.outcome {
        Outcome::NoFeasibleAssignment | Outcome::UnreachedTrigger => {
            let (second, f) = attempt(ctx, c, &trojan, variant_seed(c.seed, u64::MAX), row, &mut t);
            let (mut kept, f) = if first.outcome == Outcome::NoFeasibleAssignment || second.outcome == Outcome::Inserted {
                (second, f)
            } else {
                (first, files)
            };
            kept.reseeded = true;
            (kept, f)
        }
        _ => (first, files),
    };
    files.trojan = Some(write_netlist(&trojan.netlist));
    (row, files, t)
}

/// Selects hooks with `seed`, then inserts and validates.
fn attempt(
    ctx: &Context<'_>,
    c: &TrojanConfig,
    trojan: &TrojanNetlist,
    seed: u64,
    mut row: VariantReport,
    t: &mut Timings,
) -> (VariantReport, Files) {
    let mut files = Files::default();
    let n = &ctx.target.netlist;
    let hooks = timed(&mut t.selection, || select_hooks(trojan, &c.ssf, n, ctx.metrics, ctx.dag, ctx.globals, seed));
    let hooks = match hooks {
        Ok(h) => h,
        Err(e) => {
            row.outcome = match e {
                SelectError::NoFeasibleAssignment { .. } | SelectError::MissingGlobals => {
                    Outcome::NoFeasibleAssignment
                }
                SelectError::MissingMetric { .. } => Outcome::Failed,
            };
            row.message = Some(e.to_string());
            return (row, files);
        }
    };
    row.hooks = hooks.hooks.iter().map(hook_text).collect();

    let (script, fit) = timed(&mut t.insertion, || {
        let script = emit_tco(trojan, &hooks);
        let fit = trial_apply(n, &ctx.target.placement, &script, ctx.model, Some(&hooks));
        (script, fit)
    });
    row.connections = crate::insertion::hook_connections(&hooks);
    row.cells_added = script.added_cells();
    row.violations = fit.violations.iter().map(|v| v.to_string()).collect();
    files.tco = Some(script.to_text());
    if !fit.fits {
        row.outcome = Outcome::Unfit;
        return (row, files);
    }
    let committed = timed(&mut t.insertion, || commit_apply(n, &ctx.target.placement, &script, ctx.model, &fit));
    let (tampered, placed) = match committed {
        Ok(x) => x,
        Err(e) => {
            row.message = Some(e.to_string());
            return (row, files);
        }
    };
    files.tampered = Some(write_netlist(&tampered));
    files.placement = Some(write_placement(&placed));
    timed(&mut t.validation, || validate(ctx, seed, trojan, &hooks, &tampered, &mut row, &mut files));
    (row, files)
}

fn validate(
    ctx: &Context<'_>,
    seed: u64,
    trojan: &TrojanNetlist,
    hooks: &HookAssignment,
    tampered: &Netlist,
    row: &mut VariantReport,
    files: &mut Files,
) {
    let v = &ctx.cfg.validation;
    let n = &ctx.target.netlist;
    let tg = ctx.globals.and_then(|g| {
        Some(GlobalSignals {
            clock: tampered.find_net(&n.net(g.clock).name)?,
            reset: match g.reset {
                Some((r, p)) => Some((tampered.find_net(&n.net(r).name)?, p)),
                None => None,
            },
        })
    });
    let eq_opts = EquivalenceOptions {
        trials: v.equivalence_cycles.saturating_mul(64),
        reset_cycles: v.reset_cycles,
        seed: variant_seed(seed, 1),
    };
    match check_untriggered_equivalence(n, tampered, ctx.globals, Some(&trojan.trigger_net), &eq_opts) {
        Ok(r) => {
            row.equivalence = Some(EquivalenceSummary {
                compared: r.compared,
                fired: r.fired,
                excluded: r.excluded,
                mismatches: r.mismatch_count,
            });
            if !r.passed() {
                row.message = Some(format!("{} output mismatches while the trigger was idle", r.mismatch_count));
                return;
            }
        }
        Err(e) => {
            row.message = Some(format!("equivalence check: {e}"));
            return;
        }
    }

    let trigger_hooks: Vec<_> = hooks
        .hooks
        .iter()
        .filter(|h| h.role == PortRole::Trigger)
        .filter_map(|h| match &h.target {
            HookTarget::Net(net) => n.find_net(net),
            _ => None,
        })
        .collect();
    row.trigger_support = pi_support(n, ctx.dag, ctx.globals, &trigger_hooks);
    row.expected_activation = expected_activation(&trojan.trigger, hooks, n, ctx.metrics);
    row.sampled_activation = sample_activation(
        n,
        ctx.globals,
        &trojan.trigger,
        &trigger_hooks,
        v.cover_cycles,
        v.reset_cycles,
        variant_seed(seed, 3),
    )
    .expected_cycles();
    row.activation_expected = row.trigger_support.is_some_and(|s| s <= v.exhaustive_limit)
        || row.sampled_activation.is_some_and(|e| e < v.cover_cycles as f64);

    let budget = CoverBudget {
        random_runs: v.cover_runs,
        max_cycles: v.cover_cycles,
        exhaustive_limit: v.exhaustive_limit,
        reset_cycles: v.reset_cycles,
        seed: variant_seed(seed, 2),
        pinned: Default::default(),
    };
    match find_trigger_activation(tampered, &trojan.trigger_net, tg.as_ref(), &budget) {
        Ok(CoverResult::Covered { stimulus, cycle }) => {
            row.cover = Some(CoverSummary { covered: true, cycle: Some(cycle), vectors: 0, cycles: 0 });
            files.testbench = Some(stimulus.to_text());
            row.outcome = Outcome::Inserted;
        }
        Ok(CoverResult::Unreached { vectors, cycles }) => {
            row.cover = Some(CoverSummary { covered: false, cycle: None, vectors, cycles });
            row.outcome = Outcome::UnreachedTrigger;
        }
        Err(e) => row.message = Some(format!("activation search: {e}")),
    }
}

/// Runs the whole attack and writes every artifact under `cfg.output`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<AttackReport, PipelineError> {
    let start = Instant::now();
    let mut stages = Vec::new();
    let mut stage = |name: &str, d: Duration| stages.push(StageTime { stage: name.to_string(), seconds: d.as_secs_f64() });

    let t = Instant::now();
    let target = load_target(cfg)?;
    let variants = collect_variants(cfg, &target.name)?;
    let n = &target.netlist;
    let seeds = target
        .taint_seeds
        .iter()
        .map(|s| n.find_net(s).ok_or_else(|| PipelineError::Config(format!("unknown taint seed '{s}'"))))
        .collect::<Result<Vec<_>, _>>()?;
    stage("parse", t.elapsed());

    let t = Instant::now();
    let taint = (!seeds.is_empty()).then_some(seeds.as_slice());
    let metrics = compute_metrics(n, Some(&target.placement), taint, &cfg.analysis_options())?;
    let dag = build_signal_dag(n)?;
    let globals = identify_globals(n).ok();
    let model = CapacityModel::from_placement(n, &target.placement, &cfg.capacity_options());
    stage("analysis", t.elapsed());

    let ctx = Context { cfg, target: &target, metrics: &metrics, dag: &dag, globals: globals.as_ref(), model: &model };
    let run_all = || variants.par_iter().map(|c| run_variant(&ctx, c)).collect::<Vec<_>>();
    let results = if cfg.workers == 0 {
        run_all()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| PipelineError::Config(e.to_string()))?
            .install(run_all)
    };
    let mut sum = Timings::default();
    for (_, _, t) in &results {
        sum.generation += t.generation;
        sum.selection += t.selection;
        sum.insertion += t.insertion;
        sum.validation += t.validation;
    }
    stage("generation", sum.generation);
    stage("selection", sum.selection);
    stage("insertion", sum.insertion);
    stage("validation", sum.validation);

    let t = Instant::now();
    let out = cfg.resolve(&cfg.output);
    let mkdir = |p: &Path| std::fs::create_dir_all(p).map_err(|source| PipelineError::Io { path: p.to_path_buf(), source });
    mkdir(&out)?;
    write(&out.join("original.v"), &write_netlist(n))?;
    write(&out.join("original.place"), &write_placement(&target.placement))?;
    let mut rows = Vec::with_capacity(results.len());
    for (mut row, files, _) in results {
        let dir = out.join(&row.name);
        let put = |file: String, text: &Option<String>| -> Result<Option<String>, PipelineError> {
            let Some(text) = text else { return Ok(None) };
            mkdir(&dir)?;
            write(&dir.join(&file), text)?;
            Ok(Some(format!("{}/{file}", row.name)))
        };
        row.artifacts = Artifacts {
            tampered: put("tampered.v".into(), &files.tampered)?,
            placement: put("tampered.place".into(), &files.placement)?,
            tco: put(format!("{}.tco", row.name), &files.tco)?,
            trojan: put(format!("{}.v", row.name), &files.trojan)?,
            testbench: put("testbench.stim".into(), &files.testbench)?,
        };
        rows.push(row);
    }
    stage("write", t.elapsed());

    let report = AttackReport {
        target: target.name.clone(),
        seed: cfg.seed,
        stages,
        total_seconds: start.elapsed().as_secs_f64(),
        metrics: MetricSummary::new(n, &metrics),
        original: Some("original.v".into()),
        variants: rows,
    };
    let (json, table) = emit_report(&report);
    write(&out.join("report.json"), &json)?;
    write(&out.join("summary.txt"), &table)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::select::{SsfAssignment, SsfKind};
    use crate::trojan::PayloadSpec;

    fn variant(name: &str, trigger: TriggerSpec, payload: PayloadSpec, seed: u64) -> TrojanConfig {
        let ssf = SsfAssignment { trigger: SsfKind::T, ..Default::default() };
        TrojanConfig { name: name.into(), trigger, payload, ssf, seed, target: None }
    }

    fn config(dir: &Path, variants: Vec<TrojanConfig>) -> PipelineConfig {
        PipelineConfig {
            netlist: "fixture:control_fsm".into(),
            output: dir.to_path_buf(),
            seed: 5,
            variants,
            capacity: CapacityBudget { cols: 4, rows: 4, ..Default::default() },
            validation: ValidationBudget { equivalence_cycles: 500, cover_runs: 256, cover_cycles: 300, ..Default::default() },
            ..Default::default()
        }
    }

    fn two_variants() -> Vec<TrojanConfig> {
        vec![
            variant("ht0", TriggerSpec::Combinational { n: 2, v: 0x3 }, PayloadSpec::Modify { n: 1, v: 1 }, 11),
            variant(
                "ht1",
                TriggerSpec::Counter { n: 2, v: 3, mode: CountMode::Any },
                PayloadSpec::Fault { n: 1 },
                12,
            ),
        ]
    }

    #[test]
    fn runs_and_reports_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_pipeline(&config(dir.path(), two_variants())).unwrap();
        assert_eq!(r.variants.len(), 2);
        assert_eq!(r.inserted(), 2, "{:#?}", r.variants);
        let row = &r.variants[0];
        assert_eq!((row.seq_count, row.connections), (0, 4));
        assert!(row.comb_count > 0);
        let (json, table) = emit_report(&r);
        assert_eq!(parse_report(&json).unwrap(), r);
        assert!(table.contains("Seq.#") && table.contains("inserted"));
        assert_eq!(std::fs::read_to_string(dir.path().join("report.json")).unwrap(), json);
        for v in &r.variants {
            for p in [&v.artifacts.tampered, &v.artifacts.tco, &v.artifacts.testbench] {
                assert!(dir.path().join(p.as_ref().unwrap()).exists());
            }
        }
    }

    #[test]
    fn identical_seed_identical_outputs() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let mut ca = config(a.path(), two_variants());
        ca.workers = 1;
        let ra = run_pipeline(&ca).unwrap();
        let rb = run_pipeline(&config(b.path(), two_variants())).unwrap();
        assert_eq!(ra.without_timings(), rb.without_timings());
        for v in &ra.variants {
            let p = v.artifacts.tampered.as_ref().unwrap();
            assert_eq!(
                std::fs::read(a.path().join(p)).unwrap(),
                std::fs::read(b.path().join(p)).unwrap()
            );
        }
    }

    #[test]
    fn empty_variant_list() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_pipeline(&config(dir.path(), Vec::new())).unwrap();
        assert!(r.variants.is_empty());
        assert_eq!(r.inserted(), 0);
    }

    #[test]
    fn unfit_and_failed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path(), two_variants());
        cfg.capacity = CapacityBudget { cols: 1, rows: 1, wiring_factor: 0.0, spill_radius: 0 };
        let r = run_pipeline(&cfg).unwrap();
        assert!(r.variants.iter().all(|v| v.outcome == Outcome::Unfit && !v.violations.is_empty()));
        assert!(summary_table(&r).contains("unfit"));
        assert!(matches!(
            run_pipeline(&PipelineConfig { netlist: "fixture:nope".into(), ..cfg }),
            Err(PipelineError::Config(_))
        ));
    }

    #[test]
    fn config_toml() {
        let c = PipelineConfig::from_toml(
            "netlist = \"fixture:toy_aes\"\nseed = 3\n[validation]\ncover_cycles = 10\n[capacity]\ncols = 4\n",
        )
        .unwrap();
        assert_eq!((c.seed, c.validation.cover_cycles, c.capacity.cols, c.capacity.rows), (3, 10, 4, 10));
        assert!(PipelineConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn activation_estimates() {
        let f = fixtures::four_pi();
        let m = compute_metrics(&f.netlist, None, None, &AnalysisOptions::default()).unwrap();
        let hooks = HookAssignment {
            hooks: ["a", "b"]
                .iter()
                .map(|x| crate::select::PortHook {
                    role: PortRole::Trigger,
                    class: crate::trojan::PortClass::InputOnly { net: format!("t_{x}") },
                    target: HookTarget::Net(x.to_string()),
                })
                .collect(),
            clock: None,
            reset: None,
        };
        let e = |t: TriggerSpec| expected_activation(&t, &hooks, &f.netlist, &m).unwrap();
        assert!((e(TriggerSpec::Combinational { n: 2, v: 3 }) - 4.0).abs() < 1e-12);
        assert!((e(TriggerSpec::Counter { n: 2, v: 3, mode: CountMode::Any }) - 4.0).abs() < 1e-12);
        assert!((e(TriggerSpec::Counter { n: 2, v: 3, mode: CountMode::PerBit }) - 3.0).abs() < 1e-12);
        let fsm = TriggerSpec::Fsm { n: 2, values: vec![1, 2], masks: vec![3, 3] };
        assert!((e(fsm) - 20.0).abs() < 1e-12);
    }
}
