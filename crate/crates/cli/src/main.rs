// SPDX-License-Identifier: Apache-2.0

//! `eco-trojan`: batch front end for the trojan insertion pipeline.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use eco_trojan::analysis::compute_metrics;
use eco_trojan::fixtures;
use eco_trojan::insertion::{parse_tco, replay_tco};
use eco_trojan::library::{write_cell_library, Polarity};
use eco_trojan::netlist::write_netlist;
use eco_trojan::pipeline::{
    emit_report, load_target, run_pipeline, MetricSummary, PipelineConfig,
};
use eco_trojan::placement::write_placement;
use eco_trojan::trojan::{generate_config_matrix, generate_trojan, parse_matrix, parse_trojan_config, write_trojan_config};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "eco-trojan", version, about = "Blind hardware trojan insertion on gate-level netlists")]
struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute reverse-engineering metrics for a target.
    Analyze {
        #[command(flatten)]
        target: TargetArgs,
        /// Write the per-net/per-register dump here instead of a summary.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Generate a trojan netlist from a configuration file.
    Generate {
        config: PathBuf,
        /// Reset polarity of the trojan registers: low, high or none.
        #[arg(long, default_value = "low")]
        reset: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Expand a configuration matrix into one configuration file per variant.
    Matrix {
        matrix: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run the full attack and write every artifact.
    Run(Box<RunArgs>),
    /// Apply a change order script to a netlist.
    Replay {
        netlist: PathBuf,
        tco: PathBuf,
        #[arg(long, env = "ECO_TROJAN_LIBRARY")]
        library: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Write a bundled target (netlist, placement, library) to a directory.
    Fixture {
        /// One of the bundled names; omit to list them.
        name: Option<String>,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct TargetArgs {
    /// Verilog netlist or `fixture:<name>`.
    #[arg(long)]
    netlist: String,
    #[arg(long, env = "ECO_TROJAN_LIBRARY")]
    library: Option<PathBuf>,
    #[arg(long)]
    placement: Option<PathBuf>,
    /// Secret-carrying nets (repeatable).
    #[arg(long = "taint")]
    taint: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML pipeline configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Verilog netlist or `fixture:<name>`.
    #[arg(long)]
    netlist: Option<String>,
    #[arg(long, env = "ECO_TROJAN_LIBRARY")]
    library: Option<PathBuf>,
    #[arg(long)]
    placement: Option<PathBuf>,
    /// Secret-carrying nets (repeatable).
    #[arg(long = "taint")]
    taint: Vec<String>,
    /// Trojan configuration file (repeatable).
    #[arg(long = "trojan")]
    trojans: Vec<PathBuf>,
    /// TOML matrix of triggers, payloads and SSF assignments.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Overrides any seed in the matrix or configuration.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(short, long, env = "ECO_TROJAN_OUTPUT")]
    output: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    cluster_limit: Option<f64>,
    #[arg(long)]
    grid_cols: Option<usize>,
    #[arg(long)]
    grid_rows: Option<usize>,
    #[arg(long)]
    wiring_factor: Option<f64>,
    /// Cycles of 64-lane equivalence checking per variant.
    #[arg(long)]
    equivalence_cycles: Option<u64>,
    #[arg(long)]
    cover_runs: Option<usize>,
    #[arg(long)]
    cover_cycles: Option<usize>,
}

impl RunArgs {
    fn into_config(self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.netlist {
            c.netlist = v;
        }
        if self.library.is_some() {
            c.library = self.library;
        }
        if self.placement.is_some() {
            c.placement = self.placement;
        }
        if !self.taint.is_empty() {
            c.taint_seeds = Some(self.taint);
        }
        c.trojans.extend(self.trojans);
        if self.matrix.is_some() {
            c.matrix = self.matrix;
        }
        set(&mut c.seed, self.seed);
        set(&mut c.workers, self.workers);
        if self.output.is_some() {
            c.output = self.output.unwrap_or_default();
        }
        set(&mut c.analysis.iterations, self.iterations);
        if self.cluster_limit.is_some() {
            c.analysis.cluster_limit = self.cluster_limit;
        }
        set(&mut c.capacity.cols, self.grid_cols);
        set(&mut c.capacity.rows, self.grid_rows);
        set(&mut c.capacity.wiring_factor, self.wiring_factor);
        set(&mut c.validation.equivalence_cycles, self.equivalence_cycles);
        set(&mut c.validation.cover_runs, self.cover_runs);
        set(&mut c.validation.cover_cycles, self.cover_cycles);
        Ok(c)
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn read(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn write(p: &Path, text: &str) -> Result<()> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
}

fn analyze(t: TargetArgs, dump: Option<PathBuf>) -> Result<()> {
    let cfg = PipelineConfig {
        netlist: t.netlist,
        library: t.library,
        placement: t.placement,
        taint_seeds: (!t.taint.is_empty()).then_some(t.taint),
        ..Default::default()
    };
    let target = load_target(&cfg)?;
    let n = &target.netlist;
    let seeds = target
        .taint_seeds
        .iter()
        .map(|s| n.find_net(s).with_context(|| format!("unknown taint seed '{s}'")))
        .collect::<Result<Vec<_>>>()?;
    let taint = (!seeds.is_empty()).then_some(seeds.as_slice());
    let m = compute_metrics(n, Some(&target.placement), taint, &Default::default())?;
    match dump {
        Some(p) => write(&p, &m.dump(n))?,
        None => {
            let s = MetricSummary::new(n, &m);
            println!("target {}", target.name);
            println!("cells {} nets {} inputs {} outputs {}", s.cells, s.nets, s.inputs, s.outputs);
            println!("registers {} dependency edges {}", s.registers, s.dependency_edges);
            println!("transition probability mean {:.4} min {:.4}", s.mean_transition, s.min_transition);
            println!("clusters {}", s.clusters);
            if let Some(t) = s.tainted_nets {
                println!("tainted nets {t}");
            }
            println!("fsm [{}] max z {:.3}", s.fsm_registers.join(" "), s.max_z);
        }
    }
    Ok(())
}

fn polarity(s: &str) -> Result<Option<Polarity>> {
    Ok(match s {
        "low" => Some(Polarity::Low),
        "high" => Some(Polarity::High),
        "none" => None,
        _ => bail!("reset must be low, high or none, got '{s}'"),
    })
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).init();
    match cli.command {
        Command::Analyze { target, dump } => analyze(target, dump)?,
        Command::Generate { config, reset, out } => {
            let c = parse_trojan_config(&read(&config)?)?;
            c.validate().map_err(anyhow::Error::msg)?;
            let t = generate_trojan(&c.trigger, &c.payload, fixtures::library(), &c.name, polarity(&reset)?)?;
            write(&out, &write_netlist(&t.netlist))?;
            println!("{}: {} sequential, {} combinational cells", c.name, t.seq_count, t.comb_count);
        }
        Command::Matrix { matrix, seed, out } => {
            let mut m = parse_matrix(&read(&matrix)?)?;
            set(&mut m.seed, seed);
            let configs = generate_config_matrix(&m)?;
            for c in &configs {
                write(&out.join(format!("{}.cfg", c.name)), &write_trojan_config(c))?;
            }
            println!("{} configurations written to {}", configs.len(), out.display());
        }
        Command::Run(args) => {
            let cfg = args.into_config()?;
            let report = run_pipeline(&cfg)?;
            let (_, table) = emit_report(&report);
            print!("{table}");
            if report.inserted() == 0 {
                bail!("no variant was inserted");
            }
        }
        Command::Replay { netlist, tco, library, out } => {
            let lib = match &library {
                Some(p) => std::sync::Arc::new(eco_trojan::library::parse_cell_library(&read(p)?)?),
                None => fixtures::library(),
            };
            let n = eco_trojan::netlist::parse_netlist(&read(&netlist)?, lib)?;
            let script = parse_tco(&read(&tco)?)?;
            let tampered = replay_tco(&n, &script)?;
            write(&out, &write_netlist(&tampered))?;
            println!("{} commands applied, {} cells", script.commands.len(), tampered.cells().len());
        }
        Command::Fixture { name, out } => match name {
            None => println!("{}", fixtures::names().join("\n")),
            Some(name) => {
                let f = fixtures::by_name(&name).with_context(|| format!("unknown fixture '{name}'"))?;
                write(&out.join(format!("{name}.v")), &write_netlist(&f.netlist))?;
                write(&out.join(format!("{name}.place")), &write_placement(&f.placement))?;
                write(&out.join("cells.lib"), &write_cell_library(f.netlist.library()))?;
                if !f.taint_seeds.is_empty() {
                    write(&out.join(format!("{name}.taint")), &(f.taint_seeds.join("\n") + "\n"))?;
                }
            }
        },
    }
    Ok(())
}
