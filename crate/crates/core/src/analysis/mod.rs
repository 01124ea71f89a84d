// SPDX-License-Identifier: Apache-2.0

//! Reverse-engineering metrics over an immutable netlist.

pub mod cluster;
pub mod probability;
pub mod regdep;
pub mod relic;

pub use cluster::{cluster_cells, default_distance_limit, l1, Clustering};
pub use probability::{
    compute_signal_probability, compute_transition_probability, transition_probability,
};
pub use regdep::{
    build_register_dependency_graph, compute_sccs, identify_fsm_scc, RegisterDependencyGraph,
};
pub use relic::{compute_relic_zscores, z_scores};

use crate::netlist::{fanout_cone, CellId, NetId, Netlist};
use crate::placement::Placement;
use fixedbitset::FixedBitSet;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("at least 2 registers are required, found {0}")]
    TooFewRegisters(usize),
}

/// Nets reachable from the seeds, registers included.
pub fn compute_taint(n: &Netlist, seeds: &[NetId]) -> FixedBitSet {
    fanout_cone(n, seeds)
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub iterations: usize,
    pub relic_depth: usize,
    /// Cluster distance limit; defaults to 5% of the die half-perimeter.
    pub cluster_limit: Option<f64>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            iterations: 3,
            relic_depth: relic::DEFAULT_DEPTH,
            cluster_limit: None,
        }
    }
}

/// Every metric the selection functions draw on.
#[derive(Debug, Clone)]
pub struct MetricsStore {
    /// Signal probability per net id.
    pub p_s: Vec<f64>,
    /// Transition probability per net id.
    pub p_t: Vec<f64>,
    /// Cluster id per cell id; `None` for unplaced cells or without placement.
    pub cluster_of: Vec<Option<usize>>,
    pub cluster_centroids: Vec<(f64, f64)>,
    /// Tainted nets, when taint seeds were given.
    pub tainted: Option<FixedBitSet>,
    /// Registers sorted by name; the per-register vectors below follow it.
    pub registers: Vec<CellId>,
    pub z_score: Vec<f64>,
    /// SCC id per register: index of the smallest member in `registers`.
    pub scc_of: Vec<usize>,
    pub fsm_scc: Option<usize>,
    pub dependency_edges: usize,
}

impl MetricsStore {
    pub fn is_tainted(&self, net: NetId) -> Option<bool> {
        self.tainted.as_ref().map(|t| t.contains(net.index()))
    }

    pub fn register_index(&self, cell: CellId) -> Option<usize> {
        self.registers.binary_search(&cell).ok()
    }

    /// Registers in the FSM SCC, in register order.
    pub fn fsm_registers(&self) -> Vec<usize> {
        match self.fsm_scc {
            Some(s) => (0..self.registers.len()).filter(|&i| self.scc_of[i] == s).collect(),
            None => Vec::new(),
        }
    }

    /// Line-oriented dump, one record per net, cell and register:
    ///
    /// ```text
    /// net <name> ps <p_s> pt <p_t> taint <0|1|->
    /// cell <name> cluster <id|->
    /// reg <name> z <z> scc <id>
    /// fsm <id|->
    /// ```
    pub fn dump(&self, n: &Netlist) -> String {
        let mut out = String::new();
        for id in n.net_ids() {
            let taint = match self.is_tainted(id) {
                Some(true) => "1",
                Some(false) => "0",
                None => "-",
            };
            let _ = writeln!(
                out,
                "net {} ps {} pt {} taint {}",
                n.net(id).name,
                self.p_s[id.index()],
                self.p_t[id.index()],
                taint
            );
        }
        for c in n.cell_ids() {
            let cl = self.cluster_of[c.index()].map_or("-".to_string(), |v| v.to_string());
            let _ = writeln!(out, "cell {} cluster {}", n.cell(c).name, cl);
        }
        for (i, &r) in self.registers.iter().enumerate() {
            let _ = writeln!(
                out,
                "reg {} z {} scc {}",
                n.cell(r).name,
                self.z_score[i],
                self.scc_of[i]
            );
        }
        let _ = writeln!(out, "fsm {}", self.fsm_scc.map_or("-".to_string(), |v| v.to_string()));
        out
    }
}

/// Runs all metric passes concurrently and assembles the store. Designs
/// with fewer than two registers get zero z-scores.
pub fn compute_metrics(
    n: &Netlist,
    placement: Option<&Placement>,
    taint_seeds: Option<&[NetId]>,
    opts: &AnalysisOptions,
) -> Result<MetricsStore, AnalysisError> {
    let ((p_s, clusters), ((tainted, (graph, scc_of)), z)) = rayon::join(
        || {
            rayon::join(
                || compute_signal_probability(n, opts.iterations),
                || {
                    placement.map(|p| {
                        let limit = opts.cluster_limit.unwrap_or_else(|| default_distance_limit(p));
                        cluster_cells(p, limit)
                    })
                },
            )
        },
        || {
            rayon::join(
                || {
                    rayon::join(
                        || taint_seeds.map(|s| compute_taint(n, s)),
                        || {
                            let g = build_register_dependency_graph(n);
                            let s = compute_sccs(&g);
                            (g, s)
                        },
                    )
                },
                || {
                    if n.registers().len() < 2 {
                        Ok(vec![0.0; n.registers().len()])
                    } else {
                        compute_relic_zscores(n, opts.relic_depth)
                    }
                },
            )
        },
    );
    let p_s = p_s?;
    let z = z?;
    let p_t = compute_transition_probability(&p_s);
    let mut cluster_of = vec![None; n.cells().len()];
    let mut cluster_centroids = Vec::new();
    if let Some(c) = clusters {
        for (name, &id) in &c.cluster_of {
            if let Some(cell) = n.find_cell(name) {
                cluster_of[cell.index()] = Some(id);
            }
        }
        cluster_centroids = c.centroids;
    }
    let fsm_scc = identify_fsm_scc(&z, &scc_of);
    Ok(MetricsStore {
        p_s,
        p_t,
        cluster_of,
        cluster_centroids,
        tainted,
        registers: graph.registers,
        dependency_edges: graph.edges.iter().map(Vec::len).sum(),
        z_score: z,
        scc_of,
        fsm_scc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;
    use crate::netlist::tests::lib;

    #[test]
    fn taint_follows_fanout() {
        let src = "module t (a, b, c, y, z);\ninput a, b, c;\noutput y, z;\n\
                   AND2 g (.a(a), .b(b), .o(y));\nINV i (.a(c), .o(z));\nendmodule";
        let n = parse_netlist(src, lib()).unwrap();
        let t = compute_taint(&n, &[n.find_net("a").unwrap()]);
        assert!(t.contains(n.find_net("y").unwrap().index()));
        assert!(!t.contains(n.find_net("z").unwrap().index()));
    }

    #[test]
    fn store_and_dump() {
        let src = "module t (clk, a);\ninput clk, a;\nDFF r (.D(d), .CK(clk), .Q(q));\n\
                   AND2 g (.a(q), .b(a), .o(d));\nendmodule";
        let n = parse_netlist(src, lib()).unwrap();
        let m = compute_metrics(&n, None, None, &AnalysisOptions::default()).unwrap();
        assert_eq!(m.z_score, vec![0.0]);
        assert_eq!(m.fsm_scc, Some(0));
        for (ps, pt) in m.p_s.iter().zip(&m.p_t) {
            assert_eq!(*pt, 2.0 * ps * (1.0 - ps));
        }
        let dump = m.dump(&n);
        assert!(dump.contains("reg r z 0 scc 0"));
        assert!(dump.ends_with("fsm 0\n"));
    }
}
