// SPDX-License-Identifier: Apache-2.0

//! Derived graph views: global signals, the register-split signal DAG and
//! forward cones.

use super::{CellId, Driver, NetId, Netlist, NetlistError};
use crate::library::Polarity;
use fixedbitset::FixedBitSet;
use std::collections::{BTreeMap, VecDeque};
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GlobalSignals {
    pub clock: NetId,
    pub reset: Option<(NetId, Polarity)>,
}

/// Picks the net on the most clock pins as clock and the net on the most
/// reset pins as reset; ties go to the smaller net name. Reset polarity is
/// the majority polarity of the pins it drives, low on a tie.
pub fn identify_globals(n: &Netlist) -> Result<GlobalSignals, NetlistError> {
    if n.registers().is_empty() {
        return Err(NetlistError::NoSequentialCells);
    }
    let mut clocks: BTreeMap<&str, (NetId, usize)> = BTreeMap::new();
    let mut resets: BTreeMap<&str, (NetId, usize, usize)> = BTreeMap::new();
    for &r in n.registers() {
        let kind = n.kind_of(r);
        let roles = kind.seq.as_ref().expect("register");
        let cell = n.cell(r);
        let clk = cell.pins[roles.clock];
        clocks.entry(&n.net(clk).name).or_insert((clk, 0)).1 += 1;
        if let Some((pin, pol)) = roles.reset {
            let net = cell.pins[pin];
            let e = resets.entry(&n.net(net).name).or_insert((net, 0, 0));
            match pol {
                Polarity::High => e.1 += 1,
                Polarity::Low => e.2 += 1,
            }
        }
    }
    // BTreeMap iteration is by name, so `max_by_key` with a reversed order
    // keeps the first (smallest) name among equals.
    let clock = clocks
        .values()
        .rev()
        .max_by_key(|(_, count)| *count)
        .map(|(id, _)| *id)
        .expect("at least one register");
    let reset = resets
        .values()
        .rev()
        .max_by_key(|(_, hi, lo)| hi + lo)
        .map(|&(id, hi, lo)| (id, if hi > lo { Polarity::High } else { Polarity::Low }));
    Ok(GlobalSignals { clock, reset })
}

/// A node of the register-split DAG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DagNode {
    Net(NetId),
    /// Virtual output port standing for the d pin of a register.
    RegisterInput(CellId),
}

/// Signal dependency graph with every register replaced by a virtual input
/// (its q net, which has no predecessors) and a virtual output (its d pin).
///
/// Ancestor sets are computed on demand and cached; the structure is
/// `Sync`, so one DAG can serve concurrent queries.
#[derive(Debug)]
pub struct SignalDag {
    /// Combinational predecessor nets per net.
    preds: Vec<Vec<NetId>>,
    /// Nets that never count as ancestors (constants).
    opaque: FixedBitSet,
    register_d: BTreeMap<CellId, NetId>,
    ancestors: Vec<OnceLock<FixedBitSet>>,
    topo: Vec<NetId>,
}

impl SignalDag {
    pub fn net_count(&self) -> usize {
        self.preds.len()
    }

    pub fn predecessors(&self, net: NetId) -> &[NetId] {
        &self.preds[net.index()]
    }

    /// Nets in an order where every net follows its predecessors.
    pub fn topological_order(&self) -> &[NetId] {
        &self.topo
    }

    /// Net carried by a node: the d net for a register's virtual output.
    pub fn node_net(&self, node: DagNode) -> NetId {
        match node {
            DagNode::Net(n) => n,
            DagNode::RegisterInput(r) => self.register_d[&r],
        }
    }

    /// Ancestors of `net` including itself. Constant nets are excluded.
    pub fn ancestors(&self, net: NetId) -> &FixedBitSet {
        self.ancestors[net.index()].get_or_init(|| {
            let mut seen = FixedBitSet::with_capacity(self.preds.len());
            let mut stack = vec![net];
            seen.insert(net.index());
            while let Some(x) = stack.pop() {
                for &p in &self.preds[x.index()] {
                    if !seen.put(p.index()) {
                        stack.push(p);
                    }
                }
            }
            seen.difference_with(&self.opaque);
            seen
        })
    }

    pub fn node_ancestors(&self, node: DagNode) -> &FixedBitSet {
        self.ancestors(self.node_net(node))
    }

    /// True iff the inclusive ancestor sets of `a` and `b` are disjoint.
    pub fn are_independent(&self, a: NetId, b: NetId) -> bool {
        self.ancestors(a).is_disjoint(self.ancestors(b))
    }
}

/// Builds the register-split DAG. A combinational cycle is an error.
pub fn build_signal_dag(n: &Netlist) -> Result<SignalDag, NetlistError> {
    let mut preds = vec![Vec::new(); n.nets().len()];
    let mut opaque = FixedBitSet::with_capacity(n.nets().len());
    for id in n.net_ids() {
        let net = n.net(id);
        match net.driver {
            Driver::Const(_) => opaque.insert(id.index()),
            Driver::Cell(p) if !n.is_register(p.cell) => {
                let kind = n.kind_of(p.cell);
                let mut ins: Vec<NetId> = n.cell(p.cell).pins[..kind.inputs.len()].to_vec();
                ins.sort();
                ins.dedup();
                preds[id.index()] = ins;
            }
            _ => {}
        }
    }
    let topo = topo_nets(&preds).ok_or_else(|| {
        let mut nets = cycle_nets(n, &preds);
        nets.sort();
        NetlistError::CombinationalCycle { nets }
    })?;
    let register_d = n.registers().iter().map(|&r| (r, n.register_d(r))).collect();
    Ok(SignalDag {
        ancestors: (0..preds.len()).map(|_| OnceLock::new()).collect(),
        preds,
        opaque,
        register_d,
        topo,
    })
}

fn topo_nets(preds: &[Vec<NetId>]) -> Option<Vec<NetId>> {
    let mut succs = vec![Vec::new(); preds.len()];
    let mut indeg = vec![0usize; preds.len()];
    for (i, ps) in preds.iter().enumerate() {
        indeg[i] = ps.len();
        for p in ps {
            succs[p.index()].push(i);
        }
    }
    let mut q: VecDeque<usize> = (0..preds.len()).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(preds.len());
    while let Some(i) = q.pop_front() {
        order.push(NetId(i as u32));
        for &s in &succs[i] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                q.push_back(s);
            }
        }
    }
    (order.len() == preds.len()).then_some(order)
}

fn cycle_nets(n: &Netlist, preds: &[Vec<NetId>]) -> Vec<String> {
    let topo_done = {
        let mut done = vec![false; preds.len()];
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..preds.len() {
                if !done[i] && preds[i].iter().all(|p| done[p.index()]) {
                    done[i] = true;
                    changed = true;
                }
            }
        }
        done
    };
    (0..preds.len())
        .filter(|&i| !topo_done[i])
        .map(|i| n.net(NetId(i as u32)).name.clone())
        .collect()
}

/// All nets reachable from `seeds` through any cell, registers included.
/// Seeds are part of the result.
pub fn fanout_cone(n: &Netlist, seeds: &[NetId]) -> FixedBitSet {
    let mut seen = FixedBitSet::with_capacity(n.nets().len());
    let mut queue: VecDeque<NetId> = VecDeque::new();
    for &s in seeds {
        if !seen.put(s.index()) {
            queue.push_back(s);
        }
    }
    while let Some(net) = queue.pop_front() {
        for sink in &n.net(net).sinks {
            let kind = n.kind_of(sink.cell);
            for &out in &n.cell(sink.cell).pins[kind.inputs.len()..] {
                if !seen.put(out.index()) {
                    queue.push_back(out);
                }
            }
        }
    }
    seen
}
