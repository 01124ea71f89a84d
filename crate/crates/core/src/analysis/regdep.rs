// SPDX-License-Identifier: Apache-2.0

//! Register dependency graph, its strongly connected components, and FSM
//! identification.

use crate::netlist::{CellId, Netlist};
use fixedbitset::FixedBitSet;
use std::collections::HashMap;

/// Directed graph over registers: an edge `a -> b` means a purely
/// combinational path runs from the q of `a` to the d of `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterDependencyGraph {
    /// Registers sorted by name; graph node `i` is `registers[i]`.
    pub registers: Vec<CellId>,
    /// Sorted successor lists per node.
    pub edges: Vec<Vec<usize>>,
}

impl RegisterDependencyGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges[a].binary_search(&b).is_ok()
    }
}

pub fn build_register_dependency_graph(n: &Netlist) -> RegisterDependencyGraph {
    let registers = n.registers().to_vec();
    let index: HashMap<CellId, usize> = registers.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let mut edges = Vec::with_capacity(registers.len());
    let mut seen = FixedBitSet::with_capacity(n.nets().len());
    let mut stack = Vec::new();
    for &r in &registers {
        seen.clear();
        let mut succ = Vec::new();
        let q = n.register_q(r);
        seen.insert(q.index());
        stack.push(q);
        while let Some(net) = stack.pop() {
            for sink in &n.net(net).sinks {
                let kind = n.kind_of(sink.cell);
                if let Some(roles) = &kind.seq {
                    if sink.pin as usize == roles.d {
                        succ.push(index[&sink.cell]);
                    }
                    continue;
                }
                for &out in &n.cell(sink.cell).pins[kind.inputs.len()..] {
                    if !seen.put(out.index()) {
                        stack.push(out);
                    }
                }
            }
        }
        succ.sort_unstable();
        succ.dedup();
        edges.push(succ);
    }
    RegisterDependencyGraph { registers, edges }
}

/// SCC id per graph node: the smallest node index of its component.
/// Iterative Tarjan.
pub fn compute_sccs(g: &RegisterDependencyGraph) -> Vec<usize> {
    let count = g.edges.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; count];
    let mut low = vec![0; count];
    let mut on_stack = vec![false; count];
    let mut stack = Vec::new();
    let mut comp = vec![UNSEEN; count];
    let mut next = 0;
    let mut work: Vec<(usize, usize)> = Vec::new();
    for root in 0..count {
        if index[root] != UNSEEN {
            continue;
        }
        work.push((root, 0));
        while let Some(&(v, edge)) = work.last() {
            if edge == 0 && index[v] == UNSEEN {
                index[v] = next;
                low[v] = next;
                next += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = g.edges[v].get(edge) {
                work.last_mut().expect("nonempty").1 += 1;
                if index[w] == UNSEEN {
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut members = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    members.push(w);
                    if w == v {
                        break;
                    }
                }
                let id = *members.iter().min().expect("nonempty");
                for m in members {
                    comp[m] = id;
                }
            }
        }
    }
    comp
}

/// SCC of the register with the highest z-score; ties go to the smallest
/// register index.
pub fn identify_fsm_scc(z: &[f64], scc: &[usize]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in z.iter().enumerate() {
        if best.is_none_or(|b| v > z[b]) {
            best = Some(i);
        }
    }
    best.map(|b| scc[b])
}
