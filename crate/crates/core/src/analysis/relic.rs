// SPDX-License-Identifier: Apache-2.0

//! Fan-in similarity between registers and the resulting z-scores.
//!
//! Each register is represented by the fan-in tree of its d net, truncated
//! at a fixed depth. Node labels are the driving gate (kind and output pin),
//! or the source class for primary inputs, register outputs and constants.
//! Trees are hash-consed, so structurally identical subtrees share an id.
//!
//! The similarity of two trees is the size of a greedy top-down matching
//! divided by the larger tree size: roots match iff their labels are equal,
//! and child pairs are matched greedily by descending matched size.

use super::AnalysisError;
use crate::netlist::{Driver, NetId, Netlist};
use rayon::prelude::*;
use std::collections::HashMap;

pub const DEFAULT_DEPTH: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Label {
    Gate(u32, u16),
    Input,
    RegisterOutput,
    Const(bool),
}

#[derive(Debug, Default)]
pub struct TreeArena {
    nodes: Vec<(Label, Vec<u32>)>,
    sizes: Vec<usize>,
    interned: HashMap<(Label, Vec<u32>), u32>,
}

impl TreeArena {
    fn intern(&mut self, label: Label, mut children: Vec<u32>) -> u32 {
        children.sort_unstable();
        let key = (label, children);
        if let Some(&id) = self.interned.get(&key) {
            return id;
        }
        let id = self.nodes.len() as u32;
        let size = 1 + key.1.iter().map(|&c| self.sizes[c as usize]).sum::<usize>();
        self.sizes.push(size);
        self.nodes.push(key.clone());
        self.interned.insert(key, id);
        id
    }

    pub fn size(&self, id: u32) -> usize {
        self.sizes[id as usize]
    }

    /// Greedy top-down match size between two trees.
    pub fn match_size(&self, a: u32, b: u32, memo: &mut HashMap<(u32, u32), usize>) -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if a == b {
            return self.size(a);
        }
        let (la, ca) = &self.nodes[a as usize];
        let (lb, cb) = &self.nodes[b as usize];
        if la != lb {
            return 0;
        }
        if let Some(&m) = memo.get(&(a, b)) {
            return m;
        }
        let mut pairs = Vec::with_capacity(ca.len() * cb.len());
        for (i, &x) in ca.iter().enumerate() {
            for (j, &y) in cb.iter().enumerate() {
                let m = self.match_size(x, y, memo);
                if m > 0 {
                    pairs.push((m, i, j));
                }
            }
        }
        pairs.sort_by(|p, q| q.0.cmp(&p.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
        let mut used_a = vec![false; ca.len()];
        let mut used_b = vec![false; cb.len()];
        let mut total = 1;
        for (m, i, j) in pairs {
            if !used_a[i] && !used_b[j] {
                used_a[i] = true;
                used_b[j] = true;
                total += m;
            }
        }
        memo.insert((a, b), total);
        total
    }

    pub fn similarity(&self, a: u32, b: u32, memo: &mut HashMap<(u32, u32), usize>) -> f64 {
        let m = self.match_size(a, b, memo);
        m as f64 / self.size(a).max(self.size(b)) as f64
    }
}

/// Builds the depth-truncated fan-in tree of every register's d net.
/// Returns the arena and one tree id per register (in register order).
pub fn register_trees(n: &Netlist, depth: usize) -> (TreeArena, Vec<u32>) {
    let mut arena = TreeArena::default();
    let mut memo: HashMap<(NetId, usize), u32> = HashMap::new();
    let roots = n
        .registers()
        .iter()
        .map(|&r| tree(n, n.register_d(r), depth, &mut arena, &mut memo))
        .collect();
    (arena, roots)
}

fn tree(
    n: &Netlist,
    net: NetId,
    depth: usize,
    arena: &mut TreeArena,
    memo: &mut HashMap<(NetId, usize), u32>,
) -> u32 {
    if let Some(&id) = memo.get(&(net, depth)) {
        return id;
    }
    let (label, children) = match n.net(net).driver {
        Driver::PrimaryInput => (Label::Input, Vec::new()),
        Driver::Const(v) => (Label::Const(v), Vec::new()),
        Driver::Cell(p) if n.is_register(p.cell) => (Label::RegisterOutput, Vec::new()),
        Driver::Cell(p) => {
            let label = Label::Gate(n.cell(p.cell).kind.0, p.pin);
            if depth == 0 {
                (label, Vec::new())
            } else {
                let ninputs = n.kind_of(p.cell).inputs.len();
                let ins = n.cell(p.cell).pins[..ninputs].to_vec();
                let children = ins
                    .into_iter()
                    .map(|i| tree(n, i, depth - 1, arena, memo))
                    .collect();
                (label, children)
            }
        }
    };
    let id = arena.intern(label, children);
    memo.insert((net, depth), id);
    id
}

/// Dissimilarity per register: one minus the best similarity to any other
/// register.
pub fn relic_dissimilarity(n: &Netlist, depth: usize) -> Vec<f64> {
    let (arena, roots) = register_trees(n, depth);
    let mut classes: Vec<u32> = roots.clone();
    classes.sort_unstable();
    let mut multiplicity: HashMap<u32, usize> = HashMap::new();
    for &c in &classes {
        *multiplicity.entry(c).or_default() += 1;
    }
    classes.dedup();
    let best: HashMap<u32, f64> = classes
        .par_iter()
        .map(|&a| {
            if multiplicity[&a] > 1 {
                return (a, 1.0);
            }
            let mut memo = HashMap::new();
            let sa = arena.size(a);
            let mut best = 0.0f64;
            for &b in &classes {
                if b == a {
                    continue;
                }
                let sb = arena.size(b);
                let bound = sa.min(sb) as f64 / sa.max(sb) as f64;
                if bound <= best {
                    continue;
                }
                best = best.max(arena.similarity(a, b, &mut memo));
            }
            (a, best)
        })
        .collect();
    roots.iter().map(|r| 1.0 - best[r]).collect()
}

/// Standard scores of `d`, using the population standard deviation.
/// All zero when the deviation vanishes.
pub fn z_scores(d: &[f64]) -> Vec<f64> {
    if d.is_empty() {
        return Vec::new();
    }
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / d.len() as f64;
    let sd = var.sqrt();
    if sd < 1e-12 {
        return vec![0.0; d.len()];
    }
    d.iter().map(|x| (x - mean) / sd).collect()
}

/// z-score per register, in register order.
pub fn compute_relic_zscores(n: &Netlist, depth: usize) -> Result<Vec<f64>, AnalysisError> {
    if n.registers().len() < 2 {
        return Err(AnalysisError::TooFewRegisters(n.registers().len()));
    }
    if depth == 0 {
        return Err(AnalysisError::InvalidParameter("depth must be at least 1".into()));
    }
    Ok(z_scores(&relic_dissimilarity(n, depth)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;
    use crate::netlist::tests::lib;

    #[test]
    fn identical_registers_have_zero_z() {
        let mut src = String::from("module t (clk, a, b);\ninput clk, a, b;\n");
        for i in 0..8 {
            src += &format!("AND2 g{i} (.a(a), .b(b), .o(n{i}));\nDFF r{i} (.D(n{i}), .CK(clk), .Q());\n");
        }
        src += "endmodule";
        let n = parse_netlist(&src, lib()).unwrap();
        assert_eq!(compute_relic_zscores(&n, 5).unwrap(), vec![0.0; 8]);
    }

    #[test]
    fn and_versus_or_is_symmetric_and_partial() {
        let src = "module t (clk, a, b);\ninput clk, a, b;\nAND2 g (.a(a), .b(b), .o(x));\n\
                   OR2 h (.a(a), .b(b), .o(y));\nDFF r (.D(x), .CK(clk), .Q());\nDFF s (.D(y), .CK(clk), .Q());\nendmodule";
        let n = parse_netlist(src, lib()).unwrap();
        let (arena, roots) = register_trees(&n, 1);
        let mut memo = HashMap::new();
        let ab = arena.similarity(roots[0], roots[1], &mut memo);
        let ba = arena.similarity(roots[1], roots[0], &mut HashMap::new());
        assert!(ab < 1.0);
        assert_eq!(ab, ba);
    }

    #[test]
    fn z_scores_standardised() {
        let z = z_scores(&[0.0, 0.0, 0.0, 1.0]);
        let mean: f64 = z.iter().sum::<f64>() / 4.0;
        let var: f64 = z.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
        assert_eq!(z.iter().cloned().fold(f64::MIN, f64::max), z[3]);
    }
}
