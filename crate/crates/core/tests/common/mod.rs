// SPDX-License-Identifier: Apache-2.0

//! Random instances and brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use eco_trojan::fixtures;
use eco_trojan::insertion::{parse_tco, replay_tco};
use eco_trojan::library::Polarity;
use eco_trojan::logic::Logic;
use eco_trojan::netlist::{identify_globals, parse_netlist, write_netlist, Driver, GlobalSignals, NetId, Netlist, NetlistBuilder};
use eco_trojan::pipeline::{AttackReport, Outcome};
use eco_trojan::placement::{parse_placement, Placement};
use eco_trojan::trojan::{generate_trojan, LeakCode, PayloadSpec, TriggerSpec};
use eco_trojan::validation::{simulate_nets, Simulator, Stimulus};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

const GATES: [&str; 8] = ["INV", "BUF", "AND2", "OR2", "NAND2", "NOR2", "XOR2", "XNOR2"];

/// Random sequential netlist: `pis` data inputs, `regs` resettable
/// registers on `clk`/`rst_n` and `gates` gates over earlier nets. Register
/// D pins read any net, so register loops are common.
pub fn random_netlist(seed: u64, pis: usize, regs: usize, gates: usize) -> Netlist {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = NetlistBuilder::new("rnd", fixtures::library());
    b.add_input("clk");
    b.add_input("rst_n");
    let mut pool: Vec<String> = Vec::new();
    for i in 0..pis {
        let name = format!("i{i}");
        b.add_input(&name);
        pool.push(name);
    }
    for r in 0..regs {
        pool.push(format!("q{r}"));
    }
    for g in 0..gates {
        let kind = GATES[rng.gen_range(0..GATES.len())];
        let a = pool[rng.gen_range(0..pool.len())].clone();
        let o = format!("w{g}");
        if matches!(kind, "INV" | "BUF") {
            b.add_cell(&format!("g{g}"), kind, &[("a", &a), ("o", &o)]).unwrap();
        } else {
            let c = pool[rng.gen_range(0..pool.len())].clone();
            b.add_cell(&format!("g{g}"), kind, &[("a", &a), ("b", &c), ("o", &o)]).unwrap();
        }
        pool.push(o);
    }
    for r in 0..regs {
        let d = pool[rng.gen_range(0..pool.len())].clone();
        let q = format!("q{r}");
        b.add_cell(&format!("r{r}"), "DFFR", &[("D", &d), ("CK", "clk"), ("RN", "rst_n"), ("Q", &q)])
            .unwrap();
    }
    let outs = rng.gen_range(1..=4.min(pool.len()));
    for (k, net) in pool.choose_multiple(&mut rng, outs).enumerate() {
        b.add_output(&format!("y{k}"), net);
    }
    b.build().expect("random netlist is well formed")
}

pub fn random_globals(n: &Netlist) -> GlobalSignals {
    GlobalSignals {
        clock: n.find_net("clk").unwrap(),
        reset: Some((n.find_net("rst_n").unwrap(), Polarity::Low)),
    }
}

/// Nets driven by a combinational cell together with that cell's inputs.
fn comb_inputs(n: &Netlist) -> BTreeMap<usize, Vec<usize>> {
    let mut m = BTreeMap::new();
    for c in n.cell_ids() {
        let kind = n.kind_of(c);
        if kind.is_sequential() {
            continue;
        }
        let pins = &n.cell(c).pins;
        let ins: Vec<usize> = pins[..kind.inputs.len()].iter().map(|p| p.index()).collect();
        for o in &pins[kind.inputs.len()..] {
            m.insert(o.index(), ins.clone());
        }
    }
    m
}

/// Single-frame ancestors of every net, itself included, by memoised
/// recursion. Constants are dropped.
pub fn brute_ancestors(n: &Netlist) -> Vec<BTreeSet<usize>> {
    fn visit(x: usize, preds: &BTreeMap<usize, Vec<usize>>, memo: &mut Vec<Option<BTreeSet<usize>>>) -> BTreeSet<usize> {
        if let Some(s) = &memo[x] {
            return s.clone();
        }
        let mut s = BTreeSet::from([x]);
        for &p in preds.get(&x).into_iter().flatten() {
            s.extend(visit(p, preds, memo));
        }
        memo[x] = Some(s.clone());
        s
    }
    let preds = comb_inputs(n);
    let mut memo = vec![None; n.nets().len()];
    let consts: BTreeSet<usize> = n
        .net_ids()
        .filter(|&id| matches!(n.net(id).driver, Driver::Const(_)))
        .map(NetId::index)
        .collect();
    (0..n.nets().len())
        .map(|x| visit(x, &preds, &mut memo).difference(&consts).copied().collect())
        .collect()
}

/// Nets reached from `seeds` by repeating "a cell with any tainted input
/// taints its outputs" until nothing changes.
pub fn brute_fanout(n: &Netlist, seeds: &[NetId]) -> BTreeSet<usize> {
    let mut t: BTreeSet<usize> = seeds.iter().map(|s| s.index()).collect();
    loop {
        let before = t.len();
        for c in n.cell_ids() {
            let k = n.kind_of(c).inputs.len();
            let pins = &n.cell(c).pins;
            if pins[..k].iter().any(|p| t.contains(&p.index())) {
                t.extend(pins[k..].iter().map(|p| p.index()));
            }
        }
        if t.len() == before {
            return t;
        }
    }
}

/// Register `j` feeds register `i` iff the Q net of `j` is a single-frame
/// ancestor of the D net of `i`.
pub fn brute_register_edges(n: &Netlist) -> Vec<BTreeSet<usize>> {
    let anc = brute_ancestors(n);
    let regs = n.registers();
    regs.iter()
        .map(|&src| {
            let q = n.register_q(src).index();
            (0..regs.len()).filter(|&i| anc[n.register_d(regs[i]).index()].contains(&q)).collect()
        })
        .collect()
}

/// Register SCC partition from the transitive closure: two registers share
/// a component iff each reaches the other.
pub fn brute_scc_partition(edges: &[BTreeSet<usize>]) -> BTreeSet<BTreeSet<usize>> {
    let k = edges.len();
    let mut reach = vec![vec![false; k]; k];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
        for &j in &edges[i] {
            row[j] = true;
        }
    }
    for m in 0..k {
        for i in 0..k {
            if reach[i][m] {
                for j in 0..k {
                    if reach[m][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    (0..k)
        .map(|i| (0..k).filter(|&j| reach[i][j] && reach[j][i]).collect())
        .collect()
}

/// Groups node indices by component label.
pub fn partition_of(labels: &[usize]) -> BTreeSet<BTreeSet<usize>> {
    let mut m: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        m.entry(l).or_default().insert(i);
    }
    m.into_values().collect()
}

/// Output waveform of a leak payload that samples `secret` when a one-cycle
/// trigger pulse arrives at cycle 1.
pub fn leak_waveform(code: LeakCode, c: u32, n: usize, secret: u64) -> Vec<Logic> {
    let t = generate_trojan(
        &TriggerSpec::Combinational { n: 1, v: 1 },
        &PayloadSpec::Leak { n, code, c },
        fixtures::library(),
        "ht",
        Some(Polarity::Low),
    )
    .unwrap();
    let g = identify_globals(&t.netlist).unwrap();
    let inputs = Simulator::new(&t.netlist, Some(&g)).input_names();
    let cycles = 4 + (n + 2) * (1 << c);
    let vectors = (0..cycles)
        .map(|cycle| {
            inputs
                .iter()
                .map(|name| {
                    let v = match name.strip_prefix("ht_s") {
                        Some(i) => secret >> i.parse::<usize>().unwrap() & 1 == 1,
                        None => name == "ht_t0" && cycle == 1,
                    };
                    Logic::from_bool(v)
                })
                .collect()
        })
        .collect();
    let stim = Stimulus { inputs, reset_cycles: 1, vectors };
    let out = t.netlist.find_net("ht_leak").unwrap();
    let tr = simulate_nets(&t.netlist, Some(&g), &stim, &[out]).unwrap();
    tr.series("ht_leak").unwrap().to_vec()
}

/// Checks every artifact a pipeline run wrote under `dir`: tampered
/// netlists parse and equal the replay of their change order on the written
/// original, placements are legal and keep original coordinates, and each
/// testbench drives its trigger net to 1 at the reported cycle.
pub fn revalidate(dir: &Path, report: &AttackReport) -> Result<usize, String> {
    let lib = fixtures::library();
    let read = |rel: &str| std::fs::read_to_string(dir.join(rel)).map_err(|e| format!("{rel}: {e}"));
    let original_rel = report.original.as_deref().ok_or("no original netlist recorded")?;
    let original = parse_netlist(&read(original_rel)?, lib.clone()).map_err(|e| e.to_string())?;
    let original_place = parse_placement(&read("original.place")?, &original).map_err(|e| e.to_string())?;
    let globals = identify_globals(&original).ok();
    let mut checked = 0;
    for v in &report.variants {
        let a = &v.artifacts;
        for rel in [&a.tampered, &a.placement, &a.tco, &a.trojan, &a.testbench].into_iter().flatten() {
            if !dir.join(rel).is_file() {
                return Err(format!("{}: missing {rel}", v.name));
            }
        }
        if v.outcome != Outcome::Inserted {
            continue;
        }
        let (Some(t), Some(p), Some(tco), Some(tb)) = (&a.tampered, &a.placement, &a.tco, &a.testbench) else {
            return Err(format!("{}: inserted without full artifacts", v.name));
        };
        let text = read(t)?;
        let tampered = parse_netlist(&text, lib.clone()).map_err(|e| format!("{}: {e}", v.name))?;
        let script = parse_tco(&read(tco)?).map_err(|e| format!("{}: {e}", v.name))?;
        let replayed = replay_tco(&original, &script).map_err(|e| format!("{}: {e}", v.name))?;
        if write_netlist(&replayed) != text {
            return Err(format!("{}: replay differs from tampered netlist", v.name));
        }
        let placed: Placement = parse_placement(&read(p)?, &tampered).map_err(|e| format!("{}: {e}", v.name))?;
        for (cell, xy) in &original_place.cells {
            if placed.cells.get(cell) != Some(xy) {
                return Err(format!("{}: cell {cell} moved", v.name));
            }
        }
        let stim = Stimulus::parse(&read(tb)?).map_err(|e| format!("{}: {e}", v.name))?;
        let trig_name = v.trigger_net.as_deref().ok_or("no trigger net")?;
        let trig = tampered.find_net(trig_name).ok_or_else(|| format!("{}: no net {trig_name}", v.name))?;
        let cycle = v.cover.as_ref().and_then(|c| c.cycle).ok_or_else(|| format!("{}: no cover cycle", v.name))?;
        let tg = globals.map(|g| GlobalSignals {
            clock: tampered.find_net(&original.net(g.clock).name).expect("clock survives"),
            reset: g.reset.map(|(r, p)| (tampered.find_net(&original.net(r).name).expect("reset survives"), p)),
        });
        let tr = simulate_nets(&tampered, tg.as_ref(), &stim, &[trig]).map_err(|e| e.to_string())?;
        if tr.series(trig_name).and_then(|s| s.get(cycle)) != Some(&Logic::One) {
            return Err(format!("{}: testbench does not fire the trigger at cycle {cycle}", v.name));
        }
        checked += 1;
    }
    Ok(checked)
}
