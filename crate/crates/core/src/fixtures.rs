// SPDX-License-Identifier: Apache-2.0

//! Bundled targets and the cell library they use.
//!
//! * `four_pi`: four buffered inputs.
//! * `comb_*`: small loop-free combinational blocks.
//! * `control_fsm`: a 5-bit Johnson counter gating a 16-bit accumulator.
//! * `toy_aes`: a 64-bit substitution-permutation round with key addition,
//!   iterated eight times by a round counter.
//! * `synthetic`: seeded random sequential logic of any size.

use crate::library::{parse_cell_library, CellLibrary};
use crate::netlist::{Netlist, NetlistBuilder};
use crate::placement::Placement;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::sync::Arc;

pub const LIBRARY_TEXT: &str = "\
# Generic library: areas in square micrometers.
INV: o = !a; area 1
BUF: o = a; area 1
AND2: o = a & b; area 1.5
OR2: o = a | b; area 1.5
NAND2: o = !(a & b); area 1.25
NOR2: o = !(a | b); area 1.25
XOR2: o = a ^ b; area 2
XNOR2: o = !(a ^ b); area 2
DFF: seq d D clk CK q Q; area 4.5
DFFR: seq d D clk CK q Q reset RN low; area 5
";

pub fn library() -> Arc<CellLibrary> {
    Arc::new(parse_cell_library(LIBRARY_TEXT).expect("bundled library parses"))
}

/// 4-bit substitution box used by `toy_aes`.
pub const SBOX: [u8; 16] = [0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD, 0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2];

/// A bundled target.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub netlist: Netlist,
    pub placement: Placement,
    /// Inputs carrying secrets.
    pub taint_seeds: Vec<String>,
}

impl Fixture {
    fn new(netlist: Netlist, density: f64, taint_seeds: Vec<String>) -> Fixture {
        let placement = place_grid(&netlist, density);
        Fixture {
            name: netlist.module().to_string(),
            netlist,
            placement,
            taint_seeds,
        }
    }
}

/// Places cells row by row in cell order on a square die sized so that cell
/// area covers `density` of it.
pub fn place_grid(n: &Netlist, density: f64) -> Placement {
    let area = n.total_area().max(1.0);
    let side = (area / density).sqrt();
    let count = n.cells().len().max(1);
    let per_row = (count as f64).sqrt().ceil() as usize;
    let pitch = side / per_row as f64;
    let mut p = Placement::new(side, side, density);
    for (i, c) in n.cells().iter().enumerate() {
        let x = ((i % per_row) as f64 + 0.5) * pitch;
        let y = ((i / per_row) as f64 + 0.5) * pitch;
        p.cells.insert(c.name.clone(), (x, y));
    }
    p
}

/// Name-generating gate builder.
struct Gates {
    b: NetlistBuilder,
    prefix: String,
    next: usize,
}

impl Gates {
    fn new(module: &str) -> Gates {
        Gates {
            b: NetlistBuilder::new(module, library()),
            prefix: "u".into(),
            next: 0,
        }
    }

    fn fresh(&mut self) -> (String, String) {
        self.next += 1;
        (format!("{}{}", self.prefix, self.next), format!("{}_n{}", self.prefix, self.next))
    }

    fn gate(&mut self, kind: &str, ins: &[&str]) -> String {
        let (cell, out) = self.fresh();
        let mut pins: Vec<(&str, &str)> = ["a", "b"].iter().copied().zip(ins.iter().copied()).collect();
        pins.push(("o", &out));
        self.b.add_cell(&cell, kind, &pins).expect("fixture cell");
        out
    }

    fn inv(&mut self, a: &str) -> String {
        self.gate("INV", &[a])
    }
    fn and(&mut self, a: &str, b: &str) -> String {
        self.gate("AND2", &[a, b])
    }
    fn or(&mut self, a: &str, b: &str) -> String {
        self.gate("OR2", &[a, b])
    }
    fn xor(&mut self, a: &str, b: &str) -> String {
        self.gate("XOR2", &[a, b])
    }

    /// `s ? one : zero`
    fn mux(&mut self, s: &str, one: &str, zero: &str) -> String {
        let ns = self.inv(s);
        let x = self.and(s, one);
        let y = self.and(&ns, zero);
        self.or(&x, &y)
    }

    fn reg(&mut self, name: &str, d: &str, q: &str) {
        self.b
            .add_cell(name, "DFFR", &[("D", d), ("CK", "clk"), ("RN", "rst_n"), ("Q", q)])
            .expect("fixture register");
    }

    fn build(self) -> Netlist {
        self.b.build().expect("fixture builds")
    }
}

fn bus(name: &str, i: usize) -> String {
    format!("{name}[{i}]")
}

/// Four inputs, each buffered to an output.
pub fn four_pi() -> Fixture {
    let mut g = Gates::new("four_pi");
    for i in ["a", "b", "c", "d"] {
        g.b.add_input(i);
        let o = g.gate("BUF", &[i]);
        g.b.add_output(&format!("y_{i}"), &o);
    }
    Fixture::new(g.build(), 0.5, Vec::new())
}

/// Loop-free combinational fixtures, each under 500 gates.
pub fn combinational() -> Vec<Fixture> {
    let mut out = Vec::new();

    // Parity of 16 inputs.
    let mut g = Gates::new("comb_parity16");
    let mut level: Vec<String> = (0..16).map(|i| bus("x", i)).collect();
    for s in &level {
        g.b.add_input(s);
    }
    while level.len() > 1 {
        level = level.chunks(2).map(|p| g.xor(&p[0], &p[1])).collect();
    }
    g.b.add_output("p", &level[0]);
    out.push(g.build());

    // 4-to-16 decoder.
    let mut g = Gates::new("comb_decoder4");
    let ins: Vec<String> = (0..4).map(|i| bus("s", i)).collect();
    for s in &ins {
        g.b.add_input(s);
    }
    let neg: Vec<String> = ins.iter().map(|s| g.inv(s)).collect();
    for k in 0..16 {
        let lit = |i: usize| if k >> i & 1 == 1 { ins[i].clone() } else { neg[i].clone() };
        let lo = g.and(&lit(0), &lit(1));
        let hi = g.and(&lit(2), &lit(3));
        let o = g.and(&lo, &hi);
        g.b.add_output(&bus("y", k), &o);
    }
    out.push(g.build());

    // Fanout-free AND/OR tree over 32 inputs.
    let mut g = Gates::new("comb_andor32");
    let mut level: Vec<String> = (0..32).map(|i| bus("x", i)).collect();
    for s in &level {
        g.b.add_input(s);
    }
    let mut depth = 0;
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|p| if depth % 2 == 0 { g.and(&p[0], &p[1]) } else { g.or(&p[0], &p[1]) })
            .collect();
        depth += 1;
    }
    g.b.add_output("y", &level[0]);
    out.push(g.build());

    // c17-style NAND network.
    let mut g = Gates::new("comb_c17");
    for i in 1..=5 {
        g.b.add_input(&format!("i{i}"));
    }
    let n10 = g.gate("NAND2", &["i1", "i3"]);
    let n11 = g.gate("NAND2", &["i3", "i4"]);
    let n16 = g.gate("NAND2", &["i2", &n11]);
    let n19 = g.gate("NAND2", &[&n11, "i5"]);
    let n22 = g.gate("NAND2", &[&n10, &n16]);
    let n23 = g.gate("NAND2", &[&n16, &n19]);
    g.b.add_output("o22", &n22);
    g.b.add_output("o23", &n23);
    out.push(g.build());

    // 4-bit ripple-carry adder.
    let mut g = Gates::new("comb_adder4");
    for i in 0..4 {
        g.b.add_input(&bus("a", i));
        g.b.add_input(&bus("b", i));
    }
    g.b.add_input("cin");
    let mut c = "cin".to_string();
    for i in 0..4 {
        let (a, b) = (bus("a", i), bus("b", i));
        let p = g.xor(&a, &b);
        let s = g.xor(&p, &c);
        let gen = g.and(&a, &b);
        let prop = g.and(&p, &c);
        c = g.or(&gen, &prop);
        g.b.add_output(&bus("s", i), &s);
    }
    g.b.add_output("cout", &c);
    out.push(g.build());

    // Seeded fanout-free random trees of mixed gates.
    for seed in 0..2u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = Gates::new(&format!("comb_tree{seed}"));
        let mut pool: Vec<String> = (0..48).map(|i| bus("x", i)).collect();
        for s in &pool {
            g.b.add_input(s);
        }
        let kinds = ["AND2", "OR2", "NAND2", "NOR2", "XOR2", "XNOR2"];
        while pool.len() > 6 {
            let a = pool.swap_remove(rng.gen_range(0..pool.len()));
            let b = pool.swap_remove(rng.gen_range(0..pool.len()));
            let k = kinds[rng.gen_range(0..kinds.len())];
            let o = g.gate(k, &[&a, &b]);
            let o = if rng.gen_bool(0.2) { g.inv(&o) } else { o };
            pool.push(o);
        }
        for (i, p) in pool.iter().enumerate() {
            g.b.add_output(&bus("y", i), p);
        }
        out.push(g.build());
    }
    out.into_iter().map(|n| Fixture::new(n, 0.5, Vec::new())).collect()
}

/// Johnson-counter FSM (`st[0..5]`) enabling a 16-bit accumulator
/// (`acc[0..16]`) that adds `din` whenever the counter reads `00001`.
pub fn control_fsm() -> Fixture {
    let mut g = Gates::new("control_fsm");
    g.b.add_input("clk");
    g.b.add_input("rst_n");
    for i in 0..16 {
        g.b.add_input(&bus("din", i));
    }
    let st: Vec<String> = (0..5).map(|i| bus("st", i)).collect();
    g.prefix = "fsm".into();
    let d0 = g.inv(&st[4]);
    g.reg("fsm_r0", &d0, &st[0]);
    for i in 1..5 {
        let d = g.gate("BUF", &[&st[i - 1]]);
        g.reg(&format!("fsm_r{i}"), &d, &st[i]);
    }
    let n1 = g.inv(&st[1]);
    let en = g.and(&st[0], &n1);
    g.b.add_output("busy", &en);

    g.prefix = "dp".into();
    let mut carry: Option<String> = None;
    for i in 0..16 {
        let (a, b) = (bus("acc", i), bus("din", i));
        let p = g.xor(&a, &b);
        let (s, c) = match &carry {
            None => (p, g.and(&a, &b)),
            Some(c) => {
                let s = g.xor(&p, c);
                let gen = g.and(&a, &b);
                let prop = g.and(&p, c);
                (s, g.or(&gen, &prop))
            }
        };
        carry = Some(c);
        let d = g.mux(&en, &s, &a);
        g.reg(&format!("dp_r{i:02}"), &d, &a);
        g.b.add_output(&bus("q", i), &a);
    }
    let seeds = (0..16).map(|i| bus("din", i)).collect();
    Fixture::new(g.build(), 0.5, seeds)
}

/// Straight-line model of one `toy_aes` round: substitute each nibble,
/// move nibble `i` to position `3i mod 16`, mix each bit with the bits 8 and
/// 13 places above it, and add the key.
pub fn toy_aes_round(state: u64, key: u64) -> u64 {
    let mut t = 0u64;
    for i in 0..16 {
        let nib = SBOX[(state >> (4 * i) & 0xF) as usize] as u64;
        t |= nib << (4 * ((3 * i) % 16));
    }
    t ^ t.rotate_right(8) ^ t.rotate_right(13) ^ key
}

/// Shannon expansion of a 4-input truth table with folding and sharing.
struct SboxSynth<'a> {
    g: &'a mut Gates,
    vars: [String; 4],
    nvars: [Option<String>; 4],
    memo: HashMap<(usize, u16), Option<String>>,
}

enum Bit {
    Const(bool),
    Net(String),
}

impl SboxSynth<'_> {
    fn not(&mut self, k: usize) -> String {
        if self.nvars[k].is_none() {
            let v = self.vars[k].clone();
            self.nvars[k] = Some(self.g.inv(&v));
        }
        self.nvars[k].clone().expect("set")
    }

    /// Function of variables `0..k` given by the low `2^k` bits of `tt`.
    fn synth(&mut self, k: usize, tt: u16) -> Bit {
        let width = 1u32 << k;
        let mask = if width == 16 { 0xFFFF } else { (1u16 << width) - 1 };
        let tt = tt & mask;
        if tt == 0 {
            return Bit::Const(false);
        }
        if tt == mask {
            return Bit::Const(true);
        }
        if let Some(Some(n)) = self.memo.get(&(k, tt)) {
            return Bit::Net(n.clone());
        }
        let half = width / 2;
        let lo = tt & ((1u16 << half) - 1);
        let hi = tt >> half;
        let x = self.vars[k - 1].clone();
        let r = if lo == hi {
            self.synth(k - 1, lo)
        } else {
            let f1 = self.synth(k - 1, hi);
            let f0 = self.synth(k - 1, lo);
            Bit::Net(match (f1, f0) {
                (Bit::Const(true), Bit::Const(false)) => x,
                (Bit::Const(false), Bit::Const(true)) => self.not(k - 1),
                (Bit::Const(false), Bit::Net(f0)) => {
                    let nx = self.not(k - 1);
                    self.g.and(&nx, &f0)
                }
                (Bit::Const(true), Bit::Net(f0)) => self.g.or(&x, &f0),
                (Bit::Net(f1), Bit::Const(false)) => self.g.and(&x, &f1),
                (Bit::Net(f1), Bit::Const(true)) => {
                    let nx = self.not(k - 1);
                    self.g.or(&nx, &f1)
                }
                (Bit::Net(f1), Bit::Net(f0)) => {
                    let nx = self.not(k - 1);
                    let a = self.g.and(&x, &f1);
                    let b = self.g.and(&nx, &f0);
                    self.g.or(&a, &b)
                }
                (Bit::Const(_), Bit::Const(_)) => unreachable!("equal halves handled"),
            })
        };
        if let Bit::Net(n) = &r {
            self.memo.insert((k, tt), Some(n.clone()));
        }
        r
    }
}

/// Eight-round toy block cipher on 64 bits. `start` loads `pt ^ key`; each following
/// cycle applies [`toy_aes_round`] until the round counter wraps, and `done`
/// rises in the last round.
pub fn toy_aes() -> Fixture {
    const W: usize = 64;
    let mut g = Gates::new("toy_aes");
    for i in ["clk", "rst_n", "start"] {
        g.b.add_input(i);
    }
    for i in 0..W {
        g.b.add_input(&bus("pt", i));
    }
    for i in 0..W {
        g.b.add_input(&bus("key", i));
    }
    g.prefix = "ctl".into();
    let busy = "busy".to_string();
    let rnd: Vec<String> = (0..3).map(|i| bus("rnd", i)).collect();
    let r01 = g.and(&rnd[0], &rnd[1]);
    let last = g.and(&r01, &rnd[2]);
    let nlast = g.inv(&last);
    let stay = g.and(&busy, &nlast);
    let busy_d = g.or("start", &stay);
    g.reg("ctl_busy", &busy_d, &busy);
    let nstart = g.inv("start");
    let run = g.and(&busy, &nstart);
    let mut carry = run.clone();
    for (i, r) in rnd.iter().enumerate() {
        let s = g.xor(r, &carry);
        let c = g.and(r, &carry);
        let d = g.and(&s, &run);
        g.reg(&format!("ctl_rnd{i}"), &d, r);
        carry = c;
    }
    let done = g.and(&busy, &last);
    g.b.add_output("done", &done);

    let st: Vec<String> = (0..W).map(|i| bus("st", i)).collect();
    let mut t: Vec<String> = vec![String::new(); W];
    for nib in 0..W / 4 {
        g.prefix = format!("sb{nib}");
        let vars: [String; 4] = std::array::from_fn(|j| st[4 * nib + j].clone());
        let mut s = SboxSynth {
            g: &mut g,
            vars,
            nvars: Default::default(),
            memo: HashMap::new(),
        };
        let pos = (3 * nib) % (W / 4);
        for bit in 0..4 {
            let mut tt = 0u16;
            for x in 0..16 {
                if SBOX[x] >> bit & 1 == 1 {
                    tt |= 1 << x;
                }
            }
            match s.synth(4, tt) {
                Bit::Net(n) => t[4 * pos + bit] = n,
                Bit::Const(_) => unreachable!("substitution outputs are balanced"),
            }
        }
    }
    g.prefix = "mx".into();
    for i in 0..W {
        let a = g.xor(&t[i], &t[(i + 8) % W]);
        let m = g.xor(&a, &t[(i + 13) % W]);
        let k = bus("key", i);
        let rk = g.xor(&m, &k);
        let pk = g.xor(&bus("pt", i), &k);
        let upd = g.mux(&run, &rk, &st[i]);
        let d = g.mux("start", &pk, &upd);
        g.reg(&format!("st_r{i:02}"), &d, &st[i]);
        g.b.add_output(&bus("ct", i), &st[i]);
    }
    let seeds = (0..W).map(|i| bus("key", i)).collect();
    Fixture::new(g.build(), 0.5, seeds)
}

/// Seeded random sequential netlist with about `cells` cells, a tenth of
/// them registers.
pub fn synthetic(cells: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Gates::new(&format!("synth{cells}"));
    g.b.add_input("clk");
    g.b.add_input("rst_n");
    let inputs = 64.min(cells / 4).max(2);
    let regs = cells / 10;
    let mut pool: Vec<String> = (0..inputs).map(|i| bus("in", i)).collect();
    for s in &pool {
        g.b.add_input(s);
    }
    let qs: Vec<String> = (0..regs).map(|i| bus("q", i)).collect();
    pool.extend(qs.iter().cloned());
    let kinds = ["AND2", "OR2", "NAND2", "NOR2", "XOR2", "XNOR2", "INV"];
    let comb = cells - regs;
    let mut produced = Vec::with_capacity(comb);
    for _ in 0..comb {
        let k = kinds[rng.gen_range(0..kinds.len())];
        // Prefer recent nets so that logic forms deep cones.
        let pick = |rng: &mut ChaCha8Rng| {
            let len = pool.len();
            let back = (rng.gen::<f64>().powi(3) * len as f64) as usize;
            pool[len - 1 - back.min(len - 1)].clone()
        };
        let a = pick(&mut rng);
        let o = if k == "INV" {
            g.inv(&a)
        } else {
            let mut b = pick(&mut rng);
            if b == a {
                b = pool[rng.gen_range(0..pool.len())].clone();
            }
            if b == a {
                g.inv(&a)
            } else {
                g.gate(k, &[&a, &b])
            }
        };
        pool.push(o.clone());
        produced.push(o);
    }
    for (i, q) in qs.iter().enumerate() {
        let d = produced[rng.gen_range(0..produced.len())].clone();
        g.reg(&format!("r{i:05}"), &d, q);
    }
    for i in 0..32.min(produced.len()) {
        g.b.add_output(&bus("out", i), &produced[produced.len() - 1 - i]);
    }
    Fixture::new(g.build(), 0.5, Vec::new())
}

/// Every bundled fixture by name.
pub fn by_name(name: &str) -> Option<Fixture> {
    match name {
        "four_pi" => Some(four_pi()),
        "control_fsm" => Some(control_fsm()),
        "toy_aes" => Some(toy_aes()),
        "synth10k" => Some(synthetic(10_000, 1)),
        _ => combinational().into_iter().find(|f| f.name == name),
    }
}

pub fn names() -> Vec<String> {
    let mut v: Vec<String> = ["four_pi", "control_fsm", "toy_aes", "synth10k"].map(String::from).to_vec();
    v.extend(combinational().into_iter().map(|f| f.name));
    v
}
