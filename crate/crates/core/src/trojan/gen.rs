// SPDX-License-Identifier: Apache-2.0

//! Gate-level construction helpers shared by the trigger and payload
//! generators. Signals carry constants symbolically so that constant
//! operands fold away instead of becoming tie cells.

use super::GenError;
use crate::library::{CellLibrary, KindId, Polarity};
use crate::netlist::{const_net_name, NetlistBuilder};
use std::collections::HashMap;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sig {
    Const(bool),
    Net(String),
}

impl Sig {
    pub fn net(name: impl Into<String>) -> Sig {
        Sig::Net(name.into())
    }

    fn name(&self) -> &str {
        match self {
            Sig::Const(v) => const_net_name(*v),
            Sig::Net(n) => n,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Prims {
    and2: KindId,
    or2: KindId,
    inv: KindId,
    xor2: Option<KindId>,
    buf: Option<KindId>,
}

/// A flip-flop whose d input may be connected after creation.
#[derive(Debug, Clone)]
pub struct Reg {
    cell: String,
    pub q: Sig,
}

/// Names shared by the parts of one trojan.
#[derive(Debug, Clone)]
pub struct GenContext {
    /// Prefix of every generated name.
    pub name: String,
    /// Polarity of the target reset the trojan's registers follow, if any.
    pub reset: Option<Polarity>,
}

impl GenContext {
    pub fn new(name: &str, reset: Option<Polarity>) -> Self {
        GenContext {
            name: name.to_string(),
            reset,
        }
    }

    pub fn clock_port(&self) -> String {
        format!("{}_clk", self.name)
    }

    pub fn reset_port(&self) -> String {
        format!("{}_rst", self.name)
    }

    pub fn trigger_net(&self) -> String {
        format!("{}_trig", self.name)
    }
}

pub struct Gen {
    pub b: NetlistBuilder,
    ctx: GenContext,
    prefix: String,
    prims: Prims,
    ff: KindId,
    ff_pins: (String, String, Option<String>),
    /// Reset net as seen by the chosen flip-flop (possibly inverted).
    ff_reset: Option<String>,
    ff_reset_inverted: bool,
    next: usize,
    pub seq_count: usize,
    pub comb_count: usize,
    uses_clock: bool,
    inverted: HashMap<String, Sig>,
}

fn need(lib: &CellLibrary, arity: usize, table: u64, what: &str) -> Result<KindId, GenError> {
    lib.find_by_truth_table(arity, table)
        .ok_or_else(|| GenError::MissingKind(what.to_string()))
}

impl Gen {
    pub fn new(library: Arc<CellLibrary>, ctx: &GenContext, part: &str) -> Result<Self, GenError> {
        let lib = &*library;
        let prims = Prims {
            and2: need(lib, 2, 0b1000, "2-input AND")?,
            or2: need(lib, 2, 0b1110, "2-input OR")?,
            inv: need(lib, 1, 0b01, "inverter")?,
            xor2: lib.find_by_truth_table(2, 0b0110),
            buf: lib.find_by_truth_table(1, 0b10),
        };
        let (ff, ff_reset_pol) = match ctx.reset {
            None => (
                lib.find_flip_flop(None)
                    .ok_or_else(|| GenError::MissingKind("flip-flop without reset".into()))?,
                None,
            ),
            Some(p) => {
                let other = match p {
                    Polarity::High => Polarity::Low,
                    Polarity::Low => Polarity::High,
                };
                match lib.find_flip_flop(Some(p)) {
                    Some(k) => (k, Some(p)),
                    None => (
                        lib.find_flip_flop(Some(other)).ok_or_else(|| {
                            GenError::MissingKind("flip-flop with reset".into())
                        })?,
                        Some(other),
                    ),
                }
            }
        };
        let kind = lib.get(ff);
        let roles = kind.seq.as_ref().expect("flip-flop");
        let ff_pins = (
            kind.inputs[roles.d].clone(),
            kind.inputs[roles.clock].clone(),
            roles.reset.map(|(i, _)| kind.inputs[i].clone()),
        );
        let g = Gen {
            b: NetlistBuilder::new(&ctx.name, library.clone()),
            ctx: ctx.clone(),
            prefix: format!("{}_{}", ctx.name, part),
            prims,
            ff,
            ff_pins,
            ff_reset: None,
            ff_reset_inverted: matches!((ctx.reset, ff_reset_pol), (Some(a), Some(b)) if a != b),
            next: 0,
            seq_count: 0,
            comb_count: 0,
            uses_clock: false,
            inverted: HashMap::new(),
        };
        Ok(g)
    }

    pub fn ctx(&self) -> &GenContext {
        &self.ctx
    }

    fn fresh(&mut self) -> usize {
        self.next += 1;
        self.next - 1
    }

    pub fn input(&mut self, name: &str) -> Sig {
        self.b.add_input(name);
        Sig::net(name)
    }

    fn cell(&mut self, kind: KindId, inputs: &[&Sig], out: Option<&str>) -> Sig {
        let k = self.fresh();
        let cell = format!("{}_g{k}", self.prefix);
        let out = out
            .map(str::to_string)
            .unwrap_or_else(|| format!("{}_n{k}", self.prefix));
        let kind_def = self.b.library.get(kind).clone();
        let mut pins: Vec<(&str, &str)> = kind_def
            .inputs
            .iter()
            .zip(inputs)
            .map(|(p, s)| (p.as_str(), s.name()))
            .collect();
        pins.push((&kind_def.outputs[0], &out));
        self.b
            .add_cell(&cell, &kind_def.name, &pins)
            .expect("generated names are unique");
        self.comb_count += 1;
        Sig::Net(out)
    }

    pub fn inv(&mut self, a: &Sig) -> Sig {
        match a {
            Sig::Const(v) => Sig::Const(!v),
            Sig::Net(n) => {
                if let Some(s) = self.inverted.get(n) {
                    return s.clone();
                }
                let out = self.cell(self.prims.inv, &[a], None);
                self.inverted.insert(n.clone(), out.clone());
                out
            }
        }
    }

    pub fn and2(&mut self, a: &Sig, b: &Sig) -> Sig {
        match (a, b) {
            (Sig::Const(false), _) | (_, Sig::Const(false)) => Sig::Const(false),
            (Sig::Const(true), x) | (x, Sig::Const(true)) => x.clone(),
            _ if a == b => a.clone(),
            _ => self.cell(self.prims.and2, &[a, b], None),
        }
    }

    pub fn or2(&mut self, a: &Sig, b: &Sig) -> Sig {
        match (a, b) {
            (Sig::Const(true), _) | (_, Sig::Const(true)) => Sig::Const(true),
            (Sig::Const(false), x) | (x, Sig::Const(false)) => x.clone(),
            _ if a == b => a.clone(),
            _ => self.cell(self.prims.or2, &[a, b], None),
        }
    }

    pub fn xor2(&mut self, a: &Sig, b: &Sig) -> Sig {
        match (a, b) {
            (Sig::Const(false), x) | (x, Sig::Const(false)) => x.clone(),
            (Sig::Const(true), x) | (x, Sig::Const(true)) => self.inv(x),
            _ if a == b => Sig::Const(false),
            _ => match self.prims.xor2 {
                Some(k) => self.cell(k, &[a, b], None),
                None => {
                    let na = self.inv(a);
                    let nb = self.inv(b);
                    let l = self.and2(a, &nb);
                    let r = self.and2(&na, b);
                    self.or2(&l, &r)
                }
            },
        }
    }

    /// `s ? when_true : when_false`
    pub fn mux(&mut self, s: &Sig, when_true: &Sig, when_false: &Sig) -> Sig {
        match s {
            Sig::Const(true) => return when_true.clone(),
            Sig::Const(false) => return when_false.clone(),
            _ => {}
        }
        if when_true == when_false {
            return when_true.clone();
        }
        match (when_true, when_false) {
            (Sig::Const(true), f) => return self.or2(s, f),
            (Sig::Const(false), f) => {
                let ns = self.inv(s);
                return self.and2(&ns, f);
            }
            (t, Sig::Const(true)) => {
                let ns = self.inv(s);
                return self.or2(&ns, t);
            }
            (t, Sig::Const(false)) => return self.and2(s, t),
            _ => {}
        }
        let t = self.and2(s, when_true);
        let ns = self.inv(s);
        let f = self.and2(&ns, when_false);
        self.or2(&t, &f)
    }

    /// Balanced AND tree; constant 1 for no operands.
    pub fn and_all(&mut self, xs: &[Sig]) -> Sig {
        self.reduce(xs, true)
    }

    pub fn or_all(&mut self, xs: &[Sig]) -> Sig {
        self.reduce(xs, false)
    }

    fn reduce(&mut self, xs: &[Sig], and: bool) -> Sig {
        let mut layer: Vec<Sig> = xs.to_vec();
        if layer.is_empty() {
            return Sig::Const(and);
        }
        while layer.len() > 1 {
            let mut next = Vec::with_capacity(layer.len().div_ceil(2));
            for pair in layer.chunks(2) {
                next.push(match pair {
                    [a, b] if and => self.and2(a, b),
                    [a, b] => self.or2(a, b),
                    [a] => a.clone(),
                    _ => unreachable!(),
                });
            }
            layer = next;
        }
        layer.pop().expect("nonempty")
    }

    /// 1 exactly when the bits equal `value` (bit i of `value` for `bits[i]`).
    pub fn eq_const(&mut self, bits: &[Sig], value: u64) -> Sig {
        let lits: Vec<Sig> = bits
            .iter()
            .enumerate()
            .map(|(i, b)| {
                if value >> i & 1 == 1 {
                    b.clone()
                } else {
                    self.inv(b)
                }
            })
            .collect();
        self.and_all(&lits)
    }

    /// 1 exactly when the unsigned value of `bits` is at least `value`.
    pub fn ge_const(&mut self, bits: &[Sig], value: u64) -> Sig {
        if bits.len() < 64 && value >> bits.len() != 0 {
            return Sig::Const(false);
        }
        let mut r = Sig::Const(true);
        for (i, b) in bits.iter().enumerate() {
            r = if value >> i & 1 == 1 {
                self.and2(b, &r)
            } else {
                self.or2(b, &r)
            };
        }
        r
    }

    /// Ripple increment by `en`: returns the sum bits and the carry out.
    pub fn increment(&mut self, bits: &[Sig], en: &Sig) -> (Vec<Sig>, Sig) {
        let mut carry = en.clone();
        let mut out = Vec::with_capacity(bits.len());
        for b in bits {
            out.push(self.xor2(b, &carry));
            carry = self.and2(b, &carry);
        }
        (out, carry)
    }

    /// A reset-to-zero flip-flop with its d input left open.
    pub fn reg(&mut self) -> Reg {
        self.uses_clock = true;
        if self.ctx.reset.is_some() && self.ff_reset.is_none() {
            let rst = Sig::net(self.ctx.reset_port());
            let seen = if self.ff_reset_inverted { self.inv(&rst) } else { rst };
            self.ff_reset = Some(seen.name().to_string());
        }
        let k = self.fresh();
        let cell = format!("{}_r{k}", self.prefix);
        let q = format!("{}_q{k}", self.prefix);
        let kind = self.b.library.get(self.ff).clone();
        let clock = self.ctx.clock_port();
        let mut pins = vec![(self.ff_pins.1.as_str(), clock.as_str()), (&kind.outputs[0], q.as_str())];
        if let (Some(pin), Some(net)) = (&self.ff_pins.2, &self.ff_reset) {
            pins.push((pin.as_str(), net.as_str()));
        }
        self.b.add_cell(&cell, &kind.name, &pins).expect("generated names are unique");
        self.seq_count += 1;
        Reg { cell, q: Sig::Net(q) }
    }

    pub fn set_d(&mut self, r: &Reg, d: &Sig) {
        let net = d.name().to_string();
        self.b.add_net(&net);
        self.b
            .cells
            .get_mut(&r.cell)
            .expect("register exists")
            .pins
            .insert(self.ff_pins.0.clone(), net);
    }

    /// Registered copy of `d`.
    pub fn dff(&mut self, d: &Sig) -> Sig {
        let r = self.reg();
        self.set_d(&r, d);
        r.q
    }

    /// Makes `s` available on a cell-driven net called `name`.
    pub fn materialize(&mut self, s: &Sig, name: &str) -> Sig {
        match self.prims.buf {
            Some(k) => self.cell(k, &[s], Some(name)),
            None => self.cell(self.prims.and2, &[s, s], Some(name)),
        }
    }

    /// Gives the signal `s` the net name `name`, renaming a generated net in
    /// place or adding a buffer for ports and constants.
    pub fn name_signal(&mut self, s: &Sig, name: &str) -> Sig {
        let Sig::Net(old) = s else {
            return self.materialize(s, name);
        };
        if old == name {
            return s.clone();
        }
        if self.b.inputs.contains(old) || !old.starts_with(&self.prefix) {
            return self.materialize(s, name);
        }
        for cell in self.b.cells.values_mut() {
            for net in cell.pins.values_mut() {
                if net == old {
                    *net = name.to_string();
                }
            }
        }
        for (_, net) in self.b.outputs.iter_mut() {
            if net == old {
                *net = name.to_string();
            }
        }
        self.b.nets.remove(old);
        self.b.nets.insert(name.to_string());
        for v in self.inverted.values_mut() {
            if *v == *s {
                *v = Sig::net(name);
            }
        }
        if let Some(v) = self.inverted.remove(old) {
            self.inverted.insert(name.to_string(), v);
        }
        Sig::net(name)
    }

    /// Declares the clock and reset ports if registers were created.
    pub fn finish_ports(&mut self) {
        if self.uses_clock {
            if !self.b.inputs.contains(&self.ctx.clock_port()) {
                self.b.add_input(&self.ctx.clock_port());
            }
            if self.ctx.reset.is_some() && !self.b.inputs.contains(&self.ctx.reset_port()) {
                self.b.add_input(&self.ctx.reset_port());
            }
        }
    }

    pub fn output(&mut self, port: &str, s: &Sig) {
        self.b.add_output(port, s.name());
    }
}
