// SPDX-License-Identifier: Apache-2.0

//! Cycle-based three-valued simulation, 64 independent lanes at a time.
//!
//! Registers start at X. During the reset protocol the reset net is held
//! at its active level and all other inputs at 0; a register whose reset pin
//! reads its active level loads 0 at the clock edge. Cycle 0 of a trace is
//! the first cycle after the reset protocol.

use super::ValidationError;
use crate::library::Polarity;
use crate::logic::{Logic, Tern64};
use crate::netlist::{Driver, GlobalSignals, NetId, Netlist};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy)]
struct RegSlot {
    d: NetId,
    q: NetId,
    reset: Option<(NetId, Polarity)>,
}

/// Register contents and the most recent net values of all 64 lanes.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub regs: Vec<Tern64>,
    pub values: Vec<Tern64>,
}

impl SimState {
    pub fn value(&self, net: NetId) -> Tern64 {
        self.values[net.index()]
    }
}

pub struct Simulator<'a> {
    netlist: &'a Netlist,
    inputs: Vec<NetId>,
    clock: Option<NetId>,
    reset: Option<(NetId, Polarity)>,
    regs: Vec<RegSlot>,
    forced: Vec<Option<Tern64>>,
}

fn level(l: Logic) -> Tern64 {
    Tern64::splat(l)
}

impl<'a> Simulator<'a> {
    /// Primary inputs other than the clock and reset become stimulus inputs.
    pub fn new(netlist: &'a Netlist, globals: Option<&GlobalSignals>) -> Self {
        let clock = globals.map(|g| g.clock);
        let reset = globals.and_then(|g| g.reset);
        let inputs = netlist
            .inputs()
            .iter()
            .copied()
            .filter(|&i| Some(i) != clock && Some(i) != reset.map(|r| r.0))
            .collect();
        let regs = netlist
            .registers()
            .iter()
            .map(|&r| {
                let roles = netlist.kind_of(r).seq.as_ref().expect("register");
                RegSlot {
                    d: netlist.register_d(r),
                    q: netlist.register_q(r),
                    reset: roles.reset.map(|(pin, pol)| (netlist.cell(r).pins[pin], pol)),
                }
            })
            .collect();
        Simulator {
            netlist,
            inputs,
            clock,
            reset,
            regs,
            forced: vec![None; netlist.nets().len()],
        }
    }

    pub fn netlist(&self) -> &Netlist {
        self.netlist
    }

    /// Stimulus inputs, in netlist order.
    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    pub fn input_names(&self) -> Vec<String> {
        self.inputs
            .iter()
            .map(|&i| self.netlist.net(i).name.clone())
            .collect()
    }

    /// Overrides the value of `net` in every lane and cycle.
    pub fn force(&mut self, net: NetId, value: Logic) {
        self.forced[net.index()] = Some(level(value));
    }

    pub fn initial_state(&self) -> SimState {
        SimState {
            regs: vec![Tern64::X; self.regs.len()],
            values: vec![Tern64::X; self.netlist.nets().len()],
        }
    }

    fn set(&self, st: &mut SimState, net: NetId, v: Tern64) {
        st.values[net.index()] = self.forced[net.index()].unwrap_or(v);
    }

    /// Evaluates all nets for the current register contents; `inputs` is
    /// parallel to [`Simulator::inputs`].
    pub fn eval(&self, st: &mut SimState, inputs: &[Tern64], in_reset: bool) {
        let n = self.netlist;
        for (id, net) in n.net_ids().zip(n.nets()) {
            if let Driver::Const(b) = net.driver {
                self.set(st, id, Tern64::splat(Logic::from_bool(b)));
            }
        }
        for (&net, &v) in self.inputs.iter().zip(inputs) {
            self.set(st, net, v);
        }
        if let Some(c) = self.clock {
            self.set(st, c, Tern64::ZERO);
        }
        if let Some((r, pol)) = self.reset {
            let l = if in_reset { pol.active_level() } else { pol.inactive_level() };
            self.set(st, r, level(l));
        }
        for (k, slot) in self.regs.iter().enumerate() {
            let v = st.regs[k];
            self.set(st, slot.q, v);
        }
        let mut buf: Vec<Tern64> = Vec::with_capacity(8);
        for &c in n.comb_order() {
            let cell = n.cell(c);
            let kind = n.kind_of(c);
            let k = kind.inputs.len();
            buf.clear();
            buf.extend(cell.pins[..k].iter().map(|p| st.values[p.index()]));
            for (f, &out) in kind.functions.iter().zip(&cell.pins[k..]) {
                let v = f.eval64(&buf);
                self.set(st, out, v);
            }
        }
    }

    /// Clock edge: registers load their d value, or 0 under active reset.
    pub fn clock(&self, st: &mut SimState) {
        for (slot, reg) in self.regs.iter().zip(st.regs.iter_mut()) {
            let d = st.values[slot.d.index()];
            *reg = match slot.reset {
                None => d,
                Some((net, pol)) => {
                    let r = st.values[net.index()];
                    let (act, inact) = match pol {
                        Polarity::High => (r.one, r.zero),
                        Polarity::Low => (r.zero, r.one),
                    };
                    Tern64 {
                        one: d.one & inact,
                        zero: act | d.zero,
                    }
                }
            };
        }
    }

    /// Runs `cycles` cycles of the reset protocol.
    pub fn apply_reset(&self, st: &mut SimState, cycles: usize) {
        let zeros = vec![Tern64::ZERO; self.inputs.len()];
        for _ in 0..cycles {
            self.eval(st, &zeros, true);
            self.clock(st);
        }
    }
}

/// Per-cycle input assignments with a reset protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct Stimulus {
    pub inputs: Vec<String>,
    pub reset_cycles: usize,
    /// `vectors[cycle][i]` is the value of `inputs[i]`.
    pub vectors: Vec<Vec<Logic>>,
}

impl Stimulus {
    pub fn cycles(&self) -> usize {
        self.vectors.len()
    }

    /// Text form: an `inputs` line, a `reset` line, then `<cycle> <values>`
    /// with one `0`/`1`/`x` character per input.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "inputs {}", self.inputs.join(" "));
        let _ = writeln!(out, "reset {}", self.reset_cycles);
        for (c, v) in self.vectors.iter().enumerate() {
            let bits: String = v.iter().map(|l| l.as_char()).collect();
            let _ = writeln!(out, "{c} {bits}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Stimulus, ValidationError> {
        let mut inputs = None;
        let mut reset_cycles = 0;
        let mut vectors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let bad = |m: &str| ValidationError::Syntax {
                line,
                message: m.to_string(),
            };
            let (head, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
            match head {
                "inputs" => inputs = Some(rest.split_whitespace().map(String::from).collect::<Vec<_>>()),
                "reset" => reset_cycles = rest.trim().parse().map_err(|_| bad("invalid reset count"))?,
                _ => {
                    let c: usize = head.parse().map_err(|_| bad("expected a cycle index"))?;
                    if c != vectors.len() {
                        return Err(bad("cycles must be consecutive from 0"));
                    }
                    let width = inputs.as_ref().ok_or_else(|| bad("vector before inputs line"))?.len();
                    let v = rest
                        .trim()
                        .chars()
                        .map(|ch| match ch {
                            '0' => Ok(Logic::Zero),
                            '1' => Ok(Logic::One),
                            'x' | 'X' => Ok(Logic::X),
                            _ => Err(bad("values must be 0, 1 or x")),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    if v.len() != width {
                        return Err(bad("vector width differs from the inputs line"));
                    }
                    vectors.push(v);
                }
            }
        }
        Ok(Stimulus {
            inputs: inputs.unwrap_or_default(),
            reset_cycles,
            vectors,
        })
    }
}

/// Values of recorded nets per cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub nets: Vec<String>,
    /// `values[k][cycle]` for `nets[k]`.
    pub values: Vec<Vec<Logic>>,
}

impl SimTrace {
    pub fn cycles(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn series(&self, net: &str) -> Option<&[Logic]> {
        let k = self.nets.iter().position(|n| n == net)?;
        Some(&self.values[k])
    }
}

/// Maps the stimulus columns onto the simulator's inputs.
pub(crate) fn bind_stimulus(sim: &Simulator, s: &Stimulus) -> Result<Vec<usize>, ValidationError> {
    let names = sim.input_names();
    for i in &s.inputs {
        if !names.contains(i) {
            return Err(ValidationError::UnknownInput(i.clone()));
        }
    }
    names
        .iter()
        .map(|n| {
            s.inputs
                .iter()
                .position(|i| i == n)
                .ok_or_else(|| ValidationError::MissingInput(n.clone()))
        })
        .collect()
}

/// Simulates one stimulus and records every net.
pub fn simulate(
    n: &Netlist,
    globals: Option<&GlobalSignals>,
    stimulus: &Stimulus,
) -> Result<SimTrace, ValidationError> {
    let all: Vec<NetId> = n.net_ids().collect();
    simulate_nets(n, globals, stimulus, &all)
}

/// Simulates one stimulus and records only `nets`.
pub fn simulate_nets(
    n: &Netlist,
    globals: Option<&GlobalSignals>,
    stimulus: &Stimulus,
    nets: &[NetId],
) -> Result<SimTrace, ValidationError> {
    let sim = Simulator::new(n, globals);
    let cols = bind_stimulus(&sim, stimulus)?;
    let mut st = sim.initial_state();
    sim.apply_reset(&mut st, stimulus.reset_cycles);
    let mut values = vec![Vec::with_capacity(stimulus.cycles()); nets.len()];
    let mut ins = vec![Tern64::X; cols.len()];
    for v in &stimulus.vectors {
        for (slot, &c) in ins.iter_mut().zip(&cols) {
            *slot = Tern64::splat(v[c]);
        }
        sim.eval(&mut st, &ins, false);
        for (series, &net) in values.iter_mut().zip(nets) {
            series.push(st.value(net).lane(0));
        }
        sim.clock(&mut st);
    }
    Ok(SimTrace {
        nets: nets.iter().map(|&i| n.net(i).name.clone()).collect(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::tests::lib;
    use crate::netlist::{identify_globals, NetlistBuilder};

    fn dffr_netlist() -> Netlist {
        let mut b = NetlistBuilder::new("t", lib());
        for i in ["a", "clk", "rst"] {
            b.add_input(i);
        }
        b.add_cell("r", "DFFR", &[("D", "1'b1"), ("CK", "clk"), ("RN", "rst"), ("Q", "q")]).unwrap();
        b.add_cell("plain", "DFF", &[("D", "a"), ("CK", "clk"), ("Q", "p")]).unwrap();
        b.add_cell("g", "AND2", &[("a", "a"), ("b", "p"), ("o", "y")]).unwrap();
        b.add_output("q", "q");
        b.add_output("y", "y");
        b.build().unwrap()
    }

    #[test]
    fn reset_then_load() {
        let n = dffr_netlist();
        let g = identify_globals(&n).unwrap();
        let s = Stimulus {
            inputs: vec!["a".into()],
            reset_cycles: 1,
            vectors: vec![vec![Logic::One]; 3],
        };
        let t = simulate(&n, Some(&g), &s).unwrap();
        assert_eq!(t.series("q").unwrap(), &[Logic::Zero, Logic::One, Logic::One]);
        // The un-reset register loaded a = 0 during reset, then follows a.
        assert_eq!(t.series("y").unwrap(), &[Logic::Zero, Logic::One, Logic::One]);
    }

    #[test]
    fn x_pessimism_without_reset() {
        let n = dffr_netlist();
        let g = identify_globals(&n).unwrap();
        let s = Stimulus {
            inputs: vec!["a".into()],
            reset_cycles: 0,
            vectors: vec![vec![Logic::One], vec![Logic::Zero], vec![Logic::One]],
        };
        let t = simulate(&n, Some(&g), &s).unwrap();
        assert_eq!(t.series("y").unwrap(), &[Logic::X, Logic::Zero, Logic::Zero]);
        assert_eq!(t.series("q").unwrap(), &[Logic::X, Logic::One, Logic::One]);
    }

    #[test]
    fn missing_and_unknown_inputs() {
        let n = dffr_netlist();
        let g = identify_globals(&n).unwrap();
        let mut s = Stimulus {
            inputs: vec![],
            reset_cycles: 0,
            vectors: vec![vec![]],
        };
        assert_eq!(simulate(&n, Some(&g), &s), Err(ValidationError::MissingInput("a".into())));
        s.inputs = vec!["a".into(), "zz".into()];
        s.vectors = vec![vec![Logic::One, Logic::One]];
        assert_eq!(simulate(&n, Some(&g), &s), Err(ValidationError::UnknownInput("zz".into())));
    }

    #[test]
    fn stimulus_text_round_trip() {
        let s = Stimulus {
            inputs: vec!["a".into(), "b[0]".into()],
            reset_cycles: 2,
            vectors: vec![vec![Logic::One, Logic::X], vec![Logic::Zero, Logic::One]],
        };
        let text = s.to_text();
        assert_eq!(text, "inputs a b[0]\nreset 2\n0 1x\n1 01\n");
        assert_eq!(Stimulus::parse(&text).unwrap(), s);
        assert!(Stimulus::parse("inputs a\n1 0\n").is_err());
        assert!(Stimulus::parse("inputs a\n0 01\n").is_err());
    }
}
