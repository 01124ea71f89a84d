// SPDX-License-Identifier: Apache-2.0

//! Parameterised trojan generation.
//!
//! A trojan is an ordinary [`Netlist`] over the target's library whose
//! primary inputs and outputs form its interface. Every generated cell and
//! net name starts with the trojan's name, so a trojan can be merged into a
//! target without clashes as long as that prefix is unused there.

pub mod config;
pub(crate) mod gen;
mod payload;
pub mod spec;
mod trigger;

pub use config::{
    generate_config_matrix, parse_matrix, parse_trojan_config, variant_seed, write_trojan_config,
    ConfigError, MatrixOptions, TrojanConfig,
};
pub use gen::GenContext;
pub use spec::{bits_for, CountMode, LeakCode, PayloadSpec, SpecError, TriggerSpec};
pub use trigger::{counter_width, fsm_width};

use crate::library::{CellLibrary, Polarity};
use crate::netlist::{Netlist, NetlistBuilder, NetlistError};
use crate::select::{PortRole, SsfAssignment};
use gen::{Gen, Sig};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("library lacks a {0}")]
    MissingKind(String),
    #[error("invalid trojan part: {0}")]
    InvalidSpec(String),
    #[error("trigger and payload were generated for different libraries or names")]
    LibraryMismatch,
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PortClass {
    /// Reads a target net.
    InputOnly { net: String },
    /// Drives a fresh net; `optional` ports may stay unconnected.
    OutputOnly { net: String, optional: bool },
    /// Replaces one existing connection: `input` receives the original
    /// value and `output` drives the original sink.
    Feedthrough { input: String, output: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterfacePort {
    pub role: PortRole,
    pub class: PortClass,
}

/// One generated half of a trojan (trigger or payload).
#[derive(Debug, Clone)]
pub struct TrojanPart {
    pub builder: NetlistBuilder,
    pub ports: Vec<InterfacePort>,
    /// Activation net of a trigger part.
    pub trigger_net: Option<String>,
    /// Enable input of a payload part.
    pub enable: Option<String>,
    pub seq_count: usize,
    pub comb_count: usize,
    name: String,
    reset: Option<Polarity>,
}

impl TrojanPart {
    /// The part on its own, for inspection and simulation.
    pub fn build(&self) -> Result<Netlist, NetlistError> {
        self.builder.build()
    }
}

/// A complete trojan with its typed interface.
#[derive(Debug, Clone)]
pub struct TrojanNetlist {
    pub name: String,
    pub netlist: Netlist,
    pub ports: Vec<InterfacePort>,
    /// Clock input port, present iff the trojan has registers.
    pub clock: Option<String>,
    /// Reset input port and the polarity it expects.
    pub reset: Option<(String, Polarity)>,
    pub trigger_net: String,
    pub trigger: TriggerSpec,
    pub payload: PayloadSpec,
    pub seq_count: usize,
    pub comb_count: usize,
}

impl TrojanNetlist {
    pub fn ports_with_role(&self, role: PortRole) -> impl Iterator<Item = &InterfacePort> {
        self.ports.iter().filter(move |p| p.role == role)
    }

    /// Connections to the target under `ssf`: bound input-only ports, two
    /// per feedthrough, anchored output-only ports, plus clock and reset.
    pub fn connection_count(&self, ssf: &SsfAssignment) -> usize {
        let mut count = 0;
        for p in &self.ports {
            let bound = !ssf.get(p.role).is_disconnected();
            count += match &p.class {
                PortClass::InputOnly { .. } => usize::from(bound),
                PortClass::OutputOnly { .. } => usize::from(bound),
                PortClass::Feedthrough { .. } => 2 * usize::from(bound),
            };
        }
        count + usize::from(self.clock.is_some()) + usize::from(self.reset.is_some())
    }

    /// Serialized trojan netlist.
    pub fn to_verilog(&self) -> String {
        crate::netlist::write_netlist(&self.netlist)
    }
}

/// Trigger logic over `n` input-only ports, named `<name>_t<i>`. The
/// activation net is `<name>_trig`.
pub fn generate_trigger(
    spec: &TriggerSpec,
    library: Arc<CellLibrary>,
    ctx: &GenContext,
) -> Result<TrojanPart, GenError> {
    spec.validate().map_err(GenError::InvalidSpec)?;
    let mut g = Gen::new(library, ctx, "t")?;
    let mut ports = Vec::new();
    let inputs: Vec<Sig> = (0..spec.inputs())
        .map(|i| {
            let net = format!("{}_t{i}", ctx.name);
            ports.push(InterfacePort {
                role: PortRole::Trigger,
                class: PortClass::InputOnly { net: net.clone() },
            });
            g.input(&net)
        })
        .collect();
    let trig = trigger::build_trigger(&mut g, spec, &inputs);
    let trig_net = ctx.trigger_net();
    let trig = g.name_signal(&trig, &trig_net);
    g.output(&trig_net, &trig);
    g.finish_ports();
    Ok(TrojanPart {
        ports,
        trigger_net: Some(trig_net),
        enable: None,
        seq_count: g.seq_count,
        comb_count: g.comb_count,
        builder: g.b,
        name: ctx.name.clone(),
        reset: ctx.reset,
    })
}

/// Payload logic enabled by the input `<name>_en`.
pub fn generate_payload(
    spec: &PayloadSpec,
    library: Arc<CellLibrary>,
    ctx: &GenContext,
) -> Result<TrojanPart, GenError> {
    spec.validate().map_err(GenError::InvalidSpec)?;
    let mut g = Gen::new(library, ctx, "p")?;
    let en_name = format!("{}_en", ctx.name);
    let en = g.input(&en_name);
    let ports = payload::build_payload(&mut g, spec, &en);
    g.finish_ports();
    Ok(TrojanPart {
        ports,
        trigger_net: None,
        enable: Some(en_name),
        seq_count: g.seq_count,
        comb_count: g.comb_count,
        builder: g.b,
        name: ctx.name.clone(),
        reset: ctx.reset,
    })
}

/// Wires the trigger's activation net to the payload's enable and merges
/// both parts into one netlist.
pub fn assemble_trojan(
    trigger: &TrojanPart,
    payload: &TrojanPart,
    trigger_spec: &TriggerSpec,
    payload_spec: &PayloadSpec,
) -> Result<TrojanNetlist, GenError> {
    let (Some(trig), Some(en)) = (&trigger.trigger_net, &payload.enable) else {
        return Err(GenError::InvalidSpec("expected a trigger part and a payload part".into()));
    };
    if !Arc::ptr_eq(&trigger.builder.library, &payload.builder.library)
        || trigger.name != payload.name
        || trigger.reset != payload.reset
    {
        return Err(GenError::LibraryMismatch);
    }
    let name = trigger.name.clone();
    let ctx = GenContext::new(&name, trigger.reset);
    let mut b = NetlistBuilder::new(&name, trigger.builder.library.clone());
    for part in [trigger, payload] {
        for (cname, cell) in &part.builder.cells {
            let mut cell = cell.clone();
            for net in cell.pins.values_mut() {
                if net == en {
                    *net = trig.clone();
                }
            }
            for net in cell.pins.values() {
                b.add_net(net);
            }
            if b.cells.insert(cname.clone(), cell).is_some() {
                return Err(GenError::Netlist(NetlistError::Duplicate {
                    what: "cell",
                    name: cname.clone(),
                }));
            }
        }
    }
    let clocked = [trigger, payload]
        .iter()
        .any(|p| p.builder.inputs.contains(&ctx.clock_port()));
    for input in trigger.builder.inputs.iter().chain(&payload.builder.inputs) {
        let shared = *input == ctx.clock_port() || *input == ctx.reset_port();
        if input == en || shared {
            continue;
        }
        b.add_input(input);
    }
    if clocked {
        b.add_input(&ctx.clock_port());
        if ctx.reset.is_some() {
            b.add_input(&ctx.reset_port());
        }
    }
    for (port, net) in trigger.builder.outputs.iter().chain(&payload.builder.outputs) {
        b.add_output(port, net);
    }
    let netlist = b.build()?;
    let mut ports = trigger.ports.clone();
    ports.extend(payload.ports.iter().cloned());
    Ok(TrojanNetlist {
        name: name.clone(),
        netlist,
        ports,
        clock: clocked.then(|| ctx.clock_port()),
        reset: match (clocked, ctx.reset) {
            (true, Some(p)) => Some((ctx.reset_port(), p)),
            _ => None,
        },
        trigger_net: trig.clone(),
        trigger: trigger_spec.clone(),
        payload: payload_spec.clone(),
        seq_count: trigger.seq_count + payload.seq_count,
        comb_count: trigger.comb_count + payload.comb_count,
    })
}

/// Generates and assembles a trojan named `name` whose registers follow a
/// target reset of polarity `reset`.
pub fn generate_trojan(
    trigger: &TriggerSpec,
    payload: &PayloadSpec,
    library: Arc<CellLibrary>,
    name: &str,
    reset: Option<Polarity>,
) -> Result<TrojanNetlist, GenError> {
    let ctx = GenContext::new(name, reset);
    let t = generate_trigger(trigger, library.clone(), &ctx)?;
    let p = generate_payload(payload, library, &ctx)?;
    assemble_trojan(&t, &p, trigger, payload)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Logic, Tern64};
    use crate::netlist::tests::lib;
    use crate::netlist::GlobalSignals;
    use crate::select::SsfKind;
    use crate::validation::{SimState, Simulator};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn comb(n: usize, v: u64) -> TriggerSpec {
        TriggerSpec::Combinational { n, v }
    }

    fn globals(n: &Netlist) -> Option<GlobalSignals> {
        Some(GlobalSignals {
            clock: n.find_net("ht_clk")?,
            reset: n.find_net("ht_rst").map(|r| (r, Polarity::Low)),
        })
    }

    /// Lane-parallel driver addressing inputs by name; unset inputs are 0.
    struct Bench<'a> {
        sim: Simulator<'a>,
        st: SimState,
        names: Vec<String>,
    }

    impl<'a> Bench<'a> {
        fn new(n: &'a Netlist, g: Option<&GlobalSignals>) -> Self {
            let sim = Simulator::new(n, g);
            let mut st = sim.initial_state();
            sim.apply_reset(&mut st, 1);
            let names = sim.input_names();
            Bench { sim, st, names }
        }

        fn eval(&mut self, inputs: &[(&str, Tern64)]) {
            let row: Vec<Tern64> = self
                .names
                .iter()
                .map(|nm| {
                    inputs
                        .iter()
                        .find(|(k, _)| k == nm)
                        .map_or(Tern64::ZERO, |(_, v)| *v)
                })
                .collect();
            self.sim.eval(&mut self.st, &row, false);
        }

        fn get(&self, net: &str) -> Tern64 {
            let id = self.sim.netlist().find_net(net).expect("net exists");
            self.st.value(id)
        }

        fn clock(&mut self) {
            self.sim.clock(&mut self.st);
        }
    }

    fn bit(b: bool) -> Tern64 {
        Tern64::splat(Logic::from_bool(b))
    }

    /// Input words for 64 lanes: bit `j` of `words[lane]` on input `j`.
    fn lane_bits(words: &[u64], j: usize) -> Tern64 {
        let mut bits = 0;
        for (lane, w) in words.iter().enumerate() {
            bits |= (w >> j & 1) << lane;
        }
        Tern64::from_bits(bits)
    }

    fn port_names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("ht_{prefix}{i}")).collect()
    }

    #[test]
    fn combinational_trigger_exhaustive() {
        let ctx = GenContext::new("ht", Some(Polarity::Low));
        let part = generate_trigger(&comb(8, 0xA5), lib(), &ctx).unwrap();
        assert_eq!(part.seq_count, 0);
        let n = part.build().unwrap();
        assert!(n.registers().is_empty());
        let names = port_names("t", 8);
        let mut bench = Bench::new(&n, None);
        for batch in 0..4u64 {
            let words: Vec<u64> = (0..64).map(|l| batch * 64 + l).collect();
            let ins: Vec<(&str, Tern64)> = names
                .iter()
                .enumerate()
                .map(|(j, nm)| (nm.as_str(), lane_bits(&words, j)))
                .collect();
            bench.eval(&ins);
            let trig = bench.get("ht_trig");
            for (lane, &w) in words.iter().enumerate() {
                assert_eq!(trig.lane(lane), Logic::from_bool(w == 0xA5), "input {w:#x}");
            }
        }
    }

    #[test]
    fn structural_widths() {
        assert_eq!(counter_width(4, 15, CountMode::Any), 4);
        assert_eq!(counter_width(4, 16, CountMode::Any), 5);
        assert_eq!(counter_width(1, 1, CountMode::Any), 1);
        assert_eq!(fsm_width(2), 1);
        assert_eq!(fsm_width(3), 2);
        assert_eq!(fsm_width(4), 2);
        assert_eq!(fsm_width(5), 3);
        let ctx = GenContext::new("ht", None);
        let t = generate_trigger(
            &TriggerSpec::Counter { n: 4, v: 15, mode: CountMode::Any },
            lib(),
            &ctx,
        )
        .unwrap();
        // One previous-value register per input plus the counter.
        assert_eq!(t.seq_count, 4 + 4);
        let f = TriggerSpec::Fsm { n: 2, values: vec![1, 2, 3], masks: vec![3, 3, 3] };
        assert_eq!(generate_trigger(&f, lib(), &ctx).unwrap().seq_count, 2);
    }

    /// Reference model of the change counter.
    fn counter_oracle(n: usize, v: u64, mode: CountMode, seq: &[u64]) -> Vec<bool> {
        let (mut prev, mut count) = (0u64, 0u64);
        seq.iter()
            .map(|&x| {
                let changed = (x ^ prev) & ((1 << n) - 1);
                prev = x;
                let trig = match mode {
                    CountMode::Any => count == v,
                    CountMode::PerBit => count >= v,
                };
                if !trig {
                    count += match mode {
                        CountMode::Any => u64::from(changed != 0),
                        CountMode::PerBit => u64::from(changed.count_ones()),
                    };
                }
                trig
            })
            .collect()
    }

    #[test]
    fn counter_trigger_matches_reference() {
        for (n, v, mode) in [
            (2, 3, CountMode::Any),
            (3, 5, CountMode::Any),
            (3, 5, CountMode::PerBit),
            (1, 2, CountMode::PerBit),
        ] {
            let ctx = GenContext::new("ht", Some(Polarity::Low));
            let part = generate_trigger(&TriggerSpec::Counter { n, v, mode }, lib(), &ctx).unwrap();
            let net = part.build().unwrap();
            let g = globals(&net);
            let mut bench = Bench::new(&net, g.as_ref());
            let names = port_names("t", n);
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64 * 31 + v);
            // Sparse changes so that lanes reach the count at different times.
            let cycles = 40;
            let seqs: Vec<Vec<u64>> = (0..64)
                .map(|_| {
                    let mut x = 0u64;
                    (0..cycles)
                        .map(|_| {
                            if rng.gen_bool(0.3) {
                                x ^= rng.gen_range(1..1u64 << n);
                            }
                            x
                        })
                        .collect()
                })
                .collect();
            let expect: Vec<Vec<bool>> = seqs.iter().map(|s| counter_oracle(n, v, mode, s)).collect();
            for c in 0..cycles {
                let words: Vec<u64> = seqs.iter().map(|s| s[c]).collect();
                let ins: Vec<(&str, Tern64)> = names
                    .iter()
                    .enumerate()
                    .map(|(j, nm)| (nm.as_str(), lane_bits(&words, j)))
                    .collect();
                bench.eval(&ins);
                let trig = bench.get("ht_trig");
                for lane in 0..64 {
                    assert_eq!(
                        trig.lane(lane),
                        Logic::from_bool(expect[lane][c]),
                        "n={n} v={v} {mode:?} lane {lane} cycle {c}"
                    );
                }
                bench.clock();
            }
        }
    }

    fn fsm_oracle(values: &[u64], masks: &[u64], seq: &[u64]) -> Vec<bool> {
        let s = values.len();
        let mut state = 0;
        seq.iter()
            .map(|&x| {
                let hit = |k: usize| x & masks[k] == values[k] & masks[k];
                let trig = state == s - 1 && hit(s - 1);
                state = if hit(state) { (state + 1).min(s - 1) } else { 0 };
                trig
            })
            .collect()
    }

    #[test]
    fn fsm_trigger_exhaustive_sequences() {
        for (values, masks) in [
            (vec![1u64, 2, 3], vec![3u64, 3, 3]),
            (vec![1, 0, 2, 3], vec![1, 3, 2, 3]),
        ] {
            let spec = TriggerSpec::Fsm { n: 2, values: values.clone(), masks: masks.clone() };
            let ctx = GenContext::new("ht", Some(Polarity::Low));
            let part = generate_trigger(&spec, lib(), &ctx).unwrap();
            assert_eq!(part.seq_count, fsm_width(values.len()));
            let net = part.build().unwrap();
            let g = globals(&net);
            let names = port_names("t", 2);
            let len = 5;
            // Every sequence of 5 two-bit symbols: 1024 sequences.
            let all: Vec<Vec<u64>> = (0..1u64 << (2 * len))
                .map(|code| (0..len).map(|c| code >> (2 * c) & 3).collect())
                .collect();
            for chunk in all.chunks(64) {
                let mut bench = Bench::new(&net, g.as_ref());
                for c in 0..len {
                    let words: Vec<u64> = chunk.iter().map(|s| s[c]).collect();
                    let ins: Vec<(&str, Tern64)> = names
                        .iter()
                        .enumerate()
                        .map(|(j, nm)| (nm.as_str(), lane_bits(&words, j)))
                        .collect();
                    bench.eval(&ins);
                    let trig = bench.get("ht_trig");
                    for (lane, s) in chunk.iter().enumerate() {
                        let want = fsm_oracle(&values, &masks, s)[c];
                        assert_eq!(trig.lane(lane), Logic::from_bool(want), "{s:?} cycle {c}");
                    }
                    bench.clock();
                }
            }
        }
        let seq = [1, 2, 3];
        assert_eq!(fsm_oracle(&[1, 2, 3], &[3, 3, 3], &seq), vec![false, false, true]);
    }

    fn single_lane(bench: &mut Bench, ins: &[(&str, bool)]) {
        let v: Vec<(&str, Tern64)> = ins.iter().map(|(k, b)| (*k, bit(*b))).collect();
        bench.eval(&v);
    }

    #[test]
    fn fault_masks_sweep_in_order() {
        let t = generate_trojan(&comb(1, 1), &PayloadSpec::Fault { n: 2 }, lib(), "ht", Some(Polarity::Low))
            .unwrap();
        let g = globals(&t.netlist);
        let mut bench = Bench::new(&t.netlist, g.as_ref());
        let mut masks = Vec::new();
        for _ in 0..4 {
            single_lane(&mut bench, &[("ht_t0", true)]);
            let m = (0..2).map(|i| {
                u64::from(bench.get(&format!("ht_fo{i}")).lane(0) == Logic::One) << i
            });
            masks.push(m.sum::<u64>());
            bench.clock();
        }
        assert_eq!(masks, vec![0b01, 0b10, 0b11, 0b01]);
        single_lane(&mut bench, &[("ht_t0", false), ("ht_fi1", true)]);
        assert_eq!(bench.get("ht_fo0").lane(0), Logic::Zero);
        assert_eq!(bench.get("ht_fo1").lane(0), Logic::One);
    }

    #[test]
    fn shift_burn_toggles_exactly_n() {
        for n in 1..=7 {
            let t = generate_trojan(&comb(1, 1), &PayloadSpec::ShiftBurn { n }, lib(), "ht", Some(Polarity::Low))
                .unwrap();
            assert_eq!(t.seq_count, n + 1);
            let g = globals(&t.netlist);
            let regs: Vec<_> = t.netlist.registers().iter().map(|&r| t.netlist.register_q(r)).collect();
            let mut bench = Bench::new(&t.netlist, g.as_ref());
            let snapshot = |b: &Bench| -> Vec<Logic> { regs.iter().map(|&q| b.st.value(q).lane(0)).collect() };
            // One idle cycle loads the seed pattern.
            single_lane(&mut bench, &[]);
            bench.clock();
            single_lane(&mut bench, &[]);
            let idle = snapshot(&bench);
            bench.clock();
            single_lane(&mut bench, &[]);
            assert_eq!(snapshot(&bench), idle, "quiescent while idle");
            let mut prev = idle;
            for _ in 0..12 {
                single_lane(&mut bench, &[("ht_t0", true)]);
                bench.clock();
                single_lane(&mut bench, &[("ht_t0", true)]);
                let now = snapshot(&bench);
                let toggles = now.iter().zip(&prev).filter(|(a, b)| a != b).count();
                assert_eq!(toggles, n, "n={n}");
                prev = now;
            }
        }
    }

    fn leak_trace(code: LeakCode, c: u32, n: usize, secret: u64) -> Vec<Logic> {
        let t = generate_trojan(&comb(1, 1), &PayloadSpec::Leak { n, code, c }, lib(), "ht", Some(Polarity::Low))
            .unwrap();
        let g = globals(&t.netlist);
        let mut bench = Bench::new(&t.netlist, g.as_ref());
        let secrets: Vec<String> = port_names("s", n);
        let mut out = Vec::new();
        let total = 3 + (n + 2) * (1 << c);
        for cycle in 0..total {
            let mut ins: Vec<(&str, bool)> =
                secrets.iter().enumerate().map(|(i, s)| (s.as_str(), secret >> i & 1 == 1)).collect();
            ins.push(("ht_t0", cycle == 1));
            single_lane(&mut bench, &ins);
            out.push(bench.get("ht_leak").lane(0));
            bench.clock();
        }
        out
    }

    #[test]
    fn serial_leak_spans_n_slots() {
        for (n, c) in [(8usize, 2u32), (4, 0), (3, 3)] {
            let secret = 0xA5 & ((1 << n) - 1);
            let tr = leak_trace(LeakCode::Serial, c, n, secret);
            let slot = 1usize << c;
            // Loaded at cycle 1; start slot at cycle 2; data bits follow.
            assert!(tr[..2].iter().all(|&l| l == Logic::Zero));
            assert!(tr[2..2 + slot].iter().all(|&l| l == Logic::One));
            let data = &tr[2 + slot..2 + slot + n * slot];
            for (i, chunk) in data.chunks(slot).enumerate() {
                assert!(chunk.iter().all(|&l| l == Logic::from_bool(secret >> i & 1 == 1)));
            }
            assert!(tr[2 + slot + n * slot..].iter().all(|&l| l == Logic::Zero));
        }
    }

    #[test]
    fn leak_codes_decode() {
        for code in [LeakCode::Serial, LeakCode::Fsk, LeakCode::Dbpsk] {
            for c in 0..=3 {
                for secret in [0b1011u64, 0b0000, 0b1111, 0b0110] {
                    let tr = leak_trace(code, c, 4, secret);
                    let bits = crate::validation::decode_leak(&tr, code, c, 4).unwrap();
                    let got: u64 = bits.iter().enumerate().map(|(i, &b)| u64::from(b) << i).sum();
                    assert_eq!(got, secret, "{code:?} c={c}");
                }
            }
        }
    }

    #[test]
    fn untriggered_transparency() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for payload in [PayloadSpec::Modify { n: 4, v: 0x3 }, PayloadSpec::Fault { n: 3 }] {
            let t = generate_trojan(&comb(4, 0x9), &payload, lib(), "ht", Some(Polarity::Low)).unwrap();
            let g = globals(&t.netlist);
            let mut bench = Bench::new(&t.netlist, g.as_ref());
            bench.sim.force(t.netlist.find_net(&t.trigger_net).unwrap(), Logic::Zero);
            let pairs: Vec<(String, String)> = t
                .ports
                .iter()
                .filter_map(|p| match &p.class {
                    PortClass::Feedthrough { input, output } => Some((input.clone(), output.clone())),
                    _ => None,
                })
                .collect();
            assert_eq!(pairs.len(), payload.bits());
            let names = bench.names.clone();
            for _ in 0..16 {
                let ins: Vec<(&str, Tern64)> =
                    names.iter().map(|nm| (nm.as_str(), Tern64::from_bits(rng.gen()))).collect();
                bench.eval(&ins);
                for (i, o) in &pairs {
                    assert_eq!(bench.get(i), bench.get(o));
                }
                bench.clock();
            }
        }
        for payload in [PayloadSpec::ShiftBurn { n: 3 }, PayloadSpec::Leak { n: 2, code: LeakCode::Fsk, c: 1 }] {
            let t = generate_trojan(&comb(2, 1), &payload, lib(), "ht", None).unwrap();
            assert!(t.ports.iter().all(|p| !matches!(p.class, PortClass::Feedthrough { .. })));
        }
    }

    #[test]
    fn deterministic_serialization() {
        let trig = TriggerSpec::Fsm { n: 3, values: vec![5, 2, 7], masks: vec![7, 3, 7] };
        let pay = PayloadSpec::Leak { n: 8, code: LeakCode::Dbpsk, c: 2 };
        let a = generate_trojan(&trig, &pay, lib(), "ht7", Some(Polarity::High)).unwrap();
        let b = generate_trojan(&trig, &pay, lib(), "ht7", Some(Polarity::High)).unwrap();
        assert_eq!(a.to_verilog(), b.to_verilog());
        assert_eq!(a.seq_count + a.comb_count, a.netlist.cells().len());
        // The library only has an active-low reset flip-flop.
        assert!(a.netlist.cells().iter().any(|c| c.name.starts_with("ht7_")));
        assert_eq!(a.reset.as_ref().map(|r| r.1), Some(Polarity::High));
    }

    #[test]
    fn connection_counts() {
        let ssf = SsfAssignment::default();
        let modify = |n, v| PayloadSpec::Modify { n, v };
        let t = generate_trojan(&comb(11, 5), &modify(4, 3), lib(), "ht", Some(Polarity::Low)).unwrap();
        assert_eq!(t.connection_count(&ssf), 19);
        assert!(t.clock.is_none());
        let t = generate_trojan(&comb(15, 5), &modify(8, 3), lib(), "ht", Some(Polarity::Low)).unwrap();
        assert_eq!(t.connection_count(&ssf), 31);
        let counter = TriggerSpec::Counter { n: 1, v: 1, mode: CountMode::Any };
        let t = generate_trojan(&counter, &PayloadSpec::ShiftBurn { n: 8 }, lib(), "ht", Some(Polarity::Low))
            .unwrap();
        let mut all_d = ssf;
        all_d.payload_out = SsfKind::D;
        assert_eq!(t.connection_count(&all_d), 3);
    }

    #[test]
    fn assembly_rejects_mixed_parts() {
        let l = lib();
        let f = PayloadSpec::Fault { n: 1 };
        let a = generate_trigger(&comb(2, 1), l.clone(), &GenContext::new("ht", None)).unwrap();
        let b = generate_payload(&f, l.clone(), &GenContext::new("hx", None)).unwrap();
        assert!(matches!(assemble_trojan(&a, &b, &comb(2, 1), &f), Err(GenError::LibraryMismatch)));
        let b = generate_payload(&f, lib(), &GenContext::new("ht", None)).unwrap();
        assert!(matches!(assemble_trojan(&a, &b, &comb(2, 1), &f), Err(GenError::LibraryMismatch)));
        let b = generate_payload(&f, l, &GenContext::new("ht", None)).unwrap();
        assert!(assemble_trojan(&a, &b, &comb(2, 1), &f).is_ok());
    }
}
