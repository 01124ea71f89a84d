// SPDX-License-Identifier: Apache-2.0

//! Paired random simulation of an original and a tampered netlist.

use super::sim::Simulator;
use super::ValidationError;
use crate::logic::Tern64;
use crate::netlist::{GlobalSignals, NetId, Netlist};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceOptions {
    /// Untriggered lane-cycles to compare, spread over 64 parallel lanes.
    pub trials: u64,
    pub reset_cycles: usize,
    pub seed: u64,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        EquivalenceOptions {
            trials: 10_000,
            reset_cycles: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub lane: usize,
    pub cycle: usize,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EquivalenceReport {
    /// Lane-cycles compared with the trigger at 0.
    pub compared: u64,
    /// Lane-cycles at which the trigger was 1.
    pub fired: u64,
    /// Lane-cycles skipped because the trigger was 1 or X.
    pub excluded: u64,
    pub mismatch_count: u64,
    /// The first few mismatches.
    pub mismatches: Vec<Mismatch>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.mismatch_count == 0
    }
}

const KEPT_MISMATCHES: usize = 16;
const MAX_CYCLE_FACTOR: u64 = 16;

fn tampered_globals(orig: &Netlist, tampered: &Netlist, g: &GlobalSignals) -> Option<GlobalSignals> {
    let map = |id: NetId| tampered.find_net(&orig.net(id).name);
    Some(GlobalSignals {
        clock: map(g.clock)?,
        reset: match g.reset {
            Some((r, p)) => Some((map(r)?, p)),
            None => None,
        },
    })
}

/// Runs identical random stimuli on both netlists and compares the shared
/// primary outputs on every lane-cycle where `trigger_net` is 0. A lane
/// whose trigger reads 1 or X is not compared that cycle and restarts from
/// reset in both designs, as payload state may linger after activation.
/// Stops once `trials` lane-cycles were compared, or after
/// `MAX_CYCLE_FACTOR` times the cycles that would take without activations.
pub fn check_untriggered_equivalence(
    original: &Netlist,
    tampered: &Netlist,
    globals: Option<&GlobalSignals>,
    trigger_net: Option<&str>,
    opts: &EquivalenceOptions,
) -> Result<EquivalenceReport, ValidationError> {
    let tg = match globals {
        Some(g) => Some(
            tampered_globals(original, tampered, g)
                .ok_or_else(|| ValidationError::IoMismatch("clock or reset missing from tampered netlist".into()))?,
        ),
        None => None,
    };
    let a = Simulator::new(original, globals);
    let b = Simulator::new(tampered, tg.as_ref());
    let (na, nb) = (a.input_names(), b.input_names());
    let mut sorted_a = na.clone();
    let mut sorted_b = nb.clone();
    sorted_a.sort();
    sorted_b.sort();
    if sorted_a != sorted_b {
        return Err(ValidationError::IoMismatch("primary inputs differ".into()));
    }
    let b_cols: Vec<usize> = nb
        .iter()
        .map(|nm| na.iter().position(|x| x == nm).expect("same input set"))
        .collect();
    let mut outputs = Vec::new();
    for o in original.outputs() {
        let t = tampered
            .outputs()
            .iter()
            .find(|p| p.name == o.name)
            .ok_or_else(|| ValidationError::IoMismatch(format!("output '{}' missing", o.name)))?;
        outputs.push((o.name.clone(), o.net, t.net));
    }
    let trig = match trigger_net {
        Some(t) => Some(
            tampered
                .find_net(t)
                .ok_or_else(|| ValidationError::UnknownNet(t.to_string()))?,
        ),
        None => None,
    };

    let mut sa = a.initial_state();
    let mut sb = b.initial_state();
    a.apply_reset(&mut sa, opts.reset_cycles);
    b.apply_reset(&mut sb, opts.reset_cycles);
    let (fresh_a, fresh_b) = (sa.regs.clone(), sb.regs.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let max_cycles = opts.trials.div_ceil(64).saturating_mul(MAX_CYCLE_FACTOR).max(1) as usize;
    let mut report = EquivalenceReport::default();
    let mut live = !0u64;
    let mut ins_b = vec![Tern64::X; nb.len()];
    for cycle in 0..max_cycles {
        if report.compared >= opts.trials {
            break;
        }
        let ins_a: Vec<Tern64> = (0..na.len()).map(|_| Tern64::from_bits(rng.gen())).collect();
        for (slot, &c) in ins_b.iter_mut().zip(&b_cols) {
            *slot = ins_a[c];
        }
        a.eval(&mut sa, &ins_a, false);
        b.eval(&mut sb, &ins_b, false);
        if let Some(t) = trig {
            let v = sb.value(t);
            report.fired += u64::from((v.one & live).count_ones());
            live &= v.zero;
        }
        report.compared += u64::from(live.count_ones());
        report.excluded += u64::from((!live).count_ones());
        for (name, oa, ob) in &outputs {
            let (x, y) = (sa.value(*oa), sb.value(*ob));
            let diff = ((x.one ^ y.one) | (x.zero ^ y.zero)) & live;
            if diff != 0 {
                report.mismatch_count += u64::from(diff.count_ones());
                let mut d = diff;
                while d != 0 && report.mismatches.len() < KEPT_MISMATCHES {
                    let lane = d.trailing_zeros() as usize;
                    d &= d - 1;
                    report.mismatches.push(Mismatch {
                        lane,
                        cycle,
                        output: name.clone(),
                    });
                }
            }
        }
        a.clock(&mut sa);
        b.clock(&mut sb);
        // Dropped lanes start over from the reset state of both designs.
        if live != !0 {
            for (r, f) in sa.regs.iter_mut().zip(&fresh_a) {
                *r = Tern64::select(live, *r, *f);
            }
            for (r, f) in sb.regs.iter_mut().zip(&fresh_b) {
                *r = Tern64::select(live, *r, *f);
            }
            live = !0;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::tests::lib;
    use crate::netlist::NetlistBuilder;

    fn pair() -> (Netlist, Netlist) {
        let mut b = NetlistBuilder::new("t", lib());
        b.add_input("a");
        b.add_input("b");
        b.add_cell("g", "AND2", &[("a", "a"), ("b", "b"), ("o", "y")]).unwrap();
        b.add_output("y", "y");
        let orig = b.build().unwrap();
        // Tampered: y is forced high while a & !b.
        let mut t = orig.to_builder();
        t.add_cell("ht_g0", "INV", &[("a", "b"), ("o", "ht_nb")]).unwrap();
        t.add_cell("ht_g1", "AND2", &[("a", "a"), ("b", "ht_nb"), ("o", "ht_trig")]).unwrap();
        t.cells.get_mut("g").unwrap().pins.insert("o".into(), "ht_y0".into());
        t.add_net("ht_y0");
        t.add_cell("ht_g2", "OR2", &[("a", "ht_y0"), ("b", "ht_trig"), ("o", "y")]).unwrap();
        (orig, t.build().unwrap())
    }

    #[test]
    fn self_equivalence() {
        let (o, _) = pair();
        let r = check_untriggered_equivalence(&o, &o, None, None, &EquivalenceOptions::default()).unwrap();
        assert!(r.passed());
        assert_eq!(r.compared, 10_048);
    }

    #[test]
    fn divergence_only_when_fired() {
        let (o, t) = pair();
        let opts = EquivalenceOptions::default();
        let r = check_untriggered_equivalence(&o, &t, None, Some("ht_trig"), &opts).unwrap();
        assert!(r.passed());
        assert!(r.fired > 0);
        assert!(r.compared >= opts.trials);
        let r = check_untriggered_equivalence(&o, &t, None, None, &opts).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn latched_payload_is_cleared_by_the_lane_restart() {
        let mut b = NetlistBuilder::new("t", lib());
        for i in ["clk", "rst_n", "a", "b"] {
            b.add_input(i);
        }
        b.add_cell("r", "DFFR", &[("D", "a"), ("CK", "clk"), ("RN", "rst_n"), ("Q", "q")]).unwrap();
        b.add_cell("g", "AND2", &[("a", "q"), ("b", "b"), ("o", "y")]).unwrap();
        b.add_output("y", "y");
        let orig = b.build().unwrap();
        // Once a & b was seen, y stays high until reset.
        let mut t = orig.to_builder();
        t.add_cell("ht_g0", "AND2", &[("a", "a"), ("b", "b"), ("o", "ht_trig")]).unwrap();
        t.add_cell("ht_g1", "OR2", &[("a", "ht_trig"), ("b", "ht_l"), ("o", "ht_ld")]).unwrap();
        t.add_cell("ht_r", "DFFR", &[("D", "ht_ld"), ("CK", "clk"), ("RN", "rst_n"), ("Q", "ht_l")]).unwrap();
        t.cells.get_mut("g").unwrap().pins.insert("o".into(), "ht_y0".into());
        t.add_cell("ht_g2", "OR2", &[("a", "ht_y0"), ("b", "ht_l"), ("o", "y")]).unwrap();
        let t = t.build().unwrap();
        let g = crate::netlist::identify_globals(&orig).unwrap();
        let opts = EquivalenceOptions::default();
        let r = check_untriggered_equivalence(&orig, &t, Some(&g), Some("ht_trig"), &opts).unwrap();
        assert!(r.passed(), "{:?}", r.mismatches);
        assert!(r.compared >= opts.trials && r.fired > 0);
        let r = check_untriggered_equivalence(&orig, &t, Some(&g), None, &opts).unwrap();
        assert!(!r.passed());
    }
}
