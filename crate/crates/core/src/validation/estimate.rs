// SPDX-License-Identifier: Apache-2.0

//! Sampled activation-time estimate.
//!
//! The untampered target is simulated on 64 random lanes and a behavioural
//! model of the trigger is run over the values of its hook nets. Unlike the
//! static estimate, this sees temporal correlation between cycles.

use super::sim::Simulator;
use crate::logic::{Logic, Tern64};
use crate::netlist::{GlobalSignals, NetId, Netlist};
use crate::trojan::{CountMode, TriggerSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cycle-level reference model of a trigger over its input bits.
#[derive(Debug, Clone)]
pub struct TriggerModel {
    spec: TriggerSpec,
    prev: Vec<Logic>,
    count: u64,
    state: usize,
}

fn matches(x: &[Logic], v: u64, mask: u64) -> bool {
    x.iter().enumerate().all(|(j, &b)| {
        j >= 64 || mask >> j & 1 == 0 || b == Logic::from_bool(v >> j & 1 == 1)
    })
}

impl TriggerModel {
    /// Model in its reset state for `width` input bits.
    pub fn new(spec: &TriggerSpec, width: usize) -> TriggerModel {
        TriggerModel { spec: spec.clone(), prev: vec![Logic::Zero; width], count: 0, state: 0 }
    }

    /// Trigger output for this cycle's inputs `x`, then advances one clock.
    /// X inputs never match and never count as changes.
    pub fn step(&mut self, x: &[Logic]) -> bool {
        let changed = |prev: &[Logic]| {
            x.iter().zip(prev).filter(|(a, b)| a.is_known() && b.is_known() && a != b).count() as u64
        };
        let fired = match &self.spec {
            TriggerSpec::Combinational { v, .. } => matches(x, *v, u64::MAX),
            TriggerSpec::Counter { v, mode: CountMode::Any, .. } => {
                let fired = self.count == *v;
                if !fired && changed(&self.prev) > 0 {
                    self.count += 1;
                }
                fired
            }
            TriggerSpec::Counter { v, mode: CountMode::PerBit, .. } => {
                let fired = self.count >= *v;
                if !fired {
                    self.count += changed(&self.prev);
                }
                fired
            }
            TriggerSpec::Fsm { values, masks, .. } => {
                let last = values.len() - 1;
                let k = self.state;
                let hit = k <= last && matches(x, values[k], masks[k]);
                self.state = if hit { (k + 1).min(last) } else { 0 };
                hit && k == last
            }
        };
        self.prev = x.to_vec();
        fired
    }
}

/// Outcome of [`sample_activation`].
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSample {
    pub lanes: usize,
    /// Lanes whose model fired within the horizon.
    pub fired: usize,
    /// Observed lane-cycles up to and including each first activation.
    pub exposure: u64,
}

impl ActivationSample {
    /// Expected cycles to activation, treating first activations as
    /// exponentially distributed; `None` when nothing fired.
    pub fn expected_cycles(&self) -> Option<f64> {
        (self.fired > 0).then(|| self.exposure as f64 / self.fired as f64)
    }
}

/// Simulates `n` for `cycles` cycles after reset on 64 lanes of uniform
/// random inputs and records when a trigger reading `hooks` would fire.
pub fn sample_activation(
    n: &Netlist,
    globals: Option<&GlobalSignals>,
    trigger: &TriggerSpec,
    hooks: &[NetId],
    cycles: usize,
    reset_cycles: usize,
    seed: u64,
) -> ActivationSample {
    let sim = Simulator::new(n, globals);
    let mut st = sim.initial_state();
    sim.apply_reset(&mut st, reset_cycles);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut models = vec![TriggerModel::new(trigger, hooks.len()); 64];
    let mut first: Vec<Option<usize>> = vec![None; 64];
    let mut row = vec![Tern64::ZERO; sim.inputs().len()];
    for t in 0..cycles {
        for v in &mut row {
            *v = Tern64::from_bits(rng.gen());
        }
        sim.eval(&mut st, &row, false);
        let vals: Vec<Tern64> = hooks.iter().map(|h| st.values[h.index()]).collect();
        for (lane, m) in models.iter_mut().enumerate() {
            if first[lane].is_some() {
                continue;
            }
            let x: Vec<Logic> = vals.iter().map(|v| v.lane(lane)).collect();
            if m.step(&x) {
                first[lane] = Some(t);
            }
        }
        if first.iter().all(Option::is_some) {
            break;
        }
        sim.clock(&mut st);
    }
    ActivationSample {
        lanes: 64,
        fired: first.iter().flatten().count(),
        exposure: first.iter().map(|f| f.map_or(cycles as u64, |t| t as u64 + 1)).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Logic::{One as I, Zero as O};

    fn run(spec: TriggerSpec, seq: &[[Logic; 2]]) -> Vec<bool> {
        let mut m = TriggerModel::new(&spec, 2);
        seq.iter().map(|x| m.step(x)).collect()
    }

    #[test]
    fn model_semantics() {
        let comb = TriggerSpec::Combinational { n: 2, v: 0b01 };
        assert_eq!(run(comb, &[[O, O], [I, O], [O, I]]), [false, true, false]);
        let any = TriggerSpec::Counter { n: 2, v: 2, mode: CountMode::Any };
        assert_eq!(run(any, &[[I, I], [I, I], [O, I], [O, I]]), [false, false, false, true]);
        let bit = TriggerSpec::Counter { n: 2, v: 2, mode: CountMode::PerBit };
        assert_eq!(run(bit, &[[I, I], [I, I], [O, O]]), [false, true, true]);
        let fsm = TriggerSpec::Fsm { n: 2, values: vec![1, 2], masks: vec![3, 3] };
        assert_eq!(run(fsm.clone(), &[[I, O], [O, I], [O, I]]), [false, true, true]);
        assert_eq!(run(fsm.clone(), &[[I, O], [I, O], [O, I]]), [false, false, false]);
        assert_eq!(run(fsm, &[[O, O], [I, O], [O, I]]), [false, false, true]);
    }

    #[test]
    fn free_inputs_fire_at_the_expected_rate() {
        let f = crate::fixtures::four_pi();
        let n = &f.netlist;
        let hooks = [n.find_net("a").unwrap(), n.find_net("b").unwrap()];
        let comb = TriggerSpec::Combinational { n: 2, v: 3 };
        let runs: Vec<f64> = (0..50)
            .map(|seed| sample_activation(n, None, &comb, &hooks, 200, 0, seed).expected_cycles().unwrap())
            .collect();
        let mean = runs.iter().sum::<f64>() / runs.len() as f64;
        assert!((mean - 4.0).abs() < 0.25, "{mean}");
    }

    #[test]
    fn lockstep_counter_bits_never_match_an_fsm_sequence() {
        // Johnson counter bits 0 and 2 never read (1, 1) then (0, 0).
        let f = crate::fixtures::control_fsm();
        let n = &f.netlist;
        let g = crate::netlist::identify_globals(n).unwrap();
        let hooks = [n.find_net("st[0]").unwrap(), n.find_net("st[2]").unwrap()];
        let fsm = TriggerSpec::Fsm { n: 2, values: vec![3, 0], masks: vec![3, 3] };
        let s = sample_activation(n, Some(&g), &fsm, &hooks, 500, 1, 1);
        assert_eq!((s.fired, s.expected_cycles()), (0, None));
    }
}
