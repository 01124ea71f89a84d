// SPDX-License-Identifier: Apache-2.0

//! Trigger generators.

use super::gen::{Gen, Sig};
use super::spec::{bits_for, CountMode, TriggerSpec};

/// Builds the trigger logic over `inputs` and returns the activation signal.
pub(crate) fn build_trigger(g: &mut Gen, spec: &TriggerSpec, inputs: &[Sig]) -> Sig {
    match spec {
        TriggerSpec::Combinational { v, .. } => g.eq_const(inputs, *v),
        TriggerSpec::Counter { v, mode, .. } => counter(g, inputs, *v, *mode),
        TriggerSpec::Fsm { values, masks, .. } => fsm(g, inputs, values, masks),
    }
}

/// Width of the change counter.
pub fn counter_width(n: usize, v: u64, mode: CountMode) -> usize {
    match mode {
        CountMode::Any => bits_for(v),
        CountMode::PerBit => bits_for(v + n as u64 - 1),
    }
}

/// Width of the FSM state register.
pub fn fsm_width(states: usize) -> usize {
    bits_for(states as u64 - 1)
}

fn counter(g: &mut Gen, inputs: &[Sig], v: u64, mode: CountMode) -> Sig {
    let changes: Vec<Sig> = inputs
        .iter()
        .map(|x| {
            let prev = g.dff(x);
            g.xor2(x, &prev)
        })
        .collect();
    let width = counter_width(inputs.len(), v, mode);
    let regs: Vec<_> = (0..width).map(|_| g.reg()).collect();
    let count: Vec<Sig> = regs.iter().map(|r| r.q.clone()).collect();
    let (trigger, next) = match mode {
        CountMode::Any => {
            let trigger = g.eq_const(&count, v);
            let any = g.or_all(&changes);
            let idle = g.inv(&trigger);
            let en = g.and2(&any, &idle);
            (trigger, g.increment(&count, &en).0)
        }
        CountMode::PerBit => {
            let trigger = g.ge_const(&count, v);
            let idle = g.inv(&trigger);
            let mut acc = count.clone();
            for ch in &changes {
                let en = g.and2(ch, &idle);
                acc = g.increment(&acc, &en).0;
            }
            (trigger, acc)
        }
    };
    for (r, d) in regs.iter().zip(&next) {
        g.set_d(r, d);
    }
    trigger
}

fn fsm(g: &mut Gen, inputs: &[Sig], values: &[u64], masks: &[u64]) -> Sig {
    let states = values.len();
    let width = fsm_width(states);
    let regs: Vec<_> = (0..width).map(|_| g.reg()).collect();
    let state: Vec<Sig> = regs.iter().map(|r| r.q.clone()).collect();
    let matches: Vec<Sig> = values
        .iter()
        .zip(masks)
        .map(|(&v, &m)| {
            let lits: Vec<Sig> = inputs
                .iter()
                .enumerate()
                .filter(|(j, _)| m >> j & 1 == 1)
                .map(|(j, x)| if v >> j & 1 == 1 { x.clone() } else { g.inv(x) })
                .collect();
            g.and_all(&lits)
        })
        .collect();
    // Advance from state k to k+1 on a match, stay in the last state while
    // its condition holds, fall back to 0 otherwise.
    let mut take: Vec<Vec<Sig>> = vec![Vec::new(); width];
    let mut last = Sig::Const(false);
    for (k, cond) in matches.iter().enumerate() {
        let here = g.eq_const(&state, k as u64);
        let go = g.and2(&here, cond);
        if k == states - 1 {
            last = go.clone();
        }
        let target = (k + 1).min(states - 1);
        for (bit, t) in take.iter_mut().enumerate() {
            if target >> bit & 1 == 1 {
                t.push(go.clone());
            }
        }
    }
    for (r, t) in regs.iter().zip(&take) {
        let d = g.or_all(t);
        g.set_d(r, &d);
    }
    last
}
