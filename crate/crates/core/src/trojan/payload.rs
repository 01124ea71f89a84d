// SPDX-License-Identifier: Apache-2.0

//! Payload generators.
//!
//! Leak framing: on activation the payload samples the secret into a shift
//! register behind a start bit and emits `n + 1` slots of `2^c` cycles each,
//! the start slot followed by the secret bits from bit 0 upwards.
//!
//! * SERIAL holds each slot's bit on the output.
//! * FSK toggles the output on every cycle of a 1 slot and on every other
//!   cycle of a 0 slot (no toggles at all when `c = 0`).
//! * DBPSK drives a free-running square wave whose phase flips at the start
//!   of every 1 slot, relative to the phase of the start slot.

use super::gen::{Gen, Sig};
use super::spec::{bits_for, LeakCode, PayloadSpec};
use super::{InterfacePort, PortClass};
use crate::select::PortRole;

pub(crate) fn build_payload(g: &mut Gen, spec: &PayloadSpec, en: &Sig) -> Vec<InterfacePort> {
    match spec {
        PayloadSpec::Leak { n, code, c } => leak(g, *n, *code, *c, en),
        PayloadSpec::ShiftBurn { n } => shift_burn(g, *n, en),
        PayloadSpec::Modify { n, v } => {
            let name = g.ctx().name.clone();
            (0..*n)
                .map(|i| {
                    let input = format!("{name}_fi{i}");
                    let fi = g.input(&input);
                    let out = g.mux(en, &Sig::Const(v >> i & 1 == 1), &fi);
                    feedthrough(g, input, &out, i)
                })
                .collect()
        }
        PayloadSpec::Fault { n } => fault(g, *n, en),
    }
}

fn feedthrough(g: &mut Gen, input: String, out: &Sig, i: usize) -> InterfacePort {
    let name = format!("{}_fo{i}", g.ctx().name);
    g.name_signal(out, &name);
    g.output(&name, &Sig::net(&name));
    InterfacePort {
        role: PortRole::PayloadFeedthrough,
        class: PortClass::Feedthrough {
            input,
            output: name,
        },
    }
}

fn fault(g: &mut Gen, n: usize, en: &Sig) -> Vec<InterfacePort> {
    let name = g.ctx().name.clone();
    let regs: Vec<_> = (0..n).map(|_| g.reg()).collect();
    let mask: Vec<Sig> = regs.iter().map(|r| r.q.clone()).collect();
    let (inc, _) = g.increment(&mask, &Sig::Const(true));
    let full = g.and_all(&inc);
    let not_full = g.inv(&full);
    for (r, (m, x)) in regs.iter().zip(mask.iter().zip(&inc)) {
        let wrapped = g.and2(&not_full, x);
        let d = g.mux(en, &wrapped, m);
        g.set_d(r, &d);
    }
    let mut ports = Vec::new();
    for (i, x) in inc.iter().enumerate() {
        let input = format!("{name}_fi{i}");
        let fi = g.input(&input);
        let flip = g.and2(en, x);
        let out = g.xor2(&fi, &flip);
        ports.push(feedthrough(g, input, &out, i));
    }
    ports
}

fn shift_burn(g: &mut Gen, n: usize, en: &Sig) -> Vec<InterfacePort> {
    // n + 1 registers with n differing neighbour pairs: an odd-length
    // alternating seed in a plain ring for even n, an even-length one in a
    // twisted ring for odd n. Shifting rotates the differences, so exactly n
    // registers toggle per enabled cycle.
    let twisted = n % 2 == 1;
    let regs: Vec<_> = (0..=n).map(|_| g.reg()).collect();
    let qs: Vec<Sig> = regs.iter().map(|r| r.q.clone()).collect();
    for (i, r) in regs.iter().enumerate() {
        let prev = if i == 0 {
            if twisted {
                g.inv(&qs[n])
            } else {
                qs[n].clone()
            }
        } else {
            qs[i - 1].clone()
        };
        let d = g.mux(en, &prev, &Sig::Const(i % 2 == 1));
        g.set_d(r, &d);
    }
    let name = format!("{}_fb", g.ctx().name);
    let fb = g.name_signal(&qs[n], &name);
    g.output(&name, &fb);
    vec![InterfacePort {
        role: PortRole::PayloadOut,
        class: PortClass::OutputOnly {
            net: name,
            optional: true,
        },
    }]
}

fn leak(g: &mut Gen, n: usize, code: LeakCode, c: u32, en: &Sig) -> Vec<InterfacePort> {
    let name = g.ctx().name.clone();
    let mut ports = Vec::new();
    let secret: Vec<Sig> = (0..n)
        .map(|i| {
            let port = format!("{name}_s{i}");
            ports.push(InterfacePort {
                role: PortRole::PayloadIn,
                class: PortClass::InputOnly { net: port.clone() },
            });
            g.input(&port)
        })
        .collect();

    let active = g.reg();
    let a = active.q.clone();
    let sr: Vec<_> = (0..=n).map(|_| g.reg()).collect();
    let presc: Vec<_> = (0..c).map(|_| g.reg()).collect();
    let slots: Vec<_> = (0..bits_for(n as u64)).map(|_| g.reg()).collect();
    let sr_q: Vec<Sig> = sr.iter().map(|r| r.q.clone()).collect();
    let p_q: Vec<Sig> = presc.iter().map(|r| r.q.clone()).collect();
    let bc_q: Vec<Sig> = slots.iter().map(|r| r.q.clone()).collect();

    let idle = g.inv(&a);
    let load = g.and2(en, &idle);
    let slot_full = g.and_all(&p_q);
    let slot_end = g.and2(&a, &slot_full);
    let at_last = g.eq_const(&bc_q, n as u64);
    let done = g.and2(&slot_end, &at_last);
    let not_done = g.inv(&done);
    let stay = g.and2(&a, &not_done);
    let a_next = g.or2(&load, &stay);
    g.set_d(&active, &a_next);

    for i in 0..=n {
        let init = if i == 0 { Sig::Const(true) } else { secret[i - 1].clone() };
        let shifted = sr_q.get(i + 1).cloned().unwrap_or(Sig::Const(false));
        let held = g.mux(&slot_end, &shifted, &sr_q[i]);
        let d = g.mux(&load, &init, &held);
        g.set_d(&sr[i], &d);
    }
    let (p_inc, _) = g.increment(&p_q, &Sig::Const(true));
    for (r, x) in presc.iter().zip(&p_inc) {
        let d = g.and2(&a, x);
        g.set_d(r, &d);
    }
    let (bc_inc, _) = g.increment(&bc_q, &slot_end);
    for (r, x) in slots.iter().zip(&bc_inc) {
        let d = g.and2(&a, x);
        g.set_d(r, &d);
    }

    let bit = sr_q[0].clone();
    let out = match code {
        LeakCode::Serial => g.and2(&a, &bit),
        LeakCode::Fsk => {
            let o = g.reg();
            let half = p_q.first().cloned().unwrap_or(Sig::Const(false));
            let rate = g.or2(&bit, &half);
            let toggle = g.and2(&a, &rate);
            let out = g.xor2(&o.q, &toggle);
            g.set_d(&o, &out);
            out
        }
        LeakCode::Dbpsk => {
            let f = g.reg();
            let nf = g.inv(&f.q);
            g.set_d(&f, &nf);
            let phase = g.reg();
            let flipped = g.xor2(&phase.q, &bit);
            let kept = g.mux(&slot_end, &flipped, &phase.q);
            let d = g.mux(&load, &nf, &kept);
            g.set_d(&phase, &d);
            let carrier = g.xor2(&f.q, &phase.q);
            let sym = g.xor2(&carrier, &bit);
            g.and2(&a, &sym)
        }
    };
    let port = format!("{name}_leak");
    let out = g.name_signal(&out, &port);
    g.output(&port, &out);
    ports.push(InterfacePort {
        role: PortRole::PayloadOut,
        class: PortClass::OutputOnly {
            net: port,
            optional: false,
        },
    });
    ports
}
