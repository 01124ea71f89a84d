// SPDX-License-Identifier: Apache-2.0

//! Trigger activation search.
//!
//! An exhaustive single-frame search over the trigger's primary-input
//! support runs first when that support is small; otherwise, or when it
//! finds nothing, seeded random multi-cycle simulation runs until the
//! budget is spent. Every hit is replayed through [`simulate_nets`] before
//! it is returned. `Unreached` only means the budget ran out.

use super::sim::{simulate_nets, SimState, Simulator, Stimulus};
use super::ValidationError;
use crate::logic::{Logic, Tern64};
use crate::netlist::{build_signal_dag, GlobalSignals, NetId, Netlist};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct CoverBudget {
    /// Random stimulus sequences (lanes) to try.
    pub random_runs: usize,
    /// Cycles per random sequence.
    pub max_cycles: usize,
    /// Largest input support searched exhaustively.
    pub exhaustive_limit: usize,
    pub reset_cycles: usize,
    pub seed: u64,
    /// Inputs held at a constant throughout the search.
    pub pinned: BTreeMap<String, bool>,
}

impl Default for CoverBudget {
    fn default() -> Self {
        CoverBudget {
            random_runs: 100_000,
            max_cycles: 1_000,
            exhaustive_limit: 16,
            reset_cycles: 1,
            seed: 0,
            pinned: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoverResult {
    Covered { stimulus: Stimulus, cycle: usize },
    Unreached { vectors: u64, cycles: u64 },
}

impl CoverResult {
    pub fn is_covered(&self) -> bool {
        matches!(self, CoverResult::Covered { .. })
    }
}

/// Primary inputs (other than clock and reset) in the single-frame fan-in
/// of `net`.
pub fn trigger_support(
    n: &Netlist,
    net: NetId,
    globals: Option<&GlobalSignals>,
) -> Result<Vec<NetId>, ValidationError> {
    let dag = build_signal_dag(n)?;
    let anc = dag.ancestors(net);
    let sim = Simulator::new(n, globals);
    Ok(sim.inputs().iter().copied().filter(|i| anc.contains(i.index())).collect())
}

fn verify(
    n: &Netlist,
    globals: Option<&GlobalSignals>,
    net: NetId,
    stimulus: Stimulus,
    cycle: usize,
) -> Option<CoverResult> {
    let trace = simulate_nets(n, globals, &stimulus, &[net]).ok()?;
    if trace.values[0].get(cycle) == Some(&Logic::One) {
        Some(CoverResult::Covered { stimulus, cycle })
    } else {
        log::warn!("activation candidate failed replay at cycle {cycle}");
        None
    }
}

fn lane_stimulus(
    names: &[String],
    reset_cycles: usize,
    rows: &[Vec<Tern64>],
    lane: usize,
) -> Stimulus {
    Stimulus {
        inputs: names.to_vec(),
        reset_cycles,
        vectors: rows
            .iter()
            .map(|row| row.iter().map(|v| v.lane(lane)).collect())
            .collect(),
    }
}

/// Searches for a stimulus that drives `trigger_net` to 1.
pub fn find_trigger_activation(
    n: &Netlist,
    trigger_net: &str,
    globals: Option<&GlobalSignals>,
    budget: &CoverBudget,
) -> Result<CoverResult, ValidationError> {
    let net = n
        .find_net(trigger_net)
        .ok_or_else(|| ValidationError::UnknownNet(trigger_net.to_string()))?;
    let sim = Simulator::new(n, globals);
    let names = sim.input_names();
    for p in budget.pinned.keys() {
        if !names.contains(p) {
            return Err(ValidationError::UnknownInput(p.clone()));
        }
    }
    let pinned: Vec<Option<Tern64>> = names
        .iter()
        .map(|nm| budget.pinned.get(nm).map(|&b| Tern64::splat(Logic::from_bool(b))))
        .collect();
    let mut reset_state = sim.initial_state();
    sim.apply_reset(&mut reset_state, budget.reset_cycles);

    let mut vectors = 0u64;
    let mut cycles = 0u64;

    let support: Vec<usize> = trigger_support(n, net, globals)?
        .into_iter()
        .filter_map(|s| sim.inputs().iter().position(|&i| i == s))
        .filter(|&k| pinned[k].is_none())
        .collect();
    if support.len() <= budget.exhaustive_limit {
        let total = 1u64 << support.len();
        let batches = total.div_ceil(64);
        let hit = (0..batches).into_par_iter().find_map_first(|b| {
            let row: Vec<Tern64> = (0..names.len())
                .map(|k| {
                    if let Some(p) = pinned[k] {
                        return p;
                    }
                    let Some(j) = support.iter().position(|&s| s == k) else {
                        return Tern64::ZERO;
                    };
                    let mut bits = 0u64;
                    for lane in 0..64 {
                        let combo = b * 64 + lane;
                        if combo < total && combo >> j & 1 == 1 {
                            bits |= 1 << lane;
                        }
                    }
                    Tern64::from_bits(bits)
                })
                .collect();
            let mut st = reset_state.clone();
            sim.eval(&mut st, &row, false);
            let valid = if total - b * 64 >= 64 { !0 } else { (1u64 << (total - b * 64)) - 1 };
            let fired = st.value(net).one & valid;
            (fired != 0).then(|| {
                let lane = fired.trailing_zeros() as usize;
                lane_stimulus(&names, budget.reset_cycles, &[row], lane)
            })
        });
        vectors += total;
        cycles += total;
        if let Some(s) = hit {
            if let Some(r) = verify(n, globals, net, s, 0) {
                return Ok(r);
            }
        }
    }

    let batches = budget.random_runs.div_ceil(64);
    let group = rayon::current_num_threads().max(1) * 2;
    let run_batch = |b: usize| -> (Option<(Stimulus, usize)>, u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed ^ (b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let lanes = (budget.random_runs - b * 64).min(64);
        let valid = if lanes == 64 { !0 } else { (1u64 << lanes) - 1 };
        let mut st: SimState = reset_state.clone();
        let mut rows = Vec::new();
        for c in 0..budget.max_cycles {
            let row: Vec<Tern64> = pinned
                .iter()
                .map(|p| p.unwrap_or_else(|| Tern64::from_bits(rng.gen())))
                .collect();
            sim.eval(&mut st, &row, false);
            rows.push(row);
            let fired = st.value(net).one & valid;
            if fired != 0 {
                let lane = fired.trailing_zeros() as usize;
                let s = lane_stimulus(&names, budget.reset_cycles, &rows, lane);
                return (Some((s, c)), (c as u64 + 1) * lanes as u64);
            }
            sim.clock(&mut st);
        }
        (None, budget.max_cycles as u64 * lanes as u64)
    };
    let mut start = 0;
    while start < batches {
        let end = (start + group).min(batches);
        let results: Vec<_> = (start..end).into_par_iter().map(run_batch).collect();
        for (hit, spent) in results {
            cycles += spent;
            vectors += spent;
            if let Some((s, c)) = hit {
                if let Some(r) = verify(n, globals, net, s, c) {
                    return Ok(r);
                }
            }
        }
        start = end;
    }
    Ok(CoverResult::Unreached { vectors, cycles })
}
