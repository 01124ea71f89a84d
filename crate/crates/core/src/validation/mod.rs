// SPDX-License-Identifier: Apache-2.0

//! Simulation-based validation: activation search, untriggered
//! equivalence, leak decoding and empirical transition rates.

mod cover;
mod equiv;
mod estimate;
mod leak;
mod sim;

pub use cover::{find_trigger_activation, trigger_support, CoverBudget, CoverResult};
pub use estimate::{sample_activation, ActivationSample, TriggerModel};
pub use equiv::{check_untriggered_equivalence, EquivalenceOptions, EquivalenceReport, Mismatch};
pub use leak::{decode_leak, decode_leak_trace};
pub use sim::{simulate, simulate_nets, SimState, SimTrace, Simulator, Stimulus};

use crate::logic::Tern64;
use crate::netlist::{Netlist, NetlistError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidationError {
    #[error("stimulus does not assign input '{0}'")]
    MissingInput(String),
    #[error("stimulus assigns unknown input '{0}'")]
    UnknownInput(String),
    #[error("unknown net '{0}'")]
    UnknownNet(String),
    #[error("interface mismatch: {0}")]
    IoMismatch(String),
    #[error("no leak emission found")]
    NoEmission,
    #[error("leak emission incomplete or unresolved")]
    IncompleteEmission,
    #[error("net '{net}' is X at cycle {cycle}")]
    Unresolved { net: String, cycle: usize },
    #[error("trace needs at least two cycles")]
    TooShort,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

/// Fraction of consecutive cycle pairs in which `net` changes value.
pub fn measure_empirical_transition_rate(trace: &SimTrace, net: &str) -> Result<f64, ValidationError> {
    let s = trace
        .series(net)
        .ok_or_else(|| ValidationError::UnknownNet(net.to_string()))?;
    if s.len() < 2 {
        return Err(ValidationError::TooShort);
    }
    if let Some(cycle) = s.iter().position(|l| !l.is_known()) {
        return Err(ValidationError::Unresolved {
            net: net.to_string(),
            cycle,
        });
    }
    let changes = s.windows(2).filter(|w| w[0] != w[1]).count();
    Ok(changes as f64 / (s.len() - 1) as f64)
}

/// Per-net toggle rate of a netlist driven by independent uniform random
/// inputs for `cycles` lane-cycles (64 lanes in parallel). Registers start
/// after one reset cycle; nets that are X in a lane-cycle pair are skipped.
pub fn monte_carlo_transition_rates(
    n: &Netlist,
    globals: Option<&crate::netlist::GlobalSignals>,
    cycles: u64,
    seed: u64,
) -> Vec<f64> {
    let sim = Simulator::new(n, globals);
    let mut st = sim.initial_state();
    sim.apply_reset(&mut st, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = cycles.div_ceil(64) as usize + 1;
    let nets = n.nets().len();
    let mut toggles = vec![0u64; nets];
    let mut pairs = vec![0u64; nets];
    let mut prev: Option<Vec<Tern64>> = None;
    for _ in 0..steps {
        let ins: Vec<Tern64> = (0..sim.inputs().len()).map(|_| Tern64::from_bits(rng.gen())).collect();
        sim.eval(&mut st, &ins, false);
        if let Some(p) = &prev {
            for (k, (a, b)) in p.iter().zip(&st.values).enumerate() {
                let both = a.known() & b.known();
                pairs[k] += u64::from(both.count_ones());
                toggles[k] += u64::from(((a.one ^ b.one) & both).count_ones());
            }
        }
        prev = Some(st.values.clone());
        sim.clock(&mut st);
    }
    toggles
        .iter()
        .zip(&pairs)
        .map(|(&t, &p)| if p == 0 { 0.0 } else { t as f64 / p as f64 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Logic;

    fn trace(values: Vec<Logic>) -> SimTrace {
        SimTrace {
            nets: vec!["x".into()],
            values: vec![values],
        }
    }

    #[test]
    fn transition_rate_edges() {
        use Logic::{One, Zero, X};
        assert_eq!(measure_empirical_transition_rate(&trace(vec![One; 5]), "x").unwrap(), 0.0);
        let alt = (0..6).map(|i| Logic::from_bool(i % 2 == 0)).collect();
        assert_eq!(measure_empirical_transition_rate(&trace(alt), "x").unwrap(), 1.0);
        assert!(measure_empirical_transition_rate(&trace(vec![One, X]), "x").is_err());
        assert_eq!(
            measure_empirical_transition_rate(&trace(vec![Zero]), "x"),
            Err(ValidationError::TooShort)
        );
    }

    #[test]
    fn random_input_rate_near_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s: Vec<Logic> = (0..100_000).map(|_| Logic::from_bool(rng.gen())).collect();
        let r = measure_empirical_transition_rate(&trace(s), "x").unwrap();
        assert!((r - 0.5).abs() < 0.01, "{r}");
    }
}
