// SPDX-License-Identifier: Apache-2.0

//! Static signal and transition probabilities.

use super::AnalysisError;
use crate::netlist::{Driver, Netlist};

/// Early-exit tolerance on register outputs between iterations.
pub const CONVERGENCE_EPS: f64 = 1e-4;

/// Signal probability per net, indexed by net id.
///
/// Primary inputs and register outputs start at 0.5, constants at 0 or 1.
/// Each iteration propagates through the combinational logic in topological
/// order; the next iteration feeds every register output with the
/// probability its d net reached. Stops after `iterations` rounds or once no
/// register output moves by more than [`CONVERGENCE_EPS`].
pub fn compute_signal_probability(n: &Netlist, iterations: usize) -> Result<Vec<f64>, AnalysisError> {
    if iterations == 0 {
        return Err(AnalysisError::InvalidParameter("iterations must be at least 1".into()));
    }
    let mut p = vec![0.5; n.nets().len()];
    for id in n.net_ids() {
        if let Driver::Const(v) = n.net(id).driver {
            p[id.index()] = if v { 1.0 } else { 0.0 };
        }
    }
    let regs: Vec<_> = n
        .registers()
        .iter()
        .map(|&r| (n.register_q(r), n.register_d(r)))
        .collect();
    let mut inputs = Vec::new();
    for round in 1..=iterations {
        propagate(n, &mut p, &mut inputs);
        if round == iterations {
            break;
        }
        let next: Vec<f64> = regs.iter().map(|(_, d)| p[d.index()]).collect();
        let delta = regs
            .iter()
            .zip(&next)
            .map(|((q, _), v)| (p[q.index()] - v).abs())
            .fold(0.0, f64::max);
        for ((q, _), v) in regs.iter().zip(next) {
            p[q.index()] = v;
        }
        if delta < CONVERGENCE_EPS {
            propagate(n, &mut p, &mut inputs);
            break;
        }
    }
    Ok(p)
}

fn propagate(n: &Netlist, p: &mut [f64], inputs: &mut Vec<f64>) {
    for &c in n.comb_order() {
        let kind = n.kind_of(c);
        let cell = n.cell(c);
        inputs.clear();
        inputs.extend(cell.pins[..kind.inputs.len()].iter().map(|x| p[x.index()]));
        for (o, f) in kind.functions.iter().enumerate() {
            let out = cell.pins[kind.inputs.len() + o];
            p[out.index()] = f.probability(inputs).clamp(0.0, 1.0);
        }
    }
}

/// Probability that a net changes between two cycles, assuming temporal
/// independence.
pub fn transition_probability(ps: f64) -> f64 {
    2.0 * ps * (1.0 - ps)
}

pub fn compute_transition_probability(ps: &[f64]) -> Vec<f64> {
    ps.iter().map(|&p| transition_probability(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;
    use crate::netlist::tests::lib;

    #[test]
    fn gate_rules() {
        let src = "module t (a, b, y, z, w);\ninput a, b;\noutput y, z, w;\n\
                   AND2 g (.a(a), .b(b), .o(y));\nINV i (.a(y), .o(z));\nOR2 o (.a(a), .b(b), .o(w));\nendmodule";
        let n = parse_netlist(src, lib()).unwrap();
        let p = compute_signal_probability(&n, 1).unwrap();
        let at = |s: &str| p[n.find_net(s).unwrap().index()];
        assert_eq!(at("y"), 0.25);
        assert_eq!(at("z"), 0.75);
        assert_eq!(at("w"), 0.75);
    }

    #[test]
    fn register_feedback_iterates() {
        let src = "module t (clk, a);\ninput clk, a;\nDFF r (.D(d), .CK(clk), .Q(q));\n\
                   AND2 g (.a(q), .b(a), .o(d));\nendmodule";
        let n = parse_netlist(src, lib()).unwrap();
        let q = n.find_net("q").unwrap().index();
        let seq: Vec<f64> = (1..=3)
            .map(|k| compute_signal_probability(&n, k).unwrap()[q])
            .collect();
        assert_eq!(seq, vec![0.5, 0.25, 0.125]);
    }

    #[test]
    fn transition_formula() {
        assert_eq!(transition_probability(0.5), 0.5);
        assert_eq!(transition_probability(0.0), 0.0);
        assert_eq!(transition_probability(0.25), 0.375);
    }
}
