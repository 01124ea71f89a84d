// SPDX-License-Identifier: Apache-2.0

//! Candidate streams: each selection function orders target nets (or
//! registers) as hook candidates.

use super::{SelectError, SsfKind};
use crate::analysis::{l1, MetricsStore};
use crate::netlist::{CellId, Driver, GlobalSignals, NetId, Netlist};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

/// Nets with a transition probability at or below this never toggle and
/// are left out of the probability-driven streams.
pub const STUCK_PT: f64 = 1e-12;

/// A hook candidate. Register-based functions also name the register, so
/// feedthroughs can splice its d input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Candidate {
    pub net: NetId,
    pub register: Option<CellId>,
}

/// Follows single-input buffers and inverters back to the first other
/// driver.
pub fn canonical_net(n: &Netlist, mut net: NetId) -> NetId {
    let mut steps = 0;
    while let Driver::Cell(p) = n.net(net).driver {
        let kind = n.kind_of(p.cell);
        if !kind.is_buffer_or_inverter() || steps > n.nets().len() {
            break;
        }
        net = n.cell(p.cell).pins[0];
        steps += 1;
    }
    net
}

/// Ordered candidates for one selection function.
#[derive(Debug, Clone)]
pub struct CandidateStream {
    items: Vec<Candidate>,
    next: usize,
}

impl Iterator for CandidateStream {
    type Item = Candidate;
    fn next(&mut self) -> Option<Candidate> {
        let c = self.items.get(self.next).copied();
        self.next += 1;
        c
    }
}

impl CandidateStream {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn remaining(&self) -> &[Candidate] {
        &self.items[self.next.min(self.items.len())..]
    }
}

/// Canonical nets eligible as net candidates: no constants, no clock or
/// reset, no stuck nets, each canonical source once, in net order.
fn eligible_nets(n: &Netlist, m: &MetricsStore, globals: Option<&GlobalSignals>) -> Vec<NetId> {
    let mut skip: HashSet<NetId> = HashSet::new();
    if let Some(g) = globals {
        skip.insert(g.clock);
        if let Some((r, _)) = g.reset {
            skip.insert(r);
        }
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for id in n.net_ids() {
        let c = canonical_net(n, id);
        if matches!(n.net(c).driver, Driver::Const(_)) || skip.contains(&c) || m.p_t[c.index()] <= STUCK_PT {
            continue;
        }
        if seen.insert(c) {
            out.push(c);
        }
    }
    out
}

fn by_pt(nets: &mut [NetId], m: &MetricsStore) {
    nets.sort_by(|a, b| m.p_t[a.index()].total_cmp(&m.p_t[b.index()]).then(a.cmp(b)));
}

/// Weighted order without replacement for weights `exp(-p_t / tau)`: each
/// net gets the key `ln(-ln u) + p_t / tau` (a Gumbel perturbation of the
/// log weight) and nets are taken by ascending key.
fn weighted_order(nets: &mut Vec<NetId>, m: &MetricsStore, tau: f64, rng: &mut ChaCha8Rng) {
    let mut keyed: Vec<(f64, NetId)> = nets
        .iter()
        .map(|&id| {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            ((-u.ln()).ln() + m.p_t[id.index()] / tau, id)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    *nets = keyed.into_iter().map(|(_, id)| id).collect();
}

fn cluster_of_net(n: &Netlist, m: &MetricsStore, net: NetId) -> Option<usize> {
    n.driver_cell(net).and_then(|c| m.cluster_of[c.index()])
}

/// Regroups an ordered net list cluster by cluster: the first net's cluster
/// comes first, then the other clusters by L1 centroid distance from it.
/// Nets without a cluster go last. Order within a group is kept.
fn by_cluster(nets: Vec<NetId>, n: &Netlist, m: &MetricsStore) -> Vec<NetId> {
    let Some(anchor) = nets.iter().find_map(|&x| cluster_of_net(n, m, x)) else {
        return nets;
    };
    let a = m.cluster_centroids[anchor];
    let mut rank: Vec<usize> = (0..m.cluster_centroids.len()).collect();
    rank.sort_by(|&x, &y| {
        l1(a, m.cluster_centroids[x])
            .total_cmp(&l1(a, m.cluster_centroids[y]))
            .then((x != anchor).cmp(&(y != anchor)))
            .then(x.cmp(&y))
    });
    let mut pos = vec![0; rank.len()];
    for (i, &c) in rank.iter().enumerate() {
        pos[c] = i;
    }
    let mut keyed: Vec<(usize, usize, NetId)> = nets
        .into_iter()
        .enumerate()
        .map(|(i, x)| (cluster_of_net(n, m, x).map_or(usize::MAX, |c| pos[c]), i, x))
        .collect();
    keyed.sort();
    keyed.into_iter().map(|(_, _, x)| x).collect()
}

fn registers(
    n: &Netlist,
    m: &MetricsStore,
    keep: impl Fn(usize) -> bool,
    rng: &mut ChaCha8Rng,
) -> Vec<Candidate> {
    let mut regs: Vec<usize> = (0..m.registers.len()).filter(|&i| keep(i)).collect();
    regs.shuffle(rng);
    regs.into_iter()
        .map(|i| {
            let r = m.registers[i];
            Candidate {
                net: n.register_q(r),
                register: Some(r),
            }
        })
        .collect()
}

/// Registers in the lower half of the z-score order (ties by register
/// index), i.e. the `ceil(R/2)` lowest.
pub fn low_z_registers(m: &MetricsStore) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..m.registers.len()).collect();
    idx.sort_by(|&a, &b| m.z_score[a].total_cmp(&m.z_score[b]).then(a.cmp(&b)));
    idx.truncate(m.registers.len().div_ceil(2));
    idx.sort();
    idx
}

/// Builds the candidate stream of `kind`.
pub fn candidate_stream(
    kind: SsfKind,
    n: &Netlist,
    m: &MetricsStore,
    globals: Option<&GlobalSignals>,
    seed: u64,
) -> Result<CandidateStream, SelectError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let missing = |metric: &'static str| SelectError::MissingMetric { kind: kind.name(), metric };
    if kind.uses_clusters() && m.cluster_centroids.is_empty() {
        return Err(missing("placement clusters"));
    }
    let taint = if kind.uses_taint() {
        Some(m.tainted.as_ref().ok_or_else(|| missing("taint"))?)
    } else {
        None
    };
    let nets_to_candidates = |v: Vec<NetId>| -> Vec<Candidate> {
        v.into_iter().map(|net| Candidate { net, register: None }).collect()
    };
    let items = match kind {
        SsfKind::T | SsfKind::Tc => {
            let mut v = eligible_nets(n, m, globals);
            by_pt(&mut v, m);
            if kind == SsfKind::Tc {
                v = by_cluster(v, n, m);
            }
            nets_to_candidates(v)
        }
        SsfKind::Tr { tau } | SsfKind::Tcr { tau } => {
            let mut v = eligible_nets(n, m, globals);
            weighted_order(&mut v, m, tau, &mut rng);
            if kind.uses_clusters() {
                v = by_cluster(v, n, m);
            }
            nets_to_candidates(v)
        }
        SsfKind::Rlr => {
            let low = low_z_registers(m);
            registers(n, m, |i| low.binary_search(&i).is_ok(), &mut rng)
        }
        SsfKind::Rlt { threshold } => {
            let t = taint.expect("checked");
            registers(
                n,
                m,
                |i| m.z_score[i] < threshold && t.contains(n.register_q(m.registers[i]).index()),
                &mut rng,
            )
        }
        SsfKind::Rhs | SsfKind::Rhst => {
            let fsm = m.fsm_scc;
            registers(
                n,
                m,
                |i| {
                    Some(m.scc_of[i]) == fsm
                        && taint.is_none_or(|t| t.contains(n.register_q(m.registers[i]).index()))
                },
                &mut rng,
            )
        }
        SsfKind::D => Vec::new(),
    };
    Ok(CandidateStream { items, next: 0 })
}
