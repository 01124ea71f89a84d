// SPDX-License-Identifier: Apache-2.0

//! Greedy binding of trojan ports to target nets.

use super::stream::{canonical_net, candidate_stream, Candidate, CandidateStream};
use super::{PortRole, SelectError, SsfAssignment};
use crate::analysis::MetricsStore;
use crate::netlist::{Driver, GlobalSignals, NetId, Netlist, PinRef, SignalDag};
use crate::trojan::{variant_seed, PortClass, TrojanNetlist};
use std::collections::{BTreeMap, HashSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HookTarget {
    /// An input-only port reads this net; an output-only port is anchored
    /// (placed) next to its driver.
    Net(String),
    /// A feedthrough cuts `net` at the sink pin `cell.pin`.
    Splice { net: String, cell: String, pin: String },
    Unbound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortHook {
    pub role: PortRole,
    pub class: PortClass,
    pub target: HookTarget,
}

fn port_name(class: &PortClass) -> &str {
    match class {
        PortClass::InputOnly { net } | PortClass::OutputOnly { net, .. } => net,
        PortClass::Feedthrough { input, .. } => input,
    }
}

impl PortHook {
    /// The trojan-side net naming this port (the input of a feedthrough).
    pub fn port(&self) -> &str {
        port_name(&self.class)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HookAssignment {
    /// One entry per trojan port, in the trojan's port order.
    pub hooks: Vec<PortHook>,
    /// `(trojan clock port, target clock net)`.
    pub clock: Option<(String, String)>,
    /// `(trojan reset port, target reset net)`.
    pub reset: Option<(String, String)>,
}

/// True iff the inclusive single-frame ancestor sets of `a` and `b` are
/// disjoint.
pub fn are_independent(dag: &SignalDag, a: NetId, b: NetId) -> bool {
    dag.are_independent(a, b)
}

fn is_control_pin(n: &Netlist, p: PinRef) -> bool {
    let kind = n.kind_of(p.cell);
    match &kind.seq {
        Some(s) => p.pin as usize == s.clock || s.reset.is_some_and(|(r, _)| r == p.pin as usize),
        None => false,
    }
}

/// Splice point for a feedthrough candidate: a register's d pin, or the
/// first data sink of a net.
fn splice_point(n: &Netlist, c: Candidate) -> Option<(NetId, PinRef)> {
    let (net, sink) = match c.register {
        Some(r) => {
            let roles = n.kind_of(r).seq.as_ref().expect("register");
            (n.register_d(r), PinRef { cell: r, pin: roles.d as u16 })
        }
        None => {
            let sink = n.net(c.net).sinks.iter().copied().find(|&p| !is_control_pin(n, p))?;
            (c.net, sink)
        }
    };
    if matches!(n.net(net).driver, Driver::Const(_)) {
        return None;
    }
    Some((net, sink))
}

/// Draws candidates for every port of `trojan` and keeps the first
/// acceptable one per port.
///
/// Feedthroughs are bound first and must be pairwise independent. Trigger
/// inputs follow and must be independent of each other and of every
/// spliced net. Secret inputs and output anchors only need distinct
/// canonical sources. No two bound nets share a canonical source.
#[allow(clippy::too_many_arguments)]
pub fn select_hooks(
    trojan: &TrojanNetlist,
    ssf: &SsfAssignment,
    n: &Netlist,
    metrics: &MetricsStore,
    dag: &SignalDag,
    globals: Option<&GlobalSignals>,
    seed: u64,
) -> Result<HookAssignment, SelectError> {
    let mut streams: BTreeMap<PortRole, CandidateStream> = BTreeMap::new();
    let mut used: HashSet<NetId> = HashSet::new();
    let mut spliced: Vec<NetId> = Vec::new();
    let mut triggers: Vec<NetId> = Vec::new();
    let mut targets: Vec<Option<HookTarget>> = vec![None; trojan.ports.len()];

    let order = [
        PortRole::PayloadFeedthrough,
        PortRole::Trigger,
        PortRole::PayloadIn,
        PortRole::PayloadOut,
    ];
    for role in order {
        let kind = ssf.get(role);
        for (idx, port) in trojan.ports.iter().enumerate() {
            if port.role != role {
                continue;
            }
            if kind.is_disconnected() {
                targets[idx] = Some(HookTarget::Unbound);
                continue;
            }
            let stream = match streams.entry(role) {
                std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(candidate_stream(kind, n, metrics, globals, variant_seed(seed, role as u64))?)
                }
            };
            let mut found = None;
            for cand in stream.by_ref() {
                let target = match &port.class {
                    PortClass::Feedthrough { .. } => {
                        let Some((net, sink)) = splice_point(n, cand) else { continue };
                        let canon = canonical_net(n, net);
                        if used.contains(&canon) || used.contains(&net) {
                            continue;
                        }
                        if !spliced.iter().all(|&s| dag.are_independent(s, net)) {
                            continue;
                        }
                        spliced.push(net);
                        used.extend([canon, net]);
                        HookTarget::Splice {
                            net: n.net(net).name.clone(),
                            cell: n.cell(sink.cell).name.clone(),
                            pin: n.pin_name(sink).to_string(),
                        }
                    }
                    PortClass::InputOnly { .. } | PortClass::OutputOnly { .. } => {
                        let net = cand.net;
                        let canon = canonical_net(n, net);
                        if used.contains(&canon) || used.contains(&net) {
                            continue;
                        }
                        if role == PortRole::Trigger
                            && !triggers
                                .iter()
                                .chain(&spliced)
                                .all(|&t| dag.are_independent(t, net))
                        {
                            continue;
                        }
                        if role == PortRole::Trigger {
                            triggers.push(net);
                        }
                        used.extend([canon, net]);
                        HookTarget::Net(n.net(net).name.clone())
                    }
                };
                found = Some(target);
                break;
            }
            match found {
                Some(t) => targets[idx] = Some(t),
                None => {
                    return Err(SelectError::NoFeasibleAssignment {
                        port: port_name(&port.class).to_string(),
                        role: role.key(),
                        kind: kind.to_string(),
                    });
                }
            }
        }
    }

    let global_name = |id: NetId| n.net(id).name.clone();
    let clock = match &trojan.clock {
        Some(port) => {
            let g = globals.ok_or(SelectError::MissingGlobals)?;
            Some((port.clone(), global_name(g.clock)))
        }
        None => None,
    };
    let reset = match &trojan.reset {
        Some((port, _)) => {
            let g = globals.and_then(|g| g.reset).ok_or(SelectError::MissingGlobals)?;
            Some((port.clone(), global_name(g.0)))
        }
        None => None,
    };
    Ok(HookAssignment {
        hooks: trojan
            .ports
            .iter()
            .zip(targets)
            .map(|(p, t)| PortHook {
                role: p.role,
                class: p.class.clone(),
                target: t.expect("every role processed"),
            })
            .collect(),
        clock,
        reset,
    })
}
