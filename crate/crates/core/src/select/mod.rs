// SPDX-License-Identifier: Apache-2.0

//! Signal selection: ranking target nets as hook candidates for trojan
//! ports and binding ports to independent nets.

mod hooks;
pub mod kind;
mod stream;

pub use hooks::{are_independent, select_hooks, HookAssignment, HookTarget, PortHook};
pub use kind::{PortRole, SsfAssignment, SsfKind, DEFAULT_RLT_THRESHOLD, DEFAULT_TAU};
pub use stream::{canonical_net, candidate_stream, low_z_registers, Candidate, CandidateStream, STUCK_PT};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SelectError {
    #[error("{kind} needs {metric}, which was not computed")]
    MissingMetric { kind: &'static str, metric: &'static str },
    #[error("no feasible net for port '{port}' ({role}, {kind}); try another seed")]
    NoFeasibleAssignment { port: String, role: &'static str, kind: String },
    #[error("trojan needs a clock or reset but the target has none")]
    MissingGlobals,
}
