// SPDX-License-Identifier: Apache-2.0

//! Trojan change order scripts.
//!
//! ```text
//! #! name=ht
//! #! trigger=comb n=2 v=0x3
//! addnet ht_x
//! addcell ht_g0 AND2
//! connect ht_g0 a n12
//! splice n7 u3 a ht_fi0 ht_fo0
//! ```
//!
//! Names are bound when the script is replayed, not when it is parsed.
//! `splice <net> <cell> <pin> <in> <out>` moves `cell.pin` from `net` to
//! `out` and merges the undriven net `in` into `net`.

use super::InsertError;
use crate::netlist::{const_from_name, Netlist, NetlistBuilder};
use crate::select::{HookAssignment, HookTarget};
use crate::trojan::{PortClass, TrojanNetlist};
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

/// Directive keys understood by the tools; others are kept but warned about.
pub const KNOWN_DIRECTIVES: [&str; 6] = ["name", "trigger", "payload", "connections", "netlist", "anchor"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TcoCommand {
    AddCell { id: String, kind: String },
    AddNet { id: String },
    Connect { cell: String, pin: String, net: String },
    Disconnect { cell: String, pin: String },
    Splice { net: String, cell: String, pin: String, in_net: String, out_net: String },
}

impl TcoCommand {
    fn write(&self, out: &mut String) {
        let _ = match self {
            TcoCommand::AddCell { id, kind } => writeln!(out, "addcell {id} {kind}"),
            TcoCommand::AddNet { id } => writeln!(out, "addnet {id}"),
            TcoCommand::Connect { cell, pin, net } => writeln!(out, "connect {cell} {pin} {net}"),
            TcoCommand::Disconnect { cell, pin } => writeln!(out, "disconnect {cell} {pin}"),
            TcoCommand::Splice { net, cell, pin, in_net, out_net } => {
                writeln!(out, "splice {net} {cell} {pin} {in_net} {out_net}")
            }
        };
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TcoScript {
    /// `(key, value)` in file order.
    pub directives: Vec<(String, String)>,
    pub commands: Vec<TcoCommand>,
}

impl TcoScript {
    pub fn directive(&self, key: &str) -> Option<&str> {
        self.directives.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Number of cells the script adds.
    pub fn added_cells(&self) -> usize {
        self.commands.iter().filter(|c| matches!(c, TcoCommand::AddCell { .. })).count()
    }

    pub fn splices(&self) -> usize {
        self.commands.iter().filter(|c| matches!(c, TcoCommand::Splice { .. })).count()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.directives {
            let _ = writeln!(out, "#! {k}={v}");
        }
        for c in &self.commands {
            c.write(&mut out);
        }
        out
    }
}

fn bad(line: usize, message: impl Into<String>) -> InsertError {
    InsertError::Syntax { line, message: message.into() }
}

/// Parses script text. Plain `#` comments and blank lines are skipped.
pub fn parse_tco(text: &str) -> Result<TcoScript, InsertError> {
    let mut script = TcoScript::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if let Some(d) = raw.strip_prefix("#!") {
            let (k, v) = d
                .trim_start()
                .split_once('=')
                .ok_or_else(|| bad(line, "directive without '='"))?;
            let k = k.trim();
            if !KNOWN_DIRECTIVES.contains(&k) {
                log::warn!("line {line}: unknown directive '{k}'");
            }
            script.directives.push((k.to_string(), v.to_string()));
            continue;
        }
        let body = raw.split('#').next().unwrap_or("");
        let w: Vec<&str> = body.split_whitespace().collect();
        let Some(&op) = w.first() else { continue };
        let want = match op {
            "addcell" => 3,
            "addnet" => 2,
            "connect" => 4,
            "disconnect" => 3,
            "splice" => 6,
            _ => return Err(bad(line, format!("unknown command '{op}'"))),
        };
        if w.len() != want {
            return Err(bad(line, format!("'{op}' takes {} arguments", want - 1)));
        }
        let s = |k: usize| w[k].to_string();
        script.commands.push(match op {
            "addcell" => TcoCommand::AddCell { id: s(1), kind: s(2) },
            "addnet" => TcoCommand::AddNet { id: s(1) },
            "connect" => TcoCommand::Connect { cell: s(1), pin: s(2), net: s(3) },
            "disconnect" => TcoCommand::Disconnect { cell: s(1), pin: s(2) },
            _ => TcoCommand::Splice { net: s(1), cell: s(2), pin: s(3), in_net: s(4), out_net: s(5) },
        });
    }
    Ok(script)
}

/// Number of target connections made by `hooks`.
pub fn hook_connections(hooks: &HookAssignment) -> usize {
    let ports: usize = hooks
        .hooks
        .iter()
        .map(|h| match (&h.target, &h.class) {
            (HookTarget::Unbound, _) => 0,
            (_, PortClass::Feedthrough { .. }) => 2,
            _ => 1,
        })
        .sum();
    ports + usize::from(hooks.clock.is_some()) + usize::from(hooks.reset.is_some())
}

/// Script that merges `trojan` into a target along `hooks`.
///
/// Input-only ports, clock and reset are wired straight to their target
/// nets; an unbound input reads constant 0. Output-only nets stay fresh
/// nets. Every feedthrough becomes one `splice`.
pub fn emit_tco(trojan: &TrojanNetlist, hooks: &HookAssignment) -> TcoScript {
    let t = &trojan.netlist;
    let mut rename: HashMap<&str, String> = HashMap::new();
    let mut splices = Vec::new();
    let mut anchors = Vec::new();
    for h in &hooks.hooks {
        match (&h.class, &h.target) {
            (PortClass::InputOnly { net }, HookTarget::Net(target)) => {
                rename.insert(net, target.clone());
            }
            (PortClass::InputOnly { net }, _) | (PortClass::Feedthrough { input: net, .. }, HookTarget::Unbound) => {
                rename.insert(net, "1'b0".to_string());
            }
            (PortClass::Feedthrough { input, output }, HookTarget::Splice { net, cell, pin }) => {
                splices.push(TcoCommand::Splice {
                    net: net.clone(),
                    cell: cell.clone(),
                    pin: pin.clone(),
                    in_net: input.clone(),
                    out_net: output.clone(),
                });
            }
            (PortClass::OutputOnly { net, .. }, HookTarget::Net(target)) => {
                anchors.push(format!("{net}@{target}"));
            }
            _ => {}
        }
    }
    for (port, target) in hooks.clock.iter().chain(&hooks.reset) {
        rename.insert(port, target.clone());
    }

    let mut directives = vec![
        ("name".to_string(), trojan.name.clone()),
        ("trigger".to_string(), trojan.trigger.to_string()),
        ("payload".to_string(), trojan.payload.to_string()),
        ("connections".to_string(), hook_connections(hooks).to_string()),
        ("netlist".to_string(), format!("{}.v", trojan.name)),
    ];
    directives.extend(anchors.into_iter().map(|a| ("anchor".to_string(), a)));

    let mut commands = Vec::new();
    for id in t.net_ids() {
        let name = &t.net(id).name;
        if !rename.contains_key(name.as_str()) && const_from_name(name).is_none() {
            commands.push(TcoCommand::AddNet { id: name.clone() });
        }
    }
    for c in t.cell_ids() {
        commands.push(TcoCommand::AddCell {
            id: t.cell(c).name.clone(),
            kind: t.kind_of(c).name.clone(),
        });
    }
    for c in t.cell_ids() {
        let cell = t.cell(c);
        let kind = t.kind_of(c);
        for (i, &net) in cell.pins.iter().enumerate() {
            let name = &t.net(net).name;
            commands.push(TcoCommand::Connect {
                cell: cell.name.clone(),
                pin: kind.pin_name(i).to_string(),
                net: rename.get(name.as_str()).cloned().unwrap_or_else(|| name.clone()),
            });
        }
    }
    commands.extend(splices);
    TcoScript { directives, commands }
}

fn replay_err(i: usize, message: String) -> InsertError {
    InsertError::Replay { command: i + 1, message }
}

/// Applies `script` to a builder, checking each command's preconditions.
pub(crate) fn replay_into(b: &mut NetlistBuilder, script: &TcoScript) -> Result<(), InsertError> {
    let declared = |b: &NetlistBuilder, net: &str| const_from_name(net).is_some() || b.nets.contains(net);
    for (i, cmd) in script.commands.iter().enumerate() {
        let err = |m: String| replay_err(i, m);
        match cmd {
            TcoCommand::AddCell { id, kind } => {
                let k = b.library.lookup(kind).ok_or_else(|| err(format!("unknown kind '{kind}'")))?;
                if b.cells.contains_key(id) {
                    return Err(err(format!("cell '{id}' exists")));
                }
                b.cells.insert(
                    id.clone(),
                    crate::netlist::BuilderCell { kind: k, pins: BTreeMap::new(), line: None },
                );
            }
            TcoCommand::AddNet { id } => {
                if declared(b, id) {
                    return Err(err(format!("net '{id}' exists")));
                }
                b.nets.insert(id.clone());
            }
            TcoCommand::Connect { cell, pin, net } => {
                if !declared(b, net) {
                    return Err(err(format!("undeclared net '{net}'")));
                }
                let lib = b.library.clone();
                let c = b.cells.get_mut(cell).ok_or_else(|| err(format!("unknown cell '{cell}'")))?;
                if lib.get(c.kind).pin_index(pin).is_none() {
                    return Err(err(format!("cell '{cell}' has no pin '{pin}'")));
                }
                if c.pins.contains_key(pin) {
                    return Err(err(format!("pin {cell}.{pin} is already connected")));
                }
                c.pins.insert(pin.clone(), net.clone());
            }
            TcoCommand::Disconnect { cell, pin } => {
                let c = b.cells.get_mut(cell).ok_or_else(|| err(format!("unknown cell '{cell}'")))?;
                if c.pins.remove(pin).is_none() {
                    return Err(err(format!("pin {cell}.{pin} is not connected")));
                }
            }
            TcoCommand::Splice { net, cell, pin, in_net, out_net } => {
                if !b.nets.contains(net) {
                    return Err(err(format!("unknown net '{net}'")));
                }
                if !b.nets.contains(in_net) || !b.nets.contains(out_net) {
                    return Err(err(format!("splice nets '{in_net}'/'{out_net}' must be declared")));
                }
                let lib = b.library.clone();
                let drives_in = b.cells.values().any(|c| {
                    let k = lib.get(c.kind);
                    c.pins.iter().any(|(p, n)| n == in_net && k.pin_index(p).is_some_and(|x| k.is_output_pin(x)))
                });
                if drives_in || b.inputs.contains(in_net) {
                    return Err(err(format!("net '{in_net}' is driven")));
                }
                let c = b.cells.get_mut(cell).ok_or_else(|| err(format!("unknown cell '{cell}'")))?;
                match c.pins.get_mut(pin) {
                    Some(n) if n == net => *n = out_net.clone(),
                    _ => return Err(err(format!("pin {cell}.{pin} does not read '{net}'"))),
                }
                for c in b.cells.values_mut() {
                    for n in c.pins.values_mut() {
                        if n == in_net {
                            *n = net.clone();
                        }
                    }
                }
                for (_, n) in b.outputs.iter_mut() {
                    if n == in_net {
                        *n = net.clone();
                    }
                }
                b.nets.remove(in_net);
            }
        }
    }
    Ok(())
}

/// Replays `script` on `n` and validates the result.
pub fn replay_tco(n: &Netlist, script: &TcoScript) -> Result<Netlist, InsertError> {
    let mut b = n.to_builder();
    replay_into(&mut b, script)?;
    Ok(b.build()?)
}
