// SPDX-License-Identifier: Apache-2.0

//! Flat gate-level netlists.
//!
//! A [`Netlist`] is immutable and indexed: cells and nets are sorted by name,
//! so ids and every iteration order are deterministic. Edits go through a
//! [`NetlistBuilder`], whose [`build`](NetlistBuilder::build) re-runs the full
//! validation (closed references, single driver, no combinational loops).

mod graph;
mod verilog;

pub use graph::{build_signal_dag, fanout_cone, identify_globals, DagNode, GlobalSignals, SignalDag};
pub use verilog::{parse_netlist, write_netlist};

use crate::library::{CellKind, CellLibrary, KindId};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
pub struct CellId(pub u32);

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
pub struct NetId(pub u32);

impl CellId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl NetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Name of the implicit net tied to a constant.
pub fn const_net_name(value: bool) -> &'static str {
    if value {
        "1'b1"
    } else {
        "1'b0"
    }
}

pub fn const_from_name(name: &str) -> Option<bool> {
    match name {
        "1'b0" => Some(false),
        "1'b1" => Some(true),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PinRef {
    pub cell: CellId,
    /// Index into the kind's concatenated input/output pin list.
    pub pin: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Driver {
    PrimaryInput,
    Const(bool),
    Cell(PinRef),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub name: String,
    pub driver: Driver,
    /// Cell input pins reading this net, sorted.
    pub sinks: Vec<PinRef>,
    /// Output ports reading this net (indices into [`Netlist::outputs`]).
    pub output_ports: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub name: String,
    pub kind: KindId,
    /// Net per pin, inputs first then outputs, in kind order.
    pub pins: Vec<NetId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPort {
    pub name: String,
    pub net: NetId,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetlistError {
    #[error("{}unknown cell kind '{kind}' for instance '{cell}'", loc(.line))]
    UnknownKind {
        cell: String,
        kind: String,
        line: Option<usize>,
    },
    #[error("{}kind '{kind}' has no pin '{pin}'", loc(.line))]
    UnknownPin {
        kind: String,
        pin: String,
        line: Option<usize>,
    },
    #[error("{}net '{net}' has multiple drivers: {first} and {second}", loc(.line))]
    MultipleDrivers {
        net: String,
        first: String,
        second: String,
        line: Option<usize>,
    },
    #[error("{}pin '{pin}' of '{cell}' is unconnected", loc(.line))]
    UnconnectedPin {
        cell: String,
        pin: String,
        line: Option<usize>,
    },
    #[error("{}net '{net}' is read but never driven", loc(.line))]
    UndrivenNet { net: String, line: Option<usize> },
    #[error("duplicate {what} '{name}'")]
    Duplicate { what: &'static str, name: String },
    #[error("unknown {what} '{name}'")]
    Unknown { what: &'static str, name: String },
    #[error("combinational cycle through nets {}", .nets.join(", "))]
    CombinationalCycle { nets: Vec<String> },
    #[error("kind '{0}' is sequential")]
    SequentialKind(String),
    #[error("no sequential cells: clock cannot be identified")]
    NoSequentialCells,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

fn loc(line: &Option<usize>) -> String {
    match line {
        Some(l) => format!("line {l}: "),
        None => String::new(),
    }
}

/// An immutable, validated netlist.
#[derive(Debug, Clone)]
pub struct Netlist {
    module: String,
    library: Arc<CellLibrary>,
    cells: Vec<Cell>,
    nets: Vec<Net>,
    inputs: Vec<NetId>,
    outputs: Vec<OutputPort>,
    cell_by_name: HashMap<String, CellId>,
    net_by_name: HashMap<String, NetId>,
    /// Combinational cells in topological order.
    comb_order: Vec<CellId>,
    registers: Vec<CellId>,
}

impl Netlist {
    pub fn module(&self) -> &str {
        &self.module
    }

    pub fn library(&self) -> &Arc<CellLibrary> {
        &self.library
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn nets(&self) -> &[Net] {
        &self.nets
    }

    pub fn cell(&self, id: CellId) -> &Cell {
        &self.cells[id.index()]
    }

    pub fn net(&self, id: NetId) -> &Net {
        &self.nets[id.index()]
    }

    pub fn cell_ids(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.cells.len() as u32).map(CellId)
    }

    pub fn net_ids(&self) -> impl Iterator<Item = NetId> + '_ {
        (0..self.nets.len() as u32).map(NetId)
    }

    pub fn kind_of(&self, id: CellId) -> &CellKind {
        self.library.get(self.cells[id.index()].kind)
    }

    pub fn find_cell(&self, name: &str) -> Option<CellId> {
        self.cell_by_name.get(name).copied()
    }

    pub fn find_net(&self, name: &str) -> Option<NetId> {
        self.net_by_name.get(name).copied()
    }

    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[OutputPort] {
        &self.outputs
    }

    pub fn comb_order(&self) -> &[CellId] {
        &self.comb_order
    }

    /// Sequential cells, sorted by name.
    pub fn registers(&self) -> &[CellId] {
        &self.registers
    }

    pub fn pin_name(&self, pin: PinRef) -> &str {
        self.kind_of(pin.cell).pin_name(pin.pin as usize)
    }

    pub fn is_register(&self, id: CellId) -> bool {
        self.kind_of(id).is_sequential()
    }

    /// Net on the d pin of a register.
    pub fn register_d(&self, id: CellId) -> NetId {
        let kind = self.kind_of(id);
        let roles = kind.seq.as_ref().expect("register");
        self.cells[id.index()].pins[roles.d]
    }

    /// Net on the q pin of a register.
    pub fn register_q(&self, id: CellId) -> NetId {
        let kind = self.kind_of(id);
        self.cells[id.index()].pins[kind.inputs.len()]
    }

    /// Cell and output pin driving `net`, if it is driven by a cell.
    pub fn driver_cell(&self, net: NetId) -> Option<CellId> {
        match self.nets[net.index()].driver {
            Driver::Cell(p) => Some(p.cell),
            _ => None,
        }
    }

    pub fn pin_label(&self, pin: PinRef) -> String {
        format!("{}.{}", self.cells[pin.cell.index()].name, self.pin_name(pin))
    }

    pub fn to_builder(&self) -> NetlistBuilder {
        let mut b = NetlistBuilder::new(&self.module, self.library.clone());
        for net in &self.nets {
            if !matches!(net.driver, Driver::Const(_)) {
                b.nets.insert(net.name.clone());
            }
        }
        b.inputs = self.inputs.iter().map(|n| self.nets[n.index()].name.clone()).collect();
        b.outputs = self
            .outputs
            .iter()
            .map(|p| (p.name.clone(), self.nets[p.net.index()].name.clone()))
            .collect();
        for cell in &self.cells {
            let kind = self.library.get(cell.kind);
            let pins = cell
                .pins
                .iter()
                .enumerate()
                .map(|(i, n)| (kind.pin_name(i).to_string(), self.nets[n.index()].name.clone()))
                .collect();
            b.cells.insert(
                cell.name.clone(),
                BuilderCell {
                    kind: cell.kind,
                    pins,
                    line: None,
                },
            );
        }
        b
    }

    /// Total cell area in library units.
    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| self.library.get(c.kind).area).sum()
    }
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_netlist(self))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuilderCell {
    pub kind: KindId,
    pub pins: BTreeMap<String, String>,
    pub line: Option<usize>,
}

/// Mutable, name-based netlist form.
#[derive(Debug, Clone)]
pub struct NetlistBuilder {
    pub module: String,
    pub library: Arc<CellLibrary>,
    pub cells: BTreeMap<String, BuilderCell>,
    /// Declared nets. Nets referenced by pins are implicitly declared.
    pub nets: BTreeSet<String>,
    pub inputs: Vec<String>,
    /// (port name, net name)
    pub outputs: Vec<(String, String)>,
}

impl NetlistBuilder {
    pub fn new(module: &str, library: Arc<CellLibrary>) -> Self {
        NetlistBuilder {
            module: module.to_string(),
            library,
            cells: BTreeMap::new(),
            nets: BTreeSet::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, name: &str) {
        self.nets.insert(name.to_string());
        self.inputs.push(name.to_string());
    }

    pub fn add_output(&mut self, port: &str, net: &str) {
        self.outputs.push((port.to_string(), net.to_string()));
    }

    pub fn add_net(&mut self, name: &str) {
        if const_from_name(name).is_none() {
            self.nets.insert(name.to_string());
        }
    }

    /// Adds a cell with `(pin, net)` connections, declaring the nets.
    pub fn add_cell(
        &mut self,
        name: &str,
        kind: &str,
        pins: &[(&str, &str)],
    ) -> Result<(), NetlistError> {
        let kind_id = self.library.lookup(kind).ok_or_else(|| NetlistError::UnknownKind {
            cell: name.to_string(),
            kind: kind.to_string(),
            line: None,
        })?;
        if self.cells.contains_key(name) {
            return Err(NetlistError::Duplicate {
                what: "cell",
                name: name.to_string(),
            });
        }
        let mut map = BTreeMap::new();
        for (pin, net) in pins {
            self.add_net(net);
            map.insert(pin.to_string(), net.to_string());
        }
        self.cells.insert(
            name.to_string(),
            BuilderCell {
                kind: kind_id,
                pins: map,
                line: None,
            },
        );
        Ok(())
    }

    /// Validates and freezes the netlist.
    pub fn build(&self) -> Result<Netlist, NetlistError> {
        let lib = &self.library;

        // Cell pin checks and the set of used nets.
        let mut names: BTreeSet<&str> = self.nets.iter().map(String::as_str).collect();
        for (cname, cell) in &self.cells {
            let kind = lib.get(cell.kind);
            for (pin, net) in &cell.pins {
                if kind.pin_index(pin).is_none() {
                    return Err(NetlistError::UnknownPin {
                        kind: kind.name.clone(),
                        pin: pin.clone(),
                        line: cell.line,
                    });
                }
                names.insert(net.as_str());
            }
            for pin in &kind.inputs {
                if !cell.pins.contains_key(pin) {
                    return Err(NetlistError::UnconnectedPin {
                        cell: cname.clone(),
                        pin: pin.clone(),
                        line: cell.line,
                    });
                }
            }
        }
        // Unconnected outputs get a synthetic net named after the pin.
        let mut synthetic: HashMap<(&str, &str), String> = HashMap::new();
        for (cname, cell) in &self.cells {
            let kind = lib.get(cell.kind);
            for pin in &kind.outputs {
                if !cell.pins.contains_key(pin) {
                    synthetic.insert((cname.as_str(), pin.as_str()), format!("{cname}/{pin}"));
                }
            }
        }
        let synth_names: Vec<&String> = synthetic.values().collect();
        let mut all: BTreeSet<String> = names.iter().map(|s| s.to_string()).collect();
        for s in synth_names {
            all.insert(s.clone());
        }
        for input in &self.inputs {
            if const_from_name(input).is_some() {
                return Err(NetlistError::Syntax {
                    line: 0,
                    message: format!("constant '{input}' used as an input port"),
                });
            }
            all.insert(input.clone());
        }
        for (_, net) in &self.outputs {
            all.insert(net.clone());
        }

        let net_names: Vec<String> = all.into_iter().collect();
        let net_by_name: HashMap<String, NetId> = net_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), NetId(i as u32)))
            .collect();
        let mut drivers: Vec<Option<Driver>> = net_names
            .iter()
            .map(|n| const_from_name(n).map(Driver::Const))
            .collect();
        let mut sinks: Vec<Vec<PinRef>> = vec![Vec::new(); net_names.len()];
        let mut lines: Vec<Option<usize>> = vec![None; net_names.len()];

        let driver_label = |d: &Driver, cells: &[String], lib: &CellLibrary, kinds: &[KindId]| match d {
            Driver::PrimaryInput => "primary input".to_string(),
            Driver::Const(v) => const_net_name(*v).to_string(),
            Driver::Cell(p) => format!(
                "{}.{}",
                cells[p.cell.index()],
                lib.get(kinds[p.cell.index()]).pin_name(p.pin as usize)
            ),
        };

        let mut seen_inputs = BTreeSet::new();
        for input in &self.inputs {
            if !seen_inputs.insert(input) {
                return Err(NetlistError::Duplicate {
                    what: "input port",
                    name: input.clone(),
                });
            }
            drivers[net_by_name[input].index()] = Some(Driver::PrimaryInput);
        }

        let cell_names: Vec<String> = self.cells.keys().cloned().collect();
        let cell_kinds: Vec<KindId> = self.cells.values().map(|c| c.kind).collect();
        let mut cells = Vec::with_capacity(self.cells.len());
        for (ci, (cname, bc)) in self.cells.iter().enumerate() {
            let kind = lib.get(bc.kind);
            let id = CellId(ci as u32);
            let mut pins = Vec::with_capacity(kind.pin_count());
            for (pi, pin) in kind.inputs.iter().chain(&kind.outputs).enumerate() {
                let net_name = match bc.pins.get(pin) {
                    Some(n) => n.clone(),
                    None => synthetic[&(cname.as_str(), pin.as_str())].clone(),
                };
                let net = net_by_name[&net_name];
                let pref = PinRef {
                    cell: id,
                    pin: pi as u16,
                };
                if kind.is_output_pin(pi) {
                    let slot = &mut drivers[net.index()];
                    if let Some(prev) = slot {
                        return Err(NetlistError::MultipleDrivers {
                            net: net_name,
                            first: driver_label(prev, &cell_names, lib, &cell_kinds),
                            second: format!("{cname}.{pin}"),
                            line: bc.line,
                        });
                    }
                    *slot = Some(Driver::Cell(pref));
                } else {
                    sinks[net.index()].push(pref);
                    if lines[net.index()].is_none() {
                        lines[net.index()] = bc.line;
                    }
                }
                pins.push(net);
            }
            cells.push(Cell {
                name: cname.clone(),
                kind: bc.kind,
                pins,
            });
        }

        let mut outputs = Vec::new();
        let mut port_names = BTreeSet::new();
        let mut output_ports: Vec<Vec<usize>> = vec![Vec::new(); net_names.len()];
        for (port, net) in &self.outputs {
            if !port_names.insert(port.clone()) || seen_inputs.contains(port) {
                return Err(NetlistError::Duplicate {
                    what: "port",
                    name: port.clone(),
                });
            }
            if port != net && net_by_name.contains_key(port) {
                // A port name may only alias a net of the same name.
                return Err(NetlistError::Duplicate {
                    what: "net/port name",
                    name: port.clone(),
                });
            }
            let id = net_by_name[net];
            output_ports[id.index()].push(outputs.len());
            outputs.push(OutputPort {
                name: port.clone(),
                net: id,
            });
        }

        let mut nets = Vec::with_capacity(net_names.len());
        let mut keep = vec![true; net_names.len()];
        for (i, name) in net_names.iter().enumerate() {
            match drivers[i] {
                Some(_) => {}
                None if sinks[i].is_empty() && output_ports[i].is_empty() => {
                    // Declared but unused wire.
                    keep[i] = false;
                }
                None => {
                    return Err(NetlistError::UndrivenNet {
                        net: name.clone(),
                        line: lines[i],
                    })
                }
            }
            let mut s = std::mem::take(&mut sinks[i]);
            s.sort();
            nets.push(Net {
                name: name.clone(),
                driver: drivers[i].unwrap_or(Driver::PrimaryInput),
                sinks: s,
                output_ports: std::mem::take(&mut output_ports[i]),
            });
        }

        let mut netlist = Netlist {
            module: self.module.clone(),
            library: self.library.clone(),
            cells,
            nets,
            inputs: self.inputs.iter().map(|n| net_by_name[n]).collect(),
            outputs,
            cell_by_name: HashMap::new(),
            net_by_name,
            comb_order: Vec::new(),
            registers: Vec::new(),
        };
        if keep.iter().any(|k| !k) {
            netlist = compact(netlist, &keep);
        }
        netlist.cell_by_name = netlist
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.clone(), CellId(i as u32)))
            .collect();
        netlist.registers = netlist
            .cell_ids()
            .filter(|&c| netlist.is_register(c))
            .collect();
        netlist.comb_order = topo_order(&netlist)?;
        Ok(netlist)
    }
}

/// Drops unused nets and renumbers the remaining ones.
fn compact(mut n: Netlist, keep: &[bool]) -> Netlist {
    let mut remap = vec![NetId(u32::MAX); keep.len()];
    let mut next = 0u32;
    for (i, k) in keep.iter().enumerate() {
        if *k {
            remap[i] = NetId(next);
            next += 1;
        }
    }
    let nets: Vec<Net> = n
        .nets
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| **k)
        .map(|(net, _)| net)
        .collect();
    for cell in &mut n.cells {
        for p in &mut cell.pins {
            *p = remap[p.index()];
        }
    }
    for i in &mut n.inputs {
        *i = remap[i.index()];
    }
    for o in &mut n.outputs {
        o.net = remap[o.net.index()];
    }
    n.net_by_name = nets
        .iter()
        .enumerate()
        .map(|(i, net)| (net.name.clone(), NetId(i as u32)))
        .collect();
    n.nets = nets;
    n
}

/// Kahn's algorithm over combinational cells; registers cut every loop.
fn topo_order(n: &Netlist) -> Result<Vec<CellId>, NetlistError> {
    let mut indegree = vec![0usize; n.cells.len()];
    for c in n.cell_ids() {
        let kind = n.kind_of(c);
        if kind.is_sequential() {
            continue;
        }
        for &net in &n.cell(c).pins[..kind.inputs.len()] {
            if let Some(d) = n.driver_cell(net) {
                if !n.is_register(d) {
                    indegree[c.index()] += 1;
                }
            }
        }
    }
    let mut ready: std::collections::VecDeque<CellId> = n
        .cell_ids()
        .filter(|&c| !n.is_register(c) && indegree[c.index()] == 0)
        .collect();
    let mut order = Vec::new();
    while let Some(c) = ready.pop_front() {
        order.push(c);
        let kind = n.kind_of(c);
        for &out in &n.cell(c).pins[kind.inputs.len()..] {
            for s in &n.net(out).sinks {
                if n.is_register(s.cell) {
                    continue;
                }
                indegree[s.cell.index()] -= 1;
                if indegree[s.cell.index()] == 0 {
                    ready.push_back(s.cell);
                }
            }
        }
    }
    let comb_total = n.cells.len() - n.registers.len();
    if order.len() != comb_total {
        let mut nets: Vec<String> = n
            .cell_ids()
            .filter(|&c| !n.is_register(c) && indegree[c.index()] > 0)
            .flat_map(|c| {
                let k = n.kind_of(c);
                n.cell(c).pins[k.inputs.len()..]
                    .iter()
                    .map(|o| n.net(*o).name.clone())
                    .collect::<Vec<_>>()
            })
            .collect();
        nets.sort();
        return Err(NetlistError::CombinationalCycle { nets });
    }
    Ok(order)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::library::parse_cell_library;

    pub(crate) fn lib() -> Arc<CellLibrary> {
        Arc::new(
            parse_cell_library(
                "INV: o = !a\nBUF: o = a\nAND2: o = a & b\nOR2: o = a | b\nXOR2: o = a ^ b\n\
                 DFF: seq d D clk CK q Q\nDFFR: seq d D clk CK q Q reset RN low\n",
            )
            .unwrap(),
        )
    }

    #[test]
    fn smallest_netlist() {
        let mut b = NetlistBuilder::new("top", lib());
        b.add_input("a");
        b.add_input("b");
        b.add_cell("g", "AND2", &[("a", "a"), ("b", "b"), ("o", "y")]).unwrap();
        b.add_output("y", "y");
        let n = b.build().unwrap();
        assert_eq!(n.cells().len(), 1);
        assert_eq!(n.nets().len(), 3);
        assert_eq!(n.inputs().len(), 2);
        assert_eq!(n.outputs().len(), 1);
    }

    #[test]
    fn multiple_drivers() {
        let mut b = NetlistBuilder::new("top", lib());
        b.add_input("a");
        b.add_cell("g1", "INV", &[("a", "a"), ("o", "y")]).unwrap();
        b.add_cell("g2", "BUF", &[("a", "a"), ("o", "y")]).unwrap();
        assert!(matches!(b.build(), Err(NetlistError::MultipleDrivers { .. })));
    }

    #[test]
    fn ring_is_rejected() {
        let mut b = NetlistBuilder::new("top", lib());
        b.add_cell("i1", "INV", &[("a", "x"), ("o", "y")]).unwrap();
        b.add_cell("i2", "INV", &[("a", "y"), ("o", "x")]).unwrap();
        match b.build() {
            Err(NetlistError::CombinationalCycle { nets }) => assert_eq!(nets, vec!["x", "y"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unconnected_input_and_undriven() {
        let mut b = NetlistBuilder::new("top", lib());
        b.add_input("a");
        b.add_cell("g", "AND2", &[("a", "a"), ("o", "y")]).unwrap();
        assert!(matches!(b.build(), Err(NetlistError::UnconnectedPin { .. })));
        let mut b = NetlistBuilder::new("top", lib());
        b.add_cell("g", "INV", &[("a", "floating"), ("o", "y")]).unwrap();
        assert!(matches!(b.build(), Err(NetlistError::UndrivenNet { .. })));
    }

    #[test]
    fn unused_wire_dropped_and_synthetic_output() {
        let mut b = NetlistBuilder::new("top", lib());
        b.add_input("a");
        b.add_net("unused");
        b.add_cell("g", "INV", &[("a", "a")]).unwrap();
        let n = b.build().unwrap();
        assert!(n.find_net("unused").is_none());
        assert!(n.find_net("g/o").is_some());
    }
}
