// SPDX-License-Identifier: Apache-2.0

//! Cell library: combinational and sequential cell kinds.
//!
//! Line-oriented format, one kind per line, `#` starts a comment:
//!
//! ```text
//! AND2: o = a & b
//! HA: s = a ^ b; co = a & b; area 2.5
//! MUX2(a, b, s): o = (s & b) | (!s & a)
//! DFF: seq d D clk CK q Q
//! DFFR: seq d D clk CK q Q reset RN low; area 5
//! ```
//!
//! Without an explicit pin list, input pins are the expression identifiers in
//! order of first appearance. In a `seq` clause a role keyword not followed by
//! a pin name uses the role name as the pin name, so `seq d clk q, reset rn low`
//! is accepted as well.

use crate::expr::{parse_raw, Expr};
use crate::logic::Logic;
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KindId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    High,
    Low,
}

impl Polarity {
    /// The level that asserts a signal with this polarity.
    pub fn active_level(self) -> Logic {
        match self {
            Polarity::High => Logic::One,
            Polarity::Low => Logic::Zero,
        }
    }

    pub fn inactive_level(self) -> Logic {
        !self.active_level()
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::High => "high",
            Polarity::Low => "low",
        })
    }
}

/// Pin roles of a flip-flop kind, as indices into the kind's input list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqRoles {
    pub d: usize,
    pub clock: usize,
    pub reset: Option<(usize, Polarity)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellKind {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// One function per output; empty for sequential kinds.
    pub functions: Vec<Expr>,
    pub seq: Option<SeqRoles>,
    pub area: f64,
}

impl CellKind {
    pub fn is_sequential(&self) -> bool {
        self.seq.is_some()
    }

    pub fn pin_count(&self) -> usize {
        self.inputs.len() + self.outputs.len()
    }

    /// Position of `pin` in the concatenated input/output pin list.
    pub fn pin_index(&self, pin: &str) -> Option<usize> {
        self.inputs
            .iter()
            .chain(&self.outputs)
            .position(|p| p == pin)
    }

    pub fn pin_name(&self, index: usize) -> &str {
        if index < self.inputs.len() {
            &self.inputs[index]
        } else {
            &self.outputs[index - self.inputs.len()]
        }
    }

    pub fn is_output_pin(&self, index: usize) -> bool {
        index >= self.inputs.len()
    }

    /// Truth table of a single-output combinational kind, bit `i` of the
    /// result holding the output for input assignment `i`. `None` for
    /// sequential, multi-output or wide (> 6 input) kinds.
    pub fn truth_table(&self) -> Option<u64> {
        if self.is_sequential() || self.functions.len() != 1 || self.inputs.len() > 6 {
            return None;
        }
        let f = &self.functions[0];
        let mut tt = 0u64;
        for a in 0..(1u64 << self.inputs.len()) {
            if f.eval_bits(a) {
                tt |= 1 << a;
            }
        }
        Some(tt)
    }

    /// Single-input identity or inversion.
    pub fn is_buffer_or_inverter(&self) -> bool {
        self.inputs.len() == 1 && matches!(self.truth_table(), Some(0b10) | Some(0b01))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LibraryError {
    #[error("line {line}: malformed expression for '{kind}': {message}")]
    MalformedExpression {
        line: usize,
        kind: String,
        message: String,
    },
    #[error("line {line}: duplicate kind '{kind}'")]
    DuplicateKind { line: usize, kind: String },
    #[error("line {line}: sequential kind '{kind}' cannot have a function")]
    SequentialWithFunction { line: usize, kind: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// Evaluates one output of a combinational kind under three-valued inputs.
pub fn eval_cell_function(
    kind: &CellKind,
    output: usize,
    inputs: &[Logic],
) -> Result<Logic, crate::netlist::NetlistError> {
    if kind.is_sequential() {
        return Err(crate::netlist::NetlistError::SequentialKind(kind.name.clone()));
    }
    let f = kind.functions.get(output).ok_or_else(|| {
        crate::netlist::NetlistError::UnknownPin {
            kind: kind.name.clone(),
            pin: format!("output #{output}"),
            line: None,
        }
    })?;
    Ok(f.eval(inputs))
}

#[derive(Debug, Clone, Default)]
pub struct CellLibrary {
    kinds: Vec<CellKind>,
    by_name: HashMap<String, KindId>,
}

impl CellLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, kind: CellKind) -> Option<KindId> {
        if self.by_name.contains_key(&kind.name) {
            return None;
        }
        let id = KindId(self.kinds.len() as u32);
        self.by_name.insert(kind.name.clone(), id);
        self.kinds.push(kind);
        Some(id)
    }

    pub fn get(&self, id: KindId) -> &CellKind {
        &self.kinds[id.0 as usize]
    }

    pub fn lookup(&self, name: &str) -> Option<KindId> {
        self.by_name.get(name).copied()
    }

    pub fn kind(&self, name: &str) -> Option<&CellKind> {
        self.lookup(name).map(|id| self.get(id))
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (KindId, &CellKind)> {
        self.kinds
            .iter()
            .enumerate()
            .map(|(i, k)| (KindId(i as u32), k))
    }

    /// Smallest-area combinational kind whose truth table over `arity`
    /// inputs equals `table`, ties broken by name.
    pub fn find_by_truth_table(&self, arity: usize, table: u64) -> Option<KindId> {
        self.iter()
            .filter(|(_, k)| k.inputs.len() == arity && k.truth_table() == Some(table))
            .min_by(|a, b| a.1.area.total_cmp(&b.1.area).then_with(|| a.1.name.cmp(&b.1.name)))
            .map(|(id, _)| id)
    }

    /// Flip-flop kind with the requested reset behaviour, smallest area first.
    pub fn find_flip_flop(&self, reset: Option<Polarity>) -> Option<KindId> {
        self.iter()
            .filter(|(_, k)| match (&k.seq, reset) {
                (Some(s), None) => s.reset.is_none(),
                (Some(s), Some(p)) => s.reset.map(|r| r.1) == Some(p),
                (None, _) => false,
            })
            .min_by(|a, b| a.1.area.total_cmp(&b.1.area).then_with(|| a.1.name.cmp(&b.1.name)))
            .map(|(id, _)| id)
    }

    pub fn mean_area(&self) -> f64 {
        if self.kinds.is_empty() {
            return 1.0;
        }
        self.kinds.iter().map(|k| k.area).sum::<f64>() / self.kinds.len() as f64
    }
}

const ROLE_WORDS: [&str; 4] = ["d", "clk", "q", "reset"];

fn parse_seq(
    clause: &str,
    line: usize,
    kind: &str,
) -> Result<(Vec<String>, Vec<String>, SeqRoles), LibraryError> {
    let syntax = |message: String| LibraryError::Syntax { line, message };
    let tokens: Vec<&str> = clause
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .collect();
    let (mut d, mut clk, mut q, mut reset) = (None, None, None, None);
    let mut i = 0;
    while i < tokens.len() {
        let role = tokens[i];
        if !ROLE_WORDS.contains(&role) {
            return Err(syntax(format!("unexpected '{role}' in seq clause of '{kind}'")));
        }
        let pin = match tokens.get(i + 1) {
            Some(t) if !ROLE_WORDS.contains(t) => {
                i += 2;
                t.to_string()
            }
            _ => {
                i += 1;
                role.to_string()
            }
        };
        match role {
            "d" => d = Some(pin),
            "clk" => clk = Some(pin),
            "q" => q = Some(pin),
            _ => {
                let pol = match tokens.get(i) {
                    Some(&"low") => Polarity::Low,
                    Some(&"high") => Polarity::High,
                    other => {
                        return Err(syntax(format!(
                            "reset of '{kind}' needs polarity high|low, found {other:?}"
                        )))
                    }
                };
                i += 1;
                reset = Some((pin, pol));
            }
        }
    }
    let (d, clk, q) = match (d, clk, q) {
        (Some(d), Some(c), Some(q)) => (d, c, q),
        _ => return Err(syntax(format!("seq kind '{kind}' needs d, clk and q"))),
    };
    let mut inputs = vec![d, clk];
    let mut roles = SeqRoles {
        d: 0,
        clock: 1,
        reset: None,
    };
    if let Some((pin, pol)) = reset {
        inputs.push(pin);
        roles.reset = Some((2, pol));
    }
    let mut all = inputs.clone();
    all.push(q.clone());
    let mut sorted = all.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != all.len() {
        return Err(syntax(format!("duplicate pin names in '{kind}'")));
    }
    Ok((inputs, vec![q], roles))
}

/// Parses the library text format.
pub fn parse_cell_library(text: &str) -> Result<CellLibrary, LibraryError> {
    let mut lib = CellLibrary::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |message: String| LibraryError::Syntax { line, message };
        let (head, body) = content
            .split_once(':')
            .ok_or_else(|| syntax("expected 'NAME: ...'".into()))?;
        let head = head.trim();
        let (name, declared) = match head.split_once('(') {
            Some((n, rest)) => {
                let list = rest
                    .strip_suffix(')')
                    .ok_or_else(|| syntax("unterminated pin list".into()))?;
                let pins: Vec<String> = list
                    .split(',')
                    .map(|p| p.trim().to_string())
                    .filter(|p| !p.is_empty())
                    .collect();
                (n.trim(), Some(pins))
            }
            None => (head, None),
        };
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(syntax(format!("invalid kind name '{name}'")));
        }

        let mut area = 1.0;
        let mut seq = None;
        let mut outputs = Vec::new();
        let mut raw_functions = Vec::new();
        for segment in body.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            if let Some(rest) = segment.strip_prefix("area") {
                area = rest
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|a| *a > 0.0 && a.is_finite())
                    .ok_or_else(|| syntax(format!("invalid area '{}'", rest.trim())))?;
            } else if let Some(rest) = segment.strip_prefix("seq") {
                seq = Some(parse_seq(rest, line, name)?);
            } else if let Some((out, expr)) = segment.split_once('=') {
                let out = out.trim().to_string();
                let raw = parse_raw(expr).map_err(|e| LibraryError::MalformedExpression {
                    line,
                    kind: name.to_string(),
                    message: e.to_string(),
                })?;
                outputs.push(out);
                raw_functions.push(raw);
            } else {
                return Err(syntax(format!("unrecognised clause '{segment}'")));
            }
        }

        let kind = match seq {
            Some((inputs, outs, roles)) => {
                if !raw_functions.is_empty() {
                    return Err(LibraryError::SequentialWithFunction {
                        line,
                        kind: name.to_string(),
                    });
                }
                if declared.is_some() {
                    return Err(syntax("pin list not allowed on sequential kinds".into()));
                }
                CellKind {
                    name: name.to_string(),
                    inputs,
                    outputs: outs,
                    functions: Vec::new(),
                    seq: Some(roles),
                    area,
                }
            }
            None => {
                if raw_functions.is_empty() {
                    return Err(syntax(format!("kind '{name}' has no function")));
                }
                let inputs = match declared {
                    Some(pins) => pins,
                    None => {
                        let mut names = Vec::new();
                        for f in &raw_functions {
                            f.names(&mut names);
                        }
                        names
                    }
                };
                let mut functions = Vec::new();
                for f in &raw_functions {
                    functions.push(f.resolve(&inputs).map_err(|pin| {
                        LibraryError::MalformedExpression {
                            line,
                            kind: name.to_string(),
                            message: format!("undeclared pin '{pin}'"),
                        }
                    })?);
                }
                let mut all: Vec<&String> = inputs.iter().chain(&outputs).collect();
                let n = all.len();
                all.sort();
                all.dedup();
                if all.len() != n {
                    return Err(syntax(format!("duplicate pin names in '{name}'")));
                }
                CellKind {
                    name: name.to_string(),
                    inputs,
                    outputs,
                    functions,
                    seq: None,
                    area,
                }
            }
        };
        if lib.add(kind).is_none() {
            return Err(LibraryError::DuplicateKind {
                line,
                kind: name.to_string(),
            });
        }
    }
    Ok(lib)
}

/// Renders a library back into its text form.
pub fn write_cell_library(lib: &CellLibrary) -> String {
    let mut out = String::new();
    for (_, k) in lib.iter() {
        out.push_str(&k.name);
        match &k.seq {
            Some(roles) => {
                out.push_str(&format!(
                    ": seq d {} clk {} q {}",
                    k.inputs[roles.d], k.inputs[roles.clock], k.outputs[0]
                ));
                if let Some((r, pol)) = roles.reset {
                    out.push_str(&format!(" reset {} {}", k.inputs[r], pol));
                }
            }
            None => {
                out.push_str(&format!("({}):", k.inputs.join(", ")));
                let clauses: Vec<String> = k
                    .outputs
                    .iter()
                    .zip(&k.functions)
                    .map(|(o, f)| format!(" {} = {}", o, f.display(&k.inputs)))
                    .collect();
                out.push_str(&clauses.join(";"));
            }
        }
        if k.area != 1.0 {
            out.push_str(&format!("; area {}", k.area));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinational_entry() {
        let lib = parse_cell_library("AND2: o = a & b\n").unwrap();
        let k = lib.kind("AND2").unwrap();
        assert!(!k.is_sequential());
        assert_eq!(k.inputs, vec!["a", "b"]);
        assert_eq!(k.truth_table(), Some(0b1000));
        assert_eq!(k.area, 1.0);
    }

    #[test]
    fn sequential_entry_with_active_low_reset() {
        let lib = parse_cell_library("DFF: seq d clk q, reset rn low\n").unwrap();
        let k = lib.kind("DFF").unwrap();
        let roles = k.seq.as_ref().unwrap();
        assert_eq!(k.inputs, vec!["d", "clk", "rn"]);
        assert_eq!(k.outputs, vec!["q"]);
        assert_eq!(roles.reset, Some((2, Polarity::Low)));

        let lib = parse_cell_library("DFFR: seq d D clk CK q Q reset RN low; area 5").unwrap();
        let k = lib.kind("DFFR").unwrap();
        assert_eq!(k.inputs, vec!["D", "CK", "RN"]);
        assert_eq!(k.area, 5.0);
    }

    #[test]
    fn undeclared_pin_is_rejected() {
        let err = parse_cell_library("AND2(a, b): o = a & c").unwrap_err();
        assert!(matches!(err, LibraryError::MalformedExpression { line: 1, .. }));
    }

    #[test]
    fn duplicate_and_seq_with_function() {
        let err = parse_cell_library("A: o = a\nA: o = !a").unwrap_err();
        assert_eq!(
            err,
            LibraryError::DuplicateKind {
                line: 2,
                kind: "A".into()
            }
        );
        let err = parse_cell_library("DFF: seq d D clk C q Q; o = D").unwrap_err();
        assert!(matches!(err, LibraryError::SequentialWithFunction { .. }));
        assert!(parse_cell_library("X: o = a &").is_err());
    }

    #[test]
    fn write_then_parse_is_stable() {
        let text = "INV: o = !a\nHA: s = a ^ b; co = a & b; area 2.5\nDFFR: seq d D clk CK q Q reset RN low; area 5\n";
        let lib = parse_cell_library(text).unwrap();
        let written = write_cell_library(&lib);
        let again = parse_cell_library(&written).unwrap();
        assert_eq!(write_cell_library(&again), written);
        assert_eq!(again.kind("HA").unwrap().outputs, vec!["s", "co"]);
    }

    #[test]
    fn eval_rejects_sequential() {
        let lib = parse_cell_library("DFF: seq d D clk C q Q\nX2: o = a ^ b").unwrap();
        assert!(eval_cell_function(lib.kind("DFF").unwrap(), 0, &[]).is_err());
        let x = lib.kind("X2").unwrap();
        assert_eq!(eval_cell_function(x, 0, &[Logic::One, Logic::Zero]).unwrap(), Logic::One);
    }
}
