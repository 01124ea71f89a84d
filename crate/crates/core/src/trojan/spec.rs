// SPDX-License-Identifier: Apache-2.0

//! Trigger and payload parameters and their one-line text form.
//!
//! ```text
//! comb n=8 v=0xa5
//! counter n=4 v=15 mode=any
//! fsm n=2 v=0x1,0x2,0x3 m=0x3,0x3,0x3
//! leak n=8 code=serial c=2
//! shiftburn n=8
//! modify n=4 v=0x3
//! fault n=2
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("invalid trojan part '{text}': {message}")]
    Invalid { text: String, message: String },
}

/// How the counter trigger counts changes of its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CountMode {
    /// One count per cycle in which any input toggles.
    #[default]
    Any,
    /// One count per toggling input bit.
    PerBit,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TriggerSpec {
    Combinational { n: usize, v: u64 },
    Counter { n: usize, v: u64, mode: CountMode },
    Fsm { n: usize, values: Vec<u64>, masks: Vec<u64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LeakCode {
    Serial,
    Fsk,
    Dbpsk,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PayloadSpec {
    Leak { n: usize, code: LeakCode, c: u32 },
    ShiftBurn { n: usize },
    Modify { n: usize, v: u64 },
    Fault { n: usize },
}

/// Bits needed to hold values `0..=max`.
pub fn bits_for(max: u64) -> usize {
    (64 - max.leading_zeros() as usize).max(1)
}

fn fits(v: u64, n: usize) -> bool {
    n >= 64 || v >> n == 0
}

impl TriggerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TriggerSpec::Combinational { .. } => "comb",
            TriggerSpec::Counter { .. } => "counter",
            TriggerSpec::Fsm { .. } => "fsm",
        }
    }

    pub fn inputs(&self) -> usize {
        match self {
            TriggerSpec::Combinational { n, .. }
            | TriggerSpec::Counter { n, .. }
            | TriggerSpec::Fsm { n, .. } => *n,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            TriggerSpec::Combinational { n, v } => {
                if *n == 0 || *n > 64 {
                    return Err("n must be in 1..=64".into());
                }
                if !fits(*v, *n) {
                    return Err(format!("value {v:#x} does not fit in {n} bits"));
                }
            }
            TriggerSpec::Counter { n, v, .. } => {
                if *n == 0 {
                    return Err("n must be at least 1".into());
                }
                if *v == 0 || *v >= 1 << 32 {
                    return Err("change count must be in 1..2^32".into());
                }
            }
            TriggerSpec::Fsm { n, values, masks } => {
                if *n == 0 || *n > 64 {
                    return Err("n must be in 1..=64".into());
                }
                if values.len() < 2 {
                    return Err("an FSM trigger needs at least 2 states".into());
                }
                if values.len() != masks.len() {
                    return Err("conditions and masks differ in length".into());
                }
                for v in values.iter().chain(masks) {
                    if !fits(*v, *n) {
                        return Err(format!("value {v:#x} does not fit in {n} bits"));
                    }
                }
            }
        }
        Ok(())
    }
}

impl PayloadSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            PayloadSpec::Leak { .. } => "leak",
            PayloadSpec::ShiftBurn { .. } => "shiftburn",
            PayloadSpec::Modify { .. } => "modify",
            PayloadSpec::Fault { .. } => "fault",
        }
    }

    pub fn bits(&self) -> usize {
        match self {
            PayloadSpec::Leak { n, .. }
            | PayloadSpec::ShiftBurn { n }
            | PayloadSpec::Modify { n, .. }
            | PayloadSpec::Fault { n } => *n,
        }
    }

    pub fn uses_feedthroughs(&self) -> bool {
        matches!(self, PayloadSpec::Modify { .. } | PayloadSpec::Fault { .. })
    }

    pub fn validate(&self) -> Result<(), String> {
        let n = self.bits();
        if n == 0 {
            return Err("n must be at least 1".into());
        }
        match self {
            PayloadSpec::Leak { n, c, .. } => {
                if *n > 64 || *c > 16 {
                    return Err("leak supports n <= 64 and c <= 16".into());
                }
            }
            PayloadSpec::Modify { n, v } => {
                if *n > 64 || !fits(*v, *n) {
                    return Err(format!("value {v:#x} does not fit in {n} bits"));
                }
            }
            PayloadSpec::Fault { n } if *n > 32 => {
                return Err("fault supports n <= 32".into());
            }
            _ => {}
        }
        Ok(())
    }
}

impl fmt::Display for LeakCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LeakCode::Serial => "serial",
            LeakCode::Fsk => "fsk",
            LeakCode::Dbpsk => "dbpsk",
        })
    }
}

impl FromStr for LeakCode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "serial" => Ok(LeakCode::Serial),
            "fsk" => Ok(LeakCode::Fsk),
            "dbpsk" => Ok(LeakCode::Dbpsk),
            _ => Err(format!("unknown leak code '{s}'")),
        }
    }
}

fn hex_list(v: &[u64]) -> String {
    v.iter().map(|x| format!("{x:#x}")).collect::<Vec<_>>().join(",")
}

impl fmt::Display for TriggerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TriggerSpec::Combinational { n, v } => write!(f, "comb n={n} v={v:#x}"),
            TriggerSpec::Counter { n, v, mode } => {
                let m = match mode {
                    CountMode::Any => "any",
                    CountMode::PerBit => "bit",
                };
                write!(f, "counter n={n} v={v} mode={m}")
            }
            TriggerSpec::Fsm { n, values, masks } => {
                write!(f, "fsm n={n} v={} m={}", hex_list(values), hex_list(masks))
            }
        }
    }
}

impl fmt::Display for PayloadSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayloadSpec::Leak { n, code, c } => write!(f, "leak n={n} code={code} c={c}"),
            PayloadSpec::ShiftBurn { n } => write!(f, "shiftburn n={n}"),
            PayloadSpec::Modify { n, v } => write!(f, "modify n={n} v={v:#x}"),
            PayloadSpec::Fault { n } => write!(f, "fault n={n}"),
        }
    }
}

pub(crate) fn parse_u64(s: &str) -> Result<u64, String> {
    let t = s.replace('_', "");
    let r = if let Some(h) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u64::from_str_radix(h, 16)
    } else if let Some(b) = t.strip_prefix("0b").or_else(|| t.strip_prefix("0B")) {
        u64::from_str_radix(b, 2)
    } else {
        t.parse()
    };
    r.map_err(|_| format!("invalid number '{s}'"))
}

/// Splits `kind k=v k=v` into the kind and its parameters.
fn split_params(text: &str) -> Result<(String, BTreeMap<String, String>), String> {
    let mut words = text.split_whitespace();
    let kind = words.next().ok_or("empty trojan part")?.to_ascii_lowercase();
    let mut params = BTreeMap::new();
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| format!("expected key=value, found '{w}'"))?;
        if params.insert(k.to_ascii_lowercase(), v.to_string()).is_some() {
            return Err(format!("parameter '{k}' given twice"));
        }
    }
    Ok((kind, params))
}

struct Params(BTreeMap<String, String>);

impl Params {
    fn take(&mut self, key: &str) -> Result<String, String> {
        self.0.remove(key).ok_or_else(|| format!("missing parameter '{key}'"))
    }

    fn num(&mut self, key: &str) -> Result<u64, String> {
        parse_u64(&self.take(key)?)
    }

    fn list(&mut self, key: &str) -> Result<Vec<u64>, String> {
        self.take(key)?.split(',').map(parse_u64).collect()
    }

    fn finish(self) -> Result<(), String> {
        match self.0.keys().next() {
            Some(k) => Err(format!("unknown parameter '{k}'")),
            None => Ok(()),
        }
    }
}

fn invalid(text: &str, message: String) -> SpecError {
    SpecError::Invalid {
        text: text.to_string(),
        message,
    }
}

impl FromStr for TriggerSpec {
    type Err = SpecError;
    fn from_str(text: &str) -> Result<Self, SpecError> {
        let parse = || -> Result<TriggerSpec, String> {
            let (kind, params) = split_params(text)?;
            let mut p = Params(params);
            let n = p.num("n")? as usize;
            let spec = match kind.as_str() {
                "comb" | "combinational" => TriggerSpec::Combinational { n, v: p.num("v")? },
                "counter" => {
                    let mode = match p.0.remove("mode").as_deref() {
                        None | Some("any") => CountMode::Any,
                        Some("bit") => CountMode::PerBit,
                        Some(m) => return Err(format!("unknown counter mode '{m}'")),
                    };
                    TriggerSpec::Counter {
                        n,
                        v: p.num("v")?,
                        mode,
                    }
                }
                "fsm" => TriggerSpec::Fsm {
                    n,
                    values: p.list("v")?,
                    masks: p.list("m")?,
                },
                other => return Err(format!("unknown trigger kind '{other}'")),
            };
            p.finish()?;
            spec.validate()?;
            Ok(spec)
        };
        parse().map_err(|m| invalid(text, m))
    }
}

impl FromStr for PayloadSpec {
    type Err = SpecError;
    fn from_str(text: &str) -> Result<Self, SpecError> {
        let parse = || -> Result<PayloadSpec, String> {
            let (kind, params) = split_params(text)?;
            let mut p = Params(params);
            let n = p.num("n")? as usize;
            let spec = match kind.as_str() {
                "leak" => PayloadSpec::Leak {
                    n,
                    code: p.take("code")?.parse()?,
                    c: p.num("c")? as u32,
                },
                "shiftburn" | "shift'n'burn" => PayloadSpec::ShiftBurn { n },
                "modify" => PayloadSpec::Modify { n, v: p.num("v")? },
                "fault" => PayloadSpec::Fault { n },
                other => return Err(format!("unknown payload kind '{other}'")),
            };
            p.finish()?;
            spec.validate()?;
            Ok(spec)
        };
        parse().map_err(|m| invalid(text, m))
    }
}
