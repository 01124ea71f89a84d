// SPDX-License-Identifier: Apache-2.0

//! Signal selection function kinds and their text form
//! (`KIND[,param=value...]`).

use std::fmt;
use std::str::FromStr;

pub const DEFAULT_TAU: f64 = 0.05;
pub const DEFAULT_RLT_THRESHOLD: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SsfKind {
    /// Ascending transition probability.
    T,
    /// `T` restricted to the nearest clusters.
    Tc,
    /// Weighted random sampling favouring low transition probability.
    Tr { tau: f64 },
    /// `Tr` restricted to the nearest clusters.
    Tcr { tau: f64 },
    /// Random low-z (data) registers.
    Rlr,
    /// Tainted registers with z below a threshold.
    Rlt { threshold: f64 },
    /// Registers of the FSM SCC.
    Rhs,
    /// Tainted registers of the FSM SCC.
    Rhst,
    /// No connection.
    D,
}

impl SsfKind {
    pub fn name(&self) -> &'static str {
        match self {
            SsfKind::T => "T",
            SsfKind::Tc => "TC",
            SsfKind::Tr { .. } => "TR",
            SsfKind::Tcr { .. } => "TCR",
            SsfKind::Rlr => "RLR",
            SsfKind::Rlt { .. } => "RLT",
            SsfKind::Rhs => "RHS",
            SsfKind::Rhst => "RHST",
            SsfKind::D => "D",
        }
    }

    pub fn is_disconnected(&self) -> bool {
        matches!(self, SsfKind::D)
    }

    pub fn uses_clusters(&self) -> bool {
        matches!(self, SsfKind::Tc | SsfKind::Tcr { .. })
    }

    pub fn uses_taint(&self) -> bool {
        matches!(self, SsfKind::Rlt { .. } | SsfKind::Rhst)
    }

    /// Register-based kinds yield register outputs rather than arbitrary nets.
    pub fn is_register_based(&self) -> bool {
        matches!(
            self,
            SsfKind::Rlr | SsfKind::Rlt { .. } | SsfKind::Rhs | SsfKind::Rhst
        )
    }
}

impl fmt::Display for SsfKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        match self {
            SsfKind::Tr { tau } | SsfKind::Tcr { tau } if *tau != DEFAULT_TAU => {
                write!(f, ",tau={tau}")
            }
            SsfKind::Rlt { threshold } if *threshold != DEFAULT_RLT_THRESHOLD => {
                write!(f, ",threshold={threshold}")
            }
            _ => Ok(()),
        }
    }
}

impl FromStr for SsfKind {
    type Err = String;
    fn from_str(text: &str) -> Result<Self, String> {
        let mut parts = text.split(',').map(str::trim);
        let name = parts.next().unwrap_or("").to_ascii_uppercase();
        let mut tau = None;
        let mut threshold = None;
        for p in parts {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| format!("expected param=value, found '{p}'"))?;
            let v: f64 = v.trim().parse().map_err(|_| format!("invalid number '{v}'"))?;
            match k.trim() {
                "tau" if v > 0.0 => tau = Some(v),
                "tau" => return Err("tau must be positive".into()),
                "threshold" => threshold = Some(v),
                other => return Err(format!("unknown parameter '{other}'")),
            }
        }
        let kind = match name.as_str() {
            "T" => SsfKind::T,
            "TC" => SsfKind::Tc,
            "TR" => SsfKind::Tr {
                tau: tau.take().unwrap_or(DEFAULT_TAU),
            },
            "TCR" => SsfKind::Tcr {
                tau: tau.take().unwrap_or(DEFAULT_TAU),
            },
            "RLR" => SsfKind::Rlr,
            "RLT" => SsfKind::Rlt {
                threshold: threshold.take().unwrap_or(DEFAULT_RLT_THRESHOLD),
            },
            "RHS" => SsfKind::Rhs,
            "RHST" => SsfKind::Rhst,
            "D" => SsfKind::D,
            _ => return Err(format!("unknown selection function '{text}'")),
        };
        if tau.is_some() || threshold.is_some() {
            return Err(format!("parameter not used by {}", kind.name()));
        }
        Ok(kind)
    }
}

/// Interface roles that each take one selection function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PortRole {
    Trigger,
    PayloadIn,
    PayloadOut,
    PayloadFeedthrough,
}

impl PortRole {
    pub const ALL: [PortRole; 4] = [
        PortRole::Trigger,
        PortRole::PayloadIn,
        PortRole::PayloadOut,
        PortRole::PayloadFeedthrough,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            PortRole::Trigger => "trigger",
            PortRole::PayloadIn => "payload_in",
            PortRole::PayloadOut => "payload_out",
            PortRole::PayloadFeedthrough => "payload_ft",
        }
    }

    pub fn from_key(key: &str) -> Option<PortRole> {
        PortRole::ALL.into_iter().find(|r| r.key() == key)
    }
}

/// One selection function per interface role.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsfAssignment {
    pub trigger: SsfKind,
    pub payload_in: SsfKind,
    pub payload_out: SsfKind,
    pub payload_ft: SsfKind,
}

impl Default for SsfAssignment {
    fn default() -> Self {
        SsfAssignment {
            trigger: SsfKind::Tr { tau: DEFAULT_TAU },
            payload_in: SsfKind::Rlr,
            payload_out: SsfKind::D,
            payload_ft: SsfKind::Rlr,
        }
    }
}

impl SsfAssignment {
    pub fn get(&self, role: PortRole) -> SsfKind {
        match role {
            PortRole::Trigger => self.trigger,
            PortRole::PayloadIn => self.payload_in,
            PortRole::PayloadOut => self.payload_out,
            PortRole::PayloadFeedthrough => self.payload_ft,
        }
    }

    pub fn set(&mut self, role: PortRole, kind: SsfKind) {
        match role {
            PortRole::Trigger => self.trigger = kind,
            PortRole::PayloadIn => self.payload_in = kind,
            PortRole::PayloadOut => self.payload_out = kind,
            PortRole::PayloadFeedthrough => self.payload_ft = kind,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        assert_eq!("TR".parse::<SsfKind>().unwrap(), SsfKind::Tr { tau: 0.05 });
        assert_eq!("TR,tau=0.1".parse::<SsfKind>().unwrap().to_string(), "TR,tau=0.1");
        assert_eq!("rlt".parse::<SsfKind>().unwrap().to_string(), "RLT");
        assert_eq!(
            "RLT,threshold=-0.5".parse::<SsfKind>().unwrap(),
            SsfKind::Rlt { threshold: -0.5 }
        );
        assert!("T,tau=0.1".parse::<SsfKind>().is_err());
        assert!("Q".parse::<SsfKind>().is_err());
    }
}
