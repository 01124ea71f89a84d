// SPDX-License-Identifier: Apache-2.0

//! Change-order scripts, fit checking and committing trojans to a target.

mod capacity;
mod tco;

pub use capacity::{trial_apply, CapacityModel, CapacityOptions, FitReport, RegionUse, Violation};
pub use tco::{emit_tco, hook_connections, parse_tco, replay_tco, TcoCommand, TcoScript, KNOWN_DIRECTIVES};

use crate::netlist::{Netlist, NetlistError};
use crate::placement::Placement;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InsertError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("command {command}: {message}")]
    Replay { command: usize, message: String },
    #[error("trojan does not fit: {0}")]
    Unfit(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

/// Applies `script` and places its new cells in the regions chosen by the
/// trial run. Original cells keep their coordinates. On error nothing is
/// returned and the inputs are untouched.
pub fn commit_apply(
    n: &Netlist,
    p: &Placement,
    script: &TcoScript,
    model: &CapacityModel,
    fit: &FitReport,
) -> Result<(Netlist, Placement), InsertError> {
    if !fit.fits {
        let v: Vec<String> = fit.violations.iter().map(|v| v.to_string()).collect();
        return Err(InsertError::Unfit(v.join("; ")));
    }
    let tampered = replay_tco(n, script)?;
    let mut placed = p.clone();
    let mut per_region: std::collections::BTreeMap<usize, Vec<&String>> = Default::default();
    for (cell, &r) in &fit.assignment {
        per_region.entry(r).or_default().push(cell);
    }
    for (r, cells) in per_region {
        let (x0, y0, w, h) = model.region_rect(r);
        let side = (cells.len() as f64).sqrt().ceil() as usize;
        for (k, cell) in cells.into_iter().enumerate() {
            let x = x0 + ((k % side) as f64 + 0.5) * w / side as f64;
            let y = y0 + ((k / side) as f64 + 0.5) * h / side as f64;
            placed.cells.insert(cell.clone(), (x, y));
        }
    }
    for c in tampered.cells() {
        if !placed.cells.contains_key(&c.name) {
            return Err(InsertError::Unfit(format!("cell '{}' has no trial region", c.name)));
        }
    }
    Ok((tampered, placed))
}
