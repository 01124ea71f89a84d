// SPDX-License-Identifier: Apache-2.0

//! Placement-resource model used to decide whether a trojan fits.
//!
//! The die is cut into a grid of regions. A region's free sites are its
//! area times one minus its measured utilization, divided by the mean cell
//! area of the target; its wiring budget is a fixed multiple of that. This
//! is an arithmetic stand-in for a real placer and router: no legalization,
//! routing or timing is performed.

use super::tco::{replay_into, TcoCommand, TcoScript};
use super::InsertError;
use crate::netlist::Netlist;
use crate::placement::Placement;
use crate::select::{HookAssignment, HookTarget};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityOptions {
    pub cols: usize,
    pub rows: usize,
    /// Wiring budget per free site.
    pub wiring_factor: f64,
    /// How many rings of neighbouring regions may absorb overflow.
    pub spill_radius: usize,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        CapacityOptions { cols: 10, rows: 10, wiring_factor: 4.0, spill_radius: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityModel {
    pub width: f64,
    pub height: f64,
    pub cols: usize,
    pub rows: usize,
    /// Free sites per region, row-major from the lower left.
    pub free_sites: Vec<usize>,
    /// Connections each region can absorb.
    pub wiring_budget: Vec<usize>,
    pub spill_radius: usize,
}

impl CapacityModel {
    /// Measures free space around the cells of `p`.
    pub fn from_placement(n: &Netlist, p: &Placement, opts: &CapacityOptions) -> CapacityModel {
        let (cols, rows) = (opts.cols.max(1), opts.rows.max(1));
        let rw = p.width / cols as f64;
        let rh = p.height / rows as f64;
        let mut used = vec![0.0; cols * rows];
        let mut area_sum = 0.0;
        for c in n.cell_ids() {
            let area = n.kind_of(c).area;
            area_sum += area;
            if let Some((x, y)) = p.get(&n.cell(c).name) {
                used[region_at(x, y, rw, rh, cols, rows)] += area;
            }
        }
        let mean = if n.cells().is_empty() { n.library().mean_area() } else { area_sum / n.cells().len() as f64 };
        let region_area = rw * rh;
        let free_sites: Vec<usize> = used
            .iter()
            .map(|&u| {
                let density = (u / region_area).clamp(0.0, 1.0);
                (region_area * (1.0 - density) / mean).floor().max(0.0) as usize
            })
            .collect();
        let wiring_budget = free_sites.iter().map(|&s| (s as f64 * opts.wiring_factor).floor() as usize).collect();
        CapacityModel {
            width: p.width,
            height: p.height,
            cols,
            rows,
            free_sites,
            wiring_budget,
            spill_radius: opts.spill_radius,
        }
    }

    pub fn region_of(&self, x: f64, y: f64) -> usize {
        region_at(x, y, self.width / self.cols as f64, self.height / self.rows as f64, self.cols, self.rows)
    }

    /// Lower-left corner and size of a region.
    pub fn region_rect(&self, r: usize) -> (f64, f64, f64, f64) {
        let (w, h) = (self.width / self.cols as f64, self.height / self.rows as f64);
        ((r % self.cols) as f64 * w, (r / self.cols) as f64 * h, w, h)
    }

    /// Regions within the spill radius of `home`, nearest first.
    fn neighbourhood(&self, home: usize) -> Vec<usize> {
        let (hx, hy) = ((home % self.cols) as i64, (home / self.cols) as i64);
        let rad = self.spill_radius as i64;
        let mut v: Vec<(i64, i64, usize)> = Vec::new();
        for y in (hy - rad).max(0)..=(hy + rad).min(self.rows as i64 - 1) {
            for x in (hx - rad).max(0)..=(hx + rad).min(self.cols as i64 - 1) {
                let (dx, dy) = (x - hx, y - hy);
                let r = (y * self.cols as i64 + x) as usize;
                v.push((dx.abs().max(dy.abs()), dx * dx + dy * dy, r));
            }
        }
        v.sort();
        v.into_iter().map(|(_, _, r)| r).collect()
    }
}

fn region_at(x: f64, y: f64, rw: f64, rh: f64, cols: usize, rows: usize) -> usize {
    let cx = ((x / rw).floor().max(0.0) as usize).min(cols - 1);
    let cy = ((y / rh).floor().max(0.0) as usize).min(rows - 1);
    cy * cols + cx
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionUse {
    pub region: usize,
    pub cells: usize,
    pub capacity: usize,
    pub wires: usize,
    pub budget: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Sites { region: usize, demand: usize, capacity: usize },
    Wiring { region: usize, demand: usize, budget: usize },
    Replay(String),
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Sites { region, demand, capacity } => {
                write!(f, "region {region}: {demand} cells for {capacity} free sites")
            }
            Violation::Wiring { region, demand, budget } => {
                write!(f, "region {region}: {demand} connections over a budget of {budget}")
            }
            Violation::Replay(m) => write!(f, "script does not replay: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub fits: bool,
    /// Regions receiving any demand, by index.
    pub regions: Vec<RegionUse>,
    pub violations: Vec<Violation>,
    /// Region chosen for each added cell.
    pub assignment: BTreeMap<String, usize>,
    /// Region the trojan was anchored to.
    pub home: usize,
    /// Slot for an external timing estimate; never filled here.
    pub timing_slack: Option<f64>,
}

impl FitReport {
    pub fn cell_demand(&self) -> usize {
        self.regions.iter().map(|r| r.cells).sum()
    }
}

/// Centroid of the placed target cells the hooks touch, or the die centre.
fn hook_centroid(n: &Netlist, p: &Placement, hooks: Option<&HookAssignment>) -> (f64, f64) {
    let mut pts = Vec::new();
    for h in hooks.map(|h| h.hooks.as_slice()).unwrap_or_default() {
        let cell = match &h.target {
            HookTarget::Net(net) => n.find_net(net).and_then(|id| n.driver_cell(id)).map(|c| n.cell(c).name.clone()),
            HookTarget::Splice { cell, .. } => Some(cell.clone()),
            HookTarget::Unbound => None,
        };
        if let Some(xy) = cell.and_then(|c| p.get(&c)) {
            pts.push(xy);
        }
    }
    if pts.is_empty() {
        return (p.width / 2.0, p.height / 2.0);
    }
    let k = pts.len() as f64;
    (pts.iter().map(|q| q.0).sum::<f64>() / k, pts.iter().map(|q| q.1).sum::<f64>() / k)
}

/// Checks whether `script` fits without changing anything.
///
/// Added cells go, in script order, to the nearest region around the hook
/// centroid that still has a free site; cells that find none are charged to
/// the home region. Connections are charged to the region of the cell they
/// attach to, splices to the home region.
pub fn trial_apply(
    n: &Netlist,
    p: &Placement,
    script: &TcoScript,
    model: &CapacityModel,
    hooks: Option<&HookAssignment>,
) -> FitReport {
    let mut violations = Vec::new();
    let mut b = n.to_builder();
    if let Err(e) = replay_into(&mut b, script).and_then(|_| b.build().map(|_| ()).map_err(InsertError::from)) {
        violations.push(Violation::Replay(e.to_string()));
    }
    let (cx, cy) = hook_centroid(n, p, hooks);
    let home = model.region_of(cx, cy);
    let order = model.neighbourhood(home);
    let mut left = model.free_sites.clone();
    let mut cells = vec![0usize; left.len()];
    let mut wires = vec![0usize; left.len()];
    let mut assignment = BTreeMap::new();
    for cmd in &script.commands {
        match cmd {
            TcoCommand::AddCell { id, .. } => {
                let r = order.iter().copied().find(|&r| left[r] > 0).unwrap_or(home);
                left[r] = left[r].saturating_sub(1);
                cells[r] += 1;
                assignment.insert(id.clone(), r);
            }
            TcoCommand::Connect { cell, .. } | TcoCommand::Disconnect { cell, .. } => {
                let r = assignment
                    .get(cell)
                    .copied()
                    .or_else(|| p.get(cell).map(|(x, y)| model.region_of(x, y)))
                    .unwrap_or(home);
                wires[r] += 1;
            }
            TcoCommand::Splice { .. } => wires[home] += 2,
            TcoCommand::AddNet { .. } => {}
        }
    }
    let mut regions = Vec::new();
    for r in 0..cells.len() {
        if cells[r] == 0 && wires[r] == 0 {
            continue;
        }
        let u = RegionUse {
            region: r,
            cells: cells[r],
            capacity: model.free_sites[r],
            wires: wires[r],
            budget: model.wiring_budget[r],
        };
        if u.cells > u.capacity {
            violations.push(Violation::Sites { region: r, demand: u.cells, capacity: u.capacity });
        }
        if u.wires > u.budget {
            violations.push(Violation::Wiring { region: r, demand: u.wires, budget: u.budget });
        }
        regions.push(u);
    }
    FitReport {
        fits: violations.is_empty(),
        regions,
        violations,
        assignment,
        home,
        timing_slack: None,
    }
}
