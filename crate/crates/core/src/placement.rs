// SPDX-License-Identifier: Apache-2.0

//! Placement sidecar: cell coordinates on a rectangular die.
//!
//! ```text
//! die 100 100 density 0.5
//! cell g1 0 0
//! cell g2 10 5
//! ```
//!
//! Coordinates are in micrometers with the origin at the lower left corner.

use crate::netlist::Netlist;
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlacementError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: cell '{cell}' at ({x}, {y}) lies outside the {w}x{h} die")]
    OutsideDie {
        line: usize,
        cell: String,
        x: f64,
        y: f64,
        w: f64,
        h: f64,
    },
    #[error("line {line}: unknown cell '{0}'", line = .1)]
    UnknownCell(String, usize),
    #[error("cell '{0}' has no placement")]
    Unplaced(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub width: f64,
    pub height: f64,
    pub density_target: f64,
    /// Coordinates per cell name.
    pub cells: BTreeMap<String, (f64, f64)>,
}

impl Placement {
    pub fn new(width: f64, height: f64, density_target: f64) -> Self {
        Placement {
            width,
            height,
            density_target,
            cells: BTreeMap::new(),
        }
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width).contains(&x) && (0.0..=self.height).contains(&y)
    }

    pub fn get(&self, cell: &str) -> Option<(f64, f64)> {
        self.cells.get(cell).copied()
    }

    pub fn half_perimeter(&self) -> f64 {
        self.width + self.height
    }

    /// Checks that every netlist cell is placed and every record names a cell.
    pub fn check_against(&self, n: &Netlist) -> Result<(), PlacementError> {
        for name in self.cells.keys() {
            if n.find_cell(name).is_none() {
                return Err(PlacementError::UnknownCell(name.clone(), 0));
            }
        }
        for c in n.cells() {
            if !self.cells.contains_key(&c.name) {
                return Err(PlacementError::Unplaced(c.name.clone()));
            }
        }
        Ok(())
    }
}

/// Parses the sidecar text without reference to a netlist.
pub fn parse_placement_text(text: &str) -> Result<(Placement, BTreeMap<String, usize>), PlacementError> {
    let mut placement: Option<Placement> = None;
    let mut lines = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let words: Vec<&str> = body.split_whitespace().collect();
        let num = |s: &str| -> Result<f64, PlacementError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| PlacementError::Syntax {
                    line,
                    message: format!("expected a number, found '{s}'"),
                })
        };
        match words.as_slice() {
            ["die", w, h, "density", f] => {
                if placement.is_some() {
                    return Err(PlacementError::Syntax {
                        line,
                        message: "duplicate die header".into(),
                    });
                }
                let (w, h, f) = (num(w)?, num(h)?, num(f)?);
                if w <= 0.0 || h <= 0.0 || !(f > 0.0 && f <= 1.0) {
                    return Err(PlacementError::Syntax {
                        line,
                        message: "die sides must be positive and density in (0, 1]".into(),
                    });
                }
                placement = Some(Placement::new(w, h, f));
            }
            ["cell", name, x, y] => {
                let p = placement.as_mut().ok_or_else(|| PlacementError::Syntax {
                    line,
                    message: "cell record before die header".into(),
                })?;
                let (x, y) = (num(x)?, num(y)?);
                if !p.contains_point(x, y) {
                    return Err(PlacementError::OutsideDie {
                        line,
                        cell: name.to_string(),
                        x,
                        y,
                        w: p.width,
                        h: p.height,
                    });
                }
                if p.cells.insert(name.to_string(), (x, y)).is_some() {
                    return Err(PlacementError::Syntax {
                        line,
                        message: format!("cell '{name}' placed twice"),
                    });
                }
                lines.insert(name.to_string(), line);
            }
            _ => {
                return Err(PlacementError::Syntax {
                    line,
                    message: format!("unrecognised record '{body}'"),
                })
            }
        }
    }
    let p = placement.ok_or_else(|| PlacementError::Syntax {
        line: 0,
        message: "missing die header".into(),
    })?;
    Ok((p, lines))
}

/// Parses a placement and checks it against `netlist`.
pub fn parse_placement(text: &str, netlist: &Netlist) -> Result<Placement, PlacementError> {
    let (p, lines) = parse_placement_text(text)?;
    for (name, line) in &lines {
        if netlist.find_cell(name).is_none() {
            return Err(PlacementError::UnknownCell(name.clone(), *line));
        }
    }
    p.check_against(netlist)?;
    Ok(p)
}

pub fn write_placement(p: &Placement) -> String {
    let mut out = format!("die {} {} density {}\n", p.width, p.height, p.density_target);
    for (name, (x, y)) in &p.cells {
        let _ = writeln!(out, "cell {name} {x} {y}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::tests::lib;
    use crate::netlist::NetlistBuilder;

    fn two_cells() -> Netlist {
        let mut b = NetlistBuilder::new("t", lib());
        b.add_input("a");
        b.add_cell("g1", "INV", &[("a", "a"), ("o", "x")]).unwrap();
        b.add_cell("g2", "INV", &[("a", "x"), ("o", "y")]).unwrap();
        b.add_output("y", "y");
        b.build().unwrap()
    }

    #[test]
    fn valid_placement_round_trips() {
        let n = two_cells();
        let text = "die 100 100 density 0.5\ncell g1 0 0\ncell g2 10 5\n";
        let p = parse_placement(text, &n).unwrap();
        assert_eq!(p.get("g2"), Some((10.0, 5.0)));
        assert_eq!(write_placement(&p), text);
    }

    #[test]
    fn outside_die() {
        let n = two_cells();
        let text = "die 100 100 density 0.5\ncell g1 150 0\ncell g2 10 5\n";
        assert!(matches!(
            parse_placement(text, &n),
            Err(PlacementError::OutsideDie { line: 2, .. })
        ));
    }

    #[test]
    fn unknown_and_unplaced() {
        let n = two_cells();
        let text = "die 100 100 density 0.5\ncell g1 0 0\ncell g2 10 5\ncell ghost 1 1\n";
        assert!(matches!(
            parse_placement(text, &n),
            Err(PlacementError::UnknownCell(ref c, 4)) if c == "ghost"
        ));
        let text = "die 100 100 density 0.5\ncell g1 0 0\n";
        assert!(matches!(parse_placement(text, &n), Err(PlacementError::Unplaced(_))));
    }
}
