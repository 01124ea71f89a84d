// SPDX-License-Identifier: Apache-2.0

pub mod expr;
pub mod library;
pub mod logic;
pub mod netlist;
pub mod placement;
pub mod analysis;
pub mod select;
pub mod trojan;
pub mod validation;
pub mod insertion;
pub mod fixtures;
pub mod pipeline;
