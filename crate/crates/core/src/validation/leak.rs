// SPDX-License-Identifier: Apache-2.0

//! Decoders for the leak payload's output waveforms.
//!
//! Each emission starts with a start slot carrying a 1, followed by one slot
//! of `2^c` cycles per secret bit, bit 0 first. The decoders locate the
//! start slot by the first departure of the output from its idle level.

use super::ValidationError;
use crate::logic::Logic;
use crate::trojan::LeakCode;

fn known(trace: &[Logic], from: usize, to: usize) -> Result<Vec<bool>, ValidationError> {
    if to > trace.len() {
        return Err(ValidationError::IncompleteEmission);
    }
    trace[from..to]
        .iter()
        .map(|l| l.to_bool().ok_or(ValidationError::IncompleteEmission))
        .collect()
}

/// Recovers `n` secret bits (bit `i` at index `i`) from the leak output
/// series `trace`.
pub fn decode_leak(trace: &[Logic], code: LeakCode, c: u32, n: usize) -> Result<Vec<bool>, ValidationError> {
    let slot = 1usize << c;
    let start = trace
        .iter()
        .position(|&l| l == Logic::One)
        .ok_or(ValidationError::NoEmission)?;
    let end = start + (n + 1) * slot;
    match code {
        LeakCode::Serial => {
            let w = known(trace, start, end)?;
            Ok((1..=n).map(|k| w[k * slot]).collect())
        }
        LeakCode::Fsk => {
            // The output idles at 0, so the first toggle is the first 1.
            let w = known(trace, start, end)?;
            let mut prev = false;
            let toggles: Vec<bool> = w
                .iter()
                .map(|&v| {
                    let t = v != prev;
                    prev = v;
                    t
                })
                .collect();
            Ok((1..=n)
                .map(|k| toggles[k * slot..(k + 1) * slot].iter().filter(|&&t| t).count() == slot)
                .collect())
        }
        LeakCode::Dbpsk => {
            // Phase of each slot relative to a square wave that is 1 on the
            // first cycle of the start slot; a phase change encodes a 1.
            let w = known(trace, start, end)?;
            let phase = |k: usize| w[k * slot] ^ (k * slot).is_multiple_of(2);
            Ok((1..=n).map(|k| phase(k) != phase(k - 1)).collect())
        }
    }
}

/// [`decode_leak`] on the series of `net` in a simulation trace.
pub fn decode_leak_trace(
    trace: &super::SimTrace,
    net: &str,
    code: LeakCode,
    c: u32,
    n: usize,
) -> Result<Vec<bool>, ValidationError> {
    let series = trace
        .series(net)
        .ok_or_else(|| ValidationError::UnknownNet(net.to_string()))?;
    decode_leak(series, code, c, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Logic::{One as I, Zero as O};

    #[test]
    fn serial_by_hand() {
        // c = 1, secret 0b10 (bit 0 = 0, bit 1 = 1).
        let t = [O, O, I, I, O, O, I, I, O, O];
        assert_eq!(decode_leak(&t, LeakCode::Serial, 1, 2).unwrap(), vec![false, true]);
    }

    #[test]
    fn no_emission() {
        assert_eq!(decode_leak(&[O; 8], LeakCode::Fsk, 0, 2), Err(ValidationError::NoEmission));
        assert_eq!(
            decode_leak(&[O, I, I], LeakCode::Serial, 1, 2),
            Err(ValidationError::IncompleteEmission)
        );
    }
}
