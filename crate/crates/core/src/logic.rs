// SPDX-License-Identifier: Apache-2.0

//! Three-valued logic, scalar and 64-lane bit-sliced.

use std::fmt;
use std::ops::{BitAnd, BitOr, BitXor, Not};

/// A single 0/1/X value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Logic {
    Zero,
    One,
    #[default]
    X,
}

impl Logic {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Logic::One
        } else {
            Logic::Zero
        }
    }

    pub fn to_bool(self) -> Option<bool> {
        match self {
            Logic::Zero => Some(false),
            Logic::One => Some(true),
            Logic::X => None,
        }
    }

    pub fn is_known(self) -> bool {
        self != Logic::X
    }

    pub fn as_char(self) -> char {
        match self {
            Logic::Zero => '0',
            Logic::One => '1',
            Logic::X => 'x',
        }
    }
}

impl fmt::Display for Logic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl Not for Logic {
    type Output = Logic;
    fn not(self) -> Logic {
        match self {
            Logic::Zero => Logic::One,
            Logic::One => Logic::Zero,
            Logic::X => Logic::X,
        }
    }
}

impl BitAnd for Logic {
    type Output = Logic;
    fn bitand(self, rhs: Logic) -> Logic {
        match (self, rhs) {
            (Logic::Zero, _) | (_, Logic::Zero) => Logic::Zero,
            (Logic::One, Logic::One) => Logic::One,
            _ => Logic::X,
        }
    }
}

impl BitOr for Logic {
    type Output = Logic;
    fn bitor(self, rhs: Logic) -> Logic {
        match (self, rhs) {
            (Logic::One, _) | (_, Logic::One) => Logic::One,
            (Logic::Zero, Logic::Zero) => Logic::Zero,
            _ => Logic::X,
        }
    }
}

impl BitXor for Logic {
    type Output = Logic;
    fn bitxor(self, rhs: Logic) -> Logic {
        match (self.to_bool(), rhs.to_bool()) {
            (Some(a), Some(b)) => Logic::from_bool(a ^ b),
            _ => Logic::X,
        }
    }
}

/// 64 independent three-valued lanes.
///
/// A lane is 1 when its `one` bit is set, 0 when its `zero` bit is set and X
/// when neither is. Both bits set never occurs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tern64 {
    pub one: u64,
    pub zero: u64,
}

impl Default for Tern64 {
    fn default() -> Self {
        Tern64::X
    }
}

impl Tern64 {
    pub const X: Tern64 = Tern64 { one: 0, zero: 0 };
    pub const ZERO: Tern64 = Tern64 { one: 0, zero: !0 };
    pub const ONE: Tern64 = Tern64 { one: !0, zero: 0 };

    pub fn splat(v: Logic) -> Self {
        match v {
            Logic::Zero => Tern64::ZERO,
            Logic::One => Tern64::ONE,
            Logic::X => Tern64::X,
        }
    }

    /// Fully known lanes taken from the bits of `bits`.
    pub fn from_bits(bits: u64) -> Self {
        Tern64 {
            one: bits,
            zero: !bits,
        }
    }

    pub fn lane(self, i: usize) -> Logic {
        let m = 1u64 << i;
        if self.one & m != 0 {
            Logic::One
        } else if self.zero & m != 0 {
            Logic::Zero
        } else {
            Logic::X
        }
    }

    pub fn set_lane(&mut self, i: usize, v: Logic) {
        let m = 1u64 << i;
        self.one &= !m;
        self.zero &= !m;
        match v {
            Logic::One => self.one |= m,
            Logic::Zero => self.zero |= m,
            Logic::X => {}
        }
    }

    pub fn known(self) -> u64 {
        self.one | self.zero
    }

    /// Lanes of `self` where `mask` is set, lanes of `other` elsewhere.
    pub fn select(mask: u64, a: Tern64, b: Tern64) -> Tern64 {
        Tern64 {
            one: (a.one & mask) | (b.one & !mask),
            zero: (a.zero & mask) | (b.zero & !mask),
        }
    }
}

impl Not for Tern64 {
    type Output = Tern64;
    fn not(self) -> Tern64 {
        Tern64 {
            one: self.zero,
            zero: self.one,
        }
    }
}

impl BitAnd for Tern64 {
    type Output = Tern64;
    fn bitand(self, rhs: Tern64) -> Tern64 {
        Tern64 {
            one: self.one & rhs.one,
            zero: self.zero | rhs.zero,
        }
    }
}

impl BitOr for Tern64 {
    type Output = Tern64;
    fn bitor(self, rhs: Tern64) -> Tern64 {
        Tern64 {
            one: self.one | rhs.one,
            zero: self.zero & rhs.zero,
        }
    }
}

impl BitXor for Tern64 {
    type Output = Tern64;
    fn bitxor(self, rhs: Tern64) -> Tern64 {
        Tern64 {
            one: (self.one & rhs.zero) | (self.zero & rhs.one),
            zero: (self.one & rhs.one) | (self.zero & rhs.zero),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Logic; 3] = [Logic::Zero, Logic::One, Logic::X];

    #[test]
    fn lanes_agree_with_scalar_ops() {
        for a in ALL {
            for b in ALL {
                let (ta, tb) = (Tern64::splat(a), Tern64::splat(b));
                assert_eq!((ta & tb).lane(5), a & b);
                assert_eq!((ta | tb).lane(5), a | b);
                assert_eq!((ta ^ tb).lane(5), a ^ b);
                assert_eq!((!ta).lane(5), !a);
            }
        }
    }

    #[test]
    fn set_lane_roundtrip() {
        let mut t = Tern64::X;
        t.set_lane(3, Logic::One);
        t.set_lane(4, Logic::Zero);
        assert_eq!(t.lane(3), Logic::One);
        assert_eq!(t.lane(4), Logic::Zero);
        assert_eq!(t.lane(5), Logic::X);
        t.set_lane(3, Logic::X);
        assert_eq!(t.lane(3), Logic::X);
    }
}
