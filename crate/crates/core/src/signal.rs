use std::fmt;

use crate::error::{Error, Result};

/// A binary signal or report in `{-1, 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Signal {
    Neg,
    Pos,
}

impl Signal {
    /// Both values in lexicographic order, `-1` first.
    pub const ALL: [Signal; 2] = [Signal::Neg, Signal::Pos];

    pub fn value(self) -> i32 {
        match self {
            Signal::Neg => -1,
            Signal::Pos => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.value() as f64
    }

    pub fn flip(self) -> Signal {
        match self {
            Signal::Neg => Signal::Pos,
            Signal::Pos => Signal::Neg,
        }
    }

    /// `0` for `-1`, `1` for `+1`.
    pub fn bit(self) -> usize {
        match self {
            Signal::Neg => 0,
            Signal::Pos => 1,
        }
    }

    pub fn from_bit(bit: usize) -> Signal {
        if bit == 0 {
            Signal::Neg
        } else {
            Signal::Pos
        }
    }

    pub fn from_bool(positive: bool) -> Signal {
        if positive {
            Signal::Pos
        } else {
            Signal::Neg
        }
    }
}

impl TryFrom<i32> for Signal {
    type Error = Error;

    fn try_from(v: i32) -> Result<Self> {
        match v {
            -1 => Ok(Signal::Neg),
            1 => Ok(Signal::Pos),
            other => Err(Error::invalid(format!("signal must be -1 or 1, got {other}"))),
        }
    }
}

impl std::ops::Neg for Signal {
    type Output = Signal;

    fn neg(self) -> Signal {
        self.flip()
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Index of `(s_i, s_j, s_k)` in the lexicographic 8-cell layout with `-1 < 1`.
pub fn triple_index(si: Signal, sj: Signal, sk: Signal) -> usize {
    (si.bit() << 2) | (sj.bit() << 1) | sk.bit()
}

/// Inverse of [`triple_index`].
pub fn triple_signals(idx: usize) -> (Signal, Signal, Signal) {
    (
        Signal::from_bit((idx >> 2) & 1),
        Signal::from_bit((idx >> 1) & 1),
        Signal::from_bit(idx & 1),
    )
}
