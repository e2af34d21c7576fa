use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Where an instance stopped being solvable.
#[derive(Debug, Clone, PartialEq)]
pub struct Infeasibility {
    pub slot: Option<usize>,
    pub gu: Option<usize>,
    pub reason: String,
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.gu, self.slot) {
            (Some(i), Some(t)) => write!(f, "GU {i}, slot {t}: {}", self.reason),
            (None, Some(t)) => write!(f, "slot {t}: {}", self.reason),
            (Some(i), None) => write!(f, "GU {i}: {}", self.reason),
            (None, None) => f.write_str(&self.reason),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("zero secrecy rate on link GU {gu} -> S-UAV {uav} at slot {slot}")]
    ZeroSecrecy { gu: usize, uav: usize, slot: usize },
    #[error("S-UAV {uav} moves {distance:.6} m in slot {slot}, limit is {limit:.6} m")]
    SpeedViolation { uav: usize, slot: usize, distance: f64, limit: f64 },
    #[error("malformed conic program: {0}")]
    Program(String),
    #[error("infeasible: {0}")]
    Infeasible(Infeasibility),
    #[error("internal assertion failed: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn infeasible(slot: Option<usize>, gu: Option<usize>, reason: impl Into<String>) -> Self {
        Error::Infeasible(Infeasibility { slot, gu, reason: reason.into() })
    }
}
