//! File formats, the experiment runner and the `aerosec` command line on
//! top of [`aerosec_core`].

pub mod error;
pub mod experiment;
pub mod oracle;
pub mod preset;
pub mod scenario_file;
pub mod summary;

use std::time::Instant;

use aerosec_core::driver::Clock;

pub use error::{AppError, AppResult};

/// Wall clock measured from construction.
#[derive(Debug, Clone, Copy)]
pub struct InstantClock(Instant);

impl InstantClock {
    pub fn new() -> Self {
        InstantClock(Instant::now())
    }
}

impl Default for InstantClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for InstantClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
