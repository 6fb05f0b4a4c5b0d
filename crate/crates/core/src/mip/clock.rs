use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Time source for solve traces and budgets.
///
/// `Work` is a deterministic clock: elapsed time is the amount of solver
/// work charged so far times a fixed rate. Budgets and incumbent timestamps
/// then depend only on the inputs, never on the machine or its load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClockKind {
    Wall,
    Work { seconds_per_unit: f64 },
}

impl ClockKind {
    /// Work clock with a rate roughly matching one dense inner-loop
    /// operation in an optimized build.
    pub fn fixed() -> Self {
        ClockKind::Work { seconds_per_unit: DEFAULT_SECONDS_PER_UNIT }
    }
}

impl Default for ClockKind {
    fn default() -> Self {
        ClockKind::Wall
    }
}

pub const DEFAULT_SECONDS_PER_UNIT: f64 = 1.0e-9;

#[derive(Debug, Clone)]
pub struct Stopwatch {
    kind: ClockKind,
    start: Instant,
    units: f64,
}

impl Stopwatch {
    pub fn start(kind: ClockKind) -> Self {
        Self { kind, start: Instant::now(), units: 0.0 }
    }

    pub fn kind(&self) -> ClockKind {
        self.kind
    }

    /// Records `units` of work. No effect on the wall clock.
    pub fn charge(&mut self, units: f64) {
        self.units += units;
    }

    pub fn elapsed(&self) -> f64 {
        match self.kind {
            ClockKind::Wall => self.start.elapsed().as_secs_f64(),
            ClockKind::Work { seconds_per_unit } => self.units * seconds_per_unit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn work_clock_is_deterministic() {
        let mut a = Stopwatch::start(ClockKind::Work { seconds_per_unit: 0.5 });
        assert_eq!(a.elapsed(), 0.0);
        a.charge(4.0);
        assert_eq!(a.elapsed(), 2.0);
    }

    #[test]
    fn wall_clock_moves_forward() {
        let a = Stopwatch::start(ClockKind::Wall);
        let t0 = a.elapsed();
        std::thread::sleep(std::time::Duration::from_millis(2));
        assert!(a.elapsed() > t0);
    }
}
