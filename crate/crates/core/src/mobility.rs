//! Random Waypoint mobility inside a square field.
//!
//! Positions are evaluated lazily from closed-form kinematics; the only
//! engine events are phase transitions (pause end, waypoint arrival).

use crate::error::ConfigError;
use crate::sim::{RandomSource, SimTime};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn lerp(self, to: Position, frac: f64) -> Position {
        Position {
            x: self.x + (to.x - self.x) * frac,
            y: self.y + (to.y - self.y) * frac,
        }
    }
}

/// Uniform random point in `[0, side] x [0, side]`.
pub fn random_point(side: f64, rng: &mut RandomSource) -> Position {
    Position::new(rng.uniform(0.0, side), rng.uniform(0.0, side))
}

/// `n` i.i.d. uniform positions in the field.
pub fn init_positions(
    n: usize,
    side: f64,
    rng: &mut RandomSource,
) -> Result<Vec<Position>, ConfigError> {
    if n == 0 {
        return Err(ConfigError::invalid("n", "node count must be at least 1"));
    }
    if !(side >= 0.0 && side.is_finite()) {
        return Err(ConfigError::invalid(
            "field_side",
            format!("must be finite and non-negative, got {side}"),
        ));
    }
    Ok((0..n).map(|_| random_point(side, rng)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Phase {
    Paused { until: SimTime },
    Moving { depart: SimTime, arrive: SimTime },
    /// Held in place for the rest of the run.
    Parked,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MobilityState {
    /// Position at the start of the current phase.
    pub current: Position,
    pub waypoint: Position,
    pub speed: f64,
    pub pause: f64,
    pub phase: Phase,
}

impl MobilityState {
    /// Initial state: paused at `start` for one full pause period.
    pub fn new(start: Position, speed: f64, pause: f64) -> Self {
        debug_assert!(pause >= 0.0);
        MobilityState {
            current: start,
            waypoint: start,
            speed,
            pause,
            phase: Phase::Paused {
                until: SimTime::from_secs(pause),
            },
        }
    }

    /// A node already travelling from `from` to `to`, departing at `depart`.
    pub fn moving(from: Position, to: Position, speed: f64, pause: f64, depart: SimTime) -> Self {
        assert!(speed > 0.0, "moving phase requires positive speed");
        let arrive = depart + from.distance(to) / speed;
        MobilityState {
            current: from,
            waypoint: to,
            speed,
            pause,
            phase: Phase::Moving { depart, arrive },
        }
    }

    pub fn position_at(&self, t: SimTime) -> Position {
        match self.phase {
            Phase::Paused { .. } | Phase::Parked => self.current,
            Phase::Moving { depart, arrive } => {
                if t >= arrive {
                    return self.waypoint;
                }
                let span = arrive - depart;
                if span <= 0.0 {
                    return self.waypoint;
                }
                let frac = ((t - depart) / span).clamp(0.0, 1.0);
                self.current.lerp(self.waypoint, frac)
            }
        }
    }

    /// Time of the next phase change, if any.
    pub fn next_transition(&self) -> Option<SimTime> {
        match self.phase {
            Phase::Paused { until } => Some(until),
            Phase::Moving { arrive, .. } => Some(arrive),
            Phase::Parked => None,
        }
    }

    /// Performs the phase change due at `now` and returns the next one.
    ///
    /// Pause end samples a fresh uniform waypoint; arrival starts a pause.
    pub fn advance(&mut self, now: SimTime, side: f64, rng: &mut RandomSource) -> Option<SimTime> {
        match self.phase {
            Phase::Paused { .. } => {
                self.waypoint = random_point(side, rng);
                let travel = self.current.distance(self.waypoint) / self.speed;
                self.phase = Phase::Moving {
                    depart: now,
                    arrive: now + travel,
                };
            }
            Phase::Moving { .. } => {
                self.current = self.waypoint;
                self.phase = Phase::Paused {
                    until: now + self.pause,
                };
            }
            Phase::Parked => {}
        }
        self.next_transition()
    }

    /// Moves the node to `pos` instantly and holds it there.
    pub fn park(&mut self, pos: Position) {
        self.current = pos;
        self.waypoint = pos;
        self.phase = Phase::Parked;
    }
}
