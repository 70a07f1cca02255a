//! Discrete-event engine: monotone clock, `(fire_at, seq)` ordered queue and
//! the seeded random source shared by one run.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::{Add, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Simulation time in seconds.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SimTime(f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    /// Panics on negative or non-finite input.
    pub fn from_secs(secs: f64) -> Self {
        assert!(
            secs.is_finite() && secs >= 0.0,
            "simulation time must be finite and non-negative, got {secs}"
        );
        SimTime(secs)
    }

    pub fn as_secs(self) -> f64 {
        self.0
    }
}

impl Eq for SimTime {}

impl Ord for SimTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for SimTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add<f64> for SimTime {
    type Output = SimTime;

    fn add(self, secs: f64) -> SimTime {
        SimTime::from_secs(self.0 + secs)
    }
}

impl Sub for SimTime {
    type Output = f64;

    fn sub(self, rhs: SimTime) -> f64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}s", self.0)
    }
}

/// A scheduled occurrence. `seq` is assigned by the scheduler and breaks
/// ties between events with the same `fire_at` in insertion order.
#[derive(Clone, Debug)]
pub struct Event<P> {
    pub fire_at: SimTime,
    pub seq: u64,
    pub payload: P,
}

impl<P> PartialEq for Event<P> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.seq == other.seq
    }
}

impl<P> Eq for Event<P> {}

impl<P> Ord for Event<P> {
    // Reversed so that `BinaryHeap` pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_at
            .cmp(&self.fire_at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl<P> PartialOrd for Event<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Event queue plus clock.
#[derive(Debug)]
pub struct Scheduler<P> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Event<P>>,
    dispatched: u64,
}

impl<P> Default for Scheduler<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Scheduler<P> {
    pub fn new() -> Self {
        Scheduler {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
            dispatched: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Total events dispatched since construction.
    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    pub fn pending_payloads(&self) -> impl Iterator<Item = &P> {
        self.queue.iter().map(|e| &e.payload)
    }

    /// Enqueue `payload` at `fire_at`.
    ///
    /// Scheduling into the past is a programming error and aborts the run.
    pub fn schedule(&mut self, fire_at: SimTime, payload: P) -> u64 {
        assert!(
            fire_at >= self.now,
            "event scheduled in the past: fire_at {fire_at} < clock {}",
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Event {
            fire_at,
            seq,
            payload,
        });
        seq
    }

    pub fn schedule_in(&mut self, delay: f64, payload: P) -> u64 {
        let at = self.now + delay;
        self.schedule(at, payload)
    }

    /// Pops the next event if it fires at or before `t_end`, advancing the
    /// clock to its timestamp.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<Event<P>> {
        if self.queue.peek()?.fire_at > t_end {
            return None;
        }
        let ev = self.queue.pop()?;
        debug_assert!(ev.fire_at >= self.now);
        self.now = ev.fire_at;
        self.dispatched += 1;
        Some(ev)
    }

    /// Dispatches every event with `fire_at <= t_end` in order, then sets the
    /// clock to `t_end`. The handler may schedule further events.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> u64
    where
        F: FnMut(&mut Scheduler<P>, Event<P>),
    {
        assert!(
            t_end >= self.now,
            "run_until target {t_end} precedes clock {}",
            self.now
        );
        let mut count = 0;
        while let Some(ev) = self.pop_until(t_end) {
            handler(self, ev);
            count += 1;
        }
        self.now = t_end;
        count
    }

    /// Moves the clock forward to `t` without dispatching.
    pub fn advance_to(&mut self, t: SimTime) {
        assert!(t >= self.now, "advance_to {t} precedes clock {}", self.now);
        debug_assert!(self.queue.peek().is_none_or(|e| e.fire_at > t));
        self.now = t;
    }

    /// Discards all pending events and returns them in dispatch order.
    pub fn drain(&mut self) -> Vec<Event<P>> {
        let mut out = Vec::with_capacity(self.queue.len());
        while let Some(ev) = self.queue.pop() {
            out.push(ev);
        }
        out
    }
}

/// Independent random streams derived from one run seed.
///
/// Each stream is a ChaCha8 generator keyed by the run seed with its own
/// stream id, so draws in one stream never shift another.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Placement = 0,
    Flows = 1,
    Mobility = 2,
    Jitter = 3,
    TimerPhase = 4,
}

/// Seeded generator (ChaCha8, `seed_from_u64` keying).
#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn stream(seed: u64, stream: Stream) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        RandomSource { seed, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform in `[lo, hi)`; returns `lo` without drawing when `lo == hi`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        assert!(lo <= hi, "uniform: lo {lo} > hi {hi}");
        if lo == hi {
            return lo;
        }
        let v = lo + (hi - lo) * self.rng.random::<f64>();
        // Rounding can land exactly on `hi` for wide ranges.
        if v >= hi {
            lo
        } else {
            v
        }
    }

    /// Uniform integer in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index: empty range");
        self.rng.random_range(0..n)
    }
}
