//! Constant-bit-rate flows.

use crate::error::ConfigError;
use crate::protocol::{NodeId, Packet};
use crate::sim::{RandomSource, SimTime};

pub const DEFAULT_PKT_SIZE: u32 = 512;
pub const DEFAULT_DATA_TTL: u32 = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig {
    pub src: NodeId,
    pub dst: NodeId,
    /// Packets per second.
    pub rate: f64,
    pub pkt_size: u32,
    pub start: f64,
    pub stop: f64,
}

impl FlowConfig {
    pub fn validate(&self, duration: f64) -> Result<(), ConfigError> {
        if self.src == self.dst {
            return Err(ConfigError::invalid("flow", format!("source equals destination {}", self.src)));
        }
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(ConfigError::invalid("flow_rate", format!("must be positive, got {}", self.rate)));
        }
        if self.pkt_size == 0 {
            return Err(ConfigError::invalid("pkt_size", "must be positive"));
        }
        if !(self.start >= 0.0 && self.start < self.stop && self.stop <= duration) {
            return Err(ConfigError::invalid(
                "flow",
                format!("window [{}, {}) outside [0, {duration}]", self.start, self.stop),
            ));
        }
        Ok(())
    }

    /// Time of the `k`-th packet.
    pub fn tick_time(&self, k: u64) -> f64 {
        self.start + k as f64 / self.rate
    }

    /// Packets the flow injects over its window.
    pub fn packet_count(&self) -> u64 {
        let mut k = ((self.stop - self.start) * self.rate).floor() as u64;
        while self.tick_time(k) < self.stop {
            k += 1;
        }
        while k > 0 && self.tick_time(k - 1) >= self.stop {
            k -= 1;
        }
        k
    }

    pub fn offered_load(&self) -> f64 {
        self.rate * f64::from(self.pkt_size) * 8.0
    }
}

#[derive(Clone, Debug)]
pub struct Flow {
    pub id: u32,
    pub cfg: FlowConfig,
    next_seq: u64,
}

impl Flow {
    pub fn new(id: u32, cfg: FlowConfig) -> Self {
        Flow { id, cfg, next_seq: 0 }
    }

    pub fn first_tick(&self) -> Option<SimTime> {
        (self.cfg.start < self.cfg.stop).then(|| SimTime::from_secs(self.cfg.start))
    }

    pub fn injected(&self) -> u64 {
        self.next_seq
    }

    /// Emits the next packet and the time of the following tick, if any.
    pub fn tick(&mut self, now: SimTime) -> (Packet, Option<SimTime>) {
        debug_assert!(now.as_secs() < self.cfg.stop);
        let pkt = Packet::data(
            self.cfg.src,
            self.cfg.dst,
            self.id,
            self.next_seq,
            self.cfg.pkt_size,
            DEFAULT_DATA_TTL,
            now,
        );
        self.next_seq += 1;
        let next = self.cfg.tick_time(self.next_seq);
        (pkt, (next < self.cfg.stop).then(|| SimTime::from_secs(next)))
    }
}

/// `count` flows between uniformly drawn distinct endpoints.
pub fn random_flows(
    nodes: usize,
    count: usize,
    rate: f64,
    pkt_size: u32,
    window: (f64, f64),
    rng: &mut RandomSource,
) -> Result<Vec<FlowConfig>, ConfigError> {
    if count > 0 && nodes < 2 {
        return Err(ConfigError::invalid("flows", "need at least two nodes"));
    }
    Ok((0..count)
        .map(|_| {
            let src = rng.index(nodes);
            let mut dst = rng.index(nodes - 1);
            if dst >= src {
                dst += 1;
            }
            FlowConfig {
                src: NodeId::from(src),
                dst: NodeId::from(dst),
                rate,
                pkt_size,
                start: window.0,
                stop: window.1,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Stream;

    fn flow(rate: f64, start: f64, stop: f64) -> FlowConfig {
        FlowConfig {
            src: NodeId(0),
            dst: NodeId(1),
            rate,
            pkt_size: DEFAULT_PKT_SIZE,
            start,
            stop,
        }
    }

    fn run(cfg: FlowConfig) -> Vec<f64> {
        let mut f = Flow::new(0, cfg);
        let mut times = Vec::new();
        let mut next = f.first_tick();
        while let Some(t) = next {
            let (pkt, n) = f.tick(t);
            assert_eq!(pkt.created_at, t);
            times.push(t.as_secs());
            next = n;
        }
        times
    }

    #[test]
    fn forty_packets_in_ten_seconds() {
        let times = run(flow(4.0, 30.0, 40.0));
        assert_eq!(times.len(), 40);
        assert_eq!(flow(4.0, 30.0, 40.0).packet_count(), 40);
        assert!(times.iter().all(|&t| (30.0..40.0).contains(&t)));
    }

    #[test]
    fn offered_load() {
        assert_eq!(flow(20.0, 0.0, 1.0).offered_load(), 81_920.0);
    }

    #[test]
    fn validation() {
        assert!(flow(4.0, 0.0, 900.0).validate(900.0).is_ok());
        assert!(flow(4.0, 0.0, 901.0).validate(900.0).is_err());
        assert!(flow(0.0, 0.0, 10.0).validate(900.0).is_err());
        let mut f = flow(4.0, 0.0, 10.0);
        f.dst = f.src;
        assert!(f.validate(900.0).is_err());
    }

    #[test]
    fn random_endpoints_distinct() {
        let mut rng = RandomSource::stream(3, Stream::Flows);
        let flows = random_flows(5, 200, 1.0, 512, (0.0, 10.0), &mut rng).unwrap();
        assert!(flows.iter().all(|f| f.src != f.dst && f.src.index() < 5 && f.dst.index() < 5));
    }

    proptest::proptest! {
        #[test]
        fn injected_count_matches_window(rate in 0.1f64..50.0, start in 0.0f64..100.0, len in 0.5f64..100.0) {
            let cfg = flow(rate, start, start + len);
            let n = run(cfg.clone()).len() as i64;
            let ideal = (len * rate).floor() as i64;
            proptest::prop_assert!((n - ideal).abs() <= 1, "{n} vs {ideal}");
            proptest::prop_assert_eq!(n as u64, cfg.packet_count());
        }
    }
}
