//! Fixtures shared by the benchmarks.

use manet_core::mobility::init_positions;
use manet_core::sim::{RandomSource, Stream};
use manet_core::{Position, ProtocolKind, SimSetup};

/// `n` nodes placed uniformly in a `side` x `side` field.
pub fn placement(n: usize, side: f64, seed: u64) -> Vec<Position> {
    let mut rng = RandomSource::stream(seed, Stream::Placement);
    init_positions(n, side, &mut rng).expect("n > 0")
}

/// A static network of `n` nodes running `protocol` for `duration` seconds.
pub fn static_setup(protocol: ProtocolKind, n: usize, duration: f64) -> SimSetup {
    let mut s = SimSetup::static_network(protocol, placement(n, 500.0, 7), duration);
    s.field_side = 500.0;
    s
}
