//! Shared fixtures for the benchmarks.

use fronthaul_core::channel::{grid_ap_positions, ChannelStatistics, Geometry, SystemConfig, UeArea};
use fronthaul_core::rng::seeded;

/// Reference scenario resized to `n` antennas, with one seeded UE drop.
pub fn fixture(n: usize, seed: u64) -> (SystemConfig, ChannelStatistics) {
    let mut config = SystemConfig::table3();
    config.antennas_per_ap = n;
    let mut rng = seeded(seed);
    let geometry = Geometry::new(
        grid_ap_positions(config.num_aps, 1000.0),
        UeArea::centered(1000.0).sample(config.num_ues, &mut rng),
    );
    let stats = ChannelStatistics::from_geometry(&geometry, &config, &mut rng).expect("valid geometry");
    (config, stats)
}
