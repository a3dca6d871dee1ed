//! Fixture builders shared by the criterion benchmarks.

use rand::Rng;

use ldp_freq_core::hpg::{HpgCountVector, HpgMessage, HpgParams};
use ldp_freq_core::pg::{CountVector, PgParams};
use ldp_freq_core::pirappor::PiRapporParams;
use ldp_freq_core::seeding;

/// Plain-mechanism parameters plus a synthetic count vector of `n` messages.
pub fn pg_fixture(epsilon: f64, k: u64, n: u64, seed: u64) -> (PgParams, CountVector) {
    let params = PgParams::derive(epsilon, k).expect("derivable");
    let universe = params.geometry().num_points();
    let mut rng = seeding::stream(&[seed, 1]);
    let counts =
        CountVector::from_messages(universe, (0..n).map(|_| rng.random_range(0..universe)))
            .expect("in range");
    (params, counts)
}

/// Hybrid-mechanism parameters plus synthetic per-block counts.
pub fn hpg_fixture(epsilon: f64, k: u64, q: u64, n: u64, seed: u64) -> (HpgParams, HpgCountVector) {
    let params = HpgParams::derive(epsilon, k, q).expect("derivable");
    let mut rng = seeding::stream(&[seed, 2]);
    let mut counts = HpgCountVector::new(params.num_blocks(), params.block_points());
    for _ in 0..n {
        counts
            .add(HpgMessage {
                block: rng.random_range(0..params.num_blocks()),
                point: rng.random_range(0..params.block_points()),
            })
            .expect("in range");
    }
    (params, counts)
}

/// PI-RAPPOR parameters plus synthetic affine-form counts.
pub fn pirappor_fixture(epsilon: f64, k: u64, n: u64, seed: u64) -> (PiRapporParams, CountVector) {
    let params = PiRapporParams::derive(epsilon, k).expect("derivable");
    let universe = params.message_universe();
    let mut rng = seeding::stream(&[seed, 3]);
    let counts =
        CountVector::from_messages(universe, (0..n).map(|_| rng.random_range(0..universe)))
            .expect("in range");
    (params, counts)
}
