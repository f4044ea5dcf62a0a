//! Shared fixtures for the criterion benches.

use softhappy_core::{sample_instance, Instance, SbmParams};

/// A connected SBM instance with two precoloured vertices per community.
pub fn fixture(n: usize, k: usize, seed: u64) -> Instance {
    let params = SbmParams { n, k, p: 0.1, q: 0.01, pcc: 2, seed };
    sample_instance(&params).expect("valid fixture parameters")
}
