//! Bundled test systems.

/// The IEEE 30-bus system in MATPOWER case format.
pub const CASE30_MATPOWER: &str = include_str!("../data/case30.m");

/// The 30-bus system with dynamic parameters sampled from seed 42 at the
/// default ranges, injections rebalanced, and the solved operating point
/// stored as bus angles.
pub const CASE30_FIXTURE_JSON: &str = include_str!("../data/case30_seed42.json");

/// Seed used to sample [`CASE30_FIXTURE_JSON`].
pub const FIXTURE_SEED: u64 = 42;

/// Rebuild the fixture from [`CASE30_MATPOWER`]: sample dynamic parameters
/// at `seed` with the default ranges, rebalance generation against load and
/// solve the angle equations.
pub fn build_case30_fixture(seed: u64) -> crate::Result<crate::Network> {
    use crate::netmodel::{parse_matpower_case, sample_dynamic_parameters, DynamicRanges};
    use crate::powerflow::{balance_and_solve, PowerFlowOptions};

    let parsed = parse_matpower_case(CASE30_MATPOWER)?;
    let sampled = sample_dynamic_parameters(&parsed.network, seed, &DynamicRanges::default())?;
    let (solved, _) = balance_and_solve(&sampled, &PowerFlowOptions::default())?;
    Ok(solved)
}

/// The parsed fixture network.
pub fn case30_fixture() -> crate::Network {
    crate::netmodel::parse_network_json(CASE30_FIXTURE_JSON).expect("bundled fixture parses")
}
