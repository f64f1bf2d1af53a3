//! Regenerate `data/case30_seed42.json`.
//!
//! ```text
//! cargo run -p gencluster --example make_fixture > crates/core/data/case30_seed42.json
//! ```

use gencluster::data::{build_case30_fixture, FIXTURE_SEED};
use gencluster::netmodel::serialize_network_json;

fn main() {
    let network = build_case30_fixture(FIXTURE_SEED).expect("fixture generation failed");
    println!("{}", serialize_network_json(&network));
}
