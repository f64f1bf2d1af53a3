use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BusKind, Network};
use crate::error::{Error, Result};

/// Uniform sampling ranges `(lo, hi)` for the dynamic bus parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicRanges {
    pub gen_inertia: (f64, f64),
    pub gen_damping: (f64, f64),
    pub load_damping: (f64, f64),
}

impl Default for DynamicRanges {
    /// Low-inertia regime: generator M in [0.5, 2], D in [25, 30]; loads D in [1, 1.5].
    fn default() -> Self {
        DynamicRanges {
            gen_inertia: (0.5, 2.0),
            gen_damping: (25.0, 30.0),
            load_damping: (1.0, 1.5),
        }
    }
}

impl DynamicRanges {
    fn check(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("gen_inertia", self.gen_inertia),
            ("gen_damping", self.gen_damping),
            ("load_damping", self.load_damping),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} range must satisfy 0 < lo <= hi (got ({lo}, {hi}))"
                )));
            }
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Draw inertia and damping for every bus, visiting buses in ascending id
/// order. Generation buses draw an inertia and then a damping value; inverter
/// buses keep inertia 0 (first-order) but still consume the inertia draw so
/// that reclassifying a bus does not shift the stream for the others. Loads
/// draw a damping value only.
pub fn sample_dynamic_parameters(network: &Network, seed: u64, ranges: &DynamicRanges) -> Result<Network> {
    ranges.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..network.n()).collect();
    order.sort_by_key(|&i| network.buses[i].id);

    let mut out = network.clone();
    for i in order {
        let bus = &mut out.buses[i];
        match bus.kind {
            BusKind::SynchronousGenerator | BusKind::InverterSource => {
                let inertia = uniform(&mut rng, ranges.gen_inertia);
                bus.damping = uniform(&mut rng, ranges.gen_damping);
                bus.inertia = if bus.kind == BusKind::SynchronousGenerator {
                    inertia
                } else {
                    0.0
                };
            }
            BusKind::Load => {
                bus.inertia = 0.0;
                bus.damping = uniform(&mut rng, ranges.load_damping);
            }
        }
    }
    Ok(out)
}
