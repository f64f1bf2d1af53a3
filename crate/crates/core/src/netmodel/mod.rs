//! Network data model: buses, lossless branches and operating points.
//!
//! Everything inside the library is per-unit. Line flows use the branch
//! susceptance magnitude `b = 1/x`, i.e. `p_ij = |V_i||V_j| (1/x_ij) sin(d_i - d_j)`,
//! which is the standard lossless flow with a positive coupling coefficient.

mod json;
mod matpower;
mod sampling;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::topology;

pub use json::{parse_network_json, serialize_network_json};
pub use matpower::{parse_matpower_case, ParsedCase};
pub use sampling::{sample_dynamic_parameters, DynamicRanges};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BusKind {
    SynchronousGenerator,
    InverterSource,
    Load,
}

impl BusKind {
    /// Generation buses (synchronous or inverter-interfaced).
    pub fn is_generation(self) -> bool {
        !matches!(self, BusKind::Load)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    pub kind: BusKind,
    /// Voltage magnitude, p.u.
    pub v_mag: f64,
    /// Voltage angle in radians, if an operating point is attached.
    pub v_ang: Option<f64>,
    /// Net real power injection, p.u. (positive = generation).
    pub p_inject: f64,
    /// Inertia coefficient, p.u. Zero for first-order buses.
    pub inertia: f64,
    /// Effective damping, p.u.
    pub damping: f64,
}

impl Bus {
    /// Buses integrated with the second-order swing equation.
    pub fn is_second_order(&self) -> bool {
        self.kind == BusKind::SynchronousGenerator && self.inertia > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    /// Series reactance, p.u. Resistance is not modelled.
    pub reactance: f64,
}

impl Branch {
    pub fn susceptance(&self) -> f64 {
        1.0 / self.reactance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
}

/// A branch resolved to bus positions rather than ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexedBranch {
    pub from: usize,
    pub to: usize,
    pub susceptance: f64,
}

impl Network {
    pub fn n(&self) -> usize {
        self.buses.len()
    }

    pub fn m(&self) -> usize {
        self.branches.len()
    }

    pub fn bus_ids(&self) -> Vec<usize> {
        self.buses.iter().map(|b| b.id).collect()
    }

    /// Map from bus id to position in `buses`.
    pub fn index_map(&self) -> HashMap<usize, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect()
    }

    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Branches expressed by bus position. Panics if an endpoint is unknown;
    /// call [`validate_network`] first for untrusted input.
    pub fn indexed_branches(&self) -> Vec<IndexedBranch> {
        let index = self.index_map();
        self.branches
            .iter()
            .map(|br| IndexedBranch {
                from: index[&br.from_bus],
                to: index[&br.to_bus],
                susceptance: br.susceptance(),
            })
            .collect()
    }

    pub fn injections(&self) -> Vec<f64> {
        self.buses.iter().map(|b| b.p_inject).collect()
    }

    pub fn dampings(&self) -> Vec<f64> {
        self.buses.iter().map(|b| b.damping).collect()
    }

    pub fn inertias(&self) -> Vec<f64> {
        self.buses.iter().map(|b| b.inertia).collect()
    }

    pub fn generator_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.buses[i].kind.is_generation()).collect()
    }

    /// Default reference bus: the lowest-id generation bus, falling back to
    /// the lowest-id bus when the network has no generation.
    pub fn default_reference(&self) -> Option<usize> {
        let pick = |gen_only: bool| {
            self.buses
                .iter()
                .filter(|b| !gen_only || b.kind.is_generation())
                .min_by_key(|b| b.id)
                .map(|b| b.id)
        };
        pick(true).or_else(|| pick(false))
    }

    /// Operating point taken from the bus table. Missing angles default to 0.
    pub fn stored_operating_point(&self) -> Option<OperatingPoint> {
        let reference = self.index_of(self.default_reference()?)?;
        Some(OperatingPoint {
            v_mag: self.buses.iter().map(|b| b.v_mag).collect(),
            v_ang: self.buses.iter().map(|b| b.v_ang.unwrap_or(0.0)).collect(),
            p_inject: self.injections(),
            reference,
        })
    }

    /// Copy angles of an operating point back onto the bus table.
    pub fn with_operating_point(&self, op: &OperatingPoint) -> Network {
        let mut out = self.clone();
        for (bus, (&vm, &va)) in out.buses.iter_mut().zip(op.v_mag.iter().zip(&op.v_ang)) {
            bus.v_mag = vm;
            bus.v_ang = Some(va);
        }
        out
    }
}

/// Steady-state voltages plus the injections they were computed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub v_mag: Vec<f64>,
    pub v_ang: Vec<f64>,
    pub p_inject: Vec<f64>,
    /// Position of the reference bus, whose angle is 0.
    pub reference: usize,
}

impl OperatingPoint {
    pub fn n(&self) -> usize {
        self.v_ang.len()
    }

    /// Flat start: angles 0 and the network's own magnitudes.
    pub fn flat(network: &Network, reference: usize) -> OperatingPoint {
        OperatingPoint {
            v_mag: network.buses.iter().map(|b| b.v_mag).collect(),
            v_ang: vec![0.0; network.n()],
            p_inject: network.injections(),
            reference,
        }
    }
}

/// Check every type invariant of a network. Returns one message per
/// violation; an empty list means the network is valid.
pub fn validate_network(network: &Network) -> Vec<String> {
    let mut violations = Vec::new();
    if !(network.base_mva > 0.0 && network.base_mva.is_finite()) {
        violations.push(format!("base_mva must be > 0 (got {})", network.base_mva));
    }
    if network.n() < 2 {
        violations.push(format!("network must have at least 2 buses (got {})", network.n()));
    }

    let mut seen = HashSet::new();
    for bus in &network.buses {
        if !seen.insert(bus.id) {
            violations.push(format!("duplicate bus id {}", bus.id));
        }
        if bus.id == 0 {
            violations.push("bus ids must be >= 1 (got 0)".to_string());
        }
        if !(bus.damping > 0.0 && bus.damping.is_finite()) {
            violations.push(format!("bus {}: damping must be > 0", bus.id));
        }
        if !(bus.inertia >= 0.0 && bus.inertia.is_finite()) {
            violations.push(format!("bus {}: inertia must be >= 0", bus.id));
        } else if bus.inertia > 0.0 && bus.kind != BusKind::SynchronousGenerator {
            violations.push(format!("bus {}: inertia must be 0 for non-synchronous buses", bus.id));
        }
        if !(bus.v_mag > 0.0 && bus.v_mag.is_finite()) {
            violations.push(format!("bus {}: v_mag must be > 0", bus.id));
        }
        if !bus.p_inject.is_finite() {
            violations.push(format!("bus {}: p_inject must be finite", bus.id));
        }
        if let Some(a) = bus.v_ang {
            if !a.is_finite() {
                violations.push(format!("bus {}: v_ang must be finite", bus.id));
            }
        }
    }

    let index = network.index_map();
    let mut pairs: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut edges = Vec::new();
    for br in &network.branches {
        if !(br.reactance > 0.0 && br.reactance.is_finite()) {
            violations.push(format!("branch {}: reactance must be > 0", br.id));
        }
        if br.from_bus == br.to_bus {
            violations.push(format!("branch {}: from_bus equals to_bus", br.id));
            continue;
        }
        let (Some(&a), Some(&b)) = (index.get(&br.from_bus), index.get(&br.to_bus)) else {
            for end in [br.from_bus, br.to_bus] {
                if !index.contains_key(&end) {
                    violations.push(format!("branch {}: unknown bus {}", br.id, end));
                }
            }
            continue;
        };
        let key = (br.from_bus.min(br.to_bus), br.from_bus.max(br.to_bus));
        if let Some(first) = pairs.insert(key, br.id) {
            violations.push(format!(
                "branch {}: parallel to branch {} (merge parallel branches)",
                br.id, first
            ));
        }
        edges.push((a, b));
    }

    if network.n() >= 2 {
        let components = topology::component_count(&topology::component_labels(network.n(), edges));
        if components > 1 {
            violations.push(format!("network disconnected: {components} components"));
        }
    }
    violations
}

/// Merge parallel branches with `1/x_eq = sum 1/x_k`. The merged branch keeps
/// the id and orientation of the first branch of each bus pair.
pub fn merge_parallel_branches(branches: Vec<Branch>) -> Vec<Branch> {
    let mut out: Vec<Branch> = Vec::with_capacity(branches.len());
    let mut slot: HashMap<(usize, usize), usize> = HashMap::new();
    for br in branches {
        let key = (br.from_bus.min(br.to_bus), br.from_bus.max(br.to_bus));
        match slot.get(&key) {
            Some(&pos) => {
                let merged = &mut out[pos];
                merged.reactance = 1.0 / (1.0 / merged.reactance + 1.0 / br.reactance);
            }
            None => {
                slot.insert(key, out.len());
                out.push(br);
            }
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    pub fn bus(id: usize, kind: BusKind, p: f64, damping: f64) -> Bus {
        Bus {
            id,
            kind,
            v_mag: 1.0,
            v_ang: None,
            p_inject: p,
            inertia: 0.0,
            damping,
        }
    }

    pub fn branch(id: usize, from: usize, to: usize, x: f64) -> Branch {
        Branch {
            id,
            from_bus: from,
            to_bus: to,
            reactance: x,
        }
    }

    pub fn triangle() -> Network {
        Network {
            base_mva: 100.0,
            buses: vec![
                bus(1, BusKind::SynchronousGenerator, 0.5, 1.0),
                bus(2, BusKind::Load, -0.2, 1.0),
                bus(3, BusKind::Load, -0.3, 1.0),
            ],
            branches: vec![branch(1, 1, 2, 0.5), branch(2, 2, 3, 0.5), branch(3, 1, 3, 0.5)],
        }
    }
}
