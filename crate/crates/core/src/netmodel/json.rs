//! Native JSON representation of a [`Network`].
//!
//! ```json
//! { "base_mva": 100.0,
//!   "buses": [{ "id": 1, "kind": "generator", "v_mag": 1.0, "v_ang": 0.0,
//!               "p_inject_pu": 0.5, "inertia": 1.2, "damping": 27.0 }],
//!   "branches": [{ "id": 1, "from": 1, "to": 2, "x": 0.5 }] }
//! ```

use serde::{Deserialize, Serialize};

use super::{merge_parallel_branches, validate_network, Branch, Bus, BusKind, Network};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    base_mva: f64,
    buses: Vec<BusDoc>,
    branches: Vec<BranchDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusDoc {
    id: usize,
    kind: KindDoc,
    v_mag: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v_ang: Option<f64>,
    p_inject_pu: f64,
    inertia: f64,
    damping: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindDoc {
    Generator,
    Inverter,
    Load,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchDoc {
    id: usize,
    from: usize,
    to: usize,
    x: f64,
}

impl From<BusKind> for KindDoc {
    fn from(kind: BusKind) -> Self {
        match kind {
            BusKind::SynchronousGenerator => KindDoc::Generator,
            BusKind::InverterSource => KindDoc::Inverter,
            BusKind::Load => KindDoc::Load,
        }
    }
}

impl From<KindDoc> for BusKind {
    fn from(kind: KindDoc) -> Self {
        match kind {
            KindDoc::Generator => BusKind::SynchronousGenerator,
            KindDoc::Inverter => BusKind::InverterSource,
            KindDoc::Load => BusKind::Load,
        }
    }
}

/// Parse and validate a JSON network document.
pub fn parse_network_json(text: &str) -> Result<Network> {
    let doc: NetworkDoc = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let network = Network {
        base_mva: doc.base_mva,
        buses: doc
            .buses
            .into_iter()
            .map(|b| Bus {
                id: b.id,
                kind: b.kind.into(),
                v_mag: b.v_mag,
                v_ang: b.v_ang,
                p_inject: b.p_inject_pu,
                inertia: b.inertia,
                damping: b.damping,
            })
            .collect(),
        branches: merge_parallel_branches(
            doc.branches
                .into_iter()
                .map(|b| Branch {
                    id: b.id,
                    from_bus: b.from,
                    to_bus: b.to,
                    reactance: b.x,
                })
                .collect(),
        ),
    };
    let violations = validate_network(&network);
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    Ok(network)
}

pub fn serialize_network_json(network: &Network) -> String {
    let doc = NetworkDoc {
        base_mva: network.base_mva,
        buses: network
            .buses
            .iter()
            .map(|b| BusDoc {
                id: b.id,
                kind: b.kind.into(),
                v_mag: b.v_mag,
                v_ang: b.v_ang,
                p_inject_pu: b.p_inject,
                inertia: b.inertia,
                damping: b.damping,
            })
            .collect(),
        branches: network
            .branches
            .iter()
            .map(|b| BranchDoc {
                id: b.id,
                from: b.from_bus,
                to: b.to_bus,
                x: b.reactance,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("network documents always serialize")
}
