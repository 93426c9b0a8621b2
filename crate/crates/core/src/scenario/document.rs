//! JSON scenario documents.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "scenario": {
//!     "counts": {"uavs": 0, "vessels": 1, "relay_vessels": 0, "slots": 1, "subcarriers": 1},
//!     "radio": {"slot_seconds": 30, "subcarrier_bandwidth_hz": 1e6, "noise_power_w": 3.98e-15,
//!               "carrier_mhz": 2000, "env_constant_db": 1,
//!               "air": {"a": 5.0188, "b": 0.3511, "eta_los_db": 2.3, "eta_nlos_db": 34}},
//!     "nodes": [
//!       {"id": 0, "role": "shore_bs", "max_power_w": 50, "trajectory": [[0, 0, 30]]},
//!       {"id": 1, "role": "sink_vessel", "trajectory": [[100, 0, 5]]}
//!     ],
//!     "qos": [{"vessel": 1, "volume_bits": 1e6, "deadline_slot": 1}]
//!   },
//!   "metadata": {}
//! }
//! ```
//!
//! `deadline_slot` is 1-based and defaults to the last slot.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Counts, Node, Position, QosTarget, Radio, Scenario};
use crate::links::NodeRole;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    schema_version: u32,
    scenario: Body,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Body {
    counts: Counts,
    radio: Radio,
    nodes: Vec<NodeEntry>,
    qos: Vec<QosEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeEntry {
    id: usize,
    role: NodeRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_power_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    energy_budget_j: Option<f64>,
    trajectory: Vec<Position>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QosEntry {
    vessel: usize,
    volume_bits: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    deadline_slot: Option<usize>,
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        Error::parse(field, e.into_inner().to_string())
    })?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::parse(
            "schema_version",
            format!("unsupported version {} (expected {SCHEMA_VERSION})", doc.schema_version),
        ));
    }
    let body = doc.scenario;
    let counts = body.counts;

    let total = 1 + counts.uavs + counts.vessels;
    let mut nodes: Vec<Option<Node>> = vec![None; total];
    for (k, entry) in body.nodes.into_iter().enumerate() {
        if entry.id >= total {
            return Err(Error::parse(
                format!("scenario.nodes[{k}].id"),
                format!("id {} outside 0..{total}", entry.id),
            ));
        }
        if nodes[entry.id].is_some() {
            return Err(Error::parse(
                format!("scenario.nodes[{k}].id"),
                format!("duplicate node id {}", entry.id),
            ));
        }
        nodes[entry.id] = Some(Node {
            role: entry.role,
            max_power_w: entry.max_power_w,
            energy_budget_j: entry.energy_budget_j,
            trajectory: entry.trajectory,
        });
    }
    let nodes = nodes
        .into_iter()
        .enumerate()
        .map(|(id, n)| n.ok_or_else(|| Error::parse("scenario.nodes", format!("node {id} is missing"))))
        .collect::<Result<Vec<_>>>()?;

    let first_vessel = counts.uavs + 1;
    let mut qos: Vec<Option<QosTarget>> = vec![None; counts.vessels];
    for (k, entry) in body.qos.into_iter().enumerate() {
        let slot = entry
            .vessel
            .checked_sub(first_vessel)
            .filter(|s| *s < counts.vessels)
            .ok_or_else(|| {
                Error::parse(
                    format!("scenario.qos[{k}].vessel"),
                    format!("{} is not a vessel id", entry.vessel),
                )
            })?;
        if qos[slot].is_some() {
            return Err(Error::parse(
                format!("scenario.qos[{k}].vessel"),
                format!("duplicate QoS entry for vessel {}", entry.vessel),
            ));
        }
        qos[slot] = Some(QosTarget {
            volume_bits: entry.volume_bits,
            deadline_slot: entry.deadline_slot.unwrap_or(counts.slots),
        });
    }
    let qos = qos
        .into_iter()
        .enumerate()
        .map(|(k, q)| {
            q.ok_or_else(|| {
                Error::parse("scenario.qos", format!("vessel {} has no QoS entry", first_vessel + k))
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let scenario = Scenario {
        counts,
        radio: body.radio,
        nodes,
        qos,
        metadata: doc.metadata,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Serializes to the document format; `load_scenario` inverts it exactly.
pub fn to_json(scenario: &Scenario) -> Result<String> {
    let first_vessel = scenario.counts.uavs + 1;
    let doc = Document {
        schema_version: SCHEMA_VERSION,
        scenario: Body {
            counts: scenario.counts,
            radio: scenario.radio,
            nodes: scenario
                .nodes
                .iter()
                .enumerate()
                .map(|(id, n)| NodeEntry {
                    id,
                    role: n.role,
                    max_power_w: n.max_power_w,
                    energy_budget_j: n.energy_budget_j,
                    trajectory: n.trajectory.clone(),
                })
                .collect(),
            qos: scenario
                .qos
                .iter()
                .enumerate()
                .map(|(k, q)| QosEntry {
                    vessel: first_vessel + k,
                    volume_bits: q.volume_bits,
                    deadline_slot: Some(q.deadline_slot),
                })
                .collect(),
        },
        metadata: scenario.metadata.clone(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(scenario)? + "\n")?;
    Ok(())
}
