//! Canonical JSON serialization of graphs.
//!
//! The document has a fixed top-level key order — version, spheres,
//! flowsystems, flow_arcs, trigger_arcs, entry, annotations — and every
//! list is sorted by id, so serializing the same graph twice is
//! byte-identical and golden files stay stable. The root sphere is the
//! one no other sphere claims as a child.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fm::{Annotation, FlowArc, Flowsystem, FmGraph, Sphere, SphereId, StageRef, TriggerArc};

pub const SCHEMA_VERSION: &str = "1";

/// Malformed document diagnosis: where, and what was wrong.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {reason}")]
pub struct SchemaError {
    pub path: String,
    pub reason: String,
}

#[derive(Serialize, Deserialize)]
struct Document {
    version: String,
    spheres: Vec<Sphere>,
    flowsystems: Vec<Flowsystem>,
    flow_arcs: Vec<FlowArc>,
    trigger_arcs: Vec<TriggerArc>,
    entry: StageRef,
    annotations: BTreeMap<String, Annotation>,
}

/// Serialize a graph into the canonical document.
pub fn to_json(graph: &FmGraph) -> String {
    let mut spheres = graph.spheres.clone();
    spheres.sort_by(|a, b| a.id.cmp(&b.id));
    let mut flowsystems = graph.flowsystems.clone();
    flowsystems.sort_by(|a, b| a.id.cmp(&b.id));
    let mut flow_arcs = graph.flow_arcs.clone();
    flow_arcs.sort_by(|a, b| a.id.cmp(&b.id));
    let mut trigger_arcs = graph.trigger_arcs.clone();
    trigger_arcs.sort_by(|a, b| a.id.cmp(&b.id));
    let document = Document {
        version: SCHEMA_VERSION.to_owned(),
        spheres,
        flowsystems,
        flow_arcs,
        trigger_arcs,
        entry: graph.entry.clone(),
        annotations: graph.annotations.clone(),
    };
    let mut text = serde_json::to_string_pretty(&document).expect("graphs always serialize");
    text.push('\n');
    text
}

/// Parse the canonical document back into a graph.
///
/// Only document shape is checked here; referential problems (dangling
/// arcs, duplicate ids) load fine and are the validator's to report.
pub fn from_json(text: &str) -> Result<FmGraph, SchemaError> {
    let deserializer = &mut serde_json::Deserializer::from_str(text);
    let document: Document =
        serde_path_to_error::deserialize(deserializer).map_err(|err| SchemaError {
            path: err.path().to_string(),
            reason: err.inner().to_string(),
        })?;
    if document.version != SCHEMA_VERSION {
        return Err(SchemaError {
            path: "version".to_owned(),
            reason: format!("unsupported version {:?}", document.version),
        });
    }
    let root = derive_root(&document.spheres);
    Ok(FmGraph {
        root,
        spheres: document.spheres,
        flowsystems: document.flowsystems,
        flow_arcs: document.flow_arcs,
        trigger_arcs: document.trigger_arcs,
        entry: document.entry,
        annotations: document.annotations,
    })
}

/// The sphere no other sphere claims as a child; the validator reports
/// containment problems for documents where that is ambiguous.
fn derive_root(spheres: &[Sphere]) -> SphereId {
    let children: std::collections::BTreeSet<&str> = spheres
        .iter()
        .flat_map(|s| s.children.iter().map(|c| c.as_str()))
        .collect();
    spheres
        .iter()
        .find(|s| !children.contains(s.id.as_str()))
        .or_else(|| spheres.first())
        .map(|s| s.id.clone())
        .unwrap_or_else(|| SphereId::new(""))
}
