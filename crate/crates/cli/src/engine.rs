//! Mining requests and their JSON artifacts, shared by the CLI and the
//! service so that both produce the same bytes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sinet_core::comodo::{mine_top_k, MiningConfig};
use sinet_core::gpgrowth::{mine, EmmConfig, Instance, ModelClass, SelectionMode};
use sinet_core::io::{self, FORMAT_VERSION};
use sinet_core::netstats::CommunityMeasure;
use sinet_core::{AttributeTable, Error, InteractionGraph, Selector};

use crate::ledger::digest;

fn default_measure() -> String {
    "modularity".into()
}
fn default_k() -> usize {
    10
}
fn default_min_size() -> usize {
    2
}
fn default_depth() -> usize {
    3
}
fn default_true() -> bool {
    true
}
fn default_class() -> String {
    "mean".into()
}
fn default_min_support() -> u64 {
    10
}
fn default_emm_depth() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunityParams {
    #[serde(default = "default_measure")]
    pub measure: String,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_min_size")]
    pub min_size: usize,
    #[serde(default = "default_depth")]
    pub max_depth: usize,
    #[serde(default = "default_true")]
    pub pruning: bool,
}

impl Default for CommunityParams {
    fn default() -> Self {
        serde_json::from_value(json!({})).expect("all fields defaulted")
    }
}

impl CommunityParams {
    pub fn config(&self) -> Result<MiningConfig, Error> {
        let measure: CommunityMeasure = self.measure.parse()?;
        let c = MiningConfig { measure, k: self.k, min_size: self.min_size, max_depth: self.max_depth, pruning: self.pruning };
        c.validate()?;
        Ok(c)
    }

    /// Same parameters with names normalized.
    fn canonical(&self) -> Result<Self, Error> {
        let c = self.config()?;
        Ok(Self { measure: c.measure.to_string(), ..self.clone() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmmParams {
    #[serde(default = "default_class")]
    pub class: String,
    /// Target columns of the instance table, in model order.
    #[serde(default)]
    pub targets: Vec<String>,
    #[serde(default = "default_min_support")]
    pub min_support: u64,
    #[serde(default = "default_emm_depth")]
    pub max_depth: usize,
    /// Keep the k best patterns; exclusive with `threshold`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl EmmParams {
    pub fn config(&self) -> Result<EmmConfig, Error> {
        let class: ModelClass = self.class.parse()?;
        if self.targets.len() != class.target_count() {
            return Err(Error::Validation(format!(
                "{class} needs {} target column(s), got {}",
                class.target_count(),
                self.targets.len()
            )));
        }
        let mode = match (self.top_k, self.threshold) {
            (Some(_), Some(_)) => return Err(Error::Validation("top_k and threshold are exclusive".into())),
            (Some(k), None) => SelectionMode::TopK(k),
            (None, Some(t)) if t.is_finite() => SelectionMode::Threshold(t),
            (None, Some(_)) => return Err(Error::Validation("threshold must be finite".into())),
            (None, None) => SelectionMode::TopK(10),
        };
        let c = EmmConfig { class, min_support: self.min_support, max_depth: self.max_depth, mode };
        c.validate()?;
        Ok(c)
    }

    fn canonical(&self) -> Result<Self, Error> {
        let c = self.config()?;
        let (top_k, threshold) = match c.mode {
            SelectionMode::TopK(k) => (Some(k), None),
            SelectionMode::Threshold(t) => (None, Some(t)),
        };
        Ok(Self { class: c.class.to_string(), top_k, threshold, ..self.clone() })
    }
}

/// Body of a mining request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", content = "parameters", rename_all = "lowercase", deny_unknown_fields)]
pub enum MineRequest {
    Communities(CommunityParams),
    Emm(EmmParams),
}

impl MineRequest {
    pub fn engine(&self) -> &'static str {
        match self {
            Self::Communities(_) => "communities",
            Self::Emm(_) => "emm",
        }
    }

    /// Checks parameters without running anything.
    pub fn validate(&self) -> Result<(), Error> {
        match self {
            Self::Communities(p) => p.config().map(|_| ()),
            Self::Emm(p) => p.config().map(|_| ()),
        }
    }
}

/// Immutable input data: a graph with attributes, and optionally an
/// instance table for exceptional model mining.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub graph: InteractionGraph,
    pub attributes: AttributeTable,
    /// Raw table; parsed per request because the target columns vary.
    pub instances: Option<Vec<u8>>,
    /// sha256 of each input file by role.
    pub digests: BTreeMap<String, String>,
}

pub const GRAPH_FILE: &str = "graph.csv";
pub const ATTRIBUTES_FILE: &str = "attributes.csv";
pub const INSTANCES_FILE: &str = "instances.csv";

impl Bundle {
    pub fn load(graph: Option<&Path>, attributes: Option<&Path>, instances: Option<&Path>) -> Result<Self, Error> {
        let mut digests = BTreeMap::new();
        let graph = match graph {
            Some(p) => {
                digests.insert("graph".into(), digest(&std::fs::read(p).map_err(|e| io_err(p, e))?));
                io::read_graph(p)?
            }
            None => InteractionGraph::empty(sinet_core::WeightingMode::Duration),
        };
        let attributes = match attributes {
            Some(p) => {
                let bytes = std::fs::read(p).map_err(|e| io_err(p, e))?;
                digests.insert("attributes".into(), digest(&bytes));
                io::read_attributes(bytes.as_slice())?
            }
            None => AttributeTable::new(),
        };
        let instances = match instances {
            Some(p) => {
                let bytes = std::fs::read(p).map_err(|e| io_err(p, e))?;
                digests.insert("instances".into(), digest(&bytes));
                Some(bytes)
            }
            None => None,
        };
        Ok(Self { graph, attributes, instances, digests })
    }

    /// `graph.csv`, `attributes.csv` and, when present, `instances.csv`.
    pub fn from_dir(dir: &Path) -> Result<Self, Error> {
        let inst = dir.join(INSTANCES_FILE);
        Self::load(Some(&dir.join(GRAPH_FILE)), Some(&dir.join(ATTRIBUTES_FILE)), inst.exists().then_some(inst.as_path()))
    }

    fn instances(&self, targets: &[String]) -> Result<Vec<Instance>, Error> {
        let raw = self.instances.as_deref().ok_or_else(|| Error::Validation("no instance table loaded".into()))?;
        io::read_instances(raw, targets)
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn selector_strings(s: &[Selector]) -> Vec<String> {
    s.iter().map(ToString::to_string).collect()
}

/// Runs a request and renders its artifact. Contains nothing that varies
/// between runs, so equal inputs give equal bytes.
pub fn run(bundle: &Bundle, request: &MineRequest) -> Result<Vec<u8>, Error> {
    let doc = match request {
        MineRequest::Communities(p) => {
            let config = p.config()?;
            let out = mine_top_k(&bundle.graph, &bundle.attributes, config)?;
            let patterns: Vec<Value> = out
                .patterns
                .iter()
                .map(|c| {
                    json!({
                        "selectors": selector_strings(&c.selectors),
                        "quality": c.quality,
                        "optimistic_estimate": c.optimistic_estimate,
                        "size": c.members.len(),
                        "members": c.members,
                    })
                })
                .collect();
            json!({
                "format_version": FORMAT_VERSION,
                "engine": request.engine(),
                "parameters": p.canonical()?,
                "inputs": inputs(bundle, &["graph", "attributes"]),
                "patterns": patterns,
                "stats": out.stats,
            })
        }
        MineRequest::Emm(p) => {
            let config = p.config()?;
            let data = bundle.instances(&p.targets)?;
            let out = mine(&data, config)?;
            let patterns: Vec<Value> = out
                .patterns
                .iter()
                .map(|e| {
                    json!({
                        "selectors": selector_strings(&e.selectors),
                        "quality": e.quality,
                        "support": e.support,
                        "params": e.params,
                    })
                })
                .collect();
            json!({
                "format_version": FORMAT_VERSION,
                "engine": request.engine(),
                "parameters": p.canonical()?,
                "inputs": inputs(bundle, &["instances"]),
                "global_params": out.global_params,
                "patterns": patterns,
                "stats": out.stats,
            })
        }
    };
    Ok(render(&doc))
}

fn inputs(bundle: &Bundle, roles: &[&str]) -> BTreeMap<String, String> {
    roles.iter().filter_map(|r| Some((r.to_string(), bundle.digests.get(*r)?.clone()))).collect()
}

/// Pretty JSON with a trailing newline.
pub fn render(doc: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(doc).expect("values serialize");
    out.push(b'\n');
    out
}

/// Actors (communities) or instance rows (emm) covered by a pattern.
pub fn members(bundle: &Bundle, request: &MineRequest, selectors: &[String]) -> Result<Value, Error> {
    let sel: Vec<Selector> = selectors.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
    match request {
        MineRequest::Communities(_) => {
            let g = &bundle.graph;
            let members: Vec<&str> = g
                .nodes()
                .iter()
                .map(String::as_str)
                .filter(|a| bundle.attributes.selectors(a).is_some_and(|s| sel.iter().all(|x| s.contains(x))))
                .collect();
            let edges: Vec<Value> = g
                .named_edges()
                .filter(|(p, _)| members.contains(&p.first()) && members.contains(&p.second()))
                .map(|(p, w)| json!({"source": p.first(), "target": p.second(), "weight": w}))
                .collect();
            Ok(json!({"kind": "actors", "members": members, "edges": edges}))
        }
        MineRequest::Emm(p) => {
            let rows: Vec<usize> = bundle
                .instances(&p.targets)?
                .iter()
                .enumerate()
                .filter(|(_, i)| sel.iter().all(|x| i.selectors.contains(x)))
                .map(|(r, _)| r)
                .collect();
            Ok(json!({"kind": "instances", "members": rows, "edges": []}))
        }
    }
}
