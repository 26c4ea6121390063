//! Browser demo. Each export takes plain numbers and strings and returns a
//! JSON string so the page needs no glue beyond `JSON.parse`.

use serde_json::{json, Value};
use sinet_core::comodo::{mine_top_k, MiningConfig};
use sinet_core::contact::threshold_sweep;
use sinet_core::localizer::{accuracy, social_boost, train_base, BoostStrategy, RoomPrediction};
use sinet_core::synth::{heavy_tailed_sessions, planted_attribute_graph, room_simulation, PlantedAttributes, RoomWorld};
use sinet_core::{Error, WeightingMode};
use wasm_bindgen::prelude::*;

/// Graph size as the minimum session duration rises.
pub fn sweep_json(seed: u64, sessions: usize, actors: usize, thresholds: &[i64]) -> Result<String, Error> {
    if actors < 2 {
        return Err(Error::Validation("need at least two actors".into()));
    }
    let s = heavy_tailed_sessions(seed, sessions, actors);
    let rows: Vec<Value> = threshold_sweep(&s, thresholds, WeightingMode::Duration)?
        .into_iter()
        .map(|(t, g)| json!({"threshold": t, "nodes": g.node_count(), "edges": g.edge_count(), "weight": g.total_weight()}))
        .collect();
    Ok(json!({"sessions": s.len(), "rows": rows}).to_string())
}

/// Top-k attribute descriptions on a planted-community graph.
pub fn communities_json(seed: u64, actors: usize, measure: &str, k: usize, max_depth: usize) -> Result<String, Error> {
    let (g, t) = planted_attribute_graph(seed, PlantedAttributes { actors, ..PlantedAttributes::default() });
    let config = MiningConfig { measure: measure.parse()?, k, max_depth, ..MiningConfig::default() };
    let out = mine_top_k(&g, &t, config)?;
    let patterns: Vec<Value> = out
        .patterns
        .iter()
        .map(|p| {
            json!({
                "selectors": p.selectors.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "quality": p.quality,
                "size": p.members.len(),
            })
        })
        .collect();
    Ok(json!({"evaluated": out.stats.evaluated, "pruned": out.stats.pruned, "patterns": patterns}).to_string())
}

/// Room accuracy before and after contact-based smoothing.
pub fn boost_json(seed: u64, sigma: f64, strategy: &str, alpha: f64) -> Result<String, Error> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Validation("sigma must be positive".into()));
    }
    let strategy: BoostStrategy = strategy.parse()?;
    let world = RoomWorld { sigma, ..RoomWorld::default() };
    let sim = room_simulation(seed, world);
    let model = train_base(&sim.training, world.k)?;
    let base: Vec<RoomPrediction> = sim.observations.iter().map(|o| model.predict(o)).collect::<Result<_, _>>()?;
    let boosted = social_boost(&base, &sim.sessions, strategy, alpha);
    Ok(json!({
        "observations": sim.observations.len(),
        "sessions": sim.sessions.len(),
        "base": accuracy(&base, &sim.observations),
        "boosted": accuracy(&boosted, &sim.observations),
    })
    .to_string())
}

fn js(r: Result<String, Error>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn sweep(seed: u32, sessions: u32, actors: u32, thresholds: &str) -> Result<String, JsValue> {
    let t: Vec<i64> = thresholds
        .split(',')
        .map(|x| x.trim().parse().map_err(|_| JsValue::from_str(&format!("bad threshold `{}`", x.trim()))))
        .collect::<Result<_, _>>()?;
    js(sweep_json(seed.into(), sessions as usize, actors as usize, &t))
}

#[wasm_bindgen]
pub fn communities(seed: u32, actors: u32, measure: &str, k: u32, max_depth: u32) -> Result<String, JsValue> {
    js(communities_json(seed.into(), actors as usize, measure, k as usize, max_depth as usize))
}

#[wasm_bindgen]
pub fn boost(seed: u32, sigma: f64, strategy: &str, alpha: f64) -> Result<String, JsValue> {
    js(boost_json(seed.into(), sigma, strategy, alpha))
}
