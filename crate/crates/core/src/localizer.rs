//! Room-level localization: k-nearest-neighbor fingerprinting plus social
//! boosting, which re-votes each prediction together with the predictions of
//! the actor's current contact partners.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contact::ContactSession;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomObservation {
    pub actor: String,
    pub time: i64,
    pub signals: Vec<(String, f64)>,
    pub room: Option<String>,
}

impl RoomObservation {
    pub fn validate(&self) -> Result<()> {
        if self.signals.is_empty() {
            return Err(Error::Validation(format!("observation of `{}` at {} has no readings", self.actor, self.time)));
        }
        if let Some((r, s)) = self.signals.iter().find(|(_, s)| !s.is_finite()) {
            return Err(Error::Validation(format!("non-finite strength {s} from reader `{r}`")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomPrediction {
    pub actor: String,
    pub time: i64,
    pub room: String,
    pub confidence: f64,
}

/// k-NN model over reader-indexed signal vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseModel {
    k: usize,
    readers: BTreeMap<String, usize>,
    floor: f64,
    vectors: Vec<Vec<f64>>,
    labels: Vec<String>,
}

pub fn train_base(observations: &[RoomObservation], k: usize) -> Result<BaseModel> {
    train_base_for_rooms(observations, &[] as &[&str], k)
}

/// Like [`train_base`], additionally requiring training data for every room
/// in `rooms`.
pub fn train_base_for_rooms<S: AsRef<str>>(observations: &[RoomObservation], rooms: &[S], k: usize) -> Result<BaseModel> {
    if k == 0 {
        return Err(Error::Training("k must be at least 1".into()));
    }
    if observations.is_empty() {
        return Err(Error::Training("no training observations".into()));
    }
    let mut readers = BTreeMap::new();
    let mut min_strength = f64::INFINITY;
    for o in observations {
        o.validate()?;
        if o.room.is_none() {
            return Err(Error::Training(format!("training observation of `{}` at {} has no room", o.actor, o.time)));
        }
        for (r, s) in &o.signals {
            let next = readers.len();
            readers.entry(r.clone()).or_insert(next);
            min_strength = min_strength.min(*s);
        }
    }
    // re-index readers in name order
    for (i, v) in readers.values_mut().enumerate() {
        *v = i;
    }
    let seen: BTreeSet<&str> = observations.iter().filter_map(|o| o.room.as_deref()).collect();
    if let Some(missing) = rooms.iter().find(|r| !seen.contains(r.as_ref())) {
        return Err(Error::Training(format!("room `{}` has no training observations", missing.as_ref())));
    }
    let mut model = BaseModel { k, readers, floor: min_strength - 1.0, vectors: Vec::new(), labels: Vec::new() };
    for o in observations {
        model.vectors.push(model.embed(&o.signals));
        model.labels.push(o.room.clone().expect("checked above"));
    }
    Ok(model)
}

impl BaseModel {
    /// Dense vector; unknown readers are ignored, missing ones get the floor.
    fn embed(&self, signals: &[(String, f64)]) -> Vec<f64> {
        let mut v = vec![self.floor; self.readers.len()];
        for (r, s) in signals {
            if let Some(&i) = self.readers.get(r) {
                v[i] = v[i].max(*s);
            }
        }
        v
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rooms(&self) -> BTreeSet<&str> {
        self.labels.iter().map(String::as_str).collect()
    }

    /// Majority room among the k nearest training vectors. Vote ties go to
    /// the room with the smaller mean neighbor distance, then to the smaller
    /// room id.
    pub fn predict(&self, obs: &RoomObservation) -> Result<RoomPrediction> {
        obs.validate()?;
        let v = self.embed(&obs.signals);
        let mut dist: Vec<(f64, usize)> = self
            .vectors
            .iter()
            .enumerate()
            .map(|(i, t)| (t.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        let k = self.k.min(dist.len());
        dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
        for &(d, i) in &dist[..k] {
            let e = votes.entry(self.labels[i].as_str()).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += d.sqrt();
        }
        let (room, (count, _)) = votes
            .into_iter()
            .min_by(|a, b| {
                let (ca, da) = a.1;
                let (cb, db) = b.1;
                cb.cmp(&ca).then((da / ca as f64).total_cmp(&(db / cb as f64))).then(a.0.cmp(b.0))
            })
            .expect("k >= 1");
        Ok(RoomPrediction { actor: obs.actor.clone(), time: obs.time, room: room.to_string(), confidence: count as f64 / k as f64 })
    }
}

pub fn predict_base(model: &BaseModel, obs: &RoomObservation) -> Result<RoomPrediction> {
    model.predict(obs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoostStrategy {
    Majority,
    Confidence,
    Duration,
}

impl fmt::Display for BoostStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Majority => "majority",
            Self::Confidence => "confidence",
            Self::Duration => "duration",
        })
    }
}

impl FromStr for BoostStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "majority" => Ok(Self::Majority),
            "confidence" => Ok(Self::Confidence),
            "duration" => Ok(Self::Duration),
            other => Err(Error::Parse(format!("unknown boosting strategy `{other}`"))),
        }
    }
}

/// Re-votes every prediction with those of the actor's contact partners at
/// the same moment. A partner votes with its latest prediction taken no
/// earlier than the start of the shared session. Vote ties keep the base
/// prediction.
pub fn social_boost(
    predictions: &[RoomPrediction],
    sessions: &[ContactSession],
    strategy: BoostStrategy,
    alpha: f64,
) -> Vec<RoomPrediction> {
    let mut timeline: HashMap<&str, Vec<&RoomPrediction>> = HashMap::new();
    for p in predictions {
        timeline.entry(&p.actor).or_default().push(p);
    }
    for t in timeline.values_mut() {
        t.sort_by_key(|p| p.time);
    }
    let mut by_actor: HashMap<&str, Vec<&ContactSession>> = HashMap::new();
    for s in sessions {
        by_actor.entry(s.pair.first()).or_default().push(s);
        by_actor.entry(s.pair.second()).or_default().push(s);
    }
    let latest = |actor: &str, from: i64, at: i64| -> Option<&RoomPrediction> {
        let t = timeline.get(actor)?;
        let idx = t.partition_point(|p| p.time <= at);
        let p = *t.get(idx.checked_sub(1)?)?;
        (p.time >= from).then_some(p)
    };

    predictions
        .iter()
        .map(|own| {
            let ongoing: Vec<&ContactSession> = by_actor
                .get(own.actor.as_str())
                .map(|v| v.iter().copied().filter(|s| s.spans(own.time)).collect())
                .unwrap_or_default();
            if ongoing.is_empty() || alpha == 0.0 {
                return own.clone();
            }
            let longest = ongoing.iter().map(|s| own.time - s.start).max().unwrap_or(0);
            let mut votes: BTreeMap<&str, f64> = BTreeMap::new();
            *votes.entry(&own.room).or_insert(0.0) += 1.0;
            for s in &ongoing {
                let partner = s.pair.partner(&own.actor).expect("session involves actor");
                let Some(p) = latest(partner, s.start, own.time) else { continue };
                let v = match strategy {
                    BoostStrategy::Majority => 1.0,
                    BoostStrategy::Confidence => p.confidence,
                    BoostStrategy::Duration if longest > 0 => (own.time - s.start) as f64 / longest as f64,
                    BoostStrategy::Duration => 1.0,
                };
                *votes.entry(&p.room).or_insert(0.0) += alpha * v;
            }
            let total: f64 = votes.values().sum();
            let best = votes.values().copied().fold(f64::NEG_INFINITY, f64::max);
            let winners: Vec<&str> = votes.iter().filter(|(_, &w)| w == best).map(|(r, _)| *r).collect();
            let room = if winners.len() == 1 { winners[0] } else { own.room.as_str() };
            RoomPrediction {
                actor: own.actor.clone(),
                time: own.time,
                room: room.to_string(),
                confidence: votes[room] / total,
            }
        })
        .collect()
}

/// Fraction of predictions whose room matches the labelled observation.
pub fn accuracy(predictions: &[RoomPrediction], truth: &[RoomObservation]) -> f64 {
    let labels: HashMap<(&str, i64), &str> =
        truth.iter().filter_map(|o| Some(((o.actor.as_str(), o.time), o.room.as_deref()?))).collect();
    let scored: Vec<bool> = predictions
        .iter()
        .filter_map(|p| labels.get(&(p.actor.as_str(), p.time)).map(|&r| r == p.room))
        .collect();
    if scored.is_empty() {
        return 0.0;
    }
    scored.iter().filter(|&&b| b).count() as f64 / scored.len() as f64
}
