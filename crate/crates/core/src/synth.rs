//! Seeded synthetic data generators.
//!
//! Each generator plants one structural effect (community-biased contact
//! durations, role-dependent contact profiles, correlated contact
//! recurrence, co-located conversation groups) so that analyses can be
//! checked against a known ground truth.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::attributes::{AttributeTable, Selector};
use crate::contact::{ActorPair, ContactSession, InteractionGraph, WeightingMode};
use crate::gpgrowth::Instance;
use crate::localizer::RoomObservation;
use crate::netstats::Partition;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn actor(i: usize) -> String {
    format!("p{i:04}")
}

fn exp_duration(rng: &mut impl Rng, min: f64, mean_extra: f64) -> i64 {
    let e = Exp::new(1.0 / mean_extra).expect("positive mean");
    (min + e.sample(rng)).round() as i64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedContacts {
    pub communities: usize,
    pub community_size: usize,
    pub p_intra: f64,
    pub p_cross: f64,
    /// Mean extra seconds above 20 for intra / cross contacts.
    pub mean_intra: f64,
    pub mean_cross: f64,
    /// Maximum sessions per contacting pair.
    pub max_sessions: usize,
}

impl Default for PlantedContacts {
    fn default() -> Self {
        Self {
            communities: 4,
            community_size: 15,
            p_intra: 0.4,
            p_cross: 0.15,
            mean_intra: 150.0,
            mean_cross: 40.0,
            max_sessions: 3,
        }
    }
}

/// Contacts among planted communities: intra-community pairs meet more
/// often and talk longer. Returns the sessions and the planted partition.
pub fn planted_contacts(seed: u64, p: PlantedContacts) -> (Vec<ContactSession>, Partition) {
    let mut rng = rng(seed);
    let n = p.communities * p.community_size;
    let partition: Partition = (0..n).map(|i| (actor(i), format!("c{}", i / p.community_size))).collect();
    let mut sessions = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let same = i / p.community_size == j / p.community_size;
            let (prob, mean) = if same { (p.p_intra, p.mean_intra) } else { (p.p_cross, p.mean_cross) };
            if !rng.random_bool(prob) {
                continue;
            }
            for _ in 0..rng.random_range(1..=p.max_sessions) {
                let start = rng.random_range(0..86_400);
                let d = exp_duration(&mut rng, 20.0, mean);
                sessions.push(ContactSession::new(&actor(i), &actor(j), start, start + d).expect("distinct actors"));
            }
        }
    }
    sessions.sort_by(|a, b| (a.start, &a.pair).cmp(&(b.start, &b.pair)));
    (sessions, partition)
}

/// Sessions with Pareto-distributed durations (minimum 20 s).
pub fn heavy_tailed_sessions(seed: u64, count: usize, actors: usize) -> Vec<ContactSession> {
    let mut rng = rng(seed);
    let pareto = rand_distr::Pareto::<f64>::new(20.0, 1.3).expect("valid pareto");
    (0..count)
        .map(|_| {
            let a = rng.random_range(0..actors);
            let mut b = rng.random_range(0..actors - 1);
            if b >= a {
                b += 1;
            }
            let start = rng.random_range(0..86_400);
            let d = pareto.sample(&mut rng).min(20_000.0) as i64;
            ContactSession::new(&actor(a), &actor(b), start, start + d).expect("distinct actors")
        })
        .collect()
}

/// Conference with participants in interest communities plus organizers
/// (many short contacts everywhere) and professors (few long contacts
/// across communities). Returns sessions, communities and roles
/// (`organizer`, `professor`, `participant`).
pub fn role_contacts(seed: u64) -> (Vec<ContactSession>, Partition, Partition) {
    let mut rng = rng(seed);
    let (groups, per_group, organizers, professors) = (6, 12, 6, 6);
    let participants = groups * per_group;
    let n = participants + organizers + professors;
    let mut communities = Partition::new();
    let mut roles = Partition::new();
    for i in 0..n {
        communities.assign(actor(i), format!("c{}", i % groups));
        let role = if i < participants {
            "participant"
        } else if i < participants + organizers {
            "organizer"
        } else {
            "professor"
        };
        roles.assign(actor(i), role);
    }
    let mut sessions = Vec::new();
    let mut add = |rng: &mut ChaCha8Rng, a: usize, b: usize, d: i64| {
        if a != b {
            let start = rng.random_range(0..86_400);
            sessions.push(ContactSession::new(&actor(a), &actor(b), start, start + d).expect("distinct"));
        }
    };
    for i in 0..participants {
        for j in i + 1..participants {
            let same = i % groups == j % groups;
            if rng.random_bool(if same { 0.5 } else { 0.02 }) {
                let d = exp_duration(&mut rng, 20.0, 50.0);
                add(&mut rng, i, j, d);
            }
        }
    }
    for o in participants..participants + organizers {
        for _ in 0..45 {
            let other = rng.random_range(0..participants);
            let d = rng.random_range(20..55);
            add(&mut rng, o, other, d);
        }
    }
    for p in participants + organizers..n {
        for _ in 0..9 {
            let other = rng.random_range(0..participants);
            let d = rng.random_range(200..600);
            add(&mut rng, p, other, d);
        }
    }
    sessions.sort_by(|a, b| (a.start, &a.pair).cmp(&(b.start, &b.pair)));
    (sessions, communities, roles)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedAttributes {
    pub actors: usize,
    pub groups: usize,
    pub noise_tags: usize,
    /// Edges per actor.
    pub degree: usize,
    /// Share of edges staying inside the actor's group.
    pub intra_share: f64,
}

impl Default for PlantedAttributes {
    fn default() -> Self {
        Self { actors: 2000, groups: 8, noise_tags: 32, degree: 10, intra_share: 0.9 }
    }
}

/// Graph whose edges follow a `group` attribute, plus independent noise
/// tags with frequencies between 5% and 35%. Integer edge weights.
pub fn planted_attribute_graph(seed: u64, p: PlantedAttributes) -> (InteractionGraph, AttributeTable) {
    let mut rng = rng(seed);
    let group_of = |i: usize| i % p.groups;
    let mut table = AttributeTable::new();
    let freqs: Vec<f64> = (0..p.noise_tags).map(|t| 0.05 + 0.3 * t as f64 / p.noise_tags.max(1) as f64).collect();
    for i in 0..p.actors {
        table.insert(actor(i), Selector::new("group", format!("g{}", group_of(i))));
        for (t, &f) in freqs.iter().enumerate() {
            if rng.random_bool(f) {
                table.insert(actor(i), Selector::new(format!("tag{t:02}"), "yes"));
            }
        }
    }
    let members: Vec<Vec<usize>> = (0..p.groups).map(|g| (0..p.actors).filter(|&i| group_of(i) == g).collect()).collect();
    let mut edges = Vec::new();
    for i in 0..p.actors {
        for _ in 0..p.degree / 2 {
            let j = if rng.random_bool(p.intra_share) {
                *members[group_of(i)].choose(&mut rng).expect("non-empty group")
            } else {
                rng.random_range(0..p.actors)
            };
            if i != j {
                edges.push((ActorPair::new(actor(i), actor(j)).expect("distinct"), rng.random_range(1..=5) as f64));
            }
        }
    }
    let names: Vec<String> = (0..p.actors).map(actor).collect();
    let graph = InteractionGraph::from_edges(WeightingMode::Count, edges, &names).expect("positive weights");
    (graph, table)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TagData {
    pub instances: usize,
    pub attributes: usize,
    /// Instances carrying `tag00` have `y = x`.
    pub plant_correlation: bool,
}

/// Binary tag data (`tagNN=1` present or absent, frequencies between 5%
/// and 40%) with two real targets that are independent standard normals,
/// except under the planted tag.
pub fn tag_instances(seed: u64, p: TagData) -> Vec<Instance> {
    let mut rng = rng(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let freqs: Vec<f64> = (0..p.attributes).map(|a| 0.4 - 0.35 * a as f64 / p.attributes.max(1) as f64).collect();
    (0..p.instances)
        .map(|_| {
            let selectors: Vec<Selector> = freqs
                .iter()
                .enumerate()
                .filter(|&(_, &f)| rng.random_bool(f))
                .map(|(a, _)| Selector::new(format!("tag{a:02}"), "1"))
                .collect();
            let x: f64 = normal.sample(&mut rng);
            let planted = p.plant_correlation && selectors.first().is_some_and(|s| s.attribute == "tag00");
            let y = if planted { x } else { normal.sample(&mut rng) };
            Instance { selectors, targets: vec![x, y] }
        })
        .collect()
}

/// Two-day contact data for link prediction. Day 1 has long intra-community
/// and short cross-community contacts; new day-2 contacts form mostly inside
/// communities.
pub fn two_day_contacts(seed: u64) -> (Vec<ContactSession>, Vec<ContactSession>) {
    let mut rng = rng(seed);
    let (groups, size) = (5, 12);
    let n = groups * size;
    let (mut day1, mut day2) = (Vec::new(), Vec::new());
    for i in 0..n {
        for j in i + 1..n {
            let same = i / size == j / size;
            let (p1, mean1, p2) = if same { (0.3, 240.0, 0.35) } else { (0.1, 30.0, 0.04) };
            if rng.random_bool(p1) {
                let start = rng.random_range(0..40_000);
                let d = exp_duration(&mut rng, 20.0, mean1);
                day1.push(ContactSession::new(&actor(i), &actor(j), start, start + d).expect("distinct"));
            }
            if rng.random_bool(p2) {
                let start = rng.random_range(86_400..126_400);
                let d = exp_duration(&mut rng, 20.0, 90.0);
                day2.push(ContactSession::new(&actor(i), &actor(j), start, start + d).expect("distinct"));
            }
        }
    }
    (day1, day2)
}

/// Pairs with a latent affinity in [0, 1) that drives both the chance and
/// the length of contacts on both days. Exactly the pairs at or above 0.1
/// meet on day 1.
pub fn recurring_contacts(seed: u64, pairs: usize) -> (Vec<ContactSession>, Vec<ContactSession>) {
    let mut rng = rng(seed);
    let (mut day1, mut day2) = (Vec::new(), Vec::new());
    let width = (pairs as f64).sqrt().ceil() as usize + 1;
    for k in 0..pairs {
        let (a, b) = (actor(k / width), format!("q{:05}", k));
        let affinity: f64 = rng.random::<f64>();
        if affinity >= 0.1 {
            let d = (20.0 + 600.0 * (affinity - 0.1) * rng.random_range(0.8..1.2)) as i64;
            day1.push(ContactSession::new(&a, &b, 0, d).expect("distinct"));
        }
        if rng.random_bool(0.1 + 0.9 * affinity) {
            let d = (20.0 + 600.0 * affinity * rng.random_range(0.8..1.2)) as i64;
            day2.push(ContactSession::new(&a, &b, 86_400, 86_400 + d).expect("distinct"));
        }
    }
    (day1, day2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomWorld {
    pub rooms: usize,
    pub agents: usize,
    /// Conversation epochs; each lasts `epoch_steps` observation steps.
    pub epochs: usize,
    pub epoch_steps: usize,
    pub step_seconds: i64,
    /// Reader strength noise (dB).
    pub sigma: f64,
    /// Labelled fingerprints per room for training.
    pub fingerprints: usize,
    pub k: usize,
    /// Probability an agent is in a conversation group in an epoch.
    pub p_grouped: f64,
}

impl Default for RoomWorld {
    fn default() -> Self {
        Self {
            rooms: 4,
            agents: 40,
            epochs: 12,
            epoch_steps: 5,
            step_seconds: 60,
            sigma: CALIBRATED_SIGMA,
            fingerprints: 40,
            k: 5,
            p_grouped: 0.75,
        }
    }
}

/// Reader noise giving a base k-NN accuracy around 84% in the default
/// room layout (found with the calibration harness in the test suite).
pub const CALIBRATED_SIGMA: f64 = 9.0;

/// Room-level signal model: one reader per room, rooms on a line, strength
/// falls by 12 dB per room of distance.
pub fn reader_signals(rng: &mut impl Rng, rooms: usize, room: usize, sigma: f64) -> Vec<(String, f64)> {
    let noise = Normal::new(0.0, sigma).expect("valid sigma");
    (0..rooms)
        .map(|r| {
            let distance = (r as f64 - room as f64).abs();
            (format!("reader{r}"), -50.0 - 12.0 * distance + noise.sample(rng))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RoomSimulation {
    pub training: Vec<RoomObservation>,
    /// Labelled test observations (ground truth rooms).
    pub observations: Vec<RoomObservation>,
    pub sessions: Vec<ContactSession>,
}

fn room_name(r: usize) -> String {
    format!("room{r}")
}

/// Agents move between rooms and talk in small groups of co-located agents.
pub fn room_simulation(seed: u64, w: RoomWorld) -> RoomSimulation {
    let mut rng = rng(seed);
    let mut training = Vec::new();
    for room in 0..w.rooms {
        for f in 0..w.fingerprints {
            training.push(RoomObservation {
                actor: format!("survey{f}"),
                time: 0,
                signals: reader_signals(&mut rng, w.rooms, room, w.sigma),
                room: Some(room_name(room)),
            });
        }
    }
    let mut location: Vec<usize> = (0..w.agents).map(|_| rng.random_range(0..w.rooms)).collect();
    let mut observations = Vec::new();
    let mut sessions = Vec::new();
    let epoch_len = w.epoch_steps as i64 * w.step_seconds;
    for e in 0..w.epochs {
        for loc in location.iter_mut() {
            if rng.random_bool(0.3) {
                *loc = rng.random_range(0..w.rooms);
            }
        }
        let t0 = e as i64 * epoch_len;
        for room in 0..w.rooms {
            let mut present: Vec<usize> = (0..w.agents).filter(|&a| location[a] == room && rng.random_bool(w.p_grouped)).collect();
            present.shuffle(&mut rng);
            for group in present.chunks(rng.random_range(3..=4)) {
                if group.len() < 2 {
                    continue;
                }
                for (x, &a) in group.iter().enumerate() {
                    for &b in &group[x + 1..] {
                        let end = t0 + (w.epoch_steps as i64 - 1) * w.step_seconds;
                        sessions.push(ContactSession::new(&actor(a), &actor(b), t0, end).expect("distinct"));
                    }
                }
            }
        }
        for s in 0..w.epoch_steps {
            let t = t0 + s as i64 * w.step_seconds;
            for (a, &room) in location.iter().enumerate() {
                observations.push(RoomObservation {
                    actor: actor(a),
                    time: t,
                    signals: reader_signals(&mut rng, w.rooms, room, w.sigma),
                    room: Some(room_name(room)),
                });
            }
        }
    }
    sessions.sort_by(|a, b| (a.start, &a.pair).cmp(&(b.start, &b.pair)));
    RoomSimulation { training, observations, sessions }
}

/// Noise for [`two_room_fingerprints`] giving base accuracy around 84%
/// with 200 training fingerprints per room.
pub const TWO_ROOM_SIGMA: f64 = 7.5;

/// Two-room fingerprint data for noise calibration: `(training, held_out)`.
pub fn two_room_fingerprints(seed: u64, sigma: f64, train_per_room: usize, test_per_room: usize) -> (Vec<RoomObservation>, Vec<RoomObservation>) {
    let mut rng = rng(seed);
    let mut make = |n: usize, prefix: &str| {
        let mut out = Vec::new();
        for room in 0..2 {
            for i in 0..n {
                out.push(RoomObservation {
                    actor: format!("{prefix}{room}_{i}"),
                    time: i as i64,
                    signals: reader_signals(&mut rng, 2, room, sigma),
                    room: Some(room_name(room)),
                });
            }
        }
        out
    };
    let train = make(train_per_room, "t");
    let test = make(test_per_room, "h");
    (train, test)
}
