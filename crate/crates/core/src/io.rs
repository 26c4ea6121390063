//! CSV file formats.
//!
//! | file         | columns                                               |
//! |--------------|-------------------------------------------------------|
//! | events       | `actor_a,actor_b,time[,strength]`                     |
//! | sessions     | `actor_a,actor_b,start,end,duration`                  |
//! | attributes   | `actor,attribute,value`                               |
//! | graph        | `actor_a,actor_b,weight` + `<file>.meta` sidecar       |
//! | changes      | `developer,path,lines_added,lines_removed,commit_time` |
//! | observations | `actor,time,reader,strength[,room]`                   |
//! | emm data     | selector columns plus numeric target columns          |

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attributes::{AttributeTable, Selector};
use crate::contact::{ActorPair, ContactSession, InteractionGraph, ProximityEvent, WeightingMode};
use crate::error::{Error, Result};
use crate::expertrank::ChangeRecord;
use crate::gpgrowth::Instance;
use crate::localizer::RoomObservation;

/// Version of every file layout and JSON document this crate family emits.
pub const FORMAT_VERSION: u32 = 1;

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(false).from_reader(r)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Whole seconds; fractional inputs are truncated.
fn seconds(raw: &str) -> Result<i64> {
    if let Ok(v) = raw.parse::<i64>() {
        return Ok(v);
    }
    let v: f64 = raw.parse().map_err(|_| Error::Parse(format!("`{raw}` is not a time in seconds")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("`{raw}` is not a time in seconds")));
    }
    Ok(v.trunc() as i64)
}

#[derive(Deserialize)]
struct EventRow {
    actor_a: String,
    actor_b: String,
    time: String,
    #[serde(default)]
    strength: Option<f64>,
}

pub fn read_events<R: Read>(r: R) -> Result<Vec<ProximityEvent>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(r);
    let mut out = Vec::new();
    for row in rd.deserialize::<EventRow>() {
        let row = row?;
        let time = seconds(&row.time)?;
        if time < 0 {
            return Err(Error::Validation(format!("negative event time {time}")));
        }
        out.push(ProximityEvent { pair: ActorPair::new(row.actor_a, row.actor_b)?, time, strength: row.strength });
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct SessionRow {
    actor_a: String,
    actor_b: String,
    start: i64,
    end: i64,
    duration: i64,
}

pub fn write_sessions<W: Write>(w: W, sessions: &[ContactSession]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for s in sessions {
        wr.serialize(SessionRow {
            actor_a: s.pair.first().into(),
            actor_b: s.pair.second().into(),
            start: s.start,
            end: s.end,
            duration: s.duration(),
        })?;
    }
    if sessions.is_empty() {
        wr.write_record(["actor_a", "actor_b", "start", "end", "duration"])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_sessions<R: Read>(r: R) -> Result<Vec<ContactSession>> {
    let mut out = Vec::new();
    for row in reader(r).deserialize::<SessionRow>() {
        let row = row?;
        let s = ContactSession::new(&row.actor_a, &row.actor_b, row.start, row.end)?;
        if s.duration() != row.duration {
            return Err(Error::Validation(format!("session {} duration {} != end - start", s.pair, row.duration)));
        }
        out.push(s);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct AttributeRow {
    actor: String,
    attribute: String,
    value: String,
}

pub fn read_attributes<R: Read>(r: R) -> Result<AttributeTable> {
    let mut t = AttributeTable::new();
    for row in reader(r).deserialize::<AttributeRow>() {
        let row = row?;
        if row.attribute.is_empty() {
            t.touch(row.actor);
        } else {
            t.insert(row.actor, Selector::new(row.attribute, row.value));
        }
    }
    Ok(t)
}

pub fn write_attributes<W: Write>(w: W, table: &AttributeTable) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["actor", "attribute", "value"])?;
    for (actor, sels) in table.actors() {
        for s in sels {
            wr.write_record([actor, &s.attribute, &s.value])?;
        }
    }
    wr.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct EdgeRow {
    actor_a: String,
    actor_b: String,
    weight: f64,
}

pub fn write_graph_csv<W: Write>(w: W, graph: &InteractionGraph) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["actor_a", "actor_b", "weight"])?;
    for (pair, weight) in graph.named_edges() {
        wr.write_record([pair.first(), pair.second(), &weight.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_graph_csv<R: Read>(r: R, mode: WeightingMode) -> Result<InteractionGraph> {
    let mut edges = Vec::new();
    for row in reader(r).deserialize::<EdgeRow>() {
        let row = row?;
        edges.push((ActorPair::new(row.actor_a, row.actor_b)?, row.weight));
    }
    InteractionGraph::from_edges(mode, edges, &[] as &[&str])
}

/// Sidecar path holding the weighting-mode line.
pub fn graph_meta_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".meta");
    PathBuf::from(p)
}

pub fn write_graph(path: &Path, graph: &InteractionGraph) -> Result<()> {
    write_graph_csv(create(path)?, graph)?;
    let mut meta = create(&graph_meta_path(path))?;
    writeln!(meta, "format_version = {FORMAT_VERSION}")?;
    writeln!(meta, "weighting_mode = {}", graph.mode())?;
    Ok(())
}

/// Reads a graph file; without a sidecar the mode defaults to DURATION.
pub fn read_graph(path: &Path) -> Result<InteractionGraph> {
    let meta = graph_meta_path(path);
    let mode = if meta.exists() {
        let text = std::fs::read_to_string(&meta)?;
        text.lines()
            .filter_map(|l| l.split_once('='))
            .find(|(k, _)| k.trim() == "weighting_mode")
            .map(|(_, v)| v.trim().parse())
            .transpose()?
            .unwrap_or(WeightingMode::Duration)
    } else {
        WeightingMode::Duration
    };
    read_graph_csv(open(path)?, mode)
}

pub fn read_changes<R: Read>(r: R) -> Result<Vec<ChangeRecord>> {
    reader(r).deserialize::<ChangeRecord>().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Deserialize)]
struct ObservationRow {
    actor: String,
    time: String,
    reader: String,
    strength: f64,
    #[serde(default)]
    room: Option<String>,
}

/// Groups long-format readings into one observation per `(actor, time)`,
/// ordered by time then actor.
pub fn read_observations<R: Read>(r: R) -> Result<Vec<RoomObservation>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(r);
    let mut grouped: BTreeMap<(i64, String), RoomObservation> = BTreeMap::new();
    for row in rd.deserialize::<ObservationRow>() {
        let row = row?;
        let time = seconds(&row.time)?;
        let room = row.room.filter(|r| !r.is_empty());
        let entry = grouped.entry((time, row.actor.clone())).or_insert_with(|| RoomObservation {
            actor: row.actor.clone(),
            time,
            signals: Vec::new(),
            room: room.clone(),
        });
        if entry.room != room {
            return Err(Error::Validation(format!("conflicting room labels for `{}` at {time}", row.actor)));
        }
        entry.signals.push((row.reader, row.strength));
    }
    Ok(grouped.into_values().collect())
}

pub fn write_observations<W: Write>(w: W, observations: &[RoomObservation]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["actor", "time", "reader", "strength", "room"])?;
    for o in observations {
        for (reader, s) in &o.signals {
            wr.write_record([o.actor.as_str(), &o.time.to_string(), reader, &s.to_string(), o.room.as_deref().unwrap_or("")])?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn write_predictions<W: Write>(w: W, predictions: &[crate::localizer::RoomPrediction]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for p in predictions {
        wr.serialize(p)?;
    }
    wr.flush()?;
    Ok(())
}

/// Instances from a table whose `targets` columns are numeric and every
/// other column is a selector attribute. Empty cells carry no selector.
pub fn read_instances<R: Read, S: AsRef<str>>(r: R, targets: &[S]) -> Result<Vec<Instance>> {
    let mut rd = reader(r);
    let headers = rd.headers()?.clone();
    let target_cols: Vec<usize> = targets
        .iter()
        .map(|t| {
            headers
                .iter()
                .position(|h| h == t.as_ref())
                .ok_or_else(|| Error::Validation(format!("target column `{}` not found", t.as_ref())))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let mut tv = Vec::with_capacity(target_cols.len());
        for &c in &target_cols {
            let raw = &rec[c];
            tv.push(raw.parse::<f64>().map_err(|_| Error::Parse(format!("`{raw}` in column `{}` is not numeric", &headers[c])))?);
        }
        let selectors = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| !target_cols.contains(i))
            .filter(|&(i, _)| !rec[i].is_empty())
            .map(|(i, h)| Selector::new(h, &rec[i]))
            .collect();
        out.push(Instance { selectors, targets: tv });
    }
    Ok(out)
}

/// Writes instances with one column per attribute and the given target names.
pub fn write_instances<W: Write, S: AsRef<str>>(w: W, instances: &[Instance], targets: &[S]) -> Result<()> {
    let mut attributes: Vec<&str> = instances.iter().flat_map(|i| i.selectors.iter().map(|s| s.attribute.as_str())).collect();
    attributes.sort_unstable();
    attributes.dedup();
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = attributes.clone();
    header.extend(targets.iter().map(AsRef::as_ref));
    wr.write_record(&header)?;
    for inst in instances {
        let mut row: Vec<String> = attributes
            .iter()
            .map(|a| inst.selectors.iter().find(|s| s.attribute == *a).map(|s| s.value.clone()).unwrap_or_default())
            .collect();
        row.extend(inst.targets.iter().map(f64::to_string));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_path<T>(path: &Path, parse: impl FnOnce(File) -> Result<T>) -> Result<T> {
    parse(open(path)?)
}

pub fn write_path(path: &Path, emit: impl FnOnce(File) -> Result<()>) -> Result<()> {
    emit(create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_with_optional_strength_and_fractional_time() {
        let text = "actor_a,actor_b,time,strength\nb,a,10.7,0.5\na,c,11,\n";
        let ev = read_events(text.as_bytes()).unwrap();
        assert_eq!(ev[0].pair, ActorPair::new("a", "b").unwrap());
        assert_eq!(ev[0].time, 10);
        assert_eq!(ev[0].strength, Some(0.5));
        assert_eq!(ev[1].strength, None);
        let short = "actor_a,actor_b,time\na,b,3\n";
        assert_eq!(read_events(short.as_bytes()).unwrap().len(), 1);
        assert!(read_events("actor_a,actor_b,time\na,a,3\n".as_bytes()).is_err());
    }

    #[test]
    fn sessions_round_trip() {
        let s = vec![ContactSession::new("a", "b", 0, 40).unwrap(), ContactSession::new("a", "c", 5, 70).unwrap()];
        let mut buf = Vec::new();
        write_sessions(&mut buf, &s).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("actor_a,actor_b,start,end,duration\na,b,0,40,40\n"));
        assert_eq!(read_sessions(buf.as_slice()).unwrap(), s);
        assert!(read_sessions("actor_a,actor_b,start,end,duration\na,b,0,40,41\n".as_bytes()).is_err());
    }

    #[test]
    fn observations_group_by_actor_and_time() {
        let text = "actor,time,reader,strength,room\nu,5,r1,-50,hall\nu,5,r2,-70,hall\nv,5,r1,-60,\n";
        let obs = read_observations(text.as_bytes()).unwrap();
        assert_eq!(obs.len(), 2);
        assert_eq!(obs[0].signals.len(), 2);
        assert_eq!(obs[0].room.as_deref(), Some("hall"));
        assert_eq!(obs[1].room, None);
    }

    #[test]
    fn instances_split_selectors_and_targets() {
        let text = "color,tag,x,y\nred,,1,2\nblue,t,3,4\n";
        let inst = read_instances(text.as_bytes(), &["x", "y"]).unwrap();
        assert_eq!(inst[0].selectors, vec![Selector::new("color", "red")]);
        assert_eq!(inst[1].targets, vec![3.0, 4.0]);
        assert!(read_instances(text.as_bytes(), &["z"]).is_err());
    }

    #[test]
    fn graph_file_with_sidecar() {
        let dir = std::env::temp_dir().join(format!("sinet-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("g.csv");
        let g = InteractionGraph::from_edges(
            WeightingMode::Count,
            vec![(ActorPair::new("a", "b").unwrap(), 2.0)],
            &[] as &[&str],
        )
        .unwrap();
        write_graph(&path, &g).unwrap();
        let back = read_graph(&path).unwrap();
        assert_eq!(back, g);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
