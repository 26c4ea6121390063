//! `sinet` command line: one subcommand per analysis, a JSONL run ledger,
//! and a JSON service for interactive exploration.
//!
//! Exit status is 0 on success, 2 on usage errors and 1 on anything the
//! analysis rejects; the latter prints one JSON line to stderr.

pub mod client;
pub mod config;
pub mod engine;
pub mod ledger;
pub mod service;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sinet_core::contact::{build_graph, sessionize, SessionRules};
use sinet_core::expertrank::{build_expert_graph, rank_developers, ExpertGraphParams, LineMetric, RankParams};
use sinet_core::io::{self, FORMAT_VERSION};
use sinet_core::linkpred::{duration_bucket_analysis, evaluate, DurationBucket, LinkMeasure, PredictionTask, TaskKind};
use sinet_core::localizer::{accuracy, social_boost, train_base, BoostStrategy};
use sinet_core::netstats::{ambassadors, community_quality, cumulative_contact_lengths, partition_quality, AmbassadorParams, CommunityMeasure};
use sinet_core::{Error, WeightingMode};

use crate::config::Settings;
use crate::engine::{Bundle, CommunityParams, EmmParams, MineRequest};
use crate::ledger::{RunRecord, RunStatus};

#[derive(Debug, Parser)]
#[command(name = "sinet", version, about = "Social interaction network analysis")]
struct Cli {
    /// `key = value` settings file (also SINET_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run ledger file; overrides settings.
    #[arg(long, global = true)]
    ledger: Option<PathBuf>,
    /// Do not record the run.
    #[arg(long, global = true)]
    no_ledger: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Proximity events to contact sessions.
    Sessionize {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Longest pause (s) inside one contact.
        #[arg(long, default_value_t = 60)]
        gap: i64,
        #[arg(long, default_value_t = 20)]
        min_duration: i64,
    },
    /// Contact sessions to a weighted graph (`<out>` plus `<out>.meta`).
    BuildGraph {
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// count, duration or duration_normalized.
        #[arg(long, default_value = "duration")]
        weighting: String,
        /// Drop sessions shorter than this (s).
        #[arg(long, default_value_t = 0)]
        min_duration: i64,
    },
    /// Graph summary, partition quality, ambassadors, contact lengths.
    Stats {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, requires = "attribute")]
        attributes: Option<PathBuf>,
        /// Attribute whose values define the partition.
        #[arg(long, requires = "attributes")]
        attribute: Option<String>,
        #[arg(long)]
        sessions: Option<PathBuf>,
        #[arg(long, default_value_t = 0.8)]
        degree_quantile: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Top-k description-based communities.
    Communities {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        attributes: PathBuf,
        #[command(flatten)]
        params: CommunityArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exceptional model mining over an instance table.
    Emm {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        params: EmmArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Link prediction on a train/test split of contact sessions.
    Linkpred {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// new or recurring.
        #[arg(long, default_value = "new")]
        kind: String,
        #[arg(long, default_value = "duration")]
        weighting: String,
        /// Comma-separated measure names; all by default.
        #[arg(long, value_delimiter = ',')]
        measures: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "10")]
        precision_at: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        min_positive: i64,
        /// Training-duration bucket bounds for the recurring-duration analysis.
        #[arg(long, value_delimiter = ',')]
        buckets: Vec<i64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Developer familiarity ranking for a resource path.
    Expertrank {
        #[arg(long)]
        changes: PathBuf,
        #[arg(long)]
        sessions: Option<PathBuf>,
        #[arg(long, default_value = "")]
        query: String,
        #[arg(long, default_value_t = sinet_core::expertrank::DEFAULT_KAPPA)]
        kappa: f64,
        #[arg(long, default_value_t = sinet_core::expertrank::DEFAULT_WINDOW)]
        window: i64,
        #[arg(long, default_value_t = 0.85)]
        damping: f64,
        /// Count added lines only.
        #[arg(long)]
        added_only: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Room-level localization, optionally boosted by contacts.
    Localize {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        observations: PathBuf,
        #[arg(long)]
        sessions: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// majority, confidence or duration.
        #[arg(long, default_value = "majority")]
        strategy: String,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// JSON service over a data directory.
    Serve {
        /// Holds graph.csv, attributes.csv and optionally instances.csv.
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        host: Option<String>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct CommunityArgs {
    /// modularity, segregation or conductance.
    #[arg(long, default_value = "modularity")]
    measure: String,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    min_size: usize,
    #[arg(long, default_value_t = 3)]
    max_depth: usize,
    /// Plain exhaustive search.
    #[arg(long)]
    no_pruning: bool,
}

#[derive(Debug, Args)]
struct EmmArgs {
    /// frequency, mean, variance, correlation or slope.
    #[arg(long, default_value = "mean")]
    class: String,
    #[arg(long, value_delimiter = ',')]
    targets: Vec<String>,
    #[arg(long, default_value_t = 10)]
    min_support: u64,
    #[arg(long, default_value_t = 2)]
    max_depth: usize,
    #[arg(long, conflicts_with = "threshold")]
    top_k: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
}

/// Error kind for the machine-readable error line.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Validation(_) => "validation",
        Error::Ordering { .. } => "ordering",
        Error::Domain(_) => "domain",
        Error::Undefined(_) => "undefined",
        Error::UnknownActor(_) => "unknown_actor",
        Error::ClassMismatch(_) => "class_mismatch",
        Error::Evaluation(_) => "evaluation",
        Error::Training(_) => "training",
        Error::Convergence { .. } => "convergence",
        Error::Parse(_) => "parse",
        Error::Csv(_) => "csv",
        Error::Io(_) => "io",
    }
}

pub fn error_line(e: &Error) -> String {
    json!({"format_version": FORMAT_VERSION, "error": {"kind": error_kind(e), "message": e.to_string()}}).to_string()
}

/// Collects what the ledger needs while a command runs.
struct Ctx {
    record: RunRecord,
    /// Digests by role, embedded in JSON artifacts.
    roles: BTreeMap<String, String>,
}

impl Ctx {
    fn param(&mut self, key: &str, value: impl serde::Serialize) {
        self.record.parameters.insert(key.into(), serde_json::to_value(value).expect("serializable"));
    }

    fn input(&mut self, role: &str, path: &Path) -> Result<Vec<u8>, Error> {
        let bytes = std::fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        let d = ledger::digest(&bytes);
        self.record.inputs.insert(path.display().to_string(), d.clone());
        self.roles.insert(role.into(), d);
        Ok(bytes)
    }
}

enum Output {
    /// Bytes for `--out` or stdout.
    Artifact(Option<PathBuf>, Vec<u8>),
    /// Already written to disk by the command.
    Written(PathBuf),
}

/// Runs with the process environment and standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(args, |k| std::env::var(k).ok(), &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(args: I, env: impl Fn(&str) -> Option<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    let config = cli.config.clone().or_else(|| env("SINET_CONFIG").map(PathBuf::from));
    let mut settings = match Settings::load(config.as_deref(), &env) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_line(&e));
            return 1;
        }
    };
    if let Some(l) = cli.ledger {
        settings.ledger = Some(l);
    }
    if cli.no_ledger {
        settings.ledger = None;
    }

    if let Command::Serve { data_dir, host, port, workers } = cli.command {
        return serve(data_dir, host, port, workers, settings, stdout, stderr);
    }

    let name = command_name(&cli.command);
    let mut ctx = Ctx { record: RunRecord::new(ledger::new_run_id(name), name), roles: BTreeMap::new() };
    let result = execute(cli.command, &mut ctx).and_then(|out| finish(out, &mut ctx, stdout));
    let code = match &result {
        Ok(()) => {
            ctx.record.status = RunStatus::Done;
            0
        }
        Err(e) => {
            ctx.record.status = RunStatus::Failed;
            ctx.record.error = Some(e.to_string());
            let _ = writeln!(stderr, "{}", error_line(e));
            1
        }
    };
    ctx.record.timestamp = ledger::now();
    if let Some(path) = &settings.ledger {
        if let Err(e) = ledger::append(path, &ctx.record) {
            let _ = writeln!(stderr, "{}", error_line(&Error::Io(e)));
            return 1;
        }
    }
    code
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Sessionize { .. } => "sessionize",
        Command::BuildGraph { .. } => "build-graph",
        Command::Stats { .. } => "stats",
        Command::Communities { .. } => "communities",
        Command::Emm { .. } => "emm",
        Command::Linkpred { .. } => "linkpred",
        Command::Expertrank { .. } => "expertrank",
        Command::Localize { .. } => "localize",
        Command::Serve { .. } => "serve",
    }
}

fn finish(out: Output, ctx: &mut Ctx, stdout: &mut dyn Write) -> Result<(), Error> {
    let (path, digest) = match out {
        Output::Artifact(None, bytes) => {
            ctx.record.output_digest = Some(ledger::digest(&bytes));
            stdout.write_all(&bytes)?;
            return Ok(());
        }
        Output::Artifact(Some(path), bytes) => {
            std::fs::write(&path, &bytes).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
            (path, ledger::digest(&bytes))
        }
        Output::Written(path) => {
            let d = ledger::digest(&std::fs::read(&path)?);
            (path, d)
        }
    };
    ctx.record.output = Some(path.display().to_string());
    ctx.record.output_digest = Some(digest.clone());
    let summary = json!({
        "format_version": FORMAT_VERSION,
        "run_id": ctx.record.run_id,
        "command": ctx.record.command,
        "output": path.display().to_string(),
        "output_digest": digest,
    });
    writeln!(stdout, "{summary}")?;
    Ok(())
}

fn csv_bytes(emit: impl FnOnce(&mut Vec<u8>) -> Result<(), Error>) -> Result<Vec<u8>, Error> {
    let mut buf = Vec::new();
    emit(&mut buf)?;
    Ok(buf)
}

fn execute(command: Command, ctx: &mut Ctx) -> Result<Output, Error> {
    match command {
        Command::Sessionize { events, out, gap, min_duration } => {
            ctx.param("gap", gap);
            ctx.param("min_duration", min_duration);
            let ev = io::read_events(ctx.input("events", &events)?.as_slice())?;
            let sessions = sessionize(&ev, SessionRules { open_gap: gap, min_duration })?;
            Ok(Output::Artifact(out, csv_bytes(|b| io::write_sessions(b, &sessions))?))
        }
        Command::BuildGraph { sessions, out, weighting, min_duration } => {
            let mode: WeightingMode = weighting.parse()?;
            ctx.param("weighting", mode.to_string());
            ctx.param("min_duration", min_duration);
            let s = io::read_sessions(ctx.input("sessions", &sessions)?.as_slice())?;
            io::write_graph(&out, &build_graph(&s, mode, min_duration))?;
            Ok(Output::Written(out))
        }
        Command::Stats { graph, attributes, attribute, sessions, degree_quantile, out } => {
            ctx.param("degree_quantile", degree_quantile);
            ctx.input("graph", &graph)?;
            let g = io::read_graph(&graph)?;
            let mut doc = json!({
                "format_version": FORMAT_VERSION,
                "command": "stats",
                "graph": {
                    "nodes": g.node_count(),
                    "edges": g.edge_count(),
                    "total_weight": g.total_weight(),
                    "weighting_mode": g.mode().to_string(),
                },
            });
            if let (Some(path), Some(attr)) = (attributes, attribute) {
                ctx.param("attribute", &attr);
                let table = io::read_attributes(ctx.input("attributes", &path)?.as_slice())?;
                let partition = table.partition_by(&attr);
                if partition.is_empty() {
                    return Err(Error::Validation(format!("no actor has attribute `{attr}`")));
                }
                let overall: BTreeMap<String, Option<f64>> = CommunityMeasure::ALL
                    .iter()
                    .map(|&m| (m.to_string(), partition_quality(&g, &partition, m).ok()))
                    .collect();
                let communities: Vec<Value> = partition
                    .communities()
                    .iter()
                    .map(|(c, members)| {
                        let members: Vec<&str> = members.iter().copied().filter(|a| g.node_index(a).is_some()).collect();
                        let mut v = json!({"community": c, "size": members.len()});
                        for m in CommunityMeasure::ALL {
                            v[m.to_string()] = json!(community_quality(&g, &members, m).ok().map(|s| s.value));
                        }
                        v
                    })
                    .collect();
                let params = AmbassadorParams { degree_quantile, ..AmbassadorParams::default() };
                doc["partition"] = json!({
                    "attribute": attr,
                    "quality": overall,
                    "communities": communities,
                    "ambassadors": ambassadors(&g, &partition, params)?,
                });
            }
            if let Some(path) = sessions {
                let s = io::read_sessions(ctx.input("sessions", &path)?.as_slice())?;
                doc["cumulative_lengths"] = json!(cumulative_contact_lengths(&s));
            }
            doc["inputs"] = json!(ctx.roles);
            Ok(Output::Artifact(out, engine::render(&doc)))
        }
        Command::Communities { graph, attributes, params, out } => {
            let p = CommunityParams {
                measure: params.measure,
                k: params.k,
                min_size: params.min_size,
                max_depth: params.max_depth,
                pruning: !params.no_pruning,
            };
            mine_command(ctx, MineRequest::Communities(p), Some(&graph), Some(&attributes), None, out)
        }
        Command::Emm { data, params, out } => {
            let p = EmmParams {
                class: params.class,
                targets: params.targets,
                min_support: params.min_support,
                max_depth: params.max_depth,
                top_k: params.top_k,
                threshold: params.threshold,
            };
            mine_command(ctx, MineRequest::Emm(p), None, None, Some(&data), out)
        }
        Command::Linkpred { train, test, kind, weighting, measures, precision_at, min_positive, buckets, out } => {
            let kind: TaskKind = kind.parse()?;
            let mode: WeightingMode = weighting.parse()?;
            let measures: Vec<LinkMeasure> = if measures.is_empty() {
                LinkMeasure::ALL.to_vec()
            } else {
                measures.iter().map(|m| m.parse()).collect::<Result<_, _>>()?
            };
            ctx.param("kind", kind);
            ctx.param("weighting", mode.to_string());
            ctx.param("measures", measures.iter().map(|m| m.name()).collect::<Vec<_>>());
            ctx.param("precision_at", &precision_at);
            ctx.param("min_positive", min_positive);
            ctx.param("buckets", &buckets);
            let tr = io::read_sessions(ctx.input("train", &train)?.as_slice())?;
            let te = io::read_sessions(ctx.input("test", &test)?.as_slice())?;
            let task = PredictionTask::from_sessions(&tr, &te, kind, mode, min_positive);
            let mut results = Vec::new();
            for m in &measures {
                let e = evaluate(&task, *m, &precision_at)?;
                results.push(json!({"measure": m.name(), "auc": e.auc, "precision_at": e.precision_at}));
            }
            let mut doc = json!({
                "format_version": FORMAT_VERSION,
                "command": "linkpred",
                "parameters": ctx.record.parameters,
                "test_pairs": task.test_pairs.len(),
                "positives": task.test_pairs.iter().filter(|t| t.positive).count(),
                "measures": results,
            });
            if !buckets.is_empty() {
                let b = DurationBucket::from_bounds(&buckets)?;
                let dist: Vec<Value> = duration_bucket_analysis(&tr, &te, &b)?
                    .iter()
                    .map(|d| {
                        let deciles: Vec<Option<f64>> = (1..10).map(|i| d.quantile(i as f64 / 10.0)).collect();
                        json!({"label": d.label, "pairs": d.durations.len(), "deciles": deciles})
                    })
                    .collect();
                doc["buckets"] = json!(dist);
            }
            doc["inputs"] = json!(ctx.roles);
            Ok(Output::Artifact(out, engine::render(&doc)))
        }
        Command::Expertrank { changes, sessions, query, kappa, window, damping, added_only, out } => {
            let metric = if added_only { LineMetric::AddedOnly } else { LineMetric::AddedAndRemoved };
            let params = ExpertGraphParams { kappa, window, metric };
            ctx.param("query", &query);
            ctx.param("graph", params);
            ctx.param("damping", damping);
            let ch = io::read_changes(ctx.input("changes", &changes)?.as_slice())?;
            let s = match sessions {
                Some(p) => io::read_sessions(ctx.input("sessions", &p)?.as_slice())?,
                None => Vec::new(),
            };
            let g = build_expert_graph(&ch, &s, params)?;
            let ranking = rank_developers(&g, &query, RankParams { damping, ..RankParams::default() })?;
            let ranking: Vec<Value> = ranking.iter().map(|(d, s)| json!({"developer": d, "score": s})).collect();
            let doc = json!({
                "format_version": FORMAT_VERSION,
                "command": "expertrank",
                "parameters": ctx.record.parameters,
                "ranking": ranking,
                "inputs": ctx.roles,
            });
            Ok(Output::Artifact(out, engine::render(&doc)))
        }
        Command::Localize { train, observations, sessions, k, strategy, alpha, out } => {
            let strategy: BoostStrategy = strategy.parse()?;
            if !(alpha >= 0.0 && alpha.is_finite()) {
                return Err(Error::Validation(format!("alpha {alpha} must be a non-negative number")));
            }
            ctx.param("k", k);
            ctx.param("strategy", strategy);
            ctx.param("alpha", alpha);
            let tr = io::read_observations(ctx.input("train", &train)?.as_slice())?;
            let obs = io::read_observations(ctx.input("observations", &observations)?.as_slice())?;
            let model = train_base(&tr, k)?;
            let base = obs.iter().map(|o| model.predict(o)).collect::<Result<Vec<_>, _>>()?;
            let s = match sessions {
                Some(p) => io::read_sessions(ctx.input("sessions", &p)?.as_slice())?,
                None => Vec::new(),
            };
            let boosted = social_boost(&base, &s, strategy, alpha);
            let predictions: Vec<Value> = base
                .iter()
                .zip(&boosted)
                .map(|(b, p)| json!({"actor": p.actor, "time": p.time, "room": p.room, "confidence": p.confidence, "base_room": b.room}))
                .collect();
            let mut doc = json!({
                "format_version": FORMAT_VERSION,
                "command": "localize",
                "parameters": ctx.record.parameters,
                "predictions": predictions,
            });
            if obs.iter().any(|o| o.room.is_some()) {
                doc["accuracy"] = json!({"base": accuracy(&base, &obs), "boosted": accuracy(&boosted, &obs)});
            }
            doc["inputs"] = json!(ctx.roles);
            Ok(Output::Artifact(out, engine::render(&doc)))
        }
        Command::Serve { .. } => unreachable!("handled before dispatch"),
    }
}

fn mine_command(
    ctx: &mut Ctx,
    request: MineRequest,
    graph: Option<&Path>,
    attributes: Option<&Path>,
    instances: Option<&Path>,
    out: Option<PathBuf>,
) -> Result<Output, Error> {
    request.validate()?;
    if let Value::Object(p) = serde_json::to_value(&request).expect("serializable")["parameters"].clone() {
        ctx.record.parameters = p.into_iter().collect();
    }
    for (role, path) in [("graph", graph), ("attributes", attributes), ("instances", instances)] {
        if let Some(p) = path {
            ctx.input(role, p)?;
        }
    }
    let bundle = Bundle::load(graph, attributes, instances)?;
    Ok(Output::Artifact(out, engine::run(&bundle, &request)?))
}

fn serve(
    data_dir: PathBuf,
    host: Option<String>,
    port: Option<u16>,
    workers: Option<usize>,
    settings: Settings,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let fail = |stderr: &mut dyn Write, e: &Error| {
        let _ = writeln!(stderr, "{}", error_line(e));
        1
    };
    if workers == Some(0) {
        return fail(stderr, &Error::Validation("workers must be at least 1".into()));
    }
    let bundle = match Bundle::from_dir(&data_dir) {
        Ok(b) => b,
        Err(e) => return fail(stderr, &e),
    };
    let addr = format!("{}:{}", host.unwrap_or(settings.host), port.unwrap_or(settings.port));
    let options = service::ServiceOptions { workers: workers.unwrap_or(settings.workers), ledger: settings.ledger };
    let result = service::serve_blocking(bundle, options, &addr, |bound| {
        let _ = writeln!(stdout, "{}", json!({"format_version": FORMAT_VERSION, "listening": bound.to_string()}));
        let _ = stdout.flush();
    });
    match result {
        Ok(()) => 0,
        Err(e) => fail(stderr, &Error::Io(e)),
    }
}
