//! Scripted event traces (`.scn.json`) and the notice logs (`.nlog.jsonl`)
//! produced by replaying them through the engine.
//!
//! Scenario timestamps are virtual milliseconds from scenario start. The
//! engine only ever sees those timestamps, so the log is the same whether
//! the run is instant or paced against the wall clock; the only difference
//! is the optional `wall_elapsed_ms` field on each line.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cube::CubeState;
use crate::engine::{CollectionEvent, EngineError, EngineState};
use crate::profile::DeviceId;
use crate::registry::Registry;
use crate::taxonomy::DataCategory;

pub const SCENARIO_EXTENSION: &str = ".scn.json";
pub const NOTICE_LOG_EXTENSION: &str = ".nlog.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("malformed scenario at line {line}, column {column}: {message}")]
    MalformedDocument {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("event {index}: t_ms {found} is earlier than the previous event's {previous}")]
    TimestampsOutOfOrder { index: usize, previous: u64, found: u64 },
    #[error("event {index}: device `{device_id}` is not listed in profile_refs")]
    UnknownDeviceRef { index: usize, device_id: String },
    #[error("profile_refs: {0}")]
    InvalidProfileRef(String),
    #[error("event {index}: {reason}")]
    InvalidEvent { index: usize, reason: String },
}

impl From<serde_json::Error> for ScenarioError {
    fn from(err: serde_json::Error) -> Self {
        ScenarioError::MalformedDocument {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

/// One scripted step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ScenarioEvent {
    Start {
        t_ms: u64,
        device_id: DeviceId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        categories: Option<BTreeSet<DataCategory>>,
    },
    Stop {
        t_ms: u64,
        device_id: DeviceId,
    },
    Focus {
        t_ms: u64,
        device_id: Option<DeviceId>,
    },
}

impl ScenarioEvent {
    pub fn t_ms(&self) -> u64 {
        match self {
            ScenarioEvent::Start { t_ms, .. }
            | ScenarioEvent::Stop { t_ms, .. }
            | ScenarioEvent::Focus { t_ms, .. } => *t_ms,
        }
    }

    pub fn device_id(&self) -> Option<&DeviceId> {
        match self {
            ScenarioEvent::Start { device_id, .. } | ScenarioEvent::Stop { device_id, .. } => {
                Some(device_id)
            }
            ScenarioEvent::Focus { device_id, .. } => device_id.as_ref(),
        }
    }

    pub fn apply_to(&self, engine: &mut EngineState) -> Result<(), EngineError> {
        match self {
            ScenarioEvent::Start {
                t_ms,
                device_id,
                categories,
            } => engine.apply_event(&CollectionEvent {
                categories: categories.clone(),
                ..CollectionEvent::start(device_id.clone(), *t_ms)
            }),
            ScenarioEvent::Stop { t_ms, device_id } => {
                engine.apply_event(&CollectionEvent::stop(device_id.clone(), *t_ms))
            }
            ScenarioEvent::Focus { t_ms, device_id } => {
                engine.set_focus(device_id.as_ref().map(DeviceId::as_str), *t_ms)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub profile_refs: Vec<DeviceId>,
    pub events: Vec<ScenarioEvent>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDocument {
    name: String,
    #[serde(default)]
    profile_refs: Vec<String>,
    #[serde(default)]
    events: Vec<EventDocument>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventDocument {
    t_ms: u64,
    #[serde(rename = "type")]
    kind: EventType,
    #[serde(default)]
    device_id: Option<String>,
    #[serde(default)]
    categories: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum EventType {
    Start,
    Stop,
    Focus,
}

pub fn parse_scenario(document: &[u8]) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDocument = serde_json::from_slice(document)?;

    let profile_refs = doc
        .profile_refs
        .into_iter()
        .map(|r| DeviceId::new(r).map_err(|e| ScenarioError::InvalidProfileRef(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;

    let mut events = Vec::with_capacity(doc.events.len());
    let mut previous = 0;
    for (index, ev) in doc.events.into_iter().enumerate() {
        if ev.t_ms < previous {
            return Err(ScenarioError::TimestampsOutOfOrder {
                index,
                previous,
                found: ev.t_ms,
            });
        }
        previous = ev.t_ms;

        let invalid = |reason: String| ScenarioError::InvalidEvent { index, reason };
        let device_id = ev
            .device_id
            .map(|id| DeviceId::new(id).map_err(|e| invalid(e.to_string())))
            .transpose()?;
        if let Some(id) = &device_id {
            if !profile_refs.contains(id) {
                return Err(ScenarioError::UnknownDeviceRef {
                    index,
                    device_id: id.to_string(),
                });
            }
        }

        let event = match ev.kind {
            EventType::Start | EventType::Stop => {
                let device_id = device_id.ok_or_else(|| invalid("missing device_id".into()))?;
                if let EventType::Start = ev.kind {
                    let categories = ev
                        .categories
                        .map(|cats| {
                            cats.iter()
                                .map(|c| DataCategory::parse(c).map_err(|e| invalid(e.to_string())))
                                .collect::<Result<BTreeSet<_>, _>>()
                        })
                        .transpose()?;
                    ScenarioEvent::Start {
                        t_ms: ev.t_ms,
                        device_id,
                        categories,
                    }
                } else {
                    if ev.categories.is_some() {
                        return Err(invalid("stop events do not take categories".into()));
                    }
                    ScenarioEvent::Stop {
                        t_ms: ev.t_ms,
                        device_id,
                    }
                }
            }
            EventType::Focus => {
                if ev.categories.is_some() {
                    return Err(invalid("focus events do not take categories".into()));
                }
                ScenarioEvent::Focus {
                    t_ms: ev.t_ms,
                    device_id,
                }
            }
        };
        events.push(event);
    }

    Ok(Scenario {
        name: doc.name,
        profile_refs,
        events,
    })
}

/// How a run is paced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clock {
    /// Apply events back to back.
    Instant,
    /// Sleep `Δt / factor` between events.
    Scaled(f64),
}

impl FromStr for Clock {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "instant" {
            return Ok(Clock::Instant);
        }
        let factor = s
            .strip_prefix("scaled:")
            .ok_or_else(|| format!("expected `instant` or `scaled:<factor>`, got {s:?}"))?;
        match factor.parse::<f64>() {
            Ok(f) if f.is_finite() && f > 0.0 => Ok(Clock::Scaled(f)),
            _ => Err(format!("scale factor must be a positive number, got {factor:?}")),
        }
    }
}

impl fmt::Display for Clock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clock::Instant => f.write_str("instant"),
            Clock::Scaled(factor) => write!(f, "scaled:{factor}"),
        }
    }
}

/// What produced a log entry: the initial state or a scenario event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Trigger {
    Initial,
    Event(ScenarioEvent),
}

impl Serialize for Trigger {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Trigger::Initial => serializer.serialize_str("initial"),
            Trigger::Event(event) => event.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for Trigger {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        if value.as_str() == Some("initial") {
            return Ok(Trigger::Initial);
        }
        serde_json::from_value(value)
            .map(Trigger::Event)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoticeEntry {
    pub trigger: Trigger,
    pub state: CubeState,
    /// Wall time since the run started; only recorded by paced runs.
    pub wall_elapsed_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoticeLog {
    pub scenario: String,
    pub entries: Vec<NoticeEntry>,
}

impl NoticeLog {
    pub fn final_state(&self) -> &CubeState {
        &self.entries.last().expect("a log always has its initial entry").state
    }

    pub fn without_wall_clock(&self) -> NoticeLog {
        NoticeLog {
            scenario: self.scenario.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| NoticeEntry {
                    wall_elapsed_ms: None,
                    ..e.clone()
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("scenario needs device `{0}`, which is not registered")]
    MissingProfile(DeviceId),
    #[error("event {index}: {source}")]
    Engine {
        index: usize,
        #[source]
        source: EngineError,
    },
}

/// Replays a scenario against a fresh engine over `registry`. Events with
/// equal timestamps are applied in file order.
pub fn run_scenario(scenario: &Scenario, registry: &Registry, clock: Clock) -> Result<NoticeLog, RunError> {
    if let Some(missing) = scenario.profile_refs.iter().find(|id| !registry.contains(id.as_str())) {
        return Err(RunError::MissingProfile(missing.clone()));
    }

    let started = Instant::now();
    let wall = |clock: Clock| match clock {
        Clock::Instant => None,
        Clock::Scaled(_) => Some(started.elapsed().as_millis() as u64),
    };

    let mut engine = EngineState::new(registry.clone());
    let mut entries = Vec::with_capacity(scenario.events.len() + 1);
    entries.push(NoticeEntry {
        trigger: Trigger::Initial,
        state: engine.cube_state(),
        wall_elapsed_ms: wall(clock),
    });

    let mut previous_t = 0;
    for (index, event) in scenario.events.iter().enumerate() {
        if let Clock::Scaled(factor) = clock {
            let gap_ms = event.t_ms().saturating_sub(previous_t) as f64 / factor;
            if gap_ms > 0.0 {
                std::thread::sleep(Duration::from_secs_f64(gap_ms / 1000.0));
            }
        }
        previous_t = event.t_ms();

        event
            .apply_to(&mut engine)
            .map_err(|source| RunError::Engine { index, source })?;
        entries.push(NoticeEntry {
            trigger: Trigger::Event(event.clone()),
            state: engine.cube_state(),
            wall_elapsed_ms: wall(clock),
        });
    }

    Ok(NoticeLog {
        scenario: scenario.name.clone(),
        entries,
    })
}

#[derive(Serialize, Deserialize)]
struct LogLine {
    seq: usize,
    scenario: String,
    trigger: Trigger,
    state: CubeState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wall_elapsed_ms: Option<u64>,
}

/// One JSON line per entry, each carrying its cube state in the golden format.
pub fn write_notice_log(log: &NoticeLog) -> Vec<u8> {
    let mut out = Vec::new();
    for (seq, entry) in log.entries.iter().enumerate() {
        let line = LogLine {
            seq,
            scenario: log.scenario.clone(),
            trigger: entry.trigger.clone(),
            state: entry.state.clone(),
            wall_elapsed_ms: entry.wall_elapsed_ms,
        };
        serde_json::to_writer(&mut out, &line).expect("log line always serializes");
        out.push(b'\n');
    }
    out
}

#[derive(Debug, Error)]
pub enum ReadLogError {
    #[error("line {line}: {source}")]
    Corrupt {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: expected seq {expected}")]
    OutOfSequence { line: usize, expected: usize },
    #[error("notice log is empty")]
    Empty,
}

pub fn read_notice_log(bytes: &[u8]) -> Result<NoticeLog, ReadLogError> {
    let mut scenario = None;
    let mut entries = Vec::new();
    for (i, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        if raw.is_empty() {
            continue;
        }
        let line: LogLine = serde_json::from_slice(raw).map_err(|source| ReadLogError::Corrupt {
            line: i + 1,
            source,
        })?;
        if line.seq != entries.len() {
            return Err(ReadLogError::OutOfSequence {
                line: i + 1,
                expected: entries.len(),
            });
        }
        scenario.get_or_insert(line.scenario);
        entries.push(NoticeEntry {
            trigger: line.trigger,
            state: line.state,
            wall_elapsed_ms: line.wall_elapsed_ms,
        });
    }
    Ok(NoticeLog {
        scenario: scenario.ok_or(ReadLogError::Empty)?,
        entries,
    })
}
