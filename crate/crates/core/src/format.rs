//! Scenario files (JSON) and trace files (JSON lines).
//!
//! A trace file starts with a header line carrying the scenario, then one
//! line per event with the configuration it leads to, then a verdict line.
//! Loading replays every event and rejects files whose recorded states do
//! not match the replay.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::AlgorithmId;
use crate::checker::Lasso;
use crate::engine::{
    AdversaryStrategy, Engine, EngineError, FairnessBudget, RunVerdict, Scenario, ScenarioError,
    Trace, DEFAULT_MAX_EVENTS,
};
use crate::geometry::Point;
use crate::model::{Color, Configuration, MovementModel, PhaseKind};
use crate::rational::Rational;
use crate::scheduler::{EventChoice, SchedulerClass};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{0}")]
    Scenario(#[from] ScenarioError),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {message}")]
    Mismatch { line: usize, message: String },
    #[error("trace file has no header line")]
    MissingHeader,
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

fn default_strategy() -> AdversaryStrategy {
    AdversaryStrategy::RoundRobin
}

fn default_max_events() -> usize {
    DEFAULT_MAX_EVENTS
}

/// The on-disk form of a [`Scenario`]. Optional fields take engine defaults.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub algorithm: AlgorithmId,
    pub scheduler: SchedulerClass,
    pub movement: MovementModel,
    pub initial_lights: [Color; 2],
    pub initial_positions: [Point; 2],
    #[serde(default = "default_strategy")]
    pub strategy: AdversaryStrategy,
    #[serde(default = "default_max_events")]
    pub max_events: usize,
    #[serde(default)]
    pub fairness: FairnessBudget,
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        ScenarioFile {
            algorithm: s.algorithm,
            scheduler: s.scheduler,
            movement: s.movement.clone(),
            initial_lights: [s.initial_lights.0, s.initial_lights.1],
            initial_positions: [s.initial_positions.0.clone(), s.initial_positions.1.clone()],
            strategy: s.strategy.clone(),
            max_events: s.max_events,
            fairness: s.fairness.clone(),
        }
    }
}

impl ScenarioFile {
    /// Converts and validates.
    pub fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        let [l0, l1] = self.initial_lights;
        let [p0, p1] = self.initial_positions;
        let scenario = Scenario {
            algorithm: self.algorithm,
            scheduler: self.scheduler,
            movement: self.movement,
            initial_lights: (l0, l1),
            initial_positions: (p0, p1),
            strategy: self.strategy,
            max_events: self.max_events,
            fairness: self.fairness,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Deserializes with errors prefixed by the path of the offending field.
fn from_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, (String, String)> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.into_inner().to_string();
        (path, message)
    })
}

pub fn parse_scenario(text: &str) -> Result<Scenario, FormatError> {
    let file: ScenarioFile = from_json(text).map_err(|(path, message)| {
        let field = if path == "." { "scenario".to_string() } else { path };
        ScenarioError::new(field, message)
    })?;
    Ok(file.into_scenario()?)
}

pub fn scenario_to_json(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(&ScenarioFile::from(scenario)).expect("scenario serializes")
}

/// Marks the repeating part of a lasso witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopInfo {
    /// Number of events before the loop.
    pub start: usize,
    pub length: usize,
    pub contraction_ratio: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceFile {
    pub trace: Trace,
    pub loop_info: Option<LoopInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum TraceLine {
    Header {
        v: u32,
        scenario: ScenarioFile,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r#loop: Option<LoopInfo>,
    },
    Event {
        index: u64,
        event: EventChoice,
        positions: [Point; 2],
        lights: [Color; 2],
        phases: [PhaseKind; 2],
    },
    Verdict {
        verdict: RunVerdict,
    },
}

fn event_line(event: &EventChoice, c: &Configuration) -> TraceLine {
    TraceLine::Event {
        index: c.event_index,
        event: event.clone(),
        positions: [c.robots[0].position.clone(), c.robots[1].position.clone()],
        lights: [c.robots[0].light, c.robots[1].light],
        phases: [c.robots[0].phase.kind(), c.robots[1].phase.kind()],
    }
}

pub fn write_trace(file: &TraceFile) -> String {
    let mut lines = vec![TraceLine::Header {
        v: FORMAT_VERSION,
        scenario: ScenarioFile::from(&file.trace.scenario),
        r#loop: file.loop_info.clone(),
    }];
    lines.extend(file.trace.steps.iter().map(|s| event_line(&s.event, &s.config)));
    lines.push(TraceLine::Verdict {
        verdict: file.trace.verdict.clone(),
    });
    let mut out = String::new();
    for line in &lines {
        out.push_str(&serde_json::to_string(line).expect("trace line serializes"));
        out.push('\n');
    }
    out
}

/// Parses and replays a trace file.
pub fn read_trace(text: &str) -> Result<TraceFile, FormatError> {
    let mut header = None;
    let mut engine: Option<Engine> = None;
    let mut verdict_seen = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let line: TraceLine = from_json(raw).map_err(|(path, message)| FormatError::Syntax {
            line: line_no,
            message: if path == "." { message } else { format!("{path}: {message}") },
        })?;
        let mismatch = |message: String| FormatError::Mismatch {
            line: line_no,
            message,
        };
        if verdict_seen.is_some() {
            return Err(mismatch("content after the verdict line".into()));
        }
        match line {
            TraceLine::Header { v, scenario, r#loop } => {
                if header.is_some() {
                    return Err(mismatch("second header line".into()));
                }
                if v != FORMAT_VERSION {
                    return Err(FormatError::Version(v));
                }
                let scenario = scenario.into_scenario()?;
                engine = Some(Engine::new(scenario)?);
                header = Some(r#loop);
            }
            TraceLine::Event {
                index,
                event,
                positions,
                lights,
                phases,
            } => {
                let engine = engine.as_mut().ok_or(FormatError::MissingHeader)?;
                engine.apply(event.clone())?;
                let expected = event_line(&event, engine.config());
                let recorded = TraceLine::Event {
                    index,
                    event,
                    positions,
                    lights,
                    phases,
                };
                if expected != recorded {
                    return Err(mismatch(format!(
                        "recorded state differs from replay: expected {}",
                        serde_json::to_string(&expected).expect("trace line serializes")
                    )));
                }
            }
            TraceLine::Verdict { verdict } => {
                let engine = engine.as_ref().ok_or(FormatError::MissingHeader)?;
                if verdict != engine.verdict() {
                    return Err(mismatch("recorded verdict differs from replay".into()));
                }
                verdict_seen = Some(verdict);
            }
        }
    }
    let loop_info = header.ok_or(FormatError::MissingHeader)?;
    let engine = engine.ok_or(FormatError::MissingHeader)?;
    let trace = engine.into_trace();
    if let Some(l) = &loop_info {
        if l.start + l.length > trace.steps.len() {
            return Err(FormatError::Mismatch {
                line: 1,
                message: "loop extends past the recorded events".into(),
            });
        }
    }
    Ok(TraceFile { trace, loop_info })
}

/// A lasso as a scripted trace file: the prefix, then one pass of the loop.
pub fn lasso_witness(template: &Scenario, lasso: &Lasso) -> Result<TraceFile, EngineError> {
    let trace = lasso.to_trace(template, 1)?;
    Ok(TraceFile {
        trace,
        loop_info: Some(LoopInfo {
            start: lasso.prefix.len(),
            length: lasso.cycle.len(),
            contraction_ratio: lasso.contraction_ratio.clone(),
        }),
    })
}
