//! Interactive sessions: a client plays the adversary one event at a time.
//!
//! Each session keeps a tree of configurations. `undo` moves the current
//! branch tip to its parent, `fork` opens a new branch at the current tip,
//! and every node is the result of applying its event to its parent, so the
//! whole tree stays replay-consistent. A rejected message leaves the session
//! unchanged. Fairness windows are not enforced here: the client is the
//! adversary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{is_rendezvous, AdversaryStrategy, Scenario};
use crate::format::{read_trace, LoopInfo, ScenarioFile};
use crate::geometry::Point;
use crate::model::{Color, Configuration, CyclePhase, PhaseKind, RobotId};
use crate::rational::Rational;
use crate::scheduler::{apply_event, enabled_events, is_cycle_start_time, EventChoice, FractionSet, Rules};

pub const PROTOCOL_VERSION: u32 = 1;
pub const DECIMAL_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(
    tag = "type",
    rename_all = "camelCase",
    rename_all_fields = "camelCase",
    deny_unknown_fields
)]
pub enum ClientMessage {
    CreateSession { v: u32, scenario: ScenarioFile },
    ChooseEvent { v: u32, session_id: String, event: EventChoice },
    Undo { v: u32, session_id: String },
    Fork { v: u32, session_id: String },
    SwitchBranch { v: u32, session_id: String, branch: usize },
    /// `trace` is the content of a trace file.
    LoadWitness { v: u32, trace: String },
}

impl ClientMessage {
    fn version(&self) -> u32 {
        match self {
            ClientMessage::CreateSession { v, .. }
            | ClientMessage::ChooseEvent { v, .. }
            | ClientMessage::Undo { v, .. }
            | ClientMessage::Fork { v, .. }
            | ClientMessage::SwitchBranch { v, .. }
            | ClientMessage::LoadWitness { v, .. } => *v,
        }
    }

    fn session_id(&self) -> Option<&str> {
        match self {
            ClientMessage::ChooseEvent { session_id, .. }
            | ClientMessage::Undo { session_id, .. }
            | ClientMessage::Fork { session_id, .. }
            | ClientMessage::SwitchBranch { session_id, .. } => Some(session_id),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum ServerMessage {
    StateUpdate {
        v: u32,
        state: SessionView,
    },
    Error {
        v: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_id: Option<String>,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DecimalPoint {
    pub x: String,
    pub y: String,
}

impl From<&Point> for DecimalPoint {
    fn from(p: &Point) -> Self {
        DecimalPoint {
            x: p.x.to_decimal_string(DECIMAL_DIGITS),
            y: p.y.to_decimal_string(DECIMAL_DIGITS),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RobotView {
    pub id: RobotId,
    pub position: Point,
    pub position_decimal: DecimalPoint,
    pub light: Color,
    pub phase: PhaseKind,
    /// Computed destination or move target, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination: Option<Point>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerdictView {
    /// "rendezvous" or "open".
    pub status: String,
    pub cycle_start: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WitnessView {
    pub loop_start: usize,
    pub loop_length: usize,
    pub contraction_ratio: Rational,
    /// The witness's next event, while the history still follows it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_scripted: Option<EventChoice>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionView {
    pub session_id: String,
    pub branch: usize,
    pub branch_count: usize,
    pub event_index: u64,
    pub robots: [RobotView; 2],
    pub distance_squared: Rational,
    pub distance_squared_decimal: String,
    pub enabled: Vec<EventChoice>,
    pub history: Vec<EventChoice>,
    pub can_undo: bool,
    pub verdict: VerdictView,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessView>,
}

#[derive(Debug, Clone)]
struct TreeNode {
    parent: Option<usize>,
    event: Option<EventChoice>,
    config: Configuration,
}

#[derive(Debug, Clone)]
struct Witness {
    info: LoopInfo,
    events: Vec<EventChoice>,
}

impl Witness {
    fn event_at(&self, k: usize) -> Option<&EventChoice> {
        if k < self.info.start {
            return self.events.get(k);
        }
        if self.info.length == 0 {
            return None;
        }
        self.events
            .get(self.info.start + (k - self.info.start) % self.info.length)
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    scenario: Scenario,
    rules: Rules,
    fractions: FractionSet,
    nodes: Vec<TreeNode>,
    /// Tip node of each branch.
    branches: Vec<usize>,
    current: usize,
    witness: Option<Witness>,
}

impl Session {
    pub fn new(id: String, scenario: Scenario, fractions: FractionSet) -> Self {
        let rules = scenario.rules();
        let root = TreeNode {
            parent: None,
            event: None,
            config: scenario.initial_configuration(),
        };
        Session {
            id,
            scenario,
            rules,
            fractions,
            nodes: vec![root],
            branches: vec![0],
            current: 0,
            witness: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    fn tip(&self) -> usize {
        self.branches[self.current]
    }

    pub fn config(&self) -> &Configuration {
        &self.nodes[self.tip()].config
    }

    /// Events from the root to the current tip.
    pub fn history(&self) -> Vec<EventChoice> {
        let mut out = Vec::new();
        let mut cur = self.tip();
        while let Some(parent) = self.nodes[cur].parent {
            out.push(self.nodes[cur].event.clone().expect("non-root node has an event"));
            cur = parent;
        }
        out.reverse();
        out
    }

    pub fn choose(&mut self, event: EventChoice) -> Result<(), String> {
        let next = apply_event(self.config(), &event, &self.rules).map_err(|e| e.to_string())?;
        let node = TreeNode {
            parent: Some(self.tip()),
            event: Some(event),
            config: next,
        };
        self.nodes.push(node);
        let id = self.nodes.len() - 1;
        self.branches[self.current] = id;
        Ok(())
    }

    pub fn undo(&mut self) -> Result<(), String> {
        let parent = self.nodes[self.tip()]
            .parent
            .ok_or_else(|| "nothing to undo at the initial configuration".to_string())?;
        self.branches[self.current] = parent;
        Ok(())
    }

    /// Opens a new branch at the current tip and switches to it.
    pub fn fork(&mut self) {
        self.branches.push(self.tip());
        self.current = self.branches.len() - 1;
    }

    pub fn switch_branch(&mut self, branch: usize) -> Result<(), String> {
        if branch >= self.branches.len() {
            return Err(format!(
                "branch {branch} does not exist ({} branches)",
                self.branches.len()
            ));
        }
        self.current = branch;
        Ok(())
    }

    /// Checks that every node equals its parent with its event applied.
    pub fn is_replay_consistent(&self) -> bool {
        self.nodes.iter().all(|n| match (n.parent, &n.event) {
            (None, None) => n.config == self.scenario.initial_configuration(),
            (Some(p), Some(e)) => apply_event(&self.nodes[p].config, e, &self.rules)
                .is_ok_and(|c| c == n.config),
            _ => false,
        })
    }

    pub fn view(&self) -> SessionView {
        let config = self.config();
        let history = self.history();
        let robot_view = |id: RobotId| {
            let r = config.robot(id);
            let destination = match &r.phase {
                CyclePhase::Computed { dest } => Some(dest.clone()),
                CyclePhase::Moving { target, .. } => Some(target.clone()),
                _ => None,
            };
            RobotView {
                id,
                position: r.position.clone(),
                position_decimal: DecimalPoint::from(&r.position),
                light: r.light,
                phase: r.phase.kind(),
                destination,
            }
        };
        let distance_squared = config.distance_squared();
        let rendezvous = is_rendezvous(config, self.rules.algorithm, &self.rules.movement);
        let enabled = if rendezvous {
            Vec::new()
        } else {
            enabled_events(config, &self.rules, &self.fractions, None).unwrap_or_default()
        };
        let witness = self.witness.as_ref().map(|w| {
            let follows = history
                .iter()
                .enumerate()
                .all(|(k, e)| w.event_at(k) == Some(e));
            WitnessView {
                loop_start: w.info.start,
                loop_length: w.info.length,
                contraction_ratio: w.info.contraction_ratio.clone(),
                next_scripted: if follows {
                    w.event_at(history.len()).cloned()
                } else {
                    None
                },
            }
        });
        SessionView {
            session_id: self.id.clone(),
            branch: self.current,
            branch_count: self.branches.len(),
            event_index: config.event_index,
            robots: [robot_view(RobotId::R), robot_view(RobotId::S)],
            distance_squared_decimal: distance_squared.to_decimal_string(DECIMAL_DIGITS),
            distance_squared,
            enabled,
            can_undo: !history.is_empty(),
            history,
            verdict: VerdictView {
                status: if rendezvous { "rendezvous" } else { "open" }.to_string(),
                cycle_start: is_cycle_start_time(config, self.rules.algorithm),
            },
            witness,
        }
    }
}

/// All live sessions. Each message is handled to completion before the
/// next, so a session never sees interleaved mutations.
#[derive(Debug, Default)]
pub struct SessionManager {
    sessions: BTreeMap<String, Session>,
    next_id: u64,
}

impl SessionManager {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn session(&self, id: &str) -> Option<&Session> {
        self.sessions.get(id)
    }

    fn fresh_id(&mut self) -> String {
        self.next_id += 1;
        format!("s{}", self.next_id)
    }

    /// The scenario as driven by this session, keeping its fraction set for
    /// the enabled-event palette.
    fn interactive(mut scenario: Scenario, id: &str) -> (Scenario, FractionSet) {
        let fractions = scenario.strategy.fractions();
        scenario.strategy = AdversaryStrategy::Interactive {
            session: id.to_string(),
        };
        (scenario, fractions)
    }

    pub fn handle(&mut self, message: ClientMessage) -> ServerMessage {
        let session_id = message.session_id().map(str::to_string);
        match self.dispatch(message) {
            Ok(state) => ServerMessage::StateUpdate {
                v: PROTOCOL_VERSION,
                state,
            },
            Err(message) => ServerMessage::Error {
                v: PROTOCOL_VERSION,
                session_id,
                message,
            },
        }
    }

    /// Parses one text message and serializes the reply.
    pub fn handle_text(&mut self, text: &str) -> String {
        let reply = match serde_json::from_str::<ClientMessage>(text) {
            Ok(message) => self.handle(message),
            Err(e) => ServerMessage::Error {
                v: PROTOCOL_VERSION,
                session_id: None,
                message: format!("malformed message: {e}"),
            },
        };
        serde_json::to_string(&reply).expect("server message serializes")
    }

    fn get_mut(&mut self, id: &str) -> Result<&mut Session, String> {
        self.sessions
            .get_mut(id)
            .ok_or_else(|| format!("unknown session {id}"))
    }

    fn dispatch(&mut self, message: ClientMessage) -> Result<SessionView, String> {
        if message.version() != PROTOCOL_VERSION {
            return Err(format!(
                "unsupported protocol version {} (expected {PROTOCOL_VERSION})",
                message.version()
            ));
        }
        match message {
            ClientMessage::CreateSession { scenario, .. } => {
                let scenario = scenario.into_scenario().map_err(|e| e.to_string())?;
                let id = self.fresh_id();
                let (scenario, fractions) = Self::interactive(scenario, &id);
                let session = Session::new(id.clone(), scenario, fractions);
                let view = session.view();
                self.sessions.insert(id, session);
                Ok(view)
            }
            ClientMessage::ChooseEvent {
                session_id, event, ..
            } => {
                let s = self.get_mut(&session_id)?;
                s.choose(event)?;
                Ok(s.view())
            }
            ClientMessage::Undo { session_id, .. } => {
                let s = self.get_mut(&session_id)?;
                s.undo()?;
                Ok(s.view())
            }
            ClientMessage::Fork { session_id, .. } => {
                let s = self.get_mut(&session_id)?;
                s.fork();
                Ok(s.view())
            }
            ClientMessage::SwitchBranch {
                session_id, branch, ..
            } => {
                let s = self.get_mut(&session_id)?;
                s.switch_branch(branch)?;
                Ok(s.view())
            }
            ClientMessage::LoadWitness { trace, .. } => {
                let file = read_trace(&trace).map_err(|e| e.to_string())?;
                let events = file.trace.events();
                let info = file.loop_info.clone().unwrap_or(LoopInfo {
                    start: events.len(),
                    length: 0,
                    contraction_ratio: Rational::one(),
                });
                let id = self.fresh_id();
                let (scenario, fractions) = Self::interactive(file.trace.scenario, &id);
                let mut session = Session::new(id.clone(), scenario, fractions);
                for e in &events[..info.start] {
                    session.choose(e.clone())?;
                }
                session.witness = Some(Witness { info, events });
                let view = session.view();
                self.sessions.insert(id, session);
                Ok(view)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::AlgorithmId;
    use crate::model::MovementModel;
    use crate::scheduler::SchedulerClass;

    fn create(m: &mut SessionManager, movement: MovementModel) -> String {
        let scenario = Scenario::on_line(
            AlgorithmId::Rendezvous,
            SchedulerClass::ASYNC,
            movement,
            (Color::A, Color::A),
            (Rational::zero(), Rational::from_integer(4)),
        );
        match m.handle(ClientMessage::CreateSession {
            v: 1,
            scenario: ScenarioFile::from(&scenario),
        }) {
            ServerMessage::StateUpdate { state, .. } => state.session_id,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn undo_fork_and_rejection_leave_consistent_state() {
        let mut m = SessionManager::new();
        let id = create(&mut m, MovementModel::NonRigid { delta: Rational::one() });
        for e in [
            EventChoice::Look { robot: RobotId::R },
            EventChoice::Comp { robot: RobotId::R },
            EventChoice::MoveBegin { robot: RobotId::R },
        ] {
            m.handle(ClientMessage::ChooseEvent {
                v: 1,
                session_id: id.clone(),
                event: e,
            });
        }
        let before = m.session(&id).unwrap().view();
        // moving 2 units toward the midpoint: a quarter is below δ = 1
        let reply = m.handle(ClientMessage::ChooseEvent {
            v: 1,
            session_id: id.clone(),
            event: EventChoice::MoveEnd {
                robot: RobotId::R,
                stop: Rational::new(1, 4),
            },
        });
        match reply {
            ServerMessage::Error { message, .. } => {
                assert!(message.contains("stop violates minimum distance δ"), "{message}")
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(m.session(&id).unwrap().view(), before);

        m.handle(ClientMessage::Fork {
            v: 1,
            session_id: id.clone(),
        });
        m.handle(ClientMessage::Undo {
            v: 1,
            session_id: id.clone(),
        });
        let s = m.session(&id).unwrap();
        assert_eq!(s.view().branch_count, 2);
        assert_eq!(s.history().len(), 2);
        assert!(s.is_replay_consistent());
        m.handle(ClientMessage::SwitchBranch {
            v: 1,
            session_id: id.clone(),
            branch: 0,
        });
        assert_eq!(m.session(&id).unwrap().history().len(), 3);
    }

    #[test]
    fn messages_use_camel_case_tags() {
        let text = r#"{"type":"undo","v":1,"sessionId":"s9"}"#;
        let mut m = SessionManager::new();
        let reply: serde_json::Value = serde_json::from_str(&m.handle_text(text)).unwrap();
        assert_eq!(reply["type"], "error");
        assert_eq!(reply["sessionId"], "s9");
        let bad_version = r#"{"type":"undo","v":2,"sessionId":"s9"}"#;
        assert!(m.handle_text(bad_version).contains("protocol version"));
    }
}
