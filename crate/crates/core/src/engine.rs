//! Runs scenarios under an adversary strategy and records replayable traces.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{compute, AlgorithmId};
use crate::geometry::{distance, exact_distance, Point};
use crate::model::{Color, Configuration, CyclePhase, MovementModel, RobotId, Snapshot};
use crate::rational::Rational;
use crate::scheduler::{
    apply_event, completed_cycles, enabled_events, is_cycle_start_time, EventChoice,
    FairnessState, FractionSet, Rules, SchedulerClass, SchedulerError, MIN_FAIRNESS_WINDOW,
};

pub const DEFAULT_MAX_EVENTS: usize = 64;
pub const DEFAULT_FAIRNESS_WINDOW: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FairnessBudget {
    pub window_size: usize,
}

impl Default for FairnessBudget {
    fn default() -> Self {
        FairnessBudget {
            window_size: DEFAULT_FAIRNESS_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum AdversaryStrategy {
    /// Alternates robots, always letting moves run to completion.
    RoundRobin,
    SeededRandom { seed: u64, fractions: FractionSet },
    Scripted { events: Vec<EventChoice> },
    /// Marks a template for the exhaustive checker; not runnable by the engine.
    Exhaustive { fractions: FractionSet, max_depth: usize },
    /// Events are supplied one at a time by a session client.
    Interactive { session: String },
}

impl AdversaryStrategy {
    pub fn fractions(&self) -> FractionSet {
        match self {
            AdversaryStrategy::SeededRandom { fractions, .. }
            | AdversaryStrategy::Exhaustive { fractions, .. } => fractions.clone(),
            _ => FractionSet::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub algorithm: AlgorithmId,
    pub scheduler: SchedulerClass,
    pub movement: MovementModel,
    pub initial_lights: (Color, Color),
    pub initial_positions: (Point, Point),
    pub strategy: AdversaryStrategy,
    pub max_events: usize,
    pub fairness: FairnessBudget,
}

/// A validation failure, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{field}: {message}")]
pub struct ScenarioError {
    pub field: String,
    pub message: String,
}

impl ScenarioError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl Scenario {
    /// A scenario with robots on the x-axis, defaulting the strategy,
    /// event bound and fairness window.
    pub fn on_line(
        algorithm: AlgorithmId,
        scheduler: SchedulerClass,
        movement: MovementModel,
        lights: (Color, Color),
        positions: (Rational, Rational),
    ) -> Self {
        Scenario {
            algorithm,
            scheduler,
            movement,
            initial_lights: lights,
            initial_positions: (Point::on_axis(positions.0), Point::on_axis(positions.1)),
            strategy: AdversaryStrategy::RoundRobin,
            max_events: DEFAULT_MAX_EVENTS,
            fairness: FairnessBudget::default(),
        }
    }

    pub fn with_strategy(mut self, strategy: AdversaryStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_max_events(mut self, max_events: usize) -> Self {
        self.max_events = max_events;
        self
    }

    pub fn rules(&self) -> Rules {
        Rules {
            algorithm: self.algorithm,
            class: self.scheduler,
            movement: self.movement.clone(),
        }
    }

    pub fn initial_configuration(&self) -> Configuration {
        Configuration::initial(self.initial_positions.clone(), self.initial_lights)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if let Some(delta) = self.movement.min_travel() {
            if !delta.is_positive() {
                return Err(ScenarioError::new("movement.delta", "delta must be positive"));
            }
        }
        if self.algorithm == AlgorithmId::RendezvousWithDelta
            && !matches!(self.movement, MovementModel::NonRigidKnownDelta { .. })
        {
            return Err(ScenarioError::new(
                "algorithm",
                "RendezvousWithDelta requires movement NonRigidKnownDelta",
            ));
        }
        let (p, q) = &self.initial_positions;
        if exact_distance(p, q).is_none() {
            return Err(ScenarioError::new(
                "initial_positions",
                "distance between the initial positions must be rational",
            ));
        }
        if self.max_events == 0 {
            return Err(ScenarioError::new("max_events", "must be positive"));
        }
        if self.fairness.window_size < MIN_FAIRNESS_WINDOW {
            return Err(ScenarioError::new(
                "fairness.window_size",
                format!("must be at least {MIN_FAIRNESS_WINDOW}"),
            ));
        }
        if let AdversaryStrategy::Exhaustive { max_depth: 0, .. } = self.strategy {
            return Err(ScenarioError::new("strategy.max_depth", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(#[from] ScenarioError),
    #[error("illegal event {event} at index {index}: {source}")]
    IllegalEvent {
        index: u64,
        event: String,
        #[source]
        source: SchedulerError,
    },
    #[error("internal scheduler error: {0}")]
    Scheduler(#[from] SchedulerError),
    #[error("strategy {0} cannot drive a run directly")]
    UnsupportedStrategy(&'static str),
    #[error("stability certificate needs co-located robots at a cycle start time")]
    CertificatePrecondition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Outcome {
    RendezvousAt { event_index: u64 },
    BoundExhausted { final_distance_squared: Rational },
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunVerdict {
    pub outcome: Outcome,
    pub gathered_stable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub event: EventChoice,
    pub config: Configuration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub scenario: Scenario,
    pub initial: Configuration,
    pub steps: Vec<TraceStep>,
    pub verdict: RunVerdict,
}

impl Trace {
    /// Configuration after `index` events of this trace (0 = initial).
    pub fn config_at(&self, index: usize) -> &Configuration {
        if index == 0 {
            &self.initial
        } else {
            &self.steps[index - 1].config
        }
    }

    pub fn last_config(&self) -> &Configuration {
        self.config_at(self.steps.len())
    }

    pub fn events(&self) -> Vec<EventChoice> {
        self.steps.iter().map(|s| s.event.clone()).collect()
    }
}

/// Certifies that co-located robots at a cycle start never move again:
/// every light pair leads both algorithms to a destination equal to the
/// common position.
pub fn stability_certificate(
    config: &Configuration,
    algorithm: AlgorithmId,
    movement: &MovementModel,
) -> Result<bool, EngineError> {
    if !config.co_located() || !is_cycle_start_time(config, algorithm) {
        return Err(EngineError::CertificatePrecondition);
    }
    let p = &config.robots[0].position;
    for me in Color::ALL {
        for other in Color::ALL {
            let snap = Snapshot::observe(p, me, p, other, movement);
            match compute(algorithm, &snap) {
                Ok(out) if out.destination == snap.me_position => {}
                _ => return Ok(false),
            }
        }
    }
    Ok(true)
}

/// Co-located at a cycle start with a passing stability certificate.
pub fn is_rendezvous(config: &Configuration, algorithm: AlgorithmId, movement: &MovementModel) -> bool {
    config.co_located()
        && is_cycle_start_time(config, algorithm)
        && stability_certificate(config, algorithm, movement).unwrap_or(false)
}

enum Picker {
    RoundRobin,
    Random(ChaCha8Rng),
    Scripted(std::vec::IntoIter<EventChoice>),
    Manual,
}

/// A single run in progress.
pub struct Engine {
    scenario: Scenario,
    rules: Rules,
    fractions: FractionSet,
    fairness: FairnessState,
    initial: Configuration,
    config: Configuration,
    steps: Vec<TraceStep>,
    picker: Picker,
    initial_distance: Rational,
}

impl Engine {
    pub fn new(scenario: Scenario) -> Result<Self, EngineError> {
        let initial = scenario.initial_configuration();
        Engine::from_configuration(scenario, initial)
    }

    /// Starts from an arbitrary configuration instead of the scenario's
    /// initial one.
    pub fn from_configuration(scenario: Scenario, start: Configuration) -> Result<Self, EngineError> {
        scenario.validate()?;
        let picker = match &scenario.strategy {
            AdversaryStrategy::RoundRobin => Picker::RoundRobin,
            AdversaryStrategy::SeededRandom { seed, .. } => {
                Picker::Random(ChaCha8Rng::seed_from_u64(*seed))
            }
            AdversaryStrategy::Scripted { events } => Picker::Scripted(events.clone().into_iter()),
            AdversaryStrategy::Interactive { .. } => Picker::Manual,
            AdversaryStrategy::Exhaustive { .. } => {
                return Err(EngineError::UnsupportedStrategy("Exhaustive"))
            }
        };
        let (p, q) = &scenario.initial_positions;
        Ok(Engine {
            rules: scenario.rules(),
            fractions: scenario.strategy.fractions(),
            fairness: FairnessState::new(scenario.fairness.window_size),
            initial_distance: distance(p, q),
            initial: start.clone(),
            config: start,
            steps: Vec::new(),
            picker,
            scenario,
        })
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn rules(&self) -> &Rules {
        &self.rules
    }

    pub fn steps(&self) -> &[TraceStep] {
        &self.steps
    }

    pub fn fairness(&self) -> &FairnessState {
        &self.fairness
    }

    /// Events the strategy may pick now, honouring the fairness window.
    pub fn enabled(&self) -> Result<Vec<EventChoice>, EngineError> {
        Ok(enabled_events(&self.config, &self.rules, &self.fractions, Some(&self.fairness))?)
    }

    pub fn is_rendezvous(&self) -> bool {
        is_rendezvous(&self.config, self.rules.algorithm, &self.rules.movement)
    }

    /// Applies `choice` if it is legal in the current configuration.
    pub fn apply(&mut self, choice: EventChoice) -> Result<(), EngineError> {
        let next = apply_event(&self.config, &choice, &self.rules).map_err(|source| {
            EngineError::IllegalEvent {
                index: self.config.event_index + 1,
                event: choice.to_string(),
                source,
            }
        })?;
        let forced = self.fairness.forced(&self.config, self.rules.class);
        let completed = completed_cycles(&next, &choice);
        self.fairness.record(forced, &completed);
        self.config = next.clone();
        self.steps.push(TraceStep {
            event: choice,
            config: next,
        });
        Ok(())
    }

    fn pick(&mut self) -> Result<Option<EventChoice>, EngineError> {
        let enabled = self.enabled()?;
        Ok(match &mut self.picker {
            Picker::RoundRobin => {
                let preferred = if self.steps.len() % 2 == 0 {
                    RobotId::R
                } else {
                    RobotId::S
                };
                let full = |e: &&EventChoice| match e {
                    EventChoice::MoveProgress { .. } | EventChoice::JointLookComp => false,
                    EventChoice::MoveEnd { stop, .. } => stop == &Rational::one(),
                    EventChoice::SyncRound { activated } => {
                        activated.iter().all(|a| a.stop == Rational::one())
                    }
                    _ => true,
                };
                let solo = |e: &&EventChoice, r: RobotId| e.robots() == vec![r];
                enabled
                    .iter()
                    .filter(full)
                    .find(|e| solo(e, preferred))
                    .or_else(|| enabled.iter().filter(full).find(|e| solo(e, preferred.other())))
                    .or_else(|| enabled.iter().find(full))
                    .cloned()
            }
            Picker::Random(rng) => enabled.choose(rng).cloned(),
            Picker::Scripted(it) => it.next(),
            Picker::Manual => None,
        })
    }

    /// Lets the strategy choose and apply one event. Returns the event, or
    /// `None` once the strategy has nothing more to offer.
    pub fn step(&mut self) -> Result<Option<EventChoice>, EngineError> {
        let Some(choice) = self.pick()? else {
            return Ok(None);
        };
        self.apply(choice.clone())?;
        Ok(Some(choice))
    }

    pub fn verdict(&self) -> RunVerdict {
        let gathered_stable = self.is_rendezvous();
        let outcome = if gathered_stable {
            Outcome::RendezvousAt {
                event_index: self.config.event_index,
            }
        } else if self.config.distance_squared() > self.initial_distance {
            Outcome::Diverged
        } else {
            Outcome::BoundExhausted {
                final_distance_squared: self.config.distance_squared(),
            }
        };
        RunVerdict {
            outcome,
            gathered_stable,
        }
    }

    /// Steps until rendezvous, the event bound, or strategy exhaustion.
    pub fn run_to_end(&mut self) -> Result<(), EngineError> {
        while !self.is_rendezvous() && self.steps.len() < self.scenario.max_events {
            if self.step()?.is_none() {
                break;
            }
        }
        Ok(())
    }

    /// Steps `count` times regardless of rendezvous.
    pub fn run_for(&mut self, count: usize) -> Result<(), EngineError> {
        for _ in 0..count {
            if self.step()?.is_none() {
                break;
            }
        }
        Ok(())
    }

    pub fn into_trace(self) -> Trace {
        let verdict = self.verdict();
        Trace {
            scenario: self.scenario,
            initial: self.initial,
            steps: self.steps,
            verdict,
        }
    }
}

pub fn run(scenario: Scenario) -> Result<Trace, EngineError> {
    let mut engine = Engine::new(scenario)?;
    engine.run_to_end()?;
    Ok(engine.into_trace())
}

/// Re-applies the trace's events from its initial configuration and returns
/// the configurations reached.
pub fn replay(trace: &Trace) -> Result<Vec<Configuration>, EngineError> {
    let rules = trace.scenario.rules();
    let mut config = trace.initial.clone();
    let mut out = Vec::with_capacity(trace.steps.len());
    for step in &trace.steps {
        config = apply_event(&config, &step.event, &rules).map_err(|source| {
            EngineError::IllegalEvent {
                index: config.event_index + 1,
                event: step.event.to_string(),
                source,
            }
        })?;
        out.push(config.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpKind {
    Look,
    Comp,
    MoveBegin,
    MoveEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Before,
    After,
}

/// A point on a trace's logical clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TraceTime {
    /// The run's starting time, returned when no earlier operation exists.
    Start,
    /// The instant event `n` (1-based) happened.
    Event(u64),
}

/// Operations robot `robot` performs in event number `index` (1-based).
pub fn operations_at(trace: &Trace, index: usize, robot: RobotId) -> Vec<OpKind> {
    let step = &trace.steps[index - 1];
    let before = trace.config_at(index - 1);
    if !step.event.involves(robot) {
        return Vec::new();
    }
    let moved = before.robot(robot).position != step.config.robot(robot).position;
    match &step.event {
        EventChoice::Look { .. } => vec![OpKind::Look],
        EventChoice::Comp { .. } => vec![OpKind::Comp],
        EventChoice::LookComp { .. } | EventChoice::JointLookComp => {
            vec![OpKind::Look, OpKind::Comp]
        }
        EventChoice::MoveBegin { .. } => vec![OpKind::MoveBegin],
        EventChoice::MoveProgress { .. } => Vec::new(),
        EventChoice::MoveEnd { .. } => {
            if matches!(before.robot(robot).phase, CyclePhase::Computed { .. }) {
                vec![OpKind::MoveBegin, OpKind::MoveEnd]
            } else {
                vec![OpKind::MoveEnd]
            }
        }
        EventChoice::SyncRound { .. } => {
            if moved {
                vec![OpKind::Look, OpKind::Comp, OpKind::MoveBegin, OpKind::MoveEnd]
            } else {
                vec![OpKind::Look, OpKind::Comp]
            }
        }
    }
}

/// `t⁻(robot, op)` / `t⁺(robot, op)` relative to time `at`.
///
/// A before-query with no match yields [`TraceTime::Start`]; an
/// after-query with no match yields `None`.
pub fn query_trace(
    trace: &Trace,
    robot: RobotId,
    op: OpKind,
    at: TraceTime,
    direction: Direction,
) -> Option<TraceTime> {
    let at = match at {
        TraceTime::Start => 0,
        TraceTime::Event(n) => n as usize,
    };
    let n = trace.steps.len();
    let hit = |k: usize| operations_at(trace, k, robot).contains(&op);
    match direction {
        Direction::Before => Some(
            (1..at.min(n + 1))
                .rev()
                .find(|&k| hit(k))
                .map(|k| TraceTime::Event(k as u64))
                .unwrap_or(TraceTime::Start),
        ),
        Direction::After => (at + 1..=n).find(|&k| hit(k)).map(|k| TraceTime::Event(k as u64)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleStartRecord {
    pub index: u64,
    pub lights: (Color, Color),
    pub distance_squared: Rational,
}

/// Every cycle start time of the trace, including the initial one.
pub fn progress_metrics(trace: &Trace) -> Vec<CycleStartRecord> {
    let algorithm = trace.scenario.algorithm;
    (0..=trace.steps.len())
        .map(|i| trace.config_at(i))
        .filter(|c| is_cycle_start_time(c, algorithm))
        .map(|c| CycleStartRecord {
            index: c.event_index,
            lights: c.lights(),
            distance_squared: c.distance_squared(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduler::Activation;

    fn fsync_scenario() -> Scenario {
        Scenario::on_line(
            AlgorithmId::Rendezvous,
            SchedulerClass::FSYNC,
            MovementModel::Rigid,
            (Color::A, Color::A),
            (0.into(), 10.into()),
        )
    }

    #[test]
    fn fsync_hand_trace() {
        let trace = run(fsync_scenario()).unwrap();
        assert_eq!(
            trace.verdict.outcome,
            Outcome::RendezvousAt { event_index: 1 }
        );
        let last = trace.last_config();
        assert_eq!(last.robots[0].position, Point::on_axis(5.into()));
        assert_eq!(last.robots[1].position, Point::on_axis(5.into()));
        assert_eq!(last.lights(), (Color::B, Color::B));
        let metrics = progress_metrics(&trace);
        assert_eq!(
            metrics,
            vec![
                CycleStartRecord {
                    index: 0,
                    lights: (Color::A, Color::A),
                    distance_squared: 100.into()
                },
                CycleStartRecord {
                    index: 1,
                    lights: (Color::B, Color::B),
                    distance_squared: 0.into()
                },
            ]
        );
    }

    #[test]
    fn empty_trace_metrics() {
        let trace = Engine::new(fsync_scenario()).unwrap().into_trace();
        assert_eq!(
            progress_metrics(&trace),
            vec![CycleStartRecord {
                index: 0,
                lights: (Color::A, Color::A),
                distance_squared: 100.into()
            }]
        );
    }

    #[test]
    fn validation_errors_name_fields() {
        let mut s = fsync_scenario();
        s.movement = MovementModel::NonRigid { delta: 0.into() };
        assert_eq!(
            s.validate().unwrap_err().to_string(),
            "movement.delta: delta must be positive"
        );
        let mut s = fsync_scenario();
        s.algorithm = AlgorithmId::RendezvousWithDelta;
        assert_eq!(s.validate().unwrap_err().field, "algorithm");
        let mut s = fsync_scenario();
        s.initial_positions.1 = Point::from_ints(1, 1);
        assert_eq!(s.validate().unwrap_err().field, "initial_positions");
    }

    #[test]
    fn stability_certificate_cases() {
        let p = Point::on_axis(3.into());
        for lights in [(Color::B, Color::B), (Color::A, Color::A)] {
            let c = Configuration::initial((p.clone(), p.clone()), lights);
            assert_eq!(
                stability_certificate(&c, AlgorithmId::Rendezvous, &MovementModel::Rigid),
                Ok(true)
            );
        }
        let c = Configuration::initial((p.clone(), Point::origin()), (Color::B, Color::B));
        assert_eq!(
            stability_certificate(&c, AlgorithmId::Rendezvous, &MovementModel::Rigid),
            Err(EngineError::CertificatePrecondition)
        );
        let delta = MovementModel::NonRigidKnownDelta { delta: 1.into() };
        let c = Configuration::initial((p.clone(), p), (Color::A, Color::B));
        assert_eq!(
            stability_certificate(&c, AlgorithmId::RendezvousWithDelta, &delta),
            Ok(true)
        );
    }

    #[test]
    fn ssync_fairness_overrides_starving_script() {
        // the adversary wants to activate only r; the window forces s
        let mut s = fsync_scenario();
        s.scheduler = SchedulerClass::SSYNC;
        s.initial_lights = (Color::B, Color::A);
        let mut engine = Engine::new(s.with_strategy(AdversaryStrategy::Interactive {
            session: "t".into(),
        }))
        .unwrap();
        let only_r = EventChoice::SyncRound {
            activated: vec![Activation {
                robot: RobotId::R,
                stop: Rational::one(),
            }],
        };
        let mut s_acted = false;
        for _ in 0..DEFAULT_FAIRNESS_WINDOW {
            let enabled = engine.enabled().unwrap();
            let choice = if enabled.contains(&only_r) {
                only_r.clone()
            } else {
                s_acted = true;
                enabled[0].clone()
            };
            engine.apply(choice).unwrap();
        }
        assert!(s_acted);
    }

    #[test]
    fn trace_queries() {
        let s = fsync_scenario();
        let mut s = s.with_strategy(AdversaryStrategy::RoundRobin);
        s.scheduler = SchedulerClass::ASYNC;
        let trace = run(s).unwrap();
        // round robin: Look r, Look s, Comp r, Comp s, MoveBegin r, MoveBegin s, ...
        assert_eq!(
            query_trace(&trace, RobotId::R, OpKind::Look, TraceTime::Start, Direction::Before),
            Some(TraceTime::Start)
        );
        let begin = query_trace(&trace, RobotId::S, OpKind::MoveBegin, TraceTime::Start, Direction::After)
            .unwrap();
        let end = query_trace(&trace, RobotId::S, OpKind::MoveEnd, begin, Direction::After).unwrap();
        let TraceTime::Event(e) = end else { panic!() };
        assert!(matches!(
            trace.steps[e as usize - 1].event,
            EventChoice::MoveEnd { robot: RobotId::S, .. }
        ));
        let last = TraceTime::Event(trace.steps.len() as u64);
        assert_eq!(
            query_trace(&trace, RobotId::R, OpKind::Look, last, Direction::After),
            None
        );
    }
}
