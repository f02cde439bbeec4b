//! The adversary's move set.
//!
//! Continuous time is replaced by an interleaving of atomic events. The
//! adversary picks the next event, how far a moving robot has visibly
//! progressed before the other one looks, and (under non-rigid movement)
//! where a move stops.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{compute, AlgorithmError, AlgorithmId};
use crate::geometry::{distance, lerp, Point};
use crate::model::{Configuration, CyclePhase, MovementModel, PhaseKind, RobotId, Snapshot};
use crate::rational::Rational;

#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchedulerClass {
    FSYNC,
    SSYNC,
    ASYNC,
    /// Look and Compute of one cycle happen as a single event.
    LCAtomicASYNC,
    /// Moves are instantaneous; observers only ever see the end point.
    MoveAtomicASYNC,
}

impl SchedulerClass {
    pub const ALL: [SchedulerClass; 5] = [
        SchedulerClass::FSYNC,
        SchedulerClass::SSYNC,
        SchedulerClass::ASYNC,
        SchedulerClass::LCAtomicASYNC,
        SchedulerClass::MoveAtomicASYNC,
    ];

    pub fn is_synchronous(self) -> bool {
        matches!(self, SchedulerClass::FSYNC | SchedulerClass::SSYNC)
    }

    /// Worst-case number of events for a robot in `phase` to finish its
    /// current cycle.
    fn events_to_complete(self, phase: PhaseKind) -> usize {
        use PhaseKind::*;
        match (self, phase) {
            (SchedulerClass::FSYNC | SchedulerClass::SSYNC, _) => 1,
            (SchedulerClass::ASYNC, Idle) => 4,
            (SchedulerClass::LCAtomicASYNC, Idle) => 3,
            (SchedulerClass::MoveAtomicASYNC, Idle) => 3,
            (SchedulerClass::MoveAtomicASYNC, Looked) => 2,
            (_, Looked) => 3,
            (SchedulerClass::MoveAtomicASYNC, Computed) => 1,
            (_, Computed) => 2,
            (_, Moving) => 1,
        }
    }
}

impl fmt::Display for SchedulerClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SchedulerClass::FSYNC => "FSYNC",
            SchedulerClass::SSYNC => "SSYNC",
            SchedulerClass::ASYNC => "ASYNC",
            SchedulerClass::LCAtomicASYNC => "LC-atomic ASYNC",
            SchedulerClass::MoveAtomicASYNC => "Move-atomic ASYNC",
        };
        f.write_str(s)
    }
}

/// A robot activated in a synchronous round, with where its move stops.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Activation {
    pub robot: RobotId,
    pub stop: Rational,
}

/// One atomic scheduling decision.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum EventChoice {
    Look { robot: RobotId },
    Comp { robot: RobotId },
    /// LC-atomic only.
    LookComp { robot: RobotId },
    /// LC-atomic only: both robots Look at the same instant, then Compute.
    JointLookComp,
    MoveBegin { robot: RobotId },
    /// Exposes the moving robot at `fraction` of its segment.
    MoveProgress { robot: RobotId, fraction: Rational },
    /// Ends the move at `stop` of its segment. Under Move-atomic ASYNC this
    /// is the whole move, issued straight from the Computed phase.
    MoveEnd { robot: RobotId, stop: Rational },
    /// SSYNC/FSYNC: every activated robot performs a full cycle on a common
    /// snapshot.
    SyncRound { activated: Vec<Activation> },
}

impl EventChoice {
    /// Robots whose cycle this event advances.
    pub fn robots(&self) -> Vec<RobotId> {
        match self {
            EventChoice::Look { robot }
            | EventChoice::Comp { robot }
            | EventChoice::LookComp { robot }
            | EventChoice::MoveBegin { robot }
            | EventChoice::MoveProgress { robot, .. }
            | EventChoice::MoveEnd { robot, .. } => vec![*robot],
            EventChoice::JointLookComp => RobotId::BOTH.to_vec(),
            EventChoice::SyncRound { activated } => activated.iter().map(|a| a.robot).collect(),
        }
    }

    pub fn involves(&self, robot: RobotId) -> bool {
        self.robots().contains(&robot)
    }

    pub fn is_progress(&self) -> bool {
        matches!(self, EventChoice::MoveProgress { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            EventChoice::Look { .. } => "Look",
            EventChoice::Comp { .. } => "Comp",
            EventChoice::LookComp { .. } => "LookComp",
            EventChoice::JointLookComp => "JointLookComp",
            EventChoice::MoveBegin { .. } => "MoveBegin",
            EventChoice::MoveProgress { .. } => "MoveProgress",
            EventChoice::MoveEnd { .. } => "MoveEnd",
            EventChoice::SyncRound { .. } => "SyncRound",
        }
    }
}

impl fmt::Display for EventChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventChoice::Look { robot } => write!(f, "Look({robot})"),
            EventChoice::Comp { robot } => write!(f, "Comp({robot})"),
            EventChoice::LookComp { robot } => write!(f, "LookComp({robot})"),
            EventChoice::JointLookComp => f.write_str("JointLookComp(r,s)"),
            EventChoice::MoveBegin { robot } => write!(f, "MoveBegin({robot})"),
            EventChoice::MoveProgress { robot, fraction } => {
                write!(f, "MoveProgress({robot}, {fraction})")
            }
            EventChoice::MoveEnd { robot, stop } => write!(f, "MoveEnd({robot}, {stop})"),
            EventChoice::SyncRound { activated } => {
                f.write_str("SyncRound(")?;
                for (i, a) in activated.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}@{}", a.robot, a.stop)?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Finite set of fractions the adversary draws from, always containing 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Rational>", into = "Vec<Rational>")]
pub struct FractionSet(Vec<Rational>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FractionSetError {
    #[error("fraction {0} outside (0, 1]")]
    OutOfRange(Rational),
    #[error("fraction set must contain 1")]
    MissingOne,
}

impl FractionSet {
    pub fn new(mut fractions: Vec<Rational>) -> Result<Self, FractionSetError> {
        for f in &fractions {
            if !f.is_positive() || f > &Rational::one() {
                return Err(FractionSetError::OutOfRange(f.clone()));
            }
        }
        fractions.sort();
        fractions.dedup();
        if fractions.last() != Some(&Rational::one()) {
            return Err(FractionSetError::MissingOne);
        }
        Ok(FractionSet(fractions))
    }

    /// {1/2, 1}
    pub fn halves() -> Self {
        FractionSet(vec![Rational::new(1, 2), Rational::one()])
    }

    /// {1/4, 1/2, 3/4, 1}
    pub fn quarters() -> Self {
        FractionSet((1..=4).map(|n| Rational::new(n, 4)).collect())
    }

    pub fn only_one() -> Self {
        FractionSet(vec![Rational::one()])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rational> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }
}

impl Default for FractionSet {
    fn default() -> Self {
        FractionSet::quarters()
    }
}

impl TryFrom<Vec<Rational>> for FractionSet {
    type Error = FractionSetError;
    fn try_from(v: Vec<Rational>) -> Result<Self, Self::Error> {
        FractionSet::new(v)
    }
}

impl From<FractionSet> for Vec<Rational> {
    fn from(f: FractionSet) -> Self {
        f.0
    }
}

/// Everything the transition relation depends on besides the configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rules {
    pub algorithm: AlgorithmId,
    pub class: SchedulerClass,
    pub movement: MovementModel,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchedulerError {
    #[error("{event} is not allowed under {class}")]
    WrongClass { event: String, class: SchedulerClass },
    #[error("robot {robot} cannot {event} while {phase}")]
    WrongPhase {
        robot: RobotId,
        event: String,
        phase: PhaseKind,
    },
    #[error("fraction {0} outside (0, 1]")]
    FractionOutOfRange(Rational),
    #[error("stop fraction must be 1 under rigid movement")]
    RigidStop,
    #[error("stop violates minimum distance δ")]
    BelowMinimumDistance,
    #[error("progress fraction {fraction} must exceed the observed fraction {observed} and stay below 1")]
    ProgressNotIncreasing { fraction: Rational, observed: Rational },
    #[error("stop fraction {stop} is behind the observed progress {observed}")]
    StopBehindProgress { stop: Rational, observed: Rational },
    #[error("a synchronous round must activate at least one robot, each at most once")]
    BadActivationSet,
    #[error("FSYNC rounds activate both robots")]
    FsyncNeedsBoth,
    #[error("robot {0} does not move this round; its stop fraction must be 1")]
    StationaryStop(RobotId),
    #[error("fairness window forces robot {0} to act")]
    Unfair(RobotId),
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
}

fn check_fraction(f: &Rational) -> Result<(), SchedulerError> {
    if !f.is_positive() || f > &Rational::one() {
        return Err(SchedulerError::FractionOutOfRange(f.clone()));
    }
    Ok(())
}

/// Whether stopping at `stop` of the segment `origin → target` honours the
/// movement model.
pub fn check_stop(
    movement: &MovementModel,
    origin: &Point,
    target: &Point,
    stop: &Rational,
) -> Result<(), SchedulerError> {
    check_fraction(stop)?;
    if stop == &Rational::one() {
        return Ok(());
    }
    match movement.min_travel() {
        None => Err(SchedulerError::RigidStop),
        Some(delta) => {
            // travel = stop · |target - origin| ≥ δ, compared squared
            let travel_sq = distance(origin, target) * &(stop * stop);
            if travel_sq.cmp(&(delta * delta)) == Ordering::Less {
                Err(SchedulerError::BelowMinimumDistance)
            } else {
                Ok(())
            }
        }
    }
}

fn wrong_phase(robot: RobotId, event: &EventChoice, phase: &CyclePhase) -> SchedulerError {
    SchedulerError::WrongPhase {
        robot,
        event: event.kind_name().to_string(),
        phase: phase.kind(),
    }
}

fn class_allows(class: SchedulerClass, event: &EventChoice) -> bool {
    use SchedulerClass::*;
    match event {
        EventChoice::Look { .. } | EventChoice::Comp { .. } => {
            matches!(class, ASYNC | MoveAtomicASYNC)
        }
        EventChoice::LookComp { .. } | EventChoice::JointLookComp => class == LCAtomicASYNC,
        EventChoice::MoveBegin { .. } | EventChoice::MoveProgress { .. } => {
            matches!(class, ASYNC | LCAtomicASYNC)
        }
        EventChoice::MoveEnd { .. } => matches!(class, ASYNC | LCAtomicASYNC | MoveAtomicASYNC),
        EventChoice::SyncRound { .. } => class.is_synchronous(),
    }
}

fn look(config: &mut Configuration, robot: RobotId, movement: &MovementModel) {
    let me = config.robot(robot);
    let other = config.robot(robot.other());
    let snapshot = Snapshot::observe(&me.position, me.light, &other.position, other.light, movement);
    config.robot_mut(robot).phase = CyclePhase::Looked { snapshot };
}

/// Runs Compute on the stored snapshot. Returns whether the robot has a
/// move to make.
fn comp(config: &mut Configuration, robot: RobotId, algorithm: AlgorithmId) -> Result<bool, SchedulerError> {
    let state = config.robot_mut(robot);
    let CyclePhase::Looked { snapshot } = &state.phase else {
        unreachable!("comp on a robot that has not looked");
    };
    let out = compute(algorithm, snapshot)?;
    let dest = &state.position + &(&out.destination - &snapshot.me_position);
    state.light = out.new_light;
    if dest == state.position {
        state.phase = CyclePhase::Idle;
        Ok(false)
    } else {
        state.phase = CyclePhase::Computed { dest };
        Ok(true)
    }
}

/// Applies one event, rejecting it with a reason if it is not legal.
pub fn apply_event(
    config: &Configuration,
    choice: &EventChoice,
    rules: &Rules,
) -> Result<Configuration, SchedulerError> {
    if !class_allows(rules.class, choice) {
        return Err(SchedulerError::WrongClass {
            event: choice.kind_name().to_string(),
            class: rules.class,
        });
    }
    let mut next = config.clone();
    next.event_index += 1;
    match choice {
        EventChoice::Look { robot } => {
            let phase = &config.robot(*robot).phase;
            if !matches!(phase, CyclePhase::Idle) {
                return Err(wrong_phase(*robot, choice, phase));
            }
            look(&mut next, *robot, &rules.movement);
        }
        EventChoice::Comp { robot } => {
            let phase = &config.robot(*robot).phase;
            if !matches!(phase, CyclePhase::Looked { .. }) {
                return Err(wrong_phase(*robot, choice, phase));
            }
            comp(&mut next, *robot, rules.algorithm)?;
        }
        EventChoice::LookComp { robot } => {
            let phase = &config.robot(*robot).phase;
            if !matches!(phase, CyclePhase::Idle) {
                return Err(wrong_phase(*robot, choice, phase));
            }
            look(&mut next, *robot, &rules.movement);
            comp(&mut next, *robot, rules.algorithm)?;
        }
        EventChoice::JointLookComp => {
            for robot in RobotId::BOTH {
                let phase = &config.robot(robot).phase;
                if !matches!(phase, CyclePhase::Idle) {
                    return Err(wrong_phase(robot, choice, phase));
                }
            }
            for robot in RobotId::BOTH {
                look(&mut next, robot, &rules.movement);
            }
            for robot in RobotId::BOTH {
                comp(&mut next, robot, rules.algorithm)?;
            }
        }
        EventChoice::MoveBegin { robot } => {
            let state = next.robot_mut(*robot);
            let CyclePhase::Computed { dest } = &state.phase else {
                return Err(wrong_phase(*robot, choice, &config.robot(*robot).phase));
            };
            state.phase = CyclePhase::Moving {
                origin: state.position.clone(),
                target: dest.clone(),
                observed: Rational::zero(),
            };
        }
        EventChoice::MoveProgress { robot, fraction } => {
            let state = next.robot_mut(*robot);
            let CyclePhase::Moving { origin, target, observed } = &mut state.phase else {
                return Err(wrong_phase(*robot, choice, &config.robot(*robot).phase));
            };
            if fraction <= observed || fraction >= &Rational::one() {
                return Err(SchedulerError::ProgressNotIncreasing {
                    fraction: fraction.clone(),
                    observed: observed.clone(),
                });
            }
            state.position = lerp(origin, target, fraction);
            *observed = fraction.clone();
        }
        EventChoice::MoveEnd { robot, stop } => {
            let state = next.robot_mut(*robot);
            let (origin, target) = match (&state.phase, rules.class) {
                (CyclePhase::Moving { origin, target, observed }, _) => {
                    if stop < observed {
                        return Err(SchedulerError::StopBehindProgress {
                            stop: stop.clone(),
                            observed: observed.clone(),
                        });
                    }
                    (origin.clone(), target.clone())
                }
                (CyclePhase::Computed { dest }, SchedulerClass::MoveAtomicASYNC) => {
                    (state.position.clone(), dest.clone())
                }
                (phase, _) => return Err(wrong_phase(*robot, choice, phase)),
            };
            check_stop(&rules.movement, &origin, &target, stop)?;
            state.position = lerp(&origin, &target, stop);
            state.phase = CyclePhase::Idle;
        }
        EventChoice::SyncRound { activated } => {
            let mut seen = [false; 2];
            for a in activated {
                if std::mem::replace(&mut seen[a.robot.index()], true) {
                    return Err(SchedulerError::BadActivationSet);
                }
            }
            if activated.is_empty() {
                return Err(SchedulerError::BadActivationSet);
            }
            if rules.class == SchedulerClass::FSYNC && activated.len() != 2 {
                return Err(SchedulerError::FsyncNeedsBoth);
            }
            for a in activated {
                let phase = &config.robot(a.robot).phase;
                if !matches!(phase, CyclePhase::Idle) {
                    return Err(wrong_phase(a.robot, choice, phase));
                }
            }
            // common snapshot: every Look happens before any Compute
            for a in activated {
                look(&mut next, a.robot, &rules.movement);
            }
            for a in activated {
                let origin = next.robot(a.robot).position.clone();
                if comp(&mut next, a.robot, rules.algorithm)? {
                    let state = next.robot_mut(a.robot);
                    let CyclePhase::Computed { dest } = &state.phase else {
                        unreachable!()
                    };
                    check_stop(&rules.movement, &origin, dest, &a.stop)?;
                    state.position = lerp(&origin, dest, &a.stop);
                    state.phase = CyclePhase::Idle;
                } else if a.stop != Rational::one() {
                    return Err(SchedulerError::StationaryStop(a.robot));
                }
            }
        }
    }
    Ok(next)
}

/// Robots that finish a cycle with this event.
pub fn completed_cycles(after: &Configuration, choice: &EventChoice) -> Vec<RobotId> {
    choice
        .robots()
        .into_iter()
        .filter(|r| matches!(after.robot(*r).phase, CyclePhase::Idle))
        .collect()
}

/// Stop fractions from `fractions` that are legal for `origin → target`.
fn legal_stops<'a>(
    movement: &'a MovementModel,
    origin: &'a Point,
    target: &'a Point,
    floor: &'a Rational,
    fractions: &'a FractionSet,
) -> impl Iterator<Item = Rational> + 'a {
    fractions
        .iter()
        .filter(move |f| *f >= floor && check_stop(movement, origin, target, f).is_ok())
        .cloned()
}

fn robot_events(
    config: &Configuration,
    robot: RobotId,
    rules: &Rules,
    fractions: &FractionSet,
    out: &mut Vec<EventChoice>,
) {
    use SchedulerClass::*;
    let state = config.robot(robot);
    match (&state.phase, rules.class) {
        (CyclePhase::Idle, ASYNC | MoveAtomicASYNC) => out.push(EventChoice::Look { robot }),
        (CyclePhase::Idle, LCAtomicASYNC) => out.push(EventChoice::LookComp { robot }),
        (CyclePhase::Looked { .. }, _) => out.push(EventChoice::Comp { robot }),
        (CyclePhase::Computed { .. }, ASYNC | LCAtomicASYNC) => {
            out.push(EventChoice::MoveBegin { robot })
        }
        (CyclePhase::Computed { dest }, MoveAtomicASYNC) => {
            let zero = Rational::zero();
            for stop in legal_stops(&rules.movement, &state.position, dest, &zero, fractions) {
                out.push(EventChoice::MoveEnd { robot, stop });
            }
        }
        (CyclePhase::Moving { origin, target, observed }, _) => {
            for f in fractions.iter() {
                if f > observed && f < &Rational::one() {
                    out.push(EventChoice::MoveProgress {
                        robot,
                        fraction: f.clone(),
                    });
                }
            }
            for stop in legal_stops(&rules.movement, origin, target, observed, fractions) {
                out.push(EventChoice::MoveEnd { robot, stop });
            }
        }
        _ => {}
    }
}

/// Legal stop fractions for each robot if it were activated in a round now.
fn round_options(
    config: &Configuration,
    robot: RobotId,
    rules: &Rules,
    fractions: &FractionSet,
) -> Result<Vec<Rational>, SchedulerError> {
    let me = config.robot(robot);
    let other = config.robot(robot.other());
    let snap = Snapshot::observe(&me.position, me.light, &other.position, other.light, &rules.movement);
    let out = compute(rules.algorithm, &snap)?;
    let dest = &me.position + &out.destination;
    if dest == me.position {
        return Ok(vec![Rational::one()]);
    }
    let zero = Rational::zero();
    Ok(legal_stops(&rules.movement, &me.position, &dest, &zero, fractions).collect())
}

fn sync_rounds(
    config: &Configuration,
    rules: &Rules,
    fractions: &FractionSet,
    must_include: Option<RobotId>,
    out: &mut Vec<EventChoice>,
) -> Result<(), SchedulerError> {
    let opts = [
        round_options(config, RobotId::R, rules, fractions)?,
        round_options(config, RobotId::S, rules, fractions)?,
    ];
    let subsets: &[&[RobotId]] = if rules.class == SchedulerClass::FSYNC {
        &[&[RobotId::R, RobotId::S]]
    } else {
        &[&[RobotId::R], &[RobotId::S], &[RobotId::R, RobotId::S]]
    };
    for subset in subsets {
        if let Some(m) = must_include {
            if !subset.contains(&m) {
                continue;
            }
        }
        let mut partial: Vec<Vec<Activation>> = vec![vec![]];
        for robot in subset.iter() {
            let mut grown = Vec::new();
            for p in &partial {
                for stop in &opts[robot.index()] {
                    let mut q = p.clone();
                    q.push(Activation {
                        robot: *robot,
                        stop: stop.clone(),
                    });
                    grown.push(q);
                }
            }
            partial = grown;
        }
        out.extend(partial.into_iter().map(|activated| EventChoice::SyncRound { activated }));
    }
    Ok(())
}

/// Per-run fairness bookkeeping: events since each robot last finished a
/// cycle, and which robot (if any) is currently being forced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessState {
    pub window: usize,
    pub lag: [usize; 2],
    pub serving: Option<RobotId>,
}

/// Smallest window for which the forcing rule can always be honoured.
pub const MIN_FAIRNESS_WINDOW: usize = 8;
const RESERVE: usize = 4;

impl FairnessState {
    pub fn new(window: usize) -> Self {
        FairnessState {
            window,
            lag: [0, 0],
            serving: None,
        }
    }

    fn slack(&self, config: &Configuration, class: SchedulerClass, robot: RobotId) -> isize {
        let need = class.events_to_complete(config.robot(robot).phase.kind());
        self.window as isize - self.lag[robot.index()] as isize - need as isize
    }

    /// The robot the window currently forces to act, if any.
    pub fn forced(&self, config: &Configuration, class: SchedulerClass) -> Option<RobotId> {
        if class == SchedulerClass::FSYNC {
            return None;
        }
        if self.serving.is_some() {
            return self.serving;
        }
        let r = self.slack(config, class, RobotId::R);
        let s = self.slack(config, class, RobotId::S);
        let reserve = RESERVE as isize;
        match (r <= reserve, s <= reserve) {
            (false, false) => None,
            (true, false) => Some(RobotId::R),
            (false, true) => Some(RobotId::S),
            (true, true) => Some(if s < r { RobotId::S } else { RobotId::R }),
        }
    }

    /// Books one applied event.
    pub fn record(&mut self, forced: Option<RobotId>, completed: &[RobotId]) {
        for lag in &mut self.lag {
            *lag += 1;
        }
        for r in completed {
            self.lag[r.index()] = 0;
        }
        self.serving = forced.filter(|r| !completed.contains(r));
    }
}

/// Every event the adversary may choose next, in a fixed order.
///
/// When `fairness` is given and forces a robot, only that robot's
/// cycle-advancing events are offered (no mid-move progress exposures).
pub fn enabled_events(
    config: &Configuration,
    rules: &Rules,
    fractions: &FractionSet,
    fairness: Option<&FairnessState>,
) -> Result<Vec<EventChoice>, SchedulerError> {
    let forced = fairness.and_then(|f| f.forced(config, rules.class));
    let mut out = Vec::new();
    if rules.class.is_synchronous() {
        sync_rounds(config, rules, fractions, forced, &mut out)?;
        return Ok(out);
    }
    for robot in RobotId::BOTH {
        if forced.is_some_and(|f| f != robot) {
            continue;
        }
        robot_events(config, robot, rules, fractions, &mut out);
    }
    if rules.class == SchedulerClass::LCAtomicASYNC
        && config.robots.iter().all(|r| matches!(r.phase, CyclePhase::Idle))
    {
        out.push(EventChoice::JointLookComp);
    }
    if forced.is_some() {
        out.retain(|e| !e.is_progress());
    }
    Ok(out)
}

/// A cycle start time: both robots' next effective operation is a Look.
/// A pending operation that neither changes the light nor moves counts as
/// already done.
pub fn is_cycle_start_time(config: &Configuration, algorithm: AlgorithmId) -> bool {
    config.robots.iter().all(|robot| match &robot.phase {
        CyclePhase::Idle => true,
        CyclePhase::Looked { snapshot } => match compute(algorithm, snapshot) {
            Ok(out) => out.new_light == robot.light && out.destination == snapshot.me_position,
            Err(_) => false,
        },
        CyclePhase::Computed { dest } => dest == &robot.position,
        CyclePhase::Moving { .. } => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Color;

    fn axis(n: i64) -> Point {
        Point::on_axis(n.into())
    }

    fn rules(class: SchedulerClass, movement: MovementModel) -> Rules {
        Rules {
            algorithm: AlgorithmId::Rendezvous,
            class,
            movement,
        }
    }

    fn nonrigid(d: i64) -> MovementModel {
        MovementModel::NonRigid { delta: d.into() }
    }

    fn start(lights: (Color, Color)) -> Configuration {
        Configuration::initial((axis(0), axis(4)), lights)
    }

    #[test]
    fn idle_async_offers_looks() {
        let c = start((Color::A, Color::A));
        let ev = enabled_events(&c, &rules(SchedulerClass::ASYNC, MovementModel::Rigid), &FractionSet::quarters(), None).unwrap();
        assert_eq!(
            ev,
            vec![
                EventChoice::Look { robot: RobotId::R },
                EventChoice::Look { robot: RobotId::S }
            ]
        );
    }

    fn moving_r(movement: MovementModel) -> (Configuration, Rules) {
        // r at 0 heading to 4 (B,A: r goes to s's position)
        let mut c = Configuration::initial((axis(0), axis(4)), (Color::A, Color::B));
        c.robots[0].phase = CyclePhase::Moving {
            origin: axis(0),
            target: axis(4),
            observed: Rational::zero(),
        };
        (c, rules(SchedulerClass::ASYNC, movement))
    }

    fn move_end_stops(ev: &[EventChoice]) -> Vec<Rational> {
        ev.iter()
            .filter_map(|e| match e {
                EventChoice::MoveEnd { robot: RobotId::R, stop } => Some(stop.clone()),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn nonrigid_stop_choices() {
        let (c, r) = moving_r(nonrigid(1));
        let ev = enabled_events(&c, &r, &FractionSet::quarters(), None).unwrap();
        assert_eq!(move_end_stops(&ev), FractionSet::quarters().as_slice());
        let (c, r) = moving_r(nonrigid(2));
        let ev = enabled_events(&c, &r, &FractionSet::quarters(), None).unwrap();
        assert_eq!(
            move_end_stops(&ev),
            vec![Rational::new(1, 2), Rational::new(3, 4), Rational::one()]
        );
        // displacement below δ forces a full move
        let (c, r) = moving_r(nonrigid(5));
        let ev = enabled_events(&c, &r, &FractionSet::quarters(), None).unwrap();
        assert_eq!(move_end_stops(&ev), vec![Rational::one()]);
    }

    #[test]
    fn rigid_stop_choices() {
        let (c, r) = moving_r(MovementModel::Rigid);
        let ev = enabled_events(&c, &r, &FractionSet::quarters(), None).unwrap();
        assert_eq!(move_end_stops(&ev), vec![Rational::one()]);
        let err = apply_event(
            &c,
            &EventChoice::MoveEnd {
                robot: RobotId::R,
                stop: Rational::new(1, 2),
            },
            &r,
        )
        .unwrap_err();
        assert_eq!(err, SchedulerError::RigidStop);
    }

    #[test]
    fn short_stop_rejected_with_reason() {
        let (c, r) = moving_r(nonrigid(2));
        let err = apply_event(
            &c,
            &EventChoice::MoveEnd {
                robot: RobotId::R,
                stop: Rational::new(1, 4),
            },
            &r,
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "stop violates minimum distance δ");
    }

    #[test]
    fn progress_is_monotone() {
        let (c, r) = moving_r(MovementModel::Rigid);
        let half = Rational::new(1, 2);
        let c = apply_event(
            &c,
            &EventChoice::MoveProgress {
                robot: RobotId::R,
                fraction: half.clone(),
            },
            &r,
        )
        .unwrap();
        assert_eq!(c.robots[0].position, axis(2));
        let err = apply_event(
            &c,
            &EventChoice::MoveProgress {
                robot: RobotId::R,
                fraction: Rational::new(1, 4),
            },
            &r,
        )
        .unwrap_err();
        assert!(matches!(err, SchedulerError::ProgressNotIncreasing { .. }));
    }

    #[test]
    fn look_then_comp_uses_stale_snapshot() {
        let r = rules(SchedulerClass::ASYNC, MovementModel::Rigid);
        let c = Configuration::initial((axis(0), axis(10)), (Color::A, Color::A));
        let c = apply_event(&c, &EventChoice::Look { robot: RobotId::R }, &r).unwrap();
        let c = apply_event(&c, &EventChoice::Look { robot: RobotId::S }, &r).unwrap();
        let c = apply_event(&c, &EventChoice::Comp { robot: RobotId::S }, &r).unwrap();
        // s turned B, but r's snapshot still has (A, A)
        let c = apply_event(&c, &EventChoice::Comp { robot: RobotId::R }, &r).unwrap();
        assert_eq!(c.robots[0].light, Color::B);
        assert_eq!(c.robots[0].phase, CyclePhase::Computed { dest: axis(5) });
        assert_eq!(c.event_index, 4);
    }

    #[test]
    fn wrong_class_and_phase() {
        let c = start((Color::A, Color::A));
        let r = rules(SchedulerClass::LCAtomicASYNC, MovementModel::Rigid);
        let err = apply_event(&c, &EventChoice::Look { robot: RobotId::R }, &r).unwrap_err();
        assert!(matches!(err, SchedulerError::WrongClass { .. }));
        let r = rules(SchedulerClass::ASYNC, MovementModel::Rigid);
        let err = apply_event(&c, &EventChoice::Comp { robot: RobotId::R }, &r).unwrap_err();
        assert_eq!(err.to_string(), "robot r cannot Comp while Idle");
    }

    #[test]
    fn ssync_round_both_b_flip_without_moving() {
        let r = rules(SchedulerClass::SSYNC, MovementModel::Rigid);
        let c = start((Color::B, Color::B));
        let round = EventChoice::SyncRound {
            activated: vec![
                Activation { robot: RobotId::R, stop: Rational::one() },
                Activation { robot: RobotId::S, stop: Rational::one() },
            ],
        };
        let next = apply_event(&c, &round, &r).unwrap();
        assert_eq!(next.lights(), (Color::A, Color::A));
        assert_eq!(next.robots[0].position, axis(0));
        assert_eq!(next.robots[1].position, axis(4));
    }

    #[test]
    fn cycle_start_normalization() {
        let mut c = start((Color::A, Color::B));
        assert!(is_cycle_start_time(&c, AlgorithmId::Rendezvous));
        c.robots[0].phase = CyclePhase::Moving {
            origin: axis(0),
            target: axis(4),
            observed: Rational::zero(),
        };
        assert!(!is_cycle_start_time(&c, AlgorithmId::Rendezvous));
        c.robots[0].phase = CyclePhase::Computed { dest: axis(0) };
        assert!(is_cycle_start_time(&c, AlgorithmId::Rendezvous));
        // s is B and sees r with A: its pending compute is "stay", no-op
        let r = rules(SchedulerClass::ASYNC, MovementModel::Rigid);
        let c = apply_event(&start((Color::A, Color::B)), &EventChoice::Look { robot: RobotId::S }, &r).unwrap();
        assert!(is_cycle_start_time(&c, AlgorithmId::Rendezvous));
        // r is A and sees s with B: its pending compute moves
        let c = apply_event(&c, &EventChoice::Look { robot: RobotId::R }, &r).unwrap();
        assert!(!is_cycle_start_time(&c, AlgorithmId::Rendezvous));
    }

    #[test]
    fn fairness_forces_lagging_robot() {
        let r = rules(SchedulerClass::SSYNC, MovementModel::Rigid);
        let mut fair = FairnessState::new(16);
        let c = start((Color::A, Color::A));
        fair.lag = [0, 12];
        assert_eq!(fair.forced(&c, r.class), Some(RobotId::S));
        let ev = enabled_events(&c, &r, &FractionSet::only_one(), Some(&fair)).unwrap();
        assert!(ev.iter().all(|e| e.involves(RobotId::S)));
        assert!(!ev.is_empty());
    }

    #[test]
    fn fraction_set_validation() {
        assert_eq!(
            FractionSet::new(vec![Rational::new(1, 2)]),
            Err(FractionSetError::MissingOne)
        );
        assert!(matches!(
            FractionSet::new(vec![Rational::zero(), Rational::one()]),
            Err(FractionSetError::OutOfRange(_))
        ));
    }
}
