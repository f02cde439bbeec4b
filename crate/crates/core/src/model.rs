//! Robot and configuration state.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{distance, Point};
use crate::rational::Rational;

/// One of the two light colors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    A,
    B,
}

impl Color {
    pub const ALL: [Color; 2] = [Color::A, Color::B];
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Color::A => f.write_str("A"),
            Color::B => f.write_str("B"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RobotId {
    #[serde(rename = "r")]
    R,
    #[serde(rename = "s")]
    S,
}

impl RobotId {
    pub const BOTH: [RobotId; 2] = [RobotId::R, RobotId::S];

    pub fn index(self) -> usize {
        match self {
            RobotId::R => 0,
            RobotId::S => 1,
        }
    }

    pub fn other(self) -> RobotId {
        match self {
            RobotId::R => RobotId::S,
            RobotId::S => RobotId::R,
        }
    }
}

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RobotId::R => f.write_str("r"),
            RobotId::S => f.write_str("s"),
        }
    }
}

/// How far a move is guaranteed to get.
///
/// `NonRigid` robots may be stopped early but only after travelling at
/// least `delta`; `NonRigidKnownDelta` additionally lets the algorithm read
/// `delta`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum MovementModel {
    Rigid,
    NonRigid { delta: Rational },
    NonRigidKnownDelta { delta: Rational },
}

impl MovementModel {
    /// Minimum travel guarantee, if the adversary may stop moves early.
    pub fn min_travel(&self) -> Option<&Rational> {
        match self {
            MovementModel::Rigid => None,
            MovementModel::NonRigid { delta } | MovementModel::NonRigidKnownDelta { delta } => {
                Some(delta)
            }
        }
    }

    /// The value of delta visible to the algorithm.
    pub fn known_delta(&self) -> Option<&Rational> {
        match self {
            MovementModel::NonRigidKnownDelta { delta } => Some(delta),
            _ => None,
        }
    }

    pub fn is_rigid(&self) -> bool {
        matches!(self, MovementModel::Rigid)
    }
}

impl fmt::Display for MovementModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MovementModel::Rigid => f.write_str("Rigid"),
            MovementModel::NonRigid { delta } => write!(f, "Non-Rigid(delta={delta})"),
            MovementModel::NonRigidKnownDelta { delta } => {
                write!(f, "Non-Rigid(+delta={delta})")
            }
        }
    }
}

/// What a robot sees during Look, expressed in its own frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Snapshot {
    pub me_position: Point,
    pub me_light: Color,
    pub other_position: Point,
    pub other_light: Color,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_delta: Option<Rational>,
}

impl Snapshot {
    /// Takes a snapshot in the observer's local frame: the observer sits at
    /// the origin and the frame axes agree with the global ones.
    pub fn observe(
        me: &Point,
        me_light: Color,
        other: &Point,
        other_light: Color,
        movement: &MovementModel,
    ) -> Self {
        Snapshot {
            me_position: Point::origin(),
            me_light,
            other_position: other - me,
            other_light,
            known_delta: movement.known_delta().cloned(),
        }
    }

    pub fn distance_squared(&self) -> Rational {
        distance(&self.me_position, &self.other_position)
    }
}

/// Position of a robot inside its Look-Compute-Move cycle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum CyclePhase {
    Idle,
    /// Snapshot taken, Compute pending. The snapshot is local to the
    /// position the robot had when it looked, which it still occupies.
    Looked { snapshot: Snapshot },
    /// Destination chosen (global frame), move not yet started.
    Computed { dest: Point },
    /// Travelling from `origin` toward `target`; `observed` is the fraction
    /// of the segment the adversary has exposed to observers so far.
    Moving {
        origin: Point,
        target: Point,
        observed: Rational,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseKind {
    Idle,
    Looked,
    Computed,
    Moving,
}

impl CyclePhase {
    pub fn kind(&self) -> PhaseKind {
        match self {
            CyclePhase::Idle => PhaseKind::Idle,
            CyclePhase::Looked { .. } => PhaseKind::Looked,
            CyclePhase::Computed { .. } => PhaseKind::Computed,
            CyclePhase::Moving { .. } => PhaseKind::Moving,
        }
    }
}

impl fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RobotState {
    pub id: RobotId,
    /// Current location; interpolated while moving.
    pub position: Point,
    pub light: Color,
    pub phase: CyclePhase,
}

/// The global state of the two robots at one logical instant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub robots: [RobotState; 2],
    pub event_index: u64,
}

impl Configuration {
    pub fn initial(positions: (Point, Point), lights: (Color, Color)) -> Self {
        Configuration {
            robots: [
                RobotState {
                    id: RobotId::R,
                    position: positions.0,
                    light: lights.0,
                    phase: CyclePhase::Idle,
                },
                RobotState {
                    id: RobotId::S,
                    position: positions.1,
                    light: lights.1,
                    phase: CyclePhase::Idle,
                },
            ],
            event_index: 0,
        }
    }

    pub fn robot(&self, id: RobotId) -> &RobotState {
        &self.robots[id.index()]
    }

    pub fn robot_mut(&mut self, id: RobotId) -> &mut RobotState {
        &mut self.robots[id.index()]
    }

    pub fn lights(&self) -> (Color, Color) {
        (self.robots[0].light, self.robots[1].light)
    }

    pub fn distance_squared(&self) -> Rational {
        distance(&self.robots[0].position, &self.robots[1].position)
    }

    pub fn co_located(&self) -> bool {
        self.robots[0].position == self.robots[1].position
    }
}
