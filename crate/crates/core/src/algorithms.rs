//! The two rendezvous decision functions, as pure maps from a snapshot to a
//! new light and destination.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{compare_distance, exact_distance, midpoint, point_toward, Point};
use crate::model::{Color, Snapshot};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgorithmId {
    /// Two-color algorithm driven by the light pair only.
    Rendezvous,
    /// Distance-banded variant that reads the minimum move distance.
    RendezvousWithDelta,
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ComputeOutput {
    pub new_light: Color,
    /// In the same frame as the snapshot.
    pub destination: Point,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgorithmError {
    #[error("snapshot carries no delta but the algorithm needs it")]
    MissingDelta,
    #[error("distance between robots is irrational; the delta/2 step is not representable")]
    IrrationalDistance,
}

pub fn compute(algorithm: AlgorithmId, snap: &Snapshot) -> Result<ComputeOutput, AlgorithmError> {
    match algorithm {
        AlgorithmId::Rendezvous => Ok(compute_rendezvous(snap)),
        AlgorithmId::RendezvousWithDelta => compute_rendezvous_with_delta(snap),
    }
}

/// The four-way light table.
pub fn compute_rendezvous(snap: &Snapshot) -> ComputeOutput {
    let me = &snap.me_position;
    let other = &snap.other_position;
    match (snap.me_light, snap.other_light) {
        (Color::A, Color::A) => ComputeOutput {
            new_light: Color::B,
            destination: midpoint(me, other),
        },
        (Color::A, Color::B) => ComputeOutput {
            new_light: Color::A,
            destination: other.clone(),
        },
        (Color::B, Color::A) => ComputeOutput {
            new_light: Color::B,
            destination: me.clone(),
        },
        (Color::B, Color::B) => ComputeOutput {
            new_light: Color::A,
            destination: me.clone(),
        },
    }
}

/// Far band (> 2δ): switch to B, then creep δ/2 while both are B.
/// Middle band [δ, 2δ]: switch to A, then halve while both are A.
/// Inner band (< δ): the light table of [`compute_rendezvous`].
pub fn compute_rendezvous_with_delta(snap: &Snapshot) -> Result<ComputeOutput, AlgorithmError> {
    let delta = snap.known_delta.as_ref().ok_or(AlgorithmError::MissingDelta)?;
    let me = &snap.me_position;
    let other = &snap.other_position;
    let two_delta = delta * Rational::from_integer(2);
    let both = |c: Color| snap.me_light == c && snap.other_light == c;

    if compare_distance(me, other, &two_delta) == Ordering::Greater {
        if both(Color::B) {
            let dist = exact_distance(me, other).ok_or(AlgorithmError::IrrationalDistance)?;
            let fraction = delta / &(dist * Rational::from_integer(2));
            let destination =
                point_toward(me, other, &fraction).expect("distance exceeds 2δ, step fraction < 1");
            Ok(ComputeOutput {
                new_light: snap.me_light,
                destination,
            })
        } else {
            Ok(ComputeOutput {
                new_light: Color::B,
                destination: me.clone(),
            })
        }
    } else if compare_distance(me, other, delta) != Ordering::Less {
        if both(Color::A) {
            Ok(ComputeOutput {
                new_light: Color::B,
                destination: midpoint(me, other),
            })
        } else {
            Ok(ComputeOutput {
                new_light: Color::A,
                destination: me.clone(),
            })
        }
    } else {
        Ok(compute_rendezvous(snap))
    }
}

/// A rational isometry `p ↦ M p + t` with `M` orthogonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Isometry {
    m: [[Rational; 2]; 2],
    t: Point,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("({0}, {1}) is not on the unit circle")]
pub struct NotUnitError(pub Rational, pub Rational);

impl Isometry {
    pub fn identity() -> Self {
        Isometry {
            m: [
                [Rational::one(), Rational::zero()],
                [Rational::zero(), Rational::one()],
            ],
            t: Point::origin(),
        }
    }

    pub fn translation(by: Point) -> Self {
        Isometry {
            t: by,
            ..Isometry::identity()
        }
    }

    /// Rotation by the angle whose cosine and sine are given; they must be
    /// a rational point on the unit circle such as (3/5, 4/5).
    pub fn rotation(cos: Rational, sin: Rational) -> Result<Self, NotUnitError> {
        if &cos * &cos + &sin * &sin != Rational::one() {
            return Err(NotUnitError(cos, sin));
        }
        Ok(Isometry {
            m: [[cos.clone(), -&sin], [sin, cos]],
            t: Point::origin(),
        })
    }

    /// Mirror across the x-axis.
    pub fn reflect_x() -> Self {
        Isometry {
            m: [
                [Rational::one(), Rational::zero()],
                [Rational::zero(), -Rational::one()],
            ],
            t: Point::origin(),
        }
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &Isometry) -> Isometry {
        let m = &self.m;
        let n = &inner.m;
        let prod = |i: usize, j: usize| &m[i][0] * &n[0][j] + &m[i][1] * &n[1][j];
        Isometry {
            m: [[prod(0, 0), prod(0, 1)], [prod(1, 0), prod(1, 1)]],
            t: self.apply(&inner.t),
        }
    }

    pub fn apply(&self, p: &Point) -> Point {
        let m = &self.m;
        Point::new(
            &m[0][0] * &p.x + &m[0][1] * &p.y + &self.t.x,
            &m[1][0] * &p.x + &m[1][1] * &p.y + &self.t.y,
        )
    }
}

/// Maps every position of a snapshot through `iso`; lights and delta are
/// untouched.
pub fn apply_isometry(snap: &Snapshot, iso: &Isometry) -> Snapshot {
    Snapshot {
        me_position: iso.apply(&snap.me_position),
        other_position: iso.apply(&snap.other_position),
        ..snap.clone()
    }
}
