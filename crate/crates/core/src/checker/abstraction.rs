//! Canonical state keys for memoization.
//!
//! Every point a run can produce lies on the segment between the two initial
//! positions, so a configuration is described by line parameters. For the
//! light-table algorithm under rigid moves the dynamics commute with
//! similarities of the line, so keys are normalized up to translation,
//! scaling and reflection; anything that reads δ only commutes with
//! translations. Once every point of a state fits in an interval shorter
//! than δ, no later snapshot can see a distance of δ or more and every move
//! is too short to be cut, so from there on similarity keys are sound again.

use crate::geometry::Point;
use crate::model::{Color, Configuration, CyclePhase, PhaseKind};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Normalization {
    /// Translation, scaling and reflection of the line.
    Similarity,
    Translation,
    /// Translation, or similarity for states whose points span less than
    /// the given length.
    SimilarityBelow(Rational),
}

/// Projects points onto the line through the two initial positions.
#[derive(Debug, Clone)]
pub struct LineFrame {
    base: Point,
    dir: Point,
    dir_norm: Rational,
}

impl LineFrame {
    pub fn new(p: &Point, q: &Point) -> Self {
        let dir = if p == q {
            Point::from_ints(1, 0)
        } else {
            q - p
        };
        let dir_norm = dir.norm_squared();
        LineFrame {
            base: p.clone(),
            dir,
            dir_norm,
        }
    }

    pub fn param(&self, p: &Point) -> Rational {
        (p - &self.base).dot(&self.dir) / &self.dir_norm
    }

    /// Squared length of a parameter difference.
    pub fn length_squared(&self, span: &Rational) -> Rational {
        span * span * &self.dir_norm
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PhaseKey {
    Idle,
    Looked { me: Color, other: Color },
    Computed,
    Moving { observed: Rational },
}

/// A configuration up to the chosen normalization.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AbstractConfig {
    /// Whether `coords` are normalized up to similarity.
    pub scale_free: bool,
    pub lights: (Color, Color),
    pub phases: [PhaseKey; 2],
    /// Line parameters of positions and pending points, normalized.
    pub coords: Vec<Rational>,
}

impl AbstractConfig {
    pub fn phase_kinds(&self) -> [PhaseKind; 2] {
        self.phases.clone().map(|p| match p {
            PhaseKey::Idle => PhaseKind::Idle,
            PhaseKey::Looked { .. } => PhaseKind::Looked,
            PhaseKey::Computed => PhaseKind::Computed,
            PhaseKey::Moving { .. } => PhaseKind::Moving,
        })
    }
}

fn raw_points(config: &Configuration) -> (Vec<Point>, [PhaseKey; 2]) {
    let mut pts = vec![
        config.robots[0].position.clone(),
        config.robots[1].position.clone(),
    ];
    let mut keys = Vec::with_capacity(2);
    for robot in &config.robots {
        let key = match &robot.phase {
            CyclePhase::Idle => PhaseKey::Idle,
            CyclePhase::Looked { snapshot } => {
                pts.push(&robot.position + &(&snapshot.other_position - &snapshot.me_position));
                PhaseKey::Looked {
                    me: snapshot.me_light,
                    other: snapshot.other_light,
                }
            }
            CyclePhase::Computed { dest } => {
                pts.push(dest.clone());
                PhaseKey::Computed
            }
            CyclePhase::Moving {
                origin,
                target,
                observed,
            } => {
                pts.push(origin.clone());
                pts.push(target.clone());
                PhaseKey::Moving {
                    observed: observed.clone(),
                }
            }
        };
        keys.push(key);
    }
    let phases = [keys[0].clone(), keys[1].clone()];
    (pts, phases)
}

/// Returns the key together with the scale divided out (the length of the
/// first nondegenerate pair of points, zero if every point coincides). For
/// translation-only keys the scale is the robots' separation.
pub fn abstract_config(
    config: &Configuration,
    frame: &LineFrame,
    normalization: &Normalization,
) -> (AbstractConfig, Rational) {
    let (pts, phases) = raw_points(config);
    let params: Vec<Rational> = pts.iter().map(|p| frame.param(p)).collect();
    let anchor = params[0].clone();
    let scale_free = match normalization {
        Normalization::Similarity => true,
        Normalization::Translation => false,
        Normalization::SimilarityBelow(bound) => {
            let lo = params.iter().min().expect("two robots");
            let hi = params.iter().max().expect("two robots");
            frame.length_squared(&(hi - lo)) < bound * bound
        }
    };
    let (coords, scale) = if scale_free {
        match params.iter().find(|x| **x != anchor) {
            Some(b) => {
                let unit = b - &anchor;
                (
                    params.iter().map(|x| (x - &anchor) / &unit).collect(),
                    unit.abs(),
                )
            }
            None => (vec![Rational::zero(); params.len()], Rational::zero()),
        }
    } else {
        let scale = (&params[1] - &anchor).abs();
        (params.iter().map(|x| x - &anchor).collect(), scale)
    };
    (
        AbstractConfig {
            scale_free,
            lights: config.lights(),
            phases,
            coords,
        },
        scale,
    )
}
