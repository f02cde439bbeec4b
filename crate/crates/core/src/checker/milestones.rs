//! Progress properties: the distance-banded algorithm's mode milestones and
//! the per-phase distance decrease under non-rigid moves.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::abstraction::Normalization;
use super::graph::StateGraph;
use crate::engine::Trace;
use crate::geometry::exact_distance;
use crate::model::{Color, Configuration};
use crate::rational::Rational;
use crate::scheduler::is_cycle_start_time;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MilestoneError {
    #[error("milestones need a movement model with a minimum distance δ")]
    NoDelta,
    #[error("distance checks need exact distances; use translation-normalized exploration")]
    ScaleFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// dist₀ > 2δ
    Far,
    /// δ ≤ dist₀ ≤ 2δ
    Middle,
    /// dist₀ < δ
    Inner,
}

pub fn regime(distance: &Rational, delta: &Rational) -> Regime {
    let two_delta = delta * Rational::from_integer(2);
    if distance > &two_delta {
        Regime::Far
    } else if distance >= delta {
        Regime::Middle
    } else {
        Regime::Inner
    }
}

fn separation(c: &Configuration) -> Rational {
    exact_distance(&c.robots[0].position, &c.robots[1].position)
        .expect("positions stay on a line with rational spacing")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MilestoneReport {
    pub initial_distance: Rational,
    pub regime: Regime,
    /// First (B,B) cycle start.
    pub t1: Option<(u64, Rational)>,
    /// First (A,A) cycle start after `t1` with distance in [δ, 2δ].
    pub t2: Option<(u64, Rational)>,
    pub notes: Vec<String>,
    pub failures: Vec<String>,
}

impl MilestoneReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Locates the mode-change milestones of a distance-banded run.
pub fn check_phase_milestones(trace: &Trace) -> Result<MilestoneReport, MilestoneError> {
    let delta = trace
        .scenario
        .movement
        .min_travel()
        .ok_or(MilestoneError::NoDelta)?
        .clone();
    let two_delta = &delta * Rational::from_integer(2);
    let algorithm = trace.scenario.algorithm;
    let d0 = separation(&trace.initial);
    let mut report = MilestoneReport {
        regime: regime(&d0, &delta),
        initial_distance: d0.clone(),
        t1: None,
        t2: None,
        notes: Vec::new(),
        failures: Vec::new(),
    };
    let starts: Vec<(u64, (Color, Color), Rational)> = (0..=trace.steps.len())
        .map(|i| trace.config_at(i))
        .filter(|c| is_cycle_start_time(c, algorithm))
        .map(|c| (c.event_index, c.lights(), separation(c)))
        .collect();
    let in_band = |d: &Rational| d >= &delta && d <= &two_delta;

    match report.regime {
        Regime::Far => {
            match starts.iter().find(|(_, l, _)| *l == (Color::B, Color::B)) {
                Some((i, _, d)) => {
                    if d != &d0 {
                        report
                            .failures
                            .push(format!("t1 at event {i} has distance {d}, expected {d0}"));
                    }
                    report.t1 = Some((*i, d.clone()));
                }
                None => report.failures.push("no (B,B) cycle start".into()),
            }
            if let Some((t1, _)) = &report.t1 {
                match starts
                    .iter()
                    .find(|(i, l, d)| i > t1 && *l == (Color::A, Color::A) && in_band(d))
                {
                    Some((i, _, d)) => report.t2 = Some((*i, d.clone())),
                    None => report
                        .failures
                        .push("no (A,A) cycle start with distance in [δ, 2δ] after t1".into()),
                }
            }
        }
        Regime::Middle => {
            report
                .notes
                .push("direct middle-regime entry; t1 skipped".into());
            report.t2 = starts
                .iter()
                .find(|(_, l, d)| *l == (Color::A, Color::A) && in_band(d))
                .map(|(i, _, d)| (*i, d.clone()));
        }
        Regime::Inner => {
            report.notes.push("direct inner-regime entry".into());
        }
    }
    Ok(report)
}

fn graph_delta(graph: &StateGraph) -> Result<Rational, MilestoneError> {
    if graph.normalization != Normalization::Translation {
        return Err(MilestoneError::ScaleFree);
    }
    graph
        .rules
        .movement
        .min_travel()
        .cloned()
        .ok_or(MilestoneError::NoDelta)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgressViolation {
    pub from: usize,
    pub to: usize,
    pub from_distance: Rational,
    pub to_distance: Rational,
}

fn is_aa_start(graph: &StateGraph, v: usize) -> bool {
    let n = &graph.nodes[v];
    n.cycle_start && n.config.lights() == (Color::A, Color::A)
}

/// Between consecutive (A,A) cycle starts on any explored path, the robots
/// either meet or close in by at least 2δ.
pub fn progress_violations(graph: &StateGraph) -> Result<Vec<ProgressViolation>, MilestoneError> {
    let delta = graph_delta(graph)?;
    let two_delta = &delta * Rational::from_integer(2);
    let mut out = Vec::new();
    for u in (0..graph.nodes.len()).filter(|&u| is_aa_start(graph, u) && !graph.nodes[u].rendezvous) {
        let du = separation(&graph.nodes[u].config);
        let mut seen = vec![false; graph.nodes.len()];
        let mut stack: Vec<usize> = graph.edges[u].iter().map(|e| e.target).collect();
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            if is_aa_start(graph, v) {
                let dv = separation(&graph.nodes[v].config);
                let ok = dv.is_zero() || (&du - &dv).cmp(&two_delta) != Ordering::Less;
                if !ok {
                    out.push(ProgressViolation {
                        from: u,
                        to: v,
                        from_distance: du.clone(),
                        to_distance: dv,
                    });
                }
                continue;
            }
            if graph.nodes[v].rendezvous {
                continue;
            }
            stack.extend(graph.edges[v].iter().map(|e| e.target));
        }
    }
    Ok(out)
}

/// Rendezvous states reachable by some path that skips a milestone: a
/// (B,B) cycle start at the initial distance, then an (A,A) cycle start
/// with distance in [δ, 2δ].
pub fn milestone_violations(graph: &StateGraph) -> Result<Vec<usize>, MilestoneError> {
    let delta = graph_delta(graph)?;
    let two_delta = &delta * Rational::from_integer(2);
    let d0 = separation(&graph.nodes[0].config);
    let advance = |v: usize, stage: usize| -> usize {
        let n = &graph.nodes[v];
        if !n.cycle_start {
            return stage;
        }
        let d = separation(&n.config);
        match (stage, n.config.lights()) {
            (0, (Color::B, Color::B)) if d == d0 => 1,
            (1, (Color::A, Color::A)) if d >= delta && d <= two_delta => 2,
            _ => stage,
        }
    };
    let n = graph.nodes.len();
    let mut seen = vec![[false; 3]; n];
    let start = advance(0, 0);
    let mut stack = vec![(0usize, start)];
    let mut bad = Vec::new();
    while let Some((v, stage)) = stack.pop() {
        if std::mem::replace(&mut seen[v][stage], true) {
            continue;
        }
        if graph.nodes[v].rendezvous {
            if stage < 2 {
                bad.push(v);
            }
            continue;
        }
        for e in &graph.edges[v] {
            stack.push((e.target, advance(e.target, stage)));
        }
    }
    bad.sort_unstable();
    bad.dedup();
    Ok(bad)
}
