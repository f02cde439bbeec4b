//! Fair non-rendezvous cycles in the state graph, turned into replayable
//! lasso witnesses.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::abstraction::abstract_config;
use super::graph::StateGraph;
use crate::engine::{AdversaryStrategy, Engine, EngineError, Scenario, Trace};
use crate::model::{Color, Configuration, RobotId};
use crate::rational::Rational;
use crate::scheduler::{apply_event, EventChoice, SchedulerError};

/// An infinite run: `prefix` once, then `cycle` forever. Each pass of the
/// cycle maps the configuration to a similar one scaled by
/// `contraction_ratio`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lasso {
    pub prefix: Vec<EventChoice>,
    pub cycle: Vec<EventChoice>,
    pub contraction_ratio: Rational,
    pub loop_start: Configuration,
    pub loop_end: Configuration,
}

impl Lasso {
    /// Replays the prefix and `repetitions` passes of the cycle through the
    /// engine as a scripted run.
    pub fn to_trace(&self, template: &Scenario, repetitions: usize) -> Result<Trace, EngineError> {
        let mut events = self.prefix.clone();
        for _ in 0..repetitions {
            events.extend(self.cycle.iter().cloned());
        }
        let scenario = template
            .clone()
            .with_max_events(events.len().max(1))
            .with_strategy(AdversaryStrategy::Scripted { events });
        let mut engine = Engine::new(scenario)?;
        while engine.step()?.is_some() {}
        Ok(engine.into_trace())
    }
}

const SHORT_LOOP_ANCHORS: usize = 64;

/// Which anchor states a lasso may start from.
#[derive(Debug, Clone, Default)]
pub struct LassoFilter {
    pub cycle_start: bool,
    pub lights: Option<(Color, Color)>,
}

/// Shortest path from `from` to `to` inside the component, as
/// (node, edge index) steps.
fn bfs_within(
    graph: &StateGraph,
    member: &[bool],
    from: usize,
    to: usize,
) -> Option<Vec<(usize, usize)>> {
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; graph.nodes.len()];
    let mut seen = vec![false; graph.nodes.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut path = Vec::new();
            let mut cur = to;
            while cur != from {
                let step = prev[cur].expect("bfs parent");
                path.push(step);
                cur = step.0;
            }
            path.reverse();
            return Some(path);
        }
        for (ei, e) in graph.edges[v].iter().enumerate() {
            if member[e.target] && !seen[e.target] {
                seen[e.target] = true;
                prev[e.target] = Some((v, ei));
                queue.push_back(e.target);
            }
        }
    }
    None
}

fn events_of(graph: &StateGraph, steps: &[(usize, usize)]) -> Vec<EventChoice> {
    steps
        .iter()
        .map(|&(v, e)| graph.edges[v][e].event.clone())
        .collect()
}

fn replay(graph: &StateGraph, from: &Configuration, events: &[EventChoice]) -> Result<Configuration, SchedulerError> {
    let mut c = from.clone();
    for e in events {
        c = apply_event(&c, e, &graph.rules)?;
    }
    Ok(c)
}

fn fair_edge(graph: &StateGraph, comp: &[usize], member: &[bool], robot: RobotId) -> Option<(usize, usize)> {
    comp.iter().find_map(|&v| {
        graph.edges[v]
            .iter()
            .position(|e| member[e.target] && e.completes[robot.index()])
            .map(|ei| (v, ei))
    })
}

/// Finds a fair cycle (both robots finish a cycle on it) avoiding
/// rendezvous states, anchored at a state accepted by `filter`.
pub fn find_in_graph(graph: &StateGraph, filter: &LassoFilter) -> Result<Option<Lasso>, SchedulerError> {
    let n = graph.nodes.len();
    for comp in graph.live_components() {
        let mut member = vec![false; n];
        for &v in &comp {
            member[v] = true;
        }
        let (Some(er), Some(es)) = (
            fair_edge(graph, &comp, &member, RobotId::R),
            fair_edge(graph, &comp, &member, RobotId::S),
        ) else {
            continue;
        };
        let anchors = comp.iter().copied().filter(|&v| {
            let node = &graph.nodes[v];
            (!filter.cycle_start || node.cycle_start)
                && filter.lights.is_none_or(|l| node.config.lights() == l)
                && !node.config.co_located()
        });
        let anchors: Vec<usize> = anchors.collect();
        // Loops that never bring the robots together come first.
        let apart: Vec<bool> = (0..n)
            .map(|v| member[v] && !graph.nodes[v].config.co_located())
            .collect();
        let mut candidates: Vec<(usize, Vec<(usize, usize)>)> = Vec::new();
        // Shortest loops through each anchor first, if they are fair.
        for mask in [&apart, &member] {
            let mut found = Vec::new();
            for &anchor in anchors.iter().take(SHORT_LOOP_ANCHORS) {
                let best = graph.edges[anchor]
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| mask[e.target])
                    .filter_map(|(ei, e)| {
                        let mut pairs = vec![(anchor, ei)];
                        pairs.extend(bfs_within(graph, mask, e.target, anchor)?);
                        let fair = [0, 1].map(|r| {
                            pairs.iter().any(|&(v, i)| graph.edges[v][i].completes[r])
                        });
                        (fair == [true, true]).then_some(pairs)
                    })
                    .min_by_key(Vec::len);
                if let Some(pairs) = best {
                    found.push((anchor, pairs));
                }
            }
            found.sort_by_key(|(_, p)| p.len());
            candidates.extend(found);
        }
        for &anchor in &anchors {
            let mut pairs = bfs_within(graph, &member, anchor, er.0).expect("strongly connected");
            pairs.push(er);
            let after_r = graph.edges[er.0][er.1].target;
            pairs.extend(bfs_within(graph, &member, after_r, es.0).expect("strongly connected"));
            pairs.push(es);
            let after_s = graph.edges[es.0][es.1].target;
            pairs.extend(bfs_within(graph, &member, after_s, anchor).expect("strongly connected"));
            candidates.push((anchor, pairs));
        }
        for (anchor, pairs) in candidates {
            let prefix = graph.path_to(anchor);
            let cycle = events_of(graph, &pairs);
            let root = &graph.nodes[0].config;
            let loop_start = replay(graph, root, &prefix)?;
            let loop_end = replay(graph, &loop_start, &cycle)?;
            let (k0, s0) = abstract_config(&loop_start, &graph.frame, &graph.normalization);
            let (k1, s1) = abstract_config(&loop_end, &graph.frame, &graph.normalization);
            if k0 != k1 || s0.is_zero() {
                continue;
            }
            let contraction_ratio = &s1 / &s0;
            if contraction_ratio > Rational::one() {
                continue;
            }
            return Ok(Some(Lasso {
                prefix,
                cycle,
                contraction_ratio,
                loop_start,
                loop_end,
            }));
        }
    }
    Ok(None)
}
