//! Breadth-first construction of the reachable state graph.

use std::collections::HashMap;

use rayon::prelude::*;

use super::abstraction::{abstract_config, AbstractConfig, LineFrame, Normalization};
use crate::engine::is_rendezvous;
use crate::model::{Configuration, RobotId};
use crate::rational::Rational;
use crate::scheduler::{
    apply_event, completed_cycles, enabled_events, is_cycle_start_time, EventChoice, FractionSet,
    Rules, SchedulerError,
};

#[derive(Debug, Clone)]
pub struct Edge {
    pub event: EventChoice,
    pub target: usize,
    /// Robots finishing a cycle on this edge, indexed by [`RobotId::index`].
    pub completes: [bool; 2],
}

#[derive(Debug, Clone)]
pub struct Node {
    /// The first concrete configuration reaching this key.
    pub config: Configuration,
    pub key: AbstractConfig,
    pub scale: Rational,
    pub depth: usize,
    pub rendezvous: bool,
    pub cycle_start: bool,
    pub expanded: bool,
    /// BFS tree edge (parent node, edge index in the parent's list).
    pub parent: Option<(usize, usize)>,
}

impl Node {
    /// Unexpanded and not terminal: its future is unknown.
    pub fn is_open(&self) -> bool {
        !self.expanded && !self.rendezvous
    }
}

/// The explored portion of the state graph. Node 0 is the initial state.
#[derive(Debug, Clone)]
pub struct StateGraph {
    pub rules: Rules,
    pub fractions: FractionSet,
    pub normalization: Normalization,
    pub frame: LineFrame,
    pub max_depth: usize,
    pub nodes: Vec<Node>,
    pub edges: Vec<Vec<Edge>>,
}

type Successors = Vec<(EventChoice, Configuration, [bool; 2])>;

fn successors(config: &Configuration, rules: &Rules, fractions: &FractionSet) -> Result<Successors, SchedulerError> {
    let mut out = Vec::new();
    for event in enabled_events(config, rules, fractions, None)? {
        let next = apply_event(config, &event, rules)?;
        let mut completes = [false; 2];
        for r in completed_cycles(&next, &event) {
            completes[r.index()] = true;
        }
        out.push((event, next, completes));
    }
    Ok(out)
}

impl StateGraph {
    pub fn explore(
        initial: Configuration,
        rules: Rules,
        fractions: FractionSet,
        normalization: Normalization,
        max_depth: usize,
        state_limit: usize,
    ) -> Result<StateGraph, SchedulerError> {
        let frame = LineFrame::new(&initial.robots[0].position, &initial.robots[1].position);
        let mut graph = StateGraph {
            rules,
            fractions,
            normalization,
            frame,
            max_depth,
            nodes: Vec::new(),
            edges: Vec::new(),
        };
        let mut index: HashMap<AbstractConfig, usize> = HashMap::new();
        let mut normalized_initial = initial;
        normalized_initial.event_index = 0;
        graph.insert(&mut index, normalized_initial, 0, None);

        let mut frontier = vec![0usize];
        let mut depth = 0;
        while !frontier.is_empty() && depth < max_depth {
            let expandable: Vec<usize> = frontier
                .into_iter()
                .filter(|&n| !graph.nodes[n].rendezvous)
                .collect();
            if graph.nodes.len() >= state_limit {
                break;
            }
            let results: Vec<Result<Successors, SchedulerError>> = expandable
                .par_iter()
                .map(|&n| successors(&graph.nodes[n].config, &graph.rules, &graph.fractions))
                .collect();
            let mut next_frontier = Vec::new();
            for (&n, succ) in expandable.iter().zip(results) {
                let mut edges = Vec::new();
                for (event, mut config, completes) in succ? {
                    config.event_index = (depth + 1) as u64;
                    let edge_index = edges.len();
                    let (target, fresh) =
                        graph.insert(&mut index, config, depth + 1, Some((n, edge_index)));
                    if fresh {
                        next_frontier.push(target);
                    }
                    edges.push(Edge {
                        event,
                        target,
                        completes,
                    });
                }
                graph.edges[n] = edges;
                graph.nodes[n].expanded = true;
            }
            frontier = next_frontier;
            depth += 1;
        }
        Ok(graph)
    }

    fn insert(
        &mut self,
        index: &mut HashMap<AbstractConfig, usize>,
        config: Configuration,
        depth: usize,
        parent: Option<(usize, usize)>,
    ) -> (usize, bool) {
        let (key, scale) = abstract_config(&config, &self.frame, &self.normalization);
        if let Some(&id) = index.get(&key) {
            return (id, false);
        }
        let id = self.nodes.len();
        let rendezvous = is_rendezvous(&config, self.rules.algorithm, &self.rules.movement);
        let cycle_start = is_cycle_start_time(&config, self.rules.algorithm);
        index.insert(key.clone(), id);
        self.nodes.push(Node {
            config,
            key,
            scale,
            depth,
            rendezvous,
            cycle_start,
            expanded: false,
            parent,
        });
        self.edges.push(Vec::new());
        (id, true)
    }

    pub fn open_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_open()).count()
    }

    pub fn transition_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Events along the BFS tree from the initial state to `node`.
    pub fn path_to(&self, node: usize) -> Vec<EventChoice> {
        let mut events = Vec::new();
        let mut cur = node;
        while let Some((parent, edge)) = self.nodes[cur].parent {
            events.push(self.edges[parent][edge].event.clone());
            cur = parent;
        }
        events.reverse();
        events
    }

    /// Strongly connected components among non-rendezvous nodes, with only
    /// the edges between them (iterative Tarjan).
    pub fn live_components(&self) -> Vec<Vec<usize>> {
        let n = self.nodes.len();
        let live = |v: usize| !self.nodes[v].rendezvous;
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut next_index = 0;
        let mut out = Vec::new();
        for root in 0..n {
            if index[root] != usize::MAX || !live(root) {
                continue;
            }
            let mut call: Vec<(usize, usize)> = vec![(root, 0)];
            index[root] = next_index;
            low[root] = next_index;
            next_index += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some(&mut (v, ref mut ei)) = call.last_mut() {
                if *ei < self.edges[v].len() {
                    let w = self.edges[v][*ei].target;
                    *ei += 1;
                    if !live(w) {
                        continue;
                    }
                    if index[w] == usize::MAX {
                        index[w] = next_index;
                        low[w] = next_index;
                        next_index += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    call.pop();
                    if let Some(&(u, _)) = call.last() {
                        low[u] = low[u].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().expect("tarjan stack");
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        out.push(comp);
                    }
                }
            }
        }
        out
    }

    /// Whether robot `robot` finishes a cycle on some edge inside `component`.
    pub fn component_completes(&self, component: &[usize], member: &[bool], robot: RobotId) -> bool {
        component.iter().any(|&v| {
            self.edges[v]
                .iter()
                .any(|e| member[e.target] && e.completes[robot.index()])
        })
    }

    /// Number of maximal event sequences of length at most `depth` from the
    /// initial state: each ends at a rendezvous or after exactly `depth`
    /// events. Needs `depth <= max_depth`.
    pub fn count_runs(&self, depth: usize) -> u128 {
        assert!(depth <= self.max_depth, "count_runs beyond explored depth");
        let mut memo: HashMap<(usize, usize), u128> = HashMap::new();
        fn go(g: &StateGraph, v: usize, k: usize, memo: &mut HashMap<(usize, usize), u128>) -> u128 {
            if k == 0 || g.nodes[v].rendezvous {
                return 1;
            }
            if let Some(&c) = memo.get(&(v, k)) {
                return c;
            }
            debug_assert!(g.nodes[v].expanded);
            let total = g.edges[v].iter().map(|e| go(g, e.target, k - 1, memo)).sum();
            memo.insert((v, k), total);
            total
        }
        go(self, 0, depth, &mut memo)
    }
}
