//! Bounded exhaustive exploration over every adversary choice.
//!
//! The explorer builds the reachable state graph breadth-first up to a
//! depth bound, memoizing on canonical keys (see [`abstraction`]). A run
//! that never rendezvouses and is fair must eventually circle inside one
//! strongly connected component of non-rendezvous states on which both
//! robots keep finishing cycles; such a component yields a lasso witness.
//! With no such component and no unexpanded state left, every fair run
//! rendezvouses, at the given fraction discretization.

pub mod abstraction;
pub mod graph;
pub mod lasso;
pub mod milestones;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::AlgorithmId;
use crate::engine::{Scenario, ScenarioError};
use crate::scheduler::{FractionSet, Rules, SchedulerError};

pub use abstraction::{AbstractConfig, Normalization};
pub use graph::StateGraph;
pub use lasso::{Lasso, LassoFilter};
pub use milestones::{check_phase_milestones, MilestoneReport, Regime};

pub const DEFAULT_STATE_LIMIT: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("invalid template: {0}")]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckStats {
    pub states: usize,
    pub transitions: usize,
    pub rendezvous_states: usize,
    pub open_states: usize,
    pub max_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum CheckVerdict {
    /// Every fair run rendezvouses, at this fraction set and depth.
    AllRunsRendezvous { stats: CheckStats },
    CounterexampleLasso { lasso: Lasso, stats: CheckStats },
    /// No counterexample found, but states at the depth bound were left
    /// unexpanded.
    BoundExhaustedUnknown { open_runs: usize, stats: CheckStats },
}

impl CheckVerdict {
    pub fn stats(&self) -> &CheckStats {
        match self {
            CheckVerdict::AllRunsRendezvous { stats }
            | CheckVerdict::CounterexampleLasso { stats, .. }
            | CheckVerdict::BoundExhaustedUnknown { stats, .. } => stats,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CheckVerdict::AllRunsRendezvous { .. } => "AllRunsRendezvous",
            CheckVerdict::CounterexampleLasso { .. } => "CounterexampleLasso",
            CheckVerdict::BoundExhaustedUnknown { .. } => "BoundExhaustedUnknown",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub fractions: FractionSet,
    pub max_depth: usize,
    pub state_limit: usize,
}

impl CheckOptions {
    pub fn new(fractions: FractionSet, max_depth: usize) -> Self {
        CheckOptions {
            fractions,
            max_depth,
            state_limit: DEFAULT_STATE_LIMIT,
        }
    }
}

/// The light-table algorithm under rigid moves never reads a length, so its
/// state space can be quotiented by similarity. With a minimum travel δ the
/// quotient applies to states spanning less than δ.
pub fn normalization_for(rules: &Rules) -> Normalization {
    match rules.movement.min_travel() {
        None if rules.algorithm == AlgorithmId::Rendezvous => Normalization::Similarity,
        None => Normalization::Translation,
        Some(delta) => Normalization::SimilarityBelow(delta.clone()),
    }
}

/// An explored state graph for one template.
pub struct Exploration {
    pub graph: StateGraph,
}

impl Exploration {
    pub fn run(template: &Scenario, options: &CheckOptions) -> Result<Self, CheckError> {
        Exploration::run_with(template, options, None)
    }

    /// Like [`Exploration::run`], forcing a normalization.
    pub fn run_with(
        template: &Scenario,
        options: &CheckOptions,
        normalization: Option<Normalization>,
    ) -> Result<Self, CheckError> {
        template.validate()?;
        let rules = template.rules();
        let normalization = normalization.unwrap_or_else(|| normalization_for(&rules));
        let graph = StateGraph::explore(
            template.initial_configuration(),
            rules,
            options.fractions.clone(),
            normalization,
            options.max_depth,
            options.state_limit,
        )?;
        log::info!(
            "explored {} states, {} transitions, {} open",
            graph.nodes.len(),
            graph.transition_count(),
            graph.open_count()
        );
        Ok(Exploration { graph })
    }

    pub fn stats(&self) -> CheckStats {
        let g = &self.graph;
        CheckStats {
            states: g.nodes.len(),
            transitions: g.transition_count(),
            rendezvous_states: g.nodes.iter().filter(|n| n.rendezvous).count(),
            open_states: g.open_count(),
            max_depth: g.nodes.iter().map(|n| n.depth).max().unwrap_or(0),
        }
    }

    pub fn lasso(&self, filter: &LassoFilter) -> Result<Option<Lasso>, CheckError> {
        Ok(lasso::find_in_graph(&self.graph, filter)?)
    }

    /// Prefers a lasso anchored at a cycle start with the template's
    /// initial lights, then any cycle start, then any state.
    pub fn best_lasso(&self) -> Result<Option<Lasso>, CheckError> {
        let lights = self.graph.nodes[0].config.lights();
        for filter in [
            LassoFilter {
                cycle_start: true,
                lights: Some(lights),
            },
            LassoFilter {
                cycle_start: true,
                lights: None,
            },
            LassoFilter::default(),
        ] {
            if let Some(l) = self.lasso(&filter)? {
                return Ok(Some(l));
            }
        }
        Ok(None)
    }

    pub fn verdict(&self) -> Result<CheckVerdict, CheckError> {
        let stats = self.stats();
        if let Some(lasso) = self.best_lasso()? {
            return Ok(CheckVerdict::CounterexampleLasso { lasso, stats });
        }
        if stats.open_states > 0 {
            return Ok(CheckVerdict::BoundExhaustedUnknown {
                open_runs: stats.open_states,
                stats,
            });
        }
        Ok(CheckVerdict::AllRunsRendezvous { stats })
    }
}

pub fn explore_all(template: &Scenario, fractions: &FractionSet, max_depth: usize) -> Result<CheckVerdict, CheckError> {
    Exploration::run(template, &CheckOptions::new(fractions.clone(), max_depth))?.verdict()
}

/// A lasso anchored at a cycle start with positive robot distance.
pub fn find_lasso(template: &Scenario, fractions: &FractionSet, max_depth: usize) -> Result<Option<Lasso>, CheckError> {
    let exploration = Exploration::run(template, &CheckOptions::new(fractions.clone(), max_depth))?;
    let lights = template.initial_lights;
    if let Some(l) = exploration.lasso(&LassoFilter {
        cycle_start: true,
        lights: Some(lights),
    })? {
        return Ok(Some(l));
    }
    exploration.lasso(&LassoFilter {
        cycle_start: true,
        lights: None,
    })
}
