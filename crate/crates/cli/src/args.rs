use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lumi_core::engine::{AdversaryStrategy, Scenario};
use lumi_core::format::parse_scenario;
use lumi_core::{AlgorithmId, Color, FractionSet, MovementModel, Point, Rational, SchedulerClass};

#[derive(Debug, Parser)]
#[command(name = "lumi", version, about = "Two-robot rendezvous with lights: simulate, check, serve, replay")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its trace.
    Simulate(SimulateArgs),
    /// Explore every adversary choice up to a depth bound.
    Check(CheckArgs),
    /// Serve the interactive session protocol over WebSocket.
    Serve(ServeArgs),
    /// Verify and print a trace file.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum AlgorithmArg {
    Rendezvous,
    RendezvousWithDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SchedulerArg {
    Fsync,
    Ssync,
    Async,
    LcAtomic,
    MoveAtomic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MovementArg {
    Rigid,
    NonRigid,
    NonRigidKnownDelta,
}

impl From<AlgorithmArg> for AlgorithmId {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Rendezvous => AlgorithmId::Rendezvous,
            AlgorithmArg::RendezvousWithDelta => AlgorithmId::RendezvousWithDelta,
        }
    }
}

impl From<SchedulerArg> for SchedulerClass {
    fn from(s: SchedulerArg) -> Self {
        match s {
            SchedulerArg::Fsync => SchedulerClass::FSYNC,
            SchedulerArg::Ssync => SchedulerClass::SSYNC,
            SchedulerArg::Async => SchedulerClass::ASYNC,
            SchedulerArg::LcAtomic => SchedulerClass::LCAtomicASYNC,
            SchedulerArg::MoveAtomic => SchedulerClass::MoveAtomicASYNC,
        }
    }
}

/// Scenario selection shared by `simulate` and `check`. Flags override the
/// file; without a file, unset flags take defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// Scenario file (JSON).
    pub file: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmArg>,
    #[arg(long, value_enum)]
    pub scheduler: Option<SchedulerArg>,
    #[arg(long, value_enum)]
    pub movement: Option<MovementArg>,
    /// Minimum travel for non-rigid movement.
    #[arg(long, value_parser = parse_rational)]
    pub delta: Option<Rational>,
    /// Initial lights of r and s, e.g. AB.
    #[arg(long, value_parser = parse_lights)]
    pub lights: Option<(Color, Color)>,
    /// Initial positions: "0,10" on the x-axis, or "x:y,x:y".
    #[arg(long, value_parser = parse_positions)]
    pub positions: Option<(Point, Point)>,
    /// Fraction set for observations and stops, e.g. 1/2,1.
    #[arg(long, value_parser = parse_fractions)]
    pub fractions: Option<FractionSet>,
    #[arg(long)]
    pub max_events: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Seed for a random adversary (default: round-robin).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 24)]
    pub depth: usize,
    /// Where to write a counterexample witness.
    #[arg(long, default_value = "witness.jsonl")]
    pub trace_out: PathBuf,
    /// Sweep scheduler x movement x initial lights and print a table.
    #[arg(long)]
    pub matrix: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8765)]
    pub port: u16,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub file: PathBuf,
    /// For lasso witnesses: extra loop passes to replay and report.
    #[arg(long, default_value_t = 0)]
    pub loops: usize,
}

pub fn parse_rational(s: &str) -> Result<Rational, String> {
    s.parse::<Rational>().map_err(|e| e.to_string())
}

pub fn parse_color(c: char) -> Result<Color, String> {
    match c.to_ascii_uppercase() {
        'A' => Ok(Color::A),
        'B' => Ok(Color::B),
        _ => Err(format!("unknown light {c:?}; expected A or B")),
    }
}

pub fn parse_lights(s: &str) -> Result<(Color, Color), String> {
    let chars: Vec<char> = s.chars().filter(|c| c.is_alphanumeric()).collect();
    match chars.as_slice() {
        [a, b] => Ok((parse_color(*a)?, parse_color(*b)?)),
        _ => Err(format!("expected two lights such as AB, got {s:?}")),
    }
}

fn parse_point(s: &str) -> Result<Point, String> {
    match s.split_once(':') {
        Some((x, y)) => Ok(Point::new(parse_rational(x)?, parse_rational(y)?)),
        None => Ok(Point::on_axis(parse_rational(s)?)),
    }
}

pub fn parse_positions(s: &str) -> Result<(Point, Point), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [p, q] => Ok((parse_point(p)?, parse_point(q)?)),
        _ => Err(format!("expected two positions such as 0,10, got {s:?}")),
    }
}

pub fn parse_fractions(s: &str) -> Result<FractionSet, String> {
    let values = s
        .split(',')
        .map(|f| parse_rational(f.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    FractionSet::new(values).map_err(|e| e.to_string())
}

fn movement(arg: MovementArg, delta: Rational) -> MovementModel {
    match arg {
        MovementArg::Rigid => MovementModel::Rigid,
        MovementArg::NonRigid => MovementModel::NonRigid { delta },
        MovementArg::NonRigidKnownDelta => MovementModel::NonRigidKnownDelta { delta },
    }
}

/// Default fraction set: halves for rigid moves (fractions only matter for
/// mid-move observations), quarters otherwise.
pub fn default_fractions(movement: &MovementModel) -> FractionSet {
    if movement.is_rigid() {
        FractionSet::halves()
    } else {
        FractionSet::quarters()
    }
}

impl ScenarioArgs {
    /// Builds and validates the scenario.
    pub fn build(&self) -> Result<Scenario, String> {
        let mut scenario = match &self.file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
                parse_scenario(&text).map_err(|e| e.to_string())?
            }
            None => Scenario::on_line(
                AlgorithmId::Rendezvous,
                SchedulerClass::ASYNC,
                MovementModel::Rigid,
                (Color::A, Color::A),
                (Rational::zero(), Rational::one()),
            ),
        };
        if let Some(a) = self.algorithm {
            scenario.algorithm = a.into();
        }
        if let Some(s) = self.scheduler {
            scenario.scheduler = s.into();
        }
        let current_delta = scenario.movement.min_travel().cloned();
        match (self.movement, &self.delta) {
            (Some(m), d) => {
                let d = d.clone().or(current_delta).unwrap_or_else(Rational::one);
                scenario.movement = movement(m, d);
            }
            (None, Some(d)) => {
                scenario.movement = match scenario.movement {
                    MovementModel::Rigid => MovementModel::Rigid,
                    MovementModel::NonRigid { .. } => MovementModel::NonRigid { delta: d.clone() },
                    MovementModel::NonRigidKnownDelta { .. } => {
                        MovementModel::NonRigidKnownDelta { delta: d.clone() }
                    }
                };
            }
            (None, None) => {}
        }
        if let Some(l) = self.lights {
            scenario.initial_lights = l;
        }
        if let Some(p) = &self.positions {
            scenario.initial_positions = p.clone();
        }
        if let Some(m) = self.max_events {
            scenario.max_events = m;
        }
        if let Some(f) = &self.fractions {
            if let AdversaryStrategy::SeededRandom { fractions, .. } = &mut scenario.strategy {
                *fractions = f.clone();
            }
        }
        scenario.validate().map_err(|e| e.to_string())?;
        Ok(scenario)
    }

    /// The fraction set for checking: the flag, then a random strategy's
    /// set, then the movement default.
    pub fn fractions_for(&self, scenario: &Scenario) -> FractionSet {
        if let Some(f) = &self.fractions {
            return f.clone();
        }
        match &scenario.strategy {
            AdversaryStrategy::SeededRandom { fractions, .. }
            | AdversaryStrategy::Exhaustive { fractions, .. } => fractions.clone(),
            _ => default_fractions(&scenario.movement),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_parsers() {
        assert_eq!(parse_lights("ab").unwrap(), (Color::A, Color::B));
        assert_eq!(parse_lights("B,B").unwrap(), (Color::B, Color::B));
        assert!(parse_lights("AC").is_err());
        let (p, q) = parse_positions("0, 3:4").unwrap();
        assert_eq!(p, Point::origin());
        assert_eq!(q, Point::from_ints(3, 4));
        assert_eq!(parse_fractions("1/2,1").unwrap(), FractionSet::halves());
        assert!(parse_fractions("1/2").is_err());
    }

    #[test]
    fn flags_override_and_validate() {
        let args = ScenarioArgs {
            movement: Some(MovementArg::NonRigid),
            delta: Some(Rational::zero()),
            ..ScenarioArgs::default()
        };
        assert_eq!(args.build().unwrap_err(), "movement.delta: delta must be positive");
        let args = ScenarioArgs {
            algorithm: Some(AlgorithmArg::RendezvousWithDelta),
            ..ScenarioArgs::default()
        };
        assert!(args.build().unwrap_err().starts_with("algorithm:"));
    }
}
