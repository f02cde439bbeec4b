use std::io::Write;

use lumi_core::checker::{CheckOptions, CheckVerdict, Exploration};
use lumi_core::engine::{run, AdversaryStrategy, Engine, Outcome, Scenario, Trace};
use lumi_core::format::{lasso_witness, read_trace, write_trace, TraceFile};
use lumi_core::{AlgorithmId, Color, FractionSet, MovementModel, Rational, SchedulerClass};

use crate::args::{CheckArgs, ReplayArgs, SimulateArgs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BOUND: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_COUNTEREXAMPLE: i32 = 3;

/// States explored per cell of a `--matrix` sweep.
const MATRIX_STATE_LIMIT: usize = 200_000;

type CmdResult = Result<i32, String>;

fn io(e: std::io::Error) -> String {
    e.to_string()
}

pub fn verdict_line(trace: &Trace) -> String {
    match &trace.verdict.outcome {
        Outcome::RendezvousAt { event_index } => format!(
            "RENDEZVOUS @event {event_index} at {}",
            trace.last_config().robots[0].position
        ),
        Outcome::BoundExhausted {
            final_distance_squared,
        } => format!("BOUND d²={final_distance_squared}"),
        Outcome::Diverged => "DIVERGED".to_string(),
    }
}

fn describe(s: &Scenario) -> String {
    let (l0, l1) = s.initial_lights;
    let (p, q) = &s.initial_positions;
    format!(
        "{} / {} / {} / lights ({l0},{l1}) / positions {p} {q}",
        s.algorithm, s.scheduler, s.movement
    )
}

fn fractions_text(f: &FractionSet) -> String {
    f.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
}

pub fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> CmdResult {
    let mut scenario = args.scenario.build()?;
    if let Some(seed) = args.seed {
        let fractions = args.scenario.fractions_for(&scenario);
        scenario.strategy = AdversaryStrategy::SeededRandom { seed, fractions };
    }
    log::info!("simulating {}", describe(&scenario));
    let trace = run(scenario).map_err(|e| e.to_string())?;
    if let Some(path) = &args.trace_out {
        let file = TraceFile {
            trace: trace.clone(),
            loop_info: None,
        };
        std::fs::write(path, write_trace(&file)).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    writeln!(out, "{}", verdict_line(&trace)).map_err(io)?;
    Ok(match trace.verdict.outcome {
        Outcome::RendezvousAt { .. } => EXIT_OK,
        _ => EXIT_BOUND,
    })
}

pub fn check(args: &CheckArgs, out: &mut dyn Write) -> CmdResult {
    if args.matrix {
        return matrix(args, out);
    }
    let scenario = args.scenario.build()?;
    let fractions = args.scenario.fractions_for(&scenario);
    writeln!(out, "template: {}", describe(&scenario)).map_err(io)?;
    writeln!(out, "fractions: {}  depth: {}", fractions_text(&fractions), args.depth).map_err(io)?;
    let exploration = Exploration::run(&scenario, &CheckOptions::new(fractions, args.depth))
        .map_err(|e| e.to_string())?;
    let verdict = exploration.verdict().map_err(|e| e.to_string())?;
    let stats = verdict.stats();
    writeln!(
        out,
        "states: {}  transitions: {}  rendezvous states: {}  open states: {}",
        stats.states, stats.transitions, stats.rendezvous_states, stats.open_states
    )
    .map_err(io)?;
    writeln!(out, "verdict: {}", verdict.label()).map_err(io)?;
    Ok(match &verdict {
        CheckVerdict::AllRunsRendezvous { .. } => EXIT_OK,
        CheckVerdict::BoundExhaustedUnknown { .. } => EXIT_UNKNOWN,
        CheckVerdict::CounterexampleLasso { lasso, .. } => {
            writeln!(
                out,
                "loop: prefix {} events, loop {} events, contraction {}",
                lasso.prefix.len(),
                lasso.cycle.len(),
                lasso.contraction_ratio
            )
            .map_err(io)?;
            let witness = lasso_witness(&scenario, lasso).map_err(|e| e.to_string())?;
            std::fs::write(&args.trace_out, write_trace(&witness))
                .map_err(|e| format!("{}: {e}", args.trace_out.display()))?;
            writeln!(out, "witness: {}", args.trace_out.display()).map_err(io)?;
            EXIT_COUNTEREXAMPLE
        }
    })
}

fn matrix(args: &CheckArgs, out: &mut dyn Write) -> CmdResult {
    let base = args.scenario.build()?;
    let delta = base.movement.min_travel().cloned().unwrap_or_else(Rational::one);
    let movements = match base.algorithm {
        AlgorithmId::Rendezvous => vec![
            MovementModel::Rigid,
            MovementModel::NonRigid {
                delta: delta.clone(),
            },
        ],
        AlgorithmId::RendezvousWithDelta => vec![MovementModel::NonRigidKnownDelta { delta }],
    };
    let lights = [
        (Color::A, Color::A),
        (Color::A, Color::B),
        (Color::B, Color::A),
        (Color::B, Color::B),
    ];
    writeln!(
        out,
        "{} / positions {} {} / depth {}",
        base.algorithm, base.initial_positions.0, base.initial_positions.1, args.depth
    )
    .map_err(io)?;
    writeln!(out, "{:<18} {:<22} {:>6} {:>6} {:>6} {:>6}", "scheduler", "movement", "AA", "AB", "BA", "BB")
        .map_err(io)?;
    for class in SchedulerClass::ALL {
        for movement in &movements {
            let mut cells = Vec::new();
            for l in lights {
                let mut s = base.clone();
                s.scheduler = class;
                s.movement = movement.clone();
                s.initial_lights = l;
                let fractions = args.scenario.fractions.clone().unwrap_or_else(|| {
                    crate::args::default_fractions(movement)
                });
                let options = CheckOptions {
                    state_limit: MATRIX_STATE_LIMIT,
                    ..CheckOptions::new(fractions, args.depth)
                };
                let cell = Exploration::run(&s, &options)
                    .and_then(|e| e.verdict())
                    .map(|v| match v {
                        CheckVerdict::AllRunsRendezvous { .. } => "ok",
                        CheckVerdict::CounterexampleLasso { .. } => "lasso",
                        CheckVerdict::BoundExhaustedUnknown { .. } => "?",
                    })
                    .unwrap_or("error");
                cells.push(cell);
            }
            writeln!(
                out,
                "{:<18} {:<22} {:>6} {:>6} {:>6} {:>6}",
                class.to_string(),
                movement.to_string(),
                cells[0],
                cells[1],
                cells[2],
                cells[3]
            )
            .map_err(io)?;
        }
    }
    writeln!(out, "ok = every fair run rendezvouses; lasso = counterexample; ? = undecided at this depth")
        .map_err(io)?;
    Ok(EXIT_OK)
}

pub fn replay(args: &ReplayArgs, out: &mut dyn Write) -> CmdResult {
    let text = std::fs::read_to_string(&args.file).map_err(|e| format!("{}: {e}", args.file.display()))?;
    let file = read_trace(&text).map_err(|e| e.to_string())?;
    let trace = &file.trace;
    writeln!(out, "scenario: {}", describe(&trace.scenario)).map_err(io)?;
    for step in &trace.steps {
        let c = &step.config;
        let (l0, l1) = c.lights();
        writeln!(
            out,
            "{:>4}  {:<28} r={} s={} lights=({l0},{l1}) d²={}",
            c.event_index,
            step.event.to_string(),
            c.robots[0].position,
            c.robots[1].position,
            c.distance_squared()
        )
        .map_err(io)?;
    }
    writeln!(out, "{}", verdict_line(trace)).map_err(io)?;
    if let (Some(info), true) = (&file.loop_info, args.loops > 0) {
        let events = trace.events();
        let (prefix, cycle) = events.split_at(info.start);
        let cycle = &cycle[..info.length];
        let mut script = prefix.to_vec();
        for _ in 0..args.loops + 1 {
            script.extend(cycle.iter().cloned());
        }
        let scenario = trace
            .scenario
            .clone()
            .with_max_events(script.len().max(1))
            .with_strategy(AdversaryStrategy::Scripted { events: script });
        let mut engine = Engine::new(scenario).map_err(|e| e.to_string())?;
        engine.run_for(info.start).map_err(|e| e.to_string())?;
        writeln!(out, "loop start: d²={}", engine.config().distance_squared()).map_err(io)?;
        for pass in 1..=args.loops + 1 {
            engine.run_for(info.length).map_err(|e| e.to_string())?;
            writeln!(out, "after pass {pass}: d²={}", engine.config().distance_squared()).map_err(io)?;
        }
    }
    Ok(EXIT_OK)
}
