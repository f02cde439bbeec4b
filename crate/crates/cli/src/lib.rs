//! The `lumi` command-line tool: scenario simulation, bounded checking,
//! trace replay and the interactive session server.

pub mod args;
pub mod commands;
pub mod server;

use std::io::Write;

use args::{Cli, Command};

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: Cli, out: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a, out),
        Command::Check(a) => commands::check(&a, out),
        Command::Replay(a) => commands::replay(&a, out),
        Command::Serve(a) => {
            let runtime = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(e) => {
                    eprintln!("error: {e}");
                    return commands::EXIT_ERROR;
                }
            };
            runtime
                .block_on(server::serve(a.port))
                .map(|()| commands::EXIT_OK)
                .map_err(|e| e.to_string())
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        commands::EXIT_ERROR
    })
}
